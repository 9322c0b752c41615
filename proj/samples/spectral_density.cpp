// Planck density at beta = 1 and its filtering by two Gaussians at 2 and 6.

#include <cstdio>
#include <iostream>

#include "tqoc/spectral.hpp"

int main()
{
    using namespace tqoc;
    const SpectralDensity d{1.0, {{2.0, 0.25}, {6.0, 0.25}}};
    const auto rows = emit_curve(d, 12.0, 121);
    write_spectral_csv(std::cout, rows);
    std::fprintf(stderr, "integral planck=%.6f filtered=%.6f\n", trapezoid(rows, &SpectralRow::planck),
                 trapezoid(rows, &SpectralRow::filtered));
}
