// For rho0 = diag(1,0,0,0), checks which diagonal targets make zero controls
// satisfy the maximum principle, and confirms it from the numeric switching
// functions.

#include <cstdio>

#include "tqoc/tqoc.hpp"

int main()
{
    using namespace tqoc;
    const SystemParams params;
    const std::array<std::array<double, 4>, 4> targets{{{0.2, 0.2, 0.2, 0.4},
                                                        {0.7, 0.1, 0.1, 0.1},
                                                        {0.1, 0.3, 0.3, 0.3},
                                                        {0.0, 0.0, 1.0, 0.0}}};
    for (int s : {1, -1}) {
        for (const auto& b : targets) {
            PmpCaseConfig cfg{InitialStateKind::PureGround, s, b};
            const PmpVerification v = verify_pmp_numerically(cfg, params, 5.0, 100);
            std::printf("s=%+d b=(%.1f,%.1f,%.1f,%.1f)  condition=%d stationary=%d  max K^n1=%+.3e max K^n2=%+.3e\n", s,
                        b[0], b[1], b[2], b[3], v.condition, v.stationary_condition, v.max_K_n1, v.max_K_n2);
        }
    }
}
