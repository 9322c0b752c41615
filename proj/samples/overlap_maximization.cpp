// Maximizes Tr(rho(T) rho_target) from the completely mixed state with the
// heavy-ball gradient projection method and prints the iteration history.

#include <cstdio>

#include "tqoc/tqoc.hpp"

int main()
{
    using namespace tqoc;
    const SystemParams params;
    const SystemMatrices m = build_system_matrices(params);

    ObjectiveSpec spec;
    spec.kind = ObjectiveKind::MaximizeOverlap;
    spec.x_target = diagonal_state({1.0, 0.0, 0.0, 0.0});
    spec.J_bar = 1.0;

    const RealState x0 = diagonal_state({0.25, 0.25, 0.25, 0.25});
    const ControlGrid c0 = constant_controls(40.0, 200, 0.0, 5.0, 5.0);

    GpmConfig cfg;
    cfg.method = GpmMethod::Gpm2;
    cfg.alpha_rule = StepRule::fixed(1e4);
    cfg.beta = 0.9;
    cfg.max_iters = 60;

    const GpmReport r = run_gpm(m, spec, x0, c0, ConstraintSet::unbounded(), cfg);
    for (const auto& it : r.iterates)
        if (it.k % 5 == 0) std::printf("k=%3zu  I=%.6e  F=%.6f  solves=%d\n", it.k, it.I, it.J, it.cauchy_count);
    std::printf("stop: %s after %d Cauchy solves, final F=%.6f\n", to_string(r.stop_reason), r.cauchy_count,
                r.final_overlap());
}
