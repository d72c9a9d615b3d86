#!/usr/bin/env python3
"""Compare measured single-mode growth rates against the dispersion relation.

Seeds a periodic run with u0 = 1 + eps cos(2 pi n x / L), fits the modal
amplitude over the linear window, and prints measured vs predicted rates
for a range of adhesion strengths.
"""

import argparse

import numpy as np

from adhesion1d import (
    AdhesionProblem,
    FluxBC,
    IntegratorConfig,
    State,
    bifurcation_alpha,
    build_grid,
    growth_rate,
    integrate,
    make_kernel,
    make_sampling_domain,
    measure_growth_rate,
    precompute_weights,
)


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--alphas", type=float, nargs="*", default=[0.0, 1.5, 2.5, 3.25])
    p.add_argument("--mode", type=int, default=1)
    p.add_argument("--eps", type=float, default=1e-3)
    p.add_argument("--L", type=float, default=5.0)
    p.add_argument("--tf", type=float, default=6.0)
    args = p.parse_args()

    grid = build_grid(args.L, 128, 1.0)
    kernel = make_kernel("uniform", 1.0)
    domain = make_sampling_domain("periodic", args.L, 1.0)
    weights = precompute_weights(grid, domain, kernel)
    k = 2 * np.pi * args.mode / args.L
    print(f"mode n={args.mode}, k={k:.6f}, "
          f"alpha_n={bifurcation_alpha(args.mode, args.L, 1.0, 1.0, kernel):.6f}")
    print(f"{'alpha':>8} {'predicted':>12} {'measured':>12} {'rel.err':>9}")
    for alpha in args.alphas:
        lam = growth_rate(k, alpha, 1.0, 1.0, kernel)
        problem = AdhesionProblem(grid, weights, 1.0, alpha, FluxBC.PERIODIC)
        u0 = 1.0 + args.eps * np.cos(k * grid.centers)
        state0 = State(0.0, u0, grid.h * np.sum(u0))
        cfg = IntegratorConfig(t_final=args.tf, output_times=np.linspace(0, args.tf, 200))
        trajectory, _ = integrate(state0, problem.rhs, cfg, jac_fn=problem.jacobian)
        fit = measure_growth_rate(trajectory, args.mode, args.eps)
        if fit.rate is None:
            print(f"{alpha:8.3f} {lam:12.6f} {'(no fit)':>12}")
            continue
        rel = abs(fit.rate - lam) / max(abs(lam), 1e-12)
        tag = " (stable)" if fit.stable else ""
        print(f"{alpha:8.3f} {lam:12.6f} {fit.rate:12.6f} {rel:9.2%}{tag}")


if __name__ == "__main__":
    main()
