"""Command line entry points: plot-figure (alias plot-panels) and plot-dispersion."""

from __future__ import annotations

import argparse
import sys

from .dispersion import plot_dispersion
from .figures import load_figure_spec, plot_panels
from .reader import MalformedDataError


def main_figure(argv=None) -> int:
    p = argparse.ArgumentParser(
        prog="plot-figure",
        description="Render final-profile / kymograph panel figures from run directories",
    )
    p.add_argument("--spec", required=True, help="JSON figure spec: runs, titles, out, cmap")
    args = p.parse_args(argv)
    try:
        spec = load_figure_spec(args.spec)
        plot_panels(spec)
    except MalformedDataError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    print(f"wrote {spec.out}")
    return 0


def main_dispersion(argv=None) -> int:
    p = argparse.ArgumentParser(
        prog="plot-dispersion",
        description="Plot the dispersion relation (uniform kernel) with mode markers",
    )
    p.add_argument("--L", type=float, default=5.0)
    p.add_argument("--D", type=float, default=1.0)
    p.add_argument("--R", type=float, default=1.0)
    p.add_argument("--ubar", type=float, default=1.0)
    p.add_argument("--alphas", type=str, default="1.5,3.25,7.5",
                   help="comma-separated adhesion strengths")
    p.add_argument("--out", type=str, default="dispersion.png")
    args = p.parse_args(argv)
    alphas = [float(v) for v in args.alphas.split(",") if v.strip()]
    if not alphas:
        print("error: --alphas is empty", file=sys.stderr)
        return 1
    plot_dispersion(alphas, L=args.L, D=args.D, R=args.R, u_bar=args.ubar, out=args.out)
    print(f"wrote {args.out}")
    return 0
