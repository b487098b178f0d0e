#!/usr/bin/env python3
"""Plot convergence traces produced by the CLI (development convenience).

Usage: python scripts/plot_traces.py out/trace_*.csv [-o figure.png]
Plots plan error against the reference when the column is populated,
otherwise the worse of the two marginal residuals.
"""

import argparse
import os

import matplotlib.pyplot as plt
import numpy as np

from sinkrelax import fileio


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("traces", nargs="+", help="trace CSV files")
    parser.add_argument("-o", "--output", default="traces.png")
    args = parser.parse_args()

    fig, ax = plt.subplots(figsize=(7, 4.5))
    for path in args.traces:
        trace = fileio.load_trace(path)
        iters = [rec.iteration for rec in trace]
        plan_errors = trace.plan_errors()
        if np.isfinite(plan_errors).all():
            values = plan_errors
            ylabel = "plan error vs reference (l1)"
        else:
            values = np.maximum(trace.residuals_a(), trace.residuals_b())
            ylabel = "marginal residual (l1)"
        label = os.path.basename(path).removeprefix("trace_").removesuffix(".csv")
        ax.semilogy(iters, values, label=label)
    ax.set_xlabel("sweep")
    ax.set_ylabel(ylabel)
    ax.legend()
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(args.output, dpi=150)
    print(f"wrote {args.output}")


if __name__ == "__main__":
    main()
