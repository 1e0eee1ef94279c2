"""Small helpers shared by the experiment scripts."""

import argparse

from ferlab.harness.training import compare, format_comparison, run_experiment


def parser(description: str) -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(description=description)
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2, 3, 4])
    return p


def table(cfgs):
    """Run every config once, print the paired table, return the results."""
    results = [run_experiment(c, write=False) for c in cfgs]
    print(format_comparison(compare(cfgs, results)))
    return results
