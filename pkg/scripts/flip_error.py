"""Per-epoch flipping error of STD and FER, averaged over seeds, written as CSV."""

import sys

import numpy as np
from _common import parser

from ferlab.harness.config import ExperimentConfig
from ferlab.harness.training import run_experiment

p = parser(__doc__)
p.add_argument("--dataset", default="blobs", choices=["iris", "blobs"])
args = p.parse_args()

base = ExperimentConfig(dataset=args.dataset, epochs=args.epochs, seeds=tuple(args.seeds))
curves = {}
for method in ("std", "fer"):
    res = run_experiment(base.with_(method=method), write=False)
    curves[method] = np.array([[r.fe for r in run.records] for run in res.runs]).mean(axis=0)
out = sys.stdout
out.write("epoch,fe_std,fe_fer\n")
for k in range(args.epochs):
    out.write(f"{k},{curves['std'][k]:.6f},{curves['fer'][k]:.6f}\n")
