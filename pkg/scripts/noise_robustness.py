"""Label-noise sweep on Gaussian blobs: last-epoch accuracy and the peak-minus-last gap."""

import numpy as np
from _common import parser

from ferlab.harness.config import ExperimentConfig
from ferlab.harness.training import run_experiment

p = parser(__doc__)
p.add_argument("--rates", type=float, nargs="+", default=[0.0, 0.2, 0.4, 0.6])
p.add_argument("--separation", type=float, default=2.0)
args = p.parse_args()

base = ExperimentConfig(dataset="blobs", blobs_separation=args.separation, epochs=args.epochs, seeds=tuple(args.seeds))
print(f"{'rate':>5} {'method':<10} {'last':>7} {'peak':>7} {'gap':>7}")
for rate in args.rates:
    for name, cfg in (
        ("std", base.with_(method="std", noise_rate=rate)),
        ("fer-noisy", base.with_(method="fer", noisy_mode=True, noise_rate=rate)),
    ):
        res = run_experiment(cfg, write=False)
        last, peak = res.per_seed("final_accuracy"), res.per_seed("peak_accuracy")
        print(f"{rate:>5.2f} {name:<10} {100 * last.mean():>7.2f} {100 * peak.mean():>7.2f} {100 * np.mean(peak - last):>7.2f}")
