"""FER with the correctness gate and/or the behavior averaging switched off."""

from _common import parser, table

from ferlab.harness.config import ExperimentConfig

p = parser(__doc__)
p.add_argument("--dataset", default="iris", choices=["iris", "blobs"])
args = p.parse_args()
base = ExperimentConfig(dataset=args.dataset, method="fer", epochs=args.epochs, seeds=tuple(args.seeds))
table([
    base.with_(name="std", method="std"),
    base.with_(name="fer"),
    base.with_(name="fer-no-gate", no_gate=True),
    base.with_(name="fer-no-average", no_average=True),
    base.with_(name="both-off", no_gate=True, no_average=True),
])
