"""STD vs LSR vs Max-Entropy vs FER on Iris, paired over seeds."""

from _common import parser, table

from ferlab.harness.config import ExperimentConfig

args = parser(__doc__).parse_args()
base = ExperimentConfig(dataset="iris", epochs=args.epochs, seeds=tuple(args.seeds))
table([
    base.with_(name="std", method="std"),
    base.with_(name="lsr", method="lsr"),
    base.with_(name="maxent", method="maxent"),
    base.with_(name="fer", method="fer"),
])
