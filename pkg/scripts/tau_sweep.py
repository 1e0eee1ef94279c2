"""FER accuracy as a function of the behavior temperature."""

from _common import parser, table

from ferlab.harness.config import ExperimentConfig

p = parser(__doc__)
p.add_argument("--taus", type=float, nargs="+", default=[1.0, 2.0, 5.0, 10.0, 20.0])
args = p.parse_args()
base = ExperimentConfig(dataset="iris", method="fer", epochs=args.epochs, seeds=tuple(args.seeds))
table([base.with_(name="std", method="std")] + [base.with_(name=f"tau={t:g}", tau=t) for t in args.taus])
