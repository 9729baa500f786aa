"""Corner-flip fixed point for all four models plus a mismatched-bulk control.

    python3 scripts/stationarity_battery.py --samples 100000
"""

from _common import base_parser, models, save

from bgpolymer.experiments import burke_test
from bgpolymer.models import ModelSpec


def main():
    p = base_parser(__doc__)
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--steps", type=int, default=32)
    a = p.parse_args()
    runs = [(kind, spec, None) for kind, spec in models(a.models)]
    runs.append(("control", ModelSpec("ig", 2.0, 1.0, 1.0), ModelSpec("g", 2.0, 1.0, 1.0)))
    for kind, spec, bulk in runs:
        res = burke_test(spec, a.samples, a.seed, bulk_spec=bulk, steps=a.steps)
        ps = "  ".join(f"{k}={t['p_value']:.3g}" for k, t in res.tests.items())
        print(f"{kind:>7}: {ps}")
        save(res, a.out, f"burke_{kind}_S{a.samples}_s{a.seed}")


if __name__ == "__main__":
    main()
