"""Both signed variance formulas against the Monte Carlo variance on square lattices.

    python3 scripts/variance_identity_sweep.py --sizes 8,16,24 --replicas 4000
"""

from _common import base_parser, models, save

from bgpolymer.experiments import Direction, ExperimentConfig, variance_identity


def main():
    p = base_parser(__doc__)
    p.add_argument("--sizes", default="8,16,24")
    p.add_argument("--replicas", type=int, default=4000)
    a = p.parse_args()
    for kind, spec in models(a.models):
        for L in (int(x) for x in a.sizes.split(",")):
            cfg = ExperimentConfig(spec, Direction("explicit", L, L), N_grid=(L,), replicas=a.replicas,
                                   seed=a.seed, threads=a.threads)
            res = variance_identity(cfg)
            s = res.record(L)["stats"]
            print(f"{kind:>2} {L}x{L}: Var {s['var_logz'].value:.4f} +- {s['var_logz'].stderr:.4f} | "
                  + "  ".join(f"{k} {s[k].value:.4f} (z {res.tests[f'{k}_vs_var_N{L}']['statistic']:+.2f})"
                              for k in ("rhs_form1", "rhs_form2", "rhs_average")))
            save(res, a.out, f"variance_identity_{kind}_L{L}_R{a.replicas}_s{a.seed}")


if __name__ == "__main__":
    main()
