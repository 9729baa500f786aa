"""Variance and exit-point exponents on the characteristic direction.

    python3 scripts/exponent_sweep.py --N 64,128,256,512 --replicas 2000 --paths 3
"""

from _common import base_parser, models, save

from bgpolymer.experiments import ExperimentConfig, exponent_fit


def main():
    p = base_parser(__doc__)
    p.add_argument("--N", default="64,128,256,512")
    p.add_argument("--replicas", type=int, default=2000)
    p.add_argument("--paths", type=int, default=3)
    p.add_argument("--boot", type=int, default=1000)
    a = p.parse_args()
    grid = tuple(int(x) for x in a.N.split(","))
    for kind, spec in models(a.models):
        cfg = ExperimentConfig(spec, N_grid=grid, replicas=a.replicas, seed=a.seed, threads=a.threads,
                               paths_per_env=a.paths, taus=(0.0, 0.5), n_boot=a.boot)
        res = exponent_fit(cfg)
        for name, f in res.fits.items():
            print(f"{kind:>2} {name:<16} slope {f['slope']:.3f}  95% CI [{f.get('ci_low', float('nan')):.3f}, {f.get('ci_high', float('nan')):.3f}]")
        save(res, a.out, f"exponents_{kind}_N{a.N.replace(',', '-')}_R{a.replicas}_s{a.seed}")


if __name__ == "__main__":
    main()
