"""Command-line front end.

Every option can also come from a ``--config`` file of ``key=value`` lines
whose keys are the long flag names (``b-grid`` or ``b_grid``); flags given on
the command line win. CSV outputs start with the same ``# key=value`` lines,
so an output file can be fed back as a config.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import tempfile
from dataclasses import asdict, dataclass
from pathlib import Path

from . import experiments as ex
from .lattice import dump_env, generate
from .models import ModelError, ModelSpec, characteristic_direction, expected_log_z, lln_constant, resolve
from .specfun import psi_f

log = logging.getLogger("bgpolymer")

SUBCOMMANDS = ("exact", "simulate", "exponents", "burke", "clt", "tails", "lln", "dump-env")
EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2


class UsageError(ValueError):
    """Malformed command line or config file."""


def _int_list(s) -> tuple[int, ...]:
    if isinstance(s, (tuple, list)):
        return tuple(int(v) for v in s)
    return tuple(int(v) for v in str(s).replace(" ", "").split(",") if v)


def _float_list(s) -> tuple[float, ...]:
    if isinstance(s, (tuple, list)):
        return tuple(float(v) for v in s)
    return tuple(float(v) for v in str(s).replace(" ", "").split(",") if v)


def _bool(s) -> bool:
    if isinstance(s, bool):
        return s
    v = str(s).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"not a boolean: {s!r}")


def _opt_int(s):
    return None if s in (None, "", "none", "None") else int(s)


def _opt_float(s):
    return None if s in (None, "", "none", "None") else float(s)


@dataclass
class CliConfig:
    subcommand: str
    model: str = "ig"
    mu: float = 2.0
    theta: float = 1.0
    beta: float = 1.0
    N: tuple[int, ...] = (64,)
    m: int | None = None
    n: int | None = None
    replicas: int = 100
    seed: int = 0
    threads: int | None = None
    lam: float = 0.0
    gamma: float = 1.0
    alpha: float | None = None
    c1: float | None = None
    b_grid: tuple[float, ...] = (2.0, 3.0, 4.0)
    tau: tuple[float, ...] = (0.0, 0.5)
    paths: int = 1
    boot: int = 1000
    samples: int = 100_000
    steps: int = 32
    side: int = 32
    negative_control: bool = False
    variance_identity: bool = False
    coupled: bool = False
    out: str | None = None
    format: str = "json"
    verbose: int = 0

    # options that never change results; left out of the provenance block
    _RUN_ONLY = ("threads", "out", "verbose")

    def spec(self) -> ModelSpec:
        return ModelSpec(self.model, self.mu, self.theta, self.beta)

    def provenance(self) -> dict:
        d = asdict(self)
        for k in self._RUN_ONLY:
            d.pop(k)
        return {k: list(v) if isinstance(v, tuple) else v for k, v in d.items()}

    @classmethod
    def from_provenance(cls, d: dict) -> "CliConfig":
        return cls(**_coerce(d))

    def same_run(self, other: "CliConfig") -> bool:
        return self.provenance() == other.provenance()


_TYPES = {
    "model": str, "mu": float, "theta": float, "beta": float, "N": _int_list,
    "m": _opt_int, "n": _opt_int, "replicas": int, "seed": int, "threads": _opt_int,
    "lam": float, "gamma": float, "alpha": _opt_float, "c1": _opt_float,
    "b_grid": _float_list, "tau": _float_list, "paths": int, "boot": int,
    "samples": int, "steps": int, "side": int, "negative_control": _bool,
    "variance_identity": _bool, "coupled": _bool, "out": str, "format": str,
    "verbose": int, "subcommand": str,
}
_ALIASES = {"lambda": "lam", "n_grid": "N", "b-grid": "b_grid"}


def _key(k: str) -> str:
    k = k.strip()
    if k in ("N", "n", "m"):
        return k
    k = k.lower().replace("-", "_")
    return _ALIASES.get(k, k)


def _coerce(d: dict) -> dict:
    out = {}
    for k, v in d.items():
        k = _key(k)
        if k not in _TYPES:
            raise UsageError(f"unknown option {k!r}")
        try:
            out[k] = _TYPES[k](v) if v is not None else None
        except (TypeError, ValueError) as e:
            raise UsageError(f"bad value for {k}: {v!r} ({e})") from None
    return out


def read_config(path) -> dict:
    """Parse a ``key=value`` file.

    ``# key=value`` lines count too, so the header of a CSV result works as a
    config; in a file that opens with such a header the first data row ends it.
    """
    raw = {}
    header = None
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        if header is None:
            header = line.startswith("#")
        if line.startswith("#"):
            line = line.lstrip("#").strip()
            if "=" not in line:
                continue
        elif "=" not in line:
            if header:
                break
            raise UsageError(f"{path}:{lineno}: expected key=value")
        k, v = line.split("=", 1)
        raw[k.strip()] = v.strip()
    return _coerce(raw)


def _config_lines(cfg: CliConfig) -> str:
    out = []
    for k, v in cfg.provenance().items():
        if isinstance(v, list):
            v = ",".join(repr(x) if isinstance(x, float) else str(x) for x in v)
        elif v is None:
            v = "none"
        elif isinstance(v, float):
            v = repr(v)
        out.append(f"# {k}={v}\n")
    return "".join(out)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _build_parser() -> _Parser:
    common = _Parser(add_help=False)
    g = common.add_argument_group("model")
    g.add_argument("--model", choices=["ig", "g", "b", "ib"])
    g.add_argument("--mu", type=float)
    g.add_argument("--theta", type=float)
    g.add_argument("--beta", type=float)
    g = common.add_argument_group("run")
    g.add_argument("--N", type=_int_list, help="N or comma-separated N grid")
    g.add_argument("--m", type=int, help="explicit horizontal extent (overrides the direction)")
    g.add_argument("--n", type=int, help="explicit vertical extent")
    g.add_argument("--replicas", type=int)
    g.add_argument("--seed", type=int)
    g.add_argument("--threads", type=int, help=f"worker threads (default ${ex.THREADS_ENV} or 1)")
    g.add_argument("--lambda", dest="lam", type=float, help="boundary perturbation")
    g.add_argument("--gamma", type=float, help="allowed distance from the characteristic point in units of N^(2/3)")
    g.add_argument("--alpha", type=float, help="clt: overshoot exponent, > 2/3")
    g.add_argument("--c1", type=float, help="clt: overshoot coefficient")
    g.add_argument("--b-grid", dest="b_grid", type=_float_list, help="tails/exponents: thresholds in units of N^(2/3)")
    g.add_argument("--tau", type=_float_list, help="exponents: fractions of n where the path is probed")
    g.add_argument("--paths", type=int, help="sampled paths per environment")
    g.add_argument("--boot", type=int, help="bootstrap rounds")
    g.add_argument("--samples", type=int, help="burke: sample size (>= 10^4)")
    g.add_argument("--steps", type=int, help="burke: iterated corner flips")
    g.add_argument("--side", type=int, help="burke: lattice side for the ratio-field test")
    g.add_argument("--negative-control", dest="negative_control", action="store_const", const=True,
                   help="burke: draw the bulk from a different model (should fail)")
    g.add_argument("--variance-identity", dest="variance_identity", action="store_const", const=True,
                   help="simulate: check both signed variance formulas (needs >= 100 replicas)")
    g.add_argument("--coupled", action="store_const", const=True, help="dump-env: boundary weights by quantile coupling")
    g = common.add_argument_group("output")
    g.add_argument("--out", help="output file, or an existing directory for an auto-named file")
    g.add_argument("--format", choices=["csv", "json", "npz"])
    g.add_argument("--config", help="key=value file; command-line flags win")
    g.add_argument("-v", "--verbose", action="count")

    p = _Parser(prog="bgpolymer", description="Stationary beta-gamma directed polymers: exact formulas and Monte Carlo checks.")
    sub = p.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)
    helps = {
        "exact": "closed-form constants, no simulation",
        "simulate": "mean/variance of log Z (or the variance identity)",
        "exponents": "variance and exit-point exponents over an N grid",
        "burke": "stationarity KS tests",
        "clt": "Gaussian fluctuations off the characteristic direction",
        "tails": "exit-point tail probabilities",
        "lln": "law of large numbers along nested lattices",
        "dump-env": "write one sampled environment",
    }
    for name in SUBCOMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return p


def parse_args(argv) -> CliConfig:
    ns = vars(_build_parser().parse_args(argv))
    sub = ns.pop("subcommand")
    merged = {}
    if ns.get("config"):
        merged.update(read_config(ns["config"]))
        merged.pop("subcommand", None)
    ns.pop("config", None)
    suffix = Path(ns["out"]).suffix.lstrip(".").lower() if ns.get("out") else ""
    if ns.get("format") is None and suffix in ("csv", "json", "npz"):
        ns["format"] = suffix
    merged.update({k: v for k, v in ns.items() if v is not None})
    cfg = CliConfig(subcommand=sub, **merged)
    if cfg.format not in ("csv", "json", "npz"):
        raise UsageError(f"unknown format {cfg.format!r}")
    if cfg.format == "npz" and sub != "dump-env":
        raise UsageError("npz output is only available for dump-env")
    if (cfg.m is None) != (cfg.n is None):
        raise UsageError("--m and --n must be given together")
    cfg.spec()  # model constraints before any work
    return cfg


# ---------------------------------------------------------------------------
# output


def _out_path(cfg: CliConfig) -> Path | None:
    if cfg.out is None:
        return None
    p = Path(cfg.out)
    if p.is_dir():
        grid = "-".join(str(N) for N in cfg.N)
        name = f"{cfg.subcommand}_{cfg.model}_N{grid}_R{cfg.replicas}_s{cfg.seed}.{cfg.format}"
        if cfg.subcommand == "burke":
            name = f"burke_{cfg.model}_S{cfg.samples}_s{cfg.seed}.{cfg.format}"
        p = p / name
    parent = p.parent if str(p.parent) else Path(".")
    if not parent.is_dir() or not os.access(parent, os.W_OK):
        raise UsageError(f"output path {p} is not writable")
    return p


def _atomic_write(path: Path, text: str) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def render(result: ex.ExperimentResult, cfg: CliConfig) -> str:
    if cfg.format == "csv":
        return _config_lines(cfg) + result.to_csv()
    d = result.to_dict()
    d["cli"] = cfg.provenance()
    return json.dumps(d, indent=2, allow_nan=False) + "\n"


# ---------------------------------------------------------------------------
# subcommands


def _direction(cfg: CliConfig) -> ex.Direction:
    if cfg.m is not None:
        return ex.Direction("explicit", cfg.m, cfg.n)
    return ex.Direction()


def _exp_config(cfg: CliConfig, direction: ex.Direction | None = None, N=None) -> ex.ExperimentConfig:
    return ex.ExperimentConfig(
        spec=cfg.spec(),
        direction=direction or _direction(cfg),
        N_grid=N or cfg.N,
        replicas=cfg.replicas,
        seed=cfg.seed,
        gamma=cfg.gamma,
        lam=cfg.lam,
        threads=cfg.threads,
        paths_per_env=cfg.paths,
        taus=cfg.tau,
        b_grid=cfg.b_grid,
        n_boot=cfg.boot,
    )


def exact_report(cfg: CliConfig) -> ex.ExperimentResult:
    spec = cfg.spec()
    p = resolve(spec, cfg.lam)
    res = ex.ExperimentResult(kind="exact", config=cfg.provenance())
    for N in cfg.N:
        m, n = (cfg.m, cfg.n) if cfg.m is not None else characteristic_direction(spec, N, cfg.lam)
        st = {
            "mean_logz": ex.Stat(expected_log_z(spec, m, n, cfg.lam), 0.0, 0),
            "var_log_r1": ex.Stat(p.psi1(1), 0.0, 0),
            "var_log_r2": ex.Stat(p.psi2(1), 0.0, 0),
            "lln_constant": ex.Stat(lln_constant(spec), 0.0, 0),
        }
        if m == 0 or n == 0:
            st["var_logz"] = ex.Stat(m * p.psi1(1) + n * p.psi2(1), 0.0, 0)
        for k in range(5):
            st[f"psi{k}_f1"] = ex.Stat(psi_f(p.f1, k, p.a1), 0.0, 0)
            st[f"psi{k}_f2"] = ex.Stat(psi_f(p.f2, k, p.a2), 0.0, 0)
        res.records.append({"N": N, "m": m, "n": n, "stats": st})
    res.notes.append(f"f1={p.f1.kind.name}(b={p.f1.b:g}) a1={p.a1:g}; f2={p.f2.kind.name}(b={p.f2.b:g}) a2={p.a2:g}; a3={p.a3:g}")
    return res


def _print_exact(res: ex.ExperimentResult, out) -> None:
    print(res.notes[0], file=out)
    for rec in res.records:
        st = rec["stats"]
        print(f"N={rec['N']}  (m,n)=({rec['m']},{rec['n']})", file=out)
        print(f"  E[log Z]       = {st['mean_logz'].value:.12g}", file=out)
        print(f"  Var[log R1]    = {st['var_log_r1'].value:.12g}", file=out)
        print(f"  Var[log R2]    = {st['var_log_r2'].value:.12g}", file=out)
        if "var_logz" in st:
            print(f"  Var[log Z]     = {st['var_logz'].value:.12g}", file=out)
        print(f"  LLN constant   = {st['lln_constant'].value:.12g}", file=out)
    st = res.records[0]["stats"]
    print("  k   psi_k^f1(a1)        psi_k^f2(a2)", file=out)
    for k in range(5):
        print(f"  {k}   {st[f'psi{k}_f1'].value: .12e}  {st[f'psi{k}_f2'].value: .12e}", file=out)


def mismatched_bulk(spec: ModelSpec) -> ModelSpec:
    """Bulk of a different model for the stationarity negative control:
    gamma bulk under an inverse-gamma boundary, inverse-gamma bulk otherwise."""
    if spec.kind.value == "ig":
        return ModelSpec("g", spec.mu, spec.theta, spec.beta)
    return ModelSpec("ig", spec.mu + spec.theta, spec.theta, spec.beta)


def run_subcommand(cfg: CliConfig) -> ex.ExperimentResult | None:
    sub = cfg.subcommand
    if sub == "exact":
        return exact_report(cfg)
    if sub == "simulate":
        ecfg = _exp_config(cfg)
        return ex.variance_identity(ecfg) if cfg.variance_identity else ex.free_energy_stats(ecfg)
    if sub == "exponents":
        return ex.exponent_fit(_exp_config(cfg))
    if sub == "burke":
        bulk = mismatched_bulk(cfg.spec()) if cfg.negative_control else None
        return ex.burke_test(cfg.spec(), cfg.samples, cfg.seed, bulk_spec=bulk, steps=cfg.steps, side=cfg.side)
    if sub == "clt":
        if cfg.alpha is None or cfg.c1 is None:
            raise UsageError("clt needs --alpha and --c1")
        d = ex.Direction("off_characteristic", alpha=cfg.alpha, c1=cfg.c1)
        return ex.clt_check(_exp_config(cfg, d))
    if sub == "tails":
        return ex.tail_check(_exp_config(cfg), cfg.b_grid)
    if sub == "lln":
        return ex.lln_check(_exp_config(cfg))
    raise AssertionError(sub)


def _dump(cfg: CliConfig, path: Path | None) -> None:
    if path is None:
        raise UsageError("dump-env needs --out")
    if cfg.format == "json":
        raise UsageError("dump-env writes csv or npz")
    N = cfg.N[0]
    m, n = (cfg.m, cfg.n) if cfg.m is not None else characteristic_direction(cfg.spec(), N, cfg.lam)
    env = generate(cfg.spec(), m, n, ex.replica_seed(cfg.seed, N, 0), cfg.lam, cfg.coupled)
    dump_env(env, path)


def run(argv=None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    try:
        cfg = parse_args(list(sys.argv[1:] if argv is None else argv))
        logging.basicConfig(level=logging.WARNING - 10 * min(cfg.verbose, 2), format="%(levelname)s %(name)s: %(message)s")
        path = _out_path(cfg)
        if cfg.subcommand == "dump-env":
            _dump(cfg, path)
            print(f"wrote {path}", file=stdout)
            return EXIT_OK
        res = run_subcommand(cfg)
    except (UsageError, ModelError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as e:  # noqa: BLE001
        log.exception("run failed")
        print(f"runtime failure: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    try:
        if cfg.subcommand == "exact":
            _print_exact(res, stdout)
        else:
            for name, t in res.tests.items():
                flag = {True: "pass", False: "FAIL", None: "info"}[t.get("passed")]
                print(f"{name}: {flag} (statistic={t.get('statistic')!s}, p={t.get('p_value', 'n/a')!s})", file=stdout)
            for note in res.notes:
                print(f"note: {note}", file=stdout)
        if path is not None:
            _atomic_write(path, render(res, cfg))
            print(f"wrote {path}", file=stdout)
    except Exception as e:  # noqa: BLE001
        print(f"runtime failure: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
