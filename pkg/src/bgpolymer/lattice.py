"""Environments, partition-function sweeps, exit laws and path sampling.

Lattice conventions follow the rest of the package: the horizontal boundary
weight into (i, 0) is ``log_r1[i-1]``, the vertical boundary weight into
(0, j) is ``log_r2[j-1]``, and the bulk pair into z = (i, j) is
``(log_y1[i-1, j-1], log_y2[i-1, j-1])``.

Random streams. An environment is a deterministic function of
(spec, m, n, seed, lam, coupled). The 64-bit ``seed`` keys three independent
Philox substreams through ``SeedSequence(seed, spawn_key=(k,))``:

* k = 0: horizontal boundary, i = 1..m;
* k = 1: vertical boundary, j = 1..n;
* k = 2: bulk, drawn as whole m x n arrays in row-major order (for the beta
  and inverse-beta bulk: all first gamma variates, then all second ones).

In coupled mode the boundary streams yield uniforms eta which are pushed
through the quantile function, so environments at different ``lam`` share
both the bulk and the boundary uniforms.
"""

from __future__ import annotations

import csv
import io
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _kernels as K
from .meldist import quantile, sample
from .models import ModelKind, ModelSpec, resolve, sample_bulk

__all__ = [
    "Environment",
    "LogPartitionGrid",
    "PathSample",
    "replica_seed",
    "substream",
    "draw_weights",
    "generate",
    "forward_dp",
    "reverse_dp",
    "exit_distribution",
    "sample_path",
    "ratio_fields",
    "dump_env",
    "load_env",
]

_NO_GRID = np.empty((0, 0))


def replica_seed(master: int, *keys: int) -> int:
    """Independent 64-bit seed for a replica identified by integer keys."""
    ss = np.random.SeedSequence(int(master), spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def substream(seed: int, k: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed), spawn_key=(k,))))


@dataclass
class Environment:
    m: int
    n: int
    log_r1: np.ndarray
    log_r2: np.ndarray
    log_y1: np.ndarray
    log_y2: np.ndarray
    seed: int = 0
    spec: ModelSpec | None = None
    lam: float = 0.0
    coupled: bool = False

    def __post_init__(self):
        self.log_r1 = np.ascontiguousarray(self.log_r1, dtype=float)
        self.log_r2 = np.ascontiguousarray(self.log_r2, dtype=float)
        self.log_y1 = np.ascontiguousarray(self.log_y1, dtype=float).reshape(self.m, self.n)
        self.log_y2 = np.ascontiguousarray(self.log_y2, dtype=float).reshape(self.m, self.n)
        if self.log_r1.shape != (self.m,) or self.log_r2.shape != (self.n,):
            raise ValueError("boundary arrays do not match the lattice extents")


@dataclass
class LogPartitionGrid:
    """forward[i, j] = log Z_{i,j}; reverse[i, j] = log Z_{(i,j),(m,n)}.

    In rolling mode only ``last_row`` (= forward[m, :]) is kept.
    """

    forward: np.ndarray | None = None
    reverse: np.ndarray | None = None
    last_row: np.ndarray | None = None

    @property
    def log_z(self) -> float:
        if self.forward is not None:
            return float(self.forward[-1, -1])
        return float(self.last_row[-1])


@dataclass
class PathSample:
    vertices: np.ndarray  # (m+n+1, 2), from (0, 0) to (m, n)
    t1: int
    t2: int
    v0: np.ndarray  # per row l = 0..n
    v1: np.ndarray
    w0: np.ndarray  # per column k = 0..m
    w1: np.ndarray


def draw_weights(spec: ModelSpec, m: int, n: int, seed: int, lam: float = 0.0, coupled: bool = False):
    """Linear-scale weights (r1, r2, y1, y2) in the documented stream order."""
    if m < 0 or n < 0:
        raise ValueError("lattice extents must be nonnegative")
    params = resolve(spec, lam)
    g1, g2, gb = substream(seed, 0), substream(seed, 1), substream(seed, 2)
    if coupled:
        r1 = np.asarray(quantile(params.r1_law, g1.random(m)), dtype=float).reshape(m)
        r2 = np.asarray(quantile(params.r2_law, g2.random(n)), dtype=float).reshape(n)
    else:
        r1 = sample(params.r1_law, g1, m)
        r2 = sample(params.r2_law, g2, n)
    y1, y2 = sample_bulk(spec, gb, (m, n))
    return r1, r2, np.ascontiguousarray(y1), np.ascontiguousarray(y2)


def generate(spec: ModelSpec, m: int, n: int, seed: int, lam: float = 0.0, coupled: bool = False) -> Environment:
    r1, r2, y1, y2 = draw_weights(spec, m, n, seed, lam, coupled)
    return Environment(
        m, n, np.log(r1), np.log(r2), np.log(y1), np.log(y2),
        seed=int(seed), spec=spec, lam=float(lam), coupled=bool(coupled),
    )


def forward_dp(env: Environment, rolling: bool = False) -> LogPartitionGrid:
    """Log-space forward sweep Z_x = Y1_x Z_{x-e1} + Y2_x Z_{x-e2}."""
    if rolling:
        return LogPartitionGrid(last_row=K.forward_log_rolling(env.log_r1, env.log_r2, env.log_y1, env.log_y2))
    return LogPartitionGrid(forward=K.forward_log(env.log_r1, env.log_r2, env.log_y1, env.log_y2))


def reverse_dp(env: Environment, grids: LogPartitionGrid | None = None) -> LogPartitionGrid:
    """Fill the reverse field; paths starting at (i, j) with i, j >= 1 only see bulk weights."""
    rev = K.reverse_log(env.log_r1, env.log_r2, env.log_y1, env.log_y2)
    if grids is None:
        grids = forward_dp(env)
    return LogPartitionGrid(forward=grids.forward, reverse=rev, last_row=grids.last_row)


def exit_distribution(env: Environment, grids: LogPartitionGrid) -> tuple[np.ndarray, np.ndarray]:
    """Quenched law of the exit points.

    q1[r] = Q(t1 = r) and q2[s] = Q(t2 = s) for r, s >= 1; index 0 of both
    vectors is left at zero so that q1.sum() + q2.sum() == 1 (a path leaves
    through exactly one axis). On degenerate lattices the forced path puts
    its mass at q1[m] (n = 0) or q2[n] (m = 0).
    """
    m, n = env.m, env.n
    F, B = grids.forward, grids.reverse
    if F is None or B is None or F.shape != (m + 1, n + 1) or B.shape != (m + 1, n + 1):
        raise ValueError("inconsistent grids: need forward and reverse fields of shape (m+1, n+1)")
    q1 = np.zeros(m + 1)
    q2 = np.zeros(n + 1)
    if n == 0 and m == 0:
        q1[0] = 1.0
        return q1, q2
    if n == 0:
        q1[m] = 1.0
        return q1, q2
    if m == 0:
        q2[n] = 1.0
        return q1, q2
    lz = F[m, n]
    r = np.arange(1, m + 1)
    q1[1:] = np.exp(F[r, 0] + env.log_y2[r - 1, 0] + B[r, 1] - lz)
    s = np.arange(1, n + 1)
    q2[1:] = np.exp(F[0, s] + env.log_y1[0, s - 1] + B[1, s] - lz)
    return q1, q2


def _profile(xi, xj, m, n) -> PathSample:
    t1, t2, v0, v1, w0, w1 = K.path_profiles(xi, xj, m, n)
    return PathSample(np.stack([xi, xj], axis=1), int(t1), int(t2), v0, v1, w0, w1)


def left_step_probabilities(env: Environment, grids: LogPartitionGrid) -> np.ndarray:
    F = grids.forward
    if F is None:
        raise ValueError("path sampling needs the full forward field")
    if env.m == 0 or env.n == 0:
        return np.empty((env.m, env.n))
    return np.exp(env.log_y1 + F[:-1, 1:] - F[1:, 1:])


def sample_path(env: Environment, grids: LogPartitionGrid, rng: np.random.Generator) -> PathSample:
    """Draw a path from the quenched measure by walking back from (m, n)."""
    p_left = left_step_probabilities(env, grids)
    xi, xj = K.backward_path(p_left, env.m, env.n, rng.random(env.m + env.n))
    return _profile(xi, xj, env.m, env.n)


def ratio_fields(grids: LogPartitionGrid) -> tuple[np.ndarray, np.ndarray]:
    """log R1 (shape (m, n+1), entry [i-1, j]) and log R2 (shape (m+1, n), entry [i, j-1])."""
    F = grids.forward
    if F is None:
        raise ValueError("ratio fields need the full forward field")
    return np.diff(F, axis=0), np.diff(F, axis=1)


# ---------------------------------------------------------------------------
# dump / load

_HEADER_KEYS = ("m", "n", "model", "mu", "theta", "beta", "seed", "lambda", "coupled")


def _header(env: Environment) -> dict:
    spec = env.spec
    return {
        "m": env.m,
        "n": env.n,
        "model": spec.kind.value if spec else "",
        "mu": spec.mu if spec else "",
        "theta": spec.theta if spec else "",
        "beta": spec.beta if spec else "",
        "seed": env.seed,
        "lambda": env.lam,
        "coupled": int(env.coupled),
    }


def _arrays(env: Environment):
    return (
        ("log_r1", env.log_r1),
        ("log_r2", env.log_r2),
        ("log_y1", env.log_y1.ravel()),
        ("log_y2", env.log_y2.ravel()),
    )


def _env_from(header: dict, arrays: dict) -> Environment:
    m, n = int(header["m"]), int(header["n"])
    spec = None
    if header.get("model"):
        spec = ModelSpec(ModelKind.parse(header["model"]), float(header["mu"]), float(header["theta"]), float(header["beta"]))
    return Environment(
        m, n, arrays["log_r1"], arrays["log_r2"], arrays["log_y1"], arrays["log_y2"],
        seed=int(header["seed"]), spec=spec, lam=float(header["lambda"]), coupled=bool(int(header["coupled"])),
    )


def _atomic_write(path: Path, data: bytes) -> None:
    path = Path(path)
    tmp = path.with_name(f".{path.name}.tmp{os.getpid()}")
    try:
        with open(tmp, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    finally:
        if tmp.exists():
            tmp.unlink()


def dump_env(env: Environment, path) -> None:
    """Write an environment as CSV (``.csv``) or a flat numpy archive (``.npz``).

    The CSV starts with ``# key=value`` header lines (m, n, model parameters,
    seed, lambda, coupled), then rows ``array,index,value`` with bulk indices
    in row-major order.
    """
    path = Path(path)
    header = _header(env)
    if path.suffix == ".npz":
        buf = io.BytesIO()
        np.savez(buf, header=np.array([f"{k}={header[k]}" for k in _HEADER_KEYS]), **dict(_arrays(env)))
        _atomic_write(path, buf.getvalue())
        return
    out = io.StringIO()
    out.write("# bgpolymer-environment v1\n")
    for k in _HEADER_KEYS:
        out.write(f"# {k}={header[k]}\n")
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["array", "index", "value"])
    for name, arr in _arrays(env):
        for idx, v in enumerate(arr):
            w.writerow([name, idx, repr(float(v))])
    _atomic_write(path, out.getvalue().encode())


def load_env(path) -> Environment:
    path = Path(path)
    if path.suffix == ".npz":
        with np.load(path) as z:
            header = dict(s.split("=", 1) for s in z["header"].tolist())
            arrays = {k: z[k] for k in ("log_r1", "log_r2", "log_y1", "log_y2")}
        return _env_from(header, arrays)
    header: dict = {}
    cols: dict[str, list[float]] = {k: [] for k in ("log_r1", "log_r2", "log_y1", "log_y2")}
    with open(path, newline="") as fh:
        lines = [ln for ln in fh]
    body = []
    for ln in lines:
        if ln.startswith("#"):
            text = ln[1:].strip()
            if "=" in text:
                k, v = text.split("=", 1)
                header[k.strip()] = v.strip()
        else:
            body.append(ln)
    for row in csv.DictReader(body):
        cols[row["array"]].append(float(row["value"]))
    return _env_from(header, {k: np.array(v, dtype=float) for k, v in cols.items()})


def as_linear(env: Environment):
    """Linear-scale weights of an environment, for the ratio kernels."""
    return np.exp(env.log_r1), np.exp(env.log_r2), np.exp(env.log_y1), np.exp(env.log_y2)


def ratio_log_z(r1, r2, y1, y2) -> float:
    s, _, _ = K.ratio_sweep(r1, r2, y1, y2, _NO_GRID, False)
    return float(s)
