"""Monte Carlo experiments: trajectories of normalized window statistics.

Every experiment walks the base points of an index set in increasing size,
evaluates a statistic per point and keeps running extremes.  Replication r
uses the field keyed by ``replication_id = r``; replications may run on a
thread pool but results are always collected in replication order, so the
output never depends on the schedule.
"""

from __future__ import annotations

import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from lslab import bounds, delta as delta_mod, geometry
from lslab.errors import BudgetExceededError, ConfigError
from lslab.field import DISTRIBUTIONS, FieldSpec, sample_box, sample_points
from lslab.windows import DEFAULT_CELL_BUDGET, box_max, local_prefix, window_widths

log = logging.getLogger(__name__)

__all__ = [
    "EXPERIMENTS",
    "ExperimentConfig",
    "Trajectory",
    "RunResult",
    "run",
    "run_lsl",
    "run_subsequence_lsl",
    "run_diagonal_lsl",
    "run_max_window",
    "run_negligibility",
    "run_necessity",
    "run_gap_discrepancy",
    "run_gaussian_heuristic",
    "run_delta",
    "write_outputs",
    "format_float",
]

EXPERIMENTS = (
    "lsl_full",
    "lsl_subsequence",
    "lsl_diagonal",
    "max_window",
    "negligibility",
    "necessity",
    "gap_discrepancy",
    "gaussian_heuristic",
    "delta",
)

# the Gaussian comparison stream is keyed apart from the field itself
_GAUSS_SALT = 0x5DEECE66D


@dataclass
class ExperimentConfig:
    kind: str = "lsl_full"
    d: int = 2
    alpha: float = 0.5
    beta: float = 1.0
    beta2: float = 0.0
    sigma: float | None = None  # reference sigma; defaults to the field's
    distribution: str = "normal"
    param: float | None = None
    seed: int = 0
    index_set: str = "a"
    M: int = 1
    budget: int = 10_000
    budgets: list[int] = field(default_factory=list)
    replications: int = 1
    cell_budget: int = DEFAULT_CELL_BUDGET
    abort_on_budget: bool = False
    threads: int = 1
    two_sided: bool = False
    sqrt2: bool = True
    # truncation
    delta: float = 0.1
    epsilon: float = 1.0
    gamma: float = 0.1
    truncation_form: str = "displayed"
    # gap discrepancy
    cells: list[int] = field(default_factory=lambda: [50, 200, 800])
    grid: int = 25
    # delta method
    transform: str = "exp"
    mu: float = 0.0
    coeffs: list[float] = field(default_factory=list)
    mode: str = "lsl"
    output_dir: str = "."

    def validate(self) -> None:
        def bad(msg):
            raise ConfigError(msg)

        if self.kind not in EXPERIMENTS:
            bad(f"unknown experiment kind {self.kind!r}")
        if self.replications < 1:
            bad("replications must be >= 1")
        if self.budget < 4:
            bad("budget must be >= 4")
        if not 0 < self.alpha < 1:
            bad("alpha must lie in (0, 1)")
        if self.beta < 1:
            bad("beta must be >= 1")
        if self.d < 1:
            bad("d must be >= 1")
        if self.distribution not in DISTRIBUTIONS:
            bad(f"unknown distribution {self.distribution!r}")
        if not 0 <= self.seed < 2**64:
            bad("seed must be a 64-bit unsigned integer")
        if self.threads < 1:
            bad("threads must be >= 1")
        if self.cell_budget < 1:
            bad("cell_budget must be positive")
        if any(b < 4 for b in self.budgets):
            bad("every reporting budget must be >= 4")
        if self.index_set not in geometry.KINDS:
            bad(f"unknown index set {self.index_set!r}")
        if self.kind in ("lsl_full", "max_window") and self.index_set not in ("a", "lambda", "full"):
            bad("plain LSL runs use the a, lambda or full index set")
        if self.kind == "lsl_subsequence":
            if self.index_set not in ("lambda_star", "a_star"):
                bad("subsequence runs use lambda_star or a_star")
            if self.beta <= 1:
                bad("subsequence runs need beta > 1")
        if self.kind == "gap_discrepancy" and self.d != 2:
            bad("gap discrepancy is two-dimensional")
        if self.kind == "delta" and self.mode not in ("lsl", "lil"):
            bad("delta mode must be 'lsl' or 'lil'")
        if self.kind == "delta" and self.mode == "lil" and self.d != 1:
            bad("the lil delta mode is one-dimensional")
        if self.truncation_form not in bounds.FORMS:
            bad(f"truncation_form must be one of {bounds.FORMS}")
        try:
            self.field_spec()
            if self.kind == "delta":
                self.transform_spec()
            if self.kind in ("negligibility",):
                self.bound_params()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def field_spec(self) -> FieldSpec:
        return FieldSpec(self.distribution, self.param, self.seed, 0)

    def index_spec(self) -> geometry.SubsequenceSpec:
        kind = {"lsl_diagonal": "diagonal", "gap_discrepancy": "lambda"}.get(self.kind, self.index_set)
        return geometry.SubsequenceSpec(kind, self.alpha, self.beta, self.beta2, self.M, self.d)

    def bound_params(self) -> bounds.BoundParams:
        return bounds.BoundParams(self.ref_sigma, self.delta, self.epsilon, self.gamma, 0.1)

    def transform_spec(self) -> delta_mod.TransformSpec:
        coeffs = tuple(self.coeffs) if self.coeffs else None
        return delta_mod.TransformSpec(self.transform, self.mu, coeffs)

    @property
    def ref_sigma(self) -> float:
        if self.sigma is not None:
            return self.sigma
        return self.field_spec().sigma

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(**data)
        cfg.validate()
        return cfg


@dataclass
class Trajectory:
    """One replication's statistic along the index set, ordered by size."""

    sizes: np.ndarray
    coords: np.ndarray
    stat: np.ndarray
    runmax: np.ndarray = None
    runmin: np.ndarray = None

    def __post_init__(self):
        if self.runmax is None:
            self.runmax = np.maximum.accumulate(self.stat) if len(self.stat) else self.stat.copy()
        if self.runmin is None:
            self.runmin = np.minimum.accumulate(self.stat) if len(self.stat) else self.stat.copy()

    @property
    def terminal_max(self) -> float:
        return float(self.runmax[-1]) if len(self.runmax) else math.nan

    @property
    def terminal_min(self) -> float:
        return float(self.runmin[-1]) if len(self.runmin) else math.nan

    def max_up_to(self, budget: int) -> float:
        c = int(np.searchsorted(self.sizes, budget, side="right"))
        return float(self.runmax[c - 1]) if c else math.nan


@dataclass
class RunResult:
    config: ExperimentConfig
    target: float | None
    trajectories: list[Trajectory]
    summaries: list[dict]
    extra: dict = field(default_factory=dict)

    def terminal_max(self) -> np.ndarray:
        return np.array([t.terminal_max for t in self.trajectories])


# ---------------------------------------------------------------- helpers


def _map_replications(cfg: ExperimentConfig, fn):
    reps = range(cfg.replications)
    if cfg.threads == 1 or cfg.replications == 1:
        return [fn(r) for r in reps]
    with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
        return list(pool.map(fn, reps))


def _normalizer(cfg, sizes):
    s = sizes.astype(float)
    return np.sqrt((2.0 if cfg.sqrt2 else 1.0) * s**cfg.alpha * np.log(s))


def _lsl_target(cfg: ExperimentConfig, divisor: float = 1.0) -> float:
    base = cfg.ref_sigma * math.sqrt((1.0 - cfg.alpha) / divisor)
    return base if cfg.sqrt2 else base * math.sqrt(2.0)


def _points(cfg):
    pts = geometry.generate_array(cfg.index_spec(), cfg.budget)
    return pts, pts.prod(axis=1)


def _summary(r, traj, target, skipped, **extra):
    row = {
        "replication": r,
        "terminal_max": traj.terminal_max,
        "terminal_min": traj.terminal_min,
        "target": target,
        "points_evaluated": int(len(traj.sizes)),
        "points_skipped": int(skipped),
    }
    if extra:
        row.update(extra)
    return row


def _window_walk(cfg, field_r, pts, sizes, evaluate):
    """Apply ``evaluate(values, widths)`` to every window; skip size 1 and oversize."""
    keep, out = [], []
    skipped = 0
    for idx, (p, s) in enumerate(zip(pts.tolist(), sizes.tolist())):
        if s < 2:
            skipped += 1
            continue
        w = window_widths(p, cfg.alpha)
        vol = math.prod(w)
        if vol > cfg.cell_budget:
            if cfg.abort_on_budget:
                raise BudgetExceededError(vol, cfg.cell_budget)
            log.warning("skipping base point %s: window volume %d over budget", p, vol)
            skipped += 1
            continue
        out.append(evaluate(p, sample_box(field_r, p, w)))
        keep.append(idx)
    return np.asarray(keep, dtype=np.int64), out, skipped


def _window_run(cfg: ExperimentConfig, target: float, statistic) -> RunResult:
    cfg.validate()
    field0 = cfg.field_spec()
    pts, sizes = _points(cfg)

    def one(r):
        idx, vals, skipped = _window_walk(cfg, field0.with_replication(r), pts, sizes, statistic)
        s = sizes[idx]
        traj = Trajectory(s, pts[idx], np.asarray(vals, float) / _normalizer(cfg, s))
        return traj, _summary(r, traj, target, skipped)

    res = _map_replications(cfg, one)
    return RunResult(cfg, target, [t for t, _ in res], [s for _, s in res])


def _plain_sum(p, cells):
    return math.fsum(cells.ravel().tolist())


# ---------------------------------------------------------------- experiments


def run_lsl(cfg: ExperimentConfig) -> RunResult:
    """R_n = T_{n, n+n^a} / sqrt(2 |n|^a log|n|) along the index set."""
    return _window_run(cfg, _lsl_target(cfg), _plain_sum)


def run_subsequence_lsl(cfg: ExperimentConfig) -> RunResult:
    return _window_run(cfg, _lsl_target(cfg, cfg.beta), _plain_sum)


def run_diagonal_lsl(cfg: ExperimentConfig) -> RunResult:
    return _window_run(cfg, _lsl_target(cfg, cfg.d * cfg.beta), _plain_sum)


def run_max_window(cfg: ExperimentConfig) -> RunResult:
    """max over 0 <= k <= n^a of T_{n, n+k}, same normalization and target."""

    def stat(p, cells):
        return box_max(cells, cfg.two_sided)

    return _window_run(cfg, _lsl_target(cfg), stat)


def run_negligibility(cfg: ExperimentConfig) -> RunResult:
    """Split each window sum into its primed, double and triple parts.

    Each cell k is classified against its own levels b_k and
    delta sqrt(|k|^a log|k|).  The trajectory statistic is
    |T''| / sqrt(|n|^a log|n|); per-point triple and nonzero-double counts
    go into ``extra``.
    """
    cfg.validate()
    params = cfg.bound_params()
    field0 = cfg.field_spec()
    pts, sizes = _points(cfg)
    a = cfg.alpha
    b_scale = params.sigma * params.delta / params.epsilon

    def cell_levels(p, w):
        size = np.ones(w)
        for ax, (c0, wk) in enumerate(zip(p, w)):
            shape = [1] * len(w)
            shape[ax] = wk
            size = size * np.arange(c0 + 1, c0 + wk + 1, dtype=float).reshape(shape)
        lg = np.log(size)
        root = np.sqrt(size**a)
        b = b_scale * root / (lg if cfg.truncation_form == "displayed" else np.sqrt(lg))
        return b, params.delta * root * np.sqrt(lg)

    def one(r):
        rows = []

        def stat(p, cells):
            b, top = cell_levels(p, cells.shape)
            cls = bounds.classify_array(cells, b, top)
            double = math.fsum(cells[cls == 1].tolist())
            triple = math.fsum(cells[cls == 2].tolist())
            rows.append((int(np.count_nonzero(cls == 1)), int(np.count_nonzero(cls == 2)), abs(triple)))
            return abs(double)

        idx, vals, skipped = _window_walk(cfg, field0.with_replication(r), pts, sizes, stat)
        s = sizes[idx]
        norm = np.sqrt(s.astype(float) ** a * np.log(s.astype(float)))
        traj = Trajectory(s, pts[idx], np.asarray(vals, float) / norm)
        counts = np.array(rows, dtype=float).reshape(-1, 3)
        large = s >= 10**4
        frac = float(np.mean(counts[large, 1] > 0)) if large.any() else math.nan
        triple_stat = counts[:, 2] / norm if len(norm) else counts[:, 2]
        extra = {
            "triple_nonzero_fraction_large": frac,
            "triple_terminal_max": float(triple_stat.max()) if len(triple_stat) else math.nan,
            "max_double_count": int(counts[:, 0].max()) if len(counts) else 0,
            "kolmogorov_ratio_terminal": (
                bounds.kolmogorov_ratio(params, float(s[-1]), a, cfg.truncation_form) if len(s) else math.nan
            ),
        }
        return traj, _summary(r, traj, params.delta / (1.0 - a), skipped, **extra), counts

    res = _map_replications(cfg, one)
    return RunResult(
        cfg,
        params.delta / (1.0 - a),
        [t for t, _, _ in res],
        [s for _, s, _ in res],
        {"counts": [c for _, _, c in res]},
    )


def run_necessity(cfg: ExperimentConfig) -> RunResult:
    """Running max of |X_n| / sqrt(|n|^a log|n|) along the index set."""
    cfg.validate()
    field0 = cfg.field_spec()
    pts, sizes = _points(cfg)
    keep = sizes >= 2
    skipped = int(np.count_nonzero(~keep))
    pts, sizes = pts[keep], sizes[keep]
    s = sizes.astype(float)
    norm = np.sqrt(s**cfg.alpha * np.log(s))
    budgets = sorted(set(cfg.budgets) | {cfg.budget})

    def one(r):
        x = sample_points(field0.with_replication(r), pts) if len(pts) else np.zeros(0)
        traj = Trajectory(sizes, pts, np.abs(x) / norm)
        by_budget = {str(b): traj.max_up_to(b) for b in budgets}
        return traj, _summary(r, traj, None, skipped, terminal_by_budget=by_budget)

    res = _map_replications(cfg, one)
    return RunResult(cfg, None, [t for t, _ in res], [s for _, s in res])


def _lambda_int(alpha, j):
    return int(geometry.terms_floored(geometry.SubsequenceSpec("lambda", alpha), j))


def gap_cell_discrepancy(field_r: FieldSpec, alpha: float, j: int, k: int, grid: int):
    """Max over a grid of (m, n) in the (j, k) cell of |T_{(m,n)} - T_{(m_j,n_k)}|.

    Returns (max |D|, normalizer, D array, m grid, n grid).  The field is
    sampled once on the union box of every window involved.
    """
    mj, mj1 = _lambda_int(alpha, j), _lambda_int(alpha, j + 1)
    nk, nk1 = _lambda_int(alpha, k), _lambda_int(alpha, k + 1)

    def axis(lo, hi):
        if hi - lo + 1 <= grid:
            return np.arange(lo, hi + 1)
        return np.unique(np.linspace(lo, hi, grid).round().astype(np.int64))

    ms, ns = axis(mj, mj1), axis(nk, nk1)
    wm = np.maximum(1, np.floor(ms.astype(float) ** alpha * (1 + 1e-12)).astype(np.int64))
    wn = np.maximum(1, np.floor(ns.astype(float) ** alpha * (1 + 1e-12)).astype(np.int64))
    ext = (int((ms + wm).max() - mj), int((ns + wn).max() - nk))
    P = local_prefix(sample_box(field_r, (mj, nk), ext))
    lo_m, hi_m = ms - mj, ms - mj + wm
    lo_n, hi_n = ns - nk, ns - nk + wn
    T = (
        P[np.ix_(hi_m, hi_n)] - P[np.ix_(lo_m, hi_n)] - P[np.ix_(hi_m, lo_n)] + P[np.ix_(lo_m, lo_n)]
    )
    D = T - T[0, 0]
    norm = math.sqrt(mj**alpha * nk**alpha * math.log(mj * nk))
    return float(np.abs(D).max()), norm, D, ms, ns


def run_gap_discrepancy(cfg: ExperimentConfig) -> RunResult:
    """Normalized worst discrepancy per (j, j) cell, one trajectory point per cell."""
    cfg.validate()
    field0 = cfg.field_spec()
    cells = sorted(cfg.cells)
    corners = np.array([[_lambda_int(cfg.alpha, j)] * 2 for j in cells], dtype=np.int64)
    sizes = corners.prod(axis=1)

    def one(r):
        f = field0.with_replication(r)
        vals = []
        for j in cells:
            worst, norm, *_ = gap_cell_discrepancy(f, cfg.alpha, j, j, cfg.grid)
            vals.append(worst / norm)
        traj = Trajectory(sizes, corners, np.array(vals))
        return traj, _summary(r, traj, 0.0, 0, by_cell={str(j): v for j, v in zip(cells, vals)})

    res = _map_replications(cfg, one)
    return RunResult(cfg, 0.0, [t for t, _ in res], [s for _, s in res])


def run_gaussian_heuristic(cfg: ExperimentConfig) -> RunResult:
    """Field statistic T / sqrt(|n|^a log|n|) next to V_n / sqrt(log|n|), V_n ~ N(0, sigma^2).

    Report only.  The Gaussian trajectories sit in ``extra["gaussian"]`` on
    the same index grid.
    """
    cfg.validate()
    field0 = cfg.field_spec()
    pts, sizes = _points(cfg)
    sig = cfg.ref_sigma if cfg.ref_sigma > 0 else 1.0
    gauss = FieldSpec.normal(sig, seed=cfg.seed ^ _GAUSS_SALT)

    def one(r):
        idx, vals, skipped = _window_walk(cfg, field0.with_replication(r), pts, sizes, _plain_sum)
        s = sizes[idx].astype(float)
        traj = Trajectory(sizes[idx], pts[idx], np.asarray(vals, float) / np.sqrt(s**cfg.alpha * np.log(s)))
        v = sample_points(gauss.with_replication(r), pts[idx]) if len(idx) else np.zeros(0)
        g = Trajectory(sizes[idx], pts[idx], v / np.sqrt(np.log(s)))
        return traj, g, _summary(r, traj, None, skipped, gaussian_terminal_max=g.terminal_max)

    res = _map_replications(cfg, one)
    return RunResult(cfg, None, [t for t, _, _ in res], [s for _, _, s in res], {"gaussian": [g for _, g, _ in res]})


def run_delta(cfg: ExperimentConfig) -> RunResult:
    """a_n^m (g(U_n / b_n) - g(mu)) in one of two settings.

    ``mode="lsl"``: U_n the window sum, b_n the window volume,
    a_n = sqrt(|n|^a / log|n|).  ``mode="lil"`` (d = 1): U_n = S_n, b_n = n,
    a_n = sqrt(n / log log n) for every n >= 3.
    """
    cfg.validate()
    t = cfg.transform_spec()
    field0 = cfg.field_spec()
    target = delta_mod.predicted_limits(t, cfg.ref_sigma * math.sqrt(2.0))[0] if cfg.ref_sigma > 0 else 0.0

    if cfg.mode == "lil":
        n = np.arange(1, cfg.budget + 1, dtype=np.int64)
        keep = n >= 3
        nn = n[keep].astype(float)
        a = np.sqrt(nn / np.log(np.log(nn)))

        def one(r):
            x = sample_box(field0.with_replication(r), (0,), (cfg.budget,))
            S = np.cumsum(x)[keep]
            tr = delta_mod.transform_trajectory(S, t, a, nn)
            traj = Trajectory(n[keep], n[keep, None], tr.values, tr.running_max, tr.running_min)
            return traj, _summary(r, traj, target, int(np.count_nonzero(~keep)))

    else:
        pts, sizes = _points(cfg)

        def one(r):
            idx, vals, skipped = _window_walk(cfg, field0.with_replication(r), pts, sizes, _plain_sum)
            s = sizes[idx].astype(float)
            vol = np.array([math.prod(window_widths(p, cfg.alpha)) for p in pts[idx].tolist()], float)
            a = np.sqrt(s**cfg.alpha / np.log(s))
            tr = delta_mod.transform_trajectory(np.asarray(vals, float), t, a, vol)
            traj = Trajectory(sizes[idx], pts[idx], tr.values, tr.running_max, tr.running_min)
            return traj, _summary(r, traj, target, skipped)

    res = _map_replications(cfg, one)
    return RunResult(cfg, target, [t for t, _ in res], [s for _, s in res])


_RUNNERS = {
    "lsl_full": run_lsl,
    "lsl_subsequence": run_subsequence_lsl,
    "lsl_diagonal": run_diagonal_lsl,
    "max_window": run_max_window,
    "negligibility": run_negligibility,
    "necessity": run_necessity,
    "gap_discrepancy": run_gap_discrepancy,
    "gaussian_heuristic": run_gaussian_heuristic,
    "delta": run_delta,
}


def run(cfg: ExperimentConfig) -> RunResult:
    cfg.validate()
    return _RUNNERS[cfg.kind](cfg)


# ---------------------------------------------------------------- output


def format_float(x: float) -> str:
    """17 significant digits, locale-free; 'nan', 'inf', '-inf' spelled out."""
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def _write_trajectory(path: Path, traj: Trajectory) -> None:
    lines = ["size,coords,stat,runmax,runmin"]
    for s, c, v, hi, lo in zip(
        traj.sizes.tolist(), traj.coords.tolist(), traj.stat.tolist(), traj.runmax.tolist(), traj.runmin.tolist()
    ):
        coords = ";".join(str(int(x)) for x in c)
        lines.append(f"{int(s)},{coords},{format_float(v)},{format_float(hi)},{format_float(lo)}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _json_default(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    raise TypeError(type(obj).__name__)


def write_outputs(result: RunResult, out_dir) -> list[Path]:
    """Write one CSV per replication plus a JSON-lines summary; return the paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for r, traj in enumerate(result.trajectories):
        p = out / f"trajectory_r{r:04d}.csv"
        _write_trajectory(p, traj)
        written.append(p)
    for r, g in enumerate(result.extra.get("gaussian", [])):
        p = out / f"gaussian_r{r:04d}.csv"
        _write_trajectory(p, g)
        written.append(p)
    p = out / "summary.jsonl"
    p.write_text(
        "".join(json.dumps(row, default=_json_default) + "\n" for row in result.summaries),
        encoding="utf-8",
    )
    written.append(p)
    return written
