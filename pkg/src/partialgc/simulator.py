"""Monte-Carlo simulation of a parameter-server cluster with partial stragglers.

Each trial draws a failure set and exponential per-chunk service times, then
evaluates both the proposed protocol (which uses every processed chunk) and
the original gradient-coding baseline (which only hears from workers that
finished all their chunks) on that same draw.

Randomness: every trial gets its own generator ``default_rng([seed, stream,
..., trial])``, so results do not depend on the order trials are run in.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import math
from typing import Iterable, Sequence

import numpy as np

from .assignment import AssignmentMatrix, RegularGraphSpec, build_cyclic, build_regular_graph, find_ramanujan_graph
from .encoding import block_residuals, compression_matrix, min_norm_least_squares
from .errors import CoverageUnreachableError, InvalidParameterError
from .ordering import OrderingMatrix, chunk_ordering, q_max, random_ordering

STREAM_APPROX = 0
STREAM_EXACT = 1
STREAM_ORDERING = 2
STREAM_FIXED_R = 3

MAX_FAILURE_RESAMPLES = 100


@dataclass(frozen=True)
class SimConfig:
    assignment: str = "regular-graph"   # or "cyclic"
    m: int = 200
    degree: int = 8
    graph_seed: int = 0
    ramanujan_search: bool = True
    ordering: str = "optimal"           # or "random"
    random_k: int = 100
    ells: tuple[int, ...] = (1, 2, 3)
    n_failures: int | None = 7          # None: delta - ell (exact mode)
    rate: float = 1.0
    times: tuple[float, ...] = (4.0, 8.0, 12.0, 16.0, 20.0, 24.0)
    trials: int = 1000
    seed: int = 0
    fixed_r: bool = False

    def __post_init__(self):
        if self.assignment not in ("regular-graph", "cyclic"):
            raise InvalidParameterError(f"unknown assignment {self.assignment!r}")
        if self.ordering not in ("optimal", "random"):
            raise InvalidParameterError(f"unknown ordering {self.ordering!r}")
        if self.m < 1 or self.degree < 1 or self.degree > self.m:
            raise InvalidParameterError("need 1 <= degree <= m")
        if self.rate <= 0 or not math.isfinite(self.rate):
            raise InvalidParameterError("rate must be positive and finite")
        if self.trials < 1:
            raise InvalidParameterError("trials must be at least 1")
        if self.random_k < 1:
            raise InvalidParameterError("random_k must be at least 1")
        if not self.ells or any(e < 1 for e in self.ells):
            raise InvalidParameterError("ells must be positive integers")
        if self.n_failures is not None and not 0 <= self.n_failures < self.m:
            raise InvalidParameterError("n_failures must satisfy 0 <= n_failures < m")
        if any(t < 0 for t in self.times):
            raise InvalidParameterError("times must be nonnegative")

    def failures_for(self, ell: int) -> int:
        alpha = self.degree - ell if self.n_failures is None else self.n_failures
        if not 0 <= alpha < self.m:
            raise InvalidParameterError(f"ell={ell} gives an invalid failure count {alpha}")
        return alpha


@dataclass
class TrialMetrics:
    trial: int
    ell: int
    time: float | None = None
    psi: tuple[int, ...] = ()
    proposed_residual: float | None = None
    theoretical_error: int | None = None
    baseline_residual: float | None = None
    proposed_completion: float | None = None
    baseline_completion: float | None = None
    failure_resamples: int = 0


@dataclass(frozen=True)
class Summary:
    mean: float
    std: float
    n: int


@dataclass
class Setup:
    """Assignment and ordering shared by every trial of a configuration."""
    assignment: AssignmentMatrix
    ordering: OrderingMatrix
    graph_seed: int | None = None
    second_eigenvalue: float | None = None
    q_max: int | None = None
    notes: list[str] = field(default_factory=list)


# ---------------------------------------------------------------- timelines

def simulate_worker_timeline(n_chunks: int, rate: float, failed: bool, seed) -> np.ndarray:
    """Completion times of a worker's chunks; empty if the worker has failed."""
    if rate <= 0:
        raise InvalidParameterError("rate must be positive")
    if failed:
        return np.empty(0)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return np.cumsum(rng.exponential(1.0 / rate, size=n_chunks))


def draw_timelines(loads: np.ndarray, rate: float, failed: np.ndarray,
                   rng: np.random.Generator) -> np.ndarray:
    """m x max(load) matrix of completion times; inf for failed workers and padding."""
    m, width = len(loads), int(loads.max())
    service = rng.exponential(1.0 / rate, size=(m, width))
    times = np.cumsum(service, axis=1)
    times[np.arange(width)[None, :] >= loads[:, None]] = np.inf
    times[failed] = np.inf
    return times


def draw_failures(m: int, alpha: int, rng: np.random.Generator) -> np.ndarray:
    failed = np.zeros(m, dtype=bool)
    failed[rng.choice(m, size=alpha, replace=False)] = True
    return failed


def state_at(timelines, t: float) -> np.ndarray:
    """Chunks finished by each worker at time t."""
    if isinstance(timelines, np.ndarray):
        return (timelines <= t).sum(axis=1).astype(np.int64)
    return np.array([int(np.searchsorted(tl, t, side="right")) for tl in timelines], dtype=np.int64)


def _as_matrix(timelines, loads: np.ndarray) -> np.ndarray:
    if isinstance(timelines, np.ndarray):
        return timelines
    out = np.full((len(loads), max(int(loads.max()), 1)), np.inf)
    for j, tl in enumerate(timelines):
        out[j, :len(tl)] = tl
    return out


class _CopyIndex:
    """Flattened (chunk, worker, rank) table for vectorised coverage queries."""

    def __init__(self, a: AssignmentMatrix, o: OrderingMatrix):
        o.check_against(a)
        width = int(a.replication.max())
        self.workers = np.full((a.n_chunks, width), -1, dtype=np.int64)
        self.ranks = np.zeros((a.n_chunks, width), dtype=np.int64)
        rank_of = o.rank_matrix()
        for i, hs in enumerate(a.holders):
            self.workers[i, :len(hs)] = hs
            self.ranks[i, :len(hs)] = rank_of[i, list(hs)]
        self.valid = self.workers >= 0

    def copy_times(self, timelines: np.ndarray) -> np.ndarray:
        """Time each copy of each chunk gets processed (inf if never)."""
        t = timelines[np.where(self.valid, self.workers, 0), np.maximum(self.ranks - 1, 0)]
        return np.where(self.valid, t, np.inf)

    def finish_times(self, timelines: np.ndarray, loads: np.ndarray) -> np.ndarray:
        """Time each holder of each chunk finishes its whole load (inf if never)."""
        done = timelines[np.arange(len(loads)), loads - 1]
        t = done[np.where(self.valid, self.workers, 0)]
        return np.where(self.valid, t, np.inf)


def _kth_smallest_max(times: np.ndarray, k: int) -> float:
    if k == 0:
        return 0.0
    if k > times.shape[1]:
        return math.inf
    return float(np.partition(times, k - 1, axis=1)[:, k - 1].max())


def coverage_trigger_time(timelines, a: AssignmentMatrix, o: OrderingMatrix, ell: int) -> float | None:
    """Earliest time at which every chunk has at least `ell` processed copies.

    Returns None when the surviving workers can never reach that coverage.
    """
    if ell < 0:
        raise InvalidParameterError("ell must be nonnegative")
    t = _kth_smallest_max(_CopyIndex(a, o).copy_times(_as_matrix(timelines, a.load)), ell)
    return None if math.isinf(t) else t


def baseline_completion_time(timelines, a: AssignmentMatrix, ell: int) -> float | None:
    """Earliest time at which workers that finished everything cover each chunk `ell` times."""
    idx = _CopyIndex(a, OrderingMatrix.from_assignment(a))
    t = _kth_smallest_max(idx.finish_times(_as_matrix(timelines, a.load), a.load), ell)
    return None if math.isinf(t) else t


# ---------------------------------------------------------------- decoders

def baseline_residual(a_dense: np.ndarray, finished: np.ndarray) -> float:
    """min over r supported on finished workers of ||A r - 1||^2."""
    ones = np.ones(a_dense.shape[0])
    cols = np.flatnonzero(finished)
    if cols.size == 0:
        return float(a_dense.shape[0])
    x = a_dense[:, cols].astype(float)
    r = min_norm_least_squares(x, ones)
    diff = x @ r - ones
    return float(diff @ diff)


def _proposed_residual(r: np.ndarray, idx: _CopyIndex, processed: np.ndarray) -> float:
    # Stable sort moves processed holders to the front, keeping ascending worker order.
    order = np.argsort(~processed, axis=1, kind="stable")
    workers = np.take_along_axis(idx.workers, order, axis=1)
    counts = processed.sum(axis=1)
    holders = [workers[i, :c] for i, c in enumerate(counts)]
    return float(block_residuals(r, holders).sum())


# ---------------------------------------------------------------- setup

def build_assignment(cfg: SimConfig) -> tuple[AssignmentMatrix, int | None, float | None]:
    if cfg.assignment == "cyclic":
        return build_cyclic(cfg.m, cfg.degree), None, None
    if cfg.ramanujan_search:
        a, seed, lam = find_ramanujan_graph(cfg.m, cfg.degree, cfg.graph_seed)
        return a, seed, lam
    a = build_regular_graph(RegularGraphSpec(cfg.m, cfg.degree, cfg.graph_seed))
    return a, cfg.graph_seed, None


def best_random_ordering(a: AssignmentMatrix, k: int, seed: int) -> tuple[OrderingMatrix, int]:
    """Smallest-q_max ordering among k seeded random draws (first wins ties)."""
    best, best_q = None, None
    for draw in range(k):
        o = random_ordering(a, [seed, STREAM_ORDERING, draw])
        q = q_max(a, o)
        if best_q is None or q < best_q:
            best, best_q = o, q
    return best, best_q


def prepare(cfg: SimConfig, ordering: str | None = None) -> Setup:
    a, gseed, lam = build_assignment(cfg)
    mode = ordering or cfg.ordering
    if mode == "optimal":
        o, _ = chunk_ordering(a)
        q = q_max(a, o)
    else:
        o, q = best_random_ordering(a, cfg.random_k, cfg.seed)
    return Setup(a, o, gseed, lam, q)


# ---------------------------------------------------------------- trials

def _fixed_r(cfg: SimConfig, ell: int) -> np.ndarray:
    return compression_matrix(ell, cfg.m, [cfg.seed, STREAM_FIXED_R, ell])


def run_approx_trial(cfg: SimConfig, setup: Setup, trial: int) -> list[TrialMetrics]:
    """One failure/speed draw evaluated at every (ell, T) of the configuration.

    Both protocols see the same draw; R is drawn per trial and per ell unless
    `cfg.fixed_r` is set.
    """
    a, o = setup.assignment, setup.ordering
    rng = np.random.default_rng([cfg.seed, STREAM_APPROX, trial])
    failed = draw_failures(a.n_workers, cfg.n_failures if cfg.n_failures is not None else 0, rng)
    timelines = draw_timelines(a.load, cfg.rate, failed, rng)
    idx = _CopyIndex(a, o)
    copy_t = idx.copy_times(timelines)
    finish = timelines[np.arange(a.n_workers), a.load - 1]
    dense = a.dense()
    rs = {ell: _fixed_r(cfg, ell) if cfg.fixed_r
          else compression_matrix(ell, a.n_workers, [cfg.seed, STREAM_APPROX, trial, ell])
          for ell in cfg.ells}
    baseline_cache: dict[bytes, float] = {}
    out = []
    for t in cfg.times:
        processed = copy_t <= t
        cov = processed.sum(axis=1)
        psi = tuple(int(v) for v in state_at(timelines, t))
        finished = finish <= t
        key = np.packbits(finished).tobytes()
        if key not in baseline_cache:
            baseline_cache[key] = baseline_residual(dense, finished)
        for ell in cfg.ells:
            out.append(TrialMetrics(
                trial=trial, ell=ell, time=float(t), psi=psi,
                proposed_residual=_proposed_residual(rs[ell], idx, processed),
                theoretical_error=int(np.maximum(0, ell - cov).sum()),
                baseline_residual=baseline_cache[key],
            ))
    return out


def run_exact_trial(cfg: SimConfig, setup: Setup, trial: int) -> list[TrialMetrics]:
    """Completion times of both protocols for every ell, failures resampled until reachable."""
    a, o = setup.assignment, setup.ordering
    idx = _CopyIndex(a, o)
    out = []
    for ell in cfg.ells:
        alpha = cfg.failures_for(ell)
        rng = np.random.default_rng([cfg.seed, STREAM_EXACT, ell, trial])
        for attempt in range(MAX_FAILURE_RESAMPLES + 1):
            failed = draw_failures(a.n_workers, alpha, rng)
            timelines = draw_timelines(a.load, cfg.rate, failed, rng)
            proposed = _kth_smallest_max(idx.copy_times(timelines), ell)
            baseline = _kth_smallest_max(idx.finish_times(timelines, a.load), ell)
            if math.isfinite(proposed) and math.isfinite(baseline):
                break
        else:
            raise CoverageUnreachableError(
                f"ell={ell}, trial {trial}: coverage unreachable after "
                f"{MAX_FAILURE_RESAMPLES} failure resamples")
        out.append(TrialMetrics(trial=trial, ell=ell, proposed_completion=proposed,
                                baseline_completion=baseline, failure_resamples=attempt))
    return out


def run_trials(fn, cfg: SimConfig, setup: Setup, threads: int = 1) -> list[TrialMetrics]:
    """Run `fn` for every trial index; results are in trial order regardless of `threads`."""
    trials = range(cfg.trials)
    if threads <= 1:
        batches = [fn(cfg, setup, t) for t in trials]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            batches = list(pool.map(lambda t: fn(cfg, setup, t), trials))
    return [m for batch in batches for m in batch]


# ---------------------------------------------------------------- aggregation

def aggregate(values: Iterable[float]) -> Summary:
    """Sample mean and standard deviation (n-1 denominator; 0 for a single value)."""
    v = np.asarray(list(values), dtype=float)
    if v.size == 0:
        raise InvalidParameterError("cannot aggregate an empty list")
    std = float(v.std(ddof=1)) if v.size > 1 else 0.0
    return Summary(float(v.mean()), std, int(v.size))


APPROX_METRICS = ("proposed_residual", "theoretical_error", "baseline_residual")
EXACT_METRICS = ("proposed_completion", "baseline_completion")


def summarize(metrics: Sequence[TrialMetrics], names: Sequence[str],
              scale_by_ell: Sequence[str] = ()) -> list[tuple[int, float | None, str, Summary]]:
    """Group trial metrics by (ell, T) and summarise each named metric.

    Metrics listed in `scale_by_ell` are divided by ell first.
    """
    cells: dict[tuple[int, float | None], list[TrialMetrics]] = {}
    for mt in metrics:
        cells.setdefault((mt.ell, mt.time), []).append(mt)
    rows = []
    for (ell, t), group in cells.items():
        for name in names:
            div = ell if name in scale_by_ell else 1
            rows.append((ell, t, name, aggregate(getattr(g, name) / div for g in group)))
    return rows
