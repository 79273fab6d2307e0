"""Experiment orchestration: run configured campaigns and render CSV."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

from .config import ExperimentConfig
from .errors import CoverageUnreachableError
from .lagrange import lagrange_sweep
from .simulator import (APPROX_METRICS, EXACT_METRICS, Setup, TrialMetrics, prepare,
                        run_approx_trial, run_exact_trial, run_trials, summarize)

SUMMARY_HEADER = ("config_id", "ell", "T", "metric", "mean", "std", "n")
RAW_HEADER = ("config_id", "trial", "ell", "T", "psi", "proposed_residual", "theoretical_error",
              "baseline_residual", "proposed_completion", "baseline_completion", "failure_resamples")
LAGRANGE_HEADER = ("degree", "precision", "median_error", "mean_error", "n")


@dataclass
class ExperimentResult:
    summary: list[tuple] = field(default_factory=list)
    raw: list[tuple[str, TrialMetrics]] = field(default_factory=list)
    setups: dict[str, Setup] = field(default_factory=dict)
    lines: list[str] = field(default_factory=list)


def _ordering_label(cfg: ExperimentConfig, mode: str) -> str:
    return "optimal" if mode == "optimal" else f"random-best-of-{cfg.sim.random_k}"


def _config_ids(cfg: ExperimentConfig) -> list[tuple[str, str]]:
    modes = ["optimal", "random"] if cfg.experiment == "ordering-compare" else [cfg.sim.ordering]
    out = []
    for mode in modes:
        label = _ordering_label(cfg, mode)
        out.append((f"{cfg.name}:{label}" if cfg.name else label, mode))
    return out


def run_cluster(cfg: ExperimentConfig, exact: bool, threads: int = 1) -> ExperimentResult:
    res = ExperimentResult()
    scaled = ("proposed_residual", "theoretical_error") if cfg.normalize == "ell" else ()
    for config_id, mode in _config_ids(cfg):
        setup = prepare(cfg.sim, ordering=mode)
        res.setups[config_id] = setup
        fn = run_exact_trial if exact else run_approx_trial
        try:
            metrics = run_trials(fn, cfg.sim, setup, threads)
        except CoverageUnreachableError as exc:
            raise CoverageUnreachableError(f"{config_id}: {exc}") from None
        res.raw += [(config_id, mt) for mt in metrics]
        rows = summarize(metrics, EXACT_METRICS if exact else APPROX_METRICS, scaled)
        res.summary += [(config_id, ell, t, name, s) for ell, t, name, s in rows]
        by_cell: dict = {}
        for ell, t, name, s in rows:
            by_cell.setdefault((ell, t), []).append(f"{name}={s.mean:.6g}")
        for (ell, t), parts in by_cell.items():
            where = f"ell={ell}" + ("" if t is None else f" T={t:g}")
            res.lines.append(f"{config_id} {where} " + " ".join(parts))
    return res


def _num(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def summary_csv(res: ExperimentResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SUMMARY_HEADER)
    for config_id, ell, t, name, s in res.summary:
        w.writerow((config_id, ell, _num(t), name, _num(s.mean), _num(s.std), s.n))
    return buf.getvalue()


def raw_csv(res: ExperimentResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RAW_HEADER)
    for config_id, mt in res.raw:
        w.writerow((config_id, mt.trial, mt.ell, _num(mt.time), " ".join(map(str, mt.psi)),
                    _num(mt.proposed_residual), _num(mt.theoretical_error),
                    _num(mt.baseline_residual), _num(mt.proposed_completion),
                    _num(mt.baseline_completion), mt.failure_resamples))
    return buf.getvalue()


def run_lagrange(cfg: ExperimentConfig) -> tuple[str, list[str]]:
    rows = lagrange_sweep(cfg.degrees, cfg.precisions, cfg.trials, cfg.seed)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(LAGRANGE_HEADER)
    lines = []
    for r in rows:
        prec = "full" if r["precision"] is None else r["precision"]
        w.writerow((r["degree"], prec, _num(r["median_error"]), _num(r["mean_error"]), r["n"]))
        lines.append(f"degree={r['degree']} precision={prec} median={r['median_error']:.3e} "
                     f"mean={r['mean_error']:.3e}")
    return buf.getvalue(), lines
