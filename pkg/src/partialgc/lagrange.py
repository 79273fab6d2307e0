"""Round-trip error of monomial-basis polynomial interpolation.

Shows why interpolation-based gradient-coding schemes break down at a few
tens of workers: draw a random polynomial, evaluate it at random nodes,
optionally round the values, rebuild the monomial coefficients from a
Vandermonde solve and compare against the true polynomial on probe points.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError

N_PROBES = 100


@dataclass(frozen=True)
class LagrangeTrial:
    degree: int
    precision: int | None  # decimal places kept; None keeps full precision
    seed: int
    nodes: tuple[float, ...] | None = None  # defaults to degree+1 uniform draws on [0, 1]

    def __post_init__(self):
        if self.degree < 0:
            raise InvalidParameterError("degree must be nonnegative")
        if self.precision is not None and self.precision < 0:
            raise InvalidParameterError("precision must be nonnegative")
        if self.nodes is not None:
            if len(self.nodes) != self.degree + 1:
                raise InvalidParameterError(f"need {self.degree + 1} nodes, got {len(self.nodes)}")
            if len(set(self.nodes)) != len(self.nodes):
                raise InvalidParameterError("interpolation nodes must be distinct")


def lagrange_roundtrip_error(trial: LagrangeTrial) -> float:
    """Max relative error on held-out probes of the polynomial rebuilt from (rounded) samples.

    The polynomial, nodes and probes depend only on (degree, seed), so
    trials that differ only in precision see identical data.
    """
    rng = np.random.default_rng([trial.seed, trial.degree])
    coeffs = rng.standard_normal(trial.degree + 1)  # highest power first
    drawn = rng.uniform(0.0, 1.0, trial.degree + 1)
    probes = rng.uniform(0.0, 1.0, N_PROBES)
    nodes = np.asarray(trial.nodes if trial.nodes is not None else drawn, dtype=float)
    if np.unique(nodes).size != nodes.size:
        raise InvalidParameterError("interpolation nodes must be distinct")

    values = np.polyval(coeffs, nodes)
    if trial.precision is not None:
        values = np.round(values, trial.precision)
    fitted = np.linalg.solve(np.vander(nodes, trial.degree + 1), values)

    truth = np.polyval(coeffs, probes)
    err = np.max(np.abs(np.polyval(fitted, probes) - truth))
    scale = np.max(np.abs(truth))
    return float(err / scale) if scale > 0 else float(err)


def lagrange_sweep(degrees, precisions, n_trials: int, seed: int) -> list[dict]:
    """Median and mean round-trip error for every (degree, precision) cell.

    Trial t of every cell uses seed ``seed + t``.
    """
    if n_trials < 1:
        raise InvalidParameterError("n_trials must be at least 1")
    rows = []
    for degree in degrees:
        for precision in precisions:
            errs = np.array([lagrange_roundtrip_error(LagrangeTrial(degree, precision, seed + t))
                             for t in range(n_trials)])
            rows.append({"degree": degree, "precision": precision,
                         "median_error": float(np.median(errs)),
                         "mean_error": float(errs.mean()), "n": n_trials})
    return rows
