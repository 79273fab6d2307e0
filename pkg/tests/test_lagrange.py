import numpy as np
import pytest

from partialgc.errors import InvalidParameterError
from partialgc.lagrange import LagrangeTrial, lagrange_roundtrip_error, lagrange_sweep


def test_degree_one_exact():
    for seed in range(20):
        assert lagrange_roundtrip_error(LagrangeTrial(1, None, seed)) <= 1e-12


def test_degree_zero_constant():
    assert lagrange_roundtrip_error(LagrangeTrial(0, None, 3)) == 0.0


def test_duplicate_nodes_rejected():
    with pytest.raises(InvalidParameterError):
        LagrangeTrial(2, None, 0, nodes=(0.1, 0.1, 0.5))


def test_wrong_node_count_rejected():
    with pytest.raises(InvalidParameterError):
        LagrangeTrial(2, None, 0, nodes=(0.1, 0.5))


def test_explicit_nodes():
    err = lagrange_roundtrip_error(LagrangeTrial(3, None, 0, nodes=(0.0, 0.3, 0.6, 1.0)))
    assert err <= 1e-12


def test_precision_data_shared():
    # same seed, different rounding: full precision can only be better
    for seed in range(30):
        coarse = lagrange_roundtrip_error(LagrangeTrial(10, 3, seed))
        full = lagrange_roundtrip_error(LagrangeTrial(10, None, seed))
        assert full <= coarse


def test_monotone_over_default_precisions():
    precisions = (3, 6, 9, 12, None)
    for seed in range(50):
        errs = [lagrange_roundtrip_error(LagrangeTrial(20, p, seed)) for p in precisions]
        assert all(x >= y for x, y in zip(errs, errs[1:])), (seed, errs)


def test_sweep_rows():
    rows = lagrange_sweep((5, 8), (3, None), n_trials=10, seed=0)
    assert [(r["degree"], r["precision"]) for r in rows] == [(5, 3), (5, None), (8, 3), (8, None)]
    assert all(r["n"] == 10 for r in rows)
    assert rows[1]["median_error"] < rows[0]["median_error"]


def test_sweep_median_grows_with_degree():
    rows = lagrange_sweep((5, 15, 25), (None,), n_trials=30, seed=0)
    med = [r["median_error"] for r in rows]
    assert med[0] < med[1] < med[2]
    assert np.isfinite(med).all()


def test_sweep_rejects_zero_trials():
    with pytest.raises(InvalidParameterError):
        lagrange_sweep((5,), (None,), n_trials=0, seed=0)
