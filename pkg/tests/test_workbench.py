import csv
import io
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hinfcalc.errors import BudgetExceeded, PreconditionError
from hinfcalc.symbols import PolynomialSymbol
from hinfcalc.workbench import (ExperimentSpec, MatrixMap, SchurMap, build_counterexample, classify_batch,
                                counterexample_diagonal, rows_to_csv, run_reports, scale_separating,
                                schatten_dual, schatten_norm, schatten_p_norm_ascent)


def test_counterexample_diagonal_values():
    assert np.allclose(counterexample_diagonal(3), [0.0, 0.5, 0.75])
    assert counterexample_diagonal(6)[5] == 31 / 32
    with pytest.raises(PreconditionError):
        counterexample_diagonal(1)


def test_representation_matches_direct_products():
    cm = build_counterexample(3)
    P = PolynomialSymbol([[0, 1], [2, 0]])  # l2 + 2 l1  ->  S A + 2 A S
    S = np.arange(9.0).reshape(3, 3)
    R = MatrixMap(cm.representation(P), 3)
    assert np.allclose(R.forward(S), S @ cm.A + 2 * cm.A @ S)


def test_ascent_identity_map():
    ident = MatrixMap(np.eye(9), 3)
    for p in (1.0, 2.0, math.inf):
        assert schatten_p_norm_ascent(ident, p, restarts=1).value == pytest.approx(1.0)


@pytest.mark.parametrize("p", [1.0, 2.0, 4.0, math.inf])
def test_ascent_two_sided_multiplication(p):
    A = np.diag([1.0, 2.0])
    # vec(A S A) = (A^T (x) A) vec(S); the map has norm ||A||^2 on every Schatten class
    res = schatten_p_norm_ascent(MatrixMap(np.kron(A.T, A), 2), p, restarts=2)
    assert res.value == pytest.approx(4.0, rel=1e-9)


def test_ascent_p2_equals_largest_singular_value():
    rng = np.random.default_rng(8)
    R = rng.normal(size=(9, 9)) + 1j * rng.normal(size=(9, 9))
    exact = np.linalg.svd(R, compute_uv=False)[0]
    res = schatten_p_norm_ascent(MatrixMap(R, 3), 2.0, restarts=4, iters=2000)
    assert res.value <= exact * (1 + 1e-12)
    assert res.value == pytest.approx(exact, rel=1e-6)


def test_schur_map_p2_is_max_entry():
    M = np.array([[0.1, -3.0], [2.0, 0.5j]])
    assert schatten_p_norm_ascent(SchurMap(M), 2.0).value == pytest.approx(3.0, rel=1e-9)


def test_schatten_dual_pairing():
    rng = np.random.default_rng(1)
    Y = rng.normal(size=(3, 3))
    for p, q in ((1.0, math.inf), (3.0, 1.5), (math.inf, 1.0)):
        G = schatten_dual(Y, p)
        assert np.real(np.trace(G.conj().T @ Y)) == pytest.approx(schatten_norm(Y, p))
        assert schatten_norm(G, q) == pytest.approx(1.0)


def test_scale_separating_bounded_by_one():
    phi = scale_separating(math.pi / (4 * (math.pi / 3)))
    a = counterexample_diagonal(8)
    vals = np.abs(phi(a[:, None] + 0j, a[None, :] + 0j))
    assert np.all(vals <= 1 + 1e-12)
    assert np.all(np.diag(vals) < 1e-12)


def test_spec_validation():
    with pytest.raises(PreconditionError):
        ExperimentSpec(kind="nope")
    with pytest.raises(BudgetExceeded):
        ExperimentSpec(dims=[128])
    spec = ExperimentSpec.from_json({"dims": [4, 2], "p": 2, "unknown": 1})
    assert spec.dims == [2, 4] and spec.p == [2.0]


def test_empty_dims_gives_header_only_csv():
    _, text = run_reports(ExperimentSpec(dims=[]))
    assert text.strip() == "N,p,K1,K2,K_joint_lower,runtime"


def test_classify_batch_rows():
    mats = [np.diag([0.5, 0.2]), np.array([[1.0, 1.0], [0.0, 1.0]]), np.diag([1.5])]
    rows = classify_batch(mats)
    assert [r["index"] for r in rows] == [0, 1, 2]
    assert rows[0]["verdict"] and not rows[1]["verdict"] and not rows[2]["verdict"]


def test_small_experiment_deterministic(tmp_path):
    spec = dict(dims=[2, 3], p=[2.0], restarts=0, iterations=50, timing=False)
    _, a = run_reports(ExperimentSpec(**spec), tmp_path)
    _, b = run_reports(ExperimentSpec(**spec))
    assert a == b
    rows = list(csv.DictReader(io.StringIO(a)))
    assert len(rows) == 2 and all(r["runtime"] == "NA" for r in rows)
    assert (tmp_path / "sweep.csv").read_text() == a
    assert json.loads((tmp_path / "report.json").read_text())["rows"][0]["N"] == 2


def test_rows_to_csv_ignores_extra_keys():
    text = rows_to_csv([{"N": 2, "p": 2.0, "K1": 1, "K2": 1, "K_joint_lower": 1, "runtime": 0, "x": 9}])
    assert text.splitlines()[1] == "2,2.0,1,1,1,0"


@settings(max_examples=20, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=4, max_size=4), st.sampled_from([1.0, 2.0, 3.0, math.inf]))
def test_ascent_never_exceeds_operator_bound(diag, p):
    # Schur multiplication by a rank-one matrix d d^T is S -> D S D, bounded by max|d|^2
    d = np.array(diag[:2])
    res = schatten_p_norm_ascent(SchurMap(np.outer(d, d)), p, restarts=1, iters=100)
    assert res.value <= np.max(np.abs(d)) ** 2 * (1 + 1e-9) + 1e-12
