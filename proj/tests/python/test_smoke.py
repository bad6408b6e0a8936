import math

import numpy as np
import pytest

import blockcd as bc


def test_quadratic_and_prox():
    q = bc.generate_quadratic(seed=3, n=6, d=8, blocks=4, condition_number=5.0)
    assert q.dim == 8 and q.n == 6
    x = np.linspace(-1, 1, 8)
    g = q.full_grad(x)
    assert np.allclose(g, q.mean_A @ x + q.mean_b)
    assert np.array_equal(q.block_grad(1, x), g[2:4])
    out = bc.Regularizer.l1(1.0).prox(np.zeros(1), np.array([-4.0]), 1.0, np.array([2.0]))
    assert out[0] == pytest.approx(1.5)


def test_pccd_matches_prox_gd_with_one_block():
    q = bc.generate_quadratic(seed=1, n=5, d=6, blocks=1)
    reg = bc.Regularizer.l1(0.05)
    a = bc.pccd(q, reg, np.ones(6), K=20)
    b = bc.pccd(q, reg, np.ones(6), K=20, full_vector=True)
    assert np.array_equal(a.trace["F"], b.trace["F"])
    assert np.all(np.diff(a.trace["F"]) <= 1e-12)


def test_vrccd_full_batch_has_no_estimator_error():
    q = bc.generate_quadratic(seed=2, n=8, d=6, blocks=3)
    L_hat, L_tilde = bc.L_constants(q)
    eta = bc.step_size(L_hat, L_tilde, p=0.5, b=8, bprime=8, n=8)
    r = bc.vrccd(q, bc.Regularizer.zero(), np.ones(6), K=30, eta=eta, p=0.5, b=8, bprime=8, record_u=True)
    assert np.max(r.trace["u"]) <= 1e-20
    assert 1 <= r.trace["output_index"] <= 30


def test_spectral_norm():
    assert bc.spectral_norm(np.diag([2.0, 1.0])) == pytest.approx(2.0)


def test_config_run_and_errors(tmp_path):
    text = "problem.n = 10\nproblem.d = 6\nproblem.m = 2\nalgorithm.K = 20\ndiagnostics.checks = descent, theorem1\n"
    out = bc.run_config(text, out_dir=str(tmp_path))
    assert out["exit_code"] == 0
    assert all(r["pass"] for r in out["reports"])
    assert (tmp_path / "trace_seed0.csv").exists()
    with pytest.raises(bc.ConfigError, match=r"\(0,1\]"):
        bc.run_config("algorithm.name = vrccd\nalgorithm.p = 1.5\n")


def test_sweep_rows():
    rows = bc.sweep("problem.n = 10\nproblem.d = 6\nalgorithm.K = 5\n", "problem.m", ["1", "3"])
    assert [r[0] for r in rows] == ["1", "3"]
    assert all(math.isfinite(r[2]) for r in rows)


def test_suite():
    assert len(bc.suite_names()) == 10
    r = bc.run_suite("lemma1_identity")
    assert r["pass"] and r["criterion"] == 1
