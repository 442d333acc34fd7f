import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pcpsketch import sketching as sk
from pcpsketch import synthetic
from pcpsketch.errors import DegenerateDenominatorError, ParameterError
from pcpsketch.linalg import OrthonormalBasis, haar_orthonormal, rank_split, thin_svd
from pcpsketch.verifier import (
    SigmaTilde,
    adversarial_basis,
    evaluate_conditions,
    pcp_error,
    sigma_tilde_leverage,
    sigma_tilde_ridge,
    verify_theorem,
    worst_case_error,
)


def _hand_plan():
    # single draw of row 0 under p = (1/2, 1/2): W = [sqrt 2, 0]
    return sk.single_row_plan(sk.uniform_probs(2), 0, 1)


def _dense_conditions(a, w, st, k):
    """Direct evaluation with a materialized W (test oracle)."""
    svd = thin_svd(a)
    u, d = svd.u, np.diag(st.d)
    res = rank_split(svd, st.m).a_m_perp
    wtw = w.T @ w
    lhs1 = np.linalg.norm(d @ u.T @ wtw @ u @ d - d @ d, 2)
    lhs2 = np.linalg.norm(d @ u.T @ wtw @ res - d @ u.T @ res)
    lhs3 = np.linalg.norm(res.T @ wtw @ res - res.T @ res)
    lhs4 = abs(np.linalg.norm(w @ res) ** 2 - np.linalg.norm(res) ** 2)
    return np.array([lhs1, lhs2, lhs3, lhs4])


class TestSigmaTilde:
    def test_leverage(self):
        svd = thin_svd(np.diag([4.0, 3.0, 2.0, 1.0]))
        st_ = sigma_tilde_leverage(svd, 2)
        np.testing.assert_array_equal(st_.d, [1, 1, 0, 0])
        assert st_.m == st_.q == 2 and st_.d_m == 1.0
        assert st_.bound_constant == 5.0
        np.testing.assert_array_equal(sigma_tilde_leverage(svd, 4).d, np.ones(4))

    def test_leverage_bad_k(self):
        with pytest.raises(ParameterError):
            sigma_tilde_leverage(thin_svd(np.eye(3)), 4)

    def test_ridge_diag(self, diag21):
        _, ctx = sk.ridge_leverage_probs(diag21, 1)
        st_ = sigma_tilde_ridge(ctx)
        np.testing.assert_allclose(st_.d, [2 / math.sqrt(5), 1 / math.sqrt(2)])
        assert st_.q == 2 and st_.m == 2
        assert st_.d_m == pytest.approx(1 / math.sqrt(2))
        assert st_.bound_constant == pytest.approx(4 + 2 * math.sqrt(2))
        assert st_.bound_constant <= 4 + 2 * math.sqrt(2) + 1e-12

    def test_ridge_entries_monotone(self, powerlaw_300x40):
        _, ctx = sk.ridge_leverage_probs(powerlaw_300x40, 5)
        st_ = sigma_tilde_ridge(ctx)
        assert np.all(np.diff(st_.d) <= 0)
        assert st_.d_m >= 1 / math.sqrt(2) - 1e-15

    def test_validation(self):
        with pytest.raises(ParameterError):
            SigmaTilde(d=np.array([1.0, 2.0]), q=2, m=1)
        with pytest.raises(ParameterError):
            SigmaTilde(d=np.array([1.0, 0.0]), q=2, m=1)
        with pytest.raises(ParameterError):
            SigmaTilde(d=np.array([1.0, 0.5]), q=1, m=1)
        with pytest.raises(ParameterError):
            SigmaTilde(d=np.array([1.0, 0.5]), q=1, m=2)


class TestConditions:
    def test_isometric_plan(self, rng):
        a = rng.standard_normal((12, 5))
        svd = thin_svd(a)
        rep = evaluate_conditions(a, sk.isometric_plan(12), sigma_tilde_leverage(svd, 2), 2)
        for v in (rep.lhs1, rep.lhs2, rep.lhs3, rep.lhs4, rep.certified_error):
            assert v < 1e-12

    def test_hand_example(self, diag21):
        st_ = sigma_tilde_leverage(thin_svd(diag21), 1)
        rep = evaluate_conditions(diag21, _hand_plan(), st_, 1)
        assert rep.lhs1 == pytest.approx(1.0)
        assert rep.lhs2 == pytest.approx(0.0, abs=1e-15)
        assert rep.lhs3 == pytest.approx(1.0)
        assert rep.lhs4 == pytest.approx(1.0)
        assert rep.eps_effective == pytest.approx(1.0)
        assert rep.certified_error == pytest.approx(5.0)
        assert rep.certified_error == rep.bound_constant * rep.eps_effective

    def test_matches_dense_materialization(self, rng):
        a = synthetic.powerlaw(40, 10, 1.0, seed=2)
        svd = thin_svd(a)
        k = 3
        p, ctx = sk.ridge_leverage_probs(a, k, svd=svd)
        for st_ in (sigma_tilde_leverage(svd, k), sigma_tilde_ridge(ctx)):
            for t in range(5):
                plan = sk.build_sampling_plan(p, 25, seed=t)
                rep = evaluate_conditions(a, plan, st_, k, svd=svd)
                got = np.array([rep.lhs1, rep.lhs2, rep.lhs3, rep.lhs4])
                want = _dense_conditions(a, sk.dense_sampling_matrix(plan), st_, k)
                np.testing.assert_allclose(got, want, rtol=1e-12, atol=1e-14)

    def test_zero_residual(self):
        a = np.diag([3.0, 2.0, 0.0])
        svd = thin_svd(a)
        plan = sk.single_row_plan(sk.uniform_probs(3), 0, 2)
        rep = evaluate_conditions(a, plan, sigma_tilde_leverage(svd, 2), 2)
        assert rep.lhs2 == rep.lhs3 == rep.lhs4 == 0.0
        assert rep.eps_effective == rep.lhs1

    def test_normalization_implies_per_x_conditions(self, rng):
        a = synthetic.lowrank(50, 12, r=4, noise=0.1, seed=3)
        k = 3
        svd = thin_svd(a)
        st_ = sigma_tilde_leverage(svd, k)
        plan = sk.build_sampling_plan(sk.leverage_mixed_probs(a, k), 30, seed=5)
        rep = evaluate_conditions(a, plan, st_, k)
        eps = rep.eps_effective
        for s in range(100):
            ax = np.linalg.norm(a @ haar_orthonormal(12, 12 - k, s).matrix)
            assert rep.lhs2 <= eps * ax + 1e-12
            assert rep.lhs3 <= eps / math.sqrt(k) * ax**2 + 1e-12
            assert rep.lhs4 <= eps * ax**2 + 1e-12


class TestPcpError:
    def test_isometric_zero(self, rng):
        a = rng.standard_normal((50, 10))
        wa = sk.apply_sketch(sk.isometric_plan(50), a)
        for s in range(20):
            assert pcp_error(a, wa, haar_orthonormal(10, 7, s)) < 1e-12

    def test_hand_example(self, diag21):
        wa = np.array([[2 * math.sqrt(2), 0.0]])
        assert pcp_error(diag21, wa, OrthonormalBasis(np.array([[0.0], [1.0]]))) == pytest.approx(1.0)

    def test_degenerate(self):
        a = np.array([[1.0, 0.0]])
        x = OrthonormalBasis(np.array([[0.0], [1.0]]))
        assert pcp_error(a, np.array([[5.0, 0.0]]), x) == 0.0
        with pytest.raises(DegenerateDenominatorError):
            pcp_error(a, np.array([[0.0, 1.0]]), x)


class TestWorstCase:
    def test_isometric(self, rng):
        a = rng.standard_normal((9, 4))
        assert worst_case_error(a, sk.isometric_plan(9)) < 1e-12

    def test_hand_example(self, diag21):
        assert worst_case_error(diag21, _hand_plan()) == pytest.approx(1.0)

    def test_dominates_pcp_error(self, rng):
        a = rng.standard_normal((40, 8))
        plan = sk.build_sampling_plan(sk.leverage_mixed_probs(a, 3), 20, seed=1)
        wa = sk.apply_sketch(plan, a)
        wc = worst_case_error(a, plan)
        observed = max(pcp_error(a, wa, haar_orthonormal(8, 7, s)) for s in range(500))
        assert observed <= wc + 1e-10


class TestVerifyTheorem:
    def test_isometric(self, rng):
        a = rng.standard_normal((15, 6))
        svd = thin_svd(a)
        chk = verify_theorem(a, sk.isometric_plan(15), sigma_tilde_leverage(svd, 2), 2, x_samples=10)
        assert chk.max_observed < 1e-12 and chk.holds

    def test_hand_example(self, diag21):
        st_ = sigma_tilde_leverage(thin_svd(diag21), 1)
        chk = verify_theorem(diag21, _hand_plan(), st_, 1, x_samples=20, seed=3)
        assert chk.report.certified_error >= 5.0 - 1e-12
        assert chk.max_observed == pytest.approx(1.0)
        assert chk.holds

    def test_random_plans(self, rng):
        a = rng.standard_normal((60, 12))
        svd = thin_svd(a)
        p = sk.leverage_mixed_probs(a, 3, svd=svd)
        for t in range(5):
            plan = sk.build_sampling_plan(p, int(rng.integers(1, 80)), seed=t)
            assert verify_theorem(a, plan, sigma_tilde_leverage(svd, 3), 3, x_samples=50, seed=t, svd=svd).holds

    def test_threads_do_not_change_result(self, rng):
        a = rng.standard_normal((30, 8))
        svd = thin_svd(a)
        plan = sk.build_sampling_plan(sk.leverage_mixed_probs(a, 2), 15, seed=2)
        st_ = sigma_tilde_leverage(svd, 2)
        r1 = verify_theorem(a, plan, st_, 2, x_samples=30, seed=9, threads=1)
        r4 = verify_theorem(a, plan, st_, 2, x_samples=30, seed=9, threads=4)
        assert r1 == r4

    def test_adversarial_basis_minimizes(self, rng):
        a = rng.standard_normal((20, 6))
        svd = thin_svd(a)
        x = adversarial_basis(svd, 2)
        assert np.sum((a @ x.matrix) ** 2) == pytest.approx(np.sum(svd.sigma[2:] ** 2), rel=1e-12)


@settings(max_examples=60, deadline=None)
@given(
    n=st.integers(4, 20),
    d=st.integers(3, 8),
    k=st.integers(1, 4),
    s=st.integers(1, 30),
    seed=st.integers(0, 2**31),
    ridge=st.booleans(),
    adversarial=st.booleans(),
)
def test_theorem_soundness_property(n, d, k, s, seed, ridge, adversarial):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((n, d)) * rng.uniform(0.05, 2.0, size=d)
    svd = thin_svd(a)
    if k >= min(svd.rank, d):
        k = min(svd.rank, d) - 1
    if k < 1:
        return
    if ridge:
        try:
            p, ctx = sk.ridge_leverage_probs(a, k, svd=svd)
        except sk.NoValidSplitError:
            return
        st_ = sigma_tilde_ridge(ctx)
    else:
        p = sk.leverage_mixed_probs(a, k, svd=svd)
        st_ = sigma_tilde_leverage(svd, k)
    if adversarial:
        plan = sk.single_row_plan(p, int(np.argmax(p.p)), s)
    else:
        plan = sk.build_sampling_plan(p, s, seed)
    chk = verify_theorem(a, plan, st_, k, x_samples=10, seed=seed, svd=svd)
    assert chk.max_observed <= chk.report.certified_error + 1e-9
    assert chk.holds
