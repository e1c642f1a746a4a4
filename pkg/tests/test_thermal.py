import math

import numpy as np
import pytest

from trialwork.errors import DomainError
from trialwork.operators import HermitianOperator, eig_hermitian, random_hermitian
from trialwork.thermal import (
    DiagonalDistribution,
    diagonal_distribution,
    gbf_lower_bound,
    gbf_upper_bound,
    gibbs,
    ratio_bound,
    relative_entropy,
)


def test_gibbs_zero_hamiltonian():
    s = gibbs(np.zeros((2, 2)), 1.0)
    np.testing.assert_allclose(s.rho, np.eye(2) / 2)
    assert s.Z == pytest.approx(2.0, rel=1e-15)
    assert s.F == pytest.approx(-math.log(2), rel=1e-15)


def test_gibbs_two_level_closed_form():
    s = gibbs(np.diag([0.0, 1.0]), 1.0)
    Z = 1 + math.exp(-1)
    assert s.Z == pytest.approx(Z, rel=1e-14)
    np.testing.assert_allclose(np.diag(s.rho).real, [1 / Z, math.exp(-1) / Z], rtol=1e-14)


@pytest.mark.parametrize("beta", [0.1, 1.0, 10.0, 1000.0])
def test_gibbs_invariants(beta, rng):
    H = random_hermitian(6, rng)
    s = gibbs(H, beta)
    w, _ = eig_hermitian(H)
    # spectral oracle, summed in log space
    log_Z = -beta * w[0] + math.log(np.sum(np.exp(-beta * (w - w[0]))))
    assert s.log_partition == pytest.approx(log_Z, rel=1e-12)
    assert np.trace(s.rho).real == pytest.approx(1.0, abs=1e-12)
    assert np.min(np.linalg.eigvalsh(s.rho)) >= -1e-12
    assert np.linalg.norm(s.rho @ H - H @ s.rho) <= 1e-10 * max(1, np.linalg.norm(H))
    assert math.exp(-beta * s.F) == pytest.approx(math.exp(s.log_partition), rel=1e-12) if beta < 100 else True


def test_gibbs_rejects_bad_beta():
    with pytest.raises(DomainError):
        gibbs(np.eye(2), 0.0)
    with pytest.raises(DomainError):
        gibbs(np.array([[0, 1], [2, 0]]), 1.0)


def test_diagonal_distribution_own_basis_gives_boltzmann(rng):
    op = HermitianOperator(random_hermitian(5, rng))
    s = gibbs(op, 0.7)
    p = diagonal_distribution(s, op)
    E = op.eigenvalues
    np.testing.assert_allclose(p.probabilities, np.exp(-0.7 * E) / np.sum(np.exp(-0.7 * E)), rtol=1e-12)


def test_diagonal_distribution_mixed_and_random_basis(rng):
    s = gibbs(np.zeros((4, 4)), 1.0)
    Q, _ = np.linalg.qr(rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)))
    np.testing.assert_allclose(diagonal_distribution(s, Q).probabilities, 0.25, atol=1e-15)
    s5 = gibbs(random_hermitian(5, rng), 2.0)
    Q5, _ = np.linalg.qr(rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5)))
    p = diagonal_distribution(s5, Q5)
    assert abs(p.probabilities.sum() - 1) <= 1e-12
    # cross-check against the dense density matrix
    np.testing.assert_allclose(p.probabilities, np.einsum("ij,jk,ki->i", Q5.conj().T, s5.rho, Q5).real, atol=1e-13)
    with pytest.raises(DomainError):
        diagonal_distribution(s5, 2 * Q5)


def test_relative_entropy_values(rng):
    u = DiagonalDistribution(np.array([0.5, 0.5]))
    assert relative_entropy(u, u) == 0.0
    assert relative_entropy(DiagonalDistribution(np.array([1.0, 0.0])), u) == pytest.approx(math.log(2), rel=1e-15)
    assert relative_entropy(u, DiagonalDistribution(np.array([1.0, 0.0]))) == math.inf
    for _ in range(200):
        a, b = rng.dirichlet(np.ones(8)), rng.dirichlet(np.ones(8))
        assert relative_entropy(DiagonalDistribution(a), DiagonalDistribution(b)) >= -1e-12


def test_gbf_equalities(rng):
    H = random_hermitian(4, rng)
    for rep in (gbf_lower_bound(H, H, 1.0), gbf_upper_bound(H, H, 1.0)):
        assert abs(rep.relative_slack) <= 1e-10 and rep.satisfied
    c = 0.7
    Hs = H + c * np.eye(4)
    for rep in (gbf_lower_bound(H, Hs, 2.0), gbf_upper_bound(H, Hs, 2.0)):
        assert abs(rep.relative_slack) <= 1e-10


def test_gbf_upper_two_level_closed_form():
    rep = gbf_upper_bound(np.diag([0.0, 1.0]), np.diag([0.0, 2.0]), 1.0)
    e1, e2 = math.exp(-1), math.exp(-2)
    v = e2 / (1 + e2)
    assert rep.lhs == pytest.approx(1 + e2, rel=1e-14)
    assert rep.rhs == pytest.approx((1 + e1) * math.exp(-v), rel=1e-14)
    assert rep.slack > 1e-3 and rep.satisfied


def test_gbf_sweep():
    rng = np.random.default_rng(1)
    for k in range(1000):
        d = int(rng.integers(2, 9))
        beta = (0.1, 1.0, 10.0)[k % 3]
        H, Hp = random_hermitian(d, rng), random_hermitian(d, rng)
        assert gbf_lower_bound(H, Hp, beta).satisfied
        assert gbf_upper_bound(H, Hp, beta).satisfied


def test_ratio_bound_cases(rng):
    H0, HT = random_hermitian(3, rng), random_hermitian(3, rng)
    assert abs(ratio_bound(H0, H0, HT, HT, 1.0).relative_slack) <= 1e-10
    # independent shifts at the two ends cancel against the V averages
    rep = ratio_bound(H0, H0 + 0.4 * np.eye(3), HT, HT - 1.1 * np.eye(3), 1.5)
    assert abs(rep.relative_slack) <= 1e-10
    for _ in range(300):
        d = int(rng.integers(2, 9))
        mats = [random_hermitian(d, rng) for _ in range(4)]
        assert ratio_bound(*mats, beta=float(rng.choice([0.1, 1, 10]))).satisfied


def test_bound_report_json(rng):
    import json

    rep = gbf_lower_bound(random_hermitian(2, rng), random_hermitian(2, rng), 1.0)
    doc = json.loads(rep.to_json())
    assert set(doc) == {"name", "lhs", "rhs", "slack", "satisfied", "context"}
    assert {"tol", "scale"} <= set(doc["context"])
