import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from trialwork.errors import DomainError, RangeError
from trialwork.operators import (
    HermitianOperator,
    eig_hermitian,
    exp_norm_slack,
    golden_thompson_slack,
    is_unitary,
    matrix_exponential,
    operator_norm,
    random_hermitian,
    theta_conjugate,
    theta_parity,
)

X = np.array([[0, 1], [1, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)

seeds = st.integers(0, 2**32 - 1)
dims = st.integers(1, 8)


def taylor_expm(A, terms=30):
    """Independent oracle: scaling and squaring around a plain Taylor sum."""
    A = np.asarray(A, dtype=complex)
    s = max(0, int(np.ceil(np.log2(max(np.linalg.norm(A, 1), 1e-300)))) + 1)
    B = A / 2**s
    out = np.eye(A.shape[0], dtype=complex)
    term = np.eye(A.shape[0], dtype=complex)
    for k in range(1, terms):
        term = term @ B / k
        out = out + term
    for _ in range(s):
        out = out @ out
    return out


def power_iteration_norm(A, iters=5000):
    M = A.conj().T @ A
    v = np.ones(M.shape[0], dtype=complex) / math.sqrt(M.shape[0])
    for _ in range(iters):
        w = M @ v
        nrm = np.linalg.norm(w)
        if nrm == 0:
            return 0.0
        v = w / nrm
    return float(math.sqrt(np.vdot(v, M @ v).real))


def test_eig_diagonal_sorted():
    w, Q = eig_hermitian(np.diag([3.0, 1.0, 2.0]))
    np.testing.assert_allclose(w, [1, 2, 3])
    assert is_unitary(Q)


def test_eig_pauli_x():
    # characteristic polynomial lambda^2 - 1
    w, _ = eig_hermitian(X)
    np.testing.assert_allclose(w, [-1, 1], atol=1e-15)


def test_eig_phase_convention_and_determinism(rng):
    H = random_hermitian(6, rng)
    w1, Q1 = eig_hermitian(H)
    w2, Q2 = eig_hermitian(H.copy())
    assert np.array_equal(w1, w2) and np.array_equal(Q1, Q2)
    pivots = Q1[np.argmax(np.abs(Q1), axis=0), np.arange(6)]
    assert np.all(np.abs(pivots.imag) < 1e-15) and np.all(pivots.real > 0)


def test_eig_rejects_non_hermitian():
    with pytest.raises(DomainError):
        eig_hermitian(np.array([[0, 1], [0, 0]]))


@given(seeds, dims)
@settings(max_examples=200, deadline=None)
def test_spectral_reconstruction(seed, d):
    H = random_hermitian(d, np.random.default_rng(seed), scale=3.0)
    w, Q = eig_hermitian(H)
    assert np.all(np.diff(w) >= 0)
    assert np.linalg.norm((Q * w) @ Q.conj().T - H) <= 1e-10 * np.linalg.norm(H)


def test_hermitian_operator_caches_spectrum(rng):
    op = HermitianOperator(random_hermitian(4, rng))
    assert op.spectrum is op.spectrum
    assert not op.matrix.flags.writeable
    with pytest.raises(DomainError):
        HermitianOperator(np.array([[1, 2], [0, 1]]))


def test_expm_zero_and_diagonal():
    np.testing.assert_array_equal(matrix_exponential(np.zeros((3, 3))), np.eye(3))
    np.testing.assert_allclose(matrix_exponential(np.diag([0.5, -2.0])), np.diag([math.exp(0.5), math.exp(-2.0)]), rtol=1e-14)


@given(seeds, dims, st.floats(-10, 10))
@settings(max_examples=100, deadline=None)
def test_expm_of_minus_iHt_is_unitary(seed, d, t):
    H = random_hermitian(d, np.random.default_rng(seed))
    if operator_norm(H) * abs(t) > 50:
        t = 50 / operator_norm(H)
    U = matrix_exponential(-1j * H * t)
    assert np.linalg.norm(U.conj().T @ U - np.eye(d)) <= 1e-10 * math.sqrt(d)


@pytest.mark.parametrize("kind", ["hermitian", "antihermitian", "normal", "general"])
def test_expm_matches_taylor_oracle(kind, rng):
    d = 5
    H = random_hermitian(d, rng, scale=2.0)
    if kind == "hermitian":
        A = H
    elif kind == "antihermitian":
        A = 1j * H
    elif kind == "normal":
        Q, _ = np.linalg.qr(rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)))
        A = (Q * (rng.normal(size=d) + 1j * rng.normal(size=d))) @ Q.conj().T
    else:
        A = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    ref = taylor_expm(A)
    assert np.linalg.norm(matrix_exponential(A) - ref) <= 1e-10 * np.linalg.norm(ref)


def test_expm_overflow_raises():
    with pytest.raises(RangeError):
        matrix_exponential(np.diag([800.0, 0.0]))
    with pytest.raises(RangeError):
        matrix_exponential(np.array([[800.0, 1.0], [0.0, 0.0]]))


def test_operator_norm_cases(rng):
    assert operator_norm(np.eye(5)) == pytest.approx(1.0, abs=1e-15)
    assert operator_norm(np.diag([-3.0, 2.0])) == pytest.approx(3.0, abs=1e-15)
    for _ in range(5):
        A = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
        assert abs(operator_norm(A) - power_iteration_norm(A)) <= 1e-8


def test_theta_parities(rng):
    R = rng.normal(size=(4, 4))
    np.testing.assert_array_equal(theta_conjugate(R), R)
    K = R - R.T
    np.testing.assert_array_equal(theta_conjugate(1j * K), -1j * K)
    assert theta_parity(R) == 1 and theta_parity(1j * K) == -1
    assert theta_parity(R + 1j * K) is None


@given(seeds, dims)
@settings(max_examples=100, deadline=None)
def test_theta_involution_multiplicative_and_exp(seed, d):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    B = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    np.testing.assert_array_equal(theta_conjugate(theta_conjugate(A)), A)
    assert np.max(np.abs(theta_conjugate(A @ B) - theta_conjugate(A) @ theta_conjugate(B))) <= 1e-12 * max(1, np.max(np.abs(A @ B)))
    E = matrix_exponential(A)
    assert np.linalg.norm(theta_conjugate(E) - matrix_exponential(theta_conjugate(A))) <= 1e-10 * np.linalg.norm(E)


def test_golden_thompson_commuting_is_tight(rng):
    A = np.diag(rng.normal(size=4))
    B = np.diag(rng.normal(size=4))
    assert abs(golden_thompson_slack(A, B)) <= 1e-10


def test_golden_thompson_pauli_closed_form():
    # Tr[e^X e^Z] = 2 cosh(1)^2 and Tr e^{X+Z} = 2 cosh(sqrt 2)
    expected = 2 * math.cosh(1) ** 2 - 2 * math.cosh(math.sqrt(2))
    assert golden_thompson_slack(X, Z) == pytest.approx(expected, rel=1e-12)
    assert expected > 0


def test_golden_thompson_dimension_mismatch():
    with pytest.raises(DomainError):
        golden_thompson_slack(np.eye(2), np.eye(3))


def test_golden_thompson_and_exp_norm_sweep():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        d = int(rng.integers(1, 9))
        A = random_hermitian(d, rng, scale=rng.uniform(0.1, 3))
        B = random_hermitian(d, rng, scale=rng.uniform(0.1, 3))
        ref = abs(np.trace(matrix_exponential(A + B)).real)
        assert golden_thompson_slack(A, B) >= -1e-9 * max(1.0, ref)
        M = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        assert exp_norm_slack(M) >= -1e-9 * math.exp(operator_norm(M))
