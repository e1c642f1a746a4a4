import json

import numpy as np
import pytest

from trialwork.errors import DomainError
from trialwork.operators import hermitian_defect, matrix_exponential, theta_conjugate
from trialwork.protocol import (
    DrivingProtocol,
    Observable,
    build_propagators,
    hamiltonian_at,
    heisenberg,
    microreversibility_residual,
    parity_residual,
    random_observable,
    random_protocol,
)


def slope(x, y):
    return np.polyfit(np.log(x), np.log(y), 1)[0]


def test_hamiltonian_without_odd_part_ignores_sign():
    p = random_protocol(3, seed=1, odd_scale=0.0)
    for t in (0.0, 0.37, 1.0):
        np.testing.assert_array_equal(hamiltonian_at(p, t, +1), hamiltonian_at(p, t, -1))


def test_theta_covariance_and_hermiticity():
    p = random_protocol(5, seed=2)
    for t in np.random.default_rng(0).uniform(0, 1, 100):
        H = hamiltonian_at(p, t, +1)
        assert hermitian_defect(H) <= 1e-12
        assert np.max(np.abs(theta_conjugate(H) - hamiltonian_at(p, t, -1))) <= 1e-12


def test_linear_interpolation_two_nodes():
    A = np.array([[1.0, 2.0], [2.0, -1.0]])
    B = np.array([[3.0, 0.0], [0.0, 5.0]])
    p = DrivingProtocol.linear(A, B, duration=2.0)
    # t = 0.5 is a quarter of the way: 0.75 A + 0.25 B
    np.testing.assert_allclose(hamiltonian_at(p, 0.5), [[1.5, 1.5], [1.5, 0.5]], atol=1e-15)


def test_time_outside_range():
    p = random_protocol(2, seed=3)
    with pytest.raises(DomainError):
        hamiltonian_at(p, 1.5)
    with pytest.raises(DomainError):
        hamiltonian_at(p, -0.1)


def test_construction_rejects_broken_parity():
    even = np.zeros((2, 2, 2), dtype=complex)
    even[:, 0, 1] = 1j
    even[:, 1, 0] = -1j
    with pytest.raises(DomainError):
        DrivingProtocol([0.0, 1.0], even, np.zeros_like(even))
    with pytest.raises(DomainError):
        random_protocol(1, seed=0)


def test_random_protocol_deterministic():
    a = random_protocol(4, seed=11)
    b = random_protocol(4, seed=11)
    assert np.array_equal(a.even, b.even) and np.array_equal(a.odd, b.odd)
    c = random_protocol(4, seed=12)
    assert not np.array_equal(a.even, c.even)


def test_json_round_trip(tmp_path):
    p = random_protocol(3, seed=5)
    path = tmp_path / "p.json"
    p.save(path)
    doc = json.loads(path.read_text())
    assert set(doc) >= {"dim", "duration", "nodes", "seed", "generator_config"}
    q = DrivingProtocol.load(path)
    assert np.array_equal(p.even, q.even) and np.array_equal(p.odd, q.odd)


def test_static_propagator_matches_exponential():
    H = random_protocol(4, seed=6).even[0] + random_protocol(4, seed=7).odd[0]
    p = DrivingProtocol.constant(H, duration=1.3)
    for N in (1, 7, 50):
        U = build_propagators(p, +1, "forward", N).final()
        assert np.linalg.norm(U - matrix_exponential(-1j * H * 1.3)) <= 1e-10


def test_single_slice_uses_midpoint():
    p = random_protocol(3, seed=8)
    U = build_propagators(p, +1, "forward", 1).final()
    np.testing.assert_allclose(U, matrix_exponential(-1j * hamiltonian_at(p, 0.5)), atol=1e-12)
    V = build_propagators(p, -1, "reverse", 1).final()
    np.testing.assert_allclose(V, matrix_exponential(-1j * hamiltonian_at(p, 0.5, -1)), atol=1e-12)


def test_table_invariants():
    p = random_protocol(4, seed=9)
    table = build_propagators(p, +1, "forward", 32)
    assert np.array_equal(table.unitaries[0], np.eye(4))
    for U in table.unitaries:
        assert np.linalg.norm(U.conj().T @ U - np.eye(4)) <= 1e-10 * 2
    ratio = table.unitaries[5] @ table.unitaries[4].conj().T
    np.testing.assert_allclose(ratio, matrix_exponential(-1j * hamiltonian_at(p, 4.5 / 32) / 32), atol=1e-12)
    with pytest.raises(DomainError):
        build_propagators(p, +1, "forward", 0)


def test_second_order_convergence():
    # nodes every 1/4 so the path is linear inside every slice
    p = random_protocol(3, seed=10, smoothness=5)
    Ns = [16, 32, 64, 128, 256, 512]
    diffs = [
        np.linalg.norm(build_propagators(p, 1, "forward", N).final() - build_propagators(p, 1, "forward", 2 * N).final(), 2)
        for N in Ns
    ]
    assert slope(Ns, diffs) == pytest.approx(-2.0, abs=0.2)


def test_heisenberg_picture(rng):
    p = random_protocol(4, seed=12)
    table = build_propagators(p, 1, "forward", 16)
    A = random_observable(4, 1, rng)
    np.testing.assert_allclose(heisenberg(A, table, 0.0), A.matrix)
    np.testing.assert_allclose(heisenberg(np.eye(4), table, 0.5), np.eye(4), atol=1e-14)
    evolved = heisenberg(A, table, 0.75)
    np.testing.assert_allclose(np.linalg.eigvalsh(evolved), np.linalg.eigvalsh(A.matrix), atol=1e-10)
    with pytest.raises(DomainError):
        heisenberg(A, table, 0.3)


def test_microreversibility_static_and_random():
    S = random_protocol(3, seed=13, odd_scale=0.0).even[0]
    assert microreversibility_residual(DrivingProtocol.constant(S), 20) <= 1e-10
    assert microreversibility_residual(random_protocol(4, seed=14), 64) <= 1e-9


def test_printed_microreversibility_does_not_hold():
    p = random_protocol(4, seed=15)
    # at t = 0 the literal form gives Theta U_F(T) Theta instead of the identity
    assert microreversibility_residual(p, 32, printed=True) > 1e-2


def test_mismatched_grid_is_first_order():
    p = random_protocol(4, seed=16)
    Ns = [16, 32, 64, 128, 256]
    res = [microreversibility_residual(p, N, reverse_slices=N + 1) for N in Ns]
    assert min(res) > 1e-6
    assert slope(Ns, res) == pytest.approx(-1.0, abs=0.2)


@pytest.mark.parametrize("parity", [1, -1])
def test_parity_relation(parity, rng):
    p = random_protocol(4, seed=17)
    assert parity_residual(p, random_observable(4, parity, rng), 64) <= 1e-9
    assert parity_residual(p, Observable(np.eye(4), 1), 64) <= 1e-12


def test_observable_parity_is_validated(rng):
    A = random_observable(3, 1, rng).matrix
    with pytest.raises(DomainError):
        Observable(A, -1)
