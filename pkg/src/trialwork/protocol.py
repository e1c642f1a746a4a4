"""Driven protocols with explicit time-reversal structure, and their propagators.

A protocol stores its Hamiltonian as a Theta-even part (real symmetric) and a
Theta-odd part (imaginary Hermitian) sampled at node times and linearly
interpolated; ``H(t, R) = even(t) + R * odd(t)``. Propagators use one
exponential per slice, evaluated at the slice midpoint. Reverse tables sample
``H(T - t)`` on the same grid, so their midpoints are the forward midpoints
mirrored and the time-reversal relations hold to rounding error.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal

import numpy as np

from .errors import DomainError
from .operators import (
    dagger,
    hermitize,
    random_imaginary_hermitian,
    random_real_symmetric,
    theta_conjugate,
)

Direction = Literal["forward", "reverse"]

_TIME_ATOL = 1e-12


def _check_sign(sign: int) -> int:
    if sign not in (1, -1):
        raise DomainError(f"sign must be +1 or -1, got {sign!r}")
    return int(sign)


@dataclass(frozen=True, eq=False)
class DrivingProtocol:
    """Piecewise-linear Hamiltonian path ``H(t, R) = even(t) + R odd(t)`` on [0, T]."""

    times: np.ndarray
    even: np.ndarray
    odd: np.ndarray
    parameter_sign: int = 1
    seed: int | None = None
    generator_config: dict | None = None

    def __post_init__(self):
        times = np.array(self.times, dtype=float)
        even = np.array(self.even, dtype=complex)
        odd = np.array(self.odd, dtype=complex)
        if times.ndim != 1 or times.size < 2:
            raise DomainError("a protocol needs at least two node times")
        if times[0] != 0.0 or np.any(np.diff(times) <= 0):
            raise DomainError("node times must start at 0 and increase strictly")
        if even.ndim != 3 or even.shape[1] != even.shape[2] or even.shape[0] != times.size:
            raise DomainError(f"even nodes have shape {even.shape}, expected ({times.size}, d, d)")
        if odd.shape != even.shape:
            raise DomainError("even and odd nodes must have the same shape")
        if not (np.all(np.isfinite(even)) and np.all(np.isfinite(odd))):
            raise DomainError("protocol nodes must be finite")
        scale = max(np.max(np.abs(even)), np.max(np.abs(odd)), 1.0)
        if np.max(np.abs(even.imag)) > 1e-12 * scale:
            raise DomainError("even part must be real (Theta-even)")
        if np.max(np.abs(odd.real)) > 1e-12 * scale:
            raise DomainError("odd part must be purely imaginary (Theta-odd)")
        re = even.real
        im = odd.imag
        if np.max(np.abs(re - np.swapaxes(re, 1, 2))) > 1e-12 * scale:
            raise DomainError("even part must be symmetric")
        if np.max(np.abs(im + np.swapaxes(im, 1, 2))) > 1e-12 * scale:
            raise DomainError("odd part must be i times an antisymmetric matrix")
        # store exactly structured copies so Theta H(R) Theta = H(-R) is exact
        even = 0.5 * (re + np.swapaxes(re, 1, 2)).astype(complex)
        odd = 1j * 0.5 * (im - np.swapaxes(im, 1, 2))
        for arr in (times, even, odd):
            arr.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "even", even)
        object.__setattr__(self, "odd", odd)
        object.__setattr__(self, "parameter_sign", _check_sign(self.parameter_sign))

    @property
    def dim(self) -> int:
        return self.even.shape[1]

    @property
    def duration(self) -> float:
        return float(self.times[-1])

    @classmethod
    def constant(cls, H, duration: float = 1.0) -> DrivingProtocol:
        """Time-independent protocol; ``H`` is split into its real and imaginary parts."""
        M = hermitize(np.asarray(H, dtype=complex))
        even = np.stack([M.real, M.real]).astype(complex)
        odd = np.stack([1j * M.imag, 1j * M.imag])
        return cls(np.array([0.0, duration]), even, odd)

    @classmethod
    def linear(cls, H_start, H_end, duration: float = 1.0) -> DrivingProtocol:
        """Linear ramp between two Hermitian matrices."""
        A = hermitize(np.asarray(H_start, dtype=complex))
        B = hermitize(np.asarray(H_end, dtype=complex))
        even = np.stack([A.real, B.real]).astype(complex)
        odd = np.stack([1j * A.imag, 1j * B.imag])
        return cls(np.array([0.0, duration]), even, odd)

    def _interp(self, nodes: np.ndarray, t: np.ndarray) -> np.ndarray:
        k = np.clip(np.searchsorted(self.times, t, side="right") - 1, 0, self.times.size - 2)
        t0 = self.times[k]
        t1 = self.times[k + 1]
        w = ((t - t0) / (t1 - t0))[:, None, None]
        return (1.0 - w) * nodes[k] + w * nodes[k + 1]

    def hamiltonians_at(self, t, sign: int = 1) -> np.ndarray:
        """Stack of H(t_i, sign R) for an array of times."""
        sign = _check_sign(sign)
        ts = np.atleast_1d(np.asarray(t, dtype=float))
        T = self.duration
        if np.any(ts < -_TIME_ATOL * T) or np.any(ts > T * (1 + _TIME_ATOL)):
            raise DomainError(f"time outside [0, {T}]")
        ts = np.clip(ts, 0.0, T)
        r = sign * self.parameter_sign
        return self._interp(self.even, ts) + r * self._interp(self.odd, ts)

    def with_nodes(self, even=None, odd=None, **kw) -> DrivingProtocol:
        return DrivingProtocol(
            self.times,
            self.even if even is None else even,
            self.odd if odd is None else odd,
            kw.get("parameter_sign", self.parameter_sign),
            kw.get("seed", self.seed),
            kw.get("generator_config", self.generator_config),
        )

    def shifted(self, c_start: float, c_end: float) -> DrivingProtocol:
        """Add the scalar ramp ``[c_start (1 - t/T) + c_end t/T] I``.

        A linear ramp sampled at the nodes interpolates exactly.
        """
        s = self.times / self.duration
        c = c_start * (1.0 - s) + c_end * s
        return self.with_nodes(even=self.even + c[:, None, None] * np.eye(self.dim))

    def to_dict(self) -> dict:
        def pairs(M):
            return [[[float(z.real), float(z.imag)] for z in row] for row in M]

        doc = {
            "dim": self.dim,
            "duration": self.duration,
            "parameter_sign": self.parameter_sign,
            "nodes": [
                {"t": float(t), "even": pairs(e), "odd": pairs(o)}
                for t, e, o in zip(self.times, self.even, self.odd)
            ],
        }
        if self.seed is not None:
            doc["seed"] = self.seed
        if self.generator_config is not None:
            doc["generator_config"] = self.generator_config
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> DrivingProtocol:
        def matrix(rows):
            a = np.asarray(rows, dtype=float)
            return a[..., 0] + 1j * a[..., 1]

        nodes = doc["nodes"]
        times = [n["t"] for n in nodes]
        even = np.stack([matrix(n["even"]) for n in nodes])
        odd = np.stack([matrix(n["odd"]) for n in nodes])
        p = cls(times, even, odd, doc.get("parameter_sign", 1), doc.get("seed"), doc.get("generator_config"))
        if p.dim != doc["dim"] or not np.isclose(p.duration, doc["duration"]):
            raise DomainError("dim/duration fields disagree with the node data")
        return p

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1))

    @classmethod
    def load(cls, path) -> DrivingProtocol:
        return cls.from_dict(json.loads(Path(path).read_text()))


def hamiltonian_at(p: DrivingProtocol, t: float, sign: int = 1) -> np.ndarray:
    """H(t, sign R): even part plus sign times the odd part."""
    return p.hamiltonians_at([t], sign)[0]


@dataclass(frozen=True)
class Observable:
    """Time-independent observable with definite time-reversal parity."""

    matrix: np.ndarray
    parity: int

    def __post_init__(self):
        M = hermitize(np.asarray(self.matrix, dtype=complex))
        parity = _check_sign(self.parity)
        if np.max(np.abs(theta_conjugate(M) - parity * M)) > 1e-12 * max(np.max(np.abs(M)), 1.0):
            raise DomainError(f"matrix does not have parity {parity:+d} under Theta")
        M.setflags(write=False)
        object.__setattr__(self, "matrix", M)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def random_protocol(
    dim: int,
    seed: int,
    smoothness: int = 5,
    even_scale: float = 1.0,
    odd_scale: float = 0.5,
    duration: float = 1.0,
) -> DrivingProtocol:
    """Random Theta-structured protocol with ``smoothness`` equally spaced nodes."""
    if dim < 2:
        raise DomainError(f"dim must be >= 2, got {dim}")
    if smoothness < 2:
        raise DomainError("smoothness (node count) must be >= 2")
    rng = np.random.default_rng(seed)
    even = np.stack([random_real_symmetric(dim, rng, even_scale) for _ in range(smoothness)])
    odd = np.stack([random_imaginary_hermitian(dim, rng, odd_scale) for _ in range(smoothness)])
    config = {"smoothness": smoothness, "even_scale": even_scale, "odd_scale": odd_scale}
    return DrivingProtocol(np.linspace(0.0, duration, smoothness), even, odd, 1, seed, config)


def random_observable(dim: int, parity: int, rng: np.random.Generator, scale: float = 1.0) -> Observable:
    if parity == 1:
        return Observable(random_real_symmetric(dim, rng, scale), 1)
    return Observable(random_imaginary_hermitian(dim, rng, scale), -1)


def _expm_stack(H: np.ndarray, dt: float) -> np.ndarray:
    w, Q = np.linalg.eigh(H)
    return (Q * np.exp(-1j * w * dt)[..., None, :]) @ dagger(Q)


@dataclass(frozen=True, eq=False)
class PropagatorTable:
    """U(t_j) on the uniform grid t_j = j T / N, plus midpoint values.

    ``midpoint_unitaries[k]`` is the evolution to ``(k + 1/2) dt``, obtained
    with a half step of the slice generator.
    """

    times: np.ndarray
    direction: Direction
    sign: int
    unitaries: np.ndarray
    midpoint_unitaries: np.ndarray
    generators: np.ndarray = field(repr=False)

    @property
    def slices(self) -> int:
        return self.times.size - 1

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])

    @property
    def duration(self) -> float:
        return float(self.times[-1])

    @property
    def midpoints(self) -> np.ndarray:
        return 0.5 * (self.times[1:] + self.times[:-1])

    def index_of(self, t: float) -> int:
        j = int(round(t / self.dt))
        if j < 0 or j > self.slices or abs(self.times[j] - t) > 1e-9 * max(self.duration, 1.0):
            raise DomainError(f"time {t} is not on the propagator grid")
        return j

    def final(self) -> np.ndarray:
        return self.unitaries[-1]


def build_propagators(p: DrivingProtocol, sign: int = 1, direction: Direction = "forward", N: int = 64) -> PropagatorTable:
    """Midpoint-exponential propagators for ``H(t, sign R)`` (forward) or ``H(T - t, sign R)`` (reverse)."""
    if int(N) != N or N < 1:
        raise DomainError(f"slice count must be a positive integer, got {N!r}")
    if direction not in ("forward", "reverse"):
        raise DomainError(f"unknown direction {direction!r}")
    N = int(N)
    T = p.duration
    k = np.arange(N)
    if direction == "forward":
        sample = T * (k + 0.5) / N
    else:
        sample = T * (N - k - 0.5) / N
    H = p.hamiltonians_at(sample, sign)
    dt = T / N
    steps = _expm_stack(H, dt)
    halves = _expm_stack(H, dt / 2)
    d = p.dim
    U = np.empty((N + 1, d, d), dtype=complex)
    U[0] = np.eye(d)
    for j in range(N):
        U[j + 1] = steps[j] @ U[j]
    mids = halves @ U[:-1]
    times = T * np.arange(N + 1) / N
    for arr in (times, U, mids, H):
        arr.setflags(write=False)
    return PropagatorTable(times, direction, _check_sign(sign), U, mids, H)


def heisenberg(A, table: PropagatorTable, t: float) -> np.ndarray:
    """U(t)^dagger A U(t) for a grid time ``t``."""
    M = A.matrix if isinstance(A, Observable) else np.asarray(A, dtype=complex)
    U = table.unitaries[table.index_of(t)]
    return hermitize(dagger(U) @ M @ U)


def microreversibility_residual(
    p: DrivingProtocol,
    N: int = 64,
    printed: bool = False,
    reverse_slices: int | None = None,
) -> float:
    """max_j || Theta U_F(T - t_j) U_F(T)^dagger Theta - U_R(t_j, -R) ||.

    With ``printed=True`` the literal form using ``U_F(t_j)^dagger`` instead of
    ``U_F(T)^dagger`` is evaluated; it is not an identity (it fails already at
    t = 0). ``reverse_slices`` builds the reverse table on a different grid and
    compares index by index, as a negative control.
    """
    M = N if reverse_slices is None else reverse_slices
    fwd = build_propagators(p, +1, "forward", N).unitaries
    rev = build_propagators(p, -1, "reverse", M).unitaries
    UT_dag = dagger(fwd[-1])
    worst = 0.0
    for j in range(min(N, M) + 1):
        right = dagger(fwd[j]) if printed else UT_dag
        left = theta_conjugate(fwd[N - j] @ right)
        worst = max(worst, float(np.linalg.norm(left - rev[j], 2)))
    return worst


def parity_residual(p: DrivingProtocol, A: Observable, N: int = 64) -> float:
    """max_j || A_F(t_j) - parity U_F(T)^dagger Theta A_R(T - t_j) Theta U_F(T) ||."""
    fwd = build_propagators(p, +1, "forward", N).unitaries
    rev = build_propagators(p, -1, "reverse", N).unitaries
    UT = fwd[-1]
    A_M = A.matrix
    A_F = dagger(fwd) @ A_M @ fwd
    A_R = dagger(rev) @ A_M @ rev
    mapped = A.parity * (dagger(UT) @ theta_conjugate(A_R[::-1]) @ UT)
    return float(np.max(np.linalg.norm(A_F - mapped, ord=2, axis=(1, 2))))
