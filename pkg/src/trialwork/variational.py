"""Minimising the certified free-energy upper bound over families of trial protocols.

For any trial path, dF <= dF'(theta) - <V(T)>_{rho'(T)} + <V(0)>_{rho(0)}, so
every objective value is an upper bound on the true free-energy change.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.optimize import minimize as scipy_minimize

from .bounds import TrialPair, combine, v_averages
from .errors import DomainError
from .protocol import DrivingProtocol, random_protocol
from .work import free_energy_change


@dataclass(frozen=True, eq=False)
class TrialFamily:
    """Map from a parameter vector to a trial protocol, inside box ``bounds``."""

    true_protocol: DrivingProtocol
    build: Callable[[np.ndarray], DrivingProtocol]
    bounds: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.bounds, dtype=float)
        if b.ndim != 2 or b.shape[1] != 2 or np.any(b[:, 0] > b[:, 1]):
            raise DomainError("bounds must be a (k, 2) array of [low, high] rows")
        object.__setattr__(self, "bounds", b)

    @property
    def n_params(self) -> int:
        return self.bounds.shape[0]

    def check(self, theta) -> np.ndarray:
        th = np.asarray(theta, dtype=float)
        if th.shape != (self.n_params,):
            raise DomainError(f"expected {self.n_params} parameters, got shape {th.shape}")
        if np.any(th < self.bounds[:, 0]) or np.any(th > self.bounds[:, 1]):
            raise DomainError(f"theta {th} outside the box")
        return th

    def pair(self, theta) -> TrialPair:
        return TrialPair(self.true_protocol, self.build(self.check(theta)))


def linear_family(
    true: DrivingProtocol,
    directions: list[DrivingProtocol],
    optimum,
    bounds,
) -> TrialFamily:
    """H'(theta) = H + sum_i (theta_i - optimum_i) D_i; the true path sits at theta = optimum."""
    opt = np.asarray(optimum, dtype=float)
    if len(directions) != opt.size:
        raise DomainError("one optimum coordinate per direction")

    def build(theta):
        trial = true
        for d, c in zip(directions, theta - opt):
            trial = combine(trial, d, float(c))
        return trial

    return TrialFamily(true, build, np.asarray(bounds, dtype=float))


def default_family(true: DrivingProtocol, seed: int, optimum=(0.3, -0.2, 0.1), half_width: float = 1.0) -> TrialFamily:
    """Three directions: a Theta-even perturbation, a Theta-odd one, and a scalar ramp.

    The scalar ramp leaves the objective unchanged; it is kept so the family
    exercises the shift invariance of the bound.
    """
    d = random_protocol(true.dim, seed, smoothness=true.times.size, duration=true.duration)
    zeros = np.zeros_like(d.even)
    even_dir = d.with_nodes(odd=zeros)
    odd_dir = d.with_nodes(even=zeros)
    ramp = DrivingProtocol(
        np.array([0.0, true.duration]),
        np.stack([np.zeros((true.dim, true.dim)), np.eye(true.dim)]),
        np.zeros((2, true.dim, true.dim)),
    )
    opt = np.asarray(optimum, dtype=float)
    bounds = np.column_stack([opt - half_width, opt + half_width])
    return linear_family(true, [even_dir, odd_dir, ramp], opt, bounds)


def upper_bound_objective(family: TrialFamily, theta, beta: float, N: int | None = None) -> float:
    """dF'(theta) - vT(theta) + v0(theta); never below the true dF up to rounding.

    ``N`` is unused: the bound involves equilibrium quantities only.
    """
    pair = family.pair(theta)
    v0, vT = v_averages(pair, beta)
    return free_energy_change(pair.trial_protocol, beta) - vT + v0


@dataclass
class OptimizationTrace:
    iterates: list[tuple[np.ndarray, float]] = field(default_factory=list)
    best_theta: np.ndarray | None = None
    best_value: float = math.inf
    evaluations: int = 0
    converged: bool = False

    def record(self, theta: np.ndarray, value: float) -> None:
        self.iterates.append((theta.copy(), value))
        self.evaluations += 1
        if value < self.best_value:
            self.best_value = value
            self.best_theta = theta.copy()

    def best_so_far(self) -> np.ndarray:
        return np.minimum.accumulate([v for _, v in self.iterates])

    def write_csv(self, path) -> None:
        k = self.best_theta.size if self.best_theta is not None else 0
        with Path(path).open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["iteration", *[f"theta_{i}" for i in range(k)], "objective"])
            for i, (th, v) in enumerate(self.iterates):
                w.writerow([i, *map(repr, th.tolist()), repr(v)])

    def summary(self) -> dict:
        return {
            "best_theta": None if self.best_theta is None else self.best_theta.tolist(),
            "best_value": self.best_value,
            "evaluations": self.evaluations,
            "converged": self.converged,
        }

    def write_json(self, path, **extra) -> None:
        Path(path).write_text(json.dumps({**self.summary(), **extra}, indent=2, sort_keys=True))


class _BudgetExhausted(Exception):
    pass


def minimize(
    family: TrialFamily,
    beta: float,
    N: int | None = None,
    max_evals: int = 2000,
    tolerance: float = 1e-8,
    seed: int = 0,
    restarts: int = 3,
    restart_scale: float = 0.1,
) -> OptimizationTrace:
    """Nelder-Mead on the certified bound, restarted from the incumbent.

    The first run starts at the box centre. Each restart builds a fresh
    simplex around the best point, with edges of ``restart_scale`` times the
    box width along seeded random signs. ``converged`` means the last run met
    its simplex-size and value tolerances inside the evaluation budget.
    """
    if max_evals < 1 or tolerance <= 0 or restarts < 0:
        raise DomainError("max_evals >= 1, tolerance > 0 and restarts >= 0 are required")
    rng = np.random.default_rng(seed)
    lo, hi = family.bounds[:, 0], family.bounds[:, 1]
    width = np.where(hi > lo, hi - lo, 1.0)
    k = family.n_params
    trace = OptimizationTrace()

    def f(x):
        if trace.evaluations >= max_evals:
            raise _BudgetExhausted
        th = np.clip(np.asarray(x, dtype=float), lo, hi)
        value = upper_bound_objective(family, th, beta, N)
        trace.record(th, value)
        return value

    x0 = 0.5 * (lo + hi)
    simplex = None
    for run in range(restarts + 1):
        if run > 0:
            x0 = trace.best_theta
            signs = rng.choice([-1.0, 1.0], size=k)
            steps = np.diag(signs * restart_scale * width)
            simplex = np.clip(np.vstack([x0, x0 + steps]), lo, hi)
        opts = {"xatol": tolerance, "fatol": tolerance * 1e-2, "maxfev": max_evals, "initial_simplex": simplex}
        try:
            res = scipy_minimize(f, x0, method="Nelder-Mead", bounds=list(zip(lo, hi)), options=opts)
        except _BudgetExhausted:
            trace.converged = False
            break
        trace.converged = bool(res.success)
        if trace.evaluations >= max_evals:
            break
    return trace


def grid_scan(family: TrialFamily, beta: float, points: int = 1001, N: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Objective on a uniform grid, for one-parameter families."""
    if family.n_params != 1:
        raise DomainError("grid_scan needs a one-parameter family")
    xs = np.linspace(family.bounds[0, 0], family.bounds[0, 1], points)
    return xs, np.array([upper_bound_objective(family, [x], beta, N) for x in xs])
