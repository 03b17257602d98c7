"""Action payoff of the perturbed control problem, evaluated exactly.

Inputs are piecewise constant in time, so the trajectory ``xi(s) = x + int w``
is piecewise linear and every step of the running payoff integrates in closed
form.  This module is a falsification harness for the closed-form value
function: it never maximises anything itself.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .riccati import concavity_horizon
from .spectral import BasisConfig, SpectralVector, make_operator


@dataclass(frozen=True, eq=False)
class PiecewiseConstantInput:
    """Velocity input ``w(s) = steps[k]`` on ``[k dt, (k+1) dt)``."""

    steps: np.ndarray
    dt: float
    basis: BasisConfig

    def __post_init__(self):
        arr = np.array(self.steps, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != self.basis.N:
            raise ValueError(f"steps must have shape (K, {self.basis.N}), got {arr.shape}")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        arr.setflags(write=False)
        object.__setattr__(self, "steps", arr)

    @classmethod
    def from_vectors(cls, vectors: Sequence[SpectralVector], dt: float) -> "PiecewiseConstantInput":
        return cls(np.stack([v.coeffs for v in vectors]), dt, vectors[0].basis)

    @property
    def K(self) -> int:
        return self.steps.shape[0]

    @property
    def duration(self) -> float:
        return self.K * self.dt

    def __add__(self, other: "PiecewiseConstantInput") -> "PiecewiseConstantInput":
        self._check(other)
        return PiecewiseConstantInput(self.steps + other.steps, self.dt, self.basis)

    def __sub__(self, other: "PiecewiseConstantInput") -> "PiecewiseConstantInput":
        self._check(other)
        return PiecewiseConstantInput(self.steps - other.steps, self.dt, self.basis)

    def __mul__(self, scalar: float) -> "PiecewiseConstantInput":
        return PiecewiseConstantInput(self.steps * float(scalar), self.dt, self.basis)

    __rmul__ = __mul__

    def _check(self, other):
        if other.steps.shape != self.steps.shape or other.dt != self.dt or other.basis != self.basis:
            raise ValueError("inputs must share step count, step size and basis")

    def refine(self, factor: int = 2) -> "PiecewiseConstantInput":
        """Split every step into ``factor`` equal sub-steps (same function)."""
        return PiecewiseConstantInput(np.repeat(self.steps, factor, axis=0), self.dt / factor, self.basis)

    def norm_sq(self) -> float:
        """``int_0^t ||w(s)||_{1/2}^2 ds``."""
        return float(self.dt * np.sum(self.steps**2))

    def trajectory(self, x0: SpectralVector) -> np.ndarray:
        """States at the K+1 step boundaries, shape ``(K+1, N)``."""
        out = np.empty((self.K + 1, self.basis.N))
        out[0] = x0.coeffs
        out[1:] = x0.coeffs + self.dt * np.cumsum(self.steps, axis=0)
        return out


@dataclass(frozen=True)
class ZeroPayoff:
    def __call__(self, xi: np.ndarray, cfg: BasisConfig, mu: float) -> float:
        return 0.0


@dataclass(frozen=True, eq=False)
class QuadraticPayoff:
    """``-(c/2) ||K_mu (xi - z)||_{1/2}^2``."""

    c: float
    z: SpectralVector

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError("penalty weight c must be positive")

    def __call__(self, xi: np.ndarray, cfg: BasisConfig, mu: float) -> float:
        k2 = make_operator("M_mu", mu, cfg).eigvals  # K_mu^2 = M_mu
        d = xi - self.z.coeffs
        return float(-0.5 * self.c * np.dot(k2, d * d))


@dataclass(frozen=True, eq=False)
class LinearVelocityPayoff:
    """``m <J J v, xi>_{1/2}``: selects terminal velocity ``v`` at stationarity."""

    v: SpectralVector

    def __call__(self, xi: np.ndarray, cfg: BasisConfig, mu: float) -> float:
        return float(cfg.m * np.dot(self.v.coeffs / cfg.lambdas, xi))


TerminalPayoff = Union[ZeroPayoff, QuadraticPayoff, LinearVelocityPayoff]


@dataclass(frozen=True, eq=False)
class PayoffSpec:
    cfg: BasisConfig
    mu: float
    t: float
    terminal: TerminalPayoff = ZeroPayoff()

    def __post_init__(self):
        if self.mu < 0:
            raise ValueError("mu must be >= 0")
        if not self.t > 0:
            raise ValueError("horizon must be positive")


def energy_split(x: SpectralVector, w: SpectralVector, mu: float, m: float, kappa: float):
    """Potential ``V`` of displacement ``x`` and perturbed kinetic energy of velocity ``w``."""
    if x.basis != w.basis:
        raise ValueError("x and w must share a basis")
    lam = x.basis.lambdas
    V = 0.5 * kappa * float(np.dot(x.coeffs, x.coeffs))
    T = 0.5 * m * float(np.dot(1.0 / lam + mu * mu, w.coeffs**2))
    return V, T


def evaluate_payoff(spec: PayoffSpec, x0: SpectralVector, w: PiecewiseConstantInput) -> float:
    """Exact action payoff: running (potential - kinetic) plus terminal payoff."""
    cfg = spec.cfg
    if abs(w.duration - spec.t) > 1e-12 * max(1.0, spec.t):
        raise ValueError(f"input lasts {w.duration}, horizon is {spec.t}")
    if w.basis != cfg or x0.basis != cfg:
        raise ValueError("input, initial state and spec must share a basis")
    dt = w.dt
    xi = w.trajectory(x0)
    start, v = xi[:-1], w.steps
    # int_0^dt ||a + s v||^2 ds = dt|a|^2 + dt^2 <a,v> + dt^3/3 |v|^2
    potential = np.sum(dt * start**2 + dt**2 * start * v + dt**3 / 3.0 * v**2)
    weight = 1.0 / cfg.lambdas + spec.mu**2
    kinetic = dt * np.sum(weight * v**2)
    running = 0.5 * cfg.kappa * potential - 0.5 * cfg.m * kinetic
    return float(running + spec.terminal(xi[-1], cfg, spec.mu))


def second_difference(spec: PayoffSpec, x0: SpectralVector, w_star: PiecewiseConstantInput,
                      w_tilde: PiecewiseConstantInput, delta: float) -> float:
    """``J(w* + d w~) - 2 J(w*) + J(w* - d w~)``."""
    if delta == 0:
        raise ValueError("delta must be nonzero")
    step = w_tilde * delta
    return (evaluate_payoff(spec, x0, w_star + step)
            - 2.0 * evaluate_payoff(spec, x0, w_star)
            + evaluate_payoff(spec, x0, w_star - step))


def second_difference_bound(spec: PayoffSpec, w_tilde: PiecewiseConstantInput, delta: float) -> float:
    """Upper bound ``-delta^2 (m mu^2 - kappa t^2 / 2) ||w~||^2`` on the second difference."""
    cfg = spec.cfg
    return -delta**2 * (cfg.m * spec.mu**2 - 0.5 * cfg.kappa * spec.t**2) * w_tilde.norm_sq()


def concave_horizon(mu: float, m: float, kappa: float) -> float:
    return concavity_horizon(mu, m, kappa)


__all__ = [
    "LinearVelocityPayoff",
    "PayoffSpec",
    "PiecewiseConstantInput",
    "QuadraticPayoff",
    "ZeroPayoff",
    "concave_horizon",
    "energy_split",
    "evaluate_payoff",
    "second_difference",
    "second_difference_bound",
]
