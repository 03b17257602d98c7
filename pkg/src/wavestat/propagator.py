"""Forward evolution of the exact and perturbed wave Cauchy problems.

States are pairs ``(xi, pi)``: the displacement and the scaled momentum
costate ``pi = m I_mu^{-1/2} w`` (``w`` the physical velocity), both stored as
energy-basis coefficients.  Per mode the generator is

    xi' = (s_n / m) pi,    pi' = -kappa lam_n s_n xi,    s_n = (1 + mu^2 lam_n)^{-1/2},

an exact rotation at frequency ``omega_n^mu``; nothing here is time-stepped
except the finite-difference oracle at the bottom.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import CFLError
from .spectral import BasisConfig, SpectralVector


def _scale(cfg: BasisConfig, mu: float) -> np.ndarray:
    return 1.0 / np.sqrt(1.0 + mu * mu * cfg.lambdas)


def _omega(cfg: BasisConfig, mu: float) -> np.ndarray:
    return np.sqrt(cfg.kappa * cfg.lambdas_mu(mu) / cfg.m)


@dataclass(frozen=True, eq=False)
class WaveState:
    xi: SpectralVector
    pi: SpectralVector
    s: float = 0.0

    @property
    def basis(self) -> BasisConfig:
        return self.xi.basis

    @classmethod
    def from_velocity(cls, x: SpectralVector, w: SpectralVector, mu: float = 0.0, s: float = 0.0) -> "WaveState":
        """Build the state from displacement and physical velocity coefficients."""
        cfg = x.basis
        pi = cfg.m * w.coeffs / _scale(cfg, mu)
        return cls(x, SpectralVector(pi, cfg), s)

    def velocity(self, mu: float = 0.0) -> SpectralVector:
        """Physical velocity ``w = I_mu^{1/2} pi / m``."""
        cfg = self.basis
        return SpectralVector(_scale(cfg, mu) * self.pi.coeffs / cfg.m, cfg)

    def momentum_l2(self) -> np.ndarray:
        """L2-basis coefficients of the costate, ``pi_n / sqrt(lam_n)``."""
        return self.pi.coeffs / np.sqrt(self.basis.lambdas)

    def energy(self) -> float:
        """``(kappa/2) sum xi_n^2 + (1/2m) sum pi_hat_n^2``; conserved for every mu."""
        cfg = self.basis
        return float(0.5 * cfg.kappa * np.sum(self.xi.coeffs**2)
                     + 0.5 / cfg.m * np.sum(self.momentum_l2() ** 2))

    def oplus_norm(self) -> float:
        """``(m ||xi||_{1/2}^2 + (1/kappa) ||pi||_{L2}^2)^{1/2}``."""
        cfg = self.basis
        return math.sqrt(cfg.m * np.sum(self.xi.coeffs**2) + np.sum(self.momentum_l2() ** 2) / cfg.kappa)

    def __sub__(self, other: "WaveState") -> "WaveState":
        return WaveState(self.xi - other.xi, self.pi - other.pi, self.s)


def semigroup_step(state: WaveState, dt: float, mu: float = 0.0) -> WaveState:
    """Advance by ``dt`` with the exact (mu = 0) or perturbed (mu > 0) semigroup."""
    if dt < 0:
        raise ValueError("dt must be >= 0")
    cfg = state.basis
    sc = _scale(cfg, mu)
    om = _omega(cfg, mu)
    c, s = np.cos(om * dt), np.sin(om * dt)
    xi, pi = state.xi.coeffs, state.pi.coeffs
    gain = sc / (cfg.m * om)  # xi-per-pi over one radian
    new_xi = c * xi + gain * s * pi
    new_pi = c * pi - s * xi / gain
    return WaveState(SpectralVector(new_xi, cfg), SpectralVector(new_pi, cfg), state.s + dt)


def propagate_profile(x0: SpectralVector, v0: SpectralVector, t: float, mu: float = 0.0,
                      n_snapshots: int = 2) -> list[WaveState]:
    """States at ``n_snapshots`` uniform times on ``[0, t]`` from displacement and velocity."""
    if t < 0:
        raise ValueError("t must be >= 0")
    if n_snapshots < 1:
        raise ValueError("need at least one snapshot")
    start = WaveState.from_velocity(x0, v0, mu)
    times = np.linspace(0.0, t, n_snapshots) if n_snapshots > 1 else np.array([t])
    return [semigroup_step(start, float(s), mu) for s in times]


@dataclass(frozen=True)
class GapTable:
    mu: tuple[float, ...]
    gap: tuple[float, ...]

    def fitted_order(self) -> float:
        """Least-squares slope of ``log gap`` against ``log mu`` (positive mu only)."""
        mu = np.asarray(self.mu)
        gap = np.asarray(self.gap)
        keep = (mu > 0) & (gap > 0)
        if keep.sum() < 2:
            raise ValueError("need at least two positive entries to fit an order")
        return float(np.polyfit(np.log(mu[keep]), np.log(gap[keep]), 1)[0])

    def to_csv(self) -> str:
        lines = ["mu,gap"] + [f"{m!r},{g!r}" for m, g in zip(self.mu, self.gap)]
        return "\n".join(lines) + "\n"


def trotter_kato_gap(y0: WaveState, t: float, mu_sequence: Sequence[float]) -> GapTable:
    """``||T_mu(t) y0 - T(t) y0||_oplus`` for each mu (a 0 entry gives 0)."""
    exact = semigroup_step(y0, t, 0.0)
    gaps = [(semigroup_step(y0, t, float(mu)) - exact).oplus_norm() for mu in mu_sequence]
    return GapTable(tuple(float(m) for m in mu_sequence), tuple(gaps))


def fd_oracle(x0_samples, v0_samples, t: float, n_space: int, n_time: int, cfg: BasisConfig) -> np.ndarray:
    """Leapfrog solution of ``u_tt = (kappa/m) u_xx`` with Dirichlet ends.

    Samples live on the ``n_space + 1`` uniform nodes of ``[0, L]``; returns
    the displacement at time ``t`` after ``n_time`` steps.  Second order in
    space and time; the first step uses the Taylor start
    ``u1 = u0 + dt v0 + (dt^2/2) c^2 u0_xx``.
    """
    u0 = np.asarray(x0_samples, dtype=float)
    v0 = np.asarray(v0_samples, dtype=float)
    if u0.shape != (n_space + 1,) or v0.shape != (n_space + 1,):
        raise ValueError(f"samples must have length n_space + 1 = {n_space + 1}")
    if n_space < 2 or n_time < 1:
        raise ValueError("need n_space >= 2 and n_time >= 1")
    dx = cfg.L / n_space
    dt = t / n_time
    c = cfg.wave_speed
    if dt > dx / c * (1 + 1e-12):
        raise CFLError(f"dt = {dt:.3e} exceeds dx / c = {dx / c:.3e}")
    r2 = (c * dt / dx) ** 2

    def lap(u):
        out = np.zeros_like(u)
        out[1:-1] = u[2:] - 2.0 * u[1:-1] + u[:-2]
        return out

    prev = u0.copy()
    prev[[0, -1]] = 0.0
    cur = prev + dt * v0 + 0.5 * r2 * lap(prev)
    cur[[0, -1]] = 0.0
    for _ in range(n_time - 1):
        nxt = 2.0 * cur - prev + r2 * lap(cur)
        nxt[[0, -1]] = 0.0
        prev, cur = cur, nxt
    return cur


__all__ = [
    "GapTable",
    "WaveState",
    "fd_oracle",
    "propagate_profile",
    "semigroup_step",
    "trotter_kato_gap",
]
