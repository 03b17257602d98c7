"""Two-point boundary value problems: initial velocity from boundary data.

Given the initial displacement ``x`` and either a terminal displacement ``z``
or a terminal velocity ``v`` at horizon ``t``, the initial velocity is read off
the gradient of the fundamental solution:

    w0_n = (lam_mu_n / m) (p_n(t) x_n + q_n(t) z_n).

Modes sitting on a conjugate point are left at zero and reported, so the
remaining modes stay usable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import BasisMismatchError, ConjugatePointError, HorizonError
from .long_horizon import ConcatenationPlan, first_segment_velocity, plan_concatenation, \
    singular_junction_modes, solve_intermediate_states
from .propagator import WaveState, semigroup_step
from .riccati import CONJUGATE_TOL, FundamentalSolution, ModeParams, concavity_horizon, delta_min, \
    eig_pqr_infty
from .spectral import BasisConfig, SpectralVector


@dataclass(frozen=True, eq=False)
class Displacement:
    z: SpectralVector


@dataclass(frozen=True, eq=False)
class Velocity:
    v: SpectralVector


Terminal = Union[Displacement, Velocity]


@dataclass(frozen=True, eq=False)
class TpbvpProblem:
    """Boundary data on ``[0, t]``.

    ``n_segments`` selects the direct closed form (1), a fixed concatenation
    (>= 2) or an automatically planned one (``None``).
    """

    cfg: BasisConfig
    t: float
    x0: SpectralVector
    terminal: Terminal
    mu: float = 0.0
    n_segments: int | None = 1
    delta: float | None = None  # exclusion radius near t = 0; default delta_min(cfg)

    def __post_init__(self):
        if not (0.0 <= self.mu <= 1.0):
            raise ValueError(f"mu must lie in [0, 1], got {self.mu}")
        if not self.t > 0:
            raise HorizonError("horizon must be positive")
        target = self.terminal.z if isinstance(self.terminal, Displacement) else self.terminal.v
        if self.x0.basis != self.cfg or target.basis != self.cfg:
            raise BasisMismatchError("boundary profiles must share the problem basis")
        if self.n_segments is not None and (int(self.n_segments) != self.n_segments or self.n_segments < 1):
            raise ValueError("n_segments must be a positive integer or None")

    @property
    def tbar(self) -> float:
        return concavity_horizon(self.mu, self.cfg.m, self.cfg.kappa)


@dataclass(frozen=True, eq=False)
class TpbvpSolution:
    w0: SpectralVector
    z_star: SpectralVector
    singular_modes: tuple[int, ...]
    condition: np.ndarray = field(repr=False)
    plan: ConcatenationPlan | None = None

    @property
    def ok(self) -> bool:
        return not self.singular_modes

    def raise_if_singular(self) -> "TpbvpSolution":
        if self.singular_modes:
            raise ConjugatePointError(self.singular_modes)
        return self


def _condition(cfg: BasisConfig, mu: float, t: float) -> np.ndarray:
    mp = ModeParams.build(cfg, mu)
    with np.errstate(divide="ignore"):
        return 1.0 / np.abs(np.sin(mp.omega * t))


def _limit_eigs(cfg: BasisConfig, mu: float, t: float, tol: float):
    """Limit eigenvalues with NaN-free zeros in singular modes, plus the singular mask."""
    mp = ModeParams.build(cfg, mu)
    s = np.sin(mp.omega * t)
    bad = np.abs(s) < tol
    safe = np.where(bad, 1.0, s)
    p = np.where(bad, 0.0, -np.cos(mp.omega * t) / safe / mp.alpha)
    q = np.where(bad, 0.0, 1.0 / (mp.alpha * safe))
    return p, q, mp, bad


def _check_short(prob: TpbvpProblem):
    d = delta_min(prob.cfg) if prob.delta is None else prob.delta
    if prob.t < d:
        raise HorizonError(f"horizon {prob.t} below the exclusion radius {d:.3g}")
    if prob.mu > 0 and prob.t >= prob.tbar:
        raise HorizonError(
            f"t = {prob.t} >= concavity horizon {prob.tbar:.6g}; use n_segments > 1 or None")


def solve_displacement(prob: TpbvpProblem, tol: float = CONJUGATE_TOL) -> TpbvpSolution:
    """Initial velocity steering ``x0`` to the terminal displacement ``z``."""
    if not isinstance(prob.terminal, Displacement):
        raise TypeError("solve_displacement needs a Displacement terminal")
    cfg, mu, t = prob.cfg, prob.mu, prob.t
    x, z = prob.x0, prob.terminal.z
    segments = prob.n_segments
    if segments is None:
        direct = (mu == 0.0 or t < prob.tbar)
        segments = 1 if direct else plan_concatenation(cfg, t, mu, tol=tol).n_t
    if segments == 1:
        _check_short(prob)
        p, q, mp, bad = _limit_eigs(cfg, mu, t, tol)
        w0 = mp.lam_mu / cfg.m * (p * x.coeffs + q * z.coeffs)
        return TpbvpSolution(SpectralVector(w0, cfg), z, tuple(int(n) for n in mp.n[bad]),
                             _condition(cfg, mu, t))
    plan = plan_concatenation(cfg, t, mu, n_t=segments, tol=tol)
    bad = singular_junction_modes(plan, tol)
    zeta = solve_intermediate_states(plan, x, z, tol, skip_singular=True)
    w0 = first_segment_velocity(plan, x, z, zeta).coeffs.copy()
    w0[bad - 1] = 0.0
    return TpbvpSolution(SpectralVector(w0, cfg), z, tuple(int(n) for n in bad),
                         _condition(cfg, mu, t), plan)


def _velocity_eigs(prob: TpbvpProblem, tol: float):
    if prob.n_segments not in (1, None):
        raise ValueError("velocity targets use the direct closed form (n_segments = 1)")
    _check_short(prob)
    p, q, mp, bad_sin = _limit_eigs(prob.cfg, prob.mu, prob.t, tol)
    bad_cos = np.abs(np.cos(mp.omega * prob.t)) < tol  # r_n = 0
    return p, q, mp, bad_sin | bad_cos


def terminal_displacement_for_velocity(prob: TpbvpProblem, tol: float = CONJUGATE_TOL):
    """Stationary terminal displacement ``z*`` for a velocity target, plus the singular mask.

    ``z*_n = -(q_n x_n + (m / lam_n) v_n) / r_n``; singular modes are set to 0.
    """
    if not isinstance(prob.terminal, Velocity):
        raise TypeError("needs a Velocity terminal")
    p, q, mp, bad = _velocity_eigs(prob, tol)
    r = np.where(bad, 1.0, p)
    z = -(q * prob.x0.coeffs + prob.cfg.m / mp.lam * prob.terminal.v.coeffs) / r
    z = np.where(bad, 0.0, z)
    return SpectralVector(z, prob.cfg), bad


def solve_velocity(prob: TpbvpProblem, tol: float = CONJUGATE_TOL) -> TpbvpSolution:
    """Initial velocity reaching the terminal velocity target (two-step path)."""
    z_star, bad = terminal_displacement_for_velocity(prob, tol)
    disp = TpbvpProblem(prob.cfg, prob.t, prob.x0, Displacement(z_star), prob.mu, 1, prob.delta)
    sol = solve_displacement(disp, tol)
    w0 = np.where(bad, 0.0, sol.w0.coeffs)
    modes = prob.cfg.modes[bad]
    return TpbvpSolution(SpectralVector(w0, prob.cfg), z_star, tuple(int(n) for n in modes),
                         sol.condition)


def velocity_one_shot(prob: TpbvpProblem, tol: float = CONJUGATE_TOL) -> SpectralVector:
    """``w0 = (lam_mu/m) [(p - q^2/r) x - (q/r)(m/lam) v]`` in one pass."""
    if not isinstance(prob.terminal, Velocity):
        raise TypeError("needs a Velocity terminal")
    p, q, mp, bad = _velocity_eigs(prob, tol)
    r = np.where(bad, 1.0, p)
    x, v = prob.x0.coeffs, prob.terminal.v.coeffs
    w0 = mp.lam_mu / prob.cfg.m * ((p - q * q / r) * x - (q / r) * (prob.cfg.m / mp.lam) * v)
    return SpectralVector(np.where(bad, 0.0, w0), prob.cfg)


def solve(prob: TpbvpProblem, tol: float = CONJUGATE_TOL) -> TpbvpSolution:
    if isinstance(prob.terminal, Velocity):
        return solve_velocity(prob, tol)
    return solve_displacement(prob, tol)


def optimal_feedback(fs: FundamentalSolution, s: float, x_now: SpectralVector, z_star: SpectralVector,
                     delta: float | None = None, tol: float = CONJUGATE_TOL) -> SpectralVector:
    """Optimal velocity at time ``s`` from the current state, for horizon ``fs.t``."""
    if not fs.is_limit:
        raise ValueError("feedback uses the infinite-weight fundamental solution")
    d = delta_min(fs.cfg) if delta is None else delta
    if s < 0 or s >= fs.t - d:
        raise HorizonError(f"feedback undefined at s = {s}; need 0 <= s < {fs.t - d:.6g}")
    p, q, _ = eig_pqr_infty(fs.cfg.modes, fs.t - s, fs.mu, fs.cfg, tol)
    lam_mu = fs.cfg.lambdas_mu(fs.mu)
    return SpectralVector(lam_mu / fs.cfg.m * (p * x_now.coeffs + q * z_star.coeffs), fs.cfg)


def closed_loop(fs: FundamentalSolution, x0: SpectralVector, z_star: SpectralVector,
                s_end: float, ratio: float = 0.01) -> SpectralVector:
    """RK4 integration of ``xi' = k(s, xi)`` from 0 to ``s_end``.

    Steps shrink with the remaining time ``t - s`` (the gain grows like
    ``1 / (t - s)``) and with the fastest mode period.  The gain is singular
    wherever ``omega_n (t - s)`` is a multiple of pi, so every mode must have
    ``omega_n t < pi``.
    """
    t = fs.t
    omega_max = float(np.max(ModeParams.build(fs.cfg, fs.mu).omega))
    if omega_max * t >= np.pi:
        raise HorizonError(
            f"feedback crosses a conjugate point: omega_N t = {omega_max * t:.4g} >= pi")
    xi = x0.coeffs.copy()
    z = z_star
    s = 0.0

    def k(time, state):
        return optimal_feedback(fs, time, SpectralVector(state, fs.cfg), z, delta=0.0).coeffs

    while s < s_end:
        h = min(ratio * (t - s), ratio / omega_max, s_end - s)
        if h <= 0:
            break
        k1 = k(s, xi)
        k2 = k(s + h / 2, xi + h / 2 * k1)
        k3 = k(s + h / 2, xi + h / 2 * k2)
        k4 = k(s + h, xi + h * k3)
        xi = xi + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        s += h
    return SpectralVector(xi, fs.cfg)


def closed_loop_terminal_state(fs: FundamentalSolution, x0: SpectralVector, z_star: SpectralVector,
                               margin: float | None = None) -> WaveState:
    """Closed-loop state at ``t``: integrate to ``t - margin``, then finish with the free oscillator."""
    gap = 10.0 * delta_min(fs.cfg) if margin is None else margin
    s1 = fs.t - gap
    xi = closed_loop(fs, x0, z_star, s1)
    w = optimal_feedback(fs, s1, xi, z_star, delta=0.0)
    state = WaveState.from_velocity(xi, w, fs.mu, s1)
    return semigroup_step(state, gap, fs.mu)


def open_loop_mode(x0: SpectralVector, w0: SpectralVector, s: float, mu: float = 0.0):
    """Free evolution ``(xi(s), xi'(s))`` per mode from ``(x0, w0)``."""
    cfg = x0.basis
    om = np.sqrt(cfg.kappa * cfg.lambdas_mu(mu) / cfg.m)
    c, sn = np.cos(om * s), np.sin(om * s)
    xi = x0.coeffs * c + w0.coeffs / om * sn
    vel = -x0.coeffs * om * sn + w0.coeffs * c
    return SpectralVector(xi, cfg), SpectralVector(vel, cfg)


__all__ = [
    "Displacement",
    "TpbvpProblem",
    "TpbvpSolution",
    "Velocity",
    "closed_loop",
    "closed_loop_terminal_state",
    "open_loop_mode",
    "optimal_feedback",
    "solve",
    "solve_displacement",
    "solve_velocity",
    "terminal_displacement_for_velocity",
    "velocity_one_shot",
]
