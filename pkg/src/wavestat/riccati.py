"""Closed-form fundamental solution of the perturbed stationary-action problem.

The value of the control problem with terminal penalty weight ``c`` is the
bi-quadratic form

    W(t, x, z) = 1/2 <x, P(t) x> + <x, Q(t) z> + 1/2 <z, R(t) z>

where P, Q, R are diagonal in the energy basis.  Each mode obeys the scalar
Riccati system

    p' = kappa + (lam_mu / m) p^2,   q' = (lam_mu / m) p q,   r' = (lam_mu / m) q^2,

started from ``(-c m_n, +c m_n, -c m_n)``.  With the terminal weight chosen as
``m_n = lam_mu^{-1/2}`` the solutions are cotangent/cosecant arcs in the
phase ``omega_n t + arctan(sqrt(m kappa) / c)``; letting ``c -> inf`` gives the
hard terminal constraint (the fundamental solution proper).
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConjugatePointError, HorizonError, PenaltyTooSmallError
from .spectral import BasisConfig, SpectralVector, make_operator

CONJUGATE_TOL = 1e-9
DELTA_MIN_FRAC = 1e-6


def cbar(m: float, kappa: float) -> float:
    """Smallest admissible terminal weight, ``sqrt(m kappa) tan(sqrt 2)``."""
    if m <= 0 or kappa <= 0:
        raise ValueError("m and kappa must be positive")
    return math.sqrt(m * kappa) * math.tan(math.sqrt(2.0))


def concavity_horizon(mu: float, m: float, kappa: float) -> float:
    """``mu * sqrt(2 m / kappa)``: horizon below which the payoff is strictly concave."""
    if mu < 0:
        raise ValueError("mu must be >= 0")
    return mu * math.sqrt(2.0 * m / kappa)


def delta_min(cfg: BasisConfig) -> float:
    """Default exclusion radius near ``t = 0`` for the infinite-weight limit."""
    return DELTA_MIN_FRAC * cfg.L / cfg.wave_speed


@dataclass(frozen=True)
class ModeParams:
    """Per-mode constants for a given perturbation ``mu`` (arrays over n)."""

    n: np.ndarray
    lam: np.ndarray
    lam_mu: np.ndarray
    alpha: np.ndarray
    omega: np.ndarray
    m_eig: np.ndarray

    @classmethod
    def build(cls, cfg: BasisConfig, mu: float, n=None) -> "ModeParams":
        if mu < 0:
            raise ValueError("mu must be >= 0")
        n_arr = cfg.modes if n is None else np.atleast_1d(np.asarray(n, dtype=int))
        if np.any(n_arr < 1):
            raise ValueError("mode index must be >= 1")
        lam = (n_arr * np.pi / cfg.L) ** 2
        lam_mu = lam / (1.0 + mu * mu * lam)
        alpha = np.sqrt(lam_mu / (cfg.m * cfg.kappa))
        omega = np.sqrt(cfg.kappa * lam_mu / cfg.m)
        return cls(n_arr, lam, lam_mu, alpha, omega, 1.0 / np.sqrt(lam_mu))

    def theta(self, c: float, m_eig=None) -> np.ndarray:
        """Phase offset ``arctan(1 / (alpha m_n c))``."""
        m_eig = self.m_eig if m_eig is None else np.asarray(m_eig, dtype=float)
        return np.arctan(1.0 / (self.alpha * m_eig * c))


def _scalarize(arrs, scalar):
    return tuple(float(a[0]) for a in arrs) if scalar else arrs


def eig_pqr_finite(n, t: float, mu: float, c: float, cfg: BasisConfig, m_eig=None, check=True):
    """Eigenvalues ``(p_n, q_n, r_n)`` at time ``t`` for terminal weight ``c``.

    ``m_eig`` overrides the terminal-weight eigenvalues (general formulas);
    validity is only certified for the default choice ``lam_mu^{-1/2}``.
    """
    scalar = np.ndim(n) == 0
    if check:
        if not (0.0 < mu <= 1.0):
            raise HorizonError(f"finite-weight formulas need mu in (0, 1], got {mu}")
        cb = cbar(cfg.m, cfg.kappa)
        if not c > cb:
            raise PenaltyTooSmallError(f"c = {c} must exceed c_bar = {cb:.6g}")
        tbar = concavity_horizon(mu, cfg.m, cfg.kappa)
        if not (0.0 <= t < tbar):
            raise HorizonError(f"t = {t} outside [0, {tbar:.6g})")
    mp = ModeParams.build(cfg, mu, n)
    m_eig = mp.m_eig if m_eig is None else np.broadcast_to(np.asarray(m_eig, float), mp.n.shape)
    g = 1.0 / (mp.alpha * m_eig * c)
    phase = mp.omega * t + np.arctan(g)
    cot = np.cos(phase) / np.sin(phase)
    p = -cot / mp.alpha
    q = np.sqrt(1.0 / (1.0 + g * g)) / (mp.alpha * np.sin(phase))
    r = -(1.0 / (1.0 + g * g)) * (g + cot) / mp.alpha
    return _scalarize((p, q, r), scalar)


def eig_pqr_infty(n, t: float, mu: float, cfg: BasisConfig, tol: float = CONJUGATE_TOL):
    """Limit eigenvalues ``p = r = -cot(omega t)/alpha``, ``q = 1/(alpha sin(omega t))``.

    Raises ``ConjugatePointError`` naming every mode with ``|sin(omega_n t)| < tol``.
    """
    scalar = np.ndim(n) == 0
    if t <= 0:
        raise HorizonError(f"limit eigenvalues need t > 0, got {t}")
    mp = ModeParams.build(cfg, mu, n)
    s = np.sin(mp.omega * t)
    bad = np.abs(s) < tol
    if np.any(bad):
        raise ConjugatePointError(mp.n[bad])
    cot = np.cos(mp.omega * t) / s
    p = -cot / mp.alpha
    q = 1.0 / (mp.alpha * s)
    return _scalarize((p, q, p.copy()), scalar)


def limit_eigs_masked(t: float, mu: float, cfg: BasisConfig, tol: float = CONJUGATE_TOL):
    """Like :func:`eig_pqr_infty` over all modes, but returns NaN plus a mask for singular modes."""
    mp = ModeParams.build(cfg, mu)
    s = np.sin(mp.omega * t)
    singular = np.abs(s) < tol
    with np.errstate(divide="ignore", invalid="ignore"):
        safe = np.where(singular, np.nan, s)
        cot = np.cos(mp.omega * t) / safe
        p = -cot / mp.alpha
        q = 1.0 / (mp.alpha * safe)
    return p, q, p.copy(), singular


@dataclass(frozen=True, eq=False)
class FundamentalSolution:
    """Eigenvalue trajectories evaluated at one horizon ``t``.

    ``c = math.inf`` selects the hard-constraint limit.
    """

    cfg: BasisConfig
    mu: float
    c: float
    t: float
    p: np.ndarray
    q: np.ndarray
    r: np.ndarray

    @property
    def is_limit(self) -> bool:
        return math.isinf(self.c)

    def at(self, t: float) -> "FundamentalSolution":
        return fundamental_solution(self.cfg, self.mu, t, self.c)

    def W(self, x: SpectralVector, z: SpectralVector) -> float:
        return eval_W(self, x, z)

    def gradient_x(self, x: SpectralVector, z: SpectralVector) -> SpectralVector:
        """Energy-space gradient ``P x + Q z`` of ``W`` in its first argument."""
        return SpectralVector(self.p * x.coeffs + self.q * z.coeffs, self.cfg)

    def eigen_table_csv(self) -> str:
        """Per-mode dump with columns ``n, lambda, alpha, omega, p, q, r``."""
        mp = ModeParams.build(self.cfg, self.mu)
        buf = io.StringIO()
        buf.write("n,lambda,alpha,omega,p,q,r\n")
        for row in zip(mp.n, mp.lam, mp.alpha, mp.omega, self.p, self.q, self.r):
            buf.write(f"{int(row[0])}," + ",".join(repr(float(v)) for v in row[1:]) + "\n")
        return buf.getvalue()


def fundamental_solution(cfg: BasisConfig, mu: float, t: float, c: float = math.inf,
                         tol: float = CONJUGATE_TOL, delta: float | None = None) -> FundamentalSolution:
    """Evaluate all N modes of P, Q, R at horizon ``t``.

    For the limit (``c = inf``) the horizon must satisfy ``t >= delta``
    (default :func:`delta_min`) and avoid conjugate points.
    """
    n = cfg.modes
    if math.isinf(c):
        d = delta_min(cfg) if delta is None else delta
        if t < d:
            raise HorizonError(f"limit solution needs t >= {d:.3g}, got {t}")
        p, q, r = eig_pqr_infty(n, t, mu, cfg, tol)
    else:
        p, q, r = eig_pqr_finite(n, t, mu, c, cfg)
    return FundamentalSolution(cfg, mu, c, t, p, q, r)


def eval_W(fs: FundamentalSolution, x: SpectralVector, z: SpectralVector) -> float:
    if x.basis != fs.cfg or z.basis != fs.cfg:
        raise ValueError("vectors must share the solution's basis")
    a, b = x.coeffs, z.coeffs
    return float(0.5 * np.dot(fs.p, a * a) + np.dot(fs.q, a * b) + 0.5 * np.dot(fs.r, b * b))


def terminal_penalty(x: SpectralVector, z: SpectralVector, mu: float, c: float) -> float:
    """``-(c/2) ||K_mu (x - z)||_{1/2}^2``."""
    K = make_operator("K_mu", mu, x.basis)
    d = K(x - z)
    return -0.5 * c * d.inner(d)


def riccati_rhs(p, q, lam_mu, cfg: BasisConfig):
    """Right-hand sides ``(p', q', r')`` of the scalar Riccati system."""
    k = lam_mu / cfg.m
    return cfg.kappa + k * p * p, k * p * q, k * q * q


def riccati_residual(n, t: float, mu: float, c: float, cfg: BasisConfig, h: float,
                     eig_fn=None):
    """Centred-difference residuals of the Riccati system for one mode.

    ``eig_fn(n, t, mu, c, cfg) -> (p, q, r)`` defaults to :func:`eig_pqr_finite`;
    the hook lets validation inject a corrupted table.
    """
    if eig_fn is None:
        eig_fn = eig_pqr_finite
    tbar = concavity_horizon(mu, cfg.m, cfg.kappa)
    if not (0.0 <= t - h and t + h < tbar):
        raise HorizonError(f"t +/- h = [{t - h}, {t + h}] leaves [0, {tbar:.6g})")
    p0, q0, _ = eig_fn(n, t, mu, c, cfg)
    pp, qp, rp = eig_fn(n, t + h, mu, c, cfg)
    pm, qm, rm = eig_fn(n, t - h, mu, c, cfg)
    lam_mu = ModeParams.build(cfg, mu, n).lam_mu
    if np.ndim(n) == 0:
        lam_mu = float(lam_mu[0])
    dp, dq, dr = riccati_rhs(p0, q0, lam_mu, cfg)
    return (
        (pp - pm) / (2 * h) - dp,
        (qp - qm) / (2 * h) - dq,
        (rp - rm) / (2 * h) - dr,
    )


def verification_hamiltonian(x: SpectralVector, p: SpectralVector, mu: float) -> float:
    """``(kappa/2) ||x||^2 + (1/2m) ||I_mu^{1/2} A^{1/2} p||^2`` in energy coordinates."""
    cfg = x.basis
    lam_mu = cfg.lambdas_mu(mu)
    return float(0.5 * cfg.kappa * np.dot(x.coeffs, x.coeffs)
                 + 0.5 / cfg.m * np.dot(lam_mu, p.coeffs**2))


__all__ = [
    "CONJUGATE_TOL",
    "FundamentalSolution",
    "ModeParams",
    "cbar",
    "concavity_horizon",
    "delta_min",
    "eig_pqr_finite",
    "eig_pqr_infty",
    "eval_W",
    "fundamental_solution",
    "limit_eigs_masked",
    "riccati_residual",
    "riccati_rhs",
    "terminal_penalty",
    "verification_hamiltonian",
]
