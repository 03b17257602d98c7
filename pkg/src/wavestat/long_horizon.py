"""Long horizons by concatenating short-horizon fundamental solutions.

The horizon ``t`` is cut into ``n_t`` segments of length ``tau``.  The value
is the stationary value over the interior junction states of

    Theta(x, zeta, z) = sum_k W_inf(tau, zeta_{k-1}, zeta_k),  zeta_0 = x, zeta_{n_t} = z.

Since every block is diagonal in the shared basis, stationarity splits into N
independent scalar tridiagonal systems

    d_n zeta_{j} + e_n (zeta_{j-1} + zeta_{j+1}) = 0,
    d_n = p_n(tau) + r_n(tau),   e_n = q_n(tau),

which are solved by the Thomas algorithm, vectorised across modes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from .errors import ConjugatePointError, HorizonError
from .riccati import CONJUGATE_TOL, ModeParams, concavity_horizon, eig_pqr_infty
from .spectral import BasisConfig, SpectralVector

MAX_SEGMENTS = 10**6
PIVOT_RTOL = 1e-8


@dataclass(frozen=True)
class ConcatenationPlan:
    cfg: BasisConfig
    t: float
    n_t: int
    mu: float = 0.0

    def __post_init__(self):
        if not self.t > 0:
            raise ValueError("horizon must be positive")
        if int(self.n_t) != self.n_t or self.n_t < 1:
            raise ValueError("segment count must be an integer >= 1")

    @property
    def tau(self) -> float:
        return self.t / self.n_t

    def segment_eigs(self):
        """``(p, q, r)`` of the limit solution over one segment, all modes."""
        return eig_pqr_infty(self.cfg.modes, self.tau, self.mu, self.cfg)

    def problems(self, tol: float = CONJUGATE_TOL) -> list[str]:
        """Reasons the plan is inadmissible (empty when usable)."""
        issues = []
        if self.mu > 0:
            tbar = concavity_horizon(self.mu, self.cfg.m, self.cfg.kappa)
            if self.tau >= tbar:
                issues.append(f"segment {self.tau:.6g} >= concavity horizon {tbar:.6g}")
        mp = ModeParams.build(self.cfg, self.mu)
        s = np.abs(np.sin(mp.omega * self.tau))
        if np.any(s <= tol):
            bad = mp.n[s <= tol]
            issues.append(f"segment conjugate point at modes {bad[:10].tolist()}")
        return issues


def plan_concatenation(cfg: BasisConfig, t: float, mu: float = 0.0, n_t: int | None = None,
                       tol: float = CONJUGATE_TOL, cap: int = MAX_SEGMENTS) -> ConcatenationPlan:
    """Validate a segment count, or find the smallest admissible one.

    The search starts at 2 (or the first count with ``tau`` below the
    concavity horizon when ``mu > 0``) and increments until every mode clears
    its segment conjugate points.
    """
    if n_t is not None:
        plan = ConcatenationPlan(cfg, t, n_t, mu)
        issues = plan.problems(tol)
        if issues:
            raise HorizonError(f"n_t = {n_t} inadmissible: " + "; ".join(issues))
        return plan
    start = 2
    if mu > 0:
        tbar = concavity_horizon(mu, cfg.m, cfg.kappa)
        start = max(start, math.floor(t / tbar) + 1)
    for k in range(start, cap + 1):
        plan = ConcatenationPlan(cfg, t, k, mu)
        if not plan.problems(tol):
            return plan
    raise HorizonError(f"no admissible segment count up to {cap}")


def thomas_solve(lower, diag, upper, rhs, pivot_rtol: float = PIVOT_RTOL):
    """Solve tridiagonal systems column-wise.

    All arguments have shape ``(k, N)``: ``k`` unknowns per system and ``N``
    independent systems.  ``lower[0]`` and ``upper[-1]`` are ignored.  Columns
    whose elimination meets a pivot smaller than ``pivot_rtol`` times the
    column's largest entry are re-solved with partial pivoting.
    Returns ``(solution, min_relative_pivot)``.
    """
    a = np.asarray(lower, dtype=float)
    b = np.array(diag, dtype=float)
    c = np.asarray(upper, dtype=float)
    d = np.array(rhs, dtype=float)
    k = b.shape[0]
    scale = np.maximum(np.max(np.abs(b), axis=0), np.max(np.abs(c), axis=0))
    scale = np.where(scale == 0, 1.0, scale)
    piv = np.abs(b[0]) / scale
    with np.errstate(divide="ignore", invalid="ignore"):
        for i in range(1, k):
            w = a[i] / b[i - 1]
            b[i] = b[i] - w * c[i - 1]
            d[i] = d[i] - w * d[i - 1]
            piv = np.minimum(piv, np.abs(b[i]) / scale)
        x = np.empty_like(d)
        x[-1] = d[-1] / b[-1]
        for i in range(k - 2, -1, -1):
            x[i] = (d[i] - c[i] * x[i + 1]) / b[i]
    for col in np.flatnonzero(~(piv > pivot_rtol)):
        ab = np.zeros((3, k))
        ab[0, 1:] = np.asarray(upper, dtype=float)[:-1, col]
        ab[1] = np.asarray(diag, dtype=float)[:, col]
        ab[2, :-1] = a[1:, col]
        x[:, col] = solve_banded((1, 1), ab, np.asarray(rhs, dtype=float)[:, col])
    return x, piv


def singular_junction_modes(plan: ConcatenationPlan, tol: float = CONJUGATE_TOL) -> np.ndarray:
    """Modes whose junction system is singular: its determinant is proportional to ``sin(omega_n t)``."""
    mp = ModeParams.build(plan.cfg, plan.mu)
    return mp.n[np.abs(np.sin(mp.omega * plan.t)) < tol]


def _tridiagonal(plan: ConcatenationPlan, tol: float, skip_singular: bool):
    bad = singular_junction_modes(plan, tol)
    if bad.size and not skip_singular:
        raise ConjugatePointError(bad, what="junction system determinant sin(omega_n t)")
    p, q, r = plan.segment_eigs()
    d, e = p + r, q.copy()
    # decouple skipped modes: identity rows give zero junction states
    d[bad - 1] = 1.0
    e[bad - 1] = 0.0
    return d, e


def solve_intermediate_states(plan: ConcatenationPlan, x: SpectralVector, z: SpectralVector,
                              tol: float = CONJUGATE_TOL, skip_singular: bool = False) -> list[SpectralVector]:
    """Interior junction states ``zeta_1 .. zeta_{n_t - 1}`` at the stationary point.

    Singular modes raise ``ConjugatePointError`` unless ``skip_singular``, in
    which case their junction coefficients are set to zero.
    """
    k = plan.n_t - 1
    if k == 0:
        return []
    d, e = _tridiagonal(plan, tol, skip_singular)
    N = plan.cfg.N
    rhs = np.zeros((k, N))
    rhs[0] -= e * x.coeffs
    rhs[-1] -= e * z.coeffs
    diag = np.broadcast_to(d, (k, N))
    off = np.broadcast_to(e, (k, N))
    sol, _ = thomas_solve(off, diag, off, rhs)
    return [SpectralVector(row, plan.cfg) for row in sol]


def theta_value(plan: ConcatenationPlan, x: SpectralVector, zeta, z: SpectralVector) -> float:
    """Sum of segment values along the chain ``x, zeta..., z``."""
    p, q, r = plan.segment_eigs()
    chain = np.stack([x.coeffs, *[v.coeffs for v in zeta], z.coeffs])
    left, right = chain[:-1], chain[1:]
    return float(np.sum(0.5 * p * left**2 + q * left * right + 0.5 * r * right**2))


def theta_gradient(plan: ConcatenationPlan, x: SpectralVector, zeta, z: SpectralVector) -> np.ndarray:
    """Gradient of ``Theta`` with respect to the interior states, shape ``(n_t - 1, N)``."""
    p, q, r = plan.segment_eigs()
    chain = np.stack([x.coeffs, *[v.coeffs for v in zeta], z.coeffs])
    return (p + r) * chain[1:-1] + q * (chain[:-2] + chain[2:])


def stationarity_residual(plan: ConcatenationPlan, x: SpectralVector, zeta, z: SpectralVector) -> float:
    if len(zeta) != plan.n_t - 1:
        raise ValueError(f"expected {plan.n_t - 1} interior states, got {len(zeta)}")
    if not zeta:
        return 0.0
    return float(np.linalg.norm(theta_gradient(plan, x, zeta, z)))


def stat_value(plan: ConcatenationPlan, x: SpectralVector, z: SpectralVector) -> float:
    """Stationary value of ``Theta``; equals ``W_inf(t, x, z)`` when ``n_t = 1``."""
    zeta = solve_intermediate_states(plan, x, z)
    return theta_value(plan, x, zeta, z)


def first_segment_velocity(plan: ConcatenationPlan, x: SpectralVector, z: SpectralVector,
                           zeta=None) -> SpectralVector:
    """Initial velocity steering ``x`` to the first junction state over one segment."""
    if zeta is None:
        zeta = solve_intermediate_states(plan, x, z)
    target = zeta[0] if zeta else z
    p, q, _ = plan.segment_eigs()
    lam_mu = plan.cfg.lambdas_mu(plan.mu)
    return SpectralVector(lam_mu / plan.cfg.m * (p * x.coeffs + q * target.coeffs), plan.cfg)


__all__ = [
    "ConcatenationPlan",
    "first_segment_velocity",
    "plan_concatenation",
    "singular_junction_modes",
    "solve_intermediate_states",
    "stat_value",
    "stationarity_residual",
    "theta_gradient",
    "theta_value",
    "thomas_solve",
]
