"""Invariant suites run by ``wavestat validate``.

Every suite returns a :class:`SuiteResult` holding individual checks with the
observed value, the threshold it was held to, and whether it passed.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .long_horizon import plan_concatenation, solve_intermediate_states, stationarity_residual
from .payoff import PayoffSpec, PiecewiseConstantInput, QuadraticPayoff, second_difference, \
    second_difference_bound
from .propagator import propagate_profile
from .riccati import ModeParams, cbar, concavity_horizon, eig_pqr_finite, eig_pqr_infty, eval_W, \
    fundamental_solution, riccati_residual, riccati_rhs, terminal_penalty, verification_hamiltonian
from .spectral import BasisConfig, SpectralVector, make_operator, op_compose
from .tpbvp import Displacement, TpbvpProblem, Velocity, solve_displacement, solve_velocity, \
    velocity_one_shot

RICCATI_BOX = {"max_mode": 8, "c_over_cbar": (1.0, 4.0), "mu": (0.25, 1.0)}


@dataclass
class Check:
    name: str
    observed: float
    threshold: float
    passed: bool
    detail: str = ""


@dataclass
class SuiteResult:
    name: str
    checks: list[Check] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, name: str, observed: float, threshold: float, detail: str = "", *, upper: bool = True):
        ok = observed < threshold if upper else observed >= threshold
        ok = bool(ok) and math.isfinite(observed)
        self.checks.append(Check(name, float(observed), float(threshold), ok, detail))

    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]

    def to_dict(self) -> dict:
        return {"suite": self.name, "passed": self.passed, "checks": [asdict(c) for c in self.checks]}


def _rel(a, b) -> float:
    a, b = np.asarray(a, float), np.asarray(b, float)
    return float(np.max(np.abs(a - b) / np.maximum(np.abs(b), np.finfo(float).tiny)))


def _smooth(rng, cfg: BasisConfig, power: float = 2.0) -> SpectralVector:
    return SpectralVector(rng.normal(size=cfg.N) / cfg.modes**power, cfg)


def operator_identities(cfg: BasisConfig, mus=(1e-3, 0.1, 1.0), tol: float = 1e-13) -> SuiteResult:
    out = SuiteResult("operator_identities")
    lam = cfg.lambdas
    for mu in mus:
        op = {k: make_operator(k, mu, cfg) for k in
              ("A", "A_sqrt", "J", "I_mu", "I_mu_sqrt", "I_mu_inv_sqrt", "M_mu", "K_mu", "identity")}
        tag = f"mu={mu:g}"
        out.add(f"J A^1/2 = I [{tag}]", _rel(op_compose(op["J"], op["A_sqrt"]).eigvals, 1.0), tol)
        out.add(f"A^1/2 A^1/2 = A [{tag}]", _rel(op_compose(op["A_sqrt"], op["A_sqrt"]).eigvals, lam), tol)
        out.add(f"I^1/2 I^1/2 = I_mu [{tag}]",
                _rel(op_compose(op["I_mu_sqrt"], op["I_mu_sqrt"]).eigvals, op["I_mu"].eigvals), tol)
        out.add(f"I^1/2 I^-1/2 = I [{tag}]",
                _rel(op_compose(op["I_mu_sqrt"], op["I_mu_inv_sqrt"]).eigvals, 1.0), tol)
        out.add(f"K^2 = M [{tag}]", _rel(op_compose(op["K_mu"], op["K_mu"]).eigvals, op["M_mu"].eigvals), tol)
        out.add(f"M^2 = A^-1 + mu^2 [{tag}]",
                _rel(op_compose(op["M_mu"], op["M_mu"]).eigvals, 1.0 / lam + mu * mu), tol)
        # I - I_mu evaluated without cancellation: 1 - 1/(1+s) = -expm1(-log1p(s))
        complement = -np.expm1(-np.log1p(mu * mu * lam))
        out.add(f"A I_mu = (I - I_mu)/mu^2 [{tag}]",
                _rel(op_compose(op["A"], op["I_mu"]).eigvals, complement / mu**2), tol)
        out.add(f"M^-2 = A I_mu [{tag}]",
                _rel(op_compose(op["A"], op["I_mu"]).eigvals, 1.0 / op["M_mu"].eigvals ** 2), tol)
        out.add(f"A^1/2 I_mu A^1/2 = lam_mu [{tag}]",
                _rel(op_compose(op["A_sqrt"], op["I_mu"], op["A_sqrt"]).eigvals, cfg.lambdas_mu(mu)), tol)
        names = list(op)
        worst = max(_rel(op_compose(op[a], op[b]).eigvals, op_compose(op[b], op[a]).eigvals)
                    for a in names for b in names)
        out.add(f"commutation [{tag}]", worst, tol)
        bound = float(np.max(op_compose(op["A_sqrt"], op["I_mu_sqrt"]).eigvals) * mu)
        out.add(f"A^1/2 I^1/2 <= 1/mu [{tag}]", bound, 1.0 + 1e-15)
    return out


def riccati_residuals(cfg: BasisConfig, rng: np.random.Generator, samples: int = 200, h: float | None = None,
                      tol: float = 1e-6, min_order: float = 1.9, box=None, eig_fn=None) -> SuiteResult:
    """Centred-difference residuals, relative to ``max(1, |rhs|)``, over a sample box.

    ``box`` bounds the mode index, ``c / c_bar`` and ``mu``; ``eig_fn``
    replaces the closed-form table (fault injection).  The default step is
    ``1e-5`` in units of ``sqrt(m / kappa)``.
    """
    if h is None:
        h = 1e-5 * math.sqrt(cfg.m / cfg.kappa)
    box = dict(RICCATI_BOX if box is None else box)
    out = SuiteResult("riccati_residuals")
    fn = eig_pqr_finite if eig_fn is None else eig_fn
    cb = cbar(cfg.m, cfg.kappa)
    n_max = min(cfg.N, box["max_mode"])
    worst, worst_order, bad_modes = 0.0, math.inf, set()
    for _ in range(samples):
        n = int(rng.integers(1, n_max + 1))
        mu = float(10 ** rng.uniform(math.log10(box["mu"][0]), math.log10(box["mu"][1])))
        lo, hi = box["c_over_cbar"]
        c = cb * float(10 ** rng.uniform(math.log10(lo) + 1e-3, math.log10(hi)))
        tbar = concavity_horizon(mu, cfg.m, cfg.kappa)
        t = float(rng.uniform(2 * h, tbar - 2 * h))
        res = np.abs(riccati_residual(n, t, mu, c, cfg, h, eig_fn=fn))
        res2 = np.abs(riccati_residual(n, t, mu, c, cfg, 2 * h, eig_fn=fn))
        p, q, _ = fn(n, t, mu, c, cfg)
        lam_mu = float(ModeParams.build(cfg, mu, n).lam_mu[0])
        scale = np.maximum(1.0, np.abs(riccati_rhs(p, q, lam_mu, cfg)))
        rel = float(np.max(res / scale))
        worst = max(worst, rel)
        if rel >= tol:
            bad_modes.add(n)
        # order from the h / 2h pair; skip components already at rounding level
        keep = res > 1e-9 * scale
        if np.any(keep):
            worst_order = min(worst_order, float(np.min(np.log2(res2[keep] / res[keep]))))
    detail = f"failing modes {sorted(bad_modes)}" if bad_modes else f"box {box}"
    out.add("max relative residual", worst, tol, detail)
    if math.isfinite(worst_order):
        out.add("observed order (min)", worst_order, min_order, upper=False)
    return out


def limits(cfg: BasisConfig, rng: np.random.Generator, mu: float = 0.5) -> SuiteResult:
    out = SuiteResult("initial_conditions_and_limits")
    cb = cbar(cfg.m, cfg.kappa)
    mp = ModeParams.build(cfg, mu)
    worst = 0.0
    for c in (1.5 * cb, 10 * cb, 1e3 * cb):
        p, q, r = eig_pqr_finite(cfg.modes, 0.0, mu, c, cfg)
        target = c * mp.m_eig
        worst = max(worst, _rel(-p, target), _rel(q, target), _rel(-r, target))
    out.add("t=0 values (-c, c, -c) m_n", worst, 1e-12)
    tbar = concavity_horizon(mu, cfg.m, cfg.kappa)
    t = float(rng.uniform(0.1, 0.9)) * tbar
    p, _, r = eig_pqr_infty(cfg.modes, t, mu, cfg)
    out.add("limit p = r (relative)", float(np.max(np.abs(p - r)) / np.max(np.abs(p))), 1e-15)
    gaps = []
    cs = np.array([1e2, 1e3, 1e4]) * cb
    grid = np.linspace(0.1 * tbar, 0.95 * tbar, 40)
    for c in cs:
        g = 0.0
        for tt in grid:
            fin = np.array(eig_pqr_finite(cfg.modes, tt, mu, c, cfg))
            inf = np.array(eig_pqr_infty(cfg.modes, tt, mu, cfg))
            g = max(g, float(np.max(np.abs(fin - inf))))
        gaps.append(g)
    slope = float(np.polyfit(np.log(cs), np.log(gaps), 1)[0])
    out.add("gap exponent |slope + 1|", abs(slope + 1.0), 0.05, f"slope {slope:.4f}")
    return out


def hjb(cfg: BasisConfig, rng: np.random.Generator, points: int = 100, ht: float = 1e-6,
        hx: float = 1e-4, tol: float = 1e-5) -> SuiteResult:
    """``-dW/dt + H(x, grad_x W)`` by central differences, and the exact start value."""
    out = SuiteResult("hjb")
    cb = cbar(cfg.m, cfg.kappa)
    worst, worst_ic = 0.0, 0.0
    for _ in range(points):
        mu = float(rng.uniform(0.1, 1.0))
        c = cb * float(rng.uniform(1.01, 10.0))
        tbar = concavity_horizon(mu, cfg.m, cfg.kappa)
        t = float(rng.uniform(0.05, 0.95)) * tbar
        x, z = _smooth(rng, cfg), _smooth(rng, cfg)
        dWdt = (eval_W(fundamental_solution(cfg, mu, t + ht, c), x, z)
                - eval_W(fundamental_solution(cfg, mu, t - ht, c), x, z)) / (2 * ht)
        fs = fundamental_solution(cfg, mu, t, c)
        grad = np.empty(cfg.N)
        for i in range(cfg.N):
            e = SpectralVector.unit(cfg, i + 1, hx)
            grad[i] = (fs.W(x + e, z) - fs.W(x - e, z)) / (2 * hx)
        res = -dWdt + verification_hamiltonian(x, SpectralVector(grad, cfg), mu)
        worst = max(worst, abs(res))
        w0 = eval_W(fundamental_solution(cfg, mu, 0.0, c), x, z)
        pen = terminal_penalty(x, z, mu, c)
        worst_ic = max(worst_ic, abs(w0 - pen) / max(abs(pen), 1e-300))
    out.add("max |HJB residual|", worst, tol)
    out.add("W(0) vs penalty (relative)", worst_ic, 1e-12)
    return out


def concavity(cfg: BasisConfig, rng: np.random.Generator, probes: int = 1000, steps: int = 8,
              slack: float = 1e-10) -> SuiteResult:
    out = SuiteResult("concavity")
    cb = cbar(cfg.m, cfg.kappa)
    max_val, max_excess = -math.inf, -math.inf
    for _ in range(probes):
        mu = float(rng.uniform(0.05, 1.0))
        t = 0.9 * concavity_horizon(mu, cfg.m, cfg.kappa)
        terminal = QuadraticPayoff(cb * float(rng.uniform(0.1, 10.0)), _smooth(rng, cfg))
        spec = PayoffSpec(cfg, mu, t, terminal)
        x0 = _smooth(rng, cfg)
        dt = t / steps
        w_star = PiecewiseConstantInput(rng.normal(size=(steps, cfg.N)), dt, cfg)
        w_tilde = PiecewiseConstantInput(rng.normal(size=(steps, cfg.N)), dt, cfg)
        delta = float(rng.uniform(0.01, 1.0))
        d2 = second_difference(spec, x0, w_star, w_tilde, delta)
        bound = second_difference_bound(spec, w_tilde, delta)
        max_val = max(max_val, d2)
        max_excess = max(max_excess, d2 - bound)
    out.add("max second difference", max_val, 0.0)
    out.add("max excess over bound", max_excess, slack)
    return out


def round_trips(cfg: BasisConfig, rng: np.random.Generator) -> SuiteResult:
    out = SuiteResult("round_trips")
    # pick a horizon clear of every conjugate point of the basis
    om = ModeParams.build(cfg, 0.0).omega
    t = next(tt for tt in np.linspace(0.3, 1.7, 14001) * cfg.L / cfg.wave_speed
             if np.min(np.abs(np.sin(om * tt))) > 1e-3 and np.min(np.abs(np.cos(om * tt))) > 1e-3)
    x, z, v = _smooth(rng, cfg, 3), _smooth(rng, cfg, 3), _smooth(rng, cfg, 3)
    sol = solve_displacement(TpbvpProblem(cfg, float(t), x, Displacement(z)))
    end = propagate_profile(x, sol.w0, float(t))[-1]
    out.add("displacement target", (end.xi - z).norm_half() / z.norm_half(), 1e-8)
    prob = TpbvpProblem(cfg, float(t), x, Velocity(v))
    vsol = solve_velocity(prob)
    out.add("velocity two-path", float(np.max(np.abs(vsol.w0.coeffs - velocity_one_shot(prob).coeffs))), 1e-12)
    end = propagate_profile(x, vsol.w0, float(t))[-1]
    out.add("velocity target", (end.velocity() - v).norm_half() / v.norm_half(), 1e-8)
    return out


def long_horizon_suite(cfg: BasisConfig, rng: np.random.Generator) -> SuiteResult:
    out = SuiteResult("long_horizon")
    om = ModeParams.build(cfg, 0.0).omega
    period = 2 * cfg.L / cfg.wave_speed
    t = next(tt for tt in np.linspace(1.2, 2.0, 8001) * period if np.min(np.abs(np.sin(om * tt))) > 1e-3)
    x, z = _smooth(rng, cfg, 3), _smooth(rng, cfg, 3)
    plan = plan_concatenation(cfg, float(t), 0.0)
    zeta = solve_intermediate_states(plan, x, z)
    out.add("stationarity residual", stationarity_residual(plan, x, zeta, z), 1e-10)
    sol = solve_displacement(TpbvpProblem(cfg, float(t), x, Displacement(z)))
    snaps = propagate_profile(x, sol.w0, float(t), n_snapshots=plan.n_t + 1)
    err = max((snaps[k].xi - zk).norm_half() for k, zk in enumerate(zeta, 1)) if zeta else 0.0
    out.add("junction states vs propagation", err, 1e-10)
    return out


SUITES = ("operator_identities", "riccati_residuals", "initial_conditions_and_limits", "hjb",
          "concavity", "round_trips", "long_horizon")


def run_all(cfg: BasisConfig, seed: int = 0, suites=SUITES) -> list[SuiteResult]:
    rng = np.random.default_rng(seed)
    small = cfg.with_modes(min(cfg.N, 16))
    runners = {
        "operator_identities": lambda: operator_identities(cfg),
        "riccati_residuals": lambda: riccati_residuals(cfg, rng),
        "initial_conditions_and_limits": lambda: limits(cfg, rng),
        "hjb": lambda: hjb(small, rng),
        "concavity": lambda: concavity(small.with_modes(min(cfg.N, 4)), rng),
        "round_trips": lambda: round_trips(cfg, rng),
        "long_horizon": lambda: long_horizon_suite(cfg, rng),
    }
    unknown = set(suites) - set(runners)
    if unknown:
        raise ValueError(f"unknown suites {sorted(unknown)}")
    return [runners[name]() for name in suites]


__all__ = [
    "Check",
    "SUITES",
    "SuiteResult",
    "concavity",
    "hjb",
    "limits",
    "long_horizon_suite",
    "operator_identities",
    "riccati_residuals",
    "round_trips",
    "run_all",
]
