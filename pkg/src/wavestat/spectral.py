"""Truncated sine-basis coordinates and diagonal (Riesz-spectral) operators.

Every field on ``[0, L]`` with Dirichlet ends is stored through its first ``N``
coefficients in the orthonormal basis of the energy space,

    phi_tilde_n(x) = sqrt(2 L) / (n pi) * sin(n pi x / L),

so that the energy norm ``||x||_{1/2}^2 = ||x'||_{L2}^2`` is just the sum of the
squared coefficients.  All operators used by the solver are diagonal in this
basis and are represented by their eigenvalue tables.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .errors import BasisMismatchError, ProfileError, SingularOperatorError

SINGULAR_RTOL = 1e-12

OPERATOR_KINDS = (
    "A",
    "A_sqrt",
    "J",
    "I_mu",
    "I_mu_sqrt",
    "I_mu_inv_sqrt",
    "M_mu",
    "K_mu",
    "identity",
)


@dataclass(frozen=True)
class BasisConfig:
    """Physical constants plus truncation order.

    Attributes
    ----------
    L : float
        String length.
    N : int
        Number of retained modes.
    m : float
        Mass per unit length.
    kappa : float
        Elastic (tension) constant.
    """

    L: float = 1.0
    N: int = 64
    m: float = 1.0
    kappa: float = 1.0

    def __post_init__(self):
        bad = []
        if not (self.L > 0 and math.isfinite(self.L)):
            bad.append(f"L must be positive, got {self.L}")
        if int(self.N) != self.N or self.N < 1:
            bad.append(f"N must be an integer >= 1, got {self.N}")
        if not (self.m > 0 and math.isfinite(self.m)):
            bad.append(f"m must be positive, got {self.m}")
        if not (self.kappa > 0 and math.isfinite(self.kappa)):
            bad.append(f"kappa must be positive, got {self.kappa}")
        if bad:
            raise ValueError("; ".join(bad))
        object.__setattr__(self, "N", int(self.N))

    @property
    def modes(self) -> np.ndarray:
        return np.arange(1, self.N + 1)

    @property
    def lambdas(self) -> np.ndarray:
        """Eigenvalues ``(n pi / L)^2`` of ``-d^2/dx^2`` for n = 1..N."""
        return (self.modes * np.pi / self.L) ** 2

    @property
    def wave_speed(self) -> float:
        return math.sqrt(self.kappa / self.m)

    def lambdas_mu(self, mu: float) -> np.ndarray:
        lam = self.lambdas
        return lam / (1.0 + mu * mu * lam)

    def with_modes(self, N: int) -> "BasisConfig":
        return BasisConfig(L=self.L, N=N, m=self.m, kappa=self.kappa)


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class SpectralVector:
    """Coefficients ``<x, phi_tilde_n>_{1/2}`` for n = 1..N of one field."""

    coeffs: np.ndarray
    basis: BasisConfig

    def __post_init__(self):
        arr = _frozen(self.coeffs)
        if arr.shape != (self.basis.N,):
            raise ValueError(f"expected {self.basis.N} coefficients, got shape {arr.shape}")
        object.__setattr__(self, "coeffs", arr)

    @classmethod
    def zeros(cls, basis: BasisConfig) -> "SpectralVector":
        return cls(np.zeros(basis.N), basis)

    @classmethod
    def unit(cls, basis: BasisConfig, n: int, scale: float = 1.0) -> "SpectralVector":
        a = np.zeros(basis.N)
        a[n - 1] = scale
        return cls(a, basis)

    def _check(self, other: "SpectralVector"):
        if other.basis != self.basis:
            raise BasisMismatchError(f"basis mismatch: {self.basis} vs {other.basis}")

    def __add__(self, other: "SpectralVector") -> "SpectralVector":
        self._check(other)
        return SpectralVector(self.coeffs + other.coeffs, self.basis)

    def __sub__(self, other: "SpectralVector") -> "SpectralVector":
        self._check(other)
        return SpectralVector(self.coeffs - other.coeffs, self.basis)

    def __mul__(self, scalar: float) -> "SpectralVector":
        return SpectralVector(self.coeffs * float(scalar), self.basis)

    __rmul__ = __mul__

    def __neg__(self) -> "SpectralVector":
        return SpectralVector(-self.coeffs, self.basis)

    def inner(self, other: "SpectralVector") -> float:
        """Energy-space inner product ``<x, y>_{1/2}``."""
        self._check(other)
        return float(np.dot(self.coeffs, other.coeffs))

    def norm_half(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    def norm_l2(self) -> float:
        """Plain L2 norm of the represented field."""
        return float(np.sqrt(np.sum(self.coeffs**2 / self.basis.lambdas)))

    def tail_indicator(self) -> float:
        """``max(|a_{N-1}|, |a_N|) / max_n |a_n|``; 0 for the zero vector.

        Two trailing modes, since a profile symmetric about ``L/2`` has every
        even coefficient equal to zero.
        """
        a = np.abs(self.coeffs)
        peak = np.max(a)
        return 0.0 if peak == 0 else float(np.max(a[-2:]) / peak)

    def truncate(self, N: int) -> "SpectralVector":
        basis = self.basis.with_modes(N)
        a = np.zeros(N)
        k = min(N, self.basis.N)
        a[:k] = self.coeffs[:k]
        return SpectralVector(a, basis)


@dataclass(frozen=True, eq=False)
class DiagonalOperator:
    """Operator acting as ``(F x)_n = f_n a_n`` on the shared basis."""

    eigvals: np.ndarray
    basis: BasisConfig
    name: str = ""

    def __post_init__(self):
        arr = _frozen(self.eigvals)
        if arr.shape != (self.basis.N,):
            raise ValueError(f"expected {self.basis.N} eigenvalues, got shape {arr.shape}")
        object.__setattr__(self, "eigvals", arr)

    def eig(self, n: int) -> float:
        """Eigenvalue for 1-based mode index ``n``."""
        return float(self.eigvals[n - 1])

    def __call__(self, x: SpectralVector) -> SpectralVector:
        return op_apply(self, x)

    def __matmul__(self, other: "DiagonalOperator") -> "DiagonalOperator":
        return op_compose(self, other)


def lambda_n(n, cfg: BasisConfig):
    """``(n pi / L)^2``; accepts a scalar index or an integer array."""
    n_arr = np.asarray(n)
    if np.any(n_arr < 1):
        raise ValueError("mode index must be >= 1")
    out = (n_arr * np.pi / cfg.L) ** 2
    return float(out) if out.ndim == 0 else out


def basis_fn_value(n: int, position, which: str, cfg: BasisConfig):
    """Evaluate ``phi_n`` (``which='phi'``) or ``phi_tilde_n`` (``which='phi_tilde'``)."""
    x = np.asarray(position, dtype=float)
    if np.any(x < 0) or np.any(x > cfg.L):
        raise ValueError(f"position outside [0, {cfg.L}]")
    s = np.sin(n * np.pi * x / cfg.L)
    if which in ("phi", "L2"):
        out = math.sqrt(2.0 / cfg.L) * s
    elif which in ("phi_tilde", "half"):
        out = math.sqrt(2.0 * cfg.L) / (n * math.pi) * s
    else:
        raise ValueError(f"unknown basis family {which!r}")
    return float(out) if out.ndim == 0 else out


def _check_samples(positions: np.ndarray, values: np.ndarray, cfg: BasisConfig):
    if positions.ndim != 1 or positions.shape != values.shape:
        raise ProfileError("positions and values must be 1-D arrays of equal length")
    if positions.size < 3:
        raise ProfileError("need at least 3 samples")
    if np.any(np.diff(positions) <= 0):
        bad = int(np.argmax(np.diff(positions) <= 0))
        raise ProfileError(f"positions not strictly increasing at sample {bad + 1}")
    span_tol = 1e-9 * cfg.L
    if abs(positions[0]) > span_tol or abs(positions[-1] - cfg.L) > span_tol:
        raise ProfileError(
            f"samples must cover [0, {cfg.L}], got [{positions[0]}, {positions[-1]}]"
        )
    scale = max(1.0, float(np.max(np.abs(values))))
    if abs(values[0]) > 1e-9 * scale or abs(values[-1]) > 1e-9 * scale:
        raise ProfileError(
            f"profile must vanish at both ends (Dirichlet data), got u(0)={values[0]}, u(L)={values[-1]}"
        )


def project_profile(positions, values, cfg: BasisConfig) -> SpectralVector:
    """Project sampled Dirichlet data onto the energy basis by the trapezoid rule.

    ``a_n = sqrt(lambda_n) * int_0^L x(s) phi_n(s) ds``.
    """
    pos = np.asarray(positions, dtype=float)
    val = np.asarray(values, dtype=float)
    _check_samples(pos, val, cfg)
    modes = cfg.modes
    phi = math.sqrt(2.0 / cfg.L) * np.sin(np.outer(modes, pos) * (np.pi / cfg.L))
    inner = np.trapezoid(phi * val, pos, axis=1)
    return SpectralVector(np.sqrt(cfg.lambdas) * inner, cfg)


def reconstruct(x: SpectralVector, positions) -> np.ndarray:
    """Evaluate ``sum_n a_n phi_tilde_n`` at the given positions."""
    cfg = x.basis
    pos = np.atleast_1d(np.asarray(positions, dtype=float))
    if np.any(pos < 0) or np.any(pos > cfg.L):
        raise ValueError(f"position outside [0, {cfg.L}]")
    modes = cfg.modes
    amp = x.coeffs * math.sqrt(2.0 * cfg.L) / (modes * math.pi)
    return np.sin(np.outer(pos, modes) * (np.pi / cfg.L)) @ amp


# -- named analytic profiles -------------------------------------------------


@dataclass(frozen=True)
class AnalyticProfile:
    """A closed-form displacement profile on ``[0, L]``.

    ``breakpoints`` are interior points (as fractions of L) where the profile
    loses smoothness; quadrature panels are split there.  ``coeff_fn`` gives
    exact energy-basis coefficients when they are known in closed form.
    """

    name: str
    func: Callable[[np.ndarray, float], np.ndarray]
    breakpoints: tuple[float, ...] = ()
    coeff_fn: Callable[[BasisConfig], np.ndarray] | None = None
    description: str = ""

    def __call__(self, positions, L: float) -> np.ndarray:
        return self.func(np.asarray(positions, dtype=float), L)


def _raised_cosine(x, L):
    center, width = 0.5 * L, 0.25 * L
    u = (x - center) / width
    return np.where(np.abs(u) < 0.5, 0.5 * (1.0 + np.cos(2.0 * np.pi * u)), 0.0)


def _triangle(x, L):
    return 1.0 - np.abs(2.0 * x / L - 1.0)


GAUSSIAN_WIDTH = 1.0 / 16.0


def _gaussian(x, L, sigma_frac=GAUSSIAN_WIDTH):
    # odd 2L-periodic extension of a Gaussian centred at L/2; vanishes at 0 and L
    sigma = sigma_frac * L
    out = np.zeros_like(x, dtype=float)
    for k in range(-3, 4):
        out += np.exp(-((x - 0.5 * L - 2 * k * L) ** 2) / (2 * sigma**2))
        out -= np.exp(-((x + 0.5 * L - 2 * k * L) ** 2) / (2 * sigma**2))
    return out


def _gaussian_coeffs(cfg: BasisConfig, sigma_frac=GAUSSIAN_WIDTH) -> np.ndarray:
    sigma = sigma_frac * cfg.L
    k = cfg.modes * np.pi / cfg.L
    l2 = (
        math.sqrt(2.0 / cfg.L)
        * np.sin(cfg.modes * np.pi / 2)
        * sigma
        * math.sqrt(2 * math.pi)
        * np.exp(-0.5 * (k * sigma) ** 2)
    )
    return np.sqrt(cfg.lambdas) * l2


def _single_mode(n: int) -> AnalyticProfile:
    def func(x, L):
        return np.sin(n * np.pi * x / L)

    def coeffs(cfg: BasisConfig):
        a = np.zeros(cfg.N)
        if n <= cfg.N:
            a[n - 1] = math.sqrt(lambda_n(n, cfg)) * math.sqrt(cfg.L / 2.0)
        return a

    return AnalyticProfile(f"mode:{n}", func, (), coeffs, f"sin({n} pi x / L)")


def _power_decay(power: float) -> AnalyticProfile:
    # energy-basis coefficients a_n = n^-power; the sampled shape sums 4096 modes
    def func(x, L, terms=4096):
        n = np.arange(1, terms + 1)
        amp = math.sqrt(2.0 * L) / (n * math.pi) * n ** (-power)
        return np.sin(np.outer(x, n) * (np.pi / L)) @ amp

    def coeffs(cfg: BasisConfig):
        return cfg.modes.astype(float) ** (-power)

    return AnalyticProfile(f"decay:{power:g}", func, (), coeffs, f"coefficients n^-{power:g}")


NAMED_PROFILES: dict[str, AnalyticProfile] = {
    "zero": AnalyticProfile(
        "zero", lambda x, L: np.zeros_like(x), (), lambda cfg: np.zeros(cfg.N), "identically zero"
    ),
    "raised-cosine": AnalyticProfile(
        "raised-cosine",
        _raised_cosine,
        (0.375, 0.625),
        None,
        "raised-cosine bump, centre L/2, support width L/4, peak 1",
    ),
    "triangle": AnalyticProfile(
        "triangle", _triangle, (0.5,), None, "hat function, peak 1 at L/2"
    ),
    "gaussian": AnalyticProfile(
        "gaussian",
        _gaussian,
        (),
        _gaussian_coeffs,
        "odd-periodised Gaussian bump, centre L/2, sigma L/16, peak ~1",
    ),
}


def named_profile(key: str) -> AnalyticProfile:
    """Look up a named profile; ``mode:<n>`` selects ``sin(n pi x / L)``."""
    if key.startswith("mode:"):
        try:
            n = int(key.split(":", 1)[1])
        except ValueError:
            raise ProfileError(f"bad single-mode key {key!r}") from None
        if n < 1:
            raise ProfileError(f"mode index must be >= 1 in {key!r}")
        return _single_mode(n)
    if key.startswith("decay:"):
        try:
            power = float(key.split(":", 1)[1])
        except ValueError:
            raise ProfileError(f"bad decay key {key!r}") from None
        if not power > 0.5:
            raise ProfileError(f"decay power must exceed 1/2 in {key!r}")
        return _power_decay(power)
    if key == "single-mode":
        return _single_mode(1)
    try:
        return NAMED_PROFILES[key]
    except KeyError:
        known = ", ".join(sorted(NAMED_PROFILES) + ["mode:<n>", "decay:<p>"])
        raise ProfileError(f"unknown profile {key!r}; known: {known}") from None


def project_analytic(profile: AnalyticProfile | str, cfg: BasisConfig, exact: bool = True) -> SpectralVector:
    """Coefficients of a named profile.

    Uses closed-form coefficients when available (and ``exact``); otherwise
    composite Gauss-Legendre with 64 nodes per wavelength of mode N, with
    panels split at the profile's breakpoints.
    """
    if isinstance(profile, str):
        profile = named_profile(profile)
    if exact and profile.coeff_fn is not None:
        return SpectralVector(profile.coeff_fn(cfg), cfg)
    n_panels = max(1, math.ceil(cfg.N / 2))
    edges = np.union1d(np.linspace(0.0, 1.0, n_panels + 1), np.asarray(profile.breakpoints, dtype=float))
    edges = edges * cfg.L
    nodes, weights = np.polynomial.legendre.leggauss(64)
    a, b = edges[:-1, None], edges[1:, None]
    x = (0.5 * (b - a) * nodes + 0.5 * (a + b)).ravel()
    w = (0.5 * (b - a) * weights).ravel()
    f = profile(x, cfg.L)
    phi = math.sqrt(2.0 / cfg.L) * np.sin(np.outer(cfg.modes, x) * (np.pi / cfg.L))
    return SpectralVector(np.sqrt(cfg.lambdas) * (phi @ (w * f)), cfg)


def load_profile_file(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    """Read two-column ``position value`` text with ``#`` comments."""
    try:
        data = np.loadtxt(path, comments="#", ndmin=2)
    except ValueError as exc:
        raise ProfileError(f"{path}: {exc}") from None
    if data.shape[1] != 2:
        raise ProfileError(f"{path}: expected 2 columns, found {data.shape[1]}")
    return data[:, 0].copy(), data[:, 1].copy()


# -- operators -----------------------------------------------------------------


def make_operator(kind: str, mu: float, cfg: BasisConfig) -> DiagonalOperator:
    """Build one of the diagonal operators of the wave problem.

    ``A`` is ``-d^2/dx^2``; ``J`` its inverse square root; ``I_mu`` is
    ``(I + mu^2 A)^{-1}``; ``M_mu`` has eigenvalues ``((1 + mu^2 lam)/lam)^{1/2}``
    and ``K_mu = M_mu^{1/2}``.
    """
    if mu < 0:
        raise ValueError(f"mu must be >= 0, got {mu}")
    lam = cfg.lambdas
    one_plus = 1.0 + mu * mu * lam
    table = {
        "A": lambda: lam,
        "A_sqrt": lambda: np.sqrt(lam),
        "J": lambda: 1.0 / np.sqrt(lam),
        "I_mu": lambda: 1.0 / one_plus,
        "I_mu_sqrt": lambda: 1.0 / np.sqrt(one_plus),
        "I_mu_inv_sqrt": lambda: np.sqrt(one_plus),
        "M_mu": lambda: np.sqrt(one_plus / lam),
        "K_mu": lambda: (one_plus / lam) ** 0.25,
        "identity": lambda: np.ones_like(lam),
    }
    try:
        eig = table[kind]()
    except KeyError:
        raise ValueError(f"unknown operator kind {kind!r}; known: {', '.join(OPERATOR_KINDS)}") from None
    return DiagonalOperator(eig, cfg, kind)


def op_apply(F: DiagonalOperator, x: SpectralVector) -> SpectralVector:
    if F.basis != x.basis:
        raise BasisMismatchError(f"operator {F.name!r} and vector live on different bases")
    return SpectralVector(F.eigvals * x.coeffs, x.basis)


def op_compose(*ops: DiagonalOperator) -> DiagonalOperator:
    """Product of diagonal operators (order irrelevant: they commute)."""
    if not ops:
        raise ValueError("need at least one operator")
    basis = ops[0].basis
    eig = np.ones(basis.N)
    for op in ops:
        if op.basis != basis:
            raise BasisMismatchError("cannot compose operators on different bases")
        eig = eig * op.eigvals
    return DiagonalOperator(eig, basis, "*".join(op.name for op in ops))


def op_invert(F: DiagonalOperator, rtol: float = SINGULAR_RTOL) -> DiagonalOperator:
    mag = np.abs(F.eigvals)
    floor = rtol * mag.max() if mag.size else 0.0
    small = np.flatnonzero(mag <= floor)
    if small.size:
        n = int(small[0])
        raise SingularOperatorError(n + 1, float(F.eigvals[n]), F.name)
    return DiagonalOperator(1.0 / F.eigvals, F.basis, f"inv({F.name})")


def as_vector(values: Sequence[float] | np.ndarray, cfg: BasisConfig) -> SpectralVector:
    """Wrap a coefficient list, zero-padding or truncating to ``cfg.N``."""
    a = np.zeros(cfg.N)
    v = np.asarray(values, dtype=float)[: cfg.N]
    a[: v.size] = v
    return SpectralVector(a, cfg)


__all__ = [
    "AnalyticProfile",
    "BasisConfig",
    "DiagonalOperator",
    "NAMED_PROFILES",
    "OPERATOR_KINDS",
    "SpectralVector",
    "as_vector",
    "basis_fn_value",
    "lambda_n",
    "load_profile_file",
    "make_operator",
    "named_profile",
    "op_apply",
    "op_compose",
    "op_invert",
    "project_analytic",
    "project_profile",
    "reconstruct",
]
