"""Run configuration: flat ``section.key = value`` text.

Example::

    # physical constants
    physical.m = 1
    physical.kappa = 1
    physical.L = 1
    numerics.N = 64
    numerics.mu = 0
    problem.t = pi/3
    problem.kind = displacement
    problem.x0 = zero
    problem.target = raised-cosine
    outputs.dir = out

Numeric values accept arithmetic on ``pi`` (``pi/3``, ``4*pi``).  Every
problem is collected before reporting, each tagged with its dotted key.
"""

from __future__ import annotations

import ast
import math
import operator
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .errors import ConfigError, ProfileError
from .spectral import BasisConfig, SpectralVector, load_profile_file, named_profile, project_analytic, \
    project_profile

OUTPUT_ENV = "WAVESTAT_OUTPUT_DIR"

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.Pow: operator.pow}
_NAMES = {"pi": math.pi, "e": math.e, "inf": math.inf}


def eval_number(text: str) -> float:
    """Evaluate a numeric literal or a small arithmetic expression on ``pi``."""

    def walk(node):
        if isinstance(node, ast.Expression):
            return walk(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id in _NAMES:
            return _NAMES[node.id]
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](walk(node.left), walk(node.right))
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = walk(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id == "sqrt" \
                and len(node.args) == 1:
            return math.sqrt(walk(node.args[0]))
        raise ValueError(f"unsupported expression {text!r}")

    try:
        return float(walk(ast.parse(text.strip(), mode="eval")))
    except SyntaxError:
        raise ValueError(f"not a number: {text!r}") from None


@dataclass(frozen=True)
class Physical:
    m: float = 1.0
    kappa: float = 1.0
    L: float = 1.0


@dataclass(frozen=True)
class Numerics:
    N: int = 64
    mu: float = 0.0
    delta_min: float | None = None
    conjugate_tol: float = 1e-9


@dataclass(frozen=True)
class Problem:
    t: float = math.pi / 3
    kind: str = "displacement"
    x0: str = "zero"
    target: str = "gaussian"
    n_segments: int | None = 1


@dataclass(frozen=True)
class Outputs:
    dir: str | None = None
    snapshots: int = 41
    grid: int = 101
    field_horizon: float | None = None


@dataclass(frozen=True)
class Sweep:
    mu: tuple[float, ...] = (1e-1, 3e-2, 1e-2, 3e-3)
    t: float = 1.0
    initial: str = "decay:4"


@dataclass(frozen=True)
class RunConfig:
    physical: Physical = field(default_factory=Physical)
    numerics: Numerics = field(default_factory=Numerics)
    problem: Problem = field(default_factory=Problem)
    outputs: Outputs = field(default_factory=Outputs)
    sweep: Sweep = field(default_factory=Sweep)
    base_dir: str = "."

    @property
    def basis(self) -> BasisConfig:
        p = self.physical
        return BasisConfig(L=p.L, N=self.numerics.N, m=p.m, kappa=p.kappa)

    def echo(self) -> dict:
        out = asdict(self)
        out.pop("base_dir")
        return out

    def profile(self, source: str) -> SpectralVector:
        return load_source(source, self.basis, Path(self.base_dir))


def load_source(source: str, cfg: BasisConfig, base: Path = Path(".")) -> SpectralVector:
    """Named profile key, or ``file:<path>`` with two-column samples."""
    if source.startswith("file:"):
        path = Path(source[5:])
        if not path.is_absolute():
            path = base / path
        pos, val = load_profile_file(path)
        return project_profile(pos, val, cfg)
    return project_analytic(named_profile(source), cfg)


_SPEC = {
    "physical.m": ("float", "positive"),
    "physical.kappa": ("float", "positive"),
    "physical.L": ("float", "positive"),
    "numerics.N": ("int", "positive"),
    "numerics.mu": ("float", "unit"),
    "numerics.delta_min": ("float", "positive"),
    "numerics.conjugate_tol": ("float", "positive"),
    "problem.t": ("float", "positive"),
    "problem.kind": ("choice", ("displacement", "velocity")),
    "problem.x0": ("source", None),
    "problem.target": ("source", None),
    "problem.n_segments": ("segments", None),
    "outputs.dir": ("str", None),
    "outputs.snapshots": ("int", "positive"),
    "outputs.grid": ("int", "two"),
    "outputs.field_horizon": ("float", "positive"),
    "sweep.mu": ("floats", "positive"),
    "sweep.t": ("float", "positive"),
    "sweep.initial": ("source", None),
}


def parse_lines(text: str, origin: str = "<config>") -> tuple[dict[str, str], list[tuple[str, str]]]:
    values, issues = {}, []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            issues.append((f"{origin}:{lineno}", f"expected key = value, got {raw.strip()!r}"))
            continue
        key, value = (s.strip() for s in line.split("=", 1))
        if key in values:
            issues.append((key, f"duplicate key (line {lineno})"))
        values[key] = value
    return values, issues


def _convert(key: str, raw: str):
    kind, rule = _SPEC[key]
    if kind == "str":
        return raw
    if kind == "choice":
        if raw not in rule:
            raise ValueError(f"must be one of {', '.join(rule)}")
        return raw
    if kind == "source":
        if not raw.startswith("file:"):
            named_profile(raw)
        return raw
    if kind == "segments":
        if raw == "auto":
            return None
        v = int(raw)
        if v < 1:
            raise ValueError("must be >= 1 or 'auto'")
        return v
    if kind == "floats":
        vals = tuple(eval_number(s) for s in raw.split(",") if s.strip())
        if not vals or any(not v > 0 for v in vals):
            raise ValueError("must be a comma list of positive numbers")
        return vals
    if kind == "int":
        v = int(raw)
    else:
        v = eval_number(raw)
    if rule == "positive" and not v > 0:
        raise ValueError("must be > 0")
    if rule == "two" and v < 2:
        raise ValueError("must be >= 2")
    if rule == "unit" and not 0.0 <= v <= 1.0:
        raise ValueError("must lie in [0, 1]")
    return v


def build_config(values: dict[str, str], issues=None, base_dir: str = ".") -> RunConfig:
    """Convert raw strings into a :class:`RunConfig`; raises with every issue found."""
    issues = list(issues or [])
    sections: dict[str, dict] = {"physical": {}, "numerics": {}, "problem": {}, "outputs": {}, "sweep": {}}
    for key, raw in values.items():
        if key not in _SPEC:
            issues.append((key, "unknown key"))
            continue
        try:
            value = _convert(key, raw)
        except (ValueError, ProfileError) as exc:
            issues.append((key, str(exc)))
            continue
        sec, name = key.split(".", 1)
        sections[sec][name] = value
    if issues:
        raise ConfigError(issues)
    return RunConfig(Physical(**sections["physical"]), Numerics(**sections["numerics"]),
                     Problem(**sections["problem"]), Outputs(**sections["outputs"]),
                     Sweep(**sections["sweep"]), base_dir)


def load_config(path: str | Path | None, overrides: dict[str, str] | None = None) -> RunConfig:
    """Read a config file (or defaults when ``path`` is None) and apply string overrides."""
    values, issues, base = {}, [], "."
    if path is not None:
        path = Path(path)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigError([("--config", str(exc))]) from None
        values, issues = parse_lines(text, str(path))
        base = str(path.parent)
    values.update(overrides or {})
    return build_config(values, issues, base)


__all__ = [
    "OUTPUT_ENV",
    "RunConfig",
    "build_config",
    "eval_number",
    "load_config",
    "load_source",
    "parse_lines",
]
