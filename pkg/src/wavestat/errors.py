"""Exception hierarchy shared by all solver modules."""

from __future__ import annotations

from typing import Iterable


class WaveStatError(Exception):
    """Base class for every error raised by the package."""


class ProfileError(WaveStatError, ValueError):
    """Sampled or named displacement profile is unusable."""


class BasisMismatchError(WaveStatError, ValueError):
    """Operands were built on different truncated bases."""


class SingularOperatorError(WaveStatError, ArithmeticError):
    """A diagonal operator has a (numerically) zero eigenvalue."""

    def __init__(self, mode: int, value: float, name: str = ""):
        self.mode = mode
        self.value = value
        label = f" {name}" if name else ""
        super().__init__(f"operator{label} is singular at mode n={mode} (eigenvalue {value:.3e})")


class HorizonError(WaveStatError, ValueError):
    """Time argument lies outside the window where a formula is valid."""


class PenaltyTooSmallError(WaveStatError, ValueError):
    """Terminal penalty weight c does not exceed the threshold c-bar."""


class ConjugatePointError(WaveStatError, ArithmeticError):
    """One or more modes sit (numerically) on a conjugate point."""

    def __init__(self, modes: Iterable[int], what: str = "sin(omega_n t)"):
        self.modes = tuple(int(n) for n in modes)
        shown = ", ".join(str(n) for n in self.modes[:20])
        more = "" if len(self.modes) <= 20 else f", ... ({len(self.modes)} total)"
        super().__init__(f"conjugate point: {what} vanishes for modes n = {shown}{more}")


class CFLError(WaveStatError, ValueError):
    """Finite-difference time step violates the CFL condition."""


class ConfigError(WaveStatError, ValueError):
    """Run configuration failed validation; ``issues`` lists every problem."""

    def __init__(self, issues: list[tuple[str, str]]):
        self.issues = list(issues)
        text = "; ".join(f"{path}: {msg}" for path, msg in self.issues)
        super().__init__(f"invalid configuration: {text}")
