"""Drive envelopes."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = ["PulseShape", "square_pulse"]


@dataclass(frozen=True)
class PulseShape:
    """Rabi-frequency envelope ``Omega(t)`` supported on ``[t_start, t_start + tau]``.

    For ``kind == "square"`` the envelope is ``theta / tau`` on the support.
    ``custom`` pulses carry their own ``envelope`` callable.
    """

    kind: str
    theta: float
    tau: float
    t_start: float = 0.0
    envelope: Callable[[float], float] | None = None

    @property
    def t_end(self) -> float:
        return self.t_start + self.tau

    @property
    def support(self) -> tuple[float, float]:
        return (self.t_start, self.t_end)

    @property
    def breakpoints(self) -> tuple[float, ...]:
        return (self.t_start, self.t_end)

    @property
    def amplitude(self) -> float:
        return self.theta / self.tau

    def __call__(self, t: float) -> float:
        if not self.t_start <= t < self.t_end:
            return 0.0
        if self.kind == "square":
            return self.amplitude
        return float(self.envelope(t))

    def constant_on(self, a: float, b: float) -> float | None:
        """Envelope value if it is constant on ``(a, b)``, else ``None``."""
        if b <= self.t_start or a >= self.t_end:
            return 0.0
        if self.kind == "square" and self.t_start <= a and b <= self.t_end:
            return self.amplitude
        return None

    def area(self, n: int = 2001) -> float:
        """Trapezoid area of the envelope over its support."""
        if self.kind == "square":
            # exact for a constant
            ts = np.array([self.t_start, self.t_end])
            vals = np.full(2, self.amplitude)
        else:
            ts = np.linspace(self.t_start, self.t_end, n)
            vals = np.array([self.envelope(t) for t in ts])
        return float(np.trapezoid(vals, ts))


def square_pulse(theta: float, tau: float, t_start: float = 0.0) -> PulseShape:
    """Square pulse of area ``theta`` and width ``tau``."""
    if tau <= 0:
        raise ValueError(f"pulse width must be positive, got {tau}")
    return PulseShape("square", float(theta), float(tau), float(t_start))
