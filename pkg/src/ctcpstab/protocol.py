"""Compound TCP window increase/decrease laws and their derivatives.

In congestion avoidance the average window grows by ``alpha * w**(k-1)``
per acknowledged window's worth of ACKs and shrinks by ``beta * w`` on a
loss event.  Defaults are the protocol's standard parameters.
"""

from dataclasses import dataclass

from .errors import DomainError


@dataclass(frozen=True)
class ProtocolParams:
    """Increase gain ``alpha``, increase exponent ``k``, decrease factor ``beta``."""

    alpha: float = 0.125
    k: float = 0.75
    beta: float = 0.5

    def __post_init__(self):
        if not self.alpha > 0:
            raise DomainError(f"alpha must be positive, got {self.alpha}")
        if not 0 < self.k < 1:
            raise DomainError(f"k must lie in (0, 1), got {self.k}")
        if not 0 < self.beta < 1:
            raise DomainError(f"beta must lie in (0, 1), got {self.beta}")


def compound_increase(w: float, p: ProtocolParams) -> float:
    """Per-window-of-ACKs increase ``alpha * w**(k-1)``."""
    if w <= 0:
        raise DomainError(f"window must be positive, got {w}")
    return p.alpha * w ** (p.k - 1.0)


def compound_decrease(w: float, p: ProtocolParams) -> float:
    """Per-loss decrease ``beta * w``."""
    if w <= 0:
        raise DomainError(f"window must be positive, got {w}")
    return p.beta * w


def increase_derivatives(w: float, p: ProtocolParams):
    """(i, i', i'', i''') of the increase law at window ``w``."""
    if w <= 0:
        raise DomainError(f"window must be positive, got {w}")
    a, k = p.alpha, p.k
    i0 = a * w ** (k - 1.0)
    i1 = a * (k - 1.0) * w ** (k - 2.0)
    i2 = a * (k - 1.0) * (k - 2.0) * w ** (k - 3.0)
    i3 = a * (k - 1.0) * (k - 2.0) * (k - 3.0) * w ** (k - 4.0)
    return i0, i1, i2, i3


def decrease_derivatives(w: float, p: ProtocolParams):
    """(d, d', d'', d''') of the decrease law at window ``w``; linear, so
    second and third derivatives vanish."""
    if w <= 0:
        raise DomainError(f"window must be positive, got {w}")
    return p.beta * w, p.beta, 0.0, 0.0
