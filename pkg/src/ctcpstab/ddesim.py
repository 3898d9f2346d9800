"""Fixed-step delay-differential integrator and limit-cycle extraction.

Classical fourth-order Runge-Kutta marches the two-window fluid model while
delayed states are read from the stored trajectory through cubic Hermite
interpolation (the step is far smaller than either delay, so every lookup
lands in already-computed history).  Traces feed phase portraits, amplitude
and period extraction, and gain sweeps for bifurcation diagrams.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DomainError, UndeterminedError
from .fluid import make_rhs

WINDOW_FLOOR = 1e-6


@dataclass(frozen=True)
class SimTrace:
    """Uniformly sampled windows with the producing configuration."""

    h: float
    w1: np.ndarray
    w2: np.ndarray
    cfg: object
    kappa: float
    transient_cutoff: int
    floor_breach: bool = False

    @property
    def t(self) -> np.ndarray:
        return np.arange(self.w1.size) * self.h

    def phase_pairs(self, lag: float):
        """(w2(t), w2(t - lag)) pairs for phase portraits."""
        shift = int(round(lag / self.h))
        return self.w2[shift:], self.w2[: self.w2.size - shift]


@dataclass(frozen=True)
class CycleStats:
    amplitude: float
    period: Optional[float]
    converged: bool


def default_history(cfg, eq, bump: float = 0.01) -> Callable[[float], tuple]:
    """Constant history at equilibrium with the first window raised by
    ``bump`` relative; deterministic and exciting for the critical mode."""
    w1 = eq.w1_star * (1.0 + bump)
    w2 = eq.w2_star

    def history(t: float):
        return (w1, w2)

    return history


def integrate(cfg, history: Callable[[float], tuple], T: float, h: float,
              kappa: float = None) -> SimTrace:
    """March the delayed fluid model from ``history`` over ``[0, T]``.

    Requires ``h <= min(tau)/20`` so delayed lookups never touch the current
    step, and ``T`` long enough to outlive several delay spans.  A window
    falling below the positivity floor stops the run and flags the trace.
    """
    tau1, tau2 = cfg.tau1, cfg.tau2
    if h > min(tau1, tau2) / 20.0:
        raise DomainError(f"step {h} too large for delays ({tau1}, {tau2})")
    if T < 50.0 * max(tau1, tau2):
        raise DomainError(f"horizon {T} shorter than 50 delay spans")
    kap = cfg.kappa if kappa is None else kappa
    rhs = make_rhs(cfg, kappa=kap, clamp=True)

    n = int(round(T / h))
    w1 = np.empty(n + 1)
    w2 = np.empty(n + 1)
    f1 = np.empty(n + 1)
    f2 = np.empty(n + 1)
    h0 = history(0.0)
    if h0[0] <= 0.0 or h0[1] <= 0.0:
        raise DomainError("history must be positive")
    w1[0], w2[0] = h0

    def lookup(tq: float, filled: int):
        """Delayed state (w1, w2) at time ``tq`` via cubic Hermite."""
        if tq <= 0.0:
            return history(tq)
        pos = tq / h
        idx = int(pos)
        if idx >= filled:
            idx = filled - 1
        s = pos - idx
        if s == 0.0:
            return w1[idx], w2[idx]
        s2 = s * s
        s3 = s2 * s
        h00 = 2.0 * s3 - 3.0 * s2 + 1.0
        h10 = s3 - 2.0 * s2 + s
        h01 = -2.0 * s3 + 3.0 * s2
        h11 = s3 - s2
        a = (
            h00 * w1[idx] + h10 * h * f1[idx]
            + h01 * w1[idx + 1] + h11 * h * f1[idx + 1]
        )
        b = (
            h00 * w2[idx] + h10 * h * f2[idx]
            + h01 * w2[idx + 1] + h11 * h * f2[idx + 1]
        )
        return a, b

    def deriv(t: float, y1: float, y2: float, filled: int):
        l1 = lookup(t - tau1, filled)
        l2 = lookup(t - tau2, filled)
        return rhs(y1, y2, l1[0], l2[1])

    f1[0], f2[0] = deriv(0.0, w1[0], w2[0], 0)
    breached = False
    steps_done = n
    for i in range(n):
        t = i * h
        y1, y2 = w1[i], w2[i]
        k1 = f1[i], f2[i]
        k2 = deriv(t + 0.5 * h, y1 + 0.5 * h * k1[0], y2 + 0.5 * h * k1[1], i)
        k3 = deriv(t + 0.5 * h, y1 + 0.5 * h * k2[0], y2 + 0.5 * h * k2[1], i)
        k4 = deriv(t + h, y1 + h * k3[0], y2 + h * k3[1], i)
        n1 = y1 + h * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]) / 6.0
        n2 = y2 + h * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]) / 6.0
        if n1 < WINDOW_FLOOR or n2 < WINDOW_FLOOR:
            breached = True
            steps_done = i
            break
        w1[i + 1], w2[i + 1] = n1, n2
        f1[i + 1], f2[i + 1] = deriv(t + h, n1, n2, i + 1)

    end = steps_done + 1
    return SimTrace(
        h=h,
        w1=w1[:end].copy(),
        w2=w2[:end].copy(),
        cfg=cfg,
        kappa=kap,
        transient_cutoff=int(0.6 * end),
        floor_breach=breached,
    )


def extract_cycle(trace: SimTrace, transient_frac: float = 0.6,
                  converged_amplitude: float = 0.1) -> CycleStats:
    """Peak-to-peak amplitude and mean-crossing period of the settled tail."""
    cut = int(transient_frac * trace.w2.size)
    tail = trace.w2[cut:]
    if tail.size < 8:
        raise UndeterminedError("trace too short beyond the transient cutoff")
    amplitude = float(tail.max() - tail.min())
    if amplitude < converged_amplitude:
        return CycleStats(amplitude=amplitude, period=None, converged=True)
    mean = float(tail.mean())
    ups = []
    below = tail[:-1] < mean
    above = tail[1:] >= mean
    idx = np.nonzero(below & above)[0]
    for i in idx:
        frac = (mean - tail[i]) / (tail[i + 1] - tail[i])
        ups.append((i + frac) * trace.h)
    if len(ups) < 3:
        raise UndeterminedError(
            f"only {len(ups)} mean crossings in an unconverged trace"
        )
    period = float(np.mean(np.diff(ups)))
    return CycleStats(amplitude=amplitude, period=period, converged=False)


def bifurcation_sweep(cfg, kappas: Sequence[float], history=None,
                      T: float = None, h: float = None):
    """CycleStats per gain over a sweep grid spanning the Hopf point."""
    from .equilibrium import solve_equilibrium

    eq = solve_equilibrium(cfg)
    hist = history if history is not None else default_history(cfg, eq)
    tau_max = max(cfg.tau1, cfg.tau2)
    T = 200.0 * tau_max if T is None else T
    h = min(cfg.tau1, cfg.tau2) / 50.0 if h is None else h
    out = []
    for kap in kappas:
        trace = integrate(cfg, hist, T=T, h=h, kappa=kap)
        out.append(extract_cycle(trace))
    return out


def onset_kappa(kappas: Sequence[float], stats: Sequence[CycleStats]):
    """First grid gain with a sustained cycle, or None."""
    for kap, st in zip(kappas, stats):
        if not st.converged:
            return kap
    return None
