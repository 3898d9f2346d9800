"""Equilibrium window solver for the two-flow-set fluid models.

At equilibrium each flow set balances growth against loss,

    i(w_j) * (1 - L_j) = d(w_j) * L_j,

with ``L_j`` the total loss probability that set sees (shared-router loss,
plus its edge loss in the dual-edge layout).  The equilibrium does not
depend on ``kappa``, which scales the whole right-hand side.

The solver is a damped Newton iteration on the log-window variables (which
keeps all iterates positive) with a bracketed per-coordinate fixed-point
fallback for stubborn starting points.
"""

import math
from dataclasses import dataclass

from .errors import ConvergenceError, DomainError
from .protocol import compound_decrease, compound_increase
from .topology import (
    CaseIConfig,
    CaseIIConfig,
    edge_loss,
    edge_loss_derivative,
    loss_components,
    shared_loss,
    shared_loss_rate_derivative,
    total_loss,
)

_TOL = 1e-12
_MAX_NEWTON = 80


@dataclass(frozen=True)
class EquilibriumPoint:
    """Solved equilibrium windows with their loss terms and residuals."""

    w1_star: float
    w2_star: float
    losses: dict
    residual: float

    def loss_total(self, j: int) -> float:
        if "q" in self.losses and "p1" in self.losses:
            return self.losses[f"p{j}"] + self.losses["q"]
        if "q1" in self.losses:
            return self.losses["q1"] + self.losses["q2"]
        return self.losses["q"]


def balance_residuals(cfg, w1: float, w2: float):
    """Relative balance residuals (R1/i1, R2/i2) at windows (w1, w2)."""
    rate = w1 / cfg.tau1 + w2 / cfg.tau2
    out = []
    for j, w in ((1, w1), (2, w2)):
        lj = total_loss(cfg, j, w, rate)
        i = compound_increase(w, cfg.protocol)
        d = compound_decrease(w, cfg.protocol)
        out.append((i * (1.0 - lj) - d * lj) / i)
    return out[0], out[1]


def _residual_and_jacobian(cfg, w1, w2):
    """Balance residuals R_j and the Jacobian dR_j/dw_i."""
    p = cfg.protocol
    rate = w1 / cfg.tau1 + w2 / cfg.tau2
    sh_d = shared_loss_rate_derivative(cfg, rate)
    r = [0.0, 0.0]
    jac = [[0.0, 0.0], [0.0, 0.0]]
    for idx, (j, w, tau) in enumerate(((1, w1, cfg.tau1), (2, w2, cfg.tau2))):
        lj = total_loss(cfg, j, w, rate)
        i = compound_increase(w, p)
        d = compound_decrease(w, p)
        di = p.alpha * (p.k - 1.0) * w ** (p.k - 2.0)
        dd = p.beta
        r[idx] = i * (1.0 - lj) - d * lj
        own = di * (1.0 - lj) - dd * lj - (i + d) * (
            edge_loss_derivative(cfg, j, w) + sh_d / tau
        )
        other_tau = cfg.tau2 if j == 1 else cfg.tau1
        cross = -(i + d) * sh_d / other_tau
        jac[idx][idx] = own
        jac[idx][1 - idx] = cross
    return r, jac


def _feasible_start(cfg):
    """Spec'd seed w_j = C * tau_j / 2, shrunk until total loss is moderate."""
    c_ref = cfg.c1 if isinstance(cfg, CaseIIConfig) else cfg.c
    w1, w2 = 0.5 * c_ref * cfg.tau1, 0.5 * c_ref * cfg.tau2
    for _ in range(200):
        rate = w1 / cfg.tau1 + w2 / cfg.tau2
        if max(total_loss(cfg, 1, w1, rate), total_loss(cfg, 2, w2, rate)) < 0.5:
            return w1, w2
        w1 *= 0.7
        w2 *= 0.7
    raise ConvergenceError("no feasible starting point with loss below 0.5")


def _scalar_balance_root(cfg, j, q_shared, tau, w_hi):
    """Solve i(w)(1-p_j(w)-q) = d(w)(p_j(w)+q) for one set at fixed shared loss."""
    p = cfg.protocol

    def g(w):
        lj = edge_loss(cfg, j, w) + q_shared
        return compound_increase(w, p) * (1.0 - lj) - compound_decrease(w, p) * lj

    lo, hi = 1e-9, w_hi
    glo, ghi = g(lo), g(hi)
    for _ in range(200):
        if ghi < 0:
            break
        hi *= 1.5
        ghi = g(hi)
    if glo < 0 or ghi > 0:
        raise ConvergenceError(
            f"no balance root bracketed for set {j}: g({lo})={glo:.3e}, g({hi})={ghi:.3e}"
        )
    for _ in range(200):
        mid = math.sqrt(lo * hi)
        if g(mid) > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-14 * hi:
            break
    return 0.5 * (lo + hi)


def _fixed_point_fallback(cfg, w1, w2):
    """Damped alternation: freeze shared loss, re-solve each set, relax."""
    for _ in range(400):
        rate = w1 / cfg.tau1 + w2 / cfg.tau2
        q = shared_loss(cfg, rate)
        n1 = _scalar_balance_root(cfg, 1, q, cfg.tau1, 4.0 * w1)
        n2 = _scalar_balance_root(cfg, 2, q, cfg.tau2, 4.0 * w2)
        w1 += 0.5 * (n1 - w1)
        w2 += 0.5 * (n2 - w2)
        r1, r2 = balance_residuals(cfg, w1, w2)
        if max(abs(r1), abs(r2)) < _TOL:
            return w1, w2
    raise ConvergenceError(
        f"fixed-point fallback stalled at w=({w1:.6g}, {w2:.6g}), "
        f"residuals {balance_residuals(cfg, w1, w2)}"
    )


def solve_equilibrium(cfg) -> EquilibriumPoint:
    """Solve the per-set balance equations for ``(w1*, w2*)``.

    Raises ConvergenceError with bracket diagnostics if no root is found.
    """
    w1, w2 = _feasible_start(cfg)
    ok = False
    for _ in range(_MAX_NEWTON):
        r, jac = _residual_and_jacobian(cfg, w1, w2)
        i1 = compound_increase(w1, cfg.protocol)
        i2 = compound_increase(w2, cfg.protocol)
        err = max(abs(r[0]) / i1, abs(r[1]) / i2)
        if err < _TOL:
            ok = True
            break
        # Newton step in (ln w1, ln w2)
        j11 = jac[0][0] * w1
        j12 = jac[0][1] * w2
        j21 = jac[1][0] * w1
        j22 = jac[1][1] * w2
        det = j11 * j22 - j12 * j21
        if det == 0.0 or not math.isfinite(det):
            break
        dx1 = -(r[0] * j22 - r[1] * j12) / det
        dx2 = -(j11 * r[1] - j21 * r[0]) / det
        step = 1.0
        base = r[0] * r[0] + r[1] * r[1]
        for _ in range(40):
            c1, c2 = w1 * math.exp(step * dx1), w2 * math.exp(step * dx2)
            try:
                rn, _ = _residual_and_jacobian(cfg, c1, c2)
            except (DomainError, OverflowError):
                step *= 0.5
                continue
            if rn[0] * rn[0] + rn[1] * rn[1] < base:
                w1, w2 = c1, c2
                break
            step *= 0.5
        else:
            break
    if not ok:
        w1, w2 = _fixed_point_fallback(cfg, w1, w2)

    losses = loss_components(cfg, w1, w2)
    for name, value in losses.items():
        if not 0.0 < value < 1.0:
            raise DomainError(f"equilibrium loss {name}={value} outside (0, 1)")
    r1, r2 = balance_residuals(cfg, w1, w2)
    residual = max(abs(r1), abs(r2))
    if residual >= 1e-10:
        raise ConvergenceError(f"equilibrium residual {residual:.3e} above 1e-10")
    return EquilibriumPoint(w1_star=w1, w2_star=w2, losses=losses, residual=residual)
