"""Delayed fluid right-hand sides for the three topologies.

Each flow set's window obeys

    dw_j/dt = kappa * w_j(t - tau_j) / tau_j
              * [ i(w_j(t)) * (1 - L_j) - d(w_j(t)) * L_j ],

where ``L_j`` collects the loss terms that set sees.  Shared-router loss is
evaluated on the delayed aggregate rate ``w1(t-tau1)/tau1 + w2(t-tau2)/tau2``
and edge loss (dual-edge layout) on the own delayed window, so the only
state the right-hand side needs is the current pair plus the two lagged
pairs.
"""

from .errors import DomainError
from .topology import CaseIConfig, CaseIIConfig, CaseIIIConfig


def make_rhs(cfg, kappa: float = None, clamp: bool = False):
    """Build a fast ``rhs(w1_now, w2_now, w1_lag1, w2_lag2) -> (dw1, dw2)``.

    The returned closure is the integrator's hot path; parameters are bound
    as locals and loss clamping is optional (simulation paths clamp,
    analysis paths treat out-of-range loss as an error upstream).
    """
    kap = cfg.kappa if kappa is None else kappa
    alpha, k, beta = cfg.protocol.alpha, cfg.protocol.k, cfg.protocol.beta
    tau1, tau2 = cfg.tau1, cfg.tau2
    km1 = k - 1.0

    if isinstance(cfg, CaseIConfig):
        inv_c, b = 1.0 / cfg.c, cfg.b

        def shared(rate):
            return (rate * inv_c) ** b

        def edge1(w):
            return 0.0

        edge2 = edge1
    elif isinstance(cfg, CaseIIConfig):
        inv_c1, b1, inv_c2, b2 = 1.0 / cfg.c1, cfg.b1, 1.0 / cfg.c2, cfg.b2

        def shared(rate):
            return (rate * inv_c1) ** b1 + (rate * inv_c2) ** b2

        def edge1(w):
            return 0.0

        edge2 = edge1
    elif isinstance(cfg, CaseIIIConfig):
        inv_c, b = 1.0 / cfg.c, cfg.b
        inv_e1, b1 = 1.0 / (cfg.c1 * cfg.tau1), cfg.b1
        inv_e2, b2 = 1.0 / (cfg.c2 * cfg.tau2), cfg.b2

        def shared(rate):
            return (rate * inv_c) ** b

        def edge1(w):
            return (w * inv_e1) ** b1

        def edge2(w):
            return (w * inv_e2) ** b2
    else:
        raise DomainError(f"unsupported topology {cfg!r}")

    def rhs(w1_now, w2_now, w1_lag1, w2_lag2):
        if w1_now <= 0.0 or w2_now <= 0.0 or w1_lag1 <= 0.0 or w2_lag2 <= 0.0:
            raise DomainError("fluid model needs positive windows")
        q = shared(w1_lag1 / tau1 + w2_lag2 / tau2)
        l1 = edge1(w1_lag1) + q
        l2 = edge2(w2_lag2) + q
        if clamp:
            l1 = min(max(l1, 0.0), 1.0)
            l2 = min(max(l2, 0.0), 1.0)
        dw1 = (
            kap
            * (w1_lag1 / tau1)
            * (alpha * w1_now**km1 * (1.0 - l1) - beta * w1_now * l1)
        )
        dw2 = (
            kap
            * (w2_lag2 / tau2)
            * (alpha * w2_now**km1 * (1.0 - l2) - beta * w2_now * l2)
        )
        return dw1, dw2

    return rhs


def fluid_rhs(cfg, now, lag1, lag2, kappa: float = None, clamp: bool = False):
    """Window derivatives given current and lagged state pairs.

    ``now``, ``lag1``, ``lag2`` are ``(w1, w2)`` pairs at times ``t``,
    ``t - tau1`` and ``t - tau2``.  Only ``lag1[0]`` and ``lag2[1]`` enter
    the model (each set is delayed by its own round trip time).
    """
    rhs = make_rhs(cfg, kappa=kappa, clamp=clamp)
    return rhs(now[0], now[1], lag1[0], lag2[1])
