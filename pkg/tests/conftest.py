"""Shared fixtures and independent numeric oracles for the test-suite."""

import math
import random

import numpy as np
import pytest

from ctcpstab import CaseIConfig, CaseIIConfig, CaseIIIConfig, ProtocolParams
from ctcpstab.contour import count_right_half_roots, first_unstable_kappa


@pytest.fixture(scope="session")
def ref_cfg():
    """Heterogeneous dual-edge benchmark configuration."""
    return CaseIIIConfig(
        protocol=ProtocolParams(alpha=0.3, k=0.75, beta=0.5),
        tau1=1.0, tau2=2.0, kappa=1.0,
        b1=10, b2=15, b=25, c1=100, c2=100, c=180,
    )


@pytest.fixture(scope="session")
def ref_equilibrium(ref_cfg):
    from ctcpstab import solve_equilibrium

    return solve_equilibrium(ref_cfg)


@pytest.fixture(scope="session")
def ref_crossing(ref_cfg):
    from ctcpstab import hopf_locate_two_delay

    return hopf_locate_two_delay(ref_cfg)


# ---------------------------------------------------------------------------
# independent oracles


def fixed_point_equilibrium(cfg, tol=1e-12, max_iter=2000):
    """Damped alternation oracle, independent of the Newton solver.

    Freezes the shared loss, re-solves each set's scalar balance by pure
    interval bisection, and relaxes toward the joint fixed point.
    """
    from ctcpstab.protocol import compound_decrease, compound_increase
    from ctcpstab.topology import edge_loss, shared_loss

    def scalar_root(j, q_shared, w_hint):
        def g(w):
            l = edge_loss(cfg, j, w) + q_shared
            return (compound_increase(w, cfg.protocol) * (1.0 - l)
                    - compound_decrease(w, cfg.protocol) * l)

        lo, hi = 1e-9, max(4.0 * w_hint, 1.0)
        while g(hi) > 0:
            hi *= 2.0
        for _ in range(220):
            mid = 0.5 * (lo + hi)
            if g(mid) > 0:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    w1 = 0.25 * (cfg.c1 if hasattr(cfg, "c1") else cfg.c) * cfg.tau1
    w2 = 0.25 * (cfg.c1 if hasattr(cfg, "c1") else cfg.c) * cfg.tau2
    for _ in range(max_iter):
        q = shared_loss(cfg, w1 / cfg.tau1 + w2 / cfg.tau2)
        n1 = scalar_root(1, q, w1)
        n2 = scalar_root(2, q, w2)
        if abs(n1 - w1) < tol * n1 and abs(n2 - w2) < tol * n2:
            return n1, n2
        w1 += 0.6 * (n1 - w1)
        w2 += 0.6 * (n2 - w2)
    raise AssertionError("fixed-point oracle did not converge")


def quartet_char(quartet, tau1):
    """Reduced-route characteristic function as a vectorized callable."""

    def fn(lam, kappa):
        ex = np.exp(-lam * tau1)
        return (lam * lam + kappa * quartet.a * lam + kappa * kappa * quartet.c
                + ex * (kappa * quartet.b * lam + kappa * kappa * quartet.d))

    return fn


def quartet_rhp_count(quartet, tau1, kappa):
    fn = quartet_char(quartet, tau1)
    gain = kappa * (abs(quartet.a) + abs(quartet.b))
    const = kappa * kappa * (abs(quartet.c) + abs(quartet.d))
    radius = 0.5 * (gain + math.sqrt(gain * gain + 4.0 * const)) * 1.1
    return count_right_half_roots(lambda lam: fn(lam, kappa), radius,
                                  density=10.0 * (tau1 + 1.0))


def quartet_sweep_oracle(quartet, tau1, kappa_max=50.0, rel_tol=1e-8):
    """First crossing of the reduced route by contour-count bisection."""
    lo = 1e-4
    assert quartet_rhp_count(quartet, tau1, lo) == 0
    hi = lo
    while quartet_rhp_count(quartet, tau1, hi) == 0:
        hi *= 1.7
        if hi > kappa_max:
            return None
    lo_k, hi_k = first_unstable_kappa(
        lambda k: quartet_rhp_count(quartet, tau1, k), lo, hi, rel_tol=rel_tol
    )
    return 0.5 * (lo_k + hi_k)


def scalar_rhp_count(m, n, tau, kappa):
    def fn(lam):
        return lam + kappa * (m + n * np.exp(-lam * tau))

    radius = kappa * (abs(m) + abs(n)) * 1.1
    return count_right_half_roots(fn, radius, density=10.0 * (tau + 1.0))


def scalar_sweep_oracle(m, n, tau, kappa_max=50.0, rel_tol=1e-8):
    lo = 1e-4
    assert scalar_rhp_count(m, n, tau, lo) == 0
    hi = lo
    while scalar_rhp_count(m, n, tau, hi) == 0:
        hi *= 1.7
        if hi > kappa_max:
            return None
    lo_k, hi_k = first_unstable_kappa(
        lambda k: scalar_rhp_count(m, n, tau, k), lo, hi, rel_tol=rel_tol
    )
    return 0.5 * (lo_k + hi_k)


def random_symmetric_config(rng: random.Random):
    """Random equal-delay configuration across the three topologies."""
    proto = ProtocolParams(
        alpha=rng.uniform(0.1, 0.7),
        k=rng.uniform(0.55, 0.9),
        beta=rng.uniform(0.35, 0.65),
    )
    tau = rng.uniform(0.5, 3.0)
    c = rng.uniform(60.0, 300.0)
    b = float(rng.randint(4, 28))
    case = rng.choice(("case1", "case2", "case3"))
    if case == "case1":
        return CaseIConfig(protocol=proto, tau1=tau, tau2=tau, kappa=1.0, b=b, c=c)
    if case == "case2":
        return CaseIIConfig(protocol=proto, tau1=tau, tau2=tau, kappa=1.0,
                            b1=b, b2=b, c1=c, c2=c)
    return CaseIIIConfig(protocol=proto, tau1=tau, tau2=tau, kappa=1.0,
                         b1=b, b2=b, b=b, c1=c, c2=c, c=c)


def random_heterogeneous_case3(rng: random.Random):
    proto = ProtocolParams(
        alpha=rng.uniform(0.12, 0.6),
        k=rng.uniform(0.6, 0.9),
        beta=rng.uniform(0.4, 0.6),
    )
    tau1 = rng.uniform(0.5, 1.5)
    tau2 = tau1 * rng.uniform(1.3, 3.0)
    return CaseIIIConfig(
        protocol=proto, tau1=tau1, tau2=tau2, kappa=1.0,
        b1=float(rng.randint(6, 15)), b2=float(rng.randint(8, 20)),
        b=float(rng.randint(12, 30)),
        c1=rng.uniform(70.0, 150.0), c2=rng.uniform(70.0, 150.0),
        c=rng.uniform(120.0, 260.0),
    )
