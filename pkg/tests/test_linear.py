import cmath
import math
import random
from dataclasses import replace

import numpy as np
import pytest

from ctcpstab import (
    CaseIConfig,
    CaseIIConfig,
    CaseIIIConfig,
    ProtocolParams,
    crossing_frequency,
    hopf_locate_two_delay,
    kappa_critical_closed_form,
    linearize,
    scenario1_conditions,
    solve_equilibrium,
    stability_chart,
    transversality,
)
from ctcpstab.errors import NumericError
from ctcpstab.fluid import fluid_rhs
from ctcpstab.linear import (
    NO_CROSSING,
    ONE_POSITIVE,
    LinearCoefficients,
    Quartet,
    _rhp_count,
    characteristic_fn,
    characteristic_two_delay,
    transversality_quartet,
)

from conftest import (
    quartet_sweep_oracle,
    random_heterogeneous_case3,
    random_symmetric_config,
    scalar_sweep_oracle,
)


def _fd_jacobian(cfg, eq, step=1e-4):
    w = (eq.w1_star, eq.w2_star)

    def rhs(now1, now2, lag1_1, lag2_2):
        return fluid_rhs(cfg, (now1, now2), (lag1_1, w[1]), (w[0], lag2_2),
                         kappa=1.0)

    def central(argi, comp):
        args = [w[0], w[1], w[0], w[1]]
        args[argi] += step
        up = rhs(*args)[comp]
        args[argi] -= 2 * step
        dn = rhs(*args)[comp]
        return (up - dn) / (2 * step)

    return {
        "xi_a": central(0, 0), "chi_c": central(1, 1),
        "xi_b": central(2, 0), "chi_b": central(2, 1),
        "xi_d": central(3, 0), "chi_d": central(3, 1),
    }


@pytest.mark.parametrize("case", ["case1", "case2", "case3"])
def test_jacobian_matches_finite_differences(case, ref_cfg):
    proto = ProtocolParams(alpha=0.3, k=0.75, beta=0.5)
    if case == "case1":
        cfg = CaseIConfig(protocol=proto, tau1=1.0, tau2=2.0, kappa=1.0, b=20, c=150)
    elif case == "case2":
        cfg = CaseIIConfig(protocol=proto, tau1=1.0, tau2=2.0, kappa=1.0,
                           b1=10, b2=15, c1=100, c2=120)
    else:
        cfg = ref_cfg
    eq = solve_equilibrium(cfg)
    jac = linearize(cfg, eq).jacobian
    fd = _fd_jacobian(cfg, eq)
    for name, value in fd.items():
        assert getattr(jac, name) == pytest.approx(value, rel=1e-6)


def test_symmetric_coefficients_coincide():
    cfg = CaseIIIConfig(protocol=ProtocolParams(alpha=0.3, k=0.75, beta=0.5),
                        tau1=1.2, tau2=1.2, kappa=1.0,
                        b1=10, b2=10, b=14, c1=100, c2=100, c=160)
    coeffs = linearize(cfg, solve_equilibrium(cfg))
    assert coeffs.M1 == pytest.approx(coeffs.M2, rel=1e-12)
    assert coeffs.N1 == pytest.approx(coeffs.N2, rel=1e-12)
    assert coeffs.P1 == pytest.approx(coeffs.P2, rel=1e-12)


def test_coefficient_signs(ref_cfg, ref_equilibrium):
    coeffs = linearize(ref_cfg, ref_equilibrium)
    # increase exponent below two and loss below one force positive M
    assert coeffs.M1 > 0 and coeffs.M2 > 0
    assert coeffs.N1 > 0 and coeffs.N2 > 0
    assert coeffs.P1 > 0 and coeffs.P2 > 0


def test_quartet_consistent_with_reduced_determinant(ref_cfg, ref_equilibrium):
    """The quartet characteristic equals det of the reduced linear system."""
    coeffs = linearize(ref_cfg, ref_equilibrium)
    kap, tau1 = 1.3, ref_cfg.tau1
    rng = random.Random(7)
    for _ in range(20):
        lam = complex(rng.uniform(-2, 2), rng.uniform(-3, 3))
        ex = cmath.exp(-lam * tau1)
        det = (
            (lam + kap * coeffs.M1 + kap * coeffs.N1 * ex)
            * (lam + kap * (coeffs.M2 + coeffs.N2))
            - kap * kap * coeffs.P1 * coeffs.P2 * ex
        )
        value = characteristic_fn(coeffs, lam, kap, tau1)
        assert value == pytest.approx(det, rel=1e-12)


def test_characteristic_collapses_at_zero_gain(ref_cfg, ref_equilibrium):
    coeffs = linearize(ref_cfg, ref_equilibrium)
    lam = 0.7 - 1.3j
    assert characteristic_fn(coeffs, lam, 0.0, ref_cfg.tau1) == lam * lam


def test_characteristic_dominated_by_quadratic_term(ref_cfg, ref_equilibrium):
    coeffs = linearize(ref_cfg, ref_equilibrium)
    lam = -5.0 + 0.0j
    value = characteristic_fn(coeffs, lam, 1e-12, ref_cfg.tau1)
    assert abs(lam * lam) / abs(value) == pytest.approx(1.0, abs=1e-9)


def test_crossing_classification_no_feedback():
    coeffs = LinearCoefficients(M1=1.0, M2=1.0, N1=0.0, N2=0.0, P1=0.0, P2=0.0,
                                quartet=Quartet(a=2.0, b=0.0, c=0.0, d=0.0),
                                jacobian=None, case="case1")
    a_factor, cls = crossing_frequency(coeffs)
    assert cls == NO_CROSSING and a_factor is None


def test_reference_quartet_class_and_closed_form(ref_cfg, ref_equilibrium):
    coeffs = linearize(ref_cfg, ref_equilibrium)
    a_factor, cls = crossing_frequency(coeffs)
    assert cls == ONE_POSITIVE
    res = kappa_critical_closed_form(coeffs, ref_cfg.tau1)
    assert res.residual < 1e-8
    assert res.kappa_c > 0.0
    assert res.omega0 == pytest.approx(res.kappa_c * a_factor, rel=1e-12)


def test_quartet_invariant_under_gain(ref_cfg, ref_equilibrium):
    q1 = linearize(ref_cfg, ref_equilibrium).quartet
    cfg2 = ref_cfg.with_kappa(2.0)
    q2 = linearize(cfg2, solve_equilibrium(cfg2)).quartet
    assert q1 == q2


@pytest.mark.parametrize("seed", range(30))
def test_closed_form_agrees_with_sweep_oracle(seed):
    """Random structurally valid quartets: closed form vs contour bisection."""
    rng = random.Random(4000 + seed)
    m1, m2 = rng.uniform(0.02, 0.6), rng.uniform(0.02, 0.6)
    n1, n2 = rng.uniform(0.2, 2.0), rng.uniform(0.2, 2.0)
    p1p2 = rng.uniform(0.0, 0.5) * n1 * (m2 + n2)
    quartet = Quartet(a=m1 + m2 + n2, b=n1, c=m1 * (m2 + n2),
                      d=n1 * (m2 + n2) - p1p2)
    coeffs = LinearCoefficients(M1=m1, M2=m2, N1=n1, N2=n2, P1=1.0, P2=p1p2,
                                quartet=quartet, jacobian=None, case="case3")
    _, cls = crossing_frequency(coeffs)
    if cls != ONE_POSITIVE:
        pytest.skip(f"classified {cls}")
    tau1 = rng.uniform(0.5, 2.5)
    closed = kappa_critical_closed_form(coeffs, tau1)
    oracle = quartet_sweep_oracle(quartet, tau1)
    assert oracle is not None
    assert closed.kappa_c == pytest.approx(oracle, rel=1e-6)
    assert transversality_quartet(quartet, tau1, closed) > 0.0


def test_scenario1_case1_matches_scalar_oracle():
    cfg = CaseIConfig(protocol=ProtocolParams(alpha=0.3, k=0.75, beta=0.5),
                      tau1=1.0, tau2=1.0, kappa=1.0, b=20, c=100)
    s1 = scenario1_conditions(cfg)
    assert s1.kappa_c is not None
    oracle = scalar_sweep_oracle(s1.M, s1.N, cfg.tau1)
    assert s1.kappa_c == pytest.approx(oracle, rel=1e-6)
    # strictly inside the stable region below the boundary
    from conftest import scalar_rhp_count

    assert scalar_rhp_count(s1.M, s1.N, cfg.tau1, 0.9 * s1.kappa_c) == 0
    assert scalar_rhp_count(s1.M, s1.N, cfg.tau1, 1.1 * s1.kappa_c) > 0


def test_scenario1_case1_closed_form_shape():
    """The boundary equals the printed inverse-cosine expression."""
    cfg = CaseIConfig(protocol=ProtocolParams(alpha=0.3, k=0.75, beta=0.5),
                      tau1=1.0, tau2=1.0, kappa=1.0, b=20, c=100)
    s1 = scenario1_conditions(cfg)
    k = cfg.protocol.k
    lhs_rate = cfg.protocol.alpha * s1.w_star ** (k - 1.0)
    expect = math.acos((k - 2.0) * (1.0 - s1.loss_star) / cfg.b) / (
        lhs_rate * math.sqrt(cfg.b ** 2 - ((k - 2.0) * (1.0 - s1.loss_star)) ** 2)
    )
    assert s1.kappa_c == pytest.approx(expect, rel=1e-12)


def test_scenario1_case2_boundary_below_case1():
    proto = ProtocolParams(alpha=0.3, k=0.75, beta=0.5)
    for i in range(10):
        b = 6.0 + 2.0 * i
        c1 = CaseIConfig(protocol=proto, tau1=1.0, tau2=1.0, kappa=1.0, b=b, c=120)
        c2 = CaseIIConfig(protocol=proto, tau1=1.0, tau2=1.0, kappa=1.0,
                          b1=b, b2=b, c1=120, c2=120)
        k1 = scenario1_conditions(c1).kappa_c
        k2 = scenario1_conditions(c2).kappa_c
        assert k1 is not None and k2 is not None
        assert k2 <= k1


def test_scenario1_case3_uses_core_amplification():
    """Equal parameters make the dual-edge total loss (1 + 2**B) * p."""
    cfg = CaseIIIConfig(protocol=ProtocolParams(alpha=0.3, k=0.75, beta=0.5),
                        tau1=1.0, tau2=1.0, kappa=1.0,
                        b1=10, b2=10, b=10, c1=100, c2=100, c=100)
    s1 = scenario1_conditions(cfg)
    p_star = (s1.w_star / (cfg.c1 * cfg.tau1)) ** cfg.b1
    assert s1.loss_star == pytest.approx((1.0 + 2.0 ** cfg.b) * p_star, rel=1e-12)


def test_locator_certifies_first_crossing(ref_cfg, ref_crossing):
    jac = linearize(ref_cfg, solve_equilibrium(ref_cfg)).jacobian
    kc = ref_crossing.kappa_c
    assert _rhp_count(jac, 0.99 * kc, ref_cfg.tau1, ref_cfg.tau2) == 0
    assert _rhp_count(jac, 1.01 * kc, ref_cfg.tau1, ref_cfg.tau2) == 2
    assert ref_crossing.residual < 1e-10
    value = characteristic_two_delay(jac, 1j * ref_crossing.omega0, kc,
                                     ref_cfg.tau1, ref_cfg.tau2)
    assert abs(value) < 1e-8


def test_locator_reduces_to_equal_delay_boundary():
    cfg = CaseIIIConfig(protocol=ProtocolParams(alpha=0.3, k=0.75, beta=0.5),
                        tau1=1.0, tau2=1.0, kappa=1.0,
                        b1=12, b2=12, b=12, c1=100, c2=100, c=150)
    s1 = scenario1_conditions(cfg)
    loc = hopf_locate_two_delay(cfg)
    assert loc.kappa_c == pytest.approx(s1.kappa_c, rel=1e-6)
    assert loc.omega0 == pytest.approx(s1.omega0, rel=1e-6)


def test_no_crossing_reported_for_single_packet_buffers():
    cfg = CaseIConfig(protocol=ProtocolParams(alpha=0.3, k=0.75, beta=0.5),
                      tau1=1.0, tau2=1.5, kappa=1.0, b=1, c=100)
    result = hopf_locate_two_delay(cfg, kappa_max=8.0)
    assert result.condition_class == NO_CROSSING
    assert result.kappa_c is None


def test_transversality_matches_root_tracking(ref_cfg, ref_crossing):
    analytic = transversality(ref_cfg, ref_crossing)
    jac = linearize(ref_cfg, solve_equilibrium(ref_cfg)).jacobian

    def rightmost_root(kappa, lam0):
        lam = lam0
        for _ in range(60):
            h = 1e-7
            f = characteristic_two_delay(jac, lam, kappa, ref_cfg.tau1, ref_cfg.tau2)
            fp = (characteristic_two_delay(jac, lam + h, kappa, ref_cfg.tau1, ref_cfg.tau2)
                  - characteristic_two_delay(jac, lam - h, kappa, ref_cfg.tau1, ref_cfg.tau2)) / (2 * h)
            lam = lam - f / fp
        return lam

    dk = 1e-4
    lam0 = 1j * ref_crossing.omega0
    up = rightmost_root(ref_crossing.kappa_c + dk, lam0)
    dn = rightmost_root(ref_crossing.kappa_c - dk, lam0)
    fd_slope = (up.real - dn.real) / (2 * dk)
    assert analytic == pytest.approx(fd_slope, abs=1e-4)
    assert analytic > 0.0


@pytest.mark.parametrize("seed", range(20))
def test_transversality_positive_on_random_grid(seed):
    rng = random.Random(8000 + seed)
    cfg = random_heterogeneous_case3(rng)
    result = hopf_locate_two_delay(cfg, kappa_max=40.0)
    if result.kappa_c is None:
        pytest.skip("no crossing below the gain cap")
    assert transversality(cfg, result) > 0.0


def test_chart_boundary_tracks_locator(ref_cfg):
    grid = [18.0, 22.0, 26.0]
    chart = stability_chart(ref_cfg, "kappa", "B", grid, (1e-3, 50.0))
    for b_value, boundary in zip(grid, chart.boundary):
        direct = hopf_locate_two_delay(replace(ref_cfg, b=b_value))
        assert boundary == pytest.approx(direct.kappa_c, rel=1e-9)
    values = [b for b in chart.boundary if b is not None]
    assert values == sorted(values, reverse=True)  # decreasing in B
