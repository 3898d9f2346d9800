import pytest

from ctcpstab import linearize, solve_equilibrium
from ctcpstab.errors import DomainError
from ctcpstab.fluid import fluid_rhs, make_rhs


def test_linearized_prediction_near_equilibrium(ref_cfg, ref_equilibrium):
    """First-order response to a small own-window perturbation."""
    eq = ref_equilibrium
    jac = linearize(ref_cfg, eq).jacobian
    delta = 1e-3
    state = (eq.w1_star + delta, eq.w2_star)
    lagged = (eq.w1_star, eq.w2_star)
    dw1, dw2 = fluid_rhs(ref_cfg, state, lagged, lagged)
    predicted = ref_cfg.kappa * jac.xi_a * delta
    assert dw1 == pytest.approx(predicted, abs=50.0 * delta ** 2)
    assert abs(dw2) < 1e-9  # second equation stays at its equilibrium balance


def test_unused_lag_components_do_not_enter(ref_cfg, ref_equilibrium):
    eq = ref_equilibrium
    state = (eq.w1_star, eq.w2_star)
    bumped_lag1 = (eq.w1_star, eq.w2_star + 5.0)  # lag-tau1 w2 is unused
    bumped_lag2 = (eq.w1_star + 5.0, eq.w2_star)  # lag-tau2 w1 is unused
    dw = fluid_rhs(ref_cfg, state, bumped_lag1, bumped_lag2)
    assert max(abs(dw[0]), abs(dw[1])) < 1e-9


def test_positive_window_guard(ref_cfg):
    rhs = make_rhs(ref_cfg)
    with pytest.raises(DomainError):
        rhs(-1.0, 10.0, 10.0, 10.0)
    with pytest.raises(DomainError):
        rhs(10.0, 10.0, 0.0, 10.0)


def test_clamped_loss_keeps_rhs_finite(ref_cfg):
    rhs = make_rhs(ref_cfg, clamp=True)
    # enormous delayed windows push the raw power-law losses far above one
    dw1, dw2 = rhs(50.0, 50.0, 1e4, 1e4)
    assert dw1 < 0.0 and dw2 < 0.0
    unclamped = make_rhs(ref_cfg, clamp=False)
    raw = unclamped(50.0, 50.0, 1e4, 1e4)
    assert raw[0] < dw1  # clamping bounds the decrease pressure
