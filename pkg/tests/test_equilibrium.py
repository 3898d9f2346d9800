import random
from dataclasses import replace

import pytest

from ctcpstab import CaseIIIConfig, ProtocolParams, loss_mm1b, solve_equilibrium
from ctcpstab.equilibrium import balance_residuals
from ctcpstab.errors import DomainError
from ctcpstab.fluid import fluid_rhs

from conftest import fixed_point_equilibrium, random_symmetric_config


def test_loss_mm1b_saturates_at_capacity_rate():
    assert loss_mm1b(180.0, 180.0, 25) == 1.0


def test_loss_mm1b_exact_half_power():
    assert loss_mm1b(90.0, 180.0, 25) == pytest.approx(2.0 ** -25, rel=1e-14)


def test_loss_mm1b_clamp_and_domain():
    assert loss_mm1b(200.0, 100.0, 4, clamp=True) == 1.0
    assert loss_mm1b(200.0, 100.0, 4) == 16.0
    with pytest.raises(DomainError):
        loss_mm1b(-1.0, 100.0, 4)
    with pytest.raises(DomainError):
        loss_mm1b(1.0, 0.0, 4)
    with pytest.raises(DomainError):
        loss_mm1b(1.0, 100.0, 0.5)


def test_reference_window_band(ref_equilibrium):
    assert 124.0 <= ref_equilibrium.w2_star <= 136.0


def test_reference_matches_fixed_point_oracle(ref_cfg, ref_equilibrium):
    w1, w2 = fixed_point_equilibrium(ref_cfg)
    assert ref_equilibrium.w1_star == pytest.approx(w1, rel=1e-9)
    assert ref_equilibrium.w2_star == pytest.approx(w2, rel=1e-9)


def test_equilibrium_shared_loss_consistent(ref_cfg, ref_equilibrium):
    eq = ref_equilibrium
    rate = eq.w1_star / ref_cfg.tau1 + eq.w2_star / ref_cfg.tau2
    assert loss_mm1b(rate, ref_cfg.c, ref_cfg.b) == pytest.approx(
        eq.losses["q"], rel=1e-12
    )


def test_kappa_invariance(ref_cfg):
    eq1 = solve_equilibrium(ref_cfg)
    eq2 = solve_equilibrium(ref_cfg.with_kappa(2.0 * ref_cfg.kappa))
    assert eq1.w1_star == pytest.approx(eq2.w1_star, rel=1e-12)
    assert eq1.w2_star == pytest.approx(eq2.w2_star, rel=1e-12)


def test_symmetric_configuration_balances_exactly():
    cfg = CaseIIIConfig(
        protocol=ProtocolParams(alpha=0.3, k=0.75, beta=0.5),
        tau1=1.5, tau2=1.5, kappa=1.0, b1=12, b2=12, b=18, c1=90, c2=90, c=160,
    )
    eq = solve_equilibrium(cfg)
    assert eq.w1_star == pytest.approx(eq.w2_star, rel=1e-12)


def test_flow_set_exchange_symmetry():
    cfg = CaseIIIConfig(
        protocol=ProtocolParams(alpha=0.25, k=0.7, beta=0.5),
        tau1=1.0, tau2=2.0, kappa=1.0, b1=8, b2=14, b=20, c1=90, c2=120, c=170,
    )
    swapped = replace(cfg, tau1=cfg.tau2, tau2=cfg.tau1, b1=cfg.b2, b2=cfg.b1,
                      c1=cfg.c2, c2=cfg.c1)
    eq = solve_equilibrium(cfg)
    eqs = solve_equilibrium(swapped)
    assert eq.w1_star == pytest.approx(eqs.w2_star, rel=1e-11)
    assert eq.w2_star == pytest.approx(eqs.w1_star, rel=1e-11)


@pytest.mark.parametrize("seed", range(8))
def test_random_configs_solve_tightly(seed):
    rng = random.Random(1000 + seed)
    cfg = random_symmetric_config(rng)
    eq = solve_equilibrium(cfg)
    r1, r2 = balance_residuals(cfg, eq.w1_star, eq.w2_star)
    assert max(abs(r1), abs(r2)) < 1e-10
    for value in eq.losses.values():
        assert 0.0 < value < 1.0


def test_fluid_rhs_vanishes_at_equilibrium(ref_cfg, ref_equilibrium):
    eq = ref_equilibrium
    state = (eq.w1_star, eq.w2_star)
    dw = fluid_rhs(ref_cfg, state, state, state)
    assert max(abs(dw[0]), abs(dw[1])) < 1e-9
    dw2 = fluid_rhs(ref_cfg, state, state, state, kappa=2.0 * ref_cfg.kappa)
    assert max(abs(dw2[0]), abs(dw2[1])) < 1e-9
