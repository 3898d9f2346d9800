"""Center-manifold reduction and first Lyapunov coefficient at the Hopf point.

The dual-edge model is expanded to third order about equilibrium, cast as an
operator differential equation on history segments, and projected onto the
critical eigenspace of the crossing pair ``+/- i omega0``.  The projected
dynamics reduce to a scalar complex equation whose quadratic and cubic
coefficients (g20, g11, g02, g21) determine the first Lyapunov coefficient

    c1(0) = (i / (2 omega0)) * (g20*g11 - 2|g11|**2 - |g02|**2 / 3) + g21/2,

and with the transversality rate ``alpha'(0)`` the bifurcation direction
``mu2 = -Re c1(0) / alpha'(0)`` and Floquet exponent ``beta2 = 2 Re c1(0)``.

Taylor coefficients are generated from the model's closed-form partial
derivatives with factorial normalization, and the monomial bookkeeping that
turns them into g-coefficients is done by truncated polynomial arithmetic in
``(z, zbar)`` rather than hand-transcribed sums; finite differences and a
quadrature evaluation of the adjoint pairing validate both in the tests.
"""

import cmath
import math
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np

from .equilibrium import EquilibriumPoint, solve_equilibrium
from .errors import ConfigError, NumericError
from .linear import (
    CrossingResult,
    TwoDelayJacobian,
    hopf_locate_two_delay,
    linearize,
    transversality,
)
from .protocol import decrease_derivatives, increase_derivatives
from .topology import CaseIIIConfig

MultiIndex = Tuple[int, int, int]


# ---------------------------------------------------------------------------
# Taylor tensor of the dual-edge model


@dataclass(frozen=True)
class TaylorCoefficients:
    """Factorially normalized expansion coefficients, gain excluded.

    ``eq1`` maps multi-indices over (w1(t), w1(t-tau1), w2(t-tau2)),
    ``eq2`` over (w2(t), w2(t-tau2), w1(t-tau1)); entry (i, j, k) multiplies
    the corresponding monomial of the perturbation expansion.
    """

    eq1: Dict[MultiIndex, float]
    eq2: Dict[MultiIndex, float]
    equilibrium: EquilibriumPoint

    def jacobian(self) -> TwoDelayJacobian:
        return TwoDelayJacobian(
            xi_a=self.eq1[(1, 0, 0)],
            xi_b=self.eq1[(0, 1, 0)],
            xi_d=self.eq1[(0, 0, 1)],
            chi_c=self.eq2[(1, 0, 0)],
            chi_d=self.eq2[(0, 1, 0)],
            chi_b=self.eq2[(0, 0, 1)],
        )


def _power_law_derivs(value: float, exponent: float, base: float, order: int):
    """Derivatives of ``(x / scale) ** exponent`` given its value at ``base``."""
    out = [value]
    fac = 1.0
    for m in range(1, order + 1):
        fac *= (exponent - (m - 1)) / base
        out.append(value * fac)
    return out


def _equation_tensor(cfg: CaseIIIConfig, own: int, w_own: float, w_other: float):
    """Taylor coefficients of one model equation.

    The equation has the shape ``f = (y / tau) * (i(x) - s(x) * L(y, z))``
    with x the current own window, y the delayed own window, z the delayed
    other window, ``s = i + d`` and ``L = p_own(y) + q(y / tau_own +
    z / tau_other)``.  Leibniz on the linear prefactor gives

        d^{i+j+k} f = (1/tau) * (y * G_{ijk} + j * G_{i,j-1,k}),

    where ``G_{ijk} = i^(i) * [j=k=0] - s^(i) * L_{jk}``.
    """
    p = cfg.protocol
    tau_own = cfg.tau1 if own == 1 else cfg.tau2
    tau_other = cfg.tau2 if own == 1 else cfg.tau1
    b_edge = cfg.b1 if own == 1 else cfg.b2
    c_edge = cfg.c1 if own == 1 else cfg.c2

    i_der = list(increase_derivatives(w_own, p))
    d_der = list(decrease_derivatives(w_own, p))
    s_der = [i_der[m] + d_der[m] for m in range(4)]

    p_star = (w_own / (c_edge * tau_own)) ** b_edge
    p_der = _power_law_derivs(p_star, b_edge, w_own, 3)

    rate = w_own / tau_own + w_other / tau_other
    q_star = (rate / cfg.c) ** cfg.b
    q_der = _power_law_derivs(q_star, cfg.b, rate, 3)

    def l_partial(j: int, k: int) -> float:
        """d^{j+k} L / dy^j dz^k at equilibrium."""
        q_term = q_der[j + k] * tau_own ** (-j) * tau_other ** (-k)
        if k == 0:
            if j == 0:
                return p_star + q_star
            return p_der[j] + q_term
        return q_term

    def g_partial(i: int, j: int, k: int) -> float:
        lead = i_der[i] if (j == 0 and k == 0) else 0.0
        return lead - s_der[i] * l_partial(j, k)

    tensor = {}
    for i in range(4):
        for j in range(4 - i):
            for k in range(4 - i - j):
                order = i + j + k
                if not 1 <= order <= 3:
                    continue
                raw = w_own * g_partial(i, j, k)
                if j >= 1:
                    raw += j * g_partial(i, j - 1, k)
                raw /= tau_own
                norm = math.factorial(i) * math.factorial(j) * math.factorial(k)
                tensor[(i, j, k)] = raw / norm
    return tensor


def taylor_expand(cfg: CaseIIIConfig, eq: EquilibriumPoint) -> TaylorCoefficients:
    """Second- and third-order expansion of the dual-edge model at ``eq``."""
    if not isinstance(cfg, CaseIIIConfig):
        raise ConfigError("the normal-form pipeline targets the dual-edge topology")
    return TaylorCoefficients(
        eq1=_equation_tensor(cfg, 1, eq.w1_star, eq.w2_star),
        eq2=_equation_tensor(cfg, 2, eq.w2_star, eq.w1_star),
        equilibrium=eq,
    )


# ---------------------------------------------------------------------------
# eigenvectors of the critical pair and the adjoint pairing


@dataclass(frozen=True)
class EigenData:
    omega0: float
    kappa: float
    phi1: complex
    phi2: complex
    D: complex

    def q_at(self, theta: float) -> np.ndarray:
        return np.array([1.0, self.phi1], dtype=complex) * cmath.exp(
            1j * self.omega0 * theta
        )

    def p_at(self, s: float) -> np.ndarray:
        return self.D * np.array([self.phi2, 1.0], dtype=complex) * cmath.exp(
            1j * self.omega0 * s
        )

    def p_bar0(self) -> np.ndarray:
        return np.conj(self.p_at(0.0))


def delta_matrix(jac: TwoDelayJacobian, lam: complex, kappa: float,
                 tau1: float, tau2: float) -> np.ndarray:
    """Characteristic matrix ``lam*I - kappa*J(lam)`` of the linearization."""
    e1 = cmath.exp(-lam * tau1)
    e2 = cmath.exp(-lam * tau2)
    return np.array(
        [
            [lam - kappa * (jac.xi_a + jac.xi_b * e1), -kappa * jac.xi_d * e2],
            [-kappa * jac.chi_b * e1, lam - kappa * (jac.chi_c + jac.chi_d * e2)],
        ],
        dtype=complex,
    )


def eigen_data(jac: TwoDelayJacobian, crossing: CrossingResult, cfg) -> EigenData:
    """Right/left eigenvector data at the crossing, normalized so that the
    adjoint pairing gives ``<p, q> = 1`` (and ``<p, qbar> = 0`` follows).

    Either row of the singular characteristic matrix determines phi1 (and
    either column phi2); the two agree at the crossing, so the better
    conditioned one is used -- near-resonant configurations can make one
    row's pivot arbitrarily small.
    """
    if crossing.kappa_c is None:
        raise NumericError("need a located crossing for eigen data")
    w0, kap = crossing.omega0, crossing.kappa_c
    tau1, tau2 = cfg.tau1, cfg.tau2
    e1c = cmath.exp(-1j * w0 * tau1)
    e2c = cmath.exp(-1j * w0 * tau2)
    scale = abs(w0) + kap * jac.row_norm()

    delta = delta_matrix(jac, 1j * w0, kap, tau1, tau2)
    # phi1 from row 2 pivot delta[1,1] or row 1 entry delta[0,1]
    if abs(delta[1, 1]) >= abs(delta[0, 1]):
        phi1 = -delta[1, 0] / delta[1, 1]
    else:
        phi1 = -delta[0, 0] / delta[0, 1]
    if not np.isfinite(phi1):
        raise NumericError("degenerate right eigenvector (vanishing pivots)")

    delta_bar = delta_matrix(jac, -1j * w0, kap, tau1, tau2)
    # left null vector (phi2, 1) of the conjugate-crossing matrix
    if abs(delta_bar[0, 0]) >= abs(delta_bar[0, 1]):
        phi2 = -delta_bar[1, 0] / delta_bar[0, 0]
    else:
        phi2 = -delta_bar[1, 1] / delta_bar[0, 1]
    if not np.isfinite(phi2):
        raise NumericError("degenerate left eigenvector (vanishing pivots)")

    pairing = (
        np.conj(phi2) * (1.0 + kap * tau1 * jac.xi_b * e1c
                         + kap * tau2 * jac.xi_d * phi1 * e2c)
        + phi1 * (1.0 + kap * tau2 * jac.chi_d * e2c)
        + kap * tau1 * jac.chi_b * e1c
    )
    if abs(pairing) < 1e-13 * (1.0 + abs(phi1) + abs(phi2)):
        raise NumericError("adjoint pairing degenerate; cannot normalize")
    d_norm = 1.0 / np.conj(pairing)

    data = EigenData(omega0=w0, kappa=kap, phi1=phi1, phi2=phi2, D=d_norm)

    # both the eigenvector and the left vector must annihilate the matrix
    res_q = delta @ np.array([1.0, phi1])
    res_p = np.array([phi2, 1.0]) @ delta_bar
    tol = 1e-9 * scale * (1.0 + abs(phi1) + abs(phi2))
    worst = max(float(np.max(np.abs(res_q))), float(np.max(np.abs(res_p))))
    if worst > tol:
        raise NumericError(f"eigenvector residual {worst:.3e} too large")
    return data


def inner_product_numeric(psi_fn, phi_fn, jac: TwoDelayJacobian, kappa: float,
                          tau1: float, tau2: float, n: int = 240) -> complex:
    """Adjoint pairing evaluated by Gauss-Legendre quadrature.

    Independent of the closed-form normalization: the delay atoms of the
    pairing are integrated numerically from the function values alone.
    """
    m1 = np.array([[jac.xi_b, 0.0], [jac.chi_b, 0.0]])
    m2 = np.array([[0.0, jac.xi_d], [0.0, jac.chi_d]])
    total = np.vdot(psi_fn(0.0), phi_fn(0.0))
    nodes, weights = np.polynomial.legendre.leggauss(n)
    for tau, mat in ((tau1, m1), (tau2, m2)):
        zeta = 0.5 * tau * (nodes - 1.0)  # maps to (-tau, 0)
        acc = 0.0 + 0.0j
        for z, wgt in zip(zeta, weights):
            acc += wgt * (np.conj(psi_fn(z + tau)) @ mat @ phi_fn(z))
        total += kappa * 0.5 * tau * acc
    return total


# ---------------------------------------------------------------------------
# truncated (z, zbar) polynomial algebra


class _Poly:
    """Polynomial in (z, zbar) truncated at total degree 3."""

    __slots__ = ("c",)

    def __init__(self, coeffs=None):
        self.c = dict(coeffs) if coeffs else {}

    def __add__(self, other):
        out = dict(self.c)
        for key, val in other.c.items():
            out[key] = out.get(key, 0.0) + val
        return _Poly(out)

    def __mul__(self, other):
        out = {}
        for (m1, n1), v1 in self.c.items():
            for (m2, n2), v2 in other.c.items():
                m, n = m1 + m2, n1 + n2
                if m + n > 3:
                    continue
                key = (m, n)
                out[key] = out.get(key, 0.0) + v1 * v2
        return _Poly(out)

    def scaled(self, factor):
        return _Poly({k: factor * v for k, v in self.c.items()})

    def coeff(self, m, n):
        return self.c.get((m, n), 0.0 + 0.0j)


def _factor_poly(comp: int, theta: float, ed: EigenData, w20=None, w11=None) -> _Poly:
    qc = 1.0 + 0.0j if comp == 1 else ed.phi1
    ex = cmath.exp(1j * ed.omega0 * theta)
    coeffs = {(1, 0): qc * ex, (0, 1): np.conj(qc) * np.conj(ex)}
    if w20 is not None:
        w20_v = w20.value(theta)[comp - 1]
        w11_v = w11.value(theta)[comp - 1]
        coeffs[(2, 0)] = 0.5 * w20_v
        coeffs[(1, 1)] = w11_v
        coeffs[(0, 2)] = 0.5 * np.conj(w20_v)
    return _Poly(coeffs)


def _nonlinearity_polys(tc: TaylorCoefficients, ed: EigenData, cfg,
                        w20=None, w11=None):
    """(z, zbar) expansions of both nonlinear right-hand sides (gain included)."""
    tau1, tau2 = cfg.tau1, cfg.tau2
    slots = {
        (1, 0.0): _factor_poly(1, 0.0, ed, w20, w11),
        (1, -tau1): _factor_poly(1, -tau1, ed, w20, w11),
        (2, 0.0): _factor_poly(2, 0.0, ed, w20, w11),
        (2, -tau2): _factor_poly(2, -tau2, ed, w20, w11),
    }
    var_maps = {
        1: ((1, 0.0), (1, -tau1), (2, -tau2)),
        2: ((2, 0.0), (2, -tau2), (1, -tau1)),
    }
    results = []
    for eq_idx, tensor in ((1, tc.eq1), (2, tc.eq2)):
        vars_ = [slots[key] for key in var_maps[eq_idx]]
        total = _Poly()
        for (i, j, k), coef in tensor.items():
            if i + j + k < 2:
                continue
            term = _Poly({(0, 0): 1.0 + 0.0j})
            for power, factor in ((i, vars_[0]), (j, vars_[1]), (k, vars_[2])):
                for _ in range(power):
                    term = term * factor
            total = total + term.scaled(coef)
        results.append(total.scaled(ed.kappa))
    return results[0], results[1]


# ---------------------------------------------------------------------------
# center-manifold functions and the normal-form coefficients


class ExpVec:
    """Vector-valued sum of exponentials ``sum_m c_m * exp(mu_m * theta)``."""

    def __init__(self, terms):
        self.terms = [(mu, np.asarray(vec, dtype=complex)) for mu, vec in terms]

    def value(self, theta: float) -> np.ndarray:
        out = np.zeros(2, dtype=complex)
        for mu, vec in self.terms:
            out += vec * cmath.exp(mu * theta)
        return out

    def deriv(self, theta: float) -> np.ndarray:
        out = np.zeros(2, dtype=complex)
        for mu, vec in self.terms:
            out += mu * vec * cmath.exp(mu * theta)
        return out


def _apply_linear_operator(vec_fn: ExpVec, jac: TwoDelayJacobian, kappa, tau1, tau2):
    m0 = np.array([[jac.xi_a, 0.0], [0.0, jac.chi_c]], dtype=complex)
    m1 = np.array([[jac.xi_b, 0.0], [jac.chi_b, 0.0]], dtype=complex)
    m2 = np.array([[0.0, jac.xi_d], [0.0, jac.chi_d]], dtype=complex)
    return kappa * (
        m0 @ vec_fn.value(0.0) + m1 @ vec_fn.value(-tau1) + m2 @ vec_fn.value(-tau2)
    )


def _solve_2x2(mat: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    det = mat[0, 0] * mat[1, 1] - mat[0, 1] * mat[1, 0]
    norm = max(np.sum(np.abs(mat[0])), np.sum(np.abs(mat[1])), 1e-300)
    if abs(det) < 1e-12 * norm * norm:
        raise NumericError(f"near-singular 2x2 solve (det {abs(det):.3e}, norm {norm:.3e})")
    x0 = (rhs[0] * mat[1, 1] - rhs[1] * mat[0, 1]) / det
    x1 = (mat[0, 0] * rhs[1] - mat[1, 0] * rhs[0]) / det
    return np.array([x0, x1])


@dataclass(frozen=True)
class CenterManifold:
    w20: ExpVec
    w11: ExpVec
    e_vec: np.ndarray
    f_vec: np.ndarray
    residual: float


def center_manifold_solve(ed: EigenData, jac: TwoDelayJacobian, cfg,
                          g20: complex, g11: complex, g02: complex,
                          f20_vec: np.ndarray, f11_vec: np.ndarray) -> CenterManifold:
    """Solve for the quadratic center-manifold functions w20 and w11.

    Their exponential-sum forms are fixed by the interior ODE; the free
    vectors ``e`` and ``f`` come from the boundary conditions, which reduce
    to characteristic-matrix solves at ``2 i omega0`` and ``0``.  The
    defining relations are then verified by direct substitution.
    """
    w0, kap = ed.omega0, ed.kappa
    tau1, tau2 = cfg.tau1, cfg.tau2
    q0 = np.array([1.0, ed.phi1], dtype=complex)
    qb0 = np.conj(q0)

    e_vec = _solve_2x2(delta_matrix(jac, 2j * w0, kap, tau1, tau2), f20_vec)
    f_vec = _solve_2x2(delta_matrix(jac, 0.0 + 0.0j, kap, tau1, tau2), f11_vec)

    w20 = ExpVec([
        (1j * w0, -(g20 / (1j * w0)) * q0),
        (-1j * w0, -(np.conj(g02) / (3j * w0)) * qb0),
        (2j * w0, e_vec),
    ])
    w11 = ExpVec([
        (1j * w0, (g11 / (1j * w0)) * q0),
        (-1j * w0, -(np.conj(g11) / (1j * w0)) * qb0),
        (0.0, f_vec),
    ])

    scale = max(float(np.max(np.abs(f20_vec))), float(np.max(np.abs(f11_vec))),
                abs(g20), abs(g11), abs(g02), 1e-300)
    res = []
    # boundary relations at theta = 0
    h20_0 = -g20 * q0 - np.conj(g02) * qb0 + f20_vec
    res20 = 2j * w0 * w20.value(0.0) - _apply_linear_operator(w20, jac, kap, tau1, tau2) - h20_0
    h11_0 = -g11 * q0 - np.conj(g11) * qb0 + f11_vec
    res11 = -_apply_linear_operator(w11, jac, kap, tau1, tau2) - h11_0
    res.extend([np.max(np.abs(res20)), np.max(np.abs(res11))])
    # interior relations at the delay arguments
    for theta in (-tau1, -tau2):
        qt = ed.q_at(theta)
        h20 = -g20 * qt - np.conj(g02) * np.conj(qt)
        res.append(np.max(np.abs(2j * w0 * w20.value(theta) - w20.deriv(theta) - h20)))
        h11 = -g11 * qt - np.conj(g11) * np.conj(qt)
        res.append(np.max(np.abs(-w11.deriv(theta) - h11)))
    residual = float(max(res) / scale)
    if residual > 1e-9:
        raise NumericError(f"center-manifold residual {residual:.3e} above 1e-9")
    return CenterManifold(w20=w20, w11=w11, e_vec=e_vec, f_vec=f_vec,
                          residual=residual)


@dataclass(frozen=True)
class HopfMetrics:
    kappa_c: float
    omega0: float
    g20: complex
    g11: complex
    g02: complex
    g21: complex
    c1_0: complex
    alpha_prime_0: float
    mu2: float
    beta2: float
    bifurcation: str  # 'supercritical' | 'subcritical'
    orbital_stability: str  # 'stable' | 'unstable'
    cm_residual: float


def lyapunov_metrics(g20, g11, g02, g21, alpha_prime_0, omega0) -> dict:
    """First Lyapunov coefficient and the derived classification numbers."""
    if alpha_prime_0 == 0.0:
        raise NumericError("transversality rate vanishes; Hopf is degenerate")
    c1 = (1j / (2.0 * omega0)) * (
        g20 * g11 - 2.0 * abs(g11) ** 2 - abs(g02) ** 2 / 3.0
    ) + 0.5 * g21
    mu2 = -c1.real / alpha_prime_0
    beta2 = 2.0 * c1.real
    return {
        "c1_0": c1,
        "mu2": mu2,
        "beta2": beta2,
        "bifurcation": "supercritical" if mu2 > 0 else "subcritical",
        "orbital_stability": "stable" if beta2 < 0 else "unstable",
    }


def g_coefficients(tc: TaylorCoefficients, ed: EigenData, cfg,
                   w20: Optional[ExpVec] = None, w11: Optional[ExpVec] = None):
    """Normal-form coefficients from the expansion composed with u_t.

    Without the center-manifold functions only the quadratic trio is
    meaningful; with them the cubic coefficient ``g21`` becomes available.
    Also returns the raw vector coefficients of the nonlinearity needed by
    the center-manifold solves.
    """
    f1_pol, f2_pol = _nonlinearity_polys(tc, ed, cfg, w20=w20, w11=w11)
    pbar0 = ed.p_bar0()
    g_pol = f1_pol.scaled(pbar0[0]) + f2_pol.scaled(pbar0[1])
    out = {
        "g20": 2.0 * g_pol.coeff(2, 0),
        "g11": g_pol.coeff(1, 1),
        "g02": 2.0 * g_pol.coeff(0, 2),
        "g21": 2.0 * g_pol.coeff(2, 1),
        "f20_vec": np.array([2.0 * f1_pol.coeff(2, 0), 2.0 * f2_pol.coeff(2, 0)]),
        "f11_vec": np.array([f1_pol.coeff(1, 1), f2_pol.coeff(1, 1)]),
    }
    return out


def analyze_hopf(cfg: CaseIIIConfig,
                 crossing: Optional[CrossingResult] = None) -> HopfMetrics:
    """Full normal-form pipeline for the dual-edge model at its Hopf point."""
    if not isinstance(cfg, CaseIIIConfig):
        raise ConfigError("the normal-form pipeline targets the dual-edge topology")
    eq = solve_equilibrium(cfg)
    if crossing is None:
        crossing = hopf_locate_two_delay(cfg)
    if crossing.kappa_c is None:
        raise NumericError("no Hopf point located; nothing to classify")

    tc = taylor_expand(cfg, eq)
    jac = tc.jacobian()
    lin = linearize(cfg, eq).jacobian
    for name in ("xi_a", "xi_b", "xi_d", "chi_c", "chi_d", "chi_b"):
        a, b = getattr(jac, name), getattr(lin, name)
        if abs(a - b) > 1e-9 * max(abs(a), abs(b), 1e-12):
            raise NumericError(f"expansion/linearization mismatch on {name}")

    ed = eigen_data(jac, crossing, cfg)
    quad = g_coefficients(tc, ed, cfg)
    cm = center_manifold_solve(ed, jac, cfg, quad["g20"], quad["g11"],
                               quad["g02"], quad["f20_vec"], quad["f11_vec"])
    full = g_coefficients(tc, ed, cfg, w20=cm.w20, w11=cm.w11)
    alpha_prime = transversality(cfg, crossing)
    metrics = lyapunov_metrics(full["g20"], full["g11"], full["g02"],
                               full["g21"], alpha_prime, crossing.omega0)
    return HopfMetrics(
        kappa_c=crossing.kappa_c,
        omega0=crossing.omega0,
        g20=full["g20"],
        g11=full["g11"],
        g02=full["g02"],
        g21=full["g21"],
        c1_0=metrics["c1_0"],
        alpha_prime_0=alpha_prime,
        mu2=metrics["mu2"],
        beta2=metrics["beta2"],
        bifurcation=metrics["bifurcation"],
        orbital_stability=metrics["orbital_stability"],
        cm_residual=cm.residual,
    )
