"""Linear stability analysis of the fluid models.

Provides the linearization coefficients about equilibrium, the reduced
(one-delay) and full two-delay characteristic functions, closed-form and
numeric critical-gain computations, transversality of the critical root
pair, and two-parameter stability-boundary sweeps.

Two analysis routes coexist:

* the *reduced* route treats the second flow set as undelayed (its round
  trip time is negligible) and yields a quartet (a, b, c, d) whose
  characteristic equation is

      lambda**2 + kappa*a*lambda + kappa**2*c
          + exp(-lambda*tau1) * (kappa*b*lambda + kappa**2*d) = 0;

* the *full* route keeps both delays and works with the 2x2 transcendental
  determinant of the delayed Jacobian.

The quartet entries are taken from the derived determinant (b pairs with
the delayed self-feedback N1 and the delay attaches to the b- and d-terms);
both routes are cross-validated numerically in the test-suite.
"""

import cmath
import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .contour import count_right_half_roots, first_unstable_kappa
from .equilibrium import EquilibriumPoint, solve_equilibrium
from .errors import ConfigError, DomainError, NumericError
from .protocol import compound_decrease, compound_increase
from .topology import (
    CaseIIIConfig,
    edge_loss_derivative,
    is_symmetric,
    loss_mm1b,
    shared_loss_rate_derivative,
    total_loss,
)

ONE_POSITIVE = "OnePositiveRoot"
TWO_POSITIVE = "TwoPositiveRoots"
NO_CROSSING = "NoCrossing"


@dataclass(frozen=True)
class TwoDelayJacobian:
    """Gain-free entries of the delayed Jacobian.

    Row 1 (set 1): xi_a on w1(t), xi_b on w1(t-tau1), xi_d on w2(t-tau2).
    Row 2 (set 2): chi_c on w2(t), chi_d on w2(t-tau2), chi_b on w1(t-tau1).
    """

    xi_a: float
    xi_b: float
    xi_d: float
    chi_c: float
    chi_d: float
    chi_b: float

    def row_norm(self) -> float:
        return max(
            abs(self.xi_a) + abs(self.xi_b) + abs(self.xi_d),
            abs(self.chi_c) + abs(self.chi_d) + abs(self.chi_b),
        )


@dataclass(frozen=True)
class Quartet:
    a: float
    b: float
    c: float
    d: float


@dataclass(frozen=True)
class LinearCoefficients:
    """Reduced-route coefficient set plus the full delayed Jacobian."""

    M1: float
    M2: float
    N1: float
    N2: float
    P1: float
    P2: float
    quartet: Quartet
    jacobian: TwoDelayJacobian
    case: str


@dataclass(frozen=True)
class CrossingResult:
    kappa_c: Optional[float]
    omega0: Optional[float]
    condition_class: str
    kind: str  # 'scalar' | 'quartet' | 'two_delay'
    residual: float = 0.0


def linearize(cfg, eq: EquilibriumPoint) -> LinearCoefficients:
    """Evaluate the linearization coefficients at a solved equilibrium."""
    p = cfg.protocol
    w1, w2 = eq.w1_star, eq.w2_star
    rate = w1 / cfg.tau1 + w2 / cfg.tau2
    sh_d = shared_loss_rate_derivative(cfg, rate)

    entries = []
    for j, w, tau in ((1, w1, cfg.tau1), (2, w2, cfg.tau2)):
        lj = total_loss(cfg, j, w, rate)
        if not 0.0 < lj < 1.0:
            raise DomainError(f"equilibrium loss for set {j} is {lj}, outside (0,1)")
        i = compound_increase(w, p)
        d = compound_decrease(w, p)
        di = p.alpha * (p.k - 1.0) * w ** (p.k - 2.0)
        s = i + d
        own_now = (w / tau) * (di * (1.0 - lj) - p.beta * lj)
        own_lag = -(w / tau) * s * (edge_loss_derivative(cfg, j, w) + sh_d / tau)
        other_tau = cfg.tau2 if j == 1 else cfg.tau1
        cross_lag = -(w / tau) * s * sh_d / other_tau
        entries.append((own_now, own_lag, cross_lag))

    xi_a, xi_b, xi_d = entries[0]
    chi_c, chi_d, chi_b = entries[1]
    jac = TwoDelayJacobian(xi_a, xi_b, xi_d, chi_c, chi_d, chi_b)

    m1, n1, p1 = -xi_a, -xi_b, -xi_d
    m2, n2, p2 = -chi_c, -chi_d, -chi_b
    quartet = Quartet(
        a=m1 + m2 + n2,
        b=n1,
        c=m1 * (m2 + n2),
        d=n1 * (m2 + n2) - p1 * p2,
    )
    return LinearCoefficients(
        M1=m1, M2=m2, N1=n1, N2=n2, P1=p1, P2=p2,
        quartet=quartet, jacobian=jac, case=cfg.case,
    )


# ---------------------------------------------------------------------------
# characteristic functions


def characteristic_fn(coeffs: LinearCoefficients, lam, kappa: float, tau1: float):
    """Reduced-route characteristic value at ``lam`` (scalar or ndarray)."""
    q = coeffs.quartet
    ex = np.exp(-lam * tau1)
    return (
        lam * lam
        + kappa * q.a * lam
        + kappa * kappa * q.c
        + ex * (kappa * q.b * lam + kappa * kappa * q.d)
    )


def characteristic_two_delay(jac: TwoDelayJacobian, lam, kappa: float,
                             tau1: float, tau2: float):
    """Determinant of the full two-delay linearization at ``lam``."""
    e1 = np.exp(-lam * tau1)
    e2 = np.exp(-lam * tau2)
    a11 = lam - kappa * (jac.xi_a + jac.xi_b * e1)
    a22 = lam - kappa * (jac.chi_c + jac.chi_d * e2)
    return a11 * a22 - kappa * kappa * jac.xi_d * jac.chi_b * e1 * e2


def _char_two_delay_partials(jac, lam, kappa, tau1, tau2):
    e1 = cmath.exp(-lam * tau1)
    e2 = cmath.exp(-lam * tau2)
    a11 = lam - kappa * (jac.xi_a + jac.xi_b * e1)
    a22 = lam - kappa * (jac.chi_c + jac.chi_d * e2)
    cross = kappa * kappa * jac.xi_d * jac.chi_b * e1 * e2
    d_lam = (
        (1.0 + kappa * jac.xi_b * tau1 * e1) * a22
        + a11 * (1.0 + kappa * jac.chi_d * tau2 * e2)
        + (tau1 + tau2) * cross
    )
    d_kap = (
        -(jac.xi_a + jac.xi_b * e1) * a22
        - a11 * (jac.chi_c + jac.chi_d * e2)
        - 2.0 * kappa * jac.xi_d * jac.chi_b * e1 * e2
    )
    value = a11 * a22 - cross
    return value, d_lam, d_kap


def _char_quartet_partials(q: Quartet, lam, kappa, tau1):
    ex = cmath.exp(-lam * tau1)
    delayed = kappa * q.b * lam + kappa * kappa * q.d
    value = lam * lam + kappa * q.a * lam + kappa * kappa * q.c + ex * delayed
    d_lam = 2.0 * lam + kappa * q.a + ex * (kappa * q.b) - tau1 * ex * delayed
    d_kap = q.a * lam + 2.0 * kappa * q.c + ex * (q.b * lam + 2.0 * kappa * q.d)
    return value, d_lam, d_kap


def _char_scalar_partials(m, n, lam, kappa, tau):
    ex = cmath.exp(-lam * tau)
    value = lam + kappa * (m + n * ex)
    d_lam = 1.0 - kappa * n * tau * ex
    d_kap = m + n * ex
    return value, d_lam, d_kap


# ---------------------------------------------------------------------------
# crossing frequency and closed-form critical gain (reduced route)


def crossing_frequency(coeffs: LinearCoefficients):
    """Crossing frequency per unit gain, ``omega = kappa * A``, with the
    count classification of positive ``omega**2`` roots."""
    q = coeffs.quartet
    s = 2.0 * q.c - q.a * q.a + q.b * q.b
    prod = q.c * q.c - q.d * q.d
    disc = s * s - 4.0 * prod
    scale_s = max(abs(2.0 * q.c) + q.a * q.a + q.b * q.b, 1e-300)
    scale_p = max(q.c * q.c + q.d * q.d, 1e-300)
    tol_s = 1e-12 * scale_s
    tol_p = 1e-12 * scale_p

    if prod < -tol_p:
        cls = ONE_POSITIVE
    elif s > tol_s and abs(disc) <= 1e-9 * max(s * s, 4.0 * abs(prod)):
        cls = ONE_POSITIVE
    elif s > tol_s and abs(prod) <= tol_p:
        cls = ONE_POSITIVE
    elif s > tol_s and prod > tol_p and disc > 0.0:
        cls = TWO_POSITIVE
    else:
        cls = NO_CROSSING

    if cls == NO_CROSSING:
        return None, cls
    root = math.sqrt(max(disc, 0.0))
    a_sq = 0.5 * (s + root)
    return math.sqrt(a_sq), cls


def kappa_critical_closed_form(coeffs: LinearCoefficients, tau1: float) -> CrossingResult:
    """Closed-form first critical gain for the reduced route.

    Solves the imaginary-axis system for ``cos`` and ``sin`` of
    ``omega0 * tau1`` explicitly, so the inverse-cosine branch is fixed by
    the sign of the sine rather than guessed.  The result is verified
    against the characteristic function.
    """
    q = coeffs.quartet
    a_factor, cls = crossing_frequency(coeffs)
    if cls != ONE_POSITIVE:
        raise NumericError(f"closed form needs OnePositiveRoot, got {cls}")
    A = a_factor
    den = q.b * q.b * A * A + q.d * q.d
    if den == 0.0:
        raise NumericError("degenerate quartet: b and d both vanish")
    x = (A * A * (q.d - q.a * q.b) - q.c * q.d) / den
    if abs(x) > 1.0:
        if abs(x) > 1.0 + 1e-9:
            raise NumericError(
                f"inverse-cosine argument {x} outside [-1, 1] "
                f"(quartet {q}, A={A})"
            )
        x = math.copysign(1.0, x)
    # better-conditioned of the two linear relations for sin(omega0 tau1)
    if abs(A * q.b) >= abs(q.d):
        sin_v = (A * A - q.c - q.d * x) / (A * q.b)
    else:
        sin_v = A * (q.a + q.b * x) / q.d
    theta = math.atan2(sin_v, x)
    if theta <= 0.0:
        theta += 2.0 * math.pi
    kappa_c = theta / (A * tau1)
    omega0 = kappa_c * A

    value = characteristic_fn(coeffs, 1j * omega0, kappa_c, tau1)
    scale = (
        omega0 * omega0
        + kappa_c * (abs(q.a) + abs(q.b)) * omega0
        + kappa_c * kappa_c * (abs(q.c) + abs(q.d))
    )
    residual = abs(value) / scale
    if residual > 1e-8:
        raise NumericError(
            f"closed-form gain failed verification: residual {residual:.3e}"
        )
    return CrossingResult(kappa_c=kappa_c, omega0=omega0, condition_class=cls,
                          kind="quartet", residual=residual)


# ---------------------------------------------------------------------------
# symmetric (equal-delay) closed forms


@dataclass(frozen=True)
class Scenario1Result:
    kappa_c: Optional[float]
    omega0: Optional[float]
    w_star: float
    loss_star: float
    M: float
    N: float
    stable: bool


def _symmetric_loss(cfg, w: float) -> float:
    """Total equilibrium loss of the equal-delay reduction as a function of
    the single window variable."""
    tau = cfg.tau1
    if cfg.case == "case1":
        return loss_mm1b(w / tau, cfg.c, cfg.b)
    if cfg.case == "case2":
        return loss_mm1b(w / tau, cfg.c1, cfg.b1) + loss_mm1b(w / tau, cfg.c2, cfg.b2)
    # dual-edge: own edge at rate w/tau, shared core at rate 2w/tau
    return loss_mm1b(w / tau, cfg.c1, cfg.b1) + loss_mm1b(2.0 * w / tau, cfg.c, cfg.b)


def _symmetric_loss_slope(cfg, w: float) -> float:
    tau = cfg.tau1
    if cfg.case == "case1":
        return cfg.b * loss_mm1b(w / tau, cfg.c, cfg.b) / w
    if cfg.case == "case2":
        return (
            cfg.b1 * loss_mm1b(w / tau, cfg.c1, cfg.b1)
            + cfg.b2 * loss_mm1b(w / tau, cfg.c2, cfg.b2)
        ) / w
    return (
        cfg.b1 * loss_mm1b(w / tau, cfg.c1, cfg.b1)
        + cfg.b * loss_mm1b(2.0 * w / tau, cfg.c, cfg.b)
    ) / w


def scenario1_conditions(cfg) -> Scenario1Result:
    """Equal-delay stability boundary: the scalar-model critical gain.

    The reduced model is a single delayed scalar equation; its boundary is
    ``kappa_c = arccos(-M/N) / (tau * sqrt(N**2 - M**2))`` whenever the
    delayed loss feedback dominates (N > |M|), otherwise the equilibrium is
    stable for every gain.
    """
    if not is_symmetric(cfg):
        raise ConfigError("equal-delay analysis needs a symmetric configuration")
    p = cfg.protocol
    tau = cfg.tau1

    def g(w):
        l = _symmetric_loss(cfg, w)
        return compound_increase(w, p) * (1.0 - l) - compound_decrease(w, p) * l

    lo, hi = 1e-9, 1.0
    while g(hi) > 0.0:
        hi *= 2.0
        if hi > 1e12:
            raise DomainError("no symmetric equilibrium below window 1e12")
    for _ in range(200):
        mid = math.sqrt(lo * hi)
        if g(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    w_star = 0.5 * (lo + hi)
    l_star = _symmetric_loss(cfg, w_star)
    if not 0.0 < l_star < 1.0:
        raise DomainError(f"symmetric equilibrium loss {l_star} outside (0, 1)")

    i = compound_increase(w_star, p)
    d = compound_decrease(w_star, p)
    di = p.alpha * (p.k - 1.0) * w_star ** (p.k - 2.0)
    m = -(w_star / tau) * (di * (1.0 - l_star) - p.beta * l_star)
    n = (w_star / tau) * (i + d) * _symmetric_loss_slope(cfg, w_star)
    if n <= abs(m):
        return Scenario1Result(kappa_c=None, omega0=None, w_star=w_star,
                               loss_star=l_star, M=m, N=n, stable=True)
    kappa_c = math.acos(-m / n) / (tau * math.sqrt(n * n - m * m))
    omega0 = kappa_c * math.sqrt(n * n - m * m)
    return Scenario1Result(kappa_c=kappa_c, omega0=omega0, w_star=w_star,
                           loss_star=l_star, M=m, N=n,
                           stable=cfg.kappa < kappa_c)


# ---------------------------------------------------------------------------
# full two-delay Hopf locator


def _rhp_count(jac, kappa, tau1, tau2):
    # every right-half-plane root satisfies |lambda| <= kappa * ||J||_inf,
    # so a contour hugging that bound both certifies the count and keeps the
    # sampling scale matched to the root cluster
    radius = kappa * jac.row_norm() * 1.05

    def fn(lam):
        return characteristic_two_delay(jac, lam, kappa, tau1, tau2)

    density = 8.0 * (tau1 + tau2 + 1.0)
    return count_right_half_roots(fn, radius, density=density)


def _newton_polish(jac, kappa, omega, tau1, tau2, tol=1e-12):
    for _ in range(60):
        val, d_lam, d_kap = _char_two_delay_partials(jac, 1j * omega, kappa, tau1, tau2)
        # unknowns (kappa, omega); d(value)/d(omega) = i * dF/dlambda
        j11, j12 = d_kap.real, (1j * d_lam).real
        j21, j22 = d_kap.imag, (1j * d_lam).imag
        det = j11 * j22 - j12 * j21
        if det == 0.0:
            raise NumericError("singular Newton system at the crossing")
        dk = -(val.real * j22 - val.imag * j12) / det
        dw = -(j11 * val.imag - j21 * val.real) / det
        kappa += dk
        omega += dw
        if abs(dk) < tol * abs(kappa) and abs(dw) < tol * max(abs(omega), 1e-30):
            break
    val = characteristic_two_delay(jac, 1j * omega, kappa, tau1, tau2)
    return kappa, omega, abs(val)


def hopf_locate_two_delay(cfg, kappa_max: float = 10.0) -> CrossingResult:
    """First loss of stability of the full two-delay linearization.

    Bisects the right-half-plane root count over the gain, polishes the
    imaginary-axis pair with a two-dimensional Newton iteration, and
    certifies the result as the first crossing (no unstable roots slightly
    below, exactly one conjugate pair slightly above).
    """
    eq = solve_equilibrium(cfg)
    jac = linearize(cfg, eq).jacobian
    tau1, tau2 = cfg.tau1, cfg.tau2

    def count(kappa):
        return _rhp_count(jac, kappa, tau1, tau2)

    kappa_lo = 1e-3
    if count(kappa_lo) != 0:
        raise NumericError(f"unstable already at kappa={kappa_lo}")
    kappa_hi = kappa_lo
    while count(kappa_hi) == 0:
        kappa_hi *= 1.6
        if kappa_hi > kappa_max:
            if count(kappa_max) == 0:
                return CrossingResult(kappa_c=None, omega0=None,
                                      condition_class=NO_CROSSING,
                                      kind="two_delay")
            kappa_hi = kappa_max
            break

    for _ in range(8):
        lo, hi = first_unstable_kappa(count, kappa_lo, kappa_hi, rel_tol=1e-4)
        # seed omega from the least-modulus point of F on the imaginary axis
        radius = hi * jac.row_norm() * 1.05
        omegas = np.linspace(1e-6, radius, 4000)
        vals = np.abs(characteristic_two_delay(jac, 1j * omegas, hi, tau1, tau2))
        omega_seed = float(omegas[int(np.argmin(vals))])
        kappa_c, omega0, abs_res = _newton_polish(jac, hi, omega_seed, tau1, tau2)
        if omega0 < 0.0:
            omega0 = -omega0
        scale = (
            omega0 * omega0
            + kappa_c * jac.row_norm() * omega0
            + (kappa_c * jac.row_norm()) ** 2
        )
        residual = abs_res / scale
        if kappa_c <= 0.0 or residual > 1e-10:
            raise NumericError(
                f"Newton polish failed: kappa={kappa_c}, residual={residual:.3e}"
            )
        # first-crossing certificate
        if count(0.99 * kappa_c) == 0 and count(1.01 * kappa_c) == 2:
            return CrossingResult(kappa_c=kappa_c, omega0=omega0,
                                  condition_class=ONE_POSITIVE,
                                  kind="two_delay", residual=residual)
        # an earlier crossing exists below; shrink and retry
        kappa_hi = 0.99 * kappa_c
        if count(kappa_hi) == 0:
            kappa_hi = kappa_c
    raise NumericError("could not certify a first crossing")


# ---------------------------------------------------------------------------
# transversality


def transversality(cfg, crossing: CrossingResult) -> float:
    """Re(d lambda / d kappa) of the critical pair at the located crossing."""
    if crossing.kappa_c is None:
        raise NumericError("no crossing to differentiate")
    lam = 1j * crossing.omega0
    kap = crossing.kappa_c
    if crossing.kind == "two_delay":
        jac = linearize(cfg, solve_equilibrium(cfg)).jacobian
        _, d_lam, d_kap = _char_two_delay_partials(jac, lam, kap, cfg.tau1, cfg.tau2)
    elif crossing.kind == "quartet":
        coeffs = linearize(cfg, solve_equilibrium(cfg))
        _, d_lam, d_kap = _char_quartet_partials(coeffs.quartet, lam, kap, cfg.tau1)
    elif crossing.kind == "scalar":
        s1 = scenario1_conditions(cfg)
        _, d_lam, d_kap = _char_scalar_partials(s1.M, s1.N, lam, kap, cfg.tau1)
    else:
        raise ConfigError(f"unknown crossing kind {crossing.kind}")
    if abs(d_lam) < 1e-12 * max(1.0, abs(d_kap)):
        raise NumericError("degenerate root: dF/dlambda vanishes at the crossing")
    return (-d_kap / d_lam).real


def transversality_quartet(quartet: Quartet, tau1: float,
                           crossing: CrossingResult) -> float:
    _, d_lam, d_kap = _char_quartet_partials(
        quartet, 1j * crossing.omega0, crossing.kappa_c, tau1
    )
    if abs(d_lam) < 1e-12 * max(1.0, abs(d_kap)):
        raise NumericError("degenerate root: dF/dlambda vanishes at the crossing")
    return (-d_kap / d_lam).real


# ---------------------------------------------------------------------------
# stability charts


def _with_param(cfg, name: str, value: float):
    if name == "alpha":
        return replace(cfg, protocol=replace(cfg.protocol, alpha=value))
    if name == "k":
        return replace(cfg, protocol=replace(cfg.protocol, k=value))
    if name == "kappa":
        return replace(cfg, kappa=value)
    if name == "B":
        if not isinstance(cfg, CaseIIIConfig) and cfg.case != "case1":
            raise ConfigError("B-axis sweep needs a core-router buffer")
        return replace(cfg, b=value)
    raise ConfigError(f"unsupported sweep axis {name!r}")


def _is_stable(cfg) -> bool:
    eq = solve_equilibrium(cfg)
    jac = linearize(cfg, eq).jacobian
    return _rhp_count(jac, cfg.kappa, cfg.tau1, cfg.tau2) == 0


@dataclass(frozen=True)
class ChartResult:
    axis1: str
    axis2: str
    axis2_values: tuple
    boundary: tuple  # axis-1 boundary per grid value; None marks a gap
    monotone: bool


def stability_chart(cfg, axis1: str, axis2: str, axis2_values,
                    axis1_range, tol: float = 1e-7) -> ChartResult:
    """Stability boundary of ``axis1`` as a function of ``axis2``.

    For a gain axis the boundary is the first-crossing locator output;
    other axes are bisected on the right-half-plane root count at the
    configured gain.  Grid values whose range holds no boundary are
    reported as gaps.
    """
    boundary = []
    for v2 in axis2_values:
        base = _with_param(cfg, axis2, v2)
        try:
            if axis1 == "kappa":
                res = hopf_locate_two_delay(base)
                boundary.append(res.kappa_c)
                continue
            lo, hi = axis1_range
            s_lo = _is_stable(_with_param(base, axis1, lo))
            s_hi = _is_stable(_with_param(base, axis1, hi))
            if s_lo == s_hi:
                boundary.append(None)
                continue
            while hi - lo > tol * max(abs(hi), 1.0):
                mid = 0.5 * (lo + hi)
                if _is_stable(_with_param(base, axis1, mid)) == s_lo:
                    lo = mid
                else:
                    hi = mid
            boundary.append(0.5 * (lo + hi))
        except (NumericError, DomainError):
            boundary.append(None)
    present = [v for v in boundary if v is not None]
    monotone = all(x >= y for x, y in zip(present, present[1:])) or all(
        x <= y for x, y in zip(present, present[1:])
    )
    return ChartResult(axis1=axis1, axis2=axis2, axis2_values=tuple(axis2_values),
                       boundary=tuple(boundary), monotone=monotone)
