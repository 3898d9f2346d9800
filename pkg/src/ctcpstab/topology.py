"""Network topologies and their Drop-Tail loss models.

Three layouts are supported, each carrying two sets of long-lived flows
with round trip times ``tau1`` and ``tau2``:

* case1 -- both sets feed one core router (buffer ``b``, capacity ``c``);
* case2 -- both sets traverse two routers in tandem (``b1,c1`` then ``b2,c2``);
* case3 -- each set is regulated by its own edge router (``b1,c1`` / ``b2,c2``)
  before a shared core router (``b,c``).

Small Drop-Tail buffers are approximated by the M/M/1/B blocking form
``(rate / capacity) ** buffer``.  ``kappa`` is the exogenous dimensionless
gain that multiplies every model right-hand side; it leaves the equilibrium
untouched and sweeps stability.
"""

from dataclasses import dataclass, replace

from .errors import ConfigError, DomainError
from .protocol import ProtocolParams


def loss_mm1b(rate: float, capacity: float, buffer: float, clamp: bool = False) -> float:
    """Blocking probability ``(rate / capacity) ** buffer``.

    Simulation paths may pass ``clamp=True`` to saturate transient values
    into [0, 1]; analysis paths keep the raw power law.
    """
    if rate < 0:
        raise DomainError(f"arrival rate must be nonnegative, got {rate}")
    if capacity <= 0:
        raise DomainError(f"capacity must be positive, got {capacity}")
    if buffer < 1:
        raise DomainError(f"buffer must be at least 1, got {buffer}")
    value = (rate / capacity) ** buffer
    if clamp:
        return min(max(value, 0.0), 1.0)
    return value


@dataclass(frozen=True)
class _BaseConfig:
    protocol: ProtocolParams
    tau1: float
    tau2: float
    kappa: float

    def _validate_common(self):
        if self.tau1 <= 0 or self.tau2 <= 0:
            raise DomainError(f"delays must be positive, got {self.tau1}, {self.tau2}")
        if self.kappa <= 0:
            raise DomainError(f"kappa must be positive, got {self.kappa}")

    def with_kappa(self, kappa: float):
        return replace(self, kappa=kappa)


def _check_buffer(name, value):
    if value < 1:
        raise DomainError(f"{name} must be at least 1, got {value}")


def _check_capacity(name, value):
    if value <= 0:
        raise DomainError(f"{name} must be positive, got {value}")


@dataclass(frozen=True)
class CaseIConfig(_BaseConfig):
    """Single bottleneck: shared core router only."""

    b: float = 25.0
    c: float = 180.0
    case = "case1"

    def __post_init__(self):
        self._validate_common()
        _check_buffer("b", self.b)
        _check_capacity("c", self.c)


@dataclass(frozen=True)
class CaseIIConfig(_BaseConfig):
    """Two routers in tandem shared by both flow sets."""

    b1: float = 10.0
    b2: float = 15.0
    c1: float = 100.0
    c2: float = 100.0
    case = "case2"

    def __post_init__(self):
        self._validate_common()
        _check_buffer("b1", self.b1)
        _check_buffer("b2", self.b2)
        _check_capacity("c1", self.c1)
        _check_capacity("c2", self.c2)


@dataclass(frozen=True)
class CaseIIIConfig(_BaseConfig):
    """Per-set edge routers feeding a shared core router."""

    b1: float = 10.0
    b2: float = 15.0
    b: float = 25.0
    c1: float = 100.0
    c2: float = 100.0
    c: float = 180.0
    case = "case3"

    def __post_init__(self):
        self._validate_common()
        _check_buffer("b1", self.b1)
        _check_buffer("b2", self.b2)
        _check_buffer("b", self.b)
        _check_capacity("c1", self.c1)
        _check_capacity("c2", self.c2)
        _check_capacity("c", self.c)


TopologyConfig = (CaseIConfig, CaseIIConfig, CaseIIIConfig)


def is_symmetric(cfg) -> bool:
    """True when both flow sets see identical delays and network parameters."""
    if cfg.tau1 != cfg.tau2:
        return False
    if isinstance(cfg, CaseIConfig):
        return True
    if isinstance(cfg, CaseIIConfig):
        return True  # tandem queues are shared; symmetry only needs equal delays
    return cfg.b1 == cfg.b2 and cfg.c1 == cfg.c2


def edge_loss(cfg, j: int, w: float, clamp: bool = False) -> float:
    """Edge-router loss seen by flow set ``j`` at window ``w`` (case3 only)."""
    if not isinstance(cfg, CaseIIIConfig):
        return 0.0
    if j == 1:
        return loss_mm1b(w / cfg.tau1, cfg.c1, cfg.b1, clamp=clamp)
    return loss_mm1b(w / cfg.tau2, cfg.c2, cfg.b2, clamp=clamp)


def shared_loss(cfg, rate: float, clamp: bool = False) -> float:
    """Loss on the path segment shared by both sets, at aggregate ``rate``."""
    if isinstance(cfg, CaseIConfig):
        return loss_mm1b(rate, cfg.c, cfg.b, clamp=clamp)
    if isinstance(cfg, CaseIIConfig):
        return loss_mm1b(rate, cfg.c1, cfg.b1, clamp=clamp) + loss_mm1b(
            rate, cfg.c2, cfg.b2, clamp=clamp
        )
    return loss_mm1b(rate, cfg.c, cfg.b, clamp=clamp)


def total_loss(cfg, j: int, w_own: float, rate: float, clamp: bool = False) -> float:
    """Total loss probability seen by flow set ``j``: edge part plus shared part."""
    return edge_loss(cfg, j, w_own, clamp=clamp) + shared_loss(cfg, rate, clamp=clamp)


def loss_components(cfg, w1: float, w2: float) -> dict:
    """Named equilibrium loss terms at windows ``(w1, w2)``."""
    rate = w1 / cfg.tau1 + w2 / cfg.tau2
    if isinstance(cfg, CaseIConfig):
        return {"q": loss_mm1b(rate, cfg.c, cfg.b)}
    if isinstance(cfg, CaseIIConfig):
        return {
            "q1": loss_mm1b(rate, cfg.c1, cfg.b1),
            "q2": loss_mm1b(rate, cfg.c2, cfg.b2),
        }
    return {
        "p1": loss_mm1b(w1 / cfg.tau1, cfg.c1, cfg.b1),
        "p2": loss_mm1b(w2 / cfg.tau2, cfg.c2, cfg.b2),
        "q": loss_mm1b(rate, cfg.c, cfg.b),
    }


def shared_loss_rate_derivative(cfg, rate: float) -> float:
    """d(shared loss)/d(rate) at aggregate ``rate``."""
    if isinstance(cfg, CaseIIConfig):
        q1 = loss_mm1b(rate, cfg.c1, cfg.b1)
        q2 = loss_mm1b(rate, cfg.c2, cfg.b2)
        return (cfg.b1 * q1 + cfg.b2 * q2) / rate
    if isinstance(cfg, CaseIConfig):
        q = loss_mm1b(rate, cfg.c, cfg.b)
        return cfg.b * q / rate
    q = loss_mm1b(rate, cfg.c, cfg.b)
    return cfg.b * q / rate


def edge_loss_derivative(cfg, j: int, w: float) -> float:
    """d(edge loss)/d(own window) for flow set ``j`` (zero outside case3)."""
    if not isinstance(cfg, CaseIIIConfig):
        return 0.0
    if j == 1:
        return cfg.b1 * edge_loss(cfg, 1, w) / w
    return cfg.b2 * edge_loss(cfg, 2, w) / w
