"""Average service rates of the primary/secondary queues under each access scheme.

All rates assume a backlogged secondary user, i.e. the SU has a packet in
every slot.  The primary queue is empty with probability
``1 - lambda_p / mu_p`` and the SU can only be served in those slots.

Schemes
-------
``Sc``  sense for tau, transmit with probability one on an idle declaration.
``S1``  sense for tau, transmit with probability ``a_s`` on an idle declaration.
``S2``  as ``S1`` plus transmit with probability ``b_s`` on a busy declaration.
``So``  no sensing; transmit with probability ``a_s`` in every slot.

Rate functions broadcast over numpy arrays so the optimizer and the grid
oracles can evaluate whole grids at once.
"""
import hashlib
import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from .phy import LinkParams, SensingModel, misdetection_prob, success_prob, _check_tau, _out

CONSTANT = "constant"
PHYSICAL = "physical"


class Scheme(str, Enum):
    SO = "So"
    SC = "Sc"
    S1 = "S1"
    S2 = "S2"

    def __str__(self):
        return self.value


# Tie-break order used by best_scheme: less mechanism first.
SCHEME_ORDER = (Scheme.SO, Scheme.SC, Scheme.S1, Scheme.S2)


def _default_link(slot_duration=1.0):
    return LinkParams(bits_per_packet=1000.0, slot_duration=slot_duration,
                      bandwidth=1000.0, snr=10.0, mean_gain=1.0)


@dataclass(frozen=True)
class NetworkEnv:
    """One primary link, one secondary link and the SU's sensor.

    ``success_mode='constant'`` pins both link success probabilities to the
    given constants (independent of tau); ``'physical'`` derives them from
    the Rayleigh outage model of the links.
    """
    primary_link: LinkParams
    secondary_link: LinkParams
    sensing: SensingModel
    success_mode: str = PHYSICAL
    constant_success_p: Optional[float] = None
    constant_success_s: Optional[float] = None

    def __post_init__(self):
        if self.success_mode not in (CONSTANT, PHYSICAL):
            raise ValueError(f"unknown success mode {self.success_mode!r}")
        if self.success_mode == CONSTANT:
            for name in ("constant_success_p", "constant_success_s"):
                v = getattr(self, name)
                if v is None or not 0.0 <= v <= 1.0:
                    raise ValueError(f"{name} must lie in [0, 1] in constant mode, got {v!r}")

    @classmethod
    def constant(cls, p_md, p_fa, p_ppd, p_ssd, slot_duration=1.0):
        """Environment with exogenous sensing and constant link success."""
        link = _default_link(slot_duration)
        return cls(link, link, SensingModel.exogenous(p_md, p_fa), CONSTANT, p_ppd, p_ssd)

    @property
    def slot_duration(self) -> float:
        return self.secondary_link.slot_duration

    @property
    def p_fa(self) -> float:
        return self.sensing.p_fa

    def p_md(self, tau=0.0):
        _check_tau(tau, self.slot_duration)
        return misdetection_prob(self.sensing, tau)

    def primary_success(self) -> float:
        if self.success_mode == CONSTANT:
            return float(self.constant_success_p)
        return success_prob(self.primary_link, 0.0)

    def secondary_success(self, tau=0.0):
        if self.success_mode == CONSTANT:
            t = _check_tau(tau, self.slot_duration)
            return _out(np.full(t.shape, float(self.constant_success_s)))
        return success_prob(self.secondary_link, tau)

    def digest(self) -> str:
        return hashlib.sha256(repr(self).encode()).hexdigest()[:16]


@dataclass(frozen=True)
class AccessPolicy:
    """Scheme plus its knobs: sensing duration and the two access probabilities."""
    scheme: Scheme
    tau: float = 0.0
    a_s: float = 1.0
    b_s: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        if not (0.0 <= self.a_s <= 1.0 and 0.0 <= self.b_s <= 1.0):
            raise ValueError("access probabilities must lie in [0, 1]")
        if self.tau < 0:
            raise ValueError("tau must be non-negative")
        if self.scheme in (Scheme.SC, Scheme.S1) and self.b_s != 0.0:
            raise ValueError(f"{self.scheme} never accesses on a busy declaration (b_s must be 0)")
        # a_s = 0 is the silent policy reported for infeasible points
        if self.scheme == Scheme.SC and self.a_s not in (0.0, 1.0):
            raise ValueError("Sc accesses with probability one (a_s must be 1)")
        if self.scheme == Scheme.SO and self.tau != 0.0:
            raise ValueError("So does not sense (tau must be 0)")

    @classmethod
    def silent(cls, scheme) -> "AccessPolicy":
        return cls(scheme, tau=0.0, a_s=0.0, b_s=0.0)


@dataclass(frozen=True)
class ServiceRates:
    """Average service rates in packets/slot.

    ``feasible`` is False when the primary queue cannot be stabilised
    (``lambda_p > mu_p``); ``mu_s`` is then reported as 0.
    Fields are numpy arrays when the inputs were arrays.
    """
    mu_p: float
    mu_s: float
    feasible: bool


def _queue_rates(mu_p, gain, lambda_p) -> ServiceRates:
    mu_p = np.asarray(mu_p, dtype=float)
    lam = np.asarray(lambda_p, dtype=float)
    if np.any((lam < 0) | (lam > 1)):
        raise ValueError("lambda_p must lie in [0, 1]")
    feasible = lam <= mu_p
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        empty = np.where(lam == 0, 1.0, 1.0 - lam / mu_p)
        mu_s = np.where(feasible, np.asarray(gain, dtype=float) * empty, 0.0)
    feasible = np.broadcast_to(feasible, mu_s.shape)
    mu_p = np.broadcast_to(mu_p, mu_s.shape)
    if mu_s.ndim == 0:
        return ServiceRates(float(mu_p), float(mu_s), bool(feasible))
    return ServiceRates(mu_p, mu_s, feasible)


def _check_prob(name, x):
    x = np.asarray(x, dtype=float)
    if np.any((x < 0) | (x > 1)):
        raise ValueError(f"{name} must lie in [0, 1]")
    return x


def rates_conventional(env: NetworkEnv, tau, lambda_p) -> ServiceRates:
    p_md = env.p_md(tau)
    p_ppd = env.primary_success()
    mu_p = p_ppd * (1.0 - p_md)
    gain = env.secondary_success(tau) * (1.0 - env.p_fa)
    return _queue_rates(mu_p, gain, lambda_p)


def rates_s1(env: NetworkEnv, tau, a_s, lambda_p) -> ServiceRates:
    a = _check_prob("a_s", a_s)
    p_md = env.p_md(tau)
    mu_p = env.primary_success() * (1.0 - a * p_md)
    # evaluated left to right so that a_s = 1 reproduces Sc bit for bit
    gain = a * env.secondary_success(tau) * (1.0 - env.p_fa)
    return _queue_rates(mu_p, gain, lambda_p)


def rates_s2(env: NetworkEnv, tau, a_s, b_s, lambda_p) -> ServiceRates:
    a = _check_prob("a_s", a_s)
    b = _check_prob("b_s", b_s)
    p_md = env.p_md(tau)
    p_fa = env.p_fa
    p_ppd = env.primary_success()
    p_ssd = env.secondary_success(tau)
    mu_p = p_ppd * (p_md * (1.0 - a) + (1.0 - p_md) * (1.0 - b))
    gain = p_ssd * (a * (1.0 - p_fa) + b * p_fa)
    if np.any(b == 0):
        # busy access disabled: S2 is exactly S1
        s1 = rates_s1(env, tau, a, lambda_p)
        s2 = _queue_rates(mu_p, gain, lambda_p)
        if np.ndim(s2.mu_s) == 0:
            return s1 if b == 0 else s2
        off = np.broadcast_to(b == 0, np.shape(s2.mu_s))
        return ServiceRates(np.where(off, s1.mu_p, s2.mu_p),
                            np.where(off, s1.mu_s, s2.mu_s),
                            np.where(off, s1.feasible, s2.feasible))
    return _queue_rates(mu_p, gain, lambda_p)


def rates_random(env: NetworkEnv, a_s, lambda_p) -> ServiceRates:
    """Sensing-free random access: the SU keeps the whole slot (tau = 0)."""
    a = _check_prob("a_s", a_s)
    mu_p = (1.0 - a) * env.primary_success()
    gain = a * env.secondary_success(0.0)
    return _queue_rates(mu_p, gain, lambda_p)


def rates(env: NetworkEnv, policy: AccessPolicy, lambda_p) -> ServiceRates:
    """Dispatch to the rate function of ``policy.scheme``."""
    s = policy.scheme
    if s == Scheme.SC:
        if policy.a_s == 0.0:
            return rates_s1(env, policy.tau, 0.0, lambda_p)
        return rates_conventional(env, policy.tau, lambda_p)
    if s == Scheme.S1:
        return rates_s1(env, policy.tau, policy.a_s, lambda_p)
    if s == Scheme.S2:
        return rates_s2(env, policy.tau, policy.a_s, policy.b_s, lambda_p)
    return rates_random(env, policy.a_s, lambda_p)


def boundary_random(env: NetworkEnv, lambda_p) -> float:
    """Largest stable secondary rate of So, maximised over a_s in closed form.

    Returns 0 when ``lambda_p`` exceeds the primary link success probability.
    """
    p_ppd = env.primary_success()
    p_ssd = env.secondary_success(0.0)
    if lambda_p < 0:
        raise ValueError("lambda_p must be non-negative")
    if lambda_p > p_ppd:
        return 0.0
    if lambda_p == 0:
        return float(p_ssd)
    return float(p_ssd * (1.0 - math.sqrt(lambda_p / p_ppd)) ** 2)
