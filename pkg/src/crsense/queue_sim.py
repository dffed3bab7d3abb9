"""Slotted Monte Carlo of the primary and secondary queues.

Each slot, in order: the primary queue is served if it is non-empty; the SU
senses (unless the scheme is So) and decides whether to transmit; overlapping
transmissions both fail; a lone transmission survives its link outage draw;
departures happen; then Bernoulli arrivals join the queues.

Per slot exactly six uniforms are drawn from one xoshiro256** stream, in
the order arrival_p, arrival_s, sensing, access, outage_p, outage_s, whether
or not they are needed.  That makes a run a pure function of its seed.
"""
import csv
import io
from dataclasses import asdict, dataclass, fields
from typing import Optional, Union

import numpy as np
from numba import njit
from scipy import stats

from .rng import next_double, seed_state
from .schemes import AccessPolicy, NetworkEnv, Scheme

BACKLOGGED = "backlogged"
STABLE = "stable"
UNSTABLE = "unstable"
INCONCLUSIVE = "inconclusive"

TREND_EPS = 1e-3
CHECKPOINTS = 100
WARMUP_FRACTION = 0.1


@dataclass(frozen=True)
class SimConfig:
    slots: int = 1_000_000
    seed: int = 0
    lambda_p: float = 0.0
    lambda_s: Union[float, str] = BACKLOGGED
    warmup_slots: Optional[int] = None

    def __post_init__(self):
        if self.slots <= 0:
            raise ValueError("slots must be positive")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if not 0.0 <= self.lambda_p <= 1.0:
            raise ValueError("lambda_p must lie in [0, 1]")
        if self.lambda_s != BACKLOGGED and not 0.0 <= float(self.lambda_s) <= 1.0:
            raise ValueError("lambda_s must lie in [0, 1] or be BACKLOGGED")
        if self.warmup < 0 or self.warmup >= self.slots:
            raise ValueError("zero slots remain after warmup")

    @property
    def backlogged(self) -> bool:
        return self.lambda_s == BACKLOGGED

    @property
    def warmup(self) -> int:
        if self.warmup_slots is None:
            return int(self.slots * WARMUP_FRACTION)
        return int(self.warmup_slots)


@dataclass(frozen=True)
class SimReport:
    """Measured rates and queue behaviour of one run.

    ``empirical_mu_p`` counts primary departures per slot with a non-empty
    primary queue (NaN if there were none).  ``empirical_mu_s`` is secondary
    departures per measured slot; ``conditional_mu_s`` divides instead by
    the slots where the primary queue was empty and the SU had a packet.
    Trends are least-squares slopes (packets/slot) over the second half.
    """
    scheme: str
    tau: float
    a_s: float
    b_s: float
    lambda_p: float
    lambda_s: float
    slots: int
    measured_slots: int
    busy_slots: int
    idle_slots: int
    primary_departures: int
    secondary_departures: int
    empirical_mu_p: float
    empirical_mu_s: float
    conditional_mu_s: float
    mean_qp: float
    mean_qs: float
    final_qp_trend: float
    final_qs_trend: float
    stability_verdict: str
    seed_used: int

    @staticmethod
    def csv_header():
        return [f.name for f in fields(SimReport)]

    def csv_row(self):
        return [_fmt(v) for v in asdict(self).values()]


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.12g}"
    return str(v)


def reports_to_csv(reports) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SimReport.csv_header())
    for r in reports:
        w.writerow(r.csv_row())
    return buf.getvalue()


@njit(cache=True, nogil=True)
def _slot_loop(state, slots, warmup, lam_p, lam_s, backlogged, sensing,
               p_md, p_fa, p_ppd, p_ssd, a_s, b_s, cp_idx, cp_qp, cp_qs):
    qp = 0
    qs = 0
    busy = 0
    idle = 0
    dep_p = 0
    dep_s = 0
    sum_qp = 0.0
    sum_qs = 0.0
    k = 0
    n_cp = cp_idx.shape[0]
    for t in range(slots):
        while k < n_cp and cp_idx[k] == t:
            cp_qp[k] = qp
            cp_qs[k] = qs
            k += 1
        u_arr_p = next_double(state)
        u_arr_s = next_double(state)
        u_sense = next_double(state)
        u_access = next_double(state)
        u_out_p = next_double(state)
        u_out_s = next_double(state)

        pu_tx = qp > 0
        su_has = backlogged or qs > 0
        if sensing:
            if pu_tx:
                declared_busy = u_sense < 1.0 - p_md
            else:
                declared_busy = u_sense < p_fa
            prob = b_s if declared_busy else a_s
        else:
            prob = a_s
        su_tx = su_has and u_access < prob
        pu_ok = pu_tx and (not su_tx) and u_out_p < p_ppd
        su_ok = su_tx and (not pu_tx) and u_out_s < p_ssd

        if t >= warmup:
            sum_qp += qp
            sum_qs += qs
            if pu_tx:
                busy += 1
                if pu_ok:
                    dep_p += 1
            elif su_has:
                idle += 1
            if su_ok:
                dep_s += 1

        if pu_ok:
            qp -= 1
        if su_ok and not backlogged:
            qs -= 1
        if u_arr_p < lam_p:
            qp += 1
        if (not backlogged) and u_arr_s < lam_s:
            qs += 1
    return busy, idle, dep_p, dep_s, sum_qp, sum_qs


def _trend(x, y):
    """Slope and its standard error; a constant series is exactly flat."""
    if np.all(y == y[0]):
        return 0.0, 0.0
    fit = stats.linregress(x, y)
    return float(fit.slope), float(fit.stderr)


def verdict_from_trends(trends, eps=TREND_EPS) -> str:
    """Stable if every slope is confidently below ``eps``, unstable if any is
    confidently above; the dead-band is ``eps`` +- 3 standard errors."""
    if any(s - 3 * se > eps for s, se in trends):
        return UNSTABLE
    if all(s + 3 * se < eps for s, se in trends):
        return STABLE
    return INCONCLUSIVE


def link_probabilities(env: NetworkEnv, policy: AccessPolicy):
    """(P_MD, P_FA, P_ppd, P_ssd) seen by the simulator under ``policy``."""
    tau = 0.0 if policy.scheme == Scheme.SO else policy.tau
    return (float(env.p_md(tau)), float(env.p_fa), float(env.primary_success()),
            float(env.secondary_success(tau)))


def simulate(env: NetworkEnv, policy: AccessPolicy, cfg: SimConfig) -> SimReport:
    p_md, p_fa, p_ppd, p_ssd = link_probabilities(env, policy)
    state = seed_state(cfg.seed)
    half = cfg.slots // 2
    cp_idx = np.unique(np.linspace(half, cfg.slots - 1, CHECKPOINTS).astype(np.int64))
    cp_qp = np.zeros(cp_idx.shape[0], dtype=np.float64)
    cp_qs = np.zeros(cp_idx.shape[0], dtype=np.float64)
    lam_s = 0.0 if cfg.backlogged else float(cfg.lambda_s)
    busy, idle, dep_p, dep_s, sum_qp, sum_qs = _slot_loop(
        state, cfg.slots, cfg.warmup, cfg.lambda_p, lam_s, cfg.backlogged,
        policy.scheme != Scheme.SO, p_md, p_fa, p_ppd, p_ssd,
        float(policy.a_s), float(policy.b_s), cp_idx, cp_qp, cp_qs)

    measured = cfg.slots - cfg.warmup
    qp_trend = _trend(cp_idx, cp_qp)
    trends = [qp_trend]
    qs_trend = (0.0, 0.0)
    if not cfg.backlogged:
        qs_trend = _trend(cp_idx, cp_qs)
        trends.append(qs_trend)
    return SimReport(
        scheme=str(policy.scheme), tau=float(policy.tau), a_s=float(policy.a_s), b_s=float(policy.b_s),
        lambda_p=float(cfg.lambda_p), lambda_s=float("nan") if cfg.backlogged else lam_s,
        slots=cfg.slots, measured_slots=measured, busy_slots=int(busy), idle_slots=int(idle),
        primary_departures=int(dep_p), secondary_departures=int(dep_s),
        empirical_mu_p=dep_p / busy if busy else float("nan"),
        empirical_mu_s=dep_s / measured,
        conditional_mu_s=dep_s / idle if idle else float("nan"),
        mean_qp=sum_qp / measured,
        mean_qs=float("nan") if cfg.backlogged else sum_qs / measured,
        final_qp_trend=qp_trend[0], final_qs_trend=qs_trend[0],
        stability_verdict=verdict_from_trends(trends),
        seed_used=int(cfg.seed),
    )


@dataclass(frozen=True)
class EmpiricalRates:
    """Backlogged-SU service rates measured from a run.

    ``mu_p`` is conditional on a non-empty primary queue; ``mu_s`` is the
    unconditional secondary departure rate and ``mu_s_conditional`` the rate
    per slot with an empty primary queue.  The ``*_se`` fields are binomial
    standard errors around the supplied reference probabilities or, absent
    those, around the estimates themselves.
    """
    mu_p: float
    mu_s: float
    mu_s_conditional: float
    busy_slots: int
    idle_slots: int
    measured_slots: int
    primary_defined: bool
    secondary_defined: bool

    def se_mu_p(self, p=None) -> float:
        p = self.mu_p if p is None else p
        return float(np.sqrt(p * (1 - p) / self.busy_slots)) if self.busy_slots else float("nan")

    def se_mu_s_conditional(self, p=None) -> float:
        p = self.mu_s_conditional if p is None else p
        return float(np.sqrt(p * (1 - p) / self.idle_slots)) if self.idle_slots else float("nan")

    def se_mu_s(self, p=None) -> float:
        p = self.mu_s if p is None else p
        return float(np.sqrt(p * (1 - p) / self.measured_slots))


def empirical_rates(env: NetworkEnv, policy: AccessPolicy, lambda_p: float, cfg: SimConfig) -> EmpiricalRates:
    cfg = SimConfig(cfg.slots, cfg.seed, lambda_p, BACKLOGGED, cfg.warmup_slots)
    r = simulate(env, policy, cfg)
    return EmpiricalRates(
        mu_p=r.empirical_mu_p, mu_s=r.empirical_mu_s, mu_s_conditional=r.conditional_mu_s,
        busy_slots=r.busy_slots, idle_slots=r.idle_slots, measured_slots=r.measured_slots,
        primary_defined=r.busy_slots > 0, secondary_defined=r.idle_slots > 0,
    )


def stability_probe(env: NetworkEnv, policy: AccessPolicy, lambda_p: float, lambda_s: float,
                    cfg: SimConfig) -> str:
    """Verdict on whether both queues stay bounded at (lambda_p, lambda_s)."""
    if lambda_s == BACKLOGGED:
        raise ValueError("stability_probe needs a finite secondary arrival rate")
    cfg = SimConfig(cfg.slots, cfg.seed, lambda_p, float(lambda_s), cfg.warmup_slots)
    return simulate(env, policy, cfg).stability_verdict
