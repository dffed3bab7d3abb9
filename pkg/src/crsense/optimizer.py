"""Maximising the secondary stable throughput.

The per-tau access probabilities come in closed form (the S1 square-root
rule and the fractional-program solution for S2); tau and b_s are searched
on uniform grids.  :func:`grid_oracle` is the brute-force cross-check for
every closed form in this module.
"""
import math
from dataclasses import dataclass, field
from typing import Callable, List, NamedTuple, Sequence, Union

import numpy as np

from .schemes import (
    AccessPolicy,
    NetworkEnv,
    Scheme,
    boundary_random,
    rates_conventional,
    rates_random,
    rates_s1,
    rates_s2,
)

DEFAULT_TAU_POINTS = 101
DEFAULT_B_POINTS = 101
# fraction of the slot spanned by the default tau grid
TAU_SPAN = 0.5

Grid = Union[int, Sequence[float], np.ndarray]


class InfeasibleError(ValueError):
    """No access probability keeps the primary queue stable."""


@dataclass(frozen=True)
class FractionalProgram:
    """max (a x + f)/(c x - d) + K x  s.t.  0 <= x <= (d - w)/c,  x <= 1."""
    a: float
    f: float
    c: float
    d: float
    K: float
    w: float

    def __post_init__(self):
        for name in ("a", "f", "c", "d", "K", "w"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ValueError(f"fractional program constant {name} must be positive, got {v!r}")

    @property
    def feasible(self) -> bool:
        return self.d >= self.w

    def objective(self, x):
        x = np.asarray(x, dtype=float)
        return (self.a * x + self.f) / (self.c * x - self.d) + self.K * x


def _fractional_argmax(a, f, c, d, K, w):
    """Vectorised closed-form solution; also covers the degenerate c = 0 and K = 0 cases.

    Returns NaN where d < w.  Zero constants are allowed here because the
    S2 mapping produces them (lambda_p = 0, b_s = 0, perfect sensing).
    """
    a, f, c, d, K, w = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (a, f, c, d, K, w)))
    with np.errstate(divide="ignore", invalid="ignore"):
        root = np.sqrt((a * d + c * f) / K)
        x = np.maximum(np.minimum(np.minimum((d - root) / c, (d - w) / c), 1.0), 0.0)
    # c = 0: objective is linear, slope K - a/d >= 0 on the feasible set
    x = np.where(c == 0, np.where(K * d > a, 1.0, 0.0), x)
    # K = 0 (and c > 0): objective -(a x + f)/(d - c x) is nonincreasing
    x = np.where((K == 0) & (c > 0), 0.0, x)
    return np.where(d >= w, x, np.nan)


def solve_fractional(p: FractionalProgram) -> float:
    """Maximiser of the fractional program (positive constants, ``d >= w``).

    The stationary point of the concave objective on ``c x < d`` is
    ``(d - sqrt((a d + c f)/K))/c``; the other root of the quadratic lies
    beyond the ``(d - w)/c`` bound.  Clipping to the box gives the answer.
    """
    if not p.feasible:
        raise InfeasibleError(f"fractional program infeasible: d={p.d} < w={p.w}")
    return float(_fractional_argmax(p.a, p.f, p.c, p.d, p.K, p.w))


def _a_s1_star(p_md, p_ppd, lambda_p):
    p_md = np.asarray(p_md, dtype=float)
    ratio = np.sqrt(np.asarray(lambda_p, dtype=float) / p_ppd)
    with np.errstate(divide="ignore", invalid="ignore"):
        x = np.maximum(np.minimum((1.0 - ratio) / p_md, 1.0), 0.0)
    x = np.where(p_md == 0, 1.0, x)
    return np.where(lambda_p <= p_ppd, x, np.nan)


def _a_s2_star(p_md, p_fa, p_ppd, b_s, lambda_p):
    p_md, b = np.broadcast_arrays(np.asarray(p_md, dtype=float), np.asarray(b_s, dtype=float))
    lam = float(lambda_p)
    d = p_md + (1.0 - p_md) * (1.0 - b)
    x = _fractional_argmax(a=lam * (1.0 - p_fa) / p_ppd,
                           f=lam * b * p_fa / p_ppd,
                           c=p_md,
                           d=d,
                           K=1.0 - p_fa,
                           w=lam / p_ppd)
    # b_s = 0 is S1; use its rule so both paths agree exactly
    return np.where(b == 0, _a_s1_star(p_md, p_ppd, lam), x)


def optimal_a_s1(env: NetworkEnv, tau: float, lambda_p: float) -> float:
    """Throughput-maximising idle-access probability of S1 at fixed tau."""
    p_ppd = env.primary_success()
    if lambda_p > p_ppd:
        raise InfeasibleError(f"lambda_p={lambda_p} exceeds primary success probability {p_ppd}")
    return float(_a_s1_star(env.p_md(tau), p_ppd, lambda_p))


def optimal_a_s2(env: NetworkEnv, tau: float, b_s: float, lambda_p: float) -> float:
    """Throughput-maximising idle-access probability of S2 at fixed (b_s, tau).

    Feasible iff ``P_MD + (1 - P_MD)(1 - b_s) >= lambda_p / P_ppd``.
    """
    p_ppd = env.primary_success()
    if p_ppd == 0:
        if lambda_p > 0:
            raise InfeasibleError("primary link is always in outage")
    x = float(_a_s2_star(env.p_md(tau), env.p_fa, p_ppd, b_s, lambda_p)) if p_ppd > 0 else 1.0
    if math.isnan(x):
        raise InfeasibleError(f"no a_s in [0, 1] stabilises the primary at b_s={b_s}, lambda_p={lambda_p}")
    return x


def grid_oracle(objective: Callable, lo: float, hi: float, steps: int):
    """Exhaustive maximisation on ``steps`` uniform points of [lo, hi].

    ``objective`` may be vectorised; otherwise it is called point by point.
    NaN values never win.  Ties go to the lowest grid point.
    """
    if lo > hi or steps < 2:
        raise ValueError("grid_oracle needs lo <= hi and steps >= 2")
    xs = np.linspace(lo, hi, steps)
    try:
        values = np.asarray(objective(xs), dtype=float)
    except (TypeError, ValueError):
        values = None
    if values is None or values.shape != xs.shape:
        values = np.array([objective(float(x)) for x in xs], dtype=float)
    values = np.where(np.isnan(values), -np.inf, values)
    i = int(np.argmax(values))
    return float(xs[i]), float(values[i])


def tau_grid(env: NetworkEnv, points: Grid = DEFAULT_TAU_POINTS) -> np.ndarray:
    if np.ndim(points) == 0:
        if int(points) < 2:
            raise ValueError("tau grid needs at least 2 points")
        return np.linspace(0.0, TAU_SPAN * env.slot_duration, int(points))
    return np.asarray(points, dtype=float)


def b_grid(points: Grid = DEFAULT_B_POINTS) -> np.ndarray:
    if np.ndim(points) == 0:
        if int(points) < 2:
            raise ValueError("b_s grid needs at least 2 points")
        return np.linspace(0.0, 1.0, int(points))
    return np.asarray(points, dtype=float)


class Optimum(NamedTuple):
    lambda_s_max: float
    policy: AccessPolicy
    feasible: bool


def _first_argmax(values):
    v = np.where(np.isnan(values), -np.inf, values)
    return np.unravel_index(int(np.argmax(v)), v.shape)


def _s2_surface(env, lambda_p, taus, bs):
    """Closed-form a_s* and the resulting mu_s on the (tau, b_s) grid."""
    T, B = np.meshgrid(taus, bs, indexing="ij")
    p_ppd = env.primary_success()
    a = _a_s2_star(env.p_md(T), env.p_fa, p_ppd, B, lambda_p) if p_ppd > 0 else np.full(T.shape, np.nan)
    ok = ~np.isnan(a)
    r = rates_s2(env, T, np.where(ok, a, 0.0), B, lambda_p)
    mu_s = np.where(ok & r.feasible, r.mu_s, np.nan)
    return a, mu_s


def maximize_scheme(scheme, env: NetworkEnv, lambda_p: float,
                    tau_grid_points: Grid = DEFAULT_TAU_POINTS,
                    b_grid_points: Grid = DEFAULT_B_POINTS) -> Optimum:
    """Boundary value ``max lambda_s`` at ``lambda_p`` and the policy reaching it.

    Sc searches tau; S1 uses the closed-form a_s per tau; S2 the closed-form
    a_s per (b_s, tau); So is closed form throughout.  Ties resolve to the
    smallest tau, then the smallest b_s.
    """
    scheme = Scheme(scheme)
    if not 0.0 <= lambda_p <= 1.0:
        raise ValueError("lambda_p must lie in [0, 1]")

    if scheme == Scheme.SO:
        p_ppd = env.primary_success()
        if lambda_p > p_ppd or p_ppd == 0 and lambda_p > 0:
            return Optimum(0.0, AccessPolicy.silent(scheme), False)
        a = 1.0 - math.sqrt(lambda_p / p_ppd) if p_ppd > 0 else 1.0
        return Optimum(boundary_random(env, lambda_p), AccessPolicy(scheme, 0.0, a, 0.0), True)

    taus = tau_grid(env, tau_grid_points)
    if scheme == Scheme.SC:
        r = rates_conventional(env, taus, lambda_p)
        mu_s = np.where(r.feasible, r.mu_s, np.nan)
        if np.all(np.isnan(mu_s)):
            return Optimum(0.0, AccessPolicy.silent(scheme), False)
        (i,) = _first_argmax(mu_s)
        return Optimum(float(mu_s[i]), AccessPolicy(scheme, float(taus[i]), 1.0, 0.0), True)

    if scheme == Scheme.S1:
        p_ppd = env.primary_success()
        if lambda_p > p_ppd:
            return Optimum(0.0, AccessPolicy.silent(scheme), False)
        a = _a_s1_star(env.p_md(taus), p_ppd, lambda_p)
        r = rates_s1(env, taus, a, lambda_p)
        mu_s = np.where(r.feasible, r.mu_s, np.nan)
        if np.all(np.isnan(mu_s)):
            return Optimum(0.0, AccessPolicy.silent(scheme), False)
        (i,) = _first_argmax(mu_s)
        return Optimum(float(mu_s[i]), AccessPolicy(scheme, float(taus[i]), float(a[i]), 0.0), True)

    bs = b_grid(b_grid_points)
    a, mu_s = _s2_surface(env, lambda_p, taus, bs)
    if np.all(np.isnan(mu_s)):
        return Optimum(0.0, AccessPolicy.silent(scheme), False)
    i, j = _first_argmax(mu_s)
    return Optimum(float(mu_s[i, j]), AccessPolicy(scheme, float(taus[i]), float(a[i, j]), float(bs[j])), True)


def boundary_at_tau(scheme, env: NetworkEnv, lambda_p: float, tau: float,
                    b_grid_points: Grid = DEFAULT_B_POINTS) -> Optimum:
    """Boundary of a sensing scheme with tau held fixed (no union over tau)."""
    scheme = Scheme(scheme)
    if scheme == Scheme.SO:
        return maximize_scheme(scheme, env, lambda_p)
    return maximize_scheme(scheme, env, lambda_p, [float(tau)], b_grid_points)


class SchemeChoice(NamedTuple):
    scheme: Scheme
    policy: AccessPolicy
    lambda_s_max: float
    feasible: bool


def best_scheme(env: NetworkEnv, lambda_p: float,
                tau_grid_points: Grid = DEFAULT_TAU_POINTS,
                b_grid_points: Grid = DEFAULT_B_POINTS) -> SchemeChoice:
    """Switch between So, Sc and S2 (S1 is contained in S2).

    Exact ties go to the simpler scheme, in the order So, Sc, S2.
    """
    best = None
    for scheme in (Scheme.SO, Scheme.SC, Scheme.S2):
        opt = maximize_scheme(scheme, env, lambda_p, tau_grid_points, b_grid_points)
        if not opt.feasible:
            continue
        if best is None or opt.lambda_s_max > best.lambda_s_max:
            best = SchemeChoice(scheme, opt.policy, opt.lambda_s_max, True)
    if best is None:
        return SchemeChoice(Scheme.SO, AccessPolicy.silent(Scheme.SO), 0.0, False)
    return best


def max_feasible_lambda_p(scheme, env: NetworkEnv, tau_grid_points: Grid = DEFAULT_TAU_POINTS) -> float:
    """Largest primary arrival rate any policy of ``scheme`` can stabilise."""
    scheme = Scheme(scheme)
    p_ppd = env.primary_success()
    if scheme == Scheme.SC:
        taus = tau_grid(env, tau_grid_points)
        return float(np.max(rates_conventional(env, taus, 0.0).mu_p))
    # So, S1 and S2 reach mu_p = P_ppd with a silent SU
    return float(p_ppd)


@dataclass(frozen=True)
class RegionRow:
    lambda_p: float
    lambda_s_max: float
    policy: AccessPolicy
    feasible: bool = True


@dataclass
class RegionCurve:
    scheme: Scheme
    env_digest: str
    rows: List[RegionRow] = field(default_factory=list)

    @property
    def lambda_p(self) -> np.ndarray:
        return np.array([r.lambda_p for r in self.rows])

    @property
    def lambda_s_max(self) -> np.ndarray:
        return np.array([r.lambda_s_max for r in self.rows])


def region_curve(scheme, env: NetworkEnv, lambda_p_samples: int = 50,
                 tau_grid_points: Grid = DEFAULT_TAU_POINTS,
                 b_grid_points: Grid = DEFAULT_B_POINTS) -> RegionCurve:
    """Sample the stability-region boundary on ``lambda_p_samples`` points.

    The samples run uniformly from 0 to the scheme's largest feasible
    primary rate, so the last row is the pinch point with ``lambda_s_max = 0``.
    """
    if lambda_p_samples < 2:
        raise ValueError("region_curve needs at least 2 lambda_p samples")
    scheme = Scheme(scheme)
    top = min(max_feasible_lambda_p(scheme, env, tau_grid_points), 1.0)
    curve = RegionCurve(scheme, env.digest())
    for lam in np.linspace(0.0, top, lambda_p_samples):
        opt = maximize_scheme(scheme, env, float(lam), tau_grid_points, b_grid_points)
        curve.rows.append(RegionRow(float(lam), opt.lambda_s_max, opt.policy, opt.feasible))
    return curve


class Crossover(NamedTuple):
    lambda_p: float
    so: float
    s2_short_tau: float
    s2_long_tau: float

    @property
    def so_beats_long_sensing(self) -> bool:
        return self.so > self.s2_long_tau

    @property
    def short_sensing_beats_so(self) -> bool:
        return self.s2_short_tau > self.so

    @property
    def short_beats_long_sensing(self) -> bool:
        return self.s2_short_tau > self.s2_long_tau


def crossover(env: NetworkEnv, lambda_p: float, tau_short: float, tau_long: float,
              b_grid_points: Grid = DEFAULT_B_POINTS) -> Crossover:
    """Compare So against S2 held at a short and at a long sensing duration."""
    return Crossover(
        float(lambda_p),
        maximize_scheme(Scheme.SO, env, lambda_p).lambda_s_max,
        boundary_at_tau(Scheme.S2, env, lambda_p, tau_short, b_grid_points).lambda_s_max,
        boundary_at_tau(Scheme.S2, env, lambda_p, tau_long, b_grid_points).lambda_s_max,
    )
