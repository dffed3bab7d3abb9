"""Stable-throughput analysis of sensing-based random access in cognitive radio.

One primary and one secondary user share a slotted channel.  The secondary
either senses for part of the slot and then accesses at random (schemes
Sc, S1, S2) or accesses at random without sensing (So).  This package
computes the service rates and stability-region boundaries of each scheme,
optimises the access probabilities and sensing duration, and checks the
analysis against a seeded slot-level simulation.
"""
from .phy import (
    LinkParams,
    SensingModel,
    gaussian_tail,
    gaussian_tail_inverse,
    misdetection_prob,
    success_prob,
    transmission_rate,
)
from .schemes import (
    AccessPolicy,
    NetworkEnv,
    Scheme,
    ServiceRates,
    boundary_random,
    rates,
    rates_conventional,
    rates_random,
    rates_s1,
    rates_s2,
)
from .optimizer import (
    FractionalProgram,
    InfeasibleError,
    RegionCurve,
    best_scheme,
    boundary_at_tau,
    crossover,
    grid_oracle,
    maximize_scheme,
    optimal_a_s1,
    optimal_a_s2,
    region_curve,
    solve_fractional,
)
from .queue_sim import (
    BACKLOGGED,
    SimConfig,
    SimReport,
    empirical_rates,
    simulate,
    stability_probe,
)

__version__ = "0.1.0"
