"""
Checking the formulas with a queue simulation
=============================================

The simulator plays out every slot: arrivals, sensing, access, collisions
and outages.  Its measured service rates should sit within a few standard
errors of the analytic ones, and arrival rates just inside or outside the
boundary should give stable or growing queues.
"""

from crsense import AccessPolicy, NetworkEnv
from crsense.optimizer import maximize_scheme
from crsense.queue_sim import SimConfig, empirical_rates, simulate
from crsense.schemes import rates

env = NetworkEnv.constant(p_md=0.3, p_fa=0.2, p_ppd=0.9, p_ssd=0.8)
policy = AccessPolicy("S1", 0.0, 0.5)
lam_p = 0.2

e = empirical_rates(env, policy, lam_p, SimConfig(10 ** 6, seed=42))
r = rates(env, policy, lam_p)
print(f"mu_p: simulated {e.mu_p:.4f} +- {e.se_mu_p():.4f}, analytic {r.mu_p:.4f}")
print(f"mu_s: simulated {e.mu_s:.4f} +- {e.se_mu_s():.4f}, analytic {r.mu_s:.4f}")

# straddle the boundary of the optimised S2 policy
opt = maximize_scheme("S2", env, lam_p)
print()
print(f"S2 boundary at lambda_p={lam_p}: {opt.lambda_s_max:.4f}")
for factor in (0.9, 1.1):
    cfg = SimConfig(10 ** 6, seed=7, lambda_p=lam_p, lambda_s=factor * opt.lambda_s_max)
    rep = simulate(env, opt.policy, cfg)
    print(f"  {factor} x boundary: mean Q_s {rep.mean_qs:9.1f}, trend {rep.final_qs_trend:+.5f}/slot -> {rep.stability_verdict}")
