"""
Service rates and stability regions
===================================

Exogenous sensing errors and constant link success probabilities make the
rate formulas easy to follow by hand.  We evaluate one policy per scheme,
then trace the region boundaries and see how much each extra knob buys.
"""

import numpy as np

from crsense import AccessPolicy, NetworkEnv
from crsense.optimizer import maximize_scheme, optimal_a_s1, optimal_a_s2, region_curve
from crsense.schemes import rates

env = NetworkEnv.constant(p_md=0.3, p_fa=0.2, p_ppd=0.9, p_ssd=0.8)
lam_p = 0.2

for policy in (AccessPolicy("Sc", 0.0, 1.0),
               AccessPolicy("S1", 0.0, 0.5),
               AccessPolicy("S2", 0.0, 0.5, 0.2),
               AccessPolicy("So", 0.0, 0.3)):
    r = rates(env, policy, lam_p)
    print(f"{policy.scheme}: a_s={policy.a_s:.2f} b_s={policy.b_s:.2f}  mu_p={r.mu_p:.4f}  mu_s={r.mu_s:.4f}")

# closed-form access probabilities
print()
print("best a_s for S1 at lambda_p=0.72:", round(optimal_a_s1(env, 0.0, 0.72), 5))
print("best a_s for S2 at lambda_p=0.3, b_s=0.5:", round(optimal_a_s2(env, 0.0, 0.5, 0.3), 5))

# boundaries: S2 contains S1 contains Sc
print()
print("lambda_p     Sc      S1      S2      So")
for lam in np.linspace(0.0, 0.9, 10):
    row = [maximize_scheme(s, env, float(lam)).lambda_s_max for s in ("Sc", "S1", "S2", "So")]
    print(f"{lam:8.2f}  " + "  ".join(f"{v:.4f}" for v in row))

curve = region_curve("Sc", env, lambda_p_samples=5)
print()
print("Sc curve ends at lambda_p =", round(curve.lambda_p[-1], 4), "where lambda_s =", curve.lambda_s_max[-1])
