"""
When is sensing worth it?
=========================

With physical links the sensing time competes with transmission time.  We
compare sensing-free random access (So) with S2 pinned at a short and at a
long sensing time, then let best_scheme pick per primary load.
"""

import os

import numpy as np

from crsense.cli import parse_config
from crsense.optimizer import best_scheme, crossover, tau_grid

here = os.path.dirname(os.path.abspath(__file__))
with open(os.path.join(here, os.pardir, "configs", "tradeoff.cfg")) as fh:
    env = parse_config(fh.read()).env

taus = tau_grid(env, 101)
short, long_ = float(taus[1]), float(taus[-1])
print(f"short tau = {short:g}, long tau = {long_:g}")
# at light primary load long sensing loses to no sensing, short sensing beats both
print()
print("lambda_p     So   S2(short)  S2(long)")
for lam in np.linspace(0.01, 0.2, 8):
    c = crossover(env, float(lam), short, long_)
    print(f"{lam:8.3f}  {c.so:.4f}  {c.s2_short_tau:.4f}    {c.s2_long_tau:.4f}")

# best_scheme searches tau and b_s for S2 and Sc and compares with So
print()
for lam in (0.02, 0.2, 0.6):
    choice = best_scheme(env, lam, tau_grid_points=21, b_grid_points=21)
    p = choice.policy
    print(f"lambda_p={lam}: use {choice.scheme} (tau={p.tau:g}, a_s={p.a_s:.3f}, b_s={p.b_s:.2f}) "
          f"-> lambda_s up to {choice.lambda_s_max:.4f}")
