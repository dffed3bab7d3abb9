"""
Sensing time versus link quality
================================

Spending the first tau seconds of a slot on sensing buys a better detector
and costs transmission time.  This script prints both sides of that trade
for a physical link and an energy detector.
"""

import numpy as np

from crsense import LinkParams, SensingModel
from crsense.phy import gaussian_tail, gaussian_tail_inverse, misdetection_prob, success_prob

link = LinkParams(bits_per_packet=1000, slot_duration=1.0, bandwidth=1000, snr=5.0)
sensor = SensingModel.roc(p_fa=0.1, sampling_freq=10_000, sensing_snr=0.1)

# the Gaussian tail and its inverse
print("Q(1.6449) =", round(gaussian_tail(1.6449), 6))
print("Q^-1(0.05) =", round(gaussian_tail_inverse(0.05), 6))

# longer sensing drives misdetection down and outage up
tau = np.linspace(0.0, 0.5, 11)
p_md = misdetection_prob(sensor, tau)
p_ok = success_prob(link, tau)
print()
print(" tau    P_MD     P_success")
for t, m, s in zip(tau, p_md, p_ok):
    print(f"{t:5.2f}  {m:7.4f}  {s:9.4f}")

# Monte Carlo check of the outage formula at one tau
rng = np.random.default_rng(0)
gain = rng.exponential(link.mean_gain, 200_000)
cap = np.log2(1 + link.snr * gain)
rate = link.bits_per_packet / (link.bandwidth * (link.slot_duration - 0.2))
print()
print("success at tau=0.2: closed form", round(float(success_prob(link, 0.2)), 4),
      "| simulated", round(float(np.mean(cap >= rate)), 4))
