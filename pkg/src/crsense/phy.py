"""Closed-form physical-layer model: outage-limited links and the sensing ROC.

Every function here is pure and accepts either scalars or numpy arrays for
the sensing duration ``tau`` (seconds).  Scalars in, floats out.
"""
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import special

EXOGENOUS = "exogenous"
ROC = "roc"


def _out(x):
    x = np.asarray(x)
    return float(x) if x.ndim == 0 else x


@dataclass(frozen=True)
class LinkParams:
    """One transmitter/receiver pair under Rayleigh block fading.

    ``snr`` is the received SNR at unit channel gain and ``mean_gain`` the
    mean of the exponentially distributed power gain.
    """
    bits_per_packet: float
    slot_duration: float
    bandwidth: float
    snr: float
    mean_gain: float = 1.0

    def __post_init__(self):
        # bits_per_packet == 0 is allowed: a zero-rate link never outages
        if not self.bits_per_packet >= 0:
            raise ValueError("bits_per_packet must be >= 0")
        for name in ("slot_duration", "bandwidth", "snr", "mean_gain"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ValueError(f"{name} must be positive and finite, got {v!r}")


@dataclass(frozen=True)
class SensingModel:
    """Misdetection/false-alarm model of the secondary's spectrum sensor.

    In ``exogenous`` mode both probabilities are constants and ``tau`` has
    no effect on sensing quality.  In ``roc`` mode ``p_fa`` is the target
    false-alarm probability and the misdetection probability follows the
    energy-detector ROC for ``tau * sampling_freq`` samples.
    """
    mode: str = EXOGENOUS
    p_fa: float = 0.2
    p_md_exogenous: float = 0.3
    sampling_freq: Optional[float] = None
    sensing_snr: Optional[float] = None

    def __post_init__(self):
        if self.mode not in (EXOGENOUS, ROC):
            raise ValueError(f"unknown sensing mode {self.mode!r}")
        for name in ("p_fa", "p_md_exogenous"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v!r}")
        if self.mode == ROC:
            if self.sampling_freq is None or not self.sampling_freq > 0:
                raise ValueError("roc sensing requires a positive sampling_freq")
            if self.sensing_snr is None or not self.sensing_snr > 0:
                raise ValueError("roc sensing requires a positive sensing_snr")

    @classmethod
    def exogenous(cls, p_md: float, p_fa: float) -> "SensingModel":
        return cls(EXOGENOUS, p_fa=p_fa, p_md_exogenous=p_md)

    @classmethod
    def roc(cls, p_fa: float, sampling_freq: float, sensing_snr: float) -> "SensingModel":
        return cls(ROC, p_fa=p_fa, sampling_freq=sampling_freq, sensing_snr=sensing_snr)


def _check_tau(tau, slot_duration):
    t = np.asarray(tau, dtype=float)
    if np.any(t < 0):
        raise ValueError("sensing duration must be non-negative")
    if np.any(t >= slot_duration):
        raise ValueError("no transmission time remains: tau must be < slot_duration")
    return t


def transmission_rate(link: LinkParams, tau=0.0):
    """Rate in bit/s needed to fit one packet into the ``T - tau`` remainder."""
    t = _check_tau(tau, link.slot_duration)
    return _out(link.bits_per_packet / (link.slot_duration - t))


def success_prob(link: LinkParams, tau=0.0):
    """Probability that the link is not in outage after sensing for ``tau``.

    With the rate of :func:`transmission_rate` and an exponential gain of
    mean ``mean_gain``, reception succeeds iff the gain exceeds
    ``(2**(r/W) - 1)/snr``.  The primary link uses ``tau = 0``.
    """
    t = _check_tau(tau, link.slot_duration)
    T = link.slot_duration
    spectral = link.bits_per_packet / (T * link.bandwidth * (1.0 - t / T))
    with np.errstate(over="ignore"):
        threshold = np.expm1(spectral * math.log(2.0))
        p = np.exp(-threshold / (link.snr * link.mean_gain))
    return _out(p)


def gaussian_tail(x):
    """Standard normal complementary CDF, Q(x)."""
    return _out(special.ndtr(-np.asarray(x, dtype=float)))


def gaussian_tail_inverse(p):
    """Inverse of :func:`gaussian_tail` on the open interval (0, 1)."""
    q = np.asarray(p, dtype=float)
    if np.any((q <= 0) | (q >= 1)) or np.any(np.isnan(q)):
        raise ValueError("gaussian_tail_inverse is defined only for 0 < p < 1")
    return _out(-special.ndtri(q))


def misdetection_prob(sensing: SensingModel, tau=0.0):
    """P_MD after sensing for ``tau`` seconds (constant in exogenous mode)."""
    t = np.asarray(tau, dtype=float)
    if np.any(t < 0):
        raise ValueError("sensing duration must be non-negative")
    if sensing.mode == EXOGENOUS:
        return _out(np.full(t.shape, sensing.p_md_exogenous))
    # Degenerate targets: threshold at +-infinity.
    if sensing.p_fa == 0.0:
        return _out(np.ones(t.shape))
    if sensing.p_fa == 1.0:
        return _out(np.zeros(t.shape))
    g = sensing.sensing_snr
    arg = (gaussian_tail_inverse(sensing.p_fa) - np.sqrt(t * sensing.sampling_freq) * g) / math.sqrt(2 * g + 1)
    # 1 - Q(arg) == Phi(arg), evaluated without cancellation
    return _out(special.ndtr(arg))
