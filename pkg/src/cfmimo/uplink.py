"""Uplink maximum-ratio combining with statistics-based detection.

The receiver combines with the conjugated channel estimates but detects
using only the mean of the effective gain, so the received sample splits
into five zero-mean-orthogonal parts: the deterministic desired part, the
fluctuation of the effective gain around its mean (channel uncertainty),
the estimation-error leakage, inter-user interference, and combined noise.
Their variances have closed forms in the large-scale state alone, and the
effective SINR for user k with n_t antennas per site is

    p_u eta_k n_t^2 (sum_q alpha_qk)^2
    -----------------------------------------------------------------
    p_u n_t sum_i eta_i sum_q alpha_qk beta_qi + sigma^2 n_t sum_q alpha_qk

with the convention gamma = 0 when user k has no estimate energy at all.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .propagation import FadingProfile
from .scenario import ConfigError, ScenarioConfig, derive_noise_power


@dataclass(frozen=True)
class UplinkPowerControl:
    """Per-user transmit power fractions eta in [0, 1], shape (users,)."""

    eta: np.ndarray

    def __post_init__(self):
        eta = np.asarray(self.eta, dtype=float)
        if eta.ndim != 1:
            raise ConfigError(f"eta must be 1-d, got shape {eta.shape}")
        if not np.isfinite(eta).all() or (eta < 0).any() or (eta > 1).any():
            raise ConfigError("uplink power fractions must lie in [0, 1]")
        object.__setattr__(self, "eta", eta)

    @classmethod
    def full_power(cls, num_users: int) -> "UplinkPowerControl":
        return cls(eta=np.ones(num_users))


@dataclass(frozen=True)
class UplinkTermVariances:
    """Variances of the five received-sample parts for one user.

    ``uncertainty`` is the raw second moment of the effective-gain
    fluctuation, n_t * sum_q alpha_qk^2; the transmit scaling p_u eta_k is
    applied when the parts are composed into an SINR, see
    :func:`composed_uplink_sinr`.
    """

    desired: float
    uncertainty: float
    estimation_error: float
    inter_user: float
    noise: float


def _eta_vector(eta, num_users: int) -> np.ndarray:
    if isinstance(eta, UplinkPowerControl):
        vec = eta.eta
    else:
        vec = UplinkPowerControl(eta=np.asarray(eta, dtype=float)).eta
    if vec.shape[0] != num_users:
        raise ConfigError(f"eta has {vec.shape[0]} entries for "
                          f"{num_users} users")
    return vec


def uplink_term_variances(profile: FadingProfile, eta, k: int,
                          cfg: ScenarioConfig) -> UplinkTermVariances:
    """Closed-form variances of the five parts for user ``k``."""
    alpha, beta = profile.alpha, profile.beta
    n_t = profile.antennas_per_site
    eta_vec = _eta_vector(eta, profile.num_users)
    if not 0 <= k < profile.num_users:
        raise ConfigError(f"user index {k} out of range")
    p_u = cfg.ue_tx_power
    sigma_n2 = derive_noise_power(cfg)

    a_k = float(alpha[:, k].sum())
    desired = p_u * eta_vec[k] * (n_t * a_k) ** 2
    uncertainty = n_t * float((alpha[:, k] ** 2).sum())
    estimation_error = (p_u * eta_vec[k] * n_t
                        * float((alpha[:, k] * (beta[:, k] - alpha[:, k])).sum()))
    others = np.delete(np.arange(profile.num_users), k)
    inter_user = p_u * n_t * float(
        (eta_vec[others] * (alpha[:, k][:, None] * beta[:, others]).sum(axis=0)).sum())
    noise = sigma_n2 * n_t * a_k
    return UplinkTermVariances(desired=desired, uncertainty=uncertainty,
                               estimation_error=estimation_error,
                               inter_user=inter_user, noise=noise)


def composed_uplink_sinr(terms: UplinkTermVariances, p_u: float,
                         eta_k: float) -> float:
    """SINR from the term variances.

    The uncertainty part enters scaled by the transmit power p_u eta_k of
    the user it belongs to; with that scaling the four interference parts
    sum exactly to the closed-form denominator.
    """
    denom = (p_u * eta_k * terms.uncertainty + terms.estimation_error
             + terms.inter_user + terms.noise)
    if denom <= 0:
        return 0.0
    return terms.desired / denom


def uplink_sinr_all(profile: FadingProfile, eta, cfg: ScenarioConfig) -> np.ndarray:
    """Effective SINR of every user at once, shape (users,)."""
    alpha, beta = profile.alpha, profile.beta
    n_t = profile.antennas_per_site
    eta_vec = _eta_vector(eta, profile.num_users)
    p_u = cfg.ue_tx_power
    sigma_n2 = derive_noise_power(cfg)

    a = alpha.sum(axis=0)                      # (users,)
    site_load = beta @ eta_vec                 # sum_i eta_i beta_qi, (sites,)
    interference = alpha.T @ site_load         # (users,)
    num = p_u * eta_vec * (n_t * a) ** 2
    den = p_u * n_t * interference + sigma_n2 * n_t * a
    return np.where(den > 0, num / np.where(den > 0, den, 1.0), 0.0)


def uplink_sinr(profile: FadingProfile, eta, k: int, cfg: ScenarioConfig) -> float:
    """Effective SINR of user ``k``."""
    if not 0 <= k < profile.num_users:
        raise ConfigError(f"user index {k} out of range")
    return float(uplink_sinr_all(profile, eta, cfg)[k])


def per_user_rate(gamma) -> np.ndarray:
    """Spectral efficiency log2(1 + gamma), elementwise, bit/s/Hz."""
    g = np.asarray(gamma, dtype=float)
    if (g < 0).any():
        raise ValueError("SINR must be >= 0")
    out = np.log2(1.0 + g)
    if np.ndim(gamma) == 0:
        return float(out)
    return out
