"""Small-scale channel sampling.

Antenna-level channels are circularly-symmetric complex Gaussians whose
variances come from the large-scale profile: antennas on the same site
share one gain row.  Every draw returns the true channel together with its
estimate and the estimation error, generated jointly so that

    g_true = g_hat + g_err

holds exactly, with g_hat ~ CN(0, alpha) independent of g_err ~ CN(0,
beta - alpha).  That joint construction is what the closed forms downstream
assume, so it is the only sampling path in the package.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .propagation import FadingProfile
from .scenario import ConfigError, ScenarioConfig


@dataclass(frozen=True)
class ChannelSample:
    """One joint draw: true channel, estimate and error, all (antennas, users)."""

    g_true: np.ndarray
    g_hat: np.ndarray
    g_err: np.ndarray


def expand_site_to_antennas(profile: FadingProfile) -> tuple[np.ndarray, np.ndarray]:
    """Antenna-level (beta, alpha), each (sites * antennas_per_site, users).

    Row ``(q * n_t + j)`` repeats site row ``q``: co-located antennas share
    their site's large-scale state.
    """
    n_t = profile.antennas_per_site
    beta = np.repeat(profile.beta, n_t, axis=0)
    alpha = np.repeat(profile.alpha, n_t, axis=0)
    return beta, alpha


def _error_variance(profile: FadingProfile) -> np.ndarray:
    beta, alpha = expand_site_to_antennas(profile)
    err = beta - alpha
    if (err < -1e-12 * beta - 1e-300).any():
        raise ValueError("estimate variance exceeds channel gain")
    return np.maximum(err, 0.0)


def complex_normal(rng: np.random.Generator, variance, size) -> np.ndarray:
    """CN(0, variance) draws of the given shape.

    ``variance`` broadcasts against ``size``; real and imaginary parts each
    carry half of it.
    """
    v = np.asarray(variance, dtype=float)
    if (v < 0).any():
        raise ValueError("variance must be >= 0")
    z = rng.standard_normal(size=tuple(size) + (2,))
    z = z.view(np.complex128)[..., 0]
    return z * np.sqrt(v / 2.0)


def sample_estimates(profile: FadingProfile, rng: np.random.Generator,
                     n: int) -> np.ndarray:
    """Batch of channel-estimate matrices, (n, antennas, users).

    Cheaper than full joint draws when only the estimate statistics matter
    (precoder moments); uses the same variance expansion as the joint path.
    """
    _, alpha = expand_site_to_antennas(profile)
    return complex_normal(rng, alpha, (n,) + alpha.shape)


def sample_channel_batch(profile: FadingProfile, rng: np.random.Generator,
                         n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Batch of joint draws: (g_true, g_hat, g_err), each (n, antennas, users).

    The estimate is drawn before the error, one block each, so a given
    generator state always yields the same channels.
    """
    _, alpha = expand_site_to_antennas(profile)
    err_var = _error_variance(profile)
    g_hat = complex_normal(rng, alpha, (n,) + alpha.shape)
    g_err = complex_normal(rng, err_var, (n,) + err_var.shape)
    return g_hat + g_err, g_hat, g_err


def sample_channel(profile: FadingProfile, cfg: ScenarioConfig,
                   rng: np.random.Generator) -> ChannelSample:
    """One joint draw at antenna level."""
    if cfg.antennas_per_ap != profile.antennas_per_site:
        raise ConfigError(f"config antennas_per_ap ({cfg.antennas_per_ap}) "
                          f"does not match profile "
                          f"({profile.antennas_per_site})")
    g_true, g_hat, g_err = sample_channel_batch(profile, rng, 1)
    return ChannelSample(g_true=g_true[0], g_hat=g_hat[0], g_err=g_err[0])
