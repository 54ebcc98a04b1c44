"""Downlink precoding: conjugate beamforming and zero-forcing.

Conjugate beamforming (CBF) admits a fully closed-form treatment: with the
statistics-aware per-site power normalization every antenna radiates its
power budget exactly in expectation, and the per-user SINR is

    p_d n_t^2 (sum_q sqrt(eta_q) alpha_qk)^2
    ------------------------------------------------------------
    sigma^2 + p_d n_t sum_q beta_qk eta_q sum_i alpha_qi

Zero-forcing (ZFP) inverts the estimated channel, so its interference
statistics depend on the inverse Gram matrix and have no closed form.  The
two second moments the SINR needs, the per-antenna precoder load and the
estimation-error leakage through the pseudo-inverse, are estimated by
Monte-Carlo over channel estimates; with those numbers the SINR for user k
under a common power scale eta is

    p_d eta / (sigma^2 + p_d eta sum_i chi[k, i])

where chi[k, i] is the mean leaked power of user k's estimation error into
the stream of user i.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import expand_site_to_antennas, sample_estimates
from .propagation import FadingProfile
from .scenario import ConfigError, ScenarioConfig, derive_noise_power

# relative reciprocal-condition floor below which a Gram matrix draw is
# treated as singular and redrawn
_RCOND_FLOOR = 1e-13
# fraction of singular draws beyond which the estimate is abandoned
_SINGULAR_FRACTION = 0.01


class NumericalError(RuntimeError):
    """Degenerate linear algebra beyond the tolerated rate."""


@dataclass(frozen=True)
class CbfPowerControl:
    """Per-site CBF power scales, shape (sites,)."""

    eta_site: np.ndarray


@dataclass(frozen=True)
class ZfpPowerControl:
    """Common ZFP power scale with the audit trail of its estimation.

    ``antenna_load`` is the estimated mean precoder energy per antenna
    (summed over users) that the scale was normalized against, with its
    per-antenna standard error in ``load_stderr``.
    """

    eta_common: float
    antenna_load: np.ndarray
    load_stderr: np.ndarray
    n_samples: int
    n_resampled: int


@dataclass(frozen=True)
class ChiMatrix:
    """Estimation-error leakage moments chi[k, i] with standard errors."""

    chi: np.ndarray
    stderr: np.ndarray
    n_samples: int
    n_resampled: int


def cbf_power(profile: FadingProfile) -> CbfPowerControl:
    """Full-power per-site scales, eta_q = 1 / sum_k alpha_qk.

    Chosen so each antenna's expected radiated power equals its budget
    exactly; a site with zero total estimate energy cannot be normalized.
    """
    load = profile.alpha.sum(axis=1)
    dead = np.flatnonzero(load <= 0)
    if dead.size:
        raise ConfigError(f"site {dead[0]} has zero total estimate energy, "
                          "cannot normalize CBF power")
    return CbfPowerControl(eta_site=1.0 / load)


def cbf_sinr_all(profile: FadingProfile, pc: CbfPowerControl,
                 cfg: ScenarioConfig) -> np.ndarray:
    """Closed-form CBF SINR of every user, shape (users,)."""
    alpha, beta = profile.alpha, profile.beta
    n_t = profile.antennas_per_site
    eta = np.asarray(pc.eta_site, dtype=float)
    if eta.shape != (profile.num_sites,):
        raise ConfigError(f"eta_site has shape {eta.shape} for "
                          f"{profile.num_sites} sites")
    if (eta < 0).any():
        raise ConfigError("eta_site must be >= 0")
    p_d = cfg.ap_per_antenna_tx_power
    sigma_n2 = derive_noise_power(cfg)

    coherent = alpha.T @ np.sqrt(eta)          # sum_q sqrt(eta_q) alpha_qk
    site_energy = eta * alpha.sum(axis=1)      # eta_q sum_i alpha_qi
    den = sigma_n2 + p_d * n_t * (beta.T @ site_energy)
    num = p_d * (n_t * coherent) ** 2
    return np.where(den > 0, num / np.where(den > 0, den, 1.0), 0.0)


def cbf_sinr(profile: FadingProfile, pc: CbfPowerControl, k: int,
             cfg: ScenarioConfig) -> float:
    if not 0 <= k < profile.num_users:
        raise ConfigError(f"user index {k} out of range")
    return float(cbf_sinr_all(profile, pc, cfg)[k])


def zfp_precoder(g_hat: np.ndarray, eta) -> np.ndarray:
    """Zero-forcing precoder for one estimate matrix.

    ``B = conj(G) (G^T conj(G))^-1 D`` with ``D = diag(sqrt(eta))``, so
    ``G^T B = D`` holds exactly: each user receives only its own stream
    through the estimated channel.  ``eta`` may be a scalar or per-user.
    """
    if g_hat.ndim != 2:
        raise ConfigError(f"estimate matrix must be 2-d, got {g_hat.shape}")
    m, k = g_hat.shape
    if m < k:
        raise ConfigError(f"zero-forcing needs at least as many antennas as "
                          f"users, got {m} x {k}")
    gram = g_hat.T @ g_hat.conj()
    sv = np.linalg.svd(gram, compute_uv=False)
    if not np.isfinite(sv).all() or sv[-1] <= sv[0] * _RCOND_FLOOR:
        cond = float("inf") if sv[-1] == 0 else float(sv[0] / sv[-1])
        raise NumericalError(f"estimate Gram matrix is singular "
                             f"(condition number {cond:.3e})")
    scale = np.sqrt(np.broadcast_to(np.asarray(eta, dtype=float), (k,)))
    return g_hat.conj() @ np.linalg.solve(gram, np.diag(scale))


def _chunk_sizes(n: int, m: int, k: int) -> list[int]:
    # keep each batch of (chunk, m, k) complex draws around a few tens of MB
    per = max(1, 4_000_000 // max(1, m * k))
    sizes = [per] * (n // per)
    if n % per:
        sizes.append(n % per)
    return sizes


def _precoder_second_moments(profile: FadingProfile, cfg: ScenarioConfig,
                             rng: np.random.Generator, n_samples: int):
    """Shared Monte-Carlo pass over estimate draws.

    Returns (chi mean, chi stderr, delta, load stderr, resampled count)
    where delta[m, i] = E|W_mi|^2 is the per-antenna per-stream precoder
    energy and the load stderr refers to delta summed over streams.  A draw
    whose Gram matrix falls below the reciprocal-condition floor is redrawn
    from the same stream; more than one percent of such draws aborts with
    :class:`NumericalError`.
    """
    if n_samples < 1:
        raise ConfigError(f"n_samples must be >= 1, got {n_samples}")
    beta_mk, alpha_mk = expand_site_to_antennas(profile)
    m, k = beta_mk.shape
    if m < k:
        raise ConfigError(f"zero-forcing needs at least as many antennas as "
                          f"users, got {m} antennas for {k} users")
    err_var_t = np.ascontiguousarray((beta_mk - alpha_mk).T)  # (users, antennas)
    eye = np.eye(k)

    chi_sum = np.zeros((k, k))
    chi_sq_sum = np.zeros((k, k))
    delta_sum = np.zeros((m, k))
    load_sq_sum = np.zeros(m)
    resampled = 0
    budget = max(1, int(np.ceil(_SINGULAR_FRACTION * n_samples)))

    for chunk in _chunk_sizes(n_samples, m, k):
        g = sample_estimates(profile, rng, chunk)
        gram = g.transpose(0, 2, 1) @ g.conj()
        sv = np.linalg.svd(gram, compute_uv=False)
        bad = ~np.isfinite(sv).all(axis=1) | (sv[:, -1] <= sv[:, 0] * _RCOND_FLOOR)
        while bad.any():
            resampled += int(bad.sum())
            if resampled > budget:
                raise NumericalError(
                    f"more than {_SINGULAR_FRACTION:.0%} of estimate draws "
                    f"gave singular Gram matrices "
                    f"({resampled} of {n_samples} requested)")
            g[bad] = sample_estimates(profile, rng, int(bad.sum()))
            gram[bad] = g[bad].transpose(0, 2, 1) @ g[bad].conj()
            sv = np.linalg.svd(gram[bad], compute_uv=False)
            still = ~np.isfinite(sv).all(axis=1) | (sv[:, -1] <= sv[:, 0] * _RCOND_FLOOR)
            idx = np.flatnonzero(bad)
            bad = np.zeros_like(bad)
            bad[idx[still]] = True
        w = g.conj() @ np.linalg.solve(gram, eye)      # (chunk, antennas, users)
        w2 = w.real ** 2 + w.imag ** 2
        delta_sum += w2.sum(axis=0)
        load_sq_sum += (w2.sum(axis=2) ** 2).sum(axis=0)
        chi_chunk = err_var_t @ w2                      # (chunk, users, users)
        chi_sum += chi_chunk.sum(axis=0)
        chi_sq_sum += (chi_chunk ** 2).sum(axis=0)

    chi = chi_sum / n_samples
    delta = delta_sum / n_samples
    load = delta.sum(axis=1)
    if n_samples > 1:
        var = np.maximum(chi_sq_sum - n_samples * chi ** 2, 0.0) / (n_samples - 1)
        stderr = np.sqrt(var / n_samples)
        load_var = np.maximum(load_sq_sum - n_samples * load ** 2, 0.0) \
            / (n_samples - 1)
        load_se = np.sqrt(load_var / n_samples)
    else:
        stderr = np.full((k, k), np.nan)
        load_se = np.full(m, np.nan)
    return chi, stderr, delta, load_se, resampled


def zfp_chi(profile: FadingProfile, cfg: ScenarioConfig,
            rng: np.random.Generator, n_samples: int | None = None) -> ChiMatrix:
    """Estimation-error leakage moments.

    ``chi[k, i]`` is the mean of ``sum_m (beta_mk - alpha_mk) |W_mi|^2``
    over estimate draws, with W the unscaled pseudo-inverse precoder: the
    power of user k's estimation error leaking into stream i.  Perfect
    estimates give an exactly zero matrix.
    """
    n = cfg.chi_samples if n_samples is None else n_samples
    chi, stderr, _, _, resampled = _precoder_second_moments(profile, cfg, rng, n)
    return ChiMatrix(chi=chi, stderr=stderr, n_samples=n, n_resampled=resampled)


def zfp_power(profile: FadingProfile, cfg: ScenarioConfig,
              rng: np.random.Generator,
              n_samples: int | None = None) -> ZfpPowerControl:
    """Common power scale for the ZF precoder.

    Normalizes against the most loaded antenna: eta = 1 / max_m sum_i
    E|W_mi|^2, so that antenna radiates its per-antenna budget exactly in
    expectation and no antenna exceeds it.
    """
    n = cfg.chi_samples if n_samples is None else n_samples
    _, _, delta, load_se, resampled = _precoder_second_moments(profile, cfg,
                                                               rng, n)
    load = delta.sum(axis=1)
    peak = float(load.max())
    if not peak > 0:
        raise NumericalError("estimated precoder load is zero everywhere")
    return ZfpPowerControl(eta_common=1.0 / peak, antenna_load=load,
                           load_stderr=load_se, n_samples=n,
                           n_resampled=resampled)


def zfp_moments(profile: FadingProfile, cfg: ScenarioConfig,
                rng: np.random.Generator,
                n_samples: int | None = None) -> tuple[ChiMatrix, ZfpPowerControl]:
    """Both ZFP moment estimates from one shared batch of estimate draws.

    Equivalent to calling :func:`zfp_chi` and :func:`zfp_power` on
    identically seeded generators but at half the sampling cost; the drop
    runner uses this path.
    """
    n = cfg.chi_samples if n_samples is None else n_samples
    chi, stderr, delta, load_se, resampled = _precoder_second_moments(
        profile, cfg, rng, n)
    load = delta.sum(axis=1)
    peak = float(load.max())
    if not peak > 0:
        raise NumericalError("estimated precoder load is zero everywhere")
    return (ChiMatrix(chi=chi, stderr=stderr, n_samples=n,
                      n_resampled=resampled),
            ZfpPowerControl(eta_common=1.0 / peak, antenna_load=load,
                            load_stderr=load_se, n_samples=n,
                            n_resampled=resampled))


def zfp_sinr_all(profile: FadingProfile, pc: ZfpPowerControl, chi: ChiMatrix,
                 cfg: ScenarioConfig) -> np.ndarray:
    """ZFP SINR of every user under the common power scale, shape (users,)."""
    eta = float(pc.eta_common)
    if eta < 0:
        raise ConfigError(f"eta_common must be >= 0, got {eta}")
    if chi.chi.shape != (profile.num_users, profile.num_users):
        raise ConfigError(f"chi has shape {chi.chi.shape} for "
                          f"{profile.num_users} users")
    p_d = cfg.ap_per_antenna_tx_power
    sigma_n2 = derive_noise_power(cfg)
    leakage = chi.chi.sum(axis=1)              # sum_i chi[k, i]
    return p_d * eta / (sigma_n2 + p_d * eta * leakage)


def zfp_sinr(profile: FadingProfile, pc: ZfpPowerControl, chi: ChiMatrix,
             k: int, cfg: ScenarioConfig) -> float:
    if not 0 <= k < profile.num_users:
        raise ConfigError(f"user index {k} out of range")
    return float(zfp_sinr_all(profile, pc, chi, cfg)[k])
