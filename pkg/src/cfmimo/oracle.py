"""Link-level reference simulations.

Everything here recomputes, by brute force over joint channel draws, the
quantities the closed-form path predicts: the five uplink received-sample
parts, the CBF downlink parts, and the ZF downlink SINR with a fresh
precoder per draw.  No closed form is reused on this side, so agreement
between the two paths is evidence, not circularity.

All estimators are plain sample means with standard errors; the validation
report pairs them with their closed-form counterparts and flags relative
errors beyond tolerance.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from . import downlink, uplink
from .channel import complex_normal, expand_site_to_antennas, \
    sample_channel_batch
from .downlink import NumericalError, _RCOND_FLOOR, _SINGULAR_FRACTION, \
    _chunk_sizes
from .propagation import FadingProfile, fading_profile, place_topology
from .scenario import ConfigError, ScenarioConfig, derive_noise_power, \
    drop_seed

UPLINK_TERMS = ("desired", "uncertainty", "est_error", "inter_user", "noise")
CBF_TERMS = UPLINK_TERMS

# relative tolerances of the validation report, calibrated at the reference
# sample count; smaller runs widen them by the usual 1/sqrt(n) factor
REFERENCE_SAMPLES = 100_000
TERM_TOL = 0.03
SINR_TOL = 0.03
ZFP_SINR_TOL = 0.05
ZFP_IUI_ABS_TOL = 1e-9


@dataclass(frozen=True)
class TermEstimate:
    """Empirical powers of the received-sample parts for one user.

    ``powers``/``stderrs`` are keyed by term label; ``correlations`` holds
    the normalized cross moments |E t_a conj(t_b)| / sqrt(P_a P_b) keyed
    "a/b" (orthogonal parts should sit at zero within Monte-Carlo noise).
    ``empirical_sinr`` is desired power over the power of everything else,
    with the non-desired parts summed per draw before squaring.
    """

    powers: dict
    stderrs: dict
    correlations: dict
    empirical_sinr: float
    n_samples: int


@dataclass(frozen=True)
class ZfpEstimate:
    """Empirical ZFP link statistics over per-draw precoders."""

    empirical_sinr: float
    desired_power: float
    residual_power: float
    residual_stderr: float
    noise_power: float
    max_est_iui: float
    n_samples: int
    n_resampled: int


def _accumulate(terms: dict, sums: dict, sq_sums: dict, cross: dict):
    labels = list(terms)
    for a in labels:
        t = terms[a]
        p = t.real ** 2 + t.imag ** 2
        sums[a] += float(p.sum())
        sq_sums[a] += float((p ** 2).sum())
    for i, a in enumerate(labels):
        for b in labels[i + 1:]:
            cross[f"{a}/{b}"] += complex((terms[a] * terms[b].conj()).sum())


def _finish(sums, sq_sums, cross, resid_sq, n) -> TermEstimate:
    powers = {a: s / n for a, s in sums.items()}
    stderrs = {}
    for a, s in sq_sums.items():
        var = max(s / n - powers[a] ** 2, 0.0)
        stderrs[a] = math.sqrt(var / n)
    correlations = {}
    for pair, c in cross.items():
        a, b = pair.split("/")
        denom = math.sqrt(powers[a] * powers[b])
        correlations[pair] = abs(c / n) / denom if denom > 0 else 0.0
    resid_power = resid_sq / n
    sinr = powers["desired"] / resid_power if resid_power > 0 else math.inf
    return TermEstimate(powers=powers, stderrs=stderrs,
                        correlations=correlations, empirical_sinr=sinr,
                        n_samples=n)


def simulate_uplink_terms(profile: FadingProfile, eta, k: int,
                          cfg: ScenarioConfig, n_samples: int,
                          rng: np.random.Generator) -> TermEstimate:
    """Brute-force the five uplink parts for user ``k``.

    Per draw: joint channels, unit-power symbols and receiver noise, then
    the combined sample is split exactly as the closed-form derivation
    splits it.  The parts sum to the combiner output by construction, which
    the batch asserts on every draw.
    """
    if not 0 <= k < profile.num_users:
        raise ConfigError(f"user index {k} out of range")
    _, alpha_mk = expand_site_to_antennas(profile)
    m, n_users = alpha_mk.shape
    eta_vec = uplink._eta_vector(eta, n_users)
    p_u = cfg.ue_tx_power
    sigma_n2 = derive_noise_power(cfg)
    a_k = float(alpha_mk[:, k].sum())
    scale_k = math.sqrt(p_u * eta_vec[k])
    amp = np.sqrt(p_u * eta_vec)
    others = np.delete(np.arange(n_users), k)

    sums = {t: 0.0 for t in UPLINK_TERMS}
    sq_sums = {t: 0.0 for t in UPLINK_TERMS}
    cross = {f"{a}/{b}": 0j for i, a in enumerate(UPLINK_TERMS)
             for b in UPLINK_TERMS[i + 1:]}
    resid_sq = 0.0

    for chunk in _chunk_sizes(n_samples, m, n_users):
        g_true, g_hat, g_err = sample_channel_batch(profile, rng, chunk)
        x = complex_normal(rng, 1.0, (chunk, n_users))
        w = complex_normal(rng, sigma_n2, (chunk, m))
        comb = g_hat[:, :, k].conj()                       # (chunk, antennas)
        gain = (comb * g_hat[:, :, k]).sum(axis=1).real    # |g_hat_k|^2
        proj = np.einsum("cm,cmi->ci", comb, g_true)
        terms = {
            "desired": scale_k * a_k * x[:, k],
            "uncertainty": scale_k * (gain - a_k) * x[:, k],
            "est_error": scale_k * (comb * g_err[:, :, k]).sum(axis=1) * x[:, k],
            "inter_user": (amp[others] * proj[:, others] * x[:, others]).sum(axis=1),
            "noise": (comb * w).sum(axis=1),
        }
        combined = sum(terms[t] for t in UPLINK_TERMS if t != "desired")
        resid_sq += float((combined.real ** 2 + combined.imag ** 2).sum())
        _accumulate(terms, sums, sq_sums, cross)

    return _finish(sums, sq_sums, cross, resid_sq, n_samples)


def simulate_downlink_cbf(profile: FadingProfile, pc: downlink.CbfPowerControl,
                          k: int, cfg: ScenarioConfig, n_samples: int,
                          rng: np.random.Generator) -> TermEstimate:
    """Brute-force the CBF downlink parts for user ``k``."""
    if not 0 <= k < profile.num_users:
        raise ConfigError(f"user index {k} out of range")
    _, alpha_mk = expand_site_to_antennas(profile)
    m, n_users = alpha_mk.shape
    sqrt_eta_m = np.sqrt(np.repeat(np.asarray(pc.eta_site, dtype=float),
                                   profile.antennas_per_site))
    p_d = cfg.ap_per_antenna_tx_power
    sigma_n2 = derive_noise_power(cfg)
    sp = math.sqrt(p_d)
    coherent = float((sqrt_eta_m * alpha_mk[:, k]).sum())
    others = np.delete(np.arange(n_users), k)

    sums = {t: 0.0 for t in CBF_TERMS}
    sq_sums = {t: 0.0 for t in CBF_TERMS}
    cross = {f"{a}/{b}": 0j for i, a in enumerate(CBF_TERMS)
             for b in CBF_TERMS[i + 1:]}
    resid_sq = 0.0

    for chunk in _chunk_sizes(n_samples, m, n_users):
        g_true, g_hat, g_err = sample_channel_batch(profile, rng, chunk)
        u = complex_normal(rng, 1.0, (chunk, n_users))
        w = complex_normal(rng, sigma_n2, (chunk,))
        hat_k = g_hat[:, :, k]
        gain = ((hat_k.real ** 2 + hat_k.imag ** 2) * sqrt_eta_m).sum(axis=1)
        weighted = g_hat.conj() * sqrt_eta_m[None, :, None]
        proj = np.einsum("cm,cmi->ci", g_true[:, :, k], weighted)
        terms = {
            "desired": sp * coherent * u[:, k],
            "uncertainty": sp * (gain - coherent) * u[:, k],
            "est_error": sp * (g_err[:, :, k] * hat_k.conj()
                               * sqrt_eta_m).sum(axis=1) * u[:, k],
            "inter_user": sp * (proj[:, others] * u[:, others]).sum(axis=1),
            "noise": w,
        }
        combined = sum(terms[t] for t in CBF_TERMS if t != "desired")
        resid_sq += float((combined.real ** 2 + combined.imag ** 2).sum())
        _accumulate(terms, sums, sq_sums, cross)

    return _finish(sums, sq_sums, cross, resid_sq, n_samples)


def simulate_downlink_zfp(profile: FadingProfile, eta_common: float, k: int,
                          cfg: ScenarioConfig, n_samples: int,
                          rng: np.random.Generator) -> ZfpEstimate:
    """Brute-force the ZFP link for user ``k`` with a fresh precoder per draw.

    Through the estimated channels the precoder is exactly diagonal, so the
    only interference is the estimation error leaking through the
    pseudo-inverse; ``max_est_iui`` reports the worst off-diagonal of the
    estimated-channel response as a numerical audit.  Singular estimate
    draws are redrawn like the moment estimators do.
    """
    if not 0 <= k < profile.num_users:
        raise ConfigError(f"user index {k} out of range")
    if eta_common < 0:
        raise ConfigError(f"eta_common must be >= 0, got {eta_common}")
    beta_mk, alpha_mk = expand_site_to_antennas(profile)
    m, n_users = beta_mk.shape
    if m < n_users:
        raise ConfigError(f"zero-forcing needs at least as many antennas as "
                          f"users, got {m} x {n_users}")
    p_d = cfg.ap_per_antenna_tx_power
    sigma_n2 = derive_noise_power(cfg)
    eye = np.eye(n_users)
    sqrt_pe = math.sqrt(p_d * eta_common)

    desired_sq = 0.0
    desired_quad = 0.0
    resid_sq = 0.0
    resid_quad = 0.0
    noise_sq = 0.0
    max_iui = 0.0
    resampled = 0
    budget = max(1, int(np.ceil(_SINGULAR_FRACTION * n_samples)))

    for chunk in _chunk_sizes(n_samples, m, n_users):
        g_true, g_hat, g_err = sample_channel_batch(profile, rng, chunk)
        gram = g_hat.transpose(0, 2, 1) @ g_hat.conj()
        sv = np.linalg.svd(gram, compute_uv=False)
        bad = ~np.isfinite(sv).all(axis=1) | (sv[:, -1] <= sv[:, 0] * _RCOND_FLOOR)
        while bad.any():
            resampled += int(bad.sum())
            if resampled > budget:
                raise NumericalError(
                    f"more than {_SINGULAR_FRACTION:.0%} of estimate draws "
                    f"gave singular Gram matrices "
                    f"({resampled} of {n_samples} requested)")
            nb = int(bad.sum())
            g_true[bad], g_hat[bad], g_err[bad] = \
                sample_channel_batch(profile, rng, nb)
            gram[bad] = g_hat[bad].transpose(0, 2, 1) @ g_hat[bad].conj()
            sv = np.linalg.svd(gram[bad], compute_uv=False)
            still = ~np.isfinite(sv).all(axis=1) \
                | (sv[:, -1] <= sv[:, 0] * _RCOND_FLOOR)
            idx = np.flatnonzero(bad)
            bad = np.zeros_like(bad)
            bad[idx[still]] = True

        inv = np.linalg.solve(gram, eye)
        w_mat = g_hat.conj() @ inv                     # unscaled precoder
        u = complex_normal(rng, 1.0, (chunk, n_users))
        w_noise = complex_normal(rng, sigma_n2, (chunk,))

        response = gram @ inv - eye                    # estimated-channel IUI
        this_max = float(np.abs(response).max()) * math.sqrt(eta_common)
        if this_max > max_iui:
            max_iui = this_max

        desired = sqrt_pe * u[:, k]
        leak = np.einsum("cm,cmi->ci", g_err[:, :, k], w_mat)
        resid = math.sqrt(p_d) * math.sqrt(eta_common) \
            * (leak * u).sum(axis=1)
        dp = desired.real ** 2 + desired.imag ** 2
        rp = resid.real ** 2 + resid.imag ** 2
        wp = w_noise.real ** 2 + w_noise.imag ** 2
        desired_sq += float(dp.sum())
        desired_quad += float((dp ** 2).sum())
        resid_sq += float(rp.sum())
        resid_quad += float((rp ** 2).sum())
        noise_sq += float(wp.sum())

    n = n_samples
    desired_power = desired_sq / n
    residual_power = resid_sq / n
    noise_power = noise_sq / n
    resid_var = max(resid_quad / n - residual_power ** 2, 0.0)
    denom = residual_power + noise_power
    sinr = desired_power / denom if denom > 0 else math.inf
    return ZfpEstimate(empirical_sinr=sinr, desired_power=desired_power,
                       residual_power=residual_power,
                       residual_stderr=math.sqrt(resid_var / n),
                       noise_power=noise_power, max_est_iui=max_iui,
                       n_samples=n, n_resampled=resampled)


# ---------------------------------------------------------------------------
# validation report


@dataclass(frozen=True)
class ValidationRow:
    """One line of the closed-form versus brute-force comparison."""

    name: str
    closed_form: float
    empirical: float
    rel_error: float
    tolerance: float
    n_samples: int
    passed: bool


def _row(name, closed, empirical, tol, n) -> ValidationRow:
    if closed == 0.0:
        # absolute comparison for quantities that must vanish
        err = abs(empirical)
    else:
        err = abs(empirical - closed) / abs(closed)
    return ValidationRow(name=name, closed_form=closed, empirical=empirical,
                         rel_error=err, tolerance=tol, n_samples=n,
                         passed=bool(err <= tol))


def _cbf_closed_terms(profile: FadingProfile, eta_site, cfg) -> dict:
    """Closed-form CBF part variances for user 0, for the report only."""
    beta_mk, alpha_mk = expand_site_to_antennas(profile)
    eta_m = np.repeat(np.asarray(eta_site, dtype=float),
                      profile.antennas_per_site)
    p_d = cfg.ap_per_antenna_tx_power
    a0, b0 = alpha_mk[:, 0], beta_mk[:, 0]
    inter = 0.0
    for i in range(1, profile.num_users):
        inter += float((eta_m * b0 * alpha_mk[:, i]).sum())
    return {
        "desired": p_d * float((np.sqrt(eta_m) * a0).sum()) ** 2,
        "uncertainty": p_d * float((eta_m * a0 ** 2).sum()),
        "est_error": p_d * float((eta_m * a0 * (b0 - a0)).sum()),
        "inter_user": p_d * inter,
        "noise": derive_noise_power(cfg),
    }


def reference_config(master_seed: int = 0) -> ScenarioConfig:
    """Small instance used by the stock validation run."""
    return ScenarioConfig(total_antennas=40, antennas_per_ap=2, num_users=4,
                          master_seed=master_seed)


def validate_instance(cfg: ScenarioConfig, n_samples: int,
                      chi_ref_samples: int = 20000) -> list[ValidationRow]:
    """Run the full closed-form versus brute-force comparison on one drop.

    The drop topology comes from the config's master seed (drop 0 stream),
    user 0 is inspected.  Returns one row per compared quantity; the ZFP
    closed form uses a high-sample moment estimate so the comparison noise
    is dominated by the link-level side.  Relative tolerances hold as
    stated at the reference sample count and widen like 1/sqrt(n) below
    it, so quick runs stay meaningful without being vacuous.
    """
    widen = max(1.0, math.sqrt(REFERENCE_SAMPLES / n_samples))
    term_tol = TERM_TOL * widen
    sinr_tol = SINR_TOL * widen
    zfp_tol = ZFP_SINR_TOL * widen
    rng = np.random.default_rng(drop_seed(cfg.master_seed, 0))
    topo = place_topology(cfg, rng)
    profile = fading_profile(cfg, topo, rng)
    p_u = cfg.ue_tx_power
    eta_ul = uplink.UplinkPowerControl.full_power(cfg.num_users)
    rows: list[ValidationRow] = []

    # uplink parts and SINR
    terms = uplink.uplink_term_variances(profile, eta_ul, 0, cfg)
    closed_ul = {
        "desired": terms.desired,
        "uncertainty": p_u * eta_ul.eta[0] * terms.uncertainty,
        "est_error": terms.estimation_error,
        "inter_user": terms.inter_user,
        "noise": terms.noise,
    }
    est = simulate_uplink_terms(profile, eta_ul, 0, cfg, n_samples, rng)
    for label in UPLINK_TERMS:
        rows.append(_row(f"ul_{label}", closed_ul[label], est.powers[label],
                         term_tol, n_samples))
    rows.append(_row("ul_sinr", uplink.uplink_sinr(profile, eta_ul, 0, cfg),
                     est.empirical_sinr, sinr_tol, n_samples))

    # CBF parts and SINR
    pc = downlink.cbf_power(profile)
    closed_cbf = _cbf_closed_terms(profile, pc.eta_site, cfg)
    est_cbf = simulate_downlink_cbf(profile, pc, 0, cfg, n_samples, rng)
    for label in CBF_TERMS:
        rows.append(_row(f"cbf_{label}", closed_cbf[label],
                         est_cbf.powers[label], term_tol, n_samples))
    rows.append(_row("cbf_sinr", downlink.cbf_sinr(profile, pc, 0, cfg),
                     est_cbf.empirical_sinr, sinr_tol, n_samples))

    # ZFP SINR and the estimated-channel interference audit
    chi, zpc = downlink.zfp_moments(profile, cfg, rng, chi_ref_samples)
    closed_zfp = downlink.zfp_sinr(profile, zpc, chi, 0, cfg)
    est_zfp = simulate_downlink_zfp(profile, zpc.eta_common, 0, cfg,
                                    n_samples, rng)
    rows.append(_row("zfp_sinr", closed_zfp, est_zfp.empirical_sinr,
                     zfp_tol, n_samples))
    rows.append(_row("zfp_est_iui", 0.0, est_zfp.max_est_iui,
                     ZFP_IUI_ABS_TOL, n_samples))
    return rows


def rows_to_text(rows: list[ValidationRow]) -> str:
    lines = [f"{'term':<16} {'closed-form':>13} {'empirical':>13} "
             f"{'rel.err':>9} {'tol':>6} {'samples':>8}  result"]
    for r in rows:
        lines.append(f"{r.name:<16} {r.closed_form:>13.6g} "
                     f"{r.empirical:>13.6g} {r.rel_error:>9.2%} "
                     f"{r.tolerance:>6.0%} {r.n_samples:>8d}  "
                     f"{'pass' if r.passed else 'FAIL'}")
    ok = all(r.passed for r in rows)
    lines.append(f"{'all checks pass' if ok else 'SOME CHECKS FAILED'}")
    return "\n".join(lines)


def rows_to_csv(rows: list[ValidationRow], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["term", "closed_form", "empirical", "rel_error",
                         "tolerance", "samples", "passed"])
        for r in rows:
            writer.writerow([r.name, f"{r.closed_form:.6g}",
                             f"{r.empirical:.6g}", f"{r.rel_error:.6g}",
                             f"{r.tolerance:.6g}", r.n_samples,
                             "yes" if r.passed else "no"])
