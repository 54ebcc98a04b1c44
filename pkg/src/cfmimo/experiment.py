"""Monte-Carlo experiments over topology drops.

A drop is one topology plus its large-scale fading; the three schemes
(uplink MRC, downlink CBF, downlink ZFP) are evaluated on the same drop so
their comparison is paired.  Drops are seeded individually from the master
seed, reduced in index order, and therefore reproduce byte-for-byte for
any worker count.

The sweep varies antennas per site at a fixed antenna total, crosses the
resulting rates with per-antenna/per-site cost ratios, and writes one CSV
row per (scheme, antenna count, cost ratio) plus a JSON sidecar recording
exactly how the run was produced.
"""

from __future__ import annotations

import dataclasses
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import __version__
from .cost import CostModel, cost_effectiveness, total_cost
from .downlink import cbf_power, cbf_sinr_all, zfp_moments, zfp_sinr_all
from .propagation import fading_profile, place_topology
from .scenario import ConfigError, ScenarioConfig, config_to_dict, \
    derive_site_count, drop_seed
from .uplink import UplinkPowerControl, per_user_rate, uplink_sinr_all

SCHEMES = ("mrc-ul", "cbf-dl", "zfp-dl")

CSV_HEADER = ("scheme,n_t,n_ap,k,drops,sum_rate_mean,se_p05,se_p50,"
              "cv_cf_ratio,cost_total,gamma_ce,master_seed")

DEFAULT_NT_SWEEP = (1, 2, 4, 10, 12, 15, 20, 25, 30, 50)
DEFAULT_COST_RATIOS = (0.05, 0.1, 0.25, 0.5)


@dataclass(frozen=True)
class RateReport:
    """Per-user spectral efficiencies of one scheme on one drop."""

    scheme: str
    drop_index: int
    per_user_se: np.ndarray      # bit/s/Hz, shape (users,)

    @property
    def sum_rate(self) -> float:
        return float(self.per_user_se.sum())


@dataclass(frozen=True)
class SweepRecord:
    """One output row: a scheme at one antenna split and one cost ratio."""

    scheme: str
    n_t: int
    n_ap: int
    k: int
    drops: int
    sum_rate_mean: float
    sum_rate_stderr: float
    se_p05: float
    se_p50: float
    cv_cf_ratio: float
    cost_total: float
    gamma_ce: float
    master_seed: int


def run_drop(cfg: ScenarioConfig, drop_index: int) -> tuple[RateReport, ...]:
    """Evaluate all three schemes on drop ``drop_index``.

    Randomness comes only from the drop's own substream; the draw order is
    topology, shadowing, then the ZFP moment batch, so results depend on
    nothing outside (cfg, drop_index).
    """
    try:
        rng = np.random.default_rng(drop_seed(cfg.master_seed, drop_index))
        topo = place_topology(cfg, rng)
        profile = fading_profile(cfg, topo, rng)

        eta_ul = UplinkPowerControl.full_power(cfg.num_users)
        se_ul = per_user_rate(uplink_sinr_all(profile, eta_ul, cfg))

        pc_cbf = cbf_power(profile)
        se_cbf = per_user_rate(cbf_sinr_all(profile, pc_cbf, cfg))

        chi, pc_zfp = zfp_moments(profile, cfg, rng)
        se_zfp = per_user_rate(zfp_sinr_all(profile, pc_zfp, chi, cfg))
    except (ValueError, RuntimeError) as exc:
        # tag the failing drop but keep the error class for exit codes
        raise type(exc)(f"drop {drop_index}: {exc}") from exc

    return (RateReport("mrc-ul", drop_index, se_ul),
            RateReport("cbf-dl", drop_index, se_cbf),
            RateReport("zfp-dl", drop_index, se_zfp))


def percentile(values, p: float) -> float:
    """p-quantile with linear interpolation between order statistics."""
    arr = np.asarray(values, dtype=float).ravel()
    if arr.size == 0:
        raise ValueError("percentile of an empty sample")
    if not 0.0 < p < 1.0:
        raise ValueError(f"percentile level must lie in (0, 1), got {p}")
    return float(np.quantile(arr, p, method="linear"))


def _run_drop_star(args) -> tuple[RateReport, ...]:
    return run_drop(*args)


def _collect_drops(cfg: ScenarioConfig, jobs: int, progress=None):
    """All drops of one config, in index order regardless of worker count."""
    indices = range(cfg.drops)
    if jobs <= 1:
        results = []
        for i in indices:
            results.append(run_drop(cfg, i))
            if progress:
                progress(i + 1, cfg.drops)
        return results
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        results = []
        for i, triple in enumerate(pool.map(_run_drop_star,
                                            [(cfg, i) for i in indices])):
            results.append(triple)
            if progress:
                progress(i + 1, cfg.drops)
        return results


def sweep(cfg: ScenarioConfig, nt_list=None, cv_ratios=None, jobs: int = 1,
          cost_fixed_per_site: float = 1.0,
          progress=None) -> list[SweepRecord]:
    """Antenna-split sweep at a fixed antenna budget.

    Every entry of ``nt_list`` must divide the config's antenna total; that
    is checked up front so a bad grid fails before any computation.  The
    cost ratios scale the per-antenna cost against the per-site fixed cost
    (default 1 unit per site).
    """
    nt_list = list(DEFAULT_NT_SWEEP if nt_list is None else nt_list)
    cv_ratios = list(DEFAULT_COST_RATIOS if cv_ratios is None else cv_ratios)
    if not nt_list:
        raise ConfigError("empty antenna sweep")
    if not cv_ratios:
        raise ConfigError("empty cost-ratio list")
    bad = [n for n in nt_list
           if not isinstance(n, int) or n < 1 or cfg.total_antennas % n != 0]
    if bad:
        raise ConfigError(f"antenna counts {bad} do not divide "
                          f"total_antennas ({cfg.total_antennas})")
    bad_r = [r for r in cv_ratios if not r > 0]
    if bad_r:
        raise ConfigError(f"cost ratios must be > 0, got {bad_r}")
    if jobs < 1:
        raise ConfigError(f"jobs must be >= 1, got {jobs}")

    records: list[SweepRecord] = []
    for n_t in nt_list:
        sub = dataclasses.replace(cfg, antennas_per_ap=n_t)
        n_ap = derive_site_count(sub)
        triples = _collect_drops(sub, jobs,
                                 progress=(lambda d, t, n_t=n_t:
                                           progress(n_t, d, t))
                                 if progress else None)
        for s, scheme in enumerate(SCHEMES):
            sums = np.array([t[s].sum_rate for t in triples])
            pooled = np.concatenate([t[s].per_user_se for t in triples])
            mean = float(sums.mean())
            stderr = float(sums.std(ddof=1) / np.sqrt(len(sums))) \
                if len(sums) > 1 else 0.0
            p05 = percentile(pooled, 0.05)
            p50 = percentile(pooled, 0.50)
            for ratio in cv_ratios:
                model = CostModel.aggregated(
                    fixed_per_site=cost_fixed_per_site,
                    per_antenna=ratio * cost_fixed_per_site)
                cost = total_cost(model, n_ap, n_t)
                records.append(SweepRecord(
                    scheme=scheme, n_t=n_t, n_ap=n_ap, k=sub.num_users,
                    drops=sub.drops, sum_rate_mean=mean,
                    sum_rate_stderr=stderr, se_p05=p05, se_p50=p50,
                    cv_cf_ratio=ratio, cost_total=cost,
                    gamma_ce=cost_effectiveness(mean, model, n_ap, n_t),
                    master_seed=sub.master_seed))
    return records


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def write_records_csv(records: list[SweepRecord], path) -> None:
    """Write sweep rows with six-significant-digit floats."""
    lines = [CSV_HEADER]
    for r in records:
        lines.append(",".join([
            r.scheme, str(r.n_t), str(r.n_ap), str(r.k), str(r.drops),
            _fmt(r.sum_rate_mean), _fmt(r.se_p05), _fmt(r.se_p50),
            _fmt(r.cv_cf_ratio), _fmt(r.cost_total), _fmt(r.gamma_ce),
            str(r.master_seed)]))
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def metadata_path(csv_path) -> str:
    return str(csv_path) + ".meta.json"


def write_metadata(csv_path, cfg: ScenarioConfig, nt_list, cv_ratios,
                   records: list[SweepRecord], quick: bool = False,
                   jobs: int = 1) -> None:
    """JSON sidecar: config, grids, seeds, sample sizes and run statistics.

    Content is a pure function of the run inputs and outputs (no
    timestamps), so reruns of the same experiment produce identical files.
    """
    stderr = {}
    for r in records:
        stderr.setdefault(r.scheme, {})[str(r.n_t)] = float(r.sum_rate_stderr)
    meta = {
        "version": __version__,
        "config": config_to_dict(cfg),
        "nt_list": list(nt_list),
        "cv_cf_ratios": [float(x) for x in cv_ratios],
        "master_seed": cfg.master_seed,
        "drops": cfg.drops,
        "chi_samples": cfg.chi_samples,
        "percentile_pool_size": cfg.drops * cfg.num_users,
        "quick": bool(quick),
        "jobs": int(jobs),
        "sum_rate_stderr": stderr,
    }
    with open(metadata_path(csv_path), "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
