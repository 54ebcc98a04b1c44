"""Deployment cost model and cost-effectiveness.

Two ways to price a deployment of ``n_ap`` sites with ``n_t`` antennas each:

* aggregated: a fixed cost per site plus a cost per antenna, so the total is
  ``n_ap * (fixed_per_site + n_t * per_antenna)``;
* itemized: per-component prices (central units priced once, site hardware
  per site, radio chains per antenna) that fold into the same two numbers.

Costs are in arbitrary consistent units; only ratios matter downstream.
"""

from __future__ import annotations

from dataclasses import dataclass, field


class CostModelError(ValueError):
    """Invalid cost model input."""


# itemized component keys: one-off central items, per-site items, per-antenna items
_CENTRAL_ITEMS = ("c_ls", "c_cpu", "c_mo")
_PER_SITE_ITEMS = ("c_sc", "c_ps", "c_fb", "c_bb")
_PER_ANTENNA_ITEMS = ("c_ant", "c_rf")
ITEM_KEYS = _CENTRAL_ITEMS + _PER_SITE_ITEMS + _PER_ANTENNA_ITEMS


@dataclass(frozen=True)
class CostModel:
    """Either aggregated (fixed_per_site, per_antenna) or itemized (items)."""

    fixed_per_site: float | None = None
    per_antenna: float | None = None
    items: dict | None = None

    def __post_init__(self):
        aggregated = self.fixed_per_site is not None or self.per_antenna is not None
        if aggregated and self.items is not None:
            raise CostModelError("give either aggregated costs or itemized "
                                 "costs, not both")
        if not aggregated and self.items is None:
            raise CostModelError("cost model is empty")
        if aggregated:
            if self.fixed_per_site is None or self.per_antenna is None:
                raise CostModelError("aggregated mode needs both "
                                     "fixed_per_site and per_antenna")
            if not self.fixed_per_site > 0:
                raise CostModelError(f"fixed_per_site must be > 0, "
                                     f"got {self.fixed_per_site}")
            if self.per_antenna < 0:
                raise CostModelError(f"per_antenna must be >= 0, "
                                     f"got {self.per_antenna}")
        else:
            unknown = sorted(set(self.items) - set(ITEM_KEYS))
            if unknown:
                raise CostModelError(f"unknown cost items: {', '.join(unknown)}")
            for key, value in self.items.items():
                if not value >= 0:
                    raise CostModelError(f"cost item {key} must be >= 0, "
                                         f"got {value}")
            if not sum(self.items.values()) > 0:
                raise CostModelError("itemized cost model sums to zero")

    @property
    def mode(self) -> str:
        return "itemized" if self.items is not None else "aggregated"

    @classmethod
    def aggregated(cls, fixed_per_site: float, per_antenna: float) -> "CostModel":
        return cls(fixed_per_site=fixed_per_site, per_antenna=per_antenna)

    @classmethod
    def itemized(cls, **items: float) -> "CostModel":
        return cls(items=dict(items))

    def _item(self, key: str) -> float:
        return float(self.items.get(key, 0.0))


def aggregated_costs(model: CostModel, n_ap: int) -> tuple[float, float]:
    """Fold a model into (fixed cost per site, cost per antenna).

    In itemized mode the one-off central items are spread over the sites, so
    the per-site figure depends on ``n_ap``.
    """
    if n_ap < 1:
        raise CostModelError(f"n_ap must be >= 1, got {n_ap}")
    if model.mode == "aggregated":
        return float(model.fixed_per_site), float(model.per_antenna)
    central = sum(model._item(k) for k in _CENTRAL_ITEMS)
    per_site = sum(model._item(k) for k in _PER_SITE_ITEMS)
    per_antenna = sum(model._item(k) for k in _PER_ANTENNA_ITEMS)
    return central / n_ap + per_site, per_antenna


def total_cost(model: CostModel, n_ap: int, n_t: int) -> float:
    """Total deployment cost of ``n_ap`` sites with ``n_t`` antennas each."""
    if n_t < 1:
        raise CostModelError(f"n_t must be >= 1, got {n_t}")
    fixed_per_site, per_antenna = aggregated_costs(model, n_ap)
    return n_ap * (fixed_per_site + n_t * per_antenna)


def cost_effectiveness(sum_rate: float, model: CostModel, n_ap: int,
                       n_t: int) -> float:
    """Achieved sum rate per unit of deployment cost (bit/s/Hz per cost unit)."""
    if not sum_rate >= 0:
        raise CostModelError(f"sum_rate must be >= 0, got {sum_rate}")
    return sum_rate / total_cost(model, n_ap, n_t)


def cost_model_from_dict(raw) -> CostModel:
    """Parse the ``cost`` object of a config file.

    Accepts ``{"fixed_per_site": .., "per_antenna": ..}`` or
    ``{"items": {..}}``; mixing the two modes or any unknown key is an error.
    """
    if not isinstance(raw, dict):
        raise CostModelError("cost section must be a JSON object")
    unknown = sorted(set(raw) - {"fixed_per_site", "per_antenna", "items"})
    if unknown:
        raise CostModelError(f"unknown cost keys: {', '.join(unknown)}")
    has_aggregated = "fixed_per_site" in raw or "per_antenna" in raw
    if has_aggregated and "items" in raw:
        raise CostModelError("cost section mixes aggregated and itemized modes")
    if "items" in raw:
        items = raw["items"]
        if not isinstance(items, dict):
            raise CostModelError("cost items must be a JSON object")
        return CostModel(items={k: float(v) for k, v in items.items()})
    if not has_aggregated:
        raise CostModelError("cost section is empty")
    try:
        return CostModel(fixed_per_site=float(raw.get("fixed_per_site")),
                         per_antenna=float(raw.get("per_antenna")))
    except TypeError as exc:
        raise CostModelError("aggregated cost needs both fixed_per_site "
                             "and per_antenna") from exc
