"""Listening-test statistics: rater filtering, MOS aggregation, correlation.

Plain-Python record handling with numpy only at the numeric core, so the
whole evaluation path stays easy to audit against hand-worked examples.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

MIN_DURATION_SECONDS = 10.0
CONSTANT_RATER_MIN_SAMPLES = 5  # strictly more than this many ratings


@dataclass(frozen=True)
class RatingRecord:
    rater_id: str
    item_id: str
    system_id: str
    score: float
    duration_seconds: float | None = None


@dataclass(frozen=True)
class ItemMos:
    item_id: str
    system_id: str
    mos: float
    n_ratings: int


@dataclass(frozen=True)
class SystemMos:
    system_id: str
    mos: float
    n_items: int


@dataclass
class EvalReport:
    per_item: list[tuple[str, str, float, float]]  # item, system, mos, metric
    per_system: list[tuple[str, float, float]]  # system, mean mos, mean metric
    pcc_utterance: float | None
    srcc_utterance: float | None
    pcc_system: float | None
    srcc_system: float | None
    n_excluded_raters: int
    n_dropped_items: int
    excluded_raters: list[str] = field(default_factory=list)

    def to_json_dict(self) -> dict:
        return {
            "per_item": [
                {"item_id": i, "system_id": s, "mos": mos, "metric_value": m}
                for i, s, mos, m in self.per_item
            ],
            "per_system": [
                {"system_id": s, "mos": mos, "metric_value": m}
                for s, mos, m in self.per_system
            ],
            "pcc_utterance": self.pcc_utterance,
            "srcc_utterance": self.srcc_utterance,
            "pcc_system": self.pcc_system,
            "srcc_system": self.srcc_system,
            "n_items": len(self.per_item),
            "n_systems": len(self.per_system),
            "n_excluded_raters": self.n_excluded_raters,
            "n_dropped_items": self.n_dropped_items,
            "excluded_raters": self.excluded_raters,
        }


def pearson(x, y) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("inputs must be 1-D arrays of equal length")
    if x.size < 2:
        raise ValueError("need at least 2 points")
    xc = x - x.mean()
    yc = y - y.mean()
    sxx = float(xc @ xc)
    syy = float(yc @ yc)
    if sxx == 0.0 or syy == 0.0:
        raise ValueError("undefined correlation for zero-variance input")
    return float(np.clip((xc @ yc) / np.sqrt(sxx * syy), -1.0, 1.0))


def rank_average(x) -> np.ndarray:
    """Ranks starting at 1, ties sharing the average of their positions."""
    x = np.asarray(x, dtype=np.float64)
    order = np.argsort(x, kind="mergesort")
    xs = x[order]
    ranks = np.empty(x.size, dtype=np.float64)
    i = 0
    while i < x.size:
        j = i
        while j + 1 < x.size and xs[j + 1] == xs[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def spearman(x, y) -> float:
    return pearson(rank_average(x), rank_average(y))


def filter_raters(
    records: list[RatingRecord],
    min_duration_seconds: float = MIN_DURATION_SECONDS,
    constant_min_samples: int = CONSTANT_RATER_MIN_SAMPLES,
) -> tuple[list[RatingRecord], list[str]]:
    """Drop too-short items first, then raters who gave one constant score
    across more than `constant_min_samples` surviving ratings.

    The duration rule runs first so the constant-score test sees the same
    population on a second pass, making the filter idempotent.
    """
    timely = [
        r
        for r in records
        if r.duration_seconds is None or r.duration_seconds >= min_duration_seconds
    ]
    scores_by_rater: dict[str, list[float]] = {}
    for r in timely:
        scores_by_rater.setdefault(r.rater_id, []).append(r.score)
    excluded = sorted(
        rater
        for rater, scores in scores_by_rater.items()
        if len(scores) > constant_min_samples and min(scores) == max(scores)
    )
    excluded_set = set(excluded)
    kept = [r for r in timely if r.rater_id not in excluded_set]
    return kept, excluded


def aggregate_mos(
    records: list[RatingRecord],
    expected_item_ids=None,
) -> tuple[list[ItemMos], list[SystemMos], int]:
    """Item MOS = mean rating per item; system MOS = unweighted mean of its
    item MOS values. Returns (per_item, per_system, n_dropped_items) where
    dropped counts expected items that lost every rating."""
    by_item: dict[str, list[float]] = {}
    system_of: dict[str, str] = {}
    for r in records:
        by_item.setdefault(r.item_id, []).append(r.score)
        system_of.setdefault(r.item_id, r.system_id)

    per_item = [
        ItemMos(item_id=item, system_id=system_of[item], mos=float(np.mean(scores)), n_ratings=len(scores))
        for item, scores in sorted(by_item.items())
    ]

    by_system: dict[str, list[float]] = {}
    for row in per_item:
        by_system.setdefault(row.system_id, []).append(row.mos)
    per_system = [
        SystemMos(system_id=system, mos=float(np.mean(vals)), n_items=len(vals))
        for system, vals in sorted(by_system.items())
    ]

    n_dropped = 0
    if expected_item_ids is not None:
        n_dropped = len(set(expected_item_ids) - set(by_item))
    return per_item, per_system, n_dropped


def _safe_corr(fn, x, y) -> float | None:
    if len(x) < 2:
        return None
    try:
        return fn(x, y)
    except ValueError:
        return None


def correlate(
    per_item: list[ItemMos],
    metric_by_item: dict[str, float],
    n_excluded_raters: int = 0,
    n_dropped_items: int = 0,
    excluded_raters: list[str] | None = None,
) -> EvalReport:
    """Utterance- and system-level correlation between MOS and a metric.

    Items without a metric value are skipped; a correlation that cannot be
    computed (fewer than 2 points, or zero variance) is reported as None
    rather than a made-up number.
    """
    matched = [row for row in per_item if row.item_id in metric_by_item]
    mos_u = [row.mos for row in matched]
    met_u = [metric_by_item[row.item_id] for row in matched]

    by_system: dict[str, tuple[list[float], list[float]]] = {}
    for row, m in zip(matched, met_u):
        mos_list, met_list = by_system.setdefault(row.system_id, ([], []))
        mos_list.append(row.mos)
        met_list.append(m)
    systems = sorted(by_system)
    mos_s = [float(np.mean(by_system[s][0])) for s in systems]
    met_s = [float(np.mean(by_system[s][1])) for s in systems]

    return EvalReport(
        per_item=[
            (row.item_id, row.system_id, row.mos, m) for row, m in zip(matched, met_u)
        ],
        per_system=list(zip(systems, mos_s, met_s)),
        pcc_utterance=_safe_corr(pearson, mos_u, met_u),
        srcc_utterance=_safe_corr(spearman, mos_u, met_u),
        pcc_system=_safe_corr(pearson, mos_s, met_s),
        srcc_system=_safe_corr(spearman, mos_s, met_s),
        n_excluded_raters=n_excluded_raters,
        n_dropped_items=n_dropped_items,
        excluded_raters=list(excluded_raters or []),
    )
