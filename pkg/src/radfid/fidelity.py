"""Per-feature agreement between a reference cohort and a candidate cohort,
and the three-group partition of features by which networks preserve them.

A feature is *detected* by a network when ``|rho| >= tau`` between its values
on the reference and on the network's output. Groups:

* ``group3``: detected by no network;
* ``group2``: detected only by high-performance networks (mean SSIM above the
  cutoff), and not by every network;
* ``group1``: everything else, i.e. detected by some low-performance network
  or by all networks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, NamedTuple, Sequence

import numpy as np
from scipy import special

from .tables import FeatureTable

BANDS = ("poor", "moderate", "good", "excellent")
HIGH_PERFORMANCE_SSIM = 0.85
DEFAULT_TAU = 0.5
GROUPS = ("group1", "group2", "group3")


class SpearmanResult(NamedTuple):
    rho: float
    degenerate: bool


class TTestResult(NamedTuple):
    t: float
    df: int
    p: float
    zero_variance: bool


def average_ranks(x: np.ndarray) -> np.ndarray:
    """Average ranks (1-based); ties share the mean of their positions."""
    order = np.argsort(x, kind="mergesort")
    xs = x[order]
    ranks = np.empty(x.size, dtype=np.float64)
    start = 0
    n = x.size
    while start < n:
        stop = start + 1
        while stop < n and xs[stop] == xs[start]:
            stop += 1
        ranks[order[start:stop]] = 0.5 * (start + stop + 1)
        start = stop
    return ranks


def spearman(x: Sequence[float], y: Sequence[float]) -> SpearmanResult:
    """Spearman rank correlation with a flag for constant inputs (rho = 0)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError(f"length mismatch: {x.shape} vs {y.shape}")
    if x.size < 3:
        raise ValueError(f"need at least 3 paired values, got {x.size}")
    if x.max() == x.min() or y.max() == y.min():
        return SpearmanResult(0.0, True)
    rx, ry = average_ranks(x), average_ranks(y)
    if np.array_equal(rx, ry):
        return SpearmanResult(1.0, False)
    dx, dy = rx - rx.mean(), ry - ry.mean()
    rho = float(np.sum(dx * dy) / math.sqrt(np.sum(dx * dx) * np.sum(dy * dy)))
    return SpearmanResult(min(1.0, max(-1.0, rho)), False)


def spearman_rho(x, y) -> float:
    return spearman(x, y).rho


def student_t_sf2(t: float, df: int) -> float:
    """Two-sided tail probability P(|T| >= |t|) of Student's t."""
    if math.isinf(t):
        return 0.0
    return float(special.betainc(df / 2.0, 0.5, df / (df + t * t)))


def paired_t_test(x, y) -> TTestResult:
    """Paired two-sided t-test on ``x - y``.

    Identical samples give ``t = 0, p = 1``; a constant nonzero difference
    gives an infinite ``t`` and ``p = 0`` with ``zero_variance`` set.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError(f"length mismatch: {x.shape} vs {y.shape}")
    n = x.size
    if n < 2:
        raise ValueError(f"need at least 2 pairs, got {n}")
    d = x - y
    df = n - 1
    if not d.any():
        return TTestResult(0.0, df, 1.0, True)
    if d.max() == d.min():
        return TTestResult(math.copysign(math.inf, d[0]), df, 0.0, True)
    mean = d.mean()
    sd = d.std(ddof=1)
    t = float(mean / (sd / math.sqrt(n)))
    return TTestResult(t, df, student_t_sf2(t, df), False)


def band(rho_abs: float) -> str:
    """Correlation strength label; intervals are closed on the left."""
    if not 0.0 <= rho_abs <= 1.0:
        raise ValueError(f"|rho| must lie in [0, 1], got {rho_abs}")
    if rho_abs < 0.5:
        return "poor"
    if rho_abs < 0.75:
        return "moderate"
    if rho_abs < 0.9:
        return "good"
    return "excellent"


@dataclass(frozen=True)
class CorrelationRecord:
    feature_id: str
    rho: float
    abs_rho: float
    p_value: float
    n: int
    band: str
    degenerate: bool = False


@dataclass
class CorrelationTable:
    records: List[CorrelationRecord]
    name: str = ""

    @property
    def feature_ids(self) -> list:
        return [r.feature_id for r in self.records]

    def abs_rho(self) -> Dict[str, float]:
        return {r.feature_id: r.abs_rho for r in self.records}

    def __iter__(self):
        return iter(self.records)

    def __len__(self):
        return len(self.records)


def correlate_cohorts(ref: FeatureTable, cand: FeatureTable, name: str = "") -> CorrelationTable:
    """Feature-wise Spearman rho and paired-t p-value, cases matched by ID."""
    if set(ref.case_ids) != set(cand.case_ids):
        missing = sorted(set(ref.case_ids) ^ set(cand.case_ids))
        raise ValueError(f"case-set mismatch between tables: {missing[:10]}")
    unknown = [f for f in cand.feature_ids if f not in ref.feature_ids]
    if unknown:
        raise ValueError(f"unknown feature IDs in candidate table: {unknown[:10]}")
    if len(ref.case_ids) < 3:
        raise ValueError("need at least 3 shared cases")
    cand = cand.reorder(ref.case_ids)
    records = []
    for fid in ref.feature_ids:
        if fid not in cand.feature_ids:
            continue
        x, y = ref.column(fid), cand.column(fid)
        sp = spearman(x, y)
        tt = paired_t_test(x, y)
        a = abs(sp.rho)
        records.append(CorrelationRecord(fid, sp.rho, a, tt.p, x.size, band(a), sp.degenerate))
    return CorrelationTable(records, name)


@dataclass(frozen=True)
class NetworkProfile:
    network_id: str
    mean_ssim: float
    ssim_cutoff: float = HIGH_PERFORMANCE_SSIM

    @property
    def high_performance(self) -> bool:
        return self.mean_ssim > self.ssim_cutoff


@dataclass
class GroupAssignment:
    groups: Dict[str, str]
    networks: List[str]
    summary: Dict[str, Dict[str, tuple]] = field(default_factory=dict)
    tau: float = DEFAULT_TAU

    def members(self, group: str) -> list:
        return [f for f, g in self.groups.items() if g == group]

    def sizes(self) -> Dict[str, int]:
        return {g: len(self.members(g)) for g in GROUPS}


def assign_groups(tables: Dict[str, CorrelationTable], profiles: Sequence[NetworkProfile],
                  tau: float = DEFAULT_TAU, group1_rule: str = "any_low") -> GroupAssignment:
    """Partition features into group1/2/3 from per-network correlation tables.

    ``group1_rule="majority"`` asks for detection by more than half of the
    networks instead of by at least one low-performance network.
    """
    if not profiles:
        raise ValueError("empty network profile list")
    if not 0.0 < tau < 1.0:
        raise ValueError(f"tau must lie in (0, 1), got {tau}")
    if group1_rule not in ("any_low", "majority"):
        raise ValueError(f"unknown group1 rule {group1_rule!r}")
    nets = [p.network_id for p in profiles]
    missing = [n for n in nets if n not in tables]
    if missing:
        raise ValueError(f"no correlation table for networks {missing}")
    high = {p.network_id: p.high_performance for p in profiles}
    rho = {n: tables[n].abs_rho() for n in nets}
    features = tables[nets[0]].feature_ids

    groups = {}
    for f in features:
        hits = [n for n in nets if rho[n].get(f, 0.0) >= tau]
        if not hits:
            g = "group3"
        elif len(hits) == len(nets):
            g = "group1"
        elif group1_rule == "any_low":
            g = "group1" if any(not high[n] for n in hits) else "group2"
        else:
            g = "group1" if 2 * len(hits) > len(nets) else "group2"
        groups[f] = g

    summary = {}
    for n in nets:
        summary[n] = {}
        for g in GROUPS:
            vals = np.array([rho[n][f] for f in features if groups[f] == g])
            if vals.size:
                sd = float(vals.std(ddof=1)) if vals.size > 1 else 0.0
                summary[n][g] = (float(vals.mean()), sd)
            else:
                summary[n][g] = (math.nan, math.nan)
    return GroupAssignment(groups, nets, summary, tau)
