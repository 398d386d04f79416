"""Distributed best-response procedure with capping.

Consumers of the mixed types play in a random order each step.  The first
consumer of a type in a step computes the type's best response against the
broadcast day demand ``x_sigma``, scales it by the cap and adds it to the
type's shared probability; later consumers of that type reuse the value.
The run stops once no type's probability moved by more than ``tol`` during
a step.

``x_sigma`` starts at the full dominant-day demand (``N``-weighted) and
grows by ``(N-1) r dp E`` per update.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .model import Scenario, StrategyProfile, partition_types


@dataclass(frozen=True)
class CapPolicy:
    kind: str = "none"  # "none" | "equal" | "random"
    value: float = 1.0

    def __post_init__(self):
        if self.kind not in ("none", "equal", "random"):
            raise ValueError(f"unknown cap kind {self.kind!r}")
        if self.kind == "equal" and not 0.0 <= self.value <= 1.0:
            raise ValueError(f"equal cap must lie in [0, 1], got {self.value}")

    @classmethod
    def parse(cls, text: str) -> "CapPolicy":
        """``none``, ``random`` or ``equal:<v>``."""
        text = text.strip().lower()
        if text in ("none", "random"):
            return cls(text)
        if text.startswith("equal:"):
            return cls("equal", float(text.split(":", 1)[1]))
        raise ValueError(f"cannot parse cap {text!r}; use none, random or equal:<v>")

    def __str__(self) -> str:
        return f"equal:{self.value:g}" if self.kind == "equal" else self.kind


@dataclass(frozen=True)
class TraceRow:
    step: int
    type_id: int
    eqp: float
    x_sigma: float


@dataclass(frozen=True)
class AlgoRun:
    final_profile: StrategyProfile
    steps_used: int
    converged: bool
    x_sigma_trace: tuple[float, ...]
    profile_history: tuple[tuple[float, ...], ...]
    trace: tuple[TraceRow, ...] = field(default=(), repr=False)
    degenerate: bool = False


def best_response(s: Scenario, type_id: int, current_p: float, x_sigma: float) -> float:
    """Day probability minimising one type's expected cost given ``x_sigma``.

    ``current_p`` is already contained in ``x_sigma``; the returned value is
    the increment over it.  The allocation seen at increment ``p`` is
    ``E RE / (x_sigma + (N-1) r p E + E)``, capped at ``E``.  The cost is
    convex in ``p`` (linear while the cap binds), so the minimiser is the
    root of the first-order condition clipped to the feasible range.
    """
    if x_sigma < 0:
        raise ValueError("x_sigma must be non-negative")
    t = s.types[s.position(type_id)]
    g, b = s.tariffs.gamma, s.tariffs.beta
    e, re_cap = t.day_demand, s.res_capacity
    margin = g - t.inv_risk * b
    if margin <= 0:
        return 1.0
    slope = (s.n_consumers - 1) * t.share * e
    base = x_sigma + e
    if slope <= 0:
        # no competitors of this type: cost is linear in p
        return 1.0 if _day_cost(e, re_cap, base, s) < t.inv_risk * e * b * s.tariffs.c_res else 0.0
    root = (math.sqrt((g - 1.0) * re_cap * base / margin) - base) / slope
    kink = (re_cap - base) / slope  # allocation cap binds below this increment
    return min(1.0, max(0.0, root, kink))


def _day_cost(e: float, re_cap: float, demand: float, s: Scenario) -> float:
    res = min(e, e * re_cap / demand)
    return res * s.tariffs.c_res + (e - res) * s.tariffs.gamma * s.tariffs.c_res


def expected_cost(s: Scenario, type_id: int, p: float, x_sigma: float) -> float:
    """Objective minimised by :func:`best_response` (exposed for checking)."""
    t = s.types[s.position(type_id)]
    demand = x_sigma + (s.n_consumers - 1) * t.share * p * t.day_demand + t.day_demand
    night = t.inv_risk * t.day_demand * s.tariffs.beta * s.tariffs.c_res
    return p * _day_cost(t.day_demand, s.res_capacity, demand, s) + (1.0 - p) * night


def _consumer_list(s: Scenario, mixed: list[int]) -> np.ndarray:
    counts = [max(1, int(round(s.n_consumers * s.types[k].share))) for k in mixed]
    return np.repeat(np.asarray(mixed), counts)


def run_distributed(s: Scenario, cap: CapPolicy | None = None, seed: int = 0,
                    n_step: int = 1000, tol: float = 1e-4) -> AlgoRun:
    if n_step < 1:
        raise ValueError("n_step must be at least 1")
    cap = cap or CapPolicy()
    rng = np.random.default_rng(seed)
    part = partition_types(s)
    m, n = s.n_types, s.n_consumers
    e, r = s.day_demands, s.shares
    eqp = np.zeros(m)
    if part.case1:
        eqp[:] = 1.0
        x = n * float(r @ e)
        return AlgoRun(StrategyProfile.of(eqp), 0, True, (x,), (tuple(eqp),))

    day = [k for k, t in enumerate(s.types) if t.index in part.sigma1]
    mixed = [k for k, t in enumerate(s.types) if t.index in part.sigma22]
    eqp[day] = 1.0
    x = n * float(np.dot(r[day], e[day]))
    xs, hist, trace = [x], [tuple(eqp)], []
    if not mixed:
        return AlgoRun(StrategyProfile.of(eqp), 0, True, tuple(xs), tuple(hist))
    if cap.kind == "equal" and cap.value == 0.0:
        # zero cap freezes the initial state; the stopping test holds trivially
        return AlgoRun(StrategyProfile.of(eqp), 1, True, tuple(xs), tuple(hist), degenerate=True)

    consumers = _consumer_list(s, mixed)
    converged, step = False, 0
    for step in range(1, n_step + 1):
        old = eqp.copy()
        played = np.zeros(m, dtype=bool)
        for k in rng.permutation(consumers):
            if played[k]:
                continue
            played[k] = True
            p_star = best_response(s, s.types[k].index, eqp[k], x)
            factor = {"none": 1.0, "equal": cap.value}.get(cap.kind)
            if factor is None:
                factor = float(rng.uniform(0.0, 1.0))
            dp = min(factor * p_star, 1.0 - eqp[k])
            eqp[k] += dp
            x += float((n - 1) * r[k] * dp * e[k])
            trace.append(TraceRow(step, s.types[k].index, float(eqp[k]), x))
            if played[mixed].all():
                break
        xs.append(x)
        hist.append(tuple(eqp))
        if np.max(np.abs(eqp - old)) <= tol:
            converged = True
            break
    return AlgoRun(StrategyProfile.of(eqp), step, converged, tuple(xs), tuple(hist), tuple(trace))


def write_trace(run: AlgoRun, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["step", "type", "eqp", "x_sigma"])
        for row in run.trace:
            w.writerow([row.step, row.type_id, repr(row.eqp), repr(row.x_sigma)])
