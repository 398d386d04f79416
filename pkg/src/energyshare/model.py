"""Domain types and aggregate-demand primitives for the energy-sharing game.

Energy is in kWh, prices in currency units per kWh.  All types are frozen;
solvers never mutate a scenario, they derive new ones with ``replace``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

import numpy as np

SHARE_TOL = 1e-9


class ScenarioError(ValueError):
    """Invalid scenario input.  ``field`` names the offending record field."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class CalibrationError(ValueError):
    def __init__(self, failures: Mapping[int, float]):
        detail = ", ".join(f"type {k}: eps={v:.6g}" for k, v in failures.items())
        super().__init__(f"infeasible epsilon calibration ({detail})")
        self.failures = dict(failures)


@dataclass(frozen=True)
class TariffSet:
    c_res: float
    beta: float
    gamma: float

    @property
    def night_price(self) -> float:
        return self.beta * self.c_res

    @property
    def day_grid_price(self) -> float:
        return self.gamma * self.c_res


@dataclass(frozen=True)
class ConsumerType:
    index: int
    day_demand: float
    inv_risk: float
    share: float

    @property
    def flexible_load(self) -> float:
        return self.inv_risk * self.day_demand

    @property
    def risk_aversion(self) -> float:
        return 1.0 / self.inv_risk


@dataclass(frozen=True)
class EpsilonCalibration:
    """Request to derive every type's ``inv_risk`` from one base type.

    ``policy`` selects which equilibrium condition is made to hold across
    types ("pa" or "es").
    """

    base_type: int
    base_eps: float
    policy: str = "pa"


@dataclass(frozen=True)
class Scenario:
    n_consumers: int
    types: tuple[ConsumerType, ...]
    tariffs: TariffSet
    res_capacity: float
    calibration: EpsilonCalibration | None = field(default=None, compare=False)

    @property
    def n_types(self) -> int:
        return len(self.types)

    @property
    def day_demands(self) -> np.ndarray:
        return np.array([t.day_demand for t in self.types])

    @property
    def inv_risks(self) -> np.ndarray:
        return np.array([t.inv_risk for t in self.types])

    @property
    def shares(self) -> np.ndarray:
        return np.array([t.share for t in self.types])

    @property
    def type_ids(self) -> tuple[int, ...]:
        return tuple(t.index for t in self.types)

    def position(self, type_id: int) -> int:
        for k, t in enumerate(self.types):
            if t.index == type_id:
                return k
        raise KeyError(f"unknown type id {type_id}")


@dataclass(frozen=True)
class Partition:
    sigma1: frozenset[int]
    sigma21: frozenset[int]
    sigma22: frozenset[int]
    case1: bool = False

    @property
    def sigma2(self) -> frozenset[int]:
        return self.sigma21 | self.sigma22


@dataclass(frozen=True)
class StrategyProfile:
    """Per-type probability of scheduling the flexible load during daytime."""

    p_day: tuple[float, ...]

    def __post_init__(self):
        for k, p in enumerate(self.p_day):
            if not (0.0 <= p <= 1.0) or math.isnan(p):
                raise ValueError(f"p_day[{k}]={p} outside [0, 1]")

    @classmethod
    def of(cls, values: Iterable[float]) -> "StrategyProfile":
        return cls(tuple(float(v) for v in values))

    @classmethod
    def constant(cls, m: int, value: float) -> "StrategyProfile":
        return cls((float(value),) * m)

    @property
    def p_night(self) -> tuple[float, ...]:
        return tuple(1.0 - p for p in self.p_day)

    def as_array(self) -> np.ndarray:
        return np.array(self.p_day, dtype=float)

    def __len__(self) -> int:
        return len(self.p_day)


def _require(cond: bool, fld: str, msg: str) -> None:
    if not cond:
        raise ScenarioError(fld, msg)


def validate_scenario(raw: Mapping | Scenario) -> Scenario:
    """Build a checked :class:`Scenario` from a plain record.

    ``raw`` holds ``n_consumers``, ``tariffs`` (``c_res``, ``beta``, ``gamma``),
    ``res_capacity`` and ``types`` (each with ``day_demand``, ``share`` and
    ``inv_risk``).  Types are re-sorted by day demand; type ids are kept.
    """
    if isinstance(raw, Scenario):
        raw = scenario_record(raw)

    _require("n_consumers" in raw, "n_consumers", "missing")
    n = raw["n_consumers"]
    _require(isinstance(n, (int, np.integer)) and not isinstance(n, bool),
             "n_consumers", f"must be an integer, got {n!r}")
    _require(n > 1, "n_consumers", f"must exceed 1, got {n}")

    tar = raw.get("tariffs")
    _require(isinstance(tar, Mapping), "tariffs", "missing tariff table")
    try:
        c_res, beta, gamma = (float(tar[k]) for k in ("c_res", "beta", "gamma"))
    except KeyError as exc:
        raise ScenarioError(f"tariffs.{exc.args[0]}", "missing") from None
    _require(c_res > 0, "tariffs.c_res", f"must be positive, got {c_res}")
    _require(beta > 1, "tariffs.beta", f"must exceed 1, got {beta}")
    _require(gamma > beta, "tariffs.gamma",
             f"must exceed beta ({beta}), got {gamma}")

    _require("res_capacity" in raw, "res_capacity", "missing")
    re_cap = float(raw["res_capacity"])
    _require(re_cap >= 0 and math.isfinite(re_cap), "res_capacity",
             f"must be a finite non-negative energy, got {re_cap}")

    rows = raw.get("types")
    _require(isinstance(rows, Sequence) and len(rows) > 0, "types", "need at least one type")
    _require(len(rows) <= n, "types", f"{len(rows)} types for {n} consumers")
    types = []
    for k, row in enumerate(rows):
        idx = int(row.get("index", k))
        try:
            e = float(row["day_demand"])
            share = float(row["share"])
            eps = float(row.get("inv_risk", 1.0))
        except KeyError as exc:
            raise ScenarioError(f"types[{k}].{exc.args[0]}", "missing") from None
        _require(e > 0 and math.isfinite(e), f"types[{k}].day_demand",
                 f"must be positive, got {e}")
        _require(eps >= 1 and math.isfinite(eps), f"types[{k}].inv_risk",
                 f"must be >= 1, got {eps}")
        _require(0 <= share <= 1, f"types[{k}].share", f"must lie in [0, 1], got {share}")
        types.append(ConsumerType(idx, e, eps, share))
    ids = [t.index for t in types]
    _require(len(set(ids)) == len(ids), "types", f"duplicate type ids {ids}")
    total = sum(t.share for t in types)
    _require(abs(total - 1.0) <= SHARE_TOL, "types.share",
             f"shares sum to {total!r}, expected 1")
    types.sort(key=lambda t: (t.day_demand, t.index))

    calib = raw.get("calibration")
    if calib is not None and not isinstance(calib, EpsilonCalibration):
        calib = EpsilonCalibration(int(calib["base_type"]), float(calib["base_eps"]),
                                   str(calib.get("policy", "pa")))
    return Scenario(int(n), tuple(types), TariffSet(c_res, beta, gamma), re_cap, calib)


def scenario_record(s: Scenario) -> dict:
    rec = {
        "n_consumers": s.n_consumers,
        "tariffs": {"c_res": s.tariffs.c_res, "beta": s.tariffs.beta, "gamma": s.tariffs.gamma},
        "res_capacity": s.res_capacity,
        "types": [{"index": t.index, "day_demand": t.day_demand, "share": t.share,
                   "inv_risk": t.inv_risk} for t in s.types],
    }
    if s.calibration is not None:
        rec["calibration"] = s.calibration
    return rec


def total_day_demand(s: Scenario, subset: Iterable[int] | None = None) -> float:
    """N times the share-weighted day demand, over ``subset`` of type ids."""
    if subset is None:
        return s.n_consumers * float(np.dot(s.shares, s.day_demands))
    wanted = set(subset)
    unknown = wanted - set(s.type_ids)
    if unknown:
        raise KeyError(f"unknown type ids {sorted(unknown)}")
    return s.n_consumers * sum(t.share * t.day_demand for t in s.types if t.index in wanted)


def mixed_threshold(t: ConsumerType, tariffs: TariffSet, res_capacity: float) -> float:
    """Community day demand at which a day-scheduled consumer of type ``t``
    is indifferent between day and night under proportional allocation."""
    denom = tariffs.gamma - t.inv_risk * tariffs.beta
    if denom <= 0:
        return math.inf
    return res_capacity * (tariffs.gamma - 1.0) / denom


def partition_types(s: Scenario) -> Partition:
    if s.res_capacity >= total_day_demand(s):
        return Partition(frozenset(), frozenset(), frozenset(), case1=True)
    g, b = s.tariffs.gamma, s.tariffs.beta
    s1, s21, s22 = set(), set(), set()
    for t in s.types:
        if t.inv_risk >= g / b:
            s1.add(t.index)
        elif t.day_demand > mixed_threshold(t, s.tariffs, s.res_capacity):
            s21.add(t.index)
        else:
            s22.add(t.index)
    return Partition(frozenset(s1), frozenset(s21), frozenset(s22))


def _profile_array(s: Scenario, p: StrategyProfile | Sequence[float] | np.ndarray) -> np.ndarray:
    arr = p.as_array() if isinstance(p, StrategyProfile) else np.asarray(p, dtype=float)
    if arr.shape != (s.n_types,):
        raise ValueError(f"profile has {arr.shape} entries, scenario has {s.n_types} types")
    return arr


def expected_demands(s: Scenario, p: StrategyProfile | Sequence[float]) -> tuple[float, float]:
    """Expected aggregate (day, night) energy demand under profile ``p``."""
    pd = _profile_array(s, p)
    w = s.n_consumers * s.shares * s.day_demands
    day = float(np.dot(w, pd))
    night = float(np.dot(w * s.inv_risks, 1.0 - pd))
    return day, night


def calibrate_epsilons(s: Scenario, base_type: int, base_eps: float,
                       policy: str = "pa") -> np.ndarray:
    """Inverse risk-aversion per type such that the equilibrium condition of
    ``policy`` holds with equality across all types.

    Under "pa" the quantity ``RE(g-1)/(g-eps*b) - E`` is made common, under
    "es" the product ``(g-eps*b)*E``.  Returned in scenario type order.
    """
    g, b = s.tariffs.gamma, s.tariffs.beta
    re_cap = s.res_capacity
    e = s.day_demands
    e0 = e[s.position(base_type)]
    if base_eps < 1:
        raise CalibrationError({base_type: base_eps})
    if base_eps * b >= g:
        raise CalibrationError({base_type: base_eps})
    if policy == "pa":
        if re_cap <= 0:
            raise ValueError("calibration needs a positive RES capacity")
        k = re_cap * (g - 1.0) / (g - base_eps * b) - e0
        if k <= 0:
            raise ValueError(f"base type {base_type} has no mixed-strategy margin (K={k})")
        eps = (g - re_cap * (g - 1.0) / (k + e)) / b
    elif policy == "es":
        kappa = (g - base_eps * b) * e0
        eps = (g - kappa / e) / b
    else:
        raise ValueError(f"unknown policy {policy!r}")
    eps[s.position(base_type)] = base_eps
    bad = {s.types[k].index: float(v) for k, v in enumerate(eps)
           if not (1.0 <= v < g / b)}
    if bad:
        raise CalibrationError(bad)
    return eps


def with_inv_risks(s: Scenario, eps: Sequence[float]) -> Scenario:
    types = tuple(replace(t, inv_risk=float(v)) for t, v in zip(s.types, eps))
    return replace(s, types=types)


def apply_calibration(s: Scenario) -> Scenario:
    """Resolve ``s.calibration`` against the current RES capacity.

    A base epsilon at or above gamma/beta puts every type in the dominant-day
    set where no cross-type condition applies; all types then get the base
    value.
    """
    cal = s.calibration
    if cal is None:
        return s
    g, b = s.tariffs.gamma, s.tariffs.beta
    if cal.base_eps * b >= g:
        return with_inv_risks(s, [cal.base_eps] * s.n_types)
    return with_inv_risks(s, calibrate_epsilons(s, cal.base_type, cal.base_eps, cal.policy))


def with_res_capacity(s: Scenario, res_capacity: float) -> Scenario:
    """Copy of ``s`` at a new RES capacity, re-calibrated if requested."""
    return apply_calibration(replace(s, res_capacity=float(res_capacity)))


def with_ratio(s: Scenario, ratio: float) -> Scenario:
    return with_res_capacity(s, ratio * total_day_demand(s))


def with_price(s: Scenario, c_res: float) -> Scenario:
    return replace(s, tariffs=replace(s.tariffs, c_res=float(c_res)))
