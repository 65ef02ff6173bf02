"""Synthetic fleet simulator with planted failure patterns.

The simulated supervisor holds back any vehicle whose state contains a
planted itemset, except that with a configurable probability it rolls such a
vehicle out anyway (the only kind of mistake it makes). A rolled-out vehicle
containing a planted itemset can fail: it gains a burst of defects and stays
in the shop until repairs get it back to a small, pattern-free state. An
optional background failure rate models ordinary breakdowns no pattern
explains. Defects are not equally likely: arrival odds fall off with the
defect's index (d01 is the everyday nuisance, d40 the exotic failure), which
keeps the state population concentrated on recurring combinations. The
emitted log, cost table, and ground truth are fully determined by the seed.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from datetime import date, timedelta
from pathlib import Path
from typing import Mapping, Union

from .core import DefectState, Observation, Status, TransactionLog
from .errors import ValidationError
from .evaluate import CostTable, write_cost_table
from .preprocess import write_transactions

GROUND_TRUTH_FORMAT = "rolloutaid-ground-truth"
GROUND_TRUTH_VERSION = 1

# Defects added when a planted pattern actually causes a breakdown.
_FAILURE_BURST = 5
# Defects added by an ordinary (pattern-free) in-service failure.
_BACKGROUND_BURST = 2
# Defects the shop clears per night; rolled-out vehicles get at most one
# overnight fix, so a vehicle recovers much faster once held back.
_SHOP_REPAIR_BATCH = 2
# A failed vehicle leaves the shop once it is pattern-free and this small.
_SHOP_RELEASE_SIZE = 2


@dataclass(frozen=True)
class PlantedItemset:
    defects: DefectState
    failure_probability: float

    def __post_init__(self) -> None:
        if not self.defects:
            raise ValidationError("planted itemset must not be empty")
        if not 0.0 <= self.failure_probability <= 1.0:
            raise ValidationError("failure_probability must be in [0, 1]")


@dataclass(frozen=True)
class GenConfig:
    n_vehicles: int
    n_defects: int
    n_days: int
    planted_itemsets: tuple[PlantedItemset, ...]
    defect_arrival_rate: float
    repair_rate: float
    supervisor_error_rate: float
    seed: int
    background_failure_rate: float = 0.0
    train_days: int | None = None
    cost_range: tuple[float, float] = (5.0, 60.0)
    start_date: date = date(2017, 1, 1)

    def __post_init__(self) -> None:
        if self.n_vehicles < 1 or self.n_defects < 1 or self.n_days < 1:
            raise ValidationError("vehicle, defect, and day counts must be positive")
        for rate_name in (
            "defect_arrival_rate",
            "repair_rate",
            "supervisor_error_rate",
            "background_failure_rate",
        ):
            rate = getattr(self, rate_name)
            if not 0.0 <= rate <= 1.0:
                raise ValidationError(f"{rate_name} must be in [0, 1]")
        if self.train_days is not None and not 0 < self.train_days < self.n_days:
            raise ValidationError("train_days must lie strictly inside the simulated window")
        lo, hi = self.cost_range
        if lo < 0 or hi < lo:
            raise ValidationError("cost_range must be 0 <= low <= high")
        universe = set(self.defect_ids())
        for planted in self.planted_itemsets:
            unknown = sorted(planted.defects - universe)
            if unknown:
                raise ValidationError(
                    "planted itemset references unknown defects: " + ", ".join(unknown)
                )

    def defect_ids(self) -> list[str]:
        width = len(str(self.n_defects))
        return [f"d{i:0{width}d}" for i in range(1, self.n_defects + 1)]

    def vehicle_ids(self) -> list[str]:
        width = len(str(self.n_vehicles))
        return [f"v{i:0{width}d}" for i in range(1, self.n_vehicles + 1)]

    @classmethod
    def from_mapping(cls, raw: Mapping) -> "GenConfig":
        try:
            planted = tuple(
                PlantedItemset(
                    defects=frozenset(entry["defects"]),
                    failure_probability=float(entry["failure_probability"]),
                )
                for entry in raw.get("planted_itemsets", ())
            )
            kwargs = dict(
                n_vehicles=int(raw["n_vehicles"]),
                n_defects=int(raw["n_defects"]),
                n_days=int(raw["n_days"]),
                planted_itemsets=planted,
                defect_arrival_rate=float(raw["defect_arrival_rate"]),
                repair_rate=float(raw["repair_rate"]),
                supervisor_error_rate=float(raw["supervisor_error_rate"]),
                seed=int(raw["seed"]),
            )
        except KeyError as exc:
            raise ValidationError(f"scenario config missing field {exc.args[0]!r}") from None
        except (TypeError, ValueError) as exc:
            raise ValidationError(f"malformed scenario config: {exc}") from None
        if raw.get("background_failure_rate") is not None:
            kwargs["background_failure_rate"] = float(raw["background_failure_rate"])
        if raw.get("train_days") is not None:
            kwargs["train_days"] = int(raw["train_days"])
        if raw.get("cost_range") is not None:
            lo, hi = raw["cost_range"]
            kwargs["cost_range"] = (float(lo), float(hi))
        if raw.get("start_date") is not None:
            kwargs["start_date"] = date.fromisoformat(raw["start_date"])
        return cls(**kwargs)

    @classmethod
    def from_json(cls, source: Union[str, Path]) -> "GenConfig":
        try:
            raw = json.loads(Path(source).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ValidationError(f"scenario config is not valid JSON: {exc}") from None
        if not isinstance(raw, dict):
            raise ValidationError("scenario config must be a JSON object")
        return cls.from_mapping(raw)


@dataclass(frozen=True)
class GroundTruth:
    """What the simulation actually did: the planted patterns, every
    erroneous roll-out, and every resulting failure."""

    planted: tuple[PlantedItemset, ...]
    supervisor_errors: tuple[tuple[date, str], ...]
    failures: tuple[tuple[date, str], ...]

    def to_dict(self) -> dict:
        return {
            "format": GROUND_TRUTH_FORMAT,
            "version": GROUND_TRUTH_VERSION,
            "planted": [
                {
                    "defects": sorted(p.defects),
                    "failure_probability": p.failure_probability,
                }
                for p in self.planted
            ],
            "supervisor_errors": [
                {"date": d.isoformat(), "vehicle_id": v}
                for d, v in self.supervisor_errors
            ],
            "failures": [
                {"date": d.isoformat(), "vehicle_id": v} for d, v in self.failures
            ],
        }


def generate(cfg: GenConfig) -> tuple[TransactionLog, CostTable, GroundTruth]:
    """Run the day-by-day simulation and return log, costs, and ground truth.

    Identical configs (including seed) produce identical outputs; all RNG
    draws happen in a fixed iteration order.
    """
    rng = random.Random(cfg.seed)
    defects = cfg.defect_ids()
    vehicles = cfg.vehicle_ids()
    lo, hi = cfg.cost_range
    costs: CostTable = {d: round(rng.uniform(lo, hi), 2) for d in defects}
    # Arrival frequency decays with the defect's rank.
    weights = [1.0 / math.sqrt(rank) for rank in range(1, len(defects) + 1)]

    def draw_weighted(pool: list[str]) -> str:
        by_index = {d: w for d, w in zip(defects, weights)}
        total = sum(by_index[d] for d in pool)
        точка = rng.random() * total
        acc = 0.0
        for d in pool:
            acc += by_index[d]
            if точка <= acc:
                return d
        return pool[-1]

    # Seeded warm start: fleets do not begin defect-free, and an all-empty
    # start would leave most of the window in a slow ramp-up.
    states: dict[str, set[str]] = {}
    for vehicle in vehicles:
        size = rng.randrange(0, 7)
        pool = list(defects)
        chosen: set[str] = set()
        for _ in range(size):
            chosen.add(pool.pop(rng.randrange(len(pool))))
        states[vehicle] = chosen
    in_shop: set[str] = set()
    rows: list[Observation] = []
    errors: list[tuple[date, str]] = []
    failures: list[tuple[date, str]] = []

    def contains_planted(state) -> bool:
        return any(p.defects <= state for p in cfg.planted_itemsets)

    for day_index in range(cfg.n_days):
        day = cfg.start_date + timedelta(days=day_index)
        decisions: dict[str, Status] = {}
        morning: dict[str, DefectState] = {}
        for vehicle in vehicles:
            state = frozenset(states[vehicle])
            morning[vehicle] = state
            if vehicle in in_shop:
                status = Status.DOWN
            elif contains_planted(state):
                if rng.random() < cfg.supervisor_error_rate:
                    status = Status.AVAILABLE
                    errors.append((day, vehicle))
                else:
                    status = Status.DOWN
            else:
                status = Status.AVAILABLE
            decisions[vehicle] = status
            rows.append(Observation(vehicle, day, state, status))

        for vehicle in vehicles:
            current = states[vehicle]
            if decisions[vehicle] is Status.AVAILABLE:
                burst = 0
                for planted in cfg.planted_itemsets:
                    if planted.defects <= morning[vehicle]:
                        if rng.random() < planted.failure_probability:
                            burst = _FAILURE_BURST
                            break
                if not burst and rng.random() < cfg.background_failure_rate:
                    burst = _BACKGROUND_BURST
                if burst:
                    in_shop.add(vehicle)
                    failures.append((day, vehicle))
                    missing = sorted(d for d in defects if d not in current)
                    for _ in range(min(burst, len(missing))):
                        current.add(missing.pop(rng.randrange(len(missing))))
                else:
                    # At most one new defect and one overnight fix per trip
                    # day, so the expected repair-bill drift of a rollout does
                    # not depend on how many defects the vehicle already has.
                    if rng.random() < cfg.defect_arrival_rate:
                        missing = sorted(d for d in defects if d not in current)
                        if missing:
                            current.add(missing[rng.randrange(len(missing))])
                    if rng.random() < cfg.repair_rate and current:
                        present = sorted(current)
                        current.remove(present[rng.randrange(len(present))])
            else:
                # Failed vehicles get priority service; pattern holds wait for
                # parts and clear one defect a night like everyone else.
                batch = _SHOP_REPAIR_BATCH if vehicle in in_shop else 1
                for _ in range(batch):
                    if not current:
                        break
                    present = sorted(current)
                    current.remove(present[rng.randrange(len(present))])
                # Release once the repairs got past the failure pattern and
                # only a small remainder is pending.
                if (
                    vehicle in in_shop
                    and not contains_planted(current)
                    and len(current) <= _SHOP_RELEASE_SIZE
                ):
                    in_shop.discard(vehicle)

    log = TransactionLog.from_rows(rows)
    truth = GroundTruth(
        planted=cfg.planted_itemsets,
        supervisor_errors=tuple(errors),
        failures=tuple(failures),
    )
    return log, costs, truth


def split_log(log: TransactionLog, cfg: GenConfig) -> tuple[TransactionLog, TransactionLog]:
    """Split at the configured train/test day boundary."""
    if cfg.train_days is None:
        raise ValidationError("config has no train_days boundary")
    cutoff = cfg.start_date + timedelta(days=cfg.train_days - 1)
    train_rows = [r for r in log if r.timestamp <= cutoff]
    test_rows = [r for r in log if r.timestamp > cutoff]
    return TransactionLog.from_rows(train_rows), TransactionLog.from_rows(test_rows)


def write_outputs(cfg: GenConfig, out_dir: Union[str, Path]) -> dict[str, Path]:
    """Generate and write log.csv, costs.csv, ground_truth.json, and, when a
    train/test boundary is configured, train_log.csv and test_log.csv."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    log, costs, truth = generate(cfg)
    written: dict[str, Path] = {}

    log_path = out / "log.csv"
    write_transactions(log, log_path)
    written["log"] = log_path

    if cfg.train_days is not None:
        train_log, test_log = split_log(log, cfg)
        train_path = out / "train_log.csv"
        write_transactions(train_log, train_path)
        written["train_log"] = train_path
        test_path = out / "test_log.csv"
        write_transactions(test_log, test_path)
        written["test_log"] = test_path

    costs_path = out / "costs.csv"
    write_cost_table(costs, costs_path)
    written["costs"] = costs_path

    truth_path = out / "ground_truth.json"
    truth_path.write_text(
        json.dumps(truth.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    written["ground_truth"] = truth_path
    return written
