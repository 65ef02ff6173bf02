"""Counterfactual cost replay: supervisor decisions vs. the ranker's picks.

The cost of a rollout is the average change in the vehicle's repair bill
over the following days. For vehicles the ranker would roll out but the
supervisor did not, there is no observed future, so the cost of the most
similar historically rolled state stands in.
"""

from __future__ import annotations

import csv
import json
import statistics
from dataclasses import dataclass
from datetime import date
from fractions import Fraction
from pathlib import Path
from typing import IO, Callable, Mapping, Union

from .core import DefectState, Observation, Status, TransactionLog, format_state, jaccard
from .errors import ValidationError
from .mining import ItemsetRatioModel
from .scoring import FleetSnapshot, rank_fleet, select_top_n

COST_CSV_HEADER = ("defect_id", "repair_cost")
COMPARISON_CSV_HEADER = (
    "date",
    "n_rollouts",
    "supervisor_cost",
    "advisor_cost",
    "delta",
)
DELTA_SERIES_CSV_HEADER = ("date", "delta")

CostTable = dict[str, float]


@dataclass(frozen=True)
class EvalConfig:
    """horizon_days is how many post-rollout observations feed the cost delta;
    aggregate picks the mean (default) or the sum of those day deltas."""

    horizon_days: int
    aggregate: str = "mean"

    def __post_init__(self) -> None:
        if self.horizon_days < 1:
            raise ValidationError("horizon_days must be at least 1")
        if self.aggregate not in ("mean", "sum"):
            raise ValidationError("aggregate must be 'mean' or 'sum'")


def load_cost_table(source: Union[str, Path, IO[str]]) -> CostTable:
    """Read a per-defect repair cost CSV: defect_id,repair_cost."""
    handle, owned = (
        (open(source, "r", encoding="utf-8", newline=""), True)
        if isinstance(source, (str, Path))
        else (source, False)
    )
    try:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None or tuple(
            h.strip().lower() for h in header
        ) != COST_CSV_HEADER:
            raise ValidationError("expected CSV header " + ",".join(COST_CSV_HEADER))
        table: CostTable = {}
        for lineno, record in enumerate(reader, start=2):
            if not record or (len(record) == 1 and not record[0].strip()):
                continue
            if len(record) != 2:
                raise ValidationError(
                    f"line {lineno}: expected 2 fields, got {len(record)}"
                )
            defect_id, cost_text = (field.strip() for field in record)
            if not defect_id:
                raise ValidationError(f"line {lineno}: empty defect_id")
            if defect_id in table:
                raise ValidationError(f"line {lineno}: duplicate defect {defect_id}")
            try:
                cost = float(cost_text)
            except ValueError:
                raise ValidationError(
                    f"line {lineno}: unparseable cost {cost_text!r}"
                ) from None
            if cost < 0:
                raise ValidationError(f"line {lineno}: negative cost for {defect_id}")
            table[defect_id] = cost
    finally:
        if owned:
            handle.close()
    return table


def write_cost_table(table: CostTable, sink: Union[str, Path, IO[str]]) -> None:
    handle, owned = (
        (open(sink, "w", encoding="utf-8", newline=""), True)
        if isinstance(sink, (str, Path))
        else (sink, False)
    )
    try:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(COST_CSV_HEADER)
        for defect_id in sorted(table):
            writer.writerow((defect_id, repr(table[defect_id])))
    finally:
        if owned:
            handle.close()


def state_repair_cost(table: CostTable, state: DefectState) -> float:
    """Additive repair bill of a state; the empty state costs nothing."""
    missing = sorted(d for d in state if d not in table)
    if missing:
        raise ValidationError("unpriced defect " + ", ".join(missing))
    return sum(table[d] for d in sorted(state))


def _state_cost_fn(table: CostTable) -> Callable[[DefectState], float]:
    cache: dict[DefectState, float] = {}

    def cost(state: DefectState) -> float:
        value = cache.get(state)
        if value is None:
            value = state_repair_cost(table, state)
            cache[state] = value
        return value

    return cost


@dataclass(frozen=True)
class RolloutCostSample:
    """Cost delta of one observed rollout; censored when no later observation
    of the vehicle exists, in which case the cost contribution is zero."""

    cost: float
    n_future: int

    @property
    def censored(self) -> bool:
        return self.n_future == 0


class _LogIndex:
    """Per-vehicle series and per-day groupings of a log, built once."""

    def __init__(self, log: TransactionLog) -> None:
        self.series: dict[str, list[Observation]] = {}
        self.position: dict[tuple[str, date], int] = {}
        self.by_date: dict[date, list[Observation]] = {}
        for row in log:
            series = self.series.setdefault(row.vehicle_id, [])
            self.position[(row.vehicle_id, row.timestamp)] = len(series)
            series.append(row)
            self.by_date.setdefault(row.timestamp, []).append(row)


def _rollout_cost(
    index: _LogIndex,
    state_cost: Callable[[DefectState], float],
    vehicle_id: str,
    day: date,
    cfg: EvalConfig,
) -> RolloutCostSample:
    pos = index.position.get((vehicle_id, day))
    if pos is None:
        raise ValidationError(
            f"no observation for vehicle {vehicle_id} on {day.isoformat()}"
        )
    series = index.series[vehicle_id]
    row = series[pos]
    if row.status is not Status.AVAILABLE:
        raise ValidationError(
            f"vehicle {vehicle_id} was not rolled out on {day.isoformat()}"
        )
    future = series[pos + 1 : pos + 1 + cfg.horizon_days]
    if not future:
        return RolloutCostSample(cost=0.0, n_future=0)
    base = state_cost(row.state)
    deltas = [state_cost(obs.state) - base for obs in future]
    total = sum(deltas)
    value = total if cfg.aggregate == "sum" else total / len(deltas)
    return RolloutCostSample(cost=value, n_future=len(future))


def observed_rollout_cost(
    log: TransactionLog,
    table: CostTable,
    vehicle_id: str,
    day: date,
    cfg: EvalConfig,
) -> RolloutCostSample:
    """Cost delta of one rollout: day deltas against the rollout-day repair
    bill, aggregated over the next up-to-horizon observations of the vehicle.

    Fewer future observations than the horizon average over what exists;
    none at all yield a zero, censored sample.
    """
    return _rollout_cost(_LogIndex(log), _state_cost_fn(table), vehicle_id, day, cfg)


@dataclass(frozen=True)
class StateCostEntry:
    median_cost: float
    n_samples: int


@dataclass(frozen=True)
class StateCostIndex:
    """Median observed rollout cost per historically rolled state."""

    entries: dict[DefectState, StateCostEntry]

    @property
    def is_empty(self) -> bool:
        return not self.entries


def _build_state_cost_index(
    index: _LogIndex, state_cost: Callable[[DefectState], float], cfg: EvalConfig
) -> StateCostIndex:
    samples: dict[DefectState, list[float]] = {}
    for vehicle_id in sorted(index.series):
        series = index.series[vehicle_id]
        for pos, row in enumerate(series):
            if row.status is not Status.AVAILABLE:
                continue
            if pos + 1 >= len(series):
                continue  # no successor: nothing observable about this rollout
            sample = _rollout_cost(index, state_cost, vehicle_id, row.timestamp, cfg)
            samples.setdefault(row.state, []).append(sample.cost)
    entries = {
        state: StateCostEntry(
            median_cost=statistics.median_low(costs), n_samples=len(costs)
        )
        for state, costs in samples.items()
    }
    return StateCostIndex(entries=entries)


def build_state_cost_index(
    log: TransactionLog, table: CostTable, cfg: EvalConfig
) -> StateCostIndex:
    """Collect every observed rollout with a successor and take the lower
    median cost per state (keeps medians in the observed sample set)."""
    return _build_state_cost_index(_LogIndex(log), _state_cost_fn(table), cfg)


def counterfactual_cost(index: StateCostIndex, state: DefectState) -> float:
    """Median rollout cost of the most similar historically rolled state.

    Similarity ties go to the state with more samples, then to the
    lexicographically smallest one, so the result is independent of
    iteration order. An exact match always wins (similarity 1).
    """
    if index.is_empty:
        raise ValidationError("no rollout history to estimate a cost from")
    best_key: DefectState | None = None
    best_sim: Fraction | None = None
    best_entry: StateCostEntry | None = None
    for candidate, entry in index.entries.items():
        if not state and not candidate:
            sim = Fraction(1)
        else:
            sim = Fraction(len(state & candidate), len(state | candidate))
        if best_sim is None:
            better = True
        elif sim != best_sim:
            better = sim > best_sim
        elif entry.n_samples != best_entry.n_samples:  # type: ignore[union-attr]
            better = entry.n_samples > best_entry.n_samples  # type: ignore[union-attr]
        else:
            better = format_state(candidate) < format_state(best_key)  # type: ignore[arg-type]
        if better:
            best_key, best_sim, best_entry = candidate, sim, entry
    assert best_entry is not None
    return best_entry.median_cost


@dataclass(frozen=True)
class DayRecord:
    day: date
    n_rollouts: int
    supervisor_cost: float
    advisor_cost: float

    @property
    def delta(self) -> float:
        """Positive when the ranker's picks were cheaper that day."""
        return self.supervisor_cost - self.advisor_cost


@dataclass(frozen=True)
class PolicyComparison:
    """Day-by-day cost replay of supervisor rollouts vs. the ranker's picks."""

    days: tuple[DayRecord, ...]
    supervisor_total: float
    advisor_total: float
    supervisor_censored: int
    advisor_censored: int
    horizon_days: int

    @property
    def n_days(self) -> int:
        return len(self.days)

    @property
    def supervisor_daily_mean(self) -> float:
        return self.supervisor_total / self.n_days if self.days else 0.0

    @property
    def advisor_daily_mean(self) -> float:
        return self.advisor_total / self.n_days if self.days else 0.0

    @property
    def savings(self) -> float:
        return self.supervisor_total - self.advisor_total

    @property
    def savings_pct(self) -> float:
        if self.supervisor_total == 0:
            return 0.0
        return 100.0 * self.savings / self.supervisor_total


def compare_policies(
    log: TransactionLog,
    model: ItemsetRatioModel,
    table: CostTable,
    cfg: EvalConfig,
    *,
    eval_start: date | None = None,
    eval_end: date | None = None,
    history: TransactionLog | None = None,
) -> PolicyComparison:
    """Replay each evaluation day: the ranker picks as many vehicles as the
    supervisor rolled out, from everything observed that day.

    Picks the supervisor also rolled get their observed cost; picks the
    supervisor held back get the counterfactual cost. The evaluation window
    defaults to the days strictly after the model's training window;
    counterfactual medians are built from the whole provided log (or from
    ``history`` when given). The model must not have been trained on the
    evaluated days.
    """
    index = _LogIndex(log)
    state_cost = _state_cost_fn(table)
    hist_index = index if history is None else _LogIndex(history)
    cost_index = _build_state_cost_index(hist_index, state_cost, cfg)

    if eval_start is None and model.provenance.train_end is not None:
        start = model.provenance.train_end
        days = sorted(d for d in index.by_date if d > start)
    else:
        days = sorted(index.by_date)
        if eval_start is not None:
            days = [d for d in days if d >= eval_start]
    if eval_end is not None:
        days = [d for d in days if d <= eval_end]

    records: list[DayRecord] = []
    supervisor_censored = 0
    advisor_censored = 0
    for day in days:
        observations = index.by_date[day]
        candidates = {obs.vehicle_id: obs.state for obs in observations}
        rolled = sorted(
            obs.vehicle_id
            for obs in observations
            if obs.status is Status.AVAILABLE
        )
        n = len(rolled)
        picks = select_top_n(
            rank_fleet(model, FleetSnapshot(as_of=day, vehicles=candidates)), n
        )
        supervisor_cost = 0.0
        for vehicle_id in rolled:
            sample = _rollout_cost(index, state_cost, vehicle_id, day, cfg)
            supervisor_cost += sample.cost
            if sample.censored:
                supervisor_censored += 1
        rolled_set = set(rolled)
        advisor_cost = 0.0
        for vehicle_id in picks:
            if vehicle_id in rolled_set:
                sample = _rollout_cost(index, state_cost, vehicle_id, day, cfg)
                advisor_cost += sample.cost
                if sample.censored:
                    advisor_censored += 1
            else:
                advisor_cost += counterfactual_cost(
                    cost_index, candidates[vehicle_id]
                )
        records.append(
            DayRecord(
                day=day,
                n_rollouts=n,
                supervisor_cost=supervisor_cost,
                advisor_cost=advisor_cost,
            )
        )

    return PolicyComparison(
        days=tuple(records),
        supervisor_total=sum(r.supervisor_cost for r in records),
        advisor_total=sum(r.advisor_cost for r in records),
        supervisor_censored=supervisor_censored,
        advisor_censored=advisor_censored,
        horizon_days=cfg.horizon_days,
    )


def write_comparison_csv(
    comparison: PolicyComparison, sink: Union[str, Path, IO[str]]
) -> None:
    handle, owned = (
        (open(sink, "w", encoding="utf-8", newline=""), True)
        if isinstance(sink, (str, Path))
        else (sink, False)
    )
    try:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(COMPARISON_CSV_HEADER)
        for record in comparison.days:
            writer.writerow(
                (
                    record.day.isoformat(),
                    record.n_rollouts,
                    f"{record.supervisor_cost:.2f}",
                    f"{record.advisor_cost:.2f}",
                    f"{record.delta:.2f}",
                )
            )
    finally:
        if owned:
            handle.close()


def write_delta_series_csv(
    comparison: PolicyComparison, sink: Union[str, Path, IO[str]]
) -> None:
    """Per-day supervisor-minus-advisor cost series, ready for charting."""
    handle, owned = (
        (open(sink, "w", encoding="utf-8", newline=""), True)
        if isinstance(sink, (str, Path))
        else (sink, False)
    )
    try:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(DELTA_SERIES_CSV_HEADER)
        for record in comparison.days:
            writer.writerow((record.day.isoformat(), f"{record.delta:.2f}"))
    finally:
        if owned:
            handle.close()


def comparison_summary(results: Mapping[int, PolicyComparison]) -> dict:
    """JSON-ready totals per horizon."""
    horizons = {}
    for horizon in sorted(results):
        comparison = results[horizon]
        horizons[str(horizon)] = {
            "n_days": comparison.n_days,
            "supervisor_total": round(comparison.supervisor_total, 2),
            "advisor_total": round(comparison.advisor_total, 2),
            "supervisor_daily_mean": round(comparison.supervisor_daily_mean, 2),
            "advisor_daily_mean": round(comparison.advisor_daily_mean, 2),
            "savings": round(comparison.savings, 2),
            "savings_pct": round(comparison.savings_pct, 2),
            "supervisor_censored": comparison.supervisor_censored,
            "advisor_censored": comparison.advisor_censored,
        }
    return {"horizons": horizons}


def format_summary_table(results: Mapping[int, PolicyComparison]) -> str:
    """Human-readable totals table, one row per horizon."""
    lines = [
        f"{'horizon':>7}  {'days':>4}  {'supervisor_total':>16}  "
        f"{'advisor_total':>13}  {'savings':>9}  {'savings_pct':>11}"
    ]
    for horizon in sorted(results):
        comparison = results[horizon]
        lines.append(
            f"{horizon:>7}  {comparison.n_days:>4}  "
            f"{comparison.supervisor_total:>16.2f}  "
            f"{comparison.advisor_total:>13.2f}  "
            f"{comparison.savings:>9.2f}  "
            f"{comparison.savings_pct:>10.2f}%"
        )
    return "\n".join(lines)


def write_report(
    results: Mapping[int, PolicyComparison], out_dir: Union[str, Path]
) -> dict[str, Path]:
    """Write per-horizon comparison and delta-series CSVs plus a summary.

    Output bytes are fully determined by the inputs; repeated runs produce
    identical files.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: dict[str, Path] = {}
    for horizon in sorted(results):
        comparison = results[horizon]
        comparison_path = out / f"comparison_theta{horizon}.csv"
        write_comparison_csv(comparison, comparison_path)
        written[f"comparison_theta{horizon}"] = comparison_path
        series_path = out / f"delta_series_theta{horizon}.csv"
        write_delta_series_csv(comparison, series_path)
        written[f"delta_series_theta{horizon}"] = series_path
    summary_path = out / "summary.json"
    summary_path.write_text(
        json.dumps(comparison_summary(results), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    written["summary"] = summary_path
    return written
