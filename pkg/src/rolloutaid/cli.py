"""Command-line workflows: generate, train, score, rank, evaluate, serve.

Exit codes: 0 success, 1 validation error, 2 I/O error.
"""

from __future__ import annotations

import dataclasses
import json
import sys
from datetime import date

import click

from .core import format_state, parse_state
from .datagen import GenConfig, write_outputs
from .errors import ValidationError
from .evaluate import (
    EvalConfig,
    compare_policies,
    format_summary_table,
    load_cost_table,
    state_repair_cost,
    write_report,
)
from .mining import MinerConfig, train as train_model
from .persistence import load_model, save_model
from .preprocess import PreprocessConfig, load_transactions
from .scoring import (
    load_snapshot,
    rank_fleet,
    score_state,
    select_top_n,
    write_ranking_csv,
)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_IO = 2


def _parse_date_option(value: str | None, name: str) -> date | None:
    if value is None:
        return None
    try:
        return date.fromisoformat(value)
    except ValueError:
        raise ValidationError(f"unparseable {name} date {value!r}") from None


@click.group()
def cli() -> None:
    """Defect-pattern mining and roll-out ranking for vehicle fleets."""


@cli.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=False))
@click.option("--seed", type=int, default=None, help="Override the config's seed.")
@click.option("--out-dir", required=True, type=click.Path())
def generate(config_path: str, seed: int | None, out_dir: str) -> None:
    """Simulate a synthetic fleet and write its log, costs, and ground truth."""
    cfg = GenConfig.from_json(config_path)
    if seed is not None:
        cfg = dataclasses.replace(cfg, seed=seed)
    written = write_outputs(cfg, out_dir)
    for name in sorted(written):
        click.echo(f"{name}: {written[name]}")


@cli.command()
@click.option("--log", "log_path", required=True, type=click.Path())
@click.option("--delta", type=float, default=0.85, show_default=True,
              help="Down-fraction threshold for a state to count as failure-bound.")
@click.option("--min-support", required=True, type=int,
              help="Minimum itemset support in the down-transition multiset.")
@click.option("--max-itemset-size", type=int, default=None)
@click.option("--laplace", is_flag=True, default=False,
              help="Apply +1/+1 smoothing to the stored ratios.")
@click.option("--out-model", required=True, type=click.Path())
def train(
    log_path: str,
    delta: float,
    min_support: int,
    max_itemset_size: int | None,
    laplace: bool,
    out_model: str,
) -> None:
    """Learn the itemset ratio model from a historical observation log."""
    log = load_transactions(log_path)
    model = train_model(
        log,
        PreprocessConfig(down_threshold=delta),
        MinerConfig(
            min_support=min_support,
            max_itemset_size=max_itemset_size,
            laplace=laplace,
        ),
    )
    save_model(model, out_model)
    click.echo(
        f"trained on {model.provenance.n_observations} observations: "
        f"{len(model)} itemsets -> {out_model}"
    )


@cli.command()
@click.option("--model", "model_path", required=True, type=click.Path())
@click.option("--state", required=True, help='Defect state, e.g. "d1;d2".')
def score(model_path: str, state: str) -> None:
    """Score one defect state against a trained model."""
    model = load_model(model_path)
    parsed = parse_state(state)
    result = score_state(model, parsed)
    click.echo(
        json.dumps(
            {
                "state": format_state(parsed),
                "score": {
                    "numerator": result.score.numerator,
                    "denominator": result.score.denominator,
                    "display": result.score.display(),
                },
                "witness": format_state(result.witness) if result.witness else None,
            },
            sort_keys=True,
        )
    )


@cli.command()
@click.option("--model", "model_path", required=True, type=click.Path())
@click.option("--snapshot", "snapshot_path", required=True, type=click.Path(),
              help="Fleet snapshot CSV: vehicle_id,defect_state.")
@click.option("--top-n", type=int, default=None,
              help="Also print the first N vehicle ids on stderr-free stdout.")
@click.option("--out", "out_path", type=click.Path(), default=None,
              help="Write the ranking CSV here instead of stdout.")
def rank(
    model_path: str, snapshot_path: str, top_n: int | None, out_path: str | None
) -> None:
    """Rank a fleet snapshot ascending by score (most roll-out-suitable first)."""
    model = load_model(model_path)
    snapshot = load_snapshot(snapshot_path)
    ranking = rank_fleet(model, snapshot)
    if out_path is not None:
        write_ranking_csv(ranking, out_path)
    else:
        write_ranking_csv(ranking, sys.stdout)
    if top_n is not None:
        click.echo("top_n: " + ",".join(select_top_n(ranking, top_n)))


@cli.command()
@click.option("--log", "log_path", required=True, type=click.Path())
@click.option("--model", "model_path", required=True, type=click.Path())
@click.option("--costs", "costs_path", required=True, type=click.Path())
@click.option("--theta", "thetas", type=int, multiple=True,
              help="Post-rollout horizon in days; repeatable. Default: 3 and 4.")
@click.option("--aggregate", type=click.Choice(["mean", "sum"]), default="mean",
              show_default=True)
@click.option("--eval-start", default=None,
              help="First evaluation day (default: day after the model's training window).")
@click.option("--eval-end", default=None)
@click.option("--report", "report_dir", required=True, type=click.Path())
def evaluate(
    log_path: str,
    model_path: str,
    costs_path: str,
    thetas: tuple[int, ...],
    aggregate: str,
    eval_start: str | None,
    eval_end: str | None,
    report_dir: str,
) -> None:
    """Replay supervisor decisions against the ranker and report cost totals."""
    log = load_transactions(log_path)
    model = load_model(model_path)
    table = load_cost_table(costs_path)
    horizons = thetas if thetas else (3, 4)
    start = _parse_date_option(eval_start, "eval-start")
    end = _parse_date_option(eval_end, "eval-end")
    results = {}
    for horizon in horizons:
        cfg = EvalConfig(horizon_days=horizon, aggregate=aggregate)
        results[horizon] = compare_policies(
            log, model, table, cfg, eval_start=start, eval_end=end
        )
    written = write_report(results, report_dir)
    click.echo(format_summary_table(results))
    for name in sorted(written):
        click.echo(f"{name}: {written[name]}")


@cli.command()
@click.option("--model", "model_path", required=True, type=click.Path())
@click.option("--costs", "costs_path", type=click.Path(), default=None,
              help="Validate at startup that every logged defect is priced.")
@click.option("--log", "log_path", type=click.Path(), default=None)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
@click.option("--journal", "journal_path", type=click.Path(),
              default="decisions.jsonl", show_default=True)
def serve(
    model_path: str,
    costs_path: str | None,
    log_path: str | None,
    host: str,
    port: int,
    journal_path: str,
) -> None:
    """Serve the scoring API for the dashboard."""
    import uvicorn

    from .service import create_app

    model = load_model(model_path)
    log = load_transactions(log_path) if log_path else None
    if costs_path and log is not None:
        table = load_cost_table(costs_path)
        for row in log:
            state_repair_cost(table, row.state)
    app = create_app(model, log=log, journal_path=journal_path)
    uvicorn.run(app, host=host, port=port)


def main(argv: list[str] | None = None) -> int:
    """Entry point with the documented exit-code mapping."""
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.exceptions.Exit as exc:
        return int(exc.exit_code)
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return EXIT_VALIDATION
    except click.ClickException as exc:
        exc.show()
        return EXIT_VALIDATION
    except ValidationError as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_VALIDATION
    except OSError as exc:
        click.echo(f"io error: {exc}", err=True)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
