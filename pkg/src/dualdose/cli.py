"""Command-line interface: simulate, decide, boundaries, sensitivity, serve."""

from __future__ import annotations

import csv
import json
import os
import sys
from fractions import Fraction

import click

from .boindc import BoinDcConfig, decision_table
from .core import EndpointSpec, state_from_json
from .simulate import (
    DESIGNS,
    SimConfig,
    builtin_scenarios,
    load_scenario,
    run_batch,
    sensitivity_suite,
)
from .titedc import McmcConfig
from .service import recommend


def _env_seed(default: int = 0) -> int:
    return int(os.environ.get("DUALDOSE_SEED", default))


def _parse_weights(text: str) -> tuple[float, ...]:
    parts = [Fraction(p.strip()) for p in text.split(",")]
    if len(parts) != 3 or any(p < 0 for p in parts) or sum(parts) == 0:
        raise click.BadParameter(
            "weights must be three nonnegative numbers, e.g. '1/3,1/3,1/3'")
    total = sum(parts)
    return tuple(float(p / total) for p in parts)


@click.group()
def main():
    """Dual-criterion dose-finding tools."""


@main.command()
@click.option("--scenario", required=True,
              help="Built-in scenario name (e.g. scenario1) or a JSON file.")
@click.option("--design", type=click.Choice(DESIGNS), default="tite-boin-dc",
              show_default=True)
@click.option("--reps", type=click.IntRange(min=1), default=1000,
              show_default=True)
@click.option("--seed", type=int, default=None,
              help="Master seed (default: DUALDOSE_SEED or 0).")
@click.option("--max-n", type=click.IntRange(min=1), default=30,
              show_default=True)
@click.option("--cohort-size", type=click.IntRange(min=1), default=3,
              show_default=True)
@click.option("--accrual-rate", type=float, default=0.1, show_default=True,
              help="Mean enrollments per day.")
@click.option("--phi-t", type=float, default=0.25, show_default=True)
@click.option("--phi-r", type=float, default=0.50, show_default=True)
@click.option("--window-t", type=float, default=21.0, show_default=True)
@click.option("--window-r", type=float, default=63.0, show_default=True)
@click.option("--jobs", type=int, default=1, show_default=True)
@click.option("--out-prefix", type=str, default=None,
              help="Write <prefix>.json and <prefix>.csv instead of stdout.")
def simulate(scenario, design, reps, seed, max_n, cohort_size, accrual_rate,
             phi_t, phi_r, window_t, window_r, jobs, out_prefix):
    """Estimate operating characteristics by Monte Carlo simulation."""
    try:
        scn = load_scenario(scenario)
    except (ValueError, FileNotFoundError, json.JSONDecodeError) as exc:
        raise click.UsageError(f"cannot load scenario {scenario!r}: {exc}")
    config = SimConfig(
        design=design, cohort_size=cohort_size, max_n=max_n,
        accrual_rate=accrual_rate, n_replicates=reps,
        seed=_env_seed(0) if seed is None else seed,
        dlt=EndpointSpec(phi_t, window_t),
        intolerance=EndpointSpec(phi_r, window_r),
        n_jobs=jobs,
    )
    oc = run_batch(scn, config)
    doc = oc.to_json()
    doc["scenario"] = scn.to_json()
    doc["design"] = design
    doc["seed"] = config.seed
    if out_prefix:
        with open(out_prefix + ".json", "w") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
        with open(out_prefix + ".csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            for row in oc.csv_rows():
                writer.writerow(row)
        click.echo(f"wrote {out_prefix}.json and {out_prefix}.csv")
    else:
        click.echo(json.dumps(doc, indent=2, sort_keys=True))


@main.command()
@click.option("--trial", "trial_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Trial document or bare state JSON file.")
@click.option("--draws", type=click.IntRange(min=1), default=2000,
              show_default=True, help="Retained posterior draws (tite-dc).")
@click.option("--burn-in", type=click.IntRange(min=1), default=1000,
              show_default=True)
@click.option("--seed", type=int, default=None)
def decide(trial_path, draws, burn_in, seed):
    """Print the interim dose decision for a saved trial."""
    with open(trial_path) as fh:
        doc = json.load(fh)
    if "state" not in doc:  # bare state file: wrap with default config
        doc = {"config": {"design": doc.pop("design", "tite-boin-dc"), **doc},
               "state": doc}
    try:
        state_from_json(doc["state"])
    except (ValueError, KeyError) as exc:
        raise click.UsageError(f"invalid trial state: {exc}")
    mcmc = McmcConfig(burn_in=burn_in, retained=draws,
                      seed=_env_seed(0) if seed is None else seed)
    out = recommend(doc, mcmc)
    click.echo(json.dumps(out, indent=2, sort_keys=True))


@main.command()
@click.option("--phi-t", type=float, default=0.25, show_default=True)
@click.option("--phi-r", type=float, default=0.50, show_default=True)
@click.option("--max-n", type=click.IntRange(min=1, max=60), default=12,
              show_default=True)
@click.option("--format", "fmt", type=click.Choice(["csv", "markdown"]),
              default="csv", show_default=True)
def boundaries(phi_t, phi_r, max_n, fmt):
    """Print the escalation/de-escalation decision table."""
    try:
        config = BoinDcConfig(dlt=EndpointSpec(phi_t, 21.0),
                              intolerance=EndpointSpec(phi_r, 63.0))
        rows = decision_table(config, max_n)
    except ValueError as exc:
        raise click.UsageError(str(exc))
    header = ["endpoint", "n_treated", "n_events", "action", "eliminate"]
    if fmt == "csv":
        writer = csv.writer(sys.stdout)
        writer.writerow(header)
        for row in rows:
            writer.writerow([row[h] for h in header])
    else:
        click.echo("| " + " | ".join(header) + " |")
        click.echo("|" + "---|" * len(header))
        for row in rows:
            click.echo("| " + " | ".join(str(row[h]) for h in header) + " |")


@main.command()
@click.option("--scenario", required=True)
@click.option("--design", type=click.Choice(DESIGNS), default="tite-boin-dc",
              show_default=True)
@click.option("--reps", type=click.IntRange(min=1), default=1000,
              show_default=True)
@click.option("--seed", type=int, default=None)
@click.option("--weights", "weight_specs", multiple=True,
              help="Intolerance event-time weights per cycle, e.g. "
                   "'1/7,2/7,4/7'. Repeatable.")
@click.option("--accrual-rates", type=str, default=None,
              help="Comma-separated accrual rates to sweep.")
@click.option("--jobs", type=int, default=1, show_default=True)
@click.option("--out", "out_path", type=str, default=None)
def sensitivity(scenario, design, reps, seed, weight_specs, accrual_rates,
                jobs, out_path):
    """Re-run a scenario under alternative event-time and accrual settings."""
    try:
        scn = load_scenario(scenario)
    except (ValueError, FileNotFoundError, json.JSONDecodeError) as exc:
        raise click.UsageError(f"cannot load scenario {scenario!r}: {exc}")
    weights = [_parse_weights(w) for w in weight_specs]
    rates = []
    if accrual_rates:
        try:
            rates = [float(r) for r in accrual_rates.split(",")]
        except ValueError:
            raise click.UsageError("accrual rates must be numbers")
        if any(r <= 0 for r in rates):
            raise click.UsageError("accrual rates must be positive")
    config = SimConfig(design=design, n_replicates=reps,
                       seed=_env_seed(0) if seed is None else seed,
                       n_jobs=jobs)
    report = sensitivity_suite(scn, config, weight_variants=weights,
                               accrual_rates=rates)
    text = json.dumps(report, indent=2, sort_keys=True)
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text + "\n")
        click.echo(f"wrote {out_path}")
    else:
        click.echo(text)


@main.command()
@click.option("--data-dir", type=str, default=None,
              help="Trial document directory (default: DUALDOSE_DATA_DIR).")
@click.option("--host", type=str, default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
def serve(data_dir, host, port):
    """Run the trial-conduct HTTP service."""
    from .service import serve as run_server

    run_server(data_dir, host, port)


@main.command("scenarios")
def list_scenarios():
    """List bundled simulation scenarios."""
    for name, scn in sorted(builtin_scenarios().items()):
        click.echo(f"{name}: true MTD d{scn.true_mtd}, "
                   f"DLT {list(scn.dlt_probs)}, "
                   f"intolerance {list(scn.intol_probs)}")


if __name__ == "__main__":
    main()
