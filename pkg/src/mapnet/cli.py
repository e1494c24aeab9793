"""cli"""

from __future__ import annotations
from collections.abc import Callable
from functools import wraps
from typing import Any
import logging
import sys

import click

from mapnet import __version__
from mapnet.config import MapnetConfig
from mapnet.errors import MapnetError
from mapnet.experiments import (
    RunPaths,
    load_curves,
    render_summary,
    run_dynamic_comparison,
    run_generalization_eval,
    run_trace,
    run_training,
    summarize,
)
from mapnet.federation import Regime
from mapnet.plots import emit_plots
from mapnet.records import read_records


_REGIMES = [r.value for r in Regime]


def _config_options(func: Callable[..., Any]) -> Callable[..., Any]:
    func = click.option("-v", "--verbose", is_flag=True, help="Debug logging")(func)
    func = click.option(
        "-s",
        "--set",
        "overrides",
        multiple=True,
        metavar="KEY=VALUE",
        help="Override a config key, e.g. --set placement.total_steps=5000",
    )(func)
    func = click.option("-c", "--config", help="Path to config toml", type=str, required=False)(func)
    return func


def _handle_errors(func: Callable[..., Any]) -> Callable[..., Any]:
    @wraps(func)
    def wrapper(*args: Any, **kwargs: Any) -> Any:
        try:
            return func(*args, **kwargs)
        except MapnetError as e:
            click.secho(f"{type(e).__name__}: {e}", fg="red", err=True)
            sys.exit(e.exit_code)

    return wrapper


def _load_config(config: str | None, overrides: tuple[str, ...], verbose: bool) -> MapnetConfig:
    """Defaults, then the toml file, then every --set; exits with the config errors when invalid"""

    logging.basicConfig(level=logging.DEBUG if verbose else logging.INFO, format="%(levelname)s: %(message)s")

    _config = MapnetConfig()
    if config is not None:
        _config = MapnetConfig.load_toml(toml=config)

    for item in overrides:
        key, sep, value = item.partition("=")
        if not sep:
            raise click.BadParameter(f"expected KEY=VALUE, got {item!r}", param_hint="--set")
        _config = _config.override(key.strip(), value.strip())

    config_errors = _config.validate()
    if config_errors is not None:
        click.secho("CONFIG ERRORS:", bold=True)
        click.echo("\n".join([str(e.args) for e in config_errors]))
        sys.exit(1)

    return _config


def _banner(action: str, config: MapnetConfig) -> None:
    experiment = config.experiment
    click.echo(f"Starting {action} with the following settings:")
    click.echo(f"  name        = {experiment.name}")
    click.echo(f"  output      = {RunPaths.from_config(config).root}")
    click.echo(f"  regimes     = {', '.join(experiment.regimes)}")
    click.echo(f"  workers     = {experiment.workers}")
    click.echo(f"  seed        = {experiment.seed}")
    click.echo(f"  config hash = {config.config_hash()[:12]}")


@click.version_option(version=__version__)
@click.group()
def cli():
    pass


@cli.command()
@_config_options
@click.option("-r", "--regime", "regimes", multiple=True, type=click.Choice(_REGIMES), help="Regimes to train")
@click.option("--resume", is_flag=True, help="Continue from the last saved batch")
@click.option("--steps", type=int, default=None, help="Agent step budget per run")
@_handle_errors
def train(
    config: str | None,
    overrides: tuple[str, ...],
    verbose: bool,
    regimes: tuple[str, ...],
    resume: bool,
    steps: int | None,
) -> None:
    """
    Train the placement policies of every regime (codebook, curriculum, federated) and save them as policy
    registries under <output_dir>/<name>/policies.
    """

    _config = _load_config(config, overrides, verbose)
    _banner("training", _config)
    registries = run_training(_config, regimes=list(regimes) or None, resume=resume, total_steps=steps)
    for name, registry in registries.items():
        click.echo(f"  {name:<11} {len(registry)} policies, O_c = {registry.complexity}")
    click.echo("Training complete.")


@cli.command(name="eval")
@_config_options
@_handle_errors
def evaluate(config: str | None, overrides: tuple[str, ...], verbose: bool) -> None:
    """
    Evaluate the trained regimes on seeded mobile scenarios and print E[R] and E[eta] per regime and M_s.
    """

    _config = _load_config(config, overrides, verbose)
    _banner("evaluation", _config)
    rows = run_generalization_eval(_config)
    click.echo(render_summary(summarize(rows, by=("arm",))))
    click.echo()
    click.echo(render_summary(summarize(rows)))


@cli.command()
@_config_options
@_handle_errors
def compare(config: str | None, overrides: tuple[str, ...], verbose: bool) -> None:
    """
    Paired comparison of the fixed codebook baseline against the codebook and the federated policy with dynamic
    MAP management.
    """

    _config = _load_config(config, overrides, verbose)
    _banner("comparison", _config)
    report = run_dynamic_comparison(_config)
    click.secho(f"Paired seeds: {report['seeds']}", bold=True)
    for arm, entry in sorted(report["arms"].items()):
        line = f"  {arm:<20} E[R] {entry['sum_rate'] / 1e9:8.4f} Gbps   E[eta] {entry['eta'] / 1e9:8.4f}"
        if "wins" in entry:
            delta = entry["delta_sum_rate"]
            line += f"   dR {delta:+.1%}" if delta is not None else "   dR n/a"
            line += f"   wins {entry['wins']:.0%}"
        click.echo(line)


@cli.command()
@_config_options
@click.option("-r", "--regime", type=click.Choice(_REGIMES), default=Regime.FEDERATED.value, show_default=True)
@click.option("--seed", type=int, default=None, help="Scenario seed")
@click.option("--dynamic/--fixed", default=None, help="Trade-off controller on or off")
@_handle_errors
def trace(
    config: str | None,
    overrides: tuple[str, ...],
    verbose: bool,
    regime: str,
    seed: int | None,
    dynamic: bool | None,
) -> None:
    """
    Run one episode with every network constraint asserted on every slot and print each slot.
    """

    _config = _load_config(config, overrides, verbose)
    rows = run_trace(_config, regime=regime, seed=seed, dynamic=dynamic)
    for row in rows:
        decisions = " ".join(f"{d['kind']}:{d['map']}" for d in row["decisions"])
        click.echo(
            f"t={row['t']:>4} M_s={row['deployed']} connected={row['connected']:>3}"
            f" R={row['sum_rate'] / 1e9:8.4f} Gbps {decisions}"
        )
    click.secho(f"{len(rows)} slots, no constraint violated", fg="green")


@cli.command()
@_config_options
@click.option("-k", "--kind", type=click.Choice(["eval", "compare"]), default="eval", show_default=True)
@_handle_errors
def plot(config: str | None, overrides: tuple[str, ...], verbose: bool, kind: str) -> None:
    """
    Render the training curves and the evaluation bar charts of a run.
    """

    _config = _load_config(config, overrides, verbose)
    paths = RunPaths.from_config(_config)
    rows: list[dict[str, Any]] = []
    if paths.records(kind).exists():
        _, rows = read_records(paths.records(kind))

    written = emit_plots(rows, load_curves(_config), paths.plots, window=_config.placement.curve_window)
    for path in written:
        click.echo(f"  {path}")
