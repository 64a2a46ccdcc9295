"""Command-line entry point: one subcommand per registered experiment."""

import logging
import sys
from pathlib import Path

import click
from pydantic import ValidationError

from . import __version__, experiments
from .handling_error import EXIT_OK, HarmonicityError, handle
from .ops_config import ExperimentConfig, load_config
from .output import write_output
from .routers import ExperimentRouter, Route

logger = logging.getLogger(__name__)

app = ExperimentRouter()
app.include_router(experiments.router)


def run(cfg: ExperimentConfig) -> int:
    """Run one experiment and write its files; returns the process exit code."""
    try:
        route = app.get(cfg.experiment)
        output = route.handler(cfg)
        write_output(Path(cfg.out), cfg.experiment.value, output, cfg.model_dump(mode="json"), cfg.config_hash)
    except (HarmonicityError, ValidationError) as exc:
        return handle(exc)
    return EXIT_OK


def parse_overrides(args: list[str]) -> dict[str, str]:
    """``--key value`` and ``--key=value`` pairs left over after click's own options."""
    overrides = {}
    tokens = iter(args)
    for token in tokens:
        if not token.startswith("--"):
            raise click.UsageError(f"unexpected argument {token!r}")
        key = token[2:]
        if "=" in key:
            key, value = key.split("=", 1)
        else:
            value = next(tokens, None)
            if value is None:
                raise click.UsageError(f"missing value for --{key}")
        overrides[key] = value
    return overrides


def _command(route: Route) -> click.Command:
    @click.command(
        name=route.experiment.value,
        help=route.help_text + "\n\nAny config key can be overridden with --key value.",
        context_settings={"ignore_unknown_options": True, "allow_extra_args": True},
    )
    @click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None, help="key=value config file.")
    @click.option("--out", default=None, help="Output directory.")
    @click.option("--seed", type=int, default=None, help="Seed for Monte Carlo sphere rules and random pairs.")
    @click.option("--dump-grid", is_flag=True, help="Also write the T_p grid values.")
    @click.pass_context
    def command(ctx: click.Context, config_path, out, seed, dump_grid):
        overrides = parse_overrides(ctx.args)
        overrides.update({"out": out, "seed": seed})
        if dump_grid:
            overrides["dump_grid"] = True
        try:
            cfg = load_config(route.experiment, config_path, overrides)
        except (HarmonicityError, ValidationError) as exc:
            ctx.exit(handle(exc))
        logger.info("running %s with config %s", route.experiment.value, cfg.config_hash[:12])
        ctx.exit(run(cfg))

    return command


@click.group()
@click.option("--verbose", "-v", is_flag=True, help="Debug logging.")
@click.version_option(__version__, prog_name="harmonic-approx")
def cli(verbose: bool):
    """Experiments on the harmonicity modulus and polyharmonic approximation."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        stream=sys.stderr,
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )


for _route in app.routes.values():
    cli.add_command(_command(_route))


if __name__ == "__main__":
    cli()
