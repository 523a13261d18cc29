"""Command-line entry point: ``attractorlab run | check | report``."""

from __future__ import annotations

import json
import sys
import tempfile
from pathlib import Path

import click

from .errors import ConfigError
from .scenarios import KINDS, apply_overrides, emit_report, load_config, run_scenario


def _echo_manifest(man) -> None:
    click.echo(f"{man.kind}: status={man.status} wall_clock={man.wall_clock}s dir={man.directory}")
    for name, ok in sorted(man.verdicts.items()):
        click.echo(f"  {'PASS' if ok else 'FAIL'} {name}")
    if man.error:
        click.echo(f"  error: {man.error['type']}: {man.error['message']}", err=True)


@click.group()
@click.version_option(package_name="artifact")
def main() -> None:
    """Run scenario experiments and report their verdicts."""


@main.command()
@click.argument("config", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--set", "overrides", multiple=True, metavar="KEY=VALUE", help="Override a config entry (dotted keys).")
@click.option("--out", type=click.Path(file_okay=False, path_type=Path), default=None, help="Run directory.")
def run(config: Path, overrides: tuple, out: Path | None) -> None:
    """Run the scenario described by CONFIG (TOML)."""
    try:
        cfg = apply_overrides(load_config(config), list(overrides))
        man = run_scenario(cfg, out)
    except ConfigError as exc:
        raise click.ClickException(str(exc)) from exc
    _echo_manifest(man)
    sys.exit(0 if man.status == "ok" else 1)


@main.command()
@click.argument("kind", type=click.Choice(KINDS))
@click.option("--set", "overrides", multiple=True, metavar="KEY=VALUE")
@click.option("--out", type=click.Path(file_okay=False, path_type=Path), default=None)
def check(kind: str, overrides: tuple, out: Path | None) -> None:
    """Run KIND with its default configuration and fail unless every verdict passes."""
    try:
        cfg = apply_overrides(load_config(kind=kind), list(overrides))
        target = out or Path(tempfile.mkdtemp(prefix=f"attractorlab-{kind}-"))
        man = run_scenario(cfg, target)
    except ConfigError as exc:
        raise click.ClickException(str(exc)) from exc
    _echo_manifest(man)
    sys.exit(0 if man.passed else 1)


@main.command()
@click.argument("manifest", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default="json")
def report(manifest: Path, fmt: str) -> None:
    """Write the verdict report of a finished run next to its MANIFEST."""
    path = emit_report(manifest, fmt)
    click.echo(str(path))


if __name__ == "__main__":
    main()
