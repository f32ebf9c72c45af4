"""Command-line entry points: serve, replay, analyze, validate-catalog."""

from __future__ import annotations

from pathlib import Path

import click

from .analytics import (
    PHASES,
    PhaseSpan,
    bug_stats,
    bug_counts_from_log,
    interaction_table,
)
from .config import ConfigError, load_config
from .eventlog import load_log
from .knowledge import CatalogError, load_catalog
from .reporting import render_bug_text, render_interaction_text, write_outputs
from .transcript import load_script, run_transcript


@click.group()
def main() -> None:
    """Exploratory-testing chat assistant."""


_CONFIG_OPTIONS = [
    click.option("--config", "config_path", type=click.Path(exists=True), default=None,
                 help="YAML config file (flags win over env, env over file)."),
    click.option("--store", "store_path", default=None, help="Audit-log file path."),
    click.option("--catalog", "catalog_path", default=None, help="Knowledge catalog file."),
    click.option("--seed", type=int, default=None, help="Seed for the suggestion scheduler."),
]


def _with_config_options(fn):
    for option in reversed(_CONFIG_OPTIONS):
        fn = option(fn)
    return fn


def _load(config_path, **overrides):
    try:
        return load_config(config_path, **overrides)
    except ConfigError as exc:
        raise click.ClickException(str(exc)) from exc


@main.command()
@_with_config_options
@click.option("--host", default=None)
@click.option("--port", type=int, default=None)
@click.option("--ui", "ui_dir", type=click.Path(exists=True, file_okay=False), default=None,
              help="Serve a built web client from this directory.")
def serve(config_path, store_path, catalog_path, seed, host, port, ui_dir) -> None:
    """Start the WebSocket gateway and engine."""
    config = _load(
        config_path,
        store_path=store_path,
        catalog_path=catalog_path,
        seed=seed,
        host=host,
        port=port,
    )
    from .server import serve as run_server

    click.echo(f"listening on ws://{config.host}:{config.port}/ws")
    run_server(config, ui_dir=ui_dir)


@main.command()
@_with_config_options
@click.argument("transcripts", nargs=-1, required=True, type=click.Path(exists=True))
@click.option("--save-log", type=click.Path(), default=None,
              help="Write the audit log of the last transcript to this file.")
def replay(config_path, store_path, catalog_path, seed, transcripts, save_log) -> None:
    """Run golden transcripts against a fresh engine."""
    config = _load(config_path, catalog_path=catalog_path, seed=seed)
    failures = 0
    result = None
    for path in transcripts:
        script = load_script(path)
        result = run_transcript(script, config)
        status = "PASS" if result.passed else "FAIL"
        click.echo(f"{status} {path}: {result.summary()}")
        if not result.passed:
            failures += 1
    if save_log and result is not None:
        Path(save_log).write_text(result.store.serialize(), encoding="utf-8")
        click.echo(f"audit log written to {save_log}")
    if failures:
        raise SystemExit(1)


def _parse_phase(_ctx, _param, values) -> list[PhaseSpan] | None:
    if not values:
        return None
    spans = []
    for value in values:
        try:
            name, _, span = value.partition("=")
            start_s, _, end_s = span.partition(":")
            if name not in PHASES:
                raise ValueError(f"phase must be one of {', '.join(PHASES)}")
            spans.append(
                PhaseSpan(name, int(start_s), int(end_s) if end_s else None)
            )
        except ValueError as exc:
            raise click.BadParameter(f"{value!r}: {exc}") from exc
    return spans


@main.command()
@click.argument("log_path", type=click.Path(exists=True))
@click.option("--phase", "phases", multiple=True, callback=_parse_phase,
              help="Phase span as name=start:end offsets, e.g. training=0:120. "
                   "Repeatable; default derives phases from session records.")
@click.option("--out", "outdir", type=click.Path(file_okay=False), default=None,
              help="Write CSV/JSON tables and figures into this directory.")
@click.option("--figures/--no-figures", default=True, show_default=True)
def analyze(log_path, phases, outdir, figures) -> None:
    """Interaction table and bug statistics for an audit log."""
    records = load_log(log_path)
    table = interaction_table(records, phases)
    counts = bug_counts_from_log(records)
    stats = bug_stats(sorted(counts.values()))
    click.echo(render_interaction_text(table))
    click.echo("")
    click.echo(render_bug_text(stats))
    if outdir:
        written = write_outputs(table, stats, Path(outdir), figures=figures)
        for path in written:
            click.echo(f"wrote {path}")


@main.command("validate-catalog")
@click.argument("catalog_file", type=click.Path(exists=True))
def validate_catalog(catalog_file) -> None:
    """Check a knowledge-catalog file; exit non-zero on problems."""
    try:
        catalog = load_catalog(catalog_file)
    except CatalogError as exc:
        click.echo(f"INVALID: {exc}", err=True)
        raise SystemExit(1)
    groups = {g.value: 0 for g in {item.group for item in catalog.items}}
    for item in catalog.items:
        groups[item.group.value] += 1
    summary = ", ".join(f"{count} {name}" for name, count in sorted(groups.items()))
    click.echo(f"OK: {len(catalog.items)} items ({summary}), version {catalog.version}")


if __name__ == "__main__":
    main()
