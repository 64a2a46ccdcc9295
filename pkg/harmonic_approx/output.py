"""CSV tables, grid dumps and the JSON-lines run manifest."""

import csv
import json
import logging
import platform
from importlib import metadata
from pathlib import Path

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from .field_domain import GridField

logger = logging.getLogger(__name__)

_VERSIONED = ("numpy", "scipy", "pydantic", "click", "python-dotenv")


class Table(BaseModel):
    columns: list[str]
    rows: list[dict] = []
    header_lines: list[str] = []


class ExperimentOutput(BaseModel):
    """Tables, grids and headline results produced by one experiment handler."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    tables: dict[str, Table]
    grids: dict[str, GridField] = {}
    timings: dict[str, float] = Field(default_factory=dict)
    results: dict = Field(default_factory=dict)


def format_value(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return "%.17g" % float(value)
    return "" if value is None else str(value)


def _manifest_line(config_hash: str, experiment: str) -> str:
    return f"# manifest: config_hash={config_hash}, experiment={experiment}"


def write_csv(path: Path, table: Table, config_hash: str, experiment: str) -> Path:
    with open(path, "w", newline="") as handle:
        handle.write(_manifest_line(config_hash, experiment) + "\n")
        for line in table.header_lines:
            handle.write(f"# {line}\n")
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(table.columns)
        for row in table.rows:
            writer.writerow([format_value(row.get(column)) for column in table.columns])
    return path


def write_grid_csv(path: Path, grid: GridField, config_hash: str, experiment: str) -> Path:
    """Row-major values, one line per run of the last axis."""
    origin = ";".join(format_value(o) for o in grid.origin)
    dims = "x".join(str(d) for d in grid.shape)
    with open(path, "w", newline="") as handle:
        handle.write(_manifest_line(config_hash, experiment) + "\n")
        handle.write(f"# origin={origin}, spacing={format_value(grid.spacing)}, dims={dims}\n")
        writer = csv.writer(handle, lineterminator="\n")
        for line in np.asarray(grid.values).reshape(-1, grid.shape[-1]):
            writer.writerow([format_value(v) for v in line])
    return path


def package_versions() -> dict[str, str]:
    versions = {"python": platform.python_version()}
    for name in ("harmonic-approx",) + _VERSIONED:
        try:
            versions[name] = metadata.version(name)
        except metadata.PackageNotFoundError:
            versions[name] = "unknown"
    return versions


def write_manifest(path: Path, record: dict) -> Path:
    with open(path, "a") as handle:
        handle.write(json.dumps(record, sort_keys=True) + "\n")
    return path


def write_output(out_dir: Path, experiment: str, output: ExperimentOutput, config_echo: dict, config_hash: str) -> list[Path]:
    """Write every table and grid of ``output`` plus one manifest record."""
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for name, table in output.tables.items():
        stem = experiment if name == experiment else f"{experiment}_{name}"
        written.append(write_csv(out_dir / f"{stem}.csv", table, config_hash, experiment))
    for name, grid in output.grids.items():
        written.append(write_grid_csv(out_dir / f"{experiment}_grid_{name}.csv", grid, config_hash, experiment))
    manifest = write_manifest(
        out_dir / f"{experiment}_manifest.jsonl",
        {
            "experiment": experiment,
            "config": config_echo,
            "config_hash": config_hash,
            "versions": package_versions(),
            "timings": output.timings,
            "files": [p.name for p in written],
            **output.results,
        },
    )
    logger.info("wrote %d files to %s", len(written) + 1, out_dir)
    return written + [manifest]
