# vmbwaves/ui/report.py
# Rich tables for the console and the CSV/JSON artifacts written next to them.
import csv
import json
from pathlib import Path

import numpy as np
from rich.console import Console
from rich.table import Table

SCHEMA_VERSION = "1"

console = Console()


def _plain(value):
    if isinstance(value, dict):
        return {str(key): _plain(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(item) for item in value]
    if isinstance(value, np.ndarray):
        return _plain(value.tolist())
    if isinstance(value, (complex, np.complexfloating)):
        return {"re": float(value.real), "im": float(value.imag)}
    if isinstance(value, np.generic):
        return value.item()
    return value


def write_json(path: Path, payload: dict, config_hash: str) -> Path:
    """JSON artifact stamped with the schema version and the run config hash."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    document = {"schema": SCHEMA_VERSION, "config_hash": config_hash, **_plain(payload)}
    path.write_text(json.dumps(document, indent=2))
    return path


def write_csv(path: Path, rows: list[dict], config_hash: str) -> Path:
    """CSV artifact; the first line is a '# schema=..., config=...' comment."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    columns = list(rows[0]) if rows else []
    with path.open("w", newline="") as handle:
        handle.write(f"# schema={SCHEMA_VERSION} config={config_hash}\n")
        writer = csv.DictWriter(handle, fieldnames=columns)
        writer.writeheader()
        for row in rows:
            writer.writerow({key: _cell(value) for key, value in row.items()})
    return path


def _cell(value):
    if isinstance(value, (complex, np.complexfloating)):
        return f"{value.real:.12g}{value.imag:+.12g}j"
    if isinstance(value, (float, np.floating)):
        return f"{value:.12g}"
    return value


def _format(value) -> str:
    if isinstance(value, (complex, np.complexfloating)):
        return f"{value.real:.6g}{value.imag:+.6g}i"
    if isinstance(value, (float, np.floating)):
        return f"{value:.6g}"
    return str(value)


def key_value_table(title: str, values: dict) -> Table:
    table = Table(title=title, show_header=True, header_style="bold cyan")
    table.add_column("Quantity")
    table.add_column("Value", justify="right")
    for key, value in values.items():
        table.add_row(str(key), _format(value))
    return table


def rows_table(title: str, rows: list[dict], limit: int = 20) -> Table:
    """First `limit` rows of a row list; the caption says how many were left out."""
    table = Table(title=title, show_header=True, header_style="bold cyan")
    if not rows:
        return table
    for column in rows[0]:
        table.add_column(str(column), justify="right")
    for row in rows[:limit]:
        table.add_row(*(_format(value) for value in row.values()))
    if len(rows) > limit:
        table.caption = f"{len(rows) - limit} more rows in the CSV artifact"
    return table


def checks_table(results: list[dict]) -> Table:
    """Pass/fail summary of verify-all."""
    table = Table(title="Acceptance checks", show_header=True, header_style="bold cyan")
    table.add_column("Check")
    table.add_column("Measured", justify="right")
    table.add_column("Target")
    table.add_column("Status")
    for result in results:
        status = "[green]pass[/green]" if result["passed"] else "[bold red]fail[/bold red]"
        table.add_row(result["name"], _format(result["measured"]), result["target"], status)
    return table
