"""Bit-exact data files: '#'-prefixed provenance headers plus CSV/JSON rows.

Numbers are serialized as their shortest round-trip decimal (Python repr),
so read-then-write reproduces a file byte for byte.  Column schemas are
fixed per file kind:

    fringe:    alpha_rad_s2, population
    contrast:  t_s, contrast, sigma_c
    exclusion: r_c_m, lambda_s, source
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

__all__ = ["COLUMNS", "DataFile", "SchemaError", "read_data_file", "write_data_file"]

COLUMNS = {
    "fringe": ("alpha_rad_s2", "population"),
    "contrast": ("t_s", "contrast", "sigma_c"),
    "exclusion": ("r_c_m", "lambda_s", "source"),
}

# columns holding strings rather than numbers
_TEXT_COLUMNS = {"source"}


class SchemaError(ValueError):
    """File does not match the fixed schema for its kind."""


@dataclass(frozen=True)
class DataFile:
    kind: str
    header: dict[str, str]
    rows: tuple[tuple, ...]


def _fmt(value) -> str:
    if isinstance(value, float):  # includes numpy float scalars
        return repr(float(value))
    return str(value)


def _check_rows(kind: str, rows, source: str) -> tuple[tuple, ...]:
    cols = COLUMNS[kind]
    out = []
    for i, row in enumerate(rows):
        if len(row) != len(cols):
            raise SchemaError(
                f"{source}: row {i + 1}: expected {len(cols)} columns "
                f"({', '.join(cols)}), got {len(row)}"
            )
        out.append(tuple(row))
    return tuple(out)


def write_data_file(path, kind: str, header: dict, rows, fmt: str = "csv") -> None:
    """Write rows of the given kind with a provenance header."""
    if kind not in COLUMNS:
        raise SchemaError(f"unknown file kind: {kind!r}")
    rows = _check_rows(kind, rows, str(path))
    cols = COLUMNS[kind]
    header_str = {str(k): _fmt(v) for k, v in header.items()}
    path = Path(path)
    if fmt == "json":
        payload = {
            "kind": kind,
            "header": header_str,
            "columns": list(cols),
            "rows": [
                [float(v) if isinstance(v, float) else v for v in r] for r in rows
            ],
        }
        path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
        return
    if fmt != "csv":
        raise ValueError(f"unknown format: {fmt!r}")
    lines = [f"# kind={kind}", f"# columns={','.join(cols)}"]
    lines += [f"# {k}={v}" for k, v in header_str.items()]
    lines += [",".join(_fmt(v) for v in row) for row in rows]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _parse_cell(column: str, text: str, source: str, lineno: int):
    if column in _TEXT_COLUMNS:
        return text
    try:
        return float(text)
    except ValueError:
        raise SchemaError(
            f"{source}: line {lineno}: column {column!r} is not a number: {text!r}"
        ) from None


def read_data_file(path, kind: str | None = None) -> DataFile:
    """Parse a data file (CSV or JSON form), validating its schema."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if not text.strip():
        raise SchemaError(f"{path}: empty file")
    if text.lstrip().startswith("{"):
        payload = json.loads(text)
        file_kind = payload.get("kind")
        if file_kind not in COLUMNS:
            raise SchemaError(f"{path}: unknown file kind: {file_kind!r}")
        if kind is not None and file_kind != kind:
            raise SchemaError(f"{path}: expected kind {kind!r}, found {file_kind!r}")
        if tuple(payload.get("columns", ())) != COLUMNS[file_kind]:
            raise SchemaError(f"{path}: column list does not match kind {file_kind!r}")
        rows = _check_rows(file_kind, payload.get("rows", []), str(path))
        cols = COLUMNS[file_kind]
        for i, row in enumerate(rows):
            for col, cell in zip(cols, row):
                want_text = col in _TEXT_COLUMNS
                if want_text != isinstance(cell, str) or (
                    not want_text and isinstance(cell, bool)
                ):
                    raise SchemaError(
                        f"{path}: row {i + 1}: column {col!r} has wrong type: {cell!r}"
                    )
        rows = tuple(
            tuple(c if isinstance(c, str) else float(c) for c in row) for row in rows
        )
        return DataFile(file_kind, dict(payload.get("header", {})), rows)

    header: dict[str, str] = {}
    rows = []
    file_kind = None
    columns: tuple[str, ...] | None = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if "=" not in body:
                raise SchemaError(f"{path}: line {lineno}: malformed header line")
            key, value = body.split("=", 1)
            if key == "kind":
                file_kind = value
                if file_kind not in COLUMNS:
                    raise SchemaError(
                        f"{path}: line {lineno}: unknown file kind: {value!r}"
                    )
            elif key == "columns":
                columns = tuple(value.split(","))
            else:
                header[key] = value
            continue
        if file_kind is None:
            raise SchemaError(f"{path}: line {lineno}: data before '# kind=' header")
        cols = COLUMNS[file_kind]
        cells = line.split(",")
        if len(cells) != len(cols):
            raise SchemaError(
                f"{path}: line {lineno}: expected {len(cols)} columns "
                f"({', '.join(cols)}), got {len(cells)}"
            )
        rows.append(
            tuple(
                _parse_cell(col, cell, str(path), lineno)
                for col, cell in zip(cols, cells)
            )
        )
    if file_kind is None:
        raise SchemaError(f"{path}: missing '# kind=' header")
    if columns is not None and columns != COLUMNS[file_kind]:
        raise SchemaError(f"{path}: column list does not match kind {file_kind!r}")
    if kind is not None and file_kind != kind:
        raise SchemaError(f"{path}: expected kind {kind!r}, found {file_kind!r}")
    return DataFile(file_kind, header, tuple(rows))
