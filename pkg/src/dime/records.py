"""Serialization of result rows.

Rows are dataclass instances or plain dicts with scalar fields.  Floats are
written with ``repr`` (the shortest string that round-trips), so a file can
be re-read without loss.  Files are written atomically: a temporary file in
the target directory is renamed over the destination.
"""

import csv
import dataclasses
import io
import json
import os
import tempfile
from pathlib import Path

FORMATS = ("csv", "jsonl")


class MetaFormatError(ValueError):
    """A metadata sidecar is not a valid run record."""


def as_dict(row):
    if dataclasses.is_dataclass(row):
        return {f.name: getattr(row, f.name) for f in dataclasses.fields(row)}
    return dict(row)


def _scalar(value):
    if hasattr(value, "item"):  # numpy scalar
        value = value.item()
    if isinstance(value, bool):
        return int(value)
    return value


def format_value(value):
    value = _scalar(value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def render(rows, fmt="csv"):
    """Serialize rows to text in ``fmt`` (``csv`` or ``jsonl``)."""
    if fmt not in FORMATS:
        raise ValueError(f"unknown output format {fmt!r}")
    dicts = [as_dict(r) for r in rows]
    buf = io.StringIO()
    if fmt == "csv":
        if not dicts:
            return ""
        writer = csv.writer(buf, lineterminator="\n")
        header = list(dicts[0])
        writer.writerow(header)
        for d in dicts:
            writer.writerow([format_value(d[k]) for k in header])
    else:
        for d in dicts:
            buf.write(json.dumps({k: _scalar(v) for k, v in d.items()}))
            buf.write("\n")
    return buf.getvalue()


def atomic_write_text(path, text):
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def meta_path(path):
    """Sidecar path: same basename with the extension replaced by ``.meta.json``."""
    path = Path(path)
    return path.with_name(path.stem + ".meta.json")


def write_meta(path, command, config, version):
    record = {"command": command, "config": config, "version": version}
    atomic_write_text(meta_path(path), json.dumps(record, indent=2, sort_keys=True) + "\n")


def read_meta(path):
    with open(path, encoding="utf-8") as fh:
        try:
            record = json.load(fh)
        except json.JSONDecodeError as exc:
            raise MetaFormatError(f"{path} is not valid JSON: {exc}") from None
    if not isinstance(record, dict) or not isinstance(record.get("config"), dict) or "command" not in record:
        raise MetaFormatError(f"{path} lacks the 'command' and 'config' entries of a run record")
    return record


def check_writable(path):
    """Raise :class:`OSError` if ``path`` cannot be created or replaced."""
    path = Path(path)
    parent = path.parent if str(path.parent) else Path(".")
    if not parent.is_dir():
        raise OSError(f"output directory does not exist: {parent}")
    if path.is_dir():
        raise OSError(f"output path is a directory: {path}")
    if not os.access(parent, os.W_OK | os.X_OK):
        raise OSError(f"output directory is not writable: {parent}")
