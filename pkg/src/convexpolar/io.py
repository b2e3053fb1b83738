"""File formats: SampledFunction CSV, JSON documents, atomic writes."""

from __future__ import annotations

import csv
import io as _io
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from convexpolar.legendre import SampledFunction


class InputError(ValueError):
    """Malformed or unreadable input file."""


def atomic_write(path, text: str) -> None:
    """Write text to ``path`` via a temporary file and rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dumps_json(data) -> str:
    return json.dumps(data, indent=2, ensure_ascii=False, allow_nan=True) + "\n"


def write_json(path, data) -> None:
    atomic_write(path, dumps_json(data))


def read_json(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read JSON {path}: {exc}") from exc


def _fmt(x: float) -> str:
    return repr(float(x))


def csv_text(header: list, rows) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def read_sampled_function(path, prefix: str = "theta") -> SampledFunction:
    """Read columns ``theta_1..theta_n``, ``value``, optional ``grad_*`` and ``infinite``."""
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise InputError(f"{path}: no data rows")
    header = list(rows[0].keys())
    coords = sorted((c for c in header if c.startswith(prefix + "_")), key=lambda c: int(c.split("_")[1]))
    if not coords or "value" not in header:
        raise InputError(f"{path}: need columns {prefix}_1..{prefix}_n and value")
    n = len(coords)
    grads = [f"grad_{k}" for k in range(1, n + 1)]
    try:
        grid = np.array([[float(r[c]) for c in coords] for r in rows])
        inf = np.array([r.get("infinite", "0") in ("1", "true", "True") for r in rows])
        values = np.array([np.inf if flag else float(r["value"]) for r, flag in zip(rows, inf)])
        gradients = None
        if all(g in header for g in grads):
            gradients = np.array([[float(r[g]) for g in grads] for r in rows])
        # rows may come in any order; sort them lexicographically (C order for rectangular grids)
        order = np.lexsort(grid.T[::-1])
        grid, values, inf = grid[order], values[order], inf[order]
        if gradients is not None:
            gradients = gradients[order]
        axes = None
        if n > 1:
            uniq = [np.unique(grid[:, k]) for k in range(n)]
            if int(np.prod([u.size for u in uniq])) == len(rows):
                axes = tuple(uniq)
        return SampledFunction(grid, values, gradients=gradients, infinite=inf, axes=axes)
    except (TypeError, ValueError, KeyError) as exc:
        raise InputError(f"{path}: {exc}") from exc


def sampled_function_csv(f: SampledFunction, prefix: str = "theta", gradients: bool = True) -> str:
    n = f.n
    header = [f"{prefix}_{k}" for k in range(1, n + 1)] + ["value"]
    with_grad = gradients and f.gradients is not None
    if with_grad:
        header += [f"grad_{k}" for k in range(1, n + 1)]
    with_inf = bool(np.any(f.infinite))
    if with_inf:
        header.append("infinite")
    rows = []
    for i in range(len(f)):
        row = list(f.grid[i]) + [0.0 if f.infinite[i] else f.values[i]]
        if with_grad:
            row += list(f.gradients[i])
        if with_inf:
            row.append(int(f.infinite[i]))
        rows.append(row)
    return csv_text(header, rows)


def write_sampled_function(path, f: SampledFunction, prefix: str = "theta") -> None:
    atomic_write(path, sampled_function_csv(f, prefix))
