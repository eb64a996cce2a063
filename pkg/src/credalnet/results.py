"""Rendering bounds as plain text, JSON or CSV."""

from __future__ import annotations

import csv
import io
import json
from collections.abc import Sequence

import numpy as np

from .type1 import BoundsResult

FORMATS = ("plain", "json", "csv")


def _plain_line(r: BoundsResult) -> str:
    lo, hi = f"{r.lower:.6f}", f"{r.upper:.6f}"
    bounds = f"lower=upper={lo}" if lo == hi else f"lower={lo} upper={hi}"
    head = f"{r.label} " if r.label else ""
    return f"{head}[{r.method}] {bounds}" if r.method else f"{head}{bounds}"


def _jsonable(x):
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (np.integer, np.floating, np.bool_)):
        return x.item()
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


def result_record(r: BoundsResult) -> dict:
    return {
        "label": r.label,
        "method": r.method,
        "lower": r.lower,
        "upper": r.upper,
        "argmin": None if r.argmin is None else list(r.argmin),
        "argmax": None if r.argmax is None else list(r.argmax),
        "work": _jsonable(r.work),
        "detail": _jsonable(r.detail),
    }


def serialize_results(results: BoundsResult | Sequence[BoundsResult], fmt: str = "plain",
                      extra: Sequence[dict] | None = None) -> str:
    """Text for one or more results.

    ``extra`` (csv only) adds per-row columns, e.g. a swept parameter value.
    """
    if isinstance(results, BoundsResult):
        results = [results]
    if fmt == "plain":
        return "".join(_plain_line(r) + "\n" for r in results)
    if fmt == "json":
        return json.dumps({"results": [result_record(r) for r in results]}, indent=2) + "\n"
    if fmt == "csv":
        extra = list(extra) if extra is not None else [{} for _ in results]
        if len(extra) != len(results):
            raise ValueError("one extra record per result is required")
        extra_keys = list(dict.fromkeys(k for row in extra for k in row))
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow([*extra_keys, "label", "method", "lower", "upper"])
        for r, row in zip(results, extra):
            writer.writerow([*(row.get(k, "") for k in extra_keys), r.label, r.method,
                             repr(r.lower), repr(r.upper)])
        return buf.getvalue()
    raise ValueError(f"unknown format {fmt!r}; expected one of {', '.join(FORMATS)}")
