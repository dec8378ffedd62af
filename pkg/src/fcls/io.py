"""On-disk formats: Matrix Market matrices, one-value-per-line vectors,
JSON box schedules and run configs, and the fixed-column trace CSV.

Every float is written with enough digits (repr / 17 significant) that
reading it back reproduces the exact bit pattern, which is what makes
repeated runs byte-identical.
"""
from __future__ import annotations

import csv
import json
import math

import numpy as np
import scipy.io

from .constraints import Box, BoxSchedule
from .errors import ParseError, ValidationError
from .linalg import as_matrix, as_vector

TRACE_COLUMNS = ("k", "residual", "step_norm", "fejer_distance", "condition1_defect", "box_index")


def write_matrix(path, a) -> None:
    a = as_matrix(a)
    scipy.io.mmwrite(str(path), a, precision=17)


def read_matrix(path) -> np.ndarray:
    try:
        data = scipy.io.mmread(str(path))
    except FileNotFoundError:
        raise ParseError(f"{path}: file not found")
    except Exception as exc:
        raise ParseError(f"{path}: not a readable Matrix Market file: {exc}")
    if hasattr(data, "toarray"):
        data = data.toarray()
    return as_matrix(np.asarray(data, dtype=float))


def write_vector(path, x) -> None:
    x = as_vector(x, name="vector")
    with open(path, "w", newline="\n") as fh:
        for value in x:
            fh.write(repr(float(value)) + "\n")


def read_vector(path) -> np.ndarray:
    values = []
    try:
        with open(path) as fh:
            for lineno, line in enumerate(fh, start=1):
                text = line.strip()
                if not text or text.startswith("#"):
                    continue
                try:
                    values.append(float(text))
                except ValueError:
                    raise ParseError(f"{path}:{lineno}: not a decimal value: {text!r}")
    except OSError as exc:
        raise ParseError(f"{path}: {exc.strerror or exc}")
    if not values:
        raise ParseError(f"{path}: no values found")
    return np.asarray(values)


def _box_payload(box: Box) -> dict:
    return {"lower": box.lower.tolist(), "upper": box.upper.tolist()}


def _box_from_payload(payload, path, what: str) -> Box:
    if not isinstance(payload, dict) or "lower" not in payload or "upper" not in payload:
        raise ParseError(f"{path}: {what} must be an object with 'lower' and 'upper'")
    return Box(
        lower=as_vector(payload["lower"], name=f"{what}.lower"),
        upper=as_vector(payload["upper"], name=f"{what}.upper"),
    )


def write_box_schedule(path, schedule: BoxSchedule) -> None:
    payload = {
        "boxes": [_box_payload(box) for box in schedule.boxes],
        "terminal": _box_payload(schedule.terminal),
    }
    with open(path, "w", newline="\n") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def _load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise ParseError(f"{path}: {exc.strerror or exc}")
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}:{exc.lineno}: {exc.msg}")


def read_box_schedule(path) -> BoxSchedule:
    data = _load_json(path)
    if not isinstance(data, dict) or "terminal" not in data:
        raise ParseError(f"{path}: expected an object with a 'terminal' box")
    raw_boxes = data.get("boxes", [])
    if not isinstance(raw_boxes, list):
        raise ParseError(f"{path}: 'boxes' must be a list")
    boxes = tuple(
        _box_from_payload(item, path, f"boxes[{i}]") for i, item in enumerate(raw_boxes)
    )
    terminal = _box_from_payload(data["terminal"], path, "terminal")
    return BoxSchedule(boxes=boxes, terminal=terminal)


def read_config(path) -> dict:
    data = _load_json(path)
    if not isinstance(data, dict):
        raise ParseError(f"{path}: config must be a JSON object")
    return data


def _cell(value) -> str:
    if value is None:
        return ""
    value = float(value)
    return "" if math.isnan(value) else repr(value)


def write_trace_csv(path, trace) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRACE_COLUMNS)
        for k in range(trace.iterations + 1):
            fejer = None if trace.fejer_distances is None else trace.fejer_distances[k]
            cond1 = None if trace.condition1_defects is None else trace.condition1_defects[k]
            if trace.box_indices is None or trace.box_indices[k] < 0:
                box = ""
            else:
                box = str(int(trace.box_indices[k]))
            writer.writerow(
                [
                    str(k),
                    _cell(trace.residuals[k]),
                    _cell(trace.step_norms[k]),
                    _cell(fejer),
                    _cell(cond1),
                    box,
                ]
            )


def read_trace_csv(path) -> dict:
    columns = {name: [] for name in TRACE_COLUMNS}
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise ParseError(f"{path}: empty trace file")
            if tuple(header) != TRACE_COLUMNS:
                raise ParseError(f"{path}:1: unexpected header {header}")
            for row in reader:
                if len(row) != len(TRACE_COLUMNS):
                    raise ParseError(
                        f"{path}:{reader.line_num}: expected {len(TRACE_COLUMNS)} cells, got {len(row)}"
                    )
                try:
                    columns["k"].append(int(row[0]))
                    for name, cell in zip(TRACE_COLUMNS[1:5], row[1:5]):
                        columns[name].append(float(cell) if cell else float("nan"))
                    columns["box_index"].append(int(row[5]) if row[5] else -1)
                except ValueError as exc:
                    raise ParseError(f"{path}:{reader.line_num}: {exc}")
    except OSError as exc:
        raise ParseError(f"{path}: {exc.strerror or exc}")
    return columns


def write_summary(path, text: str) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(text)
