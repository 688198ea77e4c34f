"""CSV reading and writing for tensors, cohorts and similarity matrices.

A tensor row is ``xx,yy,zz,xy,xz,yz`` (xy = entry (1,2), xz = (1,3),
yz = (2,3)); a cohort row appends an integer group label. Files may or
may not carry a header row; readers sniff for one.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Sequence

import numpy as np

from .permtest import Cohort
from .spd import COMPONENT_NAMES, SpdTensor, validate_spd

COHORT_HEADER = COMPONENT_NAMES + ("group",)


def format_tensor_row(t: SpdTensor) -> str:
    return ",".join(repr(c) for c in t.components())


def write_cohort_csv(path, cohort: Cohort) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(COHORT_HEADER)
        for t, g in zip(cohort.tensors, cohort.labels):
            writer.writerow([repr(c) for c in t.components()] + [int(g)])


def _read_rows(path) -> list[list[str]]:
    with open(path, newline="") as fh:
        rows = [row for row in csv.reader(fh) if row and any(c.strip() for c in row)]
    if not rows:
        raise ValueError(f"{path}: empty file")
    try:
        float(rows[0][0])
    except ValueError:
        rows = rows[1:]  # header row
    if not rows:
        raise ValueError(f"{path}: no data rows")
    return rows


def read_tensors_csv(path) -> list[SpdTensor]:
    """Read tensors from a 6-column file (a 7th group column is ignored)."""
    return [t for t, _ in _parse_rows(_read_rows(path), path)]


def read_cohort_csv(path) -> Cohort:
    """Read a labeled cohort; requires the 7-column form."""
    parsed = _parse_rows(_read_rows(path), path)
    labels = [g for _, g in parsed]
    if any(g is None for g in labels):
        raise ValueError(f"{path}: cohort file needs a group column")
    return Cohort(tuple(t for t, _ in parsed), np.array(labels))


def _parse_rows(rows, path):
    parsed = []
    for i, row in enumerate(rows):
        if len(row) not in (6, 7):
            raise ValueError(
                f"{path}: row {i + 1} has {len(row)} fields, expected 6 or 7"
            )
        tensor = validate_spd([float(c) for c in row[:6]])
        group = int(row[6]) if len(row) == 7 else None
        parsed.append((tensor, group))
    return parsed


def write_matrix_csv(path, matrix: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for row in np.asarray(matrix):
            writer.writerow([repr(float(v)) for v in row])


def write_tensor_csv(path, tensors: Sequence[SpdTensor]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(COMPONENT_NAMES)
        for t in tensors:
            writer.writerow([repr(c) for c in t.components()])


def ensure_parent(path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
