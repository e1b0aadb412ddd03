"""CSV ingestion and model-matrix construction.

Builds a dense model matrix from tabular data: intercept, main effects in
declaration order, treatment-contrast dummies for categorical columns
(reference level = first in sorted order), and all interaction products up
to a requested order, in graded lexicographic order with ":"-joined names.
Aliased columns introduced by the expansion are dropped deterministically,
preferring low-order terms.
"""

from __future__ import annotations

import csv
import io
import itertools
from dataclasses import dataclass, replace as dc_replace

import numpy as np

from .errors import ParseError, RankError
from .expfam import BERNOULLI, Family, GlmModel

NUMERIC = "numeric"
CATEGORICAL = "categorical"
AUTO = "auto"


@dataclass(frozen=True)
class Predictor:
    name: str
    kind: str = AUTO  # numeric | categorical | auto (decided from the data)


@dataclass(frozen=True)
class ModelSpec:
    response: str
    predictors: list[Predictor]
    family: Family
    interaction_order: int = 1
    trials_column: str | None = None

    def __post_init__(self):
        if self.interaction_order < 1:
            raise ValueError("interaction_order must be >= 1")
        names = [p.name for p in self.predictors]
        if len(set(names)) != len(names):
            raise ValueError("duplicate predictor names")


@dataclass(frozen=True)
class DesignResult:
    model: GlmModel
    column_names: list[str]
    dropped_names: list[str]
    row_labels: list[str]


def read_table(path) -> tuple[list[str], list[list[str]]]:
    """Header and rows of an RFC-4180-style CSV file."""
    with open(path, newline="", encoding="utf-8") as fh:
        return _read_table(fh)


def read_table_text(text: str) -> tuple[list[str], list[list[str]]]:
    """Header and rows of CSV content held in a string."""
    return _read_table(io.StringIO(text))


def _read_table(fh) -> tuple[list[str], list[list[str]]]:
    reader = csv.reader(fh)
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError("empty file", row=1) from None
    header = [h.strip() for h in header]
    rows = []
    for r, cells in enumerate(reader, start=2):
        if not cells:
            continue
        if len(cells) != len(header):
            raise ParseError(
                f"expected {len(header)} cells, found {len(cells)}", row=r
            )
        rows.append([c.strip() for c in cells])
    if not rows:
        raise ParseError("no data rows", row=2)
    return header, rows


def _column(header, rows, name, row_offset=2):
    try:
        c = header.index(name)
    except ValueError:
        raise ParseError(f"column {name!r} not in header", row=1, column=name) from None
    return c, [row[c] for row in rows]


def _parse_numeric(values, name, row_offset=2):
    out = np.empty(len(values))
    for i, v in enumerate(values):
        try:
            out[i] = float(v)
        except ValueError:
            raise ParseError(
                f"cell {v!r} is not numeric", row=i + row_offset, column=name
            ) from None
    return out


def _is_numeric(values) -> bool:
    try:
        for v in values:
            float(v)
    except ValueError:
        return False
    return True


@dataclass
class _Term:
    """One predictor's contribution: a block of columns with names."""

    names: list[str]
    columns: np.ndarray  # n x k


def _main_effect(pred: Predictor, values: list[str]) -> _Term:
    kind = pred.kind
    if kind == AUTO:
        kind = NUMERIC if _is_numeric(values) else CATEGORICAL
    if kind == NUMERIC:
        return _Term([pred.name], _parse_numeric(values, pred.name)[:, None])
    levels = sorted(set(values))
    if len(levels) < 2:
        raise ParseError(
            f"categorical column {pred.name!r} has fewer than 2 levels", column=pred.name
        )
    # treatment contrasts: first sorted level is the reference
    dummies = levels[1:]
    cols = np.column_stack([[1.0 if v == lev else 0.0 for v in values] for lev in dummies])
    return _Term([f"{pred.name}{lev}" for lev in dummies], cols)


def _independent_prefix(M: np.ndarray, tol: float = 1e-8) -> list[int]:
    """Greedy full-rank column subset, keeping the earliest columns.

    Incremental Gram-Schmidt: a column is kept when its residual against the
    span of the columns already kept is above tol relative to its norm.
    """
    n, p = M.shape
    Q = np.empty((n, 0))
    kept = []
    for c in range(p):
        v = M[:, c]
        nv = np.linalg.norm(v)
        if nv == 0:
            continue
        r = v - Q @ (Q.T @ v)
        # second pass for numerical stability
        r = r - Q @ (Q.T @ r)
        if np.linalg.norm(r) > tol * nv:
            kept.append(c)
            Q = np.column_stack([Q, r / np.linalg.norm(r)])
    return kept


def build_design(spec: ModelSpec, header, rows) -> tuple[np.ndarray, list[str], list[str]]:
    """Model matrix, kept column names, dropped column names."""
    terms = []
    for pred in spec.predictors:
        _, values = _column(header, rows, pred.name)
        terms.append(_main_effect(pred, values))

    n = len(rows)
    names = ["(Intercept)"]
    cols = [np.ones(n)]
    for t in terms:
        names.extend(t.names)
        cols.extend(t.columns.T)
    # graded lexicographic: all pairs, then all triples, ...
    for order in range(2, spec.interaction_order + 1):
        for combo in itertools.combinations(range(len(terms)), order):
            blocks = [terms[i] for i in combo]
            for pick in itertools.product(*[range(len(b.names)) for b in blocks]):
                names.append(":".join(b.names[k] for b, k in zip(blocks, pick)))
                prod = np.ones(n)
                for b, k in zip(blocks, pick):
                    prod = prod * b.columns[:, k]
                cols.append(prod)

    M = np.column_stack(cols)
    kept = _independent_prefix(M)
    if not kept:
        raise RankError("model matrix has rank zero")
    dropped = [names[i] for i in range(M.shape[1]) if i not in set(kept)]
    return M[:, kept], [names[i] for i in kept], dropped


def _row_labels(spec: ModelSpec, header, rows) -> list[str]:
    cols = []
    for pred in spec.predictors:
        _, values = _column(header, rows, pred.name)
        cols.append(values)
    return [",".join(f"{p.name}={v[i]}" for p, v in zip(spec.predictors, cols)) for i in range(len(rows))]


def ingest_design(path, spec: ModelSpec) -> DesignResult:
    """Full ingestion from a file: model, column names, dropped names, row labels."""
    header, rows = read_table(path)
    return design_from_table(header, rows, spec)


def ingest_design_text(text: str, spec: ModelSpec) -> DesignResult:
    """Full ingestion from CSV content held in a string."""
    header, rows = read_table_text(text)
    return design_from_table(header, rows, spec)


def design_from_table(header, rows, spec: ModelSpec) -> DesignResult:
    _, resp_raw = _column(header, rows, spec.response)
    y_float = _parse_numeric(resp_raw, spec.response)
    if np.any(y_float < 0) or np.any(y_float != np.round(y_float)):
        raise ParseError(
            "response must be a nonnegative integer count", column=spec.response
        )
    y = y_float.astype(int)

    family = spec.family
    if family.tag == BERNOULLI:
        if spec.trials_column is not None:
            _, trials_raw = _column(header, rows, spec.trials_column)
            trials = _parse_numeric(trials_raw, spec.trials_column).astype(int)
        else:
            trials = np.ones(len(rows), dtype=int)
        family = dc_replace(family, trials=trials)
    elif spec.trials_column is not None:
        raise ParseError("trials column is only meaningful for the bernoulli family",
                         column=spec.trials_column)

    M, names, dropped = build_design(spec, header, rows)
    model = GlmModel(M=M, y=y, family=family)
    return DesignResult(
        model=model,
        column_names=names,
        dropped_names=dropped,
        row_labels=_row_labels(spec, header, rows),
    )


def ingest_csv(path, spec: ModelSpec) -> GlmModel:
    """Model only; see ingest_design for names and labels."""
    return ingest_design(path, spec).model
