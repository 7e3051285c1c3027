"""File formats: model JSON, data CSV, trajectory CSV, events JSONL, baseline CSV.

All floating-point output is written with ``repr`` (shortest decimal that
round-trips, at most 17 significant digits, always a ``.`` separator), so a
write/read cycle reproduces every value bit for bit regardless of locale.
"""
from __future__ import annotations

import json
from contextlib import contextmanager
from typing import IO, Iterable, Iterator

import numpy as np

from .errors import ParseError
from .model import MixedModel

__all__ = [
    "MODEL_FORMAT_VERSION",
    "read_model",
    "write_model",
    "read_dataset",
    "write_dataset",
    "DatasetReader",
    "dataset_header",
    "write_trajectory_header",
    "write_trajectory_rows",
    "write_event",
    "write_baseline",
]

MODEL_FORMAT_VERSION = 1


@contextmanager
def _open_for(source, mode: str) -> Iterator[IO[str]]:
    """Treat ``source`` as a path to open, or pass a ready file object through."""
    if hasattr(source, "read") or hasattr(source, "write"):
        yield source
    else:
        with open(source, mode, encoding="utf-8", newline="") as fh:
            yield fh


# ---------------------------------------------------------------------------
# model JSON
# ---------------------------------------------------------------------------

def write_model(model: MixedModel, target) -> None:
    doc = {
        "format_version": MODEL_FORMAT_VERSION,
        "n_cat": model.n_cat,
        "n_quant": model.n_quant,
        "cat_names": list(model.cat_names),
        "quant_names": list(model.quant_names),
        "theta": model.theta.tolist(),
        "mu": model.mu.tolist(),
        "delta": model.delta.tolist(),
        "phi": model.phi.tolist(),
    }
    with _open_for(target, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def read_model(source) -> MixedModel:
    """Load and fully validate a model file.

    Malformed JSON or missing/ill-typed keys raise ``ParseError``; parameter
    problems (asymmetry, non-SPD precision, shape clashes) surface as the
    model's own validation errors.
    """
    with _open_for(source, "r") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc.msg}", lineno=exc.lineno) from None
    if not isinstance(doc, dict):
        raise ParseError("model file must contain a JSON object")
    version = doc.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise ParseError(f"unsupported format_version {version!r}, expected {MODEL_FORMAT_VERSION}")
    for key in ("theta", "mu", "delta", "phi"):
        if key not in doc:
            raise ParseError(f"model file is missing {key!r}")
    try:
        model = MixedModel(
            theta=np.array(doc["theta"], dtype=float, ndmin=2),
            mu=np.asarray(doc["mu"], dtype=float),
            delta=np.array(doc["delta"], dtype=float, ndmin=2),
            phi=np.array(doc["phi"], dtype=float, ndmin=2),
            cat_names=tuple(doc.get("cat_names") or ()),
            quant_names=tuple(doc.get("quant_names") or ()),
        )
    except (TypeError,) as exc:
        raise ParseError(f"model arrays are malformed: {exc}") from None
    declared_c, declared_q = doc.get("n_cat"), doc.get("n_quant")
    if declared_c is not None and declared_c != model.n_cat:
        raise ParseError(f"n_cat is {declared_c} but theta is {model.n_cat}x{model.n_cat}")
    if declared_q is not None and declared_q != model.n_quant:
        raise ParseError(f"n_quant is {declared_q} but delta is {model.n_quant}x{model.n_quant}")
    return model


# ---------------------------------------------------------------------------
# data CSV:  t,c0..c{C-1},q0..q{Q-1}
# ---------------------------------------------------------------------------

def dataset_header(n_cat: int, n_quant: int) -> str:
    cols = ["t"] + [f"c{i}" for i in range(n_cat)] + [f"q{i}" for i in range(n_quant)]
    return ",".join(cols)


def write_dataset(target, x_cat: np.ndarray, x_quant: np.ndarray) -> None:
    x_cat = np.asarray(x_cat)
    x_quant = np.asarray(x_quant)
    with _open_for(target, "w") as fh:
        fh.write(dataset_header(x_cat.shape[1], x_quant.shape[1]) + "\n")
        for t in range(x_cat.shape[0]):
            cat_part = ",".join(str(int(v)) for v in x_cat[t])
            quant_part = ",".join(repr(float(v)) for v in x_quant[t])
            cells = [str(t)]
            if cat_part:
                cells.append(cat_part)
            if quant_part:
                cells.append(quant_part)
            fh.write(",".join(cells) + "\n")


def _parse_header(line: str) -> tuple[int, int]:
    cols = line.rstrip("\r\n").split(",")
    if not cols or cols[0] != "t":
        raise ParseError("header must start with column 't'", lineno=1)
    n_cat = 0
    pos = 1
    while pos < len(cols) and cols[pos] == f"c{n_cat}":
        n_cat += 1
        pos += 1
    n_quant = 0
    while pos < len(cols) and cols[pos] == f"q{n_quant}":
        n_quant += 1
        pos += 1
    if pos != len(cols):
        raise ParseError(f"unexpected column {cols[pos]!r} in header", lineno=1)
    return n_cat, n_quant


class DatasetReader:
    """Streaming data-CSV reader: parses the header, then yields rows one at a time.

    Binary cells must be exactly ``0`` or ``1``; continuous cells must parse
    as finite floats.  Any violation raises ``ParseError`` with the 1-based
    line number.  Works on non-seekable sources (pipes, stdin) in constant
    memory.
    """

    def __init__(self, fh: IO[str]):
        header = fh.readline()
        if header == "":
            raise ParseError("empty input, expected a header row", lineno=1)
        self.n_cat, self.n_quant = _parse_header(header)
        self._fh = fh

    def __iter__(self) -> Iterator[tuple[int, int, np.ndarray, np.ndarray]]:
        n_cat, n_quant = self.n_cat, self.n_quant
        width = 1 + n_cat + n_quant
        for lineno, line in enumerate(self._fh, start=2):
            if line.strip() == "":
                continue
            cells = line.rstrip("\r\n").split(",")
            if len(cells) != width:
                raise ParseError(f"expected {width} cells, got {len(cells)}", lineno=lineno)
            try:
                t = int(cells[0])
            except ValueError:
                raise ParseError(f"bad time index {cells[0]!r}", lineno=lineno) from None
            x_cat = np.empty(n_cat)
            for i in range(n_cat):
                cell = cells[1 + i]
                if cell == "0":
                    x_cat[i] = 0.0
                elif cell == "1":
                    x_cat[i] = 1.0
                else:
                    raise ParseError(
                        f"binary cell c{i} must be 0 or 1, got {cell!r}", lineno=lineno
                    )
            x_quant = np.empty(n_quant)
            for i in range(n_quant):
                cell = cells[1 + n_cat + i]
                try:
                    value = float(cell)
                except ValueError:
                    raise ParseError(f"bad numeric cell q{i}: {cell!r}", lineno=lineno) from None
                if not np.isfinite(value):
                    raise ParseError(f"non-finite value in q{i}: {cell!r}", lineno=lineno)
                x_quant[i] = value
            yield lineno, t, x_cat, x_quant


def read_dataset(source, model: MixedModel | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Read a whole data CSV into ``(x_cat, x_quant)`` blocks."""
    cats: list[np.ndarray] = []
    quants: list[np.ndarray] = []
    with _open_for(source, "r") as fh:
        reader = DatasetReader(fh)
        if model is not None and (reader.n_cat, reader.n_quant) != (model.n_cat, model.n_quant):
            raise ParseError(
                f"data has {reader.n_cat}+{reader.n_quant} columns, model expects "
                f"{model.n_cat}+{model.n_quant}"
            )
        for _, _, x_cat, x_quant in reader:
            cats.append(x_cat)
            quants.append(x_quant)
        x_cat = np.vstack(cats) if cats else np.empty((0, reader.n_cat))
        x_quant = np.vstack(quants) if quants else np.empty((0, reader.n_quant))
    return x_cat, x_quant


# ---------------------------------------------------------------------------
# trajectory CSV, events JSONL, baseline CSV
# ---------------------------------------------------------------------------

def write_trajectory_header(fh: IO[str]) -> None:
    fh.write("t,variable,S_bar\n")


def write_trajectory_rows(fh: IO[str], t: int, var_names: Iterable[str], s_bar) -> None:
    for name, value in zip(var_names, s_bar):
        fh.write(f"{t},{name},{repr(float(value))}\n")


def write_event(fh: IO[str], event) -> None:
    fh.write(json.dumps({
        "t": int(event.t),
        "variable": event.variable,
        "statistic": float(event.statistic),
        "threshold": float(event.threshold),
    }) + "\n")


def write_baseline(target, scans) -> None:
    with _open_for(target, "w") as fh:
        fh.write("variable,k,U\n")
        for scan in scans:
            for i, u in enumerate(scan.u):
                fh.write(f"{scan.variable},{i + 1},{int(u)}\n")
