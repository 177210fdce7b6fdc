"""Plain-text matrix files, measurement/state sequence CSVs and PGM frames.

All writers go through :func:`atomic_write`, which writes a temporary file
next to the target and renames it into place.
"""

from __future__ import annotations

import csv
import io
import os
import tempfile
from pathlib import Path

import numpy as np

SEQUENCE_HEADER = ("t", "component_index", "value")


class MalformedFileError(ValueError):
    def __init__(self, path, line: int | None, message: str):
        self.path = str(path)
        self.line = line
        where = f"{self.path}:{line}" if line is not None else self.path
        super().__init__(f"{where}: {message}")


def atomic_write(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _fmt(x: float) -> str:
    # repr gives the shortest string that parses back to the same double
    return repr(float(x))


def format_matrix(M) -> str:
    M = np.atleast_2d(np.asarray(M, dtype=float))
    lines = [f"{M.shape[0]} {M.shape[1]}"]
    lines += [" ".join(_fmt(v) for v in row) for row in M]
    return "\n".join(lines) + "\n"


def write_matrix(path, M) -> Path:
    return atomic_write(path, format_matrix(M))


def _read_text(path) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise MalformedFileError(path, None, f"cannot read file ({exc.strerror or exc})") from exc


def parse_matrix(text: str, path="<string>") -> np.ndarray:
    lines = text.splitlines()
    if not lines or not lines[0].strip():
        raise MalformedFileError(path, 1, "missing 'rows cols' header")
    head = lines[0].split()
    try:
        rows, cols = (int(tok, 10) for tok in head)
    except ValueError:
        raise MalformedFileError(path, 1, f"header must be two integers, got {lines[0]!r}") from None
    if rows < 1 or cols < 1:
        raise MalformedFileError(path, 1, "dimensions must be positive")
    body = lines[1:]
    while body and not body[-1].strip():
        body.pop()
    if len(body) != rows:
        raise MalformedFileError(path, len(lines), f"expected {rows} data rows, found {len(body)}")
    M = np.empty((rows, cols))
    for r, line in enumerate(body):
        tokens = line.split()
        if len(tokens) != cols:
            raise MalformedFileError(path, r + 2, f"expected {cols} values, found {len(tokens)}")
        try:
            M[r] = [float(tok) for tok in tokens]
        except ValueError:
            raise MalformedFileError(path, r + 2, f"non-numeric entry in {line!r}") from None
        if not np.all(np.isfinite(M[r])):
            raise MalformedFileError(path, r + 2, "non-finite entry")
    return M


def read_matrix(path) -> np.ndarray:
    return parse_matrix(_read_text(path), path)


def format_sequence(rows) -> str:
    """Serialize a T x k array (one vector per time) as a sequence CSV."""
    A = np.atleast_2d(np.asarray(rows, dtype=float))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SEQUENCE_HEADER)
    for t, vec in enumerate(A, start=1):
        for c, v in enumerate(vec, start=1):
            w.writerow((t, c, _fmt(v)))
    return buf.getvalue()


def write_sequence(path, rows) -> Path:
    return atomic_write(path, format_sequence(rows))


def parse_sequence(text: str, path="<string>") -> np.ndarray:
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise MalformedFileError(path, 1, "empty file") from None
    if tuple(h.strip() for h in header) != SEQUENCE_HEADER:
        raise MalformedFileError(path, 1, f"header must be {','.join(SEQUENCE_HEADER)}")
    entries: dict = {}
    for lineno, row in enumerate(reader, start=2):
        if not row or not "".join(row).strip():
            continue
        if len(row) != 3:
            raise MalformedFileError(path, lineno, f"expected 3 fields, found {len(row)}")
        try:
            t, c, v = int(row[0]), int(row[1]), float(row[2])
        except ValueError:
            raise MalformedFileError(path, lineno, f"cannot parse {','.join(row)!r}") from None
        if t < 1 or c < 1:
            raise MalformedFileError(path, lineno, "time and component indices start at 1")
        if not np.isfinite(v):
            raise MalformedFileError(path, lineno, "non-finite value")
        if (t, c) in entries:
            raise MalformedFileError(path, lineno, f"duplicate entry for t={t}, component {c}")
        entries[(t, c)] = v
    if not entries:
        raise MalformedFileError(path, None, "no data rows")
    T = max(t for t, _ in entries)
    k = max(c for _, c in entries)
    for t in range(1, T + 1):
        present = sum(1 for c in range(1, k + 1) if (t, c) in entries)
        if present != k:
            raise MalformedFileError(
                path, None, f"time {t} has {present} components, expected {k} (times must be contiguous)"
            )
    out = np.empty((T, k))
    for (t, c), v in entries.items():
        out[t - 1, c - 1] = v
    return out


def read_sequence(path) -> np.ndarray:
    return parse_sequence(_read_text(path), path)


def pgm_levels(img) -> np.ndarray:
    """Rescale linearly from [min, max] to integer levels 0..255; constant maps to 0."""
    img = np.asarray(img, dtype=float)
    lo, hi = float(img.min()), float(img.max())
    if hi == lo:
        return np.zeros(img.shape, dtype=int)
    return np.floor((img - lo) / (hi - lo) * 255.0 + 0.5).astype(int)


def format_pgm(img) -> str:
    levels = pgm_levels(img)
    h, w = levels.shape
    lines = ["P2", f"{w} {h}", "255"]
    lines += [" ".join(str(v) for v in row) for row in levels]
    return "\n".join(lines) + "\n"


def write_pgm(path, img) -> Path:
    return atomic_write(path, format_pgm(img))


def parse_pgm(text: str, path="<string>") -> np.ndarray:
    tokens = []
    for line in text.splitlines():
        tokens += line.split("#", 1)[0].split()
    if len(tokens) < 4 or tokens[0] != "P2":
        raise MalformedFileError(path, 1, "not an ASCII (P2) PGM file")
    try:
        w, h, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
        values = [int(v) for v in tokens[4:]]
    except ValueError:
        raise MalformedFileError(path, None, "non-integer token") from None
    if len(values) != w * h or any(not 0 <= v <= maxval for v in values):
        raise MalformedFileError(path, None, f"expected {w * h} levels in 0..{maxval}")
    return np.array(values, dtype=int).reshape(h, w)


def read_pgm(path) -> np.ndarray:
    return parse_pgm(_read_text(path), path)
