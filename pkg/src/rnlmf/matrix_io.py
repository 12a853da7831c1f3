"""CSV matrix and label files, plus the plain ``key = value`` config format.

Matrices are headerless UTF-8 CSV, one row per line.  Writes use 17
significant digits so a write/read round trip is bit-exact for float64.
"""

import numpy as np


class MatrixIOError(ValueError):
    """Malformed matrix/label/config file."""


def read_matrix(path):
    rows = []
    width = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            fields = line.split(",")
            if width is None:
                width = len(fields)
            elif len(fields) != width:
                raise MatrixIOError(
                    f"{path}: ragged row at line {lineno} "
                    f"({len(fields)} fields, expected {width})")
            row = []
            for col, field in enumerate(fields, start=1):
                try:
                    row.append(float(field))
                except ValueError:
                    raise MatrixIOError(
                        f"{path}: cannot parse {field.strip()!r} as a number "
                        f"at line {lineno}, column {col}") from None
            rows.append(row)
    if not rows:
        raise MatrixIOError(f"{path}: no data rows")
    return np.asarray(rows, dtype=np.float64)


def write_matrix(path, M):
    M = np.atleast_2d(np.asarray(M, dtype=np.float64))
    with open(path, "w", encoding="utf-8") as fh:
        for row in M:
            fh.write(",".join(f"{v:.17g}" for v in row))
            fh.write("\n")


def read_labels(path):
    labels = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                labels.append(int(float(line)))
            except ValueError:
                raise MatrixIOError(
                    f"{path}: cannot parse {line!r} as a label at line {lineno}"
                ) from None
    if not labels:
        raise MatrixIOError(f"{path}: no labels")
    return np.asarray(labels, dtype=np.int64)


def write_labels(path, labels):
    with open(path, "w", encoding="utf-8") as fh:
        for label in np.asarray(labels).ravel():
            fh.write(f"{int(label)}\n")


def write_metrics(path, metrics):
    """Plain ``key: value`` lines, one metric per line."""
    with open(path, "w", encoding="utf-8") as fh:
        for key, value in metrics.items():
            if isinstance(value, float):
                fh.write(f"{key}: {value:.17g}\n")
            else:
                fh.write(f"{key}: {value}\n")


def read_config_file(path):
    """Parse ``key = value`` lines; ``#`` starts a comment; keys normalize
    hyphens to underscores."""
    values = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise MatrixIOError(
                    f"{path}: expected 'key = value' at line {lineno}, got {line!r}")
            key, value = line.split("=", 1)
            key = key.strip().replace("-", "_")
            if not key:
                raise MatrixIOError(f"{path}: empty key at line {lineno}")
            values[key] = value.strip()
    return values
