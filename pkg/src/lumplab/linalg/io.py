"""Matrix exchange: MatrixMarket coordinate files and dense CSV.

Values are written with 17 significant digits, which round-trips every
IEEE double exactly.
"""

import os
import tempfile

import numpy as np

from ..errors import ConfigError

_FMT = "{:.17g}"


def atomic_write_text(path, text):
    """Write ``text`` to ``path`` via a temporary file and rename."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _dense(a):
    if hasattr(a, "to_dense"):
        return np.asarray(a.to_dense(), dtype=float)
    return np.asarray(a, dtype=float)


def format_matrix_market(a, symmetric=None, comment=None):
    a = _dense(a)
    if a.ndim != 2:
        raise ValueError("expected a 2-d array")
    if symmetric is None:
        symmetric = a.shape[0] == a.shape[1] and np.array_equal(a, a.T)
    kind = "symmetric" if symmetric else "general"
    if symmetric:
        i, j = np.nonzero(np.tril(a))
    else:
        i, j = np.nonzero(a)
    lines = [f"%%MatrixMarket matrix coordinate real {kind}"]
    if comment:
        lines.extend(f"% {c}" for c in comment.splitlines())
    lines.append(f"{a.shape[0]} {a.shape[1]} {i.size}")
    lines.extend(f"{r + 1} {c + 1} {_FMT.format(a[r, c])}" for r, c in zip(i, j))
    return "\n".join(lines) + "\n"


def write_matrix_market(path, a, symmetric=None, comment=None):
    """Write a matrix in MatrixMarket coordinate format.

    Symmetric matrices store only the lower triangle and carry the
    ``symmetric`` qualifier.
    """
    atomic_write_text(path, format_matrix_market(a, symmetric, comment))


def read_matrix_market(path):
    """Read a real coordinate MatrixMarket file into a dense array."""
    with open(path) as fh:
        header = fh.readline().split()
        if len(header) < 5 or header[0] != "%%MatrixMarket" or header[2] != "coordinate":
            raise ConfigError(f"{path}: not a MatrixMarket coordinate file")
        kind = header[4].lower()
        if kind not in ("general", "symmetric"):
            raise ConfigError(f"{path}: unsupported symmetry {kind!r}")
        line = fh.readline()
        while line.startswith("%"):
            line = fh.readline()
        rows, cols, nnz = (int(v) for v in line.split())
        a = np.zeros((rows, cols))
        count = 0
        for line in fh:
            if not line.strip() or line.startswith("%"):
                continue
            r, c, v = line.split()
            r, c = int(r) - 1, int(c) - 1
            a[r, c] = float(v)
            if kind == "symmetric":
                a[c, r] = float(v)
            count += 1
    if count != nnz:
        raise ConfigError(f"{path}: expected {nnz} entries, found {count}")
    return a


def _comment_lines(comment):
    return [f"# {c}" for c in comment.splitlines()] if comment else []


def write_dense_csv(path, a, comment=None):
    """Dense CSV: a header line with ``n``, then ``n`` comma-separated rows.

    Optional ``comment`` lines are prefixed with ``#`` and skipped on read.
    """
    a = _dense(a)
    lines = _comment_lines(comment) + [str(a.shape[0])]
    lines.extend(",".join(_FMT.format(v) for v in row) for row in a)
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_dense_csv(path):
    with open(path) as fh:
        lines = [line for line in fh if line.strip() and not line.startswith("#")]
    if not lines:
        raise ConfigError(f"{path}: empty file")
    n = int(lines[0].strip())
    rows = lines[1:]
    if len(rows) != n:
        raise ConfigError(f"{path}: header says {n} rows, found {len(rows)}")
    a = np.array([[float(v) for v in r.split(",")] for r in rows])
    if a.ndim != 2 or a.shape[1] != n:
        raise ConfigError(f"{path}: rows must have {n} entries")
    return a


def write_band_csv(path, banded, comment=None):
    """Packed bands of a :class:`BandedSPD`: one row per offset."""
    lines = _comment_lines(comment) + ["offset,values"]
    for d in range(banded.bandwidth + 1):
        vals = banded.bands[d, : banded.n - d]
        lines.append(f"{d}," + ",".join(_FMT.format(v) for v in vals))
    atomic_write_text(path, "\n".join(lines) + "\n")
