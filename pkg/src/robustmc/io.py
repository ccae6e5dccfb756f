"""Plain-text file formats.

Dense matrix::

    rows cols
    a11 a12 ...          # one line per row, 17 significant digits

Observations::

    n1 n2 p
    i j value            # one line per observed entry, 0-based, sorted by (i, j)

Ground truth: a dense matrix block for L*, then ``rank r``, then
``outliers K`` followed by K ``i j value`` lines for the outlier entries.
"""

import numpy as np

from .errors import DimensionError
from .linalg import as_dense
from .problem import ObservationSet, ground_truth_from_matrix


def fmt(x):
    return f"{x:.17g}"


def _dense_lines(a):
    rows, cols = a.shape
    yield f"{rows} {cols}\n"
    for row in a:
        yield " ".join(fmt(x) for x in row) + "\n"


def _triplet_lines(i, j, values):
    for a, b, v in zip(i.tolist(), j.tolist(), values.tolist()):
        yield f"{a} {b} {fmt(v)}\n"


def write_dense(a, path):
    a = as_dense(a)
    with open(path, "w") as fh:
        fh.writelines(_dense_lines(a))


def _read_dense(lines, pos, path):
    try:
        rows, cols = (int(x) for x in lines[pos].split())
        data = np.array([[float(x) for x in lines[pos + 1 + k].split()] for k in range(rows)])
    except (ValueError, IndexError) as exc:
        raise DimensionError(f"{path}: malformed dense matrix block: {exc}") from exc
    if data.shape != (rows, cols):
        raise DimensionError(f"{path}: expected {rows} x {cols} entries, got {data.shape}")
    return as_dense(data), pos + 1 + rows


def read_dense(path):
    with open(path) as fh:
        lines = fh.read().splitlines()
    return _read_dense(lines, 0, path)[0]


def write_observations(obs, path):
    with open(path, "w") as fh:
        fh.write(f"{obs.rows} {obs.cols} {fmt(obs.sample_rate_p)}\n")
        fh.writelines(_triplet_lines(obs.i, obs.j, obs.values))


def _parse_triplets(lines, path, first_lineno):
    if not lines:
        return np.empty(0, np.int64), np.empty(0, np.int64), np.empty(0)
    try:
        parts = [ln.split() for ln in lines]
        i = np.array([int(t[0]) for t in parts], dtype=np.int64)
        j = np.array([int(t[1]) for t in parts], dtype=np.int64)
        v = np.array([float(t[2]) for t in parts])
    except (ValueError, IndexError) as exc:
        raise DimensionError(f"{path}: malformed triplet after line {first_lineno}: {exc}") from exc
    return i, j, v


def read_observations(path):
    with open(path) as fh:
        lines = [ln for ln in fh.read().splitlines() if ln.strip()]
    try:
        n1, n2, p = lines[0].split()
        n1, n2, p = int(n1), int(n2), float(p)
    except (ValueError, IndexError) as exc:
        raise DimensionError(f"{path}: header must be 'n1 n2 p'") from exc
    i, j, v = _parse_triplets(lines[1:], path, 1)
    return ObservationSet(n1, n2, i, j, v, p)


def write_truth(truth, path):
    s = truth.s_star
    with open(path, "w") as fh:
        fh.writelines(_dense_lines(truth.l_star))
        fh.write(f"rank {truth.rank}\n")
        n_out = 0 if s is None else len(s)
        fh.write(f"outliers {n_out}\n")
        if n_out:
            fh.writelines(_triplet_lines(s.i, s.j, s.values))


def read_truth(path, p=None):
    with open(path) as fh:
        lines = [ln for ln in fh.read().splitlines() if ln.strip()]
    l_star, pos = _read_dense(lines, 0, path)
    try:
        key, rank = lines[pos].split()
        key2, count = lines[pos + 1].split()
        rank, count = int(rank), int(count)
        if key != "rank" or key2 != "outliers":
            raise ValueError("expected 'rank r' and 'outliers K' lines")
    except (ValueError, IndexError) as exc:
        raise DimensionError(f"{path}: {exc}") from exc
    i, j, v = _parse_triplets(lines[pos + 2: pos + 2 + count], path, pos + 2)
    n1, n2 = l_star.shape
    s_star = ObservationSet(n1, n2, i, j, v, p if p is not None else 1.0)
    return ground_truth_from_matrix(l_star, rank, s_star)
