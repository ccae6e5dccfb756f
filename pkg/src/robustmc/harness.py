"""Phase-transition experiments over a two-parameter grid.

A grid varies two of (p, r, alpha) and fixes the third. Every
(algorithm, cell, trial) gets its own seed, derived from the base seed, so
results do not depend on execution order or on the number of workers.
"""

import hashlib
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, GridError, NumericalError, ParameterError
from .problem import make_instance
from .rng import derive_seed
from .solver import SolverConfig, run_algorithm
from .thresholding import DEFAULT_SCAD_A, ThresholdKind

log = logging.getLogger(__name__)

AXES = ("p", "r", "alpha")
ALGORITHMS = ("soft", "scad", "hard")
CSV_HEADER = "algorithm,axis1_name,axis1,axis2_name,axis2,trials,successes,success_rate,mean_iters,mean_wall_ms"


@dataclass(frozen=True)
class ExperimentGrid:
    n1: int
    n2: int
    axis1: str
    axis1_values: tuple
    axis2: str
    axis2_values: tuple
    fixed: dict
    trials: int
    algorithms: tuple = ("soft",)
    success_threshold: float = 1e-3
    base_seed: int = 0
    gamma: float = 0.9
    beta_factor: float = 1.1
    scad_a: float = DEFAULT_SCAD_A
    max_iters: int = 500
    stop_tol: float = 1e-9
    svd_method: str = "block"

    def __post_init__(self):
        for name in (self.axis1, self.axis2):
            if name not in AXES:
                raise ConfigError(f"unknown axis {name!r}; expected one of {', '.join(AXES)}")
        if self.axis1 == self.axis2:
            raise ConfigError("axis1 and axis2 must differ")
        for name, values in ((self.axis1, self.axis1_values), (self.axis2, self.axis2_values)):
            if not values:
                raise ConfigError(f"{name} axis has no values")
            if any(b <= a for a, b in zip(values, values[1:])):
                raise ConfigError(f"{name} axis values must be strictly increasing")
        missing = [a for a in AXES if a not in (self.axis1, self.axis2) and a not in self.fixed]
        if missing:
            raise ConfigError(f"missing fixed value for {missing[0]} (key fixed_{missing[0]})")
        if self.trials < 1:
            raise ConfigError("trials must be positive")
        for name in self.algorithms:
            if name not in ALGORITHMS:
                raise ConfigError(f"unknown algorithm {name!r}")
        if not 0 < self.gamma < 1:
            raise ConfigError("gamma must lie in (0, 1)")

    def cell_params(self, v1, v2):
        params = dict(self.fixed)
        params[self.axis1] = v1
        params[self.axis2] = v2
        return params

    def solver_config(self, name, r):
        kind = ThresholdKind.from_name(name, self.scad_a)
        return SolverConfig(
            rank_r=int(r),
            kind=kind,
            gamma=self.gamma,
            max_iters=self.max_iters,
            stop_tol=self.stop_tol,
            beta_factor=self.beta_factor,
            svd_method=self.svd_method,
        )

    def trial_seed(self, algo_index, v1, v2, trial):
        return derive_seed(self.base_seed, "trial", algo_index, v1, v2, trial)

    def tasks(self):
        for a_idx, name in enumerate(self.algorithms):
            for v1 in self.axis1_values:
                for v2 in self.axis2_values:
                    for trial in range(self.trials):
                        yield (a_idx, name, v1, v2, trial)


@dataclass(frozen=True)
class TrialResult:
    algorithm: str
    axis1: float
    axis2: float
    trial: int
    seed: int
    success: bool
    rel_inf_error: float
    iterations: int
    wall_ms: float
    error: str = None


@dataclass(frozen=True)
class CellResult:
    algorithm: str
    axis1_name: str
    axis1: float
    axis2_name: str
    axis2: float
    trials: int
    successes: int
    mean_iters: float
    mean_wall_ms: float

    @property
    def success_rate(self):
        return self.successes / self.trials


@dataclass
class GridResult:
    grid: ExperimentGrid
    cells: list
    trials: list = field(default_factory=list)

    def for_algorithm(self, name):
        return [c for c in self.cells if c.algorithm == name]

    def rate_matrix(self, name):
        """Success rates indexed [axis2 index, axis1 index]."""
        g = self.grid
        out = np.full((len(g.axis2_values), len(g.axis1_values)), np.nan)
        pos1 = {v: k for k, v in enumerate(g.axis1_values)}
        pos2 = {v: k for k, v in enumerate(g.axis2_values)}
        for c in self.for_algorithm(name):
            out[pos2[c.axis2], pos1[c.axis1]] = c.success_rate
        return out


def _run_trial(grid, task, timing):
    a_idx, name, v1, v2, trial = task
    seed = grid.trial_seed(a_idx, v1, v2, trial)
    params = grid.cell_params(v1, v2)
    r = int(params["r"])
    try:
        truth, obs, _ = make_instance(grid.n1, grid.n2, r, params["p"], params["alpha"], seed)
        trace = run_algorithm(name, obs, grid.solver_config(name, r), truth, timing=timing)
    except (NumericalError, ParameterError) as exc:
        log.warning("%s cell (%s, %s) trial %d failed: %s", name, v1, v2, trial, exc)
        return TrialResult(name, v1, v2, trial, seed, False, math.inf, 0, 0.0, str(exc))
    if trace.error:
        log.warning("%s cell (%s, %s) trial %d failed: %s", name, v1, v2, trial, trace.error)
    rel = trace.final_rel_inf_error
    success = trace.error is None and rel <= grid.success_threshold
    wall = float(trace.records[-1].wall_ms)
    return TrialResult(name, v1, v2, trial, seed, success, rel, trace.iterations, wall, trace.error)


def _run_chunk(args):
    grid, tasks, timing = args
    return [_run_trial(grid, t, timing) for t in tasks]


def aggregate(grid, trials):
    groups = {}
    for tr in trials:
        groups.setdefault((tr.algorithm, tr.axis1, tr.axis2), []).append(tr)
    cells = []
    for (name, v1, v2), items in groups.items():
        cells.append(CellResult(
            algorithm=name,
            axis1_name=grid.axis1,
            axis1=v1,
            axis2_name=grid.axis2,
            axis2=v2,
            trials=len(items),
            successes=sum(t.success for t in items),
            mean_iters=sum(t.iterations for t in items) / len(items),
            mean_wall_ms=sum(t.wall_ms for t in items) / len(items),
        ))
    cells.sort(key=lambda c: (c.algorithm, c.axis1, c.axis2))
    return cells


def run_grid(grid, workers=1, timing=True):
    """Run every (algorithm, cell, trial) and aggregate per cell.

    Each trial generates its instance from its own derived seed and solves it
    with the oracle threshold scale ``beta_factor * (mu r / n) * sigma_1``.
    Success means ||L_hat - L*||_inf / ||L*||_inf <= success_threshold; a
    failed solve counts as a failure and is logged. With ``timing=False`` all
    wall-clock fields are zero, making the output byte-reproducible.
    """
    tasks = list(grid.tasks())
    if workers <= 1:
        trials = [_run_trial(grid, t, timing) for t in tasks]
    else:
        chunks = [tasks[k::workers * 4] for k in range(workers * 4)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_chunk, [(grid, c, timing) for c in chunks if c]))
        trials = [t for part in parts for t in part]
    order = {(t[1], t[2], t[3], t[4]): k for k, t in enumerate(tasks)}
    trials.sort(key=lambda tr: order[(tr.algorithm, tr.axis1, tr.axis2, tr.trial)])
    return GridResult(grid=grid, cells=aggregate(grid, trials), trials=trials)


def format_axis_value(v):
    if isinstance(v, (int, np.integer)) or float(v).is_integer():
        return str(int(v))
    return repr(float(v))


def emit_csv(cells, path):
    """Write cell results, sorted by (algorithm, axis1, axis2)."""
    if not cells:
        raise GridError("no results to write")
    rows = sorted(cells, key=lambda c: (c.algorithm, c.axis1, c.axis2))
    lines = [CSV_HEADER]
    for c in rows:
        lines.append(",".join([
            c.algorithm,
            c.axis1_name,
            format_axis_value(c.axis1),
            c.axis2_name,
            format_axis_value(c.axis2),
            str(c.trials),
            str(c.successes),
            f"{c.success_rate:.6f}",
            f"{c.mean_iters:.6f}",
            f"{c.mean_wall_ms:.3f}",
        ]))
    try:
        with open(path, "w", newline="") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def pgm_pixels(cells):
    """Grey levels round_half_up(255 * rate); rows = axis2 ascending, cols = axis1 ascending."""
    v1s = sorted({c.axis1 for c in cells})
    v2s = sorted({c.axis2 for c in cells})
    lookup = {(c.axis1, c.axis2): c for c in cells}
    if len(lookup) != len(cells) or len(lookup) != len(v1s) * len(v2s):
        raise GridError("results do not form a complete rectangular grid")
    img = np.zeros((len(v2s), len(v1s)), dtype=np.uint8)
    for row, v2 in enumerate(v2s):
        for col, v1 in enumerate(v1s):
            img[row, col] = math.floor(255 * lookup[(v1, v2)].success_rate + 0.5)
    return img


def emit_pgm(cells, path):
    """Binary greyscale map of success rates (white = always recovered)."""
    if not cells or len({c.algorithm for c in cells}) != 1:
        raise GridError("PGM output needs the results of exactly one algorithm")
    img = pgm_pixels(cells)
    height, width = img.shape
    try:
        with open(path, "wb") as fh:
            fh.write(f"P5\n{width} {height}\n255\n".encode("ascii"))
            fh.write(img.tobytes())
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def read_pgm(path):
    with open(path, "rb") as fh:
        data = fh.read()
    parts = data.split(maxsplit=4)
    if parts[0] != b"P5":
        raise ValueError(f"{path} is not a binary PGM")
    width, height, maxval = int(parts[1]), int(parts[2]), int(parts[3])
    pixels = np.frombuffer(parts[4][: width * height], dtype=np.uint8)
    return pixels.reshape(height, width), maxval


# config files

_INT_KEYS = {"n1", "n2", "trials", "base_seed", "max_iters"}
_FLOAT_KEYS = {"success_threshold", "gamma", "beta_factor", "scad_a", "stop_tol",
               "fixed_p", "fixed_alpha"}
_KNOWN_KEYS = _INT_KEYS | _FLOAT_KEYS | {
    "axis1", "axis1_values", "axis2", "axis2_values", "fixed_r", "algorithms", "svd_method",
}
_REQUIRED = ("n1", "n2", "axis1", "axis1_values", "axis2", "axis2_values", "trials")


def _axis_values(axis, text, lineno):
    try:
        if axis == "r":
            return tuple(int(x) for x in text.split(","))
        return tuple(float(x) for x in text.split(","))
    except ValueError as exc:
        raise ConfigError(f"bad value list for {axis}: {exc}", lineno) from exc


def parse_config_text(text):
    """Parse ``key = value`` lines (``#`` starts a comment) into a grid."""
    raw = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {line!r}", lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _KNOWN_KEYS:
            raise ConfigError(f"unknown key {key!r}", lineno)
        if key in raw:
            raise ConfigError(f"duplicate key {key!r}", lineno)
        raw[key] = (value, lineno)

    for key in _REQUIRED:
        if key not in raw:
            raise ConfigError(f"missing required key {key!r}")

    kwargs = {}
    for key, (value, lineno) in raw.items():
        try:
            if key in _INT_KEYS:
                kwargs[key] = int(value)
            elif key in _FLOAT_KEYS:
                kwargs[key] = float(value)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {value!r}", lineno) from exc

    axis1, axis2 = raw["axis1"][0], raw["axis2"][0]
    kwargs["axis1"], kwargs["axis2"] = axis1, axis2
    kwargs["axis1_values"] = _axis_values(axis1, raw["axis1_values"][0], raw["axis1_values"][1])
    kwargs["axis2_values"] = _axis_values(axis2, raw["axis2_values"][0], raw["axis2_values"][1])

    fixed = {}
    for name in AXES:
        key = f"fixed_{name}"
        if key in raw:
            value, lineno = raw[key]
            if name in (axis1, axis2):
                raise ConfigError(f"{key} given but {name} is a grid axis", lineno)
            if name == "r":
                try:
                    fixed["r"] = int(value)
                except ValueError as exc:
                    raise ConfigError(f"bad value for {key}: {value!r}", lineno) from exc
            else:
                fixed[name] = kwargs.pop(key)
        kwargs.pop(key, None)
    kwargs["fixed"] = fixed

    if "algorithms" in raw:
        kwargs["algorithms"] = tuple(a.strip() for a in raw["algorithms"][0].split(",") if a.strip())
    if "svd_method" in raw:
        method = raw["svd_method"][0]
        if method not in ("auto", "full", "block"):
            raise ConfigError(f"unknown svd_method {method!r}", raw["svd_method"][1])
        kwargs["svd_method"] = method
    return ExperimentGrid(**kwargs)


def parse_config(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    return parse_config_text(text)


def file_sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        h.update(fh.read())
    return h.hexdigest()


def write_outputs(result, out_dir, config_text=""):
    """Write ``<algo>.csv``/``<algo>.pgm`` per algorithm and ``manifest.txt``."""
    os.makedirs(out_dir, exist_ok=True)
    g = result.grid
    written = []
    for name in g.algorithms:
        cells = result.for_algorithm(name)
        csv_path = os.path.join(out_dir, f"{name}.csv")
        pgm_path = os.path.join(out_dir, f"{name}.pgm")
        emit_csv(cells, csv_path)
        emit_pgm(cells, pgm_path)
        written += [csv_path, pgm_path]

    lines = ["# config"]
    lines += [f"  {ln}" for ln in config_text.strip().splitlines()]
    lines += [
        "# effective settings",
        f"  stop_tol = {g.stop_tol!r}",
        f"  max_iters = {g.max_iters}",
        f"  svd_method = {g.svd_method}",
        f"  success_threshold = {g.success_threshold!r}",
        f"  beta = {g.beta_factor!r} * (mu r / n) * sigma_1",
        "# sha256",
    ]
    lines += [f"  {file_sha256(p)}  {os.path.basename(p)}" for p in written]
    manifest = os.path.join(out_dir, "manifest.txt")
    with open(manifest, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    return written + [manifest]
