"""File formats and the critical-value cache.

Formats owned here:

* dataset CSV -- one observation per line, d comma-separated floats, an
  optional single header line;
* grid JSON -- {dim, kind, n, n_r, n_s, n_0, points}, points in construction
  order (shell-major, direction-minor, origins last), which rank extraction
  relies on;
* assignment / rank-sign / scored-sample / power-curve CSV exports;
* test-result JSON;
* the critical-value cache: one JSON file per key, named by the SHA-256 hex
  digest of the key tuple, written atomically (temp file + rename).
"""

from __future__ import annotations

import csv
import hashlib
import io as _stdio
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .grids import Factorization, Grid, ReferenceKind
from .scores import RankSign, ScoreKind, ScoredSample
from .simulate import PowerCurve, Scenario, ScenarioKind
from .transport import EmpiricalMap
from .two_sample import CriticalValueTable, TestResult, mc_critical_value

__all__ = [
    "read_dataset_csv",
    "grid_to_json",
    "grid_from_json",
    "write_grid",
    "read_grid",
    "assignment_csv",
    "rank_sign_csv",
    "scored_csv",
    "power_curve_csv",
    "test_result_json",
    "resolve_cache_dir",
    "cached_critical_value",
]

CACHE_ENV_VAR = "OTRANK_CACHE"
DEFAULT_CACHE_DIR = ".otrank-cache"


def read_dataset_csv(path) -> np.ndarray:
    """Load observations from CSV; errors carry the offending line number."""
    rows: list[list[float]] = []
    with open(path, newline="") as handle:
        for lineno, record in enumerate(csv.reader(handle), start=1):
            if not record or (len(record) == 1 and not record[0].strip()):
                continue
            try:
                rows.append([float(cell) for cell in record])
            except ValueError:
                if lineno == 1 and not rows:
                    continue  # header line
                raise ValueError(f"{path}: line {lineno}: malformed CSV row {record!r}") from None
            if len(rows) > 1 and len(rows[-1]) != len(rows[0]):
                raise ValueError(
                    f"{path}: line {lineno}: expected {len(rows[0])} columns, got {len(rows[-1])}"
                )
    if not rows:
        raise ValueError(f"{path}: no data rows")
    return np.asarray(rows, dtype=float)


def grid_to_json(grid: Grid) -> str:
    fact = grid.factorization
    payload = {
        "dim": grid.dim,
        "kind": grid.kind.value,
        "n": grid.n,
        "n_r": None if fact is None else fact.n_r,
        "n_s": None if fact is None else fact.n_s,
        "n_0": None if fact is None else fact.n_0,
        "points": grid.points.tolist(),
    }
    return json.dumps(payload, indent=2)


def grid_from_json(text: str) -> Grid:
    payload = json.loads(text)
    kind = ReferenceKind(payload["kind"])
    fact = None
    if kind.is_spherical:
        fact = Factorization(payload["n"], payload["n_r"], payload["n_s"], payload["n_0"])
    points = np.asarray(payload["points"], dtype=float)
    if points.shape != (payload["n"], payload["dim"]):
        raise ValueError("grid JSON points do not match declared shape")
    return Grid(payload["dim"], kind, points, fact)


def write_grid(grid: Grid, path) -> None:
    _atomic_write(Path(path), grid_to_json(grid) + "\n")


def read_grid(path) -> Grid:
    return grid_from_json(Path(path).read_text())


def _csv_text(header: list[str], rows) -> str:
    buf = _stdio.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def assignment_csv(emp_map: EmpiricalMap, data: np.ndarray) -> str:
    """Rows (obs_index, grid_index, sq_distance)."""
    perm = emp_map.assignment.perm
    sq = ((np.asarray(data, dtype=float) - emp_map.images) ** 2).sum(axis=1)
    rows = [[i, int(g), repr(float(sq[i]))] for i, g in enumerate(perm)]
    return _csv_text(["obs_index", "grid_index", "sq_distance"], rows)


def rank_sign_csv(rank_signs: list[RankSign]) -> str:
    """Rows (obs_index, rank, sign_1..sign_d)."""
    dim = len(rank_signs[0].sign)
    header = ["obs_index", "rank"] + [f"sign_{k + 1}" for k in range(dim)]
    rows = [
        [i, rs.rank] + [repr(float(c)) for c in rs.sign] for i, rs in enumerate(rank_signs)
    ]
    return _csv_text(header, rows)


def scored_csv(scored: ScoredSample) -> str:
    """Rows (obs_index, j_1..j_d)."""
    header = ["obs_index"] + [f"j_{k + 1}" for k in range(scored.dim)]
    rows = [[i] + [repr(float(c)) for c in row] for i, row in enumerate(scored.values)]
    return _csv_text(header, rows)


def power_curve_csv(curve: PowerCurve) -> str:
    """Rows (scenario, test, n, eta, rate, reps, seed), one per (test, shift)."""
    rows = [
        [curve.scenario.label(), test, curve.n, repr(float(eta)),
         repr(curve.rates[(test, eta)]), curve.reps, curve.seed]
        for test in curve.tests
        for eta in curve.shifts
    ]
    return _csv_text(["scenario", "test", "n", "eta", "rate", "reps", "seed"], rows)


def test_result_json(result: TestResult, config_echo: dict) -> str:
    payload = {
        "statistic": result.statistic,
        "critical_value": result.critical_value,
        "p_value": result.p_value,
        "reject": result.reject,
        "config": config_echo,
    }
    return json.dumps(payload, indent=2)


def simulation_config_json(scenario, n, tests, shifts, reps, seed, alpha, mc_reps) -> str:
    """JSON mirror of a Scenario plus the power-run parameters."""
    payload = {
        "scenario": {
            "kind": scenario.kind.value,
            "dim": scenario.dim,
            "df": scenario.df,
            "sigma": None if scenario.sigma is None else scenario.sigma.tolist(),
        },
        "n": n,
        "tests": list(tests),
        "shifts": [float(s) for s in shifts],
        "reps": reps,
        "seed": seed,
        "alpha": alpha,
        "mc_reps": mc_reps,
    }
    return json.dumps(payload, indent=2)


def simulation_config_from_json(text: str) -> dict:
    """Parse a simulation config; returns power_curve-ready keyword arguments."""
    payload = json.loads(text)
    sc = payload["scenario"]
    scenario = Scenario(
        ScenarioKind(sc["kind"]),
        sc["dim"],
        df=sc.get("df"),
        sigma=None if sc.get("sigma") is None else np.asarray(sc["sigma"], dtype=float),
    )
    return {
        "scenario": scenario,
        "n": payload["n"],
        "tests": list(payload["tests"]),
        "shifts": [float(s) for s in payload["shifts"]],
        "reps": payload["reps"],
        "seed": payload["seed"],
        "alpha": payload.get("alpha", 0.05),
        "mc_reps": payload.get("mc_reps", 40000),
    }


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def resolve_cache_dir(explicit=None) -> Path:
    """Cache directory: explicit flag, then $OTRANK_CACHE, then the default."""
    if explicit is not None:
        return Path(explicit)
    env = os.environ.get(CACHE_ENV_VAR)
    return Path(env) if env else Path(DEFAULT_CACHE_DIR)


def _cache_path(cache_dir: Path, key: tuple) -> Path:
    digest = hashlib.sha256(json.dumps(list(key)).encode()).hexdigest()
    return cache_dir / f"{digest}.json"


def _table_to_json(table: CriticalValueTable) -> str:
    payload = {
        "key": list(table.key),
        "alpha": table.alpha,
        "critical_value": table.critical_value,
        "null_sample": table.null_sample.tolist(),
    }
    return json.dumps(payload)


def _table_from_json(text: str, alpha: float) -> CriticalValueTable:
    payload = json.loads(text)
    null = np.asarray(payload["null_sample"], dtype=float)
    if payload["alpha"] == alpha:
        critical = payload["critical_value"]
    else:
        from .two_sample import _critical_index

        critical = float(null[_critical_index(alpha, len(null)) - 1])
    key = tuple(tuple(x) if isinstance(x, list) else x for x in payload["key"])
    return CriticalValueTable(key, alpha, critical, null)


def cached_critical_value(
    grid: Grid,
    score: ScoreKind,
    n1: int,
    alpha: float,
    reps: int,
    seed: int,
    cache_dir=None,
) -> CriticalValueTable:
    """Critical-value table with a compute-and-store cache behind it.

    The cache key is the full grid identity plus (score, n1, reps, seed);
    alpha is not part of the key because the stored null sample determines
    the critical value at any level.
    """
    cache = resolve_cache_dir(cache_dir)
    _, kind_value, _, fact = grid.identity()
    key = (grid.dim, grid.n, n1, kind_value, fact, ScoreKind(score).value, reps, seed)
    path = _cache_path(cache, key)
    if path.exists():
        return _table_from_json(path.read_text(), alpha)
    table = mc_critical_value(grid, score, n1, alpha, reps, seed)
    _atomic_write(path, _table_to_json(table))
    return table
