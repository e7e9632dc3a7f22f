"""Artifact persistence: CSV/JSON writers and the matching loaders.

Float formatting uses ``repr`` (shortest round-trip), so artifacts are
byte-identical across runs with the same seed and loaders recover exact
values. JSON is written with sorted keys; ``inf`` edges are encoded as
strings by the partition itself.
"""

import csv
import json
from pathlib import Path

import numpy as np

from .dpm_cut import DensityGridDraws, EmissionDraws
from .exceptions import MissingArtifact
from .histogram_gibbs import DrawStore


def _fmt(x) -> str:
    return repr(float(x))


def write_json(path, obj):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(obj, fh, sort_keys=True, indent=1, default=_json_default)
        fh.write("\n")


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    raise TypeError(f"not JSON serialisable: {type(obj)}")


def read_json(path):
    path = Path(path)
    if not path.exists():
        raise MissingArtifact(path)
    with open(path) as fh:
        return json.load(fh)


def write_table(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def read_table(path):
    path = Path(path)
    if not path.exists():
        raise MissingArtifact(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        return header, list(reader)


# ---------------------------------------------------------------- series

def write_series(path, name, values):
    write_table(path, [name], [[_fmt(v)] if not isinstance(v, (int, np.integer)) else [int(v)] for v in values])


def read_series(path, dtype=float) -> np.ndarray:
    _, rows = read_table(path)
    return np.asarray([row[0] for row in rows], dtype=dtype)


# ------------------------------------------------------------- draw store

def save_draw_store(store: DrawStore, csv_path, meta_path):
    """Columns: iter, log_posterior, q entries row-major, omega entries
    (bin-major), relabeling permutation."""
    d = len(store)
    r = store.n_states
    kappa = store.omega.shape[1]
    cfg = store.meta.get("config", {})
    burn, thin = cfg.get("burn_in", 0), cfg.get("thin", 1)
    header = (
        ["iter", "log_posterior"]
        + [f"q_{i}_{j}" for i in range(r) for j in range(r)]
        + [f"w_{m}_{i}" for m in range(kappa) for i in range(r)]
        + [f"perm_{i}" for i in range(r)]
    )
    rows = []
    for t in range(d):
        row = [burn + (t + 1) * thin, _fmt(store.log_posteriors[t])]
        row += [_fmt(v) for v in store.q[t].ravel()]
        row += [_fmt(v) for v in store.omega[t].ravel()]
        row += [int(v) for v in store.relabeling[t]]
        rows.append(row)
    write_table(csv_path, header, rows)
    write_json(meta_path, store.meta)


def load_draw_store(csv_path, meta_path) -> DrawStore:
    meta = read_json(meta_path)
    header, rows = read_table(csv_path)
    r = meta["R"]
    kappa = meta["kappa"]
    d = len(rows)
    data = np.asarray([[float(v) for v in row[1 : 2 + r * r + kappa * r]] for row in rows])
    q = data[:, 1 : 1 + r * r].reshape(d, r, r)
    omega = data[:, 1 + r * r :].reshape(d, kappa, r)
    lp = data[:, 0]
    relab = np.asarray([[int(v) for v in row[-r:]] for row in rows], dtype=np.int64)
    return DrawStore(q=q, omega=omega, log_posteriors=lp, relabeling=relab, meta=meta)


# --------------------------------------------------------- emission draws

def save_emission_draws(draws: EmissionDraws, path):
    """Long format: draw, state, component, mu, v, w."""
    d, s_max, r = draws.mu.shape
    rows = []
    for t in range(d):
        for state in range(r):
            for j in range(s_max):
                rows.append(
                    [t, state, j, _fmt(draws.mu[t, j, state]), _fmt(draws.v[t, state]), _fmt(draws.w[t, j, state])]
                )
    write_table(path, ["draw", "state", "component", "mu", "v", "w"], rows)


def load_emission_draws(path) -> EmissionDraws:
    _, rows = read_table(path)
    data = np.asarray(rows, dtype=float)
    d = int(data[:, 0].max()) + 1
    r = int(data[:, 1].max()) + 1
    s_max = int(data[:, 2].max()) + 1
    mu = np.empty((d, s_max, r))
    v = np.empty((d, r))
    w = np.empty((d, s_max, r))
    t = data[:, 0].astype(int)
    state = data[:, 1].astype(int)
    comp = data[:, 2].astype(int)
    mu[t, comp, state] = data[:, 3]
    v[t, state] = data[:, 4]
    w[t, comp, state] = data[:, 5]
    return EmissionDraws(mu=mu, v=v, w=w)


# --------------------------------------------------------- density bands

def save_density_summary(dgd: DensityGridDraws, path, level: float = 0.9, truth=None):
    """Pointwise mean and equal-tailed band per state; optional truth column."""
    from .dpm_cut import pointwise_bands

    mean, lo, hi = pointwise_bands(dgd, level)
    r, g = mean.shape
    header = ["grid", "state", "mean", "lo", "hi"] + (["truth"] if truth is not None else [])
    rows = []
    for state in range(r):
        for k in range(g):
            row = [_fmt(dgd.grid[k]), state, _fmt(mean[state, k]), _fmt(lo[state, k]), _fmt(hi[state, k])]
            if truth is not None:
                row.append(_fmt(truth[state][k]))
            rows.append(row)
    write_table(path, header, rows)


def load_density_summary(path):
    header, rows = read_table(path)
    data = np.asarray(rows, dtype=float)
    states = data[:, 1].astype(int)
    r = states.max() + 1
    grid = data[states == 0, 0]
    out = {"grid": grid}
    for col, name in enumerate(header[2:], start=2):
        out[name] = np.stack([data[states == s, col] for s in range(r)])
    return out


# -------------------------------------------------------------- manifests

def run_dir(cfg_hash: str, out_root) -> Path:
    return Path(out_root) / cfg_hash


def write_manifest(directory, command, cfg_hash, seed, wall_time_s, written, extra=None):
    import datetime

    manifest = {
        "command": command,
        "config_hash": cfg_hash,
        "seed": seed,
        "wall_time_s": round(float(wall_time_s), 3),
        "written": sorted(str(w) for w in written),
        # timestamp is intentionally the only non-reproducible field
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }
    if extra:
        manifest.update(extra)
    path = Path(directory) / f"manifest_{command}.json"
    write_json(path, manifest)
    return path


MANIFEST_SCHEMA = {
    "type": "object",
    "required": ["command", "config_hash", "seed", "wall_time_s", "written", "timestamp"],
    "properties": {
        "command": {"type": "string"},
        "config_hash": {"type": "string", "pattern": "^[0-9a-f]{12}$"},
        "seed": {"type": "integer"},
        "wall_time_s": {"type": "number"},
        "written": {"type": "array", "items": {"type": "string"}},
        "timestamp": {"type": "string"},
    },
}


def require(path) -> Path:
    path = Path(path)
    if not path.exists():
        raise MissingArtifact(path)
    return path
