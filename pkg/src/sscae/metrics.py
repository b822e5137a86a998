"""Diagnostics quantifying filter quality and featuremap sparsity, plus the
training-curve CSV sink.

Scores cover three complementary views of an activation tensor: Hoyer
sparseness within each map, Hoyer sparseness of the across-map feature
vector at each site, and the spread (coefficient of variation) of site
activity.  Filters whose energy collapses onto a single tap act as plain
copy operators; the delta score flags those.
"""

import csv
import math
from dataclasses import dataclass, fields

import numpy as np

DELTA_THRESHOLD = 0.9


@dataclass
class TrainReport:
    epoch: int
    iteration: int
    l2rec: float
    l1sp: float
    total: float
    delta_filter_count: int
    mean_hoyer: float
    population_sparsity: float
    activity_uniformity: float
    wall_seconds: float


def delta_filter_score(w):
    """Energy concentration max_i w_i^2 / sum_i w_i^2 of one filter, in [0, 1].

    1.0 for a one-hot (delta) filter, 1/P for a constant one.  An all-zero
    (dead) filter scores 1 by definition.
    """
    sq = np.square(np.asarray(w, dtype=np.float64)).ravel()
    total = sq.sum()
    if total == 0.0:
        return 1.0
    return float(sq.max() / total)


def delta_filter_count(weights, threshold=DELTA_THRESHOLD):
    """Number of filters in a [K, C, kh, kw] bank flagged as delta/dead."""
    return int(sum(delta_filter_score(weights[k]) >= threshold for k in range(weights.shape[0])))


def hoyer_sparseness(v):
    """(sqrt(P) - l1/l2) / (sqrt(P) - 1): 1 for one-hot, 0 for constant.

    Undefined (None) for all-zero vectors; requires at least 2 entries.
    """
    v = np.asarray(v, dtype=np.float64).ravel()
    p = v.size
    if p < 2:
        raise ValueError("hoyer_sparseness needs at least 2 entries")
    l2 = np.linalg.norm(v)
    if l2 == 0.0:
        return None
    score = (math.sqrt(p) - np.abs(v).sum() / l2) / (math.sqrt(p) - 1.0)
    return float(min(max(score, 0.0), 1.0))


def _hoyer_grouped(l1, l2, p):
    """Vectorized Hoyer over groups given their l1/l2 norms; nan where l2=0."""
    root = math.sqrt(p)
    with np.errstate(invalid="ignore", divide="ignore"):
        score = (root - l1 / l2) / (root - 1.0)
    score = np.where(l2 > 0.0, score, np.nan)
    return np.clip(score, 0.0, 1.0)


def mean_map_hoyer(h):
    """Mean within-map Hoyer sparseness over batch items and maps.

    All-zero maps are skipped; 0.0 if every map is zero.
    """
    n, k = h.shape[0], h.shape[1]
    flat = h.reshape(n * k, -1)
    if flat.shape[1] < 2:
        return 0.0
    scores = _hoyer_grouped(np.abs(flat).sum(axis=1), np.linalg.norm(flat, axis=1), flat.shape[1])
    defined = scores[~np.isnan(scores)]
    return float(defined.mean()) if defined.size else 0.0


def population_sparsity(h):
    """Mean Hoyer sparseness of the across-map feature vector at each site.

    Complements mean_map_hoyer: high values mean each site activates few
    maps.  Sites with an all-zero vector are skipped; 0.0 when every site is
    zero or there is a single map.
    """
    k = h.shape[1]
    if k < 2:
        return 0.0
    vectors = h.transpose(0, 2, 3, 1).reshape(-1, k)
    scores = _hoyer_grouped(
        np.abs(vectors).sum(axis=1), np.linalg.norm(vectors, axis=1), k
    )
    defined = scores[~np.isnan(scores)]
    return float(defined.mean()) if defined.size else 0.0


def activity_uniformity(h, eps=1e-8):
    """Coefficient of variation (std/mean) of active-site feature-vector norms.

    Lower is more uniform.  Sites whose norm is <= eps do not count as
    active; returns None when nothing is active.
    """
    norms = np.sqrt(np.square(h).sum(axis=1)).ravel()
    active = norms[norms > eps]
    if active.size == 0:
        return None
    return float(active.std() / active.mean())


def report_uniformity(h, eps=1e-8):
    """activity_uniformity folded to nan for the no-active-sites case."""
    value = activity_uniformity(h, eps)
    return float("nan") if value is None else value


def write_csv(reports, path):
    """Header plus one row per epoch, TrainReport field order, repr floats.

    repr round-trips every float exactly, so read_csv reproduces the
    reports bit-for-bit (nan included).
    """
    names = [f.name for f in fields(TrainReport)]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(names)
        for r in reports:
            writer.writerow(
                [repr(getattr(r, n)) if isinstance(getattr(r, n), float) else getattr(r, n)
                 for n in names]
            )


def read_csv(path):
    """Parse a metrics CSV written by write_csv back into TrainReports."""
    out = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        expected = [f.name for f in fields(TrainReport)]
        if header != expected:
            raise ValueError(f"unexpected CSV header {header}")
        types = {f.name: f.type for f in fields(TrainReport)}
        for row in reader:
            kwargs = {
                name: (int(cell) if types[name] is int else float(cell))
                for name, cell in zip(expected, row)
            }
            out.append(TrainReport(**kwargs))
    return out
