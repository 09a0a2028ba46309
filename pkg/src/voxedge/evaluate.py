"""Cloud-to-cloud accuracy (Chamfer means) and completeness against a reference."""
from dataclasses import asdict, dataclass

import numpy as np
from scipy.spatial import cKDTree

from ._parallel import worker_count
from .errors import ConfigurationError, EvaluationError
from .extract import PointCloud

DEFAULT_THRESHOLDS = (0.5, 1.0, 1.5)
DEFAULT_SUBSAMPLE_CAP = 2_500_000


def _points(cloud):
    return cloud.points if isinstance(cloud, PointCloud) else np.asarray(cloud, dtype=np.float64).reshape(-1, 3)


def nn_distances(source, target):
    """Exact Euclidean distance from every point of ``source`` to its nearest point in ``target``."""
    src, dst = _points(source), _points(target)
    if len(dst) == 0:
        raise EvaluationError("nearest-neighbour target cloud is empty")
    if len(src) == 0:
        raise EvaluationError("nearest-neighbour query cloud is empty")
    tree = cKDTree(dst)
    dist, _ = tree.query(src, k=1, workers=worker_count())
    return dist


def chamfer(data, reference):
    """(mean data->reference distance, mean reference->data distance) in mm."""
    if len(_points(data)) == 0 or len(_points(reference)) == 0:
        raise EvaluationError("Chamfer distance needs two non-empty clouds")
    d2r = float(np.mean(nn_distances(data, reference)))
    r2d = float(np.mean(nn_distances(reference, data)))
    return d2r, r2d


@dataclass(frozen=True)
class CompletenessEntry:
    threshold: float
    covered_count: int
    covered_percent: float


def _check_thresholds(thresholds):
    thresholds = [float(t) for t in thresholds]
    if any(not t > 0 for t in thresholds):
        raise ConfigurationError(f"distance thresholds must be > 0, got {thresholds}")
    return thresholds


def completeness_from_distances(ref_to_data, thresholds):
    n = len(ref_to_data)
    out = []
    for t in _check_thresholds(thresholds):
        count = int(np.count_nonzero(ref_to_data <= t))
        out.append(CompletenessEntry(t, count, 100.0 * count / n))
    return out


def completeness(data, reference, thresholds=DEFAULT_THRESHOLDS):
    """Share of reference points lying within each distance threshold of the data."""
    ref = _points(reference)
    if len(ref) == 0:
        raise EvaluationError("completeness needs a non-empty reference cloud")
    if len(_points(data)) == 0:
        return [CompletenessEntry(t, 0, 0.0) for t in _check_thresholds(thresholds)]
    return completeness_from_distances(nn_distances(reference, data), thresholds)


def subsample(cloud, cap=DEFAULT_SUBSAMPLE_CAP, seed=0):
    """Seeded random permutation truncated to ``cap`` points; identity when small enough."""
    cap = int(cap)
    if cap <= 0:
        raise ConfigurationError("subsample cap must be > 0")
    if len(cloud) <= cap:
        return cloud
    order = np.random.default_rng(seed).permutation(len(cloud))[:cap]
    return cloud.take(order)


@dataclass
class EvalReport:
    data_to_reference_mean: float
    reference_to_data_mean: float
    completeness: list
    data_point_count: int
    reference_point_count: int
    subsample_cap: int
    seed: int

    def to_dict(self):
        d = asdict(self)
        d["completeness"] = [asdict(e) if not isinstance(e, dict) else e for e in self.completeness]
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["completeness"] = [CompletenessEntry(**e) for e in d["completeness"]]
        return cls(**d)


def evaluate(data, reference, thresholds=DEFAULT_THRESHOLDS, cap=DEFAULT_SUBSAMPLE_CAP, seed=0):
    """Full report; the data cloud is subsampled to ``cap`` points before both directions.

    ``data_point_count`` is the number of data points actually evaluated.
    """
    if len(reference) == 0:
        raise EvaluationError("reference cloud is empty")
    if len(data) == 0:
        raise EvaluationError("reconstruction cloud is empty")
    sub = subsample(data, cap, seed)
    d2r = nn_distances(sub, reference)
    r2d = nn_distances(reference, sub)
    return EvalReport(
        data_to_reference_mean=float(np.mean(d2r)),
        reference_to_data_mean=float(np.mean(r2d)),
        completeness=completeness_from_distances(r2d, thresholds),
        data_point_count=len(sub),
        reference_point_count=len(reference),
        subsample_cap=int(cap),
        seed=int(seed),
    )


def format_report_table(rows):
    """Plain-text comparison table for ``[(label, EvalReport), ...]``."""
    if not rows:
        return ""
    thresholds = [e.threshold for e in rows[0][1].completeness]
    head = ["method", "points", "data->ref [mm]", "ref->data [mm]"]
    head += [f"<= {t:g} mm" for t in thresholds]
    body = []
    for label, rep in rows:
        line = [label, str(rep.data_point_count), f"{rep.data_to_reference_mean:.2f}", f"{rep.reference_to_data_mean:.2f}"]
        line += [f"{e.covered_count} ({e.covered_percent:.2f} %)" for e in rep.completeness]
        body.append(line)
    widths = [max(len(r[c]) for r in [head] + body) for c in range(len(head))]
    fmt = lambda r: "  ".join(cell.ljust(w) if c == 0 else cell.rjust(w) for c, (cell, w) in enumerate(zip(r, widths)))
    sep = "  ".join("-" * w for w in widths)
    return "\n".join([fmt(head), sep] + [fmt(r) for r in body])
