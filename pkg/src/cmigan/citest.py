"""Conditional-independence testing on top of the CMI estimators.

A CI test scores each dataset with an estimated CMI and thresholds it;
benchmark quality over a labeled collection is summarized by AuROC with
conditionally dependent (CD) datasets as the positive class.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata

from .estimators import EstimatorConfig, estimate
from .knn import KSGConfig

DEFAULT_THRESHOLD = 0.01  # nats


def ci_decide(score: float, threshold: float = DEFAULT_THRESHOLD) -> str:
    """'CD' when the score strictly exceeds the threshold, else 'CI'."""
    if not np.isfinite(score):
        raise ValueError("score must be finite")
    return "CD" if score > threshold else "CI"


def _check_labels(labels: np.ndarray):
    if set(np.unique(labels)) - {0, 1}:
        raise ValueError("labels must be 0 (CI) or 1 (CD)")
    if labels.sum() == 0 or labels.sum() == len(labels):
        raise ValueError("need at least one dataset of each class for AuROC")


def auroc(scores, labels) -> float:
    """Area under the ROC curve via the rank statistic, ties as 1/2.

    Equals the Mann-Whitney U of the positive class divided by the
    number of (positive, negative) pairs, which is exactly the pairwise
    definition with ties counted half.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise ValueError("scores and labels must be matching 1-d arrays")
    if not np.isfinite(scores).all():
        raise ValueError("scores must be finite")
    _check_labels(labels)
    pos = labels == 1
    n_pos = int(pos.sum())
    n_neg = len(labels) - n_pos
    ranks = rankdata(scores)  # midranks
    u = ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def auroc_bruteforce(scores, labels) -> float:
    """Pairwise reference: mean over (pos, neg) pairs of 1/0.5/0."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    _check_labels(labels)
    pos = scores[labels == 1]
    neg = scores[labels == 0]
    wins = (pos[:, None] > neg[None, :]).sum()
    ties = (pos[:, None] == neg[None, :]).sum()
    return float((wins + 0.5 * ties) / (len(pos) * len(neg)))


@dataclass
class CITEntry:
    dataset_id: str
    label: str
    score: float | None
    decision: str | None
    failed: bool = False
    error: str | None = None

    def to_dict(self) -> dict:
        return {
            "dataset_id": self.dataset_id,
            "label": self.label,
            "score": self.score,
            "decision": self.decision,
            "failed": self.failed,
            "error": self.error,
        }


@dataclass
class CITBenchReport:
    """Per-dataset scores/decisions plus the collection-level AuROC."""

    estimator: str
    threshold: float
    entries: list[CITEntry] = field(default_factory=list)
    auroc: float = float("nan")

    @property
    def excluded(self) -> list[str]:
        return [e.dataset_id for e in self.entries if e.failed]

    def to_dict(self) -> dict:
        return {
            "estimator": self.estimator,
            "threshold": self.threshold,
            "auroc": self.auroc,
            "excluded": self.excluded,
            "entries": [e.to_dict() for e in self.entries],
        }


def run_cit_benchmark(
    datasets,
    estimator: str,
    config: EstimatorConfig | None = None,
    threshold: float = DEFAULT_THRESHOLD,
    ksg_config: KSGConfig | None = None,
    ids=None,
    jobs: int = 1,
) -> CITBenchReport:
    """Score a labeled collection and compute its AuROC.

    Parameters
    ----------
    datasets : sequence of (SampleSet, label)
        ``label`` is 'CI' or 'CD'.
    estimator : str
        One of the estimator ids accepted by
        :func:`cmigan.estimators.estimate`. Every dataset runs with the
        same config, so results are deterministic given its seed.
    ids : sequence of str, optional
        Names for report entries; defaults to ds000, ds001, ...

    Datasets whose estimate fails (all runs diverged) are reported,
    marked excluded, and left out of the AuROC.
    """
    cfg = config or EstimatorConfig()
    if ids is None:
        ids = [f"ds{i:03d}" for i in range(len(datasets))]
    if len(ids) != len(datasets):
        raise ValueError("ids and datasets must have the same length")

    report = CITBenchReport(estimator=estimator, threshold=threshold)
    scores, labels = [], []
    for name, (samples, label) in zip(ids, datasets):
        if label not in ("CI", "CD"):
            raise ValueError(f"label for {name} must be 'CI' or 'CD', got {label!r}")
        try:
            rep = estimate(samples, estimator, cfg, jobs=jobs, ksg_config=ksg_config)
            if not rep.per_run or not np.isfinite(rep.mean):
                raise RuntimeError("all runs failed")
            score = rep.mean
        except RuntimeError as exc:
            report.entries.append(
                CITEntry(name, label, score=None, decision=None, failed=True, error=str(exc))
            )
            continue
        report.entries.append(CITEntry(name, label, score=score, decision=ci_decide(score, threshold)))
        scores.append(score)
        labels.append(1 if label == "CD" else 0)

    if scores and 0 < sum(labels) < len(labels):
        report.auroc = auroc(np.asarray(scores), np.asarray(labels))
    return report
