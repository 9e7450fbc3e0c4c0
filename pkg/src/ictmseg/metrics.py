"""Agreement metrics between a computed partition and a reference.

Phase numbering is arbitrary, so the result's phases are first matched to
the reference phases by the permutation that maximizes pixel agreement:
exhaustively for up to 6 phases, via the Hungarian assignment beyond that.
All metrics are reported after this matching.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import ContractError
from .image import Partition

_EXHAUSTIVE_LIMIT = 6


@dataclass(frozen=True)
class MetricsReport:
    """Accuracy, per-phase overlap scores and the matched confusion matrix.

    ``confusion[t][r]`` counts pixels with truth phase t and (matched)
    result phase r. Dice and Jaccard are defined as 1 for phases empty in
    both partitions.
    """

    accuracy: float
    dice: tuple[float, ...]
    jaccard: tuple[float, ...]
    confusion: tuple[tuple[int, ...], ...]

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "dice": list(self.dice),
            "jaccard": list(self.jaccard),
            "confusion": [list(row) for row in self.confusion],
        }

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict(), indent=2, sort_keys=True)
        if path is not None:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text + "\n")
        return text


def score(result: Partition, truth: Partition) -> MetricsReport:
    """Score a partition against the reference truth."""
    if result.shape != truth.shape:
        raise ContractError(
            f"result {result.shape} and truth {truth.shape} differ in shape"
        )
    if result.phases > truth.phases:
        raise ContractError(
            f"result has {result.phases} phases but truth only {truth.phases}"
        )
    n = truth.phases

    counts = np.zeros((n, n), dtype=np.int64)
    np.add.at(counts, (truth.labels.ravel(), result.labels.ravel()), 1)

    # mapping[r] is the truth phase assigned to result phase r.
    mapping = _best_mapping(counts)
    matched = np.asarray(mapping)[result.labels]
    confusion = np.zeros((n, n), dtype=np.int64)
    np.add.at(confusion, (truth.labels.ravel(), matched.ravel()), 1)

    total = confusion.sum()
    accuracy = float(np.trace(confusion)) / float(total)

    dice = []
    jaccard = []
    for i in range(n):
        tp = int(confusion[i, i])
        size_truth = int(confusion[i, :].sum())
        size_result = int(confusion[:, i].sum())
        union = size_truth + size_result - tp
        if union == 0:
            dice.append(1.0)
            jaccard.append(1.0)
        else:
            jaccard.append(tp / union)
            dice.append(2.0 * tp / (size_truth + size_result))

    return MetricsReport(
        accuracy=accuracy,
        dice=tuple(dice),
        jaccard=tuple(jaccard),
        confusion=tuple(tuple(int(v) for v in row) for row in confusion),
    )


def _best_mapping(counts: np.ndarray) -> list[int]:
    """Truth phase assigned to each result phase, maximizing agreement."""
    n = counts.shape[0]
    if n <= _EXHAUSTIVE_LIMIT:
        best, best_perm = -1, None
        for perm in itertools.permutations(range(n)):
            agree = sum(counts[perm[r], r] for r in range(n))
            if agree > best:
                best, best_perm = agree, perm
        return list(best_perm)
    rows, cols = linear_sum_assignment(counts, maximize=True)
    mapping = [0] * n
    for t, r in zip(rows, cols):
        mapping[r] = t
    return mapping
