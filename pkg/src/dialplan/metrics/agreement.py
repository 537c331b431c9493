"""Fleiss's kappa for inter-annotator agreement on categorical scores."""

from __future__ import annotations

from typing import Sequence


def fleiss_kappa(
    score_matrix: Sequence[Sequence[int]],
    categories: Sequence[int] = (0, 1, 2),
) -> float:
    """Standard Fleiss's kappa over an items x raters matrix.

    Degenerate case (everyone always picks the same category) is defined
    as perfect agreement, 1.0.
    """
    if not score_matrix:
        raise ValueError("empty score matrix")
    n_raters = len(score_matrix[0])
    if n_raters < 2:
        raise ValueError("need at least 2 raters")
    cats = list(categories)
    for row in score_matrix:
        if len(row) != n_raters:
            raise ValueError("ragged score matrix")
        for value in row:
            if value not in cats:
                raise ValueError(f"score {value} outside categories {cats}")

    n_items = len(score_matrix)
    counts = [[sum(1 for v in row if v == c) for c in cats] for row in score_matrix]

    p_i = [
        (sum(c * c for c in row) - n_raters) / (n_raters * (n_raters - 1))
        for row in counts
    ]
    p_bar = sum(p_i) / n_items
    totals = [sum(row[j] for row in counts) for j in range(len(cats))]
    grand = n_items * n_raters
    p_j = [t / grand for t in totals]
    p_e = sum(p * p for p in p_j)
    if p_e >= 1.0:
        return 1.0
    return (p_bar - p_e) / (1 - p_e)
