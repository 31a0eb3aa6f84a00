"""Detection scores over persistence diagrams.

The hole detection score s_m is the relative persistence gap after the m-th
most persistent feature. A diagram whose features all die almost immediately
(death/birth below 1.25) is considered empty of signal and scored 0; that
gate is what ``apply_threshold`` decides. The widest-gap score instead asks
whether the largest persistence gap sits exactly after the m-th feature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .ripscomplex import PersistenceDiagram

DEATH_BIRTH_RATIO = 1.25


@dataclass(frozen=True)
class ScoreReport:
    s_m: float
    m: int
    dim: int
    thresholded: bool
    widest_gap_correct: int

    def __post_init__(self):
        if not 0.0 <= self.s_m <= 1.0:
            raise ValueError(f"score {self.s_m} outside [0, 1]")
        if self.thresholded and self.s_m != 0.0:
            raise ValueError("thresholded reports must carry score 0")


def hole_detection_score(diag: PersistenceDiagram, dim: int, m: int) -> float:
    """(p_m - p_{m+1}) / p_m over persistences sorted descending.

    Fewer than m features scores 0; exactly m features treats p_{m+1} as 0
    (the diagonal), scoring 1.
    """
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    p = diag.persistences(dim)
    if p.shape[0] < m:
        return 0.0
    pm = float(p[m - 1])
    pm1 = float(p[m]) if p.shape[0] > m else 0.0
    if math.isinf(pm):
        return 0.0 if math.isinf(pm1) else 1.0
    return (pm - pm1) / pm


def apply_threshold(
    diag: PersistenceDiagram, dim: int, ratio: float = DEATH_BIRTH_RATIO
) -> bool:
    """True (zero the score) iff every dim-feature has death/birth < ratio.

    A feature born at 0 counts as ratio +inf and therefore never passes the
    gate; the empty diagram is vacuously below it.
    """
    for f in diag.in_dim(dim):
        if f.birth == 0.0:
            if f.death > 0.0:
                return False
            continue
        if f.death / f.birth >= ratio:
            return False
    return True


def widest_gap_score(diag: PersistenceDiagram, dim: int, m_true: int) -> int:
    """1 iff the widest persistence gap sits after the m_true-th feature.

    Persistences beyond the list are padded with 0; ties go to the smallest
    index. An empty diagram scores 0.
    """
    if m_true < 1:
        raise ValueError(f"m_true must be >= 1, got {m_true}")
    p = diag.persistences(dim)
    if p.shape[0] == 0:
        return 0
    best_idx = 0
    best_gap = -math.inf
    for alpha in range(p.shape[0]):
        nxt = p[alpha + 1] if alpha + 1 < p.shape[0] else 0.0
        gap = p[alpha] - nxt
        if gap > best_gap:
            best_gap = gap
            best_idx = alpha + 1  # 1-based rank
    return 1 if best_idx == m_true else 0


def score_diagram(
    diag: PersistenceDiagram,
    dim: int,
    m: int,
    use_threshold: bool = True,
    ratio: float = DEATH_BIRTH_RATIO,
) -> ScoreReport:
    """Bundle the detection score, the threshold gate, and the widest-gap flag."""
    gated = use_threshold and apply_threshold(diag, dim, ratio)
    s = 0.0 if gated else hole_detection_score(diag, dim, m)
    return ScoreReport(
        s_m=s,
        m=m,
        dim=dim,
        thresholded=gated,
        widest_gap_correct=widest_gap_score(diag, dim, m),
    )
