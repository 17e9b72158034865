"""Per-cell bigram language model with Modified Kneser-Ney smoothing.

Counts are collected from consecutive token pairs within each post; no
boundary markers are inserted and pairs never cross posts. Smoothing
subtracts a tiered discount (d1 for bigrams seen once, d2 for twice, d3
for three or more times) and redistributes the freed mass through the
continuation probability of the completing word. A simple
unigram-interpolated estimate is available as a baseline.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import log
from typing import Optional, Sequence

from .errors import UndefinedContextError, ValidationError
from .grid import CellId

# Floor applied to every returned probability so log-space scoring never
# sees zero. Far below anything a trained model can produce.
MIN_PROB = 1e-12

# Conventional absolute-discount default used when a discount formula has
# a zero denominator.
FALLBACK_DISCOUNT = 0.75


@dataclass
class CountTables:
    """Raw evidence for one cell.

    ``bigram`` maps left word -> {right word -> count}. ``distinct_left``
    maps a word to the number of distinct bigram types it completes;
    ``total_distinct_bigrams`` is the number of distinct (v, w) pairs.
    """

    unigram: dict[str, int] = field(default_factory=dict)
    bigram: dict[str, dict[str, int]] = field(default_factory=dict)
    distinct_left: dict[str, int] = field(default_factory=dict)
    total_tokens: int = 0
    total_distinct_bigrams: int = 0

    def distinct_right(self, v: str) -> int:
        return len(self.bigram.get(v, {}))


@dataclass(frozen=True)
class Discounts:
    """Tiered discounts with the counts-of-counts they came from.

    n_i is the number of distinct bigrams occurring exactly i times.
    """

    d1: float
    d2: float
    d3: float
    n1: int = 0
    n2: int = 0
    n3: int = 0
    n4: int = 0

    def for_count(self, count: int) -> float:
        if count >= 3:
            return self.d3
        if count == 2:
            return self.d2
        if count == 1:
            return self.d1
        return 0.0


@dataclass(frozen=True)
class BaselineInterpolation:
    """Weights for the plain bigram/unigram interpolation baseline."""

    lambda1: float
    lambda2: float

    def __post_init__(self):
        if not 0.0 <= self.lambda1 <= 1.0 or not 0.0 <= self.lambda2 <= 1.0:
            raise ValidationError("interpolation weights must lie in [0, 1]")
        if abs(self.lambda1 + self.lambda2 - 1.0) > 1e-9:
            raise ValidationError("interpolation weights must sum to 1")


def compute_discounts(n1: int, n2: int, n3: int, n4: int) -> Discounts:
    """Closed-form discounts from counts-of-counts.

    d1 = 1 - 2*n2/(n1 + 2*n2), d2 = 2 - 3*n3*n1/(n2*(n1 + 2*n2)),
    d3 = 3 - 4*n4*n1/(n3*(n1 + 2*n2)); each clamped to [0, i]. A zero
    denominator makes that discount fall back to 0.75.
    """
    base = n1 + 2 * n2
    if base > 0:
        d1 = min(max(1.0 - 2.0 * n2 / base, 0.0), 1.0)
    else:
        d1 = FALLBACK_DISCOUNT
    if n2 * base > 0:
        d2 = min(max(2.0 - 3.0 * n3 * n1 / (n2 * base), 0.0), 2.0)
    else:
        d2 = FALLBACK_DISCOUNT
    if n3 * base > 0:
        d3 = min(max(3.0 - 4.0 * n4 * n1 / (n3 * base), 0.0), 3.0)
    else:
        d3 = FALLBACK_DISCOUNT
    return Discounts(d1, d2, d3, n1, n2, n3, n4)


class CellLanguageModel:
    """Trained counts, discounts, and probability queries for one cell.

    Immutable after construction; every query method is pure.
    """

    def __init__(self, cell: CellId, counts: CountTables, discounts: Discounts, post_count: int):
        self.cell = cell
        self.counts = counts
        self.discounts = discounts
        self.post_count = post_count

    @property
    def vocab(self) -> set[str]:
        return set(self.counts.unigram)

    def continuation_prob(self, w: str) -> float:
        """Fraction of distinct bigram types that ``w`` completes."""
        total = self.counts.total_distinct_bigrams
        if total == 0:
            return 0.0
        return self.counts.distinct_left.get(w, 0) / total

    def backoff_mass(self, v: str) -> float:
        """Probability mass freed by discounting every bigram with left
        context ``v``: d1*|once| + d2*|twice| + d3*|three or more|, over
        c(v). The tier-count form keeps the result independent of table
        iteration order, so trained and reloaded models agree exactly."""
        cv = self.counts.unigram.get(v, 0)
        if cv == 0:
            raise UndefinedContextError(f"context {v!r} unseen in training")
        tiers = [0, 0, 0]
        for count in self.counts.bigram.get(v, {}).values():
            tiers[min(count, 3) - 1] += 1
        d = self.discounts
        return (d.d1 * tiers[0] + d.d2 * tiers[1] + d.d3 * tiers[2]) / cv

    def _bigram_prob_raw(self, v: str, w: str) -> float:
        # Unfloored value; the sum of this over the vocabulary is exactly 1
        # for any context that is never sequence-final.
        cv = self.counts.unigram.get(v, 0)
        pc = self.continuation_prob(w)
        if cv == 0:
            return pc
        cvw = self.counts.bigram.get(v, {}).get(w, 0)
        discounted = max(cvw - self.discounts.for_count(cvw), 0.0) / cv
        return discounted + self.backoff_mass(v) * pc

    def bigram_prob(self, v: str, w: str) -> float:
        """Smoothed probability of seeing ``w`` after ``v``, floored at
        MIN_PROB so callers can take logs unconditionally."""
        return max(self._bigram_prob_raw(v, w), MIN_PROB)

    def baseline_bigram_prob(self, v: str, w: str, interp: BaselineInterpolation) -> float:
        """Plain interpolation of the MLE bigram with the unigram that
        completes it. An unseen context falls back to the unigram estimate
        alone so the result stays a probability."""
        total = self.counts.total_tokens
        if total == 0:
            return MIN_PROB
        p_uni = self.counts.unigram.get(w, 0) / total
        cv = self.counts.unigram.get(v, 0)
        if cv == 0:
            return max(p_uni, MIN_PROB)
        p_bi = self.counts.bigram.get(v, {}).get(w, 0) / cv
        return max(interp.lambda1 * p_bi + interp.lambda2 * p_uni, MIN_PROB)

    def sequence_log_prob(
        self, tokens: Sequence[str], baseline: Optional[BaselineInterpolation] = None
    ) -> float:
        """Log-probability of a token sequence as the product of its
        consecutive-pair probabilities. Fewer than two tokens is an empty
        product, so the result is 0 (log 1)."""
        lp = 0.0
        for v, w in zip(tokens, tokens[1:]):
            if baseline is not None:
                lp += log(self.baseline_bigram_prob(v, w, baseline))
            else:
                lp += log(self.bigram_prob(v, w))
        return lp


def train_cell(posts: Sequence, cell: CellId) -> CellLanguageModel:
    """Build count tables and discounts from the posts assigned to one cell.

    ``posts`` are TokenizedPost instances (only ``.tokens`` is read). An
    empty post list yields a valid model with empty tables.
    """
    tables = CountTables()
    for post in posts:
        toks = post.tokens
        for t in toks:
            tables.unigram[t] = tables.unigram.get(t, 0) + 1
            tables.total_tokens += 1
        for v, w in zip(toks, toks[1:]):
            row = tables.bigram.setdefault(v, {})
            if w not in row:
                row[w] = 0
                tables.distinct_left[w] = tables.distinct_left.get(w, 0) + 1
                tables.total_distinct_bigrams += 1
            row[w] += 1
    return CellLanguageModel(
        cell=cell,
        counts=tables,
        discounts=compute_discounts(*_counts_of_counts(tables)),
        post_count=len(posts),
    )


def _counts_of_counts(tables: CountTables) -> tuple[int, int, int, int]:
    n = [0, 0, 0, 0]
    for row in tables.bigram.values():
        for count in row.values():
            if count <= 4:
                n[count - 1] += 1
    return n[0], n[1], n[2], n[3]
