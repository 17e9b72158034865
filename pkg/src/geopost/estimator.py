"""Bayesian cell selection over an ensemble of per-cell language models.

A query post is scored against every cell model, the scores are combined
with per-cell priors into a normalized posterior field, and the field is
geo-smoothed by blending each cell with ring-averaged neighbor values.
The estimate is the center of the cell with the highest smoothed score.
"""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, replace
from functools import lru_cache
from math import inf, log
from typing import Optional, Sequence

import numpy as np

from .errors import EstimationError, ValidationError
from .grid import CellId, GeoPoint, GridPartition
from .lm import BaselineInterpolation, CellLanguageModel, train_cell
from .pipeline import PipelineArtifacts, TokenizedPost

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SmoothingConfig:
    """Geo-smoothing knobs: blend weight ``alpha`` and ring diameter ``d``.

    ``diameter=None`` means "use the grid dimension". Rings beyond g-1 are
    empty, so any diameter >= g-1 produces identical scores.
    """

    alpha: float = 0.9
    diameter: Optional[int] = None

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValidationError(f"alpha must lie in [0, 1], got {self.alpha}")
        if self.diameter is not None and self.diameter < 1:
            raise ValidationError(f"diameter must be >= 1, got {self.diameter}")

    def diameter_for(self, g: int) -> int:
        return self.diameter if self.diameter is not None else g


@dataclass(frozen=True)
class PosteriorField:
    """Normalized per-cell probabilities that one post came from each cell."""

    values: dict[CellId, float]
    post_id: str


@dataclass(frozen=True)
class Estimate:
    """Chosen cell, its center point, and the scores that selected it."""

    cell: CellId
    point: GeoPoint
    smoothed_score: float
    posterior: float


@dataclass(frozen=True)
class GeoEnsemble:
    """Everything needed to answer queries: partition, per-cell models,
    priors from training counts, smoothing config, pipeline artifacts."""

    partition: GridPartition
    models: dict[CellId, CellLanguageModel]
    priors: dict[CellId, float]
    smoothing: SmoothingConfig
    artifacts: PipelineArtifacts
    total_posts: int
    baseline: Optional[BaselineInterpolation] = None

    def with_smoothing(self, smoothing: SmoothingConfig) -> "GeoEnsemble":
        return replace(self, smoothing=smoothing)

    def with_baseline(self, baseline: Optional[BaselineInterpolation]) -> "GeoEnsemble":
        return replace(self, baseline=baseline)


def build_ensemble(
    posts: Sequence[TokenizedPost],
    part: GridPartition,
    smoothing: SmoothingConfig,
    artifacts: PipelineArtifacts,
    baseline: Optional[BaselineInterpolation] = None,
) -> GeoEnsemble:
    """Assign posts to cells, train one model per cell, set priors to the
    per-cell share of training posts. Cells with no posts get prior 0 and
    an empty model; they can never be selected."""
    if not posts:
        raise ValidationError("cannot build an ensemble from an empty training set")
    buckets: dict[CellId, list[TokenizedPost]] = {cell: [] for cell in part.cells()}
    for post in posts:
        if post.location is None:
            raise ValidationError(f"training post {post.id!r} has no location")
        buckets[part.cell_of(post.location)].append(post)
    n_total = len(posts)
    models = {cell: train_cell(assigned, cell) for cell, assigned in buckets.items()}
    priors = {cell: len(assigned) / n_total for cell, assigned in buckets.items()}
    return GeoEnsemble(
        partition=part,
        models=models,
        priors=priors,
        smoothing=smoothing,
        artifacts=artifacts,
        total_posts=n_total,
        baseline=baseline,
    )


def cell_log_scores(ens: GeoEnsemble, tokens: Sequence[str]) -> list[float]:
    """Unnormalized log posterior per cell in row-major order:
    log P(tokens | cell) + log prior. Zero-prior cells get -inf."""
    scores = []
    for cell in ens.partition.cells():
        prior = ens.priors[cell]
        if prior <= 0.0:
            scores.append(-inf)
        else:
            ll = ens.models[cell].sequence_log_prob(tokens, ens.baseline)
            scores.append(ll + log(prior))
    return scores


def normalize_log_scores(scores: Sequence[float]) -> np.ndarray:
    """Max-shifted exponential normalization of log scores into a
    probability vector. All -inf means a degenerate ensemble."""
    arr = np.asarray(scores, dtype=np.float64)
    m = arr.max()
    if m == -inf:
        raise EstimationError("no cell has positive prior mass")
    q = np.exp(arr - m)
    return q / q.sum()


def _posterior_vector(ens: GeoEnsemble, tokens: Sequence[str]) -> np.ndarray:
    return normalize_log_scores(cell_log_scores(ens, tokens))


def posterior_field(ens: GeoEnsemble, post: TokenizedPost) -> PosteriorField:
    """Bayes posterior over cells for one preprocessed post.

    An empty token sequence contributes likelihood 1 everywhere, so the
    posterior reduces to the prior vector.
    """
    vec = _posterior_vector(ens, post.tokens)
    values = {cell: float(p) for cell, p in zip(ens.partition.cells(), vec)}
    return PosteriorField(values=values, post_id=post.id)


@lru_cache(maxsize=16)
def _ring_matrices(part: GridPartition) -> tuple[np.ndarray, ...]:
    """One 0/1 matrix per ring distance k = 1..g-1; M[k-1] @ field sums
    each cell's ring-k neighbors."""
    cells = part.cells()
    index = {cell: i for i, cell in enumerate(cells)}
    mats = []
    for k in range(1, part.g):
        m = np.zeros((len(cells), len(cells)))
        for cell in cells:
            for nb in part.ring_neighbors(cell, k):
                m[index[cell], index[nb]] = 1.0
        mats.append(m)
    return tuple(mats)


def smoothing_terms(part: GridPartition, field_vec: np.ndarray) -> list[np.ndarray]:
    """Per-ring neighbor contributions: the k-th entry holds, for every
    cell, the sum of ring-k neighbor values divided by the full-ring size
    (2k+1)**2 - 1. Clipped rings keep the full denominator; missing cells
    simply contribute zero."""
    terms = []
    for k, mat in enumerate(_ring_matrices(part), start=1):
        terms.append((mat @ field_vec) / ((2 * k + 1) ** 2 - 1))
    return terms


def blend_smoothed(field_vec: np.ndarray, neighbor_acc: np.ndarray, alpha: float) -> np.ndarray:
    return (1.0 - alpha) * field_vec + alpha * neighbor_acc


def smooth_from_terms(
    field_vec: np.ndarray, terms: Sequence[np.ndarray], alpha: float, diameter: int
) -> np.ndarray:
    acc = np.zeros_like(field_vec)
    for k in range(min(diameter, len(terms))):
        acc = acc + terms[k]
    return blend_smoothed(field_vec, acc, alpha)


def smooth_vector(
    part: GridPartition, field_vec: np.ndarray, alpha: float, diameter: int
) -> np.ndarray:
    return smooth_from_terms(field_vec, smoothing_terms(part, field_vec), alpha, diameter)


def geo_smooth(ens: GeoEnsemble, field: PosteriorField) -> dict[CellId, float]:
    """Blend each cell's posterior with ring-averaged neighbor posteriors:

        score = (1 - alpha) * P(cell) + alpha * sum_k ring_k_sum / ((2k+1)**2 - 1)

    Scores are consumed only through the argmax and are not renormalized.
    """
    cells = ens.partition.cells()
    vec = np.array([field.values[cell] for cell in cells], dtype=np.float64)
    smoothed = smooth_vector(
        ens.partition, vec, ens.smoothing.alpha, ens.smoothing.diameter_for(ens.partition.g)
    )
    return {cell: float(s) for cell, s in zip(cells, smoothed)}


def _argmax_cell(part: GridPartition, scores: dict[CellId, float]) -> CellId:
    best_cell = None
    best = -inf
    for cell in part.cells():
        s = scores[cell]
        if s > best:
            best = s
            best_cell = cell
    if best_cell is None:
        raise EstimationError("empty score field")
    return best_cell


def estimate(ens: GeoEnsemble, post: TokenizedPost) -> Estimate:
    """Locate one post: argmax of the geo-smoothed posterior, ties broken
    by lowest row then lowest column."""
    field = posterior_field(ens, post)
    scores = geo_smooth(ens, field)
    cell = _argmax_cell(ens.partition, scores)
    return Estimate(
        cell=cell,
        point=ens.partition.center_of(cell),
        smoothed_score=scores[cell],
        posterior=field.values[cell],
    )


def estimate_batch(ens: GeoEnsemble, posts: Sequence[TokenizedPost]) -> list[Optional[Estimate]]:
    """Element-wise ``estimate`` over a batch, order-preserving.

    A post that fails yields None in its slot (logged) instead of aborting
    the rest; with probability floors in place this is defensive only.
    """
    out: list[Optional[Estimate]] = []
    for post in posts:
        try:
            out.append(estimate(ens, post))
        except EstimationError as exc:
            logger.warning("estimate failed for post %r: %s", post.id, exc)
            out.append(None)
    return out


ESTIMATES_CSV_FIELDS = (
    "post_id",
    "est_lat",
    "est_lon",
    "cell_row",
    "cell_col",
    "posterior",
    "smoothed_score",
)


def estimates_csv(posts: Sequence[TokenizedPost], estimates: Sequence[Optional[Estimate]]) -> str:
    """Render estimates as CSV text, one row per successful estimate.

    Floats are written with repr so identical estimates always produce
    byte-identical output.
    """
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(ESTIMATES_CSV_FIELDS)
    for post, est in zip(posts, estimates):
        if est is None:
            continue
        writer.writerow(
            [
                post.id,
                repr(est.point.lat),
                repr(est.point.lon),
                est.cell.row,
                est.cell.col,
                repr(est.posterior),
                repr(est.smoothed_score),
            ]
        )
    return buf.getvalue()
