"""Versioned on-disk model directory.

Layout:

    manifest.json                  format/version, bounds, g, alpha, d, K,
                                   creation metadata, training-set size
    stopwords.txt                  one token per line, sorted
    hapax.txt                      one token per line, sorted
    vocab.txt                      one token per line, sorted
    priors.tsv                     row <TAB> col <TAB> post_count <TAB> prior
    cells/cell_RRR_CCC.unigrams.tsv   token <TAB> count
    cells/cell_RRR_CCC.bigrams.tsv    token <TAB> token <TAB> count
    cells/cell_RRR_CCC.meta.json      post_count, n1..n4, d1..d3

Count tables are plain sorted text for diffability. Discounts and priors
are recomputed from the integer counts on load, so a load/save round trip
reproduces the in-memory model exactly.
"""

from __future__ import annotations

import json
import shutil
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

from .errors import DataError
from .estimator import GeoEnsemble, SmoothingConfig
from .grid import CellId, GeoBounds, GridPartition
from .lm import CellLanguageModel, CountTables, compute_discounts, _counts_of_counts
from .pipeline import PipelineArtifacts, PipelineConfig

FORMAT_VERSION = 1

_MANIFEST = "manifest.json"
_STOPWORDS = "stopwords.txt"
_HAPAX = "hapax.txt"
_VOCAB = "vocab.txt"
_PRIORS = "priors.tsv"
_CELLS = "cells"
_LOCK = ".lock"


def _cell_stem(cell: CellId) -> str:
    return f"cell_{cell.row:03d}_{cell.col:03d}"


def _write_lines(path: Path, lines) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for line in lines:
            f.write(line)
            f.write("\n")


def _read_lines(path: Path) -> list[str]:
    with open(path, encoding="utf-8") as f:
        return [line.rstrip("\n") for line in f]


def save_model(ens: GeoEnsemble, out_dir: str | Path, seed: Optional[int] = None) -> Path:
    """Persist an ensemble. Refuses to write while another writer holds
    the directory lock; an existing model in the directory is replaced."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    lock = out / _LOCK
    try:
        lock_fd = open(lock, "x")
    except FileExistsError:
        raise DataError(f"model directory {out} is locked by another writer") from None
    try:
        part = ens.partition
        manifest = {
            "format_version": FORMAT_VERSION,
            "bounds": {
                "south": part.bounds.south,
                "west": part.bounds.west,
                "north": part.bounds.north,
                "east": part.bounds.east,
            },
            "grid_size": part.g,
            "alpha": ens.smoothing.alpha,
            "diameter": ens.smoothing.diameter_for(part.g),
            "stopword_count": ens.artifacts.config.stopword_count,
            "training_posts": ens.total_posts,
            "seed": seed,
            "created_utc": datetime.now(timezone.utc).isoformat(),
        }
        with open(out / _MANIFEST, "w", encoding="utf-8") as f:
            json.dump(manifest, f, indent=2, sort_keys=True)
            f.write("\n")

        _write_lines(out / _STOPWORDS, sorted(ens.artifacts.config.stopwords))
        _write_lines(out / _HAPAX, sorted(ens.artifacts.hapax))
        _write_lines(out / _VOCAB, sorted(ens.artifacts.vocab))
        _write_lines(
            out / _PRIORS,
            (
                f"{cell.row}\t{cell.col}\t{ens.models[cell].post_count}\t{ens.priors[cell]!r}"
                for cell in part.cells()
            ),
        )

        cells_dir = out / _CELLS
        if cells_dir.exists():
            shutil.rmtree(cells_dir)
        cells_dir.mkdir()
        for cell in part.cells():
            model = ens.models[cell]
            stem = cells_dir / _cell_stem(cell)
            _write_lines(
                Path(f"{stem}.unigrams.tsv"),
                (f"{tok}\t{n}" for tok, n in sorted(model.counts.unigram.items())),
            )
            rows = sorted(
                (v, w, n)
                for v, ws in model.counts.bigram.items()
                for w, n in ws.items()
            )
            _write_lines(Path(f"{stem}.bigrams.tsv"), (f"{v}\t{w}\t{n}" for v, w, n in rows))
            d = model.discounts
            meta = {
                "row": cell.row,
                "col": cell.col,
                "post_count": model.post_count,
                "n1": d.n1,
                "n2": d.n2,
                "n3": d.n3,
                "n4": d.n4,
                "d1": d.d1,
                "d2": d.d2,
                "d3": d.d3,
            }
            with open(f"{stem}.meta.json", "w", encoding="utf-8") as f:
                json.dump(meta, f, indent=2, sort_keys=True)
                f.write("\n")
    finally:
        lock_fd.close()
        lock.unlink()
    return out


def load_model(model_dir: str | Path) -> GeoEnsemble:
    """Reconstruct an ensemble from a model directory, validating the
    format version, cell completeness, and prior normalization."""
    root = Path(model_dir)
    manifest_path = root / _MANIFEST
    if not manifest_path.is_file():
        raise DataError(f"{root} is not a model directory (no {_MANIFEST})")
    try:
        with open(manifest_path, encoding="utf-8") as f:
            manifest = json.load(f)
    except json.JSONDecodeError as exc:
        raise DataError(f"unreadable manifest in {root}: {exc}") from exc

    version = manifest.get("format_version")
    if version != FORMAT_VERSION:
        raise DataError(
            f"unsupported model format version {version!r} (this build reads {FORMAT_VERSION})"
        )

    b = manifest["bounds"]
    part = GridPartition(GeoBounds(b["south"], b["west"], b["north"], b["east"]), manifest["grid_size"])
    smoothing = SmoothingConfig(alpha=manifest["alpha"], diameter=manifest["diameter"])
    total_posts = manifest["training_posts"]

    artifacts = PipelineArtifacts(
        config=PipelineConfig(
            stopword_count=manifest["stopword_count"],
            stopwords=tuple(_read_lines(root / _STOPWORDS)),
        ),
        hapax=frozenset(_read_lines(root / _HAPAX)),
        vocab=frozenset(_read_lines(root / _VOCAB)),
    )

    post_counts: dict[CellId, int] = {}
    for line in _read_lines(root / _PRIORS):
        r, c, count, _prior = line.split("\t")
        cell = CellId(int(r), int(c))
        if cell in post_counts:
            raise DataError(f"duplicate priors row for cell ({r}, {c})")
        post_counts[cell] = int(count)
    expected = set(part.cells())
    if set(post_counts) != expected:
        raise DataError("priors table does not cover every grid cell exactly once")
    if sum(post_counts.values()) != total_posts:
        raise DataError("per-cell post counts disagree with the manifest training-set size")

    models = {}
    priors = {}
    for cell in part.cells():
        models[cell] = _load_cell(root / _CELLS, cell, post_counts[cell])
        priors[cell] = post_counts[cell] / total_posts
    if abs(sum(priors.values()) - 1.0) > 1e-9:
        raise DataError("priors do not sum to 1")

    return GeoEnsemble(
        partition=part,
        models=models,
        priors=priors,
        smoothing=smoothing,
        artifacts=artifacts,
        total_posts=total_posts,
    )


def _load_cell(cells_dir: Path, cell: CellId, expected_posts: int) -> CellLanguageModel:
    stem = cells_dir / _cell_stem(cell)
    for suffix in (".unigrams.tsv", ".bigrams.tsv", ".meta.json"):
        if not Path(f"{stem}{suffix}").is_file():
            raise DataError(f"missing {stem.name}{suffix} in model directory")

    tables = CountTables()
    for line in _read_lines(Path(f"{stem}.unigrams.tsv")):
        tok, n = line.split("\t")
        tables.unigram[tok] = int(n)
        tables.total_tokens += int(n)
    for line in _read_lines(Path(f"{stem}.bigrams.tsv")):
        v, w, n = line.split("\t")
        row = tables.bigram.setdefault(v, {})
        if w in row:
            raise DataError(f"duplicate bigram row {v!r} {w!r} in {stem.name}.bigrams.tsv")
        row[w] = int(n)
        tables.distinct_left[w] = tables.distinct_left.get(w, 0) + 1
        tables.total_distinct_bigrams += 1

    with open(f"{stem}.meta.json", encoding="utf-8") as f:
        meta = json.load(f)
    if meta.get("post_count") != expected_posts:
        raise DataError(f"{stem.name}.meta.json post_count disagrees with the priors table")

    return CellLanguageModel(
        cell=cell,
        counts=tables,
        discounts=compute_discounts(*_counts_of_counts(tables)),
        post_count=expected_posts,
    )
