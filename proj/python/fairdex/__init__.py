"""Fairness-aware evaluation of ranked retrieval runs.

Thin Python layer over the native ``fairdex._core`` module. Report-producing
functions return the same JSON documents the ``fairdex`` command writes.
"""

from __future__ import annotations

import json
import os
from typing import Iterable, Sequence

from ._core import (
    SCHEMA_VERSION,
    FairdexError,
    fairness_scores,
    interpolate,
    kendall_tau_b,
    kl_divergence,
    laplace_smooth,
    minmax_normalize,
    r_precision,
)
from . import _core

__all__ = [
    "SCHEMA_VERSION",
    "FairdexError",
    "bias",
    "evaluate",
    "fairness_scores",
    "interpolate",
    "kendall_tau_b",
    "kl_divergence",
    "laplace_smooth",
    "minmax_normalize",
    "r_precision",
    "synthesize",
]


def _opt(path):
    return None if path is None else os.fspath(path)


def evaluate(
    runs: Iterable,
    qrels,
    *,
    categories=None,
    prefix_rules=None,
    grade_map=None,
    targets: Sequence[str] = ("uniform",),
    cutoff="100",
    threshold: int = 1,
    scope: str = "all",
    aggregation: str = "mean",
    interpolations: Sequence[str] = (),
    lenient: bool = False,
    include_unknown: bool = False,
    raw_only: bool = False,
    top: int = 3,
    threads: int = 0,
) -> dict:
    """Scores run files and returns the leaderboard report as a dict."""
    text = _core.evaluate_json(
        [os.fspath(r) for r in runs],
        os.fspath(qrels),
        categories=_opt(categories),
        prefix_rules=_opt(prefix_rules),
        grade_map=_opt(grade_map),
        targets=[os.fspath(t) for t in targets],
        cutoff=str(cutoff),
        threshold=threshold,
        scope=scope,
        aggregation=aggregation,
        interpolations=list(interpolations),
        lenient=lenient,
        include_unknown=include_unknown,
        raw_only=raw_only,
        top=top,
        threads=threads,
    )
    return json.loads(text)


def bias(
    qrels,
    *,
    categories=None,
    prefix_rules=None,
    grade_map=None,
    threshold: int = 1,
    scarcity: float = 0.05,
    lenient: bool = False,
    include_unknown: bool = False,
) -> dict:
    """Per-category balance of the relevant documents in a qrels file."""
    text = _core.bias_json(
        os.fspath(qrels),
        categories=_opt(categories),
        prefix_rules=_opt(prefix_rules),
        grade_map=_opt(grade_map),
        threshold=threshold,
        scarcity=scarcity,
        lenient=lenient,
        include_unknown=include_unknown,
    )
    return json.loads(text)


def synthesize(spec: "dict | str", seed: int, out_dir) -> None:
    """Writes a synthetic collection and its runs into ``out_dir``."""
    text = spec if isinstance(spec, str) else json.dumps(spec)
    _core.synthesize(text, seed, os.fspath(out_dir))
