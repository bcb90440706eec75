from collections import OrderedDict
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
import pandas as pd

from bilexical.BilinearModel import BilinearModel, truncate
from bilexical.errors import (
    DataError,
    DegenerateVector,
    EmptySplit,
    InvalidArgument,
    UnknownWord,
)
from bilexical.Representation import svd_project

REPORT_COLUMNS = ["label", "accuracy", "ops", "model_desc"]
CURVE_COLUMNS = ["ops", "accuracy", "label"]
SUMMARY_COLUMNS = ["relation", "representation", "uns", "best_k_acc", "best_k", "k5", "k10", "l2", "l1"]


@dataclass
class EvalReport:
    """Pairwise accuracy and query-time cost of one model"""
    accuracy: float
    ops: int
    model_desc: str
    per_query: Optional[List[tuple]] = None
    label: str = ""

    def __post_init__(self):
        if not 0.0 <= self.accuracy <= 1.0:
            raise InvalidArgument(f"accuracy must lie in [0, 1], got {self.accuracy}")
        if self.ops < 0:
            raise InvalidArgument(f"ops must be non-negative, got {self.ops}")

    def to_row(self):
        return {"label": self.label, "accuracy": float(self.accuracy), "ops": int(self.ops),
                "model_desc": self.model_desc}


@dataclass(frozen=True)
class CurvePoint:
    ops: int
    accuracy: float
    label: str


@dataclass
class TradeoffCurve:
    """Accuracy vs. double operations, strictly ascending in ops"""
    points: List[CurvePoint] = field(default_factory=list)

    def to_frame(self):
        return pd.DataFrame([p.__dict__ for p in self.points], columns=CURVE_COLUMNS)


def _resolve_scorer(scorer, candidates, features):
    """Turn a BilinearModel (plus features) or a callable into (query -> scores, candidate words)"""
    if isinstance(scorer, BilinearModel):
        if features is None:
            raise InvalidArgument("scoring a BilinearModel needs the RelationFeatures it was trained on")
        words = list(candidates) if candidates is not None else list(features.candidate_words)
        emb = scorer.candidate_embeddings(features.candidate_rep.rows(words))
        qrep = features.query_rep
        model = scorer

        def score_query(query):
            return model.score_all(qrep.vector(query), None, candidate_embeddings=emb)
        return score_query, words
    if candidates is None:
        raise InvalidArgument("a plain scorer needs an explicit candidate list")
    return scorer, list(candidates)


def _grouped_golds(pairs, position):
    """query -> ordered distinct gold candidates, validating membership in M"""
    golds = OrderedDict()
    for p in pairs:
        if p.candidate not in position:
            raise DataError(f"gold candidate of pair ({p.query}, {p.candidate}) is not in the candidate set")
        golds.setdefault(p.query, OrderedDict())[p.candidate] = None
    return golds


def pair_accuracies(scorer, pairs, candidates=None, features=None):
    """
    Per gold pair, the fraction of non-gold candidates scored strictly below the
    gold one, ties counting 0.5. Every gold candidate of a query is left out of
    that query's non-gold set. Pairs whose query has no non-gold candidate are skipped.

    Returns:
        list: (query, candidate, accuracy) per distinct gold pair
    """
    score_query, words = _resolve_scorer(scorer, candidates, features)
    if len(words) < 2:
        raise InvalidArgument(f"pairwise accuracy needs at least 2 candidates, got {len(words)}")
    pairs = list(pairs)
    if not pairs:
        raise EmptySplit("no pairs to evaluate")
    position = {w: i for i, w in enumerate(words)}
    results = []
    for query, golds in _grouped_golds(pairs, position).items():
        scores = np.asarray(score_query(query), dtype=np.float64).ravel()
        if scores.shape[0] != len(words):
            raise DataError(f"scorer returned {scores.shape[0]} scores for {len(words)} candidates")
        mask = np.ones(len(words), dtype=bool)
        mask[[position[c] for c in golds]] = False
        others = scores[mask]
        if others.size == 0:
            continue
        for cand in golds:
            g = scores[position[cand]]
            wins = np.sum(others < g) + 0.5 * np.sum(others == g)
            results.append((query, cand, float(wins / others.size)))
    if not results:
        raise DataError("no pair has a non-gold candidate to compare against")
    return results


def pairwise_accuracy(scorer, pairs, candidates=None, features=None):
    """Mean of pair_accuracies over distinct gold pairs"""
    accs = pair_accuracies(scorer, pairs, candidates, features)
    return float(np.mean([a for _, _, a in accs]))


def per_query_accuracy(accs):
    grouped = OrderedDict()
    for q, _, a in accs:
        grouped.setdefault(q, []).append(a)
    return [(q, float(np.mean(v))) for q, v in grouped.items()]


def mean_reciprocal_rank(scorer, pairs, candidates=None, features=None):
    """MRR of each gold candidate among itself plus the query's non-gold candidates"""
    score_query, words = _resolve_scorer(scorer, candidates, features)
    position = {w: i for i, w in enumerate(words)}
    pairs = list(pairs)
    if not pairs:
        raise EmptySplit("no pairs to evaluate")
    rr = []
    for query, golds in _grouped_golds(pairs, position).items():
        scores = np.asarray(score_query(query), dtype=np.float64).ravel()
        mask = np.ones(len(words), dtype=bool)
        mask[[position[c] for c in golds]] = False
        others = scores[mask]
        for cand in golds:
            rr.append(1.0 / (1 + np.sum(others > scores[position[cand]])))
    return float(np.mean(rr))


def eval_model(model, features, split="test", label=""):
    """Pairwise accuracy on one split plus op_count for the full candidate set"""
    pairs = features.dataset.pairs_for(split)
    if not pairs:
        raise EmptySplit(f"split {split!r} has no pairs")
    accs = pair_accuracies(model, pairs, features=features)
    return EvalReport(
        accuracy=float(np.mean([a for _, _, a in accs])),
        ops=model.op_count(features.n_candidates),
        model_desc=model.describe(),
        per_query=per_query_accuracy(accs),
        label=label,
    )


def eval_unsupervised(rep, k, pairs, candidates, label=""):
    """
    Unsupervised baseline: inner products of k-dimensional SVD projections.

    ops counts the query projection too: 2nk + 2k|M|.
    """
    projected = svd_project(rep, k)
    words = list(candidates)
    cand_rows = projected.rows(words)

    def score_query(query):
        return cand_rows @ projected.vector(query)

    accs = pair_accuracies(score_query, pairs, words)
    return EvalReport(
        accuracy=float(np.mean([a for _, _, a in accs])),
        ops=2 * rep.dim * k + 2 * k * len(words),
        model_desc=f"unsupervised svd n={rep.dim} k={k}",
        per_query=per_query_accuracy(accs),
        label=label or f"uns-k{k}",
    )


def tradeoff_curve(reports):
    """Points sorted by ops; among reports with equal ops the most accurate is kept"""
    best = {}
    for r in reports:
        current = best.get(r.ops)
        if current is None or r.accuracy > current.accuracy:
            best[r.ops] = r
    return TradeoffCurve([CurvePoint(int(ops), float(best[ops].accuracy), best[ops].label)
                          for ops in sorted(best)])


def top_candidates(model, query, top_k, features, candidates=None):
    """
    The top_k candidates for a query by model score, descending, ties lexicographic.

    Returns:
        list: (candidate, score) tuples
    """
    if top_k < 1:
        raise InvalidArgument(f"top_k must be >= 1, got {top_k}")
    if query not in features.query_rep:
        raise UnknownWord(f"query word has no representation: {query!r}")
    score_query, words = _resolve_scorer(model, candidates, features)
    scores = score_query(query)
    order = sorted(range(len(words)), key=lambda i: (-scores[i], words[i]))
    return [(words[i], float(scores[i])) for i in order[:top_k]]


def query_neighbors(embeddings, word, top_k, restrict_to=None):
    """
    Nearest words by cosine similarity in an exported embedding space.

    Words whose vector is all zeros have no direction and are left out.

    Raises:
        UnknownWord: `word` has no embedding
        DegenerateVector: `word`'s embedding is the zero vector
    """
    if top_k < 1:
        raise InvalidArgument(f"top_k must be >= 1, got {top_k}")
    if word not in embeddings:
        raise UnknownWord(f"word has no embedding: {word!r}")
    v = embeddings.vector(word)
    v_norm = np.linalg.norm(v)
    if v_norm == 0.0:
        raise DegenerateVector(f"embedding of {word!r} is the zero vector")
    pool = [w for w in (restrict_to if restrict_to is not None else embeddings.vocab.words) if w != word]
    if not pool:
        return []
    rows = embeddings.rows(pool)
    norms = np.linalg.norm(rows, axis=1)
    keep = norms > 0.0
    cos = np.zeros(len(pool))
    cos[keep] = (rows[keep] @ v) / (norms[keep] * v_norm)
    order = sorted((i for i in range(len(pool)) if keep[i]), key=lambda i: (-cos[i], pool[i]))
    return [(pool[i], float(cos[i])) for i in order[:top_k]]


def _write_frame(frame, path, fmt):
    if fmt == "csv":
        frame.to_csv(path, index=False)
    elif fmt == "json":
        frame.to_json(path, orient="records", indent=2)
    else:
        raise InvalidArgument(f"format must be 'csv' or 'json', got {fmt!r}")
    return path


def reports_frame(reports):
    return pd.DataFrame([r.to_row() for r in reports], columns=REPORT_COLUMNS)


def write_reports(reports, path, fmt="csv"):
    """One row per model: label, accuracy, ops, model_desc"""
    return _write_frame(reports_frame(reports), path, fmt)


def read_reports(path):
    frame = pd.read_json(path, orient="records") if str(path).endswith(".json") else pd.read_csv(path)
    missing = [c for c in REPORT_COLUMNS if c not in frame.columns]
    if missing:
        raise DataError(f"{path} is not an eval report, missing columns {missing}")
    frame["label"] = frame["label"].fillna("").astype(str)
    return [EvalReport(accuracy=float(r.accuracy), ops=int(r.ops), model_desc=str(r.model_desc), label=r.label)
            for r in frame.itertuples(index=False)]


def write_curve(curve, path, fmt="csv"):
    return _write_frame(curve.to_frame(), path, fmt)


def summary_row(relation, representation, results, features, unsupervised=None, split="test",
                fixed_ranks=(5, 10)):
    """
    One results-table row: unsupervised baseline, best nuclear-norm model with its
    rank, the best nuclear model truncated to fixed ranks, and the best l2 / l1 models.
    Every "best" is picked on dev accuracy and reported on `split`.

    Args:
        results (list): TrainedModel objects from a sweep (failed cells are ignored)
        unsupervised (EvalReport): Baseline report, optional
    """
    row = {"relation": relation, "representation": representation,
           "uns": unsupervised.accuracy if unsupervised is not None else np.nan}
    by_reg = {}
    for r in results:
        if r.ok:
            by_reg.setdefault(r.config.regularizer, []).append(r)

    nuclear = select_best(by_reg.get("nuclear", []))
    if nuclear is not None:
        row["best_k_acc"] = eval_model(nuclear.model, features, split).accuracy
        row["best_k"] = nuclear.complexity
        for k in fixed_ranks:
            row[f"k{k}"] = eval_model(truncate(nuclear.model, k), features, split).accuracy
    for reg in ("l2", "l1"):
        best = select_best(by_reg.get(reg, []))
        row[reg] = eval_model(best.model, features, split).accuracy if best is not None else np.nan
    return row


def summary_table(rows):
    """Results table with one row per (relation, representation)"""
    return pd.DataFrame(rows).reindex(columns=SUMMARY_COLUMNS)


def select_best(results, tolerance=0.0):
    """
    Sweep cell with the best dev accuracy.

    Cells within `tolerance` of the best dev accuracy count as equally good;
    among those the one with fewer operations wins, then the earliest.

    Returns:
        TrainedModel or None if no cell succeeded
    """
    ok = [r for r in results if r.ok]
    if not ok:
        return None
    top = max(r.dev_accuracy for r in ok)
    close = [r for r in ok if r.dev_accuracy >= top - tolerance]
    return min(close, key=lambda r: r.ops)
