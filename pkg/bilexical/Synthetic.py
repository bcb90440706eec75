from dataclasses import dataclass

import numpy as np
from scipy.special import softmax

from bilexical.errors import InvalidArgument
from bilexical.RelationDataset import DEFAULT_RATIOS, Pair, aggregate_pairs, split_dataset
from bilexical.Representation import Representation, Vocabulary


@dataclass
class PlantedRelation:
    """
    A synthetic relation with known ground truth.

    `rep` holds both query words (q000, q001, ...) and candidate words
    (c000, c001, ...), so the same Representation serves both sides and the
    unsupervised baseline.
    """
    dataset: object
    rep: Representation
    w_star: np.ndarray

    @property
    def queries(self):
        return list(self.dataset.queries)

    @property
    def candidates(self):
        return list(self.dataset.candidates)


def _sparse_nonnegative(rng, rows, n, density):
    mask = rng.random((rows, n)) < density
    values = mask * rng.uniform(0.5, 1.5, size=(rows, n))
    empty = np.flatnonzero(~mask.any(axis=1))
    values[empty, rng.integers(0, n, size=empty.size)] = 1.0
    return values


def _words(prefix, count):
    width = max(3, len(str(count - 1)))
    return [f"{prefix}{i:0{width}d}" for i in range(count)]


def _assemble(pairs, Q, C, queries, candidates, ratios, seed, w_star):
    rep = Representation(Vocabulary(tuple(queries + candidates)), np.vstack([Q, C]), name="planted")
    dataset = split_dataset(aggregate_pairs(pairs), ratios=ratios, seed=seed, candidates=candidates)
    return PlantedRelation(dataset=dataset, rep=rep, w_star=w_star)


def make_planted_relation(n=30, n_queries=200, n_candidates=200, rank=3, per_query=5,
                          density=0.3, signal=4.0, ratios=DEFAULT_RATIOS, seed=0):
    """
    Sample a relation from the bilinear softmax under a planted low-rank operator.

    W* = U* V*^T has Gaussian factors of the given rank, rescaled so the scores
    over all query-candidate pairs have standard deviation `signal`. Word vectors
    are sparse and non-negative. Each query draws `per_query` candidates
    (with replacement) from Pr(c | q; W*); repeated draws become pair counts.

    Returns:
        PlantedRelation
    """
    if rank < 1 or rank > n:
        raise InvalidArgument(f"rank must be in [1, {n}], got {rank}")
    if per_query < 1:
        raise InvalidArgument(f"per_query must be >= 1, got {per_query}")
    rng = np.random.default_rng(seed)
    Q = _sparse_nonnegative(rng, n_queries, n, density)
    C = _sparse_nonnegative(rng, n_candidates, n, density)
    w_star = rng.standard_normal((n, rank)) @ rng.standard_normal((n, rank)).T
    scores = Q @ w_star @ C.T
    w_star *= signal / scores.std()
    scores = Q @ w_star @ C.T

    queries, candidates = _words("q", n_queries), _words("c", n_candidates)
    pairs = []
    for i, q in enumerate(queries):
        for j in rng.choice(n_candidates, size=per_query, replace=True, p=softmax(scores[i])):
            pairs.append(Pair(q, candidates[j], 1))
    return _assemble(pairs, Q, C, queries, candidates, ratios, seed, w_star)


def make_random_relation(n=30, n_queries=200, n_candidates=200, per_query=5, density=0.3,
                         ratios=DEFAULT_RATIOS, seed=0):
    """Same shape as make_planted_relation but pairs are uniform over queries x candidates"""
    rng = np.random.default_rng(seed)
    Q = _sparse_nonnegative(rng, n_queries, n, density)
    C = _sparse_nonnegative(rng, n_candidates, n, density)
    queries, candidates = _words("q", n_queries), _words("c", n_candidates)
    pairs = [Pair(q, candidates[j], 1)
             for q in queries
             for j in rng.choice(n_candidates, size=per_query, replace=True)]
    return _assemble(pairs, Q, C, queries, candidates, ratios, seed, np.zeros((n, n)))
