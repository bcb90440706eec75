import numpy as np
import pytest

from bilexical.RelationDataset import Pair, RelationDataset, RelationFeatures
from bilexical.Representation import Representation, Vocabulary
from bilexical.Synthetic import make_planted_relation


def random_features(seed, n=5, n_queries=6, n_candidates=7, n_pairs=10, scale=1.0):
    """
    Small random relation: Gaussian vectors, every query in at least one pair,
    queries split 4/1/1 (or proportionally) into train/dev/test.
    """
    rng = np.random.default_rng(seed)
    queries = [f"q{i}" for i in range(n_queries)]
    candidates = [f"c{j}" for j in range(n_candidates)]
    rep = Representation(Vocabulary(tuple(queries + candidates)),
                         scale * rng.standard_normal((n_queries + n_candidates, n)), name=f"random-{seed}")
    pairs = [Pair(q, candidates[rng.integers(n_candidates)], int(rng.integers(1, 3))) for q in queries]
    for _ in range(max(0, n_pairs - n_queries)):
        pairs.append(Pair(queries[rng.integers(n_queries)], candidates[rng.integers(n_candidates)],
                          int(rng.integers(1, 3))))
    n_dev = n_test = max(1, n_queries // 6)
    n_train = n_queries - n_dev - n_test
    split = {q: "train" if i < n_train else "dev" if i < n_train + n_dev else "test"
             for i, q in enumerate(queries)}
    return RelationFeatures(RelationDataset(pairs, split, candidates=candidates), rep)


@pytest.fixture
def make_features():
    return random_features


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def planted():
    return make_planted_relation(seed=0)


@pytest.fixture(scope="session")
def planted_features(planted):
    return RelationFeatures(planted.dataset, planted.rep)
