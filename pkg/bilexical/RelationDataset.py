import re
import warnings
from collections import OrderedDict
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from bilexical.errors import (
    DataError,
    DataWarning,
    DimensionError,
    EmptyData,
    FormatError,
    InsufficientData,
    InvalidArgument,
    UnknownWord,
)

SPLITS = ("train", "dev", "test")
DEFAULT_RATIOS = (0.6, 0.2, 0.2)


class Pair(NamedTuple):
    query: str
    candidate: str
    count: int = 1


class RelationDataset:
    """
    Labeled (query, candidate) pairs with every query word assigned to exactly
    one of train / dev / test, so test pairs always involve unseen queries.

    Args:
        pairs (list): Pair tuples
        split (dict): query word -> "train" | "dev" | "test"
        candidates (list): Candidate set M; defaults to the distinct candidates of
            `pairs` in first-occurrence order
    """
    def __init__(self, pairs, split, candidates=None):
        self.pairs = tuple(Pair(*p) for p in pairs)
        self.split = dict(split)
        for q, s in self.split.items():
            if s not in SPLITS:
                raise InvalidArgument(f"query {q!r} assigned to unknown split {s!r}")
        self.queries = tuple(OrderedDict.fromkeys(p.query for p in self.pairs))
        derived = tuple(OrderedDict.fromkeys(p.candidate for p in self.pairs))
        self.candidates = tuple(candidates) if candidates is not None else derived
        known = set(self.candidates)
        for p in self.pairs:
            if p.query not in self.split:
                raise DataError(f"query {p.query!r} has no split assignment")
            if p.candidate not in known:
                raise DataError(f"candidate {p.candidate!r} of pair ({p.query}, {p.candidate}) is not in the candidate set")

    def __len__(self):
        return len(self.pairs)

    def pairs_for(self, split):
        return [p for p in self.pairs if self.split[p.query] == split]

    def queries_for(self, split):
        return [q for q in self.queries if self.split[q] == split]

    def gold(self, split=None):
        """query -> set of gold candidates (restricted to one split if given)"""
        gold = {}
        for p in self.pairs:
            if split is None or self.split[p.query] == split:
                gold.setdefault(p.query, set()).add(p.candidate)
        return gold

    def split_sizes(self):
        return {s: len(self.queries_for(s)) for s in SPLITS}

    def __repr__(self):
        sizes = ", ".join(f"{s}={n}" for s, n in self.split_sizes().items())
        return f"RelationDataset({len(self.pairs)} pairs, |M|={len(self.candidates)}, {sizes})"


def _read_lines(source):
    if hasattr(source, "read"):
        return source.read().splitlines()
    with open(source, "r", encoding="utf-8") as f:
        return f.read().splitlines()


def _parse_count(text, lineno):
    try:
        count = int(text)
    except ValueError:
        raise FormatError(f"count must be a positive integer, got {text!r}", line=lineno)
    if count < 1:
        raise FormatError(f"count must be a positive integer, got {text!r}", line=lineno)
    return count


def parse_pairs(source):
    """
    Read a pair file: query<TAB>candidate[<TAB>count] per line, UTF-8.

    Returns:
        list: Pair tuples, count defaulting to 1

    Raises:
        FormatError: Wrong field count, empty field, or bad count (names the line)
        EmptyData: No rows at all
    """
    lines = _read_lines(source)
    while lines and not lines[-1].strip():
        lines.pop()
    pairs = []
    for lineno, line in enumerate(lines, start=1):
        fields = line.split("\t")
        if len(fields) not in (2, 3):
            raise FormatError(f"expected 2 or 3 tab-separated fields, found {len(fields)}", line=lineno)
        if any(not f for f in fields):
            raise FormatError("empty field", line=lineno)
        count = _parse_count(fields[2], lineno) if len(fields) == 3 else 1
        pairs.append(Pair(fields[0], fields[1], count))
    if not pairs:
        raise EmptyData("pair file has no rows")
    return pairs


def write_pairs(pairs, path):
    with open(path, "w", encoding="utf-8") as f:
        for p in pairs:
            f.write(f"{p.query}\t{p.candidate}\t{p.count}\n")
    return path


def aggregate_pairs(pairs):
    """Merge repeated (query, candidate) rows, summing counts, first-occurrence order"""
    merged = OrderedDict()
    for p in pairs:
        key = (p.query, p.candidate)
        merged[key] = merged.get(key, 0) + p.count
    return [Pair(q, c, n) for (q, c), n in merged.items()]


@dataclass(frozen=True)
class RelationPattern:
    """
    Which dependency edges form the relation.

    Each field is a regular expression matched against the whole tag or label;
    "_" or "" matches anything.

    Args:
        head_pos (str): Pattern for the head's POS tag, e.g. "NN.*"
        dep_pos (str): Pattern for the dependent's POS tag, e.g. "JJ.*"
        label (str): Pattern for the dependency label, e.g. "amod"
        query_side (str): "head" or "dependent", the word that becomes the query
    """
    head_pos: str
    dep_pos: str
    label: str
    query_side: str = "head"

    def __post_init__(self):
        if self.query_side not in ("head", "dependent"):
            raise InvalidArgument(f"query_side must be 'head' or 'dependent', got {self.query_side!r}")
        for value in (self.head_pos, self.dep_pos, self.label):
            try:
                re.compile(value)
            except re.error as e:
                raise InvalidArgument(f"bad pattern {value!r}: {e}")

    @classmethod
    def parse(cls, text, query_side="head"):
        """Parse "HEADPOS/DEPPOS/LABEL", e.g. "NN.*/JJ.*/amod" """
        parts = text.split("/")
        if len(parts) != 3:
            raise InvalidArgument(f"relation pattern must look like HEADPOS/DEPPOS/LABEL, got {text!r}")
        return cls(parts[0], parts[1], parts[2], query_side)

    @staticmethod
    def _matches(pattern, value):
        return pattern in ("", "_") or re.fullmatch(pattern, value) is not None

    def matches(self, head, dep):
        return (self._matches(self.head_pos, head["pos"])
                and self._matches(self.dep_pos, dep["pos"])
                and self._matches(self.label, dep["deprel"]))


def read_conll(source):
    """
    Read CoNLL-X / CoNLL-U dependency blocks.

    Multiword ranges ("1-2") and empty nodes ("1.1") are skipped. The POS tag
    is the fine tag (column 5) unless that is "_", then the coarse tag.

    Returns:
        list: One dict {id: token} per sentence; tokens carry form, pos, head,
            deprel and the source line number
    """
    sentences = []
    tokens = {}

    def close():
        for tok in tokens.values():
            if tok["head"] != 0 and tok["head"] not in tokens:
                raise FormatError(f"head {tok['head']} of token {tok['id']} is not in the sentence",
                                  line=tok["line"])
        if tokens:
            sentences.append(dict(tokens))
        tokens.clear()

    lines = _read_lines(source)
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            close()
            continue
        if line.startswith("#"):
            continue
        cols = line.split("\t")
        if len(cols) < 10:
            raise FormatError(f"expected at least 10 tab-separated columns, found {len(cols)}", line=lineno)
        if "-" in cols[0] or "." in cols[0]:
            continue
        try:
            tid = int(cols[0])
            head = int(cols[6])
        except ValueError:
            raise FormatError(f"ID and HEAD must be integers, got {cols[0]!r} and {cols[6]!r}", line=lineno)
        if tid in tokens:
            raise FormatError(f"duplicate token id {tid}", line=lineno)
        pos = cols[4] if cols[4] != "_" else cols[3]
        tokens[tid] = {"id": tid, "form": cols[1], "pos": pos, "head": head,
                       "deprel": cols[7], "line": lineno}
    close()
    return sentences


def extract_pairs_conll(source, pattern, verbose=False):
    """
    One pair per dependency edge matching `pattern`.

    Args:
        source: Path or open text file in CoNLL format
        pattern (RelationPattern): Edge filter and query direction

    Returns:
        list: Pair tuples with count 1, in corpus order
    """
    pairs = []
    sentences = read_conll(source)
    for sentence in sentences:
        for dep in sentence.values():
            if dep["head"] == 0:
                continue
            head = sentence[dep["head"]]
            if pattern.matches(head, dep):
                if pattern.query_side == "head":
                    pairs.append(Pair(head["form"], dep["form"], 1))
                else:
                    pairs.append(Pair(dep["form"], head["form"], 1))
    if not pairs:
        warnings.warn(f"no dependency edge matches {pattern}", DataWarning)
    if verbose:
        print(f"Extracted {len(pairs)} pairs from {len(sentences)} sentences")
    return pairs


def _split_sizes(n, ratios):
    n_train = min(max(1, int(round(ratios[0] * n))), n - 2)
    n_dev = min(max(1, int(round(ratios[1] * n))), n - n_train - 1)
    return n_train, n_dev, n - n_train - n_dev


def split_dataset(pairs, ratios=DEFAULT_RATIOS, seed=0, candidates=None):
    """
    Partition the distinct query words (not the pairs) into train/dev/test.

    Query words are shuffled by `seed`; each split keeps at least one query.

    Raises:
        InvalidArgument: Ratios not positive or not summing to 1
        InsufficientData: Fewer than 3 distinct query words
    """
    ratios = tuple(float(r) for r in ratios)
    if len(ratios) != 3 or any(r <= 0 for r in ratios) or abs(sum(ratios) - 1.0) > 1e-9:
        raise InvalidArgument(f"ratios must be three positive numbers summing to 1, got {ratios}")
    pairs = [Pair(*p) for p in pairs]
    queries = list(OrderedDict.fromkeys(p.query for p in pairs))
    if len(queries) < 3:
        raise InsufficientData(f"need at least 3 distinct query words, found {len(queries)}")

    rng = np.random.default_rng(seed)
    order = [queries[i] for i in rng.permutation(len(queries))]
    n_train, n_dev, _ = _split_sizes(len(queries), ratios)
    split = {}
    for i, q in enumerate(order):
        split[q] = "train" if i < n_train else "dev" if i < n_train + n_dev else "test"
    return RelationDataset(pairs, split, candidates=candidates)


CANDIDATES_HEADER = "#candidates"


def write_dataset(dataset, path):
    """
    TSV with query, candidate, count, split per row.

    The first line lists the candidate set M in order, so candidates that
    occur in no pair survive a write and read.
    """
    with open(path, "w", encoding="utf-8") as f:
        f.write("\t".join((CANDIDATES_HEADER,) + dataset.candidates) + "\n")
        for p in dataset.pairs:
            f.write(f"{p.query}\t{p.candidate}\t{p.count}\t{dataset.split[p.query]}\n")
    return path


def _parse_candidates(line):
    words = line.split("\t")[1:]
    if not words or any(not w for w in words):
        raise FormatError("empty candidate in candidate header", line=1)
    if len(set(words)) != len(words):
        raise FormatError("duplicate candidate in candidate header", line=1)
    return words


def read_dataset(source):
    """
    Read a file written by write_dataset. Files without the candidate header
    take M from the pairs in first-occurrence order.
    """
    lines = _read_lines(source)
    while lines and not lines[-1].strip():
        lines.pop()
    candidates, start = None, 1
    if lines and lines[0].split("\t")[0] == CANDIDATES_HEADER:
        candidates, start = _parse_candidates(lines[0]), 2
    pairs, split = [], {}
    for lineno, line in enumerate(lines[start - 1:], start=start):
        fields = line.split("\t")
        if len(fields) != 4 or any(not f for f in fields):
            raise FormatError("expected query, candidate, count, split", line=lineno)
        count = _parse_count(fields[2], lineno)
        if fields[3] not in SPLITS:
            raise FormatError(f"unknown split {fields[3]!r}", line=lineno)
        if split.setdefault(fields[0], fields[3]) != fields[3]:
            raise FormatError(f"query {fields[0]!r} appears in two splits", line=lineno)
        pairs.append(Pair(fields[0], fields[1], count))
    if not pairs:
        raise EmptyData("dataset file has no rows")
    return RelationDataset(pairs, split, candidates=candidates)


class PairBatch(NamedTuple):
    """Index form of a set of pairs: rows of RelationFeatures.Q / .C plus weights"""
    q_idx: np.ndarray
    c_idx: np.ndarray
    weight: np.ndarray

    def __len__(self):
        return len(self.q_idx)

    def take(self, idx):
        return PairBatch(self.q_idx[idx], self.c_idx[idx], self.weight[idx])


class RelationFeatures:
    """
    Dense feature matrices for one dataset: Q holds phi(q) for every query,
    C holds phi(c) for every candidate in M (dataset order).

    Args:
        dataset (RelationDataset): Pairs and splits
        query_rep (Representation): phi on the query side
        candidate_rep (Representation): phi on the candidate side (defaults to query_rep)
    """
    def __init__(self, dataset, query_rep, candidate_rep=None):
        candidate_rep = candidate_rep if candidate_rep is not None else query_rep
        if query_rep.dim != candidate_rep.dim:
            raise DimensionError(
                f"query ({query_rep.dim}) and candidate ({candidate_rep.dim}) representations differ in dimension"
            )
        for side, words, rep in (("query", dataset.queries, query_rep),
                                 ("candidate", dataset.candidates, candidate_rep)):
            missing = [w for w in words if w not in rep]
            if missing:
                raise UnknownWord(
                    f"{len(missing)} {side} words have no vector in {rep.name!r}, e.g. {missing[:5]}"
                )
        self.dataset = dataset
        self.query_rep = query_rep
        self.candidate_rep = candidate_rep
        self.query_words = list(dataset.queries)
        self.candidate_words = list(dataset.candidates)
        self.query_pos = {w: i for i, w in enumerate(self.query_words)}
        self.candidate_pos = {w: i for i, w in enumerate(self.candidate_words)}
        self.Q = query_rep.rows(self.query_words)
        self.C = candidate_rep.rows(self.candidate_words)

    @property
    def rep_dim(self):
        return self.Q.shape[1]

    @property
    def n_candidates(self):
        return self.C.shape[0]

    def batch(self, split=None, pairs=None):
        """PairBatch for one split (or an explicit pair list)"""
        if pairs is None:
            pairs = self.dataset.pairs if split is None else self.dataset.pairs_for(split)
        q_idx = np.array([self.query_pos[p.query] for p in pairs], dtype=np.int64)
        c_idx = np.array([self.candidate_pos[p.candidate] for p in pairs], dtype=np.int64)
        weight = np.array([p.count for p in pairs], dtype=np.float64)
        return PairBatch(q_idx, c_idx, weight)
