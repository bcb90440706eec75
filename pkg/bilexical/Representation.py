import hashlib
import warnings
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from bilexical.errors import (
    DataWarning,
    DimensionError,
    EmptyCorpus,
    FormatError,
    InvalidArgument,
    InvalidRank,
    UnknownWord,
)
from bilexical.prox import svd

WEIGHTINGS = ("raw_count", "log1p")


@dataclass(frozen=True)
class Vocabulary:
    """Ordered word list with the reverse word -> position index"""
    words: tuple
    index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        words = tuple(self.words)
        if not words:
            raise InvalidArgument("vocabulary must hold at least one word")
        index = {}
        for i, w in enumerate(words):
            if w in index:
                raise InvalidArgument(f"duplicate word in vocabulary: {w!r}")
            index[w] = i
        object.__setattr__(self, "words", words)
        object.__setattr__(self, "index", index)

    def __len__(self):
        return len(self.words)

    def __contains__(self, word):
        return word in self.index

    def __iter__(self):
        return iter(self.words)

    def position(self, word):
        try:
            return self.index[word]
        except KeyError:
            raise UnknownWord(f"word not in vocabulary: {word!r}")


@dataclass(frozen=True)
class BowConfig:
    """
    Settings for the bag-of-words builder.

    Args:
        window (int): Tokens on each side of the target that count as context
        dim (int): Number of context-word dimensions (most frequent words)
        min_count (int): Context words rarer than this are never dimensions
        weighting (str): "raw_count" or "log1p"
    """
    window: int = 10
    dim: int = 2000
    min_count: int = 0
    weighting: str = "raw_count"

    def __post_init__(self):
        if self.window < 1:
            raise InvalidArgument(f"window must be >= 1, got {self.window}")
        if self.dim < 1:
            raise InvalidArgument(f"dim must be >= 1, got {self.dim}")
        if self.min_count < 0:
            raise InvalidArgument(f"min_count must be >= 0, got {self.min_count}")
        if self.weighting not in WEIGHTINGS:
            raise InvalidArgument(f"weighting must be one of {WEIGHTINGS}, got {self.weighting!r}")


class Representation:
    """
    The lexical map phi: word -> R^dim.

    Rows of `matrix` follow `vocab.words`. The matrix is either a dense
    numpy array or a scipy CSR matrix; lookups always return dense vectors.
    A Representation is not modified after construction.
    """
    def __init__(self, vocab, matrix, context_labels=None, name="phi", notes=None):
        if sp.issparse(matrix):
            matrix = sp.csr_matrix(matrix, dtype=np.float64)
            matrix.sum_duplicates()
            matrix.sort_indices()
        else:
            matrix = np.array(matrix, dtype=np.float64)
            if matrix.ndim != 2:
                raise DimensionError(f"representation matrix must be 2-D, got shape {matrix.shape}")
            matrix.setflags(write=False)
        if matrix.shape[0] != len(vocab):
            raise DimensionError(
                f"representation has {matrix.shape[0]} rows for {len(vocab)} vocabulary words"
            )
        if matrix.shape[1] < 1:
            raise DimensionError("representation dimension must be positive")
        if context_labels is not None:
            context_labels = tuple(context_labels)
            if len(context_labels) != matrix.shape[1]:
                raise DimensionError(
                    f"{len(context_labels)} context labels for {matrix.shape[1]} dimensions"
                )
        self.vocab = vocab
        self.matrix = matrix
        self.context_labels = context_labels
        self.name = name
        self.warnings = list(notes or [])
        self._fingerprint = None

    @property
    def dim(self):
        return self.matrix.shape[1]

    @property
    def is_sparse(self):
        return sp.issparse(self.matrix)

    def __len__(self):
        return len(self.vocab)

    def __contains__(self, word):
        return word in self.vocab

    def vector(self, word):
        row = self.matrix[self.vocab.position(word)]
        if sp.issparse(row):
            return row.toarray().ravel()
        return np.array(row, dtype=np.float64)

    def rows(self, words):
        """Dense (len(words) x dim) matrix of the given words' vectors"""
        idx = [self.vocab.position(w) for w in words]
        block = self.matrix[idx]
        if sp.issparse(block):
            return block.toarray()
        return np.array(block, dtype=np.float64).reshape(len(idx), self.dim)

    def dense(self):
        if self.is_sparse:
            return self.matrix.toarray()
        return np.array(self.matrix)

    def subset(self, words, name=None):
        """Representation restricted to `words`, in the given order"""
        words = list(words)
        idx = [self.vocab.position(w) for w in words]
        return Representation(
            Vocabulary(tuple(words)),
            self.matrix[idx],
            context_labels=self.context_labels,
            name=name or self.name,
        )

    def fingerprint(self):
        """Storage-independent SHA-256 of the vocabulary and vector values"""
        if self._fingerprint is None:
            canon = sp.csr_matrix(self.matrix, dtype=np.float64)
            canon.eliminate_zeros()
            canon.sort_indices()
            h = hashlib.sha256()
            h.update(f"{len(self.vocab)}x{self.dim}\n".encode("utf-8"))
            h.update("\n".join(self.vocab.words).encode("utf-8"))
            h.update(canon.indptr.astype("<i8").tobytes())
            h.update(canon.indices.astype("<i8").tobytes())
            h.update(canon.data.astype("<f8").tobytes())
            self._fingerprint = h.hexdigest()
        return self._fingerprint

    def __repr__(self):
        storage = "sparse" if self.is_sparse else "dense"
        return f"Representation(name={self.name!r}, words={len(self.vocab)}, dim={self.dim}, {storage})"


def read_corpus(path):
    """
    Read a tokenized corpus: UTF-8, one sentence per line, tokens separated by spaces.

    Returns:
        list: One list of tokens per non-empty line
    """
    sentences = []
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            tokens = line.split()
            if tokens:
                sentences.append(tokens)
    return sentences


def build_vocab(tokens):
    """
    Vocabulary of distinct tokens in first-occurrence order.

    Raises:
        EmptyCorpus: If the stream yields no token
    """
    seen = {}
    for tok in tokens:
        if tok not in seen:
            seen[tok] = len(seen)
    if not seen:
        raise EmptyCorpus("corpus contains no tokens")
    return Vocabulary(tuple(seen))


def select_contexts(sentences, cfg):
    """The cfg.dim most frequent tokens (count >= min_count), ties broken lexicographically"""
    freq = Counter(tok for s in sentences for tok in s)
    eligible = sorted(
        ((w, c) for w, c in freq.items() if c >= cfg.min_count),
        key=lambda wc: (-wc[1], wc[0]),
    )
    return [w for w, _ in eligible[: cfg.dim]]


def build_bow(corpus, cfg=None, name="bow", verbose=False):
    """
    Build sparse bag-of-words vectors from a sentence stream.

    phi(w)[j] counts occurrences of context word j within cfg.window tokens of
    any occurrence of w, windows clipped at sentence boundaries, the target
    position itself excluded.

    Args:
        corpus: Iterable of token lists, one per sentence
        cfg (BowConfig): Builder settings
        name (str): Identifier stored on the result

    Returns:
        Representation: Sparse CSR representation over all corpus tokens
    """
    cfg = cfg or BowConfig()
    sentences = [list(s) for s in corpus]
    vocab = build_vocab(tok for s in sentences for tok in s)

    contexts = select_contexts(sentences, cfg)
    notes = []
    if not contexts:
        raise InvalidArgument(f"no context word occurs at least min_count={cfg.min_count} times")
    if len(contexts) < cfg.dim:
        msg = f"only {len(contexts)} distinct context words available; dimension truncated from {cfg.dim}"
        notes.append(msg)
        warnings.warn(msg, DataWarning)
    column = {w: j for j, w in enumerate(contexts)}

    counts = Counter()
    for sentence in sentences:
        ids = [vocab.index[t] for t in sentence]
        cols = [column.get(t) for t in sentence]
        for i in range(len(sentence)):
            lo = max(0, i - cfg.window)
            hi = min(len(sentence), i + cfg.window + 1)
            for j in range(lo, hi):
                if j != i and cols[j] is not None:
                    counts[(ids[i], cols[j])] += 1

    if counts:
        keys = list(counts)
        rows = np.array([k[0] for k in keys], dtype=np.int64)
        cols = np.array([k[1] for k in keys], dtype=np.int64)
        vals = np.array([counts[k] for k in keys], dtype=np.float64)
    else:
        rows = cols = np.zeros(0, dtype=np.int64)
        vals = np.zeros(0, dtype=np.float64)
    matrix = sp.coo_matrix((vals, (rows, cols)), shape=(len(vocab), len(contexts))).tocsr()
    if cfg.weighting == "log1p":
        matrix = matrix.log1p()

    if verbose:
        print(f"Built BoW over {len(sentences)} sentences: {len(vocab)} words x {len(contexts)} contexts, "
              f"{matrix.nnz} non-zeros")
    return Representation(vocab, matrix, context_labels=contexts, name=name, notes=notes)


def _read_lines(source):
    if hasattr(source, "read"):
        return source.read().splitlines()
    with open(source, "r", encoding="utf-8") as f:
        return f.read().splitlines()


def import_vectors(source, name=None):
    """
    Read an embedding text file: "<count> <dim>" then "<word> <f1> ... <fdim>" per row.

    Args:
        source: Path or open text file

    Returns:
        Representation: Dense representation with the declared dimension

    Raises:
        FormatError: Bad header, row length mismatch, unparsable or non-finite value,
            duplicate word, or row count differing from the header
    """
    lines = _read_lines(source)
    while lines and not lines[-1].strip():
        lines.pop()
    if not lines:
        raise FormatError("embedding file is empty", line=1)

    header = lines[0].split()
    try:
        if len(header) != 2:
            raise ValueError
        count, dim = int(header[0]), int(header[1])
    except ValueError:
        raise FormatError(f"expected '<count> <dim>' header, got {lines[0]!r}", line=1)
    if count < 1 or dim < 1:
        raise FormatError(f"count and dim must be positive, got {count} {dim}", line=1)

    words = []
    seen = set()
    values = np.empty((len(lines) - 1, dim), dtype=np.float64)
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split()
        if not parts:
            raise FormatError("empty row", line=lineno)
        if len(parts) - 1 != dim:
            raise FormatError(f"expected {dim} values, found {len(parts) - 1}", line=lineno)
        word = parts[0]
        if word in seen:
            raise FormatError(f"duplicate word {word!r}", line=lineno)
        try:
            row = np.array([float(x) for x in parts[1:]], dtype=np.float64)
        except ValueError:
            raise FormatError("unparsable value", line=lineno)
        if not np.all(np.isfinite(row)):
            raise FormatError("non-finite value", line=lineno)
        seen.add(word)
        words.append(word)
        values[len(words) - 1] = row

    if len(words) != count:
        raise FormatError(f"header declares {count} rows, found {len(words)}", line=len(lines))
    if name is None:
        name = Path(source).stem if not hasattr(source, "read") else "imported"
    return Representation(Vocabulary(tuple(words)), values, name=name)


def export_vectors(rep, path):
    """Write `rep` in the embedding text format with 9 significant digits"""
    dense = rep.dense()
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"{len(rep.vocab)} {rep.dim}\n")
        for word, row in zip(rep.vocab.words, dense):
            f.write(word + " " + " ".join(f"{x:.9g}" for x in row) + "\n")
    return path


def svd_project(rep, k):
    """
    Project every vector onto the top-k right singular vectors of the stacked matrix.

    The projection is unscaled (B_k^T phi(x)), so inner products in the leading
    subspace are those of the original space.

    Raises:
        InvalidRank: If k < 1 or k > min(number of words, rep.dim)
    """
    bound = min(len(rep.vocab), rep.dim)
    if not isinstance(k, (int, np.integer)) or k < 1 or k > bound:
        raise InvalidRank(f"k must be in [1, {bound}], got {k}")
    basis = svd(rep.matrix, sign_side="right").right[:, :k]
    projected = rep.matrix @ basis
    return Representation(rep.vocab, np.asarray(projected), name=f"{rep.name}-svd{k}")
