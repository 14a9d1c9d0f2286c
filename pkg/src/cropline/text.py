"""Text preprocessing, word-embedding storage and normalized bag-of-words docs.

The preprocessing chain is deliberately small and deterministic: lowercase,
treat punctuation as separators, split on whitespace, drop stop words, then
apply a light suffix stemmer (no dictionary). Downstream distance scoring is
tolerant of near-synonyms, so the stemmer only has to canonicalize the common
plural/gerund forms without ever becoming non-idempotent.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import EmptyDoc, InputError

_VOWELS = "aeiou"


def default_stopwords() -> frozenset[str]:
    """Stop-word list bundled with the package (one word per line)."""
    text = resources.files("cropline.data").joinpath("stopwords.txt").read_text("utf-8")
    return frozenset(w.strip() for w in text.splitlines() if w.strip())


def load_stopwords(path: str | Path) -> frozenset[str]:
    p = Path(path)
    if not p.is_file():
        raise InputError(f"stopword file not found: {p}")
    return frozenset(w.strip().lower() for w in p.read_text("utf-8").splitlines() if w.strip())


def light_stem(word: str) -> str:
    """Strip common plural and gerund suffixes.

    Guards (minimum lengths, double-letter undo excluding l/s/z) keep the rules
    idempotent: light_stem(light_stem(w)) == light_stem(w) for any w.
    """
    w = word
    if w.endswith("sses"):
        w = w[:-2]
    elif w.endswith("es") and len(w) >= 5 and (w[-3] in "sxzo" or w.endswith(("ches", "shes"))):
        w = w[:-2]
    elif w.endswith("s") and len(w) >= 4 and not w.endswith(("ss", "us", "is")):
        w = w[:-1]
    if w.endswith("ing") and len(w) >= 7:
        w = w[:-3]
        if len(w) >= 3 and w[-1] == w[-2] and w[-1] not in _VOWELS and w[-1] not in "lsz":
            w = w[:-1]
    return w


def preprocess(raw: str, stopwords: frozenset[str] | set[str] | None = None,
               stem: bool = True) -> list[str]:
    """Lowercase, drop punctuation and stop words, return tokens in order.

    Punctuation (any character that is neither alphanumeric nor whitespace)
    acts as a separator. Idempotent on its own output.
    """
    if stopwords is None:
        stopwords = frozenset()
    cleaned = "".join(c if c.isalnum() or c.isspace() else " " for c in raw.lower())
    tokens = [t for t in cleaned.split() if t not in stopwords]
    if stem:
        tokens = [light_stem(t) for t in tokens]
    return tokens


@dataclass(frozen=True)
class EmbeddingTable:
    """Immutable word→vector map; every vector is L2-normalized, same dim."""

    dim: int
    vectors: dict[str, np.ndarray]

    def __contains__(self, word: str) -> bool:
        return word in self.vectors

    def __getitem__(self, word: str) -> np.ndarray:
        return self.vectors[word]

    def __len__(self) -> int:
        return len(self.vectors)

    @classmethod
    def from_vectors(cls, vectors: dict[str, "np.ndarray | list[float]"]) -> "EmbeddingTable":
        """Build a table from raw vectors, normalizing each to unit L2 norm."""
        if not vectors:
            raise InputError("embedding table cannot be empty")
        dim = None
        out: dict[str, np.ndarray] = {}
        for word, vec in vectors.items():
            arr = np.asarray(vec, dtype=np.float64)
            if arr.ndim != 1:
                raise InputError(f"vector for {word!r} is not one-dimensional")
            if dim is None:
                dim = arr.shape[0]
            elif arr.shape[0] != dim:
                raise InputError(
                    f"vector for {word!r} has dim {arr.shape[0]}, expected {dim}")
            norm = float(np.linalg.norm(arr))
            if norm == 0.0:
                raise InputError(f"vector for {word!r} is all zeros, cannot normalize")
            v = arr / norm
            v.setflags(write=False)
            out[word] = v
        return cls(dim=int(dim), vectors=out)


def load_embeddings(path: str | Path) -> EmbeddingTable:
    """Load a text embedding file: optional `<count> <dim>` header, then
    `word v1 v2 ... vdim` per line. Vectors are L2-normalized on load."""
    p = Path(path)
    if not p.is_file():
        raise InputError(f"embedding file not found: {p}")
    vectors: dict[str, np.ndarray] = {}
    dim: int | None = None
    with p.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts:
                continue
            if lineno == 1 and len(parts) == 2:
                try:
                    int(parts[0]), int(parts[1])
                    continue  # header line
                except ValueError:
                    pass
            word, values = parts[0], parts[1:]
            if not values:
                raise InputError(f"line {lineno}: no vector components for {word!r}")
            try:
                arr = np.array([float(v) for v in values], dtype=np.float64)
            except ValueError as exc:
                raise InputError(f"line {lineno}: bad float in vector: {exc}") from None
            if dim is None:
                dim = arr.shape[0]
            elif arr.shape[0] != dim:
                raise InputError(
                    f"line {lineno}: vector has dim {arr.shape[0]}, expected {dim}")
            if word in vectors:
                raise InputError(f"line {lineno}: duplicate word {word!r}")
            norm = float(np.linalg.norm(arr))
            if norm == 0.0:
                raise InputError(f"line {lineno}: zero vector for {word!r}")
            v = arr / norm
            v.setflags(write=False)
            vectors[word] = v
    if not vectors:
        raise InputError(f"embedding file {p} contains no vectors")
    return EmbeddingTable(dim=int(dim), vectors=vectors)


@dataclass(frozen=True)
class ProcessedDoc:
    """Tokenized document plus its normalized bag-of-words weights.

    ``tokens`` keeps the full preprocessed token sequence (out-of-vocabulary
    tokens included); ``nbow`` weights cover only in-vocabulary tokens and sum
    to 1.
    """

    tokens: tuple[str, ...]
    nbow: dict[str, float]

    def counts(self) -> Counter:
        """Integer counts of the in-vocabulary tokens backing ``nbow``."""
        return Counter(t for t in self.tokens if t in self.nbow)


def to_nbow(tokens: list[str] | tuple[str, ...], table: EmbeddingTable) -> ProcessedDoc:
    """Build the nBOW doc for ``tokens``: OOV tokens dropped, weights = count/total."""
    counts = Counter(t for t in tokens if t in table)
    total = sum(counts.values())
    if total == 0:
        raise EmptyDoc("no in-vocabulary tokens left; cannot build document")
    nbow = {word: count / total for word, count in counts.items()}
    return ProcessedDoc(tokens=tuple(tokens), nbow=nbow)
