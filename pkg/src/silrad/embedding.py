"""Character n-gram text embeddings for event field values.

A token is wrapped in '<' and '>' boundary markers, decomposed into all
contiguous character n-grams of the configured lengths plus the whole
marked token, and embedded as the *sum* of the n-gram vectors. Field
text embeds as the arithmetic mean of its token vectors; empty text is
the zero vector, which is also the convention for absent fields.

Two backends:

* hashed — each n-gram maps through a deterministic hash to one of
  ``bucket_count`` slots whose vector is derived from (seed, slot);
  training-free and reproducible across processes.
* trained — n-gram and context tables fitted with skip-gram negative
  sampling on a token corpus.
"""

from __future__ import annotations

import json
import re
import struct
import zlib
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyCorpus, EmptyWord, SilradError, UnknownContextWord

DEFAULT_DIM = 100
DEFAULT_NGRAM_MIN = 3
DEFAULT_NGRAM_MAX = 6
DEFAULT_BUCKETS = 1 << 20

# Path separators are delimiters so Windows paths decompose into tokens.
_TOKEN_SPLIT = re.compile(r"[\s\\/.,;=:\"']+")

_MAGIC = b"SLEM"
_FORMAT_VERSION = 1


def tokenize(text: str) -> list[str]:
    return [t for t in _TOKEN_SPLIT.split(text) if t]


def ngrams(word: str, n_min: int, n_max: int) -> list[str]:
    """All boundary-marked n-grams of the word plus the whole marked word.

    Multiplicity is preserved: the whole marked word is always appended,
    even when it already appears as a regular n-gram.
    """
    if not word:
        raise EmptyWord("cannot extract n-grams from an empty word")
    if not (1 <= n_min <= n_max):
        raise ValueError(f"need 1 <= n_min <= n_max, got {n_min}..{n_max}")
    marked = f"<{word}>"
    length = len(marked)
    out = []
    for n in range(n_min, min(n_max, length) + 1):
        for i in range(length - n + 1):
            out.append(marked[i : i + n])
    out.append(marked)
    return out


def _ngram_bucket(gram: str, bucket_count: int) -> int:
    # crc32 is stable across processes, unlike hash().
    return zlib.crc32(gram.encode("utf-8")) % bucket_count


class EmbeddingModel:
    """n-gram vector table plus (in trained mode) context-word vectors."""

    def __init__(
        self,
        dim: int = DEFAULT_DIM,
        n_min: int = DEFAULT_NGRAM_MIN,
        n_max: int = DEFAULT_NGRAM_MAX,
        *,
        mode: str = "hashed",
        bucket_count: int = DEFAULT_BUCKETS,
        seed: int = 0,
        ngram_vectors: dict[str, np.ndarray] | None = None,
        context_vectors: dict[str, np.ndarray] | None = None,
    ):
        if mode not in ("hashed", "trained"):
            raise ValueError(f"unknown embedding mode {mode!r}")
        self.dim = dim
        self.n_min = n_min
        self.n_max = n_max
        self.mode = mode
        self.bucket_count = bucket_count
        self.seed = seed
        self.ngram_vectors = ngram_vectors if ngram_vectors is not None else {}
        self.context_vectors = context_vectors if context_vectors is not None else {}
        self._bucket_cache: dict[int, np.ndarray] = {}
        self._word_cache: dict[str, np.ndarray] = {}
        self._text_cache: dict[str, np.ndarray] = {}
        self._cache_cap = 1 << 19  # memo only; embeddings stay pure functions

    @property
    def dictionary_size(self) -> int:
        """Count of distinct n-gram slots (bucket count in hashed mode)."""
        if self.mode == "hashed":
            return self.bucket_count
        return len(self.ngram_vectors)

    def zero_vector(self) -> np.ndarray:
        return np.zeros(self.dim, dtype=np.float32)

    # -- vector lookup -------------------------------------------------------

    def _bucket_vector(self, bucket: int) -> np.ndarray:
        vec = self._bucket_cache.get(bucket)
        if vec is None:
            rng = np.random.default_rng((self.seed, bucket))
            vec = (rng.standard_normal(self.dim) / np.sqrt(self.dim)).astype(np.float32)
            if len(self._bucket_cache) < self._cache_cap:
                self._bucket_cache[bucket] = vec
        return vec

    def ngram_vector(self, gram: str) -> np.ndarray:
        if self.mode == "hashed":
            return self._bucket_vector(_ngram_bucket(gram, self.bucket_count))
        vec = self.ngram_vectors.get(gram)
        return vec if vec is not None else self.zero_vector()

    def embed_word(self, word: str) -> np.ndarray:
        cached = self._word_cache.get(word)
        if cached is not None:
            return cached
        total = np.zeros(self.dim, dtype=np.float32)
        for gram in ngrams(word, self.n_min, self.n_max):
            total += self.ngram_vector(gram)
        if len(self._word_cache) < self._cache_cap:
            self._word_cache[word] = total
        return total

    def embed_text(self, text: str) -> np.ndarray:
        cached = self._text_cache.get(text)
        if cached is not None:
            return cached
        tokens = tokenize(text)
        if not tokens:
            vec = self.zero_vector()
        else:
            vec = np.zeros(self.dim, dtype=np.float32)
            for tok in tokens:
                vec += self.embed_word(tok)
            vec /= np.float32(len(tokens))
        if len(self._text_cache) < self._cache_cap:
            self._text_cache[text] = vec
        return vec

    def score(self, word: str, context_word: str) -> float:
        """Inner-product score: sum over the word's n-grams of z_g . v_c."""
        if self.mode != "trained":
            raise SilradError("score requires a trained model")
        v_c = self.context_vectors.get(context_word)
        if v_c is None:
            raise UnknownContextWord(f"context word {context_word!r} not in table")
        return float(np.dot(self.embed_word(word).astype(np.float64), v_c))

    # -- persistence -----------------------------------------------------------

    def save(self, path) -> None:
        """Versioned binary table plus a JSON config sidecar at path + '.json'."""
        path = str(path)
        mode_code = 0 if self.mode == "hashed" else 1
        with open(path, "wb") as fh:
            fh.write(_MAGIC)
            fh.write(
                struct.pack(
                    "<HBIBBQQ",
                    _FORMAT_VERSION,
                    mode_code,
                    self.dim,
                    self.n_min,
                    self.n_max,
                    self.bucket_count,
                    self.seed % (1 << 64),
                )
            )
            fh.write(struct.pack("<QQ", len(self.ngram_vectors), len(self.context_vectors)))
            for table in (self.ngram_vectors, self.context_vectors):
                for key, vec in table.items():
                    raw = key.encode("utf-8")
                    fh.write(struct.pack("<H", len(raw)))
                    fh.write(raw)
                    fh.write(np.asarray(vec, dtype="<f4").tobytes())
        sidecar = {
            "format_version": _FORMAT_VERSION,
            "mode": self.mode,
            "dim": self.dim,
            "n_min": self.n_min,
            "n_max": self.n_max,
            "bucket_count": self.bucket_count,
            "seed": self.seed,
            "ngram_entries": len(self.ngram_vectors),
            "context_entries": len(self.context_vectors),
        }
        with open(path + ".json", "w", encoding="utf-8") as fh:
            json.dump(sidecar, fh, indent=2)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "EmbeddingModel":
        path = str(path)
        with open(path, "rb") as fh:
            magic = fh.read(4)
            if magic != _MAGIC:
                raise SilradError(f"not an embedding model file: bad magic {magic!r}")
            version, mode_code, dim, n_min, n_max, buckets, seed = struct.unpack(
                "<HBIBBQQ", fh.read(struct.calcsize("<HBIBBQQ"))
            )
            if version != _FORMAT_VERSION:
                raise SilradError(f"unsupported model format version {version}")
            n_ngrams, n_contexts = struct.unpack("<QQ", fh.read(16))
            row_bytes = dim * 4

            def read_table(count: int) -> dict[str, np.ndarray]:
                table = {}
                for _ in range(count):
                    (key_len,) = struct.unpack("<H", fh.read(2))
                    key = fh.read(key_len).decode("utf-8")
                    table[key] = np.frombuffer(fh.read(row_bytes), dtype="<f4").copy()
                return table

            ngram_vectors = read_table(n_ngrams)
            context_vectors = read_table(n_contexts)
        return cls(
            dim=dim,
            n_min=n_min,
            n_max=n_max,
            mode="hashed" if mode_code == 0 else "trained",
            bucket_count=buckets,
            seed=seed,
            ngram_vectors=ngram_vectors,
            context_vectors=context_vectors,
        )


# -- skip-gram training --------------------------------------------------------


@dataclass
class SkipgramConfig:
    dim: int = DEFAULT_DIM
    n_min: int = DEFAULT_NGRAM_MIN
    n_max: int = DEFAULT_NGRAM_MAX
    window: int = 5
    negatives: int = 5
    learning_rate: float = 0.05
    epochs: int = 5
    seed: int = 0
    record_step_losses: bool = False


def _sigmoid(x: np.ndarray | float):
    return 1.0 / (1.0 + np.exp(-x))


def _log_sigmoid(x: np.ndarray | float):
    # log sigma(x) = -log(1 + exp(-x)), stable for large |x|
    return -np.logaddexp(0.0, -x)


def pair_loss(word_vec: np.ndarray, ctx_vecs: np.ndarray, labels: np.ndarray) -> float:
    """Negative-sampling loss for one (word, positive, negatives) group.

    ``ctx_vecs`` stacks the positive and negative context vectors; labels
    are 1 for the positive row and 0 for negatives. The loss is
    -log sigma(s) for the positive and -log sigma(-s) for each negative,
    with s the inner-product score of the summed word vector.
    """
    scores = ctx_vecs @ word_vec
    signs = np.where(labels == 1, 1.0, -1.0)
    return float(-np.sum(_log_sigmoid(signs * scores)))


def pair_gradients(
    word_vec: np.ndarray, ctx_vecs: np.ndarray, labels: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Analytic gradients of pair_loss.

    Returns (grad_word, grad_ctx) where grad_word applies to *every*
    n-gram vector of the word (the word vector is their sum) and
    grad_ctx has one row per context vector.
    """
    scores = ctx_vecs @ word_vec
    residual = _sigmoid(scores) - labels  # d loss / d score
    grad_word = residual @ ctx_vecs
    grad_ctx = residual[:, None] * word_vec[None, :]
    return grad_word, grad_ctx


def train_skipgram(corpus, config: SkipgramConfig | None = None) -> EmbeddingModel:
    """Fit n-gram and context tables on a corpus of token lists.

    Deterministic given the seed: vocabulary order, table initialisation,
    and negative draws all derive from one generator.
    """
    config = config or SkipgramConfig()
    sentences = [list(s) for s in corpus]
    if not sentences or all(not s for s in sentences):
        raise EmptyCorpus("skip-gram training needs a non-empty corpus")

    vocab: dict[str, int] = {}
    counts: list[int] = []
    for sent in sentences:
        for tok in sent:
            idx = vocab.get(tok)
            if idx is None:
                vocab[tok] = len(counts)
                counts.append(1)
            else:
                counts[idx] += 1
    words = list(vocab)

    gram_index: dict[str, int] = {}
    word_grams: list[np.ndarray] = []
    for w in words:
        rows = []
        for gram in ngrams(w, config.n_min, config.n_max):
            idx = gram_index.get(gram)
            if idx is None:
                idx = len(gram_index)
                gram_index[gram] = idx
            rows.append(idx)
        word_grams.append(np.array(rows, dtype=np.int64))

    rng = np.random.default_rng(config.seed)
    bound = 0.5 / config.dim
    z = rng.uniform(-bound, bound, size=(len(gram_index), config.dim))
    v = rng.uniform(-bound, bound, size=(len(words), config.dim))

    freq = np.asarray(counts, dtype=np.float64) ** 0.75
    neg_cdf = np.cumsum(freq / freq.sum())

    step_losses: list[tuple[float, float]] = []
    lr = config.learning_rate
    for _ in range(config.epochs):
        for sent in sentences:
            idxs = [vocab[t] for t in sent]
            for pos, center in enumerate(idxs):
                lo = max(0, pos - config.window)
                hi = min(len(idxs), pos + config.window + 1)
                for ctx_pos in range(lo, hi):
                    if ctx_pos == pos:
                        continue
                    target = idxs[ctx_pos]
                    negs = np.searchsorted(neg_cdf, rng.random(config.negatives))
                    ctx_ids = np.concatenate(([target], negs))
                    labels = np.zeros(len(ctx_ids))
                    labels[0] = 1.0
                    grams = word_grams[center]
                    word_vec = z[grams].sum(axis=0)
                    ctx_vecs = v[ctx_ids]
                    if config.record_step_losses:
                        before = pair_loss(word_vec, ctx_vecs, labels)
                    grad_word, grad_ctx = pair_gradients(word_vec, ctx_vecs, labels)
                    # unbuffered: repeated ids (duplicate grams, colliding
                    # negatives) must accumulate once per occurrence
                    np.subtract.at(v, ctx_ids, lr * grad_ctx)
                    np.subtract.at(z, grams, lr * grad_word)
                    if config.record_step_losses:
                        after = pair_loss(z[grams].sum(axis=0), v[ctx_ids], labels)
                        step_losses.append((before, after))

    model = EmbeddingModel(
        dim=config.dim,
        n_min=config.n_min,
        n_max=config.n_max,
        mode="trained",
        bucket_count=0,
        seed=config.seed,
        ngram_vectors={g: z[i].copy() for g, i in gram_index.items()},
        context_vectors={w: v[vocab[w]].copy() for w in words},
    )
    if config.record_step_losses:
        model.step_losses = step_losses
    return model
