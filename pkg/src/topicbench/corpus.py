"""Deterministic document preprocessing, vocabulary construction, and corpus encoding.

The same pipeline is applied to training and reference corpora; reference
corpora reuse the training vocabulary so they can never introduce new terms.
"""

from __future__ import annotations

import json
import math
import re
import struct
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterable, Iterator, Optional, Sequence

from sklearn.base import BaseEstimator, TransformerMixin

TOKEN_RE = re.compile(r"[\w-]+", re.UNICODE)
# A retained vocabulary term: word chars / hyphens with at least one ascii letter.
VOCAB_TERM_RE = re.compile(r"^[\w-]*[a-zA-Z][\w-]*$", re.UNICODE)

ENCODED_MAGIC = b"TBEC0001"

MIN_WHITESPACE_TOKENS = 25
MIN_ENCODED_TOKENS = 5
MAX_DF_RATIO = 0.9


class CorpusError(ValueError):
    """Raised for malformed documents or invalid corpus-level inputs."""


def load_default_stopwords() -> frozenset[str]:
    """Bundled, versioned English stopword list."""
    text = resources.files("topicbench.data").joinpath("stopwords_en.txt").read_text()
    return frozenset(w for w in text.split() if w)


@dataclass
class RawDocument:
    id: str
    text: str
    entity_spans: Optional[list[tuple[int, int, str]]] = None


@dataclass
class TokenizedDoc:
    id: str
    tokens: list[str]


@dataclass
class PreprocessConfig:
    truncate_tokens: int = 5000
    min_whitespace_tokens: int = MIN_WHITESPACE_TOKENS
    stopwords: frozenset[str] = field(default_factory=load_default_stopwords)
    # "spans": use caller-supplied spans when present, else fall back to the
    # capitalization heuristic; "heuristic": always use the heuristic;
    # "none": no entity joining.
    entity_policy: str = "spans"


@dataclass
class Vocabulary:
    terms: list[str]
    term_to_id: dict[str, int]
    doc_freq: list[int]
    corpus_size: int
    min_df: int
    max_df_ratio: float = MAX_DF_RATIO
    dropped: dict[str, str] = field(default_factory=dict)  # term -> rule that removed it

    def __len__(self) -> int:
        return len(self.terms)

    def save_tsv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            f.write("term\tid\tdoc_freq\n")
            for i, term in enumerate(self.terms):
                f.write(f"{term}\t{i}\t{self.doc_freq[i]}\n")

    @classmethod
    def load_tsv(cls, path, corpus_size: int = 0, min_df: int = 2) -> "Vocabulary":
        terms, freqs = [], []
        with open(path, encoding="utf-8") as f:
            header = f.readline()
            if not header.startswith("term\t"):
                raise CorpusError(f"{path}: not a vocabulary TSV")
            for line in f:
                term, _id, df = line.rstrip("\n").split("\t")
                terms.append(term)
                freqs.append(int(df))
        return cls(
            terms=terms,
            term_to_id={t: i for i, t in enumerate(terms)},
            doc_freq=freqs,
            corpus_size=corpus_size,
            min_df=min_df,
        )


@dataclass
class EncodedCorpus:
    docs: list[tuple[str, list[int]]]
    vocab_ref: str = ""

    def __len__(self) -> int:
        return len(self.docs)

    def save_jsonl(self, path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            for doc_id, ids in self.docs:
                f.write(json.dumps({"id": doc_id, "token_ids": ids}) + "\n")

    @classmethod
    def load_jsonl(cls, path, vocab_ref: str = "") -> "EncodedCorpus":
        docs = []
        with open(path, encoding="utf-8") as f:
            for line in f:
                obj = json.loads(line)
                docs.append((obj["id"], list(obj["token_ids"])))
        return cls(docs=docs, vocab_ref=vocab_ref)

    def save_binary(self, path) -> None:
        """Compact binary form: magic, vocab_ref, then length-prefixed docs."""
        with open(path, "wb") as f:
            f.write(ENCODED_MAGIC)
            ref = self.vocab_ref.encode("utf-8")
            f.write(struct.pack("<I", len(ref)))
            f.write(ref)
            f.write(struct.pack("<I", len(self.docs)))
            for doc_id, ids in self.docs:
                raw = doc_id.encode("utf-8")
                f.write(struct.pack("<I", len(raw)))
                f.write(raw)
                f.write(struct.pack("<I", len(ids)))
                f.write(struct.pack(f"<{len(ids)}I", *ids))

    @classmethod
    def load_binary(cls, path) -> "EncodedCorpus":
        with open(path, "rb") as f:
            magic = f.read(len(ENCODED_MAGIC))
            if magic != ENCODED_MAGIC:
                raise CorpusError(f"{path}: bad magic {magic!r}")
            (ref_len,) = struct.unpack("<I", f.read(4))
            vocab_ref = f.read(ref_len).decode("utf-8")
            (n_docs,) = struct.unpack("<I", f.read(4))
            docs = []
            for _ in range(n_docs):
                (id_len,) = struct.unpack("<I", f.read(4))
                doc_id = f.read(id_len).decode("utf-8")
                (n_tok,) = struct.unpack("<I", f.read(4))
                ids = list(struct.unpack(f"<{n_tok}I", f.read(4 * n_tok)))
                docs.append((doc_id, ids))
        return cls(docs=docs, vocab_ref=vocab_ref)


def _validate_spans(doc: RawDocument) -> list[tuple[int, int, str]]:
    spans = sorted(doc.entity_spans or [], key=lambda s: (s[0], s[1]))
    prev_end = -1
    for start, end, kind in spans:
        if start < 0 or end > len(doc.text) or start >= end:
            raise CorpusError(
                f"document {doc.id!r}: span ({start}, {end}, {kind!r}) out of bounds"
            )
        if start < prev_end:
            raise CorpusError(
                f"document {doc.id!r}: span ({start}, {end}, {kind!r}) overlaps previous span"
            )
        prev_end = end
    return spans


def _entity_token(text: str) -> str:
    parts = TOKEN_RE.findall(text.lower())
    return "_".join(parts)


def _heuristic_spans(text: str) -> list[tuple[int, int, str]]:
    """Join maximal runs of >= 2 capitalized tokens as entity spans."""
    words = [(m.start(), m.end(), m.group()) for m in re.finditer(r"\S+", text)]
    spans = []
    run: list[tuple[int, int, str]] = []
    for start, end, word in words + [(len(text), len(text), "")]:
        core = word.strip("\"'().,;:!?")
        if core[:1].isupper():
            run.append((start, end, word))
        else:
            if len(run) >= 2:
                spans.append((run[0][0], run[-1][1], "HEURISTIC"))
            run = []
    return spans


def process_document(raw: RawDocument, cfg: PreprocessConfig) -> Optional[TokenizedDoc]:
    """Tokenize and normalize one document; returns None for short documents.

    Documents with fewer than ``cfg.min_whitespace_tokens`` whitespace tokens
    are skipped entirely. Remaining text is truncated to
    ``cfg.truncate_tokens`` whitespace tokens before tokenization. Entity
    spans are joined with underscores (stopwords retained inside); standalone
    stopwords are dropped.
    """
    ws_tokens = raw.text.split()
    if len(ws_tokens) < cfg.min_whitespace_tokens:
        return None

    spans = _validate_spans(raw)
    text = raw.text
    if len(ws_tokens) > cfg.truncate_tokens:
        # Cut at the end of the Nth whitespace token.
        cut = 0
        for m, _ in zip(re.finditer(r"\S+", text), range(cfg.truncate_tokens)):
            cut = m.end()
        text = text[:cut]
        spans = [s for s in spans if s[1] <= cut]

    if cfg.entity_policy == "heuristic" or (
        cfg.entity_policy == "spans" and raw.entity_spans is None
    ):
        spans = _heuristic_spans(text)
    elif cfg.entity_policy == "none":
        spans = []

    tokens: list[str] = []
    pos = 0
    for start, end, _kind in spans:
        for m in TOKEN_RE.finditer(text, pos, start):
            tok = m.group().lower()
            if tok and tok not in cfg.stopwords:
                tokens.append(tok)
        ent = _entity_token(text[start:end])
        if ent:
            tokens.append(ent)
        pos = end
    for m in TOKEN_RE.finditer(text, pos):
        tok = m.group().lower()
        if tok and tok not in cfg.stopwords:
            tokens.append(tok)

    tokens = [t.strip("-") for t in tokens]
    tokens = [t for t in tokens if t]
    return TokenizedDoc(id=raw.id, tokens=tokens)


def min_doc_frequency(corpus_size: int) -> int:
    """Minimum document frequency as a power function of corpus size.

    round(2 * (0.02 * |D|) ** log10(e)), floored at 2. Monotone
    nondecreasing; equals 2 at |D| = 50 and ~110 at |D| = 500,000.
    """
    if corpus_size < 1:
        raise CorpusError("corpus_size must be >= 1")
    exponent = math.log10(math.e)
    raw = 2.0 * (0.02 * corpus_size) ** exponent
    return max(2, int(math.floor(raw + 0.5)))  # round half-up


def raw_min_doc_frequency(corpus_size: int) -> float:
    """Unrounded value of the min-df power law, for audit output."""
    if corpus_size < 1:
        raise CorpusError("corpus_size must be >= 1")
    return 2.0 * (0.02 * corpus_size) ** math.log10(math.e)


_FILTER_RULES = ("regex", "length", "min_df", "max_df")


def _term_drop_rule(term: str, df: int, min_df: int, max_df: float) -> Optional[str]:
    if not VOCAB_TERM_RE.match(term):
        return "regex"
    if len(term) <= 2:
        return "length"
    if df < min_df:
        return "min_df"
    if df > max_df:
        return "max_df"
    return None


def build_vocabulary(
    docs: Iterable[TokenizedDoc], max_df_ratio: float = MAX_DF_RATIO
) -> Vocabulary:
    """Build the training vocabulary with all document-frequency filters.

    Retains tokens matching the vocabulary regex, longer than two characters,
    with document frequency in [min_doc_frequency(|D|), max_df_ratio * |D|].
    Terms get contiguous ids in lexicographic order (deterministic regardless
    of document order or sharding).
    """
    df: Counter[str] = Counter()
    n_docs = 0
    for doc in docs:
        n_docs += 1
        df.update(set(doc.tokens))
    if n_docs == 0:
        raise CorpusError("empty document stream")

    min_df = min_doc_frequency(n_docs)
    max_df = max_df_ratio * n_docs
    terms: list[str] = []
    dropped: dict[str, str] = {}
    for term in sorted(df):
        rule = _term_drop_rule(term, df[term], min_df, max_df)
        if rule is None:
            terms.append(term)
        else:
            dropped[term] = rule
    return Vocabulary(
        terms=terms,
        term_to_id={t: i for i, t in enumerate(terms)},
        doc_freq=[df[t] for t in terms],
        corpus_size=n_docs,
        min_df=min_df,
        max_df_ratio=max_df_ratio,
        dropped=dropped,
    )


def merge_doc_freqs(shards: Sequence[Counter], doc_counts: Sequence[int]) -> tuple[Counter, int]:
    """Deterministic reduce of per-worker (doc_freq, n_docs) shards."""
    total: Counter[str] = Counter()
    for shard in shards:
        for term in sorted(shard):
            total[term] += shard[term]
    return total, sum(doc_counts)


def encode_corpus(docs: Iterable[TokenizedDoc], vocab: Vocabulary) -> EncodedCorpus:
    """Map tokens to ids, dropping OOV tokens and documents shorter than five."""
    encoded = []
    t2i = vocab.term_to_id
    for doc in docs:
        ids = [t2i[t] for t in doc.tokens if t in t2i]
        if len(ids) >= MIN_ENCODED_TOKENS:
            encoded.append((doc.id, ids))
    return EncodedCorpus(docs=encoded, vocab_ref=vocab_hash(vocab))


def vocab_hash(vocab: Vocabulary) -> str:
    import hashlib

    h = hashlib.sha256()
    for term in vocab.terms:
        h.update(term.encode("utf-8"))
        h.update(b"\x00")
    return h.hexdigest()[:16]


class VocabularyBuilder(BaseEstimator, TransformerMixin):
    """Estimator wrapper: fit learns a Vocabulary, transform encodes documents."""

    def __init__(self, max_df_ratio: float = MAX_DF_RATIO):
        self.max_df_ratio = max_df_ratio

    def fit(self, X: Sequence[TokenizedDoc], y=None):
        self.vocabulary_ = build_vocabulary(X, max_df_ratio=self.max_df_ratio)
        return self

    def transform(self, X: Sequence[TokenizedDoc]) -> EncodedCorpus:
        return encode_corpus(X, self.vocabulary_)


def read_jsonl_documents(path) -> Iterator[RawDocument]:
    """JSONL input: one {"id", "text", optional "entities"} object per line."""
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            if "id" not in obj or "text" not in obj:
                raise CorpusError(f"{path}:{lineno}: missing 'id' or 'text'")
            spans = None
            if obj.get("entities") is not None:
                spans = [(int(s), int(e), str(k)) for s, e, k in obj["entities"]]
            yield RawDocument(id=str(obj["id"]), text=obj["text"], entity_spans=spans)


def write_tokenized_jsonl(docs: Iterable[TokenizedDoc], path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for doc in docs:
            f.write(json.dumps({"id": doc.id, "tokens": doc.tokens}) + "\n")


def read_tokenized_jsonl(path) -> Iterator[TokenizedDoc]:
    with open(path, encoding="utf-8") as f:
        for line in f:
            obj = json.loads(line)
            yield TokenizedDoc(id=obj["id"], tokens=obj["tokens"])
