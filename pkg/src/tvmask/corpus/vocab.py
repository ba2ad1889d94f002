"""Frequency-based subword vocabulary with wordpiece-style continuation pieces."""

from __future__ import annotations

import hashlib
from collections import Counter
from typing import Iterable

RESERVED_TOKENS = ("[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]")
CONTINUATION = "##"

MAX_PIECE_LEN = 16


class Vocabulary:
    """Token string <-> id map with fixed reserved ids at the front."""

    pad_id = 0
    unk_id = 1
    cls_id = 2
    sep_id = 3
    mask_id = 4
    n_reserved = len(RESERVED_TOKENS)

    def __init__(self, tokens: list[str]):
        if tuple(tokens[: self.n_reserved]) != RESERVED_TOKENS:
            raise ValueError(f"vocabulary must start with {RESERVED_TOKENS}")
        self.tokens = list(tokens)
        self.token_to_id = {tok: i for i, tok in enumerate(self.tokens)}
        if len(self.token_to_id) != len(self.tokens):
            raise ValueError("duplicate token in vocabulary")

    @property
    def size(self) -> int:
        return len(self.tokens)

    def id_of(self, token: str) -> int | None:
        return self.token_to_id.get(token)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            for tok in self.tokens:
                f.write(tok + "\n")

    @classmethod
    def load(cls, path) -> "Vocabulary":
        with open(path, encoding="utf-8") as f:
            tokens = [line.rstrip("\n") for line in f]
        return cls(tokens)

    def content_hash(self) -> str:
        h = hashlib.sha256()
        for tok in self.tokens:
            h.update(tok.encode("utf-8"))
            h.update(b"\n")
        return h.hexdigest()


def build_vocab(sentences: Iterable[list[tuple[str, int]]], vocab_size: int) -> Vocabulary:
    """Build a subword vocabulary of at most vocab_size entries.

    Candidate pieces are all substrings (up to MAX_PIECE_LEN chars) of
    corpus words, continuation-marked when word-internal, counted with
    the word's frequency. Single-character pieces are admitted first so
    greedy matching rarely falls back to [UNK]; the rest fill by
    descending count, ties broken lexicographically. Deterministic for a
    given corpus and size.
    """
    if vocab_size < len(RESERVED_TOKENS):
        raise ValueError(f"vocab_size must be >= {len(RESERVED_TOKENS)}, got {vocab_size}")
    word_freq: Counter[str] = Counter()
    for sentence in sentences:
        for form, _pos in sentence:
            word_freq[form] += 1

    piece_freq: Counter[str] = Counter()
    for word, freq in word_freq.items():
        n = len(word)
        for i in range(n):
            top = min(n, i + MAX_PIECE_LEN)
            for j in range(i + 1, top + 1):
                piece = word[i:j] if i == 0 else CONTINUATION + word[i:j]
                piece_freq[piece] += freq

    def by_count(items):
        return sorted(items, key=lambda kv: (-kv[1], kv[0]))

    singles_initial = by_count(
        (p, c) for p, c in piece_freq.items() if len(p) == 1
    )
    singles_cont = by_count(
        (p, c) for p, c in piece_freq.items() if p.startswith(CONTINUATION) and len(p) == 3
    )
    rest = by_count(
        (p, c)
        for p, c in piece_freq.items()
        if len(p) > 1 and not (p.startswith(CONTINUATION) and len(p) == 3)
    )

    tokens = list(RESERVED_TOKENS)
    for group in (singles_initial, singles_cont, rest):
        for piece, _count in group:
            if len(tokens) >= vocab_size:
                return Vocabulary(tokens)
            tokens.append(piece)
    return Vocabulary(tokens)
