"""Shared helpers: random normalized matrices, bias lists, partitions, and
independent mini-oracles kept deliberately separate from the package code."""

from __future__ import annotations

import numpy as np

from ctcspot import BiasEntry

MARKER = "▁"


def random_logprobs(rng: np.random.Generator, n_frames: int, vocab: int) -> np.ndarray:
    """Normalized rows with a random sharpness per matrix."""
    scale = rng.uniform(0.5, 3.0)
    x = rng.standard_normal((n_frames, vocab)) * scale
    peak = x.max(axis=1, keepdims=True) if n_frames else x
    if n_frames:
        x = x - (peak + np.log(np.exp(x - peak).sum(axis=1, keepdims=True)))
    return x


def random_entries(
    rng: np.random.Generator,
    count: int,
    vocab: int,
    blank: int,
    max_len: int = 4,
    multiword: bool = True,
) -> list[BiasEntry]:
    """Unique random token sequences with synthetic surfaces."""
    usable = [t for t in range(vocab) if t != blank]
    seen: set[tuple[int, ...]] = set()
    entries: list[BiasEntry] = []
    attempts = 0
    while len(entries) < count and attempts < count * 50:
        attempts += 1
        length = int(rng.integers(1, max_len + 1))
        tokens = tuple(int(rng.choice(usable)) for _ in range(length))
        if tokens in seen:
            continue
        seen.add(tokens)
        idx = len(entries)
        surface = f"kw{idx} extra" if (multiword and idx % 3 == 0) else f"kw{idx}"
        entries.append(BiasEntry(idx, surface, tokens))
    return entries


def random_partition(rng: np.random.Generator, total: int) -> list[int]:
    """Chunk sizes summing to total, occasionally empty."""
    sizes: list[int] = []
    remaining = total
    while remaining > 0:
        if rng.random() < 0.1:
            sizes.append(0)
        n = int(rng.integers(1, remaining + 1))
        sizes.append(n)
        remaining -= n
    if not sizes or rng.random() < 0.2:
        sizes.append(0)
    return sizes


def synthetic_vocab(vocab: int, rng: np.random.Generator | None = None) -> list[str]:
    """Token strings with a mix of word-initial and continuation pieces;
    the last token is the blank."""
    rng = rng or np.random.default_rng(0)
    letters = "abcdefghijklmnopqrstuvwxyz"
    pieces: list[str] = []
    seen: set[str] = set()
    while len(pieces) < vocab - 1:
        body = "".join(rng.choice(list(letters), size=int(rng.integers(1, 3))))
        piece = (MARKER + body) if rng.random() < 0.5 else body
        if piece in seen:
            continue
        seen.add(piece)
        pieces.append(piece)
    pieces.append("<blank>")
    return pieces


def collapse(labels, blank) -> list[int]:
    """Five-line reference CTC collapse: drop repeats, then blanks."""
    out = []
    prev = None
    for sym in labels:
        if sym != prev and sym != blank:
            out.append(sym)
        prev = sym
    return out


def cand_key(c) -> tuple:
    return (c.keyword_id, c.start_frame, c.end_frame, round(c.score, 9))
