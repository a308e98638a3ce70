"""Trie context graph over tokenized biasing phrases, with CTC transitions.

Each biasing phrase is stored as a root-to-leaf path of token ids; phrases
sharing a token prefix share the prefix's node chain. Transition queries
encode the CTC topology: blank and repeated-token emissions keep a
hypothesis on its node, and an advance into a child that carries the same
token id as the current node is only legal out of the blank sub-state
(a blank must separate repeated tokens).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

from .errors import (
    DuplicateConflict,
    EmptyTokenSequence,
    TokenizationError,
    TokenOutOfRange,
)

ROOT = 0

DEFAULT_WORD_MARKER = "▁"  # the leading-space convention of BPE vocabularies


@dataclass(frozen=True)
class BiasEntry:
    """One biasing phrase: canonical surface text plus its token ids."""

    keyword_id: int
    surface: str
    tokens: tuple[int, ...]


class Transition(NamedTuple):
    """One legal move out of a (node, sub-state) search point.

    ``token`` is the emitted vocabulary token, or None for the blank symbol.
    """

    node: int
    in_blank: bool
    token: int | None


class ContextGraph:
    """Immutable token trie built by :func:`build_graph`.

    Node 0 is the root and carries no token (token id -1). Safe for
    concurrent readers once built.
    """

    def __init__(self) -> None:
        self._token: list[int] = [-1]
        self._children: list[dict[int, int]] = [{}]
        self._terminal: list[int] = [-1]  # keyword_id, -1 when not terminal
        self._depth: list[int] = [0]
        self._surfaces: dict[int, str] = {}
        self.entries: list[BiasEntry] = []

    # construction ---------------------------------------------------------

    def _insert(self, entry: BiasEntry) -> None:
        node = ROOT
        for tok in entry.tokens:
            nxt = self._children[node].get(tok)
            if nxt is None:
                nxt = len(self._token)
                self._children[node][tok] = nxt
                self._token.append(tok)
                self._children.append({})
                self._terminal.append(-1)
                self._depth.append(self._depth[node] + 1)
            node = nxt
        self._terminal[node] = entry.keyword_id
        self._surfaces[entry.keyword_id] = entry.surface
        self.entries.append(entry)

    # queries --------------------------------------------------------------

    @property
    def num_nodes(self) -> int:
        return len(self._token)

    @property
    def num_terminals(self) -> int:
        return sum(1 for k in self._terminal if k >= 0)

    @property
    def max_token_id(self) -> int:
        """Largest token id stored in the trie, -1 for an empty graph."""
        return max(self._token) if len(self._token) > 1 else -1

    def token(self, node: int) -> int:
        return self._token[node]

    def depth(self, node: int) -> int:
        return self._depth[node]

    def children(self, node: int) -> dict[int, int]:
        return dict(self._children[node])

    def terminal_keyword(self, node: int) -> int | None:
        k = self._terminal[node]
        return k if k >= 0 else None

    def surface(self, keyword_id: int) -> str:
        return self._surfaces[keyword_id]

    def transitions(self, node: int, in_blank: bool) -> list[Transition]:
        """All legal single-frame moves from (node, sub-state)."""
        tok = self._token[node]
        out = [Transition(node, True, None)]
        if not in_blank and tok >= 0:
            out.append(Transition(node, False, tok))
        for ctok, cnode in self._children[node].items():
            if in_blank or ctok != tok:
                out.append(Transition(cnode, False, ctok))
        return out


def build_graph(
    entries: Iterable[BiasEntry],
    vocab_size: int | None = None,
    blank_id: int | None = None,
) -> ContextGraph:
    """Build the trie from biasing entries.

    Entries with identical token sequences are deduplicated silently when
    their surfaces match and rejected otherwise. When ``vocab_size`` or
    ``blank_id`` are given, token ids are validated against them.
    """
    graph = ContextGraph()
    by_tokens: dict[tuple[int, ...], BiasEntry] = {}
    seen_ids: set[int] = set()
    for entry in entries:
        if not entry.tokens:
            raise EmptyTokenSequence(f"entry {entry.keyword_id} ({entry.surface!r}) has no tokens")
        if not entry.surface:
            raise ValueError(f"entry {entry.keyword_id} has an empty surface")
        for tok in entry.tokens:
            if tok < 0 or (vocab_size is not None and tok >= vocab_size):
                raise TokenOutOfRange(
                    f"entry {entry.surface!r}: token {tok} outside vocabulary of size {vocab_size}"
                )
            if blank_id is not None and tok == blank_id:
                raise TokenOutOfRange(
                    f"entry {entry.surface!r}: blank id {blank_id} inside a phrase"
                )
        prev = by_tokens.get(entry.tokens)
        if prev is not None:
            if prev.surface == entry.surface:
                continue  # silent dedup of repeated phrases
            raise DuplicateConflict(
                f"entries {prev.surface!r} and {entry.surface!r} share tokens {list(entry.tokens)}"
            )
        if entry.keyword_id in seen_ids:
            raise DuplicateConflict(f"keyword id {entry.keyword_id} used twice")
        seen_ids.add(entry.keyword_id)
        by_tokens[entry.tokens] = entry
        graph._insert(entry)
    return graph


# vocabulary and bias-list files ------------------------------------------


def load_vocab(path: str) -> list[str]:
    """Vocabulary file: one token string per line, line number = token id."""
    with open(path, "r", encoding="utf-8") as fp:
        return [line.rstrip("\r\n") for line in fp]


def tokenize(
    text: str,
    vocab: Sequence[str],
    marker: str = DEFAULT_WORD_MARKER,
    skip_ids: Iterable[int] = (),
) -> list[int]:
    """Greedy longest-match tokenization of ``text`` against ``vocab``.

    Spaces are mapped to the word-boundary marker before matching, so a
    phrase like "justin bieber" matches marker-prefixed pieces.
    """
    skip = set(skip_ids)
    table: dict[str, int] = {}
    for tid, piece in enumerate(vocab):
        if tid in skip or not piece:
            continue
        table.setdefault(piece, tid)
    if not table:
        raise TokenizationError("vocabulary has no usable pieces")
    longest = max(len(p) for p in table)
    normalized = marker + text.strip().replace(" ", marker)
    out: list[int] = []
    i = 0
    while i < len(normalized):
        for span in range(min(longest, len(normalized) - i), 0, -1):
            tid = table.get(normalized[i : i + span])
            if tid is not None:
                out.append(tid)
                i += span
                break
        else:
            raise TokenizationError(f"no vocabulary piece matches {normalized[i:]!r}")
    return out


def load_bias_list(
    path: str,
    vocab: Sequence[str] | None = None,
    marker: str = DEFAULT_WORD_MARKER,
    blank_id: int | None = None,
) -> list[BiasEntry]:
    """Read a bias list: ``surface<TAB>token_id,token_id,...`` per line.

    Lines starting with ``#`` and blank lines are ignored. Lines without a
    token column are tokenized against ``vocab`` (required in that case).
    """
    entries: list[BiasEntry] = []
    skip = {blank_id} if blank_id is not None else set()
    with open(path, "r", encoding="utf-8") as fp:
        for lineno, raw in enumerate(fp, start=1):
            line = raw.rstrip("\r\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            if "\t" in line:
                surface, id_col = line.split("\t", 1)
                try:
                    tokens = tuple(int(x) for x in id_col.split(",") if x.strip())
                except ValueError as exc:
                    raise ValueError(f"{path}:{lineno}: bad token id list {id_col!r}") from exc
            else:
                surface = line
                if vocab is None:
                    raise ValueError(
                        f"{path}:{lineno}: entry {surface!r} has no token ids and no vocabulary was given"
                    )
                tokens = tuple(tokenize(surface, vocab, marker, skip))
            entries.append(BiasEntry(len(entries), surface.strip(), tokens))
    return entries
