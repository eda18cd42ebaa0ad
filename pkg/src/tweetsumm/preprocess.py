"""Text normalization and fixed-length WordPiece encoding.

The vocabulary file is plain text, one token per line, 0-based line number
= token id, with the four stream-special tokens (``<url>``, ``<hashtag>``,
``<mention>``, ``<rt>``) appended as the final four lines.  Loaded from
the reference uncased BERT vocabulary this yields 30,526 lines and a
30,525-token frequency dimensionality (PAD carries no frequency mass).
"""

from __future__ import annotations

import re
from dataclasses import dataclass

MAX_TOKENS = 50
MAX_WORD_CHARS = 100

PAD_TOKEN = "[PAD]"
UNK_TOKEN = "[UNK]"
URL_TOKEN = "<url>"
HASHTAG_TOKEN = "<hashtag>"
MENTION_TOKEN = "<mention>"
RT_TOKEN = "<rt>"

SPECIAL_STREAM_TOKENS = (URL_TOKEN, HASHTAG_TOKEN, MENTION_TOKEN, RT_TOKEN)

# Conservative patterns: explicit scheme or bare t.co shortener for URLs,
# word-character handles and tags.
_URL_RE = re.compile(r"(?:https?://\S+|\bt\.co/\S+)", re.IGNORECASE)
_MENTION_RE = re.compile(r"@\w+")
_HASHTAG_RE = re.compile(r"#\w+")
_LEADING_RT_RE = re.compile(r"^\s*rt\b[: ]?", re.IGNORECASE)
_WS_RE = re.compile(r"\s+")


class VocabError(Exception):
    pass


class Vocab:
    """Immutable token-string <-> id table with reserved special ids."""

    def __init__(self, tokens: list[str]):
        self.tokens = list(tokens)
        self.index = {tok: i for i, tok in enumerate(self.tokens)}
        if len(self.index) != len(self.tokens):
            raise VocabError("duplicate tokens in vocabulary")
        for required in (PAD_TOKEN, UNK_TOKEN, *SPECIAL_STREAM_TOKENS):
            if required not in self.index:
                raise VocabError(f"vocabulary lacks required token {required!r}")
        self.pad_id = self.index[PAD_TOKEN]
        self.unk_id = self.index[UNK_TOKEN]
        self.special_ids = {tok: self.index[tok] for tok in SPECIAL_STREAM_TOKENS}

    @classmethod
    def load(cls, path) -> "Vocab":
        with open(path, encoding="utf-8") as fh:
            tokens = [line.rstrip("\n") for line in fh if line.rstrip("\n")]
        return cls(tokens)

    def __len__(self):
        return len(self.tokens)

    @property
    def freq_dim(self) -> int:
        """Dimensionality of frequency vectors: all tokens except PAD."""
        return len(self.tokens) - 1

    def freq_index(self, token_id: int) -> int:
        """Map a non-PAD token id to its frequency-vector position."""
        if token_id == self.pad_id:
            raise ValueError("PAD has no frequency index")
        if not 0 <= token_id < len(self.tokens):
            raise ValueError(f"token id {token_id} out of range")
        return token_id - 1 if token_id > self.pad_id else token_id


@dataclass(frozen=True)
class TokenSeq:
    ids: tuple[int, ...]  # exactly MAX_TOKENS entries
    length: int  # count of non-PAD positions

    def non_pad_ids(self) -> tuple[int, ...]:
        return self.ids[: self.length]


def normalize(text: str) -> str:
    """Lowercase and replace URLs, mentions, hashtags and a leading RT
    marker by their special tokens; collapse whitespace."""
    text = _URL_RE.sub(URL_TOKEN, text)
    text = _LEADING_RT_RE.sub(RT_TOKEN + " ", text)
    text = _MENTION_RE.sub(MENTION_TOKEN, text)
    text = _HASHTAG_RE.sub(HASHTAG_TOKEN, text)
    text = text.lower()
    return _WS_RE.sub(" ", text).strip()


def wordpiece_tokenize(text: str, vocab: Vocab) -> list[int]:
    """Greedy longest-match-first subword tokenization of normalized text.

    Continuation pieces use the ``##`` prefix convention; a word with no
    valid decomposition (or longer than MAX_WORD_CHARS) maps to UNK.
    Special token strings map atomically to their reserved ids.
    """
    ids: list[int] = []
    for word in text.split():
        if word in vocab.special_ids:
            ids.append(vocab.special_ids[word])
            continue
        if len(word) > MAX_WORD_CHARS:
            ids.append(vocab.unk_id)
            continue
        pieces: list[int] = []
        start = 0
        while start < len(word):
            end = len(word)
            piece_id = None
            while end > start:
                sub = word[start:end]
                if start > 0:
                    sub = "##" + sub
                if sub in vocab.index:
                    piece_id = vocab.index[sub]
                    break
                end -= 1
            if piece_id is None:
                pieces = None
                break
            pieces.append(piece_id)
            start = end
        if pieces is None:
            ids.append(vocab.unk_id)
        else:
            ids.extend(pieces)
    return ids


def encode(text: str, vocab: Vocab) -> TokenSeq:
    """Normalize, tokenize, truncate to 50 ids, pad with PAD to 50."""
    ids = wordpiece_tokenize(normalize(text), vocab)[:MAX_TOKENS]
    length = len(ids)
    ids = ids + [vocab.pad_id] * (MAX_TOKENS - length)
    return TokenSeq(ids=tuple(ids), length=length)
