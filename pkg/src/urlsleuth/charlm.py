"""Character n-gram language models over URL strings.

Two models trained side by side (one on benign URLs, one on malicious ones)
turn a URL into a pair of normalized log-likelihood scores.  Smoothing is
plain add-k over a fixed symbol inventory, so every conditional is strictly
positive and every score is finite.

Symbol inventory: the 95 printable ASCII characters plus an end-of-string
marker and a catch-all for out-of-range characters (97 predictable symbols).
A begin-of-string marker pads contexts but is never predicted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ModelError

BEGIN = "\x02"
END = "\x03"
UNK = "\x1a"

PRINTABLE = tuple(chr(c) for c in range(0x20, 0x7F))
SYMBOLS = PRINTABLE + (END, UNK)
VOCAB_SIZE = len(SYMBOLS)  # 97

_PREDICTABLE = frozenset(SYMBOLS)


def _norm_char(ch: str) -> str:
    if "\x20" <= ch <= "\x7e":
        return ch
    return UNK


def _norm_context_char(ch: str) -> str:
    if ch == BEGIN:
        return ch
    return _norm_char(ch)


@dataclass
class CharGramModel:
    """Add-k smoothed character n-gram model.

    ``order`` is the n in n-gram: each symbol is conditioned on the
    ``order - 1`` preceding symbols, with begin-of-string padding.
    """

    order: int = 3
    k: float = 1.0
    _ctx_totals: dict[str, int] = field(default_factory=dict, repr=False)
    _ctx_counts: dict[str, dict[str, int]] = field(default_factory=dict, repr=False)
    _trained_on: int = 0

    def __post_init__(self) -> None:
        if self.order < 1:
            raise ModelError(f"order must be >= 1, got {self.order}")
        if self.k <= 0:
            raise ModelError(f"smoothing constant must be > 0, got {self.k}")

    def _padded(self, url: str) -> list[str]:
        return [BEGIN] * (self.order - 1) + [_norm_char(ch) for ch in url] + [END]

    def fit(self, urls) -> "CharGramModel":
        """Accumulate n-gram counts from an iterable of URL strings."""
        for url in urls:
            syms = self._padded(url)
            for i in range(self.order - 1, len(syms)):
                ctx = "".join(syms[i - self.order + 1 : i])
                sym = syms[i]
                self._ctx_totals[ctx] = self._ctx_totals.get(ctx, 0) + 1
                bucket = self._ctx_counts.setdefault(ctx, {})
                bucket[sym] = bucket.get(sym, 0) + 1
            self._trained_on += 1
        return self

    def conditional_prob(self, symbol: str, context: str) -> float:
        """P(symbol | context) with add-k smoothing.

        ``context`` must have exactly ``order - 1`` characters; characters
        outside the inventory are folded to the catch-all symbol on both
        sides.  An unseen context falls back to the uniform
        (0 + k) / (0 + k*V) = 1/V.
        """
        if len(context) != self.order - 1:
            raise ModelError(
                f"context must have {self.order - 1} characters, got {len(context)}"
            )
        sym = symbol if symbol in _PREDICTABLE else _norm_char(symbol)
        if sym not in _PREDICTABLE:
            raise ModelError(f"symbol {symbol!r} cannot be normalized into the inventory")
        ctx = "".join(_norm_context_char(ch) for ch in context)
        count = self._ctx_counts.get(ctx, {}).get(sym, 0)
        total = self._ctx_totals.get(ctx, 0)
        return (count + self.k) / (total + self.k * VOCAB_SIZE)

    def sequence_logprob(self, url: str) -> float:
        """Natural-log likelihood of the URL plus its end marker."""
        syms = self._padded(url)
        lp = 0.0
        for i in range(self.order - 1, len(syms)):
            ctx = "".join(syms[i - self.order + 1 : i])
            count = self._ctx_counts.get(ctx, {}).get(syms[i], 0)
            total = self._ctx_totals.get(ctx, 0)
            lp += math.log((count + self.k) / (total + self.k * VOCAB_SIZE))
        return lp

    def score(self, url: str) -> float:
        """Length-normalized log-likelihood: logprob / (len(url) + 1)."""
        return self.sequence_logprob(url) / (len(url) + 1)

    def to_dict(self) -> dict:
        contexts = []
        for ctx in sorted(self._ctx_counts):
            items = sorted(self._ctx_counts[ctx].items())
            contexts.append([ctx, self._ctx_totals[ctx], [[s, c] for s, c in items]])
        return {
            "order": self.order,
            "k": self.k,
            "trained_on": self._trained_on,
            "contexts": contexts,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CharGramModel":
        model = cls(order=d["order"], k=d["k"])
        model._trained_on = d["trained_on"]
        for ctx, total, items in d["contexts"]:
            model._ctx_totals[ctx] = total
            model._ctx_counts[ctx] = {s: c for s, c in items}
        return model


@dataclass(frozen=True)
class ScorePair:
    """Normalized log-likelihoods of one URL under the two models."""

    benign_score: float
    malicious_score: float


def train_lm(corpus, order: int = 3, smoothing_k: float = 1.0) -> CharGramModel:
    """Train an add-k character n-gram model on an iterable of strings."""
    return CharGramModel(order=order, k=smoothing_k).fit(corpus)


def logprob(lm: CharGramModel, text: str) -> float:
    """Natural-log likelihood of ``text`` plus its end marker under ``lm``."""
    return lm.sequence_logprob(text)


def score_pair(benign: CharGramModel, malicious: CharGramModel, url: str) -> ScorePair:
    """Score one URL under both models; the models must agree on order."""
    if benign.order != malicious.order:
        raise ModelError(
            f"model orders differ: benign {benign.order}, malicious {malicious.order}"
        )
    return ScorePair(benign_score=benign.score(url), malicious_score=malicious.score(url))


@dataclass
class LmScorePair:
    """Benign and malicious language models scored side by side.

    ``transform`` maps URLs to a two-column matrix: column 0 is the benign
    model's normalized log-likelihood, column 1 the malicious model's.
    """

    order: int = 3
    k: float = 1.0
    benign: CharGramModel | None = None
    malicious: CharGramModel | None = None

    def fit(self, urls, labels) -> "LmScorePair":
        urls = list(urls)
        labels = np.asarray(labels)
        if len(urls) != len(labels):
            raise ModelError(f"{len(urls)} urls but {len(labels)} labels")
        if not np.isin(labels, (0, 1)).all():
            raise ModelError("labels must be 0 or 1")
        self.benign = CharGramModel(order=self.order, k=self.k).fit(
            u for u, y in zip(urls, labels) if y == 0
        )
        self.malicious = CharGramModel(order=self.order, k=self.k).fit(
            u for u, y in zip(urls, labels) if y == 1
        )
        return self

    def scores(self, url: str) -> tuple[float, float]:
        if self.benign is None or self.malicious is None:
            raise ModelError("score pair is not fitted")
        return self.benign.score(url), self.malicious.score(url)

    def transform(self, urls) -> np.ndarray:
        if self.benign is None or self.malicious is None:
            raise ModelError("score pair is not fitted")
        out = np.empty((len(urls), 2), dtype=np.float64)
        for i, url in enumerate(urls):
            out[i, 0] = self.benign.score(url)
            out[i, 1] = self.malicious.score(url)
        return out

    def to_dict(self) -> dict:
        if self.benign is None or self.malicious is None:
            raise ModelError("score pair is not fitted")
        return {
            "order": self.order,
            "k": self.k,
            "benign": self.benign.to_dict(),
            "malicious": self.malicious.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LmScorePair":
        return cls(
            order=d["order"],
            k=d["k"],
            benign=CharGramModel.from_dict(d["benign"]),
            malicious=CharGramModel.from_dict(d["malicious"]),
        )
