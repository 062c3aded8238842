"""Gumbel-max watermarked generation.

The decoder picks argmax_w log(U_w) / P_w over the vocabulary, which is
distributed exactly according to P when the U_w are i.i.d. uniforms, yet is a
deterministic function of (key, context window). Generation optionally applies
repeated-context masking: a token is watermarked only when its m-token window
has not been seen before in this sequence (prompt windows included); masked
positions fall back to plain multinomial sampling from a dedicated seeded
stream, independent of the watermark pseudorandomness.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from ._validation import check_ntp_dist
from .prf import prf_vector
from .tokensource import ToySource, toy_next_dist

PROMPT, WATERMARKED, SAMPLED, EDITED = "P", "W", "S", "E"
_PROVENANCE = {PROMPT, WATERMARKED, SAMPLED, EDITED}


@dataclass
class TokenSeq:
    """Token ids with per-position provenance flags (diagnostics only).

    Provenance is never visible to detectors; it exists so experiments can
    count watermarked/sampled/edited positions. The first m positions can
    never be watermarked (they lack a full window).
    """

    tokens: list[int]
    provenance: list[str]
    m: int

    def __post_init__(self):
        self.tokens = [int(t) for t in self.tokens]
        self.provenance = list(self.provenance)
        self.m = int(self.m)
        if len(self.tokens) != len(self.provenance):
            raise ValueError("tokens and provenance must have equal length")
        bad = set(self.provenance) - _PROVENANCE
        if bad:
            raise ValueError(f"unknown provenance flags: {sorted(bad)}")
        if any(c == WATERMARKED for c in self.provenance[: self.m]):
            raise ValueError("the first m positions can never be watermarked")

    def __len__(self) -> int:
        return len(self.tokens)

    def head(self, n: int) -> "TokenSeq":
        return TokenSeq(self.tokens[:n], self.provenance[:n], self.m)

    def to_json(self) -> str:
        return json.dumps({"tokens": self.tokens, "provenance": self.provenance, "m": self.m})

    @classmethod
    def from_json(cls, text: str) -> "TokenSeq":
        obj = json.loads(text)
        return cls(tokens=obj["tokens"], provenance=obj["provenance"], m=int(obj["m"]))


@dataclass(frozen=True)
class GenConfig:
    n: int
    m: int = 5
    masking: bool = True
    seed: int = 0

    def __post_init__(self):
        if int(self.n) < 1 or int(self.m) < 1:
            raise ValueError("need n >= 1 and m >= 1")


def gumbel_decode(probs, xi):
    """argmax over supported tokens of log(U_w) / P_w.

    Tokens with P_w = 0 are excluded (score -inf); ties break to the lowest
    index so results are reproducible even under float collisions. ``xi`` may
    be a single vector or a batch with vectors along the last axis.
    """
    p = check_ntp_dist(probs)
    x = np.asarray(xi, dtype=float)
    if x.shape[-1] != p.size:
        raise ValueError(f"xi has length {x.shape[-1]}, expected {p.size}")
    if np.any(x <= 0.0) or np.any(x >= 1.0):
        raise ValueError("xi entries must lie strictly in (0, 1)")
    with np.errstate(divide="ignore"):
        scores = np.where(p > 0.0, np.log(x) / p, -np.inf)
    idx = np.argmax(scores, axis=-1)
    return int(idx) if x.ndim == 1 else idx


def _multinomial_draw(probs: np.ndarray, rng: np.random.Generator) -> int:
    """Inverse-CDF draw; keeps masked tokens independent of the watermark PRF."""
    u = rng.random()
    idx = int(np.searchsorted(np.cumsum(probs), u, side="right"))
    return min(idx, probs.size - 1)


def _prompt_windows(prompt: list[int], m: int) -> set[tuple[int, ...]]:
    return {tuple(prompt[i : i + m]) for i in range(len(prompt) - m + 1)}


def generate(source: ToySource, key, prompt, cfg: GenConfig) -> TokenSeq:
    """Autoregressively append cfg.n tokens to ``prompt`` under the watermark.

    The prompt must supply at least m tokens so every generated position has a
    full window.
    """
    prompt = [int(t) for t in prompt]
    if len(prompt) < cfg.m:
        raise ValueError(f"prompt length {len(prompt)} < window size {cfg.m}")
    if min(prompt) < 0 or max(prompt) >= source.vocab_size:
        raise ValueError("prompt contains tokens outside the source vocabulary")
    tokens = list(prompt)
    prov = [PROMPT] * len(prompt)
    fallback = np.random.default_rng(cfg.seed)
    seen = _prompt_windows(prompt, cfg.m) if cfg.masking else set()
    for _ in range(cfg.n):
        window = tuple(tokens[-cfg.m :])
        probs = toy_next_dist(source, tokens)
        if cfg.masking and window in seen:
            tok = _multinomial_draw(probs, fallback)
            prov.append(SAMPLED)
        else:
            xi = prf_vector(key, window, source.vocab_size)
            tok = gumbel_decode(probs, xi)
            prov.append(WATERMARKED)
        if cfg.masking:
            seen.add(window)
        tokens.append(int(tok))
    return TokenSeq(tokens, prov, cfg.m)


def generate_null(source: ToySource, prompt, cfg: GenConfig) -> TokenSeq:
    """Unwatermarked control: every generated token is multinomially sampled."""
    prompt = [int(t) for t in prompt]
    if len(prompt) < cfg.m:
        raise ValueError(f"prompt length {len(prompt)} < window size {cfg.m}")
    tokens = list(prompt)
    prov = [PROMPT] * len(prompt)
    fallback = np.random.default_rng(cfg.seed)
    for _ in range(cfg.n):
        probs = toy_next_dist(source, tokens)
        tokens.append(_multinomial_draw(probs, fallback))
        prov.append(SAMPLED)
    return TokenSeq(tokens, prov, cfg.m)
