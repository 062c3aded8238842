"""Pivotal statistics and their null/alternative laws.

For the Gumbel-max watermark the pivot at position t is the pseudorandom
uniform attached to the observed token, Y_t = U_{t, w_t}. Under no watermark
Y is U(0, 1); under the watermark with NTP vector P its CDF is

    F_P(r) = sum_w P_w * r**(1 / P_w)

with density f_P(r) = sum_w r**(1 / P_w - 1). Zero-probability tokens
contribute nothing (the P_w -> 0 limit of P_w * r**(1/P_w) is 0 for r < 1).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from ._validation import check_ntp_dist, check_token_ids
from .prf import prf_uniform

ALT_SAMPLE_TOL = 1e-12


@dataclass(frozen=True)
class PivotSeries:
    """Per-position pivots y and p-values p = 1 - y."""

    y: np.ndarray
    p: np.ndarray

    @classmethod
    def from_y(cls, y) -> "PivotSeries":
        y = np.asarray(y, dtype=float)
        return cls(y=y, p=1.0 - y)

    @property
    def n(self) -> int:
        return int(self.y.size)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "y", "p"])
            for t, (y, p) in enumerate(zip(self.y, self.p)):
                w.writerow([t, repr(float(y)), repr(float(p))])


def pivot_series(seq, key, vocab_size: int) -> PivotSeries:
    """Recompute the pivots of a token sequence under ``key``.

    Positions with index < m have no full window and are excluded, so the
    series covers indices m .. len-1 in order.
    """
    tokens = check_token_ids(seq.tokens, vocab_size, name="sequence")
    m = int(seq.m)
    if len(tokens) <= m:
        raise ValueError(f"sequence of length {len(tokens)} has no scored positions for m={m}")
    y = np.empty(len(tokens) - m)
    for i, t in enumerate(range(m, len(tokens))):
        y[i] = prf_uniform(key, tokens[t - m : t], tokens[t])
    return PivotSeries.from_y(y)


def _grouped(probs) -> tuple[np.ndarray, np.ndarray]:
    """Unique positive probabilities with multiplicities (cuts repeated work
    for flat-tailed vectors, where the tail shares one value)."""
    p = check_ntp_dist(probs)
    p = p[p > 0.0]
    vals, counts = np.unique(p, return_counts=True)
    return vals, counts.astype(float)


def alt_cdf(probs, r):
    """Watermarked-pivot CDF sum_w P_w * r**(1/P_w); accepts scalar or array r."""
    vals, counts = _grouped(probs)
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr < 0.0) or np.any(r_arr > 1.0):
        raise ValueError("r must lie in [0, 1]")
    expo = 1.0 / vals
    out = (counts * vals * r_arr[..., None] ** expo).sum(axis=-1)
    return out if r_arr.ndim else float(out)


def alt_pdf(probs, r):
    """Watermarked-pivot density sum_w r**(1/P_w - 1); accepts scalar or array r."""
    vals, counts = _grouped(probs)
    r_arr = np.asarray(r, dtype=float)
    expo = 1.0 / vals - 1.0
    out = (counts * r_arr[..., None] ** expo).sum(axis=-1)
    return out if r_arr.ndim else float(out)


def alt_sample(probs, u):
    """Inverse-CDF sample(s) from the watermarked pivot law.

    Solves alt_cdf(P, r) = u by bisection to absolute tolerance 1e-12; the
    CDF is strictly increasing on (0, 1) so the root is unique. Bisection is
    used deliberately: the density can be nearly flat close to 0, where a
    Newton step would be unreliable.
    """
    vals, counts = _grouped(probs)
    expo = 1.0 / vals
    weights = counts * vals
    u_arr = np.asarray(u, dtype=float)
    if np.any(u_arr <= 0.0) or np.any(u_arr >= 1.0):
        raise ValueError("u must lie strictly in (0, 1)")
    lo = np.zeros_like(u_arr, dtype=float)
    hi = np.ones_like(u_arr, dtype=float)
    # 50 halvings take the bracket below 1e-12 with margin to spare.
    for _ in range(50):
        mid = 0.5 * (lo + hi)
        f = (weights * mid[..., None] ** expo).sum(axis=-1)
        below = f < u_arr
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    r = 0.5 * (lo + hi)
    r = np.clip(r, np.nextafter(0.0, 1.0), np.nextafter(1.0, 0.0))
    return r if u_arr.ndim else float(r)
