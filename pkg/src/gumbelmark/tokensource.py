"""Synthetic next-token-prediction (NTP) distributions.

Constructors for the two synthetic NTP families used in the simulation
studies (a Zipf-tailed one and a flat-tailed one), the least-favorable
distribution with a given singularity, and a seeded toy autoregressive
source for end-to-end generation runs.

Throughout, the "singularity" of a distribution is 1 minus its largest
probability; distributions with singularity delta have top entry 1 - delta.
"""

from __future__ import annotations

import hashlib
import math
import struct
from dataclasses import dataclass

import numpy as np

from ._validation import check_ntp_dist
from .prf import _digest_to_unit

M1_A_RANGE = (0.95, 1.5)
M1_B_RANGE = (0.01, 0.1)


def _check_delta(delta: float) -> float:
    delta = float(delta)
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta!r}")
    return delta


def make_m2(delta: float, vocab_size: int) -> np.ndarray:
    """Flat-tail NTP vector: (1 - delta, delta/(V-1), ..., delta/(V-1))."""
    delta = _check_delta(delta)
    vocab_size = int(vocab_size)
    if vocab_size < 2:
        raise ValueError(f"vocab size must be >= 2, got {vocab_size}")
    probs = np.full(vocab_size, delta / (vocab_size - 1))
    probs[0] = 1.0 - delta
    return probs


def make_m1(delta: float, vocab_size: int, rng: np.random.Generator) -> np.ndarray:
    """Zipf-tail NTP vector: top entry 1 - delta, tail proportional to (j + b)**-a.

    The tail shape parameters are drawn fresh from the caller's stream:
    a ~ U(0.95, 1.5) and b ~ U(0.01, 0.1).
    """
    delta = _check_delta(delta)
    vocab_size = int(vocab_size)
    if vocab_size < 2:
        raise ValueError(f"vocab size must be >= 2, got {vocab_size}")
    a = rng.uniform(*M1_A_RANGE)
    b = rng.uniform(*M1_B_RANGE)
    tail = (np.arange(1, vocab_size) + b) ** (-a)
    tail *= delta / tail.sum()
    return np.concatenate(([1.0 - delta], tail))


def least_favorable(delta: float) -> np.ndarray:
    """The minimal-support distribution with largest probability 1 - delta.

    floor(1/(1-delta)) atoms of mass 1 - delta plus one remainder atom
    (dropped when the remainder is zero).
    """
    delta = _check_delta(delta)
    top = 1.0 - delta
    k = math.floor(1.0 / top)
    atoms = [top] * k
    rem = 1.0 - k * top
    if rem > 1e-15:
        atoms.append(rem)
    return np.array(atoms)


def delta_of(probs) -> float:
    """Singularity of a distribution: 1 minus its largest entry."""
    p = check_ntp_dist(probs)
    return 1.0 - float(p.max())


def entropy_of(probs) -> float:
    """Shannon entropy in nats, with 0 * log(1/0) taken as 0."""
    p = check_ntp_dist(probs)
    nz = p[p > 0.0]
    return float(-(nz * np.log(nz)).sum())


@dataclass(frozen=True)
class ToySource:
    """A stand-in autoregressive model with controllable singularity.

    Each step's NTP distribution is a deterministic function of (seed, last
    token): a hash picks the singularity within [delta_min, delta_max] and the
    index of the top-probability token; the rest of the mass is flat.
    """

    vocab_size: int
    delta_range: tuple[float, float]
    seed: int

    def __post_init__(self):
        lo, hi = self.delta_range
        if not (0.0 < lo <= hi < 1.0):
            raise ValueError(f"delta range must satisfy 0 < lo <= hi < 1, got {self.delta_range!r}")
        if int(self.vocab_size) < 2:
            raise ValueError("vocab size must be >= 2")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")


def toy_next_dist(source: ToySource, history) -> np.ndarray:
    """NTP distribution the toy source emits after ``history``.

    Depends only on (source.seed, last token), so generation is reproducible
    and windows repeat whenever the last token repeats.
    """
    last = int(history[-1]) if len(history) else 0
    digest = hashlib.sha256(struct.pack("<Q", int(source.seed)) + struct.pack("<I", last)).digest()
    lo, hi = source.delta_range
    delta = lo + _digest_to_unit(digest) * (hi - lo)
    top = int.from_bytes(digest[8:12], "big") % source.vocab_size
    probs = np.full(source.vocab_size, delta / (source.vocab_size - 1))
    probs[top] = 1.0 - delta
    return probs
