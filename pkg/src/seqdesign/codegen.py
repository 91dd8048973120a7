"""Baseline and initial sequence sets: m-sequences, Gold families, random sets.

Bit-to-symbol mapping is fixed everywhere as 0 -> +1, 1 -> -1, matching the
sequence-set file format. All generators are deterministic given their spec
and seed; random draws use numpy's default PCG64 generator.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from itertools import combinations

import numpy as np

from .core import CorrelationTable, SequenceSet


class GenerationError(ValueError):
    """An LFSR spec failed to produce a maximal-length sequence."""


# Default primitive taps per degree for standalone m-sequence generation.
# Taps list the feedback polynomial exponents, degree included:
# s[t] = XOR of s[t - k] over k in taps.
MSEQ_TAPS: dict[int, tuple[int, ...]] = {
    3: (3, 2),
    4: (4, 3),
    5: (5, 3),
    6: (6, 5),
    7: (7, 6),
    8: (8, 6, 5, 4),
    9: (9, 5),
    10: (10, 7),
}

_SAMPLE_CHUNK = 8192  # fixed so that seeded subset sampling is reproducible


@dataclass(frozen=True)
class LfsrSpec:
    """Fibonacci LFSR: degree, feedback tap exponents, nonzero initial state."""

    degree: int
    taps: tuple[int, ...]
    seed: int = -1  # -1 means all-ones

    def __post_init__(self):
        n = self.degree
        if n < 2:
            raise ValueError(f"degree must be >= 2, got {n}")
        if not self.taps or any(not (1 <= t <= n) for t in self.taps):
            raise ValueError(f"taps must lie in 1..{n}, got {self.taps}")
        if n not in self.taps:
            raise ValueError(f"taps must include the degree {n}")
        if len(set(self.taps)) != len(self.taps):
            raise ValueError(f"duplicate taps in {self.taps}")
        seed = self.seed_bits()
        if not any(seed):
            raise ValueError("seed state must be nonzero")

    def seed_bits(self) -> list[int]:
        if self.seed == -1:
            return [1] * self.degree
        if not (0 < self.seed < 2**self.degree):
            raise ValueError(f"seed must be in 1..2^{self.degree}-1, got {self.seed}")
        return [(self.seed >> b) & 1 for b in range(self.degree)]


def _lfsr_bits(spec: LfsrSpec) -> np.ndarray:
    """One full period of output bits; raises GenerationError on short period.

    Maximality is validated by checking that the state sequence first repeats
    after exactly 2^n - 1 steps.
    """
    n = spec.degree
    target = 2**n - 1
    taps = spec.taps
    bits = spec.seed_bits()
    start = tuple(bits)
    t = n
    while True:
        v = 0
        for k in taps:
            v ^= bits[t - k]
        bits.append(v)
        t += 1
        if tuple(bits[t - n : t]) == start:
            period = t - n
            break
        if t - n > target:
            period = -1
            break
    if period != target:
        raise GenerationError(
            f"taps {taps} with seed state {start} give period {period}, "
            f"expected {target}: not a primitive polynomial"
        )
    return np.array(bits[:target], dtype=np.int64)


def generate_mseq(spec: LfsrSpec | int) -> np.ndarray:
    """Maximal-length sequence over {-1, +1} of length 2^n - 1.

    Accepts an LfsrSpec or a bare degree (which uses MSEQ_TAPS defaults).
    """
    if isinstance(spec, int):
        if spec not in MSEQ_TAPS:
            raise ValueError(
                f"no default taps for degree {spec}; supported: {sorted(MSEQ_TAPS)}"
            )
        spec = LfsrSpec(spec, MSEQ_TAPS[spec])
    return 1 - 2 * _lfsr_bits(spec)


def _load_preferred_pairs() -> dict[int, tuple[tuple[int, ...], tuple[int, ...]]]:
    raw = json.loads(
        resources.files("seqdesign").joinpath("data/preferred_pairs.json").read_text()
    )
    return {
        int(n): (tuple(a), tuple(b)) for n, (a, b) in raw["pairs"].items()
    }


PREFERRED_PAIRS = _load_preferred_pairs()


def gold_bound(n: int) -> int:
    """The t(n) in the three-valued Gold correlation set {-1, -t, t-2}."""
    return 2 ** ((n + 2) // 2) + 1 if n % 2 == 0 else 2 ** ((n + 1) // 2) + 1


@dataclass(frozen=True)
class GoldFamily:
    """All 2^n + 1 Gold codes of length 2^n - 1 from a preferred m-sequence pair.

    Column order: the two m-sequences u, v first, then u * shift(v, d) for
    d = 0 .. L-1.
    """

    n: int
    specs: tuple[LfsrSpec, LfsrSpec]
    codes: SequenceSet = field(compare=False)

    @property
    def size(self) -> int:
        return self.codes.K

    @property
    def length(self) -> int:
        return self.codes.L


def generate_gold_family(n: int) -> GoldFamily:
    if n not in PREFERRED_PAIRS:
        raise ValueError(
            f"no preferred pair for degree {n}; supported: {sorted(PREFERRED_PAIRS)}"
        )
    taps_u, taps_v = PREFERRED_PAIRS[n]
    spec_u = LfsrSpec(n, taps_u)
    spec_v = LfsrSpec(n, taps_v)
    u = generate_mseq(spec_u)
    v = generate_mseq(spec_v)
    L = 2**n - 1
    cols = np.empty((L, L + 2), dtype=np.int64)
    cols[:, 0] = u
    cols[:, 1] = v
    for d in range(L):
        cols[:, 2 + d] = u * np.roll(v, -d)
    return GoldFamily(n=n, specs=(spec_u, spec_v), codes=SequenceSet(cols))


def random_set(L: int, K: int, seed: int) -> SequenceSet:
    """Uniform i.i.d. +-1 entries, deterministic given seed."""
    rng = np.random.default_rng(seed)
    return SequenceSet(rng.integers(0, 2, size=(L, K)) * 2 - 1)


def _family_pair_energies(codes: SequenceSet) -> tuple[np.ndarray, np.ndarray]:
    """Per-member and per-pair ISL contributions for fast subset scoring.

    auto[a]  = sum over k != 0 of autocorr(a, k)^2
    cross[a, b] = sum over all k of corr(a, b, k)^2   (a != b)

    Computed via Parseval on the power spectra, then rounded back to the
    exact integers (sums of squared integers).
    """
    L, M = codes.L, codes.K
    spectra = np.fft.rfft(codes.entries, axis=0)
    power = (spectra.real**2 + spectra.imag**2).T  # (M, nf)
    weights = np.full(power.shape[1], 2.0)
    weights[0] = 1.0
    if L % 2 == 0:
        weights[-1] = 1.0
    gram = (power * weights) @ power.T / L
    cross = np.rint(gram).astype(np.int64)
    auto = cross.diagonal() - L * L
    return auto.copy(), cross


def sample_best_gold_subset(
    family: GoldFamily, K: int, num_samples: int, seed: int
) -> tuple[SequenceSet, int]:
    """Best-ISL subset among num_samples uniform random K-subsets of the family.

    Deterministic given seed. Subsets are drawn by rejection in fixed-size
    chunks; within each chunk, rows with repeated members are discarded and
    the remaining draws are consumed in order.
    """
    M = family.size
    if not (1 <= K <= M):
        raise ValueError(f"need 1 <= K <= family size {M}, got K={K}")
    if num_samples < 1:
        raise ValueError("num_samples must be >= 1")
    auto, cross = _family_pair_energies(family.codes)
    rng = np.random.default_rng(seed)
    best_isl = None
    best_subset = None
    remaining = num_samples
    while remaining > 0:
        draw = rng.integers(0, M, size=(_SAMPLE_CHUNK, K))
        if K > 1:
            ok = np.ones(len(draw), dtype=bool)
            for a, b in combinations(range(K), 2):
                ok &= draw[:, a] != draw[:, b]
            draw = draw[ok]
        draw = draw[:remaining]
        if len(draw) == 0:
            continue
        scores = auto[draw].sum(axis=1)
        for a, b in combinations(range(K), 2):
            scores = scores + cross[draw[:, a], draw[:, b]]
        pos = int(np.argmin(scores))
        if best_isl is None or int(scores[pos]) < best_isl:
            best_isl = int(scores[pos])
            best_subset = np.sort(draw[pos])
        remaining -= len(draw)
    subset = SequenceSet(family.codes.entries[:, best_subset])
    return subset, best_isl


def check_gold_property(family: GoldFamily, pairs=None) -> bool:
    """True iff every checked pair correlation stays in {-1, -t, t-2}.

    With pairs=None every pair and every off-peak autocorrelation is checked
    (exhaustive); otherwise `pairs` is an iterable of (i, j) column indices.
    """
    t = gold_bound(family.n)
    allowed = {-1, -t, t - 2}
    table = None
    if pairs is None:
        table = CorrelationTable.build(family.codes)
        M = family.size
        pair_iter = [(i, j) for i in range(M) for j in range(i, M)]
    else:
        pair_iter = list(pairs)
    for i, j in pair_iter:
        if table is not None:
            row = table.values[table.pair_index(i, j)]
        else:
            a = family.codes.entries[:, i]
            b = family.codes.entries[:, j]
            spec = np.fft.rfft(a)
            specb = np.fft.rfft(b)
            row = np.rint(np.fft.irfft(np.conj(spec) * specb, n=family.length))
            row = row.astype(np.int64)
        vals = set(row[1:].tolist()) if i == j else set(row.tolist())
        if not vals <= allowed:
            return False
    return True
