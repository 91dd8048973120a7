"""Sequence sets, periodic correlations, and the ISL/PSL objectives.

A sequence set is an L x K matrix over {-1, +1}; column j is code j. The
periodic cross-correlation of columns i and j at shift k is

    corr(i, j, k) = sum_m X[m, i] * X[(m + k) mod L, j]

and the ISL is the sum of corr(i, j, k)^2 over all pairs i <= j and shifts
k, excluding the K zero-shift autocorrelations (which always equal L).

Everything here is exact signed-integer arithmetic: |corr| <= L <= 1023 and
ISL <= K^2 L^3 < 2^41, comfortably inside int64. The optional FFT build path
rounds to integers and is validated against the parity invariant
corr == L (mod 2); any violation falls back to direct computation.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

Flip = tuple[int, int, int]  # (row, col, new value)


class SequenceFileError(ValueError):
    """A sequence-set file could not be parsed."""


class SequenceSet:
    """An L x K matrix with entries in {-1, +1}; columns are codes."""

    __slots__ = ("entries", "L", "K")

    def __init__(self, entries) -> None:
        arr = np.array(entries, dtype=np.int64)
        if arr.ndim != 2:
            raise ValueError(f"entries must be 2-D, got shape {arr.shape}")
        L, K = arr.shape
        if L < 2 or K < 1:
            raise ValueError(f"need L >= 2 and K >= 1, got L={L}, K={K}")
        if not np.all(np.abs(arr) == 1):
            raise ValueError("all entries must be -1 or +1")
        self.entries = arr
        self.L = int(L)
        self.K = int(K)

    def column(self, j: int) -> np.ndarray:
        return self.entries[:, j]

    def copy(self) -> "SequenceSet":
        return SequenceSet(self.entries)

    def __eq__(self, other) -> bool:
        return isinstance(other, SequenceSet) and np.array_equal(
            self.entries, other.entries
        )

    def __repr__(self) -> str:
        return f"SequenceSet(L={self.L}, K={self.K})"

    # --- text format: header "L K", then K lines of L chars, '0' -> +1 ---

    def to_text(self) -> str:
        lines = [f"{self.L} {self.K}"]
        for j in range(self.K):
            bits = (1 - self.entries[:, j]) // 2  # +1 -> '0', -1 -> '1'
            lines.append("".join("01"[b] for b in bits))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "SequenceSet":
        lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
        if not lines:
            raise SequenceFileError("empty sequence-set file")
        head = lines[0].split()
        if len(head) != 2:
            raise SequenceFileError(f"bad header {lines[0]!r}, expected 'L K'")
        try:
            L, K = int(head[0]), int(head[1])
        except ValueError as exc:
            raise SequenceFileError(f"non-integer header {lines[0]!r}") from exc
        if L < 2 or K < 1:
            raise SequenceFileError(f"invalid dimensions L={L}, K={K}")
        body = lines[1:]
        if len(body) != K:
            raise SequenceFileError(f"expected {K} sequence lines, got {len(body)}")
        entries = np.empty((L, K), dtype=np.int64)
        for j, ln in enumerate(body):
            if len(ln) != L:
                raise SequenceFileError(
                    f"line {j + 2}: expected {L} characters, got {len(ln)}"
                )
            if set(ln) - {"0", "1"}:
                raise SequenceFileError(f"line {j + 2}: characters must be 0 or 1")
            bits = np.frombuffer(ln.encode("ascii"), dtype=np.uint8) - ord("0")
            entries[:, j] = 1 - 2 * bits.astype(np.int64)
        return cls(entries)

    def save(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_text())

    @classmethod
    def load(cls, path) -> "SequenceSet":
        try:
            with open(path) as fh:
                text = fh.read()
        except OSError as exc:
            raise SequenceFileError(f"cannot read {path}: {exc}") from exc
        return cls.from_text(text)


def cross_correlation(x: SequenceSet, i: int, j: int, k: int) -> int:
    """Periodic cross-correlation of columns i and j at shift k, evaluated directly."""
    if not (0 <= i < x.K and 0 <= j < x.K):
        raise ValueError(f"column index out of range: i={i}, j={j}, K={x.K}")
    if not (0 <= k < x.L):
        raise ValueError(f"shift out of range: k={k}, L={x.L}")
    a = x.entries[:, i]
    b = x.entries[:, j]
    return int(np.dot(a, np.roll(b, -k)))


def _pair_correlation_direct(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """All L shifts of sum_m a[m] b[(m+k) mod L], exact integers."""
    L = len(a)
    idx = (np.arange(L)[:, None] + np.arange(L)[None, :]) % L
    return a @ b[idx]


def _rounded_validated(corr_float: np.ndarray, L: int) -> np.ndarray | None:
    """Round a float correlation vector to int64; None if it fails validation.

    Valid vectors have every entry congruent to L mod 2, magnitude at most L,
    and rounding residuals well below 1/2.
    """
    rounded = np.rint(corr_float)
    if np.max(np.abs(corr_float - rounded)) > 0.25:
        return None
    out = rounded.astype(np.int64)
    if np.any(np.abs(out) > L) or np.any((out - L) % 2 != 0):
        return None
    return out


class CorrelationTable:
    """All periodic correlations (i <= j, every shift) of a sequence set.

    Maintained incrementally under entry flips together with a running ISL
    total. The value for i > j is recovered via
    corr(j, i, k) = corr(i, j, (L - k) mod L).

    A table undergoing mutation is owned by exactly one optimization run;
    read-only use from several threads is safe.
    """

    def __init__(self, seqset: SequenceSet, values: np.ndarray, isl_total: int):
        self.seqset = seqset
        self.values = values  # shape (K*(K+1)//2, L)
        self._isl = isl_total
        K = seqset.K
        self._offsets = np.array(
            [i * K - (i * (i - 1)) // 2 - i for i in range(K)], dtype=np.int64
        )

    # --- construction ---

    @classmethod
    def build(cls, seqset: SequenceSet, method: str = "auto") -> "CorrelationTable":
        """Compute every pair correlation; 'fft' and 'direct' give identical integers."""
        if method not in ("auto", "direct", "fft"):
            raise ValueError(f"unknown method {method!r}")
        L, K = seqset.L, seqset.K
        X = seqset.entries
        use_fft = method == "fft" or (method == "auto" and L >= 32)
        values = np.empty((K * (K + 1) // 2, L), dtype=np.int64)
        spectra = np.fft.rfft(X, axis=0) if use_fft else None
        p = 0
        for i in range(K):
            for j in range(i, K):
                row = None
                if use_fft:
                    c = np.fft.irfft(np.conj(spectra[:, i]) * spectra[:, j], n=L)
                    row = _rounded_validated(c, L)
                if row is None:  # direct path, also the fallback
                    row = _pair_correlation_direct(X[:, i], X[:, j])
                values[p] = row
                p += 1
        table = cls(seqset, values, 0)
        table._isl = table._recompute_isl()
        table._validate()
        return table

    def _validate(self) -> None:
        L, K = self.seqset.L, self.seqset.K
        if np.any((self.values - L) % 2 != 0):
            raise AssertionError("correlation parity invariant violated")
        if np.any(np.abs(self.values) > L):
            raise AssertionError("correlation magnitude exceeds L")
        for i in range(K):
            if self.values[self.pair_index(i, i), 0] != L:
                raise AssertionError("zero-shift autocorrelation != L")

    def _recompute_isl(self) -> int:
        L, K = self.seqset.L, self.seqset.K
        return int(np.sum(self.values * self.values)) - K * L * L

    # --- lookups ---

    def pair_index(self, i: int, j: int) -> int:
        """Row of `values` holding pair (i, j) with i <= j."""
        return int(self._offsets[i] + j)

    def correlation(self, i: int, j: int, k: int) -> int:
        L = self.seqset.L
        if i <= j:
            return int(self.values[self.pair_index(i, j), k])
        return int(self.values[self.pair_index(j, i), (L - k) % L])

    def isl(self) -> int:
        return self._isl

    def _isl_mask(self) -> np.ndarray:
        """Boolean mask over `values` selecting the ISL index set."""
        mask = np.ones(self.values.shape, dtype=bool)
        for i in range(self.seqset.K):
            mask[self.pair_index(i, i), 0] = False
        return mask

    def psl(self) -> int:
        """Max |correlation| over the ISL index set (zero-shift autocorrelations excluded)."""
        return int(np.max(np.abs(self.values[self._isl_mask()])))

    def correlation_histogram(self) -> dict[int, int]:
        """Counts of correlation values over the ISL index set."""
        uniq, cnt = np.unique(self.values[self._isl_mask()], return_counts=True)
        return {int(v): int(c) for v, c in zip(uniq, cnt)}

    def copy(self) -> "CorrelationTable":
        return CorrelationTable(self.seqset.copy(), self.values.copy(), self._isl)

    # --- incremental flips ---

    def _check_flips(self, flips: Sequence[Flip]) -> None:
        L, K = self.seqset.L, self.seqset.K
        seen = set()
        for m, c, v in flips:
            if not (0 <= m < L and 0 <= c < K):
                raise ValueError(f"flip index out of range: ({m}, {c})")
            if v not in (-1, 1):
                raise ValueError(f"flip value must be -1 or +1, got {v}")
            if (m, c) in seen:
                raise ValueError(f"duplicate flip index ({m}, {c})")
            seen.add((m, c))

    def _flip_entry(self, m: int, c: int) -> None:
        """Negate entry (m, c), updating all affected correlations and the ISL.

        Cost O(K L). The diagonal pair gains d*(col[(m+k)%L] + col[(m-k)%L])
        at every k != 0; pair (c, j) gains d*X[(m+k)%L, j]; pair (j, c) gains
        d*X[(m-k)%L, j], where d is the entry change.
        """
        X = self.seqset.entries
        L, K = self.seqset.L, self.seqset.K
        old = int(X[m, c])
        d = -2 * old
        values = self.values
        delta_sq = 0
        for j in range(K):
            if j == c:
                col = X[:, c]
                dvec = d * (np.roll(col, -m) + np.roll(col[::-1], m + 1))
                dvec[0] = 0  # zero-shift autocorrelation is constant L
                p = self.pair_index(c, c)
            elif j > c:
                dvec = d * np.roll(X[:, j], -m)
                p = self.pair_index(c, j)
            else:
                dvec = d * np.roll(X[::-1, j], m + 1)
                p = self.pair_index(j, c)
            row = values[p]
            delta_sq -= int(np.dot(row, row))
            row += dvec
            delta_sq += int(np.dot(row, row))
        X[m, c] = -old
        self._isl += delta_sq

    def apply_flips(self, flips: Sequence[Flip]) -> int:
        """Set the given entries to the given values; returns the new ISL."""
        self._check_flips(flips)
        X = self.seqset.entries
        for m, c, v in flips:
            if X[m, c] != v:
                self._flip_entry(m, c)
        return self._isl

    def preview_flips(self, flips: Sequence[Flip]) -> int:
        """ISL after the given flips, without retaining any state change.

        Applies the flips and then their inverses; all arithmetic is exact
        integers, so the table is restored bit-for-bit.
        """
        self._check_flips(flips)
        X = self.seqset.entries
        changed = [(m, c) for m, c, v in flips if X[m, c] != v]
        for m, c in changed:
            self._flip_entry(m, c)
        new_isl = self._isl
        for m, c in reversed(changed):
            self._flip_entry(m, c)
        return new_isl

    def probe_flip(self, m: int, c: int) -> int:
        """ISL after negating entry (m, c), without mutating (O(K L))."""
        X = self.seqset.entries
        L, K = self.seqset.L, self.seqset.K
        d = -2 * int(X[m, c])
        new_isl = self._isl
        for j in range(K):
            if j == c:
                col = X[:, c]
                dvec = d * (np.roll(col, -m) + np.roll(col[::-1], m + 1))
                dvec[0] = 0
                p = self.pair_index(c, c)
            elif j > c:
                dvec = d * np.roll(X[:, j], -m)
                p = self.pair_index(c, j)
            else:
                dvec = d * np.roll(X[::-1, j], m + 1)
                p = self.pair_index(j, c)
            row = self.values[p]
            new = row + dvec
            new_isl += int(np.dot(new, new)) - int(np.dot(row, row))
        return new_isl


def isl(table: CorrelationTable) -> int:
    return table.isl()


def psl(table: CorrelationTable) -> int:
    return table.psl()


def worst_shifts(table: CorrelationTable) -> list[dict]:
    """Per pair (i <= j), the shift with the largest |correlation| in the ISL set."""
    K, L = table.seqset.K, table.seqset.L
    out = []
    for i in range(K):
        for j in range(i, K):
            row = table.values[table.pair_index(i, j)]
            if i == j:
                k = 1 + int(np.argmax(np.abs(row[1:])))
            else:
                k = int(np.argmax(np.abs(row)))
            out.append({"i": i, "j": j, "shift": k, "value": int(row[k])})
    return out
