"""Shared oracles for the test suite.

The reference implementations here are deliberately independent of the
library's incremental machinery: correlations by direct summation, ISL by
explicit triple loops, minima by full enumeration.
"""

import itertools

import numpy as np
import pytest

from seqdesign.core import SequenceSet


def ref_correlation(X: np.ndarray, i: int, j: int, k: int) -> int:
    L = X.shape[0]
    total = 0
    for m in range(L):
        total += int(X[m, i]) * int(X[(m + k) % L, j])
    return total


def ref_isl(X: np.ndarray) -> int:
    L, K = X.shape
    total = 0
    for i in range(K):
        for j in range(i, K):
            for k in range(L):
                if i == j and k == 0:
                    continue
                total += ref_correlation(X, i, j, k) ** 2
    return total


def ref_psl(X: np.ndarray) -> int:
    L, K = X.shape
    best = 0
    for i in range(K):
        for j in range(i, K):
            for k in range(L):
                if i == j and k == 0:
                    continue
                best = max(best, abs(ref_correlation(X, i, j, k)))
    return best


def random_pm1(rng: np.random.Generator, L: int, K: int) -> np.ndarray:
    return rng.integers(0, 2, size=(L, K)) * 2 - 1


def random_subset(rng: np.random.Generator, L: int, K: int, size: int):
    pos = rng.choice(L * K, size=size, replace=False)
    return [(int(p // K), int(p % K)) for p in pos]


def all_assignments(n: int) -> np.ndarray:
    return np.array(list(itertools.product((-1, 1), repeat=n)), dtype=np.int64)


@pytest.fixture
def rng():
    return np.random.default_rng(20240801)


def make_set(arr) -> SequenceSet:
    return SequenceSet(np.asarray(arr, dtype=np.int64))
