import itertools

import numpy as np
import pytest

from seqdesign.core import (
    CorrelationTable,
    SequenceFileError,
    SequenceSet,
    _rounded_validated,
    cross_correlation,
    isl,
    psl,
)
from seqdesign.codegen import generate_mseq

from conftest import make_set, random_pm1, ref_correlation, ref_isl, ref_psl


class TestSequenceSet:
    def test_validation(self):
        with pytest.raises(ValueError):
            SequenceSet(np.zeros((4, 2)))
        with pytest.raises(ValueError):
            SequenceSet(np.ones((1, 2)))  # L < 2
        with pytest.raises(ValueError):
            SequenceSet(np.ones((4, 0)))
        with pytest.raises(ValueError):
            SequenceSet(np.array([1, -1, 1]))  # 1-D
        s = make_set([[1, -1], [-1, 1], [1, 1]])
        assert s.L == 3 and s.K == 2

    def test_copy_is_independent(self):
        s = make_set([[1, -1], [-1, 1]])
        c = s.copy()
        c.entries[0, 0] = -1
        assert s.entries[0, 0] == 1


class TestFileFormat:
    def test_round_trip(self, rng):
        for _ in range(20):
            L = int(rng.integers(2, 40))
            K = int(rng.integers(1, 6))
            s = make_set(random_pm1(rng, L, K))
            assert SequenceSet.from_text(s.to_text()) == s

    def test_encoding_convention(self):
        # '0' -> +1, '1' -> -1, one line per column
        s = SequenceSet.from_text("3 2\n010\n110\n")
        assert s.entries[:, 0].tolist() == [1, -1, 1]
        assert s.entries[:, 1].tolist() == [-1, -1, 1]

    @pytest.mark.parametrize(
        "text",
        [
            "",
            "3\n010\n",
            "x y\n010\n",
            "3 2\n010\n",  # missing a line
            "3 1\n0102\n",  # bad char... also wrong length
            "3 1\n012\n",  # bad char
            "3 1\n01\n",  # wrong length
            "3 1\n0101\n",  # wrong length
            "1 1\n0\n",  # L too small
            "3 0\n",  # K too small
        ],
    )
    def test_rejects(self, text):
        with pytest.raises(SequenceFileError):
            SequenceSet.from_text(text)

    def test_save_load(self, tmp_path, rng):
        s = make_set(random_pm1(rng, 16, 3))
        path = tmp_path / "s.txt"
        s.save(path)
        assert SequenceSet.load(path) == s

    def test_load_missing_file(self, tmp_path):
        with pytest.raises(SequenceFileError):
            SequenceSet.load(tmp_path / "nope.txt")


class TestCrossCorrelation:
    def test_all_ones(self):
        s = make_set(np.ones((4, 2)))
        for k in range(4):
            assert cross_correlation(s, 0, 1, k) == 4
            assert cross_correlation(s, 0, 0, k) == 4

    def test_alternating(self):
        s = make_set(np.array([[1, -1, 1, -1]]).T)
        assert cross_correlation(s, 0, 0, 1) == -4

    def test_mseq_two_valued(self):
        seq = generate_mseq(3)  # degree 3, length 7
        s = SequenceSet(seq[:, None])
        assert cross_correlation(s, 0, 0, 0) == 7
        for k in range(1, 7):
            assert cross_correlation(s, 0, 0, k) == -1

    def test_index_errors(self):
        s = make_set(np.ones((4, 2)))
        with pytest.raises(ValueError):
            cross_correlation(s, 0, 2, 0)
        with pytest.raises(ValueError):
            cross_correlation(s, -1, 0, 0)
        with pytest.raises(ValueError):
            cross_correlation(s, 0, 0, 4)

    def test_matches_reference(self, rng):
        for _ in range(30):
            L = int(rng.integers(2, 20))
            K = int(rng.integers(1, 4))
            X = random_pm1(rng, L, K)
            s = SequenceSet(X)
            i = int(rng.integers(K))
            j = int(rng.integers(K))
            k = int(rng.integers(L))
            assert cross_correlation(s, i, j, k) == ref_correlation(X, i, j, k)


class TestTableBuild:
    def test_hand_example(self):
        t = CorrelationTable.build(make_set(np.array([[1, 1, -1]]).T))
        assert t.values[0].tolist() == [3, -1, -1]

    def test_zero_shift_autocorrelation(self, rng):
        for _ in range(10):
            L = int(rng.integers(2, 30))
            K = int(rng.integers(1, 5))
            t = CorrelationTable.build(SequenceSet(random_pm1(rng, L, K)))
            for i in range(K):
                assert t.values[t.pair_index(i, i), 0] == L

    def test_direct_fft_identical(self, rng):
        # includes the L=16, K=3 case
        shapes = [(16, 3)] + [
            (int(rng.integers(2, 70)), int(rng.integers(1, 5))) for _ in range(15)
        ]
        for L, K in shapes:
            s = SequenceSet(random_pm1(rng, L, K))
            a = CorrelationTable.build(s, method="direct")
            b = CorrelationTable.build(s, method="fft")
            assert np.array_equal(a.values, b.values)
            assert a.isl() == b.isl()

    def test_unknown_method(self):
        with pytest.raises(ValueError):
            CorrelationTable.build(make_set(np.ones((4, 1))), method="magic")

    def test_cross_pair_recovery(self, rng):
        # corr(j, i, k) is read back as corr(i, j, (L-k) % L)
        L, K = 11, 3
        X = random_pm1(rng, L, K)
        t = CorrelationTable.build(SequenceSet(X))
        for i in range(K):
            for j in range(K):
                for k in range(L):
                    assert t.correlation(i, j, k) == ref_correlation(X, i, j, k)

    def test_fft_validation_rejects_corrupt(self):
        # off-parity and out-of-range vectors are rejected, triggering fallback
        assert _rounded_validated(np.array([3.0, -1.0, -1.0]), 3) is not None
        assert _rounded_validated(np.array([3.0, 0.0, -1.0]), 3) is None  # parity
        assert _rounded_validated(np.array([5.0, -1.0, -1.0]), 3) is None  # |v| > L
        assert _rounded_validated(np.array([3.0, -1.4, -1.0]), 3) is None  # residual


class TestObjectives:
    def test_isl_all_ones(self):
        t = CorrelationTable.build(make_set(np.ones((4, 1))))
        assert isl(t) == 48
        assert psl(t) == 4

    def test_isl_brute_force_minimum_l3(self):
        # direct enumeration of all 8 length-3 sequences
        best = {}
        for bits in itertools.product((-1, 1), repeat=3):
            X = np.array(bits, dtype=np.int64)[:, None]
            best[bits] = ref_isl(X)
        assert min(best.values()) == 2
        for bits, v in best.items():
            if sum(1 for b in bits if b == -1) == 1:
                assert v == 2
        t = CorrelationTable.build(make_set(np.array([[1, 1, -1]]).T))
        assert isl(t) == 2

    def test_psl_mseq(self):
        seq = generate_mseq(3)
        t = CorrelationTable.build(SequenceSet(seq[:, None]))
        assert psl(t) == 1

    def test_matches_reference(self, rng):
        for _ in range(20):
            L = int(rng.integers(2, 16))
            K = int(rng.integers(1, 4))
            X = random_pm1(rng, L, K)
            t = CorrelationTable.build(SequenceSet(X))
            assert isl(t) == ref_isl(X)
            assert psl(t) == ref_psl(X)

    def test_histogram_counts(self, rng):
        L, K = 9, 2
        X = random_pm1(rng, L, K)
        t = CorrelationTable.build(SequenceSet(X))
        hist = t.correlation_histogram()
        assert sum(hist.values()) == K * (K + 1) // 2 * L - K
        total = sum(v * v * c for v, c in hist.items())
        assert total == t.isl()


class TestInvariants:
    def test_parity_and_bounds(self, rng):
        for _ in range(20):
            L = int(rng.integers(2, 40))
            K = int(rng.integers(1, 5))
            t = CorrelationTable.build(SequenceSet(random_pm1(rng, L, K)))
            assert np.all((t.values - L) % 2 == 0)
            assert np.all(np.abs(t.values) <= L)

    def test_sum_identity(self, rng):
        # sum_k corr(i, j, k) == colsum_i * colsum_j
        for _ in range(20):
            L = int(rng.integers(2, 30))
            K = int(rng.integers(1, 4))
            X = random_pm1(rng, L, K)
            t = CorrelationTable.build(SequenceSet(X))
            sums = X.sum(axis=0)
            for i in range(K):
                for j in range(i, K):
                    row = t.values[t.pair_index(i, j)]
                    assert int(row.sum()) == int(sums[i]) * int(sums[j])

    def test_autocorrelation_symmetry(self, rng):
        for _ in range(20):
            L = int(rng.integers(2, 40))
            X = random_pm1(rng, L, 1)
            t = CorrelationTable.build(SequenceSet(X))
            row = t.values[0]
            for k in range(1, L):
                assert row[k] == row[L - k]

    def test_symmetry_invariance(self, rng):
        # column permutation, single-column circular shift, single-column negation
        for _ in range(15):
            L = int(rng.integers(3, 24))
            K = int(rng.integers(2, 5))
            X = random_pm1(rng, L, K)
            base = CorrelationTable.build(SequenceSet(X))
            i0, p0 = base.isl(), base.psl()

            perm = rng.permutation(K)
            tp = CorrelationTable.build(SequenceSet(X[:, perm]))
            assert tp.isl() == i0 and tp.psl() == p0

            c = int(rng.integers(K))
            sh = int(rng.integers(1, L))
            Y = X.copy()
            Y[:, c] = np.roll(Y[:, c], sh)
            ts = CorrelationTable.build(SequenceSet(Y))
            assert ts.isl() == i0 and ts.psl() == p0

            Z = X.copy()
            Z[:, c] = -Z[:, c]
            tn = CorrelationTable.build(SequenceSet(Z))
            assert tn.isl() == i0 and tn.psl() == p0


class TestIncrementalFlips:
    def test_empty_flip_set(self, rng):
        t = CorrelationTable.build(SequenceSet(random_pm1(rng, 8, 2)))
        before = t.isl()
        assert t.apply_flips([]) == before
        assert t.preview_flips([]) == before

    def test_involution(self, rng):
        X = random_pm1(rng, 12, 3)
        t = CorrelationTable.build(SequenceSet(X))
        snap = t.values.copy()
        isl0 = t.isl()
        t.apply_flips([(5, 1, int(-X[5, 1]))])
        t.apply_flips([(5, 1, int(X[5, 1]))])
        assert t.isl() == isl0
        assert np.array_equal(t.values, snap)

    def test_noop_values_do_not_change_state(self, rng):
        X = random_pm1(rng, 10, 2)
        t = CorrelationTable.build(SequenceSet(X))
        snap = t.values.copy()
        flips = [(m, c, int(X[m, c])) for m in range(3) for c in range(2)]
        assert t.apply_flips(flips) == t.isl()
        assert np.array_equal(t.values, snap)

    def test_matches_rebuild(self, rng):
        for _ in range(150):
            L = int(rng.integers(2, 24))
            K = int(rng.integers(1, 5))
            X = random_pm1(rng, L, K)
            s = SequenceSet(X)
            t = CorrelationTable.build(s)
            nf = int(rng.integers(1, min(L * K, 12) + 1))
            pos = rng.choice(L * K, size=nf, replace=False)
            flips = [
                (int(p // K), int(p % K), int(rng.integers(0, 2)) * 2 - 1)
                for p in pos
            ]
            previewed = t.preview_flips(flips)
            applied = t.apply_flips(flips)
            assert previewed == applied
            rebuilt = CorrelationTable.build(s, method="direct")
            assert np.array_equal(rebuilt.values, t.values)
            assert rebuilt.isl() == applied

    def test_preview_restores_exactly(self, rng):
        X = random_pm1(rng, 31, 4)
        s = SequenceSet(X)
        t = CorrelationTable.build(s)
        snap_v = t.values.copy()
        snap_x = s.entries.copy()
        flips = [(m, 0, int(-X[m, 0])) for m in range(20)]
        t.preview_flips(flips)
        assert np.array_equal(t.values, snap_v)
        assert np.array_equal(s.entries, snap_x)

    def test_probe_flip(self, rng):
        X = random_pm1(rng, 15, 3)
        s = SequenceSet(X)
        t = CorrelationTable.build(s)
        for m in range(15):
            for c in range(3):
                expect = t.preview_flips([(m, c, int(-X[m, c]))])
                assert t.probe_flip(m, c) == expect

    def test_flip_validation(self, rng):
        t = CorrelationTable.build(SequenceSet(random_pm1(rng, 8, 2)))
        with pytest.raises(ValueError):
            t.apply_flips([(0, 0, 1), (0, 0, -1)])  # duplicate index
        with pytest.raises(ValueError):
            t.apply_flips([(0, 0, 0)])  # bad value
        with pytest.raises(ValueError):
            t.apply_flips([(8, 0, 1)])  # out of range
        with pytest.raises(ValueError):
            t.apply_flips([(0, 2, 1)])
