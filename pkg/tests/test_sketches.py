"""Datasets, partitioning, and the Hamming kernels."""

import numpy as np
import pytest

from sketchtrie import (
    SketchDataset,
    SketchParams,
    hamming_naive,
    hamming_vertical,
    hamming_vertical_bounded,
    partition,
    to_vertical,
    vertical_query,
)

from conftest import encode


class TestParams:
    def test_valid_range(self):
        p = SketchParams(2, 16)
        assert p.alphabet == 4
        assert p.words_per_row == 1

    @pytest.mark.parametrize("b,L", [(0, 8), (9, 8), (2, 0), (2, 257)])
    def test_invalid(self, b, L):
        with pytest.raises(ValueError):
            SketchParams(b, L)

    def test_words_per_row_long(self):
        assert SketchParams(4, 65).words_per_row == 2
        assert SketchParams(4, 256).words_per_row == 4


class TestDataset:
    def test_symbol_range_enforced(self):
        with pytest.raises(ValueError):
            SketchDataset(SketchParams(2, 3), [[0, 1, 4]])

    def test_empty_allowed(self):
        ds = SketchDataset(SketchParams(2, 3), np.zeros((0, 3), dtype=np.uint8))
        assert len(ds) == 0

    def test_row_bytes(self):
        ds = SketchDataset(SketchParams(2, 3), [[0, 1, 3]])
        assert ds.row_bytes(0) == b"\x00\x01\x03"


class TestPartition:
    def test_even_split(self):
        assert partition(SketchParams(2, 32), 2).lengths == (16, 16)

    def test_remainder_goes_to_leading_blocks(self):
        assert partition(SketchParams(2, 16), 3).lengths == (6, 5, 5)

    def test_unit_blocks(self):
        assert partition(SketchParams(2, 5), 5).lengths == (1, 1, 1, 1, 1)

    @pytest.mark.parametrize("m", [0, 33, -1])
    def test_out_of_range(self, m):
        with pytest.raises(ValueError):
            partition(SketchParams(2, 32), m)

    def test_spans_partition_all_positions(self):
        for L in (5, 7, 16, 31):
            for m in range(1, L + 1):
                part = partition(SketchParams(2, L), m)
                seen = []
                for start, stop in part.spans:
                    assert stop > start
                    seen.extend(range(start, stop))
                assert seen == list(range(L))
                assert sum(part.lengths) == L


class TestNaiveHamming:
    def test_single_substitution(self):
        assert hamming_naive(encode("abd"), encode("acd")) == 1

    def test_identical(self):
        assert hamming_naive(encode("abba"), encode("abba")) == 0

    def test_corpus_pair(self):
        assert hamming_naive(encode("aaaaa"), encode("baabb")) == 3

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            hamming_naive(b"\x00", b"\x00\x01")

    def test_symmetry_and_triangle(self):
        rng = np.random.default_rng(0)
        rows = rng.integers(0, 4, size=(30, 12), dtype=np.uint8)
        for _ in range(200):
            i, j, k = rng.integers(0, 30, size=3)
            dij = hamming_naive(rows[i], rows[j])
            assert dij == hamming_naive(rows[j], rows[i])
            assert dij <= hamming_naive(rows[i], rows[k]) + hamming_naive(rows[k], rows[j])


class TestVerticalFormat:
    def test_worked_three_symbol_example(self):
        # s=abd, q=acd under b=2: planes read 001/011 and 011/001,
        # xor-or accumulates to 010, distance 1
        params = SketchParams(2, 3)
        ds = SketchDataset(params, [list(encode("abd"))])
        srow = to_vertical(ds).row(0)
        qrow = vertical_query(encode("acd"), params)
        def plane_string(word):
            return "".join(str((word >> p) & 1) for p in range(3))
        assert plane_string(srow[0]) == "001"
        assert plane_string(srow[1]) == "011"
        assert plane_string(qrow[0]) == "011"
        assert plane_string(qrow[1]) == "001"
        acc = (srow[0] ^ qrow[0]) | (srow[1] ^ qrow[1])
        assert plane_string(acc) == "010"
        assert hamming_vertical(srow, qrow, params) == 1

    def test_identical_rows_distance_zero(self):
        params = SketchParams(4, 20)
        row = vertical_query([i % 16 for i in range(20)], params)
        assert hamming_vertical(row, row, params) == 0

    def test_round_trip(self):
        rng = np.random.default_rng(1)
        for b, L in [(1, 8), (2, 16), (3, 40), (4, 64), (5, 65), (8, 200)]:
            params = SketchParams(b, L)
            data = rng.integers(0, params.alphabet, size=(37, L), dtype=np.uint8)
            ds = SketchDataset(params, data)
            assert np.array_equal(to_vertical(ds).to_dataset().data, data)

    def test_empty_dataset_round_trip(self):
        params = SketchParams(2, 8)
        ds = SketchDataset(params, np.zeros((0, 8), dtype=np.uint8))
        vs = to_vertical(ds)
        assert vs.n == 0
        assert len(vs.to_dataset()) == 0

    def test_matches_naive_on_random_grid(self):
        rng = np.random.default_rng(2)
        for b in (1, 2, 4, 8):
            for L in (8, 16, 32, 64):
                params = SketchParams(b, L)
                data = rng.integers(0, params.alphabet, size=(40, L), dtype=np.uint8)
                vs = to_vertical(SketchDataset(params, data))
                rows = [vs.row(i) for i in range(40)]
                for _ in range(100):
                    i, j = rng.integers(0, 40, size=2)
                    assert hamming_vertical(rows[i], rows[j], params) == hamming_naive(
                        data[i], data[j]
                    )

    def test_word_count_validation(self):
        params = SketchParams(2, 3)
        with pytest.raises(ValueError):
            hamming_vertical((1,), (1, 2), params)


class TestBoundedKernel:
    def test_within_bound_returns_exact(self):
        params = SketchParams(2, 3)
        s = vertical_query(encode("abd"), params)
        q = vertical_query(encode("acd"), params)
        assert hamming_vertical_bounded(s, q, params, 1) == 1

    def test_exceeded_returns_none(self):
        params = SketchParams(2, 5)
        s = vertical_query(encode("aaaaa"), params)
        q = vertical_query(encode("baabb"), params)
        assert hamming_vertical_bounded(s, q, params, 1) is None

    def test_limit_full_length_never_binds(self):
        rng = np.random.default_rng(3)
        params = SketchParams(4, 70)  # two words per plane
        data = rng.integers(0, 16, size=(20, 70), dtype=np.uint8)
        vs = to_vertical(SketchDataset(params, data))
        for i in range(20):
            for j in range(20):
                d = hamming_vertical_bounded(vs.row(i), vs.row(j), params, 70)
                assert d == hamming_naive(data[i], data[j])

    def test_never_understates(self):
        rng = np.random.default_rng(4)
        params = SketchParams(2, 33)
        data = rng.integers(0, 4, size=(15, 33), dtype=np.uint8)
        vs = to_vertical(SketchDataset(params, data))
        for _ in range(300):
            i, j = rng.integers(0, 15, size=2)
            limit = int(rng.integers(0, 34))
            true = hamming_naive(data[i], data[j])
            got = hamming_vertical_bounded(vs.row(i), vs.row(j), params, limit)
            if true <= limit:
                assert got == true
            else:
                assert got is None

    def test_negative_limit_rejected(self):
        params = SketchParams(1, 4)
        row = vertical_query([0, 1, 0, 1], params)
        with pytest.raises(ValueError):
            hamming_vertical_bounded(row, row, params, -1)
