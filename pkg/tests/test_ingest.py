"""Minhash sketching, synthetic generators, and the sketch file format."""

import math
import struct

import numpy as np
import pytest

from sketchtrie import (
    FormatError,
    MinhashParams,
    SketchDataset,
    SketchParams,
    SyntheticSpec,
    bbit_minhash,
    generate,
    hamming_naive,
    read_sketches,
    read_token_sets,
    sketch_token_sets,
    write_sketches,
)

from conftest import CORPUS, corpus_dataset, encode


class TestMinhash:
    def test_deterministic_and_set_based(self):
        p = MinhashParams(2, 32, seed=99)
        a = bbit_minhash([5, 9, 123456], p)
        b = bbit_minhash([123456, 5, 9, 9], p)
        assert a == b
        assert len(a) == 32
        assert max(a) < 4

    def test_seed_changes_sketch(self):
        tokens = list(range(50))
        assert bbit_minhash(tokens, MinhashParams(2, 32, seed=1)) != bbit_minhash(
            tokens, MinhashParams(2, 32, seed=2)
        )

    def test_empty_set_rejected(self):
        with pytest.raises(ValueError):
            bbit_minhash([], MinhashParams(2, 8))

    def test_param_validation(self):
        with pytest.raises(ValueError):
            MinhashParams(9, 8)
        with pytest.raises(ValueError):
            MinhashParams(2, 0)

    def test_disjoint_sets_match_rate(self):
        # disjoint sets collide per position with probability 1/2**b;
        # matches ~ Binomial(L, 0.25), checked within 3 sigma
        p = MinhashParams(2, 64, seed=42)
        rng = np.random.default_rng(0)
        a = bbit_minhash(rng.integers(0, 2**63, size=200).tolist(), p)
        b = bbit_minhash([int(t) | (1 << 63) for t in rng.integers(0, 2**63, size=200)], p)
        matches = 64 - hamming_naive(a, b)
        mean = 64 * 0.25
        sigma = math.sqrt(64 * 0.25 * 0.75)
        assert abs(matches - mean) <= 3 * sigma

    def test_jaccard_half_match_rate(self):
        # J = 0.5 gives per-position match probability J + (1-J)/2**b
        p = MinhashParams(2, 64, seed=7)
        universe = list(range(1000, 1200))
        a = bbit_minhash(universe[:150], p)
        b = bbit_minhash(universe[50:200], p)  # overlap 100 of union 200
        matches = 64 - hamming_naive(a, b)
        rate = 0.5 + 0.5 / 4
        mean = 64 * rate
        sigma = math.sqrt(64 * rate * (1 - rate))
        assert abs(matches - mean) <= 3 * sigma

    def test_token_set_batch(self):
        ds = sketch_token_sets([[1, 2], [1, 2], [3]], MinhashParams(2, 16, seed=3))
        assert len(ds) == 3
        assert ds.row_bytes(0) == ds.row_bytes(1)


class TestGenerate:
    def test_uniform_empty(self):
        ds = generate(SyntheticSpec("uniform", 0, SketchParams(2, 8)))
        assert len(ds) == 0

    def test_uniform_deterministic(self):
        spec = SyntheticSpec("uniform", 100, SketchParams(2, 16), seed=5)
        assert generate(spec) == generate(spec)

    def test_uniform_symbol_frequencies(self):
        # chi-squared sanity over >= 1e6 symbols; threshold is the
        # Wilson-Hilferty estimate of the 1 - 1e-6 quantile
        for b in (1, 2, 4):
            params = SketchParams(b, 16)
            ds = generate(SyntheticSpec("uniform", 65536, params, seed=b))
            counts = np.bincount(ds.data.reshape(-1), minlength=params.alphabet)
            total = counts.sum()
            expected = total / params.alphabet
            chi2 = float(((counts - expected) ** 2 / expected).sum())
            dof = params.alphabet - 1
            z = 4.75
            crit = dof * (1 - 2 / (9 * dof) + z * math.sqrt(2 / (9 * dof))) ** 3
            assert chi2 < crit, (b, chi2, crit)

    def test_planted_radius_zero_duplicates_centers(self):
        spec = SyntheticSpec("planted", 40, SketchParams(2, 8), seed=1, clusters=4, radius=0)
        ds = generate(spec)
        centers = {ds.row_bytes(r) for r in range(4)}
        for r in range(len(ds)):
            assert ds.row_bytes(r) in centers

    def test_planted_members_within_radius(self):
        spec = SyntheticSpec("planted", 200, SketchParams(2, 16), seed=2, clusters=8, radius=2)
        ds = generate(spec)
        centers = ds.data[:8]
        for r in range(8, len(ds)):
            best = min(hamming_naive(ds.data[r], c) for c in centers)
            assert best <= 2

    def test_planted_validation(self):
        with pytest.raises(ValueError):
            SyntheticSpec("planted", 10, SketchParams(2, 8), clusters=0)
        with pytest.raises(ValueError):
            SyntheticSpec("planted", 10, SketchParams(2, 8), radius=9)
        with pytest.raises(ValueError):
            SyntheticSpec("gaussian", 10, SketchParams(2, 8))


class TestSketchFiles:
    def test_round_trip(self, tmp_path):
        ds = generate(SyntheticSpec("uniform", 200, SketchParams(3, 12), seed=9))
        path = tmp_path / "data.bsk"
        write_sketches(ds, path)
        assert read_sketches(path) == ds

    def test_corpus_hand_encoded(self, tmp_path):
        # header: magic, b=2, L=5, n=11, then the eleven rows
        body = b"".join(encode(s) for s in CORPUS)
        blob = b"BSK1" + struct.pack("<BHQ", 2, 5, 11) + body
        path = tmp_path / "fig.bsk"
        path.write_bytes(blob)
        ds = read_sketches(path)
        assert (ds.params.b, ds.params.L, len(ds)) == (2, 5, 11)
        assert ds == corpus_dataset()

    def test_symbol_out_of_range_reports_offset(self, tmp_path):
        rows = bytearray(b"\x00\x01\x02\x03" * 3)
        rows[7] = 4  # symbol 4 under b=2
        blob = b"BSK1" + struct.pack("<BHQ", 2, 4, 3) + bytes(rows)
        path = tmp_path / "bad.bsk"
        path.write_bytes(blob)
        with pytest.raises(FormatError) as err:
            read_sketches(path)
        assert err.value.offset == 15 + 7

    def test_truncated_file_reports_offset(self, tmp_path):
        ds = generate(SyntheticSpec("uniform", 10, SketchParams(2, 8), seed=0))
        path = tmp_path / "trunc.bsk"
        write_sketches(ds, path)
        blob = path.read_bytes()[:-5]
        path.write_bytes(blob)
        with pytest.raises(FormatError) as err:
            read_sketches(path)
        assert err.value.offset == len(blob)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "junk.bsk"
        path.write_bytes(b"NOPE" + bytes(20))
        with pytest.raises(FormatError) as err:
            read_sketches(path)
        assert err.value.offset == 0

    def test_trailing_bytes_rejected(self, tmp_path):
        ds = generate(SyntheticSpec("uniform", 4, SketchParams(2, 4), seed=0))
        path = tmp_path / "extra.bsk"
        write_sketches(ds, path)
        path.write_bytes(path.read_bytes() + b"\x00")
        with pytest.raises(FormatError):
            read_sketches(path)

    def test_empty_dataset_round_trip(self, tmp_path):
        ds = SketchDataset(SketchParams(2, 6), np.zeros((0, 6), dtype=np.uint8))
        path = tmp_path / "empty.bsk"
        write_sketches(ds, path)
        assert len(read_sketches(path)) == 0


class TestTokenSets:
    def test_parse_hex_lines(self, tmp_path):
        path = tmp_path / "tokens.txt"
        path.write_text("a1 b2 3\n\nff\n")
        assert read_token_sets(path) == [[0xA1, 0xB2, 3], [0xFF]]

    def test_bad_token_raises(self, tmp_path):
        path = tmp_path / "tokens.txt"
        path.write_text("12 zz\n")
        with pytest.raises(FormatError):
            read_token_sets(path)
