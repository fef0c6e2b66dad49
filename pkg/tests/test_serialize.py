"""BST1 index containers: round trips, layout checks, error handling."""

import struct

import numpy as np
import pytest

from sketchtrie import (
    BbitSketchTrie,
    FormatError,
    LinearScanIndex,
    MultiIndexHashing,
    MultiIndexSketchTrie,
    SingleIndexHashing,
    SketchTrieIndex,
    index_from_bytes,
    index_to_bytes,
    load_index,
    save_index,
)
from sketchtrie.serialize import pack_symbols, unpack_symbols

from conftest import brute_force_ids, corpus_dataset, make_dataset


class TestSymbolPacking:
    @pytest.mark.parametrize("b", range(1, 9))
    def test_round_trip_every_width(self, b):
        rng = np.random.default_rng(b)
        values = rng.integers(0, 1 << b, size=999, dtype=np.uint8)
        packed = pack_symbols(values, b)
        assert len(packed) == (999 * b + 7) // 8
        assert np.array_equal(unpack_symbols(packed, 999, b), values)

    def test_empty(self):
        assert pack_symbols(np.zeros(0, dtype=np.uint8), 4) == b""
        assert unpack_symbols(b"", 0, 4).size == 0


class TestContainers:
    def _variants(self, ds):
        b = ds.params.b
        return [
            LinearScanIndex(b).fit(ds),
            SketchTrieIndex(b).fit(ds),
            SingleIndexHashing(b, probe_budget=1000).fit(ds),
            MultiIndexHashing(b, m=2, policy="uniform").fit(ds),
            MultiIndexSketchTrie(b, m=3, policy="refined").fit(ds),
        ]

    def test_round_trip_answers_all_variants(self, tmp_path):
        ds = make_dataset(2, 12, 300, kind="planted", seed=1)
        rng = np.random.default_rng(2)
        queries = [bytes(rng.integers(0, 4, size=12, dtype=np.uint8)) for _ in range(5)]
        for idx in self._variants(ds):
            path = tmp_path / f"{type(idx).__name__}.bst"
            save_index(idx, path)
            loaded = load_index(path)
            assert type(loaded) is type(idx)
            for q in queries:
                for tau in (0, 2, 4):
                    want = brute_force_ids(ds.data, q, tau)
                    assert loaded.query(q, tau) == want
                    assert idx.query(q, tau) == want

    def test_header_layout(self):
        ds = corpus_dataset()
        blob = index_to_bytes(SketchTrieIndex(2).fit(ds))
        magic, code, b, L, n = struct.unpack_from("<4sBBHQ", blob)
        assert magic == b"BST1"
        assert code == 1
        assert (b, L, n) == (2, 5, 11)

    def test_trie_container_preserves_structure(self):
        ds = make_dataset(4, 10, 400, seed=3)
        idx = SketchTrieIndex(4, lam=0.4).fit(ds)
        loaded = index_from_bytes(index_to_bytes(idx))
        assert loaded.trie_ == idx.trie_
        assert loaded.lam == 0.4

    def test_embedded_bitvector_words_are_little_endian(self):
        # the leftmost-leaf vector of a known trie appears verbatim:
        # u64 bit count, then packed words
        ds = corpus_dataset()
        trie = BbitSketchTrie.build(ds, dense_level=1, sparse_level=3)
        idx = SketchTrieIndex(2, dense_level=1, sparse_level=3).fit(ds)
        blob = index_to_bytes(idx)
        d_bits = 0b110110111  # leaf flags 111011011 read LSB-first
        needle = struct.pack("<QQ", 9, d_bits)
        assert needle in blob
        assert trie.sparse.leftmost.to_packed_bytes() == struct.pack("<Q", d_bits)

    def test_layer_overrides_survive(self):
        ds = corpus_dataset()
        idx = SketchTrieIndex(2, dense_level=0, sparse_level=5).fit(ds)
        loaded = index_from_bytes(index_to_bytes(idx))
        assert loaded.trie_.plan.dense_level == 0
        assert loaded.trie_.plan.sparse_level == 5

    def test_si_bst_smaller_than_raw_hash_containers(self):
        ds = make_dataset(4, 32, 20000, seed=5)
        trie_bytes = len(index_to_bytes(SketchTrieIndex(4).fit(ds)))
        sih_bytes = len(index_to_bytes(SingleIndexHashing(4).fit(ds)))
        assert trie_bytes < 2 * sih_bytes  # same order; trie adds id map + paths

    def test_bad_magic(self):
        with pytest.raises(FormatError) as err:
            index_from_bytes(b"XXXX" + bytes(20))
        assert err.value.offset == 0

    def test_truncated_section(self):
        ds = corpus_dataset()
        blob = index_to_bytes(LinearScanIndex(2).fit(ds))
        with pytest.raises(FormatError):
            index_from_bytes(blob[:-3])

    def test_unknown_variant_code(self):
        blob = bytearray(index_to_bytes(LinearScanIndex(2).fit(corpus_dataset())))
        blob[4] = 99
        with pytest.raises(FormatError):
            index_from_bytes(bytes(blob))

    def test_missing_file(self, tmp_path):
        with pytest.raises(OSError):
            load_index(tmp_path / "absent.bst")
