"""Index persistence: the "BST1" section-tagged binary container.

Layout (all integers little-endian):

    header   magic "BST1" | variant u8 | b u8 | L u16 | n u64
    then     sections until EOF, each: tag (4 ASCII bytes) | length u64 | payload

Variants: 0 scan, 1 si-bst, 2 mi-bst, 3 sih, 4 mih.  Bit vectors embed
as a u64 bit count followed by ceil(N/64) little-endian 64-bit words;
symbol arrays are bit-packed to b bits per symbol.  Rank/select
directories, vertical mirrors, and hash tables are rebuilt on load.

Section tags:

    META  JSON estimator configuration
    DATA  bit-packed dataset symbols (variants that verify or rehash)
    PLAN  JSON layer plan (dense/sparse levels, lambda, counts, encodings)
    TLVL  u16 level | bit vector            (one per TABLE level)
    LLVL  u16 level | u64 nodes | packed labels | bit vector (per LIST level)
    SPRS  u16 suffix_len | u64 leaves | packed paths | bit vector
    IDMP  u64 leaves | u64 n | offsets u64[leaves+1] | ids u64[n]
    BTRI  u16 block | nested trie sections  (one per mi-bst block)
"""

import io
import json
import struct

import numpy as np

from .base import FormatError
from .bitvec import RankSelectBitVector
from .indexes import (
    LinearScanIndex,
    MultiIndexHashing,
    MultiIndexSketchTrie,
    SingleIndexHashing,
    SketchTrieIndex,
)
from .sketches import SketchDataset, SketchParams, partition, to_vertical, _pack_planes
from .trie import BbitSketchTrie, LayerPlan, LeafIdMap, ListLevel, SparseLayer, TableLevel

INDEX_MAGIC = b"BST1"
_HEADER = struct.Struct("<4sBBHQ")

VARIANT_CODES = {"scan": 0, "si-bst": 1, "mi-bst": 2, "sih": 3, "mih": 4}
_CODE_NAMES = {v: k for k, v in VARIANT_CODES.items()}


def pack_symbols(values, b):
    """Bit-pack symbols to b bits each, little-endian bit order."""
    arr = np.asarray(values, dtype=np.uint8).reshape(-1, 1)
    if arr.size == 0:
        return b""
    bits = np.unpackbits(arr, axis=1, bitorder="little", count=b)
    return np.packbits(bits.reshape(-1), bitorder="little").tobytes()


def unpack_symbols(data, count, b):
    """Inverse of ``pack_symbols`` for ``count`` symbols."""
    if count == 0:
        return np.zeros(0, dtype=np.uint8)
    bits = np.unpackbits(np.frombuffer(data, dtype=np.uint8), bitorder="little")
    if bits.size < count * b:
        raise FormatError("packed symbol section too short")
    bits = bits[: count * b].reshape(count, b)
    weights = (1 << np.arange(b, dtype=np.uint16)).astype(np.uint16)
    return (bits.astype(np.uint16) @ weights).astype(np.uint8)


def _pack_bitvec(bv):
    return struct.pack("<Q", len(bv)) + bv.to_packed_bytes()


def _unpack_bitvec(buf, pos):
    (nbits,) = struct.unpack_from("<Q", buf, pos)
    pos += 8
    nbytes = ((nbits + 63) >> 6) * 8
    bv = RankSelectBitVector.from_packed_bytes(buf[pos : pos + nbytes], nbits)
    return bv, pos + nbytes


def _write_section(out, tag, payload):
    out.write(tag)
    out.write(struct.pack("<Q", len(payload)))
    out.write(payload)


def _json_section(buf, start, stop):
    try:
        return json.loads(buf[start:stop].decode("ascii"))
    except (ValueError, UnicodeDecodeError):
        raise FormatError("malformed JSON section", offset=start) from None


def _iter_sections(buf, pos, end):
    while pos < end:
        if pos + 12 > end:
            raise FormatError("truncated section header", offset=pos)
        tag = buf[pos : pos + 4]
        (length,) = struct.unpack_from("<Q", buf, pos + 4)
        body_start = pos + 12
        if body_start + length > end:
            raise FormatError(f"truncated section {tag!r}", offset=pos)
        yield tag, body_start, body_start + length
        pos = body_start + length


# ---------------------------------------------------------------------------
# trie blobs


def _trie_sections(trie):
    out = io.BytesIO()
    plan = trie.plan
    meta = {
        "dense_level": plan.dense_level,
        "sparse_level": plan.sparse_level,
        "lam": plan.lam,
        "level_counts": list(plan.level_counts),
        "encodings": list(plan.encodings),
    }
    _write_section(out, b"PLAN", json.dumps(meta).encode("ascii"))
    for lvl in sorted(trie.mid_levels):
        enc = trie.mid_levels[lvl]
        if isinstance(enc, TableLevel):
            _write_section(out, b"TLVL", struct.pack("<H", lvl) + _pack_bitvec(enc.table))
        else:
            payload = struct.pack("<HQ", lvl, len(enc.labels))
            payload += pack_symbols(np.frombuffer(enc.labels, dtype=np.uint8), trie.params.b)
            payload += _pack_bitvec(enc.first_sibling)
            _write_section(out, b"LLVL", payload)
    sparse = trie.sparse
    leaves = trie.num_leaves
    payload = struct.pack("<HQ", sparse.suffix_len, leaves)
    payload += pack_symbols(np.frombuffer(sparse.paths, dtype=np.uint8), trie.params.b)
    payload += _pack_bitvec(sparse.leftmost)
    _write_section(out, b"SPRS", payload)
    idmap = trie.leaf_ids
    payload = struct.pack("<QQ", leaves, len(idmap.ids))
    payload += idmap.offsets.tobytes() + idmap.ids.tobytes()
    _write_section(out, b"IDMP", payload)
    return out.getvalue()


def _trie_from_sections(params, buf, pos, end):
    from array import array

    plan = None
    mid = {}
    sparse = None
    idmap = None
    b = params.b
    for tag, start, stop in _iter_sections(buf, pos, end):
        if tag == b"PLAN":
            meta = _json_section(buf, start, stop)
            plan = LayerPlan(
                meta["dense_level"],
                meta["sparse_level"],
                tuple(meta["encodings"]),
                meta["lam"],
                tuple(meta["level_counts"]),
            )
        elif tag == b"TLVL":
            (lvl,) = struct.unpack_from("<H", buf, start)
            bv, _ = _unpack_bitvec(buf, start + 2)
            mid[lvl] = TableLevel(lvl, bv)
        elif tag == b"LLVL":
            lvl, count = struct.unpack_from("<HQ", buf, start)
            p = start + 10
            nbytes = (count * b + 7) // 8
            labels = unpack_symbols(buf[p : p + nbytes], count, b).tobytes()
            bv, _ = _unpack_bitvec(buf, p + nbytes)
            mid[lvl] = ListLevel(lvl, labels, bv)
        elif tag == b"SPRS":
            suffix_len, leaves = struct.unpack_from("<HQ", buf, start)
            p = start + 10
            nsyms = suffix_len * leaves
            nbytes = (nsyms * b + 7) // 8
            paths = unpack_symbols(buf[p : p + nbytes], nsyms, b)
            bv, _ = _unpack_bitvec(buf, p + nbytes)
            planes, wps = _pack_planes(paths.reshape(leaves, suffix_len), b)
            sparse = SparseLayer(suffix_len, paths.tobytes(), bv, planes, wps)
        elif tag == b"IDMP":
            leaves, n = struct.unpack_from("<QQ", buf, start)
            p = start + 16
            offsets = array("Q")
            offsets.frombytes(buf[p : p + 8 * (leaves + 1)])
            ids = array("Q")
            ids.frombytes(buf[p + 8 * (leaves + 1) : p + 8 * (leaves + 1) + 8 * n])
            idmap = LeafIdMap(offsets, ids)
        else:
            raise FormatError(f"unknown trie section {tag!r}", offset=start - 12)
    if plan is None or sparse is None or idmap is None:
        raise FormatError("incomplete trie container")
    return BbitSketchTrie(params, plan, mid, sparse, idmap)


# ---------------------------------------------------------------------------
# whole-index containers


def _variant_of(index):
    if isinstance(index, SketchTrieIndex):
        return "si-bst"
    if isinstance(index, MultiIndexSketchTrie):
        return "mi-bst"
    if isinstance(index, SingleIndexHashing):
        return "sih"
    if isinstance(index, MultiIndexHashing):
        return "mih"
    if isinstance(index, LinearScanIndex):
        return "scan"
    raise ValueError(f"cannot serialize {type(index).__name__}")


def _packed_dataset_section(index):
    ds = index.vertical_.to_dataset() if not hasattr(index, "dataset_") else index.dataset_
    return pack_symbols(ds.data.reshape(-1), ds.params.b)


def index_to_bytes(index):
    """Serialize a fitted index into BST1 container bytes."""
    variant = _variant_of(index)
    params = index.params_
    out = io.BytesIO()
    out.write(_HEADER.pack(INDEX_MAGIC, VARIANT_CODES[variant], params.b, params.L, index.n_))
    meta = {}
    if variant == "si-bst":
        meta = {"lam": index.lam, "dense_level": index.dense_level,
                "sparse_level": index.sparse_level}
    elif variant == "mi-bst":
        meta = {"m": index.m, "policy": index.policy, "lam": index.lam}
    elif variant == "sih":
        meta = {"probe_budget": index.probe_budget}
    elif variant == "mih":
        meta = {"m": index.m, "policy": index.policy, "block_probe": index.block_probe}
    _write_section(out, b"META", json.dumps(meta).encode("ascii"))
    if variant == "si-bst":
        _write_section(out, b"TRIE", _trie_sections(index.trie_))
    elif variant == "mi-bst":
        _write_section(out, b"DATA", _packed_dataset_section(index))
        for j, trie in enumerate(index.block_tries_):
            _write_section(out, b"BTRI", struct.pack("<H", j) + _trie_sections(trie))
    else:
        _write_section(out, b"DATA", _packed_dataset_section(index))
    return out.getvalue()


def save_index(index, path):
    with open(path, "wb") as f:
        f.write(index_to_bytes(index))


def index_from_bytes(blob):
    """Reconstruct a fitted index from BST1 container bytes."""
    if len(blob) < _HEADER.size:
        raise FormatError("truncated index header", offset=len(blob))
    magic, code, b, L, n = _HEADER.unpack_from(blob)
    if magic != INDEX_MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {INDEX_MAGIC!r}", offset=0)
    if code not in _CODE_NAMES:
        raise FormatError(f"unknown index variant code {code}", offset=4)
    variant = _CODE_NAMES[code]
    params = SketchParams(b, L)
    meta = {}
    dataset = None
    trie = None
    block_blobs = {}
    for tag, start, stop in _iter_sections(blob, _HEADER.size, len(blob)):
        if tag == b"META":
            meta = _json_section(blob, start, stop)
        elif tag == b"DATA":
            syms = unpack_symbols(blob[start:stop], n * L, b)
            dataset = SketchDataset(params, syms.reshape(n, L))
        elif tag == b"TRIE":
            trie = _trie_from_sections(params, blob, start, stop)
        elif tag == b"BTRI":
            (j,) = struct.unpack_from("<H", blob, start)
            block_blobs[j] = (start + 2, stop)
        else:
            raise FormatError(f"unknown section {tag!r}", offset=start - 12)
    if variant == "scan":
        if dataset is None:
            raise FormatError("scan container missing DATA section")
        return LinearScanIndex(b).fit(dataset)
    if variant == "sih":
        if dataset is None:
            raise FormatError("sih container missing DATA section")
        return SingleIndexHashing(b, probe_budget=meta.get("probe_budget")).fit(dataset)
    if variant == "mih":
        if dataset is None:
            raise FormatError("mih container missing DATA section")
        return MultiIndexHashing(
            b, m=meta["m"], policy=meta["policy"], block_probe=meta.get("block_probe", "auto")
        ).fit(dataset)
    if variant == "si-bst":
        if trie is None:
            raise FormatError("si-bst container missing TRIE section")
        index = SketchTrieIndex(
            b,
            lam=meta.get("lam", 0.5),
            dense_level=meta.get("dense_level"),
            sparse_level=meta.get("sparse_level"),
        )
        index.params_ = params
        index.trie_ = trie
        index.n_ = n
        return index
    # mi-bst
    if dataset is None or not block_blobs:
        raise FormatError("mi-bst container missing DATA or BTRI sections")
    index = MultiIndexSketchTrie(b, m=meta["m"], policy=meta["policy"], lam=meta.get("lam", 0.5))
    index.params_ = params
    index.partition_ = partition(params, meta["m"])
    index.vertical_ = to_vertical(dataset)
    index.n_ = n
    tries = []
    for j, (start, stop) in sorted(block_blobs.items()):
        length = index.partition_.lengths[j]
        tries.append(_trie_from_sections(SketchParams(b, length), blob, start, stop))
    index.block_tries_ = tries
    return index


def load_index(path):
    with open(path, "rb") as f:
        blob = f.read()
    try:
        return index_from_bytes(blob)
    except FormatError:
        raise
    except (ValueError, KeyError, struct.error) as exc:
        # a well-tagged but internally inconsistent container
        raise FormatError(f"corrupt index container: {exc}") from None
