"""Sketch datasets, vertical bit-plane mirrors, and Hamming kernels.

A sketch is a length-L string over the alphabet ``[0, 2**b)`` with one
byte per symbol in the horizontal store.  The vertical store transposes
the b significance bits of every symbol into per-plane machine words so
that one XOR/OR/popcount pass over ``b * ceil(L/64)`` words computes a
Hamming distance.  Plane 1 holds the most significant bit, matching the
binary reading of symbols (``a=00, b=01, c=10, d=11`` for ``b=2``).
"""

from array import array
from dataclasses import dataclass

import numpy as np

_WORD = 64


@dataclass(frozen=True)
class SketchParams:
    """Alphabet width ``b`` (bits per symbol) and sketch length ``L``."""

    b: int
    L: int

    def __post_init__(self):
        if not 1 <= self.b <= 8:
            raise ValueError(f"b must be in [1, 8], got {self.b}")
        if not 1 <= self.L <= 256:
            raise ValueError(f"L must be in [1, 256], got {self.L}")

    @property
    def alphabet(self):
        return 1 << self.b

    @property
    def words_per_row(self):
        return (self.L + _WORD - 1) // _WORD


def _as_symbol_matrix(rows, params, n=None):
    arr = np.asarray(rows, dtype=np.uint8)
    if arr.ndim == 1 and arr.size == 0:
        arr = arr.reshape(0, params.L)
    if arr.ndim != 2 or (arr.shape[0] and arr.shape[1] != params.L):
        raise ValueError(f"expected an n x {params.L} symbol matrix, got shape {arr.shape}")
    if arr.shape[0] and int(arr.max()) >= params.alphabet:
        raise ValueError(f"symbol {int(arr.max())} out of range for b={params.b}")
    if n is not None and arr.shape[0] != n:
        raise ValueError(f"expected {n} rows, got {arr.shape[0]}")
    return np.ascontiguousarray(arr.reshape(arr.shape[0], params.L))


class SketchDataset:
    """n sketches stored row-major, one byte per symbol.

    Sketch ids are 1-based: id ``k`` is row ``k - 1`` of ``data``.
    """

    __slots__ = ("params", "data")

    def __init__(self, params, rows):
        self.params = params
        self.data = _as_symbol_matrix(rows, params)
        self.data.setflags(write=False)

    @property
    def n(self):
        return self.data.shape[0]

    def __len__(self):
        return self.data.shape[0]

    def row_bytes(self, r):
        """Row ``r`` (0-based) as bytes."""
        return self.data[r].tobytes()

    def __eq__(self, other):
        if not isinstance(other, SketchDataset):
            return NotImplemented
        return self.params == other.params and np.array_equal(self.data, other.data)


def as_dataset(X, b):
    """Coerce an array-like (or pass through a dataset) for alphabet ``b``."""
    if isinstance(X, SketchDataset):
        if X.params.b != b:
            raise ValueError(f"dataset has b={X.params.b}, index expects b={b}")
        return X
    arr = np.asarray(X)
    if arr.ndim != 2:
        raise ValueError("expected a 2-D array of symbols")
    return SketchDataset(SketchParams(b, arr.shape[1]), arr)


def as_query_row(q, params):
    """Validate a query sketch and return it as bytes."""
    if isinstance(q, (bytes, bytearray)):
        row = bytes(q)
    else:
        row = bytes(bytearray(int(s) for s in q))
    if len(row) != params.L:
        raise ValueError(f"query length {len(row)} != L={params.L}")
    if row and max(row) >= params.alphabet:
        raise ValueError(f"query symbol {max(row)} out of range for b={params.b}")
    return row


def _pack_planes(matrix, b):
    """Pack an (n, L) uint8 matrix into b bit-plane word arrays.

    Returns ``(planes, words_per_row)`` where ``planes[p]`` is an
    ``array('Q')`` of ``n * words_per_row`` words and plane ``p`` holds
    significance bit ``b - 1 - p`` of every symbol (plane 0 = MSB).
    Position ``j`` of a row maps to bit ``j`` of its word group.
    """
    n, L = matrix.shape
    wpr = (L + _WORD - 1) // _WORD if L else 0
    planes = []
    for p in range(b):
        shift = b - 1 - p
        plane = array("Q")
        if n and wpr:
            bits = (matrix >> shift) & 1
            packed = np.packbits(bits, axis=1, bitorder="little")
            padded = np.zeros((n, wpr * 8), dtype=np.uint8)
            padded[:, : packed.shape[1]] = packed
            plane.frombytes(padded.tobytes())
        planes.append(plane)
    return planes, wpr


class VerticalSketchSet:
    """Bit-plane transposed mirror of a dataset for word-parallel kernels."""

    __slots__ = ("params", "n", "words_per_row", "planes")

    def __init__(self, params, n, words_per_row, planes):
        self.params = params
        self.n = n
        self.words_per_row = words_per_row
        self.planes = planes

    @classmethod
    def from_dataset(cls, ds):
        planes, wpr = _pack_planes(ds.data, ds.params.b)
        return cls(ds.params, len(ds), wpr, planes)

    def __len__(self):
        return self.n

    def row(self, r):
        """Vertical row ``r`` (0-based) as a plane-major word tuple."""
        if not 0 <= r < self.n:
            raise ValueError(f"row {r} out of range")
        wpr = self.words_per_row
        base = r * wpr
        out = []
        for plane in self.planes:
            out.extend(plane[base : base + wpr])
        return tuple(out)

    def to_dataset(self):
        """Re-horizontalize; exact inverse of ``from_dataset``."""
        params = self.params
        n, L, wpr = self.n, params.L, self.words_per_row
        out = np.zeros((n, L), dtype=np.uint8)
        for p, plane in enumerate(self.planes):
            if not n:
                continue
            words = np.frombuffer(plane.tobytes(), dtype="<u8").reshape(n, wpr)
            bits = np.unpackbits(words.view(np.uint8).reshape(n, -1), axis=1, bitorder="little")
            out |= (bits[:, :L] << (params.b - 1 - p)).astype(np.uint8)
        return SketchDataset(params, out)


def to_vertical(ds):
    """Vertical-format mirror of a dataset."""
    return VerticalSketchSet.from_dataset(ds)


def vertical_query(q, params):
    """Encode one sketch into plane-major words (plane 0 = MSB)."""
    row = as_query_row(q, params)
    b = params.b
    wpr = params.words_per_row
    words = [0] * (b * wpr)
    for j, sym in enumerate(row):
        w, bit = divmod(j, _WORD)
        for p in range(b):
            if (sym >> (b - 1 - p)) & 1:
                words[p * wpr + w] |= 1 << bit
    return tuple(words)


def hamming_naive(s, q):
    """Position-by-position Hamming distance of two equal-length rows."""
    if len(s) != len(q):
        raise ValueError(f"length mismatch: {len(s)} vs {len(q)}")
    d = 0
    for a, c in zip(s, q):
        if a != c:
            d += 1
    return d


def _check_vertical_pair(sv, qv, params):
    want = params.b * params.words_per_row
    if len(sv) != want or len(qv) != want:
        raise ValueError(
            f"vertical rows must have {want} words for b={params.b}, L={params.L}"
        )


def hamming_vertical(sv, qv, params):
    """Hamming distance from plane-major word tuples (XOR/OR/popcount)."""
    _check_vertical_pair(sv, qv, params)
    b = params.b
    wpr = params.words_per_row
    d = 0
    for w in range(wpr):
        acc = 0
        for p in range(b):
            i = p * wpr + w
            acc |= sv[i] ^ qv[i]
        d += acc.bit_count()
    return d


def hamming_vertical_bounded(sv, qv, params, limit):
    """Exact distance when it is <= ``limit``, else ``None``.

    Never understates: a ``None`` result guarantees distance > limit.
    """
    if limit < 0:
        raise ValueError("limit must be >= 0")
    _check_vertical_pair(sv, qv, params)
    b = params.b
    wpr = params.words_per_row
    d = 0
    for w in range(wpr):
        acc = 0
        for p in range(b):
            i = p * wpr + w
            acc |= sv[i] ^ qv[i]
        d += acc.bit_count()
        if d > limit:
            return None
    return d


@dataclass(frozen=True)
class BlockPartition:
    """m contiguous, disjoint symbol ranges covering positions 1..L."""

    lengths: tuple

    @property
    def m(self):
        return len(self.lengths)

    @property
    def spans(self):
        """0-based half-open (start, stop) column spans, in order."""
        out = []
        start = 0
        for length in self.lengths:
            out.append((start, start + length))
            start += length
        return tuple(out)


def partition(params, m, policy="equal"):
    """Split positions 1..L into m blocks of near-equal length.

    The first ``L mod m`` blocks take the extra position.
    """
    if policy != "equal":
        raise ValueError(f"unknown partition policy {policy!r}")
    L = params.L
    if not 1 <= m <= L:
        raise ValueError(f"block count {m} out of range [1, {L}]")
    base, extra = divmod(L, m)
    lengths = tuple(base + 1 if j < extra else base for j in range(m))
    return BlockPartition(lengths)
