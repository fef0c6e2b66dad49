"""Dataset production: b-bit minhash, synthetic generators, and file I/O.

Sketch files use the "BSK1" format: magic ``BSK1``, ``b`` (u8), ``L``
(u16 LE), ``n`` (u64 LE), then ``n * L`` symbol bytes.  Any symbol not
below ``2**b`` is a format error reported with its byte offset.
"""

import struct
from dataclasses import dataclass

import numpy as np

from .base import FormatError
from .sketches import SketchDataset, SketchParams

SKETCH_MAGIC = b"BSK1"
_HEADER = struct.Struct("<4sBHQ")

_M64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def _mix64(x):
    """64-bit avalanche (splitmix64 finalizer)."""
    x = (x + _GOLDEN) & _M64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _M64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _M64
    return x ^ (x >> 31)


@dataclass(frozen=True)
class MinhashParams:
    """b bits kept per hash, L independent hash functions, 64-bit seed."""

    b: int
    L: int
    seed: int = 0

    def __post_init__(self):
        if not 1 <= self.b <= 8:
            raise ValueError(f"b must be in [1, 8], got {self.b}")
        if self.L < 1:
            raise ValueError("L must be >= 1")


def bbit_minhash(tokens, p):
    """Sketch a token set: per hash function, the low b bits of the minimum.

    Deterministic given ``p.seed``; equal sets produce equal sketches.
    """
    toks = [int(t) & _M64 for t in tokens]
    if not toks:
        raise ValueError("token set must be non-empty")
    mask = (1 << p.b) - 1
    seed = p.seed & _M64
    out = bytearray(p.L)
    for j in range(p.L):
        salt = _mix64(seed ^ ((j + 1) * _GOLDEN & _M64))
        best = min(_mix64(t ^ salt) for t in toks)
        out[j] = best & mask
    return bytes(out)


def sketch_token_sets(token_sets, p):
    """Minhash many token sets into one dataset."""
    rows = np.zeros((len(token_sets), p.L), dtype=np.uint8)
    for i, toks in enumerate(token_sets):
        rows[i] = np.frombuffer(bbit_minhash(toks, p), dtype=np.uint8)
    return SketchDataset(SketchParams(p.b, p.L), rows)


@dataclass(frozen=True)
class SyntheticSpec:
    """Synthetic dataset description.

    ``uniform`` draws each symbol i.i.d. uniform; ``planted`` emits
    ``clusters`` random centers followed by copies mutated in at most
    ``radius`` positions, guaranteeing known near-neighbors.
    """

    kind: str
    n: int
    params: SketchParams
    seed: int = 0
    clusters: int = 1
    radius: int = 0

    def __post_init__(self):
        if self.kind not in ("uniform", "planted"):
            raise ValueError(f"unknown synthetic kind {self.kind!r}")
        if self.n < 0:
            raise ValueError("n must be >= 0")
        if self.kind == "planted":
            if self.clusters < 1:
                raise ValueError("planted data needs at least one cluster")
            if not 0 <= self.radius <= self.params.L:
                raise ValueError(f"radius {self.radius} out of range [0, {self.params.L}]")


def generate(spec):
    """Materialize a synthetic dataset, deterministically per seed."""
    params = spec.params
    rng = np.random.default_rng(spec.seed)
    alpha = params.alphabet
    if spec.kind == "uniform":
        data = rng.integers(0, alpha, size=(spec.n, params.L), dtype=np.uint8)
        return SketchDataset(params, data)
    centers = rng.integers(0, alpha, size=(spec.clusters, params.L), dtype=np.uint8)
    data = np.empty((spec.n, params.L), dtype=np.uint8)
    head = min(spec.n, spec.clusters)
    data[:head] = centers[:head]
    for i in range(spec.clusters, spec.n):
        row = centers[(i - spec.clusters) % spec.clusters].copy()
        flips = int(rng.integers(0, spec.radius + 1))
        if flips:
            positions = rng.choice(params.L, size=flips, replace=False)
            # adding a nonzero offset mod alpha always changes the symbol
            offsets = rng.integers(1, alpha, size=flips) if alpha > 1 else np.ones(flips)
            row[positions] = (row[positions] + offsets) % alpha
        data[i] = row
    return SketchDataset(params, data)


def write_sketches(ds, path):
    """Write a dataset in BSK1 format."""
    with open(path, "wb") as f:
        f.write(_HEADER.pack(SKETCH_MAGIC, ds.params.b, ds.params.L, len(ds)))
        f.write(ds.data.tobytes())


def read_sketches(path):
    """Read a BSK1 file; format violations raise ``FormatError`` with offset."""
    with open(path, "rb") as f:
        blob = f.read()
    if len(blob) < _HEADER.size:
        raise FormatError("truncated sketch file header", offset=len(blob))
    magic, b, L, n = _HEADER.unpack_from(blob)
    if magic != SKETCH_MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {SKETCH_MAGIC!r}", offset=0)
    if not 1 <= b <= 8:
        raise FormatError(f"b={b} out of range [1, 8]", offset=4)
    if not 1 <= L <= 256:
        raise FormatError(f"L={L} out of range [1, 256]", offset=5)
    expected = _HEADER.size + n * L
    if len(blob) < expected:
        raise FormatError(
            f"truncated sketch data: have {len(blob)} bytes, need {expected}",
            offset=len(blob),
        )
    if len(blob) > expected:
        raise FormatError("trailing bytes after sketch data", offset=expected)
    params = SketchParams(b, L)
    data = np.frombuffer(blob, dtype=np.uint8, offset=_HEADER.size).reshape(n, L)
    if n and int(data.max()) >= params.alphabet:
        bad = int(np.argmax(data.reshape(-1) >= params.alphabet))
        raise FormatError(
            f"symbol {int(data.reshape(-1)[bad])} out of range for b={b}",
            offset=_HEADER.size + bad,
        )
    return SketchDataset(params, data.copy())


def read_token_sets(path):
    """Parse newline-delimited token sets (whitespace-separated 64-bit hex)."""
    sets = []
    with open(path, "r", encoding="ascii") as f:
        for lineno, line in enumerate(f, start=1):
            parts = line.split()
            if not parts:
                continue
            try:
                sets.append([int(tok, 16) for tok in parts])
            except ValueError as exc:
                raise FormatError(f"line {lineno}: {exc}") from None
    return sets
