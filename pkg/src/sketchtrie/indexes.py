"""Hamming-range query front-ends sharing one contract.

Every index is an estimator: construct with hyperparameters, ``fit(X)``
on an (n, L) symbol matrix or ``SketchDataset``, then ``query(q, tau)``
for the ascending list of 1-based ids within distance ``tau``.  All five
variants return identical answers; they differ only in work performed:

* ``LinearScanIndex``  - scans every row with the bounded vertical kernel;
* ``SingleIndexHashing`` - probes every signature against one hash table;
* ``MultiIndexHashing``  - per-block signature probes + full verification;
* ``SketchTrieIndex``    - pruned traversal of one succinct trie;
* ``MultiIndexSketchTrie`` - per-block tries + full verification.
"""

import itertools
from array import array
from dataclasses import dataclass

import numpy as np

from .base import ParamsMixin
from .cost import signature_count
from .sketches import (
    SketchParams,
    as_dataset,
    as_query_row,
    partition,
    to_vertical,
    vertical_query,
)
from .trie import BbitSketchTrie, SearchScratch


@dataclass(frozen=True)
class HammingQuery:
    """A query sketch plus its distance threshold."""

    q: bytes
    tau: int

    def validate(self, params):
        as_query_row(self.q, params)
        if not 0 <= self.tau <= params.L:
            raise ValueError(f"threshold {self.tau} out of range [0, {params.L}]")


def enumerate_signatures(q, tau, params):
    """Yield every sketch within distance ``tau`` of ``q``, each exactly once.

    The count equals ``signature_count(b, L, tau)``: for each k <= tau,
    choose k positions and a non-matching replacement symbol per position.
    """
    qb = as_query_row(q, params)
    L = params.L
    alpha = params.alphabet
    if not 0 <= tau <= L:
        raise ValueError(f"threshold {tau} out of range [0, {L}]")
    yield qb
    buf = bytearray(qb)
    for k in range(1, tau + 1):
        for positions in itertools.combinations(range(L), k):
            for repl in itertools.product(range(alpha - 1), repeat=k):
                for pos, c in zip(positions, repl):
                    buf[pos] = c if c < qb[pos] else c + 1
                yield bytes(buf)
            for pos in positions:
                buf[pos] = qb[pos]


@dataclass(frozen=True)
class ThresholdAssignment:
    """Per-block distance bounds; blocks with threshold -1 are skipped."""

    thresholds: tuple
    policy: str

    @property
    def active_blocks(self):
        return tuple(j for j, t in enumerate(self.thresholds) if t >= 0)


def assign_thresholds(tau, m, policy="refined"):
    """Block thresholds guaranteeing no false negatives.

    uniform: every block gets ``tau // m``.
    refined: with ``a = tau // m`` and ``z = tau - m*a``, the first ``z + 1``
    blocks get ``a`` and the rest ``a - 1``.  Any distance split summing to
    at most ``tau`` then lands under some block's bound: exceeding all of
    them would need at least ``(z+1)*(a+1) + (m-z-1)*a = tau + 1``.
    """
    if m < 1:
        raise ValueError("block count must be >= 1")
    if tau < 0:
        raise ValueError("threshold must be >= 0")
    if policy == "uniform":
        thresholds = (tau // m,) * m
    elif policy == "refined":
        a, z = divmod(tau, m)
        thresholds = (a,) * (z + 1) + (a - 1,) * (m - z - 1)
    else:
        raise ValueError(f"unknown threshold policy {policy!r}")
    return ThresholdAssignment(thresholds, policy)


# ---------------------------------------------------------------------------
# kernels shared by the estimators


def linear_scan(store, q, tau):
    """Ground-truth Hamming-range answer by scanning all rows.

    ``store`` is a ``VerticalSketchSet`` (or a ``SketchDataset``, converted
    on the fly).  Each row goes through the bounded vertical kernel.
    """
    from .sketches import SketchDataset, VerticalSketchSet

    if isinstance(store, SketchDataset):
        store = to_vertical(store)
    elif not isinstance(store, VerticalSketchSet):
        raise ValueError("store must be a SketchDataset or VerticalSketchSet")
    params = store.params
    qb = as_query_row(q, params)
    if not 0 <= tau <= params.L:
        raise ValueError(f"threshold {tau} out of range [0, {params.L}]")
    qv = vertical_query(qb, params)
    out = []
    planes = store.planes
    wpr = store.words_per_row
    b = params.b
    if wpr == 1:
        pairs = [(planes[p], qv[p]) for p in range(b)]
        for r in range(store.n):
            acc = 0
            for arr, qw in pairs:
                acc |= arr[r] ^ qw
            if acc.bit_count() <= tau:
                out.append(r + 1)
    else:
        for r in range(store.n):
            base = r * wpr
            rem = tau
            for w in range(wpr):
                acc = 0
                for p in range(b):
                    acc |= planes[p][base + w] ^ qv[p * wpr + w]
                rem -= acc.bit_count()
                if rem < 0:
                    break
            if rem >= 0:
                out.append(r + 1)
    return out


def _verify_ids(candidates, vertical, qv, tau, out):
    """Append candidate ids whose full-length distance is within ``tau``."""
    planes = vertical.planes
    wpr = vertical.words_per_row
    b = vertical.params.b
    if wpr == 1:
        pairs = [(planes[p], qv[p]) for p in range(b)]
        for i in candidates:
            r = i - 1
            acc = 0
            for arr, qw in pairs:
                acc |= arr[r] ^ qw
            if acc.bit_count() <= tau:
                out.append(i)
    else:
        for i in candidates:
            base = (i - 1) * wpr
            rem = tau
            for w in range(wpr):
                acc = 0
                for p in range(b):
                    acc |= planes[p][base + w] ^ qv[p * wpr + w]
                rem -= acc.bit_count()
                if rem < 0:
                    break
            if rem >= 0:
                out.append(i)


class MultiIndexScratch:
    """Per-query workspace for multi-index queries.

    ``seen`` is a generation-stamped array over ids, so deduplication needs
    no clearing between queries.  ``block_candidates`` records |C^j| per
    block of the last query; skipped blocks record 0.
    """

    def __init__(self, n, m):
        self.seen = array("Q", bytes(8 * (n + 1)))
        self.generation = 0
        self.block_candidates = [0] * m
        self.trie_scratch = SearchScratch()

    def next_generation(self):
        self.generation += 1
        return self.generation


# ---------------------------------------------------------------------------
# estimators


class LinearScanIndex(ParamsMixin):
    """Baseline index: no structure, exact scan of all rows per query."""

    def __init__(self, b):
        self.b = b

    def fit(self, X):
        ds = as_dataset(X, self.b)
        self.params_ = ds.params
        self.dataset_ = ds
        self.vertical_ = to_vertical(ds)
        self.n_ = len(ds)
        return self

    def query(self, q, tau):
        return linear_scan(self.vertical_, q, tau)


class SingleIndexHashing(ParamsMixin):
    """Inverted index keyed by whole sketches, probed with signatures.

    ``probe_budget`` caps the number of signatures probed per query; a
    query whose signature count exceeds it falls back to a linear scan
    (still exact).  Unlimited by default.
    """

    def __init__(self, b, probe_budget=None):
        self.b = b
        self.probe_budget = probe_budget

    def fit(self, X):
        ds = as_dataset(X, self.b)
        self.params_ = ds.params
        table = {}
        for r in range(len(ds)):
            table.setdefault(ds.row_bytes(r), array("Q")).append(r + 1)
        self.table_ = table
        self.vertical_ = to_vertical(ds)
        self.n_ = len(ds)
        self.last_fallback_ = False
        return self

    def query(self, q, tau):
        params = self.params_
        qb = as_query_row(q, params)
        if not 0 <= tau <= params.L:
            raise ValueError(f"threshold {tau} out of range [0, {params.L}]")
        budget = self.probe_budget
        if budget is not None and signature_count(params.b, params.L, tau) > budget:
            self.last_fallback_ = True
            return linear_scan(self.vertical_, qb, tau)
        self.last_fallback_ = False
        out = []
        table = self.table_
        for sig in enumerate_signatures(qb, tau, params):
            group = table.get(sig)
            if group is not None:
                out.extend(group)
        out.sort()
        return out


class SketchTrieIndex(ParamsMixin):
    """Single-index trie: one succinct trie over the whole sketches."""

    def __init__(self, b, lam=0.5, dense_level=None, sparse_level=None):
        self.b = b
        self.lam = lam
        self.dense_level = dense_level
        self.sparse_level = sparse_level

    def fit(self, X):
        ds = as_dataset(X, self.b)
        self.params_ = ds.params
        self.trie_ = BbitSketchTrie.build(
            ds,
            lam=self.lam,
            dense_level=self.dense_level,
            sparse_level=self.sparse_level,
        )
        self.n_ = len(ds)
        return self

    def query(self, q, tau, scratch=None):
        return self.trie_.sim_search(q, tau, scratch)

    def space_report(self):
        return self.trie_.space_report()


class _MultiIndexBase(ParamsMixin):
    """Filter-and-verify machinery shared by the multi-index variants."""

    def _fit_common(self, ds):
        self.params_ = ds.params
        self.partition_ = partition(ds.params, self.m)
        self.vertical_ = to_vertical(ds)
        self.n_ = len(ds)

    def _block_query(self, j, qj, tau_j):
        raise NotImplementedError

    def query(self, q, tau, scratch=None):
        params = self.params_
        qb = as_query_row(q, params)
        if not 0 <= tau <= params.L:
            raise ValueError(f"threshold {tau} out of range [0, {params.L}]")
        if scratch is None:
            scratch = self._scratch()
        assignment = assign_thresholds(tau, self.m, self.policy)
        gen = scratch.next_generation()
        seen = scratch.seen
        candidates = []
        for j, (start, stop) in enumerate(self.partition_.spans):
            tau_j = assignment.thresholds[j]
            if tau_j < 0:
                scratch.block_candidates[j] = 0
                continue
            block_ids = self._block_query(j, qb[start:stop], tau_j, scratch)
            scratch.block_candidates[j] = len(block_ids)
            for i in block_ids:
                if seen[i] != gen:
                    seen[i] = gen
                    candidates.append(i)
        if tau >= params.L:
            out = candidates  # full-length distance can never exceed L
        else:
            out = []
            _verify_ids(candidates, self.vertical_, vertical_query(qb, params), tau, out)
        self.last_candidates_ = tuple(scratch.block_candidates)
        self.last_unique_candidates_ = len(candidates)
        out.sort()
        return out

    def _scratch(self):
        cached = getattr(self, "_default_scratch", None)
        if cached is None or len(cached.seen) != self.n_ + 1 or len(cached.block_candidates) != self.m:
            cached = MultiIndexScratch(self.n_, self.m)
            self._default_scratch = cached
        return cached


class MultiIndexHashing(_MultiIndexBase):
    """Per-block hash tables probed with block signatures.

    ``block_probe`` controls candidate gathering per block: "signatures"
    always probes, "scan" always filters the block columns directly, and
    "auto" probes only while the signature count does not exceed the
    number of stored sketches (beyond that a vectorized block scan is
    cheaper and equally exact).
    """

    def __init__(self, b, m=2, policy="refined", block_probe="auto"):
        self.b = b
        self.m = m
        self.policy = policy
        self.block_probe = block_probe

    def fit(self, X):
        ds = as_dataset(X, self.b)
        self._fit_common(ds)
        self.data_ = ds.data
        tables = []
        for start, stop in self.partition_.spans:
            table = {}
            block = ds.data[:, start:stop]
            for r in range(len(ds)):
                table.setdefault(block[r].tobytes(), array("Q")).append(r + 1)
            tables.append(table)
        self.block_tables_ = tables
        return self

    def _block_query(self, j, qj, tau_j, scratch):
        length = len(qj)
        block_params = SketchParams(self.b, length) if length else None
        if self.block_probe not in ("auto", "signatures", "scan"):
            raise ValueError(f"unknown block_probe mode {self.block_probe!r}")
        mode = self.block_probe
        if mode == "auto":
            sigs = signature_count(self.b, length, tau_j)
            mode = "signatures" if sigs <= max(self.n_, 64) else "scan"
        if mode == "signatures":
            out = []
            table = self.block_tables_[j]
            for sig in enumerate_signatures(qj, tau_j, block_params):
                group = table.get(sig)
                if group is not None:
                    out.extend(group)
            return out
        start, stop = self.partition_.spans[j]
        qarr = np.frombuffer(qj, dtype=np.uint8)
        dist = (self.data_[:, start:stop] != qarr).sum(axis=1)
        return (np.flatnonzero(dist <= tau_j) + 1).tolist()


class MultiIndexSketchTrie(_MultiIndexBase):
    """Per-block succinct tries, candidates verified at full length."""

    def __init__(self, b, m=2, policy="refined", lam=0.5):
        self.b = b
        self.m = m
        self.policy = policy
        self.lam = lam

    def fit(self, X):
        ds = as_dataset(X, self.b)
        self._fit_common(ds)
        tries = []
        for start, stop in self.partition_.spans:
            block = as_dataset(ds.data[:, start:stop], self.b)
            tries.append(BbitSketchTrie.build(block, lam=self.lam))
        self.block_tries_ = tries
        return self

    def _block_query(self, j, qj, tau_j, scratch):
        return self.block_tries_[j].sim_search(qj, tau_j, scratch.trie_scratch)
