"""Layered succinct trie over fixed-length integer sketches.

The trie over n sketches of length L has every leaf at depth L; nodes at
each level are numbered 1..t_level in lexicographic order of their
prefixes.  The encoding splits the levels into three layers:

* dense layer (levels 0..dense_level): a complete ``2**b``-ary trie,
  represented implicitly by arithmetic alone;
* middle layer (levels dense_level+1..sparse_level): per level either a
  TABLE (one existence bit per (parent, label) slot) or a LIST (edge
  label plus first-sibling flag per node), picked by node density;
* sparse layer (below sparse_level): subtries collapsed into their
  root-to-leaf path strings, scanned with the word-parallel Hamming
  kernel.

``PointerTrie`` is the plain nested-dict equivalent used as a structural
oracle and as an alternative encoding source.
"""

from array import array
from dataclasses import dataclass

import numpy as np

from .bitvec import RankSelectBitVector
from .sketches import _pack_planes, as_query_row

_TABLE = 0
_LIST = 1


# ---------------------------------------------------------------------------
# pointer trie (oracle)


class PointerTrie:
    """Nested-dict trie with lexicographically numbered nodes.

    Node ids follow the (ordinal, level) convention: the u-th node at a
    level, counting prefixes in ascending lexicographic order from 1.
    """

    def __init__(self, params, rows, groups):
        self.params = params
        self._rows = rows          # sorted distinct sketches, as bytes
        self._groups = groups      # per distinct sketch, ascending 1-based ids
        root = {}
        for row in rows:
            node = root
            for sym in row:
                node = node.setdefault(sym, {})
        self.root = root
        level_nodes = [[root]]
        parents = [None]
        labels = [None]
        for _ in range(params.L):
            cur, par, labs = [], [], []
            for u0, node in enumerate(level_nodes[-1]):
                for sym in sorted(node):
                    cur.append(node[sym])
                    par.append(u0 + 1)
                    labs.append(sym)
            level_nodes.append(cur)
            parents.append(par)
            labels.append(labs)
        self._level_nodes = level_nodes
        self._parents = parents
        self._labels = labels
        # first-child ordinal per node and level
        starts = [None]
        for lvl in range(1, params.L + 1):
            st = [0] * (len(level_nodes[lvl - 1]) + 1)
            for p in parents[lvl]:
                st[p] += 1
            acc = 1
            for u in range(1, len(st)):
                st[u - 1], acc = acc, acc + st[u]
            starts.append(st[:-1])
        self._child_start = starts

    @property
    def level_counts(self):
        return tuple(len(nodes) for nodes in self._level_nodes)

    @property
    def node_count(self):
        return sum(len(nodes) for nodes in self._level_nodes)

    @property
    def num_leaves(self):
        return len(self._rows)

    def children(self, u, level):
        """Pairs (child ordinal, edge label) of node u at ``level``, label-sorted."""
        if not 0 <= level < self.params.L:
            raise ValueError(f"level {level} out of range [0, {self.params.L})")
        nodes = self._level_nodes[level]
        if not 1 <= u <= len(nodes):
            raise ValueError(f"node {u} out of range at level {level}")
        start = self._child_start[level + 1][u - 1]
        return [(start + k, sym) for k, sym in enumerate(sorted(nodes[u - 1]))]

    def leaf_ids(self, u):
        """Ascending sketch ids stored at leaf u."""
        if not 1 <= u <= len(self._rows):
            raise ValueError(f"leaf {u} out of range")
        return tuple(self._groups[u - 1])

    def prefix(self, u, level):
        """The prefix string of node u at ``level``, as bytes."""
        if not 0 <= level <= self.params.L:
            raise ValueError(f"level {level} out of range")
        if not 1 <= u <= len(self._level_nodes[level]):
            raise ValueError(f"node {u} out of range at level {level}")
        out = bytearray()
        while level > 0:
            out.append(self._labels[level][u - 1])
            u = self._parents[level][u - 1]
            level -= 1
        out.reverse()
        return bytes(out)


def build_pointer_trie(ds):
    """Canonical pointer trie of a dataset; duplicate sketches share a leaf."""
    if len(ds) < 1:
        raise ValueError("cannot build a trie from an empty dataset")
    groups = {}
    for r in range(len(ds)):
        groups.setdefault(ds.row_bytes(r), []).append(r + 1)
    rows = sorted(groups)
    return PointerTrie(ds.params, rows, [tuple(groups[row]) for row in rows])


def pointer_trie_footprint_bytes(level_counts, n):
    """Modeled memory of a pointer-based trie.

    Per node: first-child and next-sibling pointers (8 bytes each) plus a
    1-byte label; plus 4 bytes per stored sketch id and an 8-byte id-list
    head per leaf.  Used as the baseline in space comparisons.
    """
    nodes = sum(level_counts)
    return nodes * 17 + n * 4 + level_counts[-1] * 8


# ---------------------------------------------------------------------------
# layer planning


@dataclass(frozen=True)
class LayerPlan:
    """Layer boundaries, per-level middle encodings, and level node counts."""

    dense_level: int
    sparse_level: int
    encodings: tuple
    lam: float
    level_counts: tuple

    def encoding_at(self, level):
        """Encoding name for a middle level."""
        if not self.dense_level < level <= self.sparse_level:
            raise ValueError(f"level {level} is not in the middle layer")
        return self.encodings[level - self.dense_level - 1]


def plan_layers(level_counts, params, lam=0.5, dense_level=None, sparse_level=None):
    """Choose layer boundaries and middle encodings from level node counts.

    The dense layer extends while levels stay complete (t_level equals
    ``2**(b*level)``).  The sparse cut is the shallowest level that already
    separates more than a ``lam`` fraction of the leaves, so the subtries
    below are mostly plain paths.  A middle level is encoded as TABLE when
    its density exceeds ``2**b / (b + 1)``, the break-even point of the
    two payload formulas, else as LIST.  Explicit boundary overrides win.
    """
    counts = tuple(int(t) for t in level_counts)
    L = params.L
    b = params.b
    if len(counts) != L + 1 or counts[0] != 1:
        raise ValueError("level_counts must cover levels 0..L with a single root")
    if not 0.0 < lam < 1.0:
        raise ValueError(f"lam must be in (0, 1), got {lam}")
    natural_dense = 0
    for lvl in range(L + 1):
        if counts[lvl] == 1 << (b * lvl):
            natural_dense = lvl
        else:
            break
    if dense_level is None:
        lm = natural_dense
    else:
        lm = int(dense_level)
        if not 0 <= lm <= L:
            raise ValueError(f"dense level {lm} out of range [0, {L}]")
        if lm > natural_dense:
            raise ValueError(
                f"dense layer must be complete: level {lm} has {counts[lm]} nodes, "
                f"needs {1 << (b * lm)}"
            )
    t_leaves = counts[L]
    if sparse_level is None:
        ls = next(lvl for lvl in range(lm, L + 1) if counts[lvl] > lam * t_leaves)
    else:
        ls = int(sparse_level)
        if not lm <= ls <= L:
            raise ValueError(f"need dense {lm} <= sparse {ls} <= {L}")
    encodings = tuple(
        "table" if counts[lvl] * (b + 1) > counts[lvl - 1] << b else "list"
        for lvl in range(lm + 1, ls + 1)
    )
    return LayerPlan(lm, ls, encodings, lam, counts)


# ---------------------------------------------------------------------------
# encoded layers


class TableLevel:
    """Existence bit per (parent, label) slot for one middle level."""

    __slots__ = ("level", "table")

    def __init__(self, level, table):
        self.level = level
        self.table = table

    def payload_bits(self):
        return len(self.table)

    def aux_bits(self):
        return self.table.aux_bits()

    def __eq__(self, other):
        return (
            isinstance(other, TableLevel)
            and self.level == other.level
            and self.table == other.table
        )


class ListLevel:
    """Edge label and first-sibling flag per node for one middle level."""

    __slots__ = ("level", "labels", "first_sibling")

    def __init__(self, level, labels, first_sibling):
        self.level = level
        self.labels = labels
        self.first_sibling = first_sibling

    def payload_bits(self, b):
        return (b + 1) * len(self.labels)

    def aux_bits(self):
        return self.first_sibling.aux_bits()

    def __eq__(self, other):
        return (
            isinstance(other, ListLevel)
            and self.level == other.level
            and self.labels == other.labels
            and self.first_sibling == other.first_sibling
        )


class SparseLayer:
    """Collapsed path strings below the sparse cut.

    ``paths`` stores the horizontal suffix of leaf v at
    ``[(v-1)*suffix_len, v*suffix_len)``; ``planes`` mirrors the suffixes
    in vertical format for the bounded Hamming kernel.  ``leftmost[v]`` is
    set when leaf v is the leftmost leaf of its subtrie.
    """

    __slots__ = ("suffix_len", "paths", "leftmost", "planes", "words_per_suffix")

    def __init__(self, suffix_len, paths, leftmost, planes, words_per_suffix):
        self.suffix_len = suffix_len
        self.paths = paths
        self.leftmost = leftmost
        self.planes = planes
        self.words_per_suffix = words_per_suffix

    def path(self, v):
        s = self.suffix_len
        return self.paths[(v - 1) * s : v * s]

    def vertical_row(self, v):
        w = self.words_per_suffix
        base = (v - 1) * w
        out = []
        for plane in self.planes:
            out.extend(plane[base : base + w])
        return tuple(out)

    def __eq__(self, other):
        return (
            isinstance(other, SparseLayer)
            and self.suffix_len == other.suffix_len
            and self.paths == other.paths
            and self.leftmost == other.leftmost
        )


class LeafIdMap:
    """Sketch ids grouped by leaf, in leaf order; ids are 1-based."""

    __slots__ = ("offsets", "ids")

    def __init__(self, offsets, ids):
        self.offsets = offsets
        self.ids = ids

    def group(self, v):
        return tuple(self.ids[self.offsets[v - 1] : self.offsets[v]])

    def __eq__(self, other):
        return (
            isinstance(other, LeafIdMap)
            and self.offsets == other.offsets
            and self.ids == other.ids
        )


class SearchScratch:
    """Per-query workspace: traversal counters and accepted leaf ordinals."""

    __slots__ = ("nodes_visited", "leaves_scanned", "accepted_leaves")

    def __init__(self):
        self.reset()

    def reset(self):
        self.nodes_visited = 0
        self.leaves_scanned = 0
        self.accepted_leaves = []


@dataclass(frozen=True)
class LevelSpace:
    level: int
    kind: str
    nodes: int
    payload_bits: int
    aux_bits: int


@dataclass(frozen=True)
class SpaceReport:
    levels: tuple
    sparse_path_bits: int
    sparse_leftmost_bits: int
    sparse_aux_bits: int
    sparse_mirror_bits: int
    idmap_bits: int
    total_payload_bits: int
    total_aux_bits: int

    def to_text(self):
        lines = ["level  kind    nodes  payload_bits  aux_bits"]
        for row in self.levels:
            lines.append(
                f"{row.level:>5}  {row.kind:<6}{row.nodes:>8}  {row.payload_bits:>12}  {row.aux_bits:>8}"
            )
        lines.append(f"sparse paths: {self.sparse_path_bits} bits (+{self.sparse_leftmost_bits} leftmost, "
                     f"{self.sparse_aux_bits} aux, {self.sparse_mirror_bits} vertical mirror)")
        lines.append(f"id map: {self.idmap_bits} bits")
        lines.append(f"total: {self.total_payload_bits} payload + {self.total_aux_bits} aux bits")
        return "\n".join(lines)


# ---------------------------------------------------------------------------
# encoded trie


def _lcp_array(rows):
    """Longest-common-prefix lengths between consecutive distinct rows."""
    u = rows.shape[0]
    if u <= 1:
        return np.zeros(0, dtype=np.int64)
    eq = rows[1:] == rows[:-1]
    if eq.all(axis=1).any():
        raise ValueError("rows must be distinct")
    return eq.argmin(axis=1)


def _level_counts_from_lcp(lcp, L):
    hist = np.bincount(lcp, minlength=L + 1)
    cum = np.cumsum(hist)
    return tuple([1] + [1 + int(cum[lvl - 1]) for lvl in range(1, L + 1)])


def _bitvector_from_mask(mask):
    n = len(mask)
    return RankSelectBitVector.from_packed_bytes(
        np.packbits(mask, bitorder="little").tobytes(), n
    )


class BbitSketchTrie:
    """Succinct layered trie answering pruned Hamming-range queries."""

    def __init__(self, params, plan, mid_levels, sparse, leaf_ids):
        self.params = params
        self.plan = plan
        self.mid_levels = mid_levels
        self.sparse = sparse
        self.leaf_ids = leaf_ids
        fast = {}
        for lvl, enc in mid_levels.items():
            if isinstance(enc, TableLevel):
                fast[lvl] = (_TABLE, enc.table)
            else:
                fast[lvl] = (_LIST, enc.labels, enc.first_sibling)
        self._mid_fast = fast

    # -- construction ------------------------------------------------------

    @classmethod
    def build(cls, ds, lam=0.5, dense_level=None, sparse_level=None):
        """Build directly from a dataset (sorted-array construction)."""
        if len(ds) < 1:
            raise ValueError("cannot build a trie from an empty dataset")
        rows, inverse = np.unique(ds.data, axis=0, return_inverse=True)
        inverse = inverse.ravel()
        order = np.argsort(inverse, kind="stable")
        counts = np.bincount(inverse, minlength=rows.shape[0])
        cum = np.zeros(rows.shape[0] + 1, dtype=np.uint64)
        np.cumsum(counts, out=cum[1:])
        offsets = array("Q")
        offsets.frombytes(cum.tobytes())
        ids = array("Q")
        ids.frombytes((order.astype(np.uint64) + 1).tobytes())
        lcp = _lcp_array(rows)
        plan = plan_layers(
            _level_counts_from_lcp(lcp, ds.params.L),
            ds.params,
            lam=lam,
            dense_level=dense_level,
            sparse_level=sparse_level,
        )
        return cls._encode(ds.params, plan, rows, lcp, offsets, ids)

    @classmethod
    def from_pointer_trie(cls, trie, plan):
        """Encode an existing pointer trie under an explicit plan."""
        params = trie.params
        rows = np.frombuffer(b"".join(trie._rows), dtype=np.uint8).reshape(
            len(trie._rows), params.L
        )
        lcp = _lcp_array(rows)
        if _level_counts_from_lcp(lcp, params.L) != tuple(plan.level_counts):
            raise ValueError("plan level counts do not match the trie")
        offsets = array("Q", [0])
        ids = array("Q")
        for group in trie._groups:
            ids.extend(group)
            offsets.append(len(ids))
        return cls._encode(params, plan, rows, lcp, offsets, ids)

    @classmethod
    def _encode(cls, params, plan, rows, lcp, offsets, ids):
        b = params.b
        alpha = params.alphabet
        lm, ls = plan.dense_level, plan.sparse_level
        counts = plan.level_counts
        mid = {}
        for lvl in range(lm + 1, ls + 1):
            node_rows = np.flatnonzero(np.concatenate(([True], lcp < lvl)))
            if lvl >= 2:
                pcb = np.concatenate(([0], np.cumsum(lcp < lvl - 1)))
                parents = 1 + pcb[node_rows]
            else:
                parents = np.ones(len(node_rows), dtype=np.int64)
            labels = rows[node_rows, lvl - 1]
            if plan.encoding_at(lvl) == "table":
                nbits = alpha * counts[lvl - 1]
                bits = np.zeros(nbits, dtype=np.uint8)
                bits[(parents - 1) * alpha + labels] = 1
                mid[lvl] = TableLevel(lvl, _bitvector_from_mask(bits))
            else:
                first = np.empty(len(node_rows), dtype=np.uint8)
                first[0] = 1
                first[1:] = parents[1:] != parents[:-1]
                mid[lvl] = ListLevel(lvl, labels.tobytes(), _bitvector_from_mask(first))
        suffix = rows[:, ls:]
        dmask = np.empty(rows.shape[0], dtype=np.uint8)
        dmask[0] = 1
        dmask[1:] = lcp < ls
        planes, wps = _pack_planes(suffix, b)
        sparse = SparseLayer(
            params.L - ls, suffix.tobytes(), _bitvector_from_mask(dmask), planes, wps
        )
        return cls(params, plan, mid, sparse, LeafIdMap(offsets, ids))

    # -- basic properties ---------------------------------------------------

    @property
    def num_leaves(self):
        return self.plan.level_counts[-1]

    @property
    def num_sketches(self):
        return len(self.leaf_ids.ids)

    def __eq__(self, other):
        return (
            isinstance(other, BbitSketchTrie)
            and self.params == other.params
            and self.plan == other.plan
            and self.mid_levels == other.mid_levels
            and self.sparse == other.sparse
            and self.leaf_ids == other.leaf_ids
        )

    # -- navigation ---------------------------------------------------------

    def children(self, u, level):
        """Pairs (child ordinal, edge label) of node u at ``level``, label-sorted."""
        plan = self.plan
        if not 0 <= level < plan.sparse_level:
            raise ValueError(
                f"children is defined for levels [0, {plan.sparse_level}), got {level}"
            )
        if not 1 <= u <= plan.level_counts[level]:
            raise ValueError(f"node {u} out of range at level {level}")
        alpha = self.params.alphabet
        if level < plan.dense_level:
            base = (u - 1) * alpha
            return [(base + sym + 1, sym) for sym in range(alpha)]
        enc = self._mid_fast[level + 1]
        if enc[0] == _TABLE:
            h = enc[1]
            i0 = (u - 1) * alpha
            x = h.rank(i0)
            y = h.rank(i0 + alpha)
            return [(v, (h.select(v) - 1) & (alpha - 1)) for v in range(x + 1, y + 1)]
        labels, bv = enc[1], enc[2]
        i = bv.select(u)
        j = bv.select(u + 1) - 1
        return [(v, labels[v - 1]) for v in range(i, j + 1)]

    def leaf_paths(self, u):
        """Yield (leaf ordinal, suffix row) for the subtrie rooted at node u
        of the sparse-cut level."""
        plan = self.plan
        if not 1 <= u <= plan.level_counts[plan.sparse_level]:
            raise ValueError(f"node {u} out of range at level {plan.sparse_level}")
        sparse = self.sparse
        i = sparse.leftmost.select(u)
        j = sparse.leftmost.select(u + 1) - 1
        for v in range(i, j + 1):
            yield v, sparse.path(v)

    # -- search -------------------------------------------------------------

    def sim_search(self, q, tau, scratch=None):
        """All 1-based ids within Hamming distance ``tau`` of ``q``, ascending.

        Depth-first traversal carrying the prefix distance; a branch is
        abandoned as soon as the carried distance would exceed ``tau``.  At
        the sparse cut the remaining suffixes are checked with the bounded
        vertical kernel.  Traversal counters land in ``scratch``.
        """
        params = self.params
        qb = as_query_row(q, params)
        if not 0 <= tau <= params.L:
            raise ValueError(f"threshold {tau} out of range [0, {params.L}]")
        if scratch is None:
            scratch = SearchScratch()
        scratch.reset()
        plan = self.plan
        lm = plan.dense_level
        ls = plan.sparse_level
        alpha = params.alphabet
        b = params.b
        sparse = self.sparse
        dsel = sparse.leftmost.select
        dnext = sparse.leftmost.next_one
        planes = sparse.planes
        wps = sparse.words_per_suffix
        slen = sparse.suffix_len
        offs = self.leaf_ids.offsets
        idarr = self.leaf_ids.ids
        mid = self._mid_fast
        out = []
        accepted = scratch.accepted_leaves
        # vertical words of the query suffix, plane-major
        qwords = [[0] * wps for _ in range(b)]
        for j, sym in enumerate(qb[ls:]):
            w, bit = divmod(j, 64)
            for p in range(b):
                if (sym >> (b - 1 - p)) & 1:
                    qwords[p][w] |= 1 << bit
        if wps == 1:
            pairs = [(planes[p], qwords[p][0]) for p in range(b)]
        visited = 0
        scanned = 0
        stack = [(0, 1, 0)]
        pop = stack.pop
        push = stack.append
        while stack:
            level, u, dist = pop()
            visited += 1
            if level == ls:
                i = dsel(u)
                j = dnext(i) - 1
                scanned += j - i + 1
                budget = tau - dist
                if wps == 0 or budget >= slen:
                    # suffix distance cannot exceed the remaining budget
                    for v in range(i, j + 1):
                        accepted.append(v)
                        out.extend(idarr[offs[v - 1] : offs[v]])
                elif wps == 1:
                    for v in range(i, j + 1):
                        o = v - 1
                        acc = 0
                        for arr, qw in pairs:
                            acc |= arr[o] ^ qw
                        if acc.bit_count() <= budget:
                            accepted.append(v)
                            out.extend(idarr[offs[v - 1] : offs[v]])
                else:
                    for v in range(i, j + 1):
                        base = (v - 1) * wps
                        rem = budget
                        for w in range(wps):
                            acc = 0
                            for p in range(b):
                                acc |= planes[p][base + w] ^ qwords[p][w]
                            rem -= acc.bit_count()
                            if rem < 0:
                                break
                        if rem >= 0:
                            accepted.append(v)
                            out.extend(idarr[offs[v - 1] : offs[v]])
                continue
            qsym = qb[level]
            nxt = level + 1
            if nxt <= lm:
                base = (u - 1) * alpha
                if dist < tau:
                    for sym in range(alpha):
                        push((nxt, base + sym + 1, dist if sym == qsym else dist + 1))
                else:
                    push((nxt, base + qsym + 1, dist))
            else:
                enc = mid[nxt]
                if enc[0] == _TABLE:
                    h = enc[1]
                    if dist < tau:
                        # the children of u occupy one alpha-bit window; the
                        # bit offset is the (0-based) edge label itself
                        i0 = (u - 1) * alpha
                        v = h.rank(i0)
                        for sym in h.ones_window(i0, alpha):
                            v += 1
                            push((nxt, v, dist if sym == qsym else dist + 1))
                    else:
                        pos = (u - 1) * alpha + qsym + 1
                        if h.get(pos):
                            push((nxt, h.rank(pos), dist))
                else:
                    labels = enc[1]
                    bv = enc[2]
                    i = bv.select(u)
                    j = bv.next_one(i) - 1
                    if dist < tau:
                        for v in range(i, j + 1):
                            push((nxt, v, dist if labels[v - 1] == qsym else dist + 1))
                    else:
                        v0 = labels.find(qsym, i - 1, j)
                        if v0 >= 0:
                            push((nxt, v0 + 1, dist))
        scratch.nodes_visited = visited
        scratch.leaves_scanned = scanned
        out.sort()
        return out

    # -- reporting ----------------------------------------------------------

    def space_report(self):
        """Per-level payload/auxiliary sizes; payloads follow the encoding
        formulas (``2**b * t_parent`` for TABLE, ``(b+1) * t`` for LIST)."""
        params = self.params
        plan = self.plan
        counts = plan.level_counts
        rows = []
        payload = 0
        aux = 0
        for lvl in range(1, plan.dense_level + 1):
            rows.append(LevelSpace(lvl, "dense", counts[lvl], 0, 0))
        for lvl in range(plan.dense_level + 1, plan.sparse_level + 1):
            enc = self.mid_levels[lvl]
            if isinstance(enc, TableLevel):
                p, a = enc.payload_bits(), enc.aux_bits()
                rows.append(LevelSpace(lvl, "table", counts[lvl], p, a))
            else:
                p, a = enc.payload_bits(params.b), enc.aux_bits()
                rows.append(LevelSpace(lvl, "list", counts[lvl], p, a))
            payload += p
            aux += a
        t_leaves = counts[-1]
        sparse_path_bits = params.b * self.sparse.suffix_len * t_leaves
        sparse_leftmost_bits = t_leaves
        sparse_aux = self.sparse.leftmost.aux_bits()
        mirror = sum(len(plane) for plane in self.sparse.planes) * 64
        idmap = 64 * len(self.leaf_ids.ids) + 64 * len(self.leaf_ids.offsets)
        payload += sparse_path_bits + sparse_leftmost_bits + idmap
        aux += sparse_aux
        return SpaceReport(
            levels=tuple(rows),
            sparse_path_bits=sparse_path_bits,
            sparse_leftmost_bits=sparse_leftmost_bits,
            sparse_aux_bits=sparse_aux,
            sparse_mirror_bits=mirror,
            idmap_bits=idmap,
            total_payload_bits=payload,
            total_aux_bits=aux,
        )
