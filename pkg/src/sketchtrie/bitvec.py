"""Bit arrays with fast rank and select.

Positions are 1-based throughout the query API, which keeps the arithmetic
of the trie encodings free of off-by-one adjustments:

* ``rank(i)`` counts the 1-bits among positions ``1..i``.
* ``select(k)`` returns the position of the k-th 1-bit, or ``N + 1`` when
  fewer than ``k`` bits are set.

Bits are packed little-endian into 64-bit words.  The acceleration
directory is a classic two-level layout: absolute counts every 8192 bits,
16-bit relative counts every 128 bits, plus a sampled select hint every
1024 ones.  It is rebuilt on construction and never serialized; measured
overhead stays well under 30% of the raw bits (see ``aux_bits``).
"""

from array import array

_SUPER_WORDS = 128          # superblock: 128 words = 8192 bits
_BLOCK_WORDS = 2            # relative-count block: 2 words = 128 bits
_SELECT_SAMPLE = 1024       # one superblock hint per 1024 one-bits


def _build_select_in_byte():
    table = bytearray(256 * 8)
    for value in range(256):
        r = 0
        for pos in range(8):
            if value >> pos & 1:
                table[(value << 3) | r] = pos
                r += 1
    return bytes(table)


_SEL8 = _build_select_in_byte()


class RankSelectBitVector:
    """Immutable bit array answering access/rank/select."""

    __slots__ = ("_n", "_words", "_sb", "_blk", "_sel", "_total")

    def __init__(self, bits=()):
        words = array("Q")
        n = 0
        cur = 0
        for bit in bits:
            if bit:
                cur |= 1 << (n & 63)
            n += 1
            if not n & 63:
                words.append(cur)
                cur = 0
        if n & 63:
            words.append(cur)
        self._init_words(words, n)

    @classmethod
    def from_packed_bytes(cls, data, n):
        """Build from little-endian packed bits (e.g. numpy packbits output).

        Pad bits beyond position ``n`` are ignored.
        """
        if len(data) < (n + 7) >> 3:
            raise ValueError("packed data shorter than the declared bit count")
        nwords = (n + 63) >> 6
        buf = bytes(data[: nwords * 8])
        if len(buf) < nwords * 8:
            buf += b"\x00" * (nwords * 8 - len(buf))
        words = array("Q")
        words.frombytes(buf)
        if n & 63 and nwords:
            words[-1] &= (1 << (n & 63)) - 1
        self = cls.__new__(cls)
        self._init_words(words, n)
        return self

    def _init_words(self, words, n):
        sb = array("Q")
        blk = array("H")
        sel = array("Q")
        total = 0
        next_sample = 1
        for w in range(len(words)):
            if not w & (_SUPER_WORDS - 1):
                sb.append(total)
            if not w & (_BLOCK_WORDS - 1):
                blk.append(total - sb[-1])
            c = words[w].bit_count()
            if c and total + c >= next_sample:
                hint = w >> 7
                while next_sample <= total + c:
                    sel.append(hint)
                    next_sample += _SELECT_SAMPLE
            total += c
        sb.append(total)  # sentinel, simplifies binary-search bounds
        self._n = n
        self._words = words
        self._sb = sb
        self._blk = blk
        self._sel = sel
        self._total = total

    def __len__(self):
        return self._n

    @property
    def ones(self):
        return self._total

    def get(self, i):
        """Bit at 1-based position ``i``."""
        if not 1 <= i <= self._n:
            raise ValueError(f"position {i} out of range [1, {self._n}]")
        i -= 1
        return (self._words[i >> 6] >> (i & 63)) & 1

    def rank(self, i):
        """Number of 1-bits among positions ``1..i`` (``0 <= i <= N``)."""
        if i < 0 or i > self._n:
            raise ValueError(f"rank position {i} out of range [0, {self._n}]")
        if i == 0:
            return 0
        i -= 1
        w = i >> 6
        r = self._sb[w >> 7] + self._blk[w >> 1]
        if w & 1:
            r += self._words[w - 1].bit_count()
        return r + (self._words[w] & ((2 << (i & 63)) - 1)).bit_count()

    def select(self, k):
        """Position of the k-th 1-bit (``k >= 1``); ``N + 1`` when k > ones."""
        if k < 1:
            raise ValueError("select argument must be >= 1")
        if k > self._total:
            return self._n + 1
        sb = self._sb
        sel = self._sel
        j = (k - 1) // _SELECT_SAMPLE
        lo = sel[j]
        hi = sel[j + 1] if j + 1 < len(sel) else len(sb) - 2
        # largest superblock s with sb[s] < k
        while lo < hi:
            mid = (lo + hi + 1) >> 1
            if sb[mid] < k:
                lo = mid
            else:
                hi = mid - 1
        base = sb[lo]
        blk = self._blk
        blo = lo << 6
        bhi = min(blo + 64, len(blk)) - 1
        while blo < bhi:
            mid = (blo + bhi + 1) >> 1
            if base + blk[mid] < k:
                blo = mid
            else:
                bhi = mid - 1
        r = k - base - blk[blo]
        w = blo << 1
        words = self._words
        c = words[w].bit_count()
        if r > c:
            r -= c
            w += 1
        word = words[w]
        offset = 0
        while True:
            byte = word & 0xFF
            c = byte.bit_count()
            if r <= c:
                return (w << 6) + offset + _SEL8[(byte << 3) | (r - 1)] + 1
            r -= c
            offset += 8
            word >>= 8

    def next_one(self, pos):
        """Position of the first 1-bit strictly after 1-based position ``pos``;
        ``N + 1`` when there is none.

        For a known 1-bit at ``pos`` this equals ``select(rank(pos) + 1)``
        but costs a short forward scan when the next bit is nearby (the
        common case for the dense first-sibling and leftmost-leaf vectors).
        """
        words = self._words
        nwords = len(words)
        idx = pos  # 0-based index of the next candidate bit
        w = idx >> 6
        if w < nwords:
            chunk = words[w] >> (idx & 63)
            if chunk:
                return idx + (chunk & -chunk).bit_length()
            scan_end = min(w + 8, nwords)
            w += 1
            while w < scan_end:
                word = words[w]
                if word:
                    return (w << 6) + (word & -word).bit_length()
                w += 1
            if w < nwords:
                # sparse tail: fall back to the directory
                return self.select(self.rank(pos) + 1)
        return self._n + 1

    def ones_window(self, start, width):
        """Offsets (0-based, relative to ``start``) of the set bits within
        the half-open window ``[start, start + width)``; ``start`` 0-based.

        Equivalent to repeated select over the window but walks the packed
        words directly, which is much cheaper for narrow windows.
        """
        end = min(start + width, self._n)
        words = self._words
        out = []
        pos = start
        while pos < end:
            bit = pos & 63
            chunk = words[pos >> 6] >> bit
            span = 64 - bit
            if span > end - pos:
                span = end - pos
                chunk &= (1 << span) - 1
            base = pos - start
            while chunk:
                low = chunk & -chunk
                out.append(base + low.bit_length() - 1)
                chunk ^= low
            pos += span
        return out

    def to_packed_bytes(self):
        """Raw bits as little-endian 64-bit words (``ceil(N/64)`` of them)."""
        return self._words.tobytes()

    def aux_bits(self):
        """Size of the rank/select acceleration directory in bits."""
        return len(self._sb) * 64 + len(self._blk) * 16 + len(self._sel) * 64

    def __eq__(self, other):
        if not isinstance(other, RankSelectBitVector):
            return NotImplemented
        return self._n == other._n and self._words == other._words

    def __hash__(self):
        return hash((self._n, bytes(self._words.tobytes())))
