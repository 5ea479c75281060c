"""Perceptual hashing and exact Hamming-radius search.

The hash pipeline: grayscale -> 32x32 area resize -> orthonormal 2-D DCT-II
-> top-left 8x8 block -> sign code of the 63 AC coefficients against their
median.  The result is a 64-bit integer, row-major over the block, bit 0
(the DC position) always zero.  Hashing works on real-valued pixels; nothing
is quantized mid-pipeline, so scaling or shifting intensities leaves the
hash unchanged.
"""

import numpy as np
from scipy.fft import dctn

from .errors import DataFormatError

RESIZE_SIDE = 32
BLOCK_SIDE = 8
HASH_BITS = BLOCK_SIDE * BLOCK_SIDE

# ITU-R 601 luma weights, summing to 1
_LUMA_R = 0.299
_LUMA_G = 0.587
_LUMA_B = 0.114


def to_grayscale(pixels):
    """Collapse an image to a 2-D float matrix.

    Accepts H x W, H x W x 1 (passthrough) or H x W x 3 (luma weighting).
    """
    arr = np.asarray(pixels, dtype=np.float64)
    if arr.ndim == 2:
        return arr
    if arr.ndim == 3 and arr.shape[2] == 1:
        return arr[:, :, 0]
    if arr.ndim == 3 and arr.shape[2] == 3:
        return (_LUMA_R * arr[:, :, 0]
                + _LUMA_G * arr[:, :, 1]
                + _LUMA_B * arr[:, :, 2])
    raise ValueError(f"expected 1 or 3 channels, got shape {arr.shape}")


def _overlap_weights(n_in, n_out):
    # w[i, j] = fraction of output cell i covered by input cell j, so each
    # row sums to 1 and the product with a pixel column is an exact
    # area-weighted mean.
    step = n_in / n_out
    w = np.zeros((n_out, n_in))
    for i in range(n_out):
        lo = i * step
        hi = lo + step
        j0 = int(np.floor(lo))
        j1 = min(int(np.ceil(hi)), n_in)
        for j in range(j0, j1):
            w[i, j] = min(hi, j + 1.0) - max(lo, float(j))
    return w / step


def resize_area(m, s):
    """Resize a 2-D matrix to s x s by exact area-weighted averaging."""
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
        raise ValueError(f"need a non-empty 2-D matrix, got shape {m.shape}")
    if s < 1:
        raise ValueError(f"target side must be >= 1, got {s}")
    wr = _overlap_weights(m.shape[0], s)
    wc = _overlap_weights(m.shape[1], s)
    return wr @ m @ wc.T


def dct2(m):
    """Orthonormal 2-D DCT-II.  Energy-preserving; a constant c maps to c*s at (0,0)."""
    return dctn(np.asarray(m, dtype=np.float64), type=2, norm="ortho")


def phash(img):
    """64-bit perceptual hash of an image (any 2-D/3-channel pixel array).

    Bit i (row-major over the 8x8 low-frequency DCT block) is set when that
    coefficient exceeds the median of the 63 AC coefficients.  Bit 0 is the
    DC position and is always zero.  Invariant under pixel maps a*p + b with
    a > 0.
    """
    gray = to_grayscale(img)
    h, w = gray.shape
    if h < BLOCK_SIDE or w < BLOCK_SIDE:
        raise ValueError(f"degenerate image {h}x{w}: need at least "
                         f"{BLOCK_SIDE}x{BLOCK_SIDE} pixels")
    small = resize_area(gray, RESIZE_SIDE)
    block = dct2(small)[:BLOCK_SIDE, :BLOCK_SIDE].ravel()
    ac = np.sort(block[1:])
    med = ac[(ac.size - 1) // 2]  # lower median; exact middle for odd counts
    bits = 0
    for i in range(1, HASH_BITS):
        if block[i] > med:
            bits |= 1 << i
    return bits


def hamming(a, b):
    """Number of differing bits between two 64-bit hashes."""
    return ((a ^ b) & (2 ** HASH_BITS - 1)).bit_count()


def hash_to_hex(h):
    return format(h, "016x")


def hex_to_hash(s):
    s = s.strip()
    if len(s) != 16:
        raise ValueError(f"expected 16 hex digits, got {s!r}")
    return int(s, 16)


def write_hashes(entries, path):
    """Write `id,hash_hex` lines for (meme_id, hash) pairs."""
    with open(path, "w", encoding="utf-8") as fh:
        for meme_id, h in entries:
            fh.write(f"{meme_id},{hash_to_hex(h)}\n")


def read_hashes(path):
    entries = []
    seen = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 2:
                raise DataFormatError(f"{path}: line {lineno}: expected id,hash_hex")
            try:
                meme_id = int(parts[0])
                h = hex_to_hash(parts[1])
            except ValueError:
                raise DataFormatError(f"{path}: line {lineno}: malformed row") from None
            if meme_id in seen:
                raise DataFormatError(f"{path}: line {lineno}: duplicate id {meme_id}")
            seen.add(meme_id)
            entries.append((meme_id, h))
    return entries


class _Node:
    __slots__ = ("hash", "ids", "children")

    def __init__(self, h, meme_id):
        self.hash = h
        self.ids = [meme_id]
        self.children = {}


class HammingIndex:
    """BK-tree over 64-bit hashes for exact radius queries.

    Results always equal a linear scan; the tree only prunes subtrees that
    the triangle inequality rules out.
    """

    def __init__(self, entries=None):
        self._root = None
        self._size = 0
        if entries is not None:
            for meme_id, h in entries:
                self.add(meme_id, h)

    def __len__(self):
        return self._size

    def add(self, meme_id, h):
        self._size += 1
        if self._root is None:
            self._root = _Node(h, meme_id)
            return
        node = self._root
        while True:
            d = hamming(h, node.hash)
            if d == 0:
                node.ids.append(meme_id)
                return
            child = node.children.get(d)
            if child is None:
                node.children[d] = _Node(h, meme_id)
                return
            node = child

    def query(self, h, radius):
        """All (meme_id, distance) with distance <= radius, sorted by (distance, id)."""
        if not 0 <= radius <= HASH_BITS:
            raise ValueError(f"radius must be in [0, {HASH_BITS}], got {radius}")
        out = []
        if self._root is None:
            return out
        stack = [self._root]
        while stack:
            node = stack.pop()
            d = hamming(h, node.hash)
            if d <= radius:
                out.extend((i, d) for i in node.ids)
            for dist, child in node.children.items():
                if d - radius <= dist <= d + radius:
                    stack.append(child)
        out.sort(key=lambda pair: (pair[1], pair[0]))
        return out
