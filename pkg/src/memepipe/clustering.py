"""Image and text clustering over a meme corpus.

Image clusters are the transitive closure of "perceptual hashes within a
Hamming threshold"; text clusters are exact matches after normalization.
A cluster is labeled by the smallest meme id it contains, so labels do not
depend on input order.
"""

from collections import Counter
from dataclasses import dataclass, field

from .errors import DataFormatError
from .phash import HASH_BITS, HammingIndex


def normalize_text(s):
    """Lowercase, trim, and collapse every whitespace run to one space."""
    return " ".join(s.lower().split())


class UnionFind:
    """Disjoint sets over arbitrary hashable keys (path compression + size)."""

    def __init__(self):
        self.parent = {}
        self.size = {}

    def find(self, x):
        if x not in self.parent:
            self.parent[x] = x
            self.size[x] = 1
            return x
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return ra
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        return ra


def cluster_images(hashes, threshold):
    """Map meme id -> image cluster id.

    hashes: iterable of (meme_id, 64-bit hash).  Two memes land in the same
    cluster when they are connected by a chain of pairs with Hamming
    distance <= threshold.
    """
    if not 0 <= threshold <= HASH_BITS:
        raise ValueError(f"threshold must be in [0, {HASH_BITS}], got {threshold}")
    entries = list(hashes)
    index = HammingIndex(entries)
    uf = UnionFind()
    for meme_id, h in entries:
        uf.find(meme_id)
        for other_id, _ in index.query(h, threshold):
            uf.union(meme_id, other_id)
    return _min_id_labels(uf, [meme_id for meme_id, _ in entries])


def cluster_texts(memes):
    """Map meme id -> text cluster id (exact match after normalization)."""
    by_norm = {}
    for rec in memes:
        by_norm.setdefault(normalize_text(rec.text), []).append(rec.id)
    labels = {}
    for ids in by_norm.values():
        label = min(ids)
        for meme_id in ids:
            labels[meme_id] = label
    return labels


def _min_id_labels(uf, ids):
    root_min = {}
    for meme_id in ids:
        root = uf.find(meme_id)
        prev = root_min.get(root)
        if prev is None or meme_id < prev:
            root_min[root] = meme_id
    return {meme_id: root_min[uf.find(meme_id)] for meme_id in ids}


@dataclass
class ClusterAssignment:
    """Per-meme cluster labels for both modalities."""

    image: dict = field(default_factory=dict)
    text: dict = field(default_factory=dict)

    def ids(self):
        return sorted(self.image)

    def pair(self, meme_id):
        return self.image[meme_id], self.text[meme_id]


@dataclass(frozen=True)
class CorpusStats:
    image_repeat_frac: float
    text_repeat_frac: float
    independent_frac: float
    n: int


def corpus_stats(assignment):
    """Fractions of memes with a repeated image, a repeated text, and neither.

    A meme can repeat in both modalities, so the first two fractions need
    not sum with the third to 1.
    """
    ids = assignment.ids()
    n = len(ids)
    if n == 0:
        return CorpusStats(0.0, 0.0, 0.0, 0)
    img_sizes = Counter(assignment.image.values())
    txt_sizes = Counter(assignment.text.values())
    img_rep = sum(1 for i in ids if img_sizes[assignment.image[i]] >= 2)
    txt_rep = sum(1 for i in ids if txt_sizes[assignment.text[i]] >= 2)
    indep = sum(1 for i in ids
                if img_sizes[assignment.image[i]] == 1
                and txt_sizes[assignment.text[i]] == 1)
    return CorpusStats(img_rep / n, txt_rep / n, indep / n, n)


def write_clusters(assignment, path):
    """Write `id,image_cluster,text_cluster` lines, sorted by id."""
    with open(path, "w", encoding="utf-8") as fh:
        for meme_id in assignment.ids():
            img, txt = assignment.pair(meme_id)
            fh.write(f"{meme_id},{img},{txt}\n")


def read_clusters(path):
    assignment = ClusterAssignment()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 3:
                raise DataFormatError(f"{path}: line {lineno}: expected "
                                      f"id,image_cluster,text_cluster")
            try:
                meme_id, img, txt = (int(p) for p in parts)
            except ValueError:
                raise DataFormatError(f"{path}: line {lineno}: non-integer field") from None
            if meme_id in assignment.image:
                raise DataFormatError(f"{path}: line {lineno}: duplicate id {meme_id}")
            assignment.image[meme_id] = img
            assignment.text[meme_id] = txt
    return assignment
