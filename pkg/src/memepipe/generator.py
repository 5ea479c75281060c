"""Synthetic meme corpus generator.

Produces 64x64 grayscale images plus short texts with a planted confounder
structure: hateful pivots accompanied by a near-duplicate-image partner and
a shared-text partner (labels 1, 0, 0), unimodal-hate pairs sharing one
modality (labels 1, 1), and independent benign filler.

Two guarantees make downstream detection exact rather than probabilistic:

- every fresh base image is re-drawn until its perceptual hash is at least
  _BASE_MIN_SEPARATION bits from all earlier bases, and every near-duplicate
  is re-perturbed until it stays within _DUP_MAX_RADIUS bits of its base, so
  at the default clustering threshold the image clusters are exactly the
  planted ones;
- every fresh text is re-drawn until unique after normalization, and shared
  texts are only mangled in case and whitespace.

All randomness flows through one seeded generator, so equal inputs give
byte-identical manifests and images.
"""

import os
from dataclasses import dataclass, field

import numpy as np
from scipy.fft import idctn

from .clustering import normalize_text
from .dataset import (DatasetComposition, GeneratorNoise, MemeRecord,
                      write_pgm)
from .phash import hamming, phash
from .tuples import ThreeTuple, TwoTuple, UnimodalHate

IMAGE_SIDE = 64
_BAND = slice(44, 56)        # caption band: high-frequency stripes live here
_LOW_BLOCK = 8
_COEF_SIGMA = 60.0
_DUP_MAX_RADIUS = 4
# cluster threshold (10) + 2 * dup radius + 1: near-duplicates of different
# bases can never close a chain between clusters
_BASE_MIN_SEPARATION = 19

CATEGORIES = ("multimodal_hate", "unimodal_hate", "benign_text_confounder",
              "benign_image_confounder", "random_benign")

_CONSONANTS = "bdfglmnprst"
_VOWELS = "aeiou"
_VOCAB = []
for _a in [c + v for c in _CONSONANTS for v in _VOWELS]:
    for _b in [c + v for c in _CONSONANTS for v in _VOWELS]:
        _VOCAB.append(_a + _b)
        if len(_VOCAB) == 200:
            break
    if len(_VOCAB) == 200:
        break

_COLS = np.arange(IMAGE_SIDE, dtype=np.float64)


@dataclass
class GeneratedDataset:
    """Generator output: records plus the planted ground truth.

    two_tuples holds only the (hateful, benign) confounder pairs; the
    unimodal pairs in unimodal_groups are also size-2 single-modality
    clusters, so structural detection reports them as TwoTuples as well.
    """

    records: list
    images: dict                      # id -> 64x64 uint8
    categories: dict                  # id -> composition category
    three_tuples: list = field(default_factory=list)
    two_tuples: list = field(default_factory=list)
    unimodal_groups: list = field(default_factory=list)


def _quantize(img):
    return np.clip(np.rint(img), 0, 255).astype(np.uint8)


def _base_image(rng):
    # random energy across the whole low-frequency DCT block keeps the 64
    # hash bits close to independent coin flips across images
    coef = np.zeros((IMAGE_SIDE, IMAGE_SIDE))
    coef[0, 0] = 128.0 * IMAGE_SIDE
    block = rng.normal(0.0, _COEF_SIGMA, size=(_LOW_BLOCK, _LOW_BLOCK))
    block[0, 0] = 0.0
    coef[:_LOW_BLOCK, :_LOW_BLOCK] += block
    img = idctn(coef, type=2, norm="ortho")
    freq = int(rng.integers(8, 13))
    phase = rng.uniform(0.0, 2.0 * np.pi)
    amp = rng.uniform(15.0, 30.0)
    # integer frequency: the stripes sum to zero along x, so they stay out
    # of the hash's low-frequency block
    img[_BAND] += amp * np.cos(2.0 * np.pi * freq * _COLS / IMAGE_SIDE + phase)
    return img


def _fresh_base(rng, base_hashes):
    for _ in range(500):
        img = _base_image(rng)
        h = phash(_quantize(img))
        if all(hamming(h, other) >= _BASE_MIN_SEPARATION for other in base_hashes):
            base_hashes.append(h)
            return img, h
    raise ValueError("exhausted retries placing a distinct base image; "
                     "the corpus is too large for the hash space")


def _near_duplicate(rng, base_img, base_hash, amplitude):
    if amplitude == 0.0:
        return _quantize(base_img)
    for _ in range(50):
        dup = base_img.copy()
        dup[_BAND] += rng.uniform(-amplitude, amplitude, size=dup[_BAND].shape)
        dup_q = _quantize(dup)
        if hamming(phash(dup_q), base_hash) <= _DUP_MAX_RADIUS:
            return dup_q
    raise ValueError(f"image_amplitude {amplitude} keeps pushing near-duplicates "
                     f"more than {_DUP_MAX_RADIUS} hash bits from their base")


def _fresh_text(rng, used_norms):
    for _ in range(1000):
        length = int(rng.integers(4, 13))
        picks = rng.integers(0, len(_VOCAB), size=length)
        text = " ".join(_VOCAB[int(i)] for i in picks)
        norm = normalize_text(text)
        if norm not in used_norms:
            used_norms.add(norm)
            return text
    raise ValueError("exhausted retries drawing a unique text")


def _text_variant(rng, text, perturb_prob):
    # same text modulo case and whitespace; normalization maps it back
    if rng.random() >= perturb_prob:
        return text
    words = [w.upper() if rng.random() < 0.3 else w for w in text.split(" ")]
    parts = [words[0]]
    for w in words[1:]:
        parts.append("  " if rng.random() < 0.3 else " ")
        parts.append(w)
    out = "".join(parts)
    if rng.random() < 0.5:
        out = " " + out
    if rng.random() < 0.5:
        out = out + " "
    return out


def generate_dataset(n, composition=None, noise=None, seed=0):
    """Build a synthetic corpus of n memes with planted confounder structure.

    Category counts follow the composition (floors, remainder to random
    benign).  Complete pivot/image-partner/text-partner triples form while
    both confounder budgets and pivots last; leftover confounders attach to
    spare pivots as two-member groups, then fall back to independent benign
    memes.  Splits are roughly 85/5/10 train/dev/test.
    """
    if n < 10:
        raise ValueError(f"need n >= 10, got {n}")
    comp = composition if composition is not None else DatasetComposition()
    noi = noise if noise is not None else GeneratorNoise()
    rng = np.random.default_rng(seed)
    c_mm, c_uni, c_btc, c_bic, c_rb = comp.counts(n)

    base_hashes = []
    used_norms = set()
    texts = []
    labels = []
    categories = []
    images = {}
    three_tuples = []
    two_tuples = []
    unimodal_groups = []

    def emit(image_u8, text, label, category):
        meme_id = len(texts)
        images[meme_id] = image_u8
        texts.append(text)
        labels.append(label)
        categories.append(category)
        return meme_id

    def fresh_base():
        return _fresh_base(rng, base_hashes)

    def fresh_text():
        return _fresh_text(rng, used_norms)

    triples = min(c_mm, c_btc, c_bic)
    pivots_left = c_mm - triples
    img_pairs = min(c_bic - triples, pivots_left)
    pivots_left -= img_pairs
    txt_pairs = min(c_btc - triples, pivots_left)
    pivots_left -= txt_pairs
    stray_bic = c_bic - triples - img_pairs
    stray_btc = c_btc - triples - txt_pairs

    for _ in range(triples):
        base, base_h = fresh_base()
        pivot_text = fresh_text()
        pivot = emit(_quantize(base), pivot_text, 1, "multimodal_hate")
        dup = _near_duplicate(rng, base, base_h, noi.image_amplitude)
        img_partner = emit(dup, fresh_text(), 0, "benign_image_confounder")
        partner_base, _ = fresh_base()
        txt_partner = emit(_quantize(partner_base),
                           _text_variant(rng, pivot_text, noi.text_perturb_prob),
                           0, "benign_text_confounder")
        three_tuples.append(ThreeTuple(pivot, img_partner, txt_partner))

    for _ in range(img_pairs):
        base, base_h = fresh_base()
        pivot = emit(_quantize(base), fresh_text(), 1, "multimodal_hate")
        dup = _near_duplicate(rng, base, base_h, noi.image_amplitude)
        partner = emit(dup, fresh_text(), 0, "benign_image_confounder")
        two_tuples.append(TwoTuple(pivot, partner, "image"))

    for _ in range(txt_pairs):
        base, _ = fresh_base()
        pivot_text = fresh_text()
        pivot = emit(_quantize(base), pivot_text, 1, "multimodal_hate")
        partner_base, _ = fresh_base()
        partner = emit(_quantize(partner_base),
                       _text_variant(rng, pivot_text, noi.text_perturb_prob),
                       0, "benign_text_confounder")
        two_tuples.append(TwoTuple(pivot, partner, "text"))

    for _ in range(pivots_left):
        base, _ = fresh_base()
        emit(_quantize(base), fresh_text(), 1, "multimodal_hate")

    for _ in range(stray_bic):
        base, _ = fresh_base()
        emit(_quantize(base), fresh_text(), 0, "benign_image_confounder")
    for _ in range(stray_btc):
        base, _ = fresh_base()
        emit(_quantize(base), fresh_text(), 0, "benign_text_confounder")

    for pair_idx in range(c_uni // 2):
        if pair_idx % 2 == 0:
            base, base_h = fresh_base()
            first = emit(_quantize(base), fresh_text(), 1, "unimodal_hate")
            dup = _near_duplicate(rng, base, base_h, noi.image_amplitude)
            second = emit(dup, fresh_text(), 1, "unimodal_hate")
            unimodal_groups.append(UnimodalHate("image", first, (first, second)))
        else:
            shared_text = fresh_text()
            base, _ = fresh_base()
            first = emit(_quantize(base), shared_text, 1, "unimodal_hate")
            partner_base, _ = fresh_base()
            second = emit(_quantize(partner_base),
                          _text_variant(rng, shared_text, noi.text_perturb_prob),
                          1, "unimodal_hate")
            unimodal_groups.append(UnimodalHate("text", first, (first, second)))
    if c_uni % 2:
        base, _ = fresh_base()
        emit(_quantize(base), fresh_text(), 1, "unimodal_hate")

    for _ in range(c_rb):
        base, _ = fresh_base()
        emit(_quantize(base), fresh_text(), 0, "random_benign")

    assert len(texts) == n

    n_dev = int(np.floor(0.05 * n))
    n_test = int(np.floor(0.10 * n))
    perm = rng.permutation(n)
    splits = ["train"] * n
    for meme_id in perm[:n_dev]:
        splits[meme_id] = "dev"
    for meme_id in perm[n_dev:n_dev + n_test]:
        splits[meme_id] = "test"

    final_labels = list(labels)
    for meme_id in range(n):
        if rng.random() < noi.label_noise:
            final_labels[meme_id] = 1 - final_labels[meme_id]

    records = [MemeRecord(id=i, img=f"images/{i:06d}.pgm", text=texts[i],
                          label=final_labels[i], split=splits[i])
               for i in range(n)]
    return GeneratedDataset(records=records, images=images,
                            categories={i: categories[i] for i in range(n)},
                            three_tuples=three_tuples, two_tuples=two_tuples,
                            unimodal_groups=unimodal_groups)


def write_images(dataset, out_dir):
    """Write every image as images/<id>.pgm under out_dir."""
    img_dir = os.path.join(out_dir, "images")
    os.makedirs(img_dir, exist_ok=True)
    for rec in dataset.records:
        write_pgm(dataset.images[rec.id], os.path.join(out_dir, rec.img))


def image_hashes(images):
    """Perceptual hashes for an id -> pixels mapping, sorted by id."""
    return [(meme_id, phash(images[meme_id])) for meme_id in sorted(images)]
