"""Corpus records, manifest serialization, and PGM image files.

A manifest is line-delimited JSON, one record per line with keys id, img,
text, label (optional outside the train split) and split.  Images are binary
PGM (P5) files with maxval 255.
"""

import json
from dataclasses import dataclass

import numpy as np

from .errors import DataFormatError, ManifestError

SPLITS = ("train", "dev", "test")


@dataclass
class MemeRecord:
    id: int
    img: str
    text: str
    label: int | None
    split: str


@dataclass(frozen=True)
class DatasetComposition:
    """Category fractions for the synthetic generator.  Must sum to 1."""

    multimodal_hate: float = 0.40
    unimodal_hate: float = 0.10
    benign_text_confounder: float = 0.20
    benign_image_confounder: float = 0.20
    random_benign: float = 0.10

    def __post_init__(self):
        fracs = self.as_tuple()
        if any(f < 0 for f in fracs):
            raise ValueError(f"composition fractions must be >= 0, got {fracs}")
        if abs(sum(fracs) - 1.0) > 1e-9:
            raise ValueError(f"composition fractions must sum to 1, got {sum(fracs)}")

    def as_tuple(self):
        return (self.multimodal_hate, self.unimodal_hate,
                self.benign_text_confounder, self.benign_image_confounder,
                self.random_benign)

    def counts(self, n):
        """Per-category counts: floor(n * frac), remainder to random benign."""
        base = [int(np.floor(n * f)) for f in self.as_tuple()]
        base[4] += n - sum(base)
        return tuple(base)

    @classmethod
    def parse(cls, text):
        parts = [p.strip() for p in text.split(",")]
        if len(parts) != 5:
            raise ValueError(f"expected 5 comma-separated fractions, got {text!r}")
        return cls(*[float(p) for p in parts])


@dataclass(frozen=True)
class GeneratorNoise:
    """Perturbation knobs for the synthetic generator."""

    image_amplitude: float = 4.0      # intensity units, applied in the text band only
    text_perturb_prob: float = 0.5    # chance a shared text is case/whitespace mangled
    label_noise: float = 0.0          # chance a recorded label is flipped

    def __post_init__(self):
        if self.image_amplitude < 0:
            raise ValueError("image_amplitude must be >= 0")
        for name in ("text_perturb_prob", "label_noise"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")


def _check_record(rec, where):
    if not isinstance(rec.id, int) or isinstance(rec.id, bool) or rec.id < 0:
        raise ManifestError(f"{where}: id must be a non-negative integer, got {rec.id!r}")
    if not isinstance(rec.img, str) or not rec.img:
        raise ManifestError(f"{where}: img must be a non-empty string")
    if not isinstance(rec.text, str):
        raise ManifestError(f"{where}: text must be a string")
    if rec.split not in SPLITS:
        raise ManifestError(f"{where}: split must be one of {SPLITS}, got {rec.split!r}")
    if rec.label is not None and rec.label not in (0, 1):
        raise ManifestError(f"{where}: label must be 0 or 1, got {rec.label!r}")
    if rec.split == "train" and rec.label is None:
        raise ManifestError(f"{where}: train record {rec.id} is missing a label")


def read_manifest(path):
    """Parse a manifest file into records, in file order.

    Raises ManifestError (with the offending line number) on malformed JSON,
    missing or invalid fields, and duplicate ids.
    """
    records = []
    seen = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ManifestError(f"line {lineno}: invalid JSON: {exc}") from None
            if not isinstance(obj, dict):
                raise ManifestError(f"line {lineno}: expected an object")
            for key in ("id", "img", "text", "split"):
                if key not in obj:
                    raise ManifestError(f"line {lineno}: missing field {key!r}")
            rec = MemeRecord(id=obj["id"], img=obj["img"], text=obj["text"],
                             label=obj.get("label"), split=obj["split"])
            _check_record(rec, f"line {lineno}")
            if rec.id in seen:
                raise ManifestError(f"line {lineno}: duplicate id {rec.id}")
            seen.add(rec.id)
            records.append(rec)
    return records


def write_manifest(records, path):
    """Write records as line-delimited JSON.  Round-trips through read_manifest."""
    seen = set()
    for rec in records:
        _check_record(rec, f"record id {rec.id}")
        if rec.id in seen:
            raise ManifestError(f"duplicate id {rec.id}")
        seen.add(rec.id)
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            obj = {"id": rec.id, "img": rec.img, "text": rec.text}
            if rec.label is not None:
                obj["label"] = rec.label
            obj["split"] = rec.split
            fh.write(json.dumps(obj) + "\n")


def write_pgm(pixels, path):
    """Write a 2-D uint8 array as a binary PGM (P5, maxval 255) file."""
    arr = np.asarray(pixels)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D array, got shape {arr.shape}")
    if arr.dtype != np.uint8:
        raise ValueError(f"expected uint8 pixels, got {arr.dtype}")
    with open(path, "wb") as fh:
        fh.write(f"P5\n{arr.shape[1]} {arr.shape[0]}\n255\n".encode("ascii"))
        fh.write(arr.tobytes())


def read_pgm(path):
    """Read a binary PGM (P5, maxval 255) file into a 2-D uint8 array."""
    with open(path, "rb") as fh:
        data = fh.read()
    tokens = []
    pos = 0
    while len(tokens) < 4 and pos < len(data):
        # header tokens are whitespace separated; '#' starts a comment line
        if data[pos:pos + 1].isspace():
            pos += 1
        elif data[pos:pos + 1] == b"#":
            nl = data.find(b"\n", pos)
            pos = len(data) if nl < 0 else nl + 1
        else:
            end = pos
            while end < len(data) and not data[end:end + 1].isspace():
                end += 1
            tokens.append(data[pos:end])
            pos = end
    if len(tokens) < 4 or tokens[0] != b"P5":
        raise DataFormatError(f"{path}: not a binary PGM (P5) file")
    try:
        width, height, maxval = (int(t) for t in tokens[1:4])
    except ValueError:
        raise DataFormatError(f"{path}: malformed PGM header") from None
    if maxval != 255:
        raise DataFormatError(f"{path}: only maxval 255 is supported, got {maxval}")
    pos += 1  # single whitespace byte after the header
    raw = data[pos:pos + width * height]
    if len(raw) != width * height:
        raise DataFormatError(f"{path}: truncated pixel data")
    return np.frombuffer(raw, dtype=np.uint8).reshape(height, width)
