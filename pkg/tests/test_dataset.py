import numpy as np
import pytest

from memepipe.dataset import (DatasetComposition, GeneratorNoise, MemeRecord,
                              read_manifest, read_pgm, write_manifest,
                              write_pgm)
from memepipe.errors import DataFormatError, ManifestError


def rec(meme_id, split="train", label=0, text="some text"):
    return MemeRecord(id=meme_id, img=f"images/{meme_id}.pgm", text=text,
                      label=label, split=split)


def test_manifest_round_trip(tmp_path):
    records = [rec(0), rec(1, split="dev", label=None), rec(2, split="test",
                                                            label=1)]
    path = tmp_path / "manifest.jsonl"
    write_manifest(records, path)
    assert read_manifest(path) == records


def test_manifest_empty_round_trip(tmp_path):
    path = tmp_path / "manifest.jsonl"
    write_manifest([], path)
    assert read_manifest(path) == []


def test_manifest_label_key_omitted_when_missing(tmp_path):
    path = tmp_path / "manifest.jsonl"
    write_manifest([rec(0, split="test", label=None)], path)
    assert '"label"' not in path.read_text()


def test_manifest_three_lines_in_order(tmp_path):
    path = tmp_path / "m.jsonl"
    path.write_text(
        '{"id": 2, "img": "a.pgm", "text": "x", "label": 1, "split": "test"}\n'
        '{"id": 0, "img": "b.pgm", "text": "y", "split": "dev"}\n'
        '{"id": 1, "img": "c.pgm", "text": "z", "label": 0, "split": "train"}\n')
    records = read_manifest(path)
    assert [r.id for r in records] == [2, 0, 1]
    assert records[1].label is None


def test_manifest_duplicate_id_rejected(tmp_path):
    path = tmp_path / "m.jsonl"
    row = '{"id": 5, "img": "a.pgm", "text": "x", "label": 1, "split": "test"}\n'
    path.write_text(row + row)
    with pytest.raises(ManifestError, match="duplicate id 5"):
        read_manifest(path)
    with pytest.raises(ManifestError, match="duplicate"):
        write_manifest([rec(5), rec(5)], tmp_path / "out.jsonl")


def test_manifest_train_requires_label(tmp_path):
    path = tmp_path / "m.jsonl"
    path.write_text('{"id": 1, "img": "a.pgm", "text": "x", "split": "train"}\n')
    with pytest.raises(ManifestError, match="missing a label"):
        read_manifest(path)


def test_manifest_field_errors(tmp_path):
    path = tmp_path / "m.jsonl"
    path.write_text("{broken\n")
    with pytest.raises(ManifestError, match="line 1"):
        read_manifest(path)
    path.write_text('{"id": 1, "img": "a.pgm", "text": "x"}\n')
    with pytest.raises(ManifestError, match="split"):
        read_manifest(path)
    path.write_text('{"id": 1, "img": "a.pgm", "text": "x", "label": 3, '
                    '"split": "test"}\n')
    with pytest.raises(ManifestError, match="label"):
        read_manifest(path)
    path.write_text('{"id": true, "img": "a.pgm", "text": "x", "label": 1, '
                    '"split": "test"}\n')
    with pytest.raises(ManifestError, match="id"):
        read_manifest(path)
    path.write_text('{"id": 1, "img": "a.pgm", "text": "x", "label": 1, '
                    '"split": "val"}\n')
    with pytest.raises(ManifestError, match="split"):
        read_manifest(path)


def test_composition_default_counts():
    assert DatasetComposition().counts(100) == (40, 10, 20, 20, 10)


def test_composition_remainder_to_random_benign():
    counts = DatasetComposition().counts(97)
    assert sum(counts) == 97
    # floors are (38, 9, 19, 19, 9); the 3 leftover memes land in the filler
    assert counts == (38, 9, 19, 19, 12)


def test_composition_parse():
    comp = DatasetComposition.parse("0.5, 0.1, 0.2, 0.1, 0.1")
    assert comp.multimodal_hate == 0.5
    with pytest.raises(ValueError):
        DatasetComposition.parse("0.5,0.5")
    with pytest.raises(ValueError):
        DatasetComposition.parse("a,b,c,d,e")


def test_composition_validation():
    with pytest.raises(ValueError, match="sum"):
        DatasetComposition(0.5, 0.5, 0.5, 0.0, 0.0)
    with pytest.raises(ValueError, match=">= 0"):
        DatasetComposition(-0.1, 0.5, 0.2, 0.2, 0.2)


def test_noise_validation():
    GeneratorNoise(image_amplitude=0.0, text_perturb_prob=1.0, label_noise=0.0)
    with pytest.raises(ValueError):
        GeneratorNoise(image_amplitude=-1.0)
    with pytest.raises(ValueError):
        GeneratorNoise(label_noise=1.5)


def test_pgm_round_trip(tmp_path):
    img = np.arange(48, dtype=np.uint8).reshape(6, 8)
    path = tmp_path / "img.pgm"
    write_pgm(img, path)
    data = path.read_bytes()
    assert data.startswith(b"P5\n8 6\n255\n")
    assert np.array_equal(read_pgm(path), img)


def test_pgm_write_validation(tmp_path):
    with pytest.raises(ValueError):
        write_pgm(np.zeros((3, 3), dtype=np.float64), tmp_path / "x.pgm")
    with pytest.raises(ValueError):
        write_pgm(np.zeros((3, 3, 3), dtype=np.uint8), tmp_path / "x.pgm")


def test_pgm_read_skips_comments(tmp_path):
    path = tmp_path / "img.pgm"
    path.write_bytes(b"P5\n# a comment line\n2 2\n255\n\x01\x02\x03\x04")
    assert np.array_equal(read_pgm(path),
                          np.array([[1, 2], [3, 4]], dtype=np.uint8))


def test_pgm_read_errors(tmp_path):
    path = tmp_path / "img.pgm"
    path.write_bytes(b"P6\n2 2\n255\n" + bytes(12))
    with pytest.raises(DataFormatError, match="P5"):
        read_pgm(path)
    path.write_bytes(b"P5\n2 2\n65535\n" + bytes(8))
    with pytest.raises(DataFormatError, match="maxval"):
        read_pgm(path)
    path.write_bytes(b"P5\n2 2\n255\n\x01")
    with pytest.raises(DataFormatError, match="truncated"):
        read_pgm(path)
