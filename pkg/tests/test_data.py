import struct

import numpy as np
import pytest

from geodp import data as gdata
from geodp.errors import BadMagic, CountMismatch, InvalidBatchSize, TruncatedFile


class TestIdxLoading:
    def test_hand_built_fixture(self, tmp_path):
        images = np.zeros((2, 2, 2), dtype=np.uint8)
        images[0] = [[255, 0], [128, 51]]
        images[1] = [[1, 2], [3, 4]]
        labels = np.array([7, 3], dtype=np.uint8)
        gdata.save_idx_images(tmp_path / "i", images)
        gdata.save_idx_labels(tmp_path / "l", labels)

        ds = gdata.load_mnist(tmp_path / "i", tmp_path / "l")
        assert ds.size == 2 and ds.num_features == 4
        np.testing.assert_allclose(ds.features[0], [1.0, 0.0, 128 / 255, 0.2])
        np.testing.assert_array_equal(ds.labels, [7, 3])

    def test_synthetic_fixture_shapes(self, idx_files):
        ds = gdata.load_mnist(*idx_files)
        assert ds.size == 120
        assert ds.num_features == 784
        assert 0.0 <= ds.features.min() and ds.features.max() <= 1.0

    def test_image_magic_rejected(self, tmp_path, idx_files):
        bad = tmp_path / "bad"
        bad.write_bytes(struct.pack(">IIII", 0x801, 1, 2, 2) + b"\0" * 4)
        with pytest.raises(BadMagic):
            gdata.load_mnist(bad, idx_files[1])

    def test_label_magic_rejected(self, tmp_path, idx_files):
        # an images magic in the labels file must be refused
        bad = tmp_path / "bad"
        bad.write_bytes(struct.pack(">II", 0x803, 1) + b"\0")
        with pytest.raises(BadMagic):
            gdata.load_mnist(idx_files[0], bad)

    def test_count_mismatch(self, tmp_path, idx_files):
        labels = np.zeros(7, dtype=np.uint8)
        gdata.save_idx_labels(tmp_path / "l7", labels)
        with pytest.raises(CountMismatch):
            gdata.load_mnist(idx_files[0], tmp_path / "l7")

    def test_truncated_pixels(self, tmp_path):
        f = tmp_path / "trunc"
        f.write_bytes(struct.pack(">IIII", 0x803, 4, 28, 28) + b"\0" * 100)
        with pytest.raises(TruncatedFile, match="offset"):
            gdata.load_mnist(f, f)

    def test_truncated_header(self, tmp_path):
        f = tmp_path / "short"
        f.write_bytes(b"\x00\x00")
        with pytest.raises(TruncatedFile):
            gdata.load_mnist(f, f)


class TestGradientPersistence:
    def test_round_trip_bit_exact(self, tmp_path):
        rows = np.random.default_rng(0).normal(size=(3, 4))
        ds = gdata.GradientDataset(rows, {"clip": 0.1, "seed": 3, "source_model": "lr"})
        gdata.save_gradients(ds, tmp_path / "g.gds")
        back = gdata.load_gradients(tmp_path / "g.gds")
        assert back.rows.tobytes() == ds.rows.tobytes()
        assert back.metadata == ds.metadata

    def test_wrong_magic(self, tmp_path):
        f = tmp_path / "g.gds"
        f.write_bytes(b"GDS2" + b"\0" * 20)
        with pytest.raises(BadMagic):
            gdata.load_gradients(f)

    def test_truncated_floats(self, tmp_path):
        ds = gdata.GradientDataset(np.ones((4, 5)))
        gdata.save_gradients(ds, tmp_path / "g.gds")
        whole = (tmp_path / "g.gds").read_bytes()
        (tmp_path / "cut.gds").write_bytes(whole[: 16 + 9 * 8])
        with pytest.raises(TruncatedFile, match="offset"):
            gdata.load_gradients(tmp_path / "cut.gds")

    def test_truncated_metadata(self, tmp_path):
        ds = gdata.GradientDataset(np.ones((2, 2)))
        gdata.save_gradients(ds, tmp_path / "g.gds")
        whole = (tmp_path / "g.gds").read_bytes()
        (tmp_path / "cut.gds").write_bytes(whole[:-3])
        with pytest.raises(TruncatedFile):
            gdata.load_gradients(tmp_path / "cut.gds")

    def test_declared_count_beyond_payload(self, tmp_path):
        f = tmp_path / "g.gds"
        f.write_bytes(b"GDS1" + struct.pack("<IQ", 8, 1000) + b"\0" * 64)
        with pytest.raises(TruncatedFile):
            gdata.load_gradients(f)


class TestBatchIter:
    def make_ds(self, n=10):
        feats = np.linspace(0, 1, n * 2).reshape(n, 2)
        return gdata.LabeledDataset(feats, np.arange(n) % 3, 3)

    def test_counts_and_sizes(self):
        batches = list(gdata.batch_iter(self.make_ds(10), 3, seed=0, epochs=1))
        assert len(batches) == 3
        assert all(len(b) == 3 for b in batches)

    def test_deterministic(self):
        a = list(gdata.batch_iter(self.make_ds(), 3, seed=9, epochs=2))
        b = list(gdata.batch_iter(self.make_ds(), 3, seed=9, epochs=2))
        for x, y in zip(a, b):
            np.testing.assert_array_equal(x, y)

    def test_epoch_matches_seed_permutation(self):
        batches = list(gdata.batch_iter(self.make_ds(10), 3, seed=42, epochs=1))
        got = np.concatenate(batches)
        want = np.random.default_rng(42).permutation(10)[:9]
        np.testing.assert_array_equal(got, want)

    def test_disjoint_cover(self):
        batches = list(gdata.batch_iter(self.make_ds(11), 3, seed=1, epochs=1))
        flat = np.concatenate(batches)
        assert len(set(flat.tolist())) == 9

    def test_invalid_batch_size(self):
        with pytest.raises(InvalidBatchSize):
            next(gdata.batch_iter(self.make_ds(10), 11, seed=0))
        with pytest.raises(InvalidBatchSize):
            next(gdata.batch_iter(self.make_ds(10), 0, seed=0))


class TestSyntheticDigits:
    def test_deterministic(self):
        a = gdata.synthetic_digits(50, seed=3)
        b = gdata.synthetic_digits(50, seed=3)
        np.testing.assert_array_equal(a[0], b[0])
        np.testing.assert_array_equal(a[1], b[1])

    def test_shapes_and_ranges(self):
        imgs, labels = gdata.synthetic_digits(64, seed=1, hard_fraction=0.3, label_noise=0.1)
        assert imgs.shape == (64, 28, 28) and imgs.dtype == np.uint8
        assert labels.shape == (64,)
        assert set(labels.tolist()) <= set(range(10))
