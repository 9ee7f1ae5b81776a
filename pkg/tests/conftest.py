import numpy as np
import pytest

from geodp import data as gdata

import _acceptance_report


def pytest_terminal_summary(terminalreporter):
    lines = _acceptance_report.lines()
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)


class FixedNoise:
    """Noise stub: hands out preset standard_normal draws in order."""

    def __init__(self, *draws):
        self.draws = [np.asarray(d, dtype=np.float64) for d in draws]
        self.calls = 0

    def standard_normal(self, size=None):
        draw = self.draws[self.calls]
        self.calls += 1
        want = size if size is not None else draw.shape
        assert np.prod(draw.shape) == np.prod(want), f"stub draw {draw.shape} != requested {want}"
        return draw.reshape(want).copy()


@pytest.fixture
def fixed_noise():
    return FixedNoise


def dataset_pair(n_train, n_test, seed, hard_fraction=0.0):
    imgs, labels = gdata.synthetic_digits(n_train + n_test, seed, hard_fraction=hard_fraction)
    feats = imgs.reshape(imgs.shape[0], -1) / 255.0
    train = gdata.LabeledDataset(feats[:n_train], labels[:n_train], 10)
    test = gdata.LabeledDataset(feats[n_train:], labels[n_train:], 10)
    return train, test


@pytest.fixture(scope="session")
def small_dataset():
    """600-example easy split for fast functional tests."""
    return dataset_pair(500, 100, seed=123)


@pytest.fixture(scope="session")
def easy_dataset():
    """10k/2k split matching the desk-scale baseline settings."""
    return dataset_pair(10000, 2000, seed=7)


@pytest.fixture(scope="session")
def idx_files(tmp_path_factory):
    """A small IDX image/label pair on disk."""
    root = tmp_path_factory.mktemp("idx")
    imgs, labels = gdata.synthetic_digits(120, seed=5)
    images_path = root / "train-images.idx"
    labels_path = root / "train-labels.idx"
    gdata.save_idx_images(images_path, imgs)
    gdata.save_idx_labels(labels_path, labels)
    return images_path, labels_path
