import numpy as np
import pytest

from retina_codec.codec import CodecConfig, get_codec
from retina_codec.transform import build_dog_bank, compute_duals


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def bank8():
    return build_dog_bank(8)


@pytest.fixture(scope="session")
def bank16():
    return build_dog_bank(16)


@pytest.fixture(scope="session")
def duals16(bank16):
    return compute_duals(bank16)


@pytest.fixture(scope="session")
def codec32():
    return get_codec(CodecConfig.default(32))


@pytest.fixture(scope="session")
def cameraman256():
    data = pytest.importorskip("skimage.data")
    img = data.camera().astype(np.float64) / 255.0
    return img.reshape(256, 2, 256, 2).mean(axis=(1, 3))


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
