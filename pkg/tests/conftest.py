import numpy as np
import pytest

from hscs.dataset_io import RgbdImage

ACCEPTANCE_LINES = []


def record(name, passed, detail=""):
    status = passed if isinstance(passed, str) else ("PASS" if passed else "FAIL")
    line = f"[{status}] {name}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def make_image(rgb, depth=None, image_id="img"):
    rgb = np.asarray(rgb, dtype=np.uint8)
    if depth is None:
        depth = np.zeros(rgb.shape[:2])
    return RgbdImage(image_id, rgb, np.asarray(depth, dtype=np.float64))


@pytest.fixture(scope="session")
def synthetic_result():
    from hscs.pipeline import detect_group
    from hscs.synthetic import make_synthetic

    import time

    scene = make_synthetic(n_images=3, size=128, rng_seed=0)
    start = time.perf_counter()
    result = detect_group(scene.group)
    return scene, result, time.perf_counter() - start
