import numpy as np
import pytest
from PIL import Image


@pytest.fixture(scope="session")
def corpus(tmp_path_factory):
    """200 two-class 16x16 PNGs: bright-left versus bright-right noise.

    Class label is the image index modulo 2, written one per line to
    labels.txt in the same sorted-filename order the extractor uses. The
    zero-padded names make lexicographic order equal index order.
    """
    root = tmp_path_factory.mktemp("corpus")
    rng = np.random.default_rng(7)
    labels = []
    for i in range(200):
        label = i % 2
        arr = rng.integers(0, 60, size=(16, 16, 3))
        if label == 0:
            arr[:, :8, :] += 180
        else:
            arr[:, 8:, :] += 180
        Image.fromarray(arr.astype(np.uint8)).save(root / f"img_{i:03d}.png")
        labels.append(label)
    (root / "labels.txt").write_text("".join(f"{y}\n" for y in labels))
    return root
