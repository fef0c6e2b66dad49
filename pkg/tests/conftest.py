import numpy as np
import pytest

from sketchtrie import SketchDataset, SketchParams, generate, SyntheticSpec

LETTERS = "abcdefghijklmnop"

# The running example used throughout the structural tests: eleven 2-bit
# sketches of length 5, ids 1..11 in listed order.
CORPUS = [
    "baabb", "aaaaa", "baaaa", "caaca", "caacc", "aaaaa",
    "caacc", "ddccc", "abaab", "bcbcb", "ddddd",
]


def encode(text):
    """Letters to 0-based symbols: a=0, b=1, ..."""
    return bytes(LETTERS.index(c) for c in text)


def corpus_dataset():
    rows = np.array([list(encode(s)) for s in CORPUS], dtype=np.uint8)
    return SketchDataset(SketchParams(2, 5), rows)


@pytest.fixture(scope="session")
def fig_dataset():
    return corpus_dataset()


def brute_force_ids(data, q, tau):
    """Independent ground truth: plain horizontal comparison in numpy.

    Shares no code with the package kernels or indexes.
    """
    qarr = np.frombuffer(bytes(bytearray(q)), dtype=np.uint8)
    dist = (data != qarr).sum(axis=1)
    return (np.flatnonzero(dist <= tau) + 1).tolist()


def make_dataset(b, L, n, kind="uniform", seed=0):
    params = SketchParams(b, L)
    if kind == "uniform":
        return generate(SyntheticSpec("uniform", n, params, seed=seed))
    clusters = max(1, n // 20)
    return generate(
        SyntheticSpec("planted", n, params, seed=seed, clusters=clusters,
                      radius=min(3, L))
    )
