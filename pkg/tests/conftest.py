import numpy as np
import pytest

from polycap.core import EmbeddingMatrix, normalize_rows
from polycap.languages import validate_language


@pytest.fixture
def en():
    return validate_language("en")


@pytest.fixture
def es():
    return validate_language("es")


@pytest.fixture
def zh():
    return validate_language("zh")


def unit_matrix(ids, rows):
    """EmbeddingMatrix from raw float rows, normalized."""
    return normalize_rows(EmbeddingMatrix(tuple(ids), np.asarray(rows, dtype=np.float32)))


def random_unit_matrix(rng, count, dim, prefix="r"):
    rows = rng.standard_normal((count, dim)).astype(np.float32)
    ids = tuple(f"{prefix}{i:06d}" for i in range(count))
    return normalize_rows(EmbeddingMatrix(ids, rows))


def brute_force_topk(ids, rows, query, k):
    """Independent full-sort oracle: float64 scores, ties by ascending id."""
    scores = rows.astype(np.float64) @ np.asarray(query, dtype=np.float32).astype(np.float64)
    order = sorted(range(len(ids)), key=lambda i: (-scores[i], ids[i]))
    return [(ids[i], float(scores[i])) for i in order[:k]]
