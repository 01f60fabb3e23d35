import json
from pathlib import Path

import numpy as np
import pytest

from lcnambu.expr import ZERO, SampleBox, max_residual, var
from lcnambu.multivector import MultiVectorField, scalar_field, vector_field, wedge_all

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "fixtures"


def fixture_path(name):
    return FIXTURES / name


def load_fixture(name):
    return json.loads(fixture_path(name).read_text())


def rpoly(n, rng, degree=2, density=0.3):
    """Sparse random polynomial with small integer coefficients."""
    e = ZERO + int(rng.integers(-3, 4))
    for i in range(n):
        if rng.random() < 0.7:
            e = e + var(i) * int(rng.integers(-3, 4))
        if degree >= 2:
            for j in range(i, n):
                if rng.random() < density:
                    e = e + var(i) * var(j) * int(rng.integers(-3, 4))
    return e


def raffine(n, rng):
    return rpoly(n, rng, degree=1)


def rvector(n, rng, degree=1):
    return vector_field([rpoly(n, rng, degree, 0.15) for _ in range(n)])


def rdecomposable(n, m, rng, degree=1):
    if m == 0:
        return scalar_field(n, rpoly(n, rng))
    return wedge_all(*[rvector(n, rng, degree) for _ in range(m)])


def residual(obj, box=None, dim=None):
    """Max sampled |component| of a field or scalar."""
    if isinstance(obj, MultiVectorField):
        exprs = obj.components()
        dim = dim or obj.dim
    else:
        exprs = [obj]
    if not exprs:
        return 0.0
    box = box or SampleBox.cube(dim or max(e.max_index() for e in exprs) + 1)
    return max_residual(exprs, box)[0]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
