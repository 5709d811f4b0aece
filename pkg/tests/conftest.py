import io

import numpy as np
import pytest

from groupanon import (
    RedistributionPlan,
    build_reconstruction_matrix,
    db2_filter,
    extend_to_even,
    fixed_border_indices,
    load_microfile,
    max_level,
    write_microfile,
)
from groupanon.fixture import EMPLOYED, SCIENTISTS, write_census_fixture
from groupanon.microdata import Microfile


@pytest.fixture(scope="session")
def db2():
    return db2_filter()


@pytest.fixture(scope="session")
def census_ratios():
    return np.array(SCIENTISTS, dtype=float) / np.array(EMPLOYED, dtype=float)


@pytest.fixture(scope="session")
def census_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("fixture") / "census.csv"
    write_census_fixture(path)
    return path


@pytest.fixture(scope="session")
def census_microfile(census_file):
    return load_microfile(census_file)


def make_microfile(rows, attributes=("REG", "JOB", "SEX")):
    return Microfile(list(attributes), [tuple(r) for r in rows])


def microfile_text(mf, delimiter=","):
    buffer = io.StringIO()
    write_microfile(mf, buffer, delimiter=delimiter)
    return buffer.getvalue()


def random_redistribution_case(rng, filters):
    """A random positive signal plus a plan that is feasible by construction.

    Manual plans draw free coefficient values directly; solver plans draw a
    realizable coefficient vector first and read the target values off it,
    so the least-squares system is always consistent.
    """
    from groupanon import analyze

    n = int(rng.integers(5, 65))
    c = rng.uniform(1e-3, 1.0, n)
    direction = "left" if rng.random() < 0.5 else "right"
    extended, meta = extend_to_even(c, direction)
    k = int(rng.integers(1, min(3, max_level(meta.extended_length)) + 1))
    matrix = build_reconstruction_matrix(filters, meta.extended_length, k)
    dec = analyze(extended, filters, k, meta=meta)
    fixed = fixed_border_indices(matrix, meta)
    free = sorted(set(range(1, matrix.m + 1)) - fixed)
    if not free:
        plan = RedistributionPlan(
            strategy="manual", fixed_indices=frozenset(range(1, matrix.m + 1)), floor=2.0
        )
        return c, plan, k, direction
    if rng.random() < 0.5:
        free_values = {i: float(rng.uniform(-5.0, 5.0)) for i in free}
        plan = RedistributionPlan(
            strategy="manual", fixed_indices=fixed, free_values=free_values, floor=2.0
        )
    else:
        realizable = dec.approx.copy()
        realizable[[i - 1 for i in free]] = rng.uniform(-5.0, 5.0, len(free))
        synthesized = matrix.entries @ realizable
        count = int(rng.integers(1, min(3, len(free)) + 1))
        positions = rng.choice(matrix.n, size=count, replace=False) + 1
        targets = tuple((int(p), float(synthesized[p - 1])) for p in positions)
        plan = RedistributionPlan(
            strategy="alleged_extrema", fixed_indices=fixed, targets=targets, floor=2.0
        )
    return c, plan, k, direction
