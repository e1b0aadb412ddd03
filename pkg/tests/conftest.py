import itertools

import numpy as np
import pytest

from boundarymle import Family, FitConfig, GlmModel, fit_mle

SEC2_X = np.array([10.0, 20, 30, 40, 60, 70, 80, 90])
SEC2_Y = np.array([0, 0, 0, 0, 1, 1, 1, 1])


@pytest.fixture(scope="session")
def sep_model():
    """Completely separated logistic regression: intercept + dose."""
    M = np.column_stack([np.ones(8), SEC2_X])
    return GlmModel(M=M, y=SEC2_Y, family=Family.bernoulli())


@pytest.fixture(scope="session")
def sep_fit(sep_model):
    return fit_mle(sep_model, FitConfig())


@pytest.fixture(scope="session")
def face16_model():
    """2^4 Poisson table, p = 5, with the x1 = 1 face empty.

    delta = -(x1 coefficient axis) is a direction of recession fixing
    exactly the eight x1 = 1 cells; the MLE on the complementary face is an
    ordinary interior fit.
    """
    cells = np.array(list(itertools.product([0, 1], repeat=4)), dtype=float)
    M = np.column_stack([np.ones(16), cells])
    counts = np.array([3, 5, 2, 4, 6, 1, 2, 7, 5, 3, 4, 2, 1, 6, 3, 4])
    y = np.where(cells[:, 0] == 1, 0, counts)
    return GlmModel(M=M, y=y, family=Family.poisson())


@pytest.fixture(scope="session")
def single_cell_model():
    """One Poisson cell with observed count zero; the simplest boundary case."""
    return GlmModel(M=np.array([[1.0]]), y=np.array([0]), family=Family.poisson())


def random_interior_model(rng, family_tag, n=6, p=2):
    M = rng.standard_normal((n, p))
    if family_tag == "bernoulli":
        trials = rng.integers(1, 4, size=n)
        y = rng.integers(0, trials + 1)
        # keep the data away from the boundary
        y = np.clip(y, 0, trials)
        fam = Family.bernoulli(trials=trials)
    else:
        y = rng.integers(1, 8, size=n)
        fam = Family.poisson()
    return GlmModel(M=M, y=y, family=fam)


def boundary_bernoulli_model(rng, n=8, p=3):
    """Random logistic data with a planted direction of recession.

    Half the rows are forced to the boundary consistent with a planted
    direction d (y = 0 where (M d)_i > 0, y = 1 where < 0), the rest are
    orthogonal to d with free responses.
    """
    d = rng.standard_normal(p)
    d /= np.linalg.norm(d)
    n_active = n // 2
    rows = []
    y = []
    for _ in range(n_active):
        r = rng.standard_normal(p)
        while abs(r @ d) < 0.3:
            r = rng.standard_normal(p)
        rows.append(r)
        y.append(0 if r @ d > 0 else 1)
    for _ in range(n - n_active):
        r = rng.standard_normal(p)
        r = r - (r @ d) * d
        rows.append(r)
        y.append(int(rng.integers(0, 2)))
    M = np.array(rows)
    return GlmModel(M=M, y=np.array(y), family=Family.bernoulli()), d


def boundary_poisson_table(rng):
    """2^4 Poisson table with one empty factor-level face."""
    cells = np.array(list(itertools.product([0, 1], repeat=4)), dtype=float)
    M = np.column_stack([np.ones(16), cells])
    factor = int(rng.integers(0, 4))
    level = int(rng.integers(0, 2))
    counts = rng.integers(1, 9, size=16)
    y = np.where(cells[:, factor] == level, 0, counts)
    return GlmModel(M=M, y=y, family=Family.poisson())


def write_sep_csv(path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("x,y\n")
        for xi, yi in zip(SEC2_X, SEC2_Y):
            fh.write(f"{int(xi)},{yi}\n")
    return path
