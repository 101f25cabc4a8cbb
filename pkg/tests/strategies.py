"""Hypothesis strategies for barrier problems."""

import numpy as np
from hypothesis import strategies as st

from domain.models import Direction, TimeGrid
from domain.transforms import default_icicles


@st.composite
def time_grids(draw, max_steps: int = 4):
    n = draw(st.integers(min_value=1, max_value=max_steps))
    steps = draw(st.lists(st.floats(min_value=0.02, max_value=0.5), min_size=n, max_size=n))
    times = [0.0]
    for dt in steps:
        times.append(times[-1] + dt)
    return TimeGrid(times=tuple(times))


@st.composite
def up_barrier_problems(draw, max_steps: int = 4, partial: bool = True):
    """(mu, sigma, x, m, grid) with barrier-implied icicles, so the reflection preconditions hold."""
    grid = draw(time_grids(max_steps=max_steps))
    mu = draw(st.floats(min_value=-0.2, max_value=0.2))
    sigma = draw(st.floats(min_value=0.1, max_value=0.5))
    steps = list(range(1, grid.n + 1))
    if partial:
        chosen = draw(st.lists(st.sampled_from(steps), min_size=1, max_size=grid.n, unique=True))
    else:
        chosen = steps
    m = {i: draw(st.floats(min_value=0.01, max_value=0.4)) for i in sorted(chosen)}
    x = default_icicles(m, grid.n, Direction.UP)
    return mu, sigma, x, m, grid


@st.composite
def correlation_matrices(draw, n: int):
    """Well-conditioned correlation matrices: A A^T + I/10 scaled to a unit diagonal."""
    entries = draw(st.lists(st.floats(min_value=-1.0, max_value=1.0), min_size=n * n, max_size=n * n))
    a = np.asarray(entries).reshape(n, n)
    cov = a @ a.T + 0.1 * np.eye(n)
    scale = np.sqrt(np.diag(cov))
    corr = cov / np.outer(scale, scale)
    corr = 0.5 * (corr + corr.T)
    np.fill_diagonal(corr, 1.0)
    return corr


def orthant_limits(n: int):
    return st.lists(st.floats(min_value=-1.5, max_value=2.0), min_size=n, max_size=n).map(np.asarray)
