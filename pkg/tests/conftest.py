import math

import numpy as np
import pytest

from faircurves.analytic import (
    SampleSchedule,
    Superspiral,
    SuperspiralParams,
    build_schedule,
    sample_hermite,
)

CLOTHOID = SuperspiralParams(0.5, 1.0, 1.0)


@pytest.fixture(scope="session")
def clothoid():
    return Superspiral(CLOTHOID, domain=(0.0, 6.2))


@pytest.fixture(scope="session")
def paper_schedule():
    """N=16 geometric schedule from h=0.1 up to h=1."""
    return build_schedule(SampleSchedule(n_points=16, t0=0.0, h_first=0.1, h_last=1.0))


@pytest.fixture(scope="session")
def paper_table(clothoid, paper_schedule):
    return sample_hermite(clothoid, paper_schedule)


@pytest.fixture(scope="session")
def octagon_vertices():
    return np.array(
        [[math.cos(k * math.pi / 4), math.sin(k * math.pi / 4)] for k in range(8)]
    )


def random_monotone_triples(rng, count):
    """Shape triples inside the provably monotone superspiral family."""
    out = []
    for _ in range(count):
        a = rng.uniform(0.2, 1.5)
        b = rng.uniform(0.2, 1.5)
        c = max(a, b) + rng.uniform(0.1, 1.5)
        out.append((a, b, c))
    return out
