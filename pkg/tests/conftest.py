"""Shared fixtures and random-state helpers."""

import math

import numpy as np
import pytest

from moongate.datagen import generate_moon_table
from moongate.ephemeris import Ephemeris
from moongate.epochs import utc_to_seconds_past_j2000
from moongate.mee import ClassicalElements

# Reference epoch used by the junction and propagation suites.
ANCHOR_EPOCH_S = utc_to_seconds_past_j2000("2025-05-25T16:51:30")


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20250525)


@pytest.fixture(scope="session")
def table_eph() -> Ephemeris:
    """Ephemeris backed by a short model-consistent lunar table."""
    table = generate_moon_table(
        ANCHOR_EPOCH_S - 12.0 * 86400.0,
        ANCHOR_EPOCH_S + 12.0 * 86400.0,
        step_s=3600.0,
    )
    return Ephemeris(moon_table=table)


def random_elements(
    gen: np.random.Generator,
    e_max: float = 0.9,
    i_max_rad: float = math.radians(170.0),
) -> ClassicalElements:
    """Well-conditioned elliptic elements away from the retrograde singularity."""
    return ClassicalElements(
        a=float(gen.uniform(1.5, 30.0)),
        e=float(gen.uniform(0.0, e_max)),
        i_rad=float(gen.uniform(0.0, i_max_rad)),
        raan_rad=float(gen.uniform(-math.pi, math.pi)),
        argp_rad=float(gen.uniform(-math.pi, math.pi)),
        ta_rad=float(gen.uniform(-math.pi, math.pi)),
    )
