import numpy as np
import pytest

from trusspower.fem import GroundStructure, TrussModel


@pytest.fixture
def single_bar_model():
    """One vertical unit bar hanging from a fixed node."""
    gs = GroundStructure([[0.0, 0.0], [0.0, 1.0]], [(0, 1)], [(1, "xy")])
    return TrussModel(gs, 25000.0, 1.0)


@pytest.fixture
def two_bar_model():
    """Two vertical bars in series, fixed at the top."""
    gs = GroundStructure(
        [[0.0, 0.0], [0.0, 1.0], [0.0, 2.0]], [(0, 1), (1, 2)], [(2, "xy")]
    )
    return TrussModel(gs, 25000.0, 1.0)


@pytest.fixture
def box_model():
    """Fully connected 2x2 grid with the top edge fixed (stable, 6 bars)."""
    from trusspower.fem import grid_ground_structure

    gs = grid_ground_structure(2, 2, 1.0, "full", [(0, "xy"), (1, "xy")])
    return TrussModel(gs, 25000.0, 1.0)


def random_box_load(model, seed, n_harmonics=2, omega0=15.0):
    from trusspower.loads import HarmonicLoad

    rng = np.random.default_rng(seed)
    n = model.n_free
    coeffs = {
        k: (rng.normal(size=n) + 1j * rng.normal(size=n)) / k
        for k in range(1, n_harmonics + 1)
    }
    return HarmonicLoad(omega0, n_harmonics, coeffs, n)
