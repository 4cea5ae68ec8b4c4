"""Benchmark problem presets.

Each preset bundles a ground structure, material, load, mass bound and
default penalty; they reproduce the library's reference experiments
bit-for-bit at the input level (no randomness anywhere).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .fem import TrussModel, grid_ground_structure, heidari_ground_structure
from .loads import HarmonicLoad, harmonic_base, rotating_load, square_wave_load

E_MOD = 25000.0
DENSITY = 1.0
DEFAULT_ETA = 10.0
HEIDARI_OMEGA = 15.0


@dataclass(frozen=True)
class Preset:
    name: str
    description: str
    mass_bound: float
    eta: float
    build: Callable[[], tuple[TrussModel, HarmonicLoad]]


def heidari_model() -> TrussModel:
    return TrussModel(heidari_ground_structure(), E_MOD, DENSITY,
                      mass_matrix="lumped")


def _heidari_bottom_nodes(model: TrussModel) -> list[int]:
    gs = model.gs
    ymin = gs.nodes[:, 1].min()
    return sorted(
        (i for i in range(gs.n_nodes) if gs.nodes[i, 1] == ymin),
        key=lambda i: gs.nodes[i, 0],
    )


def heidari_outphase_load(model: TrussModel) -> HarmonicLoad:
    """Counter-rotating magnitude-1/2 forces at the bottom nodes.

    Per node the coefficient pattern is (+-i/4 on x, 1/4 on y) with the
    sign of the x part alternating along the row, so f_y = cos(w t)/2
    everywhere while f_x = -+ sin(w t)/2.
    """
    gs = model.gs
    c1 = np.zeros(gs.n_free, dtype=complex)
    for pos, node in enumerate(_heidari_bottom_nodes(model)):
        fx, fy = gs.node_free_dofs(node)
        c1[fx] = 0.25j if pos % 2 == 0 else -0.25j
        c1[fy] = 0.25
    return HarmonicLoad(HEIDARI_OMEGA, 1, {1: c1}, gs.n_free)


def heidari_inphase_loads(model: TrussModel) -> tuple[HarmonicLoad, HarmonicLoad]:
    """The two in-phase components of the rotating load, separately:
    vertical f_R(t) = cos(w t)/2 and horizontal f_I(t) = -+ sin(w t)/2."""
    full = heidari_outphase_load(model)
    c1 = full.coeff(1)
    c_R = c1.real.astype(complex)          # f_R cos component: c1 = f_R / 2
    c_I = 1j * c1.imag                     # f_I sin component: c1 = -i f_I / 2
    n = model.n_free
    return (
        HarmonicLoad(HEIDARI_OMEGA, 1, {1: c_R}, n),
        HarmonicLoad(HEIDARI_OMEGA, 1, {1: c_I}, n),
    )


def cantilever_model() -> TrussModel:
    """2 x 1 domain, 7 x 4 node grid (spacing 1/3), left edge fixed, every
    node pair connected (378 bars)."""
    nx, ny = 7, 4
    supports = [(iy * nx, "xy") for iy in range(ny)]
    gs = grid_ground_structure(nx, ny, 1.0 / 3.0, "full", supports)
    return TrussModel(gs, E_MOD, DENSITY, mass_matrix="lumped")


def cantilever_load(model: TrussModel) -> HarmonicLoad:
    """Rotating tip load at the upper-right corner: c_1 = -(i, 1)/sqrt(2)
    on the corner's (x, y) DOFs, |c_1| = 1, angular frequency 15."""
    gs = model.gs
    xmax = gs.nodes[:, 0].max()
    ymax = gs.nodes[:, 1].max()
    corner = next(
        i for i in range(gs.n_nodes)
        if gs.nodes[i, 0] == xmax and gs.nodes[i, 1] == ymax
    )
    fx, fy = gs.node_free_dofs(corner)
    c1 = np.zeros(gs.n_free, dtype=complex)
    c1[fx] = -1j / np.sqrt(2.0)
    c1[fy] = -1.0 / np.sqrt(2.0)
    return HarmonicLoad(HEIDARI_OMEGA, 1, {1: c1}, gs.n_free)


def two_rotation_load(
    model: TrussModel,
    omega1: float,
    omega2: float,
    phi1: float = np.pi / 2,
    phi2: float = -np.pi / 2,
) -> tuple[HarmonicLoad, float, int, int]:
    """Two rotating loads of magnitude 1/2 at the last two bottom nodes,
    with harmonic indices derived from the rational frequency ratio."""
    omega0, n1, n2 = harmonic_base(omega1, omega2)
    gs = model.gs
    bottom = _heidari_bottom_nodes(model)
    node1, node2 = bottom[-2], bottom[-1]
    n_harm = max(n1, n2)
    l1 = rotating_load(gs, node1, 0.5, n1, phi1, omega0, n_harmonics=n_harm)
    l2 = rotating_load(gs, node2, 0.5, n2, phi2, omega0, n_harmonics=n_harm)
    return l1 + l2, omega0, n1, n2


def multifreq_load(
    model: TrussModel, n_harmonics: int, period: float = 2.0, delay: float = 0.2
) -> HarmonicLoad:
    """Two horizontal square waves at the last two bottom nodes, the second
    delayed in time, truncated at n_harmonics."""
    gs = model.gs
    bottom = _heidari_bottom_nodes(model)
    l1 = square_wave_load(gs, bottom[-2], "x", period, n_harmonics, 0.0)
    l2 = square_wave_load(gs, bottom[-1], "x", period, n_harmonics, delay)
    return l1 + l2


def _build_heidari_outphase():
    model = heidari_model()
    return model, heidari_outphase_load(model)


def _build_heidari_fr():
    model = heidari_model()
    return model, heidari_inphase_loads(model)[0]


def _build_heidari_fi():
    model = heidari_model()
    return model, heidari_inphase_loads(model)[1]


def _build_cantilever():
    model = cantilever_model()
    return model, cantilever_load(model)


def _build_two_rotation():
    model = heidari_model()
    load, _, _, _ = two_rotation_load(model, 7.5, 15.0)
    return model, load


def _build_multifreq(n):
    def build():
        model = heidari_model()
        return model, multifreq_load(model, n)

    return build


PRESETS: dict[str, Preset] = {
    p.name: p
    for p in [
        Preset(
            "heidari-outphase",
            "21-bar truss, counter-rotating bottom loads at 15 rad/s",
            1.0, DEFAULT_ETA, _build_heidari_outphase,
        ),
        Preset(
            "heidari-inphase-fr",
            "21-bar truss, vertical cosine bottom loads only",
            1.0, DEFAULT_ETA, _build_heidari_fr,
        ),
        Preset(
            "heidari-inphase-fi",
            "21-bar truss, horizontal sine bottom loads only",
            1.0, DEFAULT_ETA, _build_heidari_fi,
        ),
        Preset(
            "cantilever",
            "fully connected 7x4 cantilever, rotating tip load",
            10.0, DEFAULT_ETA, _build_cantilever,
        ),
        Preset(
            "two-rotation",
            "21-bar truss, two rotating loads at 7.5 and 15 rad/s",
            1.0, DEFAULT_ETA, _build_two_rotation,
        ),
        Preset(
            "multifreq-n3",
            "21-bar truss, square-wave pair truncated at 3 harmonics",
            1.0, DEFAULT_ETA, _build_multifreq(3),
        ),
        Preset(
            "multifreq-n5",
            "21-bar truss, square-wave pair truncated at 5 harmonics",
            1.0, DEFAULT_ETA, _build_multifreq(5),
        ),
    ]
}


def get_preset(name: str) -> Preset:
    try:
        return PRESETS[name]
    except KeyError:
        known = ", ".join(sorted(PRESETS))
        raise KeyError(f"unknown preset {name!r}; available: {known}") from None
