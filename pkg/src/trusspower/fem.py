"""Ground structures and finite element matrices for planar trusses.

Nodes carry two DOFs (x, y), numbered node-major: node ``i`` owns global
DOFs ``2i`` and ``2i + 1``.  Supports are eliminated by deletion, so all
assembled matrices live on the free DOFs only.  Mass and stiffness are
linear in the per-element cross-section areas:

    K(a) = sum_e a_e * K_e,   M(a) = sum_e a_e * M_e,

with K_e rank-one (axial) and M_e the consistent truss mass per unit area.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

Supports = "list[tuple[int, str]]"  # (node index, 'x' | 'y' | 'xy')


class GroundStructure:
    """Fixed set of candidate bars connecting grid nodes.

    Parameters
    ----------
    nodes : array_like, shape (n_nodes, 2)
        Node coordinates.
    elements : sequence of (i, j)
        Bar connectivity, 0-indexed node pairs.
    supports : sequence of (node, axes)
        Constrained DOFs; axes is 'x', 'y' or 'xy'.
    """

    def __init__(self, nodes, elements, supports):
        self.nodes = np.asarray(nodes, dtype=float)
        if self.nodes.ndim != 2 or self.nodes.shape[1] != 2:
            raise ValueError("nodes must have shape (n_nodes, 2)")
        self.elements = [(int(i), int(j)) for i, j in elements]
        self.supports = [(int(n), str(ax)) for n, ax in supports]

        n_nodes = len(self.nodes)
        seen = set()
        for i, j in self.elements:
            if i == j:
                raise ValueError(f"degenerate element ({i}, {j})")
            if not (0 <= i < n_nodes and 0 <= j < n_nodes):
                raise ValueError(f"element ({i}, {j}) references missing node")
            key = (min(i, j), max(i, j))
            if key in seen:
                raise ValueError(f"duplicate element {key}")
            seen.add(key)
            if np.linalg.norm(self.nodes[j] - self.nodes[i]) <= 0.0:
                raise ValueError(f"zero-length element {key}")

        fixed = set()
        for node, axes in self.supports:
            if not 0 <= node < n_nodes:
                raise ValueError(f"support on missing node {node}")
            if axes not in ("x", "y", "xy"):
                raise ValueError(f"bad support axes {axes!r}")
            if "x" in axes:
                fixed.add(2 * node)
            if "y" in axes:
                fixed.add(2 * node + 1)
        if not fixed:
            raise ValueError(
                "no supports given: the structure has rigid-body modes"
            )
        self.fixed_dofs = frozenset(fixed)
        self.free_dofs = np.asarray(
            sorted(set(range(2 * n_nodes)) - fixed), dtype=np.int64
        )
        # global DOF -> free index, -1 when fixed
        self._free_index = -np.ones(2 * n_nodes, dtype=np.int64)
        self._free_index[self.free_dofs] = np.arange(len(self.free_dofs))

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_elems(self) -> int:
        return len(self.elements)

    @property
    def n_free(self) -> int:
        return len(self.free_dofs)

    def free_index(self, global_dof: int) -> int:
        return int(self._free_index[global_dof])

    def node_free_dofs(self, node: int) -> tuple[int, int]:
        """Free indices of the node's (x, y) DOFs; -1 where fixed."""
        return self.free_index(2 * node), self.free_index(2 * node + 1)

    def element_length(self, e: int) -> float:
        i, j = self.elements[e]
        return float(np.linalg.norm(self.nodes[j] - self.nodes[i]))

    def to_json(self) -> str:
        return json.dumps(
            {
                "nodes": self.nodes.tolist(),
                "elements": [list(e) for e in self.elements],
                "supports": [list(s) for s in self.supports],
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "GroundStructure":
        doc = json.loads(text)
        return cls(doc["nodes"], doc["elements"], doc["supports"])


def grid_ground_structure(
    nx: int,
    ny: int,
    spacing: float,
    connectivity: str = "full",
    supports: Supports = (),
) -> GroundStructure:
    """Uniform nx-by-ny node grid.

    Node numbering is row-major with row 0 at the TOP of the domain, so the
    bottom-row nodes come last.  ``connectivity='neighbors'`` joins only
    horizontally/vertically adjacent nodes (no diagonals); ``'full'`` joins
    every node pair, keeping overlapping collinear bars (distinct node pairs
    are distinct elements).
    """
    if nx < 2 or ny < 2:
        raise ValueError("grid needs nx, ny >= 2")
    if spacing <= 0:
        raise ValueError("spacing must be positive")
    nodes = [
        (ix * spacing, (ny - 1 - iy) * spacing)
        for iy in range(ny)
        for ix in range(nx)
    ]

    def nid(ix, iy):
        return iy * nx + ix

    elements: list[tuple[int, int]] = []
    if connectivity == "neighbors":
        for iy in range(ny):
            for ix in range(nx):
                if ix + 1 < nx:
                    elements.append((nid(ix, iy), nid(ix + 1, iy)))
                if iy + 1 < ny:
                    elements.append((nid(ix, iy), nid(ix, iy + 1)))
    elif connectivity == "full":
        n = nx * ny
        elements = [(i, j) for i in range(n) for j in range(i + 1, n)]
    else:
        raise ValueError(f"unknown connectivity {connectivity!r}")
    return GroundStructure(nodes, elements, supports)


def heidari_ground_structure() -> GroundStructure:
    """21-element, 12-node benchmark truss.

    A 4-wide, 3-tall node grid with unit spacing; all horizontal and
    vertical neighbor bars plus four sqrt(2) diagonals bracing the two
    middle cells in an X pattern.  The four top nodes are fully fixed.
    The diagonal layout was pinned by matching the uniform-design spectrum
    (20.244, 41.838, 47.643 rad/s with E = 25000, rho = 1, unit total mass).
    """
    nx, ny = 4, 3
    nodes = [
        (ix * 1.0, (ny - 1 - iy) * 1.0) for iy in range(ny) for ix in range(nx)
    ]

    def nid(ix, iy):
        return iy * nx + ix

    elements: list[tuple[int, int]] = []
    for iy in range(ny):
        for ix in range(nx):
            if ix + 1 < nx:
                elements.append((nid(ix, iy), nid(ix + 1, iy)))
            if iy + 1 < ny:
                elements.append((nid(ix, iy), nid(ix, iy + 1)))
    # X braces in the middle column of cells (between ix = 1 and ix = 2)
    for iy in range(ny - 1):
        elements.append((nid(1, iy), nid(2, iy + 1)))
        elements.append((nid(2, iy), nid(1, iy + 1)))
    supports = [(nid(ix, 0), "xy") for ix in range(nx)]
    return GroundStructure(nodes, elements, supports)


@dataclass(frozen=True)
class ElementData:
    """Per-unit-area matrices of one bar, restricted to free DOFs.

    ``dofs`` lists the element's free-DOF indices (fixed DOFs dropped);
    ``k_local`` and ``m_local`` are the corresponding square blocks of the
    stiffness and consistent-mass seeds.  ``weight`` is rho * length, the
    mass contributed per unit cross-section area.
    """

    length: float
    weight: float
    dofs: np.ndarray
    k_local: np.ndarray
    m_local: np.ndarray

    def k_full(self, n_free: int) -> np.ndarray:
        K = np.zeros((n_free, n_free))
        K[np.ix_(self.dofs, self.dofs)] = self.k_local
        return K

    def m_full(self, n_free: int) -> np.ndarray:
        M = np.zeros((n_free, n_free))
        M[np.ix_(self.dofs, self.dofs)] = self.m_local
        return M


def element_matrices(
    gs: GroundStructure,
    E: float,
    rho: float,
    mass_matrix: str = "consistent",
) -> list[ElementData]:
    """Stiffness/mass seeds K_e, M_e (per unit area) for every bar.

    K_e = (E / L) b b^T with b the direction-cosine incidence vector;
    M_e is the consistent mass rho*L/6 * [[2I, I], [I, 2I]] in global
    coordinates ('lumped' replaces it with rho*L/2 per node).  Support
    rows/columns are deleted.
    """
    if E <= 0 or rho <= 0:
        raise ValueError("E and rho must be positive")
    if mass_matrix not in ("consistent", "lumped"):
        raise ValueError(f"unknown mass matrix {mass_matrix!r}")
    out = []
    for (i, j) in gs.elements:
        d = gs.nodes[j] - gs.nodes[i]
        L = float(np.linalg.norm(d))
        if L <= 0:
            raise ValueError(f"zero-length element ({i}, {j})")
        cx, cy = d / L
        b = np.array([-cx, -cy, cx, cy])
        k4 = (E / L) * np.outer(b, b)
        if mass_matrix == "consistent":
            m4 = (rho * L / 6.0) * np.array(
                [
                    [2.0, 0.0, 1.0, 0.0],
                    [0.0, 2.0, 0.0, 1.0],
                    [1.0, 0.0, 2.0, 0.0],
                    [0.0, 1.0, 0.0, 2.0],
                ]
            )
        else:
            m4 = (rho * L / 2.0) * np.eye(4)
        gdofs = [2 * i, 2 * i + 1, 2 * j, 2 * j + 1]
        keep = [a for a, g in enumerate(gdofs) if gs.free_index(g) >= 0]
        free = np.asarray([gs.free_index(gdofs[a]) for a in keep], dtype=np.int64)
        out.append(
            ElementData(
                length=L,
                weight=rho * L,
                dofs=free,
                k_local=k4[np.ix_(keep, keep)],
                m_local=m4[np.ix_(keep, keep)],
            )
        )
    return out


def assemble(
    gs: GroundStructure, elems: list[ElementData], a: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Assembled (M(a), K(a)) on the free DOFs."""
    a = np.asarray(a, dtype=float)
    if a.shape != (len(elems),):
        raise ValueError(f"need {len(elems)} areas, got shape {a.shape}")
    n = gs.n_free
    M = np.zeros((n, n))
    K = np.zeros((n, n))
    for ae, el in zip(a, elems):
        if ae == 0.0:
            continue
        ix = np.ix_(el.dofs, el.dofs)
        K[ix] += ae * el.k_local
        M[ix] += ae * el.m_local
    return M, K


def dynamic_stiffness(
    gs: GroundStructure, elems: list[ElementData], a: np.ndarray, lam: float
) -> np.ndarray:
    """K_lambda(a) = K(a) - lambda^2 M(a)."""
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    M, K = assemble(gs, elems, a)
    return K - lam**2 * M


class TrussModel:
    """Ground structure + material, with cached element seeds.

    Bundles everything the SDP builders and the analysis oracles need:
    geometry, per-element stiffness/mass seeds and the element weight
    vector q (q @ a is the structural mass of design a).
    """

    def __init__(
        self,
        gs: GroundStructure,
        E: float,
        rho: float,
        mass_matrix: str = "consistent",
    ):
        self.gs = gs
        self.E = float(E)
        self.rho = float(rho)
        self.mass_matrix = mass_matrix
        self.elems = element_matrices(gs, E, rho, mass_matrix)
        self.weights = np.asarray([el.weight for el in self.elems])

    @property
    def n_free(self) -> int:
        return self.gs.n_free

    @property
    def n_elems(self) -> int:
        return self.gs.n_elems

    def assemble(self, a) -> tuple[np.ndarray, np.ndarray]:
        return assemble(self.gs, self.elems, a)

    def dynamic_stiffness(self, a, lam: float) -> np.ndarray:
        return dynamic_stiffness(self.gs, self.elems, a, lam)

    def dynamic_seed(self, e: int, lam: float) -> np.ndarray:
        """Element contribution to K_lambda per unit area (local block)."""
        el = self.elems[e]
        return el.k_local - lam**2 * el.m_local

    def mass(self, a) -> float:
        return float(self.weights @ np.asarray(a, dtype=float))

    def uniform_design(self, total_mass: float) -> np.ndarray:
        """Equal areas scaled so the structural mass equals total_mass."""
        return np.full(self.n_elems, total_mass / self.weights.sum())

    def to_json(self) -> str:
        return json.dumps(
            {
                "ground_structure": json.loads(self.gs.to_json()),
                "E": self.E,
                "rho": self.rho,
                "mass_matrix": self.mass_matrix,
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "TrussModel":
        doc = json.loads(text)
        gs_doc = doc["ground_structure"]
        gs = GroundStructure(
            gs_doc["nodes"], gs_doc["elements"], gs_doc["supports"]
        )
        return cls(gs, doc["E"], doc["rho"], doc.get("mass_matrix", "consistent"))
