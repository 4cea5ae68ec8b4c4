"""Solver-agnostic conic problem container.

A :class:`ConicProblem` collects scalar decision variables, linear equality
and inequality constraints, and LMI blocks (affine symmetric-matrix-valued
maps required to be PSD).  Backends translate this form into their native
data layout; the JSON interchange format lets alternate solvers be compared
bit-exactly on the same problem data.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp


@dataclass
class PsdBlock:
    """Affine map S(x) = C + sum_i x_i * A_i, constrained S(x) >= 0 (PSD).

    Entries are stored in triplet form over the upper triangle only
    (row <= col); the matrix is symmetric by construction.  ``var_idx == -1``
    marks constant entries (part of C).
    """

    name: str
    dim: int
    var_idx: np.ndarray
    rows: np.ndarray
    cols: np.ndarray
    vals: np.ndarray

    def constant(self) -> np.ndarray:
        """Dense constant term C."""
        C = np.zeros((self.dim, self.dim))
        mask = self.var_idx < 0
        for r, c, v in zip(self.rows[mask], self.cols[mask], self.vals[mask]):
            C[r, c] += v
            if r != c:
                C[c, r] += v
        return C

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        """Dense S(x) for a given variable vector."""
        S = np.zeros((self.dim, self.dim))
        coef = np.where(self.var_idx >= 0, x[np.maximum(self.var_idx, 0)], 1.0)
        np.add.at(S, (self.rows, self.cols), coef * self.vals)
        off = self.rows != self.cols
        np.add.at(S, (self.cols[off], self.rows[off]), (coef * self.vals)[off])
        return S


@dataclass
class ConicProblem:
    """Conic program: min c@x + const subject to

    A_eq @ x == b_eq,  A_ineq @ x <= b_ineq,  x[i] >= 0 for i in nonneg_vars,
    and S_b(x) >= 0 (PSD) for every LMI block.
    """

    n_vars: int
    obj_c: np.ndarray
    obj_const: float
    eq_A: sp.csr_matrix
    eq_b: np.ndarray
    ineq_A: sp.csr_matrix
    ineq_b: np.ndarray
    nonneg_vars: np.ndarray
    psd_blocks: list[PsdBlock]
    metadata: dict = field(default_factory=dict)

    @property
    def n_eq(self) -> int:
        return self.eq_A.shape[0]

    @property
    def n_ineq(self) -> int:
        return self.ineq_A.shape[0]

    def equality_residual(self, x: np.ndarray) -> np.ndarray:
        return self.eq_A @ x - self.eq_b

    def max_violation(self, x: np.ndarray) -> float:
        """Worst constraint violation at x (for diagnostics and tests)."""
        worst = 0.0
        if self.n_eq:
            worst = max(worst, float(np.abs(self.equality_residual(x)).max()))
        if self.n_ineq:
            worst = max(worst, float(np.maximum(self.ineq_A @ x - self.ineq_b, 0.0).max()))
        if len(self.nonneg_vars):
            worst = max(worst, float(np.maximum(-x[self.nonneg_vars], 0.0).max()))
        for blk in self.psd_blocks:
            w = np.linalg.eigvalsh(blk.evaluate(x))
            worst = max(worst, float(max(-w[0], 0.0)))
        return worst

    def to_json(self) -> str:
        def tri(mat: sp.csr_matrix) -> dict:
            coo = mat.tocoo()
            return {
                "shape": list(coo.shape),
                "rows": coo.row.tolist(),
                "cols": coo.col.tolist(),
                "vals": coo.data.tolist(),
            }

        doc = {
            "n_vars": self.n_vars,
            "objective": {"c": self.obj_c.tolist(), "const": self.obj_const},
            "equalities": {**tri(self.eq_A), "b": self.eq_b.tolist()},
            "inequalities": {**tri(self.ineq_A), "b": self.ineq_b.tolist()},
            "nonneg_vars": self.nonneg_vars.tolist(),
            "psd_blocks": [
                {
                    "name": blk.name,
                    "dim": blk.dim,
                    "var_idx": blk.var_idx.tolist(),
                    "rows": blk.rows.tolist(),
                    "cols": blk.cols.tolist(),
                    "vals": blk.vals.tolist(),
                }
                for blk in self.psd_blocks
            ],
            "metadata": self.metadata,
        }
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text: str) -> "ConicProblem":
        doc = json.loads(text)

        def mat(d: dict) -> sp.csr_matrix:
            return sp.csr_matrix(
                (d["vals"], (d["rows"], d["cols"])), shape=tuple(d["shape"])
            )

        blocks = [
            PsdBlock(
                name=b["name"],
                dim=b["dim"],
                var_idx=np.asarray(b["var_idx"], dtype=np.int64),
                rows=np.asarray(b["rows"], dtype=np.int64),
                cols=np.asarray(b["cols"], dtype=np.int64),
                vals=np.asarray(b["vals"], dtype=float),
            )
            for b in doc["psd_blocks"]
        ]
        return cls(
            n_vars=doc["n_vars"],
            obj_c=np.asarray(doc["objective"]["c"], dtype=float),
            obj_const=float(doc["objective"]["const"]),
            eq_A=mat(doc["equalities"]),
            eq_b=np.asarray(doc["equalities"]["b"], dtype=float),
            ineq_A=mat(doc["inequalities"]),
            ineq_b=np.asarray(doc["inequalities"]["b"], dtype=float),
            nonneg_vars=np.asarray(doc["nonneg_vars"], dtype=np.int64),
            psd_blocks=blocks,
            metadata=doc["metadata"],
        )


class _PsdBlockBuilder:
    def __init__(self, name: str, dim: int):
        self.name = name
        self.dim = dim
        self._var: list[int] = []
        self._row: list[int] = []
        self._col: list[int] = []
        self._val: list[float] = []

    def add(self, row: int, col: int, val: float, var: int = -1) -> None:
        """Add val (times x[var] if var >= 0) to the symmetric entry (row, col).

        Entries are canonicalized to the upper triangle; adding (i, j) is the
        same as adding (j, i).
        """
        if val == 0.0:
            return
        if row > col:
            row, col = col, row
        self._var.append(var)
        self._row.append(row)
        self._col.append(col)
        self._val.append(val)

    def finish(self) -> PsdBlock:
        var = np.asarray(self._var, dtype=np.int64)
        row = np.asarray(self._row, dtype=np.int64)
        col = np.asarray(self._col, dtype=np.int64)
        val = np.asarray(self._val, dtype=float)
        # merge duplicate (var, row, col) triplets
        order = np.lexsort((col, row, var))
        var, row, col, val = var[order], row[order], col[order], val[order]
        if len(var):
            keep = np.ones(len(var), dtype=bool)
            keep[1:] = (var[1:] != var[:-1]) | (row[1:] != row[:-1]) | (col[1:] != col[:-1])
            idx = np.cumsum(keep) - 1
            merged = np.zeros(keep.sum())
            np.add.at(merged, idx, val)
            var, row, col, val = var[keep], row[keep], col[keep], merged
            nz = val != 0.0
            var, row, col, val = var[nz], row[nz], col[nz], val[nz]
        return PsdBlock(self.name, self.dim, var, row, col, val)


class HermitianVars:
    """Scalar unknowns parametrizing a Hermitian d x d matrix H.

    Layout (contiguous, deterministic, recoverable from (start, dim) alone):
    Re H_ij for i <= j in row-major order, then Im H_ij for i < j in
    row-major order.  The PSD constraint H >= 0 is imposed through the real
    doubling [[Re H, -Im H], [Im H, Re H]] >= 0.
    """

    def __init__(self, builder: "ConicProblemBuilder", dim: int):
        self.dim = dim
        self.n_re = dim * (dim + 1) // 2
        self.n_im = dim * (dim - 1) // 2
        self.start = builder.n_vars
        builder.add_vars(self.n_re + self.n_im)

    def re_index(self, i: int, j: int) -> int:
        if i > j:
            i, j = j, i
        # row-major upper triangle offset
        return self.start + i * self.dim - i * (i + 1) // 2 + j

    def im_index(self, i: int, j: int) -> int:
        if not i < j:
            raise ValueError("Im entries exist only for i < j")
        return (
            self.start
            + self.n_re
            + i * (self.dim - 1) - i * (i + 1) // 2 + (j - 1)
        )

    def entry(self, i: int, j: int) -> list[tuple[int, complex]]:
        """H_ij as a complex linear expression [(var, coeff), ...]."""
        if i == j:
            return [(self.re_index(i, i), 1.0 + 0j)]
        if i < j:
            return [(self.re_index(i, j), 1.0 + 0j), (self.im_index(i, j), 1j)]
        return [(self.re_index(j, i), 1.0 + 0j), (self.im_index(j, i), -1j)]

    def diag_indices(self) -> list[int]:
        return [self.re_index(i, i) for i in range(self.dim)]

    def add_embedded(self, blk, offset: int, total: int) -> None:
        """Place H's variable entries into the 2*total real embedding of a
        complex matrix, with H at rows/cols offset..offset+dim."""
        for i in range(self.dim):
            for j in range(i, self.dim):
                r, c = offset + i, offset + j
                v = self.re_index(i, j)
                blk.add(r, c, 1.0, var=v)
                blk.add(total + r, total + c, 1.0, var=v)
                if i < j:
                    w = self.im_index(i, j)
                    # upper-right block holds -Im H
                    blk.add(r, total + c, -1.0, var=w)
                    blk.add(c, total + r, 1.0, var=w)

    def extract(self, x: np.ndarray) -> np.ndarray:
        H = np.zeros((self.dim, self.dim), dtype=complex)
        for i in range(self.dim):
            for j in range(i, self.dim):
                val = x[self.re_index(i, j)]
                if i != j:
                    val = val + 1j * x[self.im_index(i, j)]
                H[i, j] = val
                H[j, i] = np.conj(val)
        return H

    def layout(self) -> dict:
        return {"start": self.start, "dim": self.dim}

    @classmethod
    def peek(cls, layout: dict) -> "HermitianVars":
        """Rebuild an extractor from stored layout metadata."""
        obj = cls.__new__(cls)
        obj.dim = layout["dim"]
        obj.n_re = obj.dim * (obj.dim + 1) // 2
        obj.n_im = obj.dim * (obj.dim - 1) // 2
        obj.start = layout["start"]
        return obj


def add_complex_equality(builder: "ConicProblemBuilder", terms, rhs: complex) -> None:
    """Equality sum(coeff * x[var]) == rhs with complex coefficients.

    Emits a row for the real part and, when any imaginary content exists,
    one for the imaginary part (variables are real scalars).
    """
    idx = [t[0] for t in terms]
    coeffs = np.asarray([t[1] for t in terms], dtype=complex)
    builder.add_equality(idx, coeffs.real, np.real(rhs))
    if np.any(coeffs.imag != 0.0) or np.imag(rhs) != 0.0:
        builder.add_equality(idx, coeffs.imag, np.imag(rhs))


class ConicProblemBuilder:
    """Incremental construction of a :class:`ConicProblem`."""

    def __init__(self):
        self.n_vars = 0
        self._nonneg: list[int] = []
        self._eq_rows: list[tuple[list[int], list[float], float]] = []
        self._ineq_rows: list[tuple[list[int], list[float], float]] = []
        self._blocks: list[_PsdBlockBuilder] = []
        self._obj: dict[int, float] = {}
        self._obj_const = 0.0

    def add_vars(self, count: int, nonneg: bool = False) -> np.ndarray:
        idx = np.arange(self.n_vars, self.n_vars + count)
        self.n_vars += count
        if nonneg:
            self._nonneg.extend(idx.tolist())
        return idx

    def add_equality(self, idx, coeffs, rhs: float) -> int:
        self._eq_rows.append((list(idx), list(coeffs), float(rhs)))
        return len(self._eq_rows) - 1

    def add_inequality(self, idx, coeffs, rhs: float) -> int:
        """Row sum(coeffs * x[idx]) <= rhs."""
        self._ineq_rows.append((list(idx), list(coeffs), float(rhs)))
        return len(self._ineq_rows) - 1

    def add_psd_block(self, name: str, dim: int) -> _PsdBlockBuilder:
        blk = _PsdBlockBuilder(name, dim)
        self._blocks.append(blk)
        return blk

    def add_objective(self, idx, coeffs) -> None:
        for i, c in zip(idx, coeffs):
            self._obj[int(i)] = self._obj.get(int(i), 0.0) + float(c)

    def add_objective_const(self, const: float) -> None:
        self._obj_const += const

    def build(self, metadata: dict | None = None) -> ConicProblem:
        def rows_to_csr(rows) -> tuple[sp.csr_matrix, np.ndarray]:
            ii, jj, vv, b = [], [], [], []
            for r, (idx, coeffs, rhs) in enumerate(rows):
                ii.extend([r] * len(idx))
                jj.extend(idx)
                vv.extend(coeffs)
                b.append(rhs)
            A = sp.csr_matrix((vv, (ii, jj)), shape=(len(rows), self.n_vars))
            A.sum_duplicates()
            return A, np.asarray(b, dtype=float)

        eq_A, eq_b = rows_to_csr(self._eq_rows)
        ineq_A, ineq_b = rows_to_csr(self._ineq_rows)
        c = np.zeros(self.n_vars)
        for i, v in self._obj.items():
            c[i] = v
        return ConicProblem(
            n_vars=self.n_vars,
            obj_c=c,
            obj_const=self._obj_const,
            eq_A=eq_A,
            eq_b=eq_b,
            ineq_A=ineq_A,
            ineq_b=ineq_b,
            nonneg_vars=np.asarray(sorted(set(self._nonneg)), dtype=np.int64),
            psd_blocks=[blk.finish() for blk in self._blocks],
            metadata=metadata or {},
        )
