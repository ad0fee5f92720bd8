"""Exact cohomology of cellular sheaves on finite cell complexes.

Cochains are direct sums of stalks over cells of a fixed dimension; the
coboundary sends a cell's stalk into each coface's stalk through the signed
restriction matrix.  Restricting to a locally closed set of cells keeps the
ambient coboundary on those coordinates, which computes the cohomology of
the sheaf extended by zero off the set.  Ranks are exact: bitwise Gaussian
elimination over F2, Fraction elimination over Q.

Interval modules (finite sums of shifted constant sheaves on intervals of
the line) get their cohomology in closed form, cross-checked against the
cellular computation on line discretizations.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Hashable, Iterable

CellId = Hashable
Matrix = tuple[tuple[int, ...], ...]


class SheafValidationError(ValueError):
    """Structural inconsistency in a complex, sheaf, or cell set."""


# ---------------------------------------------------------------------------
# exact rank computations

def rank_f2(rows: list[int]) -> int:
    """GF(2) rank of a matrix given as bitmask rows."""
    rank = 0
    pivots: list[int] = []
    for row in rows:
        for p in pivots:
            low = p & -p
            if row & low:
                row ^= p
        if row:
            pivots.append(row)
            rank += 1
    return rank


def rank_rational(rows: list[list[Fraction]]) -> int:
    """Exact rank over Q by fraction-free-ish Gaussian elimination."""
    rows = [list(r) for r in rows if any(r)]
    rank = 0
    col_count = len(rows[0]) if rows else 0
    pivot_col = 0
    r = 0
    while r < len(rows) and pivot_col < col_count:
        pivot_row = next((i for i in range(r, len(rows)) if rows[i][pivot_col] != 0), None)
        if pivot_row is None:
            pivot_col += 1
            continue
        rows[r], rows[pivot_row] = rows[pivot_row], rows[r]
        pv = rows[r][pivot_col]
        for i in range(r + 1, len(rows)):
            if rows[i][pivot_col] != 0:
                factor = rows[i][pivot_col] / pv
                rows[i] = [a - factor * b for a, b in zip(rows[i], rows[r])]
        r += 1
        rank += 1
        pivot_col += 1
    return rank


def _matrix_rank(dense: list[list[int]], field_name: str) -> int:
    if not dense or not dense[0]:
        return 0
    if field_name == "F2":
        rows = []
        for row in dense:
            bits = 0
            for j, v in enumerate(row):
                if v % 2:
                    bits |= 1 << j
            rows.append(bits)
        return rank_f2(rows)
    return rank_rational([[Fraction(v) for v in row] for row in dense])


def normalize_field(field_name: str) -> str:
    key = field_name.strip().lower()
    if key in ("f2", "gf2", "gf(2)", "z2", "2"):
        return "F2"
    if key in ("q", "rational", "rationals", "qq"):
        return "Q"
    raise ValueError(f"unknown coefficient field {field_name!r}")


# ---------------------------------------------------------------------------
# complexes

@dataclass(frozen=True)
class Incidence:
    cell: CellId
    face: CellId
    sign: int


@dataclass(frozen=True)
class CellComplex:
    """Finite cell complex: cell dimensions plus signed codim-1 incidences.

    The same (cell, face) pair may appear in several incidence entries (as
    on a circle built from one vertex and one edge); coboundary entries sum.
    Optional geometric tags attach a coordinate vector to cells.
    """

    cells: dict[CellId, int]
    incidences: tuple[Incidence, ...]
    geom: dict[CellId, tuple[float, ...]] | None = None

    def __post_init__(self):
        object.__setattr__(self, "incidences", tuple(self.incidences))
        for inc in self.incidences:
            if inc.cell not in self.cells:
                raise SheafValidationError(f"incidence references unknown cell {inc.cell!r}")
            if inc.face not in self.cells:
                raise SheafValidationError(f"face {inc.face!r} of {inc.cell!r} is missing")
            if self.cells[inc.face] != self.cells[inc.cell] - 1:
                raise SheafValidationError(
                    f"face {inc.face!r} of {inc.cell!r} must drop dimension by one")
        self._check_boundary_squares()

    def _check_boundary_squares(self) -> None:
        # net signed composition face-of-face must vanish over Z
        paths: dict[tuple[CellId, CellId], int] = {}
        faces = self.faces_of_map()
        for cell in self.cells:
            for mid, s1 in faces.get(cell, ()):
                for bot, s2 in faces.get(mid, ()):
                    key = (cell, bot)
                    paths[key] = paths.get(key, 0) + s1 * s2
        bad = {k: v for k, v in paths.items() if v != 0}
        if bad:
            raise SheafValidationError(f"signed incidence does not square to zero: {bad}")

    def faces_of_map(self) -> dict[CellId, list[tuple[CellId, int]]]:
        out: dict[CellId, list[tuple[CellId, int]]] = {}
        for inc in self.incidences:
            out.setdefault(inc.cell, []).append((inc.face, inc.sign))
        return out

    @property
    def dimension(self) -> int:
        return max(self.cells.values())

    def cells_of_dim(self, d: int) -> list[CellId]:
        return sorted((c for c, dd in self.cells.items() if dd == d), key=repr)

    def strict_descendants(self, start: Iterable[CellId]) -> set[CellId]:
        """Cells strictly below the given ones in the face poset."""
        faces = self.faces_of_map()
        seen: set[CellId] = set()
        stack = [f for c in start for f, _ in faces.get(c, ())]
        while stack:
            c = stack.pop()
            if c in seen:
                continue
            seen.add(c)
            stack.extend(f for f, _ in faces.get(c, ()))
        return seen

    def strict_ancestors(self, start: Iterable[CellId]) -> set[CellId]:
        cofaces: dict[CellId, list[CellId]] = {}
        for inc in self.incidences:
            cofaces.setdefault(inc.face, []).append(inc.cell)
        seen: set[CellId] = set()
        stack = [cf for c in start for cf in cofaces.get(c, ())]
        while stack:
            c = stack.pop()
            if c in seen:
                continue
            seen.add(c)
            stack.extend(cofaces.get(c, ()))
        return seen


def is_locally_closed(K: CellComplex, cells: frozenset) -> bool:
    """Poset convexity: no cell outside the set sits between two inside it."""
    inside = set(cells)
    with_ancestor = K.strict_ancestors(inside)
    with_descendant = K.strict_descendants(inside)
    for c in with_ancestor & with_descendant:
        if c not in inside:
            return False
    return True


def is_closed_in(K: CellComplex, sub: frozenset, ambient: frozenset) -> bool:
    """Whether ``sub`` contains every face-in-``ambient`` of its cells."""
    faces = K.faces_of_map()
    for c in sub:
        for f, _ in faces.get(c, ()):
            if f in ambient and f not in sub:
                return False
    return True


@dataclass(frozen=True)
class LocallyClosedCellSet:
    cells: frozenset

    def __post_init__(self):
        object.__setattr__(self, "cells", frozenset(self.cells))

    def validate(self, K: CellComplex) -> None:
        for c in self.cells:
            if c not in K.cells:
                raise SheafValidationError(f"cell {c!r} not in the complex")
        if not is_locally_closed(K, self.cells):
            raise SheafValidationError("cell set is not locally closed in the face poset")


# ---------------------------------------------------------------------------
# sheaves

def identity_matrix(d: int) -> Matrix:
    return tuple(tuple(1 if i == j else 0 for j in range(d)) for i in range(d))


def _mat_mul(a: Matrix, b: Matrix) -> Matrix:
    rows = len(a)
    inner = len(b)
    cols = len(b[0]) if b else 0
    return tuple(
        tuple(sum(a[i][k] * b[k][j] for k in range(inner)) for j in range(cols))
        for i in range(rows)
    )


def _mat_scale_add(acc: list[list[int]], m: Matrix, scale: int) -> None:
    for i, row in enumerate(m):
        for j, v in enumerate(row):
            acc[i][j] += scale * v


@dataclass(frozen=True)
class CellularSheaf:
    """Stalk dimensions per cell plus integer restriction matrices per incidence.

    The restriction for incidence (cell, face) maps the face stalk into the
    cell stalk; omitted restrictions default to the identity.
    """

    complex: CellComplex
    stalks: dict[CellId, int]
    restrictions: dict[tuple[CellId, CellId], Matrix] = field(default_factory=dict)

    def __post_init__(self):
        for c in self.complex.cells:
            if c not in self.stalks:
                raise SheafValidationError(f"missing stalk dimension for cell {c!r}")
            if self.stalks[c] < 0:
                raise SheafValidationError("stalk dimensions must be nonnegative")
        for (cell, face), mat in self.restrictions.items():
            rows = len(mat)
            cols = len(mat[0]) if rows else 0
            if rows != self.stalks[cell] or (rows and cols != self.stalks[face]):
                raise SheafValidationError(
                    f"restriction for ({cell!r}, {face!r}) has wrong shape")

    def restriction(self, cell: CellId, face: CellId) -> Matrix:
        mat = self.restrictions.get((cell, face))
        if mat is not None:
            return mat
        if self.stalks[cell] != self.stalks[face]:
            raise SheafValidationError(
                f"no restriction given for ({cell!r}, {face!r}) with unequal stalks")
        return identity_matrix(self.stalks[cell])

    def validate(self) -> None:
        """Blockwise delta^2 = 0 over Z: restrictions compose consistently."""
        faces = self.complex.faces_of_map()
        acc: dict[tuple[CellId, CellId], list[list[int]]] = {}
        for cell in self.complex.cells:
            for mid, s1 in faces.get(cell, ()):
                top = self.restriction(cell, mid)
                for bot, s2 in faces.get(mid, ()):
                    composed = _mat_mul(top, self.restriction(mid, bot))
                    key = (cell, bot)
                    if key not in acc:
                        acc[key] = [[0] * self.stalks[bot] for _ in range(self.stalks[cell])]
                    _mat_scale_add(acc[key], composed, s1 * s2)
        for key, block in acc.items():
            if any(v != 0 for row in block for v in row):
                raise SheafValidationError(
                    f"restrictions do not compose consistently through {key}")


def constant_sheaf(K: CellComplex, rank: int = 1) -> CellularSheaf:
    return CellularSheaf(complex=K, stalks={c: rank for c in K.cells})


# ---------------------------------------------------------------------------
# Betti vectors and restricted cohomology

@dataclass(frozen=True)
class BettiVector:
    ranks: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "ranks", tuple(int(r) for r in self.ranks))
        if any(r < 0 for r in self.ranks):
            raise ValueError("Betti numbers must be nonnegative")

    def __getitem__(self, j: int) -> int:
        return self.ranks[j] if 0 <= j < len(self.ranks) else 0

    def euler(self) -> int:
        return sum((-1) ** j * r for j, r in enumerate(self.ranks))

    def total(self) -> int:
        return sum(self.ranks)

    def trimmed(self) -> tuple[int, ...]:
        ranks = list(self.ranks)
        while ranks and ranks[-1] == 0:
            ranks.pop()
        return tuple(ranks)

    def same_as(self, other: "BettiVector") -> bool:
        return self.trimmed() == other.trimmed()

    def padded(self, length: int) -> tuple[int, ...]:
        return tuple(self[j] for j in range(length))


def _coboundary_dense(F: CellularSheaf, lower: list[CellId], upper: list[CellId]
                      ) -> list[list[int]]:
    """Dense integer coboundary block from lower-dim cells into upper-dim cells."""
    col_offsets = {}
    pos = 0
    for c in lower:
        col_offsets[c] = pos
        pos += F.stalks[c]
    ncols = pos
    row_offsets = {}
    pos = 0
    for c in upper:
        row_offsets[c] = pos
        pos += F.stalks[c]
    nrows = pos
    dense = [[0] * ncols for _ in range(nrows)]
    upper_set = set(upper)
    lower_set = set(lower)
    for inc in F.complex.incidences:
        if inc.cell in upper_set and inc.face in lower_set:
            mat = F.restriction(inc.cell, inc.face)
            r0 = row_offsets[inc.cell]
            c0 = col_offsets[inc.face]
            for i, row in enumerate(mat):
                for j, v in enumerate(row):
                    dense[r0 + i][c0 + j] += inc.sign * v
    return dense


def betti_of_restriction(K: CellComplex, F: CellularSheaf, Z: LocallyClosedCellSet,
                         field_name: str = "F2") -> BettiVector:
    """Cohomology of the sub-cochain complex on Z-cells with ambient coboundary.

    For locally closed cellular Z this computes the cohomology of the sheaf
    extended by zero off Z.
    """
    if F.complex is not K and F.complex != K:
        raise SheafValidationError("sheaf does not live on the given complex")
    Z.validate(K)
    fname = normalize_field(field_name)
    top = K.dimension
    by_dim = {d: sorted((c for c in Z.cells if K.cells[c] == d), key=repr)
              for d in range(top + 1)}
    dims = [sum(F.stalks[c] for c in by_dim[d]) for d in range(top + 1)]
    ranks = [0] * (top + 2)
    for d in range(top):
        if dims[d] and dims[d + 1]:
            dense = _coboundary_dense(F, by_dim[d], by_dim[d + 1])
            ranks[d + 1] = _matrix_rank(dense, fname)
    betti = [dims[d] - ranks[d + 1] - ranks[d] for d in range(top + 1)]
    return BettiVector(tuple(betti))


def cohomology(K: CellComplex, F: CellularSheaf, field_name: str = "F2") -> BettiVector:
    """Sheaf cohomology of the whole complex (exact arithmetic)."""
    F.validate()
    return betti_of_restriction(K, F, LocallyClosedCellSet(frozenset(K.cells)), field_name)


# ---------------------------------------------------------------------------
# interval modules

@dataclass(frozen=True)
class IntervalSummand:
    """One interval with endpoint flags, a degree shift, and a multiplicity."""

    left: float
    right: float
    left_closed: bool = True
    right_closed: bool = False
    shift: int = 0
    mult: int = 1

    def __post_init__(self):
        if math.isinf(self.left):
            raise ValueError("left endpoint must be finite")
        if self.left > self.right:
            raise ValueError("interval endpoints must satisfy left <= right")
        if self.left == self.right and not (self.left_closed and self.right_closed):
            raise ValueError("degenerate single-point intervals must be closed")
        if math.isinf(self.right) and self.right_closed:
            raise ValueError("an infinite right endpoint cannot be closed")
        if self.shift < 0:
            raise ValueError("degree shift must be nonnegative")
        if self.mult < 1:
            raise ValueError("multiplicity must be positive")

    @property
    def length(self) -> float:
        return self.right - self.left


@dataclass(frozen=True)
class IntervalModule:
    summands: tuple[IntervalSummand, ...]

    def __post_init__(self):
        object.__setattr__(self, "summands", tuple(self.summands))


def interval_cohomology(module: IntervalModule) -> BettiVector:
    """Closed-form cohomology: closed intervals sit in their shift degree,
    open ones a degree higher, half-open ones vanish.  A closed infinite ray
    [a, +inf) counts as closed; an open one contributes nothing."""
    counts: dict[int, int] = {}
    for s in module.summands:
        if math.isinf(s.right):
            degree = s.shift if s.left_closed else None
        elif s.left_closed and s.right_closed:
            degree = s.shift
        elif not s.left_closed and not s.right_closed:
            degree = s.shift + 1
        else:
            degree = None
        if degree is not None:
            counts[degree] = counts.get(degree, 0) + s.mult
    if not counts:
        return BettiVector((0,))
    top = max(counts)
    return BettiVector(tuple(counts.get(j, 0) for j in range(top + 1)))


def line_complex(xs) -> CellComplex:
    """Discretization of a segment of the line: vertices at xs, edges between."""
    xs = sorted(float(x) for x in xs)
    if len(xs) < 2:
        raise ValueError("need at least two breakpoints")
    cells: dict[CellId, int] = {}
    incidences = []
    geom = {}
    for i, x in enumerate(xs):
        cells[("v", i)] = 0
        geom[("v", i)] = (x,)
    for i in range(len(xs) - 1):
        e = ("e", i)
        cells[e] = 1
        geom[e] = ((xs[i] + xs[i + 1]) / 2.0,)
        incidences.append(Incidence(cell=e, face=("v", i), sign=-1))
        incidences.append(Incidence(cell=e, face=("v", i + 1), sign=1))
    return CellComplex(cells=cells, incidences=tuple(incidences), geom=geom)


def interval_cell_set(K: CellComplex, left: float, right: float,
                      left_closed: bool, right_closed: bool) -> LocallyClosedCellSet:
    """Cells of a line complex realizing the interval with the given endpoint flags.

    Both endpoints must be breakpoints of the discretization.
    """
    chosen = set()
    for c, d in K.cells.items():
        x = K.geom[c][0]
        if d == 0:
            inside = left < x < right or (left_closed and x == left) or (
                right_closed and x == right)
        else:
            inside = left <= x <= right  # midpoint of an edge inside the span
        if inside:
            chosen.add(c)
    return LocallyClosedCellSet(frozenset(chosen))


# ---------------------------------------------------------------------------
# JSON loading

def load_complex_and_sheaf(source: str | Path | dict) -> tuple[CellComplex, CellularSheaf]:
    """Load a complex and sheaf from a JSON document.

    Format: ``{"cells": [[id, dim], ...], "faces": [[cell, face, sign], ...],
    "stalks": {id: dim, ...}, "restrictions": [[cell, face, [row-major ints]],
    ...]}``.  Stalks default to rank one, restrictions to the identity.
    """
    if isinstance(source, (str, Path)) and Path(str(source)).exists():
        doc = json.loads(Path(str(source)).read_text())
    elif isinstance(source, str):
        doc = json.loads(source)
    else:
        doc = source
    cells = {str(cid): int(d) for cid, d in doc["cells"]}
    incidences = tuple(Incidence(cell=str(c), face=str(f), sign=int(s))
                       for c, f, s in doc.get("faces", []))
    K = CellComplex(cells=cells, incidences=incidences)
    stalks = {c: 1 for c in cells}
    stalks.update({str(c): int(d) for c, d in doc.get("stalks", {}).items()})
    restrictions: dict[tuple[CellId, CellId], Matrix] = {}
    for c, f, flat in doc.get("restrictions", []):
        rows, cols = stalks[str(c)], stalks[str(f)]
        if len(flat) != rows * cols:
            raise SheafValidationError(
                f"restriction for ({c}, {f}) needs {rows * cols} entries, got {len(flat)}")
        restrictions[(str(c), str(f))] = tuple(
            tuple(int(flat[i * cols + j]) for j in range(cols)) for i in range(rows))
    F = CellularSheaf(complex=K, stalks=stalks, restrictions=restrictions)
    return K, F
