"""Equivariant sheaf models on covers, window complexes, and asymptotic
Betti number estimation.

A model is a fundamental domain complex V (its closure, including the upper
boundary cells) together with, per deck generator, a gluing map sending
upper boundary cells to the lower cells they tile against.  Cells not glued
away are "owned" by the domain; translated copies of the owned cells tile
the cover exactly, the half-open convention being built in (lower faces in,
upper faces resolved into the next copy).  The window of radius k assembles
the (2k+1)^r copies indexed by the deck hypercube, and its Betti numbers
are the cellular ranks of the restriction to those owned cells with the
ambient coboundary, which is exactly the half-open window cohomology.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from itertools import product as iter_product
from pathlib import Path

import numpy as np

from .geometry import CoverModel
from .sheaf import (
    BettiVector,
    CellComplex,
    CellId,
    CellularSheaf,
    Incidence,
    LocallyClosedCellSet,
    Matrix,
    SheafValidationError,
    _mat_mul,
    _mat_scale_add,
    betti_of_restriction,
    identity_matrix,
)

Offset = tuple[int, ...]


@dataclass(frozen=True)
class WindowSpec:
    """Radius of the deck hypercube: each direction ranges over [-k, k]."""

    k: int

    def __post_init__(self):
        if self.k < 0:
            raise ValueError("window radius must be nonnegative")

    def offsets(self, rank: int) -> list[Offset]:
        return [tuple(m) for m in iter_product(range(-self.k, self.k + 1), repeat=rank)]

    def copies(self, rank: int) -> int:
        return (2 * self.k + 1) ** rank


@dataclass(frozen=True)
class EquivariantSheafModel:
    """Fundamental domain complex with deck gluing and sheaf data.

    ``glue[i]`` maps each upper boundary cell for generator i to the owned
    (or further-glued) cell it is identified with in the adjacent copy.
    Sheaf invariance under the gluing is structural: stalks and restriction
    matrices are given on the domain and shared by every translated copy;
    matching stalks along the gluing are validated.
    """

    domain: CellComplex
    rank: int
    glue: tuple[dict[CellId, CellId], ...]
    sheaf: CellularSheaf
    cover: CoverModel | None = None
    label: str = ""

    def __post_init__(self):
        if self.rank != len(self.glue):
            raise SheafValidationError("one gluing map per deck generator required")
        object.__setattr__(self, "glue", tuple(dict(g) for g in self.glue))
        if self.sheaf.complex is not self.domain and self.sheaf.complex != self.domain:
            raise SheafValidationError("sheaf must live on the fundamental domain")
        self._validate_gluing()

    # -- resolution of glued cells into owned cells with deck offsets

    def _validate_gluing(self) -> None:
        upper = set()
        for i, g in enumerate(self.glue):
            for u, l in g.items():
                if u not in self.domain.cells or l not in self.domain.cells:
                    raise SheafValidationError(f"gluing {u!r} -> {l!r} references unknown cells")
                if self.domain.cells[u] != self.domain.cells[l]:
                    raise SheafValidationError(f"gluing {u!r} -> {l!r} changes dimension")
                if self.sheaf.stalks[u] != self.sheaf.stalks[l]:
                    raise SheafValidationError(
                        f"stalks differ along gluing {u!r} -> {l!r}")
            upper.update(g.keys())
        # every upper cell must resolve to an owned cell (no cycles)
        for c in upper:
            self.resolve(c)
        # corner cells glued by several generators must resolve independently
        # of application order
        for c in upper:
            gens = [i for i, g in enumerate(self.glue) if c in g]
            if len(gens) > 1:
                results = set()
                for first in gens:
                    cell = self.glue[first][c]
                    off = [0] * self.rank
                    off[first] = 1
                    cell2, off2 = self.resolve(cell)
                    results.add((cell2, tuple(a + b for a, b in zip(off, off2))))
                if len(results) != 1:
                    raise SheafValidationError(
                        f"gluing maps do not commute at corner cell {c!r}")
        self._check_group_ring_delta_squared()

    def owned_cells(self) -> list[CellId]:
        glued = set()
        for g in self.glue:
            glued.update(g.keys())
        return sorted((c for c in self.domain.cells if c not in glued), key=repr)

    def resolve(self, cell: CellId) -> tuple[CellId, Offset]:
        """Follow gluing maps to the owned representative, accumulating offsets."""
        offset = [0] * self.rank
        guard = 0
        while True:
            for i, g in enumerate(self.glue):
                if cell in g:
                    cell = g[cell]
                    offset[i] += 1
                    break
            else:
                return cell, tuple(offset)
            guard += 1
            if guard > len(self.domain.cells) * (self.rank + 1):
                raise SheafValidationError("gluing maps contain a cycle")

    def _resolved_incidences(self) -> list[tuple[CellId, CellId, Offset, int]]:
        """Incidences of an owned cell, faces resolved to (owned cell, offset)."""
        owned = set(self.owned_cells())
        out = []
        for inc in self.domain.incidences:
            if inc.cell not in owned:
                continue
            face0, off = self.resolve(inc.face)
            out.append((inc.cell, face0, off, inc.sign))
        return out

    def _check_group_ring_delta_squared(self) -> None:
        """Blockwise delta^2 = 0 over the deck group ring (exact, offsets summed)."""
        by_cell: dict[CellId, list[tuple[CellId, Offset, int]]] = {}
        for cell, face, off, sign in self._resolved_incidences():
            by_cell.setdefault(cell, []).append((face, off, sign))
        acc: dict[tuple[CellId, CellId, Offset], list[list[int]]] = {}
        for cell, entries in by_cell.items():
            for mid, off1, s1 in entries:
                top = self.sheaf.restriction(cell, self._unresolved_face(cell, mid, off1))
                for bot, off2, s2 in by_cell.get(mid, ()):  # mid is owned
                    total_off = tuple(a + b for a, b in zip(off1, off2))
                    mat = _mat_mul(top, self.sheaf.restriction(
                        mid, self._unresolved_face(mid, bot, off2)))
                    key = (cell, bot, total_off)
                    if key not in acc:
                        acc[key] = [[0] * self.sheaf.stalks[bot]
                                    for _ in range(self.sheaf.stalks[cell])]
                    _mat_scale_add(acc[key], mat, s1 * s2)
        for key, block in acc.items():
            if any(v != 0 for row in block for v in row):
                raise SheafValidationError(
                    f"equivariant coboundary does not square to zero through {key}")

    def _unresolved_face(self, cell: CellId, resolved_face: CellId, off: Offset) -> CellId:
        # restriction matrices are keyed by the original domain incidence; find
        # the domain face of ``cell`` whose resolution is (resolved_face, off)
        for inc in self.domain.incidences:
            if inc.cell == cell and self.resolve(inc.face) == (resolved_face, off):
                return inc.face
        return resolved_face

    def base_complex(self) -> tuple[CellComplex, CellularSheaf]:
        """Quotient by the deck group: owned cells, offsets dropped."""
        owned = self.owned_cells()
        cells = {c: self.domain.cells[c] for c in owned}
        incidences = []
        restrictions: dict[tuple[CellId, CellId], Matrix] = {}
        for cell, face, off, sign in self._resolved_incidences():
            incidences.append(Incidence(cell=cell, face=face, sign=sign))
            key = (cell, face)
            mat = self.sheaf.restriction(cell, self._unresolved_face(cell, face, off))
            if key in restrictions and restrictions[key] != mat:
                raise SheafValidationError(
                    f"quotient has conflicting restrictions for {key}")
            restrictions[key] = mat
        K = CellComplex(cells=cells, incidences=tuple(incidences))
        stalks = {c: self.sheaf.stalks[c] for c in owned}
        return K, CellularSheaf(complex=K, stalks=stalks, restrictions=restrictions)


# ---------------------------------------------------------------------------
# window assembly

def _window_pieces(model: EquivariantSheafModel, k: int, root: Offset | None = None
                   ) -> tuple[CellComplex, CellularSheaf, LocallyClosedCellSet]:
    spec = WindowSpec(k)
    r = model.rank
    root = tuple([0] * r) if root is None else tuple(root)
    offsets = [tuple(m + o for m, o in zip(off, root)) for off in spec.offsets(r)]
    owned = model.owned_cells()
    resolved = model._resolved_incidences()

    window_cells = {(c, m) for c in owned for m in offsets}
    # facial closure: cells demanded as faces get instantiated, then theirs
    all_cells = set(window_cells)
    frontier = set(window_cells)
    while frontier:
        new = set()
        for (c, m) in frontier:
            for cell, face, off, sign in resolved:
                if cell != c:
                    continue
                target = (face, tuple(a + b for a, b in zip(m, off)))
                if target not in all_cells:
                    new.add(target)
        all_cells |= new
        frontier = new

    cells = {cm: model.domain.cells[cm[0]] for cm in all_cells}
    incidences = []
    restrictions: dict[tuple[CellId, CellId], Matrix] = {}
    for (c, m) in all_cells:
        for cell, face, off, sign in resolved:
            if cell != c:
                continue
            target = (face, tuple(a + b for a, b in zip(m, off)))
            incidences.append(Incidence(cell=(c, m), face=target, sign=sign))
            restrictions[((c, m), target)] = model.sheaf.restriction(
                c, model._unresolved_face(c, face, off))
    K = CellComplex(cells=cells, incidences=tuple(incidences))
    stalks = {cm: model.sheaf.stalks[cm[0]] for cm in all_cells}
    F = CellularSheaf(complex=K, stalks=stalks, restrictions=restrictions)
    Z = LocallyClosedCellSet(frozenset(window_cells))
    Z.validate(K)
    return K, F, Z


def build_window(model: EquivariantSheafModel, k: int, root: Offset | None = None
                 ) -> tuple[CellComplex, LocallyClosedCellSet]:
    """Assemble the radius-k window as (ambient complex, half-open cell set).

    The cell set holds exactly the owned cells of the (2k+1)^r translated
    copies; the ambient complex adds the facial closure so the coboundary is
    well defined.  Tiling exactness is structural: each window cell is owned
    by exactly one copy.
    """
    K, _, Z = _window_pieces(model, k, root)
    return K, Z


def window_betti(model: EquivariantSheafModel, k: int, field_name: str = "F2",
                 root: Offset | None = None) -> BettiVector:
    K, F, Z = _window_pieces(model, k, root)
    return betti_of_restriction(K, F, Z, field_name)


# ---------------------------------------------------------------------------
# asymptotic Betti estimates

@dataclass
class CjEstimate:
    """Per-degree window Betti sequences with their normalized limits.

    The reported estimate is the last normalized value; the convergence flag
    marks degrees whose last two normalized entries differ by less than the
    tolerance (the true limsup is not finitely computable).
    """

    ks: tuple[int, ...]
    betti_by_k: tuple[BettiVector, ...]
    rank: int
    tol: float
    dim: int

    @property
    def normalized(self) -> tuple[tuple[float, ...], ...]:
        out = []
        for k, bv in zip(self.ks, self.betti_by_k):
            copies = (2 * k + 1) ** self.rank
            out.append(tuple(bv[j] / copies for j in range(self.dim + 1)))
        return tuple(out)

    @property
    def estimates(self) -> tuple[float, ...]:
        return self.normalized[-1]

    @property
    def converged(self) -> tuple[bool, ...]:
        norm = self.normalized
        if len(norm) < 2:
            return tuple(False for _ in range(self.dim + 1))
        last, prev = norm[-1], norm[-2]
        return tuple(abs(a - b) <= self.tol for a, b in zip(last, prev))

    def csv_rows(self) -> list[tuple[int, int, int, float]]:
        rows = []
        for k, bv, norm in zip(self.ks, self.betti_by_k, self.normalized):
            for j in range(self.dim + 1):
                rows.append((k, j, bv[j], norm[j]))
        return rows

    def write_csv(self, target: str | Path) -> None:
        with open(target, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["k", "j", "b_j", "normalized"])
            for row in self.csv_rows():
                writer.writerow(row)


def estimate_cj(model: EquivariantSheafModel, k_max: int, field_name: str = "F2",
                tol: float = 1e-9) -> CjEstimate:
    """Normalized window Betti sequence up to k_max (limsup proxy)."""
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    ks = tuple(range(k_max + 1))
    betti = tuple(window_betti(model, k, field_name) for k in ks)
    return CjEstimate(ks=ks, betti_by_k=betti, rank=model.rank, tol=tol,
                      dim=model.domain.dimension)


@dataclass
class DomainIndependenceReport:
    ks: tuple[int, ...]
    diffs_by_k: tuple[tuple[int, ...], ...]
    fitted_constant: float
    estimates_a: tuple[float, ...]
    estimates_b: tuple[float, ...]
    estimates_agree: bool
    max_estimate_gap: float


def check_domain_independence(model_a: EquivariantSheafModel,
                              model_b: EquivariantSheafModel,
                              k_max: int, field_name: str = "F2",
                              tol: float = 1e-9) -> DomainIndependenceReport:
    """Compare window Betti sequences of two fundamental-domain choices.

    Fits the smallest C with |b_j^A(k) - b_j^B(k)| <= C (2k+1)^{r-1} and
    checks the final normalized estimates agree within the tolerance.
    """
    if model_a.rank != model_b.rank:
        raise ValueError("models must have the same deck rank")
    est_a = estimate_cj(model_a, k_max, field_name, tol)
    est_b = estimate_cj(model_b, k_max, field_name, tol)
    dim = max(est_a.dim, est_b.dim)
    r = model_a.rank
    diffs = []
    fitted = 0.0
    for k, bva, bvb in zip(est_a.ks, est_a.betti_by_k, est_b.betti_by_k):
        row = tuple(abs(bva[j] - bvb[j]) for j in range(dim + 1))
        diffs.append(row)
        scale = (2 * k + 1) ** (r - 1) if r >= 1 else 1
        fitted = max(fitted, max(row) / scale if scale else float(max(row)))
    gaps = [abs(a - b) for a, b in zip(
        est_a.normalized[-1] + (0.0,) * (dim + 1 - len(est_a.normalized[-1])),
        est_b.normalized[-1] + (0.0,) * (dim + 1 - len(est_b.normalized[-1])))]
    gap = max(gaps) if gaps else 0.0
    return DomainIndependenceReport(
        ks=est_a.ks, diffs_by_k=tuple(diffs), fitted_constant=fitted,
        estimates_a=est_a.estimates, estimates_b=est_b.estimates,
        estimates_agree=gap <= tol, max_estimate_gap=gap)


# ---------------------------------------------------------------------------
# Morse-Novikov oracle and the alternating-sum consistency check

def morse_novikov_oracle(model: EquivariantSheafModel,
                         field_name: str = "F2") -> tuple[int, ...] | None:
    """Novikov homology ranks in the two supported regimes, else None.

    Exact Lee class (rank 0): ranks equal the constant-coefficient Betti
    numbers of the base.  On a torus base with some nonzero lattice
    coefficient the class has a nowhere-vanishing representative and every
    rank vanishes.  Anything else is unsupported.
    """
    from .sheaf import cohomology, constant_sheaf

    if model.rank == 0:
        K, _ = model.base_complex()
        bv = cohomology(K, constant_sheaf(K), field_name)
        return bv.padded(model.domain.dimension + 1)
    cov = model.cover
    if cov is not None and cov.base.line_factors == 0 and any(
            a != 0 for a in cov.beta.lattice):
        return tuple(0 for _ in range(model.domain.dimension + 1))
    return None


def check_microlocal_morse(cj: tuple[float, ...],
                           critical_contributions) -> bool:
    """Alternating partial sums of c_j dominated by critical-point data.

    ``critical_contributions`` is a list of per-critical-point Betti vectors;
    the check is the alternating-sum inequality degree by degree.
    """
    top = len(cj)
    totals = [0.0] * top
    for bv in critical_contributions:
        for j in range(top):
            totals[j] += bv[j]
    for ell in range(top):
        lhs = sum((-1) ** (ell + j) * cj[j] for j in range(ell + 1))
        rhs = sum((-1) ** (ell + j) * totals[j] for j in range(ell + 1))
        if lhs > rhs + 1e-12:
            return False
    return True


# ---------------------------------------------------------------------------
# shipped model builders

def circle_model_exact(cover: CoverModel | None = None) -> EquivariantSheafModel:
    """Exact Lee form on the circle: the quotient is the whole circle complex."""
    cells = {"v": 0, "e": 1}
    incidences = (Incidence("e", "v", 1), Incidence("e", "v", -1))
    K = CellComplex(cells=cells, incidences=incidences)
    F = CellularSheaf(complex=K, stalks={"v": 1, "e": 1})
    return EquivariantSheafModel(domain=K, rank=0, glue=(), sheaf=F, cover=cover,
                                 label="s1-exact")


def circle_model_unit_class(cover: CoverModel | None = None, cut: float = 0.0,
                            subdivisions: int = 1) -> EquivariantSheafModel:
    """Circle with unit Lee class: fundamental domain [cut, cut + 1).

    ``subdivisions`` controls the number of edges in the domain, which gives
    genuinely different fundamental-domain presentations of the same sheaf.
    """
    if subdivisions < 1:
        raise ValueError("need at least one subdivision")
    cells: dict[CellId, int] = {}
    incidences = []
    for i in range(subdivisions + 1):
        cells[f"v{i}"] = 0
    for i in range(subdivisions):
        cells[f"e{i}"] = 1
        incidences.append(Incidence(f"e{i}", f"v{i}", -1))
        incidences.append(Incidence(f"e{i}", f"v{i + 1}", 1))
    K = CellComplex(cells=cells, incidences=tuple(incidences))
    F = CellularSheaf(complex=K, stalks={c: 1 for c in cells})
    glue = ({f"v{subdivisions}": "v0"},)
    return EquivariantSheafModel(domain=K, rank=1, glue=glue, sheaf=F, cover=cover,
                                 label=f"s1-dtheta-cut{cut}")


def torus_model_first_class(cover: CoverModel | None = None) -> EquivariantSheafModel:
    """Two-torus with Lee class dual to the first circle factor.

    Fundamental domain [0, 1] x S^1: vertical circle edges at both ends of
    the strip, a horizontal edge, and the square face; the upper end is
    glued to the lower one.
    """
    cells = {"v0": 0, "v1": 0, "a0": 1, "a1": 1, "b": 1, "F": 2}
    incidences = (
        Incidence("a0", "v0", 1), Incidence("a0", "v0", -1),
        Incidence("a1", "v1", 1), Incidence("a1", "v1", -1),
        Incidence("b", "v0", -1), Incidence("b", "v1", 1),
        Incidence("F", "a1", 1), Incidence("F", "a0", -1),
        Incidence("F", "b", 1), Incidence("F", "b", -1),
    )
    K = CellComplex(cells=cells, incidences=incidences)
    F = CellularSheaf(complex=K, stalks={c: 1 for c in cells})
    glue = ({"v1": "v0", "a1": "a0"},)
    return EquivariantSheafModel(domain=K, rank=1, glue=glue, sheaf=F, cover=cover,
                                 label="t2-dtheta1")


def torus_model_exact(cover: CoverModel | None = None) -> EquivariantSheafModel:
    """Exact Lee form on the two-torus (minimal one-vertex cell structure)."""
    cells = {"v": 0, "a1": 1, "a2": 1, "F": 2}
    incidences = (
        Incidence("a1", "v", 1), Incidence("a1", "v", -1),
        Incidence("a2", "v", 1), Incidence("a2", "v", -1),
        Incidence("F", "a1", 1), Incidence("F", "a1", -1),
        Incidence("F", "a2", 1), Incidence("F", "a2", -1),
    )
    K = CellComplex(cells=cells, incidences=incidences)
    F = CellularSheaf(complex=K, stalks={c: 1 for c in cells})
    return EquivariantSheafModel(domain=K, rank=0, glue=(), sheaf=F, cover=cover,
                                 label="t2-exact")


def circle_model_with_point_summand(cover: CoverModel | None = None
                                    ) -> EquivariantSheafModel:
    """Unit-class circle model plus a rank-1 point summand on the owned vertex.

    Each window copy contributes one extra degree-0 class, so the normalized
    b_0 sequence is identically one.
    """
    cells = {"v0": 0, "v1": 0, "e": 1}
    incidences = (Incidence("e", "v0", -1), Incidence("e", "v1", 1))
    K = CellComplex(cells=cells, incidences=incidences)
    stalks = {"v0": 2, "v1": 2, "e": 1}
    restrictions = {
        ("e", "v0"): ((1, 0),),
        ("e", "v1"): ((1, 0),),
    }
    F = CellularSheaf(complex=K, stalks=stalks, restrictions=restrictions)
    glue = ({"v1": "v0"},)
    return EquivariantSheafModel(domain=K, rank=1, glue=glue, sheaf=F, cover=cover,
                                 label="s1-dtheta-extra-point")


# ---------------------------------------------------------------------------
# JSON loading

def load_model(source: str | Path | dict) -> EquivariantSheafModel:
    """Load an equivariant sheaf model from a JSON document.

    Format: the complex/sheaf document of :func:`lcslab.sheaf
    .load_complex_and_sheaf` plus ``"rank"`` and ``"glue": [{upper: lower,
    ...}, ...]`` (one object per deck generator).
    """
    from .sheaf import load_complex_and_sheaf

    if isinstance(source, (str, Path)) and Path(str(source)).exists():
        doc = json.loads(Path(str(source)).read_text())
    elif isinstance(source, str):
        doc = json.loads(source)
    else:
        doc = source
    K, F = load_complex_and_sheaf(doc)
    rank = int(doc.get("rank", 0))
    glue = tuple({str(u): str(l) for u, l in g.items()} for g in doc.get("glue", []))
    return EquivariantSheafModel(domain=K, rank=rank, glue=glue, sheaf=F,
                                 label=str(doc.get("label", "")))
