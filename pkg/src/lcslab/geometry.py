"""Coordinate model spaces, closed one-forms, integral covers, and the
Lichnerowicz calculus evaluated pointwise.

Model spaces are finite products of circles (period 1) and lines.  A closed
one-form splits as a lattice part (one integer per circle factor) plus an
exact part dg0 for a periodic scalar field g0.  The integral cover unrolls
exactly the circle directions with nonzero lattice coefficient; the deck
group is Z^r acting by unit translations there, and the primitive is
g(x) = sum_i a_i x_i + g0(pi(x)).

Differential forms are callables, not symbolic expressions: a FormField of
degree k stores one coefficient function per sorted coordinate multi-index.
The Lichnerowicz derivative d_beta = d - beta ^ . is evaluated pointwise,
with exterior derivatives taken by central finite differences unless the
form supplies analytic coefficient gradients.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from itertools import combinations
from pathlib import Path
from typing import Callable

import numpy as np

Point = np.ndarray

CIRCLE = "circle"
LINE = "line"


# ---------------------------------------------------------------------------
# scalar fields

@dataclass(frozen=True)
class ScalarField:
    """Smooth scalar field with optional analytic first/second derivatives."""

    name: str
    value: Callable[[Point], float]
    grad: Callable[[Point], np.ndarray] | None = None
    hess: Callable[[Point], np.ndarray] | None = None
    is_zero: bool = False

    def gradient(self, p: Point, fd_step: float = 1e-6) -> np.ndarray:
        if self.grad is not None:
            return np.asarray(self.grad(p), dtype=float)
        p = np.asarray(p, dtype=float)
        out = np.empty(p.size)
        for i in range(p.size):
            out[i] = _partial(self.value, p, i, fd_step)
        return out


def _zero_scalar_field(dim: int) -> ScalarField:
    return ScalarField(
        name="zero",
        value=lambda p: 0.0,
        grad=lambda p: np.zeros(dim),
        hess=lambda p: np.zeros((dim, dim)),
        is_zero=True,
    )


def _wave_scalar_field(dim: int, amplitude: float, use_sin: bool) -> ScalarField:
    two_pi = 2.0 * math.pi
    f, df, ddf = (math.sin, math.cos, lambda u: -math.sin(u)) if use_sin else (
        math.cos, lambda u: -math.sin(u), lambda u: -math.cos(u))

    def value(p: Point) -> float:
        return amplitude * f(two_pi * p[0])

    def grad(p: Point) -> np.ndarray:
        out = np.zeros(dim)
        out[0] = amplitude * two_pi * df(two_pi * p[0])
        return out

    def hess(p: Point) -> np.ndarray:
        out = np.zeros((dim, dim))
        out[0, 0] = amplitude * two_pi * two_pi * ddf(two_pi * p[0])
        return out

    name = ("sin_theta1" if use_sin else "cos_theta1")
    return ScalarField(name=name, value=value, grad=grad, hess=hess)


def builtin_scalar_field(name: str, dim: int, amplitude: float = 1.0) -> ScalarField:
    """Named scalar fields usable as the exact part of a closed one-form.

    Available: ``zero``, ``cos_theta1``, ``sin_theta1`` (period 1 in the
    first coordinate, constant in the others).
    """
    if name == "zero":
        return _zero_scalar_field(dim)
    if name == "cos_theta1":
        return _wave_scalar_field(dim, amplitude, use_sin=False)
    if name == "sin_theta1":
        return _wave_scalar_field(dim, amplitude, use_sin=True)
    raise ValueError(f"unknown builtin scalar field {name!r}")


# ---------------------------------------------------------------------------
# model spaces

@dataclass(frozen=True)
class ModelSpace:
    """Product of circle (period 1) and line factors, in a fixed order."""

    kinds: tuple[str, ...]
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        if len(self.kinds) < 1:
            raise ValueError("model space must have dimension >= 1")
        for kind in self.kinds:
            if kind not in (CIRCLE, LINE):
                raise ValueError(f"coordinate kind must be 'circle' or 'line', got {kind!r}")
        if not self.labels:
            labels = []
            nc = nl = 0
            for kind in self.kinds:
                if kind == CIRCLE:
                    nc += 1
                    labels.append(f"th{nc}")
                else:
                    nl += 1
                    labels.append(f"x{nl}")
            object.__setattr__(self, "labels", tuple(labels))
        elif len(self.labels) != len(self.kinds):
            raise ValueError("labels must match the number of coordinates")

    @property
    def dim(self) -> int:
        return len(self.kinds)

    @property
    def circle_factors(self) -> int:
        return sum(1 for k in self.kinds if k == CIRCLE)

    @property
    def line_factors(self) -> int:
        return sum(1 for k in self.kinds if k == LINE)

    def is_periodic(self, i: int) -> bool:
        return self.kinds[i] == CIRCLE

    def reduce(self, p: Point) -> np.ndarray:
        """Fold circle coordinates into [0, 1)."""
        q = np.array(p, dtype=float)
        for i, kind in enumerate(self.kinds):
            if kind == CIRCLE:
                q[i] -= math.floor(q[i])
        return q

    def distance(self, p: Point, q: Point) -> float:
        """Euclidean distance with circle coordinates compared modulo 1."""
        d2 = 0.0
        for i, kind in enumerate(self.kinds):
            d = abs(float(p[i]) - float(q[i]))
            if kind == CIRCLE:
                d = d - math.floor(d)
                d = min(d, 1.0 - d)
            d2 += d * d
        return math.sqrt(d2)

    def random_points(self, rng: np.random.Generator, count: int, box: float = 1.0) -> np.ndarray:
        cols = []
        for kind in self.kinds:
            if kind == CIRCLE:
                cols.append(rng.uniform(0.0, 1.0, size=count))
            else:
                cols.append(rng.uniform(-box, box, size=count))
        return np.stack(cols, axis=1)


def product_space(circles: int, lines: int, labels: tuple[str, ...] = ()) -> ModelSpace:
    return ModelSpace(kinds=(CIRCLE,) * circles + (LINE,) * lines, labels=labels)


# ---------------------------------------------------------------------------
# closed one-forms and covers

@dataclass(frozen=True)
class ClosedOneForm:
    """beta = sum_i a_i dtheta_i + dg0, closed by construction.

    Lattice coefficients are integers (one per circle factor); g0 must be
    period-1 in every circle coordinate, which is spot-checked by sampling.
    """

    space: ModelSpace
    lattice: tuple[int, ...]
    g0: ScalarField | None = None

    def __post_init__(self):
        if len(self.lattice) != self.space.circle_factors:
            raise ValueError("one lattice coefficient per circle factor required")
        for a in self.lattice:
            if a != int(a):
                raise ValueError("lattice coefficients must be integers")
        object.__setattr__(self, "lattice", tuple(int(a) for a in self.lattice))
        if self.g0 is None:
            object.__setattr__(self, "g0", _zero_scalar_field(self.space.dim))
        if not self.g0.is_zero:
            self._check_g0_periodicity()

    def _check_g0_periodicity(self, samples: int = 16, tol: float = 1e-9) -> None:
        rng = np.random.default_rng(0)
        pts = self.space.random_points(rng, samples)
        for i, kind in enumerate(self.space.kinds):
            if kind != CIRCLE:
                continue
            shift = np.zeros(self.space.dim)
            shift[i] = 1.0
            for p in pts:
                if abs(self.g0.value(p + shift) - self.g0.value(p)) > tol:
                    raise ValueError(f"g0 is not period-1 in circle coordinate {i}")

    @property
    def rank(self) -> int:
        return sum(1 for a in self.lattice if a != 0)

    def lattice_by_coordinate(self) -> np.ndarray:
        """Lattice coefficient per coordinate (zero on line factors)."""
        out = np.zeros(self.space.dim)
        ci = 0
        for i, kind in enumerate(self.space.kinds):
            if kind == CIRCLE:
                out[i] = self.lattice[ci]
                ci += 1
        return out

    def components(self, p: Point) -> np.ndarray:
        """Coefficients of beta in the coordinate basis at p."""
        out = self.lattice_by_coordinate()
        if not self.g0.is_zero:
            out = out + self.g0.gradient(np.asarray(p, dtype=float))
        return out

    @property
    def is_exact(self) -> bool:
        return all(a == 0 for a in self.lattice)


@dataclass(frozen=True)
class CoverModel:
    """Integral cover of a closed one-form, with deck action and primitive."""

    base: ModelSpace
    beta: ClosedOneForm
    covered: tuple[int, ...] = ()

    def __post_init__(self):
        if self.beta.space is not self.base and self.beta.space != self.base:
            raise ValueError("beta must live on the base space")
        by_coord = self.beta.lattice_by_coordinate()
        covered = tuple(i for i in range(self.base.dim) if by_coord[i] != 0)
        object.__setattr__(self, "covered", covered)

    @property
    def rank_r(self) -> int:
        return len(self.covered)

    def cover_space(self) -> ModelSpace:
        kinds = tuple(LINE if i in self.covered else k for i, k in enumerate(self.base.kinds))
        return ModelSpace(kinds=kinds, labels=self.base.labels)

    def generators(self) -> list[np.ndarray]:
        """Unit deck translations, one per covered direction."""
        gens = []
        for j in self.covered:
            v = np.zeros(self.base.dim)
            v[j] = 1.0
            gens.append(v)
        return gens

    def project(self, p: Point) -> np.ndarray:
        """Covering projection: fold every circle coordinate of the base."""
        return self.base.reduce(p)

    def g(self, p: Point) -> float:
        """Primitive of the pulled-back one-form on the cover."""
        p = np.asarray(p, dtype=float)
        val = float(np.dot(self.beta.lattice_by_coordinate(), p))
        if not self.beta.g0.is_zero:
            val += self.beta.g0.value(self.project(p))
        return val

    def dg(self, p: Point) -> np.ndarray:
        out = self.beta.lattice_by_coordinate()
        if not self.beta.g0.is_zero:
            out = out + self.beta.g0.gradient(self.project(np.asarray(p, dtype=float)))
        return out

    def hess_g(self, p: Point) -> np.ndarray | None:
        """Hessian of the primitive; None when g0 has no analytic Hessian."""
        if self.beta.g0.is_zero:
            return np.zeros((self.base.dim, self.base.dim))
        if self.beta.g0.hess is None:
            return None
        return np.asarray(self.beta.g0.hess(self.project(np.asarray(p, dtype=float))), dtype=float)

    def deck_act(self, powers, p: Point) -> np.ndarray:
        """Translate cover base coordinates by integer deck powers."""
        powers = np.asarray(powers)
        if powers.shape != (self.rank_r,):
            raise ValueError(f"expected {self.rank_r} deck powers, got shape {powers.shape}")
        q = np.array(p, dtype=float)
        for j, idx in enumerate(self.covered):
            q[idx] += float(powers[j])
        return q

    def deck_g_increment(self, powers) -> int:
        """Exact increment of the primitive under a deck element."""
        powers = np.asarray(powers)
        if powers.shape != (self.rank_r,):
            raise ValueError(f"expected {self.rank_r} deck powers, got shape {powers.shape}")
        by_coord = self.beta.lattice_by_coordinate()
        return int(sum(int(by_coord[idx]) * int(powers[j]) for j, idx in enumerate(self.covered)))


def pi_g(m: CoverModel, q: Point) -> np.ndarray:
    """Symplectization map on cotangent points: (x, xi) -> (pi(x), e^g xi)."""
    q = np.asarray(q, dtype=float)
    n = m.base.dim
    x, xi = q[:n], q[n:]
    return np.concatenate([m.project(x), math.exp(m.g(x)) * xi])


def deck_act_cotangent(m: CoverModel, powers, q: Point, conformal: bool = True) -> np.ndarray:
    """Deck action on cotangent cover points.

    With ``conformal`` the fiber is rescaled by e^{-<a, powers>}, which is the
    unique action making pi_g invariant.
    """
    q = np.asarray(q, dtype=float)
    n = m.base.dim
    x = m.deck_act(powers, q[:n])
    xi = q[n:]
    if conformal:
        xi = xi * math.exp(-m.deck_g_increment(powers))
    return np.concatenate([x, xi])


# ---------------------------------------------------------------------------
# differential forms and the Lichnerowicz derivative

def _partial(fn: Callable[[Point], float], p: Point, i: int, h: float,
             richardson: bool = False) -> float:
    """Central finite difference of a scalar function in direction i."""
    p = np.asarray(p, dtype=float)
    e = np.zeros(p.size)
    e[i] = 1.0

    def central(step: float) -> float:
        return (fn(p + step * e) - fn(p - step * e)) / (2.0 * step)

    if not richardson:
        return central(h)
    coarse = central(h)
    fine = central(h / 2.0)
    return (4.0 * fine - coarse) / 3.0


@dataclass(frozen=True)
class FormField:
    """Degree-k differential form as coefficient callables per sorted index.

    Missing indices are zero.  Optional ``coeff_grads`` supply analytic
    gradients of coefficient functions (full gradient vector per index).
    """

    degree: int
    dim: int
    coeffs: dict[tuple[int, ...], Callable[[Point], float]]
    coeff_grads: dict[tuple[int, ...], Callable[[Point], np.ndarray]] | None = None

    def __post_init__(self):
        if self.degree < 0:
            raise ValueError("form degree must be nonnegative")
        for idx in self.coeffs:
            if len(idx) != self.degree:
                raise ValueError(f"index {idx} does not match degree {self.degree}")
            if tuple(sorted(idx)) != tuple(idx) or len(set(idx)) != len(idx):
                raise ValueError(f"coefficient index {idx} must be strictly sorted")
            if any(i < 0 or i >= self.dim for i in idx):
                raise ValueError(f"coefficient index {idx} out of range for dim {self.dim}")

    def coefficient(self, idx: tuple[int, ...], p: Point) -> float:
        fn = self.coeffs.get(idx)
        return 0.0 if fn is None else float(fn(p))

    def coefficient_partial(self, idx: tuple[int, ...], p: Point, direction: int,
                            fd_step: float, richardson: bool = False) -> float:
        if self.coeff_grads is not None and idx in self.coeff_grads:
            return float(self.coeff_grads[idx](p)[direction])
        fn = self.coeffs.get(idx)
        if fn is None:
            return 0.0
        return _partial(fn, p, direction, fd_step, richardson)


def zero_form(dim: int, degree: int = 0) -> FormField:
    return FormField(degree=degree, dim=dim, coeffs={})


def scalar_form(dim: int, fn: Callable[[Point], float],
                grad: Callable[[Point], np.ndarray] | None = None) -> FormField:
    grads = {(): grad} if grad is not None else None
    return FormField(degree=0, dim=dim, coeffs={(): fn}, coeff_grads=grads)


def form_norm(values: dict[tuple[int, ...], float]) -> float:
    """Max absolute coefficient of a pointwise form value."""
    if not values:
        return 0.0
    return max(abs(v) for v in values.values())


def eval_lichnerowicz(alpha: FormField, beta: ClosedOneForm, p: Point,
                      fd_step: float = 1e-4, richardson: bool = False,
                      ) -> dict[tuple[int, ...], float]:
    """Evaluate (d alpha - beta ^ alpha) at p, one value per sorted index.

    The exterior derivative uses central finite differences of step
    ``fd_step`` unless alpha supplies analytic coefficient gradients.
    """
    if alpha.dim != beta.space.dim:
        raise ValueError(
            f"form dimension {alpha.dim} does not match space dimension {beta.space.dim}")
    if fd_step <= 0:
        raise ValueError("fd_step must be positive")
    p = np.asarray(p, dtype=float)
    n = alpha.dim
    k = alpha.degree
    out: dict[tuple[int, ...], float] = {}
    if k + 1 > n:
        return out
    bcomp = beta.components(p)
    for J in combinations(range(n), k + 1):
        total = 0.0
        for t, j in enumerate(J):
            sub = J[:t] + J[t + 1:]
            sign = -1.0 if t % 2 else 1.0
            total += sign * alpha.coefficient_partial(sub, p, j, fd_step, richardson)
            total -= sign * bcomp[j] * alpha.coefficient(sub, p)
        out[J] = total
    return out


def check_dbeta_squared(alpha: FormField, beta: ClosedOneForm, samples,
                        fd_step: float = 1e-4) -> float:
    """Max residual norm of d_beta(d_beta alpha) over sample points.

    The inner derivative is wrapped as a form whose coefficients are
    themselves finite-difference evaluations, so the outer derivative nests
    two difference stencils; for smooth inputs the residual is O(fd_step^2).
    """
    samples = list(samples)
    if not samples:
        raise ValueError("at least one sample point required")
    n = alpha.dim
    k = alpha.degree
    if k + 2 > n:
        return 0.0

    def inner_coeff(J):
        def fn(q: Point) -> float:
            return eval_lichnerowicz(alpha, beta, q, fd_step).get(J, 0.0)
        return fn

    inner = FormField(
        degree=k + 1,
        dim=n,
        coeffs={J: inner_coeff(J) for J in combinations(range(n), k + 1)},
    )
    worst = 0.0
    for p in samples:
        worst = max(worst, form_norm(eval_lichnerowicz(inner, beta, p, fd_step)))
    return worst


# ---------------------------------------------------------------------------
# JSON model descriptions

def load_cover_model(source: str | Path | dict) -> CoverModel:
    """Load a cover model from a JSON document.

    Format: ``{"circles": n1, "lines": n2, "beta": {"lattice": [a1, ...],
    "g0": "zero"}}``.  ``g0`` is a builtin name or an object
    ``{"name": ..., "amplitude": ...}``; arbitrary expressions are not parsed.
    """
    if isinstance(source, (str, Path)):
        path = Path(source)
        doc = json.loads(path.read_text()) if path.exists() else json.loads(str(source))
    else:
        doc = source
    circles = int(doc["circles"])
    lines = int(doc.get("lines", 0))
    space = product_space(circles, lines, labels=tuple(doc.get("labels", ())))
    beta_doc = doc.get("beta", {})
    lattice = tuple(int(a) for a in beta_doc.get("lattice", [0] * circles))
    g0_doc = beta_doc.get("g0", "zero")
    if isinstance(g0_doc, str):
        g0 = builtin_scalar_field(g0_doc, space.dim)
    else:
        g0 = builtin_scalar_field(g0_doc["name"], space.dim,
                                  amplitude=float(g0_doc.get("amplitude", 1.0)))
    beta = ClosedOneForm(space=space, lattice=lattice, g0=g0)
    return CoverModel(base=space, beta=beta)
