"""lcs Hamiltonian vector fields and flows on cotangent-bundle models.

Phase points are concatenated arrays [base coords..., fiber coords...], the
i-th fiber coordinate conjugate to the i-th base coordinate.  The two-form
is omega = d lambda - beta ^ lambda for the canonical lambda = sum xi_i dx_i.

Sign pin: the two-form matrix O has O[x_i][xi_i] = -1, O[xi_i][x_i] = +1
(the flat d xi ^ dx convention), and the Hamiltonian field solves
O X = d_beta h, so that h = xi translates x forward and h = 1 with beta =
d theta pushes the fiber upward.  Every flow test depends on this pin.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .geometry import ClosedOneForm, CoverModel, ModelSpace, Point, pi_g


class DegenerateFormError(RuntimeError):
    """The lcs two-form matrix is numerically singular at a point."""


class DivergenceError(RuntimeError):
    """A flow exceeded the blow-up bound; carries the partial trajectory."""

    def __init__(self, message: str, trajectory: "Trajectory"):
        super().__init__(message)
        self.trajectory = trajectory


# ---------------------------------------------------------------------------
# Hamiltonians

@dataclass(frozen=True)
class SupportSpec:
    """Declared support of a Hamiltonian in the fiber norm.

    ``compact``: h vanishes for |fiber| >= radius.  ``constant_outside``:
    h equals ``constant`` there.
    """

    kind: str
    fiber_radius: float
    constant: float = 0.0

    def __post_init__(self):
        if self.kind not in ("compact", "constant_outside"):
            raise ValueError(f"unknown support kind {self.kind!r}")
        if self.fiber_radius <= 0:
            raise ValueError("support radius must be positive")


@dataclass(frozen=True)
class Hamiltonian:
    """Scalar function of (phase point, time) with optional analytic gradient."""

    value: Callable[[Point, float], float]
    grad: Callable[[Point, float], np.ndarray] | None = None
    support: SupportSpec | None = None
    name: str = ""

    def __call__(self, p: Point, t: float) -> float:
        return float(self.value(p, t))

    def gradient(self, p: Point, t: float, fd_step: float = 1e-6) -> np.ndarray:
        if self.grad is not None:
            return np.asarray(self.grad(p, t), dtype=float)
        p = np.asarray(p, dtype=float)
        out = np.empty(p.size)
        for i in range(p.size):
            e = np.zeros(p.size)
            e[i] = fd_step
            out[i] = (self.value(p + e, t) - self.value(p - e, t)) / (2.0 * fd_step)
        return out

    def check_support(self, space: ModelSpace, rng: np.random.Generator,
                      samples: int = 32, t: float = 0.0, tol: float = 1e-9) -> bool:
        """Spot-check the declared support by sampling outside it."""
        if self.support is None:
            return True
        n = space.dim
        base = space.random_points(rng, samples)
        for b in base:
            direction = rng.normal(size=n)
            direction /= np.linalg.norm(direction)
            fiber = direction * self.support.fiber_radius * rng.uniform(1.5, 4.0)
            p = np.concatenate([b, fiber])
            target = 0.0 if self.support.kind == "compact" else self.support.constant
            if abs(self.value(p, t) - target) > tol:
                return False
        return True


def constant_hamiltonian(c: float, name: str = "") -> Hamiltonian:
    return Hamiltonian(
        value=lambda p, t: c,
        grad=lambda p, t: np.zeros(np.asarray(p).size),
        support=SupportSpec(kind="constant_outside", fiber_radius=1.0, constant=c),
        name=name or f"const[{c}]",
    )


# ---------------------------------------------------------------------------
# the lcs pair and its two-form

@dataclass(frozen=True)
class LcsPair:
    """Canonical Liouville form with a Lee form pulled back from the base.

    ``beta = None`` is the plain symplectic case (used on covers).
    """

    space: ModelSpace
    beta: ClosedOneForm | None = None
    degeneracy_tol: float = 1e-12

    def __post_init__(self):
        if self.beta is not None and self.beta.space != self.space:
            raise ValueError("beta must live on the base of the cotangent model")

    @property
    def phase_dim(self) -> int:
        return 2 * self.space.dim

    def beta_pullback(self, p: Point) -> np.ndarray:
        """Coefficients of the pulled-back Lee form at a phase point."""
        out = np.zeros(self.phase_dim)
        if self.beta is not None:
            out[: self.space.dim] = self.beta.components(np.asarray(p)[: self.space.dim])
        return out


def lcs_two_form_matrix(pair: LcsPair, p: Point) -> np.ndarray:
    """Matrix O[i][j] = omega(e_i, e_j) of d_beta lambda in the coordinate basis."""
    n = pair.space.dim
    p = np.asarray(p, dtype=float)
    xi = p[n:]
    O = np.zeros((2 * n, 2 * n))
    for i in range(n):
        O[i, n + i] = -1.0
        O[n + i, i] = 1.0
    if pair.beta is not None:
        b = pair.beta.components(p[:n])
        # -(beta ^ lambda) on base-base pairs: entries -(b_i xi_j - b_j xi_i)
        for i in range(n):
            for j in range(n):
                O[i, j] -= b[i] * xi[j] - b[j] * xi[i]
    det = np.linalg.det(O)
    if abs(det) < pair.degeneracy_tol:
        raise DegenerateFormError(f"two-form degenerate at {p} (det={det:.3e})")
    return O


def d_beta_h(pair: LcsPair, h: Hamiltonian, t: float, p: Point,
             fd_step: float = 1e-6) -> np.ndarray:
    """Lichnerowicz derivative of the Hamiltonian at a phase point: dh - h beta."""
    p = np.asarray(p, dtype=float)
    out = h.gradient(p, t, fd_step)
    if pair.beta is not None:
        out = out - h(p, t) * pair.beta_pullback(p)
    return out


def hamiltonian_vector_field(pair: LcsPair, h: Hamiltonian, t: float, p: Point,
                             fd_step: float = 1e-6) -> np.ndarray:
    """Solve O X = d_beta h at p (see the module sign pin)."""
    rhs = d_beta_h(pair, h, t, p, fd_step)
    if not np.all(np.isfinite(rhs)):
        raise ValueError(f"non-finite Hamiltonian gradient at {p}")
    O = lcs_two_form_matrix(pair, p)
    return np.linalg.solve(O, rhs)


# ---------------------------------------------------------------------------
# trajectories and RK4 flows

@dataclass
class Trajectory:
    """Fixed-grid integration output."""

    times: np.ndarray
    points: np.ndarray
    final_error: float | None = None
    step_errors: np.ndarray | None = None

    def __post_init__(self):
        if not np.all(np.diff(self.times) > 0):
            raise ValueError("time grid must be strictly increasing")

    @property
    def final(self) -> np.ndarray:
        return self.points[-1]

    def to_csv(self, target: str | Path, labels: tuple[str, ...] = ()) -> None:
        """Write columns t, then coordinates in declared order."""
        dim = self.points.shape[1]
        if not labels:
            labels = tuple(f"c{i}" for i in range(dim))
        with open(target, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", *labels])
            for t, row in zip(self.times, self.points):
                writer.writerow([repr(float(t)), *[repr(float(v)) for v in row]])


@dataclass(frozen=True)
class FlowConfig:
    steps: int = 1000
    blowup_norm: float = 1e6
    estimate_error: bool = True
    per_step_errors: bool = False
    grad_fd_step: float = 1e-6


class _FlowAbort(Exception):
    def __init__(self, reason: str, index: int, info: dict):
        super().__init__(reason)
        self.reason = reason
        self.index = index
        self.info = info


def _rk4_step(rhs, t, y, h):
    k1 = rhs(t, y)
    k2 = rhs(t + h / 2.0, y + (h / 2.0) * k1)
    k3 = rhs(t + h / 2.0, y + (h / 2.0) * k2)
    k4 = rhs(t + h, y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _integrate(rhs, y0, t0, t1, steps, guard=None, per_step_errors=False):
    if steps < 1:
        raise ValueError("step count must be >= 1")
    if not math.isfinite(t0) or not math.isfinite(t1) or t1 <= t0:
        raise ValueError("time span must be finite with t1 > t0")
    h = (t1 - t0) / steps
    y = np.asarray(y0, dtype=float)
    times = t0 + h * np.arange(steps + 1)
    points = np.empty((steps + 1, y.size))
    points[0] = y
    errs = np.empty(steps) if per_step_errors else None
    for i in range(steps):
        t = times[i]
        y_next = _rk4_step(rhs, t, y, h)
        if per_step_errors:
            y_mid = _rk4_step(rhs, t, y, h / 2.0)
            y_two = _rk4_step(rhs, t + h / 2.0, y_mid, h / 2.0)
            errs[i] = float(np.linalg.norm(y_next - y_two))
        if guard is not None:
            reason = guard(y, y_next)
            if reason is not None:
                points[i + 1] = y_next
                raise _FlowAbort(reason, i + 1, {"t": float(times[i + 1])})
        points[i + 1] = y_next
        y = y_next
    return times, points, errs


def flow(pair: LcsPair, h: Hamiltonian, p0: Point, t_span: tuple[float, float] = (0.0, 1.0),
         config: FlowConfig = FlowConfig()) -> Trajectory:
    """Fixed-step RK4 flow of the lcs Hamiltonian field from p0.

    The final-point error is estimated by a step-halving comparison when
    ``config.estimate_error`` is set.  Exceeding the blow-up bound raises
    DivergenceError carrying the partial trajectory.
    """
    n = pair.space.dim

    def rhs(t, y):
        return hamiltonian_vector_field(pair, h, t, y, config.grad_fd_step)

    def guard(y_prev, y_next):
        if float(np.linalg.norm(y_next[n:])) > config.blowup_norm:
            return "fiber norm exceeded blow-up bound"
        if not np.all(np.isfinite(y_next)):
            return "non-finite state"
        return None

    t0, t1 = t_span
    try:
        times, points, errs = _integrate(rhs, p0, t0, t1, config.steps, guard,
                                         config.per_step_errors)
    except _FlowAbort as abort:
        partial = Trajectory(times=t0 + (t1 - t0) / config.steps * np.arange(abort.index + 1),
                             points=np.zeros((abort.index + 1, 2 * n)))
        raise DivergenceError(abort.reason, partial) from None
    final_error = None
    if config.estimate_error:
        _, fine, _ = _integrate(rhs, p0, t0, t1, 2 * config.steps)
        final_error = float(np.linalg.norm(points[-1] - fine[-1]))
    return Trajectory(times=times, points=points, final_error=final_error,
                      step_errors=errs)


# ---------------------------------------------------------------------------
# symplectized lift of a Hamiltonian and the intertwining check

def cover_pair(m: CoverModel) -> LcsPair:
    """The plain symplectic pair on the cotangent bundle of the cover."""
    return LcsPair(space=m.cover_space(), beta=None)


def make_symplectized_hamiltonian(m: CoverModel, h: Hamiltonian) -> Hamiltonian:
    """e^{-g} (h o pi_g) on the cover, the Hamiltonian of the symplectized lift."""
    n = m.base.dim

    def value(q: Point, t: float) -> float:
        return math.exp(-m.g(q[:n])) * h(pi_g(m, q), t)

    grad = None
    if h.grad is not None:
        def grad(q: Point, t: float) -> np.ndarray:
            q = np.asarray(q, dtype=float)
            x, xi = q[:n], q[n:]
            eg = math.exp(m.g(x))
            down = np.concatenate([m.project(x), eg * xi])
            hv = h(down, t)
            hg = h.gradient(down, t)
            hx, heta = hg[:n], hg[n:]
            w = m.dg(x)
            out = np.empty(2 * n)
            out[:n] = (hx + w * (float(np.dot(heta, eg * xi)) - hv)) / eg
            out[n:] = heta
            return out

    return Hamiltonian(value=value, grad=grad, support=h.support,
                       name=f"symplectized[{h.name}]")


def phase_distance(space: ModelSpace, p: Point, q: Point) -> float:
    """Distance between phase points: periodic on circle base coords."""
    n = space.dim
    base = space.distance(np.asarray(p)[:n], np.asarray(q)[:n])
    fiber = float(np.linalg.norm(np.asarray(p)[n:] - np.asarray(q)[n:]))
    return math.hypot(base, fiber)


def verify_symplectized_intertwine(m: CoverModel, h: Hamiltonian, samples,
                                   t: float = 1.0, steps: int = 2000) -> float:
    """Max deviation of pi_g o (cover flow) against (base flow) o pi_g."""
    base_pair = LcsPair(space=m.base, beta=m.beta)
    cov_pair = cover_pair(m)
    h_cover = make_symplectized_hamiltonian(m, h)
    cfg = FlowConfig(steps=steps, estimate_error=False)
    worst = 0.0
    for q in samples:
        up = flow(cov_pair, h_cover, q, (0.0, t), cfg).final
        lhs = pi_g(m, up)
        rhs = flow(base_pair, h, pi_g(m, q), (0.0, t), cfg).final
        worst = max(worst, phase_distance(m.base, lhs, rhs))
    return worst


def flow_map_jacobian(pair: LcsPair, h: Hamiltonian, p0: Point,
                      t_span: tuple[float, float], steps: int,
                      fd_step: float = 1e-6) -> np.ndarray:
    """Finite-difference Jacobian of the time-t flow map at p0."""
    p0 = np.asarray(p0, dtype=float)
    dim = p0.size
    cfg = FlowConfig(steps=steps, estimate_error=False)
    J = np.empty((dim, dim))
    for j in range(dim):
        e = np.zeros(dim)
        e[j] = fd_step
        plus = flow(pair, h, p0 + e, t_span, cfg).final
        minus = flow(pair, h, p0 - e, t_span, cfg).final
        J[:, j] = (plus - minus) / (2.0 * fd_step)
    return J


def flat_symplectic_matrix(n: int) -> np.ndarray:
    """The constant matrix of d xi ^ dx on a 2n-dimensional phase space."""
    O = np.zeros((2 * n, 2 * n))
    for i in range(n):
        O[i, n + i] = -1.0
        O[n + i, i] = 1.0
    return O
