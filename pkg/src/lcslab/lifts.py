"""Homogeneous lifts of lcs Hamiltonian dynamics to the cover times a line.

Points of the enlarged cotangent bundle are (x, xi, s, sigma) with x a cover
base point, xi its fiber covector, and (s, sigma) the extra cotangent-line
pair, sigma != 0.  The two conifying projections are

    rho_cl(x, xi, s, sigma) = (x, xi / sigma)
    rho_eq(x, xi, s, sigma) = (x, e^{-g(x)} (xi / sigma + s dg_x))

intertwined by the Liouville map L, and lifted Hamiltonians are degree-1
positively homogeneous in (xi, sigma).  Flows here always use the standard
symplectic structure upstairs; the verifiers below check every diagram and
(non-)equivariance identity numerically.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .dynamics import (
    FlowConfig,
    Hamiltonian,
    LcsPair,
    Trajectory,
    _FlowAbort,
    _integrate,
    cover_pair,
    flow,
    make_symplectized_hamiltonian,
)
from .geometry import CoverModel, Point, pi_g


class SigmaCrossingError(RuntimeError):
    """sigma changed sign along a homogeneous flow; integration aborted."""

    def __init__(self, message: str, t: float, state: np.ndarray):
        super().__init__(message)
        self.t = t
        self.state = state


# ---------------------------------------------------------------------------
# points and the structural maps

@dataclass(frozen=True)
class HomogeneousPoint:
    """A point (x, xi, s, sigma) with sigma bounded away from the zero section."""

    x: np.ndarray
    xi: np.ndarray
    s: float
    sigma: float

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float))
        object.__setattr__(self, "xi", np.asarray(self.xi, dtype=float))
        if self.x.shape != self.xi.shape:
            raise ValueError("x and xi must have matching shapes")
        if self.sigma == 0.0:
            raise ValueError("sigma must be nonzero")

    def to_array(self) -> np.ndarray:
        return np.concatenate([self.x, self.xi, [self.s, self.sigma]])

    @classmethod
    def from_array(cls, arr: np.ndarray, n: int) -> "HomogeneousPoint":
        arr = np.asarray(arr, dtype=float)
        return cls(x=arr[:n], xi=arr[n:2 * n], s=float(arr[2 * n]), sigma=float(arr[2 * n + 1]))


def rho_cl(q: HomogeneousPoint) -> np.ndarray:
    """Drop the auxiliary factor: (x, xi / sigma) as a cover cotangent point."""
    if q.sigma == 0.0:
        raise ValueError("rho_cl undefined at sigma = 0")
    return np.concatenate([q.x, q.xi / q.sigma])


def rho_eq(m: CoverModel, q: HomogeneousPoint) -> np.ndarray:
    """Deck-twisted projection: (x, e^{-g}(xi / sigma + s dg))."""
    if q.sigma == 0.0:
        raise ValueError("rho_eq undefined at sigma = 0")
    w = m.dg(q.x)
    return np.concatenate([q.x, math.exp(-m.g(q.x)) * (q.xi / q.sigma + q.s * w)])


def liouville_L(m: CoverModel, q: HomogeneousPoint) -> HomogeneousPoint:
    """The exact-symplectomorphism intertwining the two projections."""
    g = m.g(q.x)
    w = m.dg(q.x)
    return HomogeneousPoint(
        x=q.x,
        xi=q.xi + q.s * q.sigma * w,
        s=math.exp(-g) * q.s,
        sigma=math.exp(g) * q.sigma,
    )


def liouville_L_inv(m: CoverModel, q: HomogeneousPoint) -> HomogeneousPoint:
    g = m.g(q.x)
    w = m.dg(q.x)
    return HomogeneousPoint(
        x=q.x,
        xi=q.xi - q.s * q.sigma * w,
        s=math.exp(g) * q.s,
        sigma=math.exp(-g) * q.sigma,
    )


def translate_Tc(c: float, q: HomogeneousPoint) -> HomogeneousPoint:
    return HomogeneousPoint(x=q.x, xi=q.xi, s=q.s + c, sigma=q.sigma)


def twisted_Dc(m: CoverModel, c: float, q: HomogeneousPoint) -> HomogeneousPoint:
    """The conjugate of the s-translation under the Liouville map."""
    eg = math.exp(m.g(q.x))
    w = m.dg(q.x)
    return HomogeneousPoint(
        x=q.x,
        xi=q.xi - eg * c * q.sigma * w,
        s=q.s + eg * c,
        sigma=q.sigma,
    )


def deck_act_homogeneous(m: CoverModel, powers, q: HomogeneousPoint) -> HomogeneousPoint:
    """Deck action upstairs: translate x, leave (xi, s, sigma) untouched."""
    return HomogeneousPoint(x=m.deck_act(powers, q.x), xi=q.xi, s=q.s, sigma=q.sigma)


# ---------------------------------------------------------------------------
# lifted Hamiltonians

@dataclass(frozen=True)
class LiftedHamiltonian:
    """Degree-1 homogeneous Hamiltonian upstairs, classical or equivariant.

    equivariant: f(x, xi, s, sigma) = sigma * h(pi(x), xi/sigma + s dg)
    classical:   f(x, xi, s, sigma) = sigma e^{-g} h(pi(x), e^{g} xi/sigma)

    Gradients use the analytic chain rule when the base Hamiltonian has one
    (and, for the equivariant kind, the primitive has a Hessian); otherwise
    central differences on the lift itself.
    """

    kind: str
    cover: CoverModel
    base: Hamiltonian
    grad_fd_step: float = 1e-6

    def __post_init__(self):
        if self.kind not in ("classical", "equivariant"):
            raise ValueError(f"unknown lift kind {self.kind!r}")

    @property
    def n(self) -> int:
        return self.cover.base.dim

    def _split(self, y: np.ndarray):
        n = self.n
        return y[:n], y[n:2 * n], float(y[2 * n]), float(y[2 * n + 1])

    def value(self, y: np.ndarray, t: float) -> float:
        x, xi, s, sigma = self._split(np.asarray(y, dtype=float))
        if sigma == 0.0:
            raise ValueError("lifted Hamiltonian undefined at sigma = 0")
        m = self.cover
        if self.kind == "equivariant":
            u = xi / sigma + s * m.dg(x)
            return sigma * self.base(np.concatenate([m.project(x), u]), t)
        g = m.g(x)
        eta = math.exp(g) * xi / sigma
        return sigma * math.exp(-g) * self.base(np.concatenate([m.project(x), eta]), t)

    def __call__(self, q: HomogeneousPoint | np.ndarray, t: float) -> float:
        y = q.to_array() if isinstance(q, HomogeneousPoint) else q
        return self.value(y, t)

    def gradient(self, y: np.ndarray, t: float) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        m = self.cover
        n = self.n
        hess = m.hess_g(y[:n]) if self.kind == "equivariant" else True
        if self.base.grad is None or hess is None:
            return self._fd_gradient(y, t)
        x, xi, s, sigma = self._split(y)
        out = np.empty(2 * n + 2)
        if self.kind == "equivariant":
            w = m.dg(x)
            u = xi / sigma + s * w
            down = np.concatenate([m.project(x), u])
            hv = self.base(down, t)
            hg = self.base.gradient(down, t)
            hx, heta = hg[:n], hg[n:]
            out[:n] = sigma * (hx + s * (hess @ heta))
            out[n:2 * n] = heta
            out[2 * n] = sigma * float(np.dot(heta, w))
            out[2 * n + 1] = hv - float(np.dot(heta, xi)) / sigma
        else:
            g = m.g(x)
            w = m.dg(x)
            eg = math.exp(g)
            eta = eg * xi / sigma
            down = np.concatenate([m.project(x), eta])
            hv = self.base(down, t)
            hg = self.base.gradient(down, t)
            hx, heta = hg[:n], hg[n:]
            out[:n] = sigma / eg * (hx + w * (float(np.dot(heta, eta)) - hv))
            out[n:2 * n] = heta
            out[2 * n] = 0.0
            out[2 * n + 1] = hv / eg - float(np.dot(heta, xi)) / sigma
        return out

    def _fd_gradient(self, y: np.ndarray, t: float) -> np.ndarray:
        out = np.empty(y.size)
        for i in range(y.size):
            e = np.zeros(y.size)
            e[i] = self.grad_fd_step
            out[i] = (self.value(y + e, t) - self.value(y - e, t)) / (2.0 * self.grad_fd_step)
        return out


def lift_hamiltonian(kind: str, m: CoverModel, h: Hamiltonian) -> LiftedHamiltonian:
    return LiftedHamiltonian(kind=kind, cover=m, base=h)


# ---------------------------------------------------------------------------
# homogeneous flows

def flow_homogeneous(kind: str, m: CoverModel, h: Hamiltonian,
                     q0: HomogeneousPoint, t_span: tuple[float, float] = (0.0, 1.0),
                     config: FlowConfig = FlowConfig()) -> Trajectory:
    """RK4 flow of the lifted Hamiltonian under the standard symplectic form.

    The sign of sigma is monitored along the trajectory and a crossing
    aborts the integration with a diagnostic.
    """
    lifted = lift_hamiltonian(kind, m, h)
    n = m.base.dim
    sigma_slot = 2 * n + 1
    if q0.sigma == 0.0:
        raise ValueError("initial sigma must be nonzero")
    sign0 = math.copysign(1.0, q0.sigma)

    def rhs(t, y):
        grad = lifted.gradient(y, t)
        out = np.empty(y.size)
        out[:n] = grad[n:2 * n]          # x' = df/dxi
        out[n:2 * n] = -grad[:n]         # xi' = -df/dx
        out[2 * n] = grad[sigma_slot]    # s' = df/dsigma
        out[sigma_slot] = -grad[2 * n]   # sigma' = -df/ds
        return out

    def guard(y_prev, y_next):
        if y_next[sigma_slot] == 0.0 or math.copysign(1.0, y_next[sigma_slot]) != sign0:
            return "sigma changed sign along the homogeneous flow"
        if not np.all(np.isfinite(y_next)):
            return "non-finite state"
        return None

    t0, t1 = t_span
    try:
        times, points, errs = _integrate(rhs, q0.to_array(), t0, t1, config.steps,
                                         guard, config.per_step_errors)
    except _FlowAbort as abort:
        raise SigmaCrossingError(abort.reason, abort.info["t"], q0.to_array()) from None
    final_error = None
    if config.estimate_error:
        _, fine, _ = _integrate(rhs, q0.to_array(), t0, t1, 2 * config.steps)
        final_error = float(np.linalg.norm(points[-1] - fine[-1]))
    return Trajectory(times=times, points=points, final_error=final_error, step_errors=errs)


def flow_homogeneous_final(kind: str, m: CoverModel, h: Hamiltonian,
                           q0: HomogeneousPoint, t: float,
                           steps: int) -> HomogeneousPoint:
    cfg = FlowConfig(steps=steps, estimate_error=False)
    traj = flow_homogeneous(kind, m, h, q0, (0.0, t), cfg)
    return HomogeneousPoint.from_array(traj.final, m.base.dim)


# ---------------------------------------------------------------------------
# diagram verification

IDENTITY_NAMES = (
    "diagram_cl",
    "diagram_eq",
    "intertwine_L",
    "rho_factorization",
    "TcDc",
    "deck_equivariance_eq",
    "deck_nonequivariance_cl",
    "s_shift_equivariance",
)


@dataclass
class DiagramReport:
    """Max deviation of one structural identity over sampled points."""

    identity: str
    samples: int
    max_deviation: float
    witness_point: np.ndarray | None = None
    witness_lhs: np.ndarray | None = None
    witness_rhs: np.ndarray | None = None

    def to_json(self) -> str:
        doc = {
            "identity": self.identity,
            "samples": self.samples,
            "max_deviation": self.max_deviation,
            "witness": None,
        }
        if self.witness_point is not None:
            doc["witness"] = {
                "point": [float(v) for v in np.atleast_1d(self.witness_point)],
                "lhs": [float(v) for v in np.atleast_1d(self.witness_lhs)],
                "rhs": [float(v) for v in np.atleast_1d(self.witness_rhs)],
            }
        return json.dumps(doc, indent=2)


def _report_from_pairs(identity: str, triples) -> DiagramReport:
    worst = -1.0
    witness = None
    count = 0
    for point, lhs, rhs in triples:
        count += 1
        dev = float(np.linalg.norm(np.asarray(lhs) - np.asarray(rhs)))
        if dev > worst:
            worst = dev
            witness = (point, np.asarray(lhs), np.asarray(rhs))
    if count == 0:
        raise ValueError("at least one sample required")
    return DiagramReport(identity=identity, samples=count, max_deviation=worst,
                         witness_point=np.asarray(witness[0]), witness_lhs=witness[1],
                         witness_rhs=witness[2])


def random_homogeneous_points(m: CoverModel, rng: np.random.Generator, count: int,
                              x_box: float = 1.5, xi_box: float = 1.0,
                              s_box: float = 1.0,
                              sigma_range: tuple[float, float] = (0.5, 2.0),
                              ) -> list[HomogeneousPoint]:
    n = m.base.dim
    pts = []
    for _ in range(count):
        pts.append(HomogeneousPoint(
            x=rng.uniform(-x_box, x_box, size=n),
            xi=rng.uniform(-xi_box, xi_box, size=n),
            s=rng.uniform(-s_box, s_box),
            sigma=rng.uniform(*sigma_range),
        ))
    return pts


def verify_identity(name: str, m: CoverModel, h: Hamiltonian | None, samples,
                    t: float = 1.0, steps: int = 1000, c: float = 0.7,
                    deck_powers=None) -> DiagramReport:
    """Check one structural identity and report the worst sampled deviation.

    Pointwise identities (rho_factorization, TcDc) need no Hamiltonian; flow
    identities integrate both sides independently with ``steps`` RK4 steps.
    For deck_nonequivariance_cl a LARGE deviation is the expected outcome;
    the report carries the witness either way.
    """
    if name not in IDENTITY_NAMES:
        raise ValueError(f"unknown identity {name!r}; expected one of {IDENTITY_NAMES}")
    samples = list(samples)
    n = m.base.dim
    if deck_powers is None:
        deck_powers = np.zeros(m.rank_r, dtype=int)
        if m.rank_r:
            deck_powers[0] = 1

    if name == "rho_factorization":
        triples = ((q.to_array(), rho_eq(m, q), rho_cl(liouville_L(m, q))) for q in samples)
        return _report_from_pairs(name, triples)

    if name == "TcDc":
        triples = ((q.to_array(),
                    liouville_L_inv(m, translate_Tc(c, q)).to_array(),
                    twisted_Dc(m, c, liouville_L_inv(m, q)).to_array())
                   for q in samples)
        return _report_from_pairs(name, triples)

    if h is None:
        raise ValueError(f"identity {name!r} requires a Hamiltonian")
    cfg_steps = steps

    def up(kind, q):
        return flow_homogeneous_final(kind, m, h, q, t, cfg_steps)

    if name == "intertwine_L":
        triples = ((q.to_array(),
                    up("equivariant", q).to_array(),
                    liouville_L_inv(m, up("classical", liouville_L(m, q))).to_array())
                   for q in samples)
        return _report_from_pairs(name, triples)

    if name in ("diagram_cl", "diagram_eq"):
        rho = rho_cl if name == "diagram_cl" else (lambda q: rho_eq(m, q))
        kind = "classical" if name == "diagram_cl" else "equivariant"
        cpair = cover_pair(m)
        h_cover = make_symplectized_hamiltonian(m, h)
        fcfg = FlowConfig(steps=cfg_steps, estimate_error=False)

        def triple(q):
            lhs = rho(up(kind, q))
            rhs = flow(cpair, h_cover, rho(q), (0.0, t), fcfg).final
            return q.to_array(), lhs, rhs

        return _report_from_pairs(name, (triple(q) for q in samples))

    if name in ("deck_equivariance_eq", "deck_nonequivariance_cl"):
        kind = "equivariant" if name == "deck_equivariance_eq" else "classical"

        def triple(q):
            lhs = up(kind, deck_act_homogeneous(m, deck_powers, q)).to_array()
            rhs = deck_act_homogeneous(m, deck_powers, up(kind, q)).to_array()
            return q.to_array(), lhs, rhs

        return _report_from_pairs(name, (triple(q) for q in samples))

    # s_shift_equivariance: the equivariant flow commutes with s -> s + 1
    # whenever the base Hamiltonian is period-1 in the fiber coordinate
    # conjugate to the covered circle direction.
    def triple(q):
        lhs = up("equivariant", translate_Tc(1.0, q)).to_array()
        rhs = translate_Tc(1.0, up("equivariant", q)).to_array()
        return q.to_array(), lhs, rhs

    return _report_from_pairs(name, (triple(q) for q in samples))


# ---------------------------------------------------------------------------
# canonical one-form pullback residual (L* lambda = lambda)

def canonical_one_form(y: np.ndarray, n: int) -> np.ndarray:
    """Components of xi dx + sigma ds at a homogeneous point array."""
    out = np.zeros(2 * n + 2)
    out[:n] = y[n:2 * n]
    out[2 * n] = y[2 * n + 1]
    return out


def liouville_pullback_residual(m: CoverModel, samples, fd_step: float = 1e-6) -> float:
    """Max norm of L* lambda - lambda via a finite-difference Jacobian."""
    n = m.base.dim
    worst = 0.0
    for q in samples:
        y = q.to_array()
        Ly = liouville_L(m, HomogeneousPoint.from_array(y, n)).to_array()
        lam_at_L = canonical_one_form(Ly, n)
        J = np.empty((y.size, y.size))
        for j in range(y.size):
            e = np.zeros(y.size)
            e[j] = fd_step
            plus = liouville_L(m, HomogeneousPoint.from_array(y + e, n)).to_array()
            minus = liouville_L(m, HomogeneousPoint.from_array(y - e, n)).to_array()
            J[:, j] = (plus - minus) / (2.0 * fd_step)
        pulled = J.T @ lam_at_L
        worst = max(worst, float(np.linalg.norm(pulled - canonical_one_form(y, n))))
    return worst


def sigma_transport_defect(m: CoverModel, h: Hamiltonian, q0: HomogeneousPoint,
                           t: float = 1.0, steps: int = 2000) -> float:
    """|sigma(t) e^{g(x(t))} / (sigma(0) e^{g(x(0))}) - 1| along the equivariant flow."""
    traj = flow_homogeneous("equivariant", m, h, q0, (0.0, t),
                            FlowConfig(steps=steps, estimate_error=False))
    n = m.base.dim
    start = traj.points[0]
    end = traj.points[-1]
    inv0 = start[2 * n + 1] * math.exp(m.g(start[:n]))
    inv1 = end[2 * n + 1] * math.exp(m.g(end[:n]))
    return abs(inv1 / inv0 - 1.0)
