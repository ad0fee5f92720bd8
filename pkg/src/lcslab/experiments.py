"""Experiment harness: intersection counting against the window-Betti bound,
the upstairs/downstairs correspondence for the lifted conormal, the
non-squeezing falsifier, and the batch verifier table.

Every command takes an ExperimentConfig, embeds the resolved config and seed
in its report, and is deterministic given both.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import asymptotic, tamarkin
from .dynamics import FlowConfig, Hamiltonian, LcsPair, SupportSpec, flow
from .geometry import ClosedOneForm, CoverModel, builtin_scalar_field, product_space
from .lifts import (
    HomogeneousPoint,
    FlowConfig as _FlowConfig,
    flow_homogeneous_final,
    lift_hamiltonian,
    liouville_pullback_residual,
    random_homogeneous_points,
    verify_identity,
)


# ---------------------------------------------------------------------------
# smooth bump used by the builtin Hamiltonians

def bump(u: float) -> float:
    """Smooth compactly supported plateau-free bump on (-1, 1), bump(0) = 1."""
    if abs(u) >= 1.0:
        return 0.0
    return math.exp(1.0 - 1.0 / (1.0 - u * u))


def bump_prime(u: float) -> float:
    if abs(u) >= 1.0:
        return 0.0
    w = 1.0 - u * u
    return bump(u) * (-2.0 * u / (w * w))


def _mollifier(t: float) -> float:
    return math.exp(-1.0 / t) if t > 0 else 0.0


def smooth_step(t: float) -> float:
    """Monotone smooth step: 0 for t <= 0, 1 for t >= 1."""
    a = _mollifier(t)
    b = _mollifier(1.0 - t)
    return a / (a + b)


def plateau(u: float) -> float:
    """1 on |u| <= 1, smooth decay to 0 at |u| >= 2."""
    return smooth_step(2.0 - abs(u))


# ---------------------------------------------------------------------------
# shipped models

def _cover(circles: int, lines: int, lattice, g0: str = "zero",
           amplitude: float = 1.0) -> CoverModel:
    space = product_space(circles, lines)
    beta = ClosedOneForm(space=space, lattice=tuple(lattice),
                         g0=builtin_scalar_field(g0, space.dim, amplitude))
    return CoverModel(base=space, beta=beta)


MODELS: dict[str, Callable[[], CoverModel]] = {
    "s1_exact": lambda: _cover(1, 0, (0,)),
    "s1_dtheta": lambda: _cover(1, 0, (1,)),
    "s1_dtheta_cos": lambda: _cover(1, 0, (1,), g0="cos_theta1", amplitude=0.3),
    "t2_exact": lambda: _cover(2, 0, (0, 0)),
    "t2_dtheta1": lambda: _cover(2, 0, (1, 0)),
    "r1_s1_dz": lambda: _cover(1, 1, (1,)),
}


def make_model(name: str) -> CoverModel:
    if name not in MODELS:
        raise ValueError(f"unknown model {name!r}; available: {sorted(MODELS)}")
    return MODELS[name]()


def equivariant_model_for(name: str) -> asymptotic.EquivariantSheafModel:
    """Constant-sheaf window model matching a named cover model."""
    cover = make_model(name)
    if name == "s1_exact":
        return asymptotic.circle_model_exact(cover)
    if name in ("s1_dtheta", "s1_dtheta_cos"):
        return asymptotic.circle_model_unit_class(cover)
    if name == "t2_exact":
        return asymptotic.torus_model_exact(cover)
    if name == "t2_dtheta1":
        return asymptotic.torus_model_first_class(cover)
    raise ValueError(f"no shipped sheaf model for {name!r}")


# ---------------------------------------------------------------------------
# shipped Hamiltonians

def bump_cos_hamiltonian(fiber_radius: float = 1.0, amplitude: float = 1.0) -> Hamiltonian:
    """h(theta, xi) = amplitude * bump(|xi| / rho) * cos(2 pi theta) on T*S^1."""
    two_pi = 2.0 * math.pi

    def value(p, t):
        return amplitude * bump(p[1] / fiber_radius) * math.cos(two_pi * p[0])

    def grad(p, t):
        b = bump(p[1] / fiber_radius)
        db = bump_prime(p[1] / fiber_radius) / fiber_radius
        return np.array([
            -amplitude * two_pi * b * math.sin(two_pi * p[0]),
            amplitude * db * math.cos(two_pi * p[0]),
        ])

    return Hamiltonian(value=value, grad=grad,
                       support=SupportSpec("compact", fiber_radius),
                       name="bump_cos")


def sin_perturbation_hamiltonian(epsilon: float = 0.1,
                                 fiber_radius: float = 1.0) -> Hamiltonian:
    """h = epsilon * sin(2 pi theta) * bump(xi), the intersection-count probe."""
    two_pi = 2.0 * math.pi

    def value(p, t):
        return epsilon * math.sin(two_pi * p[0]) * bump(p[1] / fiber_radius)

    def grad(p, t):
        b = bump(p[1] / fiber_radius)
        db = bump_prime(p[1] / fiber_radius) / fiber_radius
        return np.array([
            epsilon * two_pi * math.cos(two_pi * p[0]) * b,
            epsilon * math.sin(two_pi * p[0]) * db,
        ])

    return Hamiltonian(value=value, grad=grad,
                       support=SupportSpec("compact", fiber_radius),
                       name=f"sin_perturbation[{epsilon}]")


def zero_hamiltonian(dim: int = 1) -> Hamiltonian:
    return Hamiltonian(value=lambda p, t: 0.0,
                       grad=lambda p, t: np.zeros(np.asarray(p).size),
                       support=SupportSpec("compact", 1.0),
                       name="zero")


def sin_sin_perturbation_hamiltonian(epsilon: float = 0.1,
                                     fiber_radius: float = 1.0) -> Hamiltonian:
    """h = epsilon sin(2 pi theta1) sin(2 pi theta2) bump(|xi|), for T*T^2."""
    two_pi = 2.0 * math.pi

    def value(p, t):
        r = math.hypot(p[2], p[3])
        return (epsilon * math.sin(two_pi * p[0]) * math.sin(two_pi * p[1])
                * bump(r / fiber_radius))

    def grad(p, t):
        s1, c1 = math.sin(two_pi * p[0]), math.cos(two_pi * p[0])
        s2, c2 = math.sin(two_pi * p[1]), math.cos(two_pi * p[1])
        r = math.hypot(p[2], p[3])
        b = bump(r / fiber_radius)
        db = bump_prime(r / fiber_radius) / fiber_radius
        radial = epsilon * s1 * s2 * db / r if r > 1e-12 else 0.0
        return np.array([
            epsilon * two_pi * c1 * s2 * b,
            epsilon * two_pi * s1 * c2 * b,
            radial * p[2],
            radial * p[3],
        ])

    return Hamiltonian(value=value, grad=grad,
                       support=SupportSpec("compact", fiber_radius),
                       name=f"sin_sin_perturbation[{epsilon}]")


def nsq_rotation_hamiltonian(cutoff_radius: float = 4.0, speed: float = 1.0) -> Hamiltonian:
    """Rotation in the (x1, xi1) plane of the strip model: exact rotation
    inside the cutoff radius, smooth compact decay outside, no dependence on
    the circle pair so translation equivariance is automatic.

    Phase layout of the strip model: base (z, x), fiber (zeta, xi).
    """

    def value(p, t):
        x, xi = p[1], p[3]
        r = math.hypot(x, xi)
        return 0.5 * speed * plateau(r / cutoff_radius) * r * r

    return Hamiltonian(value=value, grad=None,
                       support=SupportSpec("compact", 4.0 * cutoff_radius),
                       name="nsq_rotation")


def nsq_nonequivariant_hamiltonian() -> Hamiltonian:
    """Deliberately not periodic in the fiber coordinate of the circle factor."""

    def value(p, t):
        x, zeta, xi = p[1], p[2], p[3]
        return math.exp(-(x * x + xi * xi)) * math.exp(-zeta * zeta)

    return Hamiltonian(value=value, grad=None,
                       support=SupportSpec("compact", 50.0),
                       name="nsq_nonequivariant")


def zeta_wave_hamiltonian(fiber_radius: float = 2.0) -> Hamiltonian:
    """Period-1 in both the circle coordinate and its conjugate fiber.

    Used for the s-shift equivariance identity on the strip model.
    """
    two_pi = 2.0 * math.pi

    def value(p, t):
        z, x, zeta, xi = p[0], p[1], p[2], p[3]
        return bump(math.hypot(x, xi) / fiber_radius) * math.cos(two_pi * zeta) * math.cos(
            two_pi * z)

    return Hamiltonian(value=value, grad=None,
                       support=SupportSpec("compact", 50.0),
                       name="zeta_wave")


HAMILTONIANS: dict[str, Callable[..., Hamiltonian]] = {
    "zero": zero_hamiltonian,
    "bump_cos": bump_cos_hamiltonian,
    "sin_perturbation": sin_perturbation_hamiltonian,
    "sin_sin_perturbation": sin_sin_perturbation_hamiltonian,
    "nsq_identity": zero_hamiltonian,
    "nsq_rotation": nsq_rotation_hamiltonian,
    "nsq_nonequivariant": nsq_nonequivariant_hamiltonian,
    "zeta_wave": zeta_wave_hamiltonian,
}


def make_hamiltonian(name: str, **params) -> Hamiltonian:
    if name not in HAMILTONIANS:
        raise ValueError(f"unknown Hamiltonian {name!r}; available: {sorted(HAMILTONIANS)}")
    return HAMILTONIANS[name](**params)


# ---------------------------------------------------------------------------
# configuration

@dataclass
class ExperimentConfig:
    experiment: str
    model: str = "s1_exact"
    hamiltonian: dict = field(default_factory=lambda: {"name": "sin_perturbation"})
    knobs: dict = field(default_factory=dict)
    seed: int = 0
    out: str | None = None

    def __post_init__(self):
        for key, value in self.knobs.items():
            if isinstance(value, (int, float)) and value <= 0:
                raise ValueError(f"knob {key!r} must be positive, got {value}")
        if self.hamiltonian.get("name") not in HAMILTONIANS:
            raise ValueError(f"unknown Hamiltonian {self.hamiltonian.get('name')!r}")

    def knob(self, key: str, default):
        return self.knobs.get(key, default)

    def build_hamiltonian(self) -> Hamiltonian:
        params = {k: v for k, v in self.hamiltonian.items() if k != "name"}
        return make_hamiltonian(self.hamiltonian["name"], **params)

    def resolved(self) -> dict:
        return {
            "experiment": self.experiment,
            "model": self.model,
            "hamiltonian": self.hamiltonian,
            "knobs": dict(self.knobs),
            "seed": self.seed,
        }

    @classmethod
    def from_json(cls, source: str | Path | dict, experiment: str | None = None
                  ) -> "ExperimentConfig":
        if isinstance(source, (str, Path)) and Path(str(source)).exists():
            doc = json.loads(Path(str(source)).read_text())
        elif isinstance(source, str):
            doc = json.loads(source)
        else:
            doc = dict(source)
        return cls(
            experiment=experiment or doc.get("experiment", "all"),
            model=doc.get("model", "s1_exact"),
            hamiltonian=doc.get("hamiltonian", {"name": "sin_perturbation"}),
            knobs=doc.get("knobs", {}),
            seed=int(doc.get("seed", 0)),
            out=doc.get("out"),
        )


# ---------------------------------------------------------------------------
# intersection counting (zero section vs its image)

@dataclass
class IntersectionReport:
    count: int
    intersections: list[dict]
    bound: int
    verdict: str
    note: str
    config: dict
    seed: int

    def __post_init__(self):
        if self.verdict == "pass" and self.count < self.bound:
            raise AssertionError("pass verdict requires count >= bound")

    def to_json(self) -> str:
        return json.dumps(self.__dict__, indent=2, default=float)


def _bisect_root(fn, lo, hi, flo, iters: int = 60) -> float:
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        fm = fn(mid)
        if fm == 0.0:
            return mid
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _sign_change_roots(fn, grid_values, grid_points, wrap: bool):
    """Bracket sign changes along sampled values and bisect each to a root."""
    roots = []
    n = len(grid_points)
    pairs = list(range(n - 1)) + ([n - 1] if wrap else [])
    period = grid_points[-1] - grid_points[0] + (grid_points[1] - grid_points[0])
    for i in pairs:
        j = (i + 1) % n
        a, b = grid_values[i], grid_values[j]
        if a == 0.0:
            roots.append(grid_points[i])
            continue
        if a * b < 0:
            lo = grid_points[i]
            hi = grid_points[j] if j > i else grid_points[i] + (period - grid_points[i] +
                                                               grid_points[0])
            roots.append(_bisect_root(fn, lo, hi, a))
    return roots


def cmd_intersections(config: ExperimentConfig) -> IntersectionReport:
    """Count transverse zero-section intersections of the time-1 image and
    compare against the summed window-Betti bound.

    The zero section is sampled densely, flowed with the lcs Hamiltonian
    flow, and intersections with the zero section are located through sign
    changes of the fiber coordinate with bisection refinement.  The
    transversality margin is the sensitivity of the fiber value to the
    section parameter (finite differences); margins under the tolerance make
    the run inconclusive rather than a counterexample.
    """
    cover = make_model(config.model)
    if cover.base.dim != 1:
        raise ValueError("intersection counting ships for circle base models")
    pair = LcsPair(space=cover.base, beta=cover.beta)
    h = config.build_hamiltonian()
    t_final = float(config.knob("t", 1.0))
    steps = int(config.knob("steps", 400))
    samples = int(config.knob("samples", 128))
    tol = float(config.knob("transversality_tol", 1e-6))
    fcfg = FlowConfig(steps=steps, estimate_error=False)

    def fiber_at(theta0: float) -> float:
        final = flow(pair, h, np.array([theta0, 0.0]), (0.0, t_final), fcfg).final
        return float(final[1])

    grid = np.linspace(0.0, 1.0, samples, endpoint=False)
    values = [fiber_at(th) for th in grid]
    degenerate = max(abs(v) for v in values) < tol
    if degenerate:
        bound = _betti_bound(config)
        return IntersectionReport(
            count=0, intersections=[], bound=bound, verdict="inconclusive",
            note="zero section fixed pointwise; intersections are non-transverse",
            config=config.resolved(), seed=config.seed)

    roots = _sign_change_roots(fiber_at, values, list(grid), wrap=True)
    intersections = []
    conclusive = True
    fd = 1e-5
    for r in roots:
        margin = abs((fiber_at(r + fd) - fiber_at(r - fd)) / (2 * fd))
        final = flow(pair, h, np.array([r, 0.0]), (0.0, t_final), fcfg).final
        location = cover.base.reduce(final[:1])
        intersections.append({
            "parameter": float(r),
            "location": [float(location[0]), float(final[1])],
            "margin": float(margin),
        })
        if margin < tol:
            conclusive = False
    bound = _betti_bound(config)
    if not conclusive:
        verdict = "inconclusive"
        note = "a located intersection has transversality margin below tolerance"
    else:
        verdict = "pass" if len(roots) >= bound else "fail"
        note = "bound is vacuous" if bound == 0 else ""
    return IntersectionReport(count=len(roots), intersections=intersections,
                              bound=bound, verdict=verdict, note=note,
                              config=config.resolved(), seed=config.seed)


def _betti_bound(config: ExperimentConfig) -> int:
    model = equivariant_model_for(config.model)
    est = asymptotic.estimate_cj(model, k_max=int(config.knob("k_max", 3)))
    return int(round(sum(est.estimates)))


# ---------------------------------------------------------------------------
# upstairs/downstairs correspondence

@dataclass
class PsiReport:
    downstairs_count: int
    upstairs_count: int
    equal: bool
    verdict: str
    note: str
    config: dict
    seed: int

    def to_json(self) -> str:
        return json.dumps(self.__dict__, indent=2, default=float)


def cmd_psi_correspondence(config: ExperimentConfig) -> PsiReport:
    """Compare the downstairs zero-section intersection count with the count
    of lifted-conormal intersections against the graph of e^{-g} s.

    Upstairs, homogeneity reduces the intersection condition to one
    deck-periodic equation in the conormal parameter: the flowed ray meets
    the graph iff xi'/sigma' + s' dg(x') vanishes.  Both counts are computed
    independently and compared for exact equality.
    """
    cover = make_model(config.model)
    if cover.base.dim != 1:
        raise ValueError("the correspondence ships for circle base models")
    pair = LcsPair(space=cover.base, beta=cover.beta)
    h = config.build_hamiltonian()
    t_final = float(config.knob("t", 1.0))
    steps = int(config.knob("steps", 400))
    samples = int(config.knob("samples", 96))
    tol = float(config.knob("transversality_tol", 1e-6))
    fcfg = FlowConfig(steps=steps, estimate_error=False)

    def fiber_down(theta0: float) -> float:
        final = flow(pair, h, np.array([theta0, 0.0]), (0.0, t_final), fcfg).final
        return float(final[1])

    grid = np.linspace(0.0, 1.0, samples, endpoint=False)
    down_values = [fiber_down(th) for th in grid]
    if max(abs(v) for v in down_values) < tol:
        return PsiReport(downstairs_count=0, upstairs_count=0, equal=True,
                         verdict="inconclusive",
                         note="degenerate run: zero section fixed pointwise",
                         config=config.resolved(), seed=config.seed)
    down_roots = _sign_change_roots(fiber_down, down_values, list(grid), wrap=True)

    def conormal_mismatch(x0: float) -> float:
        q0 = HomogeneousPoint(x=np.array([x0]), xi=np.array([0.0]), s=0.0, sigma=1.0)
        q1 = flow_homogeneous_final("equivariant", cover, h, q0, t_final, steps)
        w = cover.dg(q1.x)
        return float(q1.xi[0] / q1.sigma + q1.s * w[0])

    up_values = [conormal_mismatch(x) for x in grid]
    up_roots = _sign_change_roots(conormal_mismatch, up_values, list(grid), wrap=True)

    equal = len(down_roots) == len(up_roots)
    return PsiReport(downstairs_count=len(down_roots), upstairs_count=len(up_roots),
                     equal=equal, verdict="pass" if equal else "fail",
                     note="", config=config.resolved(), seed=config.seed)


# ---------------------------------------------------------------------------
# non-squeezing falsifier

@dataclass
class NonsqueezeReport:
    candidate: str
    equivariant: bool
    equivariance_witness: list | None
    containment: str
    escape_witness: list | None
    k: int
    R1: float
    R2: float
    energy_lower: float
    squeeze_budget: float
    verdict: str
    conclusion: str
    config: dict
    seed: int

    def to_json(self) -> str:
        return json.dumps(self.__dict__, indent=2, default=float)


def cmd_nonsqueeze(config: ExperimentConfig) -> NonsqueezeReport:
    """Flow a sampled solid torus and test containment in a thinner one.

    Candidates must commute with the unit translation of the circle's fiber
    coordinate (sampled check; violations are rejected with a witness).  The
    report pairs the containment verdict with the energy obstruction: the
    doubled ball sheaf carries energy pi R1^2 >= k while containment would
    cap the energy below pi R2^2 <= k, so an observed containment flags
    non-equivariance or sampling failure, never a refutation.
    """
    cover = make_model(config.model)
    if config.model != "r1_s1_dz":
        raise ValueError("the falsifier ships for the r1_s1_dz strip model")
    R1 = float(config.knob("R1", 1.5))
    R2 = float(config.knob("R2", 0.6))
    k = int(config.knob("k", 2))
    if not (math.pi * R1 * R1 >= k >= math.pi * R2 * R2):
        raise ValueError("need pi R1^2 >= k >= pi R2^2 for the declared integer k")
    h = config.build_hamiltonian()
    rng = np.random.default_rng(config.seed)

    # equivariance of the candidate under the fiber translation
    witness = None
    for _ in range(int(config.knob("equivariance_samples", 64))):
        p = np.array([rng.uniform(0, 1), rng.uniform(-R1, R1),
                      rng.uniform(-1, 1), rng.uniform(-R1, R1)])
        shifted = p.copy()
        shifted[2] += 1.0
        if abs(h(p, 0.0) - h(shifted, 0.0)) > 1e-9:
            witness = [float(v) for v in p]
            break
    e_ball = tamarkin.energy_fibered(
        tamarkin.ball_sheaf(2, R1, radial_samples=2001)).energy
    energy_lower = 2.0 * e_ball          # doubled-sheaf energy ~ pi R1^2
    squeeze_budget = math.pi * R2 * R2   # containment would cap energy below this
    if witness is not None:
        return NonsqueezeReport(
            candidate=h.name, equivariant=False, equivariance_witness=witness,
            containment="not tested", escape_witness=None, k=k, R1=R1, R2=R2,
            energy_lower=energy_lower, squeeze_budget=squeeze_budget,
            verdict="rejected",
            conclusion="candidate does not commute with the fiber translation",
            config=config.resolved(), seed=config.seed)

    pair = LcsPair(space=cover.base, beta=cover.beta)
    steps = int(config.knob("steps", 300))
    fcfg = FlowConfig(steps=steps, estimate_error=False)
    cloud = int(config.knob("cloud", 160))
    escape = None
    worst_radius = 0.0
    for i in range(cloud):
        angle = 2 * math.pi * i / cloud
        radius = R1 if i % 2 == 0 else R1 * rng.uniform(0.2, 1.0)
        p0 = np.array([rng.uniform(0, 1), radius * math.cos(angle),
                       rng.uniform(-0.5, 0.5), radius * math.sin(angle)])
        final = flow(pair, h, p0, (0.0, float(config.knob("t", 1.0))), fcfg).final
        r_out = math.hypot(final[1], final[3])
        if r_out > worst_radius:
            worst_radius = r_out
            if r_out > R2:
                escape = [float(v) for v in final]
    if escape is not None:
        verdict, containment = "consistent", "escaped"
        conclusion = ("containment fails; consistent with the impossibility of "
                      "squeezing the solid torus")
    else:
        verdict, containment = "suspect", "contained"
        conclusion = ("numerical containment observed: flags non-equivariance or "
                      "sampling failure, never a theorem violation")
    return NonsqueezeReport(
        candidate=h.name, equivariant=True, equivariance_witness=None,
        containment=containment, escape_witness=escape, k=k, R1=R1, R2=R2,
        energy_lower=energy_lower, squeeze_budget=squeeze_budget, verdict=verdict,
        conclusion=conclusion, config=config.resolved(), seed=config.seed)


# ---------------------------------------------------------------------------
# batch verification table

@dataclass
class VerifierRow:
    name: str
    kind: str            # "deviation" | "expected-deviation" | "value"
    value: float
    threshold: float
    status: str          # "pass" | "fail" | "error"
    detail: str = ""


@dataclass
class RunAllSummary:
    rows: list[VerifierRow]
    config: dict
    seed: int

    @property
    def all_pass(self) -> bool:
        return all(r.status == "pass" for r in self.rows)

    def to_csv_lines(self) -> list[str]:
        lines = ["name,kind,value,threshold,status,detail"]
        for r in self.rows:
            lines.append(f"{r.name},{r.kind},{r.value!r},{r.threshold!r},{r.status},"
                         f"\"{r.detail}\"")
        return lines

    def write_csv(self, target: str | Path) -> None:
        Path(target).write_text("\n".join(self.to_csv_lines()) + "\n")


DEFAULT_ROWS = (
    "rho_factorization",
    "TcDc",
    "liouville_pullback",
    "dbeta_squared",
    "diagram_eq",
    "deck_equivariance_eq",
    "deck_nonequivariance_cl",
    "window_betti_s1",
    "window_betti_exact",
    "window_betti_t2",
    "oracle_inequality",
    "ball_energy",
    "squeeze_margin",
    "tau_monotone",
)


def cmd_run_all(config: ExperimentConfig) -> RunAllSummary:
    """Run every verifier and emit a pass/fail table with deviations.

    The deck_nonequivariance_cl row has expected-failure semantics: the
    classical lift is supposed to break deck equivariance, so the row passes
    only when the deviation EXCEEDS its threshold.  Errors in one row never
    abort the table.
    """
    rows_requested = config.knob("rows", list(DEFAULT_ROWS))
    rng = np.random.default_rng(config.seed)
    out: list[VerifierRow] = []
    cover = make_model("s1_dtheta")
    h = bump_cos_hamiltonian()
    flow_samples = random_homogeneous_points(
        cover, rng, int(config.knob("flow_samples", 4)),
        xi_box=0.5, sigma_range=(0.8, 1.25))
    point_samples = random_homogeneous_points(cover, rng, int(config.knob("samples", 200)))
    steps = int(config.knob("steps", 800))

    def run(name: str, kind: str, threshold: float, fn):
        try:
            value, detail = fn()
            value = float(value)
            if kind == "expected-deviation":
                status = "pass" if value >= threshold else "fail"
            elif kind == "deviation":
                status = "pass" if value <= threshold else "fail"
            else:
                status = "pass" if value == 0.0 else "fail"
            out.append(VerifierRow(name=name, kind=kind, value=value,
                                   threshold=threshold, status=status, detail=detail))
        except Exception as exc:  # row-level capture, table must survive
            out.append(VerifierRow(name=name, kind=kind, value=float("nan"),
                                   threshold=threshold, status="error",
                                   detail=f"{type(exc).__name__}: {exc}"))

    checks: dict[str, tuple] = {
        "rho_factorization": ("deviation", 1e-12, lambda: (
            verify_identity("rho_factorization", cover, None, point_samples)
            .max_deviation, "")),
        "TcDc": ("deviation", 1e-12, lambda: (
            verify_identity("TcDc", cover, None, point_samples).max_deviation, "")),
        "liouville_pullback": ("deviation", 1e-6, lambda: (
            liouville_pullback_residual(cover, point_samples[:50]), "")),
        "dbeta_squared": ("deviation", 1e-6, lambda: (_dbeta_residual(rng), "")),
        "diagram_eq": ("deviation", 1e-5, lambda: (
            verify_identity("diagram_eq", cover, h, flow_samples, t=1.0,
                            steps=steps).max_deviation, "")),
        "deck_equivariance_eq": ("deviation", 1e-5, lambda: (
            verify_identity("deck_equivariance_eq", cover, h, flow_samples, t=0.5,
                            steps=steps).max_deviation, "")),
        "deck_nonequivariance_cl": ("expected-deviation", 1e-2, lambda: (
            verify_identity("deck_nonequivariance_cl", cover, h, flow_samples, t=0.5,
                            steps=steps).max_deviation,
            "classical lift must break deck equivariance")),
        "window_betti_s1": ("value", 0.0, lambda: (
            float(sum(sum(asymptotic.window_betti(
                equivariant_model_for("s1_dtheta"), k).ranks) for k in range(4))),
            "half-open windows vanish")),
        "window_betti_exact": ("value", 0.0, lambda: (
            0.0 if asymptotic.window_betti(
                equivariant_model_for("s1_exact"), 1).trimmed() == (1, 1) else 1.0,
            "exact class gives base Betti")),
        "window_betti_t2": ("value", 0.0, lambda: (
            float(sum(sum(asymptotic.window_betti(
                equivariant_model_for("t2_dtheta1"), k).ranks) for k in range(3))),
            "half-open torus windows vanish")),
        "oracle_inequality": ("value", 0.0, lambda: (_oracle_inequality_defect(), "")),
        "ball_energy": ("deviation", 1e-3, lambda: (
            abs(tamarkin.energy_fibered(tamarkin.ball_sheaf(2, 1.0)).energy
                - math.pi / 2.0), "")),
        "squeeze_margin": ("expected-deviation", 1e-12, lambda: (
            tamarkin.verify_squeeze_bound(tamarkin.ball_sheaf(2, 1.0), 1.0).margin,
            "positive margin under 4 r^2")),
        "tau_monotone": ("value", 0.0, lambda: (_tau_monotone_defect(rng), "")),
    }

    for name in rows_requested:
        if name not in checks:
            out.append(VerifierRow(name=name, kind="value", value=float("nan"),
                                   threshold=0.0, status="error",
                                   detail="unknown verifier row"))
            continue
        kind, threshold, fn = checks[name]
        run(name, kind, threshold, fn)
    return RunAllSummary(rows=out, config=config.resolved(), seed=config.seed)


def _dbeta_residual(rng: np.random.Generator, cases: int = 50) -> float:
    from .geometry import FormField, eval_lichnerowicz, check_dbeta_squared

    cover = make_model("s1_dtheta")
    space = product_space(1, 1)
    beta = ClosedOneForm(space=space, lattice=(1,))

    worst = 0.0
    for _ in range(cases):
        a, b, c = rng.uniform(-1, 1, size=3)

        def coeff(p, a=a, b=b, c=c):
            return a * math.cos(2 * math.pi * p[0] + b) * math.exp(-0.5 * c * c * p[1] * p[1])

        alpha = FormField(degree=0, dim=2, coeffs={(): coeff})
        pts = space.random_points(rng, 2)
        worst = max(worst, check_dbeta_squared(alpha, beta, pts, fd_step=1e-4))
    return worst


def _oracle_inequality_defect() -> float:
    defect = 0.0
    for name in ("s1_exact", "s1_dtheta", "t2_dtheta1"):
        model = equivariant_model_for(name)
        est = asymptotic.estimate_cj(model, k_max=2)
        oracle = asymptotic.morse_novikov_oracle(model)
        if oracle is None:
            continue
        for j, rank in enumerate(oracle):
            defect = max(defect, rank - est.estimates[j])
    return max(defect, 0.0)


def _tau_monotone_defect(rng: np.random.Generator, cases: int = 100) -> float:
    grid = np.linspace(0.0, 12.0, 48)
    for _ in range(cases):
        F = tamarkin.random_tamarkin_module(rng)
        if not tamarkin.check_tau_monotone(F, grid)["down_closed"]:
            return 1.0
        closed = tamarkin.energy(F).energy
        lengths = max(s.right - s.left for s in F.summands)
        if closed != lengths:
            return 1.0
    return 0.0
