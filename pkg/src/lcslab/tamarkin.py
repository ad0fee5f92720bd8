"""Displacement energy of constructible sheaves on the line and of fibered
interval sheaves.

A Tamarkin module is an interval module whose summands are all of the form
[a, b) or [a, +inf): exactly the modules fixed by the nonnegative-wavefront
projection.  The canonical morphism into the c-pushforward is diagonal on
summands, so its nonvanishing reduces to a per-summand overlap test and the
energy has the closed form max(b - a).

Fibered interval sheaves model the indicator sheaf of a region
{(x, s) : f1(x) <= s < f2(x)}; the energy is the sup of the fiber gap, with
an independent grid brute force that discretizes the region and locates the
largest shift with nonempty overlap.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Callable

import numpy as np
from scipy import integrate

from .sheaf import IntervalModule, IntervalSummand


@dataclass(frozen=True)
class TamarkinModule:
    """Interval module with only half-open-right or closed-infinite summands."""

    module: IntervalModule

    def __post_init__(self):
        for s in self.module.summands:
            if not s.left_closed:
                raise ValueError("Tamarkin summands must be closed on the left")
            if s.right_closed:
                raise ValueError("Tamarkin summands must be open on the right")
            if not math.isinf(s.right) and s.left >= s.right:
                raise ValueError("empty summands [a, a) are excluded")

    @property
    def summands(self) -> tuple[IntervalSummand, ...]:
        return self.module.summands


def tamarkin_module(intervals) -> TamarkinModule:
    """Build a Tamarkin module from (left, right[, shift[, mult]]) tuples."""
    summands = []
    for entry in intervals:
        left, right = entry[0], entry[1]
        shift = entry[2] if len(entry) > 2 else 0
        mult = entry[3] if len(entry) > 3 else 1
        summands.append(IntervalSummand(left=float(left), right=float(right),
                                        left_closed=True, right_closed=False,
                                        shift=shift, mult=mult))
    return TamarkinModule(module=IntervalModule(tuple(summands)))


def tau_nonzero(F: TamarkinModule, c: float) -> bool:
    """Whether the canonical morphism into the c-pushforward is nonzero.

    Summand-wise: [a, b) survives iff a + c < b; [a, +inf) always survives.
    Cross-terms are ignored because the morphism is diagonal on summands.
    """
    if c < 0:
        raise ValueError("the shift c must be nonnegative")
    for s in F.summands:
        if math.isinf(s.right) or s.left + c < s.right:
            return True
    return False


@dataclass
class EnergyReport:
    energy: float
    attained: bool
    method: str
    grid_resolution: float | None = None

    def __post_init__(self):
        if not math.isinf(self.energy) and self.energy < 0:
            raise ValueError("energy must be nonnegative or infinite")

    def to_json(self) -> str:
        return json.dumps({
            "energy": None if math.isinf(self.energy) else self.energy,
            "infinite": math.isinf(self.energy),
            "attained": self.attained,
            "method": self.method,
            "grid_resolution": self.grid_resolution,
        }, indent=2)


def energy(F: TamarkinModule) -> EnergyReport:
    """Displacement energy sup{c >= 0 : tau_c != 0}, in closed form.

    The supremum is a strict threshold on half-open summands, hence never
    attained for finite values.
    """
    if not F.summands:
        return EnergyReport(energy=0.0, attained=False, method="closed-form")
    best = 0.0
    for s in F.summands:
        if math.isinf(s.right):
            return EnergyReport(energy=math.inf, attained=False, method="closed-form")
        best = max(best, s.right - s.left)
    return EnergyReport(energy=best, attained=False, method="closed-form")


def check_tau_monotone(F: TamarkinModule, c_grid) -> dict:
    """Verify tau nonvanishing is down-closed along an ascending grid."""
    c_grid = [float(c) for c in c_grid]
    if any(b < a for a, b in zip(c_grid, c_grid[1:])):
        raise ValueError("c_grid must be sorted ascending")
    values = [tau_nonzero(F, c) for c in c_grid]
    down_closed = True
    seen_false = False
    for v in values:
        if seen_false and v:
            down_closed = False
            break
        if not v:
            seen_false = True
    return {"grid": c_grid, "values": values, "down_closed": down_closed}


# ---------------------------------------------------------------------------
# fibered interval sheaves

@dataclass(frozen=True)
class FiberedIntervalSheaf:
    """Indicator sheaf of {(x, s) : f1(x) <= s < f2(x)} over a sampled base.

    ``base_points`` is an (m, n) array of base sample coordinates (for the
    ball family a radial grid with representative points (r, 0, ..., 0),
    exploiting rotational symmetry of the profiles).
    """

    base_points: np.ndarray
    f1: Callable[[np.ndarray], float]
    f2: Callable[[np.ndarray], float]
    label: str = ""

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.base_points, dtype=float))
        object.__setattr__(self, "base_points", pts)
        for x in pts:
            lo, hi = self.f1(x), self.f2(x)
            if lo > hi + 1e-12:
                raise ValueError(f"profiles cross at base point {x}: f1={lo} > f2={hi}")

    def gaps(self) -> np.ndarray:
        return np.array([self.f2(x) - self.f1(x) for x in self.base_points])


def energy_fibered(F: FiberedIntervalSheaf, cross_check_resolution: float | None = None
                   ) -> EnergyReport:
    """sup over base samples of the fiber gap f2 - f1.

    With ``cross_check_resolution`` the value is verified against the grid
    brute force; the two must agree within one grid cell.
    """
    gaps = F.gaps()
    e = float(np.max(gaps))
    sampling = _sampling_resolution(F)
    if cross_check_resolution is None:
        return EnergyReport(energy=e, attained=True, method="closed-form",
                            grid_resolution=sampling)
    brute = brute_force_energy_fibered(F, cross_check_resolution)
    if abs(brute - e) > cross_check_resolution:
        raise AssertionError(
            f"grid brute force {brute} disagrees with profile sup {e} beyond "
            f"one grid cell {cross_check_resolution}")
    return EnergyReport(energy=e, attained=True, method="grid brute force",
                        grid_resolution=cross_check_resolution)


def _sampling_resolution(F: FiberedIntervalSheaf) -> float:
    pts = F.base_points
    if pts.shape[0] < 2:
        return 0.0
    norms = np.sort(np.linalg.norm(pts - pts[0], axis=1))
    diffs = np.diff(norms)
    positive = diffs[diffs > 0]
    return float(positive.min()) if positive.size else 0.0


def brute_force_energy_fibered(F: FiberedIntervalSheaf, resolution: float) -> float:
    """Grid threshold: largest shift c with nonempty overlap of the region
    with its shifted copy, all quantities discretized at the resolution.

    Each base fiber becomes an indicator bitset over an s-grid of spacing
    resolution / 2 (the cellular indicator sheaf at grid scale); a shift by
    j grid cells overlaps a fiber iff the bitset meets itself shifted by j.
    The half-step s-grid keeps the detected threshold within one
    ``resolution`` cell of the true supremum.
    """
    if resolution <= 0:
        raise ValueError("resolution must be positive")
    lows = np.array([F.f1(x) for x in F.base_points])
    highs = np.array([F.f2(x) for x in F.base_points])
    s_min = float(lows.min())
    ds = resolution / 2.0
    # grid index windows [li, hi) per fiber, deduplicated
    li = np.ceil((lows - s_min) / ds - 1e-12).astype(int)
    hi = np.ceil((highs - s_min) / ds - 1e-12).astype(int)
    windows = {(int(a), int(b)) for a, b in zip(li, hi) if b > a}
    if not windows:
        return 0.0
    rows = [((1 << (b - a)) - 1) << a for a, b in windows]
    best = 0
    j = 0
    while True:
        if any(row & (row >> j) for row in rows):
            best = j
            j += 1
        else:
            break
    return best * ds


# ---------------------------------------------------------------------------
# the ball sheaf family

@lru_cache(maxsize=None)
def _ball_profile(radius_key: float, R: float) -> float:
    val, _ = integrate.quad(lambda u: math.sqrt(max(R * R - u * u, 0.0)), 0.0, radius_key)
    return val


def ball_profile(r: float, R: float) -> float:
    """Lower profile of the ball sheaf: integral of sqrt(R^2 - u^2) up to r."""
    r = min(max(float(r), 0.0), R)
    return _ball_profile(round(r, 12), float(R))


def ball_sheaf(n: int, R: float, radial_samples: int = 10_001) -> FiberedIntervalSheaf:
    """Indicator sheaf over the radius-R ball in R^n with the disc-area profiles.

    The lower profile is the quarter-circle area integral (adaptive
    quadrature); the upper profile is pi R^2 / 2 minus it.  Profiles depend
    only on the radius, so base samples are a radial grid embedded along the
    first axis.
    """
    if n < 1:
        raise ValueError("base dimension must be >= 1")
    if R <= 0:
        raise ValueError("radius must be positive")
    radii = np.linspace(0.0, R, radial_samples)
    pts = np.zeros((radial_samples, n))
    pts[:, 0] = radii
    total = math.pi * R * R / 2.0

    def f1(x: np.ndarray) -> float:
        return ball_profile(float(np.linalg.norm(x)), R)

    def f2(x: np.ndarray) -> float:
        return total - f1(x)

    return FiberedIntervalSheaf(base_points=pts, f1=f1, f2=f2, label=f"ball(n={n}, R={R})")


@dataclass
class SqueezeReport:
    energy: float
    bound: float
    margin: float
    satisfied: bool
    r_strip: float

    def to_json(self) -> str:
        return json.dumps(self.__dict__, indent=2)


def verify_squeeze_bound(F: FiberedIntervalSheaf, r_strip: float) -> SqueezeReport:
    """Check the displacement energy against the strip bound 4 r^2.

    Precondition (sampled): every base point carrying a nonempty fiber
    interval has |x_1| < r_strip.  The wavefront cone hypothesis of the
    bound is assumed for the shipped family, not verified; a reported
    violation therefore means that hypothesis must fail for the input.
    """
    for x in F.base_points:
        if F.f2(x) - F.f1(x) > 1e-12 and abs(float(x[0])) >= r_strip:
            raise ValueError(
                f"support sample {x} with nonempty fiber lies outside |x1| < {r_strip}")
    e = energy_fibered(F).energy
    bound = 4.0 * r_strip * r_strip
    return SqueezeReport(energy=e, bound=bound, margin=bound - e,
                         satisfied=e <= bound, r_strip=r_strip)


# ---------------------------------------------------------------------------
# random modules and JSON loading

def random_tamarkin_module(rng: np.random.Generator, max_summands: int = 10,
                           span: float = 10.0, allow_infinite: bool = False
                           ) -> TamarkinModule:
    count = int(rng.integers(1, max_summands + 1))
    intervals = []
    for _ in range(count):
        a = float(rng.uniform(-span, span))
        if allow_infinite and rng.random() < 0.1:
            intervals.append((a, math.inf))
        else:
            b = a + float(rng.uniform(1e-3, span))
            intervals.append((a, b))
    return tamarkin_module(intervals)


def load_tamarkin_module(source: str | Path | dict) -> TamarkinModule:
    """Load from JSON: ``{"summands": [[a, b], [a, "inf"], ...]}``."""
    if isinstance(source, (str, Path)) and Path(str(source)).exists():
        doc = json.loads(Path(str(source)).read_text())
    elif isinstance(source, str):
        doc = json.loads(source)
    else:
        doc = source
    intervals = []
    for entry in doc["summands"]:
        left = float(entry[0])
        right = math.inf if entry[1] in ("inf", "+inf", None) else float(entry[1])
        rest = tuple(int(v) for v in entry[2:])
        intervals.append((left, right, *rest))
    return tamarkin_module(intervals)


def load_fibered_sheaf(source: str | Path | dict) -> FiberedIntervalSheaf:
    """Load a fibered sheaf from JSON.

    Builtin profiles: ``{"profile": "ball", "n": 2, "R": 1.0}`` or
    ``{"profile": "constant", "height": h, "half_width": r, "samples": m}``
    (constant-height strip over |x1| <= half_width).
    """
    if isinstance(source, (str, Path)) and Path(str(source)).exists():
        doc = json.loads(Path(str(source)).read_text())
    elif isinstance(source, str):
        doc = json.loads(source)
    else:
        doc = source
    profile = doc.get("profile", "ball")
    if profile == "ball":
        return ball_sheaf(int(doc.get("n", 2)), float(doc.get("R", 1.0)),
                          radial_samples=int(doc.get("samples", 10_001)))
    if profile == "constant":
        height = float(doc["height"])
        half_width = float(doc.get("half_width", 1.0))
        samples = int(doc.get("samples", 101))
        pts = np.linspace(-half_width, half_width, samples).reshape(-1, 1)
        return FiberedIntervalSheaf(
            base_points=pts, f1=lambda x: 0.0, f2=lambda x: height,
            label=f"constant(h={height})")
    raise ValueError(f"unknown fibered profile {profile!r}")
