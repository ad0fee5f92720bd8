"""Acceptance suite: the quantitative exit criteria, one test per criterion.

Each test enforces the pinned tolerance and runtime budget and prints one
pass line (visible with ``pytest -s`` or in failure output).
"""

import math
import time

import numpy as np
import pytest

from lcslab import asymptotic, tamarkin
from lcslab.dynamics import FlowConfig
from lcslab.experiments import (
    ExperimentConfig,
    bump_cos_hamiltonian,
    cmd_intersections,
    cmd_nonsqueeze,
    cmd_psi_correspondence,
    equivariant_model_for,
    make_model,
)
from lcslab.geometry import (
    ClosedOneForm,
    FormField,
    builtin_scalar_field,
    check_dbeta_squared,
    product_space,
)
from lcslab.lifts import (
    liouville_pullback_residual,
    random_homogeneous_points,
    verify_identity,
)


def _report(criterion: str, detail: str) -> None:
    print(f"[{criterion}] PASS  {detail}")


def test_c01_lichnerowicz_nilpotency():
    started = time.perf_counter()
    rng = np.random.default_rng(101)
    spaces = [
        (product_space(1, 1), (1,)),
        (product_space(1, 1), (0,)),
        (product_space(2, 1), (1, 2)),
    ]
    worst = 0.0
    evaluations = 0
    while evaluations < 1000:
        space, lattice = spaces[evaluations % len(spaces)]
        n = space.dim
        use_g0 = evaluations % 2 == 0
        g0 = builtin_scalar_field("cos_theta1", n, amplitude=0.4) if use_g0 else None
        beta = ClosedOneForm(space=space, lattice=lattice, g0=g0)
        amp, phase, decay = rng.uniform(-1, 1), rng.uniform(0, 6), rng.uniform(0.2, 1.0)

        def coeff(p, amp=amp, phase=phase, decay=decay, n=n):
            trig = math.cos(2 * math.pi * p[0] + phase)
            tail = math.exp(-0.5 * decay * sum(p[i] ** 2 for i in range(1, n)))
            return amp * trig * tail

        degree = int(rng.integers(0, 2)) if n >= 3 else 0
        if degree == 0:
            alpha = FormField(degree=0, dim=n, coeffs={(): coeff})
        else:
            idx = tuple(sorted(rng.choice(n, size=1, replace=False).tolist()))
            alpha = FormField(degree=1, dim=n, coeffs={idx: coeff})
        pts = space.random_points(rng, 5, box=1.2)
        worst = max(worst, check_dbeta_squared(alpha, beta, pts, fd_step=1e-4))
        evaluations += 5
    elapsed = time.perf_counter() - started
    assert worst < 1e-6
    assert elapsed < 10.0
    _report("C01", f"max d_beta^2 residual {worst:.2e} over 1000 samples in {elapsed:.1f}s")


def test_c02_lift_identities_exact():
    m = make_model("s1_dtheta_cos")
    rng = np.random.default_rng(102)
    pts = random_homogeneous_points(m, rng, 1000)
    rho_dev = verify_identity("rho_factorization", m, None, pts).max_deviation
    tcdc_dev = verify_identity("TcDc", m, None, pts).max_deviation
    assert rho_dev < 1e-12
    assert tcdc_dev < 1e-12
    lam_dev = liouville_pullback_residual(m, pts)
    assert lam_dev < 1e-6
    _report("C02", f"rho_eq=rho_cl∘L {rho_dev:.1e}; L^-1 T_c = D_c L^-1 {tcdc_dev:.1e}; "
                   f"L*lambda residual {lam_dev:.1e}")


def test_c03_flow_diagram_and_order():
    started = time.perf_counter()
    m = make_model("s1_dtheta")
    h = bump_cos_hamiltonian()
    rng = np.random.default_rng(103)
    samples = random_homogeneous_points(m, rng, 4, xi_box=0.5, sigma_range=(0.8, 1.25))
    fine = verify_identity("diagram_eq", m, h, samples, t=1.0, steps=10_000).max_deviation
    assert fine < 1e-5
    devs = [verify_identity("diagram_eq", m, h, samples, t=1.0, steps=n).max_deviation
            for n in (250, 500, 1000)]
    ratios = [devs[0] / devs[1], devs[1] / devs[2]]
    for r in ratios:
        assert 8.0 < r < 32.0, f"order-4 ratio {r} out of band"
    elapsed = time.perf_counter() - started
    assert elapsed < 60.0
    _report("C03", f"deviation {fine:.1e} at 1e4 steps; doubling ratios "
                   f"{ratios[0]:.1f}, {ratios[1]:.1f} in {elapsed:.1f}s")


def test_c04_equivariance_contrast():
    m = make_model("s1_dtheta")
    h = bump_cos_hamiltonian()
    rng = np.random.default_rng(104)
    samples = random_homogeneous_points(m, rng, 4, xi_box=0.5, sigma_range=(0.8, 1.25))
    eq = verify_identity("deck_equivariance_eq", m, h, samples, t=0.5,
                         steps=1000).max_deviation
    cl = verify_identity("deck_nonequivariance_cl", m, h, samples, t=0.5, steps=1000)
    assert eq < 1e-5
    assert cl.max_deviation >= 1e-2
    assert cl.witness_point is not None
    _report("C04", f"equivariant commutes to {eq:.1e}; classical witness deviation "
                   f"{cl.max_deviation:.2f}")


def test_c05_window_betti_exact_values():
    started = time.perf_counter()
    s1 = equivariant_model_for("s1_dtheta")
    t2 = equivariant_model_for("t2_dtheta1")
    for k in range(6):
        assert asymptotic.window_betti(s1, k, "F2").trimmed() == ()
        assert asymptotic.window_betti(t2, k, "F2").trimmed() == ()
    exact = equivariant_model_for("s1_exact")
    assert asymptotic.window_betti(exact, 5, "F2").trimmed() == (1, 1)
    for model, expected in ((s1, (0, 0)), (t2, (0, 0, 0)), (exact, (1, 1))):
        est = asymptotic.estimate_cj(model, k_max=3, field_name="F2")
        oracle = asymptotic.morse_novikov_oracle(model)
        assert oracle is not None
        assert tuple(int(v) for v in est.estimates) == expected == tuple(oracle)
    elapsed = time.perf_counter() - started
    assert elapsed < 30.0
    _report("C05", f"window Betti exact on S1/T2 up to k=5, oracle equality, "
                   f"{elapsed:.1f}s over F2")


def test_c06_domain_independence():
    a = asymptotic.circle_model_unit_class()
    b = asymptotic.circle_model_unit_class(cut=0.5, subdivisions=2)
    rep = asymptotic.check_domain_independence(a, b, k_max=5)
    assert rep.estimates_agree
    bound_ok = all(
        max(row) <= rep.fitted_constant * (2 * k + 1) ** 0
        for k, row in zip(rep.ks, rep.diffs_by_k))
    assert bound_ok
    _report("C06", f"two cuts agree; fitted C = {rep.fitted_constant}; "
                   f"max estimate gap {rep.max_estimate_gap}")


def test_c07_ball_sheaf_energy():
    started = time.perf_counter()
    rep = tamarkin.energy_fibered(tamarkin.ball_sheaf(2, 1.0, radial_samples=10_001))
    assert abs(rep.energy - math.pi / 2) < 1e-3
    for R in (0.5, 2.0):
        rr = tamarkin.energy_fibered(tamarkin.ball_sheaf(2, R, radial_samples=10_001))
        assert abs(rr.energy - math.pi * R * R / 2) < 1e-3
    res = 1.0 / 200.0
    brute = tamarkin.brute_force_energy_fibered(
        tamarkin.ball_sheaf(2, 1.0, radial_samples=2001), res)
    assert abs(brute - rep.energy) <= res
    elapsed = time.perf_counter() - started
    assert elapsed < 60.0
    _report("C07", f"e(ball)={rep.energy:.6f} (pi/2 ± 1e-3); scaling ok; "
                   f"grid threshold within {res} in {elapsed:.1f}s")


def test_c08_squeeze_bound_margin():
    margins = []
    for R in (0.5, 1.0, 2.0):
        rep = tamarkin.verify_squeeze_bound(
            tamarkin.ball_sheaf(2, R, radial_samples=2001), R)
        assert rep.satisfied and rep.margin > 0
        margins.append(rep.margin)
    _report("C08", f"ball family under 4r^2 with margins "
                   f"{', '.join(f'{v:.3f}' for v in margins)}")


def test_c09_tamarkin_monotonicity_suite():
    rng = np.random.default_rng(109)
    grid = np.linspace(0.0, 15.0, 64)
    violations = 0
    for _ in range(1000):
        F = tamarkin.random_tamarkin_module(rng)
        if not tamarkin.check_tau_monotone(F, grid)["down_closed"]:
            violations += 1
        if tamarkin.energy(F).energy != max(s.right - s.left for s in F.summands):
            violations += 1
    assert violations == 0
    _report("C09", "1000 random modules: tau down-closed, energy = max length, "
                   "0 violations")


def test_c10_chantraine_murphy_desk_check():
    started = time.perf_counter()
    cfg = ExperimentConfig(
        experiment="intersections", model="s1_exact",
        hamiltonian={"name": "sin_perturbation", "epsilon": 0.1},
        knobs={"steps": 400, "samples": 128})
    rep = cmd_intersections(cfg)
    assert rep.verdict == "pass"
    assert rep.count == 2
    assert rep.bound == 2
    psi = cmd_psi_correspondence(ExperimentConfig(
        experiment="psi", model="s1_exact",
        hamiltonian={"name": "sin_perturbation", "epsilon": 0.1},
        knobs={"steps": 400, "samples": 96}))
    assert psi.verdict == "pass"
    assert psi.downstairs_count == psi.upstairs_count == 2
    elapsed = time.perf_counter() - started
    assert elapsed < 120.0
    _report("C10", f"transverse count 2 >= bound 2; upstairs = downstairs = 2; "
                   f"{elapsed:.1f}s")


def test_c11_nonsqueezing_falsifier():
    knobs = {"R1": 1.5, "R2": 0.6, "k": 2, "steps": 200, "cloud": 64}
    verdicts = {}
    for name in ("nsq_identity", "nsq_rotation"):
        rep = cmd_nonsqueeze(ExperimentConfig(
            experiment="nonsqueeze", model="r1_s1_dz",
            hamiltonian={"name": name}, knobs=dict(knobs)))
        assert rep.verdict == "consistent"
        assert rep.containment == "escaped"
        verdicts[name] = rep.verdict
    bad = cmd_nonsqueeze(ExperimentConfig(
        experiment="nonsqueeze", model="r1_s1_dz",
        hamiltonian={"name": "nsq_nonequivariant"}, knobs=dict(knobs)))
    assert bad.verdict == "rejected"
    assert bad.equivariance_witness is not None
    _report("C11", f"identity/rotation consistent; non-equivariant rejected with "
                   f"witness at {[round(v, 3) for v in bad.equivariance_witness]}")
