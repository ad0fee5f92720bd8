import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lcslab.tamarkin import (
    EnergyReport,
    FiberedIntervalSheaf,
    ball_profile,
    ball_sheaf,
    brute_force_energy_fibered,
    check_tau_monotone,
    energy,
    energy_fibered,
    load_fibered_sheaf,
    load_tamarkin_module,
    random_tamarkin_module,
    tamarkin_module,
    tau_nonzero,
    verify_squeeze_bound,
)


def test_tamarkin_module_validation():
    with pytest.raises(ValueError):
        tamarkin_module([(0.0, 0.0)])  # empty [a, a) rejected at construction
    from lcslab.sheaf import IntervalModule, IntervalSummand
    from lcslab.tamarkin import TamarkinModule
    with pytest.raises(ValueError, match="open on the right"):
        TamarkinModule(IntervalModule((IntervalSummand(0, 1, True, True),)))
    with pytest.raises(ValueError, match="closed on the left"):
        TamarkinModule(IntervalModule((IntervalSummand(0, 1, False, False),)))


def test_tau_nonzero_thresholds():
    F = tamarkin_module([(0, 2)])
    assert [tau_nonzero(F, c) for c in (0.0, 1.0, 1.9)] == [True, True, True]
    assert [tau_nonzero(F, c) for c in (2.0, 3.0)] == [False, False]
    with pytest.raises(ValueError):
        tau_nonzero(F, -0.5)
    # tau_0 is nonzero on any nonzero module
    assert tau_nonzero(tamarkin_module([(5, 5.1)]), 0.0)
    # infinite ray always survives
    assert tau_nonzero(tamarkin_module([(0, math.inf)]), 1e9)
    # direct sum: nonzero iff some summand is
    G = tamarkin_module([(0, 1), (0, 3)])
    assert tau_nonzero(G, 2.5) and not tau_nonzero(G, 3.0)


def test_energy_closed_forms():
    assert energy(tamarkin_module([(0, 2)])).energy == 2.0
    assert energy(tamarkin_module([(0, 1), (5, 5.5)])).energy == 1.0
    assert math.isinf(energy(tamarkin_module([(0, 1), (3, math.inf)])).energy)
    rep = energy(tamarkin_module([(0, 2)]))
    assert not rep.attained and rep.method == "closed-form"


def test_energy_direct_sum_max_rule():
    rng = np.random.default_rng(0)
    for _ in range(50):
        F = random_tamarkin_module(rng, max_summands=4)
        G = random_tamarkin_module(rng, max_summands=4)
        combined = tamarkin_module(
            [(s.left, s.right) for s in F.summands] +
            [(s.left, s.right) for s in G.summands])
        assert energy(combined).energy == max(energy(F).energy, energy(G).energy)


def test_energy_shift_invariance():
    # integer shifts keep float arithmetic exact
    base = [(0.0, 2.0), (1.0, 1.5)]
    for a in (-3.0, 2.0, 7.0):
        shifted = tamarkin_module([(l + a, r + a) for l, r in base])
        assert energy(shifted).energy == energy(tamarkin_module(base)).energy


def test_check_tau_monotone_reports():
    F = tamarkin_module([(0, 2)])
    rep = check_tau_monotone(F, [0, 1, 1.9, 2, 3])
    assert rep["values"] == [True, True, True, False, False]
    assert rep["down_closed"]
    assert check_tau_monotone(tamarkin_module([(0, math.inf)]),
                              [0, 5, 50])["values"] == [True, True, True]
    with pytest.raises(ValueError):
        check_tau_monotone(F, [1.0, 0.5])


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.floats(-50, 50, allow_nan=False),
                          st.floats(0.01, 40, allow_nan=False)),
                min_size=1, max_size=8),
       st.lists(st.floats(0, 100, allow_nan=False), min_size=2, max_size=12))
def test_tau_monotone_property(intervals, grid):
    F = tamarkin_module([(a, a + w) for a, w in intervals])
    rep = check_tau_monotone(F, sorted(grid))
    assert rep["down_closed"]
    assert energy(F).energy == max(s.right - s.left for s in F.summands)
    # the energy is the tau threshold (up to float rounding at the edge)
    e = energy(F).energy
    eps = 1e-6 * max(e, 1.0)
    assert tau_nonzero(F, max(e - eps, 0.0))
    assert not tau_nonzero(F, e + eps)


def test_fibered_validation():
    pts = np.linspace(-1, 1, 11).reshape(-1, 1)
    with pytest.raises(ValueError, match="cross"):
        FiberedIntervalSheaf(base_points=pts, f1=lambda x: 1.0, f2=lambda x: 0.0)


def test_fibered_constant_profile():
    F = load_fibered_sheaf({"profile": "constant", "height": 0.75, "half_width": 2.0})
    rep = energy_fibered(F)
    assert rep.energy == pytest.approx(0.75)
    assert rep.attained


def test_ball_profile_values():
    assert ball_profile(0.0, 1.0) == 0.0
    assert ball_profile(1.0, 1.0) == pytest.approx(math.pi / 4, abs=1e-12)
    assert ball_profile(2.0, 2.0) == pytest.approx(math.pi, abs=1e-12)


def test_ball_sheaf_endpoints():
    B = ball_sheaf(1, 1.0, radial_samples=101)
    x0 = np.zeros(1)
    xR = np.array([1.0])
    assert B.f1(x0) == 0.0
    assert B.f2(x0) == pytest.approx(math.pi / 2)
    assert B.f1(xR) == pytest.approx(math.pi / 4)
    assert B.f2(xR) == pytest.approx(math.pi / 4)
    with pytest.raises(ValueError):
        ball_sheaf(0, 1.0)
    with pytest.raises(ValueError):
        ball_sheaf(2, -1.0)


def test_ball_energy_and_scaling():
    for n, R in ((2, 1.0), (1, 0.5), (2, 2.0)):
        rep = energy_fibered(ball_sheaf(n, R, radial_samples=2001))
        assert rep.energy == pytest.approx(math.pi * R * R / 2, abs=1e-3)


def test_brute_force_agrees_within_cell():
    B = ball_sheaf(2, 1.0, radial_samples=2001)
    res = 1.0 / 200.0
    rep = energy_fibered(B, cross_check_resolution=res)
    assert rep.method == "grid brute force"
    brute = brute_force_energy_fibered(B, res)
    assert abs(brute - math.pi / 2) <= res
    with pytest.raises(ValueError):
        brute_force_energy_fibered(B, -0.1)


def test_squeeze_bound_reports():
    rep = verify_squeeze_bound(ball_sheaf(2, 1.0, radial_samples=501), 1.0)
    assert rep.satisfied and rep.margin == pytest.approx(4 - math.pi / 2, abs=1e-9)
    # constant strip of height h <= 4 r^2 passes
    low = load_fibered_sheaf({"profile": "constant", "height": 3.9,
                              "half_width": 0.999})
    assert verify_squeeze_bound(low, 1.0).satisfied
    # designed violation: reported, flagging the failed cone hypothesis
    tall = load_fibered_sheaf({"profile": "constant", "height": 5.0,
                               "half_width": 0.999})
    bad = verify_squeeze_bound(tall, 1.0)
    assert not bad.satisfied and bad.margin < 0
    # support precondition: base sticking out of the strip is rejected
    wide = load_fibered_sheaf({"profile": "constant", "height": 1.0,
                               "half_width": 2.0})
    with pytest.raises(ValueError, match="outside"):
        verify_squeeze_bound(wide, 1.0)


def test_energy_report_json():
    rep = energy(tamarkin_module([(0, 2)]))
    doc = json.loads(rep.to_json())
    assert doc["energy"] == 2.0 and not doc["infinite"]
    inf_doc = json.loads(energy(tamarkin_module([(0, math.inf)])).to_json())
    assert inf_doc["infinite"] and inf_doc["energy"] is None
    with pytest.raises(ValueError):
        EnergyReport(energy=-1.0, attained=False, method="closed-form")


def test_module_json_loading():
    F = load_tamarkin_module({"summands": [[0, 2], [1, "inf"]]})
    assert math.isinf(energy(F).energy)
    G = load_tamarkin_module(json.dumps({"summands": [[0, 1.5]]}))
    assert energy(G).energy == 1.5
    with pytest.raises(ValueError):
        load_fibered_sheaf({"profile": "mystery"})
