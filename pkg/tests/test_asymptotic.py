import json

import numpy as np
import pytest

from lcslab.asymptotic import (
    CellComplex,
    CellularSheaf,
    EquivariantSheafModel,
    Incidence,
    WindowSpec,
    build_window,
    check_domain_independence,
    check_microlocal_morse,
    circle_model_exact,
    circle_model_unit_class,
    circle_model_with_point_summand,
    estimate_cj,
    load_model,
    morse_novikov_oracle,
    torus_model_exact,
    torus_model_first_class,
    window_betti,
)
from lcslab.sheaf import BettiVector, SheafValidationError
from lcslab.experiments import equivariant_model_for


def test_window_spec():
    assert WindowSpec(0).copies(1) == 1
    assert WindowSpec(2).copies(2) == 25
    assert len(WindowSpec(1).offsets(2)) == 9
    with pytest.raises(ValueError):
        WindowSpec(-1)


def test_model_validation_catches_bad_gluing():
    cells = {"v0": 0, "v1": 0, "e": 1}
    incs = (Incidence("e", "v0", -1), Incidence("e", "v1", 1))
    K = CellComplex(cells=cells, incidences=incs)
    F_ok = CellularSheaf(complex=K, stalks={c: 1 for c in cells})
    with pytest.raises(SheafValidationError, match="per deck generator"):
        EquivariantSheafModel(domain=K, rank=2, glue=({"v1": "v0"},), sheaf=F_ok)
    with pytest.raises(SheafValidationError, match="unknown cells"):
        EquivariantSheafModel(domain=K, rank=1, glue=({"ghost": "v0"},), sheaf=F_ok)
    with pytest.raises(SheafValidationError, match="dimension"):
        EquivariantSheafModel(domain=K, rank=1, glue=({"e": "v0"},), sheaf=F_ok)
    F_bad = CellularSheaf(complex=K, stalks={"v0": 1, "v1": 2, "e": 1},
                          restrictions={("e", "v1"): ((1, 0),)})
    with pytest.raises(SheafValidationError, match="stalks differ"):
        EquivariantSheafModel(domain=K, rank=1, glue=({"v1": "v0"},), sheaf=F_bad)
    with pytest.raises(SheafValidationError, match="cycle"):
        K2 = CellComplex(cells={"v0": 0, "v1": 0, "e": 1},
                         incidences=(Incidence("e", "v0", -1), Incidence("e", "v1", 1)))
        F2 = CellularSheaf(complex=K2, stalks={c: 1 for c in K2.cells})
        EquivariantSheafModel(domain=K2, rank=1, glue=({"v1": "v0", "v0": "v1"},),
                              sheaf=F2)


def test_owned_cells_and_resolution():
    m = circle_model_unit_class()
    assert m.owned_cells() == ["e0", "v0"]
    assert m.resolve("v1") == ("v0", (1,))
    assert m.resolve("v0") == ("v0", (0,))
    t2 = torus_model_first_class()
    assert set(t2.owned_cells()) == {"v0", "a0", "b", "F"}
    assert t2.resolve("a1") == ("a0", (1,))


def test_build_window_structure():
    m = circle_model_unit_class()
    K, Z = build_window(m, 1)
    # 3 copies of 2 owned cells, plus the closing vertex above the top copy
    assert len(Z.cells) == 6
    assert len(K.cells) == 7
    Z.validate(K)
    # tiling exactness: every window cell tagged by exactly one copy offset
    offsets = sorted(off for (_, off) in Z.cells)
    assert offsets == sorted([(-1,), (-1,), (0,), (0,), (1,), (1,)])


def test_window_betti_values():
    s1 = circle_model_unit_class()
    for k in range(6):
        assert window_betti(s1, k).trimmed() == ()
    exact = circle_model_exact()
    for k in (0, 2):
        assert window_betti(exact, k).trimmed() == (1, 1)
    t2 = torus_model_first_class()
    for k in range(3):
        assert window_betti(t2, k).trimmed() == ()
    t2e = torus_model_exact()
    assert window_betti(t2e, 0).trimmed() == (1, 2, 1)


def test_window_betti_rerooting_invariance():
    for model in (circle_model_unit_class(), torus_model_first_class()):
        for k in (0, 1):
            base = window_betti(model, k)
            shifted = window_betti(model, k, root=(3,))
            assert base.ranks == shifted.ranks


def test_window_betti_field_agreement():
    m = circle_model_with_point_summand()
    assert window_betti(m, 2, "F2").ranks == window_betti(m, 2, "Q").ranks


def test_estimate_cj_circle_cases():
    est = estimate_cj(circle_model_unit_class(), k_max=3)
    assert est.estimates == (0.0, 0.0)
    assert all(est.converged)
    exact = estimate_cj(circle_model_exact(), k_max=2)
    assert exact.estimates == (1.0, 1.0)
    assert all(exact.converged)
    with pytest.raises(ValueError):
        estimate_cj(circle_model_exact(), k_max=0)


def test_estimate_cj_point_summand_density():
    est = estimate_cj(circle_model_with_point_summand(), k_max=4)
    # per-copy contribution is one extra degree-0 class: exactly linear growth
    for k, bv in zip(est.ks, est.betti_by_k):
        assert bv[0] == 2 * k + 1
    assert est.estimates[0] == 1.0
    assert est.normalized[-1][1] == 0.0


def test_estimate_csv_export(tmp_path):
    est = estimate_cj(circle_model_unit_class(), k_max=2)
    path = tmp_path / "cj.csv"
    est.write_csv(path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "k,j,b_j,normalized"
    assert len(lines) == 1 + 3 * 2  # three k values, two degrees


def test_domain_independence_identical_and_shifted():
    a = circle_model_unit_class()
    rep = check_domain_independence(a, circle_model_unit_class(cut=0.5), k_max=3)
    assert rep.estimates_agree
    assert rep.fitted_constant == 0.0
    assert all(all(d == 0 for d in row) for row in rep.diffs_by_k)
    # a subdivided cut is a genuinely different complex, same estimates
    rep2 = check_domain_independence(a, circle_model_unit_class(subdivisions=3), k_max=3)
    assert rep2.estimates_agree
    with pytest.raises(ValueError, match="deck rank"):
        check_domain_independence(a, circle_model_exact(), k_max=2)


def test_domain_independence_exact_case():
    rep = check_domain_independence(circle_model_exact(), circle_model_exact(), k_max=2)
    assert rep.estimates_agree and rep.max_estimate_gap == 0.0


def test_morse_novikov_oracle_regimes():
    assert morse_novikov_oracle(circle_model_exact()) == (1, 1)
    assert morse_novikov_oracle(equivariant_model_for("s1_dtheta")) == (0, 0)
    assert morse_novikov_oracle(equivariant_model_for("t2_dtheta1")) == (0, 0, 0)
    assert morse_novikov_oracle(torus_model_exact()) == (1, 2, 1)
    # no cover metadata and nonzero rank: unsupported
    assert morse_novikov_oracle(circle_model_unit_class()) is None


def test_oracle_inequality_on_shipped_models():
    for name in ("s1_exact", "s1_dtheta", "t2_dtheta1"):
        model = equivariant_model_for(name)
        est = estimate_cj(model, k_max=2)
        oracle = morse_novikov_oracle(model)
        assert oracle is not None
        for j, rank in enumerate(oracle):
            assert est.estimates[j] >= rank  # with equality on these models
            assert est.estimates[j] == rank


def test_microlocal_morse_inequality():
    # circle with exact class: c = (1, 1), one minimum and one maximum
    contributions = [BettiVector((1,)), BettiVector((0, 1))]
    assert check_microlocal_morse((1.0, 1.0), contributions)
    # unit class: c = 0 and no critical contributions
    assert check_microlocal_morse((0.0, 0.0), [])
    # more critical points than classes still satisfies the inequality
    assert check_microlocal_morse((1.0, 1.0),
                                  [BettiVector((2,)), BettiVector((0, 2))])
    # an impossible profile is flagged
    assert not check_microlocal_morse((2.0, 0.0), [BettiVector((1,))])


def test_base_complex_quotient():
    m = circle_model_unit_class()
    K, F = m.base_complex()
    assert set(K.cells) == {"v0", "e0"}
    from lcslab.sheaf import cohomology
    assert cohomology(K, F).trimmed() == (1, 1)


def test_load_model_json():
    doc = {
        "cells": [["v0", 0], ["v1", 0], ["e", 1]],
        "faces": [["e", "v0", -1], ["e", "v1", 1]],
        "rank": 1,
        "glue": [{"v1": "v0"}],
        "label": "from-json",
    }
    m = load_model(json.dumps(doc))
    assert m.label == "from-json"
    assert window_betti(m, 2).trimmed() == ()
    assert m.resolve("v1") == ("v0", (1,))
