"""Acceptance criteria, one test each; every test prints a PASS/FAIL line."""

import json

import pytest

from pbernoulli.acceptance import CHECKS, run_check

NAMES = {
    1: "closed_form_eigenvalues",
    2: "shooting_matches_closed_form",
    3: "characteristic_sum_and_identity",
    4: "H_quotient_pair_sum",
    5: "two_plane_phi_constancy",
    6: "cone_power_law_and_tripling",
    7: "strip_minimizer_vs_1d_oracle",
    8: "rescaled_phase_norms",
    9: "slab_flatness_geometry",
    10: "property_suites",
}


@pytest.mark.parametrize("cid", sorted(CHECKS), ids=[NAMES[k] for k in sorted(CHECKS)])
def test_criterion(cid, capsys):
    check = run_check(cid, seed=0)
    with capsys.disabled():
        print("\n" + check.line())
        print("    " + json.dumps(check.to_dict()["detail"], default=str)[:400])
    assert check.passed, check.line()
