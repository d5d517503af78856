from dataclasses import replace

import numpy as np
import pytest

from uniformpatrol.networks import build_network, param_space
from uniformpatrol.reproduce import (
    SUITES,
    TABLE_IDS,
    delay_guard,
    load_reference,
    reproduce_table,
    suite_closed_forms,
    tolerances,
)
from uniformpatrol.stackelberg import solve


def perturbed(dv=0.0, dp=0.0):
    def solver(net, m, config=None):
        res = solve(net, m, config)
        return replace(res, value=res.value + dv, x=res.x + dp)
    return solver


def test_reference_file_is_complete():
    ref = load_reference()
    assert ref["version"] >= 1
    assert sorted(ref["tables"]) == sorted(TABLE_IDS)
    assert tolerances() == {"value": 1e-3, "params": 5e-3, "params_flat": 2e-2, "limit": 1e-3, "indifference": 1e-3}
    assert len(ref["tables"]["2"]["rows"]) == 8
    for tid in ("3", "5"):
        assert len(ref["tables"][tid]["rows"]) == 5
    for tid, spec in ref["tables"].items():
        if spec["kind"] == "solve":
            names = param_space(build_network(spec["family"], spec["n"])).names
            for row in spec["rows"]:
                assert set(row["params"]) == set(names)


def test_table_7_passes():
    rep = reproduce_table(7)
    assert rep.ok
    assert len(rep.rows) == 4
    assert rep.max_deviation < 1e-3
    assert "all rows within tolerance" in rep.format()


@pytest.mark.parametrize("dv,dp", [(2e-3, 0.0), (0.0, 1e-2)])
def test_perturbed_solver_fails_table_8(dv, dp):
    rep = reproduce_table(8, solver=perturbed(dv, dp))
    assert not rep.ok
    assert all(r.failures() for r in rep.rows)
    assert "FAILED" in rep.format()


def test_perturbation_within_tolerance_still_passes():
    assert reproduce_table(8, solver=perturbed(5e-4)).ok


def test_unknown_table():
    with pytest.raises(KeyError):
        reproduce_table(11)


def test_compare_table_checks_strict_order():
    rep = reproduce_table(6)
    row = rep.rows[2]
    assert row.label == "m=4"
    assert row.ok
    vals = [c.computed for c in row.checks[:3]]
    assert vals == sorted(vals)


def test_delay_guard_on_a_clean_optimum():
    g = delay_guard(solve(build_network("circle", 5), 5), 200)
    assert g.ok()
    assert g.curve_min == pytest.approx(0.5, abs=1e-12)


def test_closed_form_suite_passes():
    checks = suite_closed_forms()
    assert len(checks) == 5
    assert all(c.ok for c in checks), [c for c in checks if not c.ok]


def test_suite_registry():
    assert set(SUITES) == {"closed-forms", "conjecture1", "extensions", "montecarlo"}
