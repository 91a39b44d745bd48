import dataclasses
import json
import math
from fractions import Fraction as F

import pytest

from dimlab.measures import ConfigError, cantor, example33, lebesgue, make_atomic, triangle
from dimlab.verify import (
    CheckReport, PointRecord, Scenario, check_gap_point, check_interior_bound,
    check_isolated_point, check_torus_power, load_suite, parse_value, run_scenario, run_suite,
    summary_text, write_reports,
)
from dimlab.verify import GapNotFound, HypothesisNotMet, NoInteriorFound

LOG23 = math.log(2) / math.log(3)


def _sc(**kw):
    base = dict(name="t", check="interior_bound", mu=example33(), nu=example33(), level=8, grid=16)
    base.update(kw)
    return Scenario(**base)


def test_parse_value():
    assert parse_value("1/3") == F(1, 3)
    assert parse_value(2) == 2
    assert parse_value("log(5)/log(3)") == pytest.approx(math.log(5) / math.log(3))
    assert parse_value("2*log(2)/log(3)") == pytest.approx(2 * LOG23)
    assert parse_value(None) is None
    for bad in ("__import__('os')", "open('x')", "log5", "1/0+", "[1]"):
        with pytest.raises((ConfigError, ValueError, ZeroDivisionError)):
            parse_value(bad)


def test_scenario_validation():
    with pytest.raises(ValueError):
        _sc(tol=0)
    with pytest.raises(ValueError):
        _sc(expect="maybe")
    with pytest.raises(ValueError):
        _sc(check="nonsense")


def test_verdict_is_a_function_of_margins():
    recs = [PointRecord(0.1, 1.0, 1.05, 0.05), PointRecord(0.2, 1.0, 0.97, -0.03)]
    assert CheckReport("a", "interior_bound", {}, recs, 0.05, 0.0, "pass").verdict == "pass"
    assert CheckReport("a", "interior_bound", {}, recs, 0.02, 0.0, "pass").verdict == "fail"
    any_ = CheckReport("a", "isolated_point", {}, recs, 0.02, 0.0, "pass", rule="any")
    assert any_.verdict == "pass"
    hnm = CheckReport("a", "interior_bound", {"hypothesis_met": False}, recs, 0.05, 0.0,
                      "hypothesis-not-met")
    assert hnm.verdict == "hypothesis-not-met" and hnm.ok
    info = CheckReport("a", "profile", {}, recs, 0.01, 0.0, "informational")
    assert info.ok


def test_interior_bound_passes_and_audits_gap():
    r = run_scenario(_sc(lam="log(5)/log(3)", level=10, grid=32))
    assert r.verdict == "pass" and r.audit["hypothesis_met"]
    assert len(r.records) == 32
    assert all(0 < rec.z < 2 for rec in r.records)


@pytest.mark.parametrize("nu,length", [(make_atomic([(0, 1), (2, 1)]), 2),
                                       (make_atomic([(0, 1), (1, 1)]), 1)])
def test_interior_audit_rejects_long_gaps(nu, length):
    mu = triangle() if length == 2 else lebesgue()
    with pytest.raises(HypothesisNotMet) as info:
        check_interior_bound(mu, nu, 1, _sc(mu=mu, nu=nu, level=8))
    assert info.value.audit["hypothesis_met"] is False
    r = run_scenario(_sc(mu=mu, nu=nu, lam=1, level=8, expect="hypothesis-not-met"))
    assert r.verdict == "hypothesis-not-met" and r.ok


def test_gap_point_dispatch():
    sc = _sc(check="gap_point", mu=lebesgue(), nu=make_atomic([(0, 1), (F(1, 2), 1)]), level=10)
    with pytest.raises(GapNotFound):
        check_gap_point(sc.mu, sc.nu, 1, sc)
    wide = run_scenario(dataclasses.replace(sc, nu=make_atomic([(0, 1), (F(3, 2), 1)]), z=1, level=12))
    assert wide.verdict == "pass" and wide.audit["case"] == "unique"
    unit = run_scenario(dataclasses.replace(sc, nu=make_atomic([(0, 1), (1, 1)]), z=1, level=12))
    assert unit.verdict == "pass" and unit.audit["case"] == "boundary"
    assert "equality_observed" in unit.records[0].extra


def test_unique_pair_corner():
    r = run_scenario(_sc(check="unique_pair", mu=cantor(), nu=cantor(), z=0, level=10))
    assert r.verdict == "pass"
    assert r.records[0].estimate == pytest.approx(2 * LOG23, abs=0.02)
    bad = run_scenario(_sc(check="unique_pair", mu=cantor(), nu=cantor(), z=F(1, 2), level=8))
    assert bad.verdict == "hypothesis-not-met"


def test_isolated_point_cantor():
    r = check_isolated_point(cantor(), _sc(check="isolated_point", mu=cantor(), nu=None,
                                            level=9, grid=32, k_max=3))
    ks = {rec.z: rec for rec in r.records}
    # one factor: the boundary value is the common interior value, so no evidence
    assert 1 not in ks or ks[1].margin <= r.tol
    assert r.audit["first_k"] in (2, 3, None)
    assert r.verdict in ("pass", "fail")


def test_torus_power_cases():
    sc = _sc(check="torus_power", mu=cantor(), nu=None, lam="log(2)/log(3)", level=8, grid=32,
             k_max=2)
    r = run_scenario(sc)
    assert r.verdict == "pass" and r.audit["N"] <= 6
    u = run_scenario(dataclasses.replace(sc, mu=lebesgue(3), lam=1, k_max=1))
    assert u.verdict == "pass" and u.audit["N"] == 1
    with pytest.raises(NoInteriorFound):
        check_torus_power(make_atomic([(0, 1)]), LOG23,
                          dataclasses.replace(sc, mu=make_atomic([(0, 1)]), base=3))
    atom = run_scenario(dataclasses.replace(sc, mu=make_atomic([(0, 1)]), base=3,
                                            expect="hypothesis-not-met"))
    assert atom.ok and atom.audit["reason"]


def test_suite_loading_errors(tmp_path):
    assert run_suite({"scenarios": []}) == []
    with pytest.raises(ConfigError):
        load_suite({"scenarios": [{"name": "x", "check": "interior_bound"}]})
    with pytest.raises(ConfigError):
        load_suite({"scenarios": [{"name": "x", "check": "profile", "mu": "cantor", "colour": 1}]})
    dup = {"name": "x", "check": "profile", "mu": "cantor"}
    with pytest.raises(ConfigError):
        load_suite({"scenarios": [dup, dup]})
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError):
        load_suite(str(bad))
    with pytest.raises(ConfigError):
        load_suite(str(tmp_path / "missing.json"))


def test_default_suite_shape():
    scs = load_suite("default")
    names = {s.name for s in scs}
    assert len(scs) >= 15
    assert {"example33-interior", "cantor-isolated", "cantor-torus",
            "bernoulli-third-quarter"} <= names
    assert {s.expect for s in scs} == {"pass", "hypothesis-not-met", "informational"}


def test_reports_written(tmp_path):
    sc = _sc(lam="log(5)/log(3)", level=8, grid=8)
    reports = run_suite([sc, dataclasses.replace(sc, name="u", check="profile", expect="informational")])
    write_reports(reports, tmp_path)
    assert (tmp_path / "summary.csv").read_text().splitlines()[0].startswith("name,check,expect")
    assert len((tmp_path / "t.csv").read_text().splitlines()) == 9
    assert "2/2 scenarios as expected" in summary_text(reports)


def test_suite_file_roundtrip(tmp_path):
    p = tmp_path / "s.json"
    p.write_text(json.dumps({"measures": {"nu": {"kind": "atomic", "atoms": [[0, 1], [2, 1]]}},
                             "scenarios": [{"name": "g", "check": "gap_point", "mu": "triangle",
                                            "nu": "nu", "z": 2, "level": 12}]}))
    (r,) = run_suite(str(p))
    assert r.verdict == "pass"


def test_deeper_level_does_not_flip_verdicts():
    """Rerunning the bounded default scenarios one level deeper moves the grid
    ceiling up and the floor down by at most 0.01, and a pass stays a pass
    with the tolerance doubled."""
    for sc in load_suite("default"):
        if sc.check not in ("interior_bound", "lower_bound") or sc.expect != "pass":
            continue
        lo = run_scenario(dataclasses.replace(sc, level=sc.level - 2))
        hi = run_scenario(dataclasses.replace(sc, level=sc.level - 1, tol=2 * sc.tol))
        a = [rec.estimate for rec in lo.records]
        b = [rec.estimate for rec in hi.records]
        assert max(b) <= max(a) + 0.01, sc.name
        assert min(b) >= min(a) - 0.01, sc.name
        if lo.verdict == "pass":
            assert hi.verdict == "pass", sc.name
