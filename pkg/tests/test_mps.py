import pytest
from hypothesis import given, settings, strategies as st

from ldesval.engine import (baseline_policy, decarbonization_policy,
                            run_baseline, toy_a, toy_b)
from ldesval.lpcore import INF, LinearProgram, LpError, lp_equal
from ldesval.model import build_baseline_model, build_opportunity_model
from ldesval.mps import MpsFormatError, emit_standard_form, parse_standard_form


def _round_trip(lp):
    doc = emit_standard_form(lp)
    again = parse_standard_form(doc)
    assert lp_equal(lp, again)
    assert emit_standard_form(again) == doc
    return doc


def test_single_variable_lower_bound():
    lp = LinearProgram("one")
    x = lp.add_var("x", lb=1.0)
    lp.set_objective("min", {x: 1.0})
    doc = _round_trip(lp)
    bounds = doc[doc.index("BOUNDS"):]
    assert " LO " in bounds and "x" in bounds


def test_empty_constraint_lp():
    lp = LinearProgram("empty")
    lp.set_objective("min", {})
    doc = _round_trip(lp)
    assert "ROWS" in doc and "ENDATA" in doc


def test_toy_a_baseline_round_trip():
    m = build_baseline_model(toy_a(), baseline_policy(toy_a()))
    doc = _round_trip(m.lp)
    parsed = parse_standard_form(doc)
    assert parsed.num_vars == m.lp.num_vars
    assert parsed.num_constraints == m.lp.num_constraints


def test_toy_b_opportunity_round_trip():
    inst = toy_b()
    q_star = run_baseline(inst).q_star
    m = build_opportunity_model(inst, decarbonization_policy(inst, 10.0), q_star)
    _round_trip(m.lp)


def test_max_sense_round_trip():
    lp = LinearProgram("mx")
    x = lp.add_var("x", ub=5.0)
    lp.set_objective("max", {x: 2.0}, constant=1.0)
    again = parse_standard_form(emit_standard_form(lp))
    assert again.sense == "max"
    assert again.objective_constant == 1.0


def test_name_too_long_rejected():
    lp = LinearProgram()
    lp.add_var("x" * 40)
    lp.set_objective("min", {})
    with pytest.raises(LpError, match="x" * 10):
        emit_standard_form(lp)


def test_missing_endata():
    lp = LinearProgram()
    x = lp.add_var("x")
    lp.set_objective("min", {x: 1.0})
    doc = emit_standard_form(lp)
    truncated = doc[:doc.rindex("ENDATA")].rstrip()
    with pytest.raises(MpsFormatError, match="ENDATA") as err:
        parse_standard_form(truncated)
    assert err.value.line_no == len(truncated.splitlines())


def test_rhs_for_unknown_row():
    doc = "\n".join([
        "NAME          t",
        "ROWS",
        " N  COST",
        " L  c1",
        "COLUMNS",
        "    x  COST  1.0",
        "    x  c1  1.0",
        "RHS",
        "    RHS  nosuchrow  1.0",
        "ENDATA",
    ])
    with pytest.raises(MpsFormatError, match="nosuchrow"):
        parse_standard_form(doc)


def test_column_for_unknown_row():
    doc = "\n".join([
        "NAME          t",
        "ROWS",
        " N  COST",
        "COLUMNS",
        "    x  ghost  1.0",
        "ENDATA",
    ])
    with pytest.raises(MpsFormatError, match="ghost"):
        parse_standard_form(doc)


names = st.text(alphabet=st.sampled_from("abcdefgxyz0123456789_"),
                min_size=1, max_size=12)
finite = st.floats(min_value=-1e6, max_value=1e6,
                   allow_nan=False, allow_infinity=False)


@st.composite
def random_lp(draw):
    var_names = draw(st.lists(names, min_size=1, max_size=6, unique=True))
    lp = LinearProgram("rnd")
    for name in var_names:
        lo = draw(st.one_of(st.just(0.0), st.just(-INF), finite))
        hi = draw(st.one_of(st.just(INF), finite))
        if lo > hi:
            lo, hi = hi, lo
        lp.add_var("v_" + name, lo, hi)
    n_cons = draw(st.integers(0, 5))
    for i in range(n_cons):
        coeffs = {j: draw(finite) for j in range(lp.num_vars)
                  if draw(st.booleans())}
        rel = draw(st.sampled_from(["<=", "=", ">="]))
        lp.add_constraint(f"c{i}", coeffs, rel, draw(finite))
    sense = draw(st.sampled_from(["min", "max"]))
    obj = {j: draw(finite) for j in range(lp.num_vars) if draw(st.booleans())}
    lp.set_objective(sense, obj, draw(finite))
    return lp


@settings(max_examples=150, deadline=None)
@given(random_lp())
def test_round_trip_property(lp):
    _round_trip(lp)
