"""The lifted analysis engine and the single-program analysis."""

import pytest

from liftcal import featexp as fx
from liftcal import lang
from liftcal.errors import SemanticError
from liftcal.lattice import CONST, TOP, LiftedStore, Store, intval
from liftcal.lifted import analyze_expr_lifted, analyze_lifted, analyze_single


def stores_of(values, configs):
    return LiftedStore(configs, tuple(Store.of(CONST, {"x": v}) for v in values))


def test_expr_constant_in_every_component(configs):
    store = LiftedStore.top(configs, CONST)
    assert analyze_expr_lifted(lang.Num(3), store) == (intval(3),) * 3


def test_expr_variable_lookup(configs):
    store = stores_of((intval(0), intval(1), intval(-1)), configs)
    assert analyze_expr_lifted(lang.Var("x"), store) == (intval(0), intval(1), intval(-1))


def test_expr_binop_component_wise(configs):
    store = stores_of((intval(0), intval(1), intval(-1)), configs)
    expr = lang.BinOp("+", lang.Var("x"), lang.Num(1))
    # per component: 0+1, 1+1, -1+1
    assert analyze_expr_lifted(expr, store) == (intval(1), intval(2), intval(0))


def test_s1_golden(s1, configs, top_store):
    result = analyze_lifted(s1.body, top_store)
    assert [s.get("x") for s in result.stores] == [intval(1)] * 3


def test_s2_golden(s2, configs, top_store):
    result = analyze_lifted(s2.body, top_store)
    assert [s.get("x") for s in result.stores] == [intval(0), intval(1), intval(-1)]


def test_while_accumulates_to_top():
    program = lang.parse_program(
        "features A; model A; begin x := 0; while (x < 5) { x := x + 1 } end"
    )
    configs = fx.valid_configs(program.feature_model)
    result = analyze_lifted(program.body, LiftedStore.top(configs, CONST))
    # hand iteration: 0, then 0 join 1 = top, stable afterwards
    assert result.stores[0].get("x") == TOP


def test_analyze_single_straight_line():
    stmt = lang.parse_program(
        "features A; model true; begin x := 0; x := x + 1 end"
    ).body
    out = analyze_single(stmt, Store.top(CONST))
    assert out.get("x") == intval(1)


def test_analyze_single_if_joins_branches():
    stmt = lang.parse_program(
        "features A; model true; begin if (y) { x := 1 } else { x := 2 } end"
    ).body
    out = analyze_single(stmt, Store.top(CONST))
    assert out.get("x") == TOP


def test_analyze_single_skip_identity():
    store = Store.of(CONST, {"x": intval(5)})
    assert analyze_single(lang.Skip(), store) == store


def test_analyze_single_rejects_ifdef(s1):
    with pytest.raises(SemanticError):
        analyze_single(s1.body, Store.top(CONST))


def test_lub_analyzes_like_if(configs, top_store):
    assign = lang.Assign("x", lang.Num(1))
    lub = lang.relabel(lang.Lub(assign, assign))
    out = analyze_lifted(lub, top_store)
    other = analyze_lifted(lang.relabel(assign), top_store)
    assert out == other
    identity = analyze_lifted(lang.relabel(lang.Lub(lang.Skip(), lang.Skip())), top_store)
    assert identity == top_store


def test_per_variant_correctness(s1, s2, configs, top_store):
    from liftcal.oracle import brute_force_lifted

    for program in (s1, s2):
        lifted_result = analyze_lifted(program.body, top_store)
        brute = brute_force_lifted(program, top_store)
        assert lifted_result == brute


def test_monotone_on_ordered_inputs(s2, configs):
    low = LiftedStore(
        configs, tuple(Store.of(CONST, {"x": intval(1), "y": intval(0)}) for _ in configs)
    )
    high = LiftedStore.top(configs, CONST)
    out_low = analyze_lifted(s2.body, low)
    out_high = analyze_lifted(s2.body, high)
    assert out_low.leq(out_high)


def test_empty_config_set():
    program = lang.parse_program("features A; model false; begin x := 1 end")
    configs = fx.valid_configs(program.feature_model)
    result = analyze_lifted(program.body, LiftedStore.top(configs, CONST))
    assert len(result) == 0
