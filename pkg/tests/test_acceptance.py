"""Acceptance suite: golden values, theorem properties, performance, formats.

Run with `pytest tests/test_acceptance.py -s` to see one PASS/FAIL line per
criterion.
"""

import json
import time

from liftcal import abstraction as ab
from liftcal import cli
from liftcal import featexp as fx
from liftcal import lang
from liftcal import oracle
from liftcal.abstracted import analyze_abstracted
from liftcal.lattice import (
    CONST,
    CONST_PLUS,
    GEQ0,
    LEQ0,
    TOP,
    LiftedStore,
    intval,
    parse_value,
)
from liftcal.lifted import analyze_lifted
from liftcal.reconfig import reconfigure

from conftest import S1_SOURCE, S1_PRIME_SOURCE, S2_SOURCE


def check(name, ok, detail=""):
    line = f"{'PASS' if ok else 'FAIL'}  {name}"
    if detail:
        line += f"  [{detail}]"
    print(line)
    assert ok, name
    return ok


def load(source):
    return lang.parse_program(source)


def setting(source):
    program = load(source)
    space = program.feature_model.space
    configs = fx.valid_configs(program.feature_model)
    return program, space, configs


def x_values(lifted):
    return [s.get("x") for s in lifted.stores]


# ---------------------------------------------------------------------------
# Criterion 1: golden paper values (exact equality, < 1 s each)


def test_criterion1_lifted_analysis_values():
    start = time.perf_counter()
    s1, space, configs = setting(S1_SOURCE)
    s2 = load(S2_SOURCE)
    top = LiftedStore.top(configs, CONST)
    assert [fx.render(f) for f in configs.formulas] == ["A & B", "A & !B", "!A & B"]
    ok = x_values(analyze_lifted(s1.body, top)) == [intval(1)] * 3
    ok = ok and x_values(analyze_lifted(s2.body, top)) == [
        intval(0),
        intval(1),
        intval(-1),
    ]
    check("1: lifted analysis of S1 and S2", ok, f"{time.perf_counter()-start:.2f}s")
    assert time.perf_counter() - start < 1.0


def test_criterion1_abstraction_values():
    start = time.perf_counter()
    s1, space, configs = setting(S1_SOURCE)
    s2 = load(S2_SOURCE)
    top = LiftedStore.top(configs, CONST)
    a_s1 = analyze_lifted(s1.body, top)
    a_s2 = analyze_lifted(s2.body, top)
    ok = x_values(ab.alpha_apply(ab.Join(), configs, a_s1)) == [intval(1)]
    ok = ok and x_values(ab.alpha_apply(ab.Join(), configs, a_s2)) == [TOP]
    ok = ok and x_values(ab.alpha_apply(ab.Proj(fx.Atom("A")), configs, a_s2)) == [
        intval(0),
        intval(1),
    ]
    ok = ok and x_values(
        ab.alpha_apply(ab.Proj(fx.Not(fx.Atom("A"))), configs, a_s2)
    ) == [intval(-1)]
    join_a = ab.parse_abstraction("proj(A) >> join", space)
    join_not_a = ab.parse_abstraction("proj(!A) >> join", space)
    ok = ok and x_values(ab.alpha_apply(join_a, configs, a_s2)) == [TOP]
    ok = ok and x_values(ab.alpha_apply(join_not_a, configs, a_s2)) == [intval(-1)]
    ignored_a = ab.alpha_apply(ab.FIgnore("A"), configs, a_s2)
    ok = ok and x_values(ignored_a) == [TOP, intval(1)]
    ok = ok and fx.equiv(
        ignored_a.configs.formulas[0], fx.parse_featexp("(A & B) | (!A & B)", space)
    )
    ignored_b = ab.alpha_apply(ab.FIgnore("B"), configs, a_s2)
    ok = ok and x_values(ignored_b) == [TOP, intval(-1)]
    ok = ok and fx.equiv(
        ignored_b.configs.formulas[0], fx.parse_featexp("(A & B) | (A & !B)", space)
    )
    check("1: join/proj/fignore store values", ok, f"{time.perf_counter()-start:.2f}s")
    assert time.perf_counter() - start < 1.0


def test_criterion1_abstracted_analysis_values():
    start = time.perf_counter()
    s1, space, configs = setting(S1_SOURCE)
    s2 = load(S2_SOURCE)
    join_a = ab.parse_abstraction("proj(A) >> join", space)
    meanings = ab.meaning_configs(join_a, space, configs)
    d_top = LiftedStore.top(meanings, CONST)
    ok = x_values(analyze_abstracted(s1.body, d_top)) == [intval(1)]
    ok = ok and x_values(analyze_abstracted(s2.body, d_top)) == [TOP]
    check("1: abstracted analysis values (Const)", ok, f"{time.perf_counter()-start:.2f}s")
    assert time.perf_counter() - start < 1.0


def test_criterion1_constplus_geq_value():
    start = time.perf_counter()
    _, space, configs = setting(S1_SOURCE)
    s2 = load(S2_SOURCE)
    join_a = ab.parse_abstraction("proj(A) >> join", space)
    meanings = ab.meaning_configs(join_a, space, configs)
    d_top = LiftedStore.top(meanings, CONST_PLUS)
    ok = x_values(analyze_abstracted(s2.body, d_top)) == [GEQ0]
    check("1: Const+ value for proj(A) >> join on S2", ok, f"{time.perf_counter()-start:.2f}s")
    assert time.perf_counter() - start < 1.0


def test_criterion1_constplus_leq_value():
    # Stated value: proj(B) >> join on S2 gives x <= 0 in Const+.  Under the
    # published transfer rules the #if (A) middle case gives 0 join 1 = >=0
    # and the entailed x := x - 1 then yields top for any sound operator, so
    # this assertion cannot hold; see the decisions ledger.  It is kept
    # faithful to the stated criterion rather than weakened.
    _, space, configs = setting(S1_SOURCE)
    s2 = load(S2_SOURCE)
    join_b = ab.parse_abstraction("proj(B) >> join", space)
    meanings = ab.meaning_configs(join_b, space, configs)
    d_top = LiftedStore.top(meanings, CONST_PLUS)
    values = x_values(analyze_abstracted(s2.body, d_top))
    check("1: Const+ value for proj(B) >> join on S2", values == [LEQ0], f"got {values}")


def test_criterion1_reconfigure_outputs():
    start = time.perf_counter()
    s1_prime, space, configs = setting(S1_PRIME_SOURCE)

    def flat(stmt):
        if isinstance(stmt, lang.Seq):
            return flat(stmt.first) + flat(stmt.second)
        return [stmt]

    rewritten, _ = reconfigure(s1_prime, ab.parse_abstraction("proj(A) >> join", space))
    ok = [lang.pretty_stmt(s) for s in flat(rewritten.body)] == [
        "#if (Z1) { x := x + 1 }",
        "#if (Z1) { if (0) { x := 1 } else { skip } }",
    ]
    rewritten, _ = reconfigure(s1_prime, ab.parse_abstraction("proj(B) >> join", space))
    ok = ok and [lang.pretty_stmt(s) for s in flat(rewritten.body)] == [
        "#if (Z1) { if (0) { x := x + 1 } else { skip } }",
        "#if (Z1) { x := 1 }",
    ]
    rewritten, _ = reconfigure(
        s1_prime, ab.parse_abstraction("(proj(A) >> join) || proj(B)", space)
    )
    ok = ok and [lang.pretty_stmt(s) for s in flat(rewritten.body)] == [
        "#if (Z1 | A) { x := x + 1 }",
        "#if (Z1) { if (0) { x := 1 } else { skip } }",
        "#if (B) { x := 1 }",
    ]
    new_configs = fx.valid_configs(rewritten.feature_model)
    ok = ok and [fx.render(f) for f in new_configs.formulas] == [
        "Z1 & !A & !B",
        "!Z1 & A & B",
        "!Z1 & !A & B",
    ]
    check("1: reconfigured programs and K'", ok, f"{time.perf_counter()-start:.2f}s")
    assert time.perf_counter() - start < 1.0


def test_criterion1_commutation_trace():
    start = time.perf_counter()
    s1, space, configs = setting(S1_SOURCE)
    rewritten, _ = reconfigure(s1, ab.parse_abstraction("proj(A) >> join", space))
    new_configs = fx.valid_configs(rewritten.feature_model)
    result = analyze_lifted(rewritten.body, LiftedStore.top(new_configs, CONST))
    ok = x_values(result) == [intval(1)]
    check("1: lifted trace over reconfigured S1 ends at x=1", ok, f"{time.perf_counter()-start:.2f}s")
    assert time.perf_counter() - start < 1.0


# ---------------------------------------------------------------------------
# Criterion 2: theorem suites, >= 1000 cases each, zero failures, < 60 s


def test_criterion2_theorem_suites():
    cases = 1000
    start = time.perf_counter()
    report = oracle.check_all(seed=42, cases=cases)
    elapsed = time.perf_counter() - start
    for prop in report.properties:
        check(f"2: {prop.name} ({prop.cases} cases)", prop.passed,
              "; ".join(m for _, m in prop.failures[:2]))
    check("2: total runtime < 60 s", elapsed < 60, f"{elapsed:.1f}s")


# ---------------------------------------------------------------------------
# Criterion 3: performance shape on the synthetic family


def test_criterion3_performance():
    timings = {}
    for n in (8, 10, 12, 14):
        program = cli._bench_program(n)
        configs = fx.valid_configs(program.feature_model)
        entry = LiftedStore.top(configs, CONST)
        start = time.perf_counter()
        analyze_lifted(program.body, entry)
        lifted_time = time.perf_counter() - start
        join_entry = ab.alpha_apply(ab.Join(), configs, entry, CONST)
        start = time.perf_counter()
        analyze_abstracted(program.body, join_entry)
        join_time = time.perf_counter() - start
        timings[n] = (lifted_time, join_time, lifted_time / join_time)
    lifted14, join14, ratio14 = timings[14]
    check("3: abstracted join at N=14 under 100 ms", join14 < 0.1, f"{join14*1000:.2f}ms")
    check("3: join at least 50x faster at N=14", ratio14 >= 50, f"{ratio14:.0f}x")
    speedups = [timings[n][2] for n in (8, 10, 12, 14)]
    monotone = all(a <= b for a, b in zip(speedups, speedups[1:]))
    check("3: speedup non-decreasing in N", monotone,
          " -> ".join(f"{s:.0f}x" for s in speedups))


# ---------------------------------------------------------------------------
# Criterion 4: round-trips and formats


def test_criterion4_pretty_parse_fixed_point():
    gen = oracle.CaseGen(0)
    corpus = [oracle.gen_random_program(gen) for _ in range(17)]
    corpus += [load(S1_SOURCE), load(S2_SOURCE), load(S1_PRIME_SOURCE)]
    ok = True
    for program in corpus:
        normalized = lang.parse_program(lang.pretty(program))  # one normalization
        text = lang.pretty(normalized)
        reparsed = lang.parse_program(text)
        ok = ok and lang.pretty(reparsed) == text
        ok = ok and lang.strip_labels(reparsed.body) == lang.strip_labels(normalized.body)
    check("4: pretty/parse fixed point on 20 programs", ok)


def test_criterion4_json_round_trip(tmp_path, capsys):
    path = tmp_path / "s2.imp"
    path.write_text(S2_SOURCE)
    code = cli.main(["analyze", str(path), "--format", "json"])
    payload = json.loads(capsys.readouterr().out)
    ok = code == 0
    ok = ok and set(payload) == {"configs", "results", "renames"}
    ok = ok and isinstance(payload["configs"], list)
    for row in payload["results"]:
        ok = ok and set(row) == {"config", "store"}
        for literal in row["store"].values():
            parse_value(literal, CONST_PLUS)  # raises if malformed
    values = [row["store"]["x"] for row in payload["results"]]
    ok = ok and values == ["0", "1", "-1"]
    code = cli.main(
        ["analyze", str(path), "--abs", "proj(A) >> join", "--lattice", "constplus",
         "--format", "json"]
    )
    signed = json.loads(capsys.readouterr().out)
    ok = ok and code == 0
    ok = ok and [row["store"]["x"] for row in signed["results"]] == [">=0"]
    ok = ok and parse_value(">=0", CONST_PLUS) == GEQ0
    ok = ok and list(signed["renames"]) == ["Z1"]
    check("4: JSON schema and value-literal round trip", ok)
