"""The lifted constant-propagation analysis and its single-program degenerate.

The lifted engine transforms a tuple of stores, one per valid configuration,
analyzing every variant simultaneously.  An `if` (and the derived lub form)
joins both branches and ignores the condition; a `#if (theta)` updates exactly
the components whose configuration entails theta; a `while` accumulates the
iterates of its body:

    result = input |_| body(input) |_| body(body(input)) |_| ...

realized as: cur := input; acc := input; repeat { cur := body(cur);
acc := acc join cur } until acc is stable.  This computes the compositional
fixpoint definition itself, which the reconfiguration commutation property
requires; folding the join into cur instead can over-approximate it.
"""

from __future__ import annotations

from . import featexp, lang
from .errors import SemanticError
from .lattice import LiftedStore, Store, intval


def kleene_accumulate(step, start):
    """Join of all iterates step^i(start), stopping when the join is stable."""
    cur = start
    acc = start
    while True:
        cur = step(cur)
        new = acc.join(cur)
        if new == acc:
            return acc
        acc = new


def eval_expr(expr, store):
    """Expression analysis in a single store."""
    lat = store.lattice
    if isinstance(expr, lang.Num):
        return intval(expr.value)
    if isinstance(expr, lang.Var):
        return store.get(expr.name)
    if isinstance(expr, lang.BinOp):
        return lat.binop(expr.op, eval_expr(expr.left, store), eval_expr(expr.right, store))
    raise TypeError(f"not an expression: {expr!r}")


def analyze_expr_lifted(expr, store, configs=None):
    """Per-configuration expression values, as a tuple aligned with the configs."""
    if configs is not None and not store.configs.same_as(configs):
        raise SemanticError("store is not indexed by the given configuration set")
    return tuple(eval_expr(expr, s) for s in store.stores)


def analyze_single(stmt, store):
    """The analysis of a single variant; the statement must contain no #if."""
    if isinstance(stmt, lang.Skip):
        return store
    if isinstance(stmt, lang.Assign):
        return store.set(stmt.var, eval_expr(stmt.expr, store))
    if isinstance(stmt, lang.Seq):
        return analyze_single(stmt.second, analyze_single(stmt.first, store))
    if isinstance(stmt, lang.If):
        return analyze_single(stmt.then, store).join(analyze_single(stmt.orelse, store))
    if isinstance(stmt, lang.Lub):
        return analyze_single(stmt.left, store).join(analyze_single(stmt.right, store))
    if isinstance(stmt, lang.While):
        return kleene_accumulate(lambda s: analyze_single(stmt.body, s), store)
    if isinstance(stmt, lang.IfDef):
        raise SemanticError("single-program analysis does not accept #if statements")
    raise TypeError(f"not a statement: {stmt!r}")


def analyze_lifted(stmt, store, configs=None):
    """The lifted analysis over all configurations of the store at once."""
    if configs is not None and not store.configs.same_as(configs):
        raise SemanticError("store is not indexed by the given configuration set")
    return _lifted(stmt, store)


def _lifted(stmt, store):
    if isinstance(stmt, lang.Skip):
        return store
    if isinstance(stmt, lang.Assign):
        return store.with_stores(
            s.set(stmt.var, eval_expr(stmt.expr, s)) for s in store.stores
        )
    if isinstance(stmt, lang.Seq):
        return _lifted(stmt.second, _lifted(stmt.first, store))
    if isinstance(stmt, (lang.If, lang.Lub)):
        branches = (stmt.then, stmt.orelse) if isinstance(stmt, lang.If) else (stmt.left, stmt.right)
        return _lifted(branches[0], store).join(_lifted(branches[1], store))
    if isinstance(stmt, lang.While):
        return kleene_accumulate(lambda s: _lifted(stmt.body, s), store)
    if isinstance(stmt, lang.IfDef):
        analyzed = _lifted(stmt.body, store)
        configs = store.configs
        out = [
            analyzed.stores[i]
            if featexp.config_satisfies(configs, i, stmt.cond)
            else store.stores[i]
            for i in range(len(configs))
        ]
        return store.with_stores(out)
    raise TypeError(f"not a statement: {stmt!r}")


def analyze_program(program, store):
    """analyze_lifted over a whole program body."""
    return analyze_lifted(program.body, store)


def entry_store(configs, lattice, init="top"):
    if init == "top":
        return LiftedStore.top(configs, lattice)
    if init == "bot":
        return LiftedStore.bot(configs, lattice)
    raise SemanticError(f"unknown initial store: {init!r}")


def entry_single(lattice, init="top"):
    return Store.top(lattice) if init == "top" else Store.bot(lattice)
