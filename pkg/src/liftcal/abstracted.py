"""The abstracted analysis and its data-flow equation system.

The abstracted engine has the same shape as the lifted one but runs on stores
indexed by abstract configurations, whose entries are no longer total
valuations.  A `#if (theta)` therefore splits three ways per component k:

    k entails theta          -> analyzed
    k entails !theta         -> unchanged
    both k&theta, k&!theta   -> old joined with analyzed
        satisfiable

The components carry their meaning formulas over the original feature space
(a joined component means the disjunction of everything it confounds), and
the case split is decided on those meanings.

The same transfer functions can be phrased as data-flow equations over
per-label in/out stores; solve_dataflow computes their least solution with a
worklist, which is an upper bound of the compositional result at every label
and equal to it on loop-free programs.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import featexp, lang
from .errors import SemanticError
from .featexp import Not
from .lattice import LiftedStore, Store
from .lifted import eval_expr, kleene_accumulate

_ANALYZED, _UNTOUCHED, _MIXED = 0, 1, 2


def _literal_vals(configs):
    # per-component valuation dicts for components whose meaning is a plain
    # literal conjunction (None elsewhere), computed once per config set
    cached = getattr(configs, "_literal_vals", None)
    if cached is None:
        cached = tuple(featexp.literal_valuation(phi) for phi in configs.formulas)
        object.__setattr__(configs, "_literal_vals", cached)
    return cached


def _ifdef_cases(configs, theta):
    """Per-component case of a #if with condition theta.

    The !theta entailment is checked first: on a satisfiable meaning the two
    entailments are mutually exclusive, and an unsatisfiable meaning (a join
    that confounded nothing) then counts as untouched, matching what its
    never-satisfied rewritten guard does.
    """
    if configs.valuations is not None:
        assignments = configs.assignments()
        return [
            _ANALYZED if featexp.eval_featexp(theta, assignments[i]) else _UNTOUCHED
            for i in range(len(configs))
        ]
    theta_names = featexp.features_of(theta)
    cases = []
    for meaning, vals in zip(configs.formulas, _literal_vals(configs)):
        if vals is not None and all(name in vals for name in theta_names):
            cases.append(
                _ANALYZED if featexp.eval_featexp(theta, vals) else _UNTOUCHED
            )
        elif featexp.entails(meaning, Not(theta)):
            cases.append(_UNTOUCHED)
        elif featexp.entails(meaning, theta):
            cases.append(_ANALYZED)
        else:
            cases.append(_MIXED)
    return cases


def analyze_expr_abstracted(expr, store, alpha=None, configs=None):
    """Per-component expression values over an abstracted store."""
    return tuple(eval_expr(expr, s) for s in store.stores)


def analyze_abstracted(stmt, store, alpha=None, configs=None):
    """The abstracted analysis of a statement on an abstract-indexed store.

    `store.configs` must already be the abstract configuration set (the
    meaning view produced by alpha_apply / abstract_configs).
    """
    return _abstracted(stmt, store)


def _abstracted(stmt, store):
    if isinstance(stmt, lang.Skip):
        return store
    if isinstance(stmt, lang.Assign):
        return store.with_stores(
            s.set(stmt.var, eval_expr(stmt.expr, s)) for s in store.stores
        )
    if isinstance(stmt, lang.Seq):
        return _abstracted(stmt.second, _abstracted(stmt.first, store))
    if isinstance(stmt, lang.If):
        return _abstracted(stmt.then, store).join(_abstracted(stmt.orelse, store))
    if isinstance(stmt, lang.Lub):
        return _abstracted(stmt.left, store).join(_abstracted(stmt.right, store))
    if isinstance(stmt, lang.While):
        return kleene_accumulate(lambda s: _abstracted(stmt.body, s), store)
    if isinstance(stmt, lang.IfDef):
        cases = _ifdef_cases(store.configs, stmt.cond)
        if all(c == _UNTOUCHED for c in cases):
            return store
        analyzed = _abstracted(stmt.body, store)
        out = []
        for i, case in enumerate(cases):
            if case == _ANALYZED:
                out.append(analyzed.stores[i])
            elif case == _UNTOUCHED:
                out.append(store.stores[i])
            else:
                out.append(store.stores[i].join(analyzed.stores[i]))
        return store.with_stores(out)
    raise TypeError(f"not a statement: {stmt!r}")


# ---------------------------------------------------------------------------
# Data-flow equations
#
# Each labeled statement gets an in and an out store.  The equations follow
# the transfer functions: skip copies, assignment updates per component,
# sequence chains, if fans out and joins, while has the back edge
#   in[body] = in[while] join out[body],  out[while] = in[body]
# and #if combines out[body] with in[#if] per component according to the
# three-way case split; in[body] receives in[#if] only on components where
# the condition is satisfiable, the rest stay bottom in the least solution.


@dataclass(frozen=True)
class EquationSystem:
    root: lang.Stmt
    statements: dict  # label -> Stmt
    configs: featexp.ConfigSet
    lattice: object


def build_dataflow(stmt, alpha=None, configs=None, lattice=None):
    """Equation system for a labeled statement over an abstract config set."""
    statements = lang.labels_of(stmt)
    if len(statements) != max(statements) + 1 or min(statements) != 0:
        raise SemanticError("statement labels must be the preorder 0..n-1")
    return EquationSystem(stmt, statements, configs, lattice)


def solve_dataflow(system, entry):
    """Least solution of the equation system with in[root] = entry.

    Returns a mapping label -> (in, out).  Iterates a FIFO worklist over the
    statement tree; termination follows from the finite lattice height.
    """
    lattice = entry.stores[0].lattice if entry.stores else system.lattice
    configs = entry.configs
    bottom = LiftedStore.bot(configs, lattice)
    ins = {label: bottom for label in system.statements}
    outs = {label: bottom for label in system.statements}
    ins[system.root.label] = entry

    parents = {}
    for label, stmt in system.statements.items():
        for kid in lang.children(stmt):
            parents[kid.label] = stmt

    ifdef_cases = {
        label: _ifdef_cases(configs, stmt.cond)
        for label, stmt in system.statements.items()
        if isinstance(stmt, lang.IfDef)
    }

    def compute_in(stmt):
        parent = parents.get(stmt.label)
        if parent is None:
            return entry
        if isinstance(parent, lang.Seq):
            if stmt is parent.first:
                return ins[parent.label]
            return outs[parent.first.label]
        if isinstance(parent, (lang.If, lang.Lub)):
            return ins[parent.label]
        if isinstance(parent, lang.While):
            return ins[parent.label].join(outs[stmt.label])
        if isinstance(parent, lang.IfDef):
            cases = ifdef_cases[parent.label]
            src = ins[parent.label]
            guarded = [
                src.stores[i] if case != _UNTOUCHED else Store.bot(lattice)
                for i, case in enumerate(cases)
            ]
            return src.with_stores(guarded)
        raise TypeError(f"unexpected parent: {parent!r}")

    def compute_out(stmt):
        if isinstance(stmt, lang.Skip):
            return ins[stmt.label]
        if isinstance(stmt, lang.Assign):
            src = ins[stmt.label]
            return src.with_stores(
                s.set(stmt.var, eval_expr(stmt.expr, s)) for s in src.stores
            )
        if isinstance(stmt, lang.Seq):
            return outs[stmt.second.label]
        if isinstance(stmt, (lang.If, lang.Lub)):
            kids = lang.children(stmt)
            return outs[kids[0].label].join(outs[kids[1].label])
        if isinstance(stmt, lang.While):
            return ins[stmt.body.label]
        if isinstance(stmt, lang.IfDef):
            cases = ifdef_cases[stmt.label]
            src = ins[stmt.label]
            body_out = outs[stmt.body.label]
            merged = []
            for i, case in enumerate(cases):
                if case == _ANALYZED:
                    merged.append(body_out.stores[i])
                elif case == _UNTOUCHED:
                    merged.append(src.stores[i])
                else:
                    merged.append(src.stores[i].join(body_out.stores[i]))
            return src.with_stores(merged)
        raise TypeError(f"not a statement: {stmt!r}")

    # label dependencies: recompute a statement when its in, a child's out,
    # a preceding sibling's out, or (for while bodies) its own out changes
    dependents = {label: set() for label in system.statements}
    for label, stmt in system.statements.items():
        for kid in lang.children(stmt):
            dependents[kid.label].add(label)
            dependents[label].add(kid.label)
        if isinstance(stmt, lang.Seq):
            dependents[stmt.first.label].add(stmt.second.label)
        if isinstance(stmt, lang.While):
            dependents[stmt.body.label].add(stmt.body.label)

    worklist = sorted(system.statements)
    queued = set(worklist)
    while worklist:
        label = worklist.pop(0)
        queued.discard(label)
        stmt = system.statements[label]
        new_in = compute_in(stmt)
        changed = new_in != ins[label]
        ins[label] = new_in
        new_out = compute_out(stmt)
        changed = changed or new_out != outs[label]
        outs[label] = new_out
        if changed:
            for dep in sorted(dependents[label]):
                if dep not in queued:
                    queued.add(dep)
                    worklist.append(dep)

    return {label: (ins[label], outs[label]) for label in system.statements}
