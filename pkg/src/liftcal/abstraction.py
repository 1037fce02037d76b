"""The calculus of variability abstractions over configuration-indexed stores.

An abstraction shrinks the configuration dimension of a lifted store:

    join            confound every configuration into one component
    proj(phi)       keep only components whose configuration satisfies phi
    a >> b          sequential composition, read left to right (b after a)
    a || b          parallel composition (direct product)
    join(phi)       sugar: proj(phi) >> join
    fignore(A)      merge configurations differing only on feature A
    fproj(A,...)    ignore a whole set of features

Application tracks two views of each abstract configuration: a *named* view
over the abstract feature space, where every join introduced a fresh feature
Z naming the confounded disjunction, and a *meaning* view over the original
feature space.  Named configurations are always total valuations of the
abstract space, so the parallel-composition overlap test is exact; meanings
are what the abstracted analysis tests #if conditions against.  Lifted stores
produced here are indexed by the meaning view.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import featexp
from .errors import ParseError, SemanticError, UndeclaredFeature
from .featexp import (
    FALSE,
    And,
    Atom,
    ConfigSet,
    FeatureSpace,
    Not,
    TRUE,
    conj_all,
    disj_all,
    eliminate,
    entails,
    equiv,
    eval_featexp,
)
from .lattice import CONST, LiftedStore, Store
from .lexer import Cursor, tokenize


# ---------------------------------------------------------------------------
# Abstraction AST


class Abstraction:
    __slots__ = ()


@dataclass(frozen=True)
class Join(Abstraction):
    pass


@dataclass(frozen=True)
class Proj(Abstraction):
    phi: featexp.FeatExp


@dataclass(frozen=True)
class Compose(Abstraction):
    outer: Abstraction
    inner: Abstraction


@dataclass(frozen=True)
class Product(Abstraction):
    left: Abstraction
    right: Abstraction


@dataclass(frozen=True)
class JoinPhi(Abstraction):
    phi: featexp.FeatExp


@dataclass(frozen=True)
class FIgnore(Abstraction):
    feature: str


@dataclass(frozen=True)
class FProj(Abstraction):
    features: tuple[str, ...]


@dataclass(frozen=True)
class GroupJoin(Abstraction):
    """Internal: confound an explicit subset of components under a fresh name.

    fignore factors into a product of these, one per group of configurations
    agreeing after elimination; keeping the selection positional (rather than
    by formula entailment) keeps degenerate meanings, e.g. equivalent or
    unsatisfiable components, in their own groups.
    """

    indices: tuple[int, ...]


def fresh_feature(used):
    """The next unused fresh feature name Z1, Z2, ..."""
    i = 1
    while f"Z{i}" in used:
        i += 1
    return f"Z{i}"


class NameAllocator:
    """Deterministic supply of fresh feature names for one application."""

    def __init__(self, used):
        self.used = set(used)

    def fresh(self):
        name = fresh_feature(self.used)
        self.used.add(name)
        return name


# ---------------------------------------------------------------------------
# Configuration bookkeeping


@dataclass(frozen=True)
class ConfigState:
    """Both views of an abstract configuration set, threaded through application."""

    original_space: FeatureSpace
    space: FeatureSpace
    named_vals: tuple[dict, ...]  # total valuations over `space`, one per component
    meanings: tuple[featexp.FeatExp, ...]  # formulas over original_space
    meaning_vals: tuple[dict, ...] | None  # kept while meanings are still valuations
    named_hint: featexp.FeatExp | None  # compact formula over `space` for disj(named)
    meaning_hint: featexp.FeatExp | None  # compact formula over original_space
    renames: tuple[tuple[str, featexp.FeatExp], ...]

    def named_formulas(self):
        return tuple(
            conj_all(
                Atom(f) if vals[f] else Not(Atom(f)) for f in self.space.features
            )
            for vals in self.named_vals
        )

    def __len__(self):
        return len(self.named_vals)


def initial_state(space, configs):
    """Bookkeeping for an unabstracted, concrete configuration set."""
    if configs.valuations is None:
        raise SemanticError("abstractions apply to concrete configuration sets")
    vals = tuple(v.as_dict() for v in configs.valuations)
    return ConfigState(
        original_space=space,
        space=space,
        named_vals=vals,
        meanings=configs.formulas,
        meaning_vals=vals,
        named_hint=configs.hint,
        meaning_hint=configs.hint,
        renames=(),
    )


def _select(state, phi):
    """Indices of components whose meaning satisfies phi."""
    if state.meaning_vals is not None:
        return [
            i for i, vals in enumerate(state.meaning_vals) if eval_featexp(phi, vals)
        ]
    return [i for i, m in enumerate(state.meanings) if entails(m, phi)]


def _join_meaning(state, indices):
    if len(indices) == len(state.meanings) and state.meaning_hint is not None:
        return state.meaning_hint
    return disj_all(state.meanings[i] for i in indices)


def _fold_join(stores, lattice):
    out = Store.bot(lattice)
    for s in stores:
        out = out.join(s)
    return out


def _groups_by_elimination(state, features):
    """Partition component indices by equivalence after eliminating `features`."""
    if state.meaning_vals is not None:
        keep = [f for f in state.original_space.features if f not in features]
        buckets = {}
        order = []
        for i, vals in enumerate(state.meaning_vals):
            key = tuple(vals[f] for f in keep)
            if key not in buckets:
                buckets[key] = []
                order.append(key)
            buckets[key].append(i)
        return [buckets[key] for key in order]
    keys = []
    for m in state.meanings:
        k = m
        for f in features:
            k = eliminate(k, f)
        keys.append(k)
    groups = []
    reps = []
    for i, k in enumerate(keys):
        for gi, rep in enumerate(reps):
            if equiv(rep, k):
                groups[gi].append(i)
                break
        else:
            reps.append(k)
            groups.append([i])
    return groups


def _extend_vals(vals, space):
    extended = {f: False for f in space.features}
    extended.update(vals)
    return extended


def _product_merge(left, right, base_renames):
    """Merge two sibling states; returns (state, right_index_map).

    Left components keep their positions; a right component equal (as a
    valuation of the union space, missing features negated) to a left one is
    shared and mapped onto it, otherwise it is appended.
    """
    space = FeatureSpace(
        left.space.features
        + tuple(f for f in right.space.features if f not in left.space)
    )
    left_ext = [_extend_vals(v, space) for v in left.named_vals]
    right_ext = [_extend_vals(v, space) for v in right.named_vals]
    named_vals = list(left_ext)
    meanings = list(left.meanings)
    right_map = []
    for j, vals in enumerate(right_ext):
        for i, existing in enumerate(left_ext):
            if existing == vals:
                right_map.append(i)
                break
        else:
            right_map.append(len(named_vals))
            named_vals.append(vals)
            meanings.append(right.meanings[j])

    def ext_hint(side):
        if side.named_hint is None:
            return None
        missing = [f for f in space.features if f not in side.space]
        return conj_all([side.named_hint] + [Not(Atom(f)) for f in missing])

    lh, rh = ext_hint(left), ext_hint(right)
    named_hint = featexp.Or(lh, rh) if lh is not None and rh is not None else None
    if left.meaning_vals is not None and right.meaning_vals is not None:
        meaning_vals = list(left.meaning_vals)
        for j, pos in enumerate(right_map):
            if pos >= len(left_ext):
                meaning_vals.append(right.meaning_vals[j])
        meaning_vals = tuple(meaning_vals)
        if left.meaning_hint is not None and right.meaning_hint is not None:
            meaning_hint = featexp.Or(left.meaning_hint, right.meaning_hint)
        else:
            meaning_hint = None
    else:
        meaning_vals = None
        meaning_hint = None
    merged = ConfigState(
        original_space=left.original_space,
        space=space,
        named_vals=tuple(named_vals),
        meanings=tuple(meanings),
        meaning_vals=meaning_vals,
        named_hint=named_hint,
        meaning_hint=meaning_hint,
        renames=left.renames + right.renames[len(base_renames):],
    )
    return merged, right_map


# ---------------------------------------------------------------------------
# Application (alpha direction)


def _apply(alpha, state, stores, alloc, lattice):
    """Apply alpha to a config state and, when given, the aligned stores."""
    if isinstance(alpha, Join):
        return _apply_group(list(range(len(state))), None, state, stores, alloc, lattice)
    if isinstance(alpha, JoinPhi):
        indices = _select(state, alpha.phi) if alpha.phi != TRUE else list(range(len(state)))
        return _apply_group(indices, alpha.phi, state, stores, alloc, lattice)
    if isinstance(alpha, GroupJoin):
        return _apply_group(list(alpha.indices), None, state, stores, alloc, lattice)
    if isinstance(alpha, Proj):
        indices = _select(state, alpha.phi)
        concrete = state.meaning_vals is not None
        new_state = ConfigState(
            original_space=state.original_space,
            space=state.space,
            named_vals=tuple(state.named_vals[i] for i in indices),
            meanings=tuple(state.meanings[i] for i in indices),
            meaning_vals=tuple(state.meaning_vals[i] for i in indices)
            if concrete
            else None,
            named_hint=_conj_hint(state.named_hint, alpha.phi, concrete),
            meaning_hint=_conj_hint(state.meaning_hint, alpha.phi, concrete),
            renames=state.renames,
        )
        new_stores = (
            None if stores is None else tuple(stores[i] for i in indices)
        )
        return new_state, new_stores
    if isinstance(alpha, Compose):
        mid_state, mid_stores = _apply(alpha.inner, state, stores, alloc, lattice)
        return _apply(alpha.outer, mid_state, mid_stores, alloc, lattice)
    if isinstance(alpha, Product):
        left_state, left_stores = _apply(alpha.left, state, stores, alloc, lattice)
        right_state, right_stores = _apply(alpha.right, state, stores, alloc, lattice)
        merged, right_map = _product_merge(left_state, right_state, state.renames)
        if stores is None:
            return merged, None
        out = list(left_stores) + [None] * (len(merged) - len(left_stores))
        for j, pos in enumerate(right_map):
            if out[pos] is None:
                out[pos] = right_stores[j]
            else:
                out[pos] = out[pos].join(right_stores[j])
        return merged, tuple(out)
    if isinstance(alpha, FIgnore):
        expansion = _fignore_fold(state, alpha.feature)
        if expansion is None:
            return _empty_state(state), (None if stores is None else ())
        return _apply(expansion, state, stores, alloc, lattice)
    if isinstance(alpha, FProj):
        return _apply(_fproj_chain(alpha), state, stores, alloc, lattice)
    raise TypeError(f"not an abstraction: {alpha!r}")


def _fproj_chain(alpha):
    """fproj(A1,...,Ak) is fignore(A1) o ... o fignore(Ak), Ak applied first."""
    out = FIgnore(alpha.features[-1])
    for name in reversed(alpha.features[:-1]):
        out = Compose(FIgnore(name), out)
    return out


def _fignore_fold(state, feature):
    """The product of exact group joins that realizes ignoring one feature."""
    if feature not in state.original_space:
        raise SemanticError(f"cannot ignore undeclared feature {feature}")
    groups = _groups_by_elimination(state, (feature,))
    if not groups:
        return None
    out = GroupJoin(tuple(groups[0]))
    for group in groups[1:]:
        out = Product(out, GroupJoin(tuple(group)))
    return out


def _empty_state(state):
    # ignoring features of nothing: no components, but the feature space
    # stays so that guards already rewritten over it remain evaluable
    return ConfigState(
        original_space=state.original_space,
        space=state.space,
        named_vals=(),
        meanings=(),
        meaning_vals=None,
        named_hint=FALSE,
        meaning_hint=FALSE,
        renames=state.renames,
    )


def _conj_hint(hint, phi, concrete):
    if hint is None or not concrete:
        return None
    if phi == TRUE:
        return hint
    return And(hint, phi)


def _apply_group(indices, phi, state, stores, alloc, lattice):
    """Confound the selected components into one fresh-named component.

    phi, when given, is the selection formula (used only to keep the recorded
    meaning compact on concrete states); the meaning is the disjunction of
    the selected components either way.
    """
    name = alloc.fresh()
    space = FeatureSpace((name,))
    if phi is not None and state.meaning_vals is not None and state.meaning_hint is not None:
        meaning = state.meaning_hint if phi == TRUE else And(state.meaning_hint, phi)
    else:
        meaning = _join_meaning(state, indices) if indices else FALSE
    new_state = ConfigState(
        original_space=state.original_space,
        space=space,
        named_vals=({name: True},),
        meanings=(meaning,),
        meaning_vals=None,
        named_hint=Atom(name),
        meaning_hint=meaning,
        renames=state.renames + ((name, meaning),),
    )
    if stores is None:
        return new_state, None
    joined = _fold_join((stores[i] for i in indices), lattice)
    return new_state, (joined,)


# ---------------------------------------------------------------------------
# Application (gamma direction)


def _gamma(alpha, state, d_stores, alloc, lattice):
    """Concretize stores indexed by alpha(state) back to state's indexing."""
    if isinstance(alpha, (Join, JoinPhi, GroupJoin)):
        if isinstance(alpha, Join):
            indices = set(range(len(state)))
        elif isinstance(alpha, JoinPhi):
            indices = (
                set(range(len(state)))
                if alpha.phi == TRUE
                else set(_select(state, alpha.phi))
            )
        else:
            indices = set(alpha.indices)
        (single,) = d_stores
        return tuple(
            single if i in indices else Store.top(lattice) for i in range(len(state))
        )
    if isinstance(alpha, Proj):
        indices = _select(state, alpha.phi)
        it = iter(d_stores)
        out = [Store.top(lattice)] * len(state)
        for i in indices:
            out[i] = next(it)
        return tuple(out)
    if isinstance(alpha, Compose):
        mid_state, _ = _apply(alpha.inner, state, None, alloc, lattice)
        mid = _gamma(alpha.outer, mid_state, d_stores, NameAllocator(alloc.used), lattice)
        return _gamma(alpha.inner, state, mid, alloc, lattice)
    if isinstance(alpha, Product):
        left_state, _ = _apply(alpha.left, state, None, alloc, lattice)
        right_state, _ = _apply(alpha.right, state, None, alloc, lattice)
        _, right_map = _product_merge(left_state, right_state, state.renames)
        d_left = tuple(d_stores[i] for i in range(len(left_state)))
        d_right = tuple(d_stores[pos] for pos in right_map)
        g_left = _gamma(alpha.left, state, d_left, NameAllocator(alloc.used), lattice)
        g_right = _gamma(alpha.right, state, d_right, NameAllocator(alloc.used), lattice)
        return tuple(a.meet(b) for a, b in zip(g_left, g_right))
    if isinstance(alpha, FIgnore):
        expansion = _fignore_fold(state, alpha.feature)
        if expansion is None:
            return ()
        return _gamma(expansion, state, d_stores, alloc, lattice)
    if isinstance(alpha, FProj):
        return _gamma(_fproj_chain(alpha), state, d_stores, alloc, lattice)
    raise TypeError(f"not an abstraction: {alpha!r}")


# ---------------------------------------------------------------------------
# Public operations


@dataclass(frozen=True)
class AbstractedConfigs:
    """Result of applying an abstraction to a feature space and config set."""

    space: FeatureSpace  # abstract feature space
    configs: ConfigSet  # named view, total valuations over `space`
    meanings: tuple[featexp.FeatExp, ...]  # per config, over the original space
    renames: dict  # fresh feature name -> meaning formula


def _allocator(space, configs):
    return NameAllocator(set(space.features))


def _finish_state(state):
    vals = tuple(
        featexp.Config(state.space, tuple(v[f] for f in state.space.features))
        for v in state.named_vals
    )
    named = ConfigSet(
        state.space, state.named_formulas(), vals, hint=state.named_hint
    )
    return AbstractedConfigs(
        space=state.space,
        configs=named,
        meanings=state.meanings,
        renames=dict(state.renames),
    )


def abstract_configs(alpha, space, configs):
    """The abstract feature space and configuration set induced by alpha."""
    state = initial_state(space, configs)
    out_state, _ = _apply(alpha, state, None, _allocator(space, configs), CONST)
    return _finish_state(out_state)


def _meaning_configset(space, state):
    valuations = None
    if state.meaning_vals is not None:
        valuations = tuple(
            featexp.Config(space, tuple(v[f] for f in space.features))
            for v in state.meaning_vals
        )
    return ConfigSet(space, state.meanings, valuations, hint=state.meaning_hint)


def meaning_configs(alpha, space, configs):
    """The meaning view of alpha's output, as a ConfigSet over the original space."""
    state = initial_state(space, configs)
    out_state, _ = _apply(alpha, state, None, _allocator(space, configs), CONST)
    return _meaning_configset(space, out_state)


def _infer_lattice(store, lattice):
    if lattice is not None:
        return lattice
    if store.stores:
        return store.stores[0].lattice
    return CONST


def alpha_apply(alpha, configs, store, lattice=None):
    """Abstract a lifted store; the result is indexed by the meaning view."""
    if not store.configs.same_as(configs):
        raise SemanticError("store is not indexed by the given configuration set")
    lattice = _infer_lattice(store, lattice)
    state = initial_state(configs.space, configs)
    out_state, out_stores = _apply(
        alpha, state, store.stores, _allocator(configs.space, configs), lattice
    )
    return LiftedStore(_meaning_configset(configs.space, out_state), out_stores)


def gamma_apply(alpha, configs, store, lattice=None):
    """Concretize an abstract lifted store back over the full configuration set."""
    lattice = _infer_lattice(store, lattice)
    state = initial_state(configs.space, configs)
    expected, _ = _apply(alpha, state, None, _allocator(configs.space, configs), lattice)
    if len(store) != len(expected):
        raise SemanticError(
            f"abstract store has {len(store)} components, expected {len(expected)}"
        )
    out = _gamma(alpha, state, store.stores, _allocator(configs.space, configs), lattice)
    return LiftedStore(configs, out)


def fignore_expand(feature, configs):
    """The product-of-joins expansion of ignoring one feature over a config set.

    Groups the configurations by equivalence after eliminating the feature and
    returns JoinPhi(g1) || JoinPhi(g2) || ... in first-member order.
    """
    state = initial_state(configs.space, configs)
    groups = _groups_by_elimination(state, (feature,))
    if not groups:
        raise SemanticError("cannot expand fignore over an empty configuration set")
    parts = [JoinPhi(_join_meaning_plain(state, g)) for g in groups]
    out = parts[0]
    for part in parts[1:]:
        out = Product(out, part)
    return out


def _join_meaning_plain(state, indices):
    # expansion formulas stay literal disjunctions so they are readable in specs
    return disj_all(state.meanings[i] for i in indices)


# ---------------------------------------------------------------------------
# The abstraction DSL
#
#   abs := abs "||" abs | abs ">>" abs | "join" | "join(" fe ")" | "proj(" fe ")"
#        | "fignore(" IDENT ")" | "fproj(" IDENT ("," IDENT)* ")" | "(" abs ")"
#
#   ">>" binds tighter than "||"; both left-associative.  "a >> b" applies a
#   first, i.e. it denotes the composition b o a.


def parse_abstraction_cursor(cur, space):
    def product_level():
        left = compose_level()
        while cur.at_sym("||"):
            cur.advance()
            left = Product(left, compose_level())
        return left

    def compose_level():
        left = atom_level()
        while cur.at_sym(">>"):
            cur.advance()
            # left-to-right reading: the right operand runs after (outside) the left
            left = Compose(atom_level(), left)
        return left

    def atom_level():
        if cur.at_sym("("):
            cur.advance()
            inner = product_level()
            cur.expect("sym", ")")
            return inner
        tok = cur.current
        if tok.kind != "ident":
            cur.error("expected an abstraction")
        word = cur.advance().text
        if word == "join":
            if cur.at_sym("("):
                cur.advance()
                phi = featexp.parse_featexp_cursor(cur, space)
                cur.expect("sym", ")")
                return JoinPhi(phi)
            return Join()
        if word == "proj":
            cur.expect("sym", "(")
            phi = featexp.parse_featexp_cursor(cur, space)
            cur.expect("sym", ")")
            return Proj(phi)
        if word == "fignore":
            cur.expect("sym", "(")
            name = _feature_name(cur, space)
            cur.expect("sym", ")")
            return FIgnore(name)
        if word == "fproj":
            cur.expect("sym", "(")
            names = [_feature_name(cur, space)]
            while cur.at_sym(","):
                cur.advance()
                names.append(_feature_name(cur, space))
            cur.expect("sym", ")")
            return FProj(tuple(names))
        cur.error(f"unknown abstraction {word!r}")

    return product_level()


def _feature_name(cur, space):
    tok = cur.expect("ident")
    if space is not None and tok.text not in space:
        raise UndeclaredFeature(tok.text, tok.line, tok.col)
    return tok.text


def parse_abstraction(text, space=None):
    cur = Cursor(tokenize(text))
    alpha = parse_abstraction_cursor(cur, space)
    if not cur.at("eof"):
        tok = cur.current
        raise ParseError(f"unexpected trailing input {tok.text!r}", tok.line, tok.col)
    return alpha


def render_abstraction(alpha):
    if isinstance(alpha, Join):
        return "join"
    if isinstance(alpha, JoinPhi):
        return f"join({featexp.render(alpha.phi)})"
    if isinstance(alpha, Proj):
        return f"proj({featexp.render(alpha.phi)})"
    if isinstance(alpha, FIgnore):
        return f"fignore({alpha.feature})"
    if isinstance(alpha, FProj):
        return "fproj(" + ", ".join(alpha.features) + ")"
    if isinstance(alpha, Compose):
        inner = render_abstraction(alpha.inner)
        outer = render_abstraction(alpha.outer)
        if isinstance(alpha.inner, Product):
            inner = f"({inner})"
        if isinstance(alpha.outer, Product):
            outer = f"({outer})"
        return f"{inner} >> {outer}"
    if isinstance(alpha, Product):
        return f"{render_abstraction(alpha.left)} || {render_abstraction(alpha.right)}"
    raise TypeError(f"not an abstraction: {alpha!r}")
