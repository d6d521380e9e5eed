"""Brute-force declarative oracles for subcapturing and subtyping.

These search for derivations using the rules exactly as stated, including an
explicit transitivity rule whose middle judgement ranges over a finite
universe.  They are exponential by design and only meant for small,
enumerated instances; the algorithmic checker is validated against them.
"""

from __future__ import annotations

import itertools
from functools import lru_cache
from typing import Dict, List, Tuple

from ..checker import Context
from ..syntax import (
    STAR, TOP, CaptureSet, CaptVar, Exists, FunCap, FunDep, FunTyp, Loc, Star,
    Top, TVar, TermVar, Type,
)

__all__ = [
    "BudgetExceeded", "oracle_subcapture", "oracle_subtype", "structural_depth",
    "capture_atoms", "subsets", "type_universe", "MAX_ATOMS", "MAX_DEPTH",
]

MAX_ATOMS = 4
MAX_DEPTH = 8


class BudgetExceeded(Exception):
    """The instance is outside the envelope the oracle is meant for."""


def capture_atoms(ctx: Context) -> List:
    """All capture atoms bound in ``ctx``."""
    out = [TermVar(i) for i in range(ctx.count("term"))]
    out += [CaptVar(i) for i in range(ctx.count("capture"))]
    out += [Loc(i) for i in sorted(ctx.locs)]
    return out


def subsets(atoms) -> List[CaptureSet]:
    atoms = list(atoms)
    return [CaptureSet(c) for r in range(len(atoms) + 1) for c in itertools.combinations(atoms, r)]


# --------------------------------------------------------------------------
# subcapturing


class _SubcaptureSearch:
    def __init__(self, ctx: Context, universe_atoms):
        self.ctx = ctx
        self.universe = [frozenset(c.atoms) for c in subsets(universe_atoms)]
        self.bounds: Dict = {}
        for a in capture_atoms(ctx):
            b = ctx.atom_bound(a)
            if b is not None:
                self.bounds[a] = frozenset(b.atoms)
        self.derivable = lru_cache(maxsize=None)(self._derivable)

    def _derivable(self, a: frozenset, b: frozenset, depth: int) -> bool:
        if depth <= 0:
            return False
        # sc-elem
        if a <= b:
            return True
        if len(a) == 1:
            (theta,) = a
            # sc-var / sc-bound: the conclusion's right side is the bound itself
            if self.bounds.get(theta) == b:
                return True
        d = depth - 1
        if d == 0:
            return False
        # sc-set: a = p ∪ q, both strictly smaller
        items = sorted(a, key=repr)
        for r in range(1, len(items)):
            for p in itertools.combinations(items, r):
                p = frozenset(p)
                rest = a - p
                # q ranges over every superset of a \ p inside a, excluding a itself
                for extra in _powerset(p):
                    q = rest | extra
                    if q == a:
                        continue
                    if self.derivable(p, b, d) and self.derivable(q, b, d):
                        return True
        # sc-trans through any middle set of the universe
        for m in self.universe:
            if m == a or m == b:
                continue
            if self.derivable(a, m, d) and self.derivable(m, b, d):
                return True
        return False


def _powerset(s):
    items = sorted(s, key=repr)
    for r in range(len(items) + 1):
        for c in itertools.combinations(items, r):
            yield frozenset(c)


_SEARCHES: Dict = {}


def _search_for(ctx: Context, atoms) -> _SubcaptureSearch:
    key = (ctx, frozenset(atoms))
    s = _SEARCHES.get(key)
    if s is None:
        if len(_SEARCHES) > 20_000:
            _SEARCHES.clear()
        s = _SEARCHES[key] = _SubcaptureSearch(ctx, atoms)
    return s


def oracle_subcapture(ctx: Context, c1: CaptureSet, c2: CaptureSet, depth: int = MAX_DEPTH) -> bool:
    """Is there a derivation of ``Γ ⊢ c1 <: c2`` of height at most ``depth``?"""
    atoms = set(capture_atoms(ctx)) | set(c1.atoms) | set(c2.atoms)
    for a in list(atoms):
        b = ctx.atom_bound(a)
        if b is not None:
            atoms |= set(b.atoms)
    if len(atoms) > MAX_ATOMS or depth > MAX_DEPTH:
        raise BudgetExceeded(f"{len(atoms)} atoms, depth {depth}")
    return _search_for(ctx, atoms).derivable(frozenset(c1.atoms), frozenset(c2.atoms), depth)


def _oracle_sub_bound(ctx, b1, b2, depth) -> bool:
    if depth <= 0:
        return False
    if isinstance(b2, Star):
        return True
    if isinstance(b1, Star):
        return False
    return oracle_subcapture(ctx, b1, b2, depth)


# --------------------------------------------------------------------------
# subtyping


def structural_depth(x) -> int:
    """⊤ and type variables have depth 1; each constructor adds one."""
    if isinstance(x, Exists):
        return 1 + structural_depth(x.body)
    if isinstance(x, Type):
        return structural_depth(x.shape)
    if isinstance(x, (Top, TVar)):
        return 1
    if isinstance(x, FunDep):
        return 1 + max(structural_depth(x.param), structural_depth(x.result))
    if isinstance(x, FunTyp):
        return 1 + max(structural_depth(x.bound), structural_depth(x.result))
    if isinstance(x, FunCap):
        return 1 + structural_depth(x.result)
    raise TypeError(x)


def _bounds(ctx: Context) -> List:
    return [STAR] + subsets(capture_atoms(ctx))


@lru_cache(maxsize=None)
def _shapes(ctx: Context, depth: int) -> Tuple:
    if depth <= 0:
        return ()
    out = [TOP] + [TVar(i) for i in range(ctx.count("type"))]
    if depth >= 2:
        for t in _types(ctx, depth - 1):
            for e in _etypes(ctx.ext_term(t), depth - 1):
                out.append(FunDep(t, e))
        for s in _shapes(ctx, depth - 1):
            for e in _etypes(ctx.ext_type(s), depth - 1):
                out.append(FunTyp(s, e))
        for b in _bounds(ctx):
            for e in _etypes(ctx.ext_capt(b), depth - 1):
                out.append(FunCap(b, e))
    return tuple(out)


@lru_cache(maxsize=None)
def _types(ctx: Context, depth: int) -> Tuple:
    caps = subsets(capture_atoms(ctx))
    return tuple(Type(s, c) for s in _shapes(ctx, depth) for c in caps)


@lru_cache(maxsize=None)
def _etypes(ctx: Context, depth: int) -> Tuple:
    out = list(_types(ctx, depth))
    if depth >= 2:
        out += [Exists(t) for t in _types(ctx.ext_capt(STAR), depth - 1)]
    return tuple(out)


def type_universe(ctx: Context, depth: int):
    """Every shape, type and existential type of structural depth ≤ ``depth``
    whose free variables are bound in ``ctx``."""
    return _shapes(ctx, depth), _etypes(ctx, depth)


class _Saturation:
    """Pairs derivable with height ≤ k, computed level by level.

    Premises of the structural rules live in extended contexts; those are
    handled by child saturations over the smaller universe of components.
    """

    def __init__(self, ctx: Context, depth: int):
        self.ctx = ctx
        self.depth = depth
        shapes, etypes = type_universe(ctx, depth)
        self.objects = list(shapes) + list(etypes)
        self.levels: List[Dict] = [{}]  # level 0: nothing derivable

    def level(self, k: int) -> Dict:
        if k < 0:
            return {}
        while len(self.levels) <= k:
            self._next()
        return self.levels[k]

    def holds(self, a, b, k) -> bool:
        return b in self.level(k).get(a, ())

    def _next(self):
        k = len(self.levels) - 1          # premises may use height ≤ k
        prev = self.levels[k]
        ctx = self.ctx
        new: Dict = {a: set(bs) for a, bs in prev.items()}

        def add(a, b):
            new.setdefault(a, set()).add(b)

        tv_bounds = {i: ctx.lookup_type(i) for i in range(ctx.count("type"))}
        for a in self.objects:
            add(a, a)                                     # refl
            if not isinstance(a, (Type, Exists)):
                add(a, TOP)                               # top
                if isinstance(a, TVar):
                    add(a, tv_bounds[a.index])            # tvar
        if k >= 1:
            objs = self.objects
            for a in objs:
                for b in objs:
                    if b in new.get(a, ()):
                        continue
                    if self._structural(a, b, prev, k):
                        add(a, b)
            # trans
            for a, mids in prev.items():
                acc = new[a]
                for m in mids:
                    acc |= prev.get(m, set())
        self.levels.append(new)

    def _child(self, ctx, depth):
        return _saturation(ctx, depth)

    def _structural(self, a, b, prev, k) -> bool:
        ctx = self.ctx
        if isinstance(a, Type) and isinstance(b, Type):
            # capt
            return (b.shape in prev.get(a.shape, ())
                    and oracle_subcapture(ctx, a.captures, b.captures, k))
        if isinstance(a, Exists) and isinstance(b, Exists):
            inner = ctx.ext_capt(STAR)
            return self._child(inner, self.depth - 1).holds(a.body, b.body, k)
        if isinstance(a, FunDep) and isinstance(b, FunDep):
            return (a.param in prev.get(b.param, ())
                    and self._child(ctx.ext_term(b.param), self.depth - 1).holds(a.result, b.result, k))
        if isinstance(a, FunTyp) and isinstance(b, FunTyp):
            return (a.bound in prev.get(b.bound, ())
                    and self._child(ctx.ext_type(b.bound), self.depth - 1).holds(a.result, b.result, k))
        if isinstance(a, FunCap) and isinstance(b, FunCap):
            return (_oracle_sub_bound(ctx, b.bound, a.bound, k)
                    and self._child(ctx.ext_capt(b.bound), self.depth - 1).holds(a.result, b.result, k))
        return False


_SATURATIONS: Dict = {}


def _saturation(ctx: Context, depth: int) -> _Saturation:
    key = (ctx, depth)
    s = _SATURATIONS.get(key)
    if s is None:
        s = _SATURATIONS[key] = _Saturation(ctx, depth)
    return s


def oracle_subtype(ctx: Context, a, b, depth: int = MAX_DEPTH) -> bool:
    """Is ``Γ ⊢ a <: b`` derivable with height ≤ ``depth``, using (trans)
    through the universe of types no deeper than ``a`` and ``b``?"""
    d = max(structural_depth(a), structural_depth(b))
    if d > 3 or depth > MAX_DEPTH:
        raise BudgetExceeded(f"structural depth {d}, derivation depth {depth}")
    sat = _saturation(ctx, d)
    shapes, etypes = type_universe(ctx, d)
    if a not in shapes and a not in etypes or b not in shapes and b not in etypes:
        raise BudgetExceeded("types outside the enumerated universe")
    return sat.holds(a, b, depth)


def clear_caches():
    _SEARCHES.clear()
    _SATURATIONS.clear()
    _shapes.cache_clear()
    _types.cache_clear()
    _etypes.cache_clear()
