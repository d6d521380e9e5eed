"""Shifting, substitution and free-variable computation over de Bruijn syntax.

All operations are built on one traversal, :func:`_walk`, which visits every
variable occurrence together with the number of binders of each namespace
crossed so far.  Binders only ever shift their own namespace.

``subst_*`` replaces a variable *in place* (the classic TAPL formulation,
indices of other variables are left alone).  ``open_*`` eliminates the
innermost binder of a namespace: it substitutes index 0 and lowers the
remaining free indices by one.
"""

from __future__ import annotations

from typing import Callable, NamedTuple

from .syntax import (
    CAPT, TERM, TYPE,
    App, CApp, CLam, CaptureSet, CaptVar, Exists, FunCap, FunDep, FunTyp, Lam,
    Let, LetEx, Loc, Pack, Star, TApp, TLam, Top, TVar, TermVar, Type, Var,
)

__all__ = [
    "NegativeIndex", "Depth", "shift", "shift_all", "subst_term", "subst_type",
    "subst_capt", "open_term", "open_type", "open_capt", "free_atoms",
    "free_locations", "mentions", "map_locations", "map_capture_sets",
]


class NegativeIndex(ValueError):
    """A shift would move a free index below zero."""


class Depth(NamedTuple):
    term: int = 0
    type: int = 0
    capt: int = 0

    def bump(self, ns: str) -> Depth:
        if ns == TERM:
            return Depth(self.term + 1, self.type, self.capt)
        if ns == TYPE:
            return Depth(self.term, self.type + 1, self.capt)
        return Depth(self.term, self.type, self.capt + 1)

    def of(self, ns: str) -> int:
        return self.term if ns == TERM else self.type if ns == TYPE else self.capt


_D0 = Depth()

AtomFn = Callable  # (atom, Depth) -> atom
CSetFn = Callable  # (CaptureSet, Depth) -> CaptureSet
TVarFn = Callable  # (TVar, Depth) -> shape


def _walk(x, d: Depth, atom: AtomFn, cset: CSetFn, tvar: TVarFn):
    """Rebuild ``x`` bottom-up, routing variable occurrences through hooks.

    ``atom`` sees term-position references (application heads/arguments,
    answers, packed variables).  ``cset`` sees every capture set, including
    bounds.  ``tvar`` sees every type variable occurrence.
    """
    w = _walk
    match x:
        # ---- terms
        case Var(a):
            return Var(atom(a, d))
        case App(f, a):
            return App(atom(f, d), atom(a, d))
        case TApp(f, s):
            return TApp(atom(f, d), w(s, d, atom, cset, tvar))
        case CApp(f, c):
            return CApp(atom(f, d), cset(c, d))
        case Lam(t, body):
            return Lam(w(t, d, atom, cset, tvar), w(body, d.bump(TERM), atom, cset, tvar))
        case TLam(s, body):
            return TLam(w(s, d, atom, cset, tvar), w(body, d.bump(TYPE), atom, cset, tvar))
        case CLam(b, body):
            return CLam(w(b, d, atom, cset, tvar), w(body, d.bump(CAPT), atom, cset, tvar))
        case Pack(c, a):
            return Pack(cset(c, d), atom(a, d))
        case Let(t, u):
            return Let(w(t, d, atom, cset, tvar), w(u, d.bump(TERM), atom, cset, tvar))
        case LetEx(t, u):
            return LetEx(w(t, d, atom, cset, tvar),
                         w(u, d.bump(CAPT).bump(TERM), atom, cset, tvar))
        # ---- types
        case Type(s, c):
            return Type(w(s, d, atom, cset, tvar), cset(c, d))
        case Exists(t):
            return Exists(w(t, d.bump(CAPT), atom, cset, tvar))
        case Top():
            return x
        case TVar():
            return tvar(x, d)
        case FunDep(t, e):
            return FunDep(w(t, d, atom, cset, tvar), w(e, d.bump(TERM), atom, cset, tvar))
        case FunTyp(s, e):
            return FunTyp(w(s, d, atom, cset, tvar), w(e, d.bump(TYPE), atom, cset, tvar))
        case FunCap(b, e):
            return FunCap(w(b, d, atom, cset, tvar), w(e, d.bump(CAPT), atom, cset, tvar))
        # ---- capture sets and bounds
        case CaptureSet():
            return cset(x, d)
        case Star():
            return x
        case TermVar() | Loc():
            return atom(x, d)
    raise TypeError(f"not syntax: {x!r}")


def _same_atom(a, d):
    return a


def _same_tvar(x, d):
    return x


def _atomwise(atom_fn):
    """Lift an atom function to a capture-set function."""
    def cset(c, d):
        return CaptureSet(atom_fn(a, d) for a in c.atoms)
    return cset


# --------------------------------------------------------------------------
# shifting


def _shift_index(i, amount, floor):
    if i >= floor:
        j = i + amount
        if j < 0:
            raise NegativeIndex(f"shifting index {i} by {amount} drops below zero")
        return j
    return i


def shift(ns: str, amount: int, cutoff: int, subject):
    """Displace the free indices ``>= cutoff`` of namespace ``ns`` by ``amount``."""
    if amount == 0:
        return subject
    if ns == TERM:
        def atom(a, d):
            if isinstance(a, TermVar):
                return TermVar(_shift_index(a.index, amount, cutoff + d.term))
            return a
        return _walk(subject, _D0, atom, _atomwise(atom), _same_tvar)
    if ns == TYPE:
        def tvar(x, d):
            return TVar(_shift_index(x.index, amount, cutoff + d.type))
        return _walk(subject, _D0, _same_atom, _identity_cset, tvar)
    if ns == CAPT:
        def catom(a, d):
            if isinstance(a, CaptVar):
                return CaptVar(_shift_index(a.index, amount, cutoff + d.capt))
            return a
        return _walk(subject, _D0, _same_atom, _atomwise(catom), _same_tvar)
    raise ValueError(f"unknown namespace {ns!r}")


def _identity_cset(c, d):
    return c


def shift_all(subject, term: int = 0, type: int = 0, capt: int = 0):
    """Shift all three namespaces (cutoff 0); used to weaken into a longer context."""
    if term:
        subject = shift(TERM, term, 0, subject)
    if type:
        subject = shift(TYPE, type, 0, subject)
    if capt:
        subject = shift(CAPT, capt, 0, subject)
    return subject


# --------------------------------------------------------------------------
# substitution


def subst_term(target: int, replacement, subject):
    """Replace term variable ``target`` by a variable or location, everywhere.

    Occurrences inside capture sets are replaced too.
    """
    if not isinstance(replacement, (TermVar, Loc)):
        raise TypeError(f"term substitution needs a variable or location, got {replacement!r}")

    def atom(a, d):
        if isinstance(a, TermVar) and a.index == target + d.term:
            return shift(TERM, d.term, 0, replacement) if isinstance(replacement, TermVar) else replacement
        return a
    return _walk(subject, _D0, atom, _atomwise(atom), _same_tvar)


def subst_type(target: int, replacement, subject):
    """Replace type variable ``target`` by a shape type."""
    def tvar(x, d):
        if x.index == target + d.type:
            return shift_all(replacement, d.term, d.type, d.capt)
        return x
    return _walk(subject, _D0, _same_atom, _identity_cset, tvar)


def subst_capt(target: int, replacement: CaptureSet, subject):
    """Replace capture variable ``target`` by a capture set, flattening.

    ``{c, θ...}[c := C]`` is ``C ∪ {θ...}``.
    """
    def cset(c, d):
        hit = CaptVar(target + d.capt)
        if hit not in c.atoms:
            return c
        r = shift_all(replacement, d.term, 0, d.capt)
        return CaptureSet((c.atoms - {hit}) | r.atoms)
    return _walk(subject, _D0, _same_atom, cset, _same_tvar)


def open_term(body, replacement):
    """Eliminate the innermost term binder of ``body`` with a variable/location."""
    r = shift(TERM, 1, 0, replacement) if isinstance(replacement, TermVar) else replacement
    return shift(TERM, -1, 0, subst_term(0, r, body))


def open_type(body, replacement):
    return shift(TYPE, -1, 0, subst_type(0, shift(TYPE, 1, 0, replacement), body))


def open_capt(body, replacement: CaptureSet):
    return shift(CAPT, -1, 0, subst_capt(0, shift(CAPT, 1, 0, replacement), body))


# --------------------------------------------------------------------------
# free variables


def free_atoms(ns: str, subject) -> set:
    """Free indices of namespace ``ns`` (locations are reported separately)."""
    out: set = set()
    if ns == TERM:
        def atom(a, d):
            if isinstance(a, TermVar) and a.index >= d.term:
                out.add(a.index - d.term)
            return a
        _walk(subject, _D0, atom, _atomwise(atom), _same_tvar)
    elif ns == TYPE:
        def tvar(x, d):
            if x.index >= d.type:
                out.add(x.index - d.type)
            return x
        _walk(subject, _D0, _same_atom, _identity_cset, tvar)
    elif ns == CAPT:
        def catom(a, d):
            if isinstance(a, CaptVar) and a.index >= d.capt:
                out.add(a.index - d.capt)
            return a
        _walk(subject, _D0, _same_atom, _atomwise(catom), _same_tvar)
    else:
        raise ValueError(f"unknown namespace {ns!r}")
    return out


def free_locations(subject) -> set:
    out: set = set()

    def atom(a, d):
        if isinstance(a, Loc):
            out.add(a.id)
        return a
    _walk(subject, _D0, atom, _atomwise(atom), _same_tvar)
    return out


def mentions(ns: str, index: int, subject) -> bool:
    return index in free_atoms(ns, subject)


def map_locations(subject, fn):
    """Replace each location ``ℓ`` by the atom ``fn(ℓ)`` (used to rename heaps)."""
    def atom(a, d):
        if isinstance(a, Loc):
            r = fn(a)
            return shift(TERM, d.term, 0, r) if isinstance(r, TermVar) else r
        return a
    return _walk(subject, _D0, atom, _atomwise(atom), _same_tvar)


def map_capture_sets(subject, fn):
    """Rewrite every capture set (and capture bound) with ``fn(cs, depth)``."""
    return _walk(subject, _D0, _same_atom, fn, _same_tvar)
