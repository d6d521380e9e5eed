"""Abstract syntax of System Capless.

Variables are de Bruijn indices in three independent namespaces (term, type,
capture).  Each binder shifts only its own namespace.  Store locations are a
separate atom kind so that run-time names never collide with indices.

Binding structure:

* ``Lam(param, body)``      binds one term variable in ``body``
* ``TLam(bound, body)``     binds one type variable in ``body``
* ``CLam(bound, body)``     binds one capture variable in ``body``
* ``Let(bound, body)``      binds one term variable in ``body``
* ``LetEx(bound, body)``    binds one capture variable (outer) and one term
  variable (inner) in ``body``
* ``FunDep(param, result)`` binds a term variable in ``result``
* ``FunTyp(bound, result)`` binds a type variable in ``result``
* ``FunCap(bound, result)`` binds a capture variable in ``result``
* ``Exists(body)``          binds a capture variable in ``body``
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Union

__all__ = [
    "TERM", "TYPE", "CAPT", "NAMESPACES",
    "TermVar", "CaptVar", "Loc", "Capture", "Atom", "CaptureSet", "EMPTY",
    "Star", "STAR", "Bound",
    "Top", "TOP", "TVar", "FunDep", "FunTyp", "FunCap", "ShapeType",
    "Type", "Exists", "ExistType",
    "Var", "App", "TApp", "CApp", "Let", "LetEx",
    "Lam", "TLam", "CLam", "Pack", "Value", "Answer", "Term",
    "is_answer", "is_value", "pure", "cs", "Syntax",
]

TERM = "term"
TYPE = "type"
CAPT = "capture"
NAMESPACES = (TERM, TYPE, CAPT)


# --------------------------------------------------------------------------
# capture atoms


@dataclass(frozen=True, order=True)
class TermVar:
    index: int

    def __post_init__(self):
        if self.index < 0:
            raise ValueError(f"negative term index {self.index}")

    def __repr__(self):
        return f"x{self.index}"


@dataclass(frozen=True, order=True)
class CaptVar:
    index: int

    def __post_init__(self):
        if self.index < 0:
            raise ValueError(f"negative capture index {self.index}")

    def __repr__(self):
        return f"c{self.index}"


@dataclass(frozen=True, order=True)
class Loc:
    """A store location; the run-time image of a lifted let binding."""

    id: int

    def __post_init__(self):
        if self.id < 0:
            raise ValueError(f"negative location {self.id}")

    def __repr__(self):
        return f"ℓ{self.id}"


Capture = Union[TermVar, CaptVar, Loc]
# things that may stand in term position (x y, x[S], <C, x>)
Atom = Union[TermVar, Loc]


def _atom_key(a: Capture):
    return ({TermVar: 0, CaptVar: 1, Loc: 2}[type(a)], a.index if not isinstance(a, Loc) else a.id)


@dataclass(frozen=True)
class CaptureSet:
    atoms: frozenset

    def __init__(self, atoms: Iterable[Capture] = ()):
        atoms = frozenset(atoms)
        for a in atoms:
            if not isinstance(a, (TermVar, CaptVar, Loc)):
                raise TypeError(f"not a capture atom: {a!r}")
        object.__setattr__(self, "atoms", atoms)

    def __iter__(self):
        return iter(sorted(self.atoms, key=_atom_key))

    def __len__(self):
        return len(self.atoms)

    def __contains__(self, atom):
        return atom in self.atoms

    def __bool__(self):
        return bool(self.atoms)

    def __repr__(self):
        return "{" + ", ".join(repr(a) for a in self) + "}"

    def union(self, *others: CaptureSet) -> CaptureSet:
        out = set(self.atoms)
        for o in others:
            out |= o.atoms
        return CaptureSet(out)

    __or__ = union

    def minus(self, *atoms: Capture) -> CaptureSet:
        return CaptureSet(self.atoms - set(atoms))

    def minus_term_var(self, x: Union[int, TermVar]) -> CaptureSet:
        """Remove exactly the given term variable."""
        if isinstance(x, int):
            x = TermVar(x)
        return self.minus(x)

    def issubset(self, other: CaptureSet) -> bool:
        return self.atoms <= other.atoms

    __le__ = issubset

    def term_vars(self):
        return {a.index for a in self.atoms if isinstance(a, TermVar)}

    def capt_vars(self):
        return {a.index for a in self.atoms if isinstance(a, CaptVar)}

    def locations(self):
        return {a.id for a in self.atoms if isinstance(a, Loc)}


EMPTY = CaptureSet()


def cs(*atoms: Capture) -> CaptureSet:
    return CaptureSet(atoms)


# --------------------------------------------------------------------------
# bounds


@dataclass(frozen=True)
class Star:
    """The universal capture bound ``*``."""

    def __repr__(self):
        return "*"


STAR = Star()
Bound = Union[Star, CaptureSet]


# --------------------------------------------------------------------------
# types


@dataclass(frozen=True)
class Top:
    def __repr__(self):
        return "⊤"


TOP = Top()


@dataclass(frozen=True)
class TVar:
    index: int

    def __post_init__(self):
        if self.index < 0:
            raise ValueError(f"negative type index {self.index}")

    def __repr__(self):
        return f"X{self.index}"


@dataclass(frozen=True)
class FunDep:
    """``∀(x: param) result``."""

    param: Type
    result: ExistType

    def __post_init__(self):
        _expect_type(self.param, "FunDep.param")
        _expect_etype(self.result, "FunDep.result")

    def __repr__(self):
        return f"∀(x:{self.param!r}){self.result!r}"


@dataclass(frozen=True)
class FunTyp:
    """``∀[X <: bound] result``."""

    bound: ShapeType
    result: ExistType

    def __post_init__(self):
        _expect_shape(self.bound, "FunTyp.bound")
        _expect_etype(self.result, "FunTyp.result")

    def __repr__(self):
        return f"∀[X<:{self.bound!r}]{self.result!r}"


@dataclass(frozen=True)
class FunCap:
    """``∀[c <: bound] result``."""

    bound: Bound
    result: ExistType

    def __post_init__(self):
        if not isinstance(self.bound, (Star, CaptureSet)):
            raise TypeError(f"FunCap.bound must be a Bound, got {self.bound!r}")
        _expect_etype(self.result, "FunCap.result")

    def __repr__(self):
        return f"∀[c<:{self.bound!r}]{self.result!r}"


ShapeType = Union[Top, TVar, FunDep, FunTyp, FunCap]


@dataclass(frozen=True)
class Type:
    """A capturing type ``S^C``; a pure type is ``S^{}``."""

    shape: ShapeType
    captures: CaptureSet = EMPTY

    def __post_init__(self):
        _expect_shape(self.shape, "Type.shape")
        if not isinstance(self.captures, CaptureSet):
            raise TypeError(f"Type.captures must be a CaptureSet, got {self.captures!r}")

    def __repr__(self):
        if not self.captures:
            return repr(self.shape)
        return f"({self.shape!r})^{self.captures!r}"


@dataclass(frozen=True)
class Exists:
    """``∃c. body``; at most one level (the body is a plain Type)."""

    body: Type

    def __post_init__(self):
        if not isinstance(self.body, Type):
            raise TypeError(f"existential body must be a plain Type, got {self.body!r}")

    def __repr__(self):
        return f"∃c.{self.body!r}"


ExistType = Union[Exists, Type]


def pure(shape: ShapeType) -> Type:
    return Type(shape, EMPTY)


def _expect_shape(v, where):
    if not isinstance(v, (Top, TVar, FunDep, FunTyp, FunCap)):
        raise TypeError(f"{where} must be a shape type, got {v!r}")


def _expect_type(v, where):
    if not isinstance(v, Type):
        raise TypeError(f"{where} must be a Type, got {v!r}")


def _expect_etype(v, where):
    if not isinstance(v, (Type, Exists)):
        raise TypeError(f"{where} must be a Type or Exists, got {v!r}")


# --------------------------------------------------------------------------
# terms


def _expect_atom(v, where):
    if not isinstance(v, (TermVar, Loc)):
        raise TypeError(f"{where} must be a term variable or location, got {v!r}")


@dataclass(frozen=True)
class Var:
    """A variable or location in answer position."""

    x: Atom

    def __post_init__(self):
        _expect_atom(self.x, "Var.x")

    def __repr__(self):
        return repr(self.x)


@dataclass(frozen=True)
class Lam:
    param: Type
    body: Term

    def __post_init__(self):
        _expect_type(self.param, "Lam.param")
        _expect_term(self.body, "Lam.body")

    def __repr__(self):
        return f"λ(x:{self.param!r}){self.body!r}"


@dataclass(frozen=True)
class TLam:
    bound: ShapeType
    body: Term

    def __post_init__(self):
        _expect_shape(self.bound, "TLam.bound")
        _expect_term(self.body, "TLam.body")

    def __repr__(self):
        return f"λ[X<:{self.bound!r}]{self.body!r}"


@dataclass(frozen=True)
class CLam:
    bound: Bound
    body: Term

    def __post_init__(self):
        if not isinstance(self.bound, (Star, CaptureSet)):
            raise TypeError(f"CLam.bound must be a Bound, got {self.bound!r}")
        _expect_term(self.body, "CLam.body")

    def __repr__(self):
        return f"λ[c<:{self.bound!r}]{self.body!r}"


@dataclass(frozen=True)
class Pack:
    captures: CaptureSet
    x: Atom

    def __post_init__(self):
        if not isinstance(self.captures, CaptureSet):
            raise TypeError("Pack.captures must be a CaptureSet")
        _expect_atom(self.x, "Pack.x")

    def __repr__(self):
        return f"⟨{self.captures!r}, {self.x!r}⟩"


@dataclass(frozen=True)
class App:
    fn: Atom
    arg: Atom

    def __post_init__(self):
        _expect_atom(self.fn, "App.fn")
        _expect_atom(self.arg, "App.arg")

    def __repr__(self):
        return f"{self.fn!r} {self.arg!r}"


@dataclass(frozen=True)
class TApp:
    fn: Atom
    arg: ShapeType

    def __post_init__(self):
        _expect_atom(self.fn, "TApp.fn")
        _expect_shape(self.arg, "TApp.arg")

    def __repr__(self):
        return f"{self.fn!r}[{self.arg!r}]"


@dataclass(frozen=True)
class CApp:
    fn: Atom
    arg: CaptureSet

    def __post_init__(self):
        _expect_atom(self.fn, "CApp.fn")
        if not isinstance(self.arg, CaptureSet):
            raise TypeError("CApp.arg must be a CaptureSet")

    def __repr__(self):
        return f"{self.fn!r}[{self.arg!r}]"


@dataclass(frozen=True)
class Let:
    bound: Term
    body: Term

    def __post_init__(self):
        _expect_term(self.bound, "Let.bound")
        _expect_term(self.body, "Let.body")

    def __repr__(self):
        return f"let x = {self.bound!r} in {self.body!r}"


@dataclass(frozen=True)
class LetEx:
    bound: Term
    body: Term

    def __post_init__(self):
        _expect_term(self.bound, "LetEx.bound")
        _expect_term(self.body, "LetEx.body")

    def __repr__(self):
        return f"let ⟨c, x⟩ = {self.bound!r} in {self.body!r}"


Value = Union[Lam, TLam, CLam, Pack]
Answer = Union[Var, Lam, TLam, CLam, Pack]
Term = Union[Var, Lam, TLam, CLam, Pack, App, TApp, CApp, Let, LetEx]

_TERM_CLASSES = (Var, Lam, TLam, CLam, Pack, App, TApp, CApp, Let, LetEx)
_VALUE_CLASSES = (Lam, TLam, CLam, Pack)


def _expect_term(v, where):
    if not isinstance(v, _TERM_CLASSES):
        raise TypeError(f"{where} must be a term, got {v!r}")


def is_value(t) -> bool:
    return isinstance(t, _VALUE_CLASSES)


def is_answer(t) -> bool:
    return isinstance(t, Var) or isinstance(t, _VALUE_CLASSES)


Syntax = Union[Term, ShapeType, Type, Exists, CaptureSet, Star]
