"""Concrete syntax: lexer, parser, name resolution and pretty-printer.

Grammar (whitespace-insensitive, ``#`` starts a line comment)::

    program := ('def' ident '=' term ';')* term
    term    := answer | ident ident | ident '[' shape ']' | ident '[' captset ']'
             | 'let' ident '=' term 'in' term
             | 'let' '<' ident ',' ident '>' '=' term 'in' term
    answer  := ident | value
    value   := 'fun' '(' ident ':' type ')' '=>' term
             | 'fun' '[' UIDENT '<:' shape ']' '=>' term
             | 'fun' '[' ident '<:' bound ']' '=>' term
             | '<' captset ',' ident '>'
    shape   := 'Top' | UIDENT | 'forall' '(' ident ':' type ')' etype
             | 'forall' '[' UIDENT '<:' shape ']' etype
             | 'forall' '[' ident '<:' bound ']' etype | '(' shape ')'
    type    := shape ['^' captset]
    etype   := 'exists' ident '.' type | type
    captset := '{' [ident (',' ident)*] '}'
    bound   := '*' | captset

Upper-case identifiers are type variables; lower-case ones are term or
capture variables.  Store locations are written ``ℓ3`` (or ``@3``); they only
occur in run-time terms.  ``def f = t; rest`` is sugar for ``let f = t in rest``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

from .diagnostics import Diagnostic, ParseError, ResolveError, Span
from .syntax import (
    App, CApp, CLam, CaptureSet, CaptVar, Exists, FunCap, FunDep, FunTyp, Lam,
    Let, LetEx, Loc, Pack, STAR, Star, TApp, TLam, TOP, Top, TVar, TermVar,
    Type, Var,
)

__all__ = [
    "Token", "lex", "parse", "resolve", "parse_program", "parse_type",
    "print_term", "print_type", "print_shape", "print_captures", "print_bound",
    "pretty", "SurfaceProgram",
]

KEYWORDS = {"fun", "forall", "exists", "let", "in", "Top", "def"}

_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>\#[^\n]*)
  | (?P<loc>(?:ℓ|@)[0-9]+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<sym>=>|<:|[()\[\]{}<>,:^*.=;])
""", re.VERBOSE)


@dataclass(frozen=True)
class Token:
    kind: str  # 'ident' | 'uident' | 'kw' | 'sym' | 'loc' | 'eof'
    text: str
    span: Span


def _span_at(text: str, start: int, end: int) -> Span:
    line = text.count("\n", 0, start) + 1
    col = start - (text.rfind("\n", 0, start) + 1) + 1
    return Span(start, max(end, start + 1), line, col)


def lex(text: str, filename: str = "<input>") -> List[Token]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            span = _span_at(text, pos, pos + 1)
            raise ParseError(Diagnostic("lex-error", f"unexpected character {text[pos]!r}",
                                        span, source=text, filename=filename))
        kind = m.lastgroup
        s = m.group()
        if kind == "ident":
            if s in KEYWORDS:
                kind = "kw"
            elif s[0].isupper():
                kind = "uident"
        if kind not in ("ws", "comment"):
            tokens.append(Token(kind, s, _span_at(text, m.start(), m.end())))
        pos = m.end()
    tokens.append(Token("eof", "", _span_at(text, len(text), len(text))))
    return tokens


# --------------------------------------------------------------------------
# surface tree (names, spans)


@dataclass
class SNode:
    """A surface syntax node: ``kind`` names the production."""

    kind: str
    span: Span
    args: tuple = ()


@dataclass
class SurfaceProgram:
    decls: List[Tuple[Tuple[str, Span], SNode, Span]]
    main: SNode
    source: str = field(repr=False, default="")
    filename: str = "<input>"

    def desugared(self) -> SNode:
        node = self.main
        for name, bound, span in reversed(self.decls):
            node = SNode("let", span.cover(node.span), (name, bound, node))
        return node


class _Parser:
    def __init__(self, text: str, filename: str):
        self.text = text
        self.filename = filename
        self.toks = lex(text, filename)
        self.i = 0

    # -- helpers
    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k=1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def advance(self) -> Token:
        t = self.toks[self.i]
        self.i += 1
        return t

    def error(self, msg, tok=None):
        tok = tok or self.tok
        return ParseError(Diagnostic("parse-error", msg, tok.span,
                                     source=self.text, filename=self.filename))

    def at(self, kind, text=None) -> bool:
        t = self.tok
        return t.kind == kind and (text is None or t.text == text)

    def expect(self, kind, text=None, what=None) -> Token:
        if not self.at(kind, text):
            found = self.tok.text or "end of input"
            raise self.error(f"expected {what or text or kind}, found {found!r}")
        return self.advance()

    def sym(self, s):
        return self.expect("sym", s, f"'{s}'")

    def lower(self, what="identifier") -> Token:
        if self.tok.kind != "ident":
            found = self.tok.text or "end of input"
            raise self.error(f"expected {what}, found {found!r}")
        return self.advance()

    # -- program
    def program(self) -> SurfaceProgram:
        decls = []
        while self.at("kw", "def"):
            start = self.advance()
            name = self.lower("declaration name")
            self.sym("=")
            body = self.term()
            end = self.sym(";")
            decls.append(((name.text, name.span), body, start.span.cover(end.span)))
        if self.at("eof"):
            raise self.error("expected a term, found end of input")
        main = self.term()
        if not self.at("eof"):
            raise self.error(f"unexpected {self.tok.text!r} after term")
        return SurfaceProgram(decls, main, self.text, self.filename)

    # -- terms
    def term(self) -> SNode:
        t = self.tok
        if t.kind == "kw" and t.text == "let":
            return self.let()
        if t.kind in ("ident", "loc"):
            head = self.atom_ref()
            nxt = self.tok
            if nxt.kind in ("ident", "loc"):
                arg = self.atom_ref()
                return SNode("app", head.span.cover(arg.span), (head, arg))
            if nxt.kind == "sym" and nxt.text == "[":
                self.advance()
                if self.at("sym", "{"):
                    c = self.captset()
                    end = self.sym("]")
                    return SNode("capp", head.span.cover(end.span), (head, c))
                s = self.shape()
                end = self.sym("]")
                return SNode("tapp", head.span.cover(end.span), (head, s))
            return SNode("var", head.span, (head,))
        return self.value()

    def atom_ref(self) -> SNode:
        t = self.advance()
        if t.kind == "loc":
            return SNode("loc", t.span, (int(t.text.lstrip("ℓ@")),))
        return SNode("name", t.span, (t.text,))

    def let(self) -> SNode:
        start = self.advance()
        if self.at("sym", "<"):
            self.advance()
            c = self.lower("capture variable")
            self.sym(",")
            x = self.lower("variable")
            self.sym(">")
            if c.text == x.text:
                raise self.error(f"duplicate binder {x.text!r} in pattern", x)
            self.sym("=")
            bound = self.term()
            self.expect("kw", "in", "'in'")
            body = self.term()
            return SNode("letex", start.span.cover(body.span),
                         ((c.text, c.span), (x.text, x.span), bound, body))
        x = self.lower("variable")
        self.sym("=")
        bound = self.term()
        self.expect("kw", "in", "'in'")
        body = self.term()
        return SNode("let", start.span.cover(body.span), ((x.text, x.span), bound, body))

    def value(self) -> SNode:
        t = self.tok
        if t.kind == "kw" and t.text == "fun":
            start = self.advance()
            if self.at("sym", "("):
                self.advance()
                x = self.lower("parameter name")
                self.sym(":")
                ty = self.type_()
                self.sym(")")
                self.sym("=>")
                body = self.term()
                return SNode("lam", start.span.cover(body.span), ((x.text, x.span), ty, body))
            if self.at("sym", "["):
                self.advance()
                if self.at("uident"):
                    x = self.advance()
                    self.sym("<:")
                    s = self.shape()
                    self.sym("]")
                    self.sym("=>")
                    body = self.term()
                    return SNode("tlam", start.span.cover(body.span), ((x.text, x.span), s, body))
                c = self.lower("type or capture parameter")
                self.sym("<:")
                b = self.bound()
                self.sym("]")
                self.sym("=>")
                body = self.term()
                return SNode("clam", start.span.cover(body.span), ((c.text, c.span), b, body))
            raise self.error("expected '(' or '[' after 'fun'")
        if t.kind == "sym" and t.text == "<":
            start = self.advance()
            c = self.captset()
            self.sym(",")
            x = self.atom_ref_token()
            end = self.sym(">")
            return SNode("pack", start.span.cover(end.span), (c, x))
        found = t.text or "end of input"
        raise self.error(f"expected a term, found {found!r}")

    def atom_ref_token(self) -> SNode:
        if self.tok.kind not in ("ident", "loc"):
            raise self.error(f"expected a variable, found {self.tok.text!r}")
        return self.atom_ref()

    # -- types
    def shape(self) -> SNode:
        t = self.tok
        if t.kind == "kw" and t.text == "Top":
            self.advance()
            return SNode("top", t.span)
        if t.kind == "uident":
            self.advance()
            return SNode("tvar", t.span, (t.text,))
        if t.kind == "sym" and t.text == "(":
            self.advance()
            s = self.shape()
            self.sym(")")
            return s
        if t.kind == "kw" and t.text == "forall":
            start = self.advance()
            if self.at("sym", "("):
                self.advance()
                x = self.lower("parameter name")
                self.sym(":")
                ty = self.type_()
                self.sym(")")
                e = self.etype()
                return SNode("fundep", start.span.cover(e.span), ((x.text, x.span), ty, e))
            if self.at("sym", "["):
                self.advance()
                if self.at("uident"):
                    x = self.advance()
                    self.sym("<:")
                    s = self.shape()
                    self.sym("]")
                    e = self.etype()
                    return SNode("funtyp", start.span.cover(e.span), ((x.text, x.span), s, e))
                c = self.lower("type or capture parameter")
                self.sym("<:")
                b = self.bound()
                self.sym("]")
                e = self.etype()
                return SNode("funcap", start.span.cover(e.span), ((c.text, c.span), b, e))
            raise self.error("expected '(' or '[' after 'forall'")
        if t.kind == "ident":
            raise self.error(f"{t.text!r} is lower-case; type variables start with an upper-case letter")
        found = t.text or "end of input"
        raise self.error(f"expected a shape type, found {found!r}")

    def type_(self) -> SNode:
        s = self.shape()
        if self.at("sym", "^"):
            self.advance()
            c = self.captset()
            return SNode("type", s.span.cover(c.span), (s, c))
        return SNode("type", s.span, (s, None))

    def etype(self) -> SNode:
        if self.at("kw", "exists"):
            start = self.advance()
            c = self.lower("capture variable")
            self.sym(".")
            t = self.type_()
            return SNode("exists", start.span.cover(t.span), ((c.text, c.span), t))
        return self.type_()

    def captset(self) -> SNode:
        start = self.sym("{")
        elems = []
        if not self.at("sym", "}"):
            while True:
                t = self.tok
                if t.kind == "uident":
                    raise ResolveError(Diagnostic(
                        "kind-mismatch", f"type variable {t.text!r} cannot appear in a capture set",
                        t.span, source=self.text, filename=self.filename))
                elems.append(self.atom_ref_token())
                if self.at("sym", ","):
                    self.advance()
                    continue
                break
        end = self.sym("}")
        return SNode("captset", start.span.cover(end.span), tuple(elems))

    def bound(self) -> SNode:
        if self.at("sym", "*"):
            t = self.advance()
            return SNode("star", t.span)
        return self.captset()


def parse(text: str, filename: str = "<input>") -> SurfaceProgram:
    """Parse a program; raises :class:`ParseError` with diagnostics."""
    return _Parser(text, filename).program()


# --------------------------------------------------------------------------
# resolution to de Bruijn


class _Scope:
    """Binders in scope, innermost last: entries are ``(namespace, name)``."""

    def __init__(self, entries=()):
        self.entries = tuple(entries)

    def push(self, ns, name) -> _Scope:
        return _Scope(self.entries + ((ns, name),))

    def find(self, name):
        """Return ``(namespace, de Bruijn index)`` of the innermost binder named ``name``."""
        counts = {"term": 0, "type": 0, "capture": 0}
        for ns, n in reversed(self.entries):
            if n == name:
                return ns, counts[ns]
            counts[ns] += 1
        return None


class _Resolver:
    def __init__(self, source: str, filename: str, locations: bool):
        self.source = source
        self.filename = filename
        self.locations = locations
        self.origins: dict = {}

    def err(self, code, msg, span):
        return ResolveError(Diagnostic(code, msg, span, source=self.source, filename=self.filename))

    def note(self, core, node):
        self.origins[id(core)] = (core, node.span)
        return core

    def term_atom(self, node: SNode, scope: _Scope):
        if node.kind == "loc":
            if not self.locations:
                raise self.err("location-in-source", "store locations cannot appear in source programs",
                               node.span)
            return Loc(node.args[0])
        name = node.args[0]
        found = scope.find(name)
        if found is None:
            raise self.err("unbound-variable", f"unbound variable {name!r}", node.span)
        ns, idx = found
        if ns != "term":
            raise self.err("kind-mismatch", f"{name!r} is a {ns} variable, not a term variable", node.span)
        return TermVar(idx)

    def captset(self, node: SNode, scope: _Scope) -> CaptureSet:
        atoms = []
        for el in node.args:
            if el.kind == "loc":
                atoms.append(self.term_atom(el, scope))
                continue
            name = el.args[0]
            found = scope.find(name)
            if found is None:
                raise self.err("unbound-variable", f"unbound variable {name!r}", el.span)
            ns, idx = found
            if ns == "term":
                atoms.append(TermVar(idx))
            elif ns == "capture":
                atoms.append(CaptVar(idx))
            else:
                raise self.err("kind-mismatch", f"type variable {name!r} cannot appear in a capture set",
                               el.span)
        return CaptureSet(atoms)

    def bound(self, node: SNode, scope):
        if node.kind == "star":
            return STAR
        return self.captset(node, scope)

    def shape(self, node: SNode, scope: _Scope):
        k = node.kind
        if k == "top":
            return TOP
        if k == "tvar":
            name = node.args[0]
            found = scope.find(name)
            if found is None:
                raise self.err("unbound-variable", f"unbound type variable {name!r}", node.span)
            ns, idx = found
            if ns != "type":
                raise self.err("kind-mismatch", f"{name!r} is not a type variable", node.span)
            return TVar(idx)
        (name, _), ann, res = node.args
        if k == "fundep":
            return FunDep(self.type_(ann, scope), self.etype(res, scope.push("term", name)))
        if k == "funtyp":
            return FunTyp(self.shape(ann, scope), self.etype(res, scope.push("type", name)))
        if k == "funcap":
            return FunCap(self.bound(ann, scope), self.etype(res, scope.push("capture", name)))
        raise AssertionError(k)

    def type_(self, node: SNode, scope):
        s, c = node.args
        return Type(self.shape(s, scope), self.captset(c, scope) if c is not None else CaptureSet())

    def etype(self, node: SNode, scope):
        if node.kind == "exists":
            (name, _), t = node.args
            return Exists(self.type_(t, scope.push("capture", name)))
        return self.type_(node, scope)

    def term(self, node: SNode, scope: _Scope):
        k = node.kind
        a = node.args
        if k == "var":
            core = Var(self.term_atom(a[0], scope))
        elif k == "app":
            core = App(self.term_atom(a[0], scope), self.term_atom(a[1], scope))
        elif k == "tapp":
            core = TApp(self.term_atom(a[0], scope), self.shape(a[1], scope))
        elif k == "capp":
            core = CApp(self.term_atom(a[0], scope), self.captset(a[1], scope))
        elif k == "let":
            (name, _), bound, body = a
            core = Let(self.term(bound, scope), self.term(body, scope.push("term", name)))
        elif k == "letex":
            (c, _), (x, _), bound, body = a
            core = LetEx(self.term(bound, scope),
                         self.term(body, scope.push("capture", c).push("term", x)))
        elif k == "lam":
            (name, _), ty, body = a
            core = Lam(self.type_(ty, scope), self.term(body, scope.push("term", name)))
        elif k == "tlam":
            (name, _), s, body = a
            core = TLam(self.shape(s, scope), self.term(body, scope.push("type", name)))
        elif k == "clam":
            (name, _), b, body = a
            core = CLam(self.bound(b, scope), self.term(body, scope.push("capture", name)))
        elif k == "pack":
            c, x = a
            core = Pack(self.captset(c, scope), self.term_atom(x, scope))
        else:
            raise AssertionError(k)
        return self.note(core, node)


def resolve(sp: SurfaceProgram, scope=(), locations: bool = False, origins: Optional[dict] = None):
    """Resolve names to de Bruijn indices.

    ``scope`` lists outer binders as ``(namespace, name)`` pairs, innermost
    last.  If ``origins`` is given it is filled with ``id(core node) ->
    (node, span)`` so later errors can point back into the source.
    """
    r = _Resolver(sp.source, sp.filename, locations)
    core = r.term(sp.desugared(), _Scope(scope))
    if origins is not None:
        origins.update(r.origins)
    return core


def parse_program(text: str, filename: str = "<input>", locations: bool = False,
                  origins: Optional[dict] = None):
    """``resolve(parse(text))`` in one go."""
    return resolve(parse(text, filename), locations=locations, origins=origins)


def parse_type(text: str, scope=(), locations: bool = True):
    """Parse and resolve a standalone (existential) type."""
    p = _Parser(text, "<type>")
    node = p.etype()
    if not p.at("eof"):
        raise p.error(f"unexpected {p.tok.text!r} after type")
    return _Resolver(text, "<type>", locations).etype(node, _Scope(scope))


# --------------------------------------------------------------------------
# printing


class _Names:
    """Deterministic binder naming: x0, x1, ... / X0, ... / c0, ..."""

    PREFIX = {"term": "x", "type": "X", "capture": "c"}

    def __init__(self, term=(), type=(), capture=()):
        self.env = {"term": list(term), "type": list(type), "capture": list(capture)}

    def fresh(self, ns) -> Tuple[str, _Names]:
        taken = set(self.env["term"]) | set(self.env["type"]) | set(self.env["capture"])
        k = len(self.env[ns])
        while f"{self.PREFIX[ns]}{k}" in taken:
            k += 1
        name = f"{self.PREFIX[ns]}{k}"
        out = _Names()
        out.env = {n: list(v) for n, v in self.env.items()}
        out.env[ns].append(name)
        return name, out

    def lookup(self, ns, idx) -> str:
        env = self.env[ns]
        if idx < len(env):
            return env[len(env) - 1 - idx]
        return f"{self.PREFIX[ns]}_free{idx - len(env)}"


def _atom(a, names: _Names) -> str:
    if isinstance(a, Loc):
        return f"ℓ{a.id}"
    if isinstance(a, TermVar):
        return names.lookup("term", a.index)
    if isinstance(a, CaptVar):
        return names.lookup("capture", a.index)
    raise TypeError(a)


def _cs(c: CaptureSet, names) -> str:
    return "{" + ", ".join(_atom(a, names) for a in c) + "}"


def _bound(b, names) -> str:
    return "*" if isinstance(b, Star) else _cs(b, names)


def _shape(s, names) -> str:
    if isinstance(s, Top):
        return "Top"
    if isinstance(s, TVar):
        return names.lookup("type", s.index)
    if isinstance(s, FunDep):
        x, inner = names.fresh("term")
        return f"forall ({x}: {_type(s.param, names)}) {_etype(s.result, inner)}"
    if isinstance(s, FunTyp):
        x, inner = names.fresh("type")
        return f"forall [{x} <: {_shape(s.bound, names)}] {_etype(s.result, inner)}"
    if isinstance(s, FunCap):
        x, inner = names.fresh("capture")
        return f"forall [{x} <: {_bound(s.bound, names)}] {_etype(s.result, inner)}"
    raise TypeError(s)


def _type(t: Type, names) -> str:
    s = _shape(t.shape, names)
    if not t.captures:
        return s
    if isinstance(t.shape, (FunDep, FunTyp, FunCap)):
        s = f"({s})"
    return f"{s}^{_cs(t.captures, names)}"


def _etype(e, names) -> str:
    if isinstance(e, Exists):
        c, inner = names.fresh("capture")
        return f"exists {c}. {_type(e.body, inner)}"
    return _type(e, names)


def _term(t, names) -> str:
    if isinstance(t, Var):
        return _atom(t.x, names)
    if isinstance(t, App):
        return f"{_atom(t.fn, names)} {_atom(t.arg, names)}"
    if isinstance(t, TApp):
        return f"{_atom(t.fn, names)}[{_shape(t.arg, names)}]"
    if isinstance(t, CApp):
        return f"{_atom(t.fn, names)}[{_cs(t.arg, names)}]"
    if isinstance(t, Lam):
        x, inner = names.fresh("term")
        return f"fun ({x}: {_type(t.param, names)}) => {_term(t.body, inner)}"
    if isinstance(t, TLam):
        x, inner = names.fresh("type")
        return f"fun [{x} <: {_shape(t.bound, names)}] => {_term(t.body, inner)}"
    if isinstance(t, CLam):
        x, inner = names.fresh("capture")
        return f"fun [{x} <: {_bound(t.bound, names)}] => {_term(t.body, inner)}"
    if isinstance(t, Pack):
        return f"<{_cs(t.captures, names)}, {_atom(t.x, names)}>"
    if isinstance(t, Let):
        x, inner = names.fresh("term")
        return f"let {x} = {_term(t.bound, names)} in {_term(t.body, inner)}"
    if isinstance(t, LetEx):
        c, mid = names.fresh("capture")
        x, inner = mid.fresh("term")
        return f"let <{c}, {x}> = {_term(t.bound, names)} in {_term(t.body, inner)}"
    raise TypeError(t)


def _names(hints) -> _Names:
    if hints is None:
        return _Names()
    if isinstance(hints, _Names):
        return hints
    return _Names(hints.get("term", ()), hints.get("type", ()), hints.get("capture", ()))


def print_term(t, names=None) -> str:
    """Print a core term; ``names`` optionally maps namespaces to outer names."""
    return _term(t, _names(names))


def print_type(e, names=None) -> str:
    return _etype(e, _names(names))


def print_shape(s, names=None) -> str:
    return _shape(s, _names(names))


def print_captures(c, names=None) -> str:
    return _cs(c, _names(names))


def print_bound(b, names=None) -> str:
    return _bound(b, _names(names))


def _layout(t, names, indent) -> str:
    pad = "  " * indent
    if isinstance(t, Let):
        x, inner = names.fresh("term")
        return f"{pad}let {x} = {_term(t.bound, names)} in\n{_layout(t.body, inner, indent)}"
    if isinstance(t, LetEx):
        c, mid = names.fresh("capture")
        x, inner = mid.fresh("term")
        return f"{pad}let <{c}, {x}> = {_term(t.bound, names)} in\n{_layout(t.body, inner, indent)}"
    return pad + _term(t, names)


def pretty(t, names=None) -> str:
    """Canonical multi-line layout used by ``capless fmt`` (one let per line)."""
    return _layout(t, _names(names), 0) + "\n"
