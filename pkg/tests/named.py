"""A named-variable reference implementation of shifting and substitution.

De Bruijn syntax is converted to a tuple tree where every binder gets a
globally fresh name, free variables get names that encode their index, and
substitution becomes plain replacement (no capture is possible because no
two binders share a name).  Converting back yields the expected de Bruijn
result.  Nothing here is shared with ``capless.ops``.
"""

from __future__ import annotations

import itertools

from capless.syntax import (
    App, CApp, CaptureSet, CaptVar, CLam, Exists, FunCap, FunDep, FunTyp, Lam, Let,
    LetEx, Loc, Pack, Star, TApp, TermVar, TLam, Top, TVar, Type, Var,
)

_fresh = itertools.count()


def _new(prefix):
    return f"{prefix}#{next(_fresh)}"


def _free(ns, i):
    return ("free", ns, i)


def _lookup(env, ns, i):
    names = env[ns]
    if i < len(names):
        return names[-1 - i]
    return _free(ns, i - len(names))


def _push(env, ns, name):
    e = dict(env)
    e[ns] = env[ns] + (name,)
    return e


EMPTY_ENV = {"t": (), "y": (), "c": ()}


def to_named(x, env=EMPTY_ENV):
    n = to_named
    if isinstance(x, TermVar):
        return ("t", _lookup(env, "t", x.index))
    if isinstance(x, CaptVar):
        return ("c", _lookup(env, "c", x.index))
    if isinstance(x, Loc):
        return ("l", x.id)
    if isinstance(x, CaptureSet):
        return ("cs", frozenset(n(a, env) for a in x.atoms))
    if isinstance(x, Star):
        return ("star",)
    if isinstance(x, Top):
        return ("top",)
    if isinstance(x, TVar):
        return ("tv", _lookup(env, "y", x.index))
    if isinstance(x, FunDep):
        v = _new("x")
        return ("fundep", v, n(x.param, env), n(x.result, _push(env, "t", v)))
    if isinstance(x, FunTyp):
        v = _new("X")
        return ("funtyp", v, n(x.bound, env), n(x.result, _push(env, "y", v)))
    if isinstance(x, FunCap):
        v = _new("c")
        return ("funcap", v, n(x.bound, env), n(x.result, _push(env, "c", v)))
    if isinstance(x, Type):
        return ("type", n(x.shape, env), n(x.captures, env))
    if isinstance(x, Exists):
        v = _new("c")
        return ("exists", v, n(x.body, _push(env, "c", v)))
    if isinstance(x, Var):
        return ("var", n(x.x, env))
    if isinstance(x, App):
        return ("app", n(x.fn, env), n(x.arg, env))
    if isinstance(x, TApp):
        return ("tapp", n(x.fn, env), n(x.arg, env))
    if isinstance(x, CApp):
        return ("capp", n(x.fn, env), n(x.arg, env))
    if isinstance(x, Lam):
        v = _new("x")
        return ("lam", v, n(x.param, env), n(x.body, _push(env, "t", v)))
    if isinstance(x, TLam):
        v = _new("X")
        return ("tlam", v, n(x.bound, env), n(x.body, _push(env, "y", v)))
    if isinstance(x, CLam):
        v = _new("c")
        return ("clam", v, n(x.bound, env), n(x.body, _push(env, "c", v)))
    if isinstance(x, Pack):
        return ("pack", n(x.captures, env), n(x.x, env))
    if isinstance(x, Let):
        v = _new("x")
        return ("let", v, n(x.bound, env), n(x.body, _push(env, "t", v)))
    if isinstance(x, LetEx):
        c, v = _new("c"), _new("x")
        return ("letex", c, v, n(x.bound, env), n(x.body, _push(_push(env, "c", c), "t", v)))
    raise TypeError(x)


def _index(env, ns, name):
    if isinstance(name, tuple) and name[0] == "free":
        assert name[1] == ns
        return len(env[ns]) + name[2]
    names = env[ns]
    return len(names) - 1 - names.index(name) if names.count(name) == 1 else \
        len(names) - 1 - max(i for i, m in enumerate(names) if m == name)


def from_named(n, env=EMPTY_ENV):
    f = from_named
    tag = n[0]
    if tag == "t":
        return TermVar(_index(env, "t", n[1]))
    if tag == "c":
        return CaptVar(_index(env, "c", n[1]))
    if tag == "l":
        return Loc(n[1])
    if tag == "cs":
        return CaptureSet(f(a, env) for a in n[1])
    if tag == "star":
        return Star()
    if tag == "top":
        return Top()
    if tag == "tv":
        return TVar(_index(env, "y", n[1]))
    if tag == "fundep":
        return FunDep(f(n[2], env), f(n[3], _push(env, "t", n[1])))
    if tag == "funtyp":
        return FunTyp(f(n[2], env), f(n[3], _push(env, "y", n[1])))
    if tag == "funcap":
        return FunCap(f(n[2], env), f(n[3], _push(env, "c", n[1])))
    if tag == "type":
        return Type(f(n[1], env), f(n[2], env))
    if tag == "exists":
        return Exists(f(n[2], _push(env, "c", n[1])))
    if tag == "var":
        return Var(f(n[1], env))
    if tag == "app":
        return App(f(n[1], env), f(n[2], env))
    if tag == "tapp":
        return TApp(f(n[1], env), f(n[2], env))
    if tag == "capp":
        return CApp(f(n[1], env), f(n[2], env))
    if tag == "lam":
        return Lam(f(n[2], env), f(n[3], _push(env, "t", n[1])))
    if tag == "tlam":
        return TLam(f(n[2], env), f(n[3], _push(env, "y", n[1])))
    if tag == "clam":
        return CLam(f(n[2], env), f(n[3], _push(env, "c", n[1])))
    if tag == "pack":
        return Pack(f(n[1], env), f(n[2], env))
    if tag == "let":
        return Let(f(n[2], env), f(n[3], _push(env, "t", n[1])))
    if tag == "letex":
        return LetEx(f(n[3], env), f(n[4], _push(_push(env, "c", n[1]), "t", n[2])))
    raise TypeError(n)


def _map(n, fn):
    """Bottom-up rewrite of the named tree; ``fn`` may replace any node."""
    if isinstance(n, tuple):
        if n and n[0] == "free":
            return n
        n = tuple(_map(c, fn) for c in n)
        return fn(n)
    if isinstance(n, frozenset):
        return frozenset(_map(c, fn) for c in n)
    return n


def _ns_key(ns):
    return {"term": "t", "type": "y", "capture": "c"}[ns]


def named_shift(ns, amount, cutoff, subject):
    """Displace free indices ``>= cutoff`` of ``ns`` by renaming free names."""
    key = _ns_key(ns)
    tree = to_named(subject)

    def rename(n):
        if isinstance(n, tuple) and n and n[0] == "free":
            if n[1] == key and n[2] >= cutoff:
                return ("free", key, n[2] + amount)
            return n
        if isinstance(n, tuple):
            return tuple(rename(c) for c in n)
        if isinstance(n, frozenset):
            return frozenset(rename(c) for c in n)
        return n
    return from_named(rename(tree))


def _atom_named(a):
    if isinstance(a, TermVar):
        return ("t", _free("t", a.index))
    return ("l", a.id)


def named_subst_term(target, replacement, subject):
    hit = ("t", _free("t", target))
    rep = _atom_named(replacement)

    def fn(node):
        return rep if node == hit else node
    return from_named(_map(to_named(subject), fn))


def named_subst_type(target, replacement, subject):
    hit = ("tv", _free("y", target))
    rep = to_named(replacement)

    def fn(node):
        return rep if node == hit else node
    return from_named(_map(to_named(subject), fn))


def named_subst_capt(target, replacement, subject):
    hit = ("c", _free("c", target))
    rep = to_named(replacement)[1]

    def fn(node):
        if node[0] == "cs" and hit in node[1]:
            return ("cs", (node[1] - {hit}) | rep)
        return node
    return from_named(_map(to_named(subject), fn))
