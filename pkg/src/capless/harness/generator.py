"""Random program generation.

:func:`gen_well_typed` builds closed programs that the checker accepts.  It
works top-down: at each node it picks a rule whose premises look satisfiable
in the current context (an application needs a function in scope, an unpack
needs something of existential type, ...), builds a candidate, and keeps it
only if :func:`~capless.checker.synth` agrees.  A failed node is retried a few
times and then replaced by a closed value, so generation always succeeds.

:func:`gen_raw_term` and friends produce arbitrary (usually ill-typed) raw
syntax for the substitution laws and the answer-inertness property.
"""

from __future__ import annotations

import random
from typing import List, Optional

from ..ops import shift
from ..checker import CheckError, Context, TypingResult, sub_bound, subtype, synth
from ..syntax import (
    TERM, STAR, TOP, App, CApp, CaptureSet, CaptVar, CLam, Exists, FunCap, FunDep,
    FunTyp, Lam, Let, LetEx, Loc, Pack, TApp, TermVar, TLam, TVar, Type, Var, pure,
)

__all__ = [
    "IDENTITY", "gen_well_typed", "gen_programs", "gen_answer", "gen_raw_term",
    "gen_raw_type", "gen_raw_shape", "gen_raw_captures",
]

#: ``fun (x: Top) => x``, the fallback value.
IDENTITY = Lam(pure(TOP), Var(TermVar(0)))

RETRIES = 6


def _ok(ctx: Context, t) -> Optional[TypingResult]:
    try:
        return synth(ctx, t)
    except CheckError:
        return None


def _unfold(ctx: Context, shape):
    while isinstance(shape, TVar):
        shape = ctx.lookup_type(shape.index)
    return shape


class _Gen:
    def __init__(self, rng: random.Random):
        self.rng = rng

    # ---------------------------------------------------------------- pools

    def atoms(self, ctx: Context) -> List:
        return ([TermVar(i) for i in range(ctx.count("term"))]
                + [CaptVar(i) for i in range(ctx.count("capture"))])

    def captures(self, ctx: Context) -> CaptureSet:
        atoms = self.atoms(ctx)
        k = self.rng.choice([0, 0, 1, 1, 2])
        return CaptureSet(self.rng.sample(atoms, min(k, len(atoms))))

    def shape(self, ctx: Context):
        r = self.rng
        opts = [TOP, TOP]
        opts += [TVar(i) for i in range(ctx.count("type"))]
        opts += [ctx.lookup_term(i).shape for i in range(ctx.count("term"))]
        opts.append(FunDep(pure(TOP), pure(TOP)))
        opts.append(FunDep(pure(TOP), Type(TOP, CaptureSet([TermVar(0)]))))
        opts.append(FunTyp(TOP, pure(TVar(0))))
        return r.choice(opts)

    def type_(self, ctx: Context) -> Type:
        r = self.rng
        n = ctx.count("term")
        roll = r.random()
        if n and roll < 0.35:
            i = r.randrange(n)
            declared = ctx.lookup_term(i)
            # either the declared type or the precise singleton type of x
            return declared if r.random() < 0.5 else Type(declared.shape, CaptureSet([TermVar(i)]))
        if roll < 0.5:
            return Type(FunCap(STAR, Type(TOP, CaptureSet([CaptVar(0)]))), self.captures(ctx))
        return Type(self.shape(ctx), self.captures(ctx))

    def bound(self, ctx: Context):
        return STAR if self.rng.random() < 0.5 else self.captures(ctx)

    # ---------------------------------------------------------------- terms

    def term(self, ctx: Context, fuel: int):
        """A term accepted by ``synth(ctx, ·)``."""
        r = self.rng
        if fuel <= 0:
            return self.value(ctx, 0)
        builders = [
            (self.value, 3), (self.let, 4), (self.app, 3), (self.tapp, 1),
            (self.capp, 1), (self.letex, 2), (self.var, 1), (self._chain, 2),
        ]
        fns, weights = zip(*builders)
        for _ in range(RETRIES):
            build = r.choices(fns, weights)[0]
            t = build(ctx, fuel)
            if t is not None and _ok(ctx, t) is not None:
                return t
        return self.value(ctx, 0)

    def value(self, ctx: Context, fuel: int):
        r = self.rng
        kinds = [self.lam, self.lam, self.tlam, self.clam]
        if ctx.count("term"):
            kinds.append(self.pack)
        for _ in range(RETRIES):
            t = r.choice(kinds)(ctx, fuel)
            if t is not None and _ok(ctx, t) is not None:
                return t
        return IDENTITY

    def _body(self, ctx: Context, fuel: int):
        if fuel <= 0:
            # smallest bodies: a variable in scope or a closed value
            if ctx.count("term") and self.rng.random() < 0.7:
                return Var(TermVar(self.rng.randrange(min(2, ctx.count("term")))))
            return IDENTITY
        return self.term(ctx, fuel - 1)

    def _chain(self, ctx, fuel):
        return self.chain(ctx, fuel - 1, self.rng.randint(1, 3))

    def lam(self, ctx, fuel):
        param = self.type_(ctx)
        return Lam(param, self._body(ctx.ext_term(param), fuel))

    def tlam(self, ctx, fuel):
        b = self.shape(ctx)
        inner = ctx.ext_type(b)
        if self.rng.random() < 0.5:
            # fun [X <: S] => fun (x: X) => ...
            param = Type(TVar(0), self.captures(inner))
            return TLam(b, Lam(param, self._body(inner.ext_term(param), fuel)))
        return TLam(b, self._body(inner, fuel))

    def clam(self, ctx, fuel):
        b = self.bound(ctx)
        inner = ctx.ext_capt(b)
        if self.rng.random() < 0.6:
            # fun [c <: B] => fun (x: S^{c}) => ...
            param = Type(self.shape(inner), CaptureSet([CaptVar(0)]))
            return CLam(b, Lam(param, self._body(inner.ext_term(param), fuel)))
        return CLam(b, self._body(inner, fuel))

    def pack(self, ctx, fuel):
        n = ctx.count("term")
        if not n:
            return None
        i = self.rng.randrange(n)
        declared = ctx.lookup_term(i).captures
        pool = sorted(declared.atoms, key=repr)
        k = self.rng.randint(0, len(pool))
        c = CaptureSet(self.rng.sample(pool, k)) if self.rng.random() < 0.8 else self.captures(ctx)
        return Pack(c, TermVar(i))

    def var(self, ctx, fuel):
        n = ctx.count("term")
        return Var(TermVar(self.rng.randrange(n))) if n else None

    def _functions(self, ctx, kind):
        out = []
        for i in range(ctx.count("term")):
            s = _unfold(ctx, ctx.lookup_term(i).shape)
            if isinstance(s, kind):
                out.append((i, s))
        return out

    def app(self, ctx, fuel):
        fs = self._functions(ctx, FunDep)
        if not fs:
            return None
        i, f = self.rng.choice(fs)
        args = [j for j in range(ctx.count("term"))
                if subtype(ctx, Type(ctx.lookup_term(j).shape, CaptureSet([TermVar(j)])), f.param)]
        if not args:
            return None
        return App(TermVar(i), TermVar(self.rng.choice(args)))

    def tapp(self, ctx, fuel):
        fs = self._functions(ctx, FunTyp)
        if not fs:
            return None
        i, f = self.rng.choice(fs)
        cands = {f.bound, self.shape(ctx), self.shape(ctx)}
        ok = [s for s in cands if subtype(ctx, s, f.bound)]
        return TApp(TermVar(i), self.rng.choice(sorted(ok, key=repr))) if ok else None

    def capp(self, ctx, fuel):
        fs = self._functions(ctx, FunCap)
        if not fs:
            return None
        i, f = self.rng.choice(fs)
        cands = {self.captures(ctx) for _ in range(3)}
        if isinstance(f.bound, CaptureSet):
            cands.add(f.bound)
        ok = [c for c in cands if sub_bound(ctx, c, f.bound)]
        return CApp(TermVar(i), self.rng.choice(sorted(ok, key=repr))) if ok else None

    def let(self, ctx, fuel):
        bound = self.term(ctx, fuel - 1) if self.rng.random() < 0.3 else self.value(ctx, fuel - 1)
        r1 = _ok(ctx, bound)
        if r1 is None or isinstance(r1.type, Exists):
            return None
        return Let(bound, self._body(ctx.ext_term(r1.type), fuel))

    def letex(self, ctx, fuel):
        r = self.rng
        bound = None
        if ctx.count("term") and r.random() < 0.5:
            bound = self.pack(ctx, fuel)
        else:
            # apply something that returns a package
            for cand in (self.app(ctx, fuel), self.tapp(ctx, fuel), self.capp(ctx, fuel)):
                rc = _ok(ctx, cand) if cand is not None else None
                if rc is not None and isinstance(rc.type, Exists):
                    bound = cand
                    break
        if bound is None:
            return None
        r1 = _ok(ctx, bound)
        if r1 is None or not isinstance(r1.type, Exists):
            return None
        inner = ctx.ext_capt(STAR).ext_term(r1.type.body)
        return LetEx(bound, self._body(inner, fuel))


    def chain(self, ctx: Context, fuel: int, links: int):
        """``let x1 = t1 in ... let xn = tn in <C, xn>``, biased towards eliminations.

        Packing the last binder with its declared captures hides every local
        capability from the result type, which strict avoidance requires.
        """
        r = self.rng
        frames = []   # (bound, is_existential)
        cur = ctx
        for _ in range(links):
            bound = None
            for _ in range(RETRIES):
                build = r.choices([self.app, self.tapp, self.capp, self.value, self.term, self.var],
                                  [5, 2, 2, 2, 1, 1])[0]
                cand = build(cur, max(0, fuel - 1))
                res = _ok(cur, cand) if cand is not None else None
                if res is not None:
                    bound = cand
                    break
            if bound is None:
                bound, res = IDENTITY, _ok(cur, IDENTITY)
            if isinstance(res.type, Exists):
                frames.append((bound, True))
                cur = cur.ext_capt(STAR).ext_term(res.type.body)
            else:
                frames.append((bound, False))
                cur = cur.ext_term(res.type)
        finals = []
        if cur.count("term"):
            finals.append(Pack(cur.lookup_term(0).captures, TermVar(0)))
        finals += [self.value(cur, 0), IDENTITY]
        for final in finals:
            t = final
            for bound, ex in reversed(frames):
                t = LetEx(bound, t) if ex else Let(bound, t)
            if _ok(ctx, t) is not None:
                return t
        return None


def _packer(g: _Gen, ctx: Context):
    """``fun (x: S^C) => <C', x>`` with ``C' ⊆ C``: a function returning a package."""
    param = g.type_(ctx)
    pool = sorted(shift(TERM, 1, 0, param.captures).atoms, key=repr)
    c = CaptureSet(g.rng.sample(pool, g.rng.randint(0, len(pool))))
    return Lam(param, Pack(c, TermVar(0)))


def gen_well_typed(seed: int, size: int = 5):
    """A closed program accepted by the checker; deterministic in ``seed``."""
    if size <= 0:
        return IDENTITY
    rng = random.Random(seed)
    g = _Gen(rng)
    ctx = Context()
    # a small prelude of functions makes applications (and unpacking of
    # returned packages) likely further down
    prelude = []
    for _ in range(rng.randint(0, 2)):
        roll = rng.random()
        if roll < 0.3:
            v = _packer(g, ctx)
        else:
            v = g.value(ctx, max(1, size // 2))
        r = _ok(ctx, v)
        if r is None or isinstance(r.type, Exists):
            continue
        prelude.append(v)
        ctx = ctx.ext_term(r.type)
    body = None
    if rng.random() < 0.8:
        body = g.chain(ctx, size, rng.randint(1, size))
    if body is None:
        body = g.term(ctx, size)
    t = body
    for v in reversed(prelude):
        t = Let(v, t)
    if _ok(Context(), t) is None:
        # the prelude leaked into the result type; drop it
        t = body if _ok(Context(), body) is not None else g.term(Context(), size)
    assert _ok(Context(), t) is not None
    return t


def gen_programs(seed: int, count: int, size: int = 5):
    """``count`` programs from consecutive sub-seeds of ``seed``."""
    base = random.Random(seed)
    return [gen_well_typed(base.randrange(2**31), size) for _ in range(count)]


# --------------------------------------------------------------------------
# raw syntax


def gen_raw_captures(rng: random.Random, scope=(0, 0, 0), locs: int = 0, extra: int = 1) -> CaptureSet:
    """Random capture set; ``extra`` allows indices past the scope (free variables)."""
    nt, _, nc = scope
    pool = [TermVar(i) for i in range(nt + extra)] + [CaptVar(i) for i in range(nc + extra)]
    pool += [Loc(i) for i in range(locs)]
    k = rng.randint(0, min(3, len(pool)))
    return CaptureSet(rng.sample(pool, k))


def gen_raw_shape(rng, depth, scope=(0, 0, 0), locs=0, extra=1):
    nt, ny, nc = scope
    if depth <= 0 or rng.random() < 0.35:
        return TOP if ny + extra == 0 or rng.random() < 0.4 else TVar(rng.randrange(ny + extra))
    k = rng.randrange(3)
    if k == 0:
        return FunDep(gen_raw_type(rng, depth - 1, scope, locs, extra),
                      gen_raw_etype(rng, depth - 1, (nt + 1, ny, nc), locs, extra))
    if k == 1:
        return FunTyp(gen_raw_shape(rng, depth - 1, scope, locs, extra),
                      gen_raw_etype(rng, depth - 1, (nt, ny + 1, nc), locs, extra))
    b = STAR if rng.random() < 0.4 else gen_raw_captures(rng, scope, locs, extra)
    return FunCap(b, gen_raw_etype(rng, depth - 1, (nt, ny, nc + 1), locs, extra))


def gen_raw_type(rng, depth, scope=(0, 0, 0), locs=0, extra=1) -> Type:
    return Type(gen_raw_shape(rng, depth, scope, locs, extra), gen_raw_captures(rng, scope, locs, extra))


def gen_raw_etype(rng, depth, scope=(0, 0, 0), locs=0, extra=1):
    nt, ny, nc = scope
    if rng.random() < 0.2:
        return Exists(gen_raw_type(rng, depth, (nt, ny, nc + 1), locs, extra))
    return gen_raw_type(rng, depth, scope, locs, extra)


def _raw_atom(rng, scope, locs, extra):
    nt = scope[0]
    if locs and rng.random() < 0.3:
        return Loc(rng.randrange(locs))
    return TermVar(rng.randrange(nt + extra)) if nt + extra else Loc(0)


def gen_raw_value(rng, depth, scope=(0, 0, 0), locs=0, extra=1):
    nt, ny, nc = scope
    k = rng.randrange(4)
    if k == 0:
        return Lam(gen_raw_type(rng, depth - 1, scope, locs, extra),
                   gen_raw_term(rng, depth - 1, (nt + 1, ny, nc), locs, extra))
    if k == 1:
        return TLam(gen_raw_shape(rng, depth - 1, scope, locs, extra),
                    gen_raw_term(rng, depth - 1, (nt, ny + 1, nc), locs, extra))
    if k == 2:
        b = STAR if rng.random() < 0.4 else gen_raw_captures(rng, scope, locs, extra)
        return CLam(b, gen_raw_term(rng, depth - 1, (nt, ny, nc + 1), locs, extra))
    return Pack(gen_raw_captures(rng, scope, locs, extra), _raw_atom(rng, scope, locs, extra))


def gen_raw_term(rng: random.Random, depth: int, scope=(0, 0, 0), locs: int = 0, extra: int = 1):
    """Arbitrary raw syntax (not necessarily well typed).

    ``scope`` is the number of enclosing ``(term, type, capture)`` binders.
    """
    nt, ny, nc = scope
    if depth <= 0:
        return Var(_raw_atom(rng, scope, locs, extra))
    k = rng.randrange(8)
    if k == 0:
        return Var(_raw_atom(rng, scope, locs, extra))
    if k == 1:
        return gen_raw_value(rng, depth, scope, locs, extra)
    if k == 2:
        return App(_raw_atom(rng, scope, locs, extra), _raw_atom(rng, scope, locs, extra))
    if k == 3:
        return TApp(_raw_atom(rng, scope, locs, extra), gen_raw_shape(rng, depth - 1, scope, locs, extra))
    if k == 4:
        return CApp(_raw_atom(rng, scope, locs, extra), gen_raw_captures(rng, scope, locs, extra))
    if k in (5, 6):
        return Let(gen_raw_term(rng, depth - 1, scope, locs, extra),
                   gen_raw_term(rng, depth - 1, (nt + 1, ny, nc), locs, extra))
    return LetEx(gen_raw_term(rng, depth - 1, scope, locs, extra),
                 gen_raw_term(rng, depth - 1, (nt + 1, ny, nc + 1), locs, extra))


def gen_answer(rng: random.Random, depth: int = 3, locs: int = 3):
    """A random answer: a variable, a location, or a value (raw, possibly ill typed)."""
    if rng.random() < 0.3:
        return Var(_raw_atom(rng, (0, 0, 0), locs, 2))
    return gen_raw_value(rng, max(1, depth), (0, 0, 0), locs, 1)
