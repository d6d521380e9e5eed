"""``capless`` command-line interface.

    capless check|eval|trace|soundness|fmt [--json] [--fuel N] [--gen SEED COUNT]
                                           [--write] [--unchecked] [--trace] FILE...

Exit codes: 0 success, 1 type error or failed soundness flag, 2 parse error,
3 I/O error, 4 evaluation stuck, 5 fuel exhausted.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Tuple

from .checker import CheckError, Context, synth
from .diagnostics import Diagnostic, ParseError, ResolveError, use_color
from .evaluator import DEFAULT_FUEL, Config, Store, run
from .harness.generator import gen_programs
from .harness.soundness import SoundnessReport, check_config, check_soundness
from .surface import parse, pretty, print_captures, print_term, print_type, resolve

EXIT_OK, EXIT_TYPE, EXIT_PARSE, EXIT_IO, EXIT_STUCK, EXIT_FUEL = 0, 1, 2, 3, 4, 5

COMMANDS = ("check", "eval", "trace", "soundness", "fmt")


@dataclass
class CliConfig:
    command: str
    paths: List[Path] = field(default_factory=list)
    fuel: int = DEFAULT_FUEL
    json: bool = False
    trace: bool = False
    unchecked: bool = False
    write: bool = False
    gen: Optional[Tuple[int, int]] = None

    def __post_init__(self):
        if self.fuel <= 0:
            raise ValueError("fuel must be positive")
        if self.command not in COMMANDS:
            raise ValueError(f"unknown command {self.command!r}")


class _Out:
    def __init__(self, stdout, stderr):
        self.stdout, self.stderr = stdout, stderr
        self.color = use_color()

    def line(self, s=""):
        print(s, file=self.stdout)

    def err(self, s):
        print(s, file=self.stderr)

    def json(self, obj):
        print(json.dumps(obj, ensure_ascii=False), file=self.stdout)


# --------------------------------------------------------------------------
# loading


@dataclass
class _Loaded:
    path: Path
    source: str
    term: object
    origins: dict


class _Failure(Exception):
    def __init__(self, code, diagnostics):
        self.code = code
        self.diagnostics = diagnostics


def _load(path: Path) -> _Loaded:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise _Failure(EXIT_IO, [Diagnostic("io-error", f"cannot read {path}: {e.strerror or e}")])
    origins: dict = {}
    try:
        term = resolve(parse(text, str(path)), origins=origins)
    except ParseError as e:
        raise _Failure(EXIT_PARSE, e.diagnostics)
    except ResolveError as e:
        raise _Failure(EXIT_TYPE, e.diagnostics)
    return _Loaded(path, text, term, origins)


def _type_diagnostic(e: CheckError, loaded: _Loaded) -> Diagnostic:
    d = e.diagnostics[0]
    span = None
    if e.term is not None and id(e.term) in loaded.origins:
        span = loaded.origins[id(e.term)][1]
    return Diagnostic(d.code, d.message, span, source=loaded.source, filename=str(loaded.path))


def _report_failure(out: _Out, cfg: CliConfig, path, f: _Failure):
    if cfg.json:
        out.json({"file": str(path), "status": "error", "exit": f.code,
                  "diagnostics": [d.to_json() for d in f.diagnostics]})
    else:
        for d in f.diagnostics:
            out.err(d.render(out.color))


def _typed(loaded: _Loaded):
    try:
        return synth(Context(), loaded.term)
    except CheckError as e:
        raise _Failure(EXIT_TYPE, [_type_diagnostic(e, loaded)])


# --------------------------------------------------------------------------
# commands


def cmd_check(cfg: CliConfig, out: _Out) -> int:
    worst = EXIT_OK
    for path in cfg.paths:
        try:
            loaded = _load(path)
            r = _typed(loaded)
        except _Failure as f:
            _report_failure(out, cfg, path, f)
            worst = max(worst, f.code)
            continue
        if cfg.json:
            obj = {"file": str(path), "status": "ok", "useSet": print_captures(r.use_set),
                   "type": print_type(r.type), "rules": sorted(set(r.trace.rules()))}
            if cfg.trace:
                obj["derivation"] = r.trace.to_json()
            out.json(obj)
        else:
            prefix = f"{path}: " if len(cfg.paths) > 1 else ""
            out.line(f"{prefix}OK  use-set={print_captures(r.use_set)}  type={print_type(r.type)}")
    return worst


def _trace_record(s) -> dict:
    return {"index": s.index, "rule": s.rule, "lookups": [f"ℓ{l.id}" for l in s.lookups],
            "term": print_term(s.focus)}


def _trace_line(s) -> str:
    looks = ", ".join(f"ℓ{l.id}" for l in s.lookups)
    return f"#{s.index}  rule={s.rule}  lookups=[{looks}]  term={print_term(s.focus)}"


def cmd_eval(cfg: CliConfig, out: _Out) -> int:
    if len(cfg.paths) != 1:
        out.err(f"{cfg.command}: expected exactly one file")
        return EXIT_IO
    path = cfg.paths[0]
    try:
        loaded = _load(path)
        if not cfg.unchecked:
            _typed(loaded)
    except _Failure as f:
        _report_failure(out, cfg, path, f)
        return f.code
    res = run(Config(Store(), loaded.term), cfg.fuel)
    show_trace = cfg.trace or cfg.command == "trace"
    code = {"answer": EXIT_OK, "stuck": EXIT_STUCK, "fuel": EXIT_FUEL}[res.status]
    store = [f"ℓ{i} ↦ {print_term(v)}" for i, v in enumerate(res.store.values)]
    if cfg.json:
        obj = {"file": str(path), "status": res.status, "steps": res.steps,
               "answer": print_term(res.answer) if res.answer is not None else None,
               "store": store,
               "stuck": ({"reason": res.stuck.reason, "detail": res.stuck.detail}
                         if res.stuck else None)}
        if show_trace:
            obj["trace"] = [_trace_record(s) for s in res.trace]
        out.json(obj)
        return code
    if show_trace:
        for s in res.trace:
            out.line(_trace_line(s))
    if res.status == "answer":
        out.line(f"answer={print_term(res.answer)}")
    elif res.status == "stuck":
        out.line(f"stuck: {res.stuck.reason}: {res.stuck.detail}")
        out.line(f"term={print_term(res.config.term)}")
    else:
        out.line(f"fuel exhausted after {res.steps} steps")
    n = len(store)
    out.line(f"store: {n} binding{'' if n == 1 else 's'}")
    for entry in store:
        out.line(f"  {entry}")
    return code


_FLAGS = ("progress_ok", "preservation_ok", "termination_ok", "monitor_ok", "store_monotone_ok")


def _soundness_one(cfg: CliConfig, name: str, term, loaded: Optional[_Loaded]) -> Optional[SoundnessReport]:
    try:
        return check_soundness(term, cfg.fuel, name)
    except CheckError:
        if not cfg.unchecked:
            raise
    # --unchecked on an ill-typed program: step it anyway, every flag is suspect
    return check_config(Config(Store(), term), {}, None, None, cfg.fuel, name)


def cmd_soundness(cfg: CliConfig, out: _Out) -> int:
    jobs = []  # (name, term | _Failure, path | None, loaded)
    for path in cfg.paths:
        try:
            loaded = _load(path)
            jobs.append((str(path), loaded.term, path, loaded))
        except _Failure as f:
            jobs.append((str(path), f, path, None))
    if cfg.gen:
        seed, count = cfg.gen
        for i, t in enumerate(gen_programs(seed, count)):
            jobs.append((f"gen:{seed}:{i}", t, None, None))

    worst = EXIT_OK
    rows = []
    for name, term, path, loaded in jobs:
        if isinstance(term, _Failure):
            _report_failure(out, cfg, name, term)
            worst = max(worst, term.code)
            rows.append((name, None, "error"))
            continue
        try:
            rep = _soundness_one(cfg, name, term, loaded)
        except CheckError as e:
            diag = _type_diagnostic(e, loaded) if loaded else e.diagnostics[0]
            _report_failure(out, cfg, name, _Failure(EXIT_TYPE, [diag]))
            worst = max(worst, EXIT_TYPE)
            rows.append((name, None, "rejected"))
            continue
        if not rep.ok:
            worst = max(worst, EXIT_TYPE)
            dump = (path.with_name(path.name + ".counterexample.json") if path is not None
                    else Path(f"{name.replace(':', '-')}.counterexample.json"))
            payload = {"program": name, "source": print_term(term), "counterexample": rep.counterexample,
                       "flags": {f: getattr(rep, f) for f in _FLAGS}}
            try:
                dump.write_text(json.dumps(payload, ensure_ascii=False, indent=2) + "\n", encoding="utf-8")
            except OSError as e:
                out.err(f"cannot write counterexample {dump}: {e}")
                worst = max(worst, EXIT_IO)
        if cfg.json:
            obj = rep.to_json()
            obj["ok"] = rep.ok
            out.json(obj)
        rows.append((name, rep, "pass" if rep.ok else "FAIL"))

    if not cfg.json:
        _summary(out, rows)
    return worst


def _summary(out: _Out, rows):
    heads = ("program", "steps", "progress", "preserve", "terminate", "monitor", "store", "result")
    width = max([len(heads[0])] + [len(r[0]) for r in rows])
    out.line(f"{heads[0]:<{width}}  " + "  ".join(f"{h:>9}" for h in heads[1:]))

    def mark(b):
        return "ok" if b else "FAIL"
    max_steps = 0
    passed = 0
    for name, rep, result in rows:
        if rep is None:
            cells = ["-"] * 6 + [result]
        else:
            max_steps = max(max_steps, len(rep.steps))
            passed += rep.ok
            cells = [str(len(rep.steps))] + [mark(getattr(rep, f)) for f in _FLAGS] + [result]
        out.line(f"{name:<{width}}  " + "  ".join(f"{c:>9}" for c in cells))
    out.line(f"{len(rows)} program(s), {passed} passed, {len(rows) - passed} failed, max steps {max_steps}")


def cmd_fmt(cfg: CliConfig, out: _Out) -> int:
    worst = EXIT_OK
    for path in cfg.paths:
        try:
            loaded = _load(path)
        except _Failure as f:
            _report_failure(out, cfg, path, f)
            worst = max(worst, f.code)
            continue
        text = pretty(loaded.term)
        if cfg.write:
            if text != loaded.source:
                try:
                    path.write_text(text, encoding="utf-8")
                except OSError as e:
                    out.err(f"cannot write {path}: {e}")
                    worst = max(worst, EXIT_IO)
        elif cfg.json:
            out.json({"file": str(path), "formatted": text, "changed": text != loaded.source})
        else:
            out.stdout.write(text)
    return worst


# --------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="capless", description="Check, run and test capless programs.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("files", nargs="*", type=Path)
    p.add_argument("--json", action="store_true", help="machine-readable output (JSON lines)")
    p.add_argument("--fuel", type=int, default=DEFAULT_FUEL, help="maximum reduction steps")
    p.add_argument("--gen", nargs=2, type=int, metavar=("SEED", "COUNT"),
                   help="soundness: also check COUNT generated programs")
    p.add_argument("--write", action="store_true", help="fmt: rewrite files in place")
    p.add_argument("--unchecked", action="store_true", help="eval/soundness: skip type checking")
    p.add_argument("--trace", action="store_true",
                   help="eval: print each step; check --json: include derivations")
    return p


def parse_args(argv) -> CliConfig:
    p = build_parser()
    a = p.parse_intermixed_args(argv)
    if a.fuel <= 0:
        p.error("--fuel must be positive")
    if a.gen and a.command != "soundness":
        p.error("--gen only applies to soundness")
    if a.gen and a.gen[1] < 0:
        p.error("--gen COUNT must be non-negative")
    if not a.files and not (a.command == "soundness" and a.gen):
        p.error("no input files")
    return CliConfig(a.command, list(a.files), a.fuel, a.json, a.trace, a.unchecked, a.write,
                     tuple(a.gen) if a.gen else None)


def main(argv=None, stdout=None, stderr=None) -> int:
    try:
        cfg = parse_args(sys.argv[1:] if argv is None else argv)
    except SystemExit as e:
        return EXIT_PARSE if e.code else EXIT_OK
    out = _Out(stdout or sys.stdout, stderr or sys.stderr)
    handler = {"check": cmd_check, "eval": cmd_eval, "trace": cmd_eval,
               "soundness": cmd_soundness, "fmt": cmd_fmt}[cfg.command]
    return handler(cfg, out)


if __name__ == "__main__":
    sys.exit(main())
