"""The ``capless`` command line: exit codes, text output and JSON schemas."""

import io
import json
import shutil

import pytest

from capless.cli import CliConfig, main

from conftest import CORPUS, DATA


def cli(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(list(argv), stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def jsonl(text):
    return [json.loads(line) for line in text.splitlines() if line.strip()]


@pytest.fixture
def in_root(monkeypatch):
    monkeypatch.chdir(CORPUS.parent)


def test_check_identity(in_root):
    code, out, _ = cli("check", "corpus/01_identity.capless")
    assert code == 0
    assert out.strip() == "OK  use-set={}  type=forall (x0: Top) Top^{x0}"


def test_check_unbound_variable_shows_caret():
    code, _, err = cli("check", str(DATA / "unbound.capless"))
    assert code == 1
    assert "unbound-variable" in err
    assert "^" in err and "2 | fun (x: Top) => y" in err


def test_check_empty_file_is_parse_error():
    code, _, err = cli("check", str(DATA / "empty.capless"))
    assert code == 2
    assert "parse-error" in err


def test_missing_file_is_io_error(tmp_path):
    code, _, _ = cli("check", str(tmp_path / "nope.capless"))
    assert code == 3


def test_check_multiple_files_prefixes_paths(in_root):
    code, out, _ = cli("check", "corpus/01_identity.capless", "corpus/05_poly_identity.capless")
    assert code == 0
    lines = out.splitlines()
    assert lines[0].startswith("corpus/01_identity.capless: OK")
    assert lines[1].startswith("corpus/05_poly_identity.capless: OK")


def test_worst_exit_code_wins(in_root):
    code, _, _ = cli("check", "corpus/01_identity.capless", str(DATA / "empty.capless"),
                     str(DATA / "unbound.capless"))
    assert code == 2


def test_eval_value_takes_no_steps(in_root):
    code, out, _ = cli("eval", "--json", "corpus/01_identity.capless")
    assert code == 0
    obj = jsonl(out)[0]
    assert obj["steps"] == 0 and obj["answer"] == "fun (x0: Top) => x0"


def test_eval_let_lift(in_root):
    code, out, _ = cli("eval", "corpus/02_let_lift.capless")
    assert code == 0
    assert "answer=ℓ0" in out
    assert "store: 1 binding" in out


def test_eval_stuck_unchecked():
    code, out, _ = cli("eval", "--unchecked", str(DATA / "stuck.capless"))
    assert code == 4
    assert "NotAFunction" in out


def test_eval_checks_first():
    code, _, err = cli("eval", str(DATA / "stuck.capless"))
    assert code == 1
    assert "not-a-function" in err


def test_eval_fuel(in_root):
    code, out, _ = cli("eval", "--fuel", "1", "corpus/33_long_chain.capless")
    assert code == 5
    assert "fuel exhausted" in out


def test_trace_lines(in_root):
    code, out, _ = cli("trace", "corpus/appself.capless")
    assert code == 0
    lines = out.splitlines()
    assert lines[0].startswith("#1  rule=lift  lookups=[]")
    assert lines[1] == "#2  rule=apply  lookups=[ℓ0]  term=ℓ0 ℓ0"
    assert lines[2] == "answer=ℓ0"


def test_usage_errors():
    assert cli("frobnicate", "x")[0] == 2
    assert cli("check", "--fuel", "0", "x")[0] == 2
    assert cli("eval", "--gen", "1", "2")[0] == 2
    with pytest.raises(ValueError):
        CliConfig("check", fuel=0)


def test_fmt_is_idempotent(tmp_path):
    for src in sorted(CORPUS.glob("*.capless")):
        shutil.copy(src, tmp_path / src.name)
    files = sorted(str(p) for p in tmp_path.glob("*.capless"))
    code, _, _ = cli("fmt", "--write", *files)
    assert code == 0
    first = {f: open(f).read() for f in files}
    code, out, _ = cli("fmt", "--json", "--write", *files)
    assert code == 0
    assert not any(o["changed"] for o in jsonl(out))
    assert {f: open(f).read() for f in files} == first


def test_fmt_does_not_write_without_flag(tmp_path):
    p = tmp_path / "a.capless"
    p.write_text("fun (y: Top) => y\n")
    code, out, _ = cli("fmt", str(p))
    assert code == 0 and out == "fun (x0: Top) => x0\n"
    assert p.read_text() == "fun (y: Top) => y\n"


def test_soundness_corpus_with_bad_program(tmp_path, in_root):
    bad = tmp_path / "bad.capless"
    shutil.copy(DATA / "stuck.capless", bad)
    code, out, _ = cli("soundness", "--unchecked", "corpus/01_identity.capless", str(bad))
    assert code == 1
    dump = tmp_path / "bad.capless.counterexample.json"
    assert dump.exists()
    assert "FAIL" in out
    assert not (CORPUS / "01_identity.capless.counterexample.json").exists()


def test_soundness_rejects_ill_typed_without_dump(tmp_path):
    bad = tmp_path / "bad.capless"
    shutil.copy(DATA / "stuck.capless", bad)
    code, _, err = cli("soundness", str(bad))
    assert code == 1
    assert "not-a-function" in err
    assert not list(tmp_path.glob("*.counterexample.json"))


def test_soundness_generated(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    code, out, _ = cli("soundness", "--gen", "5", "10")
    assert code == 0
    assert "10 program(s), 10 passed, 0 failed" in out


# -- JSON schemas ------------------------------------------------------------

def test_check_json_schema(schemas, in_root):
    _, out, _ = cli("check", "--json", "corpus/01_identity.capless", str(DATA / "unbound.capless"),
                    str(DATA / "empty.capless"))
    objs = jsonl(out)
    assert [o["status"] for o in objs] == ["ok", "error", "error"]
    for o in objs:
        schemas["check"].validate(o)
    for d in objs[1]["diagnostics"]:
        schemas["diagnostic"].validate(d)


def test_eval_json_schema(schemas, in_root):
    for argv in (("eval", "--json", "--trace", "corpus/20_twice.capless"),
                 ("trace", "--json", "corpus/07_pack_unpack.capless"),
                 ("eval", "--json", "--unchecked", str(DATA / "stuck.capless")),
                 ("eval", "--json", "--fuel", "1", "corpus/33_long_chain.capless")):
        _, out, _ = cli(*argv)
        for o in jsonl(out):
            schemas["eval"].validate(o)


def test_soundness_json_schema(schemas, tmp_path, in_root):
    bad = tmp_path / "bad.capless"
    shutil.copy(DATA / "stuck.capless", bad)
    _, out, _ = cli("soundness", "--json", "--unchecked", "corpus/03_apply_identity.capless", str(bad))
    objs = jsonl(out)
    assert len(objs) == 2
    for o in objs:
        schemas["soundness"].validate(o)
    schemas["counterexample"].validate(json.loads((tmp_path / "bad.capless.counterexample.json").read_text()))


def test_fmt_json(in_root):
    _, out, _ = cli("fmt", "--json", "corpus/01_identity.capless")
    obj = jsonl(out)[0]
    assert obj["formatted"] == "fun (x0: Top) => x0\n"
    assert obj["changed"] is True
