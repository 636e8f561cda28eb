import json
import subprocess
import sys
from pathlib import Path

from effectq.cli import EXIT_FAIL, EXIT_OK, EXIT_UNSAFE, EXIT_USAGE, main

PROGRAMS = Path(__file__).resolve().parent.parent / "programs"
DOUBLE_ACQUIRE = "(app (lam (l lock) (seq (acquire l) (acquire l) (release l) (release l))) (new_lock unit))"


def cli(capsys, *args):
    code = main(list(args))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_laws_exhaustive(capsys):
    code, out, _ = cli(capsys, "laws", "--system", "atomicity", "--json")
    doc = json.loads(out)
    assert code == EXIT_OK and doc["pass"] and doc["mode"] == "exhaustive"
    names = {law["name"] for law in doc["laws"]}
    assert {"seq_associative", "star_foldable"} <= names


def test_laws_report_failures_with_exit_two(capsys):
    code, out, _ = cli(capsys, "laws", "--system", "dl", "--samples", "1000", "--strict", "--json")
    assert code == EXIT_FAIL and not json.loads(out)["pass"]


def test_star_table(capsys):
    code, out, _ = cli(capsys, "star", "--system", "crit", "--json")
    assert code == EXIT_OK
    doc = json.loads(out)
    table = doc["star"]
    assert doc["laxly_iterable"] and table["locking"] is None and table["critical"] == "critical"


def test_check_atomic_read(capsys):
    code, out, _ = cli(capsys, "check", "--system", "lockatom", str(PROGRAMS / "atomic_read.eq"), "--json")
    assert code == EXIT_OK
    assert json.loads(out) == {
        "effect": "(∅,∅)⊗B", "latent": "(∅,∅)⊗A",
        "type": "(pi (x lock) I (pi (r (ref (S x) bool)) [(∅,∅)⊗A] bool))",
    }


def test_check_type_error_exits_two(capsys):
    code, _, err = cli(capsys, "check", "--system", "lockatom", "-e", "(if true unit false)")
    assert code == EXIT_FAIL and err


def test_parse_error_exits_one(capsys):
    code, _, err = cli(capsys, "check", "--system", "lockatom", "-e", "(acquire")
    assert code == EXIT_USAGE and err


def test_unknown_system_exits_one(capsys):
    code, _, err = cli(capsys, "laws", "--system", "nope")
    assert code == EXIT_USAGE and "invalid choice" in err


def test_run_history_program(capsys):
    code, out, _ = cli(capsys, "run", "--system", "history", str(PROGRAMS / "ev2.eq"), "--audit", "--json")
    doc = json.loads(out)
    assert code == EXIT_OK
    assert doc["final_state"] == "[a,b]" and doc["static_effect"] == "{ab}" and doc["safety"] == "pass"


def test_run_critical_section(capsys):
    code, out, _ = cli(capsys, "run", "--system", "lockatom", str(PROGRAMS / "critical.eq"), "--json")
    doc = json.loads(out)
    assert code == EXIT_OK and doc["status"] == "Value" and doc["value"] == "true"


def test_run_without_a_rule_exits_three(capsys):
    code, out, _ = cli(capsys, "run", "--system", "lockatom", "-e", DOUBLE_ACQUIRE, "--json")
    assert code == EXIT_UNSAFE
    assert json.loads(out)["status"] == "PrimError"


def test_translate(capsys):
    code, out, _ = cli(capsys, "translate", str(PROGRAMS / "thunk_twice.lt"), "--json")
    doc = json.loads(out)
    assert code == EXIT_OK and doc["core"].startswith("(app (lam f")


def test_json_output_is_byte_identical(capsys):
    args = ("laws", "--system", "lockset", "--samples", "200", "--seed", "4", "--json")
    _, a, _ = cli(capsys, *args)
    _, b, _ = cli(capsys, *args)
    assert a == b


def test_seed_from_environment(capsys, monkeypatch):
    monkeypatch.setenv("EQ_SEED", "4")
    _, env, _ = cli(capsys, "laws", "--system", "regex", "--samples", "50", "--json")
    monkeypatch.delenv("EQ_SEED")
    _, flag, _ = cli(capsys, "laws", "--system", "regex", "--samples", "50", "--seed", "4", "--json")
    assert env == flag
    assert json.loads(env)["mode"] == "sampled(n=50, seed=4)"


def test_module_entry_point():
    p = subprocess.run([sys.executable, "-m", "effectq", "star", "--system", "atomicity"],
                       capture_output=True, text=True)
    assert p.returncode == 0 and "A ↦ TOP" in p.stdout
