import json

import pytest

from deacp.cli import main


LEAK = """
domain -4..3
vars h, l
actions send/1, a, b, c
comm { a | b = c }
map start { h = 0 }
proc P = [h = 0] -> send(0) + [not h = 0] -> send(1)
proc OK = send(l) . h := h + 1
proc L = a + delta
proc R = a
security { low = { l }; ext = { send } }
"""


@pytest.fixture()
def leak_file(tmp_path):
    path = tmp_path / "leak.deacp"
    path.write_text(LEAK, encoding="utf-8")
    return str(path)


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_parse_roundtrips(capsys, leak_file):
    code, out, err = run(capsys, "parse", leak_file)
    assert code == 0
    assert "proc P" in out


def test_bisim_equivalent_exit_zero(capsys, leak_file):
    code, out, _ = run(capsys, "bisim", leak_file, "--left", "L", "--right", "R")
    assert code == 0
    assert "equivalent" in out


def test_bisim_inequivalent_exit_one(capsys, leak_file):
    code, out, _ = run(capsys, "bisim", leak_file, "--left", "P", "--right", "R")
    assert code == 1


def test_ab_bisim_command(capsys, leak_file):
    code, _, _ = run(capsys, "ab-bisim", leak_file, "--left", "L", "--right", "R")
    assert code == 0


def test_dnii_fails_with_pair(capsys, leak_file):
    code, out, _ = run(capsys, "dnii", leak_file, "--process", "P")
    assert code == 1
    assert "sigma" in out


def test_dnii_holds(capsys, leak_file):
    code, out, _ = run(capsys, "dnii", leak_file, "--process", "OK")
    assert code == 0
    assert out.startswith("holds")


def test_lts_json_is_byte_identical_across_runs(capsys, leak_file):
    code1, out1, _ = run(capsys, "lts", leak_file, "--process", "P", "--json")
    code2, out2, _ = run(capsys, "lts", leak_file, "--process", "P", "--json")
    assert code1 == code2 == 0
    assert out1 == out2
    payload = json.loads(out1)
    assert payload["root"] == 0
    assert {"from", "map", "action", "to"} == set(payload["transitions"][0])


def test_prove_json(capsys, leak_file):
    code, out, _ = run(capsys, "prove", leak_file, "--left", "L", "--right", "R", "--json")
    assert code == 0
    payload = json.loads(out)
    assert payload["equal"] is True
    assert payload["certificate"]["steps"][0]["rule"] == "A6"


def test_linearize_command(capsys, leak_file):
    code, out, _ = run(capsys, "linearize", leak_file, "--process", "R")
    assert code == 0
    assert out.startswith("rec ")


def test_cfar_command(capsys, tmp_path):
    path = tmp_path / "cfar.deacp"
    path.write_text(
        "actions a, b, c\n"
        "proc H = hide{a}(rec X where { X = [true] -> a . Y + [true] -> b . Z,"
        " Y = [true] -> a . X + [true] -> c . Z, Z = [true] -> epsilon })\n",
        encoding="utf-8",
    )
    code, out, _ = run(capsys, "cfar", str(path), "--process", "H")
    assert code == 0
    assert out.startswith("tau . hide{a}")


def test_syntax_error_exit_two(capsys, tmp_path):
    path = tmp_path / "bad.deacp"
    path.write_text("proc P = ???", encoding="utf-8")
    code, _, err = run(capsys, "parse", str(path))
    assert code == 2
    assert "error" in err


def test_missing_process_exit_two(capsys, leak_file):
    code, _, err = run(capsys, "lts", leak_file, "--process", "NOPE")
    assert code == 2


def test_conjecture_command(capsys):
    code, out, _ = run(capsys, "conjecture", "--pairs", "6", "--seed", "3")
    assert code == 0
    assert "pairs checked: 6" in out


def test_json_identical_across_processes_and_hash_seeds(leak_file):
    # end-to-end determinism: separate interpreter runs with different hash
    # seeds must produce byte-identical machine output
    import os
    import subprocess
    import sys

    outputs = []
    for seed in ("1", "42"):
        env = dict(os.environ, PYTHONHASHSEED=seed)
        done = subprocess.run(
            [sys.executable, "-m", "deacp.cli", "lts", leak_file,
             "--process", "P", "--json"],
            capture_output=True, env=env, check=True,
        )
        outputs.append(done.stdout)
    assert outputs[0] == outputs[1]


def test_stdin_input(capsys, monkeypatch):
    import io

    monkeypatch.setattr("sys.stdin", io.StringIO("actions a\nproc P = a\n"))
    code, out, _ = run(capsys, "parse", "-")
    assert code == 0
    assert "proc P = a" in out


def test_full_workflow_on_one_file(capsys, tmp_path):
    path = tmp_path / "work.deacp"
    path.write_text(
        """
domain -16..15
vars i, j, q, r
map sigma { i = 11, j = 3 }
proc DIV = eval{sigma}(q := 0 . r := i . rec Q where {
    Q = [r >= j] -> q := q + 1 . R + [r < j] -> epsilon,
    R = [true] -> r := r - j . Q
})
proc CHAIN = q := 0 . r := 11 . q := 1 . r := 8 . q := 2 . r := 5 . q := 3 . r := 2
""",
        encoding="utf-8",
    )
    code, out, _ = run(capsys, "lts", str(path), "--process", "DIV")
    assert code == 0 and "states: 9" in out
    code, _, _ = run(capsys, "bisim", str(path), "--left", "DIV", "--right", "CHAIN")
    assert code == 0
    code, out, _ = run(capsys, "prove", str(path), "--left", "DIV", "--right", "CHAIN",
                       "--json")
    assert code == 0
    assert json.loads(out)["equal"] is True
    code, out, _ = run(capsys, "linearize", str(path), "--process", "DIV")
    assert code == 0 and out.startswith("rec ")
