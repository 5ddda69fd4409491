import json
import subprocess
import sys

import pytest

from exsel.cli import main

COMMANDS = {
    "rename": ["rename", "--algo", "ma", "--k", "3", "--N", "16", "--crashes", "1"],
    "explore": ["explore", "--algo", "compete", "--k", "2", "--bound", "6", "--crash-budget", "1"],
    "expander": ["expander", "build", "--v", "32", "--L", "3", "--delta", "8", "--w", "96", "--exact"],
    "collect-demo": ["collect-demo", "--k", "3", "--ops", "S 1 a; S 2 b; C 3; S 1 c; C 2", "--crashes", "1"],
    "repository": ["repository", "--algo", "altruistic", "--n", "3", "--deposits", "8",
                   "--crash-script", "A 1; X 1"],
    "bench": ["bench", "--algo", "snapshot", "--ks", "1,2,3", "--Ns", "64", "--repetitions", "5"],
}


def run(argv, capsys):
    code = main(argv)
    return code, capsys.readouterr().out


@pytest.mark.parametrize("name", sorted(COMMANDS))
def test_commands_clean_and_deterministic(name, tmp_path, capsys):
    outputs = []
    for rerun in ("a", "b"):
        out = tmp_path / rerun
        code, text = run(["--json", "--seed", "3", "--out", str(out)] + COMMANDS[name], capsys)
        assert code == 0
        json.loads(text)
        files = {p.relative_to(out).as_posix(): p.read_bytes() for p in sorted(out.rglob("*")) if p.is_file()}
        assert files
        outputs.append((text, files))
    assert outputs[0] == outputs[1]


def test_global_flags_after_subcommand(capsys):
    a = run(["--seed", "5", "--json", "rename", "--algo", "snapshot", "--k", "3"], capsys)
    b = run(["rename", "--algo", "snapshot", "--k", "3", "--seed", "5", "--json"], capsys)
    assert a == b and a[0] == 0


def test_human_output(capsys):
    code, text = run(["rename", "--algo", "adaptive", "--k", "2"], capsys)
    assert code == 0 and "max_name: " in text and "violations: []" in text


def test_expander_verify_and_matching(tmp_path, capsys):
    run(["--out", str(tmp_path), "expander", "build", "--v", "32", "--L", "3", "--delta", "8", "--w", "96"], capsys)
    graph = str(tmp_path / "graph.txt")
    code, text = run(["--json", "expander", "verify", "--graph", graph, "--L", "3"], capsys)
    assert code == 0 and json.loads(text)["verdict"]["checked"] == 5488
    code, text = run(["--json", "expander", "matching", "--graph", graph, "--X", "1,2,3"], capsys)
    assert code == 0 and json.loads(text)["matched"] >= 2


def test_expander_verify_failure_exit_one(tmp_path, capsys):
    path = tmp_path / "bad.txt"
    path.write_text("EXP 3 3 3 2\n0 1 2\n0 1 2\n0 1 2\n")
    code, _ = run(["expander", "verify", "--graph", str(path), "--L", "2"], capsys)
    assert code == 1


def test_check_command_flags_tampered_trace(tmp_path, capsys):
    run(["--out", str(tmp_path), "rename", "--algo", "ma", "--k", "2"], capsys)
    trace = tmp_path / "trace.jsonl"
    code, _ = run(["check", "--trace", str(trace), "--suite", "core,renaming"], capsys)
    assert code == 0
    lines = trace.read_text().splitlines()
    names = [json.loads(l) for l in lines if '"name"' in l]
    dup = dict(names[-1], seq=len(lines), slot=names[0]["slot"] % 2 + 1, val=names[0]["val"], step=999)
    trace.write_text(trace.read_text() + json.dumps(dup) + "\n")
    code, text = run(["--json", "check", "--trace", str(trace), "--suite", "exclusive"], capsys)
    assert code == 1 and json.loads(text)["violations"]


def test_repository_literal_rule_and_script(tmp_path, capsys):
    script = tmp_path / "deposits.txt"
    script.write_text("1 10\n2 20\n3 30 31 32\n")
    code, text = run(["--json", "repository", "--algo", "selfish", "--n", "3", "--deposits", f"@{script}",
                      "--rule", "literal"], capsys)
    out = json.loads(text)
    assert code == 0 and out["acks"] == 5 and out["rule"] == "literal"


def test_naming_command(capsys):
    code, text = run(["--json", "repository", "--algo", "naming", "--n", "2", "--deposits", "3"], capsys)
    out = json.loads(text)
    assert code == 0 and out["commits"] == 6 and out["skipped"] == 0


def test_explore_repository(capsys):
    code, text = run(["--json", "explore", "--algo", "naming", "--k", "2", "--bound", "8"], capsys)
    out = json.loads(text)
    assert code == 0 and out["violations"] == 0 and out["traces"] > 1


def test_bench_config_file(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"algo": "compete", "ks": [2], "Ns": [4], "mode": "exhaustive"}))
    code, text = run(["--json", "bench", "--config", str(cfg)], capsys)
    assert code == 0 and json.loads(text)["exhaustive"][0]["traces"] == 1712


@pytest.mark.parametrize("argv", [
    ["rename", "--algo", "nope"],
    ["rename", "--algo", "ma", "--k", "0"],
    ["bench", "--algo", "ma", "--ks", "8", "--Ns", "4"],
    ["bench"],
    ["collect-demo", "--ops", "Q 1"],
    ["repository", "--algo", "selfish", "--crash-script", "B 1"],
    ["check", "--trace", "/nonexistent/trace.jsonl"],
    ["check", "--trace", "/dev/null", "--suite", "bogus"],
    ["expander", "verify", "--graph", "/nonexistent"],
    ["expander", "matching", "--graph", "/dev/null", "--X", "1"],
])
def test_configuration_errors_exit_two(argv, capsys):
    try:
        code = main(argv)
    except SystemExit as exc:  # argparse rejects before main's handler
        code = exc.code
    assert code == 2


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "exsel", "--json", "rename", "--algo", "snapshot", "--k", "2"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and json.loads(proc.stdout)["max_name"] <= 3
