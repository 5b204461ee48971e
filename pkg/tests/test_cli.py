import json

import pytest

from obscura import cli
from obscura.ledger import named_address


def run(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    out = capsys.readouterr().out
    return code, out


def run_json(capsys, *argv):
    code, out = run(capsys, *argv)
    return code, json.loads(out)


@pytest.fixture
def world(tmp_path, capsys):
    """Ledger with six deposits; returns (ledger path, list of key files)."""
    led = tmp_path / "ledger.json"
    assert run_json(capsys, "init", "--ledger", led)[0] == 0
    keys = []
    for i in range(6):
        key = tmp_path / f"k{i}.json"
        assert run_json(capsys, "keygen", "--out", key, "--seed", i + 1)[0] == 0
        code, doc = run_json(capsys, "deposit", "--ledger", led, "--key", key)
        assert code == 0 and doc["deposit_index"] == i
        keys.append(key)
    return led, keys


def test_keygen_file_mode(tmp_path, capsys):
    key = tmp_path / "k.json"
    code, doc = run_json(capsys, "keygen", "--out", key)
    assert code == 0
    assert key.stat().st_mode & 0o777 == 0o600
    stored = json.loads(key.read_text())
    assert stored["x_secret"] is True and stored["P"] == doc["P"]
    assert "x" not in doc


def test_init_refuses_overwrite(tmp_path, capsys):
    led = tmp_path / "l.json"
    run_json(capsys, "init", "--ledger", led)
    code, doc = run_json(capsys, "init", "--ledger", led)
    assert code == 1 and doc["error"] == "LedgerExists"


def test_missing_ledger(tmp_path, capsys):
    code, doc = run_json(capsys, "inspect", "--ledger", tmp_path / "none.json")
    assert code == 1 and doc == {"ok": False, "error": "NoLedger", "detail": doc["detail"]}


def test_duplicate_deposit(world, capsys):
    led, keys = world
    code, doc = run_json(capsys, "deposit", "--ledger", led, "--key", keys[0])
    assert code == 1 and doc["error"] == "DuplicateCommitment"


def test_withdraw_verify_audit_cycle(world, capsys):
    led, keys = world
    recipient = named_address("bob").hex()
    code, w = run_json(capsys, "withdraw", "--ledger", led, "--key", keys[2],
                       "--recipient", recipient, "--seed", 7)
    assert code == 0 and w["payout"] == 899_000 and len(w["proof"]) == 2 * 513

    code, again = run_json(capsys, "withdraw", "--ledger", led, "--key", keys[2],
                           "--recipient", recipient, "--seed", 8)
    assert code == 1 and again["error"] == "DoubleSpend"

    code, v = run_json(capsys, "verify-proof", "--proof", w["proof"], "--key-image", w["key_image"],
                       "--recipient", recipient)
    assert code == 0 and v["result"] == "accept" and v["bytes"] == 513
    code, v = run_json(capsys, "verify-proof", "--proof", w["proof"], "--key-image", w["key_image"],
                       "--recipient", named_address("eve").hex())
    assert code == 1 and v["error"] == "InvalidSignature"

    code, a = run_json(capsys, "audit", "--key", keys[2], "--ledger", led)
    assert code == 0 and a["result"] == "consistent"
    assert a["recipient"] == recipient and a["withdraw_round"] > a["deposit_round"]

    code, ins = run_json(capsys, "inspect", "--ledger", led)
    assert ins["pool"] == {"deposits": 6, "spends": 1, "unspent": 5}


def test_audit_mismatch(world, capsys):
    _, keys = world
    k0, k1 = (json.loads(k.read_text()) for k in keys[:2])
    code, doc = run_json(capsys, "audit", "--secret", k0["x"], "--commitment", k0["P"],
                         "--key-image", k1["I"])
    assert code == 1 and doc["error"] == "Inconsistent"
    code, doc = run_json(capsys, "audit", "--secret", k0["x"])
    assert code == 1 and doc["error"] == "BadArguments"


def test_bad_ring_size_and_hex(world, capsys):
    led, keys = world
    code, doc = run_json(capsys, "withdraw", "--ledger", led, "--key", keys[0],
                         "--recipient", "00" * 32, "--ring-size", 6)
    assert code == 1 and doc["error"] == "BadRingSize"
    code, doc = run_json(capsys, "withdraw", "--ledger", led, "--key", keys[0], "--recipient", "zz")
    assert code == 1 and doc["error"] == "BadHex"


def test_malformed_proof(capsys):
    code, doc = run_json(capsys, "verify-proof", "--proof", "05" + "00" * 10,
                         "--key-image", "00" * 31 + "01" + "00" * 31 + "02", "--recipient", "00" * 32)
    assert code == 1 and doc["error"] == "TruncatedPayload"


def test_lens_report_with_figures(world, tmp_path, capsys):
    led, keys = world
    for i in (0, 4):
        run_json(capsys, "withdraw", "--ledger", led, "--key", keys[i],
                 "--recipient", named_address(f"r{i}").hex(), "--seed", i)
    figs = tmp_path / "figs"
    code, doc = run_json(capsys, "lens", "report", "--ledger", led, "--figures", figs)
    assert code == 0 and len(doc["rows"]) == 2
    for path in doc["figures"]:
        assert (figs / path.split("/")[-1]).stat().st_size > 0

    code, out = run(capsys, "lens", "report", "--ledger", led, "--pretty")
    assert code == 0 and "key image" in out and "{" not in out


def test_scenario_run(tmp_path, capsys):
    script = tmp_path / "s.json"
    script.write_text(json.dumps({"seed": 3, "ring_size": 3, "actions": [
        {"deposit": "a"}, {"deposit": "b"}, {"deposit": "c"}, {"advance": 2},
        {"withdraw": "b"}, {"withdraw": "b"}]}))
    figs = tmp_path / "f"
    led = tmp_path / "out.json"
    code, doc = run_json(capsys, "scenario", "run", script, "--figures", figs, "--ledger", led)
    assert code == 0
    assert [a["status"] for a in doc["actions"][-2:]] == ["committed", "rejected"]
    assert len(list(figs.glob("*.png"))) == 2
    code, ins = run_json(capsys, "inspect", "--ledger", led)
    assert ins["pool"]["spends"] == 1

    code, again = run_json(capsys, "scenario", "run", script)
    del doc["figures"]
    assert again == doc

    code, out = run(capsys, "scenario", "run", script, "--pretty")
    assert code == 0 and "DoubleSpend" in out


def test_scenario_bad_script(tmp_path, capsys):
    script = tmp_path / "s.json"
    script.write_text("{not json")
    code, doc = run_json(capsys, "scenario", "run", script)
    assert code == 1 and doc["error"] == "BadScript"
    script.write_text(json.dumps({"actions": [{"withdraw": "ghost"}]}))
    code, doc = run_json(capsys, "scenario", "run", script)
    assert code == 1 and doc["error"] == "ScriptError"
