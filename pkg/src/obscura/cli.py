"""``obscura`` command line.

Every command prints one JSON document on stdout (or a plain table with
``--pretty``).  Failures print ``{"ok": false, "error": <code>, ...}`` and
exit with status 1.
"""

from __future__ import annotations

import argparse
import contextlib
import fcntl
import json
import os
import random
import sys
from pathlib import Path

from . import client, codec, lens, ledger, lsag
from .contract import DEFAULT_CONFIG, deploy, submit
from .curve import deserialize_point, q
from .errors import GroupRejected, ObscuraError

FAUCET = ledger.named_address("faucet")
FAUCET_FUNDS = 10_000_000_000


class CliError(Exception):
    def __init__(self, code, detail=""):
        self.code = code
        self.detail = detail
        super().__init__(detail or code)


# -- io helpers ----------------------------------------------------------------

def _hex(value: str, size: int | None, what: str) -> bytes:
    try:
        raw = bytes.fromhex(value.strip().removeprefix("0x"))
    except ValueError:
        raise CliError("BadHex", f"{what} is not hex") from None
    if size is not None and len(raw) != size:
        raise CliError("BadHex", f"{what} must be {size} bytes, got {len(raw)}")
    return raw


def _rng(seed):
    return random.Random(seed) if seed is not None else lsag.default_rng()


def read_keyfile(path) -> lsag.KeyPair:
    try:
        doc = json.loads(Path(path).read_text())
        x = int(doc["x"], 16)
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise CliError("BadKeyFile", str(exc)) from None
    kp = lsag.KeyPair.from_secret(x)
    if doc.get("P") != kp.P.hex() or doc.get("I") != kp.I.hex():
        raise CliError("BadKeyFile", "stored P or I does not match x")
    return kp


def write_keyfile(path, kp: lsag.KeyPair):
    doc = {"x": f"{kp.x:064x}", "x_secret": True, "P": kp.P.hex(), "I": kp.I.hex()}
    fd = os.open(path, os.O_WRONLY | os.O_CREAT | os.O_TRUNC, 0o600)
    with os.fdopen(fd, "w") as fh:
        json.dump(doc, fh, indent=2)


def read_ledger(path) -> ledger.LedgerState:
    try:
        text = Path(path).read_text()
    except FileNotFoundError:
        raise CliError("NoLedger", f"{path} does not exist; run `obscura init`") from None
    return ledger.load(text)


def write_ledger(path, state):
    tmp = f"{path}.tmp"
    Path(tmp).write_text(ledger.persist(state))
    os.replace(tmp, path)


@contextlib.contextmanager
def locked(path):
    with open(f"{path}.lock", "w") as fh:
        fcntl.flock(fh, fcntl.LOCK_EX)
        try:
            yield
        finally:
            fcntl.flock(fh, fcntl.LOCK_UN)


# -- commands ------------------------------------------------------------------

def cmd_init(args):
    if Path(args.ledger).exists() and not args.force:
        raise CliError("LedgerExists", f"{args.ledger} already exists")
    with locked(args.ledger):
        state = deploy({FAUCET: args.faucet_funds})
        write_ledger(args.ledger, state)
    return {"ok": True, "ledger": args.ledger, "escrow": DEFAULT_CONFIG.escrow.hex(),
            "faucet": FAUCET.hex()}


def cmd_keygen(args):
    kp = lsag.keygen(_rng(args.seed))
    write_keyfile(args.out, kp)
    return {"ok": True, "key": args.out, "P": kp.P.hex(), "I": kp.I.hex()}


def cmd_deposit(args):
    kp = read_keyfile(args.key)
    sender = _hex(args.sender, 32, "sender") if args.sender else FAUCET
    with locked(args.ledger):
        state = read_ledger(args.ledger)
        state, receipt = submit(state, client.make_deposit(kp, sender))
        write_ledger(args.ledger, state)
    ev = receipt["events"][0]
    return {"ok": True, "round": receipt["round"], "commitment": ev["commitment"],
            "deposit_index": ev["deposit_index"]}


def cmd_withdraw(args):
    kp = read_keyfile(args.key)
    recipient = _hex(args.recipient, 32, "recipient")
    sender = _hex(args.sender, 32, "sender") if args.sender else FAUCET
    if not 2 <= args.ring_size <= DEFAULT_CONFIG.max_ring:
        raise CliError("BadRingSize", f"ring size must be 2..{DEFAULT_CONFIG.max_ring}")
    rng = _rng(args.seed)
    with locked(args.ledger):
        state = read_ledger(args.ledger)
        txn, plan = client.plan_withdrawal(state, kp, recipient, sender, args.ring_size,
                                           args.lam, rng=rng)
        state, receipt = submit(state, [txn])
        write_ledger(args.ledger, state)
    return {"ok": True, "round": receipt["round"], "ring_size": len(plan.ring),
            "key_image": plan.key_image.hex(), "recipient": recipient.hex(),
            "payout": DEFAULT_CONFIG.payout, "proof": plan.packed.hex(),
            "meter": receipt["budgets"][0]}


def cmd_verify_proof(args):
    packed = _hex(args.proof, None, "proof")
    image = deserialize_point(_hex(args.key_image, 64, "key image"))
    m = _hex(args.recipient, 32, "recipient")
    ring, sig = codec.unpack(packed)
    ok = lsag.verify(ring, image, m, sig)
    if not ok:
        raise CliError("InvalidSignature", "ring does not close")
    return {"ok": True, "result": "accept", "ring_size": len(ring), "bytes": len(packed)}


def cmd_audit(args):
    if args.key:
        kp = read_keyfile(args.key)
        x, P, I = kp.x, kp.P, kp.I
    else:
        if not (args.secret and args.commitment and args.key_image):
            raise CliError("BadArguments", "give --key or all of --secret/--commitment/--key-image")
        x = int.from_bytes(_hex(args.secret, 32, "secret"), "big") % q
        P = deserialize_point(_hex(args.commitment, 64, "commitment"))
        I = deserialize_point(_hex(args.key_image, 64, "key image"))
    consistent = lsag.audit_disclosure(x, P, I)
    out = {"ok": consistent, "result": "consistent" if consistent else "inconsistent",
           "P": P.hex(), "I": I.hex()}
    if args.ledger:
        state = read_ledger(args.ledger)
        deposits = [r for r in client.list_commitments(state) if r.point == P]
        spends = [o for o in lens.observations_from_state(state) if o.key_image == I.hex()]
        out["deposit_round"] = deposits[0].round if deposits else None
        out["withdraw_round"] = spends[0].round if spends else None
        out["recipient"] = spends[0].recipient if spends else None
    if not consistent:
        raise CliError("Inconsistent", json.dumps(out))
    return out


def cmd_inspect(args):
    state = read_ledger(args.ledger)
    report = lens.anonymity_report(state)
    return {
        "ok": True,
        "round": state.round,
        "deposit_counter": state.app_globals.get("deposit_counter", 0),
        "boxes": len(state.boxes),
        "escrow_balance": state.balance(DEFAULT_CONFIG.escrow),
        "fees_collected": state.fees_collected,
        "mbr_locked": state.mbr_locked,
        "total_supply": state.total_supply(),
        "pool": report["pool"],
        "groups": len(state.log),
    }


def cmd_lens_report(args):
    state = read_ledger(args.ledger)
    report = lens.anonymity_report(state)
    out = {"ok": True, **report}
    if args.figures:
        from .plotting import render_report
        out["figures"] = render_report(report, args.figures)
    return out


def cmd_scenario_run(args):
    try:
        script = json.loads(Path(args.script).read_text())
    except (OSError, ValueError) as exc:
        raise CliError("BadScript", str(exc)) from None
    if args.seed is not None:
        script["seed"] = args.seed
    result = lens.run_scenario(script)
    out = {"ok": True, **result.transcript}
    if args.figures:
        from .plotting import render_report
        out["figures"] = render_report(result.transcript["report"], args.figures)
    if args.ledger:
        write_ledger(args.ledger, result.state)
    return out


# -- output ----------------------------------------------------------------------

def _short(v):
    if isinstance(v, str) and len(v) > 20:
        return v[:16] + ".."
    if isinstance(v, list) and len(v) > 6:
        return f"[{len(v)} items]"
    return v


def render_pretty(doc: dict) -> str:
    lines = []
    rows = doc.get("rows") or doc.get("report", {}).get("rows")
    for key, value in doc.items():
        if key in ("rows", "report", "actions"):
            continue
        if isinstance(value, dict):
            lines.append(f"{key}:")
            lines.extend(f"  {k:<18} {_short(v)}" for k, v in value.items())
        else:
            lines.append(f"{key:<20} {_short(value)}")
    if "actions" in doc:
        lines.append("")
        lines.append(f"{'#':>3}  {'action':<9}{'actor':<10}{'status':<14}reason")
        for a in doc["actions"]:
            lines.append(f"{a['index']:>3}  {a['action']:<9}{a.get('actor', ''):<10}"
                         f"{a['status']:<14}{a.get('reason', '')}")
    if rows:
        lines.append("")
        lines.append(f"{'round':>6} {'key image':<18} {'n':>2} {'eff':>4} {'min age':>8}  attributed")
        for r in rows:
            lines.append(f"{r['round']:>6} {r['key_image'][:16] + '..':<18} {r['ring_size']:>2} "
                         f"{r['effective_anonymity']:>4} {str(r['min_age']):>8}  "
                         f"{(r['attributed'] or '-')[:16]}")
    return "\n".join(lines)


# -- parser ----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--pretty", action="store_true", default=argparse.SUPPRESS,
                        help="human-readable tables")

    parser = argparse.ArgumentParser(prog="obscura", parents=[common],
                                     description="Ring-signature mixer on a simulated ledger.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("init", parents=[common], help="create a ledger file with the mixer deployed")
    p.add_argument("--ledger", required=True)
    p.add_argument("--faucet-funds", type=int, default=FAUCET_FUNDS)
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_init)

    p = sub.add_parser("keygen", parents=[common], help="sample a fresh secret")
    p.add_argument("--out", "--key", dest="out", required=True)
    p.add_argument("--seed", type=int, help="deterministic randomness (tests only)")
    p.set_defaults(func=cmd_keygen)

    p = sub.add_parser("deposit", parents=[common], help="register a commitment")
    p.add_argument("--ledger", required=True)
    p.add_argument("--key", required=True)
    p.add_argument("--sender", help="funding address (hex32); defaults to the faucet")
    p.set_defaults(func=cmd_deposit)

    p = sub.add_parser("withdraw", parents=[common], help="spend a deposit to a recipient")
    p.add_argument("--ledger", required=True)
    p.add_argument("--key", required=True)
    p.add_argument("--recipient", required=True)
    p.add_argument("--ring-size", type=int, default=5)
    p.add_argument("--lambda", dest="lam", type=float, default=client.DEFAULT_LAMBDA)
    p.add_argument("--seed", type=int, help="deterministic randomness (tests only)")
    p.add_argument("--sender", help="fee payer (hex32); defaults to the faucet")
    p.set_defaults(func=cmd_withdraw)

    p = sub.add_parser("verify-proof", parents=[common], help="check a packed proof offline")
    p.add_argument("--proof", required=True, help="packed proof hex")
    p.add_argument("--key-image", required=True)
    p.add_argument("--recipient", required=True)
    p.set_defaults(func=cmd_verify_proof)

    p = sub.add_parser("audit", parents=[common], help="check a disclosed secret")
    p.add_argument("--key")
    p.add_argument("--secret")
    p.add_argument("--commitment")
    p.add_argument("--key-image")
    p.add_argument("--ledger")
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("inspect", parents=[common], help="ledger summary")
    p.add_argument("--ledger", required=True)
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser("lens", parents=[common], help="anonymity analysis")
    lsub = p.add_subparsers(dest="lens_command", required=True)
    r = lsub.add_parser("report", parents=[common])
    r.add_argument("--ledger", required=True)
    r.add_argument("--figures", help="directory for PNG figures")
    r.set_defaults(func=cmd_lens_report)

    p = sub.add_parser("scenario", parents=[common], help="scripted simulations")
    ssub = p.add_subparsers(dest="scenario_command", required=True)
    r = ssub.add_parser("run", parents=[common])
    r.add_argument("script")
    r.add_argument("--seed", type=int)
    r.add_argument("--figures", help="directory for PNG figures")
    r.add_argument("--ledger", help="also write the final ledger here")
    r.set_defaults(func=cmd_scenario_run)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        out = args.func(args)
        status = 0
    except GroupRejected as exc:
        out = {"ok": False, "error": exc.reason, "detail": exc.detail, "index": exc.index}
        status = 1
    except CliError as exc:
        out = {"ok": False, "error": exc.code, "detail": exc.detail}
        status = 1
    except ObscuraError as exc:
        out = {"ok": False, "error": exc.code, "detail": str(exc)}
        status = 1
    if getattr(args, "pretty", False):
        print(render_pretty(out))
    else:
        print(json.dumps(out, indent=2))
    return status


if __name__ == "__main__":
    sys.exit(main())
