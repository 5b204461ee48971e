"""Anonymity analysis over the public ledger, plus the scripted scenario runner.

Everything here works from what a passive observer can read: the committed
receipt log.  Points are handled as lowercase hex of their 64-byte encoding.
"""

from __future__ import annotations

import random
import statistics
from collections import Counter, defaultdict
from dataclasses import dataclass, field

from . import client, lsag
from .contract import ContractConfig, deploy, submit
from .errors import GroupRejected, ObscuraError, ScriptError
from .ledger import LedgerState, advance, named_address

ACTOR_FUNDS = 100_000_000
RELAYER_FUNDS = 1_000_000_000


@dataclass(frozen=True)
class WithdrawalObservation:
    ring: tuple
    key_image: str
    round: int
    recipient: str


@dataclass
class AttributionReport:
    attributions: dict = field(default_factory=dict)
    effective_anonymity: dict = field(default_factory=dict)


def observations_from_state(state: LedgerState) -> list:
    out = []
    for receipt in state.log:
        for ev in receipt.get("events", ()):
            if ev.get("event") == "withdraw":
                out.append(WithdrawalObservation(tuple(ev["ring"]), ev["key_image"],
                                                 receipt["round"], ev["recipient"]))
    return out


def chain_reaction(observations) -> AttributionReport:
    """Iterated elimination until nothing new can be pinned down.

    A ring whose members are all claimed by other key images except one gives
    that one away.  Each pass collects every forced attribution first and
    applies them together, so the fixpoint does not depend on input order;
    a commitment forced by two different key images at once (impossible for
    honest data) is left unattributed.  Repeated key images are merged by
    intersecting their rings.
    """
    rings = {}
    for obs in observations:
        members = set(obs.ring)
        rings[obs.key_image] = rings[obs.key_image] & members if obs.key_image in rings else members

    attributed = {}
    owner = {}
    while True:
        proposals = {}
        for ki, members in rings.items():
            if ki in attributed:
                continue
            free = [p for p in members if owner.get(p, ki) == ki]
            if len(free) == 1:
                proposals[ki] = free[0]
        counts = Counter(proposals.values())
        fresh = {ki: p for ki, p in proposals.items() if counts[p] == 1 and p not in owner}
        if not fresh:
            break
        for ki, p in fresh.items():
            attributed[ki] = p
            owner[p] = ki

    effective = {}
    for ki, members in rings.items():
        free = sum(1 for p in members if owner.get(p, ki) == ki)
        effective[ki] = max(1, free)
    return AttributionReport(attributed, effective)


def anonymity_report(state: LedgerState) -> dict:
    deposit_round = {r.point.hex(): r.round for r in client.list_commitments(state)}
    observations = observations_from_state(state)
    attribution = chain_reaction(observations)
    rows = []
    for obs in observations:
        ages = [obs.round - deposit_round[p] for p in obs.ring if p in deposit_round]
        rows.append({
            "round": obs.round,
            "key_image": obs.key_image,
            "recipient": obs.recipient,
            "ring_size": len(obs.ring),
            "member_ages": ages,
            "min_age": min(ages) if ages else None,
            "median_age": statistics.median(ages) if ages else None,
            "attributed": attribution.attributions.get(obs.key_image),
            "effective_anonymity": attribution.effective_anonymity[obs.key_image],
        })
    deposits = len(deposit_round)
    spends = len({o.key_image for o in observations})
    return {
        "rows": rows,
        "pool": {"deposits": deposits, "spends": spends, "unspent": deposits - spends},
        "attributed": len(attribution.attributions),
    }


# -- scenarios ---------------------------------------------------------------

@dataclass
class ScenarioResult:
    transcript: dict
    ground_truth: dict
    state: LedgerState


_CONFIG_KEYS = {"min_ring", "max_ring", "opup_factor", "opup_override", "denomination"}


def _parse_action(i, action):
    if not isinstance(action, dict):
        raise ScriptError(i, "action must be an object")
    kinds = [k for k in ("deposit", "withdraw", "advance") if k in action]
    if len(kinds) != 1:
        raise ScriptError(i, "action needs exactly one of deposit/withdraw/advance")
    kind = kinds[0]
    if kind == "advance":
        rounds = action["advance"]
        if not isinstance(rounds, int) or isinstance(rounds, bool) or rounds < 0:
            raise ScriptError(i, "advance takes a non-negative integer")
    elif not isinstance(action[kind], str) or not action[kind]:
        raise ScriptError(i, f"{kind} takes an actor name")
    return kind


def run_scenario(script: dict) -> ScenarioResult:
    """Replay a deposit/withdraw/advance script against a fresh ledger.

    Every random choice flows from ``script["seed"]`` so two runs of the same
    script produce identical transcripts.
    """
    if not isinstance(script, dict) or not isinstance(script.get("actions"), list):
        raise ScriptError(-1, "script must be an object with an 'actions' list")
    seed = script.get("seed", 0)
    if not isinstance(seed, int) or seed < 0:
        raise ScriptError(-1, "seed must be a non-negative integer")
    overrides = script.get("config", {}) or {}
    unknown = set(overrides) - _CONFIG_KEYS
    if unknown:
        raise ScriptError(-1, f"unknown config keys {sorted(unknown)}")
    config = ContractConfig(**overrides)
    default_ring = script.get("ring_size", config.max_ring)
    lam = script.get("lambda", client.DEFAULT_LAMBDA)

    kinds = [_parse_action(i, a) for i, a in enumerate(script["actions"])]
    actors = sorted({a[k] for a, k in zip(script["actions"], kinds) if k != "advance"})
    rng = random.Random(seed)
    relayer = named_address("relayer")
    state = deploy({named_address(a): ACTOR_FUNDS for a in actors} | {relayer: RELAYER_FUNDS},
                   config)

    unspent = defaultdict(list)
    spent = defaultdict(list)
    withdrawn = Counter()
    ground_truth = {}
    entries = []
    recipients = {}
    meters = []

    for i, (action, kind) in enumerate(zip(script["actions"], kinds)):
        entry = {"index": i, "action": kind}
        if kind == "advance":
            state = advance(state, action["advance"])
            entry.update(status="ok", round=state.round)
            entries.append(entry)
            continue

        actor = action[kind]
        entry["actor"] = actor
        if kind == "deposit":
            kp = lsag.keygen(rng)
            try:
                state, receipt = submit(state, client.make_deposit(kp, named_address(actor), config),
                                        config)
            except GroupRejected as exc:
                entry.update(status="rejected", reason=exc.reason)
            else:
                unspent[actor].append(kp)
                ev = receipt["events"][0]
                entry.update(status="committed", round=receipt["round"],
                             commitment=ev["commitment"], deposit_index=ev["deposit_index"])
            entries.append(entry)
            continue

        # withdraw
        if unspent[actor]:
            kp = unspent[actor][0]
        elif spent[actor]:
            kp = spent[actor][-1]
        else:
            raise ScriptError(i, f"{actor} has nothing to withdraw")
        delay = action.get("delay_rounds", 0)
        if not isinstance(delay, int) or delay < 0:
            raise ScriptError(i, "delay_rounds must be a non-negative integer")
        ring_size = action.get("ring_size", default_ring)
        if not isinstance(ring_size, int) or ring_size < 1:
            raise ScriptError(i, "ring_size must be a positive integer")
        if delay:
            state = advance(state, delay)
        label = action.get("recipient") or f"{actor}/recipient/{withdrawn[actor]}"
        withdrawn[actor] += 1
        recipient = named_address(label)
        recipients[label] = recipient
        entry.update(ring_size=ring_size, recipient=recipient.hex())
        try:
            txn, plan = client.plan_withdrawal(state, kp, recipient, relayer, ring_size, lam,
                                               config, rng)
        except ObscuraError as exc:
            entry.update(status="client_error", reason=exc.code)
            entries.append(entry)
            continue
        try:
            state, receipt = submit(state, [txn], config)
        except GroupRejected as exc:
            entry.update(status="rejected", reason=exc.reason, meter=exc.meter)
        else:
            if kp in unspent[actor]:
                unspent[actor].remove(kp)
                spent[actor].append(kp)
            meter = receipt["budgets"][0]
            meters.append(meter)
            ground_truth[kp.I.hex()] = kp.P.hex()
            entry.update(status="committed", round=receipt["round"], key_image=kp.I.hex(),
                         meter={k: meter[k] for k in ("pooled", "consumed", "opups")})
        entries.append(entry)

    balances = {a: state.balance(named_address(a)) for a in actors}
    balances.update({label: state.balance(addr) for label, addr in recipients.items()})
    balances["escrow"] = state.balance(config.escrow)
    balances["relayer"] = state.balance(relayer)
    transcript = {
        "seed": seed,
        "config": {"min_ring": config.min_ring, "max_ring": config.max_ring,
                   "opup_factor": config.opup_factor, "payout": config.payout},
        "actions": entries,
        "final_round": state.round,
        "final_balances": balances,
        "meter": {
            "withdrawals": len(meters),
            "opups_total": sum(m["opups"] for m in meters),
            "max_pooled": max((m["pooled"] for m in meters), default=0),
            "max_consumed": max((m["consumed"] for m in meters), default=0),
        },
        "report": anonymity_report(state),
    }
    return ScenarioResult(transcript, ground_truth, state)
