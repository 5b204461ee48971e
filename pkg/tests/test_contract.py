import dataclasses

import pytest

from conftest import ALICE, RELAYER
from obscura import client, contract, lsag
from obscura.contract import DEFAULT_CONFIG, ContractConfig, compute_payout, submit
from obscura.errors import GroupRejected
from obscura.ledger import BOX_MBR, AppCall, Payment, named_address, persist
from obscura.lsag import Ring

BOB = named_address("bob")


def rejected(state, group, config=DEFAULT_CONFIG):
    before = persist(state)
    with pytest.raises(GroupRejected) as exc:
        submit(state, group, config)
    assert persist(state) == before
    return exc.value


def withdraw_call(keys, idx, members, recipient=BOB, config=DEFAULT_CONFIG, rng=None):
    kp = keys[idx]
    ring = Ring([keys[i].P for i in members])
    return client.make_withdraw(kp, ring, members.index(idx), recipient, RELAYER, config, rng)


# -- deposits ----------------------------------------------------------------

def test_deposit_registers_commitment(rng):
    state = contract.deploy({ALICE: 5_000_000})
    kp = lsag.keygen(rng)
    state2, receipt = submit(state, client.make_deposit(kp, ALICE))
    raw = kp.P.to_bytes()
    assert state2.boxes[contract.commitment_key(raw)] == raw
    assert state2.balance(DEFAULT_CONFIG.escrow) == 1_000_000
    assert state2.balance(ALICE) == 5_000_000 - 1_000_000 - 2_000
    assert state2.app_globals["deposit_counter"] == 1
    assert receipt["events"] == [{"event": "deposit", "commitment": raw.hex(), "deposit_index": 0}]
    assert state2.total_supply() == state.total_supply()


def test_duplicate_deposit(pool):
    state, keys = pool
    assert rejected(state, client.make_deposit(keys[0], ALICE)).reason == "DuplicateCommitment"


def test_deposit_wrong_amount(pool, rng):
    state, _ = pool
    call, pay = client.make_deposit(lsag.keygen(rng), ALICE)
    bad = dataclasses.replace(pay, amount=999_999)
    assert rejected(state, [call, bad]).reason == "WrongAmount"


def test_deposit_wrong_receiver(pool, rng):
    state, _ = pool
    call, pay = client.make_deposit(lsag.keygen(rng), ALICE)
    assert rejected(state, [call, dataclasses.replace(pay, receiver=BOB)]).reason == "WrongReceiver"


def test_deposit_wrong_shape(pool, rng):
    state, _ = pool
    call, pay = client.make_deposit(lsag.keygen(rng), ALICE)
    assert rejected(state, [pay, call]).reason == "WrongGroupShape"
    assert rejected(state, [call]).reason == "WrongGroupShape"


def test_deposit_malformed_point(pool):
    state, _ = pool
    call = AppCall(ALICE, 1, "Deposit", args=(b"\x01" * 64,))
    pay = Payment(ALICE, DEFAULT_CONFIG.escrow, 1_000_000)
    assert rejected(state, [call, pay]).reason == "MalformedPoint"


# -- withdrawals ------------------------------------------------------------------

def test_withdraw_pays_exact_payout(pool, rng):
    state, keys = pool
    txn, plan = withdraw_call(keys, 2, [5, 2, 0, 7, 3], rng=rng)
    assert len(plan.packed) == 513
    assert txn.fee == 102_000
    state2, receipt = submit(state, [txn])
    assert state2.balance(BOB) == 899_000
    assert state2.boxes[contract.nullifier_key(keys[2].I.to_bytes())] == keys[2].I.to_bytes()
    budget = receipt["budgets"][0]
    assert budget["opups"] == 100 and budget["pooled"] == 70_700
    assert budget["consumed"] == 5 * 11_000 + 400
    assert receipt["inner_count"] == 101
    assert state2.total_supply() == state.total_supply()


def test_replay_is_double_spend(pool, rng):
    state, keys = pool
    txn, _ = withdraw_call(keys, 1, [1, 4, 6], rng=rng)
    state, _ = submit(state, [txn])
    err = rejected(state, [txn])
    assert err.reason == "DoubleSpend"
    # caught before the ring loop: only the fixed overhead is consumed
    assert err.meter["consumed"] == 400


def test_second_spend_other_ring(pool, rng):
    state, keys = pool
    state, _ = submit(state, [withdraw_call(keys, 0, [0, 1], rng=rng)[0]])
    txn, _ = withdraw_call(keys, 0, [6, 7, 0], recipient=named_address("x"), rng=rng)
    assert rejected(state, [txn]).reason == "DoubleSpend"


def test_unknown_ring_member(pool, rng):
    state, keys = pool
    stranger = lsag.keygen(rng)
    ring = Ring([keys[0].P, stranger.P])
    txn, _ = client.make_withdraw(keys[0], ring, 0, BOB, RELAYER, rng=rng)
    assert rejected(state, [txn]).reason == "UnknownRingMember"


def test_ring_too_large_and_small(pool, rng):
    state, keys = pool
    big, _ = withdraw_call(keys, 0, list(range(6)), rng=rng)
    assert rejected(state, [big]).reason == "RingTooLarge"
    one, _ = withdraw_call(keys, 0, [0], rng=rng)
    assert rejected(state, [one]).reason == "RingTooSmall"


def test_ring_duplicate(pool, rng):
    state, keys = pool
    txn, plan = withdraw_call(keys, 0, [0, 1, 2], rng=rng)
    packed = bytearray(plan.packed)
    packed[1 + 64:1 + 128] = packed[1:65]
    bad = dataclasses.replace(txn, args=(txn.args[0], bytes(packed), txn.args[2]))
    assert rejected(state, [bad]).reason == "RingDuplicate"


def test_missing_box_reference(pool, rng):
    state, keys = pool
    txn, _ = withdraw_call(keys, 0, [0, 1, 2], rng=rng)
    bad = dataclasses.replace(txn, box_refs=txn.box_refs[:-1])
    assert rejected(state, [bad]).reason == "MissingBoxReference"


def test_malformed_proof(pool, rng):
    state, keys = pool
    txn, plan = withdraw_call(keys, 0, [0, 1, 2], rng=rng)
    bad = dataclasses.replace(txn, args=(txn.args[0], plan.packed[:-1], txn.args[2]))
    assert rejected(state, [bad]).reason == "MalformedProof"


def test_altered_recipient(pool, rng):
    state, keys = pool
    txn, _ = withdraw_call(keys, 3, [3, 4, 5, 6], rng=rng)
    bad = dataclasses.replace(txn, args=txn.args[:2] + (named_address("mallory"),))
    assert rejected(state, [bad]).reason == "InvalidSignature"


def test_zero_opups_exhausts_budget(pool, rng):
    state, keys = pool
    config = ContractConfig(opup_override=0)
    txn, _ = withdraw_call(keys, 0, [0, 1], config=config, rng=rng)
    err = rejected(state, [txn], config)
    assert err.reason == "BudgetExceeded"


def test_underpaid_withdraw_fee(pool, rng):
    state, keys = pool
    txn, _ = withdraw_call(keys, 0, [0, 1], rng=rng)
    bad = dataclasses.replace(txn, fee=txn.fee - 1)
    assert rejected(state, [bad]).reason == "InsufficientFee"


def test_compute_payout():
    assert compute_payout() == 899_000
    assert compute_payout(ContractConfig(denomination=2_000_000)) == 1_899_000
    assert {DEFAULT_CONFIG.withdraw_fee(n) - DEFAULT_CONFIG.withdraw_fee(n - 1)
            for n in range(2, 6)} == {20_000}


def test_escrow_stays_solvent(pool, rng):
    state, keys = pool
    config = DEFAULT_CONFIG
    spent = 0
    for idx, members in [(0, [0, 1, 2]), (4, [3, 4, 5, 6, 7]), (7, [7, 2])]:
        state, _ = submit(state, [withdraw_call(keys, idx, members, rng=rng)[0]])
        spent += 1
        unspent = len(keys) - spent
        assert state.balance(config.escrow) >= unspent * (config.payout + BOX_MBR)


def test_unknown_method(pool):
    state, _ = pool
    assert rejected(state, [AppCall(ALICE, 1, "Steal")]).reason == "UnknownMethod"
