"""Off-chain user agent: pool discovery, decoy choice, ring shuffle, txn building."""

from __future__ import annotations

from dataclasses import dataclass

from . import codec, lsag
from .contract import DEFAULT_CONFIG, ContractConfig, commitment_key, nullifier_key
from .curve import Point, deserialize_point
from .errors import DuplicateMember, IndexMismatch, InsufficientPool
from .ledger import MIN_FEE, AppCall, LedgerState, Payment
from .lsag import KeyPair, Ring, default_rng

DEFAULT_LAMBDA = 0.25
DEFAULT_WINDOW = 64


@dataclass(frozen=True)
class CommitmentRecord:
    point: Point
    deposit_index: int
    round: int


@dataclass(frozen=True)
class WithdrawalPlan:
    ring: Ring
    pi: int
    key_image: Point
    recipient: bytes
    packed: bytes


def list_commitments(state: LedgerState) -> list:
    """Registered commitments in deposit order, read back from the receipt log."""
    records = []
    for receipt in state.log:
        for ev in receipt.get("events", ()):
            if ev.get("event") != "deposit":
                continue
            raw = bytes.fromhex(ev["commitment"])
            if state.boxes.get(commitment_key(raw)) != raw:
                continue
            records.append(CommitmentRecord(deserialize_point(raw), ev["deposit_index"],
                                            receipt["round"]))
    records.sort(key=lambda r: r.deposit_index)
    return records


def decoy_weights(count: int, lam: float = DEFAULT_LAMBDA) -> list:
    return [(1.0 - lam) ** r for r in range(count)]


def select_decoys(records, own: Point, k: int, lam: float = DEFAULT_LAMBDA, rng=None,
                  window: int = DEFAULT_WINDOW) -> list:
    """Draw ``k`` distinct decoys, newest first weighted by (1 - lam)^rank.

    Rank 0 is the most recent deposit other than ``own``; only the newest
    ``max(window, k)`` candidates are eligible.
    """
    if not 0 < lam < 1:
        raise ValueError("lambda must lie strictly between 0 and 1")
    rng = rng or default_rng()
    candidates = sorted((r for r in records if r.point != own),
                        key=lambda r: r.deposit_index, reverse=True)
    if len(candidates) < k:
        raise InsufficientPool(f"need {k} decoys, pool has {len(candidates)}")
    candidates = candidates[:max(window, k)]
    weights = decoy_weights(len(candidates), lam)
    chosen = []
    for _ in range(k):
        total = sum(weights)
        u = rng.random() * total
        acc = 0.0
        pick = len(weights) - 1
        for j, w in enumerate(weights):
            if w == 0.0:
                continue
            acc += w
            if u < acc:
                pick = j
                break
        # float slop can land past the end; fall back to the last live slot
        while weights[pick] == 0.0:
            pick -= 1
        chosen.append(candidates[pick])
        weights[pick] = 0.0
    return chosen


def fisher_yates(items, rng) -> list:
    out = list(items)
    for i in range(len(out) - 1, 0, -1):
        j = rng.randrange(i + 1)
        out[i], out[j] = out[j], out[i]
    return out


def build_ring(own: Point, decoys, rng=None) -> tuple:
    rng = rng or default_rng()
    points = [d.point if isinstance(d, CommitmentRecord) else d for d in decoys]
    if own in points or len(set(points)) != len(points):
        raise DuplicateMember("decoys must be distinct and exclude the signer")
    members = fisher_yates(points + [own], rng)
    return Ring(members), members.index(own)


def make_deposit(keypair: KeyPair, sender: bytes, config: ContractConfig = DEFAULT_CONFIG) -> list:
    return [
        AppCall(sender, config.app_id, "Deposit", args=(keypair.P.to_bytes(),), fee=MIN_FEE),
        Payment(sender, config.escrow, config.denomination, fee=MIN_FEE),
    ]


def make_withdraw(keypair: KeyPair, ring: Ring, pi: int, recipient: bytes, sender: bytes,
                  config: ContractConfig = DEFAULT_CONFIG, rng=None, fee: int | None = None):
    """Sign, pack and wrap a withdrawal; returns ``(AppCall, WithdrawalPlan)``."""
    if not isinstance(ring, Ring):
        ring = Ring(ring)
    if not 0 <= pi < len(ring) or ring[pi] != keypair.P:
        raise IndexMismatch("ring position does not hold the caller's commitment")
    if len(recipient) != 32:
        raise ValueError("recipient address must be 32 bytes")
    sig = lsag.sign(keypair.x, ring, pi, recipient, rng)
    packed = codec.pack(ring, sig)
    image = keypair.I.to_bytes()
    refs = [nullifier_key(image)] + [commitment_key(P.to_bytes()) for P in ring]
    if fee is None:
        fee = config.withdraw_fee(len(ring))
    txn = AppCall(sender, config.app_id, "Withdraw", args=(image, packed, recipient),
                  box_refs=refs, fee=fee)
    return txn, WithdrawalPlan(ring, pi, keypair.I, bytes(recipient), packed)


def plan_withdrawal(state: LedgerState, keypair: KeyPair, recipient: bytes, sender: bytes,
                    ring_size: int = 5, lam: float = DEFAULT_LAMBDA,
                    config: ContractConfig = DEFAULT_CONFIG, rng=None):
    """Discover the pool, pick decoys, shuffle and build the withdrawal call."""
    rng = rng or default_rng()
    records = list_commitments(state)
    decoys = select_decoys(records, keypair.P, ring_size - 1, lam, rng)
    ring, pi = build_ring(keypair.P, decoys, rng)
    return make_withdraw(keypair, ring, pi, recipient, sender, config, rng)
