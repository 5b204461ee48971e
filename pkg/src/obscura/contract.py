"""Mixer application logic: deposits and metered withdrawal verification.

Box layout (keys are 33 bytes, values the full 64-byte point):

    b"c" + P[:32]  ->  P     one per registered commitment
    b"n" + I[:32]  ->  I     one per spent key image

Withdrawals run in a fixed order: provision budget, reject spent key images,
check that every ring member is a registered deposit, run the metered ring
loop, then record the nullifier and pay out.  Any failure reverts the group.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import codec
from .curve import G, H, hash_to_challenge, mul_add, serialize_point, deserialize_point
from .errors import ContractError, DuplicateMember, EncodingError, InvalidRing, LengthMismatch
from .ledger import (
    BOX_MBR,
    DEFAULT_COSTS,
    MIN_FEE,
    AppCall,
    CostTable,
    ExecContext,
    Payment,
    app_address,
    genesis,
    named_address,
    submit_group,
)

DENOMINATION = 1_000_000
OPERATOR_FUNDS = 1_000_000_000


def compute_payout(config: "ContractConfig" = None) -> int:
    denomination = config.denomination if config is not None else DENOMINATION
    return denomination - MIN_FEE - BOX_MBR


@dataclass(frozen=True)
class ContractConfig:
    denomination: int = DENOMINATION
    max_ring: int = 5
    min_ring: int = 2
    opup_factor: int = 20
    app_id: int = 1
    dummy_app_id: int = 2
    # funds commitment-box deposits so the escrow keeps every deposited unit
    operator: bytes = field(default_factory=lambda: named_address("operator"))
    # test hook: force a fixed number of budget calls instead of opup_factor * n
    opup_override: int | None = None
    costs: CostTable = DEFAULT_COSTS

    @property
    def escrow(self) -> bytes:
        return app_address(self.app_id)

    @property
    def payout(self) -> int:
        return compute_payout(self)

    def opups_for(self, n: int) -> int:
        if self.opup_override is not None:
            return self.opup_override
        return self.opup_factor * n

    def withdraw_fee(self, n: int) -> int:
        # outer call + inner payment + budget calls, pooled on the caller
        return (2 + self.opups_for(n)) * MIN_FEE


DEFAULT_CONFIG = ContractConfig()


def commitment_key(point_bytes: bytes) -> bytes:
    return b"c" + point_bytes[:32]


def nullifier_key(point_bytes: bytes) -> bytes:
    return b"n" + point_bytes[:32]


def _point_arg(raw: bytes, what: str):
    try:
        return deserialize_point(raw)
    except EncodingError as exc:
        raise ContractError("MalformedPoint", f"{what}: {exc}") from None


def handle_deposit(ctx: ExecContext, txn: AppCall, config: ContractConfig = DEFAULT_CONFIG):
    group = ctx.group
    if len(group) != 2 or ctx.index != 0 or not isinstance(group[1], Payment):
        raise ContractError("WrongGroupShape", "expected [Deposit call, Payment]")
    if len(txn.args) != 1:
        raise ContractError("MalformedPoint", "Deposit takes exactly one argument")
    P = _point_arg(txn.args[0], "commitment")
    payment = group[1]
    if payment.receiver != config.escrow:
        raise ContractError("WrongReceiver", "payment must go to the escrow")
    if payment.amount != config.denomination:
        raise ContractError("WrongAmount", f"deposit must be exactly {config.denomination}")

    raw = serialize_point(P)
    key = commitment_key(raw)
    if ctx.box_lookup(key) is not None:
        raise ContractError("DuplicateCommitment", "commitment already registered")
    ctx.box_write(key, raw, payer=config.operator)
    index = ctx.state.app_globals.get("deposit_counter", 0)
    ctx.state.app_globals["deposit_counter"] = index + 1
    ctx.emit({"event": "deposit", "commitment": raw.hex(), "deposit_index": index})


def handle_withdraw(ctx: ExecContext, txn: AppCall, config: ContractConfig = DEFAULT_CONFIG):
    if len(txn.args) != 3:
        raise ContractError("MalformedProof", "Withdraw takes [I, proof, recipient]")
    raw_I, packed, m = txn.args
    I = _point_arg(raw_I, "key image")
    if len(m) != 32:
        raise ContractError("MalformedRecipient", "recipient must be 32 bytes")
    try:
        ring, sig = codec.unpack(packed)
    except DuplicateMember:
        raise ContractError("RingDuplicate", "ring lists a commitment twice") from None
    except (EncodingError, LengthMismatch, InvalidRing) as exc:
        raise ContractError("MalformedProof", str(exc)) from None
    n = len(ring)
    if n > config.max_ring:
        raise ContractError("RingTooLarge", f"n={n} exceeds {config.max_ring}")
    if n < config.min_ring:
        raise ContractError("RingTooSmall", f"n={n} below {config.min_ring}")

    members = [serialize_point(P) for P in ring]
    nkey = nullifier_key(raw_I)
    ckeys = [commitment_key(raw) for raw in members]
    refs = set(txn.box_refs)
    missing = [k for k in [nkey, *ckeys] if k not in refs]
    if missing:
        raise ContractError("MissingBoxReference", f"{len(missing)} box keys not referenced")

    costs = ctx.costs
    # 1. budget provisioning
    for _ in range(config.opups_for(n)):
        ctx.opup(config.dummy_app_id)
    ctx.charge(costs.fixed_overhead)

    # 2. double-spend assertion
    if ctx.box_lookup(nkey) is not None:
        raise ContractError("DoubleSpend", "key image already recorded")

    # 3. anonymity set validation; full value compare guards prefix collisions
    for raw, key in zip(members, ckeys):
        if ctx.box_lookup(key) != raw:
            raise ContractError("UnknownRingMember", f"{raw.hex()[:16]}.. is not a deposit")

    # 4. metered ring loop
    c = sig.c0
    for P, s in zip(ring, sig.s):
        ctx.charge(2 * costs.cost_scalar_mul)
        ctx.charge(costs.cost_ec_add)
        L = mul_add(s, G, c, P)
        ctx.charge(2 * costs.cost_scalar_mul)
        ctx.charge(costs.cost_ec_add)
        R = mul_add(s, H, c, I)
        ctx.charge(costs.cost_hash_iteration)
        if L.is_identity or R.is_identity:
            raise ContractError("InvalidSignature", "ring step hit the identity")
        c = hash_to_challenge(m, L, R)

    # 5. closure and settlement
    if c != sig.c0:
        raise ContractError("InvalidSignature", "ring does not close")
    ctx.box_write(nkey, raw_I, payer=config.escrow)
    ctx.pay(config.escrow, m, config.payout)
    ctx.emit({
        "event": "withdraw",
        "key_image": raw_I.hex(),
        "ring": [raw.hex() for raw in members],
        "recipient": m.hex(),
        "payout": config.payout,
    })


class MixerApp:
    """Callable app handler bound to one configuration."""

    def __init__(self, config: ContractConfig = DEFAULT_CONFIG):
        self.config = config

    def __call__(self, ctx: ExecContext, txn: AppCall):
        if txn.method == "Deposit":
            handle_deposit(ctx, txn, self.config)
        elif txn.method == "Withdraw":
            handle_withdraw(ctx, txn, self.config)
        else:
            raise ContractError("UnknownMethod", txn.method)


def app_handlers(config: ContractConfig = DEFAULT_CONFIG) -> dict:
    return {config.app_id: MixerApp(config)}


def deploy(allocations=None, config: ContractConfig = DEFAULT_CONFIG,
           operator_funds: int = OPERATOR_FUNDS):
    """Fresh ledger with the mixer, the budget app and a funded operator."""
    alloc = {config.operator: operator_funds, config.escrow: 0}
    for addr, amount in dict(allocations or {}).items():
        alloc[addr] = alloc.get(addr, 0) + amount
    return genesis(alloc, {config.app_id: "mixer", config.dummy_app_id: "opup"})


def submit(state, group, config: ContractConfig = DEFAULT_CONFIG):
    return submit_group(state, group, app_handlers(config))
