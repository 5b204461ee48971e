"""Deterministic simulator of the constrained application runtime.

The state is a plain value: :func:`submit_group` works on a scratch copy and
either returns a new committed state plus a receipt, or raises
:class:`~obscura.errors.GroupRejected` leaving the input untouched.  Money is
tracked in micro-ALGO.  Three pots hold every unit in existence: account
balances, collected fees and minimum-balance deposits locked behind boxes.
"""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

from .errors import (
    BoxAlreadyExists,
    BudgetExceeded,
    ContractError,
    GroupRejected,
    InsufficientBalance,
    InsufficientFee,
    KeyTooLong,
    LedgerError,
    MalformedDocument,
    ObscuraError,
    UnknownApp,
)

MIN_FEE = 1_000
BOX_MBR = 100_000
MAX_BOX_KEY = 64
ADDRESS_SIZE = 32


@dataclass(frozen=True)
class CostTable:
    base_budget: int = 700
    opup_contribution: int = 700
    cost_scalar_mul: int = 2_675
    cost_ec_add: int = 100
    cost_hash_iteration: int = 100
    # parsing and box assertions outside the ring loop
    fixed_overhead: int = 400

    @property
    def per_index(self) -> int:
        return 4 * self.cost_scalar_mul + 2 * self.cost_ec_add + self.cost_hash_iteration


DEFAULT_COSTS = CostTable()


class BudgetMeter:
    def __init__(self, pooled: int = DEFAULT_COSTS.base_budget):
        self.pooled = pooled
        self.consumed = 0
        self.opups = 0

    def charge(self, units: int):
        if units <= 0:
            raise ValueError("charge must be positive")
        if self.consumed + units > self.pooled:
            raise BudgetExceeded(
                f"need {self.consumed + units} units, pool holds {self.pooled}")
        self.consumed += units

    def add_opup(self, contribution: int = DEFAULT_COSTS.opup_contribution):
        self.pooled += contribution
        self.opups += 1

    def snapshot(self) -> dict:
        return {"pooled": self.pooled, "consumed": self.consumed, "opups": self.opups}

    def __repr__(self):
        return f"BudgetMeter(pooled={self.pooled}, consumed={self.consumed}, opups={self.opups})"


def charge(meter: BudgetMeter, units: int) -> BudgetMeter:
    meter.charge(units)
    return meter


def opup(meter: BudgetMeter, costs: CostTable = DEFAULT_COSTS) -> BudgetMeter:
    """Pool one budget call's allotment into ``meter``; the call itself is free."""
    meter.add_opup(costs.opup_contribution)
    return meter


def app_address(app_id: int) -> bytes:
    return hashlib.sha256(b"appID" + app_id.to_bytes(8, "big")).digest()


def named_address(label: str) -> bytes:
    """Deterministic 32-byte address for simulator actors."""
    return hashlib.sha256(b"obscura/account/" + label.encode()).digest()


# -- transactions ----------------------------------------------------------

@dataclass(frozen=True)
class Payment:
    sender: bytes
    receiver: bytes
    amount: int
    fee: int = MIN_FEE

    kind = "pay"

    def to_dict(self) -> dict:
        return {"type": "pay", "sender": self.sender.hex(), "receiver": self.receiver.hex(),
                "amount": self.amount, "fee": self.fee}


@dataclass(frozen=True)
class AppCall:
    sender: bytes
    app_id: int
    method: str
    args: tuple = ()
    box_refs: tuple = ()
    fee: int = MIN_FEE

    kind = "appl"

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(bytes(a) for a in self.args))
        object.__setattr__(self, "box_refs", tuple(bytes(k) for k in self.box_refs))

    def to_dict(self) -> dict:
        return {"type": "appl", "sender": self.sender.hex(), "app_id": self.app_id,
                "method": self.method, "args": [a.hex() for a in self.args],
                "box_refs": [k.hex() for k in self.box_refs], "fee": self.fee}


# -- state -------------------------------------------------------------------

@dataclass
class LedgerState:
    round: int = 0
    accounts: dict = field(default_factory=dict)
    boxes: dict = field(default_factory=dict)
    app_globals: dict = field(default_factory=lambda: {"deposit_counter": 0})
    log: list = field(default_factory=list)
    apps: dict = field(default_factory=dict)
    fees_collected: int = 0
    mbr_locked: int = 0

    def copy(self) -> "LedgerState":
        return copy.deepcopy(self)

    def balance(self, address: bytes) -> int:
        return self.accounts.get(address, 0)

    def total_supply(self) -> int:
        return sum(self.accounts.values()) + self.fees_collected + self.mbr_locked

    def debit(self, address: bytes, amount: int):
        have = self.accounts.get(address, 0)
        if amount > have:
            raise InsufficientBalance(f"{address.hex()[:16]} holds {have}, needs {amount}")
        self.accounts[address] = have - amount

    def credit(self, address: bytes, amount: int):
        self.accounts[address] = self.accounts.get(address, 0) + amount


def genesis(allocations: Mapping[bytes, int] = (), apps: Mapping[int, str] = ()) -> LedgerState:
    state = LedgerState()
    for addr, amount in dict(allocations).items():
        if amount < 0:
            raise ValueError("negative allocation")
        state.accounts[bytes(addr)] = amount
    state.apps = {int(k): v for k, v in dict(apps).items()}
    return state


def advance(state: LedgerState, rounds: int) -> LedgerState:
    if rounds < 0:
        raise ValueError("rounds must be non-negative")
    new = state.copy()
    new.round += rounds
    return new


def _check_key(key: bytes):
    if not 1 <= len(key) <= MAX_BOX_KEY:
        raise KeyTooLong(f"box key must be 1..{MAX_BOX_KEY} bytes, got {len(key)}")


def box_write(state: LedgerState, key: bytes, value: bytes, payer: bytes | None = None) -> LedgerState:
    """Create a box in place; ``payer`` funds the minimum-balance deposit."""
    _check_key(key)
    if key in state.boxes:
        raise BoxAlreadyExists(key.hex())
    if payer is not None:
        state.debit(payer, BOX_MBR)
        state.mbr_locked += BOX_MBR
    state.boxes[bytes(key)] = bytes(value)
    return state


def box_lookup(state: LedgerState, key: bytes):
    return state.boxes.get(bytes(key))


# -- execution -------------------------------------------------------------

AppHandler = Callable[["ExecContext", AppCall], None]


class ExecContext:
    """What an application call sees while it runs against the scratch state."""

    def __init__(self, state: LedgerState, group: Sequence, index: int,
                 costs: CostTable = DEFAULT_COSTS):
        self.state = state
        self.group = group
        self.index = index
        self.costs = costs
        self.meter = BudgetMeter(costs.base_budget)
        self.inner: list = []
        self.events: list = []

    @property
    def txn(self):
        return self.group[self.index]

    def charge(self, units: int):
        self.meter.charge(units)

    def opup(self, app_id: int):
        if self.state.apps.get(app_id) != "opup":
            raise UnknownApp(f"app {app_id} is not a registered budget app")
        self.meter.add_opup(self.costs.opup_contribution)
        self.inner.append({"type": "appl", "app_id": app_id, "method": "opup"})

    def pay(self, sender: bytes, receiver: bytes, amount: int):
        self.state.debit(sender, amount)
        self.state.credit(receiver, amount)
        self.inner.append({"type": "pay", "sender": sender.hex(),
                           "receiver": receiver.hex(), "amount": amount})

    def box_write(self, key: bytes, value: bytes, payer: bytes | None = None):
        box_write(self.state, key, value, payer)

    def box_lookup(self, key: bytes):
        return box_lookup(self.state, key)

    def emit(self, event: dict):
        self.events.append(event)


def _reason(exc: Exception) -> str:
    return getattr(exc, "code", type(exc).__name__)


def submit_group(state: LedgerState, group: Sequence, apps: Mapping[int, AppHandler]):
    """Execute ``group`` atomically.

    Returns ``(new_state, receipt)``.  On the first failing assertion raises
    GroupRejected; ``state`` itself is never mutated.
    """
    if not group:
        raise GroupRejected("EmptyGroup", None, "a group needs at least one transaction")
    scratch = state.copy()
    inner_count = 0
    events = []
    budgets = []
    meter = None
    for i, txn in enumerate(group):
        meter = None
        try:
            if txn.fee < 0:
                raise InsufficientFee("negative fee")
            scratch.debit(txn.sender, txn.fee)
            scratch.fees_collected += txn.fee
            if isinstance(txn, Payment):
                if txn.amount < 0:
                    raise LedgerError("negative amount")
                scratch.debit(txn.sender, txn.amount)
                scratch.credit(txn.receiver, txn.amount)
            elif isinstance(txn, AppCall):
                kind = scratch.apps.get(txn.app_id)
                if kind is None:
                    raise UnknownApp(f"app {txn.app_id} does not exist")
                ctx = ExecContext(scratch, group, i)
                meter = ctx.meter
                if kind != "opup":
                    handler = apps.get(txn.app_id)
                    if handler is None:
                        raise UnknownApp(f"no logic registered for app {txn.app_id}")
                    handler(ctx, txn)
                inner_count += len(ctx.inner)
                events.extend(ctx.events)
                budgets.append({"index": i, "app_id": txn.app_id, **ctx.meter.snapshot()})
            else:
                raise LedgerError(f"unsupported transaction {type(txn).__name__}")
        except ObscuraError as exc:
            raise GroupRejected(_reason(exc), i, str(exc),
                                meter.snapshot() if meter is not None else None) from exc

    required = MIN_FEE * (len(group) + inner_count)
    paid = sum(t.fee for t in group)
    if paid < required:
        raise GroupRejected("InsufficientFee", None,
                            f"group pays {paid}, pooled minimum is {required}")

    scratch.round += 1
    receipt = {
        "round": scratch.round,
        "txns": [t.to_dict() for t in group],
        "inner_count": inner_count,
        "fees": paid,
        "budgets": budgets,
        "events": events,
    }
    scratch.log.append(receipt)
    return scratch, receipt


# -- persistence -------------------------------------------------------------

def to_document(state: LedgerState) -> dict:
    return {
        "round": state.round,
        "accounts": {a.hex(): b for a, b in state.accounts.items()},
        "boxes": {k.hex(): v.hex() for k, v in state.boxes.items()},
        "app_globals": dict(state.app_globals),
        "log": state.log,
        "apps": {str(k): v for k, v in state.apps.items()},
        "fees_collected": state.fees_collected,
        "mbr_locked": state.mbr_locked,
    }


def persist(state: LedgerState) -> str:
    return json.dumps(to_document(state), sort_keys=True, separators=(",", ":"))


def _int(v, what):
    if not isinstance(v, int) or isinstance(v, bool) or v < 0:
        raise MalformedDocument(f"{what} must be a non-negative integer")
    return v


def load(document) -> LedgerState:
    try:
        doc = json.loads(document) if isinstance(document, (str, bytes)) else document
    except ValueError as exc:
        raise MalformedDocument(f"not JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise MalformedDocument("top level must be an object")
    try:
        state = LedgerState(
            round=_int(doc["round"], "round"),
            accounts={bytes.fromhex(a): _int(b, "balance") for a, b in doc["accounts"].items()},
            boxes={bytes.fromhex(k): bytes.fromhex(v) for k, v in doc["boxes"].items()},
            app_globals={str(k): _int(v, k) for k, v in doc["app_globals"].items()},
            log=list(doc["log"]),
            apps={int(k): str(v) for k, v in doc.get("apps", {}).items()},
            fees_collected=_int(doc.get("fees_collected", 0), "fees_collected"),
            mbr_locked=_int(doc.get("mbr_locked", 0), "mbr_locked"),
        )
    except (KeyError, AttributeError, TypeError, ValueError) as exc:
        raise MalformedDocument(f"bad ledger document: {exc!r}") from None
    for k in state.boxes:
        if not 1 <= len(k) <= MAX_BOX_KEY:
            raise MalformedDocument("box key length out of range")
    return state


__all__ = [
    "AppCall", "BOX_MBR", "BudgetMeter", "ContractError", "CostTable", "DEFAULT_COSTS",
    "ExecContext", "LedgerState", "MIN_FEE", "Payment", "advance", "app_address",
    "box_lookup", "box_write", "charge", "genesis", "load", "named_address", "opup", "persist",
    "submit_group", "to_document",
]
