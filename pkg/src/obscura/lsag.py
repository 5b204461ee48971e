"""LSAG ring signatures over BN254 G1.

The message ``m`` is always the 32-byte recipient address.  Challenges are
the masked SHA-256 values from :func:`obscura.curve.hash_to_challenge`; they
can exceed the group order and are reduced only where they act as scalars.
"""

from __future__ import annotations

import secrets
from dataclasses import dataclass, field
from typing import Sequence

from .curve import G, H, Point, hash_to_challenge, mul_add, point_mul, q
from .errors import (
    BadIndex,
    DuplicateMember,
    IndexMismatch,
    InvalidRing,
    LengthMismatch,
    ZeroScalar,
)

MAX_RING = 255
MESSAGE_SIZE = 32


def default_rng():
    """OS-entropy backed source; the only one production paths should use."""
    return secrets.SystemRandom()


@dataclass(frozen=True)
class KeyPair:
    x: int = field(repr=False)
    P: Point
    I: Point

    @classmethod
    def from_secret(cls, x: int) -> "KeyPair":
        x %= q
        if x == 0:
            raise ZeroScalar("secret scalar must be non-zero")
        return cls(x, point_mul(G, x), point_mul(H, x))


@dataclass(frozen=True)
class Ring:
    members: tuple

    def __init__(self, members: Sequence[Point]):
        members = tuple(members)
        if not 1 <= len(members) <= MAX_RING:
            raise InvalidRing(f"ring size {len(members)} outside 1..{MAX_RING}")
        if any(P.is_identity for P in members):
            raise InvalidRing("ring contains the identity point")
        if len(set(members)) != len(members):
            raise DuplicateMember("ring members must be distinct")
        object.__setattr__(self, "members", members)

    @property
    def n(self) -> int:
        return len(self.members)

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def __getitem__(self, i):
        return self.members[i]

    def index(self, P: Point) -> int:
        return self.members.index(P)


@dataclass(frozen=True)
class LsagSignature:
    c0: int
    s: tuple

    def __post_init__(self):
        object.__setattr__(self, "s", tuple(self.s))


def keygen(rng=None) -> KeyPair:
    rng = rng or default_rng()
    return KeyPair.from_secret(rng.randrange(1, q))


def compute_key_image(x: int) -> Point:
    if x % q == 0:
        raise ZeroScalar("key image of the zero scalar is undefined")
    return point_mul(H, x)


def _check_message(m: bytes):
    if len(m) != MESSAGE_SIZE:
        raise LengthMismatch(f"message must be {MESSAGE_SIZE} bytes")


def sign(x: int, ring: Ring, pi: int, m: bytes, rng=None, trace=None) -> LsagSignature:
    """Sign ``m`` on behalf of ``ring`` with the secret sitting at ``pi``.

    ``trace``, when a dict, receives the nonce and the per-index (L, R) pairs;
    it exists for tests that check the closure algebra.
    """
    rng = rng or default_rng()
    if not isinstance(ring, Ring):
        ring = Ring(ring)
    n = ring.n
    if not 0 <= pi < n:
        raise BadIndex(f"signer index {pi} outside ring of size {n}")
    x %= q
    if x == 0:
        raise ZeroScalar("secret scalar must be non-zero")
    if point_mul(G, x) != ring[pi]:
        raise IndexMismatch(f"ring member {pi} is not the signer's commitment")
    _check_message(m)
    I = point_mul(H, x)

    alpha = rng.randrange(1, q)
    c = [0] * n
    s = [0] * n
    L = point_mul(G, alpha)
    R = point_mul(H, alpha)
    if trace is not None:
        trace["alpha"] = alpha
        trace["pi"] = pi
        trace["points"] = {pi: (L, R)}
    c[(pi + 1) % n] = hash_to_challenge(m, L, R)
    for step in range(1, n):
        i = (pi + step) % n
        s[i] = rng.randrange(q)
        L = mul_add(s[i], G, c[i], ring[i])
        R = mul_add(s[i], H, c[i], I)
        if trace is not None:
            trace["points"][i] = (L, R)
        c[(i + 1) % n] = hash_to_challenge(m, L, R)
    s[pi] = (alpha - c[pi] * x) % q
    return LsagSignature(c[0], s)


def verify(ring: Ring, I: Point, m: bytes, sig: LsagSignature, trace=None) -> bool:
    """Return True iff the challenge chain closes back on ``sig.c0``."""
    if not isinstance(ring, Ring):
        ring = Ring(ring)
    if len(sig.s) != ring.n:
        raise LengthMismatch(f"{len(sig.s)} responses for a ring of {ring.n}")
    if I.is_identity:
        raise InvalidRing("key image is the identity")
    _check_message(m)
    c = sig.c0
    for i, P in enumerate(ring):
        L = mul_add(sig.s[i], G, c, P)
        R = mul_add(sig.s[i], H, c, I)
        if trace is not None:
            trace.append((L, R))
        if L.is_identity or R.is_identity:
            return False
        c = hash_to_challenge(m, L, R)
    return c == sig.c0


def audit_disclosure(x: int, P: Point, I: Point) -> bool:
    """Check that a disclosed secret opens both a commitment and a key image."""
    if x % q == 0:
        raise ZeroScalar("disclosed scalar must be non-zero")
    return point_mul(G, x) == P and point_mul(H, x) == I

