"""Packed proof wire format.

    [n: 1] [P_0 .. P_{n-1}: 64 each] [c0: 32] [s_0 .. s_{n-1}: 32 each]

for a total of 96n + 33 bytes.  Parsing is strict: the length must match the
declared ring size, every point must be on the curve, c0 must have its top
bit clear and every response must be a canonical scalar below q.
"""

from __future__ import annotations

from .curve import CHALLENGE_MASK, POINT_SIZE, SCALAR_SIZE, deserialize_point, q, serialize_point
from .errors import LengthMismatch, MalformedChallenge, NonCanonicalScalar, TruncatedPayload
from .lsag import MAX_RING, LsagSignature, Ring

HEADER_SIZE = 1
PER_MEMBER = POINT_SIZE + SCALAR_SIZE  # 96


def payload_size(n: int) -> int:
    return PER_MEMBER * n + SCALAR_SIZE + HEADER_SIZE


def pack(ring: Ring, sig: LsagSignature) -> bytes:
    n = len(ring)
    if not 1 <= n <= MAX_RING:
        raise LengthMismatch(f"ring size {n} does not fit the 1-byte header")
    if len(sig.s) != n:
        raise LengthMismatch(f"{len(sig.s)} responses for a ring of {n}")
    if not 0 <= sig.c0 <= CHALLENGE_MASK:
        raise MalformedChallenge("c0 must be a 255-bit value")
    out = bytearray([n])
    for P in ring:
        out += serialize_point(P)
    out += sig.c0.to_bytes(SCALAR_SIZE, "big")
    for s in sig.s:
        if not 0 <= s < q:
            raise NonCanonicalScalar("response not reduced mod q")
        out += s.to_bytes(SCALAR_SIZE, "big")
    return bytes(out)


def unpack(data: bytes) -> tuple[Ring, LsagSignature]:
    data = bytes(data)
    body = len(data) - SCALAR_SIZE - HEADER_SIZE
    if body < 0 or body % PER_MEMBER:
        raise TruncatedPayload(f"{len(data)} bytes is not 96n + 33 for any n")
    n = data[0]
    if n == 0 or body // PER_MEMBER != n:
        raise LengthMismatch(f"header declares n={n} but payload holds {body // PER_MEMBER}")

    off = HEADER_SIZE
    members = []
    for _ in range(n):
        members.append(deserialize_point(data[off:off + POINT_SIZE]))
        off += POINT_SIZE
    c0 = int.from_bytes(data[off:off + SCALAR_SIZE], "big")
    if c0 > CHALLENGE_MASK:
        raise MalformedChallenge("c0 has its top bit set")
    off += SCALAR_SIZE
    s = []
    for _ in range(n):
        v = int.from_bytes(data[off:off + SCALAR_SIZE], "big")
        if v >= q:
            raise NonCanonicalScalar("response scalar is not below q")
        s.append(v)
        off += SCALAR_SIZE
    return Ring(members), LsagSignature(c0, s)
