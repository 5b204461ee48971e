"""BN254 (alt_bn128) G1 arithmetic.

Short Weierstrass curve y^2 = x^3 + 3 over F_p with prime order q and
cofactor 1, so every on-curve point is in the signing subgroup.  Points are
immutable affine values; the heavy lifting happens in Jacobian coordinates
and is normalised once per multiplication.

Not constant time.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from functools import lru_cache
from math import isqrt

from .errors import CoordinateOutOfRange, IdentityNotSerializable, NotOnCurve, WrongLength

FIELD_MODULUS = 21888242871839275222246405745257275088696311157297823662689037894645226208583
CURVE_ORDER = 21888242871839275222246405745257275088548364400416034343698204186575808495617
CURVE_B = 3

CHALLENGE_MASK = (1 << 255) - 1
H_DOMAIN_TAG = b"Obscura/H/v1"

POINT_SIZE = 64
SCALAR_SIZE = 32

q = CURVE_ORDER

try:  # gmpy2 roughly halves the cost of the Jacobian formulas
    from gmpy2 import invert as _invert, mpz as _mpz
except ImportError:  # pragma: no cover
    p = FIELD_MODULUS

    def _invert(a, m):
        return pow(a, -1, m)
else:
    p = _mpz(FIELD_MODULUS)


@dataclass(frozen=True)
class Point:
    x: int
    y: int
    is_identity: bool = False

    def __add__(self, other: "Point") -> "Point":
        return point_add(self, other)

    def __neg__(self) -> "Point":
        if self.is_identity:
            return self
        return Point(self.x, FIELD_MODULUS - self.y if self.y else 0)

    def __mul__(self, k: int) -> "Point":
        return point_mul(self, k)

    __rmul__ = __mul__

    def to_bytes(self) -> bytes:
        return serialize_point(self)

    def hex(self) -> str:
        return serialize_point(self).hex()

    def __repr__(self):
        if self.is_identity:
            return "Point(identity)"
        return f"Point(x=0x{self.x:064x}, y=0x{self.y:064x})"


IDENTITY = Point(0, 0, True)
G = Point(1, 2)


def is_on_curve(P: Point) -> bool:
    if P.is_identity:
        return True
    if not (0 <= P.x < p and 0 <= P.y < p):
        return False
    return (P.y * P.y - P.x * P.x * P.x - CURVE_B) % p == 0


# -- scalars ---------------------------------------------------------------

def scalar_add(a: int, b: int) -> int:
    return (a + b) % q


def scalar_sub(a: int, b: int) -> int:
    return (a - b) % q


def scalar_mul(a: int, b: int) -> int:
    return (a * b) % q


def scalar_arith(a: int, b: int, op: str) -> int:
    """Dispatch helper mirroring ``add``/``sub``/``mul`` by name."""
    try:
        fn = {"add": scalar_add, "sub": scalar_sub, "mul": scalar_mul}[op]
    except KeyError:
        raise ValueError(f"unknown scalar op {op!r}") from None
    return fn(a, b)


def scalar_to_bytes(k: int) -> bytes:
    return k.to_bytes(SCALAR_SIZE, "big")


# -- Jacobian internals ----------------------------------------------------
# (X, Y, Z) represents (X/Z^2, Y/Z^3); Z == 0 is the identity.

_JAC_IDENTITY = (1, 1, 0)


def _jac_double(P):
    X1, Y1, Z1 = P
    if Z1 == 0 or Y1 == 0:
        return _JAC_IDENTITY
    A = X1 * X1 % p
    B = Y1 * Y1 % p
    C = B * B % p
    D = 2 * ((X1 + B) * (X1 + B) - A - C) % p
    E = 3 * A % p
    X3 = (E * E - 2 * D) % p
    Y3 = (E * (D - X3) - 8 * C) % p
    Z3 = 2 * Y1 * Z1 % p
    return (X3, Y3, Z3)


def _jac_add(P, Q):
    X1, Y1, Z1 = P
    X2, Y2, Z2 = Q
    if Z1 == 0:
        return Q
    if Z2 == 0:
        return P
    Z1Z1 = Z1 * Z1 % p
    Z2Z2 = Z2 * Z2 % p
    U1 = X1 * Z2Z2 % p
    U2 = X2 * Z1Z1 % p
    S1 = Y1 * Z2 * Z2Z2 % p
    S2 = Y2 * Z1 * Z1Z1 % p
    if U1 == U2:
        if S1 != S2:
            return _JAC_IDENTITY
        return _jac_double(P)
    H = U2 - U1
    I = (2 * H) * (2 * H) % p
    J = H * I % p
    r = 2 * (S2 - S1) % p
    V = U1 * I % p
    X3 = (r * r - J - 2 * V) % p
    Y3 = (r * (V - X3) - 2 * S1 * J) % p
    Z3 = ((Z1 + Z2) * (Z1 + Z2) - Z1Z1 - Z2Z2) * H % p
    return (X3, Y3, Z3)


def _jac_add_affine(P, x2, y2):
    """Mixed addition: P Jacobian, (x2, y2) affine non-identity."""
    X1, Y1, Z1 = P
    if Z1 == 0:
        return (x2, y2, 1)
    Z1Z1 = Z1 * Z1 % p
    U2 = x2 * Z1Z1 % p
    S2 = y2 * Z1 * Z1Z1 % p
    if U2 == X1:
        if S2 != Y1:
            return _JAC_IDENTITY
        return _jac_double(P)
    H = (U2 - X1) % p
    HH = H * H % p
    I = 4 * HH % p
    J = H * I % p
    r = 2 * (S2 - Y1) % p
    V = X1 * I % p
    X3 = (r * r - J - 2 * V) % p
    Y3 = (r * (V - X3) - 2 * Y1 * J) % p
    Z3 = ((Z1 + H) * (Z1 + H) - Z1Z1 - HH) % p
    return (X3, Y3, Z3)


def _to_affine(P) -> Point:
    X, Y, Z = P
    if Z == 0:
        return IDENTITY
    zinv = _invert(Z, p)
    zinv2 = zinv * zinv % p
    return Point(int(X * zinv2 % p), int(Y * zinv2 * zinv % p))


def _to_jac(P: Point):
    if P.is_identity:
        return _JAC_IDENTITY
    return (P.x, P.y, 1)


# -- group law -------------------------------------------------------------

def point_add(P: Point, Q: Point) -> Point:
    if P.is_identity:
        return Q
    if Q.is_identity:
        return P
    return _to_affine(_jac_add_affine(_to_jac(P), Q.x, Q.y))


def point_neg(P: Point) -> Point:
    return -P


_WINDOW = 4


class _FixedBaseTable:
    """Precomputed d * 16^i * B for every nibble position i and digit d."""

    def __init__(self, base: Point):
        rows = []
        acc = _to_jac(base)
        for _ in range(64):
            row = [None]
            cur = acc
            for _d in range(1, 16):
                row.append(cur)
                cur = _jac_add(cur, acc)
            rows.append([None] + [_to_affine(j) for j in row[1:]])
            for _ in range(_WINDOW):
                acc = _jac_double(acc)
        self.rows = rows

    def mul(self, k: int):
        acc = _JAC_IDENTITY
        i = 0
        while k:
            d = k & 15
            if d:
                pt = self.rows[i][d]
                acc = _jac_add_affine(acc, pt.x, pt.y)
            k >>= 4
            i += 1
        return acc


@lru_cache(maxsize=8)
def _table_for(base: Point) -> _FixedBaseTable:
    return _FixedBaseTable(base)


# GLV endomorphism: (x, y) -> (beta*x, y) acts as multiplication by LAMBDA.
GLV_BETA = 2203960485148121921418603742825762020974279258880205651966
GLV_LAMBDA = 4407920970296243842393367215006156084916469457145843978461


def _glv_basis(n, lam):
    # extended Euclid on (n, lam); stop around sqrt(n)
    r0, r1 = n, lam
    t0, t1 = 0, 1
    bound = isqrt(n)
    while r1 >= bound:
        qt = r0 // r1
        r0, r1 = r1, r0 - qt * r1
        t0, t1 = t1, t0 - qt * t1
    # now r0 >= sqrt(n) > r1
    a1, b1 = r1, -t1
    qt = r0 // r1
    r2, t2 = r0 - qt * r1, t0 - qt * t1
    if r0 * r0 + t0 * t0 <= r2 * r2 + t2 * t2:
        a2, b2 = r0, -t0
    else:
        a2, b2 = r2, -t2
    return a1, b1, a2, b2


_A1, _B1, _A2, _B2 = _glv_basis(CURVE_ORDER, GLV_LAMBDA)


def _round_div(a, b):
    return (2 * a + b) // (2 * b)


def glv_split(k: int):
    """Return (k1, k2) with k = k1 + k2 * GLV_LAMBDA (mod q), both about 128 bits."""
    c1 = _round_div(_B2 * k, q)
    c2 = _round_div(-_B1 * k, q)
    k1 = k - c1 * _A1 - c2 * _A2
    k2 = -c1 * _B1 - c2 * _B2
    return k1, k2


def _window_table(x, y):
    tbl = [_JAC_IDENTITY, (x, y, 1)]
    for _ in range(14):
        tbl.append(_jac_add_affine(tbl[-1], x, y))
    return tbl


def _jac_mul_var(P: Point, k: int):
    k1, k2 = glv_split(k)
    y1 = P.y if k1 >= 0 else p - P.y
    y2 = P.y if k2 >= 0 else p - P.y
    k1, k2 = abs(k1), abs(k2)
    t1 = _window_table(P.x, y1)
    t2 = _window_table(GLV_BETA * P.x % p, y2)
    acc = _JAC_IDENTITY
    nibbles = (max(k1.bit_length(), k2.bit_length()) + 3) // 4
    for i in range(nibbles - 1, -1, -1):
        if acc[2]:
            acc = _jac_double(_jac_double(_jac_double(_jac_double(acc))))
        shift = 4 * i
        d = (k1 >> shift) & 15
        if d:
            acc = _jac_add(acc, t1[d])
        d = (k2 >> shift) & 15
        if d:
            acc = _jac_add(acc, t2[d])
    return acc


def point_mul(P: Point, k: int) -> Point:
    """Return k*P with k taken modulo the group order."""
    k %= q
    if k == 0 or P.is_identity:
        return IDENTITY
    if P == G or P == H:
        return _to_affine(_table_for(P).mul(k))
    return _to_affine(_jac_mul_var(P, k))


def mul_add(a: int, A: Point, b: int, B: Point) -> Point:
    """Return a*A + b*B with a single normalisation at the end."""
    acc = _JAC_IDENTITY
    for k, P in ((a % q, A), (b % q, B)):
        if k == 0 or P.is_identity:
            continue
        if P == G or P == H:
            part = _table_for(P).mul(k)
        else:
            part = _jac_mul_var(P, k)
        acc = _jac_add(acc, part)
    return _to_affine(acc)


# -- encoding ---------------------------------------------------------------

def serialize_point(P: Point) -> bytes:
    if P.is_identity:
        raise IdentityNotSerializable("the identity has no 64-byte encoding")
    return P.x.to_bytes(32, "big") + P.y.to_bytes(32, "big")


def deserialize_point(data: bytes) -> Point:
    if len(data) != POINT_SIZE:
        raise WrongLength(f"expected {POINT_SIZE} bytes, got {len(data)}")
    x = int.from_bytes(data[:32], "big")
    y = int.from_bytes(data[32:], "big")
    if x >= p or y >= p:
        raise CoordinateOutOfRange("coordinate not below the field modulus")
    P = Point(x, y)
    if not is_on_curve(P):
        raise NotOnCurve("coordinates fail y^2 = x^3 + 3")
    return P


# -- generators and hashing ---------------------------------------------------

def _sqrt(a: int):
    # p = 3 mod 4
    r = pow(a, (FIELD_MODULUS + 1) // 4, FIELD_MODULUS)
    return r if r * r % FIELD_MODULUS == a % FIELD_MODULUS else None


def derive_generator_h() -> Point:
    """Try-and-increment nothing-up-my-sleeve point, even y."""
    counter = 0
    while True:
        digest = hashlib.sha256(H_DOMAIN_TAG + counter.to_bytes(4, "big")).digest()
        x = int.from_bytes(digest, "big") % FIELD_MODULUS
        y = _sqrt((x * x * x + CURVE_B) % p)
        if y is not None:
            y = int(y)
            if y & 1:
                y = FIELD_MODULUS - y
            return Point(int(x), y)
        counter += 1


H = derive_generator_h()


def hash_to_challenge(m: bytes, L: Point, R: Point) -> int:
    digest = hashlib.sha256(m + serialize_point(L) + serialize_point(R)).digest()
    return int.from_bytes(digest, "big") & CHALLENGE_MASK
