"""Obscura: LSAG ring-signature mixer on a simulated budget-metered ledger."""

from .curve import G, H, IDENTITY, Point, hash_to_challenge, point_add, point_mul
from .lsag import KeyPair, LsagSignature, Ring, audit_disclosure, keygen, sign, verify
from .codec import pack, unpack

__version__ = "0.1.0"
