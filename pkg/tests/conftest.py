import random
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from obscura import client, contract, ledger, lsag  # noqa: E402


def aff(P):
    """Package point -> oracle tuple."""
    return None if P.is_identity else (P.x, P.y)


@pytest.fixture
def rng():
    return random.Random(20240611)


ALICE = ledger.named_address("alice")
RELAYER = ledger.named_address("relayer")


@pytest.fixture
def pool(rng):
    """A deployed ledger holding eight deposits; returns (state, keypairs)."""
    state = contract.deploy({ALICE: 50_000_000, RELAYER: 50_000_000})
    keys = [lsag.keygen(rng) for _ in range(8)]
    for kp in keys:
        state, _ = contract.submit(state, client.make_deposit(kp, ALICE))
    return state, keys
