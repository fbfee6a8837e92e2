import pytest

from xlumi.crypto import generate_keypair
from xlumi.ledger import Ledger


class Parties:
    def __init__(self, scheme="ed25519", fee=1, bob_main=100, bob_contract=50):
        self.ledger = Ledger(fee=fee, scheme=scheme)
        self.keys = {
            name: generate_keypair(bytes([i + 1]) * 32, scheme)
            for i, name in enumerate(("bob", "alice", "eve"))
        }
        self.bob = self.ledger.open_account(self.keys["bob"].public_key, main=bob_main, contract=bob_contract)
        self.alice = self.ledger.open_account(self.keys["alice"].public_key, main=100)
        self.eve = self.ledger.open_account(self.keys["eve"].public_key, main=100, contract=50)


@pytest.fixture
def parties():
    return Parties()


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
