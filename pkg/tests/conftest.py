import sys

import pytest

from consentry.engine import Engine
from consentry.ledger import LedgerStore
from consentry.registry import ConsentRegistry
from consentry.scenarios import T0, seed_grimes_fixture


class State:
    """One registry + ledger + engine rooted at a temp directory."""

    def __init__(self, root):
        self.root = root
        self.ledger = LedgerStore(root / "ledger")
        self.registry = ConsentRegistry(root / "registry.jsonl", ledger=self.ledger)
        self.engine = Engine(self.registry, self.ledger)

    def reopened(self) -> "State":
        return State(self.root)


@pytest.fixture
def state(tmp_path):
    return State(tmp_path)


@pytest.fixture
def grimes_state(tmp_path):
    s = State(tmp_path)
    seed_grimes_fixture(s.registry)
    return s


@pytest.fixture
def state_factory():
    def build(root):
        root.mkdir(parents=True, exist_ok=True)
        return State(root)
    return build


@pytest.fixture
def t0():
    return T0


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    module = (sys.modules.get("test_acceptance")
              or sys.modules.get("tests.test_acceptance"))
    lines = getattr(module, "CRITERION_LINES", None)
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for line in lines:
        terminalreporter.write_line(line)
