import pytest

from pmuspill import samples
from pmuspill.attack.env import AttackEnv
from pmuspill.catalog import XmlStats
from pmuspill.pmu import EventDef, Persistence, Structural

MISP = EventDef(
    "BR_MISP_EXEC.ALL_BRANCHES", "BR_MISP_EXEC", 0x89, 0xFF,
    Persistence.SPECULATIVE_COUNTED, Structural.BRANCH_MISPREDICTED,
)
RETIRED = EventDef(
    "INST_RETIRED.ANY", "INST_RETIRED", 0xC0, 0x00,
    Persistence.RETIREMENT_COUNTED, Structural.INSTRUCTION_RETIRED,
)


@pytest.fixture(scope="session")
def sample_events():
    return samples.sample_events()


@pytest.fixture(scope="session")
def sample_stats():
    return XmlStats()


@pytest.fixture(scope="session")
def sample_iset(sample_events, sample_stats):
    return samples.sample_instructions(sample_events, stats=sample_stats)


@pytest.fixture
def misp_env():
    """Small environment with one vulnerable and one retirement-counted event."""
    return AttackEnv.with_events([MISP, RETIRED], seed=11)


# -- acceptance report -------------------------------------------------------

# criterion number -> [title, every test passed, details]
_CRITERIA: dict[int, list] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or (rep.when != "call" and not rep.failed):
        return
    number, title = mark.args
    entry = _CRITERIA.setdefault(number, [title, True, []])
    entry[1] = entry[1] and rep.passed
    entry[2] += [str(v) for k, v in item.user_properties if k == "detail"]


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for number in sorted(_CRITERIA):
        title, ok, details = _CRITERIA[number]
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {title}"
        terminalreporter.write_line(line + (f"  [{'; '.join(details)}]" if details else ""))
