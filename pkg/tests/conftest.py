import pytest

from alpsim.config import reference_config
from alpsim.recipe import parse_recipe
from alpsim.solver import ReactorState, run_recipe

ACCEPTANCE_RESULTS: list[tuple[str, bool, str]] = []


def record_acceptance(name: str, passed: bool, detail: str = "") -> None:
    ACCEPTANCE_RESULTS.append((name, passed, detail))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in ACCEPTANCE_RESULTS:
        status = "PASS" if passed else "FAIL"
        suffix = f"  ({detail})" if detail else ""
        terminalreporter.write_line(f"{status}  {name}{suffix}")

# Tab-separated recipe pulsing B (valve 2) and C (valve 3): one setup
# block, then five pulse/purge cycles.  3 + 5*4 = 23 segments, 120 s.
TABLE_RECIPE = (
    "1\tM\t1\t50\t0\t# carrier to 50 sccm\n"
    "\tV\t2\t0\t0\t# close valve 2\n"
    "\tV\t3\t0\t10\t# close valve 3, settle\n"
    "5\tV\t2\t1\t1\t# open valve 2, wait 1s\n"
    "\tV\t2\t0\t10\t# close valve 2, wait 10s\n"
    "\tV\t3\t1\t1\t# open valve 3, wait 1s\n"
    "\tV\t3\t0\t10\t# close valve 3, wait 10s\n"
)

# Space-aligned example with bubbler heating and two pulse blocks.
# 7 + 5*2 + 3*2 = 23 segments, 10 + 5*11 + 3*12 = 101 s.
EXAMPLE_RECIPE = """
1   M   1   50  0.      # Set purge gas to 50 sccm, wait 0s.
    T   0   500 0.      # set reactor temperature (number 0) to 500K
    T   1   350 0.      # set temperature of bubbler 1 to 350 K
    V   1   0   0.      # make sure valve 1 is closed
    V   2   0   0.      # make sure valve 2 is closed
    V   3   0   0.      # make sure valve 3 is closed
    V   4   0   10.     # make sure valve 4 is closed, wait 10s
5   V   1   1   1.      # open valve 1, wait 1s
    V   1   0   10.     # close valve 1, wait 10s
3   V   2   1   2.      # open valve 2, wait 2s
    V   2   0   10.     # close valve 2, wait 10s
"""


@pytest.fixture(scope="session")
def run1():
    return reference_config("run1")


@pytest.fixture(scope="session")
def run2():
    return reference_config("run2")


@pytest.fixture(scope="session")
def table_recipe_text():
    return TABLE_RECIPE


@pytest.fixture(scope="session")
def table_run(run2, table_recipe_text):
    """Executed Table recipe on a fresh run2 reactor; treat as read-only."""
    state = ReactorState.initial(run2)
    state, trace = run_recipe(state, parse_recipe(table_recipe_text), run2)
    return state, trace


@pytest.fixture(scope="session")
def example_recipe_text():
    return EXAMPLE_RECIPE
