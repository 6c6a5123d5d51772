import numpy as np
import pytest

from decspray.field import FieldSpec


@pytest.fixture(params=[4, 8, 16], ids=["gf16", "gf256", "gf65536"])
def field(request):
    return FieldSpec(request.param)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_VERDICTS = pytest.StashKey[list]()


@pytest.fixture
def verdict(request, capsys):
    """Record one acceptance line; all lines are repeated in the terminal summary."""
    lines = request.config.stash.setdefault(_VERDICTS, [])

    def record(name: str, ok: bool, detail: str) -> bool:
        line = f"{name} {'PASS' if ok else 'FAIL'}: {detail}"
        lines.append(line)
        with capsys.disabled():
            print(f"\n{line}")
        return ok

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_VERDICTS, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[0][1:])):
            terminalreporter.write_line(line)
