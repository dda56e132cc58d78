import warnings

import pytest

_ACCEPTANCE = pytest.StashKey[list]()

from stifftomo import IndenterShape, InclusionParams, MaterialParams
from stifftomo.forward import GridSpec


@pytest.fixture
def cell():
    """Incompressible soft bulk probed by a 2 um paraboloid."""
    return MaterialParams(1e4, 0.5)


@pytest.fixture
def sphere_tip():
    return IndenterShape.sphere(2e-6)


@pytest.fixture
def nucleus():
    return InclusionParams(d=3e-6, x0=(0.4e-6, -0.3e-6), r_eps=0.9e-6, alpha=10.0, nu0=0.5)


@pytest.fixture
def grid(nucleus):
    return GridSpec.around(nucleus)


@pytest.fixture
def quiet():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        yield


@pytest.fixture
def criterion(request):
    """Record one PASS/FAIL line per acceptance criterion and print it."""
    lines = request.config.stash.setdefault(_ACCEPTANCE, [])

    def report(number, name, ok, detail):
        line = f"criterion {number:>2} [{'PASS' if ok else 'FAIL'}] {name}: {detail}"
        lines.append(line)
        print(line)
        return ok

    return report


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
