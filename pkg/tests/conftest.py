import math

import numpy as np
import pytest

from bec_ecs.fock_core import fidelity

_ACCEPTANCE: list[tuple[str, bool | None, str]] = []


def padded_fidelity(a, target):
    """Fidelity after zero-padding ``target`` to the cutoffs of ``a``."""
    return fidelity(a, target.with_cutoffs({m.label: m.cutoff for m in a.modes}))


@pytest.fixture
def acceptance():
    def record(criterion: str, passed: bool | None, detail: str) -> None:
        """``passed=None`` marks a supplementary figure, not a verdict."""
        _ACCEPTANCE.append((criterion, None if passed is None else bool(passed), detail))

    return record


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for crit, ok, detail in sorted(_ACCEPTANCE, key=lambda e: e[0]):
        verdict = "INFO" if ok is None else ("PASS" if ok else "FAIL")
        terminalreporter.write_line(f"criterion {crit}: {verdict} | {detail}")


def random_unit(rng, dim):
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


TAU_PI_2 = math.pi / 2
