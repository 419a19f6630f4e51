import numpy as np
import pytest

from fibernlc.channel import LinkConfig, TxConfig


def linear_link(**kw) -> LinkConfig:
    """Lossless, noiseless, dispersive-only link."""
    params = dict(span_count=2, gamma=0.0, attenuation=0.0, ase=False)
    params.update(kw)
    return LinkConfig(**params)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def tx():
    return TxConfig(launch_power=0.0, seed=5)


# criterion number -> [(label, passed, detail)], filled by the acceptance tests
ACCEPTANCE: dict[int, list[tuple[str, bool, str]]] = {}


@pytest.fixture
def record():
    """Log one acceptance check and return whether it passed."""

    def _record(criterion: int, label: str, passed, detail: str) -> bool:
        passed = bool(passed)
        ACCEPTANCE.setdefault(criterion, []).append((label, passed, detail))
        print(f"criterion {criterion} [{label}] {'PASS' if passed else 'FAIL'}: {detail}")
        return passed

    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        checks = ACCEPTANCE[number]
        ok = sum(p for _, p, _ in checks)
        line = f"criterion {number}: {'PASS' if ok == len(checks) else 'FAIL'} ({ok}/{len(checks)} checks)"
        terminalreporter.write_line(line)
        for label, p, detail in checks:
            terminalreporter.write_line(f"    {'ok  ' if p else 'FAIL'} {label}: {detail}")
