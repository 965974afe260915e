"""Independent oracles in extended precision, kept apart from the package code."""
import mpmath
import pytest

from effcap import OnOffChannel

mpmath.mp.dps = 40


def onoff_alpha_mp(lam, mu, r, theta):
    lam, mu, r, theta = (mpmath.mpf(v) for v in (lam, mu, r, theta))
    x = mpmath.exp(r * theta)
    a = lam + mu * x
    b = (1 - lam - mu) * x
    return mpmath.log(a / 2 + mpmath.sqrt(a * a + 4 * b) / 2)


def perron_2x2_mp(m):
    a, b = (mpmath.mpf(v) for v in m[0])
    c, d = (mpmath.mpf(v) for v in m[1])
    tr, det = a + d, a * d - b * c
    return (tr + mpmath.sqrt(tr * tr - 4 * det)) / 2


@pytest.fixture
def ref_channel():
    return OnOffChannel(0.2, 0.6, 10.0)


_ACCEPTANCE = []


@pytest.fixture
def acceptance_record():
    """Collect one summary line per acceptance criterion."""
    def record(number, name, passed, detail):
        line = f"ACCEPTANCE {number} {'PASS' if passed else 'FAIL'} {name}: {detail}"
        _ACCEPTANCE.append(line)
        print(line)
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
