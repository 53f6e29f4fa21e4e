import numpy as np
import pytest

from mscdma.pulse import ChipPulse, RootRaisedCosine, Sinc, TypeA, TypeB


def sinc_pulse(gamma=1.0, r=1, tc=1.0):
    return ChipPulse(Sinc(gamma), tc, TypeA(r))


def rrc_pulse(rolloff=0.5, r=2, tc=1.0):
    return ChipPulse(RootRaisedCosine(rolloff), tc, TypeA(r))


def rrc_b(rolloff=0.5, tc=1.0):
    return ChipPulse(RootRaisedCosine(rolloff), tc, TypeB())


def sinc_time(t, gamma, tc=1.0):
    """Inverse transform of a flat sqrt(T_c/gamma) spectrum on |w| <= pi gamma/T_c."""
    t = np.asarray(t, dtype=float)
    with np.errstate(invalid="ignore", divide="ignore"):
        v = np.sqrt(tc / gamma) * np.sin(np.pi * gamma * t / tc) / (np.pi * t)
    return np.where(t == 0, np.sqrt(tc / gamma) * gamma / tc, v)


def rrc_time(t, rolloff, tc=1.0):
    """Closed-form unit-energy root-raised-cosine waveform."""
    x = np.asarray(t, dtype=float) / tc
    b = rolloff
    num = np.sin(np.pi * x * (1 - b)) + 4 * b * x * np.cos(np.pi * x * (1 + b))
    den = np.pi * x * (1 - (4 * b * x) ** 2)
    with np.errstate(invalid="ignore", divide="ignore"):
        v = num / den
    v = np.where(x == 0, 1 - b + 4 * b / np.pi, v)
    return v / np.sqrt(tc)


def smooth_taper(n, nmax):
    """1 on |n| <= nmax/2, infinitely smooth roll-off to 0 at nmax."""
    y = np.clip((np.abs(n) / nmax - 0.5) / 0.5, 0.0, 1.0)
    out = np.zeros_like(y)
    inner = (y > 0) & (y < 1)
    yi = y[inner]
    with np.errstate(over="ignore"):
        out[inner] = 1.0 / (1.0 + np.exp(1.0 / (1.0 - yi) - 1.0 / yi))
    out[y == 0] = 1.0
    return out


def dtft_oracle(time_fn, Omega, tau, tc=1.0, nmax=40000):
    """Tapered brute-force sum of exp(-j Omega n) x(n T_c + tau)."""
    n = np.arange(-nmax, nmax + 1)
    w = smooth_taper(n, nmax) * time_fn(n * tc + tau)
    return np.sum(w * np.exp(-1j * Omega * n))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE = []


def record(criterion, ok, detail):
    """Remember one acceptance verdict; printed in the terminal summary."""
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {criterion}: {detail}"
    ACCEPTANCE.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
