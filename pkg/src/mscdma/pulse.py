"""Chip pulses and the spectral quantities derived from them.

All spectra are expressed at the front-end output.  Normalizations follow
the convention under which a sinc pulse of bandwidth ``1/(2 T_c)`` has flat
spectrum ``sqrt(T_c)`` on ``|w| <= pi/T_c``, its folded chip-rate transform
is identically ``1/sqrt(T_c)``, and every unit-energy pulse has
``energy_coefficient(pulse, 1) == 1``.
"""

from dataclasses import dataclass, field
from math import comb
from typing import NamedTuple, Union

import numpy as np

from .quadrature import integrate_piecewise

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class Sinc:
    """Flat spectrum of width ``gamma`` times the Nyquist band."""

    gamma: float = 1.0


@dataclass(frozen=True)
class RootRaisedCosine:
    rolloff: float = 0.0


@dataclass(frozen=True, eq=False)
class Tabulated:
    """Complex spectrum samples, linearly interpolated, zero off the grid."""

    omega: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        omega = np.asarray(self.omega, dtype=float)
        values = np.asarray(self.values, dtype=complex)
        if omega.ndim != 1 or omega.shape != values.shape or omega.size < 2:
            raise ValueError("tabulated spectrum needs matching 1-d grids of length >= 2")
        if np.any(np.diff(omega) <= 0):
            raise ValueError("tabulated frequency grid must be strictly increasing")
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_function(cls, fn, omega_max, points=4096):
        omega = np.linspace(-omega_max, omega_max, points)
        return cls(omega, np.asarray(fn(omega), dtype=complex))

    def __call__(self, w):
        w = np.asarray(w, dtype=float)
        re = np.interp(w, self.omega, self.values.real, left=0.0, right=0.0)
        im = np.interp(w, self.omega, self.values.imag, left=0.0, right=0.0)
        return re + 1j * im

    @property
    def omega_max(self):
        nz = np.nonzero(np.abs(self.values) > 0)[0]
        if nz.size == 0:
            return 0.0
        lo = self.omega[max(nz[0] - 1, 0)]
        hi = self.omega[min(nz[-1] + 1, self.omega.size - 1)]
        return float(max(abs(lo), abs(hi)))


@dataclass(frozen=True)
class TypeA:
    """Ideal lowpass front end sampled at ``r / T_c``."""

    r: int = 1


@dataclass(frozen=True)
class TypeB:
    """Chip-matched filter sampled at the chip rate."""


PulseKind = Union[Sinc, RootRaisedCosine, Tabulated]
FrontEnd = Union[TypeA, TypeB]


@dataclass(frozen=True)
class ChipPulse:
    kind: PulseKind = field(default_factory=Sinc)
    chip_interval: float = 1.0
    front_end: FrontEnd = field(default_factory=TypeA)

    def __post_init__(self):
        tc = self.chip_interval
        if not tc > 0:
            raise ValueError(f"chip_interval must be positive, got {tc}")
        kind, fe = self.kind, self.front_end
        if isinstance(kind, Sinc) and not 0 < kind.gamma <= 2:
            raise ValueError(f"sinc gamma must lie in (0, 2], got {kind.gamma}")
        if isinstance(kind, RootRaisedCosine) and not 0 <= kind.rolloff <= 1:
            raise ValueError(f"roll-off must lie in [0, 1], got {kind.rolloff}")
        if isinstance(fe, TypeA):
            if int(fe.r) != fe.r or fe.r < 1:
                raise ValueError(f"oversampling r must be a positive integer, got {fe.r}")
            if self.bandwidth > fe.r / (2 * tc) * (1 + 1e-12):
                raise ValueError(
                    f"bandwidth {self.bandwidth:g} exceeds r/(2 T_c) = {fe.r / (2 * tc):g}; "
                    "sampling theorem violated"
                )
        elif isinstance(fe, TypeB):
            root_nyquist = isinstance(kind, RootRaisedCosine) or (
                isinstance(kind, Sinc) and kind.gamma == 1
            )
            if not root_nyquist:
                raise ValueError("front end B needs a root-Nyquist chip pulse")
        else:
            raise TypeError(f"unknown front end {fe!r}")

    @property
    def r(self):
        return self.front_end.r if isinstance(self.front_end, TypeA) else 1

    @property
    def omega_max(self):
        """Edge of the spectral support in rad/s."""
        tc, kind = self.chip_interval, self.kind
        if isinstance(kind, Sinc):
            return np.pi * kind.gamma / tc
        if isinstance(kind, RootRaisedCosine):
            return np.pi * (1 + kind.rolloff) / tc
        return kind.omega_max

    @property
    def bandwidth(self):
        return self.omega_max / TWO_PI

    def knots(self):
        """Frequencies (rad/s) where the spectrum is not smooth, both signs."""
        tc, kind = self.chip_interval, self.kind
        if isinstance(kind, Sinc):
            pos = [np.pi * kind.gamma / tc]
        elif isinstance(kind, RootRaisedCosine):
            pos = [np.pi * (1 - kind.rolloff) / tc, np.pi * (1 + kind.rolloff) / tc]
        else:
            grid = kind.omega[np.abs(kind.omega) <= kind.omega_max]
            return np.unique(np.concatenate([grid, [-kind.omega_max, kind.omega_max]]))
        pos = np.unique(pos)
        return np.concatenate([-pos[::-1], pos])

    def with_front_end(self, front_end):
        return ChipPulse(self.kind, self.chip_interval, front_end)


def _transmit_spectrum(pulse, w, power=1):
    """``Psi(w) ** power`` for the unit-energy transmitted chip waveform."""
    tc, kind = pulse.chip_interval, pulse.kind
    aw = np.abs(w)
    if isinstance(kind, Sinc):
        edge = np.pi * kind.gamma / tc
        level = np.sqrt(tc / kind.gamma) ** power
        # a jump takes its midpoint value so that aliases meeting at a band
        # edge add up to the flat level
        return np.where(aw < edge, level, np.where(aw == edge, 0.5 * level, 0.0))
    if isinstance(kind, RootRaisedCosine):
        theta = kind.rolloff
        x = aw * tc
        if theta == 0:
            level = np.sqrt(tc) ** power
            return np.where(x < np.pi, level, np.where(x == np.pi, 0.5 * level, 0.0))
        out = np.where(x <= np.pi * (1 - theta), 1.0, 0.0)
        if theta > 0:
            band = (x > np.pi * (1 - theta)) & (x <= np.pi * (1 + theta))
            out = np.where(band, np.cos((x - np.pi) / (4 * theta) + np.pi / 4), out)
        return (np.sqrt(tc) * out) ** power
    val = kind(w)
    return val if power == 1 else np.abs(val) ** power


def continuous_spectrum(pulse, omega):
    """Spectrum of the chip waveform at the front-end output.

    Front end A passes the pulse through an ideal lowpass with cut-off
    ``pi r / T_c``; front end B replaces it by ``|Psi|^2`` (matched filter),
    scaled so that a zero roll-off reproduces the flat sinc spectrum.
    Out-of-band frequencies give zero.
    """
    w = np.asarray(omega, dtype=float)
    if isinstance(pulse.front_end, TypeB):
        return _transmit_spectrum(pulse, w, 2) / np.sqrt(pulse.chip_interval)
    psi = _transmit_spectrum(pulse, w)
    cutoff = np.pi * pulse.front_end.r / pulse.chip_interval
    return np.where(np.abs(w) <= cutoff, psi, 0.0)


def wrap_frequency(Omega):
    """Reduce normalized frequencies to [-pi, pi)."""
    Omega = np.asarray(Omega, dtype=float)
    return Omega - TWO_PI * np.floor((Omega + np.pi) / TWO_PI)


def _alias_range(pulse):
    reach = pulse.omega_max * pulse.chip_interval
    lo = int(np.floor((-reach - np.pi) / TWO_PI))
    hi = int(np.ceil((reach + np.pi) / TWO_PI))
    return np.arange(lo, hi + 1)


def folded_transform(pulse, Omega, tau):
    """Chip-rate transform of the pulse sampled with delay ``tau``.

    Sums ``exp(j tau (Omega + 2 pi s)/T_c) conj(Phi((Omega + 2 pi s)/T_c)) / T_c``
    over the aliases ``s`` that meet the spectral support.  ``Omega`` and
    ``tau`` broadcast against each other.
    """
    tc = pulse.chip_interval
    Om = wrap_frequency(Omega)[..., None]
    tau = np.asarray(tau, dtype=float)[..., None]
    w = Om + TWO_PI * _alias_range(pulse)
    terms = np.exp(1j * (tau / tc) * w) * np.conj(continuous_spectrum(pulse, w / tc))
    return terms.sum(axis=-1) / tc


def delta_vector(pulse, Omega, tau):
    """Stack of ``folded_transform(Omega, tau - t T_c / r)`` for ``t = 0..r-1``.

    The trailing axis has length ``r``; front end B counts as ``r = 1``.
    """
    r = pulse.r
    offsets = np.arange(r) * pulse.chip_interval / r
    Omega = np.asarray(Omega, dtype=float)[..., None]
    tau = np.asarray(tau, dtype=float)[..., None]
    return folded_transform(pulse, Omega, tau - offsets)


def q_matrix(pulse, Omega, tau):
    """Outer product ``Delta Delta^H`` with shape ``(..., r, r)``."""
    d = delta_vector(pulse, Omega, tau)
    return d[..., :, None] * np.conj(d[..., None, :])


def q_matrix_mean(pulse, Omega):
    """Delay-averaged part of :func:`q_matrix`, from the alias-sum closed form."""
    tc, r = pulse.chip_interval, pulse.r
    Om = wrap_frequency(Omega)[..., None]
    w = Om + TWO_PI * _alias_range(pulse)
    power = np.abs(continuous_spectrum(pulse, w / tc)) ** 2 / tc**2
    k = np.arange(r)
    diff = (k[:, None] - k[None, :]).astype(float)
    phases = np.exp(-1j * diff * w[..., None, None] / r)
    return np.sum(power[..., None, None] * phases, axis=-3)


def q_matrix_fluctuation(pulse, Omega, tau):
    return q_matrix(pulse, Omega, tau) - q_matrix_mean(pulse, np.asarray(Omega)[..., None] * 0 + Omega)


def q_scalar_frontend_b(rolloff, Omega, tau, chip_interval=1.0):
    """Closed form of ``|folded_transform|^2`` for root-raised-cosine pulses
    behind a chip-matched filter sampled at the chip rate."""
    Om = wrap_frequency(Omega)
    tau = np.asarray(tau, dtype=float)
    out = np.ones(np.broadcast(Om, tau).shape)
    if rolloff > 0:
        edge = np.abs(Om) >= np.pi * (1 - rolloff)
        # off-band entries may overflow for tiny roll-offs; np.where drops them
        with np.errstate(over="ignore", invalid="ignore"):
            x = (Om - np.sign(Om) * np.pi) / (2 * rolloff)
            s2 = np.sin(x) ** 2
        c = np.cos(TWO_PI * tau / chip_interval)
        band = 0.5 + 0.5 * s2 + 0.5 * c * (1 - s2)
        out = np.where(edge, band, out)
    return out / chip_interval


def _energy_integrand(pulse, s):
    tc = pulse.chip_interval
    return lambda w: np.abs(continuous_spectrum(pulse, w)) ** (2 * s) / (TWO_PI * tc ** (s - 1))


def energy_coefficient(pulse, s, method="auto"):
    """Pulse-shape coefficient ``E_s = (1/(2 pi T_c^s)) int T_c |Phi|^(2s) dw``.

    Sinc pulses behind front end A use the exact value ``gamma^(1-s)``;
    everything else (or ``method="quadrature"``) is integrated piecewise
    between spectral knots to relative accuracy 1e-10.
    """
    if s < 1 or int(s) != s:
        raise ValueError(f"order s must be a positive integer, got {s}")
    if method == "auto" and isinstance(pulse.kind, Sinc) and isinstance(pulse.front_end, TypeA):
        return float(pulse.kind.gamma ** (1 - s))
    wmax = pulse.omega_max
    val = integrate_piecewise(_energy_integrand(pulse, s), pulse.knots(), -wmax, wmax)
    return float(val)


def energy_coefficients(pulse, count, method="auto"):
    """``[E_1, ..., E_count]``."""
    return np.array([energy_coefficient(pulse, s, method) for s in range(1, count + 1)])


class RRCEnergy(NamedTuple):
    quadrature: float
    closed_form: float
    printed_formula: float


def rrc_energy_closed_form(rolloff, s):
    """Exact ``E_s`` of a unit-energy root-raised-cosine pulse (front end A)."""
    return (1 - rolloff) + 2 * rolloff * comb(2 * s, s) / 4.0**s


def rrc_energy_printed_formula(rolloff, s):
    """The textbook-style expression ``2^s (1 - g) + (1/pi) int sin^s((pi - w)/(2g)) dw``
    taken verbatim, with ``g`` read as the roll-off.  Kept for comparison only;
    it does not reproduce ``E_1 = 1``."""
    if rolloff == 0:
        return 2.0**s
    fn = lambda w: np.sin((np.pi - w) / (2 * rolloff)) ** s / np.pi
    a, b = np.pi * (1 - rolloff), np.pi * (1 + rolloff)
    return float(2.0**s * (1 - rolloff) + integrate_piecewise(fn, [np.pi], a, b))


def rrc_energy(rolloff, s, chip_interval=1.0):
    pulse = ChipPulse(RootRaisedCosine(rolloff), chip_interval, TypeA(2))
    return RRCEnergy(
        energy_coefficient(pulse, s, method="quadrature"),
        rrc_energy_closed_form(rolloff, s),
        rrc_energy_printed_formula(rolloff, s),
    )


def fourier_phase_vector(Omega, r):
    """``(1, e^{-j Omega/r}, ..., e^{-j (r-1) Omega/r}) / sqrt(r)`` along the last axis."""
    t = np.arange(r)
    return np.exp(-1j * np.asarray(Omega, dtype=float)[..., None] * t / r) / np.sqrt(r)


def phase_basis(Omega, r):
    """Unitary basis whose columns are phase vectors at the aliased frequencies
    ``Omega + sign(Omega) 2 pi u`` for ``u = -floor((r-1)/2) .. floor(r/2)``."""
    Omega = float(Omega)
    sgn = 1.0 if Omega >= 0 else -1.0
    shifts = np.arange(-((r - 1) // 2), r // 2 + 1)
    return np.stack([fourier_phase_vector(Omega + sgn * TWO_PI * u, r) for u in shifts], axis=-1)


def time_samples(pulse, t):
    """Front-end output waveform ``(1/2 pi) int Phi(w) e^{jwt} dw`` for real
    symmetric spectra.  Used as an independent time-domain reference."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    wmax = pulse.omega_max
    out = np.empty(t.shape)
    for i, ti in enumerate(t.ravel()):
        fn = lambda w: np.real(continuous_spectrum(pulse, w)) * np.cos(w * ti) / np.pi
        out.ravel()[i] = integrate_piecewise(fn, pulse.knots()[pulse.knots() >= 0], 0.0, wmax, start=16)
    return out


def save_tabulated(path, omega, values):
    values = np.asarray(values, dtype=complex)
    with open(path, "w") as fh:
        fh.write("# omega[rad/s] re,im\n")
        for w, v in zip(omega, values):
            fh.write(f"{float(w)!r} {float(v.real)!r},{float(v.imag)!r}\n")


def load_tabulated(path, chip_interval=1.0, front_end=None):
    """Read a two-column spectrum file: ``omega re,im`` per line, ``#`` comments."""
    omega, values = [], []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            try:
                w, z = line.split()
                re, im = z.split(",")
                omega.append(float(w))
                values.append(complex(float(re), float(im)))
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: expected 'omega re,im', got {line!r}") from exc
    return ChipPulse(Tabulated(np.array(omega), np.array(values)), chip_interval, front_end or TypeA())
