"""Large-system limits of the diagonal elements of powers of the correlation
matrix, and of its eigenvalue moments.

Four engines are provided.  ``theorem1_recursion`` is the general
matrix-valued recursion over the normalized frequency ``Omega``; it handles
arbitrary power/delay atoms and both front ends.  ``corollary1_recursion``
and ``theorem2_recursion`` are its scalar forms for uniformly distributed
delays and for pulses no wider than half the chip rate.  ``algorithm1``
is the polynomial version of the scalar recursion and shows that the pulse
enters only through the coefficients ``E_s``.
"""

import ast
from dataclasses import dataclass, field
from math import comb

import numpy as np

from .pulse import (
    TWO_PI,
    Tabulated,
    TypeA,
    TypeB,
    continuous_spectrum,
    delta_vector,
    energy_coefficients,
    wrap_frequency,
)
from .quadrature import budget_rule, gauss_legendre, panel_rule

MAX_POLY_DEPTH = 16


class PreconditionError(ValueError):
    """An engine was asked to work outside the regime it is valid for."""


@dataclass(frozen=True)
class SystemEnsemble:
    """Macroscopic description of the large system.

    The joint power/delay law is a list of atoms ``(powers[j], delays[j])``
    with probabilities ``probs[j]``.  With ``uniform_delay`` the delays of
    the interferers are uniform on ``[0, T_c)`` and independent of the
    power; the atom delays then only say where each user class is observed.
    """

    load: float
    powers: tuple = (1.0,)
    delays: tuple = (0.0,)
    probs: tuple = (1.0,)
    uniform_delay: bool = False
    n0: float = 0.0

    def __post_init__(self):
        for name in ("powers", "delays", "probs"):
            object.__setattr__(self, name, tuple(float(x) for x in np.atleast_1d(getattr(self, name))))
        n = len(self.powers)
        if not (len(self.delays) == len(self.probs) == n) or n == 0:
            raise ValueError("powers, delays and probs must be non-empty and of equal length")
        if not self.load > 0:
            raise ValueError(f"load must be positive, got {self.load}")
        if min(self.powers) < 0 or min(self.probs) < 0:
            raise ValueError("powers and probabilities must be non-negative")
        if abs(sum(self.probs) - 1) > 1e-12:
            raise ValueError(f"atom probabilities sum to {sum(self.probs)!r}, not 1")
        if min(self.delays) < 0:
            raise ValueError("delays must lie in [0, T_c)")
        if self.n0 < 0:
            raise ValueError("n0 must be non-negative")

    @classmethod
    def equal_power(cls, load, n0=0.0, uniform_delay=False, delays=(0.0,)):
        delays = tuple(delays)
        p = tuple([1.0 / len(delays)] * len(delays))
        return cls(load, tuple([1.0] * len(delays)), delays, p, uniform_delay, n0)

    @property
    def n_classes(self):
        return len(self.powers)

    def power_moment(self, s):
        return float(np.dot(self.probs, np.power(self.powers, s)))

    def power_moments(self, count):
        """``[E|a|^2, ..., E|a|^(2 count)]``."""
        return np.array([self.power_moment(s) for s in range(1, count + 1)])

    def noise_variance(self, pulse):
        """Per-sample noise variance behind the given front end (unit-energy pulse)."""
        if isinstance(pulse.front_end, TypeB):
            return self.n0 / pulse.chip_interval
        return self.n0 * pulse.r / pulse.chip_interval

    def check_delays(self, pulse):
        if max(self.delays) >= pulse.chip_interval:
            raise ValueError(f"atom delays must lie in [0, {pulse.chip_interval}), got {self.delays}")

    def replace(self, **changes):
        kw = dict(
            load=self.load, powers=self.powers, delays=self.delays, probs=self.probs,
            uniform_delay=self.uniform_delay, n0=self.n0,
        )
        kw.update(changes)
        return SystemEnsemble(**kw)


@dataclass(frozen=True, eq=False)
class MomentTable:
    """Output of one engine.

    ``R[j, l]`` is the limit of the ``l``-th diagonal element for atom ``j``;
    ``m[l]`` is the eigenvalue moment (``m[0] == 1``).  ``T`` holds the
    frequency-sampled ``T_l`` on ``omega`` (matrices for the general engine,
    scalars for the others); ``nu`` and ``f`` are the scalar engines'
    auxiliary sequences.
    """

    provenance: str
    depth: int
    powers: np.ndarray
    delays: np.ndarray
    R: np.ndarray
    m: np.ndarray
    omega: np.ndarray = None
    T: np.ndarray = None
    nu: np.ndarray = None
    f: np.ndarray = None
    params: dict = field(default_factory=dict)

    def class_R(self, j=0):
        return self.R[j]


@dataclass(frozen=True, eq=False)
class MomentPolynomials:
    """Coefficient lists (lowest degree first) built by :func:`algorithm1`."""

    rho: list
    mu: list
    U: np.ndarray
    V: np.ndarray
    energies: np.ndarray
    power_moments: np.ndarray


def mp_moment_oracle(beta, order):
    """Moment of the Marchenko-Pastur law with ratio ``beta``."""
    if order < 1:
        raise ValueError("order must be >= 1")
    s = order
    return sum(comb(s, i) * comb(s, i + 1) * beta**i for i in range(s)) / s


def _check_depth(depth):
    if int(depth) != depth or depth < 0:
        raise ValueError(f"depth must be a non-negative integer, got {depth}")
    return int(depth)


def _check_finite(values, ell, labels):
    bad = ~np.isfinite(values)
    if np.any(bad):
        j = int(np.flatnonzero(bad)[0])
        raise FloatingPointError(f"non-finite value at l={ell} for {labels[j]}")


def frequency_breakpoints(pulse):
    """Points of ``[-pi, pi]`` where the folded transform has kinks."""
    tc = pulse.chip_interval
    pts = wrap_frequency(np.asarray(pulse.knots()) * tc)
    return np.unique(np.concatenate([pts, [-np.pi, np.pi]]))


def omega_rule(pulse, grid_size):
    """Quadrature on ``[-pi, pi]`` with about ``grid_size`` nodes.

    Composite Gauss-Legendre between breakpoints for analytic pulses; a
    uniform periodic trapezoid for tabulated spectra, whose many knots make
    panels pointless.
    """
    if isinstance(pulse.kind, Tabulated):
        nodes = -np.pi + TWO_PI * np.arange(grid_size) / grid_size
        return nodes, np.full(grid_size, TWO_PI / grid_size)
    return budget_rule(frequency_breakpoints(pulse), -np.pi, np.pi, grid_size)


def theorem1_recursion(ensemble, pulse, depth, grid_size=1024, delay_nodes=32, extra_classes=None):
    """General matrix recursion over ``Omega in [-pi, pi]``.

    Each ``T_l(Omega)`` is an ``r x r`` matrix.  The interferer expectation
    runs over the atoms or, with ``uniform_delay``, over the power atoms
    times a ``delay_nodes``-point Gauss-Legendre rule on ``[0, T_c)``.
    Diagonal elements are reported at every atom ``(power, delay)`` and
    then at each ``(power, delay)`` pair of ``extra_classes``; the extra
    pairs do not enter the interferer expectation.
    """
    depth = _check_depth(depth)
    if grid_size < 64:
        raise ValueError("grid_size must be at least 64")
    ensemble.check_delays(pulse)
    tc = pulse.chip_interval
    lam_cls = np.array(ensemble.powers)
    tau_cls = np.array(ensemble.delays)
    if ensemble.uniform_delay:
        tn, tw = gauss_legendre(delay_nodes, 0.0, tc)
        lam_pop = np.repeat(lam_cls, delay_nodes)
        tau_pop = np.tile(tn, lam_cls.size)
        p_pop = np.outer(ensemble.probs, tw / tc).ravel()
    else:
        lam_pop, tau_pop, p_pop = lam_cls, tau_cls, np.array(ensemble.probs)
    if extra_classes is not None and len(extra_classes):
        extra = np.asarray(extra_classes, dtype=float).reshape(-1, 2)
        if np.any(extra[:, 1] < 0) or np.any(extra[:, 1] >= tc):
            raise ValueError(f"extra class delays must lie in [0, {tc})")
        lam_cls = np.concatenate([lam_cls, extra[:, 0]])
        tau_cls = np.concatenate([tau_cls, extra[:, 1]])

    omega, wq = omega_rule(pulse, grid_size)
    lam = np.concatenate([lam_pop, lam_cls])
    tau = np.concatenate([tau_pop, tau_cls])
    npop = lam_pop.size
    D = delta_vector(pulse, omega[None, :], tau[:, None])  # (C, G, r)
    labels = [f"power={a:g}, delay={t:g}" for a, t in zip(lam, tau)]

    r = pulse.r
    G = omega.size
    R = np.zeros((lam.size, depth + 1))
    R[:, 0] = 1.0
    T = np.zeros((depth + 1, G, r, r), dtype=complex)
    T[0] = np.eye(r)
    F = []
    Dp = D[:npop]
    for ell in range(1, depth + 1):
        # f(R_{l-1}, Omega) becomes available once R_{l-1} is known
        coef = ensemble.load * p_pop * lam_pop * R[:npop, ell - 1]
        F.append(np.einsum("c,cgi,cgj->gij", coef, Dp, np.conj(Dp)))
        for s in range(ell):
            # g(T_{l-s-1}) R_s
            g = np.einsum("g,cgi,gij,cgj->c", wq, np.conj(D), T[ell - s - 1], D)
            R[:, ell] += (lam / TWO_PI) * g.real * R[:, s]
        _check_finite(R[:, ell], ell, labels)
        T[ell] = sum(F[ell - s - 1] @ T[s] for s in range(ell))
    m = np.ones(depth + 1)
    m[1:] = p_pop @ R[:npop, 1:]
    return MomentTable(
        "Theorem1", depth, lam_cls, tau_cls, R[npop:], m, omega=omega, T=T,
        params=_params(ensemble, pulse, grid_size=grid_size, delay_nodes=delay_nodes),
    )


def _support_rule(pulse, nodes_per_panel):
    wmax = pulse.omega_max
    return panel_rule(pulse.knots(), -wmax, wmax, nodes_per_panel)


def _scalar_recursion(ensemble, pulse, depth, nodes_per_panel, t0, nu_scale, name):
    depth = _check_depth(depth)
    tc, r, beta = pulse.chip_interval, pulse.r, ensemble.load
    w, wq = _support_rule(pulse, nodes_per_panel)
    phi2 = np.abs(continuous_spectrum(pulse, w)) ** 2
    lam = np.array(ensemble.powers)
    p = np.array(ensemble.probs)
    labels = [f"power={a:g}" for a in lam]

    R = np.zeros((lam.size, depth + 1))
    R[:, 0] = 1.0
    T = np.zeros((depth + 1, w.size))
    T[0] = t0
    nu = np.zeros(depth + 1)
    f = np.zeros(depth + 1)
    nu[0] = nu_scale * np.dot(wq, phi2 * T[0])
    f[0] = beta * np.dot(p, lam * R[:, 0])
    for ell in range(1, depth + 1):
        R[:, ell] = sum(lam * R[:, s] * nu[ell - s - 1] for s in range(ell))
        _check_finite(R[:, ell], ell, labels)
        f[ell] = beta * np.dot(p, lam * R[:, ell])
        T[ell] = (r / tc) * sum(f[ell - s - 1] * phi2 / tc * T[s] for s in range(ell))
        nu[ell] = nu_scale * np.dot(wq, phi2 * T[ell])
    m = np.ones(depth + 1)
    m[1:] = p @ R[:, 1:]
    return MomentTable(
        name, depth, lam, np.array(ensemble.delays), R, m, omega=w, T=T, nu=nu, f=f,
        params=_params(ensemble, pulse, nodes_per_panel=nodes_per_panel),
    )


def corollary1_recursion(ensemble, pulse, depth, nodes_per_panel=96):
    """Scalar recursion for uniformly distributed delays (front end A).

    ``T_l`` lives on the continuous frequency ``omega`` over the pulse
    support and the result does not depend on the observed delay.
    """
    if not ensemble.uniform_delay:
        raise PreconditionError("corollary1_recursion needs uniformly distributed delays")
    if not isinstance(pulse.front_end, TypeA):
        raise PreconditionError("corollary1_recursion applies to front end A only")
    ensemble.check_delays(pulse)
    tc, r = pulse.chip_interval, pulse.r
    return _scalar_recursion(
        ensemble, pulse, depth, nodes_per_panel, 1.0, r / (TWO_PI * tc), "Corollary1"
    )


def theorem2_recursion(ensemble, pulse, depth, nodes_per_panel=96):
    """Scalar recursion for pulses of bandwidth at most ``1/(2 T_c)``.

    Valid for any delay law; the result ignores the delays entirely.
    Starts from ``T_0 = T_c / r``, so the ``nu`` normalization carries
    ``r^2 / (2 pi T_c^2)``.
    """
    if not isinstance(pulse.front_end, TypeA):
        raise PreconditionError("theorem2_recursion applies to front end A only")
    tc, r = pulse.chip_interval, pulse.r
    if pulse.bandwidth > 1 / (2 * tc) * (1 + 1e-12):
        raise PreconditionError(
            f"theorem2_recursion needs bandwidth <= 1/(2 T_c) = {1 / (2 * tc):g}, got {pulse.bandwidth:g}"
        )
    ensemble.check_delays(pulse)
    return _scalar_recursion(
        ensemble, pulse, depth, nodes_per_panel, tc / r, r**2 / (TWO_PI * tc**2), "Theorem2"
    )


def _substitute(coeffs, values):
    """Replace ``x^k`` (k >= 1) by ``values[k-1]``; the constant term stays."""
    c = np.asarray(coeffs)
    return c[0] + np.dot(c[1:], values[: c.size - 1])


def algorithm1_from_coefficients(beta, energies, power_moments, depth, r=1, chip_interval=1.0):
    """Polynomial recursion driven by ``E_s`` and the power moments directly.

    Returns ``(MomentPolynomials, m)`` with ``m[l]`` the ``l``-th eigenvalue
    moment.  ``energies`` and ``power_moments`` need at least ``depth`` entries.
    """
    depth = _check_depth(depth)
    if depth > MAX_POLY_DEPTH:
        raise ValueError(f"polynomial depth is limited to {MAX_POLY_DEPTH}, got {depth}")
    tc = chip_interval
    E = np.asarray(energies, dtype=float)[:depth] / tc
    mA = np.asarray(power_moments, dtype=float)[:depth]
    if E.size < depth or mA.size < depth:
        raise ValueError("need at least `depth` energy coefficients and power moments")
    P = np.polynomial.polynomial
    rho = [np.array([1.0])]
    mu = [np.array([1.0])]
    U = np.zeros(depth)
    V = np.zeros(depth)
    for ell in range(1, depth + 1):
        U[ell - 1] = _substitute(P.polymulx(r * mu[ell - 1]), E)
        V[ell - 1] = _substitute(P.polymulx(rho[ell - 1]), mA)
        acc_r = np.zeros(ell + 1)
        acc_m = np.zeros(ell + 1)
        for s in range(ell):
            term = P.polymulx(U[ell - s - 1] * rho[s])
            acc_r[: term.size] += term
            term = P.polymulx(V[ell - s - 1] * mu[s])
            acc_m[: term.size] += term
        rho.append(acc_r)
        mu.append((r / tc) * beta * acc_m)
    m = np.ones(depth + 1)
    for ell in range(1, depth + 1):
        m[ell] = _substitute(rho[ell], mA)
    return MomentPolynomials(rho, mu, U, V, np.asarray(energies)[:depth], mA), m


def algorithm1(ensemble, pulse, depth):
    """Polynomial form of the scalar recursion.

    ``R_l(lambda) = rho_l(lambda)`` for every power atom and
    ``m_l = rho_l`` with ``z^k`` replaced by ``E|a|^(2k)``.
    """
    if not isinstance(pulse.front_end, TypeA):
        raise PreconditionError("algorithm1 applies to front end A only")
    narrow = pulse.bandwidth <= 1 / (2 * pulse.chip_interval) * (1 + 1e-12)
    if not (ensemble.uniform_delay or narrow):
        raise PreconditionError(
            "algorithm1 needs uniformly distributed delays or bandwidth <= 1/(2 T_c)"
        )
    ensemble.check_delays(pulse)
    depth = _check_depth(depth)
    energies = energy_coefficients(pulse, max(depth, 1))
    polys, m = algorithm1_from_coefficients(
        ensemble.load, energies, ensemble.power_moments(max(depth, 1)), depth,
        pulse.r, pulse.chip_interval,
    )
    lam = np.array(ensemble.powers)
    R = np.stack([np.polynomial.polynomial.polyval(lam, c) for c in polys.rho], axis=1)
    table = MomentTable(
        "Algorithm1", depth, lam, np.array(ensemble.delays), R, m,
        params=_params(ensemble, pulse),
    )
    return polys, table


def closed_form_moments_from(beta, energies, power_moments, r=1, chip_interval=1.0):
    """First five eigenvalue moments as explicit polynomials in
    ``beta``, ``E_1..E_5`` and ``m_1..m_5`` (power moments)."""
    E1, E2, E3, E4, E5 = energies[:5]
    m1, m2, m3, m4, m5 = power_moments[:5]
    b = beta
    k = r / chip_interval
    return np.array([
        k * m1 * E1,
        k**2 * (b * m1**2 * E2 + m2 * E1**2),
        k**3 * (b**2 * E3 * m1**3 + 3 * b * E1 * E2 * m1 * m2 + E1**3 * m3),
        k**4 * (
            E1**4 * m4 + 4 * b * E1**2 * E2 * m1 * m3 + 2 * b * E1**2 * E2 * m2**2
            + 4 * b**2 * E1 * E3 * m1**2 * m2 + 2 * b**2 * E2**2 * m1**2 * m2
            + b**3 * E4 * m1**4
        ),
        k**5 * (
            E1**5 * m5 + 5 * b * E1**3 * E2 * (m1 * m4 + m2 * m3)
            + 5 * b**2 * E1**2 * E3 * (m1**2 * m3 + m1 * m2**2)
            + 5 * b**2 * E1 * E2**2 * (m1**2 * m3 + m1 * m2**2)
            + 5 * b**3 * E1 * E4 * m1**3 * m2 + 5 * b**3 * E2 * E3 * m1**3 * m2
            + b**4 * E5 * m1**5
        ),
    ])


def closed_form_moments(ensemble, pulse):
    return closed_form_moments_from(
        ensemble.load, energy_coefficients(pulse, 5), ensemble.power_moments(5),
        pulse.r, pulse.chip_interval,
    )


ENGINES = {
    "theorem1": theorem1_recursion,
    "corollary1": corollary1_recursion,
    "theorem2": theorem2_recursion,
    "algorithm1": lambda ens, pulse, depth: algorithm1(ens, pulse, depth)[1],
}


def _params(ensemble, pulse, **extra):
    kind = pulse.kind
    out = {
        "load": ensemble.load,
        "n0": ensemble.n0,
        "uniform_delay": ensemble.uniform_delay,
        "pulse": type(kind).__name__,
        "chip_interval": pulse.chip_interval,
        "front_end": type(pulse.front_end).__name__,
        "r": pulse.r,
    }
    for attr in ("gamma", "rolloff"):
        if hasattr(kind, attr):
            out[attr] = getattr(kind, attr)
    out.update(extra)
    return out


def save_table(table, path):
    """Write a table as commented header, an R section and an m section.

    Layout::

        # provenance: Corollary1
        # depth: 8
        # param load=0.5
        ...
        [R]
        ell,class,power,delay,R
        0,0,1.0,0.0,1.0
        ...
        [m]
        ell,m
        1,1.0
    """
    lines = [f"# provenance: {table.provenance}", f"# depth: {table.depth}"]
    lines += [f"# param {k}={_plain(v)!r}" for k, v in table.params.items()]
    lines += ["[R]", "ell,class,power,delay,R"]
    for j in range(table.R.shape[0]):
        for ell in range(table.depth + 1):
            lines.append(
                f"{ell},{j},{float(table.powers[j])!r},{float(table.delays[j])!r},{float(table.R[j, ell])!r}"
            )
    lines += ["[m]", "ell,m"]
    lines += [f"{ell},{float(table.m[ell])!r}" for ell in range(1, table.depth + 1)]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_table(path):
    """Inverse of :func:`save_table` (sampled ``T`` and auxiliaries are not stored)."""
    provenance, depth, params = None, None, {}
    rows_R, rows_m, section = [], [], None
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("# provenance:"):
                provenance = line.split(":", 1)[1].strip()
            elif line.startswith("# depth:"):
                depth = int(line.split(":", 1)[1])
            elif line.startswith("# param "):
                key, val = line[8:].split("=", 1)
                params[key] = _literal(val)
            elif line in ("[R]", "[m]"):
                section = line
            elif line.startswith(("ell,", "#")):
                continue
            elif section == "[R]":
                rows_R.append([float(x) for x in line.split(",")])
            elif section == "[m]":
                rows_m.append([float(x) for x in line.split(",")])
    rows_R = np.array(rows_R)
    ncls = int(rows_R[:, 1].max()) + 1
    R = np.zeros((ncls, depth + 1))
    powers, delays = np.zeros(ncls), np.zeros(ncls)
    for ell, j, a, t, val in rows_R:
        R[int(j), int(ell)] = val
        powers[int(j)], delays[int(j)] = a, t
    m = np.ones(depth + 1)
    for ell, val in rows_m:
        m[int(ell)] = val
    return MomentTable(provenance, depth, powers, delays, R, m, params=params)


def _plain(v):
    return v.item() if isinstance(v, np.generic) else v


def _literal(text):
    try:
        return ast.literal_eval(text)
    except (ValueError, SyntaxError):
        return text
