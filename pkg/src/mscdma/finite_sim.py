"""Finite random-matrix realizations of the asynchronous system.

A realization holds, for every symbol ``m`` of a window of ``M`` symbols,
the ``2 r N x K`` matrix ``H^(m) = S^(m) A`` of virtual spreading.  Its top
half ``H_u^(m)`` acts on the symbol interval ``m`` and its bottom half
``H_d^(m)`` spills into interval ``m + 1``, so the stacked transfer matrix
is block bidiagonal.  All products with the stacked matrix are done block by
block; the dense matrix is only formed by :meth:`FiniteSystem.dense` for
small cross-checks.
"""

from dataclasses import dataclass, field

import numpy as np

from .pulse import RootRaisedCosine, Sinc, TypeB, folded_transform

GIB = 2**30


class MemoryCapError(MemoryError):
    pass


class WindowEdgeError(ValueError):
    pass


@dataclass(frozen=True)
class FiniteSystemConfig:
    """Parameters of one finite realization.

    ``delays`` is ``"uniform"`` (uniform on ``[0, T_s)``, first user at 0),
    ``"sync"`` (all zero) or an explicit tuple of per-user delays in
    seconds.  ``powers`` is ``"equal"``, an explicit per-user tuple, or a
    pair ``(levels, probs)`` to draw from.
    """

    N: int
    K: int
    pulse: object
    window: int = 9
    delays: object = "uniform"
    powers: object = "equal"
    n0: float = 0.0
    seed: int = 0
    sampling_phase: float = 0.0
    memory_cap: float = 2 * GIB

    def __post_init__(self):
        if self.K < 1 or self.N < 2:
            raise ValueError(f"need K >= 1 and N >= 2, got K={self.K}, N={self.N}")
        if self.window < 3 or self.window % 2 == 0:
            raise ValueError(f"window must be odd and >= 3, got {self.window}")
        if not isinstance(self.delays, str) and len(self.delays) != self.K:
            raise ValueError("explicit delays need one entry per user")
        if isinstance(self.delays, str) and self.delays not in ("uniform", "sync"):
            raise ValueError(f"unknown delay sampler {self.delays!r}")

    @property
    def r(self):
        return self.pulse.r

    @property
    def symbol_interval(self):
        return self.N * self.pulse.chip_interval

    @property
    def centre(self):
        return (self.window - 1) // 2

    def block_bytes(self):
        return self.window * 2 * self.r * self.N * self.K * 16

    def dense_bytes(self):
        return (self.window * self.r * self.N) * (self.window * self.K) * 16

    def noise_variance(self):
        tc = self.pulse.chip_interval
        if isinstance(self.pulse.front_end, TypeB):
            return self.n0 / tc
        return self.n0 * self.r / tc


@dataclass(eq=False)
class FiniteSystem:
    config: FiniteSystemConfig
    H: np.ndarray  # (M, 2rN, K), amplitudes included
    delays: np.ndarray
    powers: np.ndarray
    tau_bar: np.ndarray = field(repr=False, default=None)
    tau_frac: np.ndarray = field(repr=False, default=None)

    @property
    def M(self):
        return self.H.shape[0]

    @property
    def rN(self):
        return self.H.shape[1] // 2

    @property
    def K(self):
        return self.H.shape[2]

    @property
    def H_u(self):
        return self.H[:, : self.rN]

    @property
    def H_d(self):
        return self.H[:, self.rN :]

    def apply(self, x):
        """``stacked H @ x`` for ``x`` of shape ``(M, K, ...)``; returns ``(M, rN, ...)``."""
        xs = x.reshape(self.M, self.K, -1)
        y = self.H_u @ xs
        y[1:] += self.H_d[:-1] @ xs[:-1]
        return y.reshape((self.M, self.rN) + x.shape[2:])

    def adjoint(self, y):
        """``stacked H^H @ y`` for ``y`` of shape ``(M, rN, ...)``; returns ``(M, K, ...)``."""
        ys = y.reshape(self.M, self.rN, -1)
        x = self.H_u.conj().transpose(0, 2, 1) @ ys
        x[:-1] += self.H_d[:-1].conj().transpose(0, 2, 1) @ ys[1:]
        return x.reshape((self.M, self.K) + y.shape[2:])

    def dense(self):
        """Stacked transfer matrix of size ``(M rN) x (M K)``.  Small systems only."""
        cap = self.config.memory_cap
        if self.config.dense_bytes() > cap:
            raise MemoryCapError(
                f"dense transfer matrix needs {self.config.dense_bytes() / GIB:.2f} GiB, cap is {cap / GIB:.2f} GiB"
            )
        M, rN, K = self.M, self.rN, self.K
        out = np.zeros((M * rN, M * K), dtype=complex)
        for b in range(M):
            out[b * rN : (b + 1) * rN, b * K : (b + 1) * K] = self.H_u[b]
            if b > 0:
                out[b * rN : (b + 1) * rN, (b - 1) * K : b * K] = self.H_d[b - 1]
        return out

    def unit_columns(self, users, symbol=None):
        """Indicator block ``(M, K, len(users))`` selecting users at one symbol."""
        m = self.config.centre if symbol is None else symbol
        users = np.atleast_1d(users)
        e = np.zeros((self.M, self.K, users.size), dtype=complex)
        e[m, users, np.arange(users.size)] = 1.0
        return e


def chip_filters(pulse, N, tau_frac):
    """DFT-domain responses ``phi(-2 pi n/N, tau - s T_c/r)``, shape ``(N, len(tau), r)``."""
    r, tc = pulse.r, pulse.chip_interval
    Om = -2 * np.pi * np.arange(N) / N
    taus = np.asarray(tau_frac)[:, None] - np.arange(r) * tc / r
    return folded_transform(pulse, Om[:, None, None], taus[None])


def circulant_coefficients(pulse, N, tau_frac):
    """``c[s, d] = (1/N) sum_n phi(2 pi n/N, tau - s T_c/r) e^{j 2 pi n d/N}``, shape ``(r, N)``."""
    r, tc = pulse.r, pulse.chip_interval
    Om = 2 * np.pi * np.arange(N) / N
    taus = tau_frac - np.arange(r) * tc / r
    vals = folded_transform(pulse, Om[None, :], taus[:, None])
    return np.fft.ifft(vals, axis=1)


def build_circulant(pulse, N, tau_frac):
    """Explicit ``rN x N`` r-block-wise circulant matrix for one fractional delay.

    Row ``b r + s`` holds ``c[s, (k - b) mod N]`` in column ``k``.
    """
    r = pulse.r
    c = circulant_coefficients(pulse, N, tau_frac)
    b = np.arange(N)
    idx = (b[None, :] - b[:, None]) % N  # [b, k] -> (k - b) mod N
    out = np.empty((N, r, N), dtype=complex)
    for s in range(r):
        out[:, s, :] = c[s][idx]
    return out.reshape(r * N, N)


def _spreading_rng(seed, rel_symbol):
    return np.random.default_rng([seed, 1, rel_symbol + 1_000_000])


def _draw_delays_powers(config):
    rng = np.random.default_rng([config.seed, 0])
    K, Ts = config.K, config.symbol_interval
    if isinstance(config.delays, str):
        if config.delays == "sync":
            delays = np.zeros(K)
        else:
            delays = np.sort(np.concatenate([[0.0], rng.uniform(0.0, Ts, K - 1)]))
    else:
        delays = np.asarray(config.delays, dtype=float)
        if np.any(delays < 0) or np.any(delays >= Ts):
            raise ValueError("delays must lie in [0, T_s)")
    pw = config.powers
    if isinstance(pw, str):
        if pw != "equal":
            raise ValueError(f"unknown power sampler {pw!r}")
        powers = np.ones(K)
    elif len(pw) == 2 and np.ndim(pw[0]) == 1:
        levels, probs = np.asarray(pw[0], float), np.asarray(pw[1], float)
        powers = rng.choice(levels, size=K, p=probs)
    else:
        powers = np.asarray(pw, dtype=float)
        if powers.shape != (K,):
            raise ValueError("explicit powers need one entry per user")
    return delays, powers


def _assemble(config, delays, powers):
    if config.block_bytes() > config.memory_cap:
        raise MemoryCapError(
            f"system blocks need {config.block_bytes() / GIB:.2f} GiB, cap is {config.memory_cap / GIB:.2f} GiB"
        )
    pulse, N, K, r, M = config.pulse, config.N, config.K, config.r, config.window
    tc = pulse.chip_interval
    tau_bar = np.floor(delays / tc + 1e-12).astype(int)
    tau_bar = np.minimum(tau_bar, N - 1)
    tau_frac = np.clip(delays - tau_bar * tc, 0.0, None)
    filt = chip_filters(pulse, N, tau_frac)  # (N, K, r)
    amp = np.sqrt(powers)
    rows = r * tau_bar[None, :] + np.arange(r * N)[:, None]
    cols = np.broadcast_to(np.arange(K), rows.shape)
    H = np.zeros((M, 2 * r * N, K), dtype=complex)
    for m in range(M):
        rng = _spreading_rng(config.seed, m - config.centre)
        s = (rng.standard_normal((N, K)) + 1j * rng.standard_normal((N, K))) / np.sqrt(2 * N)
        y = np.fft.ifft(np.fft.fft(s, axis=0)[:, :, None] * filt, axis=0)  # (N, K, r)
        y = y.transpose(0, 2, 1).reshape(r * N, K)
        H[m][rows, cols] = y * amp
    return FiniteSystem(config, H, delays, powers, tau_bar, tau_frac)


def build_system(config):
    """Draw delays, powers and spreading for ``config`` and assemble the blocks.

    Spreading of the symbol at offset ``d`` from the window centre comes from
    its own keyed stream, so windows of different length share their
    central symbols.
    """
    delays, powers = _draw_delays_powers(config)
    return _assemble(config, delays, powers)


def frontend_b_system(config):
    """Chip-matched-filter realization with a common sampling phase.

    Every user is observed with effective delay ``(tau_k - phase) mod T_s``.
    """
    pulse = config.pulse
    if not isinstance(pulse.front_end, TypeB):
        raise ValueError("frontend_b_system needs a pulse with front end B")
    kind = pulse.kind
    if not (isinstance(kind, RootRaisedCosine) or (isinstance(kind, Sinc) and kind.gamma == 1)):
        raise ValueError("front end B needs a root-Nyquist pulse")
    delays, powers = _draw_delays_powers(config)
    eff = np.mod(delays - config.sampling_phase, config.symbol_interval)
    system = _assemble(config, eff, powers)
    system.delays = delays
    return system


def _check_reach(config, symbol, ell):
    lo = symbol - (ell - 1) // 2
    hi = symbol + (ell + 1) // 2
    if lo < 1 or hi > config.window - 1:
        raise WindowEdgeError(
            f"order {ell} at symbol {symbol} reaches blocks {lo}..{hi}; "
            f"window of {config.window} symbols is too short"
        )


def empirical_diag_moments(system, max_order, users=None, symbol=None):
    """Diagonal elements ``(R^l)_{(m,k),(m,k)}`` for ``l = 1..max_order``.

    Returns an array ``(max_order, len(users))``.  Products alternate
    between the stacked matrix and its adjoint, so ``||V_l||^2`` with
    ``V_1 = H e``, ``V_2 = H^H V_1``, ... is the ``l``-th diagonal element.
    """
    m = system.config.centre if symbol is None else symbol
    _check_reach(system.config, m, max_order)
    users = np.arange(system.K) if users is None else np.atleast_1d(users)
    v = system.unit_columns(users, m)
    out = np.empty((max_order, users.size))
    for ell in range(1, max_order + 1):
        v = system.apply(v) if ell % 2 else system.adjoint(v)
        out[ell - 1] = np.sum(np.abs(v) ** 2, axis=(0, 1))
    return out


def empirical_diag_moment(system, ell, user, symbol=None):
    return float(empirical_diag_moments(system, ell, [user], symbol)[ell - 1, 0])


def dense_diag_moments(system, max_order, users, symbol=None):
    """Same quantity as :func:`empirical_diag_moments` from explicit matrix powers."""
    m = system.config.centre if symbol is None else symbol
    Hd = system.dense()
    R = Hd.conj().T @ Hd
    idx = m * system.K + np.atleast_1d(users)
    out = np.empty((max_order, idx.size))
    P = np.eye(R.shape[0])
    for ell in range(1, max_order + 1):
        P = P @ R
        out[ell - 1] = P[idx, idx].real
    return out


def detector_vectors(system, weights, users, symbol=None):
    """``v = sum_l w_l T^(l-1) h`` for each user, shape ``(M, rN, len(users))``."""
    m = system.config.centre if symbol is None else symbol
    _check_reach(system.config, m, 2 * len(weights) - 1)
    h = system.apply(system.unit_columns(users, m))
    v = weights[0] * h
    t = h
    for w in weights[1:]:
        t = system.apply(system.adjoint(t))
        v = v + w * t
    return v


def conditional_sinr(system, weights, users, sigma2, symbol=None):
    """Exact output SINR for one realization, averaged over symbols and noise.

    With ``v`` the detector vector of user ``k``, the correlations
    ``z = H^H v`` give signal ``|z_(m,k)|^2`` and interference ``||z||^2 -
    |z_(m,k)|^2``; the noise adds ``sigma2 ||v||^2``.  Returns one value per
    user.
    """
    m = system.config.centre if symbol is None else symbol
    users = np.atleast_1d(users)
    v = detector_vectors(system, np.asarray(weights, dtype=float), users, m)
    z = system.adjoint(v)
    sig = np.abs(z[m, users, np.arange(users.size)]) ** 2
    total = np.sum(np.abs(z) ** 2, axis=(0, 1))
    noise = sigma2 * np.sum(np.abs(v) ** 2, axis=(0, 1))
    return sig / (total - sig + noise)


def _qpsk(rng, shape):
    return ((2 * rng.integers(0, 2, shape) - 1) + 1j * (2 * rng.integers(0, 2, shape) - 1)) / np.sqrt(2)


def _trial_statistics(system, weights, users, sigma2, trials, stream, batch, symbol):
    m = system.config.centre if symbol is None else symbol
    v = detector_vectors(system, weights, users, m)
    rng = np.random.default_rng([system.config.seed, 2, stream])
    est, sym = [], []
    done = 0
    while done < trials:
        t = min(batch, trials - done)
        b = _qpsk(rng, (system.M, system.K, t))
        y = system.apply(b)
        if sigma2 > 0:
            y += np.sqrt(sigma2 / 2) * (
                rng.standard_normal(y.shape) + 1j * rng.standard_normal(y.shape)
            )
        est.append(np.einsum("miu,mit->ut", v.conj(), y))
        sym.append(b[m, users, :])
        done += t
    bh = np.concatenate(est, axis=1)
    bu = np.concatenate(sym, axis=1)
    cross = np.mean(bh * bu.conj(), axis=1)
    if trials < 2:
        return np.abs(cross) ** 2, np.abs(bh[:, 0] - cross * bu[:, 0]) ** 2
    # unbiased estimates of |c|^2 and of the residual variance (|b| = 1)
    err = np.sum(np.abs(bh - cross[:, None] * bu) ** 2, axis=1) / (trials - 1)
    return np.abs(cross) ** 2 - err / trials, err


def signal_level_sinr(systems, weights, users, n0=None, trials=1000, stream=0, batch=250, symbol=None):
    """Empirical output SINR of a multistage detector.

    Each trial draws QPSK symbols for the whole window and complex Gaussian
    noise, forms ``b_hat = v^H y`` and compares it with the transmitted
    symbol of each user in ``users``.  ``systems`` may be one realization
    or a list; the trials are split evenly between them.  The estimate is
    pooled as ``mean |c|^2 / mean var`` over users and realizations, with
    ``c = E{b_hat b*}`` per user.  Returns ``inf`` if the residual vanishes.
    """
    if isinstance(systems, FiniteSystem):
        systems = [systems]
    users = np.atleast_1d(users)
    weights = np.asarray(weights, dtype=float)
    per = max(1, trials // len(systems))
    sig, noise = [], []
    for system in systems:
        cfg = system.config
        if n0 is None:
            sigma2 = cfg.noise_variance()
        else:
            sigma2 = FiniteSystemConfig(cfg.N, cfg.K, cfg.pulse, n0=n0).noise_variance()
        c2, err = _trial_statistics(system, weights, users, sigma2, per, stream, batch, symbol)
        sig.append(c2)
        noise.append(err)
    sig = np.mean(np.concatenate(sig))
    noise = np.mean(np.concatenate(noise))
    if noise <= 1e-20 * sig:
        return np.inf
    return float(sig / noise)
