"""Scenario definitions shared by the CLI, the scripts and the tests.

Three large-system scenarios are compared:

``sync``
    all users chip- and symbol-aligned; general recursion with a single
    zero-delay atom and the smallest oversampling that satisfies the
    sampling theorem.
``async-A``
    uniformly distributed delays behind the oversampling front end.
``async-B``
    uniformly distributed interferers behind a chip-matched filter sampled
    at the chip rate, user of interest aligned with the sampling instants.
"""

import math

import numpy as np

from .detector import DesignError, mmse_weights, moment_inputs, sinr_general, to_db
from .finite_sim import FiniteSystemConfig, build_system, empirical_diag_moments, frontend_b_system
from .moments import SystemEnsemble, algorithm1, corollary1_recursion, theorem1_recursion
from .pulse import ChipPulse, RootRaisedCosine, Sinc, TypeA, TypeB


def minimal_oversampling(kind, chip_interval=1.0):
    probe = ChipPulse(kind, chip_interval, TypeA(2))
    return max(1, math.ceil(2 * probe.bandwidth * chip_interval - 1e-12))


def scenario_pulse(scenario, kind, chip_interval=1.0):
    if scenario == "async-B":
        return ChipPulse(kind, chip_interval, TypeB())
    return ChipPulse(kind, chip_interval, TypeA(minimal_oversampling(kind, chip_interval)))


def scenario_table(scenario, kind, ensemble, depth, chip_interval=1.0, grid_size=1024):
    """Moment table of the user of interest (class 0) for one scenario.

    Only the power law of ``ensemble`` is used; delays are set by the
    scenario.
    """
    pulse = scenario_pulse(scenario, kind, chip_interval)
    if scenario == "sync":
        ens = ensemble.replace(delays=tuple([0.0] * ensemble.n_classes), uniform_delay=False)
        return pulse, theorem1_recursion(ens, pulse, depth, grid_size)
    ens = ensemble.replace(delays=tuple([0.0] * ensemble.n_classes), uniform_delay=True)
    if scenario == "async-A":
        return pulse, corollary1_recursion(ens, pulse, depth)
    if scenario == "async-B":
        return pulse, theorem1_recursion(ens, pulse, depth, grid_size)
    raise ValueError(f"unknown scenario {scenario!r}")


def wiener_sinr(R, noise_variance, rank, ridge=False):
    Xi, xi = moment_inputs(R, noise_variance, rank)
    w = mmse_weights(Xi, xi, ridge=ridge)
    return sinr_general(w, Xi, xi)


def scenario_sinr_db(scenario, kind, load, snrs_db, ranks, powers=(1.0,), probs=(1.0,),
                     chip_interval=1.0, ridge=False):
    """Wiener SINR in dB for every ``(snr, rank)``; returns ``{(snr, L): dB}``."""
    ens = SystemEnsemble(load, powers, tuple([0.0] * len(powers)), probs)
    pulse, table = scenario_table(scenario, kind, ens, 2 * max(ranks), chip_interval)
    out = {}
    for snr in snrs_db:
        s2 = ens.replace(n0=10.0 ** (-snr / 10.0)).noise_variance(pulse)
        for L in ranks:
            out[(snr, L)] = float(to_db(wiener_sinr(table.R[0], s2, L, ridge)))
    return out


def axis_point(axis, value, series):
    """Pulse kind, load override and SNR override for one sweep point."""
    load = snr = None
    if axis == "bandwidth":
        gamma, rolloff = round(2 * value, 12), round(2 * value - 1, 12)
    elif axis == "rolloff":
        gamma, rolloff = series.gamma or 1.0, value
    elif axis == "load":
        gamma, rolloff = series.gamma or 1.0, series.rolloff or 0.0
        load = value
    else:
        gamma, rolloff = series.gamma or 1.0, series.rolloff or 0.0
        snr = value
    if series.pulse == "sinc":
        if not 0 < gamma <= 2:
            raise ValueError(f"sinc bandwidth factor {gamma:g} outside (0, 2]")
        return Sinc(gamma), load, snr
    if not 0 <= rolloff <= 1 + 1e-12:
        raise ValueError(f"roll-off {rolloff:g} outside [0, 1]")
    return RootRaisedCosine(min(max(rolloff, 0.0), 1.0)), load, snr


def sweep_point(args):
    """Rows for one ``(axis value, series)``; picklable for worker pools."""
    sweep, system, value, series, snr_list = args
    kind, load, snr = axis_point(sweep.axis, value, series)
    snrs = [snr] if snr is not None else snr_list
    res = scenario_sinr_db(
        series.scenario, kind, load if load is not None else system.load, snrs, sweep.ranks,
        system.powers, system.probs, sweep.chip_interval, sweep.ridge,
    )
    gamma = getattr(kind, "gamma", "")
    rolloff = getattr(kind, "rolloff", "")
    return [
        (sweep.axis, value, series.scenario, series.pulse, gamma, rolloff, s, L, res[(s, L)])
        for s in snrs for L in sweep.ranks
    ]


def asymptotic_user_moments(pulse, ensemble, powers, tau_frac, depth):
    """Large-system ``R_l`` at each simulated user's ``(power, fractional delay)``.

    Shape ``(len(powers), depth + 1)``.  The scalar recursion is used when it
    applies (its result does not depend on the delay); otherwise the general
    recursion is evaluated at every user's delay.
    """
    narrow = pulse.bandwidth <= 1 / (2 * pulse.chip_interval) * (1 + 1e-12)
    if isinstance(pulse.front_end, TypeA) and (ensemble.uniform_delay or narrow):
        polys, _ = algorithm1(ensemble, pulse, depth)
        return np.stack([np.polynomial.polynomial.polyval(powers, c) for c in polys.rho], axis=1)
    pairs = np.unique(np.stack([powers, tau_frac], axis=1), axis=0)
    table = theorem1_recursion(ensemble, pulse, depth, extra_classes=pairs)
    lookup = {tuple(p): table.R[ensemble.n_classes + i] for i, p in enumerate(pairs)}
    return np.stack([lookup[(a, t)] for a, t in zip(powers, tau_frac)])


def mc_user_subset(K, users):
    if users <= 0 or users >= K:
        return np.arange(K)
    return np.unique(np.linspace(0, K - 1, users).round().astype(int))


def montecarlo_seed(args):
    """Empirical and asymptotic diagonal moments for one seed.

    Returns ``(seed, powers, empirical, asymptotic)`` with the last two of
    shape ``(max_order, users)``.
    """
    pulse, system_spec, mc, seed = args
    cfg = FiniteSystemConfig(
        mc.N, mc.K, pulse, window=mc.window, delays=mc.delays,
        powers=(np.array(system_spec.powers), np.array(system_spec.probs)) if len(system_spec.powers) > 1 else "equal",
        seed=seed,
    )
    sysm = frontend_b_system(cfg) if isinstance(pulse.front_end, TypeB) else build_system(cfg)
    users = mc_user_subset(mc.K, mc.users)
    emp = empirical_diag_moments(sysm, mc.max_order, users)
    ens = SystemEnsemble(
        mc.K / mc.N, system_spec.powers, tuple([0.0] * len(system_spec.powers)), system_spec.probs,
        uniform_delay=(mc.delays == "uniform"),
    )
    asym = asymptotic_user_moments(pulse, ens, sysm.powers[users], sysm.tau_frac[users], mc.max_order)
    return seed, sysm.powers[users], emp, asym[:, 1:].T


def class_means(powers, values):
    """Mean of ``values[:, users]`` per distinct power level, ``{power: (orders,)}``."""
    return {float(p): values[:, powers == p].mean(axis=1) for p in np.unique(powers)}


def designed_weights(R, noise_variance, rank):
    Xi, xi = moment_inputs(R, noise_variance, rank)
    try:
        return mmse_weights(Xi, xi)
    except DesignError:
        return mmse_weights(Xi, xi, ridge=True)
