"""Command-line entry point.

Subcommands::

    mscdma moments     --config FILE [--out CSV] [--engines LIST]
    mscdma sinr-sweep  --config FILE [--out CSV] [--jobs N]
    mscdma montecarlo  --config FILE [--out CSV] [--jobs N] [--gate PCT]

Output is CSV with a header row; column order per subcommand is fixed:

moments      engine,ell,class,power,delay,R,m
sinr-sweep   axis,value,scenario,pulse,gamma,rolloff,snr_db,L,sinr_db
montecarlo   seed,quantity,class,empirical,asymptotic,rel_error
"""

import argparse
import csv
import io
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .config import ConfigError, load_config, n0_values, parse_engines, require
from .detector import DesignError, moment_inputs, sinr_general
from .experiments import (
    asymptotic_user_moments,
    class_means,
    designed_weights,
    mc_user_subset,
    montecarlo_seed,
    sweep_point,
)
from .finite_sim import (
    FiniteSystemConfig,
    MemoryCapError,
    WindowEdgeError,
    build_system,
    frontend_b_system,
    signal_level_sinr,
)
from .moments import ENGINES, PreconditionError, SystemEnsemble
from .pulse import TypeB

MOMENTS_HEADER = ("engine", "ell", "class", "power", "delay", "R", "m")
SWEEP_HEADER = ("axis", "value", "scenario", "pulse", "gamma", "rolloff", "snr_db", "L", "sinr_db")
MC_HEADER = ("seed", "quantity", "class", "empirical", "asymptotic", "rel_error")


def _fmt(x):
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_csv(rows, header, out):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    text = buf.getvalue()
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    return text


def _pool_map(fn, items, jobs):
    if jobs <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, items))


def cmd_moments(cfg, engines=None):
    """Rows ``(engine, ell, class, power, delay, R, m)``."""
    require(cfg, "pulse", "system", "moments")
    pulse = cfg.pulse.build()
    ens = cfg.system.ensemble()
    spec = cfg.moments
    names = parse_engines(engines) if engines else spec.engines
    rows = []
    for name in names:
        fn = ENGINES[name]
        try:
            if name == "theorem1":
                table = fn(ens, pulse, spec.depth, spec.grid_size)
            else:
                table = fn(ens, pulse, spec.depth)
        except PreconditionError as exc:
            raise ConfigError(f"engine {name}: {exc}") from exc
        for j in range(table.R.shape[0]):
            for ell in range(spec.depth + 1):
                rows.append((name, ell, j, float(table.powers[j]), float(table.delays[j]),
                             float(table.R[j, ell]), float(table.m[ell])))
    return rows


def cmd_sinr_sweep(cfg, jobs=1):
    """Rows ``(axis, value, scenario, pulse, gamma, rolloff, snr_db, L, sinr_db)`` in axis order."""
    require(cfg, "system", "sweep")
    sweep, system = cfg.sweep, cfg.system
    snrs = [s for s, _ in n0_values(system)]
    items = [(sweep, system, v, s, snrs) for v in sweep.values for s in sweep.series]
    try:
        chunks = _pool_map(sweep_point, items, jobs)
    except (ValueError, DesignError) as exc:
        raise ConfigError(f"sweep: {exc}") from exc
    return [row for chunk in chunks for row in chunk]


def cmd_montecarlo(cfg, jobs=1, gate=None):
    """Rows ``(seed, quantity, class, empirical, asymptotic, rel_error)`` and the gate verdict.

    One row per seed, order and power class with the user-averaged
    diagonal element, followed by ``mean`` rows pooled over seeds.  With
    ``sinr_rank`` set, signal-level SINR rows of the Wiener design follow.
    """
    require(cfg, "pulse", "system", "montecarlo")
    pulse = cfg.pulse.build()
    mc = cfg.montecarlo
    gate = mc.gate_pct if gate is None else gate
    probe = FiniteSystemConfig(mc.N, mc.K, pulse, window=mc.window)
    if probe.block_bytes() > probe.memory_cap:
        raise MemoryCapError(
            f"N={mc.N}, K={mc.K}, r={pulse.r}, window={mc.window} needs "
            f"{probe.block_bytes() / 2**30:.2f} GiB, above the cap"
        )
    results = _pool_map(montecarlo_seed, [(pulse, cfg.system, mc, s) for s in mc.seeds], jobs)
    rows = []
    pooled = {}
    for seed, powers, emp, asym in results:
        em, am = class_means(powers, emp), class_means(powers, asym)
        for ell in range(mc.max_order):
            for p in em:
                e, a = em[p][ell], am[p][ell]
                rows.append((seed, f"R{ell + 1}", p, e, a, abs(e - a) / a))
                pooled.setdefault((ell, p), []).append((e, a))
    for (ell, p), vals in sorted(pooled.items()):
        e, a = np.mean(vals, axis=0)
        rows.append(("mean", f"R{ell + 1}", p, e, a, abs(e - a) / a))
    if mc.sinr_rank > 0:
        rows += _montecarlo_sinr(pulse, cfg.system, mc)
    failed = [r for r in rows if r[5] * 100 > gate]
    return rows, not failed


def _montecarlo_sinr(pulse, system_spec, mc):
    rows = []
    L = mc.sinr_rank
    for snr, n0 in n0_values(system_spec):
        ens = SystemEnsemble(mc.K / mc.N, system_spec.powers, tuple([0.0] * len(system_spec.powers)),
                             system_spec.probs, uniform_delay=(mc.delays == "uniform"), n0=n0)
        systems = []
        for i in range(mc.realizations):
            cfg = FiniteSystemConfig(mc.N, mc.K, pulse, window=mc.window, delays=mc.delays,
                                     n0=n0, seed=mc.seeds[0] * 1000 + i)
            systems.append(frontend_b_system(cfg) if isinstance(pulse.front_end, TypeB) else build_system(cfg))
        users = mc_user_subset(mc.K, mc.users)
        if isinstance(pulse.front_end, TypeB):
            # user 0 has zero delay, so it is aligned with the sampling instants
            users = np.array([0])
        s0 = systems[0]
        R = asymptotic_user_moments(pulse, ens, s0.powers[users[:1]], s0.tau_frac[users[:1]], 2 * L)[0]
        s2 = ens.noise_variance(pulse)
        w = designed_weights(R, s2, L)
        asym = sinr_general(w, *moment_inputs(R, s2, L))
        emp = signal_level_sinr(systems, w, users, trials=mc.trials)
        rows.append((mc.seeds[0], f"sinr_L{L}_snr{snr:g}", float(s0.powers[users[0]]), emp, asym,
                     abs(emp - asym) / asym))
    return rows


def build_parser():
    ap = argparse.ArgumentParser(prog="mscdma", description=__doc__.split("\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name, hlp in (
        ("moments", "diagonal-element limits and eigenvalue moments"),
        ("sinr-sweep", "large-system SINR along one sweep axis"),
        ("montecarlo", "finite-system Monte Carlo against the large-system limits"),
    ):
        p = sub.add_parser(name, help=hlp)
        p.add_argument("--config", required=True, help="TOML experiment file")
        p.add_argument("--out", default="-", help="CSV output path (default stdout)")
        if name == "moments":
            p.add_argument("--engines", default=None, help="comma list or 'all' (overrides config)")
        else:
            p.add_argument("--jobs", type=int, default=1, help="worker processes")
        if name == "montecarlo":
            p.add_argument("--gate", type=float, default=None, help="relative error gate in percent")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.command == "moments":
            write_csv(cmd_moments(cfg, args.engines), MOMENTS_HEADER, args.out)
        elif args.command == "sinr-sweep":
            write_csv(cmd_sinr_sweep(cfg, args.jobs), SWEEP_HEADER, args.out)
        else:
            rows, ok = cmd_montecarlo(cfg, args.jobs, args.gate)
            write_csv(rows, MC_HEADER, args.out)
            if not ok:
                print("montecarlo: relative error above gate", file=sys.stderr)
                return 1
    except (ConfigError, MemoryCapError, WindowEdgeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
