"""Command-line front end.

Subcommands: equilibrium | stability | hopf | simulate | sweep | chart |
packetsim.  Every command reads the same flat key = value configuration
format; reports embed the resolved configuration so a report file can be
re-run verbatim.  Exit codes: 0 success, 1 configuration error, 2 numeric
failure, 3 undetermined classification.
"""

import argparse
import sys

import numpy as np

from . import report as rep
from .config import (
    build_packet_config,
    build_topology,
    load_config,
    resolved_lines,
)
from .ddesim import bifurcation_sweep, default_history, extract_cycle, integrate
from .equilibrium import solve_equilibrium
from .errors import ConfigError, CtcpStabError, UndeterminedError
from .linear import (
    NO_CROSSING,
    ONE_POSITIVE,
    crossing_frequency,
    hopf_locate_two_delay,
    kappa_critical_closed_form,
    linearize,
    scenario1_conditions,
    stability_chart,
    transversality,
)
from .normalform import analyze_hopf
from .packetsim import PERIODICITY_THRESHOLD, periodicity_metric, run_packet_sim
from .topology import is_symmetric


def _emit(args, text):
    if args.out:
        rep.write_text(args.out, text)
    else:
        sys.stdout.write(text)


def _want_plot(args):
    return args.out is not None and not args.no_plot


def cmd_equilibrium(args):
    values = load_config(args.config)
    cfg = build_topology(values)
    eq = solve_equilibrium(cfg)
    results = [("w1_star", eq.w1_star), ("w2_star", eq.w2_star)]
    results += [(f"{name}_star", val) for name, val in sorted(eq.losses.items())]
    results += [
        ("loss_total_1", eq.loss_total(1)),
        ("loss_total_2", eq.loss_total(2)),
        ("residual", eq.residual),
    ]
    _emit(args, rep.render_report(resolved_lines(values), results))
    return 0


def cmd_stability(args):
    values = load_config(args.config)
    cfg = build_topology(values)
    eq = solve_equilibrium(cfg)
    coeffs = linearize(cfg, eq)
    _, condition = crossing_frequency(coeffs)
    results = [("condition_class", condition)]
    if condition == ONE_POSITIVE:
        closed = kappa_critical_closed_form(coeffs, cfg.tau1)
        results += [
            ("kappa_c_reduced", closed.kappa_c),
            ("omega0_reduced", closed.omega0),
        ]
    if is_symmetric(cfg):
        s1 = scenario1_conditions(cfg)
        if s1.kappa_c is not None:
            results += [
                ("kappa_c_equal_delay", s1.kappa_c),
                ("omega0_equal_delay", s1.omega0),
            ]
    crossing = hopf_locate_two_delay(cfg, kappa_max=args.kappa_max)
    if crossing.condition_class == NO_CROSSING:
        results.append(("stable_for_all_kappa_up_to", args.kappa_max))
    else:
        results += [
            ("kappa_c", crossing.kappa_c),
            ("omega0", crossing.omega0),
            ("alpha_prime_0", transversality(cfg, crossing)),
            ("stable_at_configured_kappa", cfg.kappa < crossing.kappa_c),
        ]
    _emit(args, rep.render_report(resolved_lines(values), results))
    return 0


def cmd_hopf(args):
    values = load_config(args.config)
    cfg = build_topology(values)
    metrics = analyze_hopf(cfg)
    results = [
        ("kappa_c", metrics.kappa_c),
        ("omega0", metrics.omega0),
        ("g20", metrics.g20),
        ("g11", metrics.g11),
        ("g02", metrics.g02),
        ("g21", metrics.g21),
        ("c1_0", metrics.c1_0),
        ("re_c1_0", metrics.c1_0.real),
        ("alpha_prime_0", metrics.alpha_prime_0),
        ("mu2", metrics.mu2),
        ("beta2", metrics.beta2),
        ("bifurcation", metrics.bifurcation),
        ("orbital_stability", metrics.orbital_stability),
        ("center_manifold_residual", metrics.cm_residual),
    ]
    _emit(args, rep.render_report(resolved_lines(values), results))
    return 0


def cmd_simulate(args):
    values = load_config(args.config)
    overrides = {}
    if args.kappa is not None:
        overrides["kappa"] = args.kappa
        values = dict(values, kappa=args.kappa)
    cfg = build_topology(values)
    eq = solve_equilibrium(cfg)
    tau_max = max(cfg.tau1, cfg.tau2)
    T = args.T if args.T is not None else 200.0 * tau_max
    h = args.h if args.h is not None else min(cfg.tau1, cfg.tau2) / 50.0
    trace = integrate(cfg, default_history(cfg, eq), T=T, h=h)
    rows = list(zip(trace.t, trace.w1, trace.w2))
    if args.out:
        rep.write_csv(args.out, ("t", "w1", "w2"), rows)
        if args.phase_out:
            now, delayed = trace.phase_pairs(cfg.tau2)
            rep.write_csv(args.phase_out, ("w2", "w2_delayed"), zip(now, delayed))
        if _want_plot(args):
            rep.plot_trace(trace, rep.figure_path(args.out))
    else:
        sys.stdout.write("t,w1,w2\n")
        for row in rows:
            sys.stdout.write(",".join(rep.fmt(v) for v in row) + "\n")
    return 0


def cmd_sweep(args):
    values = load_config(args.config)
    cfg = build_topology(values)
    n = int(round((args.kappa_max - args.kappa_min) / args.kappa_step)) + 1
    kappas = [args.kappa_min + i * args.kappa_step for i in range(n)]
    stats = bifurcation_sweep(cfg, kappas, T=args.T, h=args.h)
    rows = [
        (kap, st.amplitude, st.period if st.period is not None else "", st.converged)
        for kap, st in zip(kappas, stats)
    ]
    if args.out:
        rep.write_csv(args.out, ("kappa", "amplitude", "period", "converged"), rows)
        if _want_plot(args):
            rep.plot_sweep(kappas, stats, rep.figure_path(args.out))
    else:
        for row in rows:
            sys.stdout.write(",".join(rep.fmt(v) for v in row) + "\n")
    return 0


_CHART_DEFAULTS = {
    ("kappa", "alpha"): (np.linspace(0.1, 1.0, 10), (1e-3, 50.0)),
    ("kappa", "B"): (np.arange(16.0, 29.0, 1.0), (1e-3, 50.0)),
    ("alpha", "k"): (np.linspace(0.3, 0.95, 14), (0.02, 3.0)),
}


def cmd_chart(args):
    values = load_config(args.config)
    cfg = build_topology(values)
    axes = tuple(args.axes.split(","))
    if len(axes) != 2:
        raise ConfigError("--axes expects 'axis1,axis2'")
    if axes not in _CHART_DEFAULTS and axes[0] != "kappa":
        raise ConfigError(f"unsupported axes pair {axes}")
    grid, range1 = _CHART_DEFAULTS.get(axes, (None, (1e-3, 50.0)))
    if args.grid:
        lo, hi, cnt = args.grid.split(":")
        grid = np.linspace(float(lo), float(hi), int(cnt))
    if grid is None:
        raise ConfigError("no default grid for these axes; pass --grid lo:hi:count")
    chart = stability_chart(cfg, axes[0], axes[1], grid, range1)
    rows = [
        (v2, b if b is not None else "")
        for v2, b in zip(chart.axis2_values, chart.boundary)
    ]
    if args.out:
        rep.write_csv(args.out, (chart.axis2, f"{chart.axis1}_boundary"), rows)
        if _want_plot(args):
            rep.plot_chart(chart, rep.figure_path(args.out))
    else:
        for row in rows:
            sys.stdout.write(",".join(rep.fmt(v) for v in row) + "\n")
    if not chart.monotone:
        sys.stderr.write("note: boundary is not monotone over the grid\n")
    return 0


def cmd_packetsim(args):
    values = load_config(args.config)
    pcfg = build_packet_config(values)
    trace = run_packet_sim(pcfg)
    metric = periodicity_metric(trace)
    summary = [("periodicity_metric", metric),
               ("periodicity_threshold", PERIODICITY_THRESHOLD),
               ("regime", "limit_cycle" if metric > PERIODICITY_THRESHOLD else "random")]
    for name, stats in trace.counters.items():
        for field in ("arrivals", "departures", "drops", "backlog"):
            summary.append((f"{name}_{field}", stats[field]))
    summary.append(("conservation_ok", trace.conservation_ok()))
    lines = [",".join(("t", "queue_len"))]
    for i, v in enumerate(trace.samples):
        lines.append(f"{rep.fmt(i * trace.sample_interval)},{v}")
    lines.append("# summary")
    lines.extend(f"# {k} = {rep.fmt(v)}" for k, v in summary)
    text = "\n".join(lines) + "\n"
    if args.out:
        rep.write_text(args.out, text)
        if _want_plot(args):
            rep.plot_queue(trace, rep.figure_path(args.out))
    else:
        sys.stdout.write(text)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="ctcpstab",
        description="Stability, Hopf-bifurcation and simulation toolkit for "
                    "window-based congestion control with small Drop-Tail buffers.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, **kwargs):
        p = sub.add_parser(name, **kwargs)
        p.add_argument("-c", "--config", required=True, help="config file path")
        p.add_argument("-o", "--out", default=None, help="output file (default stdout)")
        p.add_argument("--no-plot", action="store_true",
                       help="skip the figure normally rendered beside --out")
        p.set_defaults(fn=fn)
        return p

    add("equilibrium", cmd_equilibrium, help="solve and report the equilibrium windows")

    p = add("stability", cmd_stability, help="critical gain, crossing frequency, transversality")
    p.add_argument("--kappa-max", type=float, default=10.0)

    add("hopf", cmd_hopf, help="full normal-form classification at the Hopf point")

    p = add("simulate", cmd_simulate, help="integrate the delayed fluid model; CSV t,w1,w2")
    p.add_argument("--kappa", type=float, default=None, help="override the configured gain")
    p.add_argument("--T", type=float, default=None, help="horizon (default 200 max-delay)")
    p.add_argument("--h", type=float, default=None, help="step (default min-delay / 50)")
    p.add_argument("--phase-out", default=None, help="also write w2,w2_delayed pairs here")

    p = add("sweep", cmd_sweep, help="gain sweep; CSV kappa,amplitude,period,converged")
    p.add_argument("--kappa-min", type=float, required=True)
    p.add_argument("--kappa-max", type=float, required=True)
    p.add_argument("--kappa-step", type=float, required=True)
    p.add_argument("--T", type=float, default=None)
    p.add_argument("--h", type=float, default=None)

    p = add("chart", cmd_chart, help="two-parameter stability boundary; CSV axis2,axis1")
    p.add_argument("--axes", required=True,
                   help="axis1,axis2 with axis1 in {kappa, alpha} (e.g. kappa,alpha)")
    p.add_argument("--grid", default=None, help="axis2 grid as lo:hi:count")

    add("packetsim", cmd_packetsim, help="packet-level run; CSV t,queue_len plus summary")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return 1
    except UndeterminedError as exc:
        sys.stderr.write(f"undetermined: {exc}\n")
        return 3
    except CtcpStabError as exc:
        sys.stderr.write(f"numeric failure: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
