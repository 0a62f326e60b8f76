"""Command-line front end.

Subcommands:

  model upper-bound   ideal-replacement savings bound on a residency profile
  model estimate      residency-weighted average power
  model estimate-aw   agile-idle estimate with rescaling and renaming
  sim run             simulate one config file
  sim sweep           cross-product of loads and variants
  fsm trace           controller flow timelines as text or CSV
  validate            built-in golden and invariant checks

Exit codes: 0 success, 1 validation or check failure, 2 usage errors
(including missing input files).  Nothing reads stdin; all randomness
comes from the seed in the config; machine-readable output goes only to
the paths given via --out/--plot/--csv.
"""

from __future__ import annotations

import argparse
import sys
from typing import Dict, List, Optional

from . import __version__, fsm
from .catalog import (
    Catalog,
    default_budget,
    default_catalog,
    budget_total,
    load_catalog,
    power_ratio_vs_active,
)
from .demo import demo_sweep
from .errors import ParseError, ValidationError
from .model import (
    PerfModel,
    ResidencyProfile,
    avg_power,
    avg_power_aw,
    upper_bound_savings,
)
from .reporting import (
    document_to_json,
    emit_plot_table,
    estimate_document,
    format_timeline,
    load_residency_csv,
    load_sim_config,
    save_document,
    sim_report_document,
    sweep_document,
    timeline_csv,
)
from .sim import SimReport, SweepPoint, VariantSpec, run, sweep

# Idle-state menus available by name to `sim sweep --variants`; config
# files can define more via [variant:<name>] sections.
BUILTIN_VARIANTS: Dict[str, VariantSpec] = {
    "baseline": VariantSpec("baseline", frozenset({"C0", "C1", "C1E", "C6"})),
    "no_c6": VariantSpec("no_c6", frozenset({"C0", "C1", "C1E"})),
    "no_c6_no_c1e": VariantSpec("no_c6_no_c1e", frozenset({"C0", "C1"})),
    "agile": VariantSpec("agile", frozenset({"C0", "C6A", "C6AE", "C6"})),
    "agile_no_c6_no_c1e": VariantSpec("agile_no_c6_no_c1e", frozenset({"C0", "C6A"})),
}


def _parse_residency(text: str) -> Dict[str, float]:
    out: Dict[str, float] = {}
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        if "=" not in item:
            raise ValidationError(f"bad residency item {item!r}, expected NAME=FRACTION")
        name, value = item.split("=", 1)
        try:
            out[name.strip()] = float(value)
        except ValueError:
            raise ValidationError(f"bad fraction {value!r} for {name!r}") from None
    if not out:
        raise ValidationError("empty residency specification")
    return out


def _profile_from_args(args) -> ResidencyProfile:
    if getattr(args, "trace", None):
        return load_residency_csv(args.trace, duration_s=args.duration)
    if getattr(args, "residency", None):
        duration = args.duration if args.duration is not None else 1.0
        return ResidencyProfile(duration, _parse_residency(args.residency))
    raise ValidationError("give a profile via --residency or --trace")


def _catalog_from_args(args) -> Catalog:
    if getattr(args, "catalog", None):
        return load_catalog(args.catalog)
    return default_catalog()


def _perf_from_args(args) -> PerfModel:
    return PerfModel(
        freq_penalty=args.freq_penalty,
        scalability=args.scalability,
        delta_transition_ns=args.delta_ns,
    )


# ---------------------------------------------------------------------------
# model subcommands
# ---------------------------------------------------------------------------

def cmd_model_upper_bound(args) -> int:
    catalog = _catalog_from_args(args)
    profile = _profile_from_args(args)
    savings = upper_bound_savings(profile, catalog)
    print(f"savings {savings * 100.0:.1f}%")
    return 0


def cmd_model_estimate(args) -> int:
    catalog = _catalog_from_args(args)
    profile = _profile_from_args(args)
    est = avg_power(profile, catalog)
    print(f"average power {est.avg_power_w:.6g} W")
    for name in sorted(est.per_state_w):
        print(f"  {name:<10} {est.per_state_w[name]:>10.6g} W")
    if args.out:
        doc = estimate_document(
            "power_estimate",
            {
                "avg_power_w": est.avg_power_w,
                "per_state_w": dict(sorted(est.per_state_w.items())),
                "residency": dict(sorted(profile.residency.items())),
            },
        )
        save_document(doc, args.out)
        print(f"wrote {args.out}")
    return 0


def cmd_model_estimate_aw(args) -> int:
    catalog = _catalog_from_args(args)
    profile = _profile_from_args(args)
    perf = _perf_from_args(args)
    est = avg_power_aw(profile, catalog, perf)
    sv = est.savings_vs
    print(f"baseline power {sv.baseline_w:.6g} W")
    print(f"agile estimate {est.avg_power_w:.6g} W")
    print(f"savings {sv.savings_fraction * 100.0:.1f}%")
    if args.out:
        doc = estimate_document(
            "agile_power_estimate",
            {
                "avg_power_w": est.avg_power_w,
                "baseline_w": sv.baseline_w,
                "savings_fraction": sv.savings_fraction,
                "per_state_w": dict(sorted(est.per_state_w.items())),
                "perf": {
                    "freq_penalty": perf.freq_penalty,
                    "scalability": perf.scalability,
                    "delta_transition_ns": perf.delta_transition_ns,
                },
            },
        )
        save_document(doc, args.out)
        print(f"wrote {args.out}")
    return 0


# ---------------------------------------------------------------------------
# sim subcommands
# ---------------------------------------------------------------------------

def _print_report(report: SimReport) -> None:
    print(f"seed            {report.seed}")
    print(f"avg power       {report.avg_power_w:.6g} W")
    print(f"energy          {report.energy_j:.6g} J")
    lat = report.latency_us
    print(
        "latency us      "
        f"mean {lat.mean:.6g}  p50 {lat.p50:.6g}  p95 {lat.p95:.6g}  "
        f"p99 {lat.p99:.6g}  p99.9 {lat.p999:.6g}"
    )
    print(
        f"requests        offered {report.requests_offered}  "
        f"completed {report.requests_completed}  aborted-wakeups {report.wakeups_aborted}"
    )
    rows = sorted(report.residency.residency.items())
    print("residency       " + "  ".join(f"{k} {v:.4f}" for k, v in rows))
    print("transitions     " + "  ".join(
        f"{k} {v}" for k, v in sorted(report.transitions.items())
    ))
    if report.saturated:
        print("WARNING: saturated (queue high-water mark kept growing)")


def cmd_sim_run(args) -> int:
    parsed = load_sim_config(args.config)
    catalog = _catalog_from_args(args)
    report = run(parsed.config, catalog=catalog, perf=parsed.perf)
    _print_report(report)
    if args.out:
        save_document(sim_report_document(report), args.out)
        print(f"wrote {args.out}")
    if args.plot:
        table = emit_plot_table(
            [SweepPoint("run", parsed.config.arrival.rate_qps, report)]
        )
        with open(args.plot, "w") as f:
            f.write(table)
        print(f"wrote {args.plot}")
    return 0


def _resolve_variants(names: List[str], parsed_variants: Dict[str, VariantSpec],
                      parser: argparse.ArgumentParser) -> List[VariantSpec]:
    out = []
    for name in names:
        if name in parsed_variants:
            out.append(parsed_variants[name])
        elif name in BUILTIN_VARIANTS:
            out.append(BUILTIN_VARIANTS[name])
        else:
            known = sorted(set(parsed_variants) | set(BUILTIN_VARIANTS))
            parser.error(f"unknown variant {name!r}; known: {', '.join(known)}")
    return out


def cmd_sim_sweep(args, parser) -> int:
    parsed = load_sim_config(args.config)
    catalog = _catalog_from_args(args)
    qps_list = [float(x) for x in args.qps.split(",") if x.strip()]
    if not qps_list:
        parser.error("--qps needs a comma-separated list of rates")
    names = [x.strip() for x in args.variants.split(",") if x.strip()]
    if not names:
        parser.error("--variants needs a comma-separated list of names")
    variants = _resolve_variants(names, parsed.variants, parser)

    points = sweep(parsed.config, qps_list, variants, catalog=catalog,
                   perf=parsed.perf, jobs=args.jobs)
    print(emit_plot_table(points), end="")
    if args.out:
        save_document(sweep_document(points, parsed.config), args.out)
        print(f"wrote {args.out}")
    if args.plot:
        with open(args.plot, "w") as f:
            f.write(emit_plot_table(points))
        print(f"wrote {args.plot}")
    return 0


def cmd_demo(args) -> int:
    result = demo_sweep(seed=args.seed, duration_s=args.duration)
    print(emit_plot_table(result.sweep_points()), end="")
    ok = True
    last = None
    for p in result.points:
        within = p.savings <= p.upper_bound
        monotone = last is None or p.savings <= last + 1e-9
        ok = ok and within and monotone and p.p99_delta <= 0.02
        print(
            f"qps {p.qps:>8.0f}  savings {p.savings * 100.0:5.1f}%  "
            f"bound {p.upper_bound * 100.0:5.1f}%  p99 delta {p.p99_delta * 100.0:+05.2f}%"
        )
        last = p.savings
    print("demo checks " + ("pass" if ok else "FAIL"))
    return 0 if ok else 1


# ---------------------------------------------------------------------------
# fsm trace
# ---------------------------------------------------------------------------

def cmd_fsm_trace(args) -> int:
    variant = args.variant
    flow = args.flow
    if variant in ("C6A", "C6AE"):
        if flow == "entry":
            timeline = fsm.entry_timeline(variant, args.mhz)
        elif flow == "exit":
            stagger = fsm.StaggerPlan(zones=args.zones, per_zone_ns=args.zone_ns)
            timeline = fsm.exit_timeline(variant, args.mhz, stagger)
        else:
            timeline = fsm.snoop_timeline(variant, args.mhz, service_ns=args.service_ns)
    else:
        timeline = fsm.reference_flow(variant, flow, args.mhz)
    print(format_timeline(timeline), end="")
    if args.csv:
        with open(args.csv, "w") as f:
            f.write(timeline_csv(timeline))
        print(f"wrote {args.csv}")
    return 0


# ---------------------------------------------------------------------------
# validate
# ---------------------------------------------------------------------------

def cmd_validate(args) -> int:
    catalog = _catalog_from_args(args)
    failures = 0

    def check(name: str, ok: bool, detail: str = "") -> None:
        nonlocal failures
        if ok:
            print(f"PASS {name}")
        else:
            failures += 1
            print(f"FAIL {name}" + (f": {detail}" if detail else ""))

    default = default_catalog()

    # Ideal-replacement savings bound on three reference profiles.
    golden_profiles = [
        ({"C0": 0.50, "C1": 0.45, "C6": 0.05}, 23.0),
        ({"C0": 0.25, "C1": 0.55, "C6": 0.20}, 41.0),
        ({"C0": 0.20, "C1": 0.80, "C6": 0.00}, 55.0),
    ]
    for residency, expect_pct in golden_profiles:
        got = upper_bound_savings(ResidencyProfile(1.0, dict(residency)), default) * 100
        check(
            f"upper-bound savings {expect_pct:.0f}% profile",
            abs(got - expect_pct) <= 0.6,
            f"got {got:.2f}%, expected {expect_pct:.0f}% within 0.6 points",
        )

    # Budget rows must sum to the documented overall ranges.
    budget = default_budget()
    for variant, expect in (("C6A", (290, 315)), ("C6AE", (227, 243))):
        got_range = budget_total(budget, variant)
        check(
            f"{variant} budget total {expect} mW",
            got_range == expect,
            f"got {got_range}",
        )

    # Idle-to-active power ratios for the agile states.
    p1 = default.pstate("P1")
    for name, lo, hi in (("C6A", 0.05, 0.08), ("C6AE", 0.05, 0.08)):
        ratio = power_ratio_vs_active(default[name], p1)
        check(
            f"{name}/C0(P1) power ratio in [5%, 8%]",
            lo <= ratio <= hi,
            f"got {ratio:.4f}",
        )

    # Controller flow latency bounds at the default 500 MHz clock.
    entry = fsm.entry_timeline("C6A").total_ns
    exit_ = fsm.exit_timeline("C6A").total_ns
    check("agile entry <= 20 ns", entry <= 20, f"got {entry} ns")
    check("agile exit <= 85 ns", exit_ <= 85, f"got {exit_} ns")
    check(
        "stagger exactly 75 ns",
        fsm.StaggerPlan().total_ns == 75,
        f"got {fsm.StaggerPlan().total_ns}",
    )
    c6_entry = fsm.reference_flow("C6", "entry").total_ns
    c6_exit = fsm.reference_flow("C6", "exit").total_ns
    check("C6 reference entry 87 us", c6_entry == 87_000, f"got {c6_entry} ns")
    check("C6 reference exit 30 us", c6_exit == 30_000, f"got {c6_exit} ns")
    c1_entry = fsm.reference_flow("C1", "entry").total_ns
    check("C1 reference entry <= 10 ns", c1_entry <= 10, f"got {c1_entry} ns")

    # Transition speedup of the agile state over full deep idle.
    agile_hw = entry + exit_
    ratio = default["C6"].transition_time_us * 1000.0 / agile_hw
    check(
        "C6 transition / agile hw latency >= 900x",
        agile_hw <= 105 and ratio >= 900.0,
        f"agile hw {agile_hw} ns, ratio {ratio:.0f}x",
    )

    # Catalog under test: structure, pairing, and power ordering.
    try:
        catalog.validate()
        check("catalog structure", True)
    except ValidationError as e:
        check("catalog structure", False, str(e))
    violations = catalog.power_order_violations()
    check(
        "catalog power strictly decreasing C0 > C1 > C1E > C6A > C6AE > C6",
        not violations,
        "; ".join(violations),
    )
    for name in ("C1", "C6A", "C1E", "C6AE", "C6"):
        spec = catalog[name]
        check(
            f"{name} target residency >= transition time",
            spec.target_residency_us >= spec.transition_time_us,
            f"{spec.target_residency_us} < {spec.transition_time_us}",
        )
        check(
            f"{name} hw latency within transition budget",
            spec.hw_total_ns <= spec.transition_time_us * 1000.0,
            f"{spec.hw_total_ns} ns > {spec.transition_time_us} us",
        )

    print(f"{failures} failure(s)" if failures else "all checks passed")
    return 1 if failures else 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cstatesim",
        description="Model and simulate CPU core idle states, including "
                    "agile power-gated deep idle.",
    )
    parser.add_argument("--version", action="version", version=f"cstatesim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    # model
    model = sub.add_parser("model", help="analytic power estimates")
    model_sub = model.add_subparsers(dest="model_command", required=True)

    def add_profile_args(p):
        p.add_argument("--residency", help="inline profile, e.g. C0=0.5,C1=0.45,C6=0.05")
        p.add_argument("--trace", help="residency CSV file")
        p.add_argument("--duration", type=float, default=None,
                       help="profile duration in seconds (overrides the trace comment)")
        p.add_argument("--catalog", help="catalog override file")

    ub = model_sub.add_parser("upper-bound",
                              help="ideal-replacement savings bound on a {C0,C1,C6} profile")
    add_profile_args(ub)
    ub.set_defaults(func=cmd_model_upper_bound)

    est = model_sub.add_parser("estimate", help="residency-weighted average power")
    add_profile_args(est)
    est.add_argument("--out", help="write a JSON report document")
    est.set_defaults(func=cmd_model_estimate)

    est_aw = model_sub.add_parser(
        "estimate-aw", help="agile-idle estimate (C1->C6A, C1E->C6AE) with savings"
    )
    add_profile_args(est_aw)
    est_aw.add_argument("--freq-penalty", type=float, default=0.01)
    est_aw.add_argument("--scalability", type=float, default=1.0)
    est_aw.add_argument("--delta-ns", type=int, default=100,
                        help="extra per-transition latency of the agile states")
    est_aw.add_argument("--out", help="write a JSON report document")
    est_aw.set_defaults(func=cmd_model_estimate_aw)

    # sim
    simp = sub.add_parser("sim", help="discrete-event simulation")
    sim_sub = simp.add_subparsers(dest="sim_command", required=True)

    runp = sim_sub.add_parser("run", help="simulate one config")
    runp.add_argument("--config", required=True, help="sim config file")
    runp.add_argument("--catalog", help="catalog override file")
    runp.add_argument("--out", help="write the report JSON here")
    runp.add_argument("--plot", help="write a plot-table CSV here")
    runp.set_defaults(func=cmd_sim_run)

    sweepp = sim_sub.add_parser("sweep", help="loads x variants cross-product")
    sweepp.add_argument("--config", required=True, help="sim config file")
    sweepp.add_argument("--catalog", help="catalog override file")
    sweepp.add_argument("--qps", required=True, help="comma-separated arrival rates")
    sweepp.add_argument("--variants", required=True,
                        help="comma-separated variant names (built-in or from config)")
    sweepp.add_argument("--jobs", type=int, default=1,
                        help="parallel worker processes (default 1)")
    sweepp.add_argument("--out", help="write the sweep JSON here")
    sweepp.add_argument("--plot", help="write the plot-table CSV here")
    sweepp.set_defaults(func=lambda args: cmd_sim_sweep(args, sweepp))

    demop = sim_sub.add_parser(
        "demo", help="paired low-load demo sweep with its self-checks"
    )
    demop.add_argument("--seed", type=int, default=2024)
    demop.add_argument("--duration", type=float, default=0.2,
                       help="simulated seconds per point")
    demop.set_defaults(func=cmd_demo)

    # fsm
    fsmp = sub.add_parser("fsm", help="controller flow timelines")
    fsm_sub = fsmp.add_subparsers(dest="fsm_command", required=True)
    trace = fsm_sub.add_parser("trace", help="print one flow's steps")
    trace.add_argument("--flow", required=True, choices=["entry", "exit", "snoop"])
    trace.add_argument("--variant", required=True, choices=["C6A", "C6AE", "C1", "C6"])
    trace.add_argument("--mhz", type=int, default=fsm.DEFAULT_CONTROLLER_MHZ,
                       help="controller clock (default 500)")
    trace.add_argument("--zones", type=int, default=5, help="stagger zones (exit)")
    trace.add_argument("--zone-ns", type=int, default=15,
                       help="per-zone settle ns (exit)")
    trace.add_argument("--service-ns", type=int, default=50,
                       help="snoop service window (snoop)")
    trace.add_argument("--csv", help="also write step,cycles,fixed_ns,cum_ns CSV")
    trace.set_defaults(func=cmd_fsm_trace)

    # validate
    val = sub.add_parser("validate", help="run the built-in golden checks")
    val.add_argument("--catalog", help="catalog file to check instead of the default")
    val.set_defaults(func=cmd_validate)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as e:
        print(f"error: no such file: {e.filename}", file=sys.stderr)
        return 2
    except (ValidationError, ParseError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
