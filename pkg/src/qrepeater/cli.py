"""Command-line interface: ``qrepeater <subcommand> ...``.

Subcommands
-----------
calc       single formulas (Purcell factor, coherence time, recall time, ...)
link       heralding probability, rate and fidelity of one elementary link
chain      Monte Carlo simulation of the scenario
analytic   exact expected delivery time of 1- and 2-link chains
sweep      simulate the scenario over one parameter axis
resources  nested-purification resource count
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path
from typing import Sequence

from . import memory, photonics
from .engine import (
    SWEEP_AXES,
    RunStatistics,
    analytic_model,
    direct_transmission_rate,
    run_trials,
    sweep,
    with_axis,
)
from .repeater import PurificationPlan, expected_chain_time, resource_count, resource_power_law
from .scenario import ScenarioError, config_fingerprint, load_scenario
from .states import fidelity

CSV_COLUMNS = (
    "swept_value", "repeaters", "rate_hz", "fidelity_mean", "fidelity_stddev",
    "delivered", "elapsed_s", "resources", "fingerprint",
)


def fmt(value) -> str:
    """Render a number with 9 significant digits; strings pass through."""
    if value is None:
        return ""
    if isinstance(value, bool) or isinstance(value, str):
        return str(value)
    if isinstance(value, int):
        return str(value)
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return format(value, ".9g")


def _json_value(value):
    if isinstance(value, float) and (math.isnan(value) or math.isinf(value)):
        return fmt(value)
    return value


def emit(rows: list[dict], columns: Sequence[str], fmt_name: str, out) -> None:
    if fmt_name == "csv":
        writer = csv.writer(out, lineterminator="\r\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([fmt(row.get(c)) for c in columns])
    else:
        for row in rows:
            record = {c: _json_value(row.get(c)) for c in columns}
            out.write(json.dumps(record) + "\n")


def _write(rows, columns, args) -> None:
    buffer = io.StringIO(newline="")
    emit(rows, columns, args.format, buffer)
    if getattr(args, "output", None):
        Path(args.output).write_text(buffer.getvalue(), newline="")
    else:
        sys.stdout.write(buffer.getvalue())


def parse_values(text: str) -> list[float]:
    """Parse ``"1,2,3"``; ``"50,100,...,500"`` expands an arithmetic progression."""
    parts = [p.strip() for p in text.split(",") if p.strip()]
    if "..." not in parts:
        return [float(p) for p in parts]
    i = parts.index("...")
    if i < 2 or i != len(parts) - 2:
        raise ValueError("an ellipsis needs two values before it and one after: a,b,...,z")
    head = [float(p) for p in parts[:i]]
    last = float(parts[-1])
    step = head[-1] - head[-2]
    if step == 0 or (last - head[-1]) * step < 0:
        raise ValueError(f"cannot reach {last} from {head[-1]} in steps of {step}")
    count = round((last - head[0]) / step)
    values = [head[0] + k * step for k in range(count + 1)]
    if not math.isclose(values[-1], last, rel_tol=1e-9, abs_tol=1e-12):
        raise ValueError(f"{last} is not on the progression {head[0]}, {head[1]}, ...")
    return values


def _row(value, repeaters, stats: RunStatistics, fingerprint: str) -> dict:
    return {
        "swept_value": value,
        "repeaters": repeaters,
        "rate_hz": stats.rate,
        "fidelity_mean": stats.fidelity_mean,
        "fidelity_stddev": stats.fidelity_stddev,
        "delivered": stats.delivered_pairs,
        "elapsed_s": stats.elapsed,
        "resources": stats.resources_consumed,
        "fingerprint": fingerprint,
    }


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------


def cmd_calc(args) -> int:
    f = args.formula
    if f == "purcell":
        lam = 1.0
        cavity = photonics.CavityParams(lam, args.v_over_lambda3 * lam**3, args.q)
        value = photonics.purcell_factor(cavity)
    elif f == "coherence-time":
        value = photonics.photon_coherence_time(photonics.EmitterParams.from_lifetime(args.t1, t2_star=args.t2star))
    elif f == "indistinguishability":
        value = photonics.indistinguishability(args.gamma, args.gamma_star)
    elif f == "enhanced-rate":
        emitter = photonics.EmitterParams.from_rates(args.gamma_r, args.gamma_nr)
        value = photonics.enhanced_decay_rate(emitter, args.purcell)
    elif f == "transmission":
        value = photonics.fiber_transmission(args.km, photonics.FiberParams(args.alpha))
    elif f == "recall-time":
        spacing = args.spacing_rad if args.spacing_rad is not None else 2 * math.pi * args.spacing_hz
        value = memory.recall_time(memory.AfcParams(spacing))
    elif f == "hom":
        value = photonics.hom_coincidence_probability(args.i)
    elif f == "no-cloning":
        print("true" if memory.no_cloning_check(args.efficiency, args.fidelity) else "false")
        return 0
    else:  # pragma: no cover - argparse restricts choices
        raise ValueError(f"unknown formula {f!r}")
    print(format(value, f".{args.digits}g"))
    return 0


def cmd_link(args) -> int:
    scenario = load_scenario(args.config)
    config = scenario.config
    rows = []
    for i in range(config.num_links):
        prob, pair = config.link_herald(i)
        interval = config.link_interval(i)
        n = config.mode_capacity
        round_prob = 1.0 - (1.0 - prob) ** n
        rows.append({
            "link": i,
            "length_km": config.segment_lengths_km[i],
            "success_prob_per_mode": prob,
            "round_success_prob": round_prob,
            "attempt_interval_s": interval,
            "rate_hz": n * prob / interval,
            "w_ent": pair.w_ent,
            "w_vac": pair.w_vac,
            "fidelity": fidelity(pair),
            "fingerprint": config_fingerprint(config),
        })
    _write(rows, list(rows[0]), args)
    return 0


def _sim_limits(args, scenario):
    seed = scenario.sim.seed if args.seed is None else args.seed
    trials = scenario.sim.trials if args.trials is None else args.trials
    max_time = scenario.sim.max_time_s if args.max_time is None else args.max_time
    max_pairs = scenario.sim.max_pairs if args.max_pairs is None else args.max_pairs
    if max_pairs is not None and max_pairs <= 0:
        max_pairs = None
    return seed, trials, max_time, max_pairs


def cmd_chain(args) -> int:
    scenario = load_scenario(args.config)
    seed, trials, max_time, max_pairs = _sim_limits(args, scenario)
    stats = run_trials(scenario.config, seed, trials, max_time=max_time, max_pairs=max_pairs,
                       workers=args.workers)
    extra = {"seed": seed, "trials": trials, "max_time": max_time, "max_pairs": max_pairs}
    row = _row("", scenario.config.num_links - 1, stats, config_fingerprint(scenario.config, extra))
    _write([row], CSV_COLUMNS, args)
    return 0


def cmd_analytic(args) -> int:
    scenario = load_scenario(args.config)
    config = scenario.config
    if config.num_links > 2:
        raise ValueError("analytic expectations cover 1- and 2-link chains; use `chain` for longer ones")
    model = analytic_model(config)
    expected = expected_chain_time(model, config.num_links)
    row = {
        "links": config.num_links,
        "success_prob_per_mode": model.success_prob_per_attempt,
        "round_success_prob": model.round_success_prob,
        "attempt_interval_s": model.attempt_interval,
        "swap_success_prob": model.swap_success_prob,
        "cutoff_s": model.cutoff,
        "expected_time_s": expected,
        "rate_hz": 1.0 / expected if expected > 0 else math.inf,
        "fingerprint": config_fingerprint(config),
    }
    _write([row], list(row), args)
    return 0


def cmd_sweep(args) -> int:
    scenario = load_scenario(args.config)
    seed, trials, max_time, max_pairs = _sim_limits(args, scenario)
    values = parse_values(args.values)
    base = scenario.config
    repeaters = [int(r) for r in parse_values(args.repeaters)] if args.repeaters else [base.num_links - 1]
    rows = []
    for r in repeaters:
        chain = base if r == base.num_links - 1 else with_axis(base, "repeaters", r)
        points = sweep(chain, args.axis, values, seed, trials,
                       max_time=max_time, max_pairs=max_pairs, workers=args.workers)
        for point in points:
            extra = {"seed": seed, "trials": trials, "max_time": max_time, "max_pairs": max_pairs}
            rows.append(_row(point.value, r, point.stats, config_fingerprint(point.config, extra)))
    if args.baseline_source_rate is not None:
        if args.axis != "total_km":
            raise ValueError("the direct-transmission baseline needs --axis total_km")
        for value in values:
            rate = direct_transmission_rate(value, args.baseline_source_rate, base.hardware)
            rows.append({
                "swept_value": value, "repeaters": "direct", "rate_hz": rate,
                "fidelity_mean": None, "fidelity_stddev": None, "delivered": None,
                "elapsed_s": None, "resources": None,
                "fingerprint": config_fingerprint(base, {"direct_km": value, "source_rate": args.baseline_source_rate}),
            })
    _write(rows, CSV_COLUMNS, args)
    return 0


def cmd_resources(args) -> int:
    if args.config:
        plan = load_scenario(args.config).config.purification
        if plan is None:
            raise ValueError("the scenario has no [purification] section")
    else:
        if None in (args.l, args.m, args.levels):
            raise ValueError("give --config or all of --l, --m, --levels")
        plan = PurificationPlan(args.l, args.m, args.levels)
    row = {
        "l": plan.branching_l, "m": plan.pairs_m, "levels": plan.levels_n,
        "links": plan.total_links, "resources": resource_count(plan),
        "power_law": resource_power_law(plan),
    }
    _write([row], list(row), args)
    return 0


# --------------------------------------------------------------------------
# argument parsing
# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qrepeater", description="Quantum-repeater chain calculator and simulator.")
    sub = parser.add_subparsers(dest="command", required=True)

    calc = sub.add_parser("calc", help="evaluate a single formula")
    calc.add_argument("formula", choices=[
        "purcell", "coherence-time", "indistinguishability", "enhanced-rate",
        "transmission", "recall-time", "hom", "no-cloning",
    ])
    calc.add_argument("--digits", type=int, default=4, help="significant digits (default 4)")
    calc.add_argument("--q", type=float, default=0.0, help="cavity quality factor")
    calc.add_argument("--v-over-lambda3", type=float, default=1.0, help="mode volume in units of lambda^3")
    calc.add_argument("--t1", type=float, default=1.0, help="excited-state lifetime [s]")
    calc.add_argument("--t2star", type=float, default=math.inf, help="pure-dephasing time [s]")
    calc.add_argument("--gamma", type=float, default=1.0)
    calc.add_argument("--gamma-star", type=float, default=0.0)
    calc.add_argument("--gamma-r", type=float, default=1.0)
    calc.add_argument("--gamma-nr", type=float, default=0.0)
    calc.add_argument("--purcell", type=float, default=1.0)
    calc.add_argument("--km", type=float, default=0.0)
    calc.add_argument("--alpha", type=float, default=0.2, help="fiber attenuation [dB/km]")
    calc.add_argument("--spacing-rad", type=float, default=None, help="comb spacing [rad/s]")
    calc.add_argument("--spacing-hz", type=float, default=1e6, help="comb spacing [Hz]")
    calc.add_argument("--i", type=float, default=1.0, help="indistinguishability")
    calc.add_argument("--efficiency", type=float, default=0.0)
    calc.add_argument("--fidelity", type=float, default=0.0)
    calc.set_defaults(func=cmd_calc)

    def scenario_command(name, func, help_text, sim=False, default_format="json"):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="scenario TOML file")
        p.add_argument("--format", choices=("csv", "json"), default=default_format)
        p.add_argument("--output", help="write results here instead of stdout")
        if sim:
            p.add_argument("--seed", type=int)
            p.add_argument("--trials", type=int)
            p.add_argument("--max-time", type=float, help="simulated seconds per trial")
            p.add_argument("--max-pairs", type=int, help="deliveries per trial (0 = unlimited)")
            p.add_argument("--workers", type=int, default=None, help="parallel worker processes")
        p.set_defaults(func=func)
        return p

    scenario_command("link", cmd_link, "one-link heralding rate and fidelity")
    scenario_command("chain", cmd_chain, "simulate the scenario", sim=True, default_format="csv")
    scenario_command("analytic", cmd_analytic, "expected delivery time of a 1- or 2-link chain")
    sw = scenario_command("sweep", cmd_sweep, "simulate over one parameter axis", sim=True, default_format="csv")
    sw.add_argument("--axis", required=True, choices=SWEEP_AXES)
    sw.add_argument("--values", required=True, help="comma list; a,b,...,z expands a progression")
    sw.add_argument("--repeaters", help="comma list of repeater counts (default: from the scenario)")
    sw.add_argument("--baseline-source-rate", type=float, default=None,
                    help="add direct-transmission rows for this source rate [1/s]")

    res = sub.add_parser("resources", help="nested-purification resource count")
    res.add_argument("--config")
    res.add_argument("--l", type=int)
    res.add_argument("--m", type=int)
    res.add_argument("--levels", type=int)
    res.add_argument("--format", choices=("csv", "json"), default="json")
    res.add_argument("--output")
    res.set_defaults(func=cmd_resources)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ScenarioError, ValueError, OSError, RuntimeError) as exc:
        print(f"qrepeater: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
