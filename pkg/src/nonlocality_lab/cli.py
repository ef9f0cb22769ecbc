"""Command-line driver: each demonstration as a seeded run with a JSON or CSV report.

Exit codes: 0 when every contract holds, 1 when a physics contract fails (the
report lists it under ``failed_contracts``), 2 on a usage error.

CSV layouts (fixed headers):

* ``bohm-trajectory``: ``t,x``
* ``bohm-momentum`` / ``bohm-equivariance``: ``bin_low,bin_high,count``
* ``bohm-contextuality``: ``x0,y0,result1,result2,median_point``
* everything else: ``metric,value`` (flattened report)
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import io
import json
import sys
from typing import Callable

import numpy as np

from . import bohm, entangle, lattice, nogo
from .errors import NonlocalityError
from .hilbert import Basis, Operator, operator_norm
from .measure import SeededRng, perfect_correlation_trial

SCHEMA = "nonlocality-lab/1"


class UsageError(Exception):
    pass


def _jsonable(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _flatten(d: dict, prefix: str = "") -> list[tuple[str, object]]:
    rows = []
    for key, value in d.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            rows.extend(_flatten(value, name + "."))
        elif isinstance(value, (list, tuple)):
            rows.append((name, json.dumps(value, default=_jsonable)))
        else:
            rows.append((name, value))
    return rows


def _histogram_rows(hist: dict) -> list[list]:
    e, c = hist["edges"], hist["counts"]
    return [[e[i], e[i + 1], c[i]] for i in range(len(c))]


# each command returns (result, contracts, checks, csv_table or None)

def cmd_entangle_check(a):
    s = entangle.singlet()
    o = Operator.diagonal([1.0, -1.0])
    singlet_error = float(np.max(np.abs(entangle.partner_operator(s, o).matrix() + o.matrix())))
    gen = SeededRng(a.seed, 10).generator()
    state = entangle.random_state(a.dim, gen)
    residuals, routes, basis_dev = [], [], []
    for _ in range(a.samples):
        op = entangle.random_hermitian(a.dim, gen)
        partner = entangle.partner_operator(state, op)
        residuals.append(entangle.correlation_residual(state, op, partner))
        other = entangle.partner_operator_by_conjugation(state, op)
        routes.append(operator_norm(partner - other))
        chi = Basis.random(a.dim, gen)
        basis_dev.append(entangle.represent_in_basis(state, chi).distance(state.psi))
    result = {
        "singlet_partner_error": singlet_error,
        "max_correlation_residual": max(residuals),
        "max_partner_route_difference": max(routes),
        "max_basis_dependence": max(basis_dev),
        "schmidt_coefficients": state.schmidt_coefficients().tolist(),
    }
    contracts = {
        "singlet_partner_is_minus_o": singlet_error < 1e-12,
        "correlation_residual_below_1e-10": max(residuals) < 1e-10,
        "basis_independence_below_1e-12": max(basis_dev) < 1e-12,
    }
    return result, contracts, ["singlet partner", "partner construction", "basis independence"], None


def cmd_perfect_correlation(a):
    gen = SeededRng(a.seed, 11).generator()
    state = entangle.random_state(a.dim, gen)
    o = entangle.random_hermitian(a.dim, gen)
    report = perfect_correlation_trial(state, o, SeededRng(a.seed, 12), a.trials)
    ok = report.pop("ok")
    return report, {"all_trials_match": ok}, ["perfect correlations"], None


def cmd_epr_lattice(a):
    cfg = lattice.LatticeConfig.odd(a.half_count, a.spacing)
    expected = np.where(cfg.indices == 0, cfg.n_points, 0)
    orth = max(
        max(abs(lattice.orthogonality_sum(cfg, x) - e) for x, e in zip(cfg.points, expected)),
        max(abs(lattice.dual_orthogonality_sum(cfg, p) - e) for p, e in zip(cfg.dual_points, expected)))
    forms = lattice.epr_forms(cfg, a.x0)
    form_err = max(float(np.max(np.abs(forms["plane_waves"] - forms["delta"]))),
                   float(np.max(np.abs(forms["convolution"] - forms["delta"]))))
    state = lattice.build_epr_state(cfg, a.x0)
    pos = lattice.epr_position_correlation(state, SeededRng(a.seed, 20), a.trials)
    mom = lattice.epr_momentum_correlation(state, SeededRng(a.seed, 21), a.trials)
    result = {
        "n_points": cfg.n_points,
        "box": cfg.box,
        "orthogonality_residual": float(orth),
        "form_disagreement": form_err,
        "position": {k: v for k, v in pos.items() if k != "ok"},
        "momentum": {k: v for k, v in mom.items() if k != "ok"},
    }
    contracts = {
        "orthogonality_within_tolerance": orth < 5e-9 * cfg.n_points,
        "forms_agree": form_err < 1e-10,
        "position_correlation": pos["ok"],
        "momentum_anticorrelation": mom["ok"],
    }
    return result, contracts, ["lattice orthogonality", "EPR forms", "EPR correlations"], None


def cmd_clifton_verify(a):
    cset = nogo.build_clifton_set(a.n_points, a.k0, a.m, a.spacing)
    rel = nogo.clifton_relations_check(cset)
    weyl = nogo.weyl_sweep(cset.config)
    search = nogo.clifton_value_map_search(cset)
    result = {"params": cset.params(), "relations": rel, "weyl_max_residual": weyl,
              "value_map": search}
    contracts = {
        "relations_below_1e-10": bool(rel["ok"]),
        "weyl_phase_below_1e-12": weyl < 1e-12,
        "value_map_contradiction": bool(search["contradiction"]),
    }
    return result, contracts, ["anticommutation", "Weyl relation", "value map contradiction"], None


def cmd_vonneumann_demo(a):
    r = nogo.von_neumann_demo()
    contracts = {"eigenvalues_are_plus_minus_one": r["eigenvalue_error"] < 1e-12,
                 "no_sum_is_an_eigenvalue": r["contradiction"]}
    return r, contracts, ["additivity counterexample"], None


def cmd_oscillator_demo(a):
    omegas = np.linspace(a.omega_min, a.omega_max, a.n_omegas)
    r = nogo.oscillator_sweep(a.vp, a.vx, omegas, a.n_max)
    return r, {"incompatible_frequency_found": r["contradiction"]}, ["oscillator energy"], None


def _trajectory_model(a) -> bohm.GaussianPacketModel:
    if a.model == "single":
        return bohm.GaussianPacketModel.single(a.k)
    return bohm.GaussianPacketModel.symmetric(a.k)


def cmd_bohm_trajectory(a):
    model = _trajectory_model(a)
    traj = bohm.integrate_trajectory(model, a.x0, a.t, a.dt)
    result = {"final_time": traj.final_time, "final_position": float(traj.final_position),
              "steps": len(traj.times) - 1, "step": traj.dt, "method": traj.method}
    contracts = {"finite_positions": bool(np.all(np.isfinite(traj.positions)))}
    if a.model == "single" and a.k == 0:
        oracle = bohm.analytic_single_packet(a.x0, traj.times)
        err = np.abs(traj.positions - oracle) / np.maximum(np.abs(oracle), 1e-300)
        err = float(np.max(np.where(oracle == 0, np.abs(traj.positions), err)))
        result["analytic_final_position"] = float(oracle[-1])
        result["max_relative_error"] = err
        contracts["matches_analytic_within_1e-6"] = err <= 1e-6
    if traj.final_time >= 10:
        result["asymptotic_momentum"] = float(bohm.asymptotic_momentum(traj))
    table = (["t", "x"], [[t, x] for t, x in zip(traj.times.tolist(), traj.positions.tolist())])
    return result, contracts, ["guiding equation", "spreading packet"], table


def cmd_bohm_momentum(a):
    r = bohm.momentum_statistics(a.trials, a.horizon, a.seed, a.dt)
    contracts = r.pop("contracts")
    table = (["bin_low", "bin_high", "count"], _histogram_rows(r["histogram"]))
    return r, contracts, ["time-of-flight momentum"], table


def cmd_bohm_equivariance(a):
    model = _trajectory_model(a)
    r = bohm.equivariance_test(model, a.t, a.trials, a.seed, a.dt)
    contracts = r.pop("contracts")
    table = (["bin_low", "bin_high", "count"], _histogram_rows(r["histogram"]))
    return r, contracts, ["equivariance"], table


def cmd_bohm_contextuality(a):
    params = bohm.ContextualityParams(a.k, a.horizon, a.dt, a.trials, a.seed)
    r = bohm.contextuality_report(params)
    contracts = r.pop("contracts")
    s = r.pop("samples")
    rows = np.column_stack([s["x0"], s["y0"], s["result1"], s["result2"], s["median_point"]])
    table = (["x0", "y0", "result1", "result2", "median_point"], rows.tolist())
    return r, contracts, ["momentum contextuality"], table


COMMANDS: dict[str, tuple[Callable, str]] = {
    "entangle-check": (cmd_entangle_check, "partner observables on maximally entangled states"),
    "perfect-correlation": (cmd_perfect_correlation, "sequential measurements of O~ then O"),
    "epr-lattice": (cmd_epr_lattice, "regularized EPR state on a periodic lattice"),
    "clifton-verify": (cmd_clifton_verify, "Clifton operator relations and value-map search"),
    "vonneumann-demo": (cmd_vonneumann_demo, "additivity fails for non-commuting spins"),
    "oscillator-demo": (cmd_oscillator_demo, "oscillator energy vs value assignments"),
    "bohm-trajectory": (cmd_bohm_trajectory, "integrate one Bohmian trajectory"),
    "bohm-momentum": (cmd_bohm_momentum, "time-of-flight momentum statistics"),
    "bohm-equivariance": (cmd_bohm_equivariance, "transport |Psi_0|^2 samples and KS-test"),
    "bohm-contextuality": (cmd_bohm_contextuality, "two momentum experiments on entangled pairs"),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", default="-", help="output file (default: stdout)")
    common.add_argument("--format", choices=("json", "csv"), default="json")

    parser = argparse.ArgumentParser(prog="nonlocality-lab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    p = {name: sub.add_parser(name, parents=[common], help=text, description=text)
         for name, (_, text) in COMMANDS.items()}

    p["entangle-check"].add_argument("--dim", type=int, default=3)
    p["entangle-check"].add_argument("--samples", type=int, default=100)
    p["perfect-correlation"].add_argument("--dim", type=int, default=3)
    p["perfect-correlation"].add_argument("--trials", type=int, default=10_000)

    p["epr-lattice"].add_argument("--half-count", type=int, default=3)
    p["epr-lattice"].add_argument("--spacing", type=float, default=1.0)
    p["epr-lattice"].add_argument("--x0", type=float, default=0.0)
    p["epr-lattice"].add_argument("--trials", type=int, default=1000)

    p["clifton-verify"].add_argument("--n-points", type=int, default=8)
    p["clifton-verify"].add_argument("--k0", type=int, default=1)
    p["clifton-verify"].add_argument("--m", type=int, default=4)
    p["clifton-verify"].add_argument("--spacing", type=float, default=1.0)

    p["oscillator-demo"].add_argument("--vp", type=float, default=1.0)
    p["oscillator-demo"].add_argument("--vx", type=float, default=1.0)
    p["oscillator-demo"].add_argument("--omega-min", type=float, default=0.5)
    p["oscillator-demo"].add_argument("--omega-max", type=float, default=2.0)
    p["oscillator-demo"].add_argument("--n-omegas", type=int, default=31)
    p["oscillator-demo"].add_argument("--n-max", type=int, default=1000)

    for name in ("bohm-trajectory", "bohm-equivariance"):
        p[name].add_argument("--model", choices=("single", "symmetric"), default="single")
        p[name].add_argument("--k", type=float, default=0.0, help="packet boost")
    p["bohm-trajectory"].add_argument("--x0", type=float, default=1.0)
    p["bohm-trajectory"].add_argument("--t", type=float, default=10.0)
    p["bohm-trajectory"].add_argument("--dt", type=float, default=1e-3)
    p["bohm-equivariance"].add_argument("--t", type=float, default=3.0)
    p["bohm-equivariance"].add_argument("--trials", type=int, default=10_000)
    p["bohm-equivariance"].add_argument("--dt", type=float, default=None)

    p["bohm-momentum"].add_argument("--trials", type=int, default=10_000)
    p["bohm-momentum"].add_argument("--horizon", type=float, default=100.0)
    p["bohm-momentum"].add_argument("--dt", type=float, default=0.01)

    defaults = bohm.ContextualityParams()
    p["bohm-contextuality"].add_argument("--k", type=float, default=defaults.k)
    p["bohm-contextuality"].add_argument("--horizon", type=float, default=defaults.horizon)
    p["bohm-contextuality"].add_argument("--dt", type=float, default=defaults.dt)
    p["bohm-contextuality"].add_argument("--trials", type=int, default=defaults.trials)
    return parser


def render(report: dict, table, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(report, indent=2, sort_keys=True, default=_jsonable) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    if table is None:
        writer.writerow(["metric", "value"])
        writer.writerows(_flatten({"result": report["result"], "contracts": report["contracts"]}))
    else:
        header, rows = table
        writer.writerow(header)
        writer.writerows(rows)
    return buf.getvalue()


def execute(args: argparse.Namespace) -> tuple[dict, object]:
    fn, _ = COMMANDS[args.command]
    try:
        result, contracts, checks, table = fn(args)
    except (NonlocalityError, ValueError) as exc:
        raise UsageError(f"{args.command}: {exc}") from exc
    contracts = {k: bool(v) for k, v in contracts.items()}
    config = {k: v for k, v in sorted(vars(args).items()) if k not in ("out", "format")}
    report = {
        "schema": SCHEMA,
        "command": args.command,
        "config": config,
        "seed": args.seed,
        "checks": checks,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(),
        "result": result,
        "contracts": contracts,
        "failed_contracts": [k for k, ok in contracts.items() if not ok],
    }
    report["ok"] = not report["failed_contracts"]
    return report, table


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        report, table = execute(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return 2
    text = render(report, table, args.format)
    if args.out == "-":
        sys.stdout.write(text)
    else:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    if not report["ok"]:
        print(f"failed contracts: {', '.join(report['failed_contracts'])}", file=sys.stderr)
        return 1
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
