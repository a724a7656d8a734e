"""Command-line front end: reproduction data and parameter sweeps.

Every subcommand writes CSV (header row, 12 significant digits, LF line
endings) or JSON to ``--out`` or stdout. Exit codes: 0 success, 2 invalid
parameters, 3 infeasible request (with a JSON body explaining why).
"""

from __future__ import annotations

import argparse
import io
import json
import math
import sys
from typing import Optional

import numpy as np

from . import entanglement as ent
from . import sampling
from . import teleport as tp

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_INFEASIBLE = 3

DEFAULTS = {
    "seed": 0,
    "format": None,
    "grid": "200x200",
    "f_min": None,
    "r": None,
    "tau": None,
    "omega_sq": None,
    "zeta_target": None,
    "samples": None,
    "trials": 100,
    "rounds": None,
    "x": 0.0,
    "p": 0.0,
    "mode": "equal-fidelity",
    "workers": 1,
}

TARGETS = ("fig2a", "fig2b", "fig2c", "fig2d", "fig4", "table1", "appc")


class ValidationError(ValueError):
    pass


class InfeasibleResult(Exception):
    def __init__(self, body: dict):
        super().__init__(body.get("reason", "infeasible"))
        self.body = body


# -- output -----------------------------------------------------------------


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return f"{v:.12g}"
    return str(v)


def to_csv(columns, rows) -> str:
    buf = io.StringIO(newline="")
    buf.write(",".join(columns) + "\n")
    for row in rows:
        buf.write(",".join(fmt(v) for v in row) + "\n")
    return buf.getvalue()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        obj = float(obj)
        return obj if math.isfinite(obj) else str(obj)
    return obj


def to_json(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2) + "\n"


class Table:
    """Columns + rows, rendered as CSV or as ``{"columns", "rows"}`` JSON."""

    def __init__(self, columns, rows, meta: Optional[dict] = None):
        self.columns = list(columns)
        self.rows = [list(r) for r in rows]
        self.meta = meta or {}

    def render(self, fmt_name: str) -> str:
        if fmt_name == "csv":
            return to_csv(self.columns, self.rows)
        return to_json({**self.meta, "columns": self.columns, "rows": self.rows})


def emit(text: str, out: Optional[str]) -> None:
    if out:
        with open(out, "w", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# -- validation -------------------------------------------------------------


def parse_grid(spec: str):
    try:
        a, b = spec.lower().split("x")
        n, m = int(a), int(b)
    except ValueError:
        raise ValidationError(f"--grid must look like NxM, got {spec!r}") from None
    if n < 2 or m < 2:
        raise ValidationError("grid dimensions must be at least 2")
    return n, m


def parse_list(value, cast=float):
    if value is None:
        return None
    if isinstance(value, (list, tuple)):
        return [cast(v) for v in value]
    if isinstance(value, (int, float)):
        return [cast(value)]
    try:
        return [cast(v) for v in str(value).split(",") if v.strip()]
    except ValueError:
        raise ValidationError(f"cannot parse list {value!r}") from None


def need(cfg, key, flag):
    if cfg.get(key) is None:
        raise ValidationError(f"{flag} is required")
    return cfg[key]


def check_range(name, v, lo=None, hi=None, lo_open=False, hi_open=False):
    if not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ValidationError(f"{name} must be a finite number, got {v!r}")
    if lo is not None and (v < lo or (lo_open and v == lo)):
        raise ValidationError(f"{name}={v} below allowed range")
    if hi is not None and (v > hi or (hi_open and v == hi)):
        raise ValidationError(f"{name}={v} above allowed range")
    return v


# -- repro targets ----------------------------------------------------------


def repro_fig2a(cfg):
    r = check_range("--r", cfg.get("r") if cfg.get("r") is not None else 0.8, 0)
    n, _ = parse_grid(cfg["grid"])
    taus = list(np.linspace(0.0, 1.0, n + 1))
    thr = tp.nonclassical_threshold(r)
    if not isinstance(thr, tp.Infeasible):
        taus = sorted(set(taus) | {thr})
    rows = [(t, tp.fidelity_closed(r, [t]), tp.zeta_round(r, [t])) for t in taus]
    return Table(["tau", "F", "zeta"], rows, {"target": "fig2a", "r": r})


def repro_fig2b(cfg):
    f = check_range("--f-min", cfg.get("f_min") or 0.501, 0.5, 1.0, True, True)
    rs = parse_list(cfg.get("r")) or [0.7, 0.8, 0.9]
    rows = []
    for r in rs:
        check_range("--r", r, 0)
        for k, t in enumerate(tp.min_transmissivity_schedule(r, f), start=1):
            rows.append((r, k, t))
    return Table(["r", "n", "tau_min"], rows, {"target": "fig2b", "F_min": f})


def repro_fig2c(cfg):
    fs = parse_list(cfg.get("f_min")) or [0.501, 0.505, 0.51]
    _, m = parse_grid(cfg["grid"])
    r_max = 1.0
    rs = np.linspace(0.0, r_max, m + 1)[1:]
    rows = []
    for f in fs:
        check_range("--f-min", f, 0.5, 1.0, True, True)
        rows += [(f, r, tp.equal_fidelity_rounds(r, f)) for r in rs]
    return Table(["F_min", "r", "n_max"], rows, {"target": "fig2c"})


def repro_fig2d(cfg):
    n, m = parse_grid(cfg["grid"])
    rs = np.linspace(0.0, 1.5, n + 1)[1:]
    taus = np.linspace(0.0, 1.0, m + 1)[1:]
    rows = [(r, t, tp.equal_transmissivity_max_rounds(r, t)) for r in rs for t in taus]
    return Table(["r", "tau", "n"], rows, {"target": "fig2d"})


def repro_fig4(cfg):
    n, m = parse_grid(cfg["grid"])
    rs = np.linspace(0.0, 1.5, n + 1)[1:]
    zetas = np.linspace(0.0, 2.0, m + 2)[1:-1]
    rows = [(r, z, ent.detection_number(r, z)) for r in rs for z in zetas]
    return Table(["r", "zeta", "D_n"], rows, {"target": "fig4"})


def repro_table1(cfg):
    z = cfg.get("zeta_target")
    z = ent.ZETA_NEAR_TWO if z is None else check_range("--zeta-target", z, 0, 2, True, True)
    bounds = ent.detection_boundaries(z)
    edges = [0.0] + bounds + [math.inf]
    rows = [(k + 1, edges[k], edges[k + 1]) for k in range(len(edges) - 1)]
    return Table(["D_n", "r_min", "r_max"], rows, {"target": "table1", "zeta_target": z})


def scaling_table(cfg, default_samples=(100, 1000, 10_000, 100_000)):
    r = check_range("--r", cfg.get("r") if cfg.get("r") is not None else 0.8, 0)
    ns = parse_list(cfg.get("samples"), int) or list(default_samples)
    trials = int(cfg["trials"])
    omega = cfg.get("omega_sq")
    omega_pair = None
    if omega is not None:
        w = check_range("--omega-sq", float(omega), 0, None, True)
        omega_pair = (w, w)
    try:
        res = sampling.error_scaling_experiment(r, ns, trials, int(cfg["seed"]), omega_pair, int(cfg["workers"]))
    except ValueError as exc:
        raise ValidationError(str(exc)) from None
    meta = {"target": "appc", "r": r, "samples_per_readout": True, **res.summary()}
    return Table(["N", "mean_zeta", "std_zeta", "stderr"], res.rows(), meta)


REPRO = {
    "fig2a": repro_fig2a,
    "fig2b": repro_fig2b,
    "fig2c": repro_fig2c,
    "fig2d": repro_fig2d,
    "fig4": repro_fig4,
    "table1": repro_table1,
    "appc": scaling_table,
}


# -- subcommands ------------------------------------------------------------


def cmd_repro(cfg):
    target = cfg.get("target")
    if target not in REPRO:
        raise ValidationError(f"unknown target {target!r}; choose from {', '.join(TARGETS)}")
    return REPRO[target](cfg), "csv"


def cmd_teleport_plan(cfg):
    mode = cfg["mode"]
    if mode == "equal-fidelity":
        f = check_range("--f-min", need(cfg, "f_min", "--f-min"), 0.5, 1.0, True, True)
        plan = tp.equal_fidelity_plan(f)
    elif mode == "equal-transmissivity":
        r = check_range("--r", need(cfg, "r", "--r"), 0)
        tau = check_range("--tau", need(cfg, "tau", "--tau"), 0, 1)
        plan = tp.equal_transmissivity_plan(r, tau)
    elif mode == "min-transmissivity":
        r = check_range("--r", need(cfg, "r", "--r"), 0)
        f = check_range("--f-min", cfg.get("f_min") or 0.501, 0.5, 1.0, True, True)
        taus = tp.min_transmissivity_schedule(r, f)
        fids = [tp.fidelity_closed(r, taus, k) for k in range(1, len(taus) + 1)]
        plan = tp.TeleportPlan("min-transmissivity", r, len(taus), taus, fids, f_min=f)
    else:
        raise ValidationError(f"unknown --mode {mode!r}")
    body = plan.to_dict()
    if plan.n_max == 0:
        raise InfeasibleResult({**body, "reason": "no round reaches quantum fidelity"})
    return body, "json"


def cmd_teleport_sim(cfg):
    r = check_range("--r", need(cfg, "r", "--r"), 0)
    taus = parse_list(need(cfg, "tau", "--tau"))
    for t in taus:
        check_range("--tau", t, 0, 1)
    samples = int(cfg.get("samples") or 100_000)
    if samples < 1:
        raise ValidationError("--samples must be positive")
    x = check_range("--x", float(cfg["x"]))
    p = check_range("--p", float(cfg["p"]))
    res = tp.simulate_round(r, taus, None, x, p, samples, int(cfg["seed"]), int(cfg["workers"]))
    body = {
        "r": r,
        "taus": taus,
        "round": len(taus),
        "input": [x, p],
        "fidelity": res.mean,
        "stderr": res.stderr,
        "fidelity_closed": tp.fidelity_closed(r, taus),
        "samples": samples,
        "seed": res.seed,
    }
    return body, "json"


def cmd_entangle_seq(cfg):
    r = check_range("--r", need(cfg, "r", "--r"), 0)
    omega = cfg.get("omega_sq")
    if omega is not None:
        ws = parse_list(omega)
        for w in ws:
            check_range("--omega-sq", w, 0, None, True)
        if len(ws) == 1:
            ws = ws * int(cfg.get("rounds") or 1)
        sched = ent.UnsharpSchedule.equal(r, ws)
        zetas = [ent.zeta_sequential(sched, n) for n in range(1, len(ws) + 1)]
        report = ent.DetectionReport(r, None, ws, zetas, ent.detection_count(sched), [z < 2 for z in zetas])
    else:
        z = cfg.get("zeta_target")
        z = ent.ZETA_NEAR_TWO if z is None else check_range("--zeta-target", z, 0, 2, True, True)
        report = ent.equal_zeta_chain(r, z)
    body = report.to_dict()
    if report.d_n == 0:
        raise InfeasibleResult({**body, "reason": "no round detects entanglement"})
    return body, "json"


def cmd_sample_scaling(cfg):
    return scaling_table(cfg), "csv"


COMMANDS = {
    "repro": cmd_repro,
    "teleport-plan": cmd_teleport_plan,
    "teleport-sim": cmd_teleport_sim,
    "entangle-seq": cmd_entangle_seq,
    "sample-scaling": cmd_sample_scaling,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--r", type=str, default=None, help="squeezing strength (comma list for fig2b)")
    common.add_argument("--tau", type=str, default=None, help="transmissivity, or comma-separated schedule")
    common.add_argument("--f-min", type=str, default=None, help="minimum fidelity (comma list for fig2c)")
    common.add_argument("--omega-sq", type=str, default=None, help="unsharpness omega^2 (comma list allowed)")
    common.add_argument("--zeta-target", type=float, default=None)
    common.add_argument("--samples", type=str, default=None, help="sample count (comma list for scaling)")
    common.add_argument("--trials", type=int, default=None)
    common.add_argument("--rounds", type=int, default=None)
    common.add_argument("--x", type=float, default=None, help="input coherent amplitude, x quadrature")
    common.add_argument("--p", type=float, default=None, help="input coherent amplitude, p quadrature")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--workers", type=int, default=None)
    common.add_argument("--grid", type=str, default=None, help="grid resolution NxM")
    common.add_argument("--out", type=str, default=None)
    common.add_argument("--format", choices=("csv", "json"), default=None)
    common.add_argument("--config", type=str, default=None, help="JSON file of parameters; flags win")

    parser = argparse.ArgumentParser(prog="cvseq", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    rp = sub.add_parser("repro", parents=[common], help="data behind a figure or table")
    rp.add_argument("target", choices=TARGETS)
    tpp = sub.add_parser("teleport-plan", parents=[common], help="sequential teleportation planners")
    tpp.add_argument("--mode", choices=("equal-fidelity", "equal-transmissivity", "min-transmissivity"), default=None)
    sub.add_parser("teleport-sim", parents=[common], help="Monte-Carlo teleportation fidelity")
    sub.add_parser("entangle-seq", parents=[common], help="sequential unsharp entanglement detection")
    sub.add_parser("sample-scaling", parents=[common], help="finite-sample error scaling")
    return parser


def _coerce(cfg: dict) -> dict:
    for key in ("r", "tau", "f_min"):
        v = cfg.get(key)
        if isinstance(v, str) and "," not in v:
            try:
                cfg[key] = float(v)
            except ValueError:
                raise ValidationError(f"--{key.replace('_', '-')} must be a number") from None
    return cfg


def resolve_config(args: argparse.Namespace) -> dict:
    cfg = dict(DEFAULTS)
    if args.config:
        try:
            with open(args.config) as fh:
                file_cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ValidationError(f"cannot read config {args.config}: {exc}") from None
        cfg.update({k.replace("-", "_"): v for k, v in file_cfg.items()})
    cfg.update({k: v for k, v in vars(args).items() if v is not None})
    return _coerce(cfg)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        if not 0 <= int(cfg["seed"]) < 2**64:
            raise ValidationError("--seed must be a 64-bit unsigned integer")
        result, default_format = COMMANDS[args.command](cfg)
        fmt_name = cfg.get("format") or default_format
        text = result.render(fmt_name) if isinstance(result, Table) else to_json(result)
        emit(text, cfg.get("out"))
        return EXIT_OK
    except InfeasibleResult as exc:
        emit(to_json(exc.body), args.out)
        return EXIT_INFEASIBLE
    except (ValidationError, ValueError) as exc:
        sys.stderr.write(f"cvseq: error: {exc}\n")
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
