"""Command-line entry point.

Exit codes: 0 when every mathematical check passes, 2 when one fails and 1
for usage or configuration errors.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from typing import Optional

import jsonschema
import numpy as np

from . import counterexample as cx
from . import harness
from .errors import (ChainEscapesDomain, DegenerateBase, DomainError, GridTooCoarse,
                     NoAdmissibleBase)
from .experiments import SolveConfig, family_config, osgood_family, solve_preset
from .nonlinearity import CATALOG_IDS, P2_EXPONENTS, from_id, osgood_classify, validate_conditions
from .pucci import EllipticityPair, pucci_minus, pucci_minus_oracle
from .report import (records_csv, svg_loglog, write_csv, write_field, write_json,
                     write_manifest)
from .solver import load_field

EXIT_OK, EXIT_USAGE, EXIT_FAIL = 0, 1, 2

COMMANDS = ("validate-phi", "check-counterexample", "solve", "probe-harnack",
            "estimate-holder", "global-harnack", "min-principle", "all")

_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "nl": {"type": "string"},
        "lam": _pos, "Lam": _pos,
        "cn": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
        "C": {"type": "number", "minimum": 1},
        "C_grid": {"type": "array", "items": {"type": "number", "minimum": 1}, "minItems": 1},
        "side": {"enum": ["super", "sub"]},
        "dim": {"enum": [1, 2]},
        "radius": _pos,
        "cells": {"type": "integer", "minimum": 2},
        "t_start": _num, "t_end": _num,
        "data": {"type": "string"},
        "scale": _num, "shift": _num,
        "save_factor": _pos,
        "eps0": _pos,
        "k": {"type": "integer", "minimum": 1},
        "grid_n": {"type": "integer", "minimum": 4},
        "sweep": {"type": "boolean"},
        "eps_values": {"type": "array", "items": _pos, "minItems": 1},
        "direction": {"enum": ["forward", "backward", "both"]},
        "field": {"type": "string"},
        "family_cells": {"type": "integer", "minimum": 8},
        "samples": {"type": "integer", "minimum": 3},
        "seed": {"type": "integer", "minimum": 0},
    },
}

DEFAULTS = {
    "nl": "identity", "lam": 1.0, "Lam": 2.0, "cn": 1.0, "C": 2.0,
    "C_grid": list(harness.DEFAULT_C_GRID), "side": "super", "dim": 1, "radius": 2.0,
    "cells": 256, "t_start": -1.0, "t_end": 0.0, "data": "gaussian", "scale": 1.0,
    "shift": 0.0, "save_factor": 0.5, "eps0": 1.0, "k": 256, "grid_n": 64, "sweep": False,
    "eps_values": [0.1, 0.01, 0.001], "direction": "both", "family_cells": 160,
    "samples": 33, "seed": 0,
}
COMMAND_DEFAULTS = {"min-principle": {"nl": "logpow:beta=1"},
                    "probe-harnack": {"nl": "logpow:beta=1"},
                    "estimate-holder": {"nl": "logpow:beta=1"},
                    "solve": {"nl": "logpow:beta=1"}}


class ConfigError(Exception):
    pass


# ---------------------------------------------------------------------------
# config and field resolution
# ---------------------------------------------------------------------------

def resolve_config(command: str, path: Optional[str], overrides: dict) -> dict:
    cfg = dict(DEFAULTS)
    cfg.update(COMMAND_DEFAULTS.get(command, {}))
    if path:
        try:
            with open(path) as fh:
                user = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"{path}: {exc}") from None
        try:
            jsonschema.validate(user, CONFIG_SCHEMA)
        except jsonschema.ValidationError as exc:
            where = "/".join(map(str, exc.absolute_path)) or "<root>"
            raise ConfigError(f"{path}: {where}: {exc.message}") from None
        cfg.update(user)
    cfg.update({k: v for k, v in overrides.items() if v is not None})
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"{path or '<command line>'}: {exc.message}") from None
    if cfg["lam"] > cfg["Lam"]:
        raise ConfigError(f"{path or '<command line>'}: need lam <= Lam")
    if cfg["t_end"] <= cfg["t_start"]:
        raise ConfigError(f"{path or '<command line>'}: need t_start < t_end")
    try:
        from_id(cfg["nl"])
    except ValueError as exc:
        raise ConfigError(f"{path or '<command line>'}: {exc}") from None
    return cfg


def solve_config(cfg: dict) -> SolveConfig:
    return SolveConfig(data=cfg["data"], side=cfg["side"], lam=cfg["lam"], Lam=cfg["Lam"],
                       dim=cfg["dim"], radius=cfg["radius"], cells=cfg["cells"],
                       t_start=cfg["t_start"], t_end=cfg["t_end"],
                       save_factor=cfg["save_factor"], scale=cfg["scale"], shift=cfg["shift"])


def load_probe_field(cfg: dict, out: str, files: list):
    """Analytic id, manifest path, or a field solved from the config."""
    spec = cfg.get("field")
    if spec:
        if spec.endswith(".json"):
            if not os.path.exists(spec):
                raise ConfigError(f"field manifest {spec} does not exist")
            return harness.GridField(load_field(spec))
        try:
            return harness.analytic_field(spec, cfg["dim"], samples=cfg["samples"],
                                          space_bounds=(-cfg["radius"], cfg["radius"]),
                                          time_bounds=(cfg["t_start"], cfg["t_end"]))
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    f = solve_preset(solve_config(cfg), from_id(cfg["nl"]))
    files.append(write_field(out, "field", f))
    files.append(os.path.join(out, "field.csv"))
    return harness.GridField(f)


# ---------------------------------------------------------------------------
# commands; each returns (passed, summary)
# ---------------------------------------------------------------------------

def cmd_validate_phi(cfg, out, files):
    nl = from_id(cfg["nl"])
    rep = validate_conditions(nl)
    osg = osgood_classify(nl)
    body = {"nl": cfg["nl"], "conditions": rep.to_dict(), "osgood": osg.to_dict()}
    files.append(write_json(os.path.join(out, "phi.json"), body))
    files.append(write_csv(os.path.join(out, "p2.csv"), ["j", "q"],
                           zip(P2_EXPONENTS, rep.p2_sequence)))
    return rep.all_pass, body


def _counterexample_body(eps0, k, grid_n):
    params = cx.make_params(eps0, k)
    grid = cx.GridSpec(n=grid_n)
    coef = cx.coefficient_residuals(params)
    iface = cx.interface_mismatch(params)
    ineq = cx.inequality_check(params, grid)
    blow = cx.harnack_blowup(params, grid)
    checks = {"coefficients": max(coef.values()) <= 1e-12,
              "interface": max(iface.values()) <= 1e-9,
              "inequality": ineq.passed, "blowup": blow.ok}
    body = {"params": params.to_dict(), "coefficient_residuals": coef,
            "interface_mismatch": iface, "inequality": ineq.to_dict(),
            "blowup": blow.to_dict(), "checks": checks}
    return body, checks


def cmd_check_counterexample(cfg, out, files):
    try:
        body, checks = _counterexample_body(cfg["eps0"], cfg["k"], cfg["grid_n"])
    except DomainError as exc:
        raise ConfigError(str(exc)) from None
    passed = all(checks.values())
    if cfg["sweep"]:
        sweep = cx.k_sweep(cfg["eps0"], cx.GridSpec(n=cfg["grid_n"]))
        body["sweep"] = sweep.to_dict()
        files.append(write_csv(os.path.join(out, "sweep.csv"), ["k", "passed"],
                               [(k, "" if v is None else int(v))
                                for k, v in sweep.passes.items()]))
    files.append(write_json(os.path.join(out, "counterexample.json"), body))
    return passed, body


def cmd_solve(cfg, out, files):
    t0 = time.perf_counter()
    f = solve_preset(solve_config(cfg), from_id(cfg["nl"]))
    files.append(write_field(out, "field", f))
    files.append(os.path.join(out, "field.csv"))
    body = {"grid": f.grid.to_dict(), "meta": f.meta}
    files.append(write_json(os.path.join(out, "solve.json"), body))
    _runtime(out, time.perf_counter() - t0)
    return True, body


def cmd_probe(cfg, out, files):
    fld = load_probe_field(cfg, out, files)
    nl = from_id(cfg["nl"])
    body = {"cn": cfg["cn"], "C_grid": cfg["C_grid"]}
    passed = True
    for kind, fn in (("backward", harness.backward_probe), ("forward", harness.forward_probe)):
        try:
            rep = fn(fld, nl, cfg["C_grid"], cfg["cn"])
            body[kind] = rep.to_dict()
            files.append(records_csv(os.path.join(out, f"probe_{kind}.csv"), rep.records))
            passed &= rep.passed
        except (DegenerateBase, NoAdmissibleBase) as exc:
            body[kind] = {"error": type(exc).__name__, "message": str(exc)}
            passed = False
    files.append(write_json(os.path.join(out, "probe.json"), body))
    return passed, body


def cmd_holder(cfg, out, files):
    fld = load_probe_field(cfg, out, files)
    nl = from_id(cfg["nl"])
    C = cfg["C"]
    if C <= 1:
        raise ConfigError("estimate-holder needs C > 1")
    rep = harness.holder_estimate(fld, nl, C, cfg["cn"])
    body = {"L2": C, **rep.to_dict()}
    files.append(write_json(os.path.join(out, "holder.json"), body))
    rows = [(k, r, o, rep.delta ** k * rep.omega0, f)
            for k, (r, o, f) in enumerate(zip(rep.rhos, rep.oscs, rep.flags))]
    files.append(write_csv(os.path.join(out, "holder.csv"),
                           ["k", "rho", "osc", "bound", "pass"], rows))
    files.append(svg_loglog(os.path.join(out, "holder.svg"),
                            [("osc", rep.rhos, rep.oscs),
                             ("delta^k omega0", rep.rhos, [r[3] for r in rows])],
                            "oscillation decay", "rho", "osc"))
    return rep.passed, body


def cmd_chain(cfg, out, files):
    fld = load_probe_field(cfg, out, files)
    nl = from_id(cfg["nl"])
    dirs = ["forward", "backward"] if cfg["direction"] == "both" else [cfg["direction"]]
    tl, th = fld.time_bounds
    body = {"C": cfg["C"], "cn": cfg["cn"]}
    passed = True
    ran = 0
    for d in dirs:
        if (d == "forward" and tl >= 0) or (d == "backward" and th <= 0):
            body[d] = {"skipped": "field does not cover this time direction"}
            continue
        try:
            rep = harness.global_chain(fld, nl, cfg["C"], cfg["cn"], d)
        except ChainEscapesDomain as exc:
            if cfg["direction"] == "both":
                body[d] = {"skipped": str(exc)}
                continue
            raise
        ran += 1
        body[d] = rep.to_dict()
        passed &= rep.passed
        rows = [(i, r, t, (rep.rhos[i - 1] if i else math.nan), m)
                for i, (r, t, m) in enumerate(zip(rep.radii, rep.times, rep.levels))]
        files.append(write_csv(os.path.join(out, f"chain_{d}.csv"),
                               ["i", "r", "t", "rho", "M"], rows))
    if not ran:
        raise ConfigError("the field covers neither chain direction")
    files.append(write_json(os.path.join(out, "chain.json"), body))
    return passed, body


def cmd_min_principle(cfg, out, files):
    nl = from_id(cfg["nl"])
    eps_values = sorted(cfg["eps_values"], reverse=True)
    spec = cfg.get("field")
    if spec:
        if not spec.startswith("constant"):
            raise ConfigError("min-principle accepts only 'constant' analytic families")
        family = [(e, harness.analytic_field(f"constant:{e}", cfg["dim"],
                                             time_bounds=(cfg["t_start"], cfg["t_end"])))
                  for e in eps_values]
    else:
        family = osgood_family(eps_values, nl, family_config(cfg["family_cells"], "bump"))
    rep = harness.minimum_principle_check(family, nl, cfg["C"], cfg["cn"])
    body = rep.to_dict()
    files.append(write_json(os.path.join(out, "minprinciple.json"), body))
    if rep.rows:
        files.append(records_csv(os.path.join(out, "minprinciple.csv"), rep.rows))
        eps = [r["eps"] for r in rep.rows]
        files.append(svg_loglog(os.path.join(out, "minprinciple.svg"),
                                [("integral", eps, [r["integral"] for r in rep.rows]),
                                 ("M_K", eps, [r["M_K"] for r in rep.rows]),
                                 ("|t_K|", eps, [r["abs_t_K"] for r in rep.rows])],
                                "chain end values", "eps", "value"))
    return rep.passed, body


def cmd_all(cfg, out, files):
    """Desk-scale pass through every experiment."""
    summary = {}
    ok = True

    def sub(name):
        d = os.path.join(out, name)
        os.makedirs(d, exist_ok=True)
        return d

    # Pucci operator against the brute-force oracle, driven by the seed
    rng = np.random.default_rng(cfg["seed"])
    worst = 0.0
    rows = []
    for i in range(200):
        n = 2 + i % 2
        a = rng.standard_normal((n, n))
        M = a + a.T
        lam = float(rng.uniform(0.1, 2.0))
        e = EllipticityPair(lam, lam + float(rng.uniform(0.0, 3.0)))
        v, w = pucci_minus(M, e), pucci_minus_oracle(M, e)
        worst = max(worst, abs(v - w))
        rows.append((i, n, e.lam, e.Lam, v, w))
    files.append(write_csv(os.path.join(sub("pucci"), "pucci.csv"),
                           ["i", "n", "lam", "Lam", "pucci_minus", "oracle"], rows))
    summary["pucci"] = {"seed": cfg["seed"], "max_abs_diff": worst, "passed": worst <= 1e-9}
    ok &= worst <= 1e-9

    expected = {"identity": True, "logpow:beta=1": True, "pow:eps=0.5": False, "root": True}
    phi_rows = []
    for ident in CATALOG_IDS:
        rep = validate_conditions(from_id(ident))
        verdict = osgood_classify(from_id(ident)).verdict
        phi_rows.append({"nl": ident, "admissible": rep.all_pass, "osgood": verdict,
                         "expected_admissible": expected[ident]})
        ok &= rep.all_pass == expected[ident]
    files.append(records_csv(os.path.join(sub("phi"), "catalog.csv"), phi_rows))
    summary["phi"] = phi_rows

    cx_rows = []
    for eps0, k_min in ((1.0, 256), (0.5, 2 ** 20)):
        for k, want in ((k_min, True), (k_min // 2, False)):
            body, checks = _counterexample_body(eps0, k, 32)
            good = checks["inequality"] == want and checks["coefficients"] and checks["interface"]
            cx_rows.append({"eps0": eps0, "k": k, "inequality": checks["inequality"],
                            "expected": want, "blowup": checks["blowup"]})
            ok &= good
    files.append(records_csv(os.path.join(sub("counterexample"), "counterexample.csv"), cx_rows))
    summary["counterexample"] = cx_rows

    d = sub("solve")
    nl = from_id("logpow:beta=1")
    f = solve_preset(SolveConfig(data="gaussian", cells=cfg["cells"]), nl)
    files.append(write_field(d, "field", f))
    files.append(os.path.join(d, "field.csv"))
    fld = harness.GridField(f)

    d = sub("probe")
    probes = {}
    for kind, fn in (("backward", harness.backward_probe), ("forward", harness.forward_probe)):
        rep = fn(fld, nl, cfg["C_grid"], cfg["cn"])
        probes[kind] = {"c_star": rep.c_star, "c_refined": rep.c_refined, "passed": rep.passed}
        files.append(records_csv(os.path.join(d, f"probe_{kind}.csv"), rep.records))
        ok &= rep.passed
    files.append(write_json(os.path.join(d, "probe.json"), probes))
    summary["probe"] = probes

    d = sub("holder")
    c_star = probes["forward"]["c_star"] or 2.0
    hold = harness.holder_estimate(fld, nl, max(c_star, 1.0 + 1e-9), cfg["cn"])
    files.append(write_json(os.path.join(d, "holder.json"), hold.to_dict()))
    sq = harness.holder_estimate(harness.analytic_field("sqrt-abs"), from_id("identity"), 2.0)
    files.append(svg_loglog(os.path.join(d, "holder.svg"), [("|x1|^(1/2)", sq.rhos, sq.oscs)],
                            "oscillation decay", "rho", "osc"))
    summary["holder"] = {"solved": hold.passed, "sqrt_abs_alpha_hat": sq.alpha_hat}
    ok &= hold.passed and sq.alpha_hat is not None and abs(sq.alpha_hat - 0.5) <= 0.05

    d = sub("chain")
    const = harness.global_chain(harness.analytic_field("constant:5"), from_id("identity"),
                                 2.0, 1.0)
    solved = harness.global_chain(fld, nl, cfg["C"], cfg["cn"], "forward")
    files.append(write_json(os.path.join(d, "chain.json"),
                            {"constant": const.to_dict(), "solved": solved.to_dict()}))
    summary["chain"] = {"constant_K": const.K, "constant_t_K": const.t_K,
                        "solved_passed": solved.passed}
    ok &= const.K == 8 and const.t_K == -0.375 and solved.passed

    d = sub("min-principle")
    family = osgood_family(cfg["eps_values"], nl, family_config(cfg["family_cells"], "bump"))
    mp = harness.minimum_principle_check(family, nl, cfg["C"], cfg["cn"])
    files.append(write_json(os.path.join(d, "minprinciple.json"), mp.to_dict()))
    files.append(records_csv(os.path.join(d, "minprinciple.csv"), mp.rows))
    summary["min_principle"] = {"passed": mp.passed, "c_tilde_max": mp.c_tilde_max}
    ok &= mp.passed

    files.append(write_json(os.path.join(out, "summary.json"), summary))
    return bool(ok), summary


HANDLERS: dict = {
    "validate-phi": cmd_validate_phi,
    "check-counterexample": cmd_check_counterexample,
    "solve": cmd_solve,
    "probe-harnack": cmd_probe,
    "estimate-holder": cmd_holder,
    "global-harnack": cmd_chain,
    "min-principle": cmd_min_principle,
    "all": cmd_all,
}


def _runtime(out: str, seconds: float) -> None:
    # wall time stays out of the hashed outputs so reruns are byte-identical
    with open(os.path.join(out, "runtime.txt"), "w") as fh:
        fh.write(f"{seconds:.3f}\n")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="extremal-harnack",
                description="Harnack and Hoelder experiments for extremal parabolic equations.")
    subs = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        s = subs.add_parser(name)
        s.add_argument("--config", help="JSON config file")
        s.add_argument("--out", help="output directory (default: out/<command>)")
        s.add_argument("--seed", type=int, help="seed for randomized checks")
        s.add_argument("--nl", help="nonlinearity id, e.g. identity or logpow:beta=1")
        if name in ("probe-harnack", "estimate-holder", "global-harnack", "min-principle"):
            s.add_argument("--field", help="analytic id (constant:<v>, affine:<v>, sqrt-abs) "
                                           "or a field manifest written by 'solve'")
            s.add_argument("--C", type=float, dest="C", help="Harnack constant")
        if name == "check-counterexample":
            s.add_argument("--eps0", type=float)
            s.add_argument("--k", type=int)
            s.add_argument("--grid-n", type=int, dest="grid_n")
            s.add_argument("--sweep", action="store_true", default=None)
    return p


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    overrides = {k: v for k, v in vars(args).items()
                 if k not in ("command", "config", "out")}
    try:
        cfg = resolve_config(args.command, args.config, overrides)
        out = args.out or os.path.join("out", args.command)
        os.makedirs(out, exist_ok=True)
        files: list = []
        t0 = time.perf_counter()
        passed, _ = HANDLERS[args.command](cfg, out, files)
        files.append(write_json(os.path.join(out, "config.json"), cfg))
        write_manifest(out, files, {"command": args.command, "passed": passed})
        if args.command != "solve":
            _runtime(out, time.perf_counter() - t0)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except GridTooCoarse as exc:
        print(f"grid too coarse: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except (ChainEscapesDomain, DegenerateBase, NoAdmissibleBase) as exc:
        print(f"{args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    print(f"{args.command}: {'pass' if passed else 'FAIL'} (outputs in {out})")
    return EXIT_OK if passed else EXIT_FAIL


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
