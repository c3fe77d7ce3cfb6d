"""Command-line front end.

Every subcommand reads a flat set of parameters (defaults, then an optional
JSON config file, then flags), calls one library operation and writes JSON
(``"schema": "v1"``) or CSV.  Exit codes: 0 success, 2 bad configuration or
input outside a documented domain, 3 numerical, accuracy or invariant
failure (a diagnostic JSON object is printed to stdout).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys

import numpy as np

from .correction import build_correction, default_L
from .distributions import Distribution, tail_table, zeta_diff
from .errors import AccuracyError, DomainError, TauberianError
from .ls_transform import sign_check
from .mg1 import Mg1Model, geometric, mg1_tail_report
from .tailbound import appendix_asymptotics, bound_report, fitted_form, theorem_check, x_grid
from .verification import run_suite

SCHEMA = "v1"
log = logging.getLogger("tauberian")


class ConfigError(Exception):
    pass


DIST = {"dist": "pareto", "r": 1.0}
DEFAULTS = {
    "analyze-dist": {**DIST, "x_min": 1.0, "x_max": 1e4, "per_decade": 10},
    "fit-singularity": {**DIST, "order": 3},
    "verify-lemmas": {"suite": "all", "seed": 0},
    "bound": {**DIST, "L": None, "delta": None, "x_min": 10.0, "x_max": 1e4, "per_decade": 4},
    "theorem-check": {**DIST, "L": None, "x_min": 10.0, "x_max": 1e4, "per_decade": 4, "tol": None},
    "mg1": {"a_mean": 0.7, "b_r": 3, "N": 10000, "tol": 0.15},
    "appendix": {"case": "A2", "params": "2,3", "x_min": 10.0, "x_max": 1e3, "per_decade": 4},
}
COMMON = {"output": None, "format": "json"}


# -- argument parsing ----------------------------------------------------------------


def _parser() -> argparse.ArgumentParser:
    S = argparse.SUPPRESS  # flags absent from the command line do not override the config
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=S, help="flat JSON file with parameters")
    common.add_argument("--output", default=S, help="write here instead of stdout")
    common.add_argument("--format", choices=("json", "csv"), default=S)
    common.add_argument("-q", "--quiet", action="store_true", default=S, help="do not log achieved tolerances")

    def dist_args(p):
        p.add_argument("--dist", choices=("pareto", "zeta_diff"), default=S)
        p.add_argument("--r", type=float, default=S)

    def window(p):
        p.add_argument("--x-min", dest="x_min", type=float, default=S)
        p.add_argument("--x-max", dest="x_max", type=float, default=S)
        p.add_argument("--per-decade", dest="per_decade", type=int, default=S)

    top = argparse.ArgumentParser(prog="tauberian", description=__doc__.split("\n")[0])
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze-dist", parents=[common], help="exact tail and local log-log slope")
    dist_args(p)
    window(p)

    p = sub.add_parser("fit-singularity", parents=[common], help="fit the singularity form of the transform")
    dist_args(p)
    p.add_argument("--order", type=int, default=S)

    p = sub.add_parser("verify-lemmas", parents=[common], help="numerical lemma checks")
    p.add_argument("--suite", choices=("extremal", "correction", "signs", "all"), default=S)
    p.add_argument("--seed", type=int, default=S)

    for name in ("bound", "theorem-check"):
        p = sub.add_parser(name, parents=[common], help="tail bounds" if name == "bound" else
                           "decay rate and scaled-bound check")
        dist_args(p)
        window(p)
        p.add_argument("--L", type=int, default=S)
        if name == "bound":
            p.add_argument("--delta", type=float, default=S)
        else:
            p.add_argument("--tol", type=float, default=S)

    p = sub.add_parser("mg1", parents=[common], help="stationary tail of the M/G/1-type chain")
    p.add_argument("--a-mean", dest="a_mean", type=float, default=S)
    p.add_argument("--b-r", dest="b_r", type=int, default=S)
    p.add_argument("--N", type=int, default=S)
    p.add_argument("--tol", type=float, default=S)

    p = sub.add_parser("appendix", parents=[common], help="scaled appendix integrals")
    p.add_argument("--case", choices=("A1", "A2"), default=S)
    p.add_argument("--params", default=S, help="two comma-separated numbers, e.g. 2,3")
    window(p)
    return top


def resolve(argv) -> tuple[str, dict, bool]:
    """Merge defaults, config file and flags; reject unknown keys."""
    ns = vars(_parser().parse_args(argv))
    command = ns.pop("command")
    quiet = bool(ns.pop("quiet", False))
    params = {**DEFAULTS[command], **COMMON}
    path = ns.pop("config", None)
    if path is not None:
        try:
            with open(path) as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        if not isinstance(cfg, dict):
            raise ConfigError("config must be a flat JSON object")
        cfg = {k.replace("-", "_"): v for k, v in cfg.items()}
        if cfg.pop("command", command) != command:
            raise ConfigError("config command does not match the subcommand")
        unknown = set(cfg) - set(params)
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        bad = [k for k, v in cfg.items() if isinstance(v, (dict, list))]
        if bad:
            raise ConfigError(f"config values must be scalars: {bad}")
        params.update(cfg)
    params.update(ns)
    if params["format"] not in ("json", "csv"):
        raise ConfigError("format must be json or csv")
    return command, params, quiet


# -- commands -----------------------------------------------------------------------


def _dist(p) -> Distribution:
    return Distribution.from_dict({"kind": p["dist"], "r": p["r"]})


def _window(p):
    return x_grid((float(p["x_min"]), float(p["x_max"])), int(p["per_decade"]))


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([v if isinstance(v, (str, bool)) else repr(float(v)) for v in row])
    return buf.getvalue()


def cmd_analyze_dist(p):
    tab = tail_table(_dist(p), float(p["x_max"]), float(p["x_min"]), int(p["per_decade"]))
    result = {"x": tab[:, 0].tolist(), "tail": tab[:, 1].tolist(), "slope": tab[:, 2].tolist()}
    log.info("last local slope %.6f", tab[-1, 2])
    return result, _csv(["x", "tail", "slope"], tab), True


def cmd_fit_singularity(p):
    form = fitted_form(_dist(p), order=int(p["order"]))
    ok, msg = sign_check(form)
    log.info("fit residual %.3e", form.residual)
    result = {**json.loads(form.to_json()), "residual": form.residual, "sign_ok": ok, "sign_message": msg}
    rows = [("alpha", k, v) for k, v in enumerate(form.alpha)] + [("beta", k, v) for k, v in enumerate(form.beta)]
    return result, _csv(["part", "index", "value"], [(a, str(k), v) for a, k, v in rows]), ok


def cmd_verify_lemmas(p):
    try:
        checks = run_suite(p["suite"], int(p["seed"]))
    except KeyError:
        raise DomainError(f"unknown suite {p['suite']!r}") from None
    for c in checks:
        log.info("%-6s %-45s achieved %.3e tol %.1e %s", c.lemma, c.name, c.achieved, c.tolerance,
                 "pass" if c.passed else "FAIL")
    rows = [(c.lemma, c.name, "pass" if c.passed else "fail", c.achieved, c.tolerance) for c in checks]
    result = {"checks": [c.to_dict() for c in checks], "passed": all(c.passed for c in checks)}
    return result, _csv(["lemma", "name", "status", "achieved", "tolerance"], rows), result["passed"]


def _bound_output(rep):
    log.info("eta %.6f (r predicted %.6g), C_upper %.6g, c_lower %s", rep.eta_estimate, -rep.r_predicted,
             rep.extras["C_upper"], rep.extras["c_lower"])
    return rep.to_dict(), rep.to_csv(), True


def cmd_bound(p):
    dist = _dist(p)
    form = fitted_form(dist)
    L = default_L(form.r, odd=True) if p["L"] is None else int(p["L"])
    pair = build_correction(form, L)
    delta = None if p["delta"] is None else float(p["delta"])
    return _bound_output(bound_report(dist, pair, _window(p), delta=delta, r=form.r))


def cmd_theorem_check(p):
    L = None if p["L"] is None else int(p["L"])
    tol = None if p["tol"] is None else float(p["tol"])
    rep = theorem_check(_dist(p), L, (float(p["x_min"]), float(p["x_max"])), int(p["per_decade"]), tol)
    return _bound_output(rep)


def cmd_mg1(p):
    model = Mg1Model.build(geometric(float(p["a_mean"])), zeta_diff(int(p["b_r"])))
    rep = mg1_tail_report(model, int(p["N"]), float(p["tol"]))
    log.info("eta_pi %.4f eta_b %.4f eta_pi_pmf %.4f", rep.eta_pi, rep.eta_b, rep.eta_pi_pmf)
    return json.loads(rep.to_json()), rep.to_csv(), True


def cmd_appendix(p):
    try:
        params = tuple(float(v) for v in str(p["params"]).split(","))
    except ValueError:
        raise DomainError(f"cannot parse params {p['params']!r}") from None
    if len(params) != 2:
        raise DomainError("params needs two values")
    xs = _window(p)
    scaled = appendix_asymptotics(p["case"], params, xs)
    result = {"x": xs.tolist(), "scaled": scaled.tolist()}
    return result, _csv(["x", "scaled"], np.c_[xs, scaled]), True


COMMANDS = {
    "analyze-dist": cmd_analyze_dist,
    "fit-singularity": cmd_fit_singularity,
    "verify-lemmas": cmd_verify_lemmas,
    "bound": cmd_bound,
    "theorem-check": cmd_theorem_check,
    "mg1": cmd_mg1,
    "appendix": cmd_appendix,
}


# -- entry point --------------------------------------------------------------------


def _finite(obj):
    """JSON has no NaN or infinity: map them to null."""
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    return obj


def _dump(obj) -> str:
    return json.dumps(_finite(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def _diagnostic(command, params, exc) -> str:
    diag = {"schema": SCHEMA, "command": command, "params": params, "error": type(exc).__name__,
            "message": str(exc)}
    if isinstance(exc, AccuracyError):
        diag["achieved"] = exc.achieved
    return _dump(diag)


def main(argv=None) -> int:
    try:
        command, params, quiet = resolve(argv)
    except ConfigError as exc:
        print(f"tauberian: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:  # argparse reports bad flags with status 2
        return int(exc.code or 0)
    logging.basicConfig(level=logging.WARNING if quiet else logging.INFO, stream=sys.stderr,
                        format="%(message)s", force=True)
    try:
        result, csv_text, ok = COMMANDS[command](params)
    except (DomainError, ValueError, TypeError) as exc:
        print(f"tauberian: {exc}", file=sys.stderr)
        return 2
    except TauberianError as exc:
        sys.stdout.write(_diagnostic(command, params, exc))
        return 3
    if params["format"] == "csv":
        text = csv_text
    else:
        # the output path does not affect results and is left out, so reruns compare byte for byte
        shown = {k: v for k, v in params.items() if k != "output"}
        text = _dump({"schema": SCHEMA, "command": command, "params": shown, "result": result})
    if params["output"] is None:
        sys.stdout.write(text)
    else:
        with open(params["output"], "w") as fh:
            fh.write(text)
    if not ok:
        print(f"tauberian: {command} reported a failed check", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
