"""Command-line driver.

    deepstokes check CONFIG
    deepstokes laminar CONFIG --lambda L
    deepstokes dispersion CONFIG [--scan lo:hi:n]
    deepstokes branch CONFIG
    deepstokes homotopy CONFIG
    deepstokes reconstruct CONFIG --point K

Every subcommand accepts ``--out DIR`` and repeated ``--set key=value``
overrides with dotted keys (``--set grid.nq=32``); values are parsed as
JSON when possible.  The output directory is chosen from ``--out``, then
the DEEPSTOKES_OUTPUT_DIR environment variable, then ``output_dir`` in the
configuration.

Artifacts (CSV floats printed with %.17g):

* check: admissibility.json
* laminar: laminar.csv (p, H, H_p, a), laminar.json (residuals)
* dispersion: dispersion.json, eigenfunction.csv (p, Psi); with --scan also
  scan.csv (lambda, mu)
* branch: branch.csv, one row per accepted point, final line
  ``# termination: <reason>``
* homotopy: homotopy.csv (eps, lambda, gap, order, ok)
* reconstruct: profile.csv (x, eta), field.csv (x, y, u, v, P),
  state.csv (q, p, w, h), streamlines.csv (level, x, y), reconstruct.json

Each run writes manifest.json listing the sha256 of every artifact and the
overrides applied.  Exit codes: 0 ok, 1 internal error, 2 invalid
configuration, 3 inadmissible vorticity, 4 no bifurcation, 5 Newton
failure at the first continuation step.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace

import numpy as np

from . import __version__
from .config import OUTPUT_ENV, RunConfig, load_config
from .continuation import CSV_COLUMNS, epsilon_homotopy, run_branch
from .diagnostics import bernoulli_inequality
from .dispersion import (default_grid, find_bifurcation, mu_derivative, principal_mu,
                         transversality)
from .errors import (AdmissibilityError, ConfigurationError, DomainError, MarginViolation,
                     NewtonFailure, NoBifurcationFound)
from .io import ArtifactWriter
from .laminar import LaminarFlow, verify_laminar, wave_speed
from .physical import height_field, reconstruct, surface_conditions, streamlines
from .vorticity import check_admissible, coefficient_a

EXIT_OK, EXIT_INTERNAL, EXIT_CONFIG, EXIT_INADMISSIBLE, EXIT_NO_BIFURCATION, EXIT_NEWTON = range(6)


class FirstStepFailure(Exception):
    pass


def _parse_set(items) -> dict:
    out = {}
    for item in items or ():
        if "=" not in item:
            raise ConfigurationError(f"override {item!r} is not key=value")
        key, raw = item.split("=", 1)
        try:
            out[key.strip()] = json.loads(raw)
        except json.JSONDecodeError:
            out[key.strip()] = raw
    return out


def _parse_scan(text: str):
    try:
        lo, hi, n = text.split(":")
        lo, hi, n = float(lo), float(hi), int(n)
    except ValueError:
        raise ConfigurationError(f"--scan expects lo:hi:n, got {text!r}") from None
    if n < 2 or not lo < hi:
        raise ConfigurationError("--scan needs lo < hi and n >= 2")
    return np.linspace(lo, hi, n)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="deepstokes", description=__doc__.split("\n")[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("config")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
        return p

    add("check", "admissibility of the vorticity")
    p = add("laminar", "laminar profile at one lambda")
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p = add("dispersion", "bifurcation point from the dispersion relation")
    p.add_argument("--scan", default=None, help="also tabulate mu on lo:hi:n")
    add("branch", "continue the bifurcating branch")
    add("homotopy", "lambda* along the eps schedule")
    p = add("reconstruct", "physical fields at one branch point")
    p.add_argument("--point", type=int, required=True)
    p.add_argument("--levels", default=None, help="comma-separated streamline levels p")
    return ap


def _admissible(cfg: RunConfig):
    rep = check_admissible(cfg.vorticity, cfg.g)
    if not rep.passed:
        raise AdmissibilityError(json.dumps(rep.to_dict()))
    return rep


def _bifurcation(cfg: RunConfig):
    d = cfg.dispersion
    grid = default_grid(cfg.vorticity, cfg.grid.P_max, d.dp)
    return find_bifurcation(cfg.vorticity, d.eps, cfg.g, grid, d.mode_k, d.bottom, d.bracket,
                            d.xtol)


def cmd_check(cfg, args, out: ArtifactWriter):
    rep = check_admissible(cfg.vorticity, cfg.g)
    out.json("admissibility.json", rep.to_dict())
    print(json.dumps(rep.to_dict(), sort_keys=True))
    return EXIT_OK if rep.passed else EXIT_INADMISSIBLE


def cmd_laminar(cfg, args, out):
    _admissible(cfg)
    flow = LaminarFlow.build(cfg.vorticity, args.lam, cfg.g, P_max=cfg.grid.P_max,
                             dp=cfg.dispersion.dp)
    a = coefficient_a(cfg.vorticity, args.lam, flow.p)
    out.csv("laminar.csv", ("p", "H", "H_p", "a"), zip(flow.p, flow.H, flow.Hp, a))
    res = verify_laminar(flow, cfg.g)
    info = {"lambda": flow.lam, "c": flow.speed, "surface_height": float(flow.H[-1]),
            "residual_max": res.max, "ode": res.ode, "surface": res.surface}
    out.json("laminar.json", info)
    print(json.dumps(info, sort_keys=True))
    return EXIT_OK


def cmd_dispersion(cfg, args, out):
    rep = _admissible(cfg)
    spec, g = cfg.vorticity, cfg.g
    pt = _bifurcation(cfg)
    lhs, rhs = transversality(pt, spec, g)
    info = {"lambda_star": pt.lam, "c": wave_speed(pt.lam, rep.gamma_infinity), "mu": pt.mu,
            "mu_derivative": mu_derivative(pt, spec, g), "transversality_lhs": lhs,
            "transversality_rhs": rhs, "eps": pt.eps, "mode_k": pt.mode_k,
            "bottom": pt.bottom}
    out.json("dispersion.json", info)
    out.csv("eigenfunction.csv", ("p", "Psi"), zip(pt.p, pt.psi))
    if args.scan:
        lams = _parse_scan(args.scan)
        d = cfg.dispersion
        rows = [(lam, principal_mu(spec, lam, d.eps, pt.grid, g, d.mode_k, d.bottom))
                for lam in lams]
        out.csv("scan.csv", ("lambda", "mu"), rows)
    print(json.dumps(info, sort_keys=True))
    return EXIT_OK


def _branch(cfg, max_steps=None):
    _admissible(cfg)
    spec = cfg.vorticity
    grid = cfg.grid.build(spec)
    cc = cfg.continuation
    if max_steps is not None:
        cc = replace(cc, max_steps=max_steps)
    try:
        return run_branch(spec, cfg.g, cc, grid), grid
    except (NewtonFailure, MarginViolation) as err:
        raise FirstStepFailure(str(err)) from err


def cmd_branch(cfg, args, out):
    branch, _ = _branch(cfg)
    comments = [f"bifurcation lambda* = {branch.bifurcation.lam:.17g}",
                f"termination: {branch.termination}"]
    out.csv("branch.csv", CSV_COLUMNS, (pt.row() for pt in branch.points), comments)
    print(f"{len(branch)} points, termination: {branch.termination}")
    return EXIT_OK


def cmd_homotopy(cfg, args, out):
    _admissible(cfg)
    grid = default_grid(cfg.vorticity, cfg.grid.P_max, cfg.dispersion.dp)
    cc = replace(cfg.continuation, mode_k=cfg.dispersion.mode_k)
    rows = epsilon_homotopy(cfg.vorticity, cfg.g, cc, grid, cfg.dispersion.bottom)
    out.csv("homotopy.csv", ("eps", "lambda", "gap", "order", "ok"),
            ((r.eps, r.lam, r.gap, r.order, r.ok) for r in rows))
    for r in rows:
        print(f"eps={r.eps:.3g} lambda*={r.lam:.12g} gap={r.gap:.3e} order={r.order:.3f}")
    return EXIT_OK


def cmd_reconstruct(cfg, args, out):
    if args.point < 0:
        raise ConfigurationError("--point must be non-negative")
    branch, grid = _branch(cfg, max_steps=args.point + 1)
    if args.point >= len(branch):
        raise DomainError(f"branch ended after {len(branch)} points ({branch.termination})")
    spec, g = cfg.vorticity, cfg.g
    state = branch.points[args.point].state
    wave = reconstruct(spec, state, g, cfg.P_atm)
    out.csv("profile.csv", ("x", "eta"), zip(grid.q, wave.eta))
    out.csv("field.csv", ("x", "y", "u", "v", "P"),
            zip(*(a.ravel() for a in (wave.x, wave.y, wave.u, wave.v, wave.P))))
    h = height_field(spec, state, g)
    Pg = np.broadcast_to(grid.p[:, None], h.shape)
    out.csv("state.csv", ("q", "p", "w", "h"),
            zip(wave.x.ravel(), Pg.ravel(), state.W.ravel(), h.ravel()))
    if args.levels:
        levels = [float(x) for x in args.levels.split(",")]
    else:
        levels = [0.0] + [float(grid.p[j]) for j in grid.interfaces]
    rows = []
    for lev, (x, y) in zip(levels, streamlines(spec, state, g, levels)):
        rows.extend((lev, xi, yi) for xi, yi in zip(x, y))
    out.csv("streamlines.csv", ("level", "x", "y"), rows)
    info = {"point": args.point, "lambda": state.lam, "c": wave.c,
            "stagnation_margin": wave.stagnation_margin,
            "bernoulli_max": bernoulli_inequality(wave, spec, wave.c, g),
            **surface_conditions(spec, state, g)}
    out.json("reconstruct.json", info)
    print(json.dumps(info, sort_keys=True))
    return EXIT_OK


COMMANDS = {"check": cmd_check, "laminar": cmd_laminar, "dispersion": cmd_dispersion,
            "branch": cmd_branch, "homotopy": cmd_homotopy, "reconstruct": cmd_reconstruct}

_FLAG_NAMES = {"lam": "--lambda", "scan": "--scan", "point": "--point", "levels": "--levels"}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        overrides = _parse_set(args.set)
        cfg = load_config(args.config).with_overrides(overrides)
        out_dir = args.out or os.environ.get(OUTPUT_ENV) or cfg.output_dir
        recorded = dict(overrides)
        for attr, flag in _FLAG_NAMES.items():
            if getattr(args, attr, None) is not None:
                recorded[flag] = getattr(args, attr)
        writer = ArtifactWriter(out_dir, args.command, recorded)
        code = COMMANDS[args.command](cfg, args, writer)
        writer.finish()
        return code
    except AdmissibilityError as err:
        print(f"inadmissible vorticity: {err}", file=sys.stderr)
        return EXIT_INADMISSIBLE
    except (ConfigurationError, DomainError) as err:
        print(f"invalid configuration: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except NoBifurcationFound as err:
        print(f"no bifurcation: {err}", file=sys.stderr)
        return EXIT_NO_BIFURCATION
    except FirstStepFailure as err:
        print(f"Newton failure at the first step: {err}", file=sys.stderr)
        return EXIT_NEWTON
    except Exception as err:  # noqa: BLE001 - report and map to the internal-error code
        print(f"internal error: {type(err).__name__}: {err}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
