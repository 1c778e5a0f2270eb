"""Batch front end.

Examples
--------
    couplespec bound-states --model L --alpha 0.5
    couplespec deficiency --alpha 2 --lambda 0,1
    couplespec jacobi-count --mu-grid 1.01,1.001,1.0001
    couplespec sandwich --alpha-grid 0.5,0.9
    couplespec forms witness --alpha 3 --M 1 --N 5
    couplespec singular fit --alpha 2 --branch ++
    couplespec sl-check --model L --alpha 2 --y-grid 0,1.0471975511965979
    couplespec ac-mult --model L --lambda-grid 0,0.5,1,2.5
    couplespec golden --report results/x.json --golden golden/x.json

Every run writes ``<task>-<timestamp>.json`` (and a CSV for tabular
output) into ``--out``.  Exit codes: 0 success, 2 usage error,
3 numerical non-convergence (results are still written, with flags).
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import forms as F
from . import singular as S
from . import spectral_l as SL
from . import spectral_m as SM
from .model import DomainError, Kind, ModelSpec, ac_multiplicity, sl_regularity
from .recurrence import ConvergenceError
from .report import GoldenError, SpectralReport, golden_compare, write_report

EXIT_OK, EXIT_USAGE, EXIT_NONCONV = 0, 2, 3


class UsageError(Exception):
    pass


def _threads() -> int:
    raw = os.environ.get("THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            raise UsageError(f"THREADS must be an integer, got {raw!r}")
    return os.cpu_count() or 1


def _pmap(fn, items):
    """Map in a thread pool; results come back in input order."""
    items = list(items)
    n = _threads()
    if n <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(n) as ex:
        return list(ex.map(fn, items))


def grid(text: str) -> list[float]:
    """Comma-separated floats, or lo:hi:n for a linear grid."""
    text = str(text).strip()
    try:
        if ":" in text and "," not in text:
            lo, hi, n = text.split(":")
            return [float(v) for v in np.linspace(float(lo), float(hi), int(n))]
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad grid {text!r}")


def pair(text: str) -> tuple[float, float]:
    vals = grid(text)
    if len(vals) != 2:
        raise argparse.ArgumentTypeError(f"expected two comma-separated numbers, got {text!r}")
    return vals[0], vals[1]


def modes(text: str) -> list[tuple[int, complex, float]]:
    """'n:c:kappa;n:c:kappa', c may be complex like 1+2j."""
    out = []
    try:
        for part in str(text).split(";"):
            if part.strip():
                n, c, k = part.split(":")
                out.append((int(n), complex(c.replace(" ", "")), float(k)))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad mode list {text!r}")
    return out


def load_config(path: str) -> dict:
    cfg = {}
    with open(path, encoding="utf-8") as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"config line without '=': {raw.strip()!r}")
            k, v = line.split("=", 1)
            cfg[k.strip().lstrip("-").replace("-", "_")] = v.strip()
    return cfg


# ---------------------------------------------------------------- tasks


def cmd_bound_states(a) -> tuple:
    alphas = a.alpha_grid if a.alpha_grid else [a.alpha]
    if alphas == [None]:
        raise UsageError("give --alpha or --alpha-grid")
    kind = Kind.parse(a.model)

    def run(alpha):
        if kind is Kind.CylinderL:
            return SL.find_bound_states(alpha, a.range, a.K, a.tol, a.K_max), 0
        spec = SM.m_find_bound_states(alpha, a.K, a.tol, a.K_max)
        return list(spec), spec.unresolved_near_threshold

    results, rows, conv = [], [], {}
    ok = True
    for alpha, (states, unresolved) in zip(alphas, _pmap(run, alphas)):
        entry = {"alpha": alpha, "roots": [s.Lambda for s in states],
                 "converged": [s.converged for s in states],
                 "K": [s.K for s in states]}
        if kind is Kind.StripM:
            entry["unresolved_near_threshold"] = unresolved
        results.append(entry)
        conv[str(alpha)] = {"converged": all(s.converged for s in states),
                            "refinement_history": [s.refinement_history for s in states]}
        ok &= all(s.converged for s in states)
        for j, s in enumerate(states):
            rows.append([alpha, j, s.Lambda, s.K, s.converged])
    disc = SL.DISCLAIMER if kind is Kind.CylinderL and max(alphas) > 1 else None
    report = SpectralReport("bound-states", {"kind": kind.value, "alpha": alphas},
                            {"K": a.K, "tol": a.tol, "K_max": a.K_max, "range": list(a.range)},
                            results, conv, disc)
    return report, ["alpha", "index", "Lambda", "K", "converged"], rows, ok


def cmd_deficiency(a) -> tuple:
    lam = complex(*a.lam)
    params = {"Lambda": lam, "K": a.K}
    model = ModelSpec(Kind.CylinderL, a.alpha).to_dict()
    try:
        v = SL.deficiency_probe(a.alpha, lam, a.K)
    except SL.InconclusiveError as exc:
        rep = SpectralReport("deficiency", model, params, {"classification": "inconclusive",
                                                           "reason": str(exc)},
                             {"converged": False})
        return rep, None, None, False
    disc = SL.DISCLAIMER if a.alpha > 1 else None
    return SpectralReport("deficiency", model, params, v.to_dict(), {"converged": True},
                          disc), None, None, True


def cmd_jacobi_count(a) -> tuple:
    pts = SM.counting_curve(a.mu_grid, index_start=a.index_start, threads=_threads())
    rows = [[p.mu, p.count, p.N, p.stable] for p in pts]
    fit = SM.log_law_fit(pts) if len({p.mu for p in pts}) >= 2 else None
    res = {"points": [[p.mu, p.count, p.N, p.stable] for p in pts],
           "log_fit": fit._asdict() if fit else None}
    ok = all(p.stable for p in pts)
    rep = SpectralReport("jacobi-count", None, {"index_start": a.index_start,
                                                "N_rule": "max(512, ceil(50 (mu-1)^-1/2))"},
                         res, {"stable": [p.stable for p in pts]})
    return rep, ["mu", "count", "N", "stable"], rows, ok


def cmd_sandwich(a) -> tuple:
    reps = _pmap(lambda al: SM.sandwich_check(al, a.K, a.tol, a.index_start), a.alpha_grid)
    rows = [[r.alpha, r.count_M, r.count_J, r.difference, r.converged] for r in reps]
    ok = all(r.converged for r in reps)
    rep = SpectralReport("sandwich", {"kind": "M", "alpha": a.alpha_grid},
                         {"K": a.K, "tol": a.tol, "index_start": a.index_start},
                         [r.to_dict() for r in reps], {"converged": [r.converged for r in reps]})
    return rep, ["alpha", "count_M", "count_J", "difference", "converged"], rows, ok


def cmd_forms(a) -> tuple:
    kind = Kind.parse(a.model)
    model = ModelSpec(kind, getattr(a, "alpha", 0.0) or 0.0)
    if a.form_cmd == "lemma":
        trial = F.TrialFunction.from_modes(a.modes, model)
        try:
            chk = F.lemma_bound_check(trial) if kind is Kind.CylinderL \
                else F.m_lemma_bound_check(trial)
        except F.PreconditionError as exc:
            raise UsageError(str(exc))
        res = {"lhs": chk.lhs, "rhs": chk.rhs, "passed": chk.passed,
               "ell0": F.ell0(trial), "b": F.b_form(trial)}
        params = {"modes": [[n, c, k] for n, c, k in a.modes]}
    elif a.form_cmd == "witness":
        res = {"value": F.two_mode_witness(a.alpha, a.M, a.N)}
        params = {"alpha": a.alpha, "M": a.M, "N": a.N}
    elif a.form_cmd == "window":
        res = {"value": F.window_witness(a.alpha, a.M, a.N_lo, a.N_hi)}
        params = {"alpha": a.alpha, "M": a.M, "N_lo": a.N_lo, "N_hi": a.N_hi}
    else:
        lo, hi = (int(v) for v in a.range)
        r = F.rayleigh_minimize(a.alpha, (lo, hi), M=a.M, model=kind)
        res = {"value": r.value, "n": r.n, "coeffs": r.coeffs}
        params = {"alpha": a.alpha, "range": [lo, hi], "M": a.M}
    rep = SpectralReport(f"forms-{a.form_cmd}", model.to_dict(), params, res, {})
    return rep, None, None, True


def cmd_singular(a) -> tuple:
    x = a.x_grid or list(np.geomspace(1e-4, 1e-2, 12))
    prof = S.singular_profile(a.alpha, a.branch, x, a.y, a.Lambda)
    fit = S.fit_power(x, [v for _, v in prof.samples])
    rows = [[xi, *r] for xi, r in zip(x, prof.to_rows())]
    res = {"singular_point": prof.singular_point, "fit": fit._asdict()}
    if a.sing_cmd == "profile":
        res["samples"] = [[z, v] for z, v in prof.samples]
    rep = SpectralReport(f"singular-{a.sing_cmd}", ModelSpec(Kind.CylinderL, a.alpha).to_dict(),
                         {"branch": a.branch, "Lambda": a.Lambda, "y": a.y, "x_grid": x},
                         res, {}, SL.DISCLAIMER)
    return rep, ["x", "z_re", "z_im", "value_re", "value_im"], rows, True


def cmd_sl_check(a) -> tuple:
    ys = a.y_grid if a.y_grid else ([a.y] if a.y is not None else None)
    if not ys:
        raise UsageError("give --y or --y-grid")
    model = ModelSpec(Kind.parse(a.model), a.alpha)
    verdicts = [sl_regularity(model, y) for y in ys]
    rows = [[v.point_y, v.regular, v.degeneracy_value] for v in verdicts]
    rep = SpectralReport("sl-check", model.to_dict(), {"y": ys},
                         [{"y": v.point_y, "regular": v.regular, "value": v.degeneracy_value}
                          for v in verdicts], {})
    return rep, ["y", "regular", "degeneracy_value"], rows, True


def cmd_ac_mult(a) -> tuple:
    model = ModelSpec(Kind.parse(a.model), 0.0)
    mult = [ac_multiplicity(model, lam) for lam in a.lambda_grid]
    rows = [[lam, m] for lam, m in zip(a.lambda_grid, mult)]
    rep = SpectralReport("ac-mult", {"kind": model.kind.value}, {"lambda": a.lambda_grid},
                         {"multiplicity": mult}, {})
    return rep, ["lambda", "multiplicity"], rows, True


def cmd_neg_sweep(a) -> tuple:
    tab = SL.negative_spectrum_sweep(a.alpha, a.t_grid, tuple(int(k) for k in a.K_grid), a.t0,
                                     threads=_threads())
    rows = []
    for i, K in enumerate(tab.K_values):
        for j, t in enumerate(tab.t_grid):
            rows.append([K, t, int(tab.counts[i, j])])
    rep = SpectralReport("neg-sweep", ModelSpec(Kind.CylinderL, a.alpha).to_dict(),
                         {"t0": a.t0, "K": list(tab.K_values)}, tab.to_dict(),
                         {"K_values": list(tab.K_values)},
                         SL.DISCLAIMER if a.alpha > 1 else None)
    return rep, ["K", "t", "count"], rows, True


def cmd_golden(a) -> int:
    with open(a.report, encoding="utf-8") as fh:
        rep = SpectralReport.from_json(fh.read())
    res = golden_compare(rep, a.golden, a.rel_tol)
    for d in res.diffs:
        print(str(d), file=sys.stderr)
    print("PASS" if res.passed else f"FAIL ({len(res.diffs)} field(s))")
    return EXIT_OK if res.passed else 1


# ---------------------------------------------------------------- parser


def build_parser() -> tuple[argparse.ArgumentParser, dict]:
    p = argparse.ArgumentParser(prog="couplespec", description=__doc__.split("\n")[0],
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--out", default="results", help="output directory (default ./results)")
    p.add_argument("--config", help="file of key=value lines; command-line flags win")
    sub = p.add_subparsers(dest="cmd", required=True)
    subs = {}

    s = sub.add_parser("bound-states", help="bound states of L or M")
    s.add_argument("--model", default="L", choices=["L", "M"])
    s.add_argument("--alpha", type=float)
    s.add_argument("--alpha-grid", type=grid)
    s.add_argument("--K", type=int, default=64)
    s.add_argument("--K-max", type=int, default=4096)
    s.add_argument("--tol", type=float, default=1e-10)
    s.add_argument("--range", type=pair, default=SL.DEFAULT_RANGE)
    s.set_defaults(func=cmd_bound_states)
    subs["bound-states"] = s

    s = sub.add_parser("deficiency", help="self-adjointness probe for L")
    s.add_argument("--alpha", type=float, required=True)
    s.add_argument("--lambda", dest="lam", type=pair, default=(0.0, 1.0), help="RE,IM")
    s.add_argument("--K", type=int, default=400)
    s.set_defaults(func=cmd_deficiency)
    subs["deficiency"] = s

    s = sub.add_parser("jacobi-count", help="N_+(mu; J) counting curve")
    s.add_argument("--mu-grid", type=grid, required=True)
    s.add_argument("--index-start", type=int, default=3, choices=[3, 4])
    s.set_defaults(func=cmd_jacobi_count)
    subs["jacobi-count"] = s

    s = sub.add_parser("sandwich", help="bound-state count of M against the Jacobi count")
    s.add_argument("--alpha-grid", type=grid, required=True)
    s.add_argument("--K", type=int, default=64)
    s.add_argument("--tol", type=float, default=1e-10)
    s.add_argument("--index-start", type=int, default=3, choices=[3, 4])
    s.set_defaults(func=cmd_sandwich)
    subs["sandwich"] = s

    s = sub.add_parser("forms", help="quadratic-form checks")
    fsub = s.add_subparsers(dest="form_cmd", required=True)
    f = fsub.add_parser("lemma")
    f.add_argument("--modes", type=modes, required=True, help="'n:c:kappa;...'")
    f.add_argument("--model", default="L", choices=["L", "M"])
    f = fsub.add_parser("witness")
    f.add_argument("--alpha", type=float, required=True)
    f.add_argument("--M", type=float, default=1.0)
    f.add_argument("--N", type=int, required=True)
    f = fsub.add_parser("window")
    f.add_argument("--alpha", type=float, required=True)
    f.add_argument("--M", type=float, default=1.0)
    f.add_argument("--N-lo", type=int, required=True)
    f.add_argument("--N-hi", type=int, required=True)
    f = fsub.add_parser("rayleigh")
    f.add_argument("--alpha", type=float, required=True)
    f.add_argument("--range", type=pair, required=True)
    f.add_argument("--M", type=float, default=1.0)
    f.add_argument("--model", default="L", choices=["L", "M"])
    for name in ("witness", "window"):
        fsub.choices[name].set_defaults(model="L")
    s.set_defaults(func=cmd_forms)
    subs["forms"] = s

    s = sub.add_parser("singular", help="singular-solution profiles (alpha > 1)")
    ssub = s.add_subparsers(dest="sing_cmd", required=True)
    for name in ("fit", "profile"):
        f = ssub.add_parser(name)
        f.add_argument("--alpha", type=float, required=True)
        f.add_argument("--branch", default="++", choices=list(S.BRANCHES) + ["all"])
        f.add_argument("--x-grid", type=grid)
        f.add_argument("--y", type=float, help="ray angle (default: the singular point)")
        f.add_argument("--Lambda", type=float, default=-1.0)
    s.set_defaults(func=cmd_singular)
    subs["singular"] = s

    s = sub.add_parser("sl-check", help="ellipticity test at interface points")
    s.add_argument("--model", default="L", choices=["L", "M"])
    s.add_argument("--alpha", type=float, required=True)
    s.add_argument("--y", type=float)
    s.add_argument("--y-grid", type=grid)
    s.set_defaults(func=cmd_sl_check)
    subs["sl-check"] = s

    s = sub.add_parser("ac-mult", help="a.c. multiplicity of the decoupled operator")
    s.add_argument("--model", default="L", choices=["L", "M"])
    s.add_argument("--lambda-grid", type=grid, required=True)
    s.set_defaults(func=cmd_ac_mult)
    subs["ac-mult"] = s

    s = sub.add_parser("neg-sweep", help="eigenvalue counts of the truncated L problem")
    s.add_argument("--alpha", type=float, required=True)
    s.add_argument("--t-grid", type=grid, required=True)
    s.add_argument("--K-grid", type=grid, default=[64, 128, 256, 512])
    s.add_argument("--t0", type=float, default=0.5)
    s.set_defaults(func=cmd_neg_sweep)
    subs["neg-sweep"] = s

    s = sub.add_parser("golden", help="compare a report with a golden file")
    s.add_argument("--report", required=True)
    s.add_argument("--golden", required=True)
    s.add_argument("--rel-tol", type=float, default=1e-8)
    s.set_defaults(func=None)
    subs["golden"] = s
    return p, subs


def _apply_config(argv: list[str], parser, subs) -> None:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, rest = pre.parse_known_args(argv)
    if not known.config:
        return
    cfg = load_config(known.config)
    cmd = next((t for t in rest if t in subs), None)
    if "out" in cfg:
        parser.set_defaults(out=cfg.pop("out"))
    if cmd is None:
        return
    targets = [subs[cmd]]
    for action in subs[cmd]._actions:
        if isinstance(action, argparse._SubParsersAction):
            targets.extend(action.choices.values())
    for t in targets:
        dests = {a.dest for a in t._actions}
        t.set_defaults(**{k: v for k, v in cfg.items() if k in dests})


def _max_alpha(report: SpectralReport) -> float:
    vals = []
    for src in (report.model or {}, report.parameters or {}):
        a = src.get("alpha")
        if isinstance(a, list):
            vals.extend(v for v in a if isinstance(v, (int, float)))
        elif isinstance(a, (int, float)):
            vals.append(a)
    return max(vals, default=0.0)


def run(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, subs = build_parser()
    try:
        _apply_config(argv, parser, subs)
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    except (UsageError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        if args.cmd == "golden":
            return cmd_golden(args)
        report, header, rows, ok = args.func(args)
    except GoldenError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (UsageError, DomainError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONCONV
    if report.disclaimer is None and _max_alpha(report) > 1:
        report.disclaimer = SL.DISCLAIMER
    paths = write_report(report, args.out, header, rows)
    for p in paths.values():
        print(p)
    if not ok:
        print("warning: some results did not converge; see the convergence field",
              file=sys.stderr)
        return EXIT_NONCONV
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
