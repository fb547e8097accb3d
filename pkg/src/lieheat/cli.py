"""Batch experiment runner: expand, majorant, heat, precess, verify.

Outputs are deterministic (sorted keys, no wall-clock content); per-check
timings go to a separate optional file.  Result files are written atomically
and figures are rendered next to the delimited output unless --no-figures.
Exit codes: 0 success, 1 check failure, 2 config error, 3 unexpected
numerical divergence.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import expansions as ex
from . import heatflow as hf
from . import majorants as mj
from . import precessing as pr
from . import verify as vf
from .freealg import FreeAlgebraError, rational


class ConfigError(ValueError):
    pass


def _write_atomic(path: Path, data: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=str(path.parent), prefix=".tmp-", text=True)
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return str(path)


def _dump_json(obj, path: Path):
    return _write_atomic(path, json.dumps(obj, sort_keys=True, indent=2) + "\n")


def _dump_csv(rows, header, path: Path):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return _write_atomic(path, buf.getvalue())


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# -- expand ---------------------------------------------------------------------


def cmd_expand(args):
    if args.atoms < 1 or args.atoms > 5:
        raise ConfigError("--atoms must be between 1 and 5")
    if args.max_degree < 1 or args.max_degree > 7:
        raise ConfigError("--max-degree must be between 1 and 7")
    kind = ex.ExpansionKind.from_string(args.kind)
    lengths = [rational(s) for s in args.lengths.split(",")] if args.lengths \
        else [rational(1)] * args.atoms
    if len(lengths) != args.atoms:
        raise ConfigError("--lengths must list one rational per atom")
    gens = [int(s) for s in args.gens.split(",")] if args.gens else list(range(args.atoms))
    if len(gens) != args.atoms:
        raise ConfigError("--gens must list one generator index per atom")
    m = ex.StepMeasure(list(zip(gens, lengths)))
    terms = ex.expansion_terms(m, kind, args.max_degree)
    E = ex.toe_formal(m, args.max_degree)
    refactor_exact = ex.refactor_product(terms, kind) == E

    from .freealg import dynkin_is_lie
    table = []
    for n in range(1, args.max_degree + 1):
        table.append({
            "degree": n,
            "term": terms[n].to_json_dict(),
            "lie": dynkin_is_lie(terms[n]),
        })
    report = {
        "kind": kind.value,
        "atoms": [{"generator": g, "length": str(l)} for g, l in m.atoms],
        "max_degree": args.max_degree,
        "refactor_exact": refactor_exact,
        "terms": table,
    }
    out = _out_dir(args)
    written = [_dump_json(report, out / "expand.json")]
    if args.format in ("csv", "text"):
        rows = [(t["degree"], "".join(f"X{i}" for i in term["word"]) or "1",
                 term["num"], term["den"])
                for t in table for term in t["term"]["terms"]]
        written.append(_dump_csv(rows, ["degree", "word", "num", "den"],
                                 out / "expand.csv"))
    if not args.no_figures:
        from . import plots
        written.append(plots.expansion_norms(kind.value, terms, out / "expand.png"))
    if not refactor_exact:
        print("refactorization residual is not exactly zero", file=sys.stderr)
        return 1
    print("\n".join(written))
    return 0


# -- majorant --------------------------------------------------------------------


def cmd_majorant(args):
    try:
        spec = mj.majorant_spec(args.spec, delta=args.delta)
    except ValueError as exc:
        raise ConfigError(str(exc))
    if args.terms < 1:
        raise ConfigError("--terms must be positive")
    coeffs = mj.series_coeffs(spec, args.terms)
    r = mj.radius(spec)
    rows = []
    partial = 0.0
    for n in range(1, args.terms + 1):
        gn = float(coeffs[n])
        term = gn * args.mass ** n
        partial += term
        closed = mj.closed_form(spec, args.mass) if args.mass < r else float("nan")
        rows.append((n, str(coeffs[n]), repr(term), repr(partial), repr(closed)))
    out = _out_dir(args)
    written = [_dump_csv(rows, ["n", "g_n", "g_n_mass_n", "partial_sum", "closed_form"],
                         out / "majorant.csv")]
    written.append(_dump_json({
        "spec": spec.name,
        "delta": str(spec.delta) if spec.delta is not None else None,
        "mass": args.mass,
        "radius": r,
        "within_radius": args.mass < r,
        "terms": args.terms,
    }, out / "majorant.json"))
    if not args.no_figures:
        from . import plots
        written.append(plots.majorant_curve(spec, args.mass, args.terms,
                                            out / "majorant.png"))
    print("\n".join(written))
    return 0


# -- heat ------------------------------------------------------------------------


def _field_from_config(cfg) -> hf.Field:
    required = {"schema", "domain", "n_x", "initial"}
    missing = required - set(cfg)
    if missing:
        raise ConfigError(f"config missing keys: {sorted(missing)}")
    if cfg["schema"] != "v1":
        raise ConfigError(f"unsupported schema {cfg['schema']!r}")
    domain = cfg["domain"]
    if domain not in ("interval01", "circle"):
        raise ConfigError("domain must be 'interval01' or 'circle'"
                          " (infinite domains run truncated via 'interval01')")
    bc = cfg.get("bc", "periodic" if domain == "circle" else "neumann")
    n_x = int(cfg["n_x"])
    if "k" in cfg:
        k_spec = float(cfg["k"])
    elif "m_star" in cfg:
        k_spec = hf.GradedDiffusion(m_star=float(cfg["m_star"]),
                                    beta=float(cfg.get("beta", 0.0)))
    else:
        k_spec = 1.0
    init = cfg["initial"]
    kind = init.get("type")
    if kind == "precessing":
        if domain != "circle":
            raise ConfigError("precessing initial data lives on the circle")
        return hf.precessing_field(n_x, float(init["a0"]), float(init["b0"]),
                                   float(init["c0"]),
                                   k=k_spec if isinstance(k_spec, float) else 1.0)
    if kind == "steps":
        atoms = [(np.asarray(a["matrix"], dtype=float), float(a["length"]))
                 for a in init["atoms"]]
        # "length" supports truncated-line runs: the measure is laid over
        # [0, length] with reflecting far boundaries
        return hf.measure_field(n_x, ex.StepMeasure(atoms), bc=bc,
                                length=float(cfg.get("length", 1.0)),
                                k_spec=k_spec)
    if kind == "two_bump":
        return hf.two_bump_field(n_x, float(init["mass"]),
                                 k=k_spec if isinstance(k_spec, float) else 1.0, bc=bc)
    if kind == "matrix_profile":
        M = np.asarray(init["matrix"], dtype=float)
        shape = init.get("profile", "bump")
        center = float(init.get("center", 0.5))
        width = float(init.get("width", 0.15))
        scale = float(init.get("scale", 1.0))
        h = 1.0 / n_x
        x = (np.arange(n_x) + 0.5) * h
        if shape == "bump":
            prof = np.exp(-((x - center) / width) ** 2)
        elif shape == "cosine":
            prof = np.cos(2.0 * math.pi * (x - center)) if bc == "periodic" \
                else np.cos(math.pi * x)
        else:
            raise ConfigError(f"unknown profile shape {shape!r}")
        return hf.Field(scale * prof[:, None, None] * M, bc=bc, k_spec=k_spec)
    if kind == "zero":
        return hf.zero_field(n_x, int(init.get("dim", 2)), bc=bc, k_spec=k_spec)
    raise ConfigError(f"unknown initial type {kind!r}")


def _run_heat_config(path: Path, out: Path, make_figures: bool, write_csv: bool):
    with open(path) as fh:
        cfg = json.load(fh)
    field = _field_from_config(cfg)
    diag = hf.run(field,
                  t_max=float(cfg["t_max"]) if "t_max" in cfg else None,
                  tol_homog=float(cfg.get("tol", 1e-8)),
                  record_series=True)
    stem = path.stem
    expected = cfg.get("expect", "converged")
    report = diag.to_json_dict()
    report["config"] = cfg
    report["expected"] = expected
    import scipy.linalg
    if diag.status != "diverged":
        report["exp_H_vs_toe"] = float(
            np.abs(scipy.linalg.expm(diag.H) - diag.toe_initial).max())
        if diag.F is not None:
            conj = diag.F @ diag.H @ np.linalg.inv(diag.F)
            report["exp_heat_sum_vs_toe"] = float(
                np.abs(scipy.linalg.expm(conj) - diag.toe_initial).max())
    written = [_dump_json(report, out / f"{stem}.diagnostics.json")]
    if write_csv and diag.series:
        rows = list(zip(diag.series["t"], diag.series["M_G"],
                        diag.series["variation"], diag.series["H_norm"]))
        written.append(_dump_csv(rows, ["t", "M_G", "variation", "H_norm"],
                                 out / f"{stem}.series.csv"))
    if write_csv and diag.x is not None and diag.status != "diverged":
        d = diag.values_initial.shape[1]
        header = ["x"] + [f"A0_{i}{j}" for i in range(d) for j in range(d)] \
            + [f"A_final_{i}{j}" for i in range(d) for j in range(d)]
        rows = [(xv, *diag.values_initial[idx].ravel(),
                 *diag.values_final[idx].ravel())
                for idx, xv in enumerate(diag.x)]
        written.append(_dump_csv(rows, header, out / f"{stem}.profile.csv"))
    if make_figures:
        from . import plots
        written.append(plots.heat_series(diag, out / f"{stem}.series.png"))
    ok = (diag.status == "diverged") == (expected == "diverged")
    return written, diag.status, ok


def cmd_heat(args):
    out = _out_dir(args)
    paths = [Path(p) for p in args.config]
    for p in paths:
        if not p.exists():
            raise ConfigError(f"config file {p} does not exist")
    workers = min(vf.thread_cap(), len(paths))
    results = []
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(
                lambda p: _run_heat_config(p, out, not args.no_figures, True), paths))
    else:
        results = [_run_heat_config(p, out, not args.no_figures, True) for p in paths]
    status = 0
    for (written, st, ok), p in zip(results, paths):
        print("\n".join(written))
        if not ok:
            print(f"{p}: unexpected solver status {st!r}", file=sys.stderr)
            status = 3
    return status


# -- precess --------------------------------------------------------------------


def cmd_precess(args):
    if args.k <= 0:
        raise ConfigError("--k must be positive")
    state = pr.PrecessState(args.a0, args.b0, args.c0, args.k)
    label = pr.classify(state)
    toe = pr.toe_closed_form(state)
    t_max = args.t_max
    horizon = pr.max_time(state)
    if t_max is None:
        t_max = min(horizon * 0.9 if math.isfinite(horizon) else 5.0 / args.k,
                    5.0 / args.k)
    samples = []
    for t in np.linspace(0.0, t_max, args.samples):
        try:
            b, c = pr.trajectory(state, float(t))
        except pr.BlowupError:
            break
        samples.append((float(t), b, c, (b + 1.0) * (c - 1.0)))
    report = {
        "state": {"a0": args.a0, "b0": args.b0, "c0": args.c0, "k": args.k},
        "classification": {
            "tag": label.tag.value,
            "magnus_convergent": label.magnus_convergent,
            "heat_sum_exists": label.heat_sum_exists,
        },
        "verdict": _verdict(label),
        "toe_closed_form": toe.tolist(),
        "toe_is_real_exponential": pr.is_real_exponential(toe),
        "conserved_quantity": state.conserved,
        "blowup_time": None if not math.isfinite(horizon) else horizon,
    }
    if label.tag is pr.CaseTag.SEMISTABLE and abs(args.b0 - 1) < 1e-12 \
            and abs(args.c0 - 1) < 1e-12 and abs(args.a0) < 1e-12:
        report["boundary_flux_t0"] = pr.boundary_flux_closed_form(state, 0.0).tolist()
        report["flux_conjugator_at_tmax"] = pr.flux_conjugator_closed_form(state, t_max).tolist()
        report["flux_total_variation_at_tmax"] = pr.flux_total_variation(state, t_max)
        report["flux_lebesgue_integrable"] = pr.FLUX_LEBESGUE_INTEGRABLE
    out = _out_dir(args)
    written = [_dump_json(report, out / "precess.json")]
    if args.json:
        written.append(_dump_json(report, Path(args.json)))
    written.append(_dump_csv(samples, ["t", "b", "c", "conserved"],
                             out / "trajectory.csv"))
    if not args.no_figures:
        from . import plots
        written.append(plots.phase_diagram(state, out / "phase_diagram.png"))
    print("\n".join(written))
    return 0


def _verdict(label):
    heat = "exists" if label.heat_sum_exists else "does not exist"
    magnus = {True: "converges", False: "diverges", None: "unknown"}[label.magnus_convergent]
    verdict = f"heat sum {heat}; Magnus expansion {magnus}"
    if label.heat_sum_exists and label.magnus_convergent is False:
        verdict += " (a false positive for the Magnus expansion)"
    return verdict


# -- verify ---------------------------------------------------------------------


def cmd_verify(args):
    try:
        report = vf.run_suite(args.suite)
    except ValueError as exc:
        raise ConfigError(str(exc))
    for c in report["checks"]:
        flag = "PASS" if c["ok"] else "FAIL"
        print(f"[{flag}] {c['suite']}.{c['check']}")
    if args.json:
        slim = {
            "suite": report["suite"],
            "ok": report["ok"],
            "failed": report["failed"],
            "checks": [{k: v for k, v in c.items() if k != "seconds"}
                       for c in report["checks"]],
        }
        for c in slim["checks"]:
            for k, v in list(c.items()):
                if isinstance(v, (np.floating, np.bool_)):
                    c[k] = v.item()
                elif isinstance(v, dict):
                    c[k] = {kk: (vv.item() if isinstance(vv, (np.floating, np.bool_)) else vv)
                            for kk, vv in v.items()}
        _dump_json(slim, Path(args.json))
        _dump_json({f"{c['suite']}.{c['check']}": c["seconds"]
                    for c in report["checks"]},
                   Path(args.json).with_suffix(".timings.json"))
    if not report["ok"]:
        print("first failure: " + report["failed"][0], file=sys.stderr)
        return 1
    return 0


# -- entry point -----------------------------------------------------------------


def build_parser():
    p = argparse.ArgumentParser(prog="lieheat",
                                description="Lie expansions, norm majorants, and "
                                            "the noncommutative heat flow")
    sub = p.add_subparsers(dest="command", required=True)

    pe = sub.add_parser("expand", help="formal expansion tables for a step measure")
    pe.add_argument("--kind", required=True,
                    help="magnus | wilcox-left | wilcox-right | sym-in | sym-out")
    pe.add_argument("--atoms", type=int, required=True)
    pe.add_argument("--max-degree", type=int, required=True)
    pe.add_argument("--lengths", help="comma-separated rational lengths")
    pe.add_argument("--gens", help="comma-separated generator indices")
    pe.set_defaults(func=cmd_expand)

    pm = sub.add_parser("majorant", help="majorant series table")
    pm.add_argument("--spec", required=True)
    pm.add_argument("--mass", type=float, required=True)
    pm.add_argument("--terms", type=int, required=True)
    pm.add_argument("--delta", type=float, default=1.0)
    pm.set_defaults(func=cmd_majorant)

    ph = sub.add_parser("heat", help="run heat-flow configs")
    ph.add_argument("--config", action="append", required=True,
                    help="JSON run configuration (repeatable)")
    ph.set_defaults(func=cmd_heat)

    pp = sub.add_parser("precess", help="the 2x2 precessing case study")
    pp.add_argument("--a0", type=float, required=True)
    pp.add_argument("--b0", type=float, required=True)
    pp.add_argument("--c0", type=float, required=True)
    pp.add_argument("--k", type=float, default=1.0)
    pp.add_argument("--t-max", type=float, default=None)
    pp.add_argument("--samples", type=int, default=60)
    pp.add_argument("--json", help="extra path for the JSON report")
    pp.set_defaults(func=cmd_precess)

    pv = sub.add_parser("verify", help="run a module invariant suite")
    pv.add_argument("--suite", default="all")
    pv.add_argument("--json", help="write the machine-readable report here")
    pv.set_defaults(func=cmd_verify)

    for sp in (pe, pm, ph, pp):
        sp.add_argument("--out", default="out", help="output directory")
        sp.add_argument("--format", choices=("json", "csv", "text"), default="csv")
        sp.add_argument("--no-figures", action="store_true",
                        help="skip matplotlib figure rendering")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (FreeAlgebraError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except hf.NonConvergentFlowError as exc:
        print(f"numerical divergence: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
