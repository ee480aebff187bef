"""Command-line interface.

Subcommands
-----------
forward      exact truncated moments of a spectrum
reconstruct  perturbative inversion of truncated moments
simulate     replica study of estimator bias and variance
tables       print, re-derive, or verify the coefficient tables
detj         Jacobian determinant of the scalar-map family along x = rho/lt
xi-scan      scan the second-order curvature factor
oracle       Monte Carlo check of the truncated-moment series

Machine output (JSON with a schema tag, or RFC-4180 CSV with a header row)
goes to --out or stdout; human-readable summaries go to stderr.  Exit codes:
0 success, 1 domain error, 2 numerical failure, 64 usage error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from fractions import Fraction

import numpy as np

from . import __version__
from .errors import DomainError, NumericError
from .forward import (
    alpha_k,
    alpha_with_info,
    domain_check,
    forward_family,
    mc_oracle,
    validate_spectrum,
)
from .iterative import fixed_point_solve
from .jets import compare_to_stored, extract_gamma_table
from .perturb import MAX_ORDER, reconstruct, xi
from .simulate import (
    ESTIMATORS,
    SimulationRecord,
    bias_variance_sweep,
    variance_fits,
)
from .tables import GAMMA_TABLES
from .tallis import CdfLadder, jacobian_det, jacobian_det_lower_bound

SCHEMA = "sphertrunc/1"
USAGE_EXIT = 64


class _Parser(argparse.ArgumentParser):
    """Argument parser that reports usage problems with exit code 64."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(USAGE_EXIT, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------------------
# formatting helpers

_G17 = "%.17g"


def _fmt(x):
    """Format a float with enough digits to round-trip exactly."""
    return _G17 % float(x)


_TAG = ""


def _tag_floats(obj):
    if isinstance(obj, float):
        if np.isfinite(obj):
            return f"{_TAG}{_fmt(obj)}{_TAG}"
        return _fmt(obj)  # non-finite: keep as a quoted string
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, dict):
        return {k: _tag_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_tag_floats(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_tag_floats(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return _tag_floats(float(obj))
    return obj


def _dump_json(obj):
    """JSON text with floats written at 17 significant digits."""
    text = json.dumps(_tag_floats(obj), indent=2)
    # json.dumps escapes the control-character tag as 
    return text.replace('"\\u0001', "").replace('\\u0001"', "") + "\n"


def _dump_csv(header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(c) if isinstance(c, float) else c for c in row])
    return buf.getvalue()


def _emit(text, out_path):
    if out_path:
        with open(out_path, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _say(message):
    print(message, file=sys.stderr)


# ---------------------------------------------------------------------------
# input helpers

def _parse_float_list(text):
    try:
        values = [float(part) for part in text.split(",") if part.strip() != ""]
    except ValueError as exc:
        raise DomainError(f"could not parse {text!r} as a comma-separated float list") from exc
    if not values:
        raise DomainError(f"empty value list in {text!r}")
    return values


def _parse_int_list(text):
    values = _parse_float_list(text)
    out = [int(v) for v in values]
    if any(o != v for o, v in zip(out, values)):
        raise DomainError(f"expected integers in {text!r}")
    return out


def _read_spectrum_csv(path):
    """One-column CSV with a header row -> float array."""
    try:
        with open(path, newline="") as fh:
            rows = [row for row in csv.reader(fh) if row]
    except OSError as exc:
        raise DomainError(f"cannot read spectrum file {path!r}: {exc}") from exc
    if not rows:
        raise DomainError(f"spectrum file {path!r} is empty")
    header = rows[0]
    if len(header) != 1:
        raise DomainError(f"spectrum file {path!r} must have exactly one column")
    try:
        float(header[0])
    except ValueError:
        pass
    else:
        raise DomainError(f"spectrum file {path!r} must start with a header row")
    values = []
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != 1:
            raise DomainError(f"spectrum file {path!r}: line {i} has {len(row)} columns")
        try:
            values.append(float(row[0]))
        except ValueError as exc:
            raise DomainError(f"spectrum file {path!r}: bad value {row[0]!r} on line {i}") from exc
    if not values:
        raise DomainError(f"spectrum file {path!r} has a header but no values")
    return np.asarray(values, dtype=float)


def _add_spectrum_args(parser, name, required=True, help_noun="spectrum"):
    group = parser.add_mutually_exclusive_group(required=required)
    group.add_argument(
        f"--{name}",
        dest=name.replace("-", "_") + "_inline",
        metavar="V1,V2,...",
        help=f"{help_noun} as comma-separated values",
    )
    group.add_argument(
        f"--{name}-file",
        dest=name.replace("-", "_") + "_file",
        metavar="PATH",
        help=f"{help_noun} as a one-column CSV file with a header row",
    )


def _get_spectrum(args, name):
    inline = getattr(args, name.replace("-", "_") + "_inline", None)
    path = getattr(args, name.replace("-", "_") + "_file", None)
    if inline is not None:
        return np.asarray(_parse_float_list(inline), dtype=float)
    if path is not None:
        return _read_spectrum_csv(path)
    return None


def _seed_from_args(args):
    if args.seed is not None:
        return args.seed
    env = os.environ.get("SPHERTRUNC_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError as exc:
            raise DomainError(f"SPHERTRUNC_SEED={env!r} is not an integer") from exc
    return 0


def _parse_grid(text):
    """START:STOP:COUNT[:lin|log] -> array (log-spaced by default)."""
    parts = text.split(":")
    if len(parts) not in (3, 4):
        raise DomainError(f"grid spec {text!r} must be START:STOP:COUNT[:lin|log]")
    try:
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as exc:
        raise DomainError(f"could not parse grid spec {text!r}") from exc
    if count < 2 or not (0.0 < start < stop):
        raise DomainError(f"grid spec {text!r} needs 0 < START < STOP and COUNT >= 2")
    mode = parts[3] if len(parts) == 4 else "log"
    if mode == "log":
        return np.geomspace(start, stop, count)
    if mode == "lin":
        return np.linspace(start, stop, count)
    raise DomainError(f"grid mode must be 'lin' or 'log', not {mode!r}")


# ---------------------------------------------------------------------------
# subcommands

def _cmd_forward(args):
    lam = _get_spectrum(args, "lambda")
    lam = validate_spectrum(lam)
    alpha_val, info = alpha_with_info(args.rho, lam, tol=args.tol)
    aks = np.array([alpha_k(args.rho, lam, k, tol=args.tol) for k in range(lam.size)])
    mu = lam * aks / alpha_val
    _say(
        f"alpha({_fmt(args.rho)}) = {alpha_val:.6g}  "
        f"[{info.method}, {info.terms} terms, error bound {info.error_bound:.2e}]"
    )
    if args.format == "json":
        payload = {
            "schema": SCHEMA,
            "command": "forward",
            "rho": args.rho,
            "lambda": lam,
            "alpha": alpha_val,
            "alpha_method": info.method,
            "alpha_terms": info.terms,
            "alpha_error_bound": info.error_bound,
            "alpha_k": aks,
            "mu": mu,
        }
        _emit(_dump_json(payload), args.out)
    else:
        rows = [
            (k, float(lam[k]), float(aks[k]), float(mu[k]))
            for k in range(lam.size)
        ]
        _emit(_dump_csv(("component", "lambda", "alpha_k", "mu"), rows), args.out)
    return 0


def _cmd_reconstruct(args):
    if args.mu_from is not None:
        lam_src = _get_spectrum(args, "lambda")
        if lam_src is None:
            raise DomainError("--mu-from forward needs --lambda or --lambda-file")
        lam_src = validate_spectrum(lam_src)
        a, aks = forward_family(args.rho, lam_src)
        mu = lam_src * aks / a
        _say(f"forward moments: {', '.join(_fmt(m) for m in mu)}")
    else:
        mu = _get_spectrum(args, "mu")
        if mu is None:
            raise DomainError("provide --mu, --mu-file, or --mu-from forward with --lambda")
    mu_tilde = args.mu_tilde
    if mu_tilde != "mean":
        try:
            mu_tilde = float(mu_tilde)
        except ValueError as exc:
            raise DomainError(f"--mu-tilde must be 'mean' or a float, not {mu_tilde!r}") from exc
    import warnings as _w

    with _w.catch_warnings(record=True) as caught:
        _w.simplefilter("always")
        result = reconstruct(
            mu,
            args.rho,
            order=args.order,
            scheme=args.scheme,
            mu_tilde=mu_tilde,
            with_residuals=args.with_residuals,
        )
    warn_msgs = [str(w.message) for w in caught]
    diag = result.diagnostics
    _say(
        f"lambda_tilde = {diag['lambda_tilde']:.6g}, x = {diag['x']:.6g}, "
        f"det J = {diag['det_jacobian']:.6g}"
    )
    for msg in warn_msgs:
        _say(f"warning: {msg}")
    if args.format == "json":
        payload = {
            "schema": SCHEMA,
            "command": "reconstruct",
            "rho": args.rho,
            "mu": mu,
            "order": args.order,
            "scheme": args.scheme,
            "lambda_hat": result.lambda_hat,
            "coefficients": [c for c in result.coeffs],
            "partial_sums": [p for p in result.partial_sums],
            "diagnostics": {
                "mu_tilde": diag["mu_tilde"],
                "lambda_tilde": diag["lambda_tilde"],
                "x": diag["x"],
                "det_jacobian": diag["det_jacobian"],
                "domain_ok": bool(diag["domain_report"].ok),
                "zetas": diag["zetas"],
            },
            "warnings": warn_msgs,
        }
        if "residuals" in diag:
            payload["diagnostics"]["residuals"] = diag["residuals"]
        _emit(_dump_json(payload), args.out)
    else:
        header = ["component", "mu"]
        header += [f"coeff_{n}" for n in range(1, args.order + 1)]
        header += ["lambda_hat"]
        rows = []
        for k in range(mu.size):
            row = [k, float(mu[k])]
            row += [float(result.coeffs[n - 1][k]) for n in range(1, args.order + 1)]
            row.append(float(result.lambda_hat[k]))
            rows.append(row)
        _emit(_dump_csv(header, rows), args.out)
    return 0


def _cmd_simulate(args):
    lam = _get_spectrum(args, "lambda")
    lam = validate_spectrum(lam)
    seed = _seed_from_args(args)
    estimators = tuple(args.estimators.split(",")) if args.estimators else ESTIMATORS
    result = bias_variance_sweep(
        lam,
        _parse_float_list(args.rho),
        _parse_int_list(args.n),
        args.replicas,
        seed,
        estimators=estimators,
        threads=args.threads,
        solver_tol=args.solver_tol,
    )
    fits = variance_fits(result.records)
    n_rec = len(result.records)
    n_fail = sum(result.failures.values())
    _say(f"{n_rec} records from {args.replicas} replicas per cell (seed {seed})")
    if n_fail:
        for (rho, n, est), count in sorted(result.failures.items()):
            _say(f"warning: {count} replica(s) excluded for {est} at rho={rho:g}, N={n}")
    if args.format == "json":
        payload = {
            "schema": SCHEMA,
            "command": "simulate",
            "lambda": result.lam,
            "seed": seed,
            "records": [
                {f: getattr(r, f) for f in SimulationRecord.FIELDS}
                for r in result.records
            ],
            "variance_fits": fits,
            "failures": [
                {"rho": rho, "n_samples": n, "estimator": est, "count": count}
                for (rho, n, est), count in sorted(result.failures.items())
            ],
        }
        _emit(_dump_json(payload), args.out)
    elif args.fits:
        header = ("rho", "estimator", "component", "intercept", "slope", "r_squared")
        rows = [
            (f["rho"], f["estimator"], f["component"], f["intercept"], f["slope"], f["r_squared"])
            for f in fits
        ]
        _emit(_dump_csv(header, rows), args.out)
    else:
        rows = [
            tuple(getattr(r, f) for f in SimulationRecord.FIELDS)
            for r in result.records
        ]
        _emit(_dump_csv(SimulationRecord.FIELDS, rows), args.out)
    return 0


def _table_payload(order, table):
    return {
        "order": order,
        "structures": [s.name for s in table.structures],
        "ratios": [k.label() for k in table.ratio_keys],
        "gamma": [[str(g) for g in row] for row in table.gamma],
        "row_sums": [str(s) for s in table.row_sums()],
    }


def _cmd_tables(args):
    orders = args.order or [2, 3, 4]
    for order in orders:
        if order not in GAMMA_TABLES:
            raise DomainError(f"no coefficient table at order {order}; available: 2, 3, 4")
    seed = _seed_from_args(args)
    if args.verify or args.extract:
        extracted = {}
        for order in orders:
            result = extract_gamma_table(order, trials=args.trials, seed=seed)
            extracted[order] = result
            if args.verify:
                match, mismatches = compare_to_stored(result)
                n_entries = len(result.structures) * len(result.ratio_keys)
                if match:
                    _say(f"order {order}: re-derived table matches exactly ({n_entries} entries)")
                else:
                    for name, label, got, want in mismatches[:10]:
                        _say(f"order {order}: {name} x {label}: derived {got}, stored {want}")
                    raise NumericError(
                        f"order-{order} table verification failed "
                        f"({len(mismatches)} mismatching entries)"
                    )
    if args.verify and not args.extract:
        _emit(_dump_json({"schema": SCHEMA, "command": "tables", "verified": orders}), args.out)
        return 0
    if args.format == "json":
        payload = {"schema": SCHEMA, "command": "tables", "tables": {}}
        for order in orders:
            if args.extract:
                res = extracted[order]
                payload["tables"][str(order)] = {
                    "order": order,
                    "structures": [s.name for s in res.structures],
                    "ratios": [k.label() for k in res.ratio_keys],
                    "gamma": [[str(g) for g in row] for row in res.gamma],
                    "rationalization_error": res.rationalization_err,
                    "fit_residual": res.fit_residual,
                }
            else:
                payload["tables"][str(order)] = _table_payload(order, GAMMA_TABLES[order])
        _emit(_dump_json(payload), args.out)
    else:
        rows = []
        for order in orders:
            if args.extract:
                res = extracted[order]
                structures, keys, gamma = res.structures, res.ratio_keys, res.gamma
            else:
                tab = GAMMA_TABLES[order]
                structures, keys, gamma = tab.structures, tab.ratio_keys, tab.gamma
            for s, row in zip(structures, gamma):
                for key, g in zip(keys, row):
                    rows.append((order, s.name, key.label(), str(g)))
        _emit(_dump_csv(("order", "structure", "ratio", "gamma"), rows), args.out)
    return 0


def _cmd_detj(args):
    if (args.x is None) == (args.x_grid is None):
        raise DomainError("provide exactly one of --x or --x-grid")
    xs = np.array([args.x]) if args.x is not None else _parse_grid(args.x_grid)
    if np.any(xs <= 0):
        raise DomainError("x values must be positive")
    rows = []
    for x in xs:
        lad = CdfLadder(args.v, float(x))
        rows.append(
            (
                float(x),
                lad.a,
                lad.b,
                jacobian_det(args.v, float(x)),
                jacobian_det_lower_bound(args.v, float(x)),
            )
        )
    _say(f"v = {args.v}: det over [{xs[0]:.4g}, {xs[-1]:.4g}] "
         f"in [{min(r[3] for r in rows):.4g}, {max(r[3] for r in rows):.4g}]")
    if args.format == "json":
        payload = {
            "schema": SCHEMA,
            "command": "detj",
            "v": args.v,
            "x": [r[0] for r in rows],
            "a": [r[1] for r in rows],
            "b": [r[2] for r in rows],
            "det": [r[3] for r in rows],
            "lower_bound": [r[4] for r in rows],
        }
        _emit(_dump_json(payload), args.out)
    else:
        _emit(_dump_csv(("x", "a", "b", "det", "lower_bound"), rows), args.out)
    return 0


def _cmd_xi_scan(args):
    xs = _parse_grid(args.x_grid)
    vals = np.array([xi(args.v, float(x)) for x in xs])
    i_min = int(np.argmin(vals))
    _say(f"v = {args.v}: min xi = {vals[i_min]:.6g} at x = {xs[i_min]:.6g}")
    if args.format == "json":
        payload = {
            "schema": SCHEMA,
            "command": "xi-scan",
            "v": args.v,
            "x": xs,
            "xi": vals,
            "min_xi": float(vals[i_min]),
            "argmin_x": float(xs[i_min]),
        }
        _emit(_dump_json(payload), args.out)
    else:
        rows = [(float(x), float(val)) for x, val in zip(xs, vals)]
        _emit(_dump_csv(("x", "xi"), rows), args.out)
    return 0


def _cmd_oracle(args):
    lam = _get_spectrum(args, "lambda")
    lam = validate_spectrum(lam)
    seed = _seed_from_args(args)
    est = mc_oracle(args.rho, lam, args.n_samples, seed)
    a_series, aks_series = forward_family(args.rho, lam)
    z_alpha = (
        (est.alpha_hat - a_series) / est.alpha_se if est.alpha_se > 0 else 0.0
    )
    z_ks = [
        (est.alpha_k_hat[k] - aks_series[k]) / est.alpha_k_se[k]
        if est.alpha_k_se[k] > 0
        else 0.0
        for k in range(lam.size)
    ]
    _say(
        f"alpha: MC {est.alpha_hat:.6g} +/- {est.alpha_se:.2g}, "
        f"series {a_series:.6g}, z = {z_alpha:+.2f}"
    )
    if args.format == "json":
        payload = {
            "schema": SCHEMA,
            "command": "oracle",
            "rho": args.rho,
            "lambda": lam,
            "n_samples": est.n_samples,
            "seed": est.seed,
            "alpha_hat": est.alpha_hat,
            "alpha_se": est.alpha_se,
            "alpha_series": a_series,
            "alpha_z": float(z_alpha),
            "alpha_k_hat": est.alpha_k_hat,
            "alpha_k_se": est.alpha_k_se,
            "alpha_k_series": aks_series,
            "alpha_k_z": [float(z) for z in z_ks],
        }
        _emit(_dump_json(payload), args.out)
    else:
        rows = [
            (
                k,
                float(est.alpha_k_hat[k]),
                float(est.alpha_k_se[k]),
                float(aks_series[k]),
                float(z_ks[k]),
            )
            for k in range(lam.size)
        ]
        _emit(
            _dump_csv(("component", "alpha_k_hat", "alpha_k_se", "alpha_k_series", "z"), rows),
            args.out,
        )
    return 0


# ---------------------------------------------------------------------------
# parser assembly

def _build_parser():
    parser = _Parser(
        prog="sphertrunc",
        description="Spectrum reconstruction for spherically truncated Gaussians.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    def add(name, func, help_text):
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.set_defaults(func=func)
        p.add_argument("--out", metavar="PATH", help="write machine output here instead of stdout")
        p.add_argument(
            "--format",
            choices=("json", "csv"),
            default=None,
            help="machine output format",
        )
        return p

    p = add("forward", _cmd_forward, "Exact truncated moments of a spectrum.")
    p.add_argument("--rho", type=float, required=True, help="squared truncation radius")
    _add_spectrum_args(p, "lambda", help_noun="population spectrum")
    p.add_argument("--tol", type=float, default=1e-10, help="series error bound")

    p = add("reconstruct", _cmd_reconstruct, "Perturbative inversion of truncated moments.")
    p.add_argument("--rho", type=float, required=True)
    _add_spectrum_args(p, "mu", required=False, help_noun="truncated moments")
    p.add_argument(
        "--mu-from",
        choices=("forward",),
        default=None,
        help="derive the moments by forward-mapping --lambda first",
    )
    _add_spectrum_args(p, "lambda", required=False, help_noun="spectrum for --mu-from forward")
    p.add_argument("--order", type=int, default=MAX_ORDER, choices=range(1, MAX_ORDER + 1))
    p.add_argument("--scheme", choices=("concentrate", "log-spread"), default="concentrate")
    p.add_argument(
        "--mu-tilde",
        default="mean",
        help="'mean' or an explicit expansion-point value",
    )
    p.add_argument(
        "--with-residuals",
        action="store_true",
        help="attach per-order consistency residuals to the diagnostics",
    )

    p = add("simulate", _cmd_simulate, "Replica study of estimator bias and variance.")
    _add_spectrum_args(p, "lambda", help_noun="population spectrum")
    p.add_argument("--rho", required=True, help="comma-separated rho values")
    p.add_argument("--n", required=True, help="comma-separated population sizes N")
    p.add_argument("--replicas", type=int, required=True)
    p.add_argument("--seed", type=int, default=None, help="RNG seed (default: $SPHERTRUNC_SEED or 0)")
    p.add_argument(
        "--estimators",
        default=None,
        help=f"comma-separated subset of {','.join(ESTIMATORS)}",
    )
    p.add_argument("--threads", type=int, default=1, help="worker processes")
    p.add_argument("--solver-tol", type=float, default=1e-9)
    p.add_argument(
        "--fits",
        action="store_true",
        help="CSV output: emit variance-vs-1/N fits instead of raw records",
    )

    p = add("tables", _cmd_tables, "Print, re-derive, or verify the coefficient tables.")
    p.add_argument(
        "--order",
        type=int,
        action="append",
        choices=(2, 3, 4),
        help="restrict to one order (repeatable; default all)",
    )
    p.add_argument("--verify", action="store_true", help="re-derive and compare to the stored tables")
    p.add_argument("--extract", action="store_true", help="output the re-derived tables")
    p.add_argument("--trials", type=int, default=8, help="independent draws for the re-derivation")
    p.add_argument("--seed", type=int, default=None)

    p = add("detj", _cmd_detj, "Jacobian determinant along x = rho / lambda_tilde.")
    p.add_argument("--v", type=int, required=True, help="matrix dimension")
    p.add_argument("--x", type=float, default=None)
    p.add_argument("--x-grid", default=None, metavar="START:STOP:COUNT[:lin|log]")

    p = add("xi-scan", _cmd_xi_scan, "Scan the second-order curvature factor.")
    p.add_argument("--v", type=int, required=True)
    p.add_argument("--x-grid", required=True, metavar="START:STOP:COUNT[:lin|log]")

    p = add("oracle", _cmd_oracle, "Monte Carlo check of the truncated-moment series.")
    p.add_argument("--rho", type=float, required=True)
    _add_spectrum_args(p, "lambda", help_noun="population spectrum")
    p.add_argument("--n-samples", type=int, default=1_000_000)
    p.add_argument("--seed", type=int, default=None)

    return parser


_DEFAULT_FORMATS = {
    "forward": "json",
    "reconstruct": "json",
    "simulate": "csv",
    "tables": "json",
    "detj": "csv",
    "xi-scan": "csv",
    "oracle": "json",
}


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return USAGE_EXIT
    if args.format is None:
        args.format = _DEFAULT_FORMATS[args.command]
    try:
        return args.func(args)
    except DomainError as exc:
        print(f"sphertrunc: domain error: {exc}", file=sys.stderr)
        return 1
    except NumericError as exc:
        print(f"sphertrunc: numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
