"""Command-line front end: ``genhilbert <command> --config PATH --out DIR``.

Every output file embeds the hash of the effective configuration (config
file plus ``--seed``/``--tol`` overrides). Run metadata such as timings and
versions goes to a ``<command>.meta.json`` sidecar so that result files stay
byte-identical across runs.

Exit codes: 0 success, 1 failed check (selftest/verify), 2 configuration
error, 3 numerical failure, 4 truncation insufficiency.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import platform
import sys
import time
import warnings

import numpy as np

from . import __version__
from .acceptance import dumps, results_payload, run_suite, runtime_payload
from .carleson import CarlesonQuery, TheoremCase, ThresholdQuery, carleson_constant, default_t_grid, threshold_exponent
from .config import config_hash, load_config, measures_from_config
from .exceptions import (
    ConfigError,
    GenHilbertError,
    GridTooCoarse,
    InvalidCase,
    NonConvergent,
    TruncationInsufficient,
)
from .measures import DEFAULT_TOL, moments, tail
from .operator import OperatorSpec, apply_integral, apply_matrix, well_definedness_gate
from .probes import (
    compactness_probe,
    default_a_grid,
    duality_identity_bergman,
    duality_identity_dirichlet,
    lower_bound_scan,
    ratio_sup,
)
from .spaces import SpaceParams, TaylorPoly, test_f_bergman, test_f_dirichlet, test_g_log

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_TRUNCATION = 4

_META_SUFFIX = ".meta.json"


# --- output helpers --------------------------------------------------------------


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, str):
        return v
    return format(float(v), ".17g")


class _Writer:
    """Single writer for all result files of one run."""

    def __init__(self, out_dir, chash):
        self.out_dir = out_dir
        self.chash = chash
        self.files = []
        os.makedirs(out_dir, exist_ok=True)

    def _path(self, name):
        self.files.append(name)
        return os.path.join(self.out_dir, name)

    def csv(self, name, header, rows, comments=()):
        with open(self._path(name), "w", encoding="utf-8", newline="") as fh:
            fh.write(f"# config_hash={self.chash}\n")
            for c in comments:
                fh.write(f"# {c}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([_fmt(v) for v in row])

    def csv_text(self, name, text):
        with open(self._path(name), "w", encoding="utf-8", newline="") as fh:
            fh.write(f"# config_hash={self.chash}\n")
            fh.write(text)

    def json(self, name, obj):
        obj = dict(obj)
        obj["config_hash"] = self.chash
        with open(self._path(name), "w", encoding="utf-8") as fh:
            fh.write(dumps(_plain(obj)))

    def meta(self, command, started, elapsed, jobs, extra=None):
        meta = {
            "command": command,
            "config_hash": self.chash,
            "started_unix": started,
            "elapsed_seconds": elapsed,
            "jobs": jobs,
            "files": sorted(self.files),
            "versions": {
                "genhilbert": __version__,
                "python": platform.python_version(),
                "numpy": np.__version__,
            },
        }
        if extra:
            meta.update(extra)
        with open(os.path.join(self.out_dir, command + _META_SUFFIX), "w", encoding="utf-8") as fh:
            fh.write(dumps(_plain(meta)))


def _plain(v):
    if isinstance(v, dict):
        return {str(k): _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, np.ndarray):
        return _plain(v.tolist())
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if np.isfinite(v) else str(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    if hasattr(v, "value") and not isinstance(v, (int, str)):
        return v.value
    return v


# --- config accessors ------------------------------------------------------------


def _operator(cfg, mu, min_terms=0):
    op = cfg.get("operator", {})
    n_terms = max(int(op.get("n_terms", 64)), min_terms)
    return OperatorSpec(float(op.get("beta", 2.0)), mu, n_terms)


def _spaces(cfg):
    sp = cfg.get("spaces", {})
    return float(sp.get("p", 2.0)), float(sp.get("q", 2.0)), float(sp.get("alpha", 0.0))


def _tol(cfg):
    return float(cfg.get("tol", DEFAULT_TOL))


def _complex(v):
    if isinstance(v, list):
        return complex(v[0], v[1])
    return complex(v)


def _function(spec, p=2.0, alpha=0.0):
    if "coeffs" in spec:
        return TaylorPoly([_complex(c) for c in spec["coeffs"]])
    family, a, order = spec["family"], spec["a"], spec.get("order")
    if family == "BergmanF":
        return test_f_bergman(a, p, alpha, order)
    if family == "DirichletF":
        return test_f_dirichlet(a, p, alpha, order)
    return test_g_log(a, order)


def _function_label(spec):
    if "coeffs" in spec:
        return f"coeffs[{len(spec['coeffs'])}]"
    return f"{spec['family']}(a={spec['a']:g})"


# --- commands --------------------------------------------------------------------


def cmd_moments(cfg, writer, args):
    sec = cfg.get("moments", {})
    n_max = int(sec.get("n_max", 16))
    t = np.asarray(sec.get("t_grid", default_t_grid(17)), dtype=float)
    for name, mu in measures_from_config(cfg).items():
        m = moments(mu, n_max)
        writer.csv(f"moments_{name}.csv", ["n", "moment"], zip(range(n_max + 1), m))
        writer.csv(f"tails_{name}.csv", ["t", "tail"], zip(t, tail(mu, t)))
        print(f"{name}: m_0 = {m[0]:.17g}, m_{n_max} = {m[-1]:.17g}")
    return EXIT_OK


def cmd_classify(cfg, writer, args):
    sec = cfg.get("classify", {})
    query = CarlesonQuery(float(sec.get("s", 1.0)), float(sec.get("log_order", 0.0)), sec.get("t_grid"))
    for name, mu in measures_from_config(cfg).items():
        report = carleson_constant(mu, query)
        body = report.to_dict()
        body["measure"] = name
        body["fit"] = "degenerate" if np.isnan(report.fitted_exponent) else "ok"
        writer.json(f"classify_{name}.json", body)
        writer.csv_text(f"classify_{name}.csv", report.to_csv())
        print(
            f"{name}: s_hat={report.fitted_exponent:.6g} a_hat={report.fitted_log_order:.6g} "
            f"sup={report.constant_sup:.6g} verdict={report.vanishing_verdict.value}"
            + (" (tail vanishes on the grid; no exponent fit)" if body["fit"] == "degenerate" else "")
        )
    return EXIT_OK


def cmd_apply(cfg, writer, args):
    sec = cfg.get("apply", {})
    p, _, alpha = _spaces(cfg)
    f = _function(sec.get("function", {"coeffs": [1.0]}), p, alpha)
    z = np.array([_complex(v) for v in sec.get("z_grid", [0.0, 0.5, -0.5, [0.0, 0.5]])])
    for name, mu in measures_from_config(cfg).items():
        spec = _operator(cfg, mu, f.order)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            hf = apply_matrix(spec, f, SpaceParams.bergman(p, alpha) if "spaces" in cfg else None)
        vals = hf.evaluate(z)
        direct = apply_integral(spec, f, z, tol=_tol(cfg))
        notes = [str(w.message) for w in caught]
        writer.json(
            f"apply_{name}.json",
            {"measure": name, "beta": spec.beta, "n_terms": spec.n_terms, "coefficients": hf.to_list(), "warnings": notes},
        )
        writer.csv(
            f"apply_{name}.csv",
            ["z_re", "z_im", "series_re", "series_im", "integral_re", "integral_im"],
            [(a.real, a.imag, b.real, b.imag, c.real, c.imag) for a, b, c in zip(z, vals, direct)],
            comments=[f"warning: {n}" for n in notes],
        )
        print(f"{name}: b_0..b_3 = {np.round(hf.coeffs[:4], 12).tolist()}")
    return EXIT_OK


def cmd_verify_identity(cfg, writer, args):
    sec = cfg.get("verify_identity", {})
    p, _, alpha = _spaces(cfg)
    betas = [float(b) for b in sec.get("betas", [1.5, 2.0, 3.0])]
    fspecs = sec.get("functions", [{"coeffs": [1.0]}, {"coeffs": [0.0, 1.0]}])
    radius = float(sec.get("z_radius", 0.7))
    r = np.linspace(0.0, radius, int(sec.get("n_radii", 8)))
    n_ang = int(sec.get("n_angles", 16))
    z = (r[:, None] * np.exp(2j * np.pi * np.arange(n_ang) / n_ang)[None, :]).ravel()
    rows = []
    comments = []
    worst = 0.0
    for name, mu in measures_from_config(cfg).items():
        gate = well_definedness_gate(mu, p, alpha)
        if not gate.passed:
            comments.append(f"warning: measure {name} fails the Carleson condition (s={gate.exponent:g}) for A^{p:g}_{alpha:g}")
        for beta in betas:
            for fs in fspecs:
                f = _function(fs, p, alpha)
                op = cfg.get("operator", {})
                spec = OperatorSpec(beta, mu, max(int(op.get("n_terms", 160)), f.order))
                series = apply_matrix(spec, f).evaluate(z)
                integral = apply_integral(spec, f, z, tol=_tol(cfg))
                diff = float(np.max(np.abs(series - integral)))
                scale = float(np.max(np.abs(integral)))
                rel = diff / scale if scale > 0 else diff
                worst = max(worst, rel)
                rows.append((name, beta, _function_label(fs), diff, rel, gate.passed))
    writer.csv(
        "verify_identity.csv",
        ["measure", "beta", "function", "max_abs_residual", "max_rel_residual", "gate_passed"],
        rows,
        comments=comments,
    )
    for c in comments:
        print(c, file=sys.stderr)
    print(f"{len(rows)} cases, max relative residual {worst:.3g}")
    return EXIT_OK


def _compactness_exponent(p, q, alpha, beta):
    if q > 1:
        return float(threshold_exponent(ThresholdQuery(p, q, alpha, beta, TheoremCase.T41_necessary)))
    return float(threshold_exponent(ThresholdQuery(p, q, alpha, beta, TheoremCase.T41_q1)).s)


def cmd_probe(cfg, writer, args):
    sec = cfg.get("probe", {})
    kinds = sec.get("kinds", ["lower_bound_scan", "ratio_sup", "duality", "compactness"])
    p, q, alpha = _spaces(cfg)
    a_grid = np.asarray(sec.get("a_grid", default_a_grid()), dtype=float)
    r_grid = np.asarray(sec.get("r_grid", 1.0 - np.geomspace(0.1, 1e-4, 13)), dtype=float)
    tol = _tol(cfg)
    sups = []
    for name, mu in measures_from_config(cfg).items():
        spec = _operator(cfg, mu)
        beta = spec.beta
        results = []
        if "lower_bound_scan" in kinds:
            results.append(lower_bound_scan(spec, p, q, alpha, a_grid, tol=tol))
            sups.append((name, results[-1].summary["sup"]))
        if "ratio_sup" in kinds:
            source = SpaceParams.bergman(p, alpha)
            if sec.get("target", "bergman") == "dirichlet":
                source = SpaceParams.dirichlet(p, alpha)
                target = SpaceParams.dirichlet(q, beta - 1.0)
            else:
                target = SpaceParams.bergman(q, beta - 2.0)
            fam = sec.get("family", "BergmanF")
            results.append(
                ratio_sup(
                    spec, source, target, fam,
                    a_grid=a_grid if fam != "RandomPoly" else None,
                    count=int(sec.get("count", 16)),
                    seed=int(cfg.get("seed", 0)),
                    n_jobs=args.jobs,
                )
            )
        if "compactness" in kinds:
            s = float(sec.get("s", _compactness_exponent(p, q, alpha, beta)))
            results.append(compactness_probe(spec, s, r_grid, SpaceParams.bergman(p, alpha), n_jobs=args.jobs))
        for res in results:
            stem = f"probe_{res.kind}_{name}"
            body = res.to_dict()
            body["measure"] = name
            writer.json(stem + ".json", body)
            writer.csv_text(stem + ".csv", res.to_csv())
            print(f"{name} {res.kind}: sup={res.summary['sup']:.6g} verdict={res.verdict.value}")
        if "duality" in kinds:
            fspecs = sec.get("functions", [{"coeffs": [1.0]}, {"coeffs": [0.0, 1.0]}, {"coeffs": [0.5, 0.0, 1.0]}])
            funcs = [_function(fs, p, alpha) for fs in fspecs]
            rows = []
            for i, f in enumerate(funcs):
                for j, g in enumerate(funcs):
                    plain = duality_identity_bergman(spec, f, g)
                    deriv = duality_identity_dirichlet(spec, f, g)
                    rows.append(
                        (i, j, plain.lhs.real, plain.lhs.imag, plain.rhs.real, plain.rhs.imag, plain.residual,
                         deriv.lhs.real, deriv.lhs.imag, deriv.rhs.real, deriv.rhs.imag, deriv.residual)
                    )
            writer.csv(
                f"probe_duality_{name}.csv",
                ["f", "g", "plain_lhs_re", "plain_lhs_im", "plain_rhs_re", "plain_rhs_im", "plain_residual",
                 "deriv_lhs_re", "deriv_lhs_im", "deriv_rhs_re", "deriv_rhs_im", "deriv_residual"],
                rows,
            )
            print(f"{name} duality: max residuals {max(r[6] for r in rows):.3g} (plain), {max(r[11] for r in rows):.3g} (derivative)")
    if len(sups) > 1:
        print("lower_bound_scan sups: " + ", ".join(f"{n}={v:.6g}" for n, v in sups))
    return EXIT_OK


def cmd_selftest(cfg, writer, args):
    seed = int(cfg.get("seed", 42))
    results = run_suite(seed=seed, jobs=args.jobs or 1, echo=print)
    writer.json("selftest_results.json", results_payload(results, seed))
    args._meta_extra = {"runtimes": runtime_payload(results)}
    n_ok = sum(r.ok for r in results)
    print(f"{n_ok}/{len(results)} criteria passed")
    return EXIT_OK if n_ok == len(results) else EXIT_CHECK_FAILED


def cmd_verify(cfg, chash, out_dir):
    """Check that every result file in ``out_dir`` carries ``chash``."""
    bad = []
    seen = 0
    for name in sorted(os.listdir(out_dir)):
        path = os.path.join(out_dir, name)
        if name.endswith(_META_SUFFIX) or not os.path.isfile(path):
            continue
        if name.endswith(".csv"):
            with open(path, encoding="utf-8") as fh:
                found = fh.readline().strip().removeprefix("# config_hash=")
        elif name.endswith(".json"):
            with open(path, encoding="utf-8") as fh:
                found = json.load(fh).get("config_hash")
        else:
            continue
        seen += 1
        if found != chash:
            bad.append(name)
    for name in bad:
        print(f"MISMATCH {name}")
    print(f"{seen - len(bad)}/{seen} files carry config hash {chash}")
    return EXIT_OK if seen and not bad else EXIT_CHECK_FAILED


COMMANDS = {
    "moments": cmd_moments,
    "classify": cmd_classify,
    "apply": cmd_apply,
    "verify-identity": cmd_verify_identity,
    "probe": cmd_probe,
    "selftest": cmd_selftest,
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON experiment configuration")
    common.add_argument("--out", metavar="DIR", default="genhilbert_out", help="output directory")
    common.add_argument("--seed", type=int, default=None, help="seed for random families (U64)")
    common.add_argument("--jobs", type=int, default=1, help="worker processes for probe grids")
    common.add_argument("--tol", type=float, default=None, help="integration tolerance")

    parser = argparse.ArgumentParser(prog="genhilbert", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "moments": "moments and tails of the configured measures",
        "classify": "Carleson classification report",
        "apply": "apply the operator to a function",
        "verify-identity": "matrix action versus integral form",
        "probe": "boundedness, duality and compactness probes",
        "selftest": "run the acceptance suite",
        "verify": "check that outputs in --out carry the config hash",
    }
    for name, text in helps.items():
        sub.add_parser(name, parents=[common], help=text)
    return parser


def _effective_config(args):
    cfg, loc = load_config(args.config) if args.config else ({}, None)
    if args.command in ("selftest",) and "seed" not in cfg and args.seed is None:
        cfg["seed"] = 42
    if args.seed is not None:
        if not 0 <= args.seed < 1 << 64:
            raise ConfigError("--seed must be an unsigned 64-bit integer")
        cfg["seed"] = args.seed
    if args.tol is not None:
        if not args.tol > 0:
            raise ConfigError("--tol must be positive")
        cfg["tol"] = args.tol
    if args.jobs is not None and args.jobs < 1:
        raise ConfigError("--jobs must be at least 1")
    return cfg, loc


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg, loc = _effective_config(args)
        chash = config_hash(cfg)
        if args.command == "verify":
            return cmd_verify(cfg, chash, args.out)
        if args.command not in ("selftest",) and not args.config:
            raise ConfigError(f"{args.command} needs --config")
        measures_from_config(cfg, loc)  # surface measure errors before any output
        writer = _Writer(args.out, chash)
        started = time.time()
        t0 = time.perf_counter()
        code = COMMANDS[args.command](cfg, writer, args)
        writer.meta(args.command, started, time.perf_counter() - t0, args.jobs, getattr(args, "_meta_extra", None))
        return code
    except (ConfigError, InvalidCase) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except TruncationInsufficient as exc:
        print(f"truncation error: {exc}", file=sys.stderr)
        return EXIT_TRUNCATION
    except (NonConvergent, GridTooCoarse) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except GenHilbertError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        # remaining ValueErrors come from parameter validation
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
