"""Command-line experiment runner.

Every subcommand reads a JSON config, runs one estimator and writes a JSON
report (keys sorted, so identical inputs give identical bytes) plus a CSV
table where one applies. Exit codes: 0 success, 2 configuration error,
3 numerical non-convergence (the partial report is still written).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import config as cfg
from . import carleson, norms, volterra, weight_classes
from .functions import choose_gamma
from .geometry import InvalidParameterError, dyadic_family
from .weights import InvalidWeightError

EXIT_OK, EXIT_CONFIG, EXIT_NONCONVERGED = 0, 2, 3
OUT_ENV = "BERGMANLAB_OUT"

DESCRIPTIONS = {
    "weight-class": "Doubling and reverse-doubling constants over Carleson squares, and (with nu) "
                    "the B_infinity scan and the Kerman-Torchinsky exponent.",
    "carleson": "Carleson constant sup mu(S)/w(S)^(q/p) for the embedding A^p_w -> L^q_mu, "
                "with the per-level vanishing profile.",
    "maximal": "Hormander maximal operator [M_w(|phi|^(1/alpha))]^alpha from L^p_w to L^q_mu over "
               "probe functions, reported next to the Carleson constant.",
    "lp-ratio": "Littlewood-Paley equivalence: Bergman norm versus the k-th derivative functional "
                "over a suite of test functions.",
    "tilde-equivalence": "Norms with w and with its square average, and the derivative functional "
                         "with the square average.",
    "volterra": "Boundedness and compactness criteria for T_g f = integral of f g' "
                "(q < p uses the A^s norm of g).",
    "resolvent-scan": "Classify a grid of lambda values through the derivative-norm equivalence for "
                      "the twisted weight w exp(p Re(g/lambda)).",
    "selftest": "Closed-form oracle checks of the numerical core.",
}


# ---------------------------------------------------------------------------
# serialization


def clean(obj):
    """Recursively turn numpy and complex values into JSON-safe data."""
    if isinstance(obj, dict):
        return {str(k): clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [cfg.finite_or_str(obj.real), cfg.finite_or_str(obj.imag)]
    if isinstance(obj, (float, np.floating)):
        return cfg.finite_or_str(obj)
    if isinstance(obj, np.ndarray):
        return clean(obj.tolist())
    return obj


def dump_json(record: dict) -> str:
    return json.dumps(clean(record), sort_keys=True, indent=2, allow_nan=False) + "\n"


def table_csv(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, quoting=csv.QUOTE_MINIMAL, lineterminator="\r\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# experiments: each returns (record, csv text or None, converged)


def _family(config, default=10):
    return dyadic_family(int(config.get("depth", default)))


def run_weight_class(config, spec, threads):
    w = cfg.build_weight(cfg.require(config, "weight")[0])
    K = float(config.get("K", 2.0))
    fam = _family(config, 10)
    verdict = weight_classes.classify(w, K, fam)
    beta = weight_classes.dcheck_beta(w, K, fam)
    record = {"weight": w.label, "K": K, "depth": fam.depth,
              "dhat": verdict.dhat.as_record(), "dcheck": verdict.dcheck.as_record(),
              "in_dhat": verdict.in_dhat, "in_dcheck": verdict.in_dcheck, "in_d": verdict.in_d,
              "reverse_doubling_beta": {"beta0": beta.beta0, "constant": beta.constant,
                                        "level_beta": list(beta.level_beta), "note": beta.note}}
    rows = [("dhat", n + 1, v) for n, v in enumerate(verdict.dhat.level_max)]
    rows += [("dcheck", n + 1, v) for n, v in enumerate(verdict.dcheck.level_max)]
    if "nu" in config:
        nu = cfg.build_weight(config["nu"])
        scan = weight_classes.binfty_scan(w, nu, tuple(config.get("p_grid", (1.5, 2.0, 4.0, 8.0))),
                                          dyadic_family(min(fam.depth, 10)))
        kt = weight_classes.kt_estimate(w, nu, dyadic_family(min(fam.depth, 8)))
        record["binfty"] = scan.as_record()
        record["kerman_torchinsky"] = kt.as_record()
    return record, table_csv(["quantity", "level", "running_max"], rows), True


def run_carleson(config, spec, threads):
    mu_spec, w_spec, p, q = cfg.require(config, "measure", "weight", "p", "q")
    cfg.check(q >= p, f"carleson needs p <= q (got p={p}, q={q})")
    mu, w = cfg.build_measure(mu_spec), cfg.build_weight(w_spec)
    fam = _family(config, 10)
    est = carleson.carleson_constant(mu, w, p, q, fam)
    prof = carleson.vanishing_profile(mu, w, p, q, int(config.get("levels", min(fam.depth, 12))))
    record = {"measure": mu.label, "weight": w.label, "p": p, "q": q,
              "constant": est.as_record(), "profile": prof.as_record(),
              "measured_exponent": _exponent(prof.maxima)}
    if "gamma" in config:
        low = carleson.embedding_lower_bound(mu, w, p, q, float(config["gamma"]))
        record["lower_bound"] = low.as_record()
    return record, prof.to_csv(), True


def _exponent(maxima):
    m = np.asarray(maxima, dtype=float)
    tail = m[-6:]
    if tail.size < 2 or np.any(tail <= 0) or not np.all(np.isfinite(tail)):
        return "nan"
    return carleson.measured_exponent(tail)


def run_maximal(config, spec, threads):
    w_spec, mu_spec, p, q, alpha = cfg.require(config, "weight", "measure", "p", "q", "alpha")
    cfg.check(q >= p, f"maximal needs p <= q (got p={p}, q={q})")
    cfg.check(p * alpha > 1, f"maximal needs p * alpha > 1 (got {p * alpha:g})")
    w, mu = cfg.build_weight(w_spec), cfg.build_measure(mu_spec)
    est = carleson.maximal_power_operator_constant(w, p, q, alpha, mu)
    ref = carleson.carleson_constant(mu, w, p, q, dyadic_family(int(config.get("depth", 10))))
    record = {"weight": w.label, "measure": mu.label, "p": p, "q": q, "alpha": alpha,
              "maximal_constant": est.as_record(), "carleson_constant": ref.as_record(),
              "ratio_to_carleson_root": est.value / ref.value ** (1.0 / q) if ref.value > 0 else "nan"}
    if "f" in config:
        s = float(config.get("s", 0.5))
        dom = carleson.pointwise_domination_check(cfg.build_function(config["f"]), w, s)
        record["pointwise_domination"] = dom.as_record()
    return record, None, True


def _suite(config, p, w):
    sp = config.get("suite", {"kind": "default"})
    if sp["kind"] == "monomials":
        return [norms.SuiteEntry(norms.monomial(n), 0, f"z^{n}") for n in range(sp["max_degree"] + 1)], "monomials"
    if sp["kind"] == "list":
        fs = [cfg.build_function(f) for f in sp["functions"]]
        return [norms.SuiteEntry(f, 0, f.label) for f in fs], "list"
    gamma = sp.get("gamma", config.get("gamma"))
    if gamma is None:
        gamma = 4.0 * p if not w.is_radial else choose_gamma(w, p)[0]
    depth = int(sp.get("depth", config.get("depth", 8)))
    suite = norms.default_suite(depth, p, gamma, per_level=sp.get("per_level", 8),
                                max_degree=sp.get("max_degree", 32), radial=w.is_radial)
    return suite, f"default(depth={depth}, gamma={gamma:g})"


def run_lp_ratio(config, spec, threads):
    w_spec, p = cfg.require(config, "weight", "p")
    k = int(config.get("k", 1))
    w = cfg.build_weight(w_spec)
    suite, name = _suite(config, p, w)
    rep = norms.lp_ratio_suite(w, p, k, suite, spec=spec, threads=threads, suite_name=name)
    return rep.as_record(), rep.to_csv(), rep.nonconverged == 0


def run_tilde(config, spec, threads):
    w_spec, p = cfg.require(config, "weight", "p")
    k = int(config.get("k", 1))
    w = cfg.build_weight(w_spec)
    suite, name = _suite(config, p, w)
    rep = norms.tilde_equivalence_suite(w, p, k, suite, spec=spec, threads=threads, suite_name=name)
    ok = rep.norm_vs_tilde.nonconverged == 0 and rep.tilde_vs_lp.nonconverged == 0
    return rep.as_record(), rep.to_csv(), ok


def run_volterra(config, spec, threads):
    g_spec, w_spec, p, q = cfg.require(config, "g", "weight", "p", "q")
    g, w = cfg.build_function(g_spec), cfg.build_weight(w_spec)
    record = {"g": g.label, "weight": w.label, "p": p, "q": q}
    table = None
    if q >= p:
        est = volterra.tg_bounded_constant(g, w, p, q, _family(config, 12))
        prof = volterra.tg_compact_profile(g, w, p, q, int(config.get("levels", 12)))
        record.update(bounded=est.as_record(), compact_profile=prof.as_record(),
                      compact_plausible=prof.vanishing)
        table = prof.to_csv()
    else:
        s = volterra.volterra_index(p, q)
        res = norms.bergman_integral(g, w, s, spec)
        value = float(np.real(res.value))
        record.update(s=s, norm=value ** (1.0 / s) if math.isfinite(value) else "inf",
                      bounded_and_compact=bool(math.isfinite(value)), converged=res.converged)
        if not res.converged:
            return record, None, False
    if "h" in config and "lambda" in config:
        lam = cfg.to_complex(config["lambda"])
        cfg.check(lam != 0, "lambda must be nonzero")
        h = cfg.build_function(config["h"])
        f = volterra.resolvent_solution(lam, g, h)
        rng = np.random.default_rng(int(config.get("seed", 0)))
        pts = rng.uniform(0, 0.9, 50) * np.exp(1j * rng.uniform(0, 2 * math.pi, 50))
        resid = lam * f(pts) - volterra.apply_tg(g, f, pts) - h(pts)
        record["resolvent_identity_max_residual"] = float(np.max(np.abs(resid)))
    return record, table, True


def run_resolvent_scan(config, spec, threads):
    g_spec, w_spec, p, grid = cfg.require(config, "g", "weight", "p", "lambda_grid")
    g, w = cfg.build_function(g_spec), cfg.build_weight(w_spec)
    suite, name = _suite(config, p, w)
    verdicts = volterra.resolvent_scan(g, w, p, grid["re"], grid["im"], grid["resolution"],
                                       suite=suite, threads=threads, spec=spec)
    rows = [(v.lam.real, v.lam.imag, v.spread, v.verdict) for v in verdicts]
    record = {"g": g.label, "weight": w.label, "p": p, "suite": name,
              "points": [v.as_record() for v in verdicts]}
    ok = all(v.report is None or v.report.nonconverged == 0 for v in verdicts)
    return record, table_csv(["re_lambda", "im_lambda", "spread", "verdict"], rows), ok


def selftest_checks() -> list[tuple[str, bool, str]]:
    """Small closed-form checks: (name, passed, detail)."""
    from . import quadrature as quad
    from .functions import monomial
    from .geometry import carleson_square
    from .weights import constant, standard, radial_power, tail_integral

    out = []

    def add(name, got, want, tol):
        ok = abs(got - want) <= tol * max(1.0, abs(want))
        out.append((name, bool(ok), f"got {got:.12g}, expected {want:.12g}"))

    add("disc area", float(quad.integrate("disc", lambda z: np.ones(np.shape(z))).value), 1.0, 1e-10)
    sq = carleson_square(0.5)
    add("square area", float(quad.integrate(sq, lambda z: np.ones(np.shape(z))).value), sq.area, 1e-10)
    add("monomial norm", norms.bergman_norm(monomial(1), standard(0), 2.0) ** 2, 0.5, 1e-8)
    w = radial_power(1.0)
    add("tail doubling", float(tail_integral(w, 0.5) / tail_integral(w, 0.75)), 4.0, 1e-10)
    rep = norms.lp_ratio_suite(standard(0), 2.0, 1, [monomial(1)])
    add("derivative ratio", rep.records[0]["ratio"], 3.0, 1e-8)
    mu = carleson.AtomicMeasure([0.5], [1.0])
    add("atom carleson", carleson.carleson_constant(mu, constant(), 2, 2, dyadic_family(6)).value,
        1.0 / sq.area, 1e-12)
    return out


def run_selftest(config, spec, threads):
    checks = selftest_checks()
    record = {"checks": [{"name": n, "passed": ok, "detail": d} for n, ok, d in checks],
              "passed": all(ok for _, ok, _ in checks)}
    rows = [(n, "PASS" if ok else "FAIL", d) for n, ok, d in checks]
    return record, table_csv(["check", "status", "detail"], rows), record["passed"]


RUNNERS = {
    "weight-class": run_weight_class,
    "carleson": run_carleson,
    "maximal": run_maximal,
    "lp-ratio": run_lp_ratio,
    "tilde-equivalence": run_tilde,
    "volterra": run_volterra,
    "resolvent-scan": run_resolvent_scan,
    "selftest": run_selftest,
}


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bergmanlab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in cfg.EXPERIMENTS:
        sp = sub.add_parser(name, help=DESCRIPTIONS[name], description=DESCRIPTIONS[name])
        sp.add_argument("--config", help="JSON experiment config")
        sp.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./bergmanlab-out)")
        sp.add_argument("--threads", type=int, default=None, help="worker threads for suites")
        sp.add_argument("--tolerance", type=float, default=None, help="quadrature relative tolerance")
        sp.add_argument("--depth", type=int, default=None, help="dyadic family depth")
    sub.add_parser("list-catalog", help="Print the weight and function catalog with parameters.")
    return parser


def _out_dir(args, config) -> Path:
    if args.out:
        return Path(args.out)
    if "output" in config and "dir" in config["output"]:
        return Path(config["output"]["dir"])
    return Path(os.environ.get(OUT_ENV, "bergmanlab-out"))


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "list-catalog":
        for line in cfg.catalog_lines():
            print(line)
        return EXIT_OK
    try:
        if args.config:
            config = cfg.load(args.config)
        elif args.command == "selftest":
            config = {"experiment": "selftest"}
        else:
            raise cfg.ConfigError("--config is required")
        if config["experiment"] != args.command:
            raise cfg.ConfigError(f"config experiment {config['experiment']!r} does not match "
                                  f"subcommand {args.command!r}")
        if args.depth is not None:
            cfg.check(1 <= args.depth <= 16, "--depth must lie in 1..16")
            config["depth"] = args.depth
        if args.tolerance is not None:
            cfg.check(0 < args.tolerance <= 0.1, "--tolerance must lie in (0, 0.1]")
        threads = args.threads or int(config.get("threads", 1))
        cfg.check(threads >= 1, "--threads must be positive")
        spec = cfg.build_spec(config, args.tolerance)
        record, table, converged = RUNNERS[args.command](config, spec, threads)
    except (cfg.ConfigError, InvalidParameterError, InvalidWeightError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = _out_dir(args, config)
    out.mkdir(parents=True, exist_ok=True)
    stem = config.get("output", {}).get("stem", args.command)
    record = {"experiment": args.command, "converged": bool(converged), "result": record}
    (out / f"{stem}.json").write_text(dump_json(record))
    if table is not None:
        (out / f"{stem}.csv").write_bytes(table.encode())
    print(f"wrote {out / (stem + '.json')}")
    if not converged:
        print("warning: numerical non-convergence; partial report written", file=sys.stderr)
        return EXIT_NONCONVERGED
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
