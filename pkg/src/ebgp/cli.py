"""Command-line interface.

Subcommands: ``gen`` (dataset CSV), ``fit`` (single estimator, predictions
CSV), ``benchmark`` (repeated-run report), ``rates`` (slope fit from a
report), ``prior-scan`` (log-prior table plus envelope diagnostic) and
``oracle`` (numerical checks).  Global flags ``--seed/--config/--out/
--threads`` apply to every subcommand; values in the JSON config file are
used wherever a flag is not given.  Exit codes: 0 success, 2 invalid input,
3 numerical failure.
"""

from __future__ import annotations

import csv
import json
import math
import sys

import click
import numpy as np

from .benchmark import BenchmarkReport, run_benchmark
from .datagen import DEFAULT_SIGMA, Dataset, generate
from .estimators import EstimatorConfig, default_bandwidth_grid, fit_predict
from .exceptions import EbgpError, InvalidInputError, InvalidParameterError, \
    NumericalFailureError
from .metrics import fit_rate_slope
from .oracles import affinity_band_check, circle_manifold, g_epsilon_apply, \
    knn_band_check, rkhs_norm_squared
from .priors import RescaledGammaPrior, check_a3_bounds, empirical_bayes_prior, \
    normalized
from .sampler import MHConfig


def _load_config(path):
    if path is None:
        return {}
    with open(path) as fh:
        return json.load(fh)


def _setting(ctx, section, key, flag_value, default=None):
    """Flag value if given, else the config-file value, else the default."""
    if flag_value is not None:
        return flag_value
    cfg = ctx.obj["config"]
    if section and isinstance(cfg.get(section), dict) and key in cfg[section]:
        return cfg[section][key]
    if key in cfg:
        return cfg[key]
    return default


def _estimator_config(ctx, method, sigma2, n_iter, burn_in, step, rho,
                      truncation, affinity, seed):
    cfg = ctx.obj["config"].get("estimator", {})
    mh_cfg = ctx.obj["config"].get("mh", {})
    mh = MHConfig(
        n_iter=int(n_iter if n_iter is not None else mh_cfg.get("n_iter", 3000)),
        burn_in=int(burn_in if burn_in is not None else mh_cfg.get("burn_in", 1000)),
        proposal_step=float(step if step is not None
                            else mh_cfg.get("proposal_step", 0.3)),
        seed=int(seed),
    )
    sigma2 = sigma2 if sigma2 is not None else cfg.get("sigma2", 0.01)
    if isinstance(sigma2, str) and sigma2 != "infer":
        sigma2 = float(sigma2)
    return EstimatorConfig(
        method=method if method is not None else cfg.get("method", "eb-gp"),
        sigma2=sigma2,
        a0=float(cfg.get("a0", 1.0)),
        b0=float(cfg.get("b0", 1.0)),
        gamma1=float(cfg.get("gamma1", 0.25)),
        gamma2=float(cfg.get("gamma2", 0.25)),
        mh=mh,
        rho=float(rho) if rho is not None else cfg.get("rho"),
        truncation=float(truncation) if truncation is not None
        else cfg.get("truncation"),
        affinity_variant=affinity if affinity is not None
        else cfg.get("affinity_variant", "arithmetic"),
        seed=int(seed),
    )


@click.group()
@click.option("--seed", type=int, default=None, help="Master seed.")
@click.option("--config", "config_path", type=click.Path(exists=True),
              default=None, help="JSON config file; flags override its values.")
@click.option("--out", "out_path", type=click.Path(), default=None,
              help="Output path (subcommand-specific; default stdout).")
@click.option("--threads", type=int, default=None, help="Worker threads.")
@click.pass_context
def cli(ctx, seed, config_path, out_path, threads):
    config = _load_config(config_path)
    ctx.obj = {
        "config": config,
        "seed": seed if seed is not None else int(config.get("seed", 0)),
        "out": out_path if out_path is not None else config.get("out"),
        "threads": threads if threads is not None else int(config.get("threads", 1)),
    }


@cli.command()
@click.option("--generator", default=None,
              type=click.Choice(["swiss-roll", "mixed-union", "circle"]))
@click.option("--n", type=int, default=None)
@click.option("--sigma", type=float, default=None)
@click.option("--radius", type=float, default=None, help="Circle radius.")
@click.option("--dim", type=int, default=None, help="Circle ambient dimension.")
@click.pass_context
def gen(ctx, generator, n, sigma, radius, dim):
    """Generate a synthetic dataset and write it as CSV."""
    generator = _setting(ctx, "gen", "generator", generator, "swiss-roll")
    n = int(_setting(ctx, "gen", "n", n, 200))
    sigma = float(_setting(ctx, "gen", "sigma", sigma, DEFAULT_SIGMA))
    kwargs = {}
    if generator == "circle":
        if radius is not None:
            kwargs["radius"] = radius
        if dim is not None:
            kwargs["D"] = dim
    data = generate(generator, n, sigma=sigma, seed=ctx.obj["seed"], **kwargs)
    out = ctx.obj["out"]
    if out is None:
        writer = csv.writer(sys.stdout)
        writer.writerow([f"x{i + 1}" for i in range(data.ambient_dim)]
                        + ["y", "fstar"])
        for i in range(data.n):
            writer.writerow([repr(float(v)) for v in data.X[i]]
                            + [repr(float(data.Y[i])), repr(float(data.f_star[i]))])
    else:
        data.to_csv(out)
        click.echo(f"wrote {data.n} rows to {out}")


@cli.command()
@click.option("--train", "train_path", type=click.Path(exists=True), required=True)
@click.option("--test", "test_path", type=click.Path(exists=True), default=None)
@click.option("--method", default=None,
              type=click.Choice(["eb-gp", "gamma-gp", "gp-mle", "gp-median",
                                 "kernel-ridge-cv", "single-point"]))
@click.option("--sigma2", default=None, help="Noise variance or 'infer'.")
@click.option("--n-iter", type=int, default=None)
@click.option("--burn-in", type=int, default=None)
@click.option("--step", type=float, default=None)
@click.option("--rho", type=float, default=None)
@click.option("--truncation", type=float, default=None)
@click.option("--affinity", default=None,
              type=click.Choice(["arithmetic", "harmonic"]))
@click.option("--chain-dump", type=click.Path(), default=None,
              help="Write the MH trace as CSV (Bayesian methods).")
@click.pass_context
def fit(ctx, train_path, test_path, method, sigma2, n_iter, burn_in, step,
        rho, truncation, affinity, chain_dump):
    """Fit one estimator and write its predictions as CSV."""
    train = Dataset.from_csv(train_path)
    test = Dataset.from_csv(test_path) if test_path else None
    config = _estimator_config(ctx, method, sigma2, n_iter, burn_in, step,
                               rho, truncation, affinity, ctx.obj["seed"])
    pred = fit_predict(train, None if test is None else test.X, config)
    if chain_dump and pred.chain is not None:
        pred.chain.to_csv(chain_dump)
    rows = []
    if pred.train_means is not None:
        for i, v in enumerate(pred.train_means):
            rows.append(("train", i, v))
    if pred.test_means is not None:
        for i, v in enumerate(pred.test_means):
            rows.append(("test", i, v))
    out = ctx.obj["out"]
    fh = open(out, "w", newline="") if out else sys.stdout
    try:
        writer = csv.writer(fh)
        writer.writerow(["split", "index", "prediction"])
        for row in rows:
            writer.writerow([row[0], row[1], repr(float(row[2]))])
    finally:
        if out:
            fh.close()
            click.echo(f"wrote {len(rows)} predictions to {out}")


@cli.command()
@click.option("--generator", default=None,
              type=click.Choice(["swiss-roll", "mixed-union", "circle"]))
@click.option("--methods", default=None, help="Comma-separated method list.")
@click.option("--ns", default=None, help="Comma-separated training sizes.")
@click.option("--repeats", default=None,
              help="Repetitions per cell, or 'paper' for the 200/100 rule.")
@click.option("--sigma", type=float, default=None)
@click.option("--n-test", type=int, default=None)
@click.option("--rho", type=float, default=None,
              help="Intrinsic dimension plugged into gamma-gp.")
@click.option("--no-timing", is_flag=True, default=False,
              help="Zero wall times for byte-reproducible reports.")
@click.pass_context
def benchmark(ctx, generator, methods, ns, repeats, sigma, n_test, rho,
              no_timing):
    """Run the repeated-experiment benchmark and write JSON (+CSV) reports."""
    generator = _setting(ctx, "benchmark", "generator", generator, "swiss-roll")
    methods = (_setting(ctx, "benchmark", "methods", methods, "eb-gp")
               if methods is None else methods)
    if isinstance(methods, str):
        methods = [m.strip() for m in methods.split(",") if m.strip()]
    ns = _setting(ctx, "benchmark", "ns", ns, "100,200")
    if isinstance(ns, str):
        n_list = [int(v) for v in ns.split(",") if v.strip()]
    else:
        n_list = [int(v) for v in ns]
    repeats = _setting(ctx, "benchmark", "repeats", repeats, 20)
    if repeats != "paper":
        repeats = int(repeats)
    sigma = float(_setting(ctx, "benchmark", "sigma", sigma, DEFAULT_SIGMA))
    n_test = int(_setting(ctx, "benchmark", "n_test", n_test, 1000))
    overrides = {"gamma-gp": {"rho": rho}} if rho is not None else {}
    report = run_benchmark(generator, methods, n_list, repeats, sigma=sigma,
                           n_test=n_test, master_seed=ctx.obj["seed"],
                           method_overrides=overrides,
                           threads=ctx.obj["threads"], timing=not no_timing)
    out = ctx.obj["out"]
    if out is None:
        click.echo(report.to_json())
    else:
        base = out[:-5] if out.endswith(".json") else out
        report.to_json(base + ".json")
        report.to_csv(base + ".csv")
        click.echo(f"wrote {base}.json and {base}.csv")


@cli.command()
@click.option("--report", "report_path", type=click.Path(exists=True),
              required=True, help="Benchmark report JSON.")
@click.option("--method", default=None, help="Restrict to one method.")
@click.option("--kind", default="out_sample_error",
              type=click.Choice(["out_sample_error", "in_sample_error"]))
@click.pass_context
def rates(ctx, report_path, method, kind):
    """Fit log-log rate slopes from a benchmark report."""
    report = BenchmarkReport.from_json(report_path)
    methods = [method] if method else sorted({a["method"]
                                              for a in report.aggregates})
    results = {}
    for m in methods:
        cells = sorted((a for a in report.aggregates if a["method"] == m),
                       key=lambda a: a["n"])
        pairs = [(a["n"], a.get(f"{kind}_mean")) for a in cells]
        pairs = [(n, e) for n, e in pairs if e is not None and e > 0.0]
        if len(pairs) < 3:
            click.echo(f"{m}: fewer than 3 usable sizes, skipped")
            continue
        fit_res = fit_rate_slope([p[0] for p in pairs], [p[1] for p in pairs])
        results[m] = {"slope": fit_res.slope, "intercept": fit_res.intercept,
                      "stderr": fit_res.stderr}
        click.echo(f"{m}: slope {fit_res.slope:+.4f} "
                   f"(stderr {fit_res.stderr:.4f}, kind {kind})")
    if ctx.obj["out"]:
        with open(ctx.obj["out"], "w") as fh:
            json.dump(results, fh, indent=2, sort_keys=True)


@cli.command("prior-scan")
@click.option("--train", "train_path", type=click.Path(exists=True),
              default=None, help="Dataset CSV; generated when omitted.")
@click.option("--generator", default="circle",
              type=click.Choice(["swiss-roll", "mixed-union", "circle"]))
@click.option("--n", type=int, default=2000)
@click.option("--t-min", type=float, default=1e-4)
@click.option("--t-max", type=float, default=1.0)
@click.option("--grid-size", type=int, default=50)
@click.option("--s", "s_smooth", type=float, default=2.0,
              help="Smoothness used by the envelope diagnostic.")
@click.option("--rho", type=float, default=1.0,
              help="Intrinsic dimension for the Gamma prior and diagnostic.")
@click.pass_context
def prior_scan(ctx, train_path, generator, n, t_min, t_max, grid_size,
               s_smooth, rho):
    """Tabulate both log-priors over a bandwidth grid and run the envelope check."""
    if train_path:
        data = Dataset.from_csv(train_path)
    else:
        data = generate(generator, n, seed=ctx.obj["seed"])
    eb = empirical_bayes_prior(data.X, seed=ctx.obj["seed"])
    gamma = RescaledGammaPrior(rho=rho)
    t_grid = np.geomspace(t_min, t_max, grid_size)
    rows = [(t, eb(t), gamma(t)) for t in t_grid]
    eb_norm = normalized(eb)
    report = check_a3_bounds(eb_norm, s=s_smooth, rho=rho, n=data.n,
                             D=data.ambient_dim)
    out = ctx.obj["out"]
    fh = open(out, "w", newline="") if out else sys.stdout
    try:
        writer = csv.writer(fh)
        writer.writerow(["t", "eb_log_prior", "gamma_log_prior"])
        for t, lp_eb, lp_g in rows:
            writer.writerow([repr(float(t)), repr(float(lp_eb)), repr(float(lp_g))])
    finally:
        if out:
            fh.close()
    click.echo(f"support: ({eb.support[0]:.6g}, {eb.support[1]:g}], "
               f"Tn = {eb.tn:.6g}")
    click.echo("envelope check: " + report.summary())


@cli.command()
@click.option("--check", required=True,
              type=click.Choice(["geps-order", "rkhs-norm", "affinity-band",
                                 "knn-band"]))
@click.option("--n", type=int, default=2000)
@click.option("--radius", type=float, default=0.4)
@click.pass_context
def oracle(ctx, check, n, radius):
    """Run one of the numerical oracle checks on circle data."""
    seed = ctx.obj["seed"]
    if check == "geps-order":
        manifold = circle_manifold(radius=1.0, eps=1e-4)
        one = lambda pts: np.ones(pts.shape[0])
        errs = []
        for eps in (1e-2, 1e-3, 1e-4):
            val = g_epsilon_apply(manifold, one, manifold.points[0], eps)
            errs.append(abs(val - 1.0))
            click.echo(f"eps={eps:g}: G_eps(1) = {val:.8f} (|err| {errs[-1]:.3e})")
        slope = np.polyfit(np.log([1e-2, 1e-3, 1e-4]), np.log(errs), 1)[0]
        click.echo(f"log-log error slope: {slope:.3f}")
        return
    if check == "rkhs-norm":
        eps = 1e-3
        manifold = circle_manifold(radius=1.0, eps=eps)
        c = 2.0
        val = rkhs_norm_squared(manifold, lambda pts: np.full(pts.shape[0], c), eps)
        approx = c ** 2 * manifold.volume * math.sqrt(2.0 * math.pi * eps)
        click.echo(f"norm^2 = {val:.8f}, small-eps approximation {approx:.8f}")
        return
    data = generate("circle", n, sigma=0.0, seed=seed, radius=radius)
    p = data.meta["density"]
    if check == "affinity-band":
        t_grid = np.geomspace(1e-3, 1e-2, 20)
        table = affinity_band_check(data.X, p, d=1, t_grid=t_grid)
        for t, v, ok in zip(table.t_grid, table.values, table.ok):
            click.echo(f"t={t:.5f}: v={v:.6f} {'ok' if ok else 'OUT'}")
        click.echo(f"all pass: {table.all_pass}")
    else:
        report = knn_band_check(data.X, p, d=1)
        click.echo(f"k={report.k}, reference={report.reference:.6g}, "
                   f"band=({report.band[0]:.6g}, {report.band[1]:.6g})")
        click.echo(f"pass fraction: {report.pass_fraction:.4f}"
                   + (" [small-n regime]" if report.small_n else ""))


def main():
    try:
        cli(standalone_mode=False)
    except click.exceptions.Abort:
        sys.exit(130)
    except click.UsageError as exc:
        exc.show()
        sys.exit(2)
    except click.ClickException as exc:
        exc.show()
        sys.exit(1)
    except NumericalFailureError as exc:
        click.echo(f"numerical failure: {exc}", err=True)
        sys.exit(3)
    except (InvalidInputError, InvalidParameterError) as exc:
        click.echo(f"invalid input: {exc}", err=True)
        sys.exit(2)
    except EbgpError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    sys.exit(0)


if __name__ == "__main__":
    main()
