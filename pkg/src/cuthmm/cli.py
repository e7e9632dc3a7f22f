"""Config-driven command line front end.

Subcommands: simulate, fit-q, fit-emissions, fit-full, spectral, diagnose,
reproduce-paper. All state flows through one JSON config (every field
defaulted); artifacts land in ``<outputs.directory>/<config-hash>/`` so a
config identifies its run directory. Exit codes: 0 ok, 2 config error,
3 missing artifact, 4 numerical failure.
"""

import argparse
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np
from scipy import stats as _sstats

from . import config as cfgmod
from . import diagnostics, dpm_cut, hmm, io, spectral
from . import histogram_gibbs as hg
from . import partition as partmod
from .exceptions import ConfigError, CuthmmError, MissingArtifact, NumericalError


# ----------------------------------------------------------------- model

def emission_sampler(spec):
    if spec["type"] == "normal":
        mean, sd = spec["mean"], spec["sd"]
        return lambda rng: rng.normal(mean, sd)
    raise ConfigError(f"unknown emission type {spec['type']!r}")


def emission_cdf(spec):
    if spec["type"] == "normal":
        return _sstats.norm(loc=spec["mean"], scale=spec["sd"]).cdf
    raise ConfigError(f"unknown emission type {spec['type']!r}")


def emission_logpdf_table(specs, y):
    """(n, R) log-density table of the configured true emissions."""
    cols = []
    for spec in specs:
        if spec["type"] != "normal":
            raise ConfigError(f"unknown emission type {spec['type']!r}")
        cols.append(_sstats.norm(loc=spec["mean"], scale=spec["sd"]).logpdf(y))
    return np.column_stack(cols)


def emission_pdf_values(specs, grid):
    """(R, G) true density values on the grid."""
    return np.stack(
        [_sstats.norm(loc=s["mean"], scale=s["sd"]).pdf(grid) for s in specs]
    )


def _transform(cfg):
    return partmod.TransformG0(mode=cfg["partition"]["transform"])


def _seed(cfg, *offsets) -> int:
    s = cfg["seed"]
    for k, off in enumerate(offsets):
        s = (s + (k + 1) * 10_007 * (off + 1)) % 2**63
    return s


# ------------------------------------------------------------- data layer

def _load_observations(data_dir, n=None):
    y = io.read_series(io.require(Path(data_dir) / "observations.csv"))
    return y if n is None else y[:n]


def cmd_simulate(cfg, rdir) -> list:
    t0 = time.time()
    n = cfg["data"]["n"]
    model = cfg["model"]
    rng = np.random.default_rng(_seed(cfg, 0))
    samplers = [emission_sampler(s) for s in model["emissions"]]
    x, y = hmm.simulate_hmm(np.asarray(model["Q_star"], dtype=float), samplers, n, rng)
    data_dir = rdir / "data"
    io.write_series(data_dir / "observations.csv", "y", y)
    io.write_series(data_dir / "latent_path.csv", "x", x.astype(int))
    meta = {"n": n, "seed": _seed(cfg, 0), "model": model, "config_hash": cfgmod.config_hash(cfg)}
    io.write_json(data_dir / "meta.json", meta)
    written = [data_dir / "observations.csv", data_dir / "latent_path.csv", data_dir / "meta.json"]
    io.write_manifest(rdir, "simulate", cfgmod.config_hash(cfg), cfg["seed"], time.time() - t0, written)
    return written


# ------------------------------------------------------------- pi1 layer

def _pi1_hyper(cfg, r, kappa):
    return hg.DirichletHyper(
        gamma=np.full((r, r), cfg["pi1"]["gamma"]),
        beta=np.full((kappa, r), cfg["pi1"]["beta"]),
    )


def _fit_q_cell(args):
    """One (data prefix, partition level) chain; worker for --jobs."""
    cfg, y, m, out_dir, seed = args
    r = cfg["model"]["R"]
    part = partmod.build_partition(_transform(cfg), m)
    bins = partmod.coarsen(part, y)
    hyper = _pi1_hyper(cfg, r, part.kappa)
    pcfg = hg.Pi1Config(
        iterations=cfg["pi1"]["iterations"],
        burn_in=cfg["pi1"]["burn_in"],
        thin=cfg["pi1"]["thin"],
        seed=seed,
    )
    store = hg.run_chain(bins, hyper, pcfg, r, part)
    out_dir = Path(out_dir)
    io.save_draw_store(store, out_dir / "draws.csv", out_dir / "meta.json")
    return [out_dir / "draws.csv", out_dir / "meta.json"]


def cmd_fit_q(cfg, rdir, jobs: int = 1, n=None, sub=None) -> list:
    t0 = time.time()
    base = rdir if sub is None else rdir / sub
    y = _load_observations(rdir / "data", n)
    tasks = []
    for m in cfgmod.partition_levels(cfg):
        out_dir = base / "pi1" / f"kappa_{2**m}"
        tasks.append((cfg, y, m, str(out_dir), _seed(cfg, 1, m, len(y))))
    written = []
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for result in pool.map(_fit_q_cell, tasks):
                written.extend(result)
    else:
        for task in tasks:
            written.extend(_fit_q_cell(task))
    io.write_manifest(base, "fit-q", cfgmod.config_hash(cfg), cfg["seed"], time.time() - t0, written)
    return written


# ------------------------------------------------------------- pi2 layer

def _pi2_hyper(cfg, n):
    p = cfg["pi2"]
    s_max = p["S_max"] if p["S_max"] is not None else int(math.isqrt(n))
    return dpm_cut.DpmHyper(
        M0=p["M0"], mu_c=p["mu_c"], sigma_c2=p["sigma_c2"],
        alpha_sigma=p["alpha_sigma"], beta_sigma=p["beta_sigma"], S_max=s_max,
    )


def _thin_store(store, max_draws):
    if max_draws is None or len(store) <= max_draws:
        return store
    idx = np.linspace(0, len(store) - 1, max_draws).round().astype(int)
    from dataclasses import replace

    return replace(
        store,
        q=store.q[idx],
        omega=store.omega[idx],
        log_posteriors=store.log_posteriors[idx],
        relabeling=store.relabeling[idx],
    )


def _density_truth(cfg, grid):
    return [list(row) for row in emission_pdf_values(cfg["model"]["emissions"], grid)]


def cmd_fit_emissions(cfg, rdir, n=None, sub=None) -> list:
    t0 = time.time()
    base = rdir if sub is None else rdir / sub
    y = _load_observations(rdir / "data", n)
    kappa = cfg["pi2"]["kappa"] or cfgmod.default_pi2_kappa(len(y))
    store_dir = base / "pi1" / f"kappa_{kappa}"
    store = io.load_draw_store(io.require(store_dir / "draws.csv"), store_dir / "meta.json")
    store = _thin_store(store, cfg["pi2"]["max_draws"])
    hyper = _pi2_hyper(cfg, len(y))
    ncfg = dpm_cut.NestedConfig(C=cfg["pi2"]["C"], seed=_seed(cfg, 2, kappa, len(y)))
    grid = dpm_cut.default_grid(y, cfg["outputs"]["grid_points"])
    draws, dgd = dpm_cut.nested_run(store, y, hyper, ncfg, grid=grid)
    out_dir = base / "pi2" / f"kappa_{kappa}"
    io.save_emission_draws(draws, out_dir / "emission_draws.csv")
    io.save_density_summary(dgd, out_dir / "density_summary.csv", truth=_density_truth(cfg, grid))
    io.write_json(
        out_dir / "meta.json",
        {
            "hyper": {k: cfg["pi2"][k] for k in ("M0", "mu_c", "sigma_c2", "alpha_sigma", "beta_sigma")},
            "S_max": hyper.S_max,
            "C": ncfg.C,
            "seed": ncfg.seed,
            "n": len(y),
            "q_draws_reference": str(store_dir / "draws.csv"),
        },
    )
    written = [out_dir / "emission_draws.csv", out_dir / "density_summary.csv", out_dir / "meta.json"]
    io.write_manifest(base, "fit-emissions", cfgmod.config_hash(cfg), cfg["seed"], time.time() - t0, written)
    return written


def cmd_fit_full(cfg, rdir, n=None, sub=None) -> list:
    t0 = time.time()
    base = rdir if sub is None else rdir / sub
    y = _load_observations(rdir / "data", n)
    r = cfg["model"]["R"]
    hyper = _pi2_hyper(cfg, len(y))
    fcfg = dpm_cut.FullBayesConfig(
        iterations=cfg["full_bayes"]["iterations"],
        burn_in=cfg["full_bayes"]["burn_in"],
        thin=cfg["full_bayes"]["thin"],
        seed=_seed(cfg, 3, len(y)),
    )
    grid = dpm_cut.default_grid(y, cfg["outputs"]["grid_points"])
    gamma = np.full((r, r), cfg["pi1"]["gamma"])
    store, draws, dgd = dpm_cut.full_bayes_run(y, hyper, gamma, fcfg, grid=grid)
    store.meta["n"] = len(y)
    store.meta["R"] = r
    store.meta["kappa"] = hyper.S_max  # omega slot carries the mixture weights
    out_dir = base / "full_bayes"
    io.save_draw_store(store, out_dir / "q_draws.csv", out_dir / "meta.json")
    io.save_emission_draws(draws, out_dir / "emission_draws.csv")
    io.save_density_summary(dgd, out_dir / "density_summary.csv", truth=_density_truth(cfg, grid))
    written = [out_dir / "q_draws.csv", out_dir / "meta.json",
               out_dir / "emission_draws.csv", out_dir / "density_summary.csv"]
    io.write_manifest(base, "fit-full", cfgmod.config_hash(cfg), cfg["seed"], time.time() - t0, written)
    return written


# ---------------------------------------------------------- spectral layer

def cmd_spectral(cfg, rdir, n=None, sub=None) -> list:
    t0 = time.time()
    base = rdir if sub is None else rdir / sub
    y = _load_observations(rdir / "data", n)
    kappa = cfg["spectral"]["kappa"]
    m = int(math.log2(kappa))
    if 2**m != kappa:
        raise ConfigError("spectral.kappa must be a power of two (a dyadic partition level)")
    part = partmod.build_partition(_transform(cfg), m)
    bins = partmod.coarsen(part, y)
    r = cfg["model"]["R"]
    store_dir = base / "pi1" / f"kappa_{kappa}"
    if (store_dir / "draws.csv").exists():
        store = io.load_draw_store(store_dir / "draws.csv", store_dir / "meta.json")
        reference = (store.q.mean(axis=0), store.omega.mean(axis=0))
        ref_kind = "pi1-posterior-mean"
    else:
        mle = diagnostics.baum_welch(bins, r, kappa)
        reference = (mle.q_hat, mle.omega_hat)
        ref_kind = "baum-welch"
    est = spectral.spectral_estimate(
        bins, kappa, r, reference,
        restarts=cfg["spectral"]["restarts"],
        iterations=cfg["spectral"]["iterations"],
        seed=_seed(cfg, 4, kappa, len(y)),
    )
    out_dir = base / "spectral"
    payload = {
        "Q_hat": est.q_hat,
        "Omega_hat": est.omega_hat,
        "permutation": est.permutation,
        "diagnostics": est.diagnostics,
        "reference": ref_kind,
        "kappa": kappa,
        "n": len(y),
    }
    io.write_json(out_dir / "estimate.json", payload)
    written = [out_dir / "estimate.json"]
    io.write_manifest(base, "spectral", cfgmod.config_hash(cfg), cfg["seed"], time.time() - t0, written)
    return written


# ------------------------------------------------------- diagnostics layer

def cmd_diagnose(cfg, rdir, n=None, sub=None) -> list:
    t0 = time.time()
    base = rdir if sub is None else rdir / sub
    y = _load_observations(rdir / "data", n)
    r = cfg["model"]["R"]
    out_dir = base / "diagnostics"
    written = []
    stores = {}
    for m in cfgmod.partition_levels(cfg):
        kappa = 2**m
        store_dir = base / "pi1" / f"kappa_{kappa}"
        if not (store_dir / "draws.csv").exists():
            continue
        stores[kappa] = io.load_draw_store(store_dir / "draws.csv", store_dir / "meta.json")
    if not stores:
        raise MissingArtifact(base / "pi1" / "kappa_*" / "draws.csv")

    bvm_reports = {}
    for kappa, store in sorted(stores.items()):
        m = int(math.log2(kappa))
        part = partmod.build_partition(_transform(cfg), m)
        bins = partmod.coarsen(part, y)
        mle = diagnostics.baum_welch(bins, r, kappa, restarts=4)
        mle = diagnostics.align_mle_to_store(mle, store)
        io.write_json(
            out_dir / f"mle_kappa_{kappa}.json",
            {"Q_hat": mle.q_hat, "omega_hat": mle.omega_hat, "log_likelihood": mle.log_likelihood,
             "iterations": mle.iterations, "converged": mle.converged},
        )
        written.append(out_dir / f"mle_kappa_{kappa}.json")
        fisher = None
        if kappa <= cfg["diagnostics"]["fisher_max_kappa"]:
            try:
                fisher = diagnostics.observed_information(bins, mle, step=cfg["diagnostics"]["fisher_step"])
            except diagnostics.SingularInformation:
                # boundary or ill-conditioned MLE at this bin count; the BvM
                # report below still carries the KS statistics
                fisher = None
            else:
                io.write_json(
                    out_dir / f"fisher_kappa_{kappa}.json",
                    {"J": fisher.j, "J_tilde_inv": fisher.j_tilde_inv, "step": fisher.step},
                )
                written.append(out_dir / f"fisher_kappa_{kappa}.json")
        report = diagnostics.bvm_compare(store, mle, fisher)
        bvm_reports[kappa] = report
        io.write_json(
            out_dir / f"bvm_kappa_{kappa}.json",
            {"ks_stats": report.ks_stats, "ks_stats_centered": report.ks_stats_centered,
             "cov_ratio": list(report.cov_ratio), "n": report.n},
        )
        written.append(out_dir / f"bvm_kappa_{kappa}.json")
        rows = []
        for entry in report.entries:
            for z in report.standardized[entry]:
                rows.append([entry, repr(float(z))])
        io.write_table(out_dir / f"bvm_standardized_kappa_{kappa}.csv", ["entry", "z"], rows)
        written.append(out_dir / f"bvm_standardized_kappa_{kappa}.csv")

    refinement = diagnostics.refinement_monotonicity(stores)
    io.write_json(
        out_dir / "refinement.json",
        {
            "kappas": refinement["kappas"],
            "sds": {str(k): refinement["sds"][k] for k in refinement["kappas"]},
            "monotone": refinement["monotone"],
            "slack": refinement["slack"],
        },
    )
    written.append(out_dir / "refinement.json")

    ref_kappa = cfg["diagnostics"]["reference_kappa"]
    if len(stores) >= 2 and ref_kappa in stores:
        recommended = hg.bin_tuning_heuristic(stores, reference_kappa=ref_kappa)
        io.write_json(
            out_dir / "bin_tuning.json",
            {"recommended_kappa": recommended, "reference_kappa": ref_kappa, "kappas": sorted(stores)},
        )
        written.append(out_dir / "bin_tuning.json")

    written.extend(_diagnose_emissions(cfg, base, y, stores))
    io.write_manifest(base, "diagnose", cfgmod.config_hash(cfg), cfg["seed"], time.time() - t0, written)
    return written


def _diagnose_emissions(cfg, base, y, stores) -> list:
    """L1 and smoothing errors when cut-posterior artifacts are present."""
    written = []
    out_dir = base / "diagnostics"
    kappa = cfg["pi2"]["kappa"] or cfgmod.default_pi2_kappa(len(y))
    pi2_dir = base / "pi2" / f"kappa_{kappa}"
    if not (pi2_dir / "density_summary.csv").exists():
        return written
    summary = io.load_density_summary(pi2_dir / "density_summary.csv")
    truth = emission_pdf_values(cfg["model"]["emissions"], summary["grid"])
    l1 = diagnostics.l1_density_error(summary["mean"], truth, summary["grid"])
    io.write_json(out_dir / "emission_error.json", {"l1_per_state": l1, "kappa": kappa})
    written.append(out_dir / "emission_error.json")

    if (pi2_dir / "emission_draws.csv").exists() and kappa in stores:
        draws = io.load_emission_draws(pi2_dir / "emission_draws.csv")
        # pair with the same thinning used when the emissions were fitted
        store = _thin_store(stores[kappa], cfg["pi2"]["max_draws"])
        take = min(len(draws), len(store), 200)
        idx = np.linspace(0, min(len(draws), len(store)) - 1, take).round().astype(int)
        tables = [dpm_cut.log_density_table(draws.mu[i], draws.v[i], draws.w[i], y) for i in idx]
        res = diagnostics.smoothing_error(
            store.q[idx], tables, y,
            np.asarray(cfg["model"]["Q_star"], dtype=float),
            emission_logpdf_table(cfg["model"]["emissions"], y),
        )
        io.write_json(
            out_dir / "smoothing_error.json",
            {
                "posterior_mean_smoothing_mean_tv": res["posterior_mean_smoothing_mean_tv"],
                "posterior_mean_smoothing_max_tv": res["posterior_mean_smoothing_max_tv"],
                "mean_tv_quantiles": np.quantile(res["per_draw_mean_tv"], [0.05, 0.5, 0.95]),
                "draws_used": int(take),
            },
        )
        written.append(out_dir / "smoothing_error.json")
    return written


# ------------------------------------------------------- reproduce-paper

_SCALE_DIVISOR = {"smoke": 100, "desk": 10, "full": 1}


def _scaled_config(cfg, scale):
    import copy

    div = _SCALE_DIVISOR[scale]
    cfg = copy.deepcopy(cfg)
    for key in ("pi1", "full_bayes"):
        block = cfg[key]
        block["iterations"] = max(block["thin"] * 10, block["iterations"] // div)
        block["burn_in"] = min(block["burn_in"] // div, block["iterations"] - block["thin"])
    return cfg


def cmd_reproduce_paper(cfg, rdir, jobs: int = 1) -> list:
    t0 = time.time()
    scale = cfg["reproduce"]["scale"]
    scaled = _scaled_config(cfg, scale)
    written = list(cmd_simulate(scaled, rdir))
    for n in scaled["reproduce"]["n_values"]:
        sub = f"n_{n}"
        written += cmd_fit_q(scaled, rdir, jobs=jobs, n=n, sub=sub)
        written += cmd_fit_emissions(scaled, rdir, n=n, sub=sub)
        written += cmd_fit_full(scaled, rdir, n=n, sub=sub)
        written += cmd_spectral(scaled, rdir, n=n, sub=sub)
        written += cmd_diagnose(scaled, rdir, n=n, sub=sub)
    io.write_manifest(
        rdir, "reproduce-paper", cfgmod.config_hash(cfg), cfg["seed"], time.time() - t0, written,
        extra={"scale": scale},
    )
    return written


# ------------------------------------------------------------------ main

def build_parser():
    parser = argparse.ArgumentParser(prog="cuthmm", description=__doc__)
    parser.add_argument("command", choices=[
        "simulate", "fit-q", "fit-emissions", "fit-full", "spectral", "diagnose", "reproduce-paper",
    ])
    parser.add_argument("--config", type=str, default=None, help="path to a JSON config")
    parser.add_argument("--out", type=str, default=None, help="override outputs.directory")
    parser.add_argument("--seed", type=int, default=None, help="override the master seed")
    parser.add_argument("--jobs", type=int, default=1, help="parallel grid cells (fit-q, reproduce-paper)")
    parser.add_argument("--scale", choices=["smoke", "desk", "full"], default="desk",
                        help="iteration scaling for reproduce-paper")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        overrides = {}
        if args.out is not None:
            overrides["outputs"] = {"directory": args.out}
        if args.seed is not None:
            overrides["seed"] = args.seed
        if args.command == "reproduce-paper":
            overrides["reproduce"] = {"scale": args.scale}
        cfg = cfgmod.load_config(args.config, overrides)
        rdir = io.run_dir(cfgmod.config_hash(cfg), cfg["outputs"]["directory"])
        rdir.mkdir(parents=True, exist_ok=True)
        io.write_json(rdir / "config.json", cfg)
        if args.command == "simulate":
            cmd_simulate(cfg, rdir)
        elif args.command == "fit-q":
            cmd_fit_q(cfg, rdir, jobs=args.jobs)
        elif args.command == "fit-emissions":
            cmd_fit_emissions(cfg, rdir)
        elif args.command == "fit-full":
            cmd_fit_full(cfg, rdir)
        elif args.command == "spectral":
            cmd_spectral(cfg, rdir)
        elif args.command == "diagnose":
            cmd_diagnose(cfg, rdir)
        elif args.command == "reproduce-paper":
            cmd_reproduce_paper(cfg, rdir, jobs=args.jobs)
        print(f"artifacts in {rdir}")
        return 0
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except MissingArtifact as err:
        print(f"missing artifact: {err}", file=sys.stderr)
        return 3
    except (NumericalError, CuthmmError) as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
