"""Configuration-driven experiment runner: CSV traces, particle snapshots, SVG plots,
spectral reports, and seeded parameter sweeps."""

from __future__ import annotations

import hashlib
import json
import os
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import gaussian_flow, samplers, spectral
from .config import ConfigError, ExperimentConfig, parse_config
from .diagnostics import CSV_SCHEMA_VERSION, MetricRecord, empirical_moments, gaussian_fit_kl, kl_estimate
from .kernels import GaussianKernel
from .samplers import ParticleEnsemble
from .svg import render_trajectory_svg
from .targets import GaussianTarget

__all__ = ["run_experiment", "analyze_spectrum", "run_sweep", "manifest_hash"]


def _output_dir(cfg: ExperimentConfig) -> Path:
    override = os.environ.get("STEINFLOW_OUT")
    return Path(override) if override else Path(cfg.output_dir)


def manifest_hash(resolved: dict) -> str:
    """Content hash of the resolved configuration (canonical JSON, sha256)."""
    canonical = json.dumps(resolved, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _write_manifest(outdir: Path, cfg: ExperimentConfig):
    resolved = cfg.resolved()
    payload = {"config": resolved, "content_hash": manifest_hash(resolved)}
    (outdir / "manifest.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                                          encoding="utf-8")


def _write_snapshot(outdir: Path, iteration: int, x: np.ndarray):
    snapdir = outdir / "snapshots"
    snapdir.mkdir(exist_ok=True)
    lines = [",".join(f"{v:.17g}" for v in row) for row in x]
    (snapdir / f"particles_{iteration}.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")


def _metric_for(cfg, scfg, iteration, x, mean_speed, grad_stat, kde_rng):
    method = cfg.kl_method
    if method == "auto":
        method = "gaussian-fit" if isinstance(scfg.target, GaussianTarget) else "kde"
    degenerate = False
    if method == "gaussian-fit":
        kl, degenerate = gaussian_fit_kl(x, scfg.target)
    else:
        kl = kl_estimate(x, scfg.target, method="kde", rng=kde_rng)
    mean, cov = empirical_moments(x)
    return MetricRecord(
        iteration=iteration,
        kl_estimate=kl,
        mean=mean,
        cov=cov,
        grad_restart_stat=grad_stat,
        mean_speed=mean_speed,
        kl_degenerate=degenerate,
    )


def run_experiment(cfg: ExperimentConfig) -> Path:
    """Run one configured experiment; returns the output directory.

    Writes metrics.csv, snapshots/particles_<iter>.csv, trajectory.svg and
    manifest.json.  Fully deterministic for a fixed configuration (the seed
    drives the initial draw and all sampler noise).
    """
    scfg = cfg.build_sampler_config()
    dim = scfg.target.dim
    mean0, _, chol0 = cfg.initial_distribution(dim)
    outdir = _output_dir(cfg)
    outdir.mkdir(parents=True, exist_ok=True)
    _write_manifest(outdir, cfg)

    rng = np.random.default_rng(cfg.seed)
    x = mean0 + rng.standard_normal((cfg.n_particles, dim)) @ chol0.T
    kde_rng = np.random.default_rng(cfg.seed + 1)

    records = []
    snapshots = []
    record_iters = set(range(0, cfg.n_steps + 1, cfg.record_every)) | {cfg.n_steps}

    def record(iteration, positions, mean_speed, ens=None):
        grad_stat = float("nan")
        if ens is not None and isinstance(scfg.kernel, GaussianKernel) and cfg.sampler == "asvgd":
            grad_stat = samplers.gradient_restart_stat(ens, scfg.kernel, scfg.target)
        records.append(_metric_for(cfg, scfg, iteration, positions, mean_speed, grad_stat, kde_rng))
        _write_snapshot(outdir, iteration, positions)
        snapshots.append(positions.copy())

    ens = ParticleEnsemble.initialize(x) if cfg.sampler in ("asvgd", "svgd") else None
    p = np.zeros_like(x)
    record(0, x, 0.0, ens)
    for i in range(1, cfg.n_steps + 1):
        x_prev = x
        if cfg.sampler == "asvgd":
            ens = samplers.asvgd_step(ens, scfg)
            x = ens.x
        elif cfg.sampler == "svgd":
            if isinstance(scfg.kernel, GaussianKernel):
                ens = samplers.svgd_step_gaussian(ens, scfg)
            else:
                ens = samplers.svgd_step_bilinear(ens, scfg)
            x = ens.x
        elif cfg.sampler == "ula":
            x = samplers.ula_step(x, scfg, rng)
        elif cfg.sampler == "mala":
            x, _ = samplers.mala_step(x, scfg, rng)
        else:
            x, p = samplers.uld_step(x, p, scfg, rng)
        if i in record_iters:
            speed = float(np.linalg.norm(x - x_prev, axis=1).mean())
            record(i, x, speed, ens)

    header = f"# {CSV_SCHEMA_VERSION}\n" + MetricRecord.csv_header(dim)
    body = "\n".join(r.csv_row() for r in records)
    (outdir / "metrics.csv").write_text(header + "\n" + body + "\n", encoding="utf-8")
    if dim == 2:
        render_trajectory_svg(outdir / "trajectory.svg", snapshots, target=scfg.target)
    return outdir


def analyze_spectrum(cfg: ExperimentConfig, sweep_param=None, sweep_values=None) -> Path:
    """Spectral report for the linearized dynamics of a Gaussian target.

    Writes spectral_report.json with the convergence rate constant, the optimal
    damping and step size, and the closed-form spectrum of the accelerated
    linearization (when A and Q commute), plus rate_table.csv sweeping either
    the kernel scale or the damping.
    """
    scfg = cfg.build_sampler_config()
    target = scfg.target
    if not isinstance(target, GaussianTarget):
        raise ConfigError("spectral analysis requires a Gaussian target")
    kernel = scfg.kernel
    if isinstance(kernel, GaussianKernel):
        raise ConfigError("spectral analysis requires the bilinear kernel (set kernel='bilinear')")
    a, b, q = kernel.a, target.b, target.q
    outdir = _output_dir(cfg)
    outdir.mkdir(parents=True, exist_ok=True)

    gamma, lower = gaussian_flow.gamma_rate(a, b, q)
    report = {
        "gamma": gamma,
        "gamma_lower_bound": lower,
        "alpha_star": spectral.optimal_damping(a),
    }
    b_a = spectral.svgd_linearized_matrix(a, b, q)
    report["linearized_eigenvalues"] = [
        [float(z.real), float(z.imag)] for z in np.linalg.eigvals(b_a)
    ]
    if target.dim == 1:
        a_s, h_s = spectral.optimal_a_svgd(float(b[0]), float(q[0, 0]), mode="scalar-1d")
        report["optimal_a_1d"] = a_s
        report["optimal_step_1d"] = h_s

    commuting = np.linalg.norm(a @ q - q @ a) <= 1e-10 * max(np.linalg.norm(a) * np.linalg.norm(q), 1e-300)
    accelerated = None
    if np.allclose(b, 0.0) and commuting:
        alpha = spectral.optimal_damping(a)
        accelerated = spectral.asvgd_linearized_spectrum(a, q, alpha).to_dict()
        theta = float(np.linalg.eigvalsh(a).min())
        rho, h_star, kappa_tilde = spectral.asvgd_rates(q, theta)
        accelerated.update({"rho": rho, "h_star": h_star, "kappa_tilde": kappa_tilde})
    report["accelerated"] = accelerated
    (outdir / "spectral_report.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n",
                                                 encoding="utf-8")

    param = sweep_param or ("alpha" if accelerated is not None else "a")
    if sweep_values is None:
        if param == "alpha":
            center = spectral.optimal_damping(a)
            sweep_values = np.geomspace(0.1 * center, 3.0 * center, 61)
        else:
            sweep_values = np.geomspace(1e-2, 1e2, 61)
    rows = []
    for val in sweep_values:
        if param == "alpha":
            if accelerated is None:
                raise ConfigError("alpha sweep requires b = 0 and commuting A, Q")
            eigs = spectral.asvgd_closed_form_eigs(a, q, float(val))
            mags = np.abs(eigs)
            rows.append((float(val), float(eigs.real.min()), float(mags.max() / mags.min())))
        elif param == "a":
            if target.dim != 1:
                raise ConfigError("the kernel-scale sweep is one-dimensional")
            lam_lo, lam_hi = spectral.eigs_1d(float(val), float(q[0, 0]), float(b[0]))
            rows.append((float(val), float(lam_lo), float(lam_hi / lam_lo)))
        else:
            raise ConfigError(f"unknown sweep parameter {param!r} (valid: a, alpha)")
    header = f"{param},spectral_abscissa,condition_number"
    body = "\n".join(",".join(f"{v:.17g}" for v in row) for row in rows)
    (outdir / "rate_table.csv").write_text(header + "\n" + body + "\n", encoding="utf-8")
    return outdir


def run_sweep(cfg: ExperimentConfig, param: str, values, max_workers=4):
    """Fan out independent runs over a parameter grid.

    Each run gets its own subdirectory and seed (base seed + index) and executes
    on a worker thread with a private ensemble.
    """
    base = _output_dir(cfg)
    if param not in cfg.resolved():
        raise ConfigError(f"unknown sweep key {param!r}")
    jobs = []
    for i, value in enumerate(values):
        raw = cfg.resolved()
        raw[param] = value
        raw["seed"] = cfg.seed + i
        raw["output_dir"] = str(base / f"sweep_{i}")
        jobs.append(parse_config(json.dumps(raw)))  # re-validate the swept value
    results = []
    env_override = os.environ.pop("STEINFLOW_OUT", None)
    try:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            for outdir in pool.map(run_experiment, jobs):
                results.append(outdir)
    finally:
        if env_override is not None:
            os.environ["STEINFLOW_OUT"] = env_override
    return results
