"""Command-line front end: theory tables, simulations, comparisons, ratio runs.

Subcommands
-----------
theory        closed-form (i, mu_i, N sigma_i^2) rows for an ensemble
simulate      Monte Carlo estimates for an ensemble
compare       theory vs simulation with z-scores; exit status 1 when any
              |z| > 5 (regression signal)
ratio         largest-singular-value / largest-eigenvalue-modulus experiment

A run is described by a JSON config (see RunConfig); command-line flags
override config-file fields.  All randomness flows from one 64-bit master
seed; chain c uses numpy's SeedSequence(seed, spawn_key=(c,)).
"""

import argparse
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import __version__
from .ensembles import (GaussianInverseMixture, GeneralSigmaGaussian,
                        InverseGaussian, RectangularGaussian, StandardGaussian,
                        TruncatedUnitary)
from .montecarlo import estimate, spectral_ratio_samples
from .sigma import (SigmaSpec, kargin_mu1, kargin_variance1,
                    sigma_spectrum_complex, sigma_variance1_complex)
from .theory import (MixtureSpec, RectangularSpec, gaussian_spectrum,
                     mixture_spectrum, rectangular_spectrum,
                     truncated_unitary_spectrum)

__all__ = ["RunConfig", "main", "cmd_theory", "cmd_simulate", "cmd_compare", "cmd_ratio"]

Z_GATE = 5.0

COMPARE_HEADER = ("i", "mu_theory", "n_sigma2_theory", "mu_mc", "se_mu", "n_sigma2_mc", "z")
THEORY_HEADER = ("i", "mu", "n_sigma2")
SIMULATE_HEADER = ("i", "mu_mc", "se_mu", "n_sigma2_mc",
                   "partial_sum_mu", "partial_sum_n_sigma2")


class CliError(ValueError):
    """Configuration or capability error; maps to exit status 2."""


# ---------------------------------------------------------------------------
# Ensemble (de)serialization
# ---------------------------------------------------------------------------

def ensemble_from_dict(obj):
    try:
        kind = obj["kind"]
    except (TypeError, KeyError):
        raise CliError("ensemble JSON must be an object with a 'kind' field")
    try:
        if kind == "standard_gaussian":
            return StandardGaussian(obj["beta"], obj["d"])
        if kind == "general_sigma_gaussian":
            return GeneralSigmaGaussian(
                obj["beta"], SigmaSpec(tuple(obj["sigma_inv_eigenvalues"])))
        if kind == "inverse_gaussian":
            return InverseGaussian(obj["beta"], obj["d"])
        if kind == "gaussian_inverse_mixture":
            return GaussianInverseMixture(obj["beta"], obj["d"], obj["alpha_plus"])
        if kind == "rectangular_gaussian":
            shapes = RectangularSpec(tuple((g, a) for g, a in obj["shapes"]))
            return RectangularGaussian(obj["beta"], obj["d"], shapes)
        if kind == "truncated_unitary":
            return TruncatedUnitary(obj["beta"], obj["d"], obj["n"])
    except KeyError as exc:
        raise CliError(f"ensemble '{kind}' is missing field {exc}")
    except ValueError as exc:
        raise CliError(str(exc))
    raise CliError(f"unknown ensemble kind {kind!r}")


def ensemble_to_dict(spec):
    if isinstance(spec, StandardGaussian):
        return {"kind": "standard_gaussian", "beta": spec.beta, "d": spec.d}
    if isinstance(spec, GeneralSigmaGaussian):
        return {"kind": "general_sigma_gaussian", "beta": spec.beta,
                "sigma_inv_eigenvalues": list(spec.sigma_inv_eigenvalues.y)}
    if isinstance(spec, InverseGaussian):
        return {"kind": "inverse_gaussian", "beta": spec.beta, "d": spec.d}
    if isinstance(spec, GaussianInverseMixture):
        return {"kind": "gaussian_inverse_mixture", "beta": spec.beta,
                "d": spec.d, "alpha_plus": spec.alpha_plus}
    if isinstance(spec, RectangularGaussian):
        return {"kind": "rectangular_gaussian", "beta": spec.beta, "d": spec.d,
                "shapes": [[g, a] for g, a in spec.shapes.shapes]}
    if isinstance(spec, TruncatedUnitary):
        return {"kind": "truncated_unitary", "beta": spec.beta,
                "d": spec.d, "n": spec.n}
    raise TypeError(f"unknown ensemble spec {spec!r}")


@dataclass
class RunConfig:
    ensemble: object
    N: int = 100_000
    chains: int = 1
    k_max: int | None = None
    seed: int = 1
    output_format: str = "csv"
    threads: object = "auto"

    def __post_init__(self):
        if self.N < 1 or self.chains < 1:
            raise CliError("N and chains must be positive")
        if self.k_max is None:
            self.k_max = self.ensemble.d
        if not 1 <= self.k_max <= self.ensemble.d:
            raise CliError(f"k_max must lie in [1, {self.ensemble.d}]")
        if self.output_format not in ("csv", "json"):
            raise CliError("output_format must be 'csv' or 'json'")
        self.seed = int(self.seed)

    def to_dict(self):
        return {
            "ensemble": ensemble_to_dict(self.ensemble),
            "N": self.N,
            "chains": self.chains,
            "k_max": self.k_max,
            "seed": self.seed,
            "output_format": self.output_format,
            "threads": self.threads,
        }

    @classmethod
    def from_dict(cls, obj):
        known = {"ensemble", "N", "chains", "k_max", "seed", "output_format", "threads"}
        unknown = set(obj) - known
        if unknown:
            raise CliError(f"unknown config fields: {sorted(unknown)}")
        if "ensemble" not in obj:
            raise CliError("config requires an 'ensemble' field")
        kwargs = dict(obj)
        kwargs["ensemble"] = ensemble_from_dict(obj["ensemble"])
        return cls(**kwargs)

    def resolved_threads(self):
        if self.threads == "auto":
            return os.cpu_count() or 1
        t = int(self.threads)
        if t < 1:
            raise CliError("threads must be >= 1 or 'auto'")
        return t


# ---------------------------------------------------------------------------
# Theory dispatch
# ---------------------------------------------------------------------------

def theory_rows(spec):
    """(i, mu_i, N sigma_i^2 or None) rows for every index the theory covers."""
    if isinstance(spec, StandardGaussian):
        th = gaussian_spectrum(spec.beta, spec.d)
    elif isinstance(spec, InverseGaussian):
        th = mixture_spectrum(spec.beta, spec.d, MixtureSpec(0.0))
    elif isinstance(spec, GaussianInverseMixture):
        th = mixture_spectrum(spec.beta, spec.d, MixtureSpec(spec.alpha_plus))
    elif isinstance(spec, RectangularGaussian):
        th = rectangular_spectrum(spec.beta, spec.d, spec.shapes)
    elif isinstance(spec, TruncatedUnitary):
        th = truncated_unitary_spectrum(spec.beta, spec.d, spec.n)
    elif isinstance(spec, GeneralSigmaGaussian):
        return _general_sigma_rows(spec)
    else:
        raise CliError(f"no closed form registered for {spec!r}")
    return [(i + 1, th.mu[i], th.n_sigma2[i]) for i in range(spec.d)]


def _general_sigma_rows(spec):
    y = spec.sigma_inv_eigenvalues
    if spec.beta == 2:
        mu = sigma_spectrum_complex(y)
        var1 = sigma_variance1_complex(y)
        return [(k + 1, mu[k], var1 if k == 0 else None) for k in range(spec.d)]
    # Real and quaternion entries: the unitary-group integral behind the
    # full-spectrum determinant formula has no orthogonal/symplectic
    # analogue, so only the largest exponent is available (contour route).
    return [(1, kargin_mu1(spec.beta, y), kargin_variance1(spec.beta, y))]


# ---------------------------------------------------------------------------
# Commands (each returns rows + metadata; rendering is separate)
# ---------------------------------------------------------------------------

def cmd_theory(config):
    rows = theory_rows(config.ensemble)
    return [dict(zip(THEORY_HEADER, r)) for r in rows]


def _parallel_map(threads, chains):
    if threads <= 1 or chains <= 1:
        return None
    pool = ThreadPoolExecutor(max_workers=min(threads, chains))
    return pool, pool.map


def _run_estimate(config):
    threads = config.resolved_threads()
    pool_map = _parallel_map(threads, config.chains)
    t0 = time.perf_counter()
    try:
        est = estimate(config.ensemble, config.k_max, config.N, config.chains,
                       config.seed, parallel_map=pool_map[1] if pool_map else None)
    finally:
        if pool_map:
            pool_map[0].shutdown()
    wall_ms = (time.perf_counter() - t0) * 1e3
    return est, wall_ms


def cmd_simulate(config):
    est, wall_ms = _run_estimate(config)
    rows = [
        dict(zip(SIMULATE_HEADER,
                 (i + 1, est.mu_hat[i], est.se_mu[i], est.n_sigma2_hat[i],
                  est.partial_sum_mu[i], est.partial_sum_n_sigma2[i])))
        for i in range(config.k_max)
    ]
    meta = _meta(config, wall_ms, est.redraw_count)
    return rows, meta


def comparison_rows(theory, est, k_max):
    """Join theory rows with an McEstimate; z = (mu_mc - mu_theory) / se."""
    covered = {i: (mu, ns2) for i, mu, ns2 in theory}
    missing = [i for i in range(1, k_max + 1) if i not in covered]
    if missing:
        raise CliError(
            f"theory covers only indices {sorted(covered)} for this ensemble; "
            f"rerun with k_max <= {max(covered)} (missing {missing})")
    rows = []
    for i in range(1, k_max + 1):
        mu_t, ns2_t = covered[i]
        mu_mc = float(est.mu_hat[i - 1])
        se = float(est.se_mu[i - 1])
        z = (mu_mc - mu_t) / se
        if not math.isfinite(z):
            raise CliError(f"non-finite z-score at index {i}")
        rows.append(dict(zip(COMPARE_HEADER,
                             (i, mu_t, ns2_t, mu_mc, se,
                              float(est.n_sigma2_hat[i - 1]), z))))
    return rows


def cmd_compare(config):
    spec = config.ensemble
    if isinstance(spec, GeneralSigmaGaussian) and spec.beta != 2 and config.k_max > 1:
        raise CliError(
            "general-covariance spectra beyond i=1 are only available for "
            "complex entries (beta=2); the determinant formula rests on a "
            "unitary-group integral with no orthogonal/symplectic analogue. "
            "Rerun with k_max=1 to compare the largest exponent.")
    theory = theory_rows(config.ensemble)
    est, wall_ms = _run_estimate(config)
    rows = comparison_rows(theory, est, config.k_max)
    status = 1 if any(abs(r["z"]) > Z_GATE for r in rows) else 0
    meta = _meta(config, wall_ms, est.redraw_count)
    return rows, meta, status


def cmd_ratio(beta, d, samples, seed):
    if d < 2:
        raise CliError(f"ratio experiment needs d >= 2, got {d}")
    rng = np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(0,)))
    t0 = time.perf_counter()
    ratios = spectral_ratio_samples(beta, d, samples, rng)
    wall_ms = (time.perf_counter() - t0) * 1e3
    row = {
        "beta": beta,
        "d": d,
        "samples": int(samples),
        "ratio": float(ratios.mean()),
        "min_ratio": float(ratios.min()),
        "sqrt2": math.sqrt(2.0),
    }
    meta = {"seed": int(seed), "wall_ms": wall_ms, "redraws": 0, "version": __version__}
    return row, meta


def _meta(config, wall_ms, redraws):
    return {"seed": config.seed, "wall_ms": wall_ms, "redraws": redraws,
            "version": __version__}


# ---------------------------------------------------------------------------
# Rendering
# ---------------------------------------------------------------------------

def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".15g")


def render_csv(header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(row[h]) for h in header))
    return "\n".join(lines) + "\n"


def render_json(config_dict, rows, meta):
    doc = {"config": config_dict, "rows": rows, "meta": meta}
    return json.dumps(doc, indent=2, default=float) + "\n"


def _emit(text, out_path):
    if out_path:
        with open(out_path, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# Argument parsing and entry point
# ---------------------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(
        prog="lyaprod",
        description="Lyapunov exponents and variances of random matrix products")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_run_flags(p):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--ensemble", help="ensemble JSON, e.g. "
                       '\'{"kind":"standard_gaussian","beta":2,"d":2}\'')
        p.add_argument("--N", type=int, help="steps per chain")
        p.add_argument("--chains", type=int, help="number of chains")
        p.add_argument("--k-max", dest="k_max", type=int,
                       help="number of leading exponents (default: d)")
        p.add_argument("--seed", type=int, help="64-bit master seed")
        p.add_argument("--threads", help="chain parallelism: integer or 'auto'")
        p.add_argument("--format", dest="output_format", choices=("csv", "json"))
        p.add_argument("--out", help="write output to this path instead of stdout")
        p.add_argument("--dump-config", dest="dump_config",
                       help="write the resolved run config JSON to this path")

    for name in ("theory", "simulate", "compare"):
        add_run_flags(sub.add_parser(name))

    ratio = sub.add_parser("ratio")
    ratio.add_argument("--beta", type=int, default=2)
    ratio.add_argument("--d", type=int, default=500)
    ratio.add_argument("--samples", type=int, default=20)
    ratio.add_argument("--seed", type=int, default=1)
    ratio.add_argument("--format", dest="output_format", choices=("csv", "json"),
                       default="csv")
    ratio.add_argument("--out", help="write output to this path instead of stdout")
    return parser


def _resolve_config(args):
    obj = {}
    if args.config:
        with open(args.config) as fh:
            obj = json.load(fh)
    if args.ensemble:
        obj["ensemble"] = json.loads(args.ensemble)
    for field_name in ("N", "chains", "k_max", "seed", "output_format", "threads"):
        value = getattr(args, field_name, None)
        if value is not None:
            obj[field_name] = value
    if "threads" in obj and obj["threads"] != "auto":
        obj["threads"] = int(obj["threads"])
    return RunConfig.from_dict(obj)


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "ratio":
            row, meta = cmd_ratio(args.beta, args.d, args.samples, args.seed)
            header = tuple(row.keys())
            if args.output_format == "json":
                config = {"beta": args.beta, "d": args.d,
                          "samples": args.samples, "seed": args.seed}
                _emit(render_json(config, [row], meta), args.out)
            else:
                _emit(render_csv(header, [row]), args.out)
            return 0

        config = _resolve_config(args)
        if args.dump_config:
            with open(args.dump_config, "w") as fh:
                json.dump(config.to_dict(), fh, indent=2)
                fh.write("\n")

        status = 0
        if args.command == "theory":
            rows = cmd_theory(config)
            meta = {"seed": config.seed, "wall_ms": 0.0, "redraws": 0,
                    "version": __version__}
            header = THEORY_HEADER
        elif args.command == "simulate":
            rows, meta = cmd_simulate(config)
            header = SIMULATE_HEADER
        else:
            rows, meta, status = cmd_compare(config)
            header = COMPARE_HEADER

        for line in _log_lines(args.command, config, meta):
            print(line, file=sys.stderr)
        if config.output_format == "json":
            _emit(render_json(config.to_dict(), rows, meta), args.out)
        else:
            _emit(render_csv(header, rows), args.out)
        return status
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def _log_lines(command, config, meta):
    if command == "theory":
        return []
    return [f"{command}: N={config.N} chains={config.chains} seed={config.seed} "
            f"redraws={meta['redraws']} wall={meta['wall_ms']:.0f}ms"]


if __name__ == "__main__":
    sys.exit(main())
