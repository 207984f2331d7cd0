"""Numerically stable Monte Carlo estimation for random matrix products.

A chain keeps a d x k orthonormal frame, multiplies a fresh factor in each
step and re-orthonormalizes by QR with the R diagonal forced real positive.
The log of the i-th diagonal entry is the step's log-volume increment for
index i; its running mean estimates mu_1..mu_k in one pass and its variance,
which carries the 1/N factor of the estimator variance, estimates
N sigma_i^2 directly.  Per-step renormalization keeps every quantity in
range for arbitrarily long products.

For beta = 4 the frame is the complex embedding with 2k columns; the two R
diagonal entries of a quaternion column pair agree up to rounding and half
their summed logs is recorded as the quaternion increment.
"""

import math
from dataclasses import dataclass

import numpy as np

from .ensembles import FactorStream, chain_rng, is_square, _gaussian_data

__all__ = [
    "ChainResult",
    "McEstimate",
    "run_chain",
    "estimate",
    "stability_exponents",
    "spectral_ratio",
    "spectral_ratio_samples",
]

#: Default cap on product length for stability_exponents; beyond a few
#: thousand steps the final matrix is numerically rank deficient because the
#: eigenvalue gaps close like exp(-N * (mu_k - mu_{k+1})).
STABILITY_STEP_CAP = 2000


@dataclass(frozen=True)
class ChainResult:
    """Per-step log-volume increments of one chain (shape N x k_max).

    type_ids flags the factor type of each step for ensembles that mix
    factor distributions (rectangular offset classes, Gaussian-vs-inverse
    coins); it is None when all factors are identically distributed.
    """

    k_max: int
    increments: np.ndarray
    seed: int | None = None
    redraw_count: int = 0
    type_ids: np.ndarray | None = None


@dataclass(frozen=True)
class McEstimate:
    """Aggregated Monte Carlo estimates across chains.

    mu_hat[i] is the grand mean of the pooled per-step increments for index
    i+1, n_sigma2_hat[i] their pooled sample variance (divisor count-1,
    which is N times the variance of mu_hat for one chain), and se_mu[i] the
    standard error sqrt(n_sigma2_hat / total steps).  The partial-sum fields
    are the analogous statistics of the per-step log-determinant increments
    sum_{i<=k} xi^(i).

    For ensembles that mix factor types (rectangular offsets on a
    deterministic schedule, Gaussian/inverse coins) the variances are pooled
    within each type and combined with the realized frequencies.  The
    increment mean shifts with the type, and that deterministic alternation
    contributes nothing to the variance of mu_hat, so a naive pool across
    types would overstate N sigma^2 by the between-type mean spread.
    """

    mu_hat: np.ndarray
    se_mu: np.ndarray
    n_sigma2_hat: np.ndarray
    partial_sum_mu: np.ndarray
    partial_sum_n_sigma2: np.ndarray
    N: int
    chains: int
    redraw_count: int = 0


def _identity_frame(spec, k_max):
    if spec.beta == 4:
        return np.eye(2 * spec.d, 2 * k_max, dtype=np.complex128)
    dtype = np.float64 if spec.beta == 1 else np.complex128
    return np.eye(spec.d, k_max, dtype=dtype)


def run_chain(spec, k_max, N, rng, *, seed=None, block=256):
    """Run one chain of N steps, recording k_max increments per step."""
    d = spec.d
    k_max = int(k_max)
    N = int(N)
    if not 1 <= k_max <= d:
        raise ValueError(f"k_max must satisfy 1 <= k_max <= d = {d}, got {k_max}")
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")

    frame = _identity_frame(spec, k_max)
    quaternion = spec.beta == 4
    increments = np.empty((N, k_max))
    stream = FactorStream(spec, rng, block=block)
    single_column = frame.shape[1] == 1

    for j, a in enumerate(stream.factors(N)):
        y = a @ frame
        if single_column:
            r = math.sqrt(np.vdot(y, y).real)
            if not (r > 0.0 and math.isfinite(r)):
                raise ArithmeticError(f"non-finite increment at step {j + 1}")
            increments[j, 0] = math.log(r)
            frame = y / r
            continue
        q, r = np.linalg.qr(y)
        rdiag = np.diagonal(r)
        rabs = np.abs(rdiag)
        logs = np.log(rabs)
        row = 0.5 * (logs[0::2] + logs[1::2]) if quaternion else logs
        if not math.isfinite(float(row.sum())):
            raise ArithmeticError(f"non-finite increment at step {j + 1}")
        increments[j] = row
        frame = q * (rdiag / rabs)

    type_ids = (np.asarray(stream.type_trace, dtype=np.uint8)
                if stream.type_trace is not None else None)
    return ChainResult(k_max=k_max, increments=increments, seed=seed,
                       redraw_count=stream.redraws, type_ids=type_ids)


def _chain_moments(result):
    """Per-type (n, mean, M2) accumulators for increments and partial sums."""
    xi = result.increments
    eta = np.cumsum(xi, axis=1)
    if result.type_ids is None:
        groups = {0: slice(None)}
    else:
        groups = {int(t): result.type_ids == t for t in np.unique(result.type_ids)}
    out = {}
    for t, sel in groups.items():
        x, e = xi[sel], eta[sel]
        n = x.shape[0]
        out[t] = ((n, x.mean(axis=0), x.var(axis=0) * n),
                  (n, e.mean(axis=0), e.var(axis=0) * n))
    return out, result.redraw_count


def _merge_moments(acc, nxt):
    """Chan et al. pairwise merge of (n, mean, M2) accumulators."""
    n_a, mean_a, m2_a = acc
    n_b, mean_b, m2_b = nxt
    n = n_a + n_b
    delta = mean_b - mean_a
    mean = mean_a + delta * (n_b / n)
    m2 = m2_a + m2_b + delta * delta * (n_a * n_b / n)
    return n, mean, m2


def _combine_types(per_type):
    """Grand mean plus frequency-weighted within-type variance.

    The mean merges across types as usual; the variance is the
    realized-frequency average of the per-type sample variances, matching
    the type-averaged closed forms.
    """
    total = sum(acc[0] for acc in per_type.values())
    mean_acc = None
    var = None
    for t in sorted(per_type):
        acc = per_type[t]
        mean_acc = acc if mean_acc is None else _merge_moments(mean_acc, acc)
        n_t, _, m2_t = acc
        v_t = m2_t / (n_t - 1) if n_t > 1 else np.zeros_like(m2_t)
        contrib = (n_t / total) * v_t
        var = contrib if var is None else var + contrib
    return total, mean_acc[1], var


def estimate(spec, k_max, N, chains, master_seed, *, parallel_map=None, block=256):
    """Estimate the top k_max exponents and variances from seeded chains.

    Chain c draws from chain_rng(master_seed, c); chains may be evaluated by
    any order-preserving ``parallel_map`` (default: builtin map) and are
    merged by a deterministic reduction in chain order, so results are
    bit-identical regardless of parallelism.
    """
    chains = int(chains)
    if chains < 1:
        raise ValueError(f"chains must be >= 1, got {chains}")

    def one(c):
        rng = chain_rng(master_seed, c)
        return _chain_moments(run_chain(spec, k_max, N, rng, seed=c, block=block))

    mapper = parallel_map if parallel_map is not None else map
    redraws = 0
    acc_xi = {}
    acc_eta = {}
    for per_type, rd in mapper(one, range(chains)):
        redraws += rd
        for t, (mom_xi, mom_eta) in per_type.items():
            acc_xi[t] = mom_xi if t not in acc_xi else _merge_moments(acc_xi[t], mom_xi)
            acc_eta[t] = mom_eta if t not in acc_eta else _merge_moments(acc_eta[t], mom_eta)

    total, mu_hat, n_sigma2 = _combine_types(acc_xi)
    _, _, ps_sigma2 = _combine_types(acc_eta)
    se = np.sqrt(n_sigma2 / total)
    return McEstimate(
        mu_hat=mu_hat,
        se_mu=se,
        n_sigma2_hat=n_sigma2,
        partial_sum_mu=np.cumsum(mu_hat),
        partial_sum_n_sigma2=ps_sigma2,
        N=int(N),
        chains=chains,
        redraw_count=redraws,
    )


def stability_exponents(spec, N, rng, *, step_cap=STABILITY_STEP_CAP):
    """Growth rates and phases of the eigenvalues of the product itself.

    The product is accumulated with a per-step rescaling by its largest
    entry modulus (log-scales summed exactly with math.fsum), then
    eigendecomposed once.  Returns d (lambda_k, theta_k) pairs sorted by
    descending lambda; for beta = 4 one representative per conjugate-
    degenerate pair is returned, with theta >= 0.

    An eigensolver applied to the final matrix cannot resolve eigenvalue
    moduli below machine epsilon times the dominant one, i.e. exponent gaps
    with N * (lambda_1 - lambda_k) > ~36 drown.  The determinant telescopes
    exactly over the factors, so the smallest exponent (smallest pair for
    beta = 4) is recovered from sum ln|det A_j|, which also makes d = 1
    exact and repairs d = 2 for any N.  Intermediate exponents of d >= 3
    products are only meaningful while N stays below ~36 / gap.
    """
    N = int(N)
    if N > step_cap:
        raise ValueError(
            f"N = {N} exceeds the stability step cap {step_cap}; the product "
            "becomes numerically rank deficient (override with step_cap=...)")
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    if not is_square(spec):
        raise ValueError("stability exponents require square factors")

    d = spec.d
    size = 2 * d if spec.beta == 4 else d
    prod = np.eye(size, dtype=np.complex128 if spec.beta != 1 else np.float64)
    log_scales = []
    log_dets = []
    det_phases = []
    for a in FactorStream(spec, rng).factors(N):
        prod = a @ prod
        scale = float(np.abs(prod).max())
        if not (scale > 0.0 and math.isfinite(scale)):
            raise ArithmeticError("product collapsed to zero or overflowed")
        prod /= scale
        log_scales.append(math.log(scale))
        sign, logdet = np.linalg.slogdet(a)
        if sign == 0 or not math.isfinite(float(logdet)):
            raise ArithmeticError("singular factor in stability run")
        log_dets.append(float(logdet))
        det_phases.append(float(np.angle(sign)))
    offset = math.fsum(log_scales)
    logdet_sum = math.fsum(log_dets)

    eigs = np.linalg.eigvals(prod)
    mods = np.abs(eigs)
    with np.errstate(divide="ignore"):
        # exact zeros land at the bottom after sorting and are repaired below
        lams = (offset + np.log(mods)) / N
    thetas = np.angle(eigs)
    order = np.argsort(-lams)
    lams, thetas = lams[order], thetas[order]

    repaired = 2 if spec.beta == 4 else 1
    if not np.all(np.isfinite(lams[:-repaired] if repaired < len(lams) else lams[:0])):
        raise np.linalg.LinAlgError("unresolved zero eigenvalue in rescaled product")
    if spec.beta == 4:
        # embedded determinant is real non-negative; repair the bottom pair
        lams[-1] = lams[-2] = 0.5 * (logdet_sum / N - lams[:-2].sum())
        lams = 0.5 * (lams[0::2] + lams[1::2])
        thetas = np.abs(thetas[0::2])
    else:
        lams[-1] = logdet_sum / N - lams[:-1].sum()
        phase = math.fsum(det_phases) - thetas[:-1].sum()
        thetas[-1] = math.remainder(phase, 2.0 * math.pi)
    return [(float(l), float(t)) for l, t in zip(lams, thetas)]


def spectral_ratio_samples(beta, d, samples, rng):
    """Largest-singular-value to largest-eigenvalue-modulus ratios.

    One d x d standard Gaussian matrix per sample, normalized by 1/sqrt(d)
    so both spectra stay O(1); the ratio itself is scale invariant and is
    always >= 1.
    """
    if d < 2:
        raise ValueError(f"d must be >= 2, got {d}")
    out = np.empty(int(samples))
    for i in range(int(samples)):
        x = _gaussian_data(beta, d, d, rng) / math.sqrt(d)
        smax = np.linalg.svd(x, compute_uv=False)[0]
        emax = np.abs(np.linalg.eigvals(x)).max()
        out[i] = smax / emax
    return out


def spectral_ratio(beta, d, samples, rng):
    """Sample mean of the singular-value / eigenvalue-modulus ratio."""
    return float(spectral_ratio_samples(beta, d, samples, rng).mean())
