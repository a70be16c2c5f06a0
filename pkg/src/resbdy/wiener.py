"""Monte Carlo verification of the Gaussian embedding of the energy space.

Truncated distribution-space elements are represented by their first N ONB
coordinates, which are i.i.d. standard normal under the Gaussian measure. The
transform u -> u~(xi) = sum_n u_n xi_n is then an isometry in the mean-square
sense, and the classical identities become testable moments:

* characteristic functional  E[exp(i u~)] = exp(-||u||^2 / 2)
* second moment              E[u~^2] = ||u||^2, cross moments give <u, v>
* even moments               E[u~^{2n}] = (2n)!/(2^n n!) ||u||^{2n}, odd ones vanish
* resistance                 R(x, y) = E[(v_x~ - v_y~)^2] = -2 log E[conj(e_x) e_y]
* boundary representation    u(x) - u(o) = E[u~ h_x~] for harmonic u

Sampling uses the counter-based Philox generator: a fixed (seed, N, S,
worker-partition) reproduces samples bit-for-bit; worker w draws its block
from Philox(key=seed).jumped(w).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, InvalidParameters, NotHarmonic


@dataclass
class GaussianEnsemble:
    N: int
    S: int
    seed: int
    workers: int
    samples: np.ndarray  # (S, N)

    def summary(self):
        mean = self.samples.mean(axis=0)
        cov = np.cov(self.samples.T) if self.N > 1 else np.array([[self.samples.var(ddof=1)]])
        return {
            "max_abs_mean": float(np.abs(mean).max()),
            "max_cov_dev": float(np.abs(cov - np.eye(self.N)).max()),
        }


def sample_ensemble(N: int, S: int, seed: int, workers: int = 1) -> GaussianEnsemble:
    """Draw S i.i.d. standard-normal coordinate vectors of length N."""
    if N < 1 or S < 1 or workers < 1:
        raise InvalidParameters("N, S, and workers must all be >= 1")
    blocks = []
    base, extra = divmod(S, workers)
    for w in range(workers):
        rows = base + (1 if w < extra else 0)
        if rows == 0:
            continue
        bitgen = np.random.Philox(key=seed)
        if w:
            bitgen = bitgen.jumped(w)
        rng = np.random.Generator(bitgen)
        blocks.append(rng.standard_normal((rows, N)))
    return GaussianEnsemble(N=N, S=S, seed=int(seed), workers=workers,
                            samples=np.vstack(blocks))


def _coeffs(u, N):
    u = np.asarray(u, dtype=np.float64).ravel()
    if len(u) > N:
        raise DimensionMismatch(f"coefficient vector of length {len(u)} exceeds N={N}")
    if len(u) < N:
        u = np.pad(u, (0, N - len(u)))
    return u


def wiener_transform(u, ens: GaussianEnsemble) -> np.ndarray:
    """Per-sample values u~(xi) = <u, xi>; linear in u sample by sample."""
    return ens.samples @ _coeffs(u, ens.N)


@dataclass
class CheckResult:
    name: str
    estimate: object
    target: object
    stderr: float
    abs_error: float
    passed: bool
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        est = self.estimate
        if isinstance(est, complex):
            est = {"re": est.real, "im": est.imag}
        return {
            "name": self.name,
            "estimate": est,
            "target": self.target,
            "stderr": self.stderr,
            "abs_error": self.abs_error,
            "pass": self.passed,
            **self.extra,
        }


def _mc_mean(x):
    m = float(np.mean(x))
    se = float(np.std(x, ddof=1) / math.sqrt(len(x))) if len(x) > 1 else 0.0
    return m, se


def minlos_check(u, ens: GaussianEnsemble, sigma=4.0) -> CheckResult:
    """Empirical characteristic functional against exp(-||u||^2 / 2)."""
    ut = wiener_transform(u, ens)
    z = np.exp(1j * ut)
    est = complex(np.mean(z))
    se = math.sqrt((np.var(z.real, ddof=1) + np.var(z.imag, ddof=1)) / len(ut))
    norm2 = float(np.sum(_coeffs(u, ens.N) ** 2))
    target = math.exp(-norm2 / 2)
    err = abs(est - target)
    return CheckResult("minlos", est, target, se, err,
                       passed=bool(err <= sigma * se + 1e-12),
                       extra={"norm2": norm2})


def moment_check(u, ens: GaussianEnsemble, n: int, odd=False, sigma=4.0) -> CheckResult:
    """E[u~^{2n}] against (2n)!/(2^n n!) ||u||^{2n}; with odd=True, power 2n+1 against 0."""
    if n < 1:
        raise InvalidParameters("n must be >= 1")
    ut = wiener_transform(u, ens)
    power = 2 * n + 1 if odd else 2 * n
    est, se = _mc_mean(ut ** power)
    if odd:
        target = 0.0
    else:
        norm2 = float(np.sum(_coeffs(u, ens.N) ** 2))
        target = math.factorial(2 * n) / (2 ** n * math.factorial(n)) * norm2 ** n
    err = abs(est - target)
    return CheckResult(f"moment-{power}", est, target, se, err,
                       passed=bool(err <= sigma * se + 1e-12))


def isometry_check(u, ens: GaussianEnsemble, sigma=4.0) -> CheckResult:
    """E[u~^2] against the truncated energy norm sum u_n^2."""
    ut = wiener_transform(u, ens)
    est, se = _mc_mean(ut ** 2)
    target = float(np.sum(_coeffs(u, ens.N) ** 2))
    err = abs(est - target)
    return CheckResult("isometry", est, target, se, err,
                       passed=bool(err <= sigma * se + 1e-12))


def mean_check(u, ens: GaussianEnsemble, sigma=4.0) -> CheckResult:
    """E[u~] against 0 (centered Gaussian)."""
    ut = wiener_transform(u, ens)
    est, se = _mc_mean(ut)
    return CheckResult("mean", est, 0.0, se, abs(est),
                       passed=bool(abs(est) <= sigma * se + 1e-12))


def kernel_coefficients(onb, x) -> np.ndarray:
    """ONB coordinates of v_x: the row of E at x's enumeration position."""
    if x == onb.net.origin:
        return np.zeros(onb.N)
    try:
        i = onb.enumeration.index(int(x))
    except ValueError:
        raise DimensionMismatch(
            f"vertex {x} is not among the {onb.N} enumerated kernels") from None
    return onb.E[i].copy()


def resistance_via_expectation(x, y, onb, ens: GaussianEnsemble,
                               reference=None, sigma=4.0, atol=0.0):
    """Resistance between x and y in two Monte Carlo forms.

    Returns (quadratic CheckResult, exponential CheckResult): the quadratic
    form estimates E[(v_x~ - v_y~)^2], the exponential form estimates
    -2 log E[conj(e_x) e_y] with e_x = exp(i v_x~). ``reference`` is the
    solver-side resistance; when omitted, the truncated coefficient distance
    ||v_x - v_y||^2 is the target.
    """
    cx, cy = kernel_coefficients(onb, x), kernel_coefficients(onb, y)
    d = cx - cy
    target = float(np.sum(d ** 2)) if reference is None else float(reference)
    dt = wiener_transform(d, ens)
    est, se = _mc_mean(dt ** 2)
    err = abs(est - target)
    quad = CheckResult("resistance-quadratic", est, target, se, err,
                       passed=bool(err <= max(sigma * se, atol) + 1e-12))
    z = np.exp(1j * dt)
    zbar = complex(np.mean(z))
    se_z = math.sqrt((np.var(z.real, ddof=1) + np.var(z.imag, ddof=1)) / len(dt))
    re = max(zbar.real, 1e-300)
    est_exp = -2.0 * math.log(re)
    se_exp = 2.0 * se_z / re
    err_exp = abs(est_exp - target)
    expo = CheckResult("resistance-exponential", est_exp, target, se_exp, err_exp,
                       passed=bool(err_exp <= max(sigma * se_exp, atol) + 1e-12),
                       extra={"char_fn": {"re": zbar.real, "im": zbar.imag}})
    return quad, expo


def boundary_integral_check(u_coeffs, target, h_coeffs, ens: GaussianEnsemble,
                            sigma=4.0, harm_residual=None, harm_tol=1e-6) -> CheckResult:
    """E[u~ h_x~] against u(x) - u(o) for a harmonic u.

    ``target`` is the exact vertex difference u(x) - u(o). The truncation tail
    |sum_n u_n h_n - target| is measured directly and added to the Monte Carlo
    budget, since the sampler can only see the truncated coefficients.
    """
    if harm_residual is not None and harm_residual > harm_tol:
        raise NotHarmonic(
            f"harmonic residual {harm_residual:.3e} exceeds {harm_tol:.1e}")
    uc = _coeffs(u_coeffs, ens.N)
    hc = _coeffs(h_coeffs, ens.N)
    truncated = float(np.sum(uc * hc))
    tail = abs(truncated - float(target))
    prod = wiener_transform(uc, ens) * wiener_transform(hc, ens)
    est, se = _mc_mean(prod)
    err = abs(est - float(target))
    return CheckResult("boundary-integral", est, float(target), se, err,
                       passed=bool(err <= sigma * se + tail + 1e-12),
                       extra={"truncated_target": truncated,
                              "truncation_tail": tail})


def mu_negative_fraction(h_coeffs, ens: GaussianEnsemble) -> float:
    """Fraction of samples with 1 + h_x~(xi) < 0 (density positivity probe)."""
    ht = wiener_transform(h_coeffs, ens)
    return float(np.mean(1.0 + ht < 0.0))


def polarization_identity_deviation(u, v, ens: GaussianEnsemble) -> float:
    """|mean(u~ v~) - (mean((u~+v~)^2) - mean((u~-v~)^2)) / 4| on the samples.

    An algebraic identity of the sample set; deviations are pure roundoff.
    """
    ut, vt = wiener_transform(u, ens), wiener_transform(v, ens)
    direct = np.mean(ut * vt)
    pol = (np.mean((ut + vt) ** 2) - np.mean((ut - vt) ** 2)) / 4.0
    return float(abs(direct - pol))
