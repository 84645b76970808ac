"""Empirical spectral statistics: counting, residuals, delocalization, gaps,
rescaled correlation statistics, and two-sample universality tests.

Per-trial quantities are reduced with order-independent accumulators so
reports do not depend on scheduling; every record carries the provenance
(ensemble digests, seeds) needed to re-derive it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from numpy.random import Generator, Philox

from .measure import AtomicMeasure, stieltjes_of_atoms
from .stieltjes import BulkIndexSet, DensityProfile

SCHEMA_VERSION = 1


@dataclass
class TestRecord:
    __test__ = False  # not a pytest class despite the name

    test: str
    params: dict
    observed: dict
    reference: float | None
    tolerance: float | None
    passed: bool
    provenance: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "test": self.test,
            "params": self.params,
            "observed": self.observed,
            "reference": self.reference,
            "tolerance": self.tolerance,
            "pass": self.passed,
            "provenance": self.provenance,
        }


@dataclass
class StatsReport:
    records: list[TestRecord] = field(default_factory=list)

    def add(self, *records: TestRecord) -> None:
        self.records.extend(records)

    @property
    def all_passed(self) -> bool:
        return all(r.passed for r in self.records)

    def payload(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "records": [r.to_dict() for r in self.records],
        }

    def to_json(self, path=None, metadata: dict | None = None) -> str:
        doc = {
            "schema_version": SCHEMA_VERSION,
            "metadata": metadata or {},
            "payload": self.payload(),
        }
        text = json.dumps(doc, indent=2, sort_keys=True)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text


@dataclass(frozen=True)
class _Proxy:
    n: int
    provenance: dict


def _provenance(samples) -> dict:
    specs = sorted({s.provenance.get("spec", "") for s in samples if s.provenance})
    seeds = sorted({s.provenance.get("seed") for s in samples if "seed" in s.provenance})
    return {"specs": specs, "seeds": seeds, "trials": len(samples)}


# ---------------------------------------------------------------------------
# counting and empirical transforms
# ---------------------------------------------------------------------------


def count_interval(sample, interval) -> int:
    """Number of eigenvalues in the closed interval [a, b] (ties count once)."""
    a, b = interval
    if b < a:
        return 0
    lam = sample.eigenvalues
    return int(np.searchsorted(lam, b, side="right") - np.searchsorted(lam, a, side="left"))


def empirical_stieltjes(sample, z: complex) -> complex:
    """(1/n) sum_i 1 / (lambda_i - z) for Im z > 0."""
    z = complex(z)
    if z.imag <= 0:
        raise ValueError("empirical_stieltjes requires Im z > 0")
    return complex(np.mean(1.0 / (sample.eigenvalues - z)))


# ---------------------------------------------------------------------------
# concentration and fixed-point residuals
# ---------------------------------------------------------------------------


def _profile_interval_mass(profile: DensityProfile, a: float, b: float) -> float:
    xs = profile.grid[(profile.grid > a) & (profile.grid < b)]
    xs = np.concatenate([[a], xs, [b]])
    ys = np.interp(xs, profile.grid, profile.values)
    return float(np.trapezoid(ys, xs))


def concentration_report(samples, profile: DensityProfile, intervals, rel_tol: float = 0.05):
    """Per-interval records of |N_I - n * integral_I rho| / (n |I|) over trials."""
    samples = list(samples)
    prov = _provenance(samples)
    records = []
    for a, b in intervals:
        ref = _profile_interval_mass(profile, a, b)
        errs = []
        for s in samples:
            err = abs(count_interval(s, (a, b)) - s.n * ref) / (s.n * (b - a))
            errs.append(err)
        errs = np.array(errs)
        records.append(
            TestRecord(
                test="concentration",
                params={"interval": [a, b], "trials": len(samples)},
                observed={"mean_rel_error": float(errs.mean()), "max_rel_error": float(errs.max())},
                reference=ref,
                tolerance=rel_tol,
                passed=bool(errs.mean() <= rel_tol),
                provenance=prov,
            )
        )
    return records


def pastur_residual(samples, measure: AtomicMeasure, zs, tol: float = 0.1):
    """Max over the z-grid of |m_n(z) - g(z + m_n(z))|, aggregated over trials.

    The reference column reports the fitted c / log(n) with
    c = median_residual * log(n).
    """
    samples = list(samples)
    zs = np.asarray(zs, dtype=complex)
    per_trial = []
    for s in samples:
        res = [abs(empirical_stieltjes(s, z) - stieltjes_of_atoms(measure, z + empirical_stieltjes(s, z))) for z in zs]
        per_trial.append(max(res))
    per_trial = np.array(per_trial)
    n = samples[0].n
    c_fit = float(np.median(per_trial) * np.log(n))
    record = TestRecord(
        test="pastur-residual",
        params={"n": n, "trials": len(samples), "grid_size": len(zs), "im": float(zs.imag.min())},
        observed={
            "median_max_residual": float(np.median(per_trial)),
            "max_max_residual": float(per_trial.max()),
            "fitted_c": c_fit,
        },
        reference=c_fit / float(np.log(n)),
        tolerance=tol,
        passed=bool(np.median(per_trial) <= tol),
        provenance=_provenance(samples),
    )
    return [record]


# ---------------------------------------------------------------------------
# delocalization
# ---------------------------------------------------------------------------


def bulk_supnorms(sample, bulk: BulkIndexSet) -> np.ndarray:
    """Sup norm of each bulk eigenvector of one sample."""
    if sample.eigenvectors is None:
        raise ValueError("delocalization needs eigenvectors in the samples")
    idx0 = bulk.indices() - 1  # 0-based columns
    if idx0.size == 0:
        raise ValueError("empty bulk index set")
    return np.max(np.abs(sample.eigenvectors[:, idx0]), axis=0)


def delocalization_stats(samples, bulk: BulkIndexSet, stat_tol: float = 10.0):
    """Sup-norm statistics of bulk eigenvectors.

    Per trial: max over bulk i of ||u_i||_inf * sqrt(n) / log(n)^2, plus the
    median bulk sup-norm (used for the n-sweep scaling fit).  ``samples`` may
    be a generator; eigenvector arrays are never retained.
    """
    stats, med_norms, proxies = [], [], []
    n = None
    for s in samples:
        norms = bulk_supnorms(s, bulk)
        n = s.n
        stats.append(float(norms.max()) * np.sqrt(n) / np.log(n) ** 2)
        med_norms.append(float(np.median(norms)))
        proxies.append(_Proxy(s.n, s.provenance))
    if n is None:
        raise ValueError("no samples supplied")
    stats = np.array(stats)
    record = TestRecord(
        test="delocalization",
        params={"n": n, "trials": len(stats), "epsilon": bulk.epsilon},
        observed={
            "median_statistic": float(np.median(stats)),
            "max_statistic": float(stats.max()),
            "median_supnorm": float(np.median(med_norms)),
        },
        reference=None,
        tolerance=stat_tol,
        passed=bool(np.median(stats) <= stat_tol),
        provenance=_provenance(proxies),
    )
    return [record]


def fit_loglog_slope(ns, values) -> float:
    """Least-squares slope of log(values) against log(ns)."""
    ns = np.asarray(ns, dtype=float)
    values = np.asarray(values, dtype=float)
    return float(np.polyfit(np.log(ns), np.log(values), 1)[0])


# ---------------------------------------------------------------------------
# eigenvalue gaps
# ---------------------------------------------------------------------------


def gap_stats(samples, bulk: BulkIndexSet, c0: float, freq_tol: float = 0.01):
    """Frequency of A_n-scale bulk gaps below n^{-c0}, plus a min-gap summary."""
    if c0 <= 0:
        raise ValueError("c0 must be positive")
    samples = list(samples)
    n = samples[0].n
    threshold = float(n) ** (-c0)
    below = 0
    total = 0
    min_gaps = []
    for s in samples:
        lam = s.eigenvalues * s.n  # A_n = n * W_n
        gaps = []
        for lo, hi in bulk.ranges:
            hi = min(hi, s.n - 1)
            if hi >= lo:
                gaps.append(lam[lo : hi + 1] - lam[lo - 1 : hi])
        gaps = np.concatenate(gaps) if gaps else np.array([])
        below += int(np.sum(gaps <= threshold))
        total += gaps.size
        if gaps.size:
            min_gaps.append(float(gaps.min()))
    freq = below / total if total else float("nan")
    record = TestRecord(
        test="gap-bound",
        params={"n": n, "trials": len(samples), "c0": c0, "threshold": threshold},
        observed={
            "frequency": freq,
            "gaps_counted": total,
            "min_gap_median": float(np.median(min_gaps)) if min_gaps else float("nan"),
            "min_gap_min": float(np.min(min_gaps)) if min_gaps else float("nan"),
        },
        reference=None,
        tolerance=freq_tol,
        passed=bool(freq <= freq_tol),
        provenance=_provenance(samples),
    )
    return [record]


# ---------------------------------------------------------------------------
# rescaled local statistics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RescaledCloud:
    center: float
    scale: float  # n * rho(x0)
    points: np.ndarray
    window: float

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(f"# center={self.center!r} scale={self.scale!r} window={self.window!r}\n")
            fh.write("u\n")
            for u in np.sort(self.points):
                fh.write(f"{float(u)!r}\n")


def rescale_at(samples, x0: float, profile: DensityProfile, window: float = 20.0, rho_threshold: float = 1e-3):
    """Rescale eigenvalues near x0 to unit mean spacing: u = (lambda - x0) n rho(x0)."""
    rho0 = profile.interp(x0)
    if rho0 <= rho_threshold:
        raise ValueError(f"rho({x0}) = {rho0:.3e} is below the rescaling threshold")
    clouds = []
    for s in samples:
        u = (s.eigenvalues - x0) * s.n * rho0
        u = u[np.abs(u) <= window]
        clouds.append(RescaledCloud(center=x0, scale=s.n * rho0, points=u, window=window))
    return clouds


def correlation_statistic(clouds, f, k: int, support_radius: float | None = None) -> float:
    """Monte Carlo average over clouds of sum over distinct k-tuples of f.

    k = 1 averages sum_i f(u_i); k = 2 averages sum over ordered pairs
    (i, j), i != j of f(u_i, u_j).  In expectation this integrates f against
    the rescaled k-point correlation function.
    """
    if k not in (1, 2):
        raise ValueError("only k = 1 and k = 2 are supported")
    clouds = list(clouds)
    if support_radius is not None and any(support_radius > c.window for c in clouds):
        raise ValueError("test-function support exceeds the rescaling window")
    vals = []
    for c in clouds:
        u = c.points
        if k == 1:
            vals.append(float(np.sum(f(u))) if u.size else 0.0)
        else:
            if u.size < 2:
                vals.append(0.0)
                continue
            F = np.asarray(f(u[:, None], u[None, :]), dtype=float)
            np.fill_diagonal(F, 0.0)
            vals.append(float(F.sum()))
    return float(np.mean(vals))


def plateau_bump(lo: float, hi: float, ramp: float):
    """Smooth plateau: 1 on [lo+ramp, hi-ramp], cosine ramps to 0 at lo and hi."""
    if not (hi - lo > 2 * ramp > 0):
        raise ValueError("need hi - lo > 2 * ramp > 0")

    def f(u):
        u = np.asarray(u, dtype=float)
        out = np.zeros_like(u)
        out[(u >= lo + ramp) & (u <= hi - ramp)] = 1.0
        up = (u > lo) & (u < lo + ramp)
        out[up] = 0.5 * (1 - np.cos(np.pi * (u[up] - lo) / ramp))
        dn = (u > hi - ramp) & (u < hi)
        out[dn] = 0.5 * (1 - np.cos(np.pi * (hi - u[dn]) / ramp))
        return out

    return f


def pair_reference(g, h, radius: float, npts: int = 400, kernel: bool = True) -> float:
    """Quadrature of g(u)g(v)h(u-v) against the sine-kernel 2-point density
    (kernel=True) or the Poisson reference 1 (kernel=False)."""
    x, w = np.polynomial.legendre.leggauss(npts)
    x = x * radius
    w = w * radius
    gu = g(x)
    du = x[:, None] - x[None, :]
    dens = 1.0 - np.sinc(du) ** 2 if kernel else np.ones_like(du)
    integrand = gu[:, None] * gu[None, :] * h(du) * dens
    return float(w @ integrand @ w)


def point_reference(g, radius: float, npts: int = 400) -> float:
    """Quadrature of g against the constant-1 rescaled one-point density."""
    x, w = np.polynomial.legendre.leggauss(npts)
    return float(np.sum(w * radius * g(x * radius)))


# ---------------------------------------------------------------------------
# two-sample universality test
# ---------------------------------------------------------------------------


def _ks_distance(a: np.ndarray, b: np.ndarray) -> float:
    allv = np.concatenate([a, b])
    allv.sort(kind="mergesort")
    ca = np.searchsorted(np.sort(a), allv, side="right") / len(a)
    cb = np.searchsorted(np.sort(b), allv, side="right") / len(b)
    return float(np.max(np.abs(ca - cb)))


def two_sample_distance(a, b, shuffles: int = 2000, seed: int = 0) -> tuple[float, float]:
    """Kolmogorov-Smirnov distance and a permutation p-value.

    The p-value is the add-one-corrected fraction of pooled shuffles whose
    KS distance is at least the observed one.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if len(a) < 100 or len(b) < 100:
        raise ValueError("need at least 100 samples per side")
    if shuffles < 1000:
        raise ValueError("need at least 1000 shuffles")
    observed = _ks_distance(a, b)
    pooled = np.concatenate([a, b])
    na = len(a)
    rng = Generator(Philox(key=np.array([seed % 2**64, 0], dtype=np.uint64)))
    hits = 0
    for _ in range(shuffles):
        perm = rng.permutation(pooled)
        if _ks_distance(perm[:na], perm[na:]) >= observed - 1e-15:
            hits += 1
    pvalue = (1 + hits) / (1 + shuffles)
    return observed, float(pvalue)


def bulk_gap_samples(samples, index: int) -> np.ndarray:
    """A_n-scale gap lambda_{i+1} - lambda_i at the 1-based bulk index, per trial."""
    out = []
    for s in samples:
        lam = s.eigenvalues * s.n
        out.append(float(lam[index] - lam[index - 1]))
    return np.array(out)


def bulk_position_samples(samples, index: int) -> np.ndarray:
    """A_n-scale eigenvalue position lambda_i at the 1-based bulk index, per trial."""
    return np.array([float(s.eigenvalues[index - 1] * s.n) for s in samples])


# ---------------------------------------------------------------------------
# interlacing
# ---------------------------------------------------------------------------


def interlacing_check(
    sample_full,
    sample_minor,
    column: np.ndarray | None = None,
    corner: float | None = None,
    order_tol: float = 1e-10,
    identity_rtol: float = 1e-6,
) -> bool:
    """Cauchy interlacing of the top minor, plus the resolvent identity.

    Checks lambda_i(minor) in [lambda_i(full), lambda_{i+1}(full)] for all i.
    When the minor's eigenvectors and the removed column X (with corner entry
    a_nn) are supplied, also verifies
    sum_j |u_j^* X|^2 / (lambda_j(minor) - lambda_i(full)) = a_nn - lambda_i(full)
    for every i, to ``identity_rtol`` relative accuracy.
    """
    lam = np.asarray(sample_full.eigenvalues, dtype=float)
    mu = np.asarray(sample_minor.eigenvalues, dtype=float)
    n = len(lam)
    if len(mu) != n - 1:
        raise ValueError(f"minor has {len(mu)} eigenvalues, expected {n - 1}")
    slack = order_tol * max(1.0, float(np.max(np.abs(lam))) if n else 1.0)
    if np.any(mu < lam[:-1] - slack) or np.any(mu > lam[1:] + slack):
        return False
    if column is not None:
        if corner is None:
            raise ValueError("the corner entry a_nn is needed with the column")
        if sample_minor.eigenvectors is None:
            raise ValueError("identity check needs the minor's eigenvectors")
        weights = np.abs(sample_minor.eigenvectors.conj().T @ np.asarray(column)) ** 2
        for lam_i in lam:
            lhs = float(np.sum(weights / (mu - lam_i)))
            rhs = float(corner) - lam_i
            if abs(lhs - rhs) > identity_rtol * max(1.0, abs(rhs)):
                return False
    return True
