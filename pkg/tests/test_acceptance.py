"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with `pytest tests/test_acceptance.py -v -s`.  The Monte Carlo
criteria use fixed seeds, so every number here is reproducible.
"""

import json
import time

import numpy as np
import pytest

from wignersource import (
    EnsembleSpec,
    EntryDistribution,
    bk_density,
    bk_support,
    bulk_indices,
    count_interval,
    concentration_report,
    correlation_statistic,
    delocalization_stats,
    density,
    eigendecompose,
    gap_stats,
    interlacing_check,
    make_measure,
    match_order,
    principal_minor,
    realize_diagonal,
    rescale_at,
    sample_spectra,
    semicircle_st,
    solve_pastur_grid,
    support_intervals,
)
from wignersource.cli import main, run_trials
from wignersource.ensemble import assemble
from wignersource.stats import (
    bulk_gap_samples,
    bulk_position_samples,
    fit_loglog_slope,
    pair_reference,
    plateau_bump,
    two_sample_distance,
)
from wignersource.stieltjes import _rho_extrapolated


def _report(k, ok, detail):
    print(f"\n[criterion {k:>2}] {'PASS' if ok else 'FAIL'}: {detail}")
    assert ok, f"criterion {k}: {detail}"


def _mid(interval):
    return 0.5 * (interval[0] + interval[1])


def test_criterion_01_solver_exactness(delta0, two_atom, three_atom):
    rng = np.random.default_rng(101)
    t0 = time.perf_counter()
    worst_resid = 0.0
    worst_sc = 0.0
    for measure in (delta0, two_atom, three_atom):
        zs = rng.uniform(-6, 6, 1000) + 1j * 10 ** rng.uniform(-6, 3, 1000)
        mvals, resid = solve_pastur_grid(measure, zs)
        worst_resid = max(worst_resid, float(np.max(resid)))
        if measure is delta0:
            sc = np.array([semicircle_st(z) for z in zs])
            worst_sc = max(worst_sc, float(np.max(np.abs(mvals - sc))))
    elapsed = time.perf_counter() - t0
    ok = worst_resid <= 1e-12 and worst_sc <= 1e-10 and elapsed < 10.0
    _report(
        1,
        ok,
        f"3000 solves: max residual {worst_resid:.2e} (<=1e-12), "
        f"semicircle deviation {worst_sc:.2e} (<=1e-10), runtime {elapsed:.1f}s (<10s)",
    )


def test_criterion_02_cross_oracle_density():
    t0 = time.perf_counter()
    details = []
    ok = True
    for a in (1.5, 2.0, 3.0):
        measure = make_measure([(-a, 0.5), (a, 0.5)])
        params = bk_support(a)
        grid = np.linspace(-(params.alpha + 1.0), params.alpha + 1.0, 2001)
        profile = density(measure, grid)
        support = support_intervals(profile)
        edges_got = np.sort(np.abs(np.array(support.intervals).ravel()))
        edges_ref = np.sort(np.abs(np.array(params.intervals).ravel()))
        edge_err = float(np.max(np.abs(edges_got - edges_ref)))
        interior = np.zeros(grid.shape, dtype=bool)
        for lo, hi in params.intervals:
            interior |= (grid >= lo + 0.02) & (grid <= hi - 0.02)
        sup_diff = float(
            np.max(np.abs(profile.values[interior] - bk_density(grid[interior], a)))
        )
        this_ok = sup_diff <= 1e-6 and edge_err <= 1e-4 and support.interval_count == 2
        if a == 2.0:
            s1 = support.quantiles[1]
            this_ok &= abs(s1 - 0.5) <= 1e-3
            details.append(f"a=2: q={support.interval_count}, s1={s1:.5f}")
        details.append(f"a={a}: supdiff {sup_diff:.1e}, edges {edge_err:.1e}")
        ok &= this_ok
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 60.0
    _report(2, ok, "; ".join(details) + f"; runtime {elapsed:.1f}s (<60s)")


def test_criterion_03_degenerate_stability():
    measure = make_measure([(-np.sqrt(2), 0.5), (np.sqrt(2), 0.5)])
    mvals, resid = solve_pastur_grid(measure, np.array([1e-6j]))
    rho0 = float(_rho_extrapolated(measure, np.array([0.0]), 1e-6)[0])
    ok = resid[0] <= 1e-10 and mvals[0].imag >= 0 and abs(rho0) <= 1e-6
    _report(
        3,
        ok,
        f"triple-root measure at z=1e-6i: residual {resid[0]:.2e} (<=1e-10), "
        f"rho(0) = {rho0:.2e} (<=1e-6)",
    )


def test_criterion_04_holder_exponent(two_atom):
    rng = np.random.default_rng(104)
    params = bk_support(2.0)
    # anchor points: bulk, gap, and near-edge, all with |z| <= 5, Im >= 1e-4
    res = []
    edges = [params.beta, params.alpha, -params.beta, -params.alpha]
    for _ in range(400):
        mode = rng.integers(0, 3)
        if mode == 0:
            x = rng.uniform(-4.5, 4.5)
        elif mode == 1:
            x = rng.choice(edges) + rng.uniform(-1e-3, 1e-3)
        else:
            x = rng.choice(edges) + rng.uniform(-0.05, 0.05)
        y = 10 ** rng.uniform(-4, 0)
        scale = 10 ** rng.uniform(-4, -1)
        theta = rng.uniform(0, 2 * np.pi)
        z1 = complex(x, y)
        z2 = z1 + scale * np.exp(1j * theta)
        if z2.imag < 1e-4 or abs(z2) > 5 or abs(z1) > 5:
            continue
        res.append((z1, z2))
    z1s = np.array([p[0] for p in res])
    z2s = np.array([p[1] for p in res])
    m1, _ = solve_pastur_grid(two_atom, z1s)
    m2, _ = solve_pastur_grid(two_atom, z2s)
    dm = np.abs(m1 - m2)
    dz = np.abs(z1s - z2s)
    keep = dm > 1e-14
    slope = float(np.polyfit(np.log(dz[keep]), np.log(dm[keep]), 1)[0])
    ok = slope >= 1.0 / 3.0 - 0.05
    _report(4, ok, f"fitted Holder exponent {slope:.3f} over {keep.sum()} pairs (>=0.283)")


@pytest.fixture(scope="session")
def a2_diag_2000(two_atom):
    return realize_diagonal(two_atom, 2000)


def test_criterion_05_esd_concentration(two_atom, a2_profile, a2_support, a2_diag_2000):
    n, trials = 2000, 20
    t0 = time.perf_counter()
    samples = run_trials(EnsembleSpec.gue(n, seed=105), a2_diag_2000, trials)
    intervals = []
    for lo, hi in a2_support.intervals:
        centers = np.linspace(lo + 0.3, hi - 0.3, 5)
        intervals.extend((float(c - 0.05), float(c + 0.05)) for c in centers)
    records = concentration_report(samples, a2_profile, intervals, rel_tol=0.05)
    worst_mean = max(r.observed["mean_rel_error"] for r in records)
    gap_frac = np.mean([count_interval(s, (-0.1, 0.1)) for s in samples]) / n
    elapsed = time.perf_counter() - t0
    ok = all(r.passed for r in records) and gap_frac <= 0.01 and elapsed < 1200.0
    _report(
        5,
        ok,
        f"10 bulk intervals: worst mean rel error {worst_mean:.4f} (<=0.05); "
        f"gap interval holds {100 * gap_frac:.3f}% of eigenvalues (<=1%); "
        f"runtime {elapsed:.0f}s (<20min)",
    )


def test_criterion_06_delocalization_scaling(two_atom, a2_support):
    ns = [250, 500, 1000, 2000]
    trials = 20
    medians = []
    stats_ok = True
    for n in ns:
        diag = realize_diagonal(two_atom, n)
        bulk = bulk_indices(a2_support, 0.05, n)
        stream = sample_spectra(EnsembleSpec.gue(n, seed=106), diag, trials, want_vectors=True)
        rec = delocalization_stats(stream, bulk)[0]
        stats_ok &= rec.passed and rec.observed["median_statistic"] <= 10.0
        medians.append(rec.observed["median_supnorm"])
    slope = fit_loglog_slope(ns, medians)
    # localized control: no noise at all, eigenvectors are the standard basis
    control_meds = []
    for n in ns:
        diag = realize_diagonal(two_atom, n)
        bulk = bulk_indices(a2_support, 0.05, n)
        control = eigendecompose(np.diag(diag.entries), want_vectors=True)
        control_meds.append(delocalization_stats([control], bulk)[0].observed["median_supnorm"])
    control_slope = fit_loglog_slope(ns, np.maximum(control_meds, 1e-300))
    ok = stats_ok and -0.55 <= slope <= -0.40 and not (-0.55 <= control_slope <= -0.40)
    _report(
        6,
        ok,
        f"median sup-norm slope {slope:.3f} in [-0.55,-0.40]; "
        f"localized control slope {control_slope:.3f} fails the bound; "
        f"medians {[f'{m:.4f}' for m in medians]}",
    )


def test_criterion_07_gap_bound(two_atom, a2_support):
    n, trials = 1000, 100
    diag = realize_diagonal(two_atom, n)
    bulk = bulk_indices(a2_support, 0.05, n)
    samples = run_trials(EnsembleSpec.gue(n, seed=107), diag, trials)
    rec = gap_stats(samples, bulk, c0=1.0, freq_tol=0.01)[0]
    control = eigendecompose(np.diag(diag.entries))
    control_rec = gap_stats([control], bulk, c0=1.0)[0]
    ok = rec.passed and control_rec.observed["frequency"] == 1.0
    _report(
        7,
        ok,
        f"GUE small-gap frequency {rec.observed['frequency']:.2e} over "
        f"{rec.observed['gaps_counted']} gaps (<=0.01); "
        f"noiseless repeated-atom control frequency {control_rec.observed['frequency']:.0f} (=1)",
    )


def test_criterion_08_four_moment_universality(two_atom, a2_support):
    n, trials = 1000, 200
    diag = realize_diagonal(two_atom, n)
    bulk = bulk_indices(a2_support, 0.05, n)
    lo, hi = bulk.ranges[-1]
    idx = (lo + hi) // 2

    gue = EnsembleSpec.gue(n, seed=1081)
    m4c = EnsembleSpec(
        n=n,
        entry_law=EntryDistribution("matched4-complex"),
        diagonal_law=EntryDistribution("matched4-real", variance=1.0),
        seed=1082,
    )
    goe = EnsembleSpec.goe(n, seed=1083)
    rad = EnsembleSpec(
        n=n,
        entry_law=EntryDistribution("rademacher"),
        diagonal_law=EntryDistribution("rademacher", variance=2.0),
        symmetry="real-symmetric",
        seed=1084,
    )
    shifted = EnsembleSpec(
        n=n,
        entry_law=EntryDistribution("gaussian-complex", mean_shift=0.5),
        diagonal_law=EntryDistribution("gaussian-real", variance=1.0),
        seed=1085,
    )

    order_m4 = match_order(gue.entry_law, m4c.entry_law)
    order_rad = match_order(rad.entry_law, goe.entry_law)
    order_diag_rad = match_order(rad.diagonal_law, goe.diagonal_law)
    order_shift = match_order(gue.entry_law, shifted.entry_law)

    samples = {
        "gue": run_trials(gue, diag, trials),
        "m4c": run_trials(m4c, diag, trials),
        "goe": run_trials(goe, diag, trials),
        "rad": run_trials(rad, diag, trials),
        "shifted": run_trials(shifted, diag, trials),
    }

    _, p_m4 = two_sample_distance(
        bulk_gap_samples(samples["gue"], idx), bulk_gap_samples(samples["m4c"], idx), seed=81
    )
    _, p_rad = two_sample_distance(
        bulk_gap_samples(samples["goe"], idx), bulk_gap_samples(samples["rad"], idx), seed=82
    )
    # a mean shift is invisible to the gap statistic (uniform shift plus a
    # rank-one perturbation); the position statistic is the honest detector
    _, p_shift_gap = two_sample_distance(
        bulk_gap_samples(samples["gue"], idx), bulk_gap_samples(samples["shifted"], idx), seed=83
    )
    _, p_shift = two_sample_distance(
        bulk_position_samples(samples["gue"], idx),
        bulk_position_samples(samples["shifted"], idx),
        seed=84,
    )

    ok = (
        order_m4 >= 4
        and order_rad == 3
        and order_diag_rad >= 2
        and order_shift == 0
        and p_m4 > 0.01
        and p_rad > 0.01
        and p_shift < 0.01
    )
    _report(
        8,
        ok,
        f"GUE vs matched4-complex (order {order_m4}): gap p={p_m4:.3f} (>0.01); "
        f"GOE vs Rademacher (order {order_rad}, diag {order_diag_rad}): gap p={p_rad:.3f} (>0.01); "
        f"mean-shift control (order {order_shift}): position p={p_shift:.4f} (<0.01) "
        f"[gap statistic is shift-blind: p={p_shift_gap:.3f}]",
    )


def test_criterion_09_sine_kernel_pair_statistic(two_atom, a2_profile, a2_support, a2_diag_2000):
    n, trials = 2000, 200
    x0 = _mid(a2_support.intervals[-1])
    samples = run_trials(EnsembleSpec.gue(n, seed=109), a2_diag_2000, trials)
    clouds = rescale_at(samples, x0, a2_profile, window=20.0)
    g = plateau_bump(-5.0, 5.0, 1.0)
    h = plateau_bump(-3.0, 3.0, 0.5)
    h_rep = plateau_bump(-0.25, 0.25, 0.05)

    got = correlation_statistic(clouds, lambda u, v: g(u) * g(v) * h(u - v), k=2, support_radius=8.0)
    ref = pair_reference(g, h, 8.0)
    rel = abs(got - ref) / ref

    got_rep = correlation_statistic(clouds, lambda u, v: g(u) * g(v) * h_rep(u - v), k=2)
    poisson_ref = pair_reference(g, h_rep, 8.0, kernel=False)
    rep_ratio = got_rep / poisson_ref

    ok = rel <= 0.10 and rep_ratio <= 0.10
    _report(
        9,
        ok,
        f"pair statistic {got:.3f} vs sine-kernel quadrature {ref:.3f}: rel err {rel:.3f} (<=0.10); "
        f"near-diagonal statistic {got_rep:.3f} = {100 * rep_ratio:.1f}% of Poisson {poisson_ref:.3f} (<=10%)",
    )


def test_criterion_10_interlacing_identity(two_atom):
    n, trials = 50, 100
    diag = realize_diagonal(two_atom, n)
    failures = 0
    for t in range(trials):
        A = assemble(EnsembleSpec.gue(n, seed=110, trial_index=t), diag) * n
        full = eigendecompose(A)
        minor = eigendecompose(principal_minor(A, n), want_vectors=True)
        ok = interlacing_check(
            full,
            minor,
            column=A[: n - 1, n - 1],
            corner=A[n - 1, n - 1].real,
            identity_rtol=1e-6,
        )
        failures += 0 if ok else 1
    _report(10, failures == 0, f"identity held for all indices on {trials} random 50x50 samples "
                               f"({failures} failures, rtol 1e-6)")


def test_criterion_11_reproducibility(tmp_path):
    payloads = []
    for sub in ("run1", "run2"):
        cfg = {
            "atoms": "-2:0.5,2:0.5",
            "seed": 111,
            "n_values": [120],
            "trials": 100,
            "tests": ["concentration", "pastur-residual", "delocalization", "gaps", "universality"],
            "grid": "-6:6:1001",
            "outdir": str(tmp_path / sub),
        }
        path = tmp_path / f"{sub}.json"
        path.write_text(json.dumps(cfg))
        main(["run", "--config", str(path)])
        doc = json.loads((tmp_path / sub / "report.json").read_text())
        payloads.append(json.dumps(doc["payload"], sort_keys=True).encode())
    ok = payloads[0] == payloads[1]
    _report(11, ok, f"two full-suite runs: payloads byte-identical ({len(payloads[0])} bytes each)")
