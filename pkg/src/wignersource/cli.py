"""Experiment runner: subcommands, config files, trial farming, reports.

Subcommands mirror the library surface: solve-density and bk-density emit
x,rho CSV tables; simulate persists spectra; stats, universality, and run
emit JSON reports whose payload is byte-reproducible for a fixed config and
seed (timestamps live in a separate metadata section).

Exit codes: 0 all selected tests passed, 1 test failures, 2 config/usage
errors, 3 solver convergence failures, 4 eigendecomposition backend
failures.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone

import numpy as np

from . import bk, stats
from .ensemble import BackendError, EnsembleSpec, SpectralSample, sample_spectrum, save_sample
from .measure import EntryDistribution, match_order, parse_atoms, realize_diagonal
from .stieltjes import ConvergenceError, bulk_indices, density, support_intervals

EXIT_OK = 0
EXIT_TEST_FAILURE = 1
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_BACKEND = 4

KNOWN_TESTS = ("concentration", "pastur-residual", "delocalization", "gaps", "universality", "correlation")


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    atoms: str = "0:1"
    law: str = "gaussian-complex"
    law_b: str | None = None
    diagonal_variance: float = 1.0
    symmetry: str = "hermitian"
    truncate: bool = False
    seed: int = 0
    n_values: list[int] = field(default_factory=lambda: [500])
    trials: int = 20
    tests: list[str] = field(default_factory=lambda: ["concentration"])
    outdir: str = "out"
    grid: str = "-6:6:2001"
    eta_floor: float = 1e-6
    epsilon: float = 0.05
    x0: float | None = None  # None: midpoint of the widest support interval
    window: float = 20.0
    c0: float = 1.0
    statistic: str = "bulk-gap"  # universality scalar: bulk-gap | bulk-position
    mean_shift_b: float = 0.0  # shift for law_b (control experiments)
    correlation_rtol: float = 0.25
    save_samples: bool = False  # persist eigenvalue spectra under outdir/samples
    workers: int = 0  # 0: take WIGNERSOURCE_WORKERS, default 1

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(**data)
        for t in cfg.tests:
            if t not in KNOWN_TESTS:
                raise ConfigError(f"unknown test {t!r}; known: {KNOWN_TESTS}")
        if cfg.trials < 1 or any(n < 1 for n in cfg.n_values):
            raise ConfigError("trials and n values must be positive")
        if cfg.statistic not in ("bulk-gap", "bulk-position"):
            raise ConfigError(f"unknown statistic {cfg.statistic!r}")
        return cfg

    @classmethod
    def from_file(cls, path: str) -> "ExperimentConfig":
        with open(path, "rb") as fh:
            raw = fh.read()
        if path.endswith(".json"):
            data = json.loads(raw)
        else:
            try:
                import tomllib  # py311+
            except ImportError:
                import tomli as tomllib
            data = tomllib.loads(raw.decode())
        return cls.from_dict(data)


def _parse_grid(text: str) -> np.ndarray:
    try:
        lo, hi, count = text.split(":")
        lo, hi, count = float(lo), float(hi), int(count)
    except ValueError as exc:
        raise ConfigError(f"grid {text!r} is not 'lo:hi:count'") from exc
    if count < 2 or hi <= lo:
        raise ConfigError(f"grid {text!r} must satisfy lo < hi and count >= 2")
    return np.linspace(lo, hi, count)


def _entry_law(name: str, mean_shift: complex = 0.0) -> EntryDistribution:
    return EntryDistribution(kind=name, variance=1.0, mean_shift=mean_shift)


def _diagonal_law_for(entry_kind: str, variance: float) -> EntryDistribution:
    kind = "gaussian-real" if entry_kind.startswith("gaussian") else entry_kind
    if kind.endswith("-complex"):
        kind = kind.replace("-complex", "-real")
    return EntryDistribution(kind=kind, variance=variance)


def _worker_count(cfg_workers: int) -> int:
    if cfg_workers > 0:
        return cfg_workers
    env = os.environ.get("WIGNERSOURCE_WORKERS", "")
    return max(1, int(env)) if env.strip() else 1


def _one_trial(args) -> SpectralSample:
    spec, diag, want_vectors = args
    return sample_spectrum(spec, diag, want_vectors)


def run_trials(spec: EnsembleSpec, diag, trials: int, want_vectors: bool = False, workers: int = 1):
    """Sample `trials` spectra; results are ordered by trial index regardless of workers."""
    jobs = [(spec.with_trial(t), diag, want_vectors) for t in range(trials)]
    if workers <= 1:
        return [_one_trial(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_one_trial, jobs))


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _cmd_solve_density(args) -> int:
    measure = parse_atoms(args.atoms)
    grid = _parse_grid(args.grid)
    profile = density(measure, grid, eta_floor=args.eta_floor)
    profile.to_csv(args.out)
    if args.support_json:
        support_intervals(profile).to_json(args.support_json)
    return EXIT_OK


def _cmd_bk_density(args) -> int:
    if args.a <= 1:
        raise ConfigError("bk-density needs a > 1 (two-interval regime)")
    grid = _parse_grid(args.grid)
    rho = bk.bk_density(grid, args.a)
    import csv

    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "rho"])
        for x, r in zip(grid, rho):
            w.writerow([repr(float(x)), repr(float(r))])
    if args.support_json:
        params = bk.bk_support(args.a)
        with open(args.support_json, "w") as fh:
            json.dump({"intervals": [list(iv) for iv in params.intervals]}, fh, indent=2)
    return EXIT_OK


def _build_spec(cfg: ExperimentConfig, n: int, law_name: str, mean_shift: complex = 0.0) -> EnsembleSpec:
    entry = _entry_law(law_name, mean_shift)
    symmetry = cfg.symmetry if entry.is_real else "hermitian"
    return EnsembleSpec(
        n=n,
        entry_law=entry,
        diagonal_law=_diagonal_law_for(law_name, cfg.diagonal_variance),
        symmetry=symmetry,
        truncate=cfg.truncate,
        seed=cfg.seed,
    )


def _cmd_simulate(args) -> int:
    measure = parse_atoms(args.atoms)
    diag = realize_diagonal(measure, args.n)
    cfg = ExperimentConfig(symmetry=args.symmetry, seed=args.seed, truncate=args.truncate)
    spec = _build_spec(cfg, args.n, args.law)
    os.makedirs(args.outdir, exist_ok=True)
    samples = run_trials(spec, diag, args.trials, want_vectors=args.vectors, workers=_worker_count(args.workers))
    for t, s in enumerate(samples):
        save_sample(os.path.join(args.outdir, f"trial{t:04d}.{args.format}"), s)
    return EXIT_OK


def _auto_x0(support) -> float:
    widths = [b - a for a, b in support.intervals]
    a, b = support.intervals[int(np.argmax(widths))]
    return 0.5 * (a + b)


def _run_report(cfg: ExperimentConfig) -> stats.StatsReport:
    measure = parse_atoms(cfg.atoms)
    grid = _parse_grid(cfg.grid)
    profile = density(measure, grid, eta_floor=cfg.eta_floor)
    support = support_intervals(profile)
    os.makedirs(cfg.outdir, exist_ok=True)
    profile.to_csv(os.path.join(cfg.outdir, "density.csv"))
    support.to_json(os.path.join(cfg.outdir, "support.json"))
    workers = _worker_count(cfg.workers)
    report = stats.StatsReport()
    for n in cfg.n_values:
        diag = realize_diagonal(measure, n)
        bulk = bulk_indices(support, cfg.epsilon, n)
        spec = _build_spec(cfg, n, cfg.law)
        if "delocalization" in cfg.tests:
            # stream so eigenvector matrices are never all in memory
            samples: list[SpectralSample] = []

            def _stream():
                from .ensemble import sample_spectra

                for s in sample_spectra(spec, diag, cfg.trials, want_vectors=True):
                    samples.append(SpectralSample(s.eigenvalues, None, s.provenance))
                    yield s

            report.add(*stats.delocalization_stats(_stream(), bulk))
        else:
            samples = run_trials(spec, diag, cfg.trials, workers=workers)
        if cfg.save_samples:
            sample_dir = os.path.join(cfg.outdir, "samples")
            os.makedirs(sample_dir, exist_ok=True)
            for t, s in enumerate(samples):
                save_sample(os.path.join(sample_dir, f"n{n}_trial{t:04d}.npz"), s)
        if "concentration" in cfg.tests:
            intervals = _default_intervals(support)
            report.add(*stats.concentration_report(samples, profile, intervals))
        if "pastur-residual" in cfg.tests:
            zgrid = np.linspace(grid[0] / 2, grid[-1] / 2, 21) + 0.05j
            report.add(*stats.pastur_residual(samples, measure, zgrid))
        if "gaps" in cfg.tests:
            report.add(*stats.gap_stats(samples, bulk, cfg.c0))
        if "universality" in cfg.tests:
            law_b = cfg.law_b or "matched4-complex"
            spec_b = _build_spec(cfg, n, law_b, mean_shift=cfg.mean_shift_b)
            samples_b = run_trials(spec_b, diag, cfg.trials, workers=workers)
            idx = _mid_bulk_index(bulk)
            extract = (
                stats.bulk_gap_samples if cfg.statistic == "bulk-gap" else stats.bulk_position_samples
            )
            ks, pval = stats.two_sample_distance(extract(samples, idx), extract(samples_b, idx), seed=cfg.seed)
            order = match_order(spec.entry_law, spec_b.entry_law)
            # laws matching to order >= 4 must look the same (p above 0.01);
            # a control that matches to order < 4 must be detected
            expected_same = order >= 4
            report.add(
                stats.TestRecord(
                    test="universality",
                    params={"n": n, "trials": cfg.trials, "law_a": cfg.law, "law_b": law_b,
                            "statistic": cfg.statistic, "index": idx, "match_order": order,
                            "expected_same": expected_same},
                    observed={"ks_distance": ks, "p_value": pval},
                    reference=None,
                    tolerance=0.01,
                    passed=bool(pval > 0.01) if expected_same else bool(pval < 0.01),
                    provenance={"specs": sorted({spec.digest(), spec_b.digest()}), "seeds": [cfg.seed]},
                )
            )
        if "correlation" in cfg.tests:
            x0 = cfg.x0 if cfg.x0 is not None else _auto_x0(support)
            clouds = stats.rescale_at(samples, x0, profile, window=cfg.window)
            g = stats.plateau_bump(-5.0, 5.0, 1.0)
            h = stats.plateau_bump(-3.0, 3.0, 0.5)
            got = stats.correlation_statistic(
                clouds, lambda u, v: g(u) * g(v) * h(u - v), k=2, support_radius=8.0
            )
            ref = stats.pair_reference(g, h, 8.0)
            rel = abs(got - ref) / ref
            report.add(
                stats.TestRecord(
                    test="correlation",
                    params={"n": n, "trials": cfg.trials, "x0": x0, "window": cfg.window, "k": 2},
                    observed={"statistic": got, "rel_error": rel},
                    reference=ref,
                    tolerance=cfg.correlation_rtol,
                    passed=bool(rel <= cfg.correlation_rtol),
                    provenance={"specs": sorted({s.provenance.get("spec", "") for s in samples}),
                                "seeds": [cfg.seed]},
                )
            )
    return report


def _default_intervals(support) -> list[tuple[float, float]]:
    out = []
    for a, b in support.intervals:
        width = b - a
        xs = np.linspace(a + 0.15 * width, b - 0.15 * width, 4)
        half = min(0.05, 0.1 * width)
        out.extend((float(x - half), float(x + half)) for x in xs)
    return out


def _mid_bulk_index(bulk) -> int:
    lo, hi = bulk.ranges[-1]
    return (lo + hi) // 2


def _cmd_run(args) -> int:
    cfg = ExperimentConfig.from_file(args.config)
    report = _run_report(cfg)
    meta = {"created": datetime.now(timezone.utc).isoformat(), "config": cfg.to_dict()}
    path = os.path.join(cfg.outdir, "report.json")
    report.to_json(path, metadata=meta)
    print(report.to_json(metadata=meta) if args.echo else f"report written to {path}")
    return EXIT_OK if report.all_passed else EXIT_TEST_FAILURE


def _cmd_stats(args) -> int:
    cfg = ExperimentConfig(
        atoms=args.atoms,
        law=args.law,
        seed=args.seed,
        n_values=[args.n],
        trials=args.trials,
        tests=args.tests.split(","),
        outdir=args.outdir,
        grid=args.grid,
        epsilon=args.epsilon,
        workers=args.workers,
    )
    cfg = ExperimentConfig.from_dict(cfg.to_dict())  # validates test names
    report = _run_report(cfg)
    meta = {"created": datetime.now(timezone.utc).isoformat(), "config": cfg.to_dict()}
    path = os.path.join(cfg.outdir, "report.json")
    report.to_json(path, metadata=meta)
    print(f"report written to {path}")
    return EXIT_OK if report.all_passed else EXIT_TEST_FAILURE


def _cmd_universality(args) -> int:
    cfg = ExperimentConfig(
        atoms=args.atoms, law=args.law_a, law_b=args.law_b, seed=args.seed,
        n_values=[args.n], trials=args.trials, tests=["universality"],
        outdir=args.outdir, grid=args.grid, epsilon=args.epsilon, workers=args.workers,
        statistic=args.statistic, mean_shift_b=args.mean_shift_b,
    )
    report = _run_report(cfg)
    doc = report.payload()["records"][-1]
    text = json.dumps(doc, indent=2, sort_keys=True)
    print(text)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    return EXIT_OK if report.all_passed else EXIT_TEST_FAILURE


def _cmd_report(args) -> int:
    with open(args.report) as fh:
        doc = json.load(fh)
    records = doc.get("payload", {}).get("records", [])
    all_pass = True
    for r in records:
        status = "PASS" if r.get("pass") else "FAIL"
        all_pass &= bool(r.get("pass"))
        print(f"[{status}] {r['test']}: observed={r['observed']} tolerance={r['tolerance']}")
    print(f"{len(records)} records, all_passed={all_pass}")
    return EXIT_OK if all_pass else EXIT_TEST_FAILURE


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="wignersource", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    sd = sub.add_parser("solve-density", help="solve the fixed point and emit x,rho CSV")
    sd.add_argument("--atoms", required=True, help='atom list "loc:weight,loc:weight"')
    sd.add_argument("--grid", default="-6:6:2001", help="lo:hi:count")
    sd.add_argument("--eta-floor", type=float, default=1e-6)
    sd.add_argument("--out", default="density.csv")
    sd.add_argument("--support-json", default=None)
    sd.set_defaults(func=_cmd_solve_density)

    bd = sub.add_parser("bk-density", help="closed-form two-atom density CSV")
    bd.add_argument("--a", type=float, required=True)
    bd.add_argument("--grid", default="-6:6:2001")
    bd.add_argument("--out", default="bk_density.csv")
    bd.add_argument("--support-json", default=None)
    bd.set_defaults(func=_cmd_bk_density)

    sim = sub.add_parser("simulate", help="sample spectra and persist them")
    sim.add_argument("--atoms", required=True)
    sim.add_argument("--law", default="gaussian-complex")
    sim.add_argument("--symmetry", default="hermitian", choices=["hermitian", "real-symmetric"])
    sim.add_argument("--n", type=int, required=True)
    sim.add_argument("--trials", type=int, default=1)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--vectors", action="store_true")
    sim.add_argument("--truncate", action="store_true")
    sim.add_argument("--format", default="npz", choices=["npz", "csv"])
    sim.add_argument("--outdir", default="samples")
    sim.add_argument("--workers", type=int, default=0)
    sim.set_defaults(func=_cmd_simulate)

    st = sub.add_parser("stats", help="simulate and run selected statistics")
    st.add_argument("--atoms", required=True)
    st.add_argument("--law", default="gaussian-complex")
    st.add_argument("--n", type=int, required=True)
    st.add_argument("--trials", type=int, default=20)
    st.add_argument("--seed", type=int, default=0)
    st.add_argument("--tests", default="concentration,gaps")
    st.add_argument("--grid", default="-6:6:2001")
    st.add_argument("--epsilon", type=float, default=0.05)
    st.add_argument("--outdir", default="out")
    st.add_argument("--workers", type=int, default=0)
    st.set_defaults(func=_cmd_stats)

    uni = sub.add_parser("universality", help="two-sample KS test between entry laws")
    uni.add_argument("--law-a", required=True)
    uni.add_argument("--law-b", required=True)
    uni.add_argument("--atoms", required=True)
    uni.add_argument("--n", type=int, required=True)
    uni.add_argument("--trials", type=int, default=200)
    uni.add_argument("--seed", type=int, default=0)
    uni.add_argument("--grid", default="-6:6:2001")
    uni.add_argument("--epsilon", type=float, default=0.05)
    uni.add_argument("--statistic", default="bulk-gap", choices=["bulk-gap", "bulk-position"])
    uni.add_argument("--mean-shift-b", type=float, default=0.0,
                     help="mean shift applied to law-b (control experiments)")
    uni.add_argument("--outdir", default="out")
    uni.add_argument("--out", default=None)
    uni.add_argument("--workers", type=int, default=0)
    uni.set_defaults(func=_cmd_universality)

    run = sub.add_parser("run", help="full pipeline from a TOML/JSON config")
    run.add_argument("--config", required=True)
    run.add_argument("--echo", action="store_true", help="print the report JSON")
    run.set_defaults(func=_cmd_run)

    rep = sub.add_parser("report", help="summarize a report JSON")
    rep.add_argument("--report", required=True)
    rep.set_defaults(func=_cmd_report)

    return p


_DASH_VALUE_FLAGS = ("--atoms", "--grid")


def _merge_dash_values(argv):
    """Rewrite ["--atoms", "-2:0.5,..."] as ["--atoms=-2:0.5,..."] so argparse
    does not mistake values with a leading minus for option names."""
    out = []
    skip = False
    for i, tok in enumerate(argv):
        if skip:
            skip = False
            continue
        if tok in _DASH_VALUE_FLAGS and i + 1 < len(argv) and argv[i + 1].startswith("-"):
            out.append(f"{tok}={argv[i + 1]}")
            skip = True
        else:
            out.append(tok)
    return out


def main(argv=None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    argv = _merge_dash_values(list(argv))
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConvergenceError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except BackendError as exc:
        print(f"backend failure: {exc}", file=sys.stderr)
        return EXIT_BACKEND


if __name__ == "__main__":
    sys.exit(main())
