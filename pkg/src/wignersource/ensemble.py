"""Random matrix sampling, assembly, and the eigendecomposition contract.

Each trial draws its entries from its own counter-based Philox stream keyed
by (seed, trial_index) with a fixed draw order, so realizations are
bit-identical regardless of scheduling or worker count.  Matrices are
Hermitian by construction: only the upper triangle is sampled and mirrored.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from typing import Iterator

import numpy as np
from numpy.random import Generator, Philox

from .measure import DiagonalRealization, EntryDistribution

HERMITICITY_TOL = 1e-12
TRUNCATION_EXPONENT = 2  # clip at log(n) ** (C + 1) with C = 1


class BackendError(RuntimeError):
    """Eigendecomposition backend failed to converge."""


@dataclass(frozen=True)
class EnsembleSpec:
    """Everything needed to reproduce one random matrix bit-exactly."""

    n: int
    entry_law: EntryDistribution
    diagonal_law: EntryDistribution
    symmetry: str = "hermitian"  # or "real-symmetric"
    truncate: bool = False
    seed: int = 0
    trial_index: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be positive")
        if self.symmetry not in ("hermitian", "real-symmetric"):
            raise ValueError(f"unknown symmetry {self.symmetry!r}")
        if self.symmetry == "real-symmetric" and not self.entry_law.is_real:
            raise ValueError("real-symmetric ensembles need a real entry law")
        if not self.diagonal_law.is_real:
            raise ValueError("the diagonal law must be real-valued")
        if abs(self.entry_law.variance - 1.0) > 1e-12:
            raise ValueError("off-diagonal entries must have variance exactly 1")

    def rng(self) -> Generator:
        key = np.array([self.seed % 2**64, self.trial_index % 2**64], dtype=np.uint64)
        return Generator(Philox(key=key))

    def with_trial(self, trial_index: int) -> "EnsembleSpec":
        return replace(self, trial_index=trial_index)

    def digest(self) -> str:
        payload = {
            "n": self.n,
            "entry": _law_dict(self.entry_law),
            "diagonal": _law_dict(self.diagonal_law),
            "symmetry": self.symmetry,
            "truncate": self.truncate,
            "seed": self.seed,
            "trial": self.trial_index,
        }
        blob = json.dumps(payload, sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    @classmethod
    def gue(cls, n: int, seed: int = 0, trial_index: int = 0, truncate: bool = False) -> "EnsembleSpec":
        return cls(
            n=n,
            entry_law=EntryDistribution("gaussian-complex"),
            diagonal_law=EntryDistribution("gaussian-real", variance=1.0),
            symmetry="hermitian",
            truncate=truncate,
            seed=seed,
            trial_index=trial_index,
        )

    @classmethod
    def goe(cls, n: int, seed: int = 0, trial_index: int = 0, truncate: bool = False) -> "EnsembleSpec":
        return cls(
            n=n,
            entry_law=EntryDistribution("gaussian-real"),
            diagonal_law=EntryDistribution("gaussian-real", variance=2.0),
            symmetry="real-symmetric",
            truncate=truncate,
            seed=seed,
            trial_index=trial_index,
        )


def _law_dict(law: EntryDistribution) -> dict:
    d = {"kind": law.kind, "variance": law.variance}
    if law.mean_shift:
        d["mean_shift"] = [complex(law.mean_shift).real, complex(law.mean_shift).imag]
    if law.kind == "discrete":
        d["points"] = [[complex(p).real, complex(p).imag] for p in law.points]
        d["probabilities"] = list(law.probabilities)
    return d


@dataclass(frozen=True)
class SpectralSample:
    """Sorted spectrum of one realization, with optional eigenvectors."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray | None = None
    provenance: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return len(self.eigenvalues)


def _clip_entries(vals: np.ndarray, threshold: float, law: EntryDistribution) -> np.ndarray:
    mod = np.abs(vals)
    over = mod > threshold
    if np.any(over):
        vals = np.where(over, vals * (threshold / np.where(over, mod, 1.0)), vals)
    correction = law.clipped_mean(threshold) - complex(law.mean_shift)
    if abs(correction) > 0:
        vals = vals - (correction.real if law.is_real else correction)
    return vals


def sample_wigner(spec: EnsembleSpec) -> np.ndarray:
    """Draw the Hermitian matrix M of independent entries (no 1/sqrt(n) scaling).

    Draw order is fixed: n(n-1)/2 off-diagonal entries in row-major upper
    triangle order, then n diagonal entries.  With ``truncate`` the entries
    are clipped in modulus at log(n)^2 and the clipped law's analytic mean
    is subtracted (zero for the symmetric built-in kinds).
    """
    n = spec.n
    rng = spec.rng()
    off = spec.entry_law.sample(rng, n * (n - 1) // 2)
    diag = spec.diagonal_law.sample(rng, n)
    if spec.truncate:
        threshold = float(np.log(n) ** (TRUNCATION_EXPONENT))
        off = _clip_entries(off, threshold, spec.entry_law)
        diag = _clip_entries(diag, threshold, spec.diagonal_law).real
    dtype = np.float64 if spec.symmetry == "real-symmetric" else np.complex128
    M = np.zeros((n, n), dtype=dtype)
    iu = np.triu_indices(n, 1)
    M[iu] = off.astype(dtype, copy=False)
    M = M + M.conj().T
    M[np.diag_indices(n)] = np.asarray(diag, dtype=np.float64)
    return M


def assemble(spec: EnsembleSpec, diag: DiagonalRealization) -> np.ndarray:
    """W = M / sqrt(n) + D for a freshly sampled M and the given diagonal."""
    if diag.n != spec.n:
        raise ValueError(f"diagonal size {diag.n} != ensemble size {spec.n}")
    W = sample_wigner(spec) / np.sqrt(spec.n)
    W[np.diag_indices(spec.n)] += diag.entries
    return W


def eigendecompose(W: np.ndarray, want_vectors: bool = False, provenance: dict | None = None) -> SpectralSample:
    """Sorted spectrum (and optionally orthonormal eigenvectors) of Hermitian W."""
    W = np.asarray(W)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise ValueError("W must be square")
    scale = max(1.0, float(np.max(np.abs(W)))) if W.size else 1.0
    if W.size and np.max(np.abs(W - W.conj().T)) > HERMITICITY_TOL * scale:
        raise ValueError("matrix is not Hermitian within 1e-12")
    try:
        if want_vectors:
            vals, vecs = np.linalg.eigh(W)
        else:
            vals = np.linalg.eigvalsh(W)
            vecs = None
    except np.linalg.LinAlgError as exc:
        digest = hashlib.sha256(np.ascontiguousarray(W).tobytes()).hexdigest()[:16]
        raise BackendError(f"eigendecomposition failed (matrix digest {digest}): {exc}") from exc
    return SpectralSample(eigenvalues=vals, eigenvectors=vecs, provenance=provenance or {})


def principal_minor(W: np.ndarray, drop_index: int) -> np.ndarray:
    """The (n-1) x (n-1) matrix with 1-based row/column ``drop_index`` removed."""
    W = np.asarray(W)
    n = W.shape[0]
    if not (1 <= drop_index <= n):
        raise ValueError(f"drop_index {drop_index} outside 1..{n}")
    keep = [i for i in range(n) if i != drop_index - 1]
    return W[np.ix_(keep, keep)]


def sample_spectrum(spec: EnsembleSpec, diag: DiagonalRealization, want_vectors: bool = False) -> SpectralSample:
    """Assemble one trial and decompose it, recording provenance."""
    W = assemble(spec, diag)
    prov = {"spec": spec.digest(), "diagonal": diag.digest(), "seed": spec.seed, "trial": spec.trial_index}
    return eigendecompose(W, want_vectors=want_vectors, provenance=prov)


def sample_spectra(
    spec: EnsembleSpec, diag: DiagonalRealization, trials: int, want_vectors: bool = False
) -> Iterator[SpectralSample]:
    """Lazily yield the spectra of trials 0..trials-1 (trial_index offsets spec's)."""
    for t in range(trials):
        yield sample_spectrum(spec.with_trial(spec.trial_index + t), diag, want_vectors)


def save_sample(path, sample: SpectralSample) -> None:
    """Persist a sample: .npz (binary) or .csv of eigenvalues with the digest header."""
    path = str(path)
    if path.endswith(".npz"):
        arrays = {"eigenvalues": sample.eigenvalues}
        if sample.eigenvectors is not None:
            arrays["eigenvectors"] = sample.eigenvectors
        arrays["provenance"] = np.array(json.dumps(sample.provenance))
        np.savez_compressed(path, **arrays)
    elif path.endswith(".csv"):
        with open(path, "w") as fh:
            fh.write(f"# provenance: {json.dumps(sample.provenance, sort_keys=True)}\n")
            fh.write("eigenvalue\n")
            for v in sample.eigenvalues:
                fh.write(f"{float(v)!r}\n")
    else:
        raise ValueError("sample path must end in .npz or .csv")


def load_sample(path) -> SpectralSample:
    path = str(path)
    if path.endswith(".npz"):
        data = np.load(path, allow_pickle=False)
        vecs = data["eigenvectors"] if "eigenvectors" in data.files else None
        prov = json.loads(str(data["provenance"]))
        return SpectralSample(eigenvalues=data["eigenvalues"], eigenvectors=vecs, provenance=prov)
    if path.endswith(".csv"):
        with open(path) as fh:
            header = fh.readline()
            prov = json.loads(header.split("provenance:", 1)[1]) if "provenance:" in header else {}
            fh.readline()  # column header
            vals = np.array([float(line) for line in fh if line.strip()])
        return SpectralSample(eigenvalues=vals, provenance=prov)
    raise ValueError("sample path must end in .npz or .csv")
