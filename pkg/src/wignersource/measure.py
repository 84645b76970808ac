"""Atomic source measures, deterministic diagonals, and entry distributions.

The external source is a finitely-atomic probability measure
mu = sum_i p_i * delta_{a_i}; a size-n diagonal realizes it with per-atom
multiplicities whose weights sit within 1/n of the targets.  Entry
distributions are the mean-zero, unit-variance laws used to fill the random
matrix, with queryable mixed moments E[Re(z)^m Im(z)^l] for moment-matching
checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

WEIGHT_SUM_TOL = 1e-9
MOMENT_TOL = 1e-10
MATCH_ORDER_CAP = 8

ENTRY_KINDS = (
    "gaussian-real",
    "gaussian-complex",
    "rademacher",
    "matched4-real",
    "matched4-complex",
    "discrete",
)


@dataclass(frozen=True)
class AtomicMeasure:
    """Finitely-atomic probability measure, atoms sorted by location."""

    atoms: tuple[tuple[float, float], ...]

    @property
    def locations(self) -> np.ndarray:
        return np.array([a for a, _ in self.atoms])

    @property
    def weights(self) -> np.ndarray:
        return np.array([p for _, p in self.atoms])

    @property
    def atom_count(self) -> int:
        return len(self.atoms)

    @property
    def max_abs_location(self) -> float:
        return float(np.max(np.abs(self.locations)))

    def __str__(self) -> str:
        return ",".join(f"{a:g}:{p:g}" for a, p in self.atoms)


@dataclass(frozen=True)
class DiagonalRealization:
    """Deterministic diagonal with per-atom multiplicities close to n*p_i."""

    measure: AtomicMeasure
    n: int
    multiplicities: tuple[int, ...]

    @property
    def entries(self) -> np.ndarray:
        return np.repeat(self.measure.locations, self.multiplicities)

    @property
    def realized_weights(self) -> np.ndarray:
        return np.array(self.multiplicities) / self.n

    def digest(self) -> str:
        import hashlib

        payload = f"{self.measure}|{self.n}|{self.multiplicities}"
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


def make_measure(pairs: Sequence[tuple[float, float]]) -> AtomicMeasure:
    """Validate, sort, and normalize (location, weight) pairs into a measure.

    Raises ValueError on duplicate locations, nonpositive weights, non-finite
    locations, or a total weight off 1 by more than 1e-9 (smaller deviations
    are renormalized away exactly).
    """
    pairs = [(float(a), float(p)) for a, p in pairs]
    if not pairs:
        raise ValueError("measure needs at least one atom")
    locs = [a for a, _ in pairs]
    if any(not math.isfinite(a) for a in locs):
        raise ValueError("atom locations must be finite")
    if len(set(locs)) != len(locs):
        raise ValueError(f"duplicate atom locations in {locs}")
    if any(p <= 0 for _, p in pairs):
        raise ValueError("atom weights must be positive")
    total = sum(p for _, p in pairs)
    if abs(total - 1.0) > WEIGHT_SUM_TOL:
        raise ValueError(f"atom weights sum to {total!r}, not 1")
    pairs = sorted((a, p / total) for a, p in pairs)
    return AtomicMeasure(atoms=tuple(pairs))


def parse_atoms(text: str) -> AtomicMeasure:
    """Parse the CLI atom syntax "loc:weight,loc:weight", e.g. "-2:0.5,2:0.5"."""
    pairs = []
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            raise ValueError(f"empty atom entry in {text!r}")
        loc, sep, wt = chunk.partition(":")
        if not sep or not wt.strip():
            raise ValueError(f"atom entry {chunk!r} is not 'loc:weight'")
        pairs.append((float(loc), float(wt)))
    return make_measure(pairs)


def realize_diagonal(measure: AtomicMeasure, n: int) -> DiagonalRealization:
    """Largest-remainder apportionment of n slots to the atoms.

    Ties in the fractional remainders are broken toward the smaller location,
    which keeps the realization deterministic.  Guarantees
    |multiplicity/n - p_i| < 1/n for every atom.
    """
    l = measure.atom_count
    if n < l:
        raise ValueError(f"n={n} is smaller than the atom count {l}")
    weights = measure.weights
    raw = n * weights
    counts = np.floor(raw).astype(int)
    short = n - int(counts.sum())
    # remainders descending, location ascending on ties; atoms are stored
    # sorted by location so the index is the tie-break
    order = sorted(range(l), key=lambda i: (-(raw[i] - counts[i]), i))
    for i in order[:short]:
        counts[i] += 1
    return DiagonalRealization(measure=measure, n=n, multiplicities=tuple(int(c) for c in counts))


def stieltjes_of_atoms(measure: AtomicMeasure, z: complex) -> complex:
    """g(z) = sum_i p_i / (a_i - z) for Im z > 0."""
    z = complex(z)
    if z.imag <= 0:
        raise ValueError(f"z={z} must lie in the open upper half-plane")
    return complex(np.sum(measure.weights / (measure.locations - z)))


# ---------------------------------------------------------------------------
# entry distributions
# ---------------------------------------------------------------------------


def _double_factorial_moment(k: int) -> float:
    # E X^k for X ~ N(0, 1)
    if k % 2 == 1:
        return 0.0
    out = 1.0
    for j in range(1, k, 2):
        out *= j
    return out


def _matched4_component_moment(k: int) -> float:
    # E X^k for X in {+-sqrt(3) w.p. 1/6 each, 0 w.p. 2/3}
    if k % 2 == 1:
        return 0.0
    if k == 0:
        return 1.0
    return 3.0 ** (k / 2) / 3.0


def _rademacher_moment(k: int) -> float:
    return 0.0 if k % 2 == 1 else 1.0


@dataclass(frozen=True)
class EntryDistribution:
    """A matrix-entry law: base kind scaled to the requested variance.

    ``variance`` is E|zeta|^2 of the scaled law (must be 1 for off-diagonal
    use; diagonal laws may use any sigma^2 > 0).  ``mean_shift`` adds a
    constant after scaling; nonzero values deliberately break the mean-zero
    condition and exist for control experiments only.
    """

    kind: str
    variance: float = 1.0
    mean_shift: complex = 0.0
    points: tuple[complex, ...] | None = None
    probabilities: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.kind not in ENTRY_KINDS:
            raise ValueError(f"unknown entry kind {self.kind!r}")
        if self.variance <= 0:
            raise ValueError("variance must be positive")
        if self.kind == "discrete":
            if self.points is None or self.probabilities is None:
                raise ValueError("discrete law needs points and probabilities")
            pts = np.asarray(self.points, dtype=complex)
            pr = np.asarray(self.probabilities, dtype=float)
            if pts.shape != pr.shape or pts.size == 0:
                raise ValueError("points/probabilities shape mismatch")
            if np.any(pr <= 0) or abs(pr.sum() - 1.0) > WEIGHT_SUM_TOL:
                raise ValueError("probabilities must be positive and sum to 1")
            mean = np.sum(pr * pts)
            var = np.sum(pr * np.abs(pts) ** 2)
            if abs(mean) > 1e-12:
                raise ValueError(f"discrete base law has mean {mean}, expected 0")
            if abs(var - 1.0) > 1e-12:
                raise ValueError(f"discrete base law has E|z|^2={var}, expected 1")

    @property
    def is_real(self) -> bool:
        if self.kind == "discrete":
            return bool(np.all(np.abs(np.asarray(self.points, dtype=complex).imag) == 0)) and (
                self.mean_shift.imag == 0 if isinstance(self.mean_shift, complex) else True
            )
        return self.kind in ("gaussian-real", "rademacher", "matched4-real") and complex(self.mean_shift).imag == 0

    # -- moments ---------------------------------------------------------

    def _component_moments(self, kmax: int) -> tuple[list[float], list[float]] | None:
        """Central moment sequences of (Re, Im) when they are independent;
        None for discrete laws (handled by direct summation)."""
        if self.kind == "discrete":
            return None
        if self.kind == "gaussian-real":
            re = [_double_factorial_moment(k) for k in range(kmax + 1)]
            im = [1.0] + [0.0] * kmax
        elif self.kind == "rademacher":
            re = [_rademacher_moment(k) for k in range(kmax + 1)]
            im = [1.0] + [0.0] * kmax
        elif self.kind == "matched4-real":
            re = [_matched4_component_moment(k) for k in range(kmax + 1)]
            im = [1.0] + [0.0] * kmax
        elif self.kind == "gaussian-complex":
            re = [_double_factorial_moment(k) * 0.5 ** (k / 2) for k in range(kmax + 1)]
            im = list(re)
        elif self.kind == "matched4-complex":
            re = [_matched4_component_moment(k) * 0.5 ** (k / 2) for k in range(kmax + 1)]
            im = list(re)
        else:  # pragma: no cover
            raise AssertionError(self.kind)
        return re, im

    def moment(self, m: int, l: int) -> float:
        """Raw mixed moment E[Re(zeta)^m Im(zeta)^l] of the scaled, shifted law."""
        if m < 0 or l < 0:
            raise ValueError("moment orders must be nonnegative")
        s = np.sqrt(self.variance)
        shift = complex(self.mean_shift)
        if self.kind == "discrete":
            pts = s * np.asarray(self.points, dtype=complex) + shift
            pr = np.asarray(self.probabilities, dtype=float)
            return float(np.sum(pr * pts.real**m * pts.imag**l))
        re, im = self._component_moments(m + l)

        def shifted(central, k, c):
            return sum(math.comb(k, j) * (s**j) * central[j] * c ** (k - j) for j in range(k + 1))

        return float(shifted(re, m, shift.real) * shifted(im, l, shift.imag))

    def moments(self, k: int) -> dict[tuple[int, int], float]:
        """All mixed moments with m + l <= k (k capped at 8)."""
        if k > MATCH_ORDER_CAP:
            raise ValueError(f"moment order {k} exceeds the cap {MATCH_ORDER_CAP}")
        return {(m, l): self.moment(m, l) for m in range(k + 1) for l in range(k + 1 - m)}

    # -- sampling ---------------------------------------------------------

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        s = np.sqrt(self.variance)
        shift = complex(self.mean_shift)
        if self.kind == "gaussian-real":
            out = rng.standard_normal(size) * s
        elif self.kind == "gaussian-complex":
            out = (rng.standard_normal(size) + 1j * rng.standard_normal(size)) * (s / np.sqrt(2))
        elif self.kind == "rademacher":
            out = (2.0 * rng.integers(0, 2, size=size) - 1.0) * s
        elif self.kind == "matched4-real":
            out = _matched4_draw(rng, size) * s
        elif self.kind == "matched4-complex":
            out = (_matched4_draw(rng, size) + 1j * _matched4_draw(rng, size)) * (s / np.sqrt(2))
        else:
            pts = np.asarray(self.points, dtype=complex)
            idx = rng.choice(len(pts), size=size, p=np.asarray(self.probabilities, dtype=float))
            out = pts[idx] * s
            if self.is_real:
                out = out.real
        if shift != 0:
            out = out + (shift.real if self.is_real else shift)
        return out

    def clipped_mean(self, threshold: float) -> complex:
        """Mean of the law after clipping the modulus at ``threshold``.

        Every built-in kind is symmetric, so the shift is the base mean_shift
        unless the law is discrete with atoms beyond the threshold.
        """
        s = np.sqrt(self.variance)
        shift = complex(self.mean_shift)
        if self.kind != "discrete":
            # symmetric base laws clip to symmetric laws
            return shift if abs(shift) <= threshold else shift / abs(shift) * threshold
        pts = s * np.asarray(self.points, dtype=complex) + shift
        pr = np.asarray(self.probabilities, dtype=float)
        mod = np.abs(pts)
        clipped = np.where(mod > threshold, pts * (threshold / np.where(mod == 0, 1.0, mod)), pts)
        return complex(np.sum(pr * clipped))


def _matched4_draw(rng: np.random.Generator, size: int) -> np.ndarray:
    # +-sqrt(3) with probability 1/6 each, 0 with probability 2/3:
    # matches the standard normal moments through order 4
    u = rng.random(size)
    return np.where(u < 1.0 / 6.0, np.sqrt(3.0), np.where(u < 1.0 / 3.0, -np.sqrt(3.0), 0.0))


def moments(dist: EntryDistribution, k: int) -> dict[tuple[int, int], float]:
    """Mixed moments E[Re^m Im^l] for all m + l <= k (k <= 8)."""
    return dist.moments(k)


def match_order(d1: EntryDistribution, d2: EntryDistribution) -> int:
    """Largest k <= 8 such that all mixed moments up to order k agree within 1e-10."""
    best = 0
    for k in range(1, MATCH_ORDER_CAP + 1):
        ok = all(
            abs(d1.moment(m, l) - d2.moment(m, l)) <= MOMENT_TOL
            for m in range(k + 1)
            for l in range(k + 1 - m)
        )
        if not ok:
            break
        best = k
    return best
