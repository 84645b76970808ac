import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad
from scipy.stats import norm

from wignersource import (
    EntryDistribution,
    make_measure,
    match_order,
    moments,
    parse_atoms,
    realize_diagonal,
    stieltjes_of_atoms,
)


class TestMakeMeasure:
    def test_single_atom(self):
        m = make_measure([(0.0, 1.0)])
        assert m.atoms == ((0.0, 1.0),)

    def test_two_atom_symmetric(self):
        m = make_measure([(2.0, 0.5), (-2.0, 0.5)])
        assert m.atoms == ((-2.0, 0.5), (2.0, 0.5))  # sorted by location

    def test_duplicate_location_rejected(self):
        with pytest.raises(ValueError, match="duplicate"):
            make_measure([(1.0, 0.3), (1.0, 0.7)])

    def test_nonpositive_weight_rejected(self):
        with pytest.raises(ValueError, match="positive"):
            make_measure([(0.0, 0.0), (1.0, 1.0)])

    def test_bad_total_weight_rejected(self):
        with pytest.raises(ValueError, match="sum"):
            make_measure([(0.0, 0.5), (1.0, 0.3)])

    def test_small_deviation_renormalized(self):
        m = make_measure([(0.0, 0.5 + 2e-10), (1.0, 0.5)])
        assert abs(sum(m.weights) - 1.0) < 1e-15

    def test_nonfinite_location_rejected(self):
        with pytest.raises(ValueError, match="finite"):
            make_measure([(float("inf"), 1.0)])

    @given(
        st.lists(
            st.tuples(
                st.integers(min_value=-50, max_value=50),
                st.floats(min_value=0.01, max_value=1.0),
            ),
            min_size=1,
            max_size=6,
            unique_by=lambda t: t[0],
        )
    )
    @settings(max_examples=60, deadline=None)
    def test_invariants(self, pairs):
        total = sum(p for _, p in pairs)
        pairs = [(a, p / total) for a, p in pairs]
        m = make_measure(pairs)
        locs = m.locations
        assert np.all(np.diff(locs) > 0)
        assert abs(m.weights.sum() - 1.0) <= 1e-12
        assert np.all(m.weights > 0)


class TestParseAtoms:
    def test_roundtrip(self):
        m = parse_atoms("-2:0.5,2:0.5")
        assert m.atoms == ((-2.0, 0.5), (2.0, 0.5))

    @pytest.mark.parametrize("bad", ["2:", "", "1;0.5", "a:b", "1:0.5,,2:0.5"])
    def test_malformed(self, bad):
        with pytest.raises(ValueError):
            parse_atoms(bad)


class TestRealizeDiagonal:
    def test_delta0(self, delta0):
        d = realize_diagonal(delta0, 5)
        assert list(d.entries) == [0.0] * 5
        assert d.realized_weights.tolist() == [1.0]

    def test_even_split(self, two_atom):
        d = realize_diagonal(two_atom, 4)
        assert list(d.entries) == [-2.0, -2.0, 2.0, 2.0]
        assert d.realized_weights.tolist() == [0.5, 0.5]

    def test_odd_split_tie_break_to_lower_location(self, two_atom):
        d = realize_diagonal(two_atom, 5)
        assert d.multiplicities == (3, 2)
        assert np.max(np.abs(d.realized_weights - 0.5)) == pytest.approx(0.1)

    def test_too_small_n(self, three_atom):
        with pytest.raises(ValueError, match="atom count"):
            realize_diagonal(three_atom, 2)

    def test_deterministic(self, three_atom):
        a = realize_diagonal(three_atom, 17)
        b = realize_diagonal(three_atom, 17)
        assert a.multiplicities == b.multiplicities

    def test_weight_error_bound_sweep(self, three_atom):
        l = three_atom.atom_count
        for n in [3, 4, 7, 19, 100, 1234, 99999, 100000]:
            d = realize_diagonal(three_atom, n)
            assert sum(d.multiplicities) == n
            err = np.max(np.abs(d.realized_weights - three_atom.weights))
            assert err <= l / n
            assert err < 1.0 / n + 1e-15  # largest remainder is even tighter

    def test_entries_sorted(self, three_atom):
        d = realize_diagonal(three_atom, 23)
        assert np.all(np.diff(d.entries) >= 0)


class TestMoments:
    def test_gaussian_real_against_quadrature(self):
        g = EntryDistribution("gaussian-real")
        for k in range(0, 9):
            oracle = quad(lambda x, k=k: x**k * norm.pdf(x), -np.inf, np.inf)[0]
            assert g.moment(k, 0) == pytest.approx(oracle, abs=1e-9)
        assert g.moment(2, 0) == 1.0
        assert g.moment(3, 0) == 0.0
        assert g.moment(4, 0) == 3.0
        assert g.moment(0, 1) == 0.0  # no imaginary part

    def test_rademacher_by_enumeration(self):
        r = EntryDistribution("rademacher")
        for m in range(9):
            oracle = 0.5 * (1.0**m) + 0.5 * ((-1.0) ** m)
            assert r.moment(m, 0) == pytest.approx(oracle)
        assert r.moment(2, 0) == 1.0
        assert r.moment(4, 0) == 1.0

    def test_matched4_by_enumeration(self):
        # atoms +-sqrt(3) w.p. 1/6 and 0 w.p. 2/3 solve E x^2 = 1, E x^4 = 3
        d = EntryDistribution("matched4-real")
        atoms = [(np.sqrt(3), 1 / 6), (-np.sqrt(3), 1 / 6), (0.0, 2 / 3)]
        for m in range(9):
            oracle = sum(p * x**m for x, p in atoms)
            assert d.moment(m, 0) == pytest.approx(oracle, abs=1e-12)
        assert d.moment(2, 0) == pytest.approx(1.0)
        assert d.moment(4, 0) == pytest.approx(3.0)

    def test_gaussian_complex_mixed(self):
        gc = EntryDistribution("gaussian-complex")
        # Re, Im independent N(0, 1/2)
        assert gc.moment(2, 0) == pytest.approx(0.5)
        assert gc.moment(0, 2) == pytest.approx(0.5)
        assert gc.moment(2, 2) == pytest.approx(0.25)
        assert gc.moment(1, 1) == 0.0
        # E |zeta|^2 = 1
        assert gc.moment(2, 0) + gc.moment(0, 2) == pytest.approx(1.0)

    def test_moments_mapping(self):
        got = moments(EntryDistribution("gaussian-real"), 4)
        assert got[(2, 0)] == 1.0 and got[(4, 0)] == 3.0 and got[(3, 0)] == 0.0
        assert set(got) == {(m, l) for m in range(5) for l in range(5 - m)}

    def test_moment_cap(self):
        with pytest.raises(ValueError, match="cap"):
            moments(EntryDistribution("gaussian-real"), 9)

    def test_discrete_law(self):
        d = EntryDistribution(
            "discrete", points=(3.0, -1.0 / 3.0), probabilities=(0.1, 0.9)
        )
        assert d.moment(1, 0) == pytest.approx(0.0, abs=1e-15)
        assert d.moment(2, 0) == pytest.approx(1.0)

    def test_discrete_validation(self):
        with pytest.raises(ValueError, match="mean"):
            EntryDistribution("discrete", points=(1.0, 2.0), probabilities=(0.5, 0.5))


class TestMatchOrder:
    def test_identical_laws_cap(self):
        g = EntryDistribution("gaussian-real")
        assert match_order(g, g) == 8

    def test_rademacher_vs_gaussian(self):
        # fourth moments 1 vs 3 differ
        assert match_order(EntryDistribution("rademacher"), EntryDistribution("gaussian-real")) == 3

    def test_matched4_vs_gaussian(self):
        # orders 1-4 agree by construction, order 5 is all zeros on both
        # sides, and the sixth moments 9 vs 15 differ
        assert match_order(EntryDistribution("matched4-real"), EntryDistribution("gaussian-real")) == 5
        assert match_order(EntryDistribution("matched4-complex"), EntryDistribution("gaussian-complex")) == 5

    def test_symmetric(self):
        a = EntryDistribution("rademacher")
        b = EntryDistribution("gaussian-real")
        assert match_order(a, b) == match_order(b, a)

    def test_mean_shift_breaks_matching(self):
        g = EntryDistribution("gaussian-complex")
        s = EntryDistribution("gaussian-complex", mean_shift=0.5)
        assert match_order(g, s) == 0

    def test_variance_matters(self):
        g1 = EntryDistribution("gaussian-real", variance=1.0)
        g2 = EntryDistribution("gaussian-real", variance=2.0)
        assert match_order(g1, g2) == 1


class TestStieltjesOfAtoms:
    def test_delta0(self, delta0):
        assert stieltjes_of_atoms(delta0, 1j) == pytest.approx(1j)

    def test_sqrt2_closed_form(self):
        m = make_measure([(-np.sqrt(2), 0.5), (np.sqrt(2), 0.5)])
        for z in [0.3 + 0.7j, -1.2 + 0.05j, 2j, 5 + 1e-3j]:
            assert stieltjes_of_atoms(m, z) == pytest.approx(z / (2 - z * z), rel=1e-13)

    def test_two_atom_at_2i(self, two_atom):
        # 0.5/(-2-2i) + 0.5/(2-2i), cross-checked by direct summation
        got = stieltjes_of_atoms(two_atom, 2j)
        oracle = sum(
            p / (a - 2j) for a, p in [(-2.0, 0.5), (2.0, 0.5)]
        )
        assert got == pytest.approx(oracle)
        assert got == pytest.approx(0.25j)

    def test_real_axis_rejected(self, two_atom):
        with pytest.raises(ValueError):
            stieltjes_of_atoms(two_atom, 1.0 + 0j)

    def test_herglotz_and_symmetry(self, two_atom):
        rng = np.random.default_rng(5)
        for _ in range(50):
            z = complex(rng.uniform(-4, 4), 10 ** rng.uniform(-3, 2))
            g = stieltjes_of_atoms(two_atom, z)
            assert g.imag > 0
            # symmetric measure: g(-conj(z)) = -conj(g(z))
            assert stieltjes_of_atoms(two_atom, -z.conjugate()) == pytest.approx(-g.conjugate())
