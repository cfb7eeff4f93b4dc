import math

import pytest
from hypothesis import given, seed, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from measures import NonIntegrable, GammaMismatch
from measures.measure_1d import (
    Measure1D, DensityPiece, PowerTerm, atomic, dirac, lebesgue, moment, integrate_power,
    pushforward_power, tilt, divide_by_t, multiply_by_power, restrict_off_zero, linear_combine,
    is_nonnegative, measure_leq, as_positive, scale
)

REL_TOLERANCE = 1e-12


def atoms_equal(mu, expected, atol=1e-12):
    assert len(mu.atoms) == len(expected)
    for (loc, mass), (want_loc, want_mass) in zip(mu.atoms, expected):
        assert loc == pytest.approx(want_loc, abs=atol)
        assert mass == pytest.approx(want_mass, abs=atol)


# strategies: positive measures with up to 3 well separated atoms in (0, 1] and optionally a density piece
ATOM_LOCATIONS = [0.1, 0.25, 0.4, 0.5, 0.7, 0.9, 1.0]
atom_lists = st.dictionaries(
    keys=st.sampled_from(ATOM_LOCATIONS), values=st.floats(min_value=0.01, max_value=1.0),
    min_size=1, max_size=3
).map(lambda atoms: sorted(atoms.items()))
densities = st.one_of(
    st.none(),
    st.tuples(st.floats(min_value=0.01, max_value=2.0), st.floats(min_value=0.0, max_value=3.0))
)


def build_measure(atoms, density):
    mu = atomic(atoms)
    if density is None:
        return mu
    coefficient, exponent = density
    piece = Measure1D(pieces=(DensityPiece(0.0, 1.0, (PowerTerm(coefficient, exponent),)),))
    return linear_combine([1.0, 1.0], [mu, piece])


class TestMoments:
    def test_moment_of_point_mass(self, point_mass):
        assert moment(point_mass, 5) == 1.0

    def test_moment_of_lebesgue(self):
        assert moment(lebesgue(), 2) == pytest.approx(1.0 / 3.0, rel=REL_TOLERANCE)

    def test_moment_of_s_a_measure(self, s_a_measure):
        assert moment(s_a_measure, 3) == pytest.approx(0.49, rel=REL_TOLERANCE)

    def test_negative_order_rejected(self, point_mass):
        with pytest.raises(ValueError):
            moment(point_mass, -1)

    def test_log_integral_for_exponent_minus_one(self):
        mu = Measure1D(pieces=(DensityPiece(0.5, 1.0, (PowerTerm(1.0, 0.0),)),))
        assert integrate_power(mu, -1.0) == pytest.approx(math.log(2.0), rel=REL_TOLERANCE)


class TestIntegratePower:
    def test_inverse_of_point_mass(self, point_mass):
        assert integrate_power(point_mass, -1.0) == 1.0

    def test_inverse_of_two_atoms(self, two_atom):
        assert integrate_power(two_atom, -1.0) == pytest.approx(2.5, rel=REL_TOLERANCE)

    def test_atom_at_zero_gives_infinity(self):
        assert integrate_power(atomic([(0.0, 0.75), (1.0, 0.25)]), -1.0) == math.inf

    def test_non_integrable_density(self):
        with pytest.raises(NonIntegrable):
            integrate_power(lebesgue(), -1.0)

    def test_density_touching_zero_must_be_integrable(self):
        with pytest.raises(NonIntegrable):
            DensityPiece(0.0, 1.0, (PowerTerm(1.0, -1.0),))


class TestPushforward:
    def test_atom_moves(self):
        atoms_equal(pushforward_power(dirac(0.5), 2), [(0.25, 1.0)])

    def test_fixed_point(self, point_mass):
        atoms_equal(pushforward_power(point_mass, 7), [(1.0, 1.0)])

    def test_lebesgue_square(self):
        pushed = pushforward_power(lebesgue(), 2)
        term = pushed.pieces[0].terms[0]
        assert term.coefficient == pytest.approx(0.5)
        assert term.exponent == pytest.approx(-0.5)
        assert moment(pushed, 1) == pytest.approx(1.0 / 3.0, rel=REL_TOLERANCE)

    @seed(7)
    @settings(max_examples=60, deadline=None)
    @given(atoms=atom_lists, density=densities, m=st.integers(min_value=1, max_value=5))
    def test_pushforward_moment_identity(self, atoms, density, m):
        mu = build_measure(atoms, density)
        pushed = pushforward_power(mu, m)
        for k in range(11):
            assert_allclose(moment(pushed, k), moment(mu, m * k), rtol=REL_TOLERANCE, atol=1e-300)


class TestTilt:
    def test_point_mass(self, point_mass):
        atoms_equal(tilt(point_mass, 3, 1.0), [(1.0, 1.0)])

    def test_s_a_restriction(self):
        a2 = 0.49
        mu = atomic([(0.0, 1.0 - a2), (1.0, a2)])
        atoms_equal(tilt(mu, 1, a2), [(1.0, 1.0)])

    def test_two_atoms(self, two_atom):
        atoms_equal(tilt(two_atom, 1, 0.625), [(0.25, 0.2), (1.0, 0.8)])

    def test_gamma_mismatch(self, two_atom):
        with pytest.raises(GammaMismatch):
            tilt(two_atom, 1, 0.6)

    @seed(11)
    @settings(max_examples=60, deadline=None)
    @given(atoms=atom_lists, density=densities, n=st.integers(min_value=0, max_value=6))
    def test_tilt_is_probability(self, atoms, density, n):
        mu = build_measure(atoms, density)
        tilted = tilt(mu, n, moment(mu, n))
        assert tilted.total_mass() == pytest.approx(1.0, abs=1e-12)


class TestDivideByT:
    def test_point_mass(self, point_mass):
        atoms_equal(divide_by_t(point_mass), [(1.0, 1.0)])

    def test_two_atoms(self, two_atom):
        atoms_equal(divide_by_t(two_atom), [(0.25, 2.0), (1.0, 0.5)])

    def test_charge_at_zero(self):
        with pytest.raises(NonIntegrable):
            divide_by_t(atomic([(0.0, 0.75), (1.0, 0.25)]))

    @seed(13)
    @settings(max_examples=40, deadline=None)
    @given(atoms=atom_lists, density=densities)
    def test_inverse_of_multiplication(self, atoms, density):
        mu = build_measure(atoms, density)
        roundtrip = divide_by_t(multiply_by_power(mu, 1))
        for k in range(8):
            assert_allclose(moment(roundtrip, k), moment(mu, k), rtol=1e-12)

    def test_mass_equals_inverse_integral(self, two_atom):
        assert divide_by_t(two_atom).total_mass() == pytest.approx(integrate_power(two_atom, -1.0))


class TestLinearCombine:
    def test_single_atom_difference(self):
        a2 = 0.49
        combined = linear_combine([1.0, -a2], [dirac(1.0), dirac(1.0)])
        atoms_equal(combined, [(1.0, 0.51)])

    def test_difference_is_zero(self, two_atom):
        assert linear_combine([1.0, -1.0], [two_atom, two_atom]).is_zero()

    def test_signed_result(self):
        combined = linear_combine([1.0, -2.0], [atomic([(0.0, 1.0), (1.0, 1.0)]), dirac(0.0)])
        atoms_equal(combined, [(0.0, -1.0), (1.0, 1.0)])
        assert combined.signed

    def test_positive_combination_stays_positive(self, two_atom):
        assert not linear_combine([0.5, 0.5], [two_atom, dirac(1.0)]).signed

    def test_overlapping_densities_refined(self):
        left = Measure1D(pieces=(DensityPiece(0.0, 0.6, (PowerTerm(1.0, 0.0),)),))
        right = Measure1D(pieces=(DensityPiece(0.4, 1.0, (PowerTerm(2.0, 0.0),)),))
        combined = linear_combine([1.0, 1.0], [left, right])
        assert [(p.lo, p.hi) for p in combined.pieces] == [(0.0, 0.4), (0.4, 0.6), (0.6, 1.0)]
        assert_allclose([piece.integrate_power(0.0) for piece in combined.pieces], [0.4, 0.6, 0.8])

    @seed(17)
    @settings(max_examples=40, deadline=None)
    @given(first=atom_lists, second=atom_lists, density=densities,
           coeffs=st.tuples(st.floats(min_value=-2.0, max_value=2.0), st.floats(min_value=-2.0, max_value=2.0)))
    def test_moment_linearity(self, first, second, density, coeffs):
        mu, nu = build_measure(first, density), atomic(second)
        combined = linear_combine(list(coeffs), [mu, nu])
        for k in range(21):
            expected = coeffs[0] * moment(mu, k) + coeffs[1] * moment(nu, k)
            scale_k = abs(coeffs[0]) * moment(mu, k) + abs(coeffs[1]) * moment(nu, k)
            assert abs(moment(combined, k) - expected) <= 1e-12 * scale_k + 1e-13


class TestPositivity:
    def test_positive_atom(self):
        verdict = is_nonnegative(linear_combine([1.0, -0.49], [dirac(1.0), dirac(1.0)]))
        assert verdict.passed
        assert verdict.margin == pytest.approx(0.51)

    def test_negative_atom_witness(self):
        verdict = is_nonnegative(linear_combine([-1.0, 1.0], [dirac(0.0), dirac(1.0)]))
        assert not verdict.passed
        assert verdict.witness == (0.0, -1.0)

    def test_negative_density_witness(self):
        mu = Measure1D(pieces=(DensityPiece(0.0, 1.0, (PowerTerm(0.5, 0.0), PowerTerm(-1.0, 1.0))),),
                       signed=True)
        verdict = is_nonnegative(mu)
        assert not verdict.passed
        assert verdict.witness[0] == pytest.approx(1.0)
        assert verdict.witness[1] == pytest.approx(-0.5)

    def test_singular_negative_density_at_zero(self):
        mu = Measure1D(pieces=(DensityPiece(0.0, 1.0, (PowerTerm(-1.0, -0.5), PowerTerm(5.0, 0.0))),),
                       signed=True)
        verdict = is_nonnegative(mu)
        assert not verdict.passed
        assert verdict.witness[0] == 0.0

    def test_zero_measure_passes(self):
        assert is_nonnegative(Measure1D()).passed

    @seed(19)
    @settings(max_examples=40, deadline=None)
    @given(atoms=atom_lists, density=densities)
    def test_positive_measures_pass(self, atoms, density):
        assert is_nonnegative(build_measure(atoms, density)).passed

    def test_tolerance_from_environment(self, monkeypatch):
        monkeypatch.delenv("SHIFTLAB_TOL", raising=False)
        slightly_negative = linear_combine([1.0, -1.0 - 1e-7], [dirac(1.0), dirac(1.0)])
        assert not is_nonnegative(slightly_negative).passed
        monkeypatch.setenv("SHIFTLAB_TOL", "1e-6")
        assert is_nonnegative(slightly_negative).passed

    def test_as_positive(self):
        mu = linear_combine([1.0, -0.5], [dirac(1.0), dirac(1.0)])
        assert mu.signed
        positive = as_positive(mu)
        assert not positive.signed
        atoms_equal(positive, [(1.0, 0.5)])


class TestMeasureOrder:
    def test_leq_holds(self, point_mass):
        assert measure_leq(point_mass, scale(point_mass, 2.0)).passed

    def test_disjoint_support(self):
        assert not measure_leq(dirac(0.0), dirac(1.0)).passed

    def test_phi_comparison(self):
        sigma = atomic([(0.0, 0.64), (1.0, 0.36)])
        verdict = measure_leq(scale(dirac(1.0), 0.49 * 0.64), sigma)
        assert verdict.passed
        assert verdict.margin == pytest.approx(0.0464, abs=1e-12)


class TestSerialization:
    def test_dict_shape(self, two_atom):
        assert two_atom.to_dict() == {"atoms": [[0.25, 0.5], [1.0, 0.5]], "pieces": []}

    def test_from_dict_with_density(self):
        data = {"atoms": [[1.0, 0.5]], "pieces": [{"lo": 0.0, "hi": 1.0, "terms": [[0.5, 0.0]]}]}
        mu = Measure1D.from_dict(data)
        assert not mu.signed
        assert mu.total_mass() == pytest.approx(1.0)
        assert restrict_off_zero(mu) == mu

    def test_from_dict_flags_signed(self):
        assert Measure1D.from_dict({"atoms": [[0.0, -0.1], [1.0, 1.1]]}).signed

    def test_positive_measure_rejects_negative_mass(self):
        with pytest.raises(ValueError):
            Measure1D(atoms=((1.0, -1.0),))
