import math

import pytest
from numpy.testing import assert_allclose

from measures import NonIntegrable
from measures.measure_1d import atomic, dirac, lebesgue, moment
from measures.measure_2d import (
    Measure2D, ProductTerm, product, combine2d, moment2d, marginal_X, marginal_Y, inverse_t_norm, extremal
)


@pytest.fixture
def diagonal_pair():
    """1/2 delta_(1,1) + 1/2 delta_(1/2,1/2)"""
    return combine2d([0.5, 0.5], [product(dirac(1.0), dirac(1.0)), product(dirac(0.5), dirac(0.5))])


class TestMoments:
    def test_product_moment_factorizes(self, two_atom):
        mu = product(two_atom, lebesgue())
        assert moment2d(mu, 2, 3) == pytest.approx(moment(two_atom, 2) * 0.25)

    def test_combination(self, diagonal_pair):
        assert diagonal_pair.moment(1, 1) == pytest.approx(0.5 + 0.5 * 0.25)
        assert diagonal_pair.total_mass() == pytest.approx(1.0)

    def test_negative_index_rejected(self, diagonal_pair):
        with pytest.raises(ValueError):
            moment2d(diagonal_pair, -1, 0)

    def test_positive_measure_rejects_signed_term(self):
        with pytest.raises(ValueError):
            Measure2D(terms=(ProductTerm(-1.0, dirac(1.0), dirac(1.0)),))

    def test_negative_combination_is_signed(self, diagonal_pair):
        assert combine2d([1.0, -1.0], [diagonal_pair, diagonal_pair]).signed


class TestMarginals:
    def test_marginal_x_of_product(self, two_atom, s_a_measure):
        marginal = marginal_X(product(two_atom, s_a_measure, weight=2.0))
        assert_allclose(marginal.atoms, [(0.25, 1.0), (1.0, 1.0)], atol=1e-12)

    def test_marginal_y(self, diagonal_pair):
        assert_allclose(marginal_Y(diagonal_pair).atoms, [(0.5, 0.5), (1.0, 0.5)], atol=1e-12)

    def test_empty(self):
        assert marginal_X(Measure2D()).is_zero()


class TestExtremal:
    def test_norm(self, diagonal_pair):
        assert inverse_t_norm(diagonal_pair) == pytest.approx(1.5)

    def test_extremal_is_probability(self, diagonal_pair):
        mu, norm = extremal(diagonal_pair)
        assert norm == pytest.approx(1.5)
        assert mu.total_mass() == pytest.approx(1.0)
        assert mu.moment(0, 1) == pytest.approx(diagonal_pair.moment(0, 0) / norm)

    def test_slice_at_zero_removed(self):
        mu = product(dirac(1.0), atomic([(0.0, 0.5), (1.0, 0.5)]))
        assert inverse_t_norm(mu, off_zero=False) == math.inf
        measure, norm = extremal(mu)
        assert norm == pytest.approx(0.5)
        assert measure.total_mass() == pytest.approx(1.0)
        assert measure.moment(0, 3) == pytest.approx(1.0)

    def test_all_mass_on_zero_slice(self):
        with pytest.raises(NonIntegrable):
            extremal(product(dirac(1.0), dirac(0.0)))


class TestSerialization:
    def test_dict_shape(self):
        data = product(dirac(1.0), dirac(0.5), weight=0.25).to_dict()
        assert data == {"terms": [{"weight": 0.25,
                                   "s": {"atoms": [[1.0, 1.0]], "pieces": []},
                                   "t": {"atoms": [[0.5, 1.0]], "pieces": []}}]}

    def test_from_dict(self, diagonal_pair):
        restored = Measure2D.from_dict(diagonal_pair.to_dict())
        assert not restored.signed
        for k1, k2 in [(0, 0), (1, 2), (3, 1)]:
            assert restored.moment(k1, k2) == pytest.approx(diagonal_pair.moment(k1, k2))
