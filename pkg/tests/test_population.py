import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from funcsurvey.population import (
    Curve,
    Grid,
    Population,
    PopulationFormatError,
    inner_product,
    load_population,
    save_population,
)

finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)


class TestGrid:
    def test_nodes_right_endpoints(self):
        g = Grid(2.0, 4)
        np.testing.assert_allclose(g.nodes, [0.5, 1.0, 1.5, 2.0])
        assert g.step == 0.5

    @pytest.mark.parametrize("T,r", [(0.0, 3), (-1.0, 3), (1.0, 0)])
    def test_invalid(self, T, r):
        with pytest.raises(ValueError):
            Grid(T, r)

    def test_nodes_equally_spaced(self):
        d = np.diff(Grid(30.0, 48).nodes)
        assert np.all(d > 0)
        np.testing.assert_allclose(d, 30.0 / 48)


class TestInnerProduct:
    def test_constant_one(self):
        g = Grid(1.0, 100)
        one = Curve(np.ones(100), g)
        assert inner_product(one, one) == pytest.approx(1.0, abs=1e-14)

    def test_zero(self):
        g = Grid(1.0, 5)
        f = Curve(np.zeros(5), g)
        h = Curve(np.arange(5.0), g)
        assert inner_product(f, h) == 0.0

    def test_hand_quadrature(self):
        g = Grid(1.0, 4)
        f = Curve(g.nodes, g)
        # direct summation, the oracle
        expected = 0.25 * sum(t * t for t in (0.25, 0.5, 0.75, 1.0))
        assert expected == 0.46875
        assert inner_product(f, f) == pytest.approx(expected, abs=1e-15)

    def test_grid_mismatch(self):
        f = Curve(np.ones(4), Grid(1.0, 4))
        h = Curve(np.ones(4), Grid(2.0, 4))
        with pytest.raises(ValueError):
            inner_product(f, h)

    def test_curve_shape_and_finite(self):
        g = Grid(1.0, 3)
        with pytest.raises(ValueError):
            Curve(np.ones(4), g)
        with pytest.raises(ValueError):
            Curve(np.array([1.0, np.nan, 2.0]), g)

    @settings(max_examples=60, deadline=None)
    @given(arrays(float, 7, elements=finite), arrays(float, 7, elements=finite),
           arrays(float, 7, elements=finite), st.floats(-10, 10), st.floats(-10, 10))
    def test_symmetric_bilinear_positive(self, a, b, c, alpha, beta):
        g = Grid(1.5, 7)
        fa, fb, fc = (Curve(v, g) for v in (a, b, c))
        assert inner_product(fa, fb) == inner_product(fb, fa)
        lhs = inner_product(Curve(alpha * a + beta * b, g), fc)
        rhs = alpha * inner_product(fa, fc) + beta * inner_product(fb, fc)
        scale = 1.0 + g.step * np.sum((np.abs(alpha * a) + np.abs(beta * b)) * np.abs(c))
        assert abs(lhs - rhs) <= 1e-12 * scale
        assert inner_product(fa, fa) >= 0.0


class TestPopulation:
    def test_validation(self):
        g = Grid(1.0, 2)
        with pytest.raises(ValueError):
            Population(g, np.ones((0, 2)), np.ones((0, 1)), np.ones(0))
        with pytest.raises(ValueError, match="positive"):
            Population(g, np.ones((2, 2)), np.ones((2, 1)), np.array([1.0, 0.0]))
        with pytest.raises(ValueError):
            Population(g, np.ones((2, 3)), np.ones((2, 1)), np.ones(2))

    def test_immutable(self, small_pop):
        with pytest.raises(ValueError):
            small_pop.Y[0, 0] = 1.0

    def test_mean_curve(self, small_pop):
        np.testing.assert_allclose(small_pop.mean_curve, small_pop.Y.mean(axis=0))


class TestCsv:
    def test_roundtrip_bytes(self, tmp_path, small_pop):
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        save_population(small_pop, p1)
        pop = load_population(p1)
        save_population(pop, p2)
        assert p1.read_bytes() == p2.read_bytes()
        np.testing.assert_array_equal(pop.Y, small_pop.Y)
        np.testing.assert_array_equal(pop.Z, small_pop.Z)
        np.testing.assert_array_equal(pop.X, small_pop.X)
        assert pop.grid == small_pop.grid

    def test_minimal_header(self, tmp_path):
        pop = Population(Grid(1.0, 1), np.array([[2.5]]), np.array([[1.0]]), np.array([3.0]))
        p = tmp_path / "one.csv"
        save_population(pop, p)
        lines = p.read_text().splitlines()
        assert lines[0] == "# grid T=1 r=1"
        assert lines[1] == "id,x,z1,y1"
        assert len(lines) == 3

    def test_three_rows(self, tmp_path):
        p = tmp_path / "p.csv"
        p.write_text("# grid T=1 r=2\nid,x,z1,y1,y2\na,1,1,0.5,0.7\nb,2,2,1,2\nc,3,3,1,1\n")
        pop = load_population(p)
        assert (pop.N, pop.d, pop.grid.r) == (3, 1, 2)
        assert pop.ids == ("a", "b", "c")

    def test_zero_size(self, tmp_path):
        p = tmp_path / "p.csv"
        p.write_text("# grid T=1 r=2\nid,x,z1,y1,y2\na,1,1,0.5,0.7\nb,0,2,1,2\n")
        with pytest.raises(PopulationFormatError, match=r"size must be positive \(row 2\)"):
            load_population(p)

    @pytest.mark.parametrize(
        "body,match",
        [
            ("id,x,z1,y1\na,1,1,0.5,0.7\n", "header"),
            ("id,x,z1,y1,y2\na,1,1,0.5\n", "row 1"),
            ("id,x,z1,y1,y2\na,1,1,nan,0.7\n", "row 1"),
            ("id,x,z1,y1,y2\na,1,1,abc,0.7\n", "row 1, column y1"),
            ("id,x,y1,y2\na,1,0.5,0.7\n", "header"),
        ],
    )
    def test_malformed(self, tmp_path, body, match):
        p = tmp_path / "p.csv"
        p.write_text("# grid T=1 r=2\n" + body)
        with pytest.raises(PopulationFormatError, match=match):
            load_population(p)

    def test_missing_grid_line(self, tmp_path):
        p = tmp_path / "p.csv"
        p.write_text("id,x,z1,y1\na,1,1,1\n")
        with pytest.raises(PopulationFormatError):
            load_population(p)

    def test_no_rows(self, tmp_path):
        p = tmp_path / "p.csv"
        p.write_text("# grid T=1 r=1\nid,x,z1,y1\n")
        with pytest.raises(PopulationFormatError):
            load_population(p)
