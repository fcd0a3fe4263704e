import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from reslab.coeffs import zeta_source
from reslab.errors import DegenerateInputError, InvariantViolation, ValidationError
from reslab.leval import dyadic, fill_grid
from reslab.leval.grid import CriticalLineGrid
from reslab.moments import (
    MomentReport,
    SmoothWeight,
    compute_V,
    detect_simultaneous,
    detection_function,
    gl2_diagonal_double_sum,
    gl2_diagonal_product,
    lower_bound_product,
    predicted_exponent,
    predicted_threshold,
    quadrature_moment,
    second_moment_prediction,
    upper_bound_product_single,
)
from reslab.resonator import Resonator, ResonatorSpec


def _res(sources, window, X=1e6, L=None):
    return Resonator.build(ResonatorSpec(m=len(sources), X=X, L_override=L, window=window), sources)


@pytest.fixture(scope="module")
def zeta_grid():
    return fill_grid([zeta_source()], T=1e4, h=dyadic(0.02))


class TestWeights:
    def test_indicator(self):
        w = SmoothWeight()
        assert w(np.array([0.5, 1.0, 1.5, 2.0, 2.5])).tolist() == [0, 1, 1, 1, 0]
        assert w.mass() == 1

    def test_bump(self):
        w = SmoothWeight("bump", (1, 2))
        assert w(np.array([1.0, 2.0])).tolist() == [0, 0]
        assert w(np.array([1.5]))[0] == 1
        assert 0 < w.mass() < 1

    def test_validation(self):
        with pytest.raises(ValidationError):
            SmoothWeight("box")
        with pytest.raises(ValidationError):
            SmoothWeight(support=(2, 1))


class TestQuadrature:
    def _grid(self, T=1000.0, h=0.125):
        pts = T + h * np.arange(int(T / h) + 1)
        return CriticalLineGrid(T=T, h=h, points=pts)

    def test_constant(self):
        g = self._grid()
        g.R = np.ones(len(g))
        assert quadrature_moment(g).value == pytest.approx(1, rel=1e-12)

    def test_single_prime(self, zeta):
        res = _res([zeta], (100, 102), X=1e3, L=10.0)
        g = self._grid(T=1e4, h=dyadic(0.05))
        g.R = res.eval_R_grid(g.points)
        rp = res.coefficient(101).real
        v = quadrature_moment(g).value
        assert abs(v - (1 + rp**2)) < 2 / (1e4 * math.log(101))

    def test_zeta_second_moment(self, zeta_grid):
        v = quadrature_moment(zeta_grid, ["zeta"], use_R=False)
        T = zeta_grid.T
        ref = math.log(2 * T / math.pi) + 2 * np.euler_gamma - 1
        assert v.value == pytest.approx(ref, rel=0.02)
        assert v.warning is None

    def test_missing(self, zeta_grid):
        with pytest.raises(ValidationError):
            quadrature_moment(zeta_grid, ["chi"], use_R=False)
        with pytest.raises(ValidationError):
            quadrature_moment(zeta_grid, ["zeta"])


class TestEulerProducts:
    def test_empty_window(self, zeta):
        res = _res([zeta], (100, 102), X=50, L=10.0)
        res.primes, res.r_p, res.a = res.primes[:0], res.r_p[:0], res.a[:0]
        assert lower_bound_product(res) == 1

    def test_single_prime(self, zeta):
        res = _res([zeta], (100, 102), L=10.0)
        r = res.coefficient(101).real
        assert lower_bound_product(res) == pytest.approx(1 + r * r + 2 * r / math.sqrt(101))

    def test_log_sum(self, zeta, chi3):
        res = _res([zeta, chi3], (100, 200))
        terms = [
            math.log(1 + abs(r) ** 2 + 2 * (r * np.conj(a)).real / math.sqrt(p)) for p, r, a in zip(res.primes.tolist(), res.r_p, res.a)
        ]
        assert math.log(lower_bound_product(res)) == pytest.approx(sum(terms), rel=1e-13)

    def test_single_source(self, zeta, chi3):
        one = _res([zeta], (100, 200))
        assert upper_bound_product_single(one, one.a) == lower_bound_product(one)
        two = _res([zeta, chi3], (100, 200))
        each = two.combined.each_primes(two.primes)
        assert upper_bound_product_single(two, each[0]) < lower_bound_product(two)

    def test_gl2_single_prime(self, delta):
        res = _res([delta], (100, 102), L=10.0)
        lam = delta.a_primes(res.primes)
        r = res.r_p[0].real
        z = lam[0] * (1 - 1 / 101) / (1 - 101**-2)
        assert gl2_diagonal_product(res, lam) == pytest.approx(1 + r * r + 2 * r * z / math.sqrt(101))
        assert gl2_diagonal_product(res, np.zeros(1)) == pytest.approx(1 + r * r)

    @pytest.mark.parametrize("window", [(100, 110), (200, 230), (1000, 1020)])
    def test_gl2_double_sum(self, delta, window):
        res = _res([delta], window, X=1e12, L=4.0)
        assert 3 <= len(res.primes) <= 4
        lam = delta.a_primes(res.primes)
        assert abs(gl2_diagonal_double_sum(res, lam) - gl2_diagonal_product(res, lam)) < 1e-10


class TestSecondMomentPrediction:
    def test_trivial_resonator(self, zeta):
        res = _res([zeta], (100, 102), X=50, L=10.0)
        T = 1e4
        ref = math.log(2 * T / math.pi) + 2 * np.euler_gamma - 1
        assert second_moment_prediction(res, zeta, T) == pytest.approx(ref, rel=1e-12)

    def test_matches_quadrature(self, zeta, zeta_grid):
        res = _res([zeta], (10, 300), X=1e4)
        zeta_grid.R = res.eval_R_grid(zeta_grid.points)
        measured = quadrature_moment(zeta_grid, ["zeta"]).value
        predicted = second_moment_prediction(res, zeta, zeta_grid.T)
        assert measured / predicted == pytest.approx(1, abs=0.03)
        zeta_grid.R = None

    def test_rejects(self, delta, zeta):
        res = _res([zeta], (100, 102), X=50, L=10.0)
        with pytest.raises(ValidationError):
            second_moment_prediction(res, delta, 1e4)
        with pytest.raises(ValidationError):
            second_moment_prediction(res, zeta, 1e4, SmoothWeight("bump"))


class TestDetection:
    def test_examples(self):
        x = np.array([[9.0, 1.0], [9.0, 9.0]])
        d = detection_function(x, 2.0)
        assert d[0] == 45 and d[1] < 0

    @settings(max_examples=300, deadline=None)
    @given(
        st.integers(1, 4).flatmap(lambda m: st.lists(st.floats(0, 1e6, allow_nan=False), min_size=m, max_size=m)),
        st.floats(1e-6, 1e6),
    )
    def test_soundness(self, xs, V):
        x = np.array(xs)[:, None]
        if detection_function(x, V)[0] > 0:
            assert x.min() > V

    def test_grid_detection(self, zeta, chi3):
        g = fill_grid([zeta, chi3], T=1000.0, h=dyadic(0.1), span=0.2)
        V = 1.5
        hits = detect_simultaneous(g, V)
        x = np.array([np.abs(v) ** 2 for v in g.values.values()])
        mins = x.min(axis=0)
        assert set(hits.tolist()) <= set(g.points[mins > V].tolist())
        assert len(hits) > 0

    def test_invariant(self):
        g = CriticalLineGrid(T=10.0, h=1.0, points=np.array([10.0]), values={"a": np.array([1.0]), "b": np.array([1.0])})
        assert len(detect_simultaneous(g, 0.1)) == 1
        g.values["a"] = np.array([0.0])
        assert len(detect_simultaneous(g, 0.1)) == 0

    def test_invariant_guard(self, monkeypatch):
        import reslab.moments as mod

        g = CriticalLineGrid(T=10.0, h=1.0, points=np.array([10.0]), values={"a": np.array([0.5]), "b": np.array([4.0])})
        monkeypatch.setattr(mod, "detection_function", lambda x, V: np.ones(x.shape[1]))
        with pytest.raises(InvariantViolation):
            mod.detect_simultaneous(g, 1.0)


class TestThreshold:
    def test_compute_V(self):
        assert compute_V(12.0, [1.5, 1.5]) == 12.0 / 6
        assert compute_V(12.0, [3.0, 3.0]) == compute_V(12.0, [1.5, 1.5]) / 2
        with pytest.raises(DegenerateInputError):
            compute_V(1.0, [0.0, 0.0])

    def test_predicted_threshold(self):
        assert predicted_threshold(2, math.exp(100)) == pytest.approx(727.855318, rel=1e-8)
        with pytest.raises(ValidationError):
            predicted_threshold(2, 10)

    def test_exponents(self):
        assert predicted_exponent("dirichlet_pair").c == math.sqrt(17 / 66)
        assert predicted_exponent("product").c == math.sqrt(2)
        assert predicted_exponent("modq").c == 1 / (12 * math.sqrt(10))
        assert predicted_exponent("modq_product").c == 1 / (6 * math.sqrt(10))
        assert predicted_exponent("general", Delta=0.5, m=2).c == 0.5
        gl2 = predicted_exponent("gl2", theta=7 / 64)
        assert "differ" in gl2.notes[0]
        assert predicted_exponent("gl2", theta=0).c == math.sqrt(1 / 12)
        with pytest.raises(ValidationError):
            predicted_exponent("unknown")
        with pytest.raises(ValidationError):
            predicted_exponent("general")

    def test_report(self):
        rep = MomentReport("R2", 2.0, 4.0)
        assert rep.ratio == 0.5
        assert rep.as_dict()["ratio"] == 0.5
        assert MomentReport("x", 1.0, 0.0).ratio == math.inf
