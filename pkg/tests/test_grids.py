"""Differential operators: stencils, adjointness, norms, and energies."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flowmri.grids import (
    GRAD_NORM_BOUND,
    check_field,
    grad,
    grad_adjoint,
    phase_coupling_energy,
    phase_double_difference,
    pointwise_norm,
    tv,
)


def naive_grad(f):
    """Independent double-loop forward-difference oracle."""
    n1, n2 = f.shape
    g = np.zeros((2, n1, n2))
    for i in range(n1):
        for j in range(n2):
            if i + 1 < n1:
                g[0, i, j] = f[i + 1, j] - f[i, j]
            if j + 1 < n2:
                g[1, i, j] = f[i, j + 1] - f[i, j]
    return g


def naive_grad_matrix(shape):
    """Dense matrix of the gradient, built by probing unit vectors."""
    n1, n2 = shape
    n = n1 * n2
    cols = []
    for k in range(n):
        e = np.zeros(n)
        e[k] = 1.0
        cols.append(naive_grad(e.reshape(shape)).ravel())
    return np.array(cols).T  # (2n, n)


class TestGrad:
    def test_constant_field_has_zero_gradient(self):
        g = grad(np.full((5, 7), 3.25))
        assert np.all(g == 0.0)

    def test_two_by_two_example(self):
        f = np.array([[0.0, 1.0], [0.0, 1.0]])
        g = grad(f)
        assert np.array_equal(g[0], np.zeros((2, 2)))  # no change down rows
        assert np.array_equal(g[1], np.array([[1.0, 0.0], [1.0, 0.0]]))

    def test_matches_naive_oracle(self):
        rng = np.random.default_rng(0)
        f = rng.standard_normal((6, 5))
        assert np.allclose(grad(f), naive_grad(f), atol=1e-14)

    def test_complex_input_supported(self):
        rng = np.random.default_rng(1)
        f = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        g = grad(f)
        assert np.allclose(g, naive_grad(f.real) + 1j * naive_grad(f.imag))


class TestGradAdjoint:
    def test_zero_maps_to_zero(self):
        assert np.all(grad_adjoint(np.zeros((2, 4, 4))) == 0.0)

    def test_adjoint_identity_random_pairs(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            f = rng.standard_normal((8, 8))
            y = rng.standard_normal((2, 8, 8))
            lhs = np.sum(grad(f) * y)
            rhs = np.sum(f * grad_adjoint(y))
            scale = np.linalg.norm(f) * np.linalg.norm(y)
            assert abs(lhs - rhs) <= 1e-12 * scale

    def test_composition_matches_dense_laplacian_of_delta(self):
        shape = (5, 5)
        delta = np.zeros(shape)
        delta[2, 2] = 1.0
        G = naive_grad_matrix(shape)
        expected = (G.T @ (G @ delta.ravel())).reshape(shape)
        got = grad_adjoint(grad(delta))
        assert np.allclose(got, expected, atol=1e-13)
        # interior 5-point Laplacian stencil of the delta
        assert got[2, 2] == pytest.approx(4.0)
        for i, j in ((1, 2), (3, 2), (2, 1), (2, 3)):
            assert got[i, j] == pytest.approx(-1.0)


class TestPointwiseNorm:
    def test_three_four_five(self):
        y = np.stack([np.full((3, 3), 3.0), np.full((3, 3), 4.0)])
        assert np.allclose(pointwise_norm(y), 5.0)

    def test_zero(self):
        assert np.all(pointwise_norm(np.zeros((2, 3, 3))) == 0.0)

    def test_unit_diagonal(self):
        y = np.ones((2, 4, 4))
        assert np.allclose(pointwise_norm(y), np.sqrt(2.0))

    @given(st.integers(0, 1000))
    @settings(max_examples=20, deadline=None)
    def test_triangle_inequality(self, seed):
        rng = np.random.default_rng(seed)
        a = rng.standard_normal((2, 5, 5))
        b = rng.standard_normal((2, 5, 5))
        lhs = pointwise_norm(a + b)
        rhs = pointwise_norm(a) + pointwise_norm(b)
        assert np.all(lhs <= rhs + 1e-12)


class TestTv:
    def test_constant_is_zero(self):
        assert tv(np.full((6, 6), 2.0), weight=3.0) == 0.0

    def test_two_by_two_example(self):
        assert tv(np.array([[0.0, 1.0], [0.0, 1.0]]), weight=1.0) == pytest.approx(2.0)

    def test_nonconstant_is_positive(self):
        rng = np.random.default_rng(3)
        f = rng.standard_normal((5, 5))
        assert tv(f) > 0.0

    @given(st.floats(0.0, 10.0), st.integers(0, 1000))
    @settings(max_examples=20, deadline=None)
    def test_positive_homogeneity_in_weight(self, w, seed):
        rng = np.random.default_rng(seed)
        f = rng.standard_normal((4, 4))
        assert tv(f, 2.0 * w) == pytest.approx(2.0 * tv(f, w), rel=1e-12, abs=1e-12)

    def test_negative_weight_rejected(self):
        with pytest.raises(ValueError):
            tv(np.zeros((3, 3)), weight=-1.0)


class TestPhaseCouplingEnergy:
    def test_all_zero(self):
        z = np.zeros((4, 4))
        assert phase_coupling_energy(z, z, z, z, eta=1.0, tau=1.0) == 0.0

    def test_equal_constants(self):
        c, n = 0.7, 4 * 4
        f = np.full((4, 4), c)
        tau = 2.0
        got = phase_coupling_energy(f, f, f, f, eta=5.0, tau=tau)
        assert got == pytest.approx(4 * n * c**2 / (2.0 * tau))

    def test_matches_naive_scalar_oracle(self):
        rng = np.random.default_rng(4)
        phis = [rng.standard_normal((4, 4)) for _ in range(4)]
        eta, tau = 1.0, 1.0
        d = (phis[0] - phis[1]) - (phis[2] - phis[3])
        smooth = 0.0
        n1, n2 = d.shape
        for i in range(n1):
            for j in range(n2):
                if i + 1 < n1:
                    smooth += (d[i + 1, j] - d[i, j]) ** 2
                if j + 1 < n2:
                    smooth += (d[i, j + 1] - d[i, j]) ** 2
        ridge = sum(float(np.sum(p**2)) for p in phis)
        expected = (eta * smooth + ridge) / (2.0 * tau)
        got = phase_coupling_energy(*phis, eta=eta, tau=tau)
        assert got == pytest.approx(expected, rel=1e-12)

    def test_gradient_term_even_under_argument_negation(self):
        rng = np.random.default_rng(5)
        p1, p2, p3, p4 = (rng.standard_normal((5, 5)) for _ in range(4))
        d = phase_double_difference(p1, p2, p3, p4)
        # swapping the pairs negates the double difference
        assert np.allclose(phase_double_difference(p3, p4, p1, p2), -d)
        assert np.sum(grad(d) ** 2) == pytest.approx(np.sum(grad(-d) ** 2))

    def test_invalid_tau_and_eta(self):
        z = np.zeros((3, 3))
        with pytest.raises(ValueError):
            phase_coupling_energy(z, z, z, z, eta=1.0, tau=0.0)
        with pytest.raises(ValueError):
            phase_coupling_energy(z, z, z, z, eta=-1.0, tau=1.0)


class TestCheckField:
    def test_rejects_non_2d(self):
        with pytest.raises(ValueError):
            check_field(np.zeros(5))

    def test_rejects_tiny_dims(self):
        with pytest.raises(ValueError):
            check_field(np.zeros((1, 5)))

    def test_rejects_non_finite(self):
        f = np.zeros((3, 3))
        f[0, 0] = np.nan
        with pytest.raises(ValueError):
            check_field(f)


def test_grad_norm_bound_dominates_power_iteration():
    rng = np.random.default_rng(6)
    x = rng.standard_normal((16, 16))
    for _ in range(200):
        x = grad_adjoint(grad(x))
        x /= np.linalg.norm(x)
    estimate = np.sqrt(np.sum(grad(x) ** 2))
    assert estimate <= GRAD_NORM_BOUND + 1e-9
