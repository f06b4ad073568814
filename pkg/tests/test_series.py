import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hawkes_deviations import (
    SubcriticalityError, abel_identity_residual, convolution_power,
    gronwall_majorant, renewal_majorant,
)

nonneg_seq = st.lists(st.floats(min_value=0.0, max_value=0.5), min_size=1, max_size=6)


class TestConvolutionPower:
    def test_unit_mass_translates(self):
        out = convolution_power([1.0], 2, 3)
        assert out == pytest.approx([0.0, 1.0, 0.0])

    def test_point_mass_cubes(self):
        c = 0.7
        out = convolution_power([c], 3, 4)
        assert out == pytest.approx([0.0, 0.0, c**3, 0.0])

    def test_hand_convolution(self):
        out = convolution_power([0.5, 0.25], 2, 4)
        assert out == pytest.approx([0.0, 0.25, 0.25, 0.0625])

    def test_sum_preservation_on_finite_support(self):
        q = [0.3, 0.1, 0.05]
        for j in (1, 2, 3, 4):
            out = convolution_power(q, j, len(q) * j + 1)
            assert out.sum() == pytest.approx(sum(q) ** j, rel=1e-13)

    @settings(max_examples=40, deadline=None)
    @given(nonneg_seq, st.integers(1, 3), st.integers(1, 3))
    def test_associative_in_power(self, q, j1, j2):
        n = len(q) * (j1 + j2) + 1
        whole = convolution_power(q, j1 + j2, n)
        a = convolution_power(q, j1, n)
        b = convolution_power(q, j2, n)
        # convolve the two partial powers on the same 1-indexed convention
        stitched = np.concatenate([[0.0], np.convolve(a, b)[: n - 1]])
        assert whole == pytest.approx(stitched, rel=1e-12, abs=1e-12)


class TestRenewalMajorant:
    def test_geometric_point_mass(self):
        assert renewal_majorant([0.5], 3) == pytest.approx([0.5, 0.25, 0.125])

    def test_zero_sequence(self):
        assert renewal_majorant([0.0, 0.0], 4) == pytest.approx([0.0] * 4)

    def test_two_term_hand_value(self):
        assert renewal_majorant([0.25, 0.25], 2) == pytest.approx([0.25, 0.3125])

    def test_supercritical_rejected(self):
        with pytest.raises(SubcriticalityError):
            renewal_majorant([0.6, 0.5], 3)

    @settings(max_examples=40, deadline=None)
    @given(nonneg_seq)
    def test_renewal_equation(self, q):
        if sum(q) >= 0.99:
            q = [v / (2.0 * sum(q)) for v in q]
        n = 30
        Q = renewal_majorant(q, n)
        qn = np.zeros(n)
        qn[: len(q)] = q
        for i in range(1, n + 1):
            conv = sum(qn[i - j - 1] * Q[j - 1] for j in range(1, i))
            assert Q[i - 1] == pytest.approx(qn[i - 1] + conv, abs=1e-12)


class TestGronwallMajorant:
    def test_no_feedback_returns_g(self):
        g = [0.4, 0.3, 0.2]
        assert gronwall_majorant([0.0], g, 3) == pytest.approx(g)

    def test_hand_value(self):
        out = gronwall_majorant([0.5], [1.0, 1.0, 1.0], 3)
        assert out == pytest.approx([1.0, 1.5, 1.75])

    def test_dominates_admissible_sequences(self):
        # brute-force recursive p with p(i) <= sum q(i-j) p(j) + g(i)
        rng = np.random.default_rng(1234)
        n = 50
        for _ in range(100):
            q = rng.uniform(0.0, 1.0, size=rng.integers(1, 6))
            q *= rng.uniform(0.1, 0.95) / max(q.sum(), 1e-12)
            g = rng.uniform(0.0, 2.0, size=n)
            qn = np.zeros(n)
            qn[: q.size] = q
            p = np.zeros(n)
            for i in range(1, n + 1):
                bound = g[i - 1] + sum(qn[i - j - 1] * p[j - 1] for j in range(1, i))
                p[i - 1] = rng.uniform(0.0, 1.0) * bound
            b = gronwall_majorant(q, g, n)
            assert np.all(p <= b + 1e-12)


class TestAbelIdentity:
    def test_constant_a_telescopes(self):
        b = [0.5, 0.3, 0.2, 0.1, 0.05]
        assert abel_identity_residual([1.0] * 5, b, 5) <= 1e-15

    def test_linear_a_geometric_b(self):
        a = list(range(1, 11))
        b = [0.5**k for k in range(1, 40)]
        assert abel_identity_residual(a, b, 10) <= 1e-13

    def test_alternating_a_finite_b(self):
        assert abel_identity_residual([-1.0, 1.0, -1.0], [0.2, 0.3, 0.1], 3) <= 1e-15

    def test_randomized_instances(self):
        rng = np.random.default_rng(7)
        for _ in range(100):
            p = int(rng.integers(2, 12))
            a = rng.uniform(-10.0, 10.0, size=p)
            ratio = rng.uniform(0.2, 0.8)
            b = ratio ** np.arange(1, p + 25)
            assert abel_identity_residual(a, b, p) <= 1e-12
