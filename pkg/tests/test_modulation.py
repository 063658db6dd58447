"""Tests for QAM mapping and detection"""
import unittest

import numpy as np

from src.services.modulation import (
    SUPPORTED_ORDERS,
    constellation,
    qam_map,
    qam_demap,
    nearest_label,
    q_function,
    theoretical_ser,
)


class TestConstellation(unittest.TestCase):
    """Test constellation geometry"""

    def test_unit_energy(self):
        """Test average symbol energy is one"""
        for order in SUPPORTED_ORDERS:
            points = constellation(order)
            self.assertEqual(len(points), order)
            self.assertAlmostEqual(np.mean(np.abs(points) ** 2), 1.0)

    def test_qpsk_points(self):
        """Test 4-QAM is (+-1 +- j)/sqrt(2)"""
        points = constellation(4)
        np.testing.assert_allclose(np.abs(points), np.ones(4))
        self.assertEqual(len(set(np.round(points, 12))), 4)

    def test_gray_adjacency(self):
        """Test nearest neighbours differ in exactly one bit"""
        for order in (16, 64):
            points = constellation(order)
            distances = np.abs(points[:, None] - points[None, :])
            spacing = np.min(distances[distances > 0])
            for a in range(order):
                for b in range(order):
                    if abs(distances[a, b] - spacing) < 1e-9:
                        self.assertEqual(bin(a ^ b).count("1"), 1)

    def test_read_only(self):
        """Test the cached constellation cannot be modified"""
        with self.assertRaises(ValueError):
            constellation(4)[0] = 0

    def test_invalid_order(self):
        """Test unsupported orders"""
        for order in (2, 8, 32, 256):
            with self.assertRaises(ValueError):
                constellation(order)


class TestMapping(unittest.TestCase):
    """Test bit mapping and hard decisions"""

    def test_round_trip(self):
        """Test demap(map(bits)) = bits without noise"""
        rng = np.random.default_rng(0)
        for order in SUPPORTED_ORDERS:
            bits = rng.integers(0, 2, size=int(np.log2(order)) * 500)
            np.testing.assert_array_equal(qam_demap(qam_map(bits, order), order), bits)

    def test_bad_bit_count(self):
        """Test a bit stream that does not fill whole symbols"""
        with self.assertRaises(ValueError):
            qam_map(np.array([1, 0, 1]), 4)

    def test_nearest_label_small_perturbation(self):
        """Test decisions tolerate perturbations below half the spacing"""
        points = constellation(16)
        noisy = points + 0.05 * np.exp(1j * np.linspace(0, 2 * np.pi, 16))
        np.testing.assert_array_equal(nearest_label(noisy, 16), np.arange(16))


class TestErrorRates(unittest.TestCase):
    """Test analytic and simulated symbol-error rates"""

    def test_q_function(self):
        """Test Q(0) = 1/2 and Q(1.96) ~ 0.025"""
        self.assertAlmostEqual(float(q_function(0.0)), 0.5)
        self.assertAlmostEqual(float(q_function(1.96)), 0.025, places=3)

    def test_theoretical_formula(self):
        """Test SER = 2p - p^2 for 4-QAM"""
        es_n0 = 10.0
        p = q_function(np.sqrt(es_n0))
        self.assertAlmostEqual(theoretical_ser(4, es_n0), float(2 * p - p ** 2))

    def test_theoretical_decreasing(self):
        """Test SER falls with SNR"""
        values = [theoretical_ser(16, 10 ** (snr / 10)) for snr in (0, 5, 10, 15, 20)]
        for before, after in zip(values, values[1:]):
            self.assertLess(after, before)

    def test_monte_carlo_matches_theory(self):
        """Test simulated AWGN SER within 10% of the analytic value"""
        rng = np.random.default_rng(7)
        for order, snr_db, count in ((4, 10.0, 1_000_000), (16, 15.0, 200_000)):
            es_n0 = 10 ** (snr_db / 10)
            labels = rng.integers(0, order, size=count)
            noise = np.sqrt(0.5 / es_n0) * (rng.standard_normal(count) + 1j * rng.standard_normal(count))
            decided = nearest_label(constellation(order)[labels] + noise, order)
            simulated = np.mean(decided != labels)
            expected = theoretical_ser(order, es_n0)
            self.assertLess(abs(simulated - expected) / expected, 0.1)


if __name__ == "__main__":
    unittest.main()
