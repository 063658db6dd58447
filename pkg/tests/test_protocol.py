"""Tests for the transmission protocol"""
import unittest

import numpy as np

from src.models.schemas import (
    ChannelModel,
    DecodingOrder,
    NetworkConfig,
    Strategy,
)
from src.services.baselines import zf_beamformer
from src.services.protocol import (
    generate_channel,
    decode_target,
    decoded_set,
    slot_of,
    zero_pattern,
    permutation_matrix,
    selection_matrix,
    equivalent_channel,
    received_signal,
)


def network(n_users=3, n_antennas=3, **kwargs):
    return NetworkConfig.homogeneous(n_users, n_antennas, snr_db=0.0, **kwargs)


class TestDecodingSchedule(unittest.TestCase):
    """Test decode targets and decoded sets"""

    def test_clockwise_targets(self):
        """Test clockwise decoding order"""
        config = network()
        self.assertEqual(decode_target(1, 1, config), 2)
        self.assertEqual(decode_target(3, 2, config), 2)
        self.assertEqual(decode_target(3, 1, config), 1)

    def test_counter_clockwise_target(self):
        """Test counter-clockwise decoding order"""
        config = network(decoding_order=DecodingOrder.COUNTER_CLOCKWISE)
        self.assertEqual(decode_target(1, 1, config), 3)
        self.assertEqual(decode_target(1, 2, config), 2)

    def test_out_of_range(self):
        """Test invalid receiver and slot indices"""
        config = network()
        with self.assertRaises(ValueError):
            decode_target(0, 1, config)
        with self.assertRaises(ValueError):
            decode_target(1, 3, config)

    def test_decoded_sets(self):
        """Test previously decoded symbols"""
        self.assertEqual(decoded_set(1, 1, network()), frozenset())
        self.assertEqual(decoded_set(1, 2, network()), {2})
        self.assertEqual(decoded_set(2, 3, network(4, 4)), {3, 4})

    def test_every_source_visited_once(self):
        """Test each receiver decodes every other source exactly once"""
        for N in range(2, 7):
            for order in DecodingOrder:
                config = network(N, N, decoding_order=order)
                for k in range(1, N + 1):
                    targets = [decode_target(k, n, config) for n in range(1, N)]
                    self.assertEqual(sorted(targets), [i for i in range(1, N + 1) if i != k])

    def test_hybrid_targets(self):
        """Test hybrid uni/multicasting delivers every symbol"""
        config = network(strategy=Strategy.hybrid(1, (2, 3)))
        # slot 1 multicasts s2; its own source receives the unicast s1
        self.assertEqual([decode_target(k, 1, config) for k in (1, 2, 3)], [2, 1, 2])
        self.assertEqual([decode_target(k, 2, config) for k in (1, 2, 3)], [3, 3, 1])
        for k in (1, 2, 3):
            targets = {decode_target(k, n, config) for n in (1, 2)}
            self.assertEqual(targets, {1, 2, 3} - {k})

    def test_slot_of_inverts_schedule(self):
        """Test slot lookup for (receiver, source) pairs"""
        config = network(4, 4)
        for k in range(1, 5):
            for n in range(1, 4):
                self.assertEqual(slot_of(k, decode_target(k, n, config), config), n)
        with self.assertRaises(ValueError):
            slot_of(2, 2, config)


class TestZeroPattern(unittest.TestCase):
    """Test forced-zero patterns"""

    def test_three_user_first_slot(self):
        """Test N=3 unicast slot 1 pattern"""
        pattern = zero_pattern(network())
        self.assertEqual(pattern.for_slot(1), {(1, 3), (2, 1), (3, 2)})

    def test_last_slot_is_free(self):
        """Test the last slot has no forced zeros"""
        for N in range(2, 7):
            self.assertEqual(len(zero_pattern(network(N, N)).for_slot(N - 1)), 0)

    def test_zero_counts(self):
        """Test (N-n-1)N zeros and (n+1)N free entries per slot"""
        for N in range(2, 9):
            pattern = zero_pattern(network(N, N))
            for n in range(1, N):
                self.assertEqual(len(pattern.for_slot(n)), (N - n - 1) * N)
                self.assertEqual(pattern.free_count(n), (n + 1) * N)
            self.assertEqual(pattern.total_free, (N + 2) * N * (N - 1) // 2)

    def test_no_self_interference_entries(self):
        """Test (i, i, n) never appears"""
        pattern = zero_pattern(network(5, 5))
        self.assertFalse(any(i == j for i, j, _ in pattern.tuples))

    def test_interferers_partitioned(self):
        """Test every index is self, decoded, target or relay-cancelled"""
        for N in range(3, 7):
            config = network(N, N)
            pattern = zero_pattern(config)
            for n in range(1, N):
                for k in range(1, N + 1):
                    zeros = {j for i, j in pattern.for_slot(n) if i == k}
                    kept = {k, decode_target(k, n, config)} | decoded_set(k, n, config)
                    self.assertEqual(zeros | kept, set(range(1, N + 1)))
                    self.assertFalse(zeros & kept)

    def test_hybrid_first_slot(self):
        """Test hybrid pattern with unicast s1 and multicast s2 in slot 1"""
        pattern = zero_pattern(network(strategy=Strategy.hybrid(1, (2, 3))))
        self.assertEqual(pattern.for_slot(1), {(1, 3), (2, 3), (3, 1)})
        self.assertEqual(len(pattern.for_slot(2)), 0)

    def test_mask(self):
        """Test boolean mask of a slot"""
        mask = zero_pattern(network()).mask(1)
        self.assertEqual(mask.sum(), 3)
        self.assertTrue(mask[0, 2])
        self.assertFalse(mask[0, 1])


class TestPermutations(unittest.TestCase):
    """Test permutation and selection matrices"""

    def test_identity_power(self):
        """Test P^0 = I"""
        np.testing.assert_array_equal(permutation_matrix(4, 0), np.eye(4))

    def test_single_shift(self):
        """Test P^1 for N=3 has ones at (1,2), (2,3), (3,1)"""
        P = permutation_matrix(3, 1)
        expected = np.zeros((3, 3))
        expected[0, 1] = expected[1, 2] = expected[2, 0] = 1
        np.testing.assert_array_equal(P, expected)
        self.assertEqual(P.sum(), 3)

    def test_cycle_length(self):
        """Test P^N = I"""
        np.testing.assert_array_equal(permutation_matrix(3, 3), np.eye(3))

    def test_power_composition(self):
        """Test P^n is the n-th power of P"""
        P = permutation_matrix(5, 1)
        np.testing.assert_array_equal(permutation_matrix(5, 3), np.linalg.matrix_power(P, 3))

    def test_negative_power_rejected(self):
        """Test negative powers"""
        with self.assertRaises(ValueError):
            permutation_matrix(3, -1)

    def test_selection_matches_permutation(self):
        """Test schedule matrices for both unicast orders"""
        N = 5
        clockwise = network(N, N)
        counter = network(N, N, decoding_order=DecodingOrder.COUNTER_CLOCKWISE)
        for n in range(1, N):
            np.testing.assert_array_equal(selection_matrix(clockwise, n), permutation_matrix(N, n))
            np.testing.assert_array_equal(selection_matrix(counter, n), permutation_matrix(N, N - n))


class TestChannel(unittest.TestCase):
    """Test channel generation"""

    def test_reproducible(self):
        """Test same seed gives identical channels"""
        config = network(3, 4)
        H1 = generate_channel(config, np.random.default_rng(42))
        H2 = generate_channel(config, np.random.default_rng(42))
        self.assertEqual(H1.shape, (4, 3))
        np.testing.assert_array_equal(H1, H2)

    def test_sample_variance(self):
        """Test unit-variance entries"""
        config = NetworkConfig.homogeneous(2, 100000, snr_db=0.0)
        H = generate_channel(config, np.random.default_rng(1))
        variance = np.mean(np.abs(H[:, 0]) ** 2)
        self.assertAlmostEqual(variance, 1.0, delta=0.03)
        self.assertAlmostEqual(np.mean(H[:, 1]).real, 0.0, delta=0.02)

    def test_heterogeneous_variances(self):
        """Test path-loss variances for d3 = 2 d2 = 4 d1"""
        model = ChannelModel.heterogeneous((1.0, 2.0, 4.0), psi=1.0, exponent=2.0)
        np.testing.assert_allclose(model.variances(3), [1.0, 0.25, 0.0625])

    def test_reference_snr(self):
        """Test the SNR sets user 1's variance and keeps ratios"""
        config = NetworkConfig(
            n_users=3,
            n_antennas=3,
            user_powers=(1.0, 1.0, 1.0),
            channel=ChannelModel.heterogeneous((1.0, 2.0, 4.0)),
        ).with_snr_db(10.0)
        np.testing.assert_allclose(config.variances(), [10.0, 2.5, 0.625])

    def test_zero_variance_rejected(self):
        """Test degenerate variance"""
        with self.assertRaises(ValueError):
            ChannelModel.homogeneous(0.0)

    def test_invalid_network_rejected(self):
        """Test M < N-1 at construction"""
        with self.assertRaises(ValueError):
            network(3, 1)


class TestReceivedSignal(unittest.TestCase):
    """Test the received-signal model"""

    def setUp(self):
        self.config = network()
        rng = np.random.default_rng(5)
        self.H = generate_channel(self.config, rng)
        self.s = rng.standard_normal(3) + 1j * rng.standard_normal(3)

    def test_zero_relay(self):
        """Test G = 0 gives a zero vector"""
        r = received_signal(self.H, np.zeros((3, 3)), self.s)
        np.testing.assert_array_equal(r, np.zeros(3))

    def test_zf_delivers_one_symbol(self):
        """Test ZF output is proportional to P^n s"""
        G = zf_beamformer(self.H, self.config, 1)
        r = received_signal(self.H, G, self.s)
        expected = permutation_matrix(3, 1) @ self.s
        ratio = r / expected
        np.testing.assert_allclose(ratio, ratio[0] * np.ones(3), rtol=1e-9)
        np.testing.assert_allclose(r, equivalent_channel(self.H, G) @ self.s, rtol=1e-12)

    def test_linearity(self):
        """Test superposition"""
        G = np.random.default_rng(2).standard_normal((3, 3))
        s2 = np.array([1.0, -1j, 0.5])
        combined = received_signal(self.H, G, self.s + s2)
        separate = received_signal(self.H, G, self.s) + received_signal(self.H, G, s2)
        np.testing.assert_allclose(combined, separate, atol=1e-12)

    def test_noise_terms(self):
        """Test relay and user noise are added as H^T G z + z_users"""
        G = np.eye(3)
        z_relay = np.array([1.0, 0.0, 0.0])
        z_users = np.array([0.0, 1.0, 0.0])
        r = received_signal(self.H, G, np.zeros(3), z_relay, z_users)
        np.testing.assert_allclose(r, self.H.T @ z_relay + z_users)

    def test_batched_rows(self):
        """Test a batch of blocks matches one call per block"""
        rng = np.random.default_rng(4)
        G = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        s = rng.standard_normal((5, 3)) + 1j * rng.standard_normal((5, 3))
        z_relay = rng.standard_normal((5, 3))
        z_users = rng.standard_normal((5, 3))

        batch = received_signal(self.H, G, s, z_relay, z_users)
        self.assertEqual(batch.shape, (5, 3))
        for b in range(5):
            np.testing.assert_allclose(
                batch[b], received_signal(self.H, G, s[b], z_relay[b], z_users[b]), atol=1e-12
            )

    def test_dimension_mismatch(self):
        """Test inconsistent shapes are rejected"""
        with self.assertRaises(ValueError):
            received_signal(self.H, np.eye(2), self.s)
        with self.assertRaises(ValueError):
            received_signal(self.H, np.eye(3), np.ones(2))
        with self.assertRaises(ValueError):
            received_signal(self.H, np.eye(3), np.ones((4, 3)), relay_noise=np.ones(3))


if __name__ == "__main__":
    unittest.main()
