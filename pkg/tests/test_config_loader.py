"""Tests for experiment documents and presets"""
import unittest

from src.models.schemas import (
    CancellationMode,
    ChannelKind,
    DecodingOrder,
    Design,
    ExperimentKind,
    StrategyKind,
)
from src.services.config_loader import PRESETS, parse_config, parse_schedule, preset_spec, default_spec
from src.utils.errors import ConfigError


class TestParseConfig(unittest.TestCase):
    """Test KEY=VALUE parsing and validation"""

    def test_minimal_document(self):
        """Test defaults fill every missing key"""
        spec = parse_config("experiment = sumrate\n")
        self.assertEqual(spec.kind, ExperimentKind.SUM_RATE)
        self.assertEqual(spec.network.n_users, 3)
        self.assertEqual(spec.network.n_antennas, 3)
        self.assertEqual(spec.designs, (Design.ZF, Design.PZF_SEPARATE))
        self.assertEqual(spec.snr_db, (0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0))
        self.assertEqual(spec.trials, 100)
        self.assertEqual(spec.qam_order, 4)
        self.assertIn("qam_order", spec.defaults_applied)
        self.assertNotIn("experiment", spec.defaults_applied)

    def test_values_applied(self):
        """Test explicit values override defaults"""
        spec = parse_config(
            "users = 4\nantennas = 6\nrelay_power = 2\ntrials = 7\nseed = 11\n"
            "designs = mmse, pzf-joint\nstep_size_joint = 0.02\n"
        )
        self.assertEqual((spec.network.n_users, spec.network.n_antennas), (4, 6))
        self.assertEqual(spec.network.relay_power, 2.0)
        self.assertEqual((spec.trials, spec.seed), (7, 11))
        self.assertEqual(spec.designs, (Design.MMSE, Design.PZF_JOINT))
        self.assertEqual(spec.step_size_joint, 0.02)

    def test_too_few_antennas(self):
        """Test M < N-1 is rejected"""
        with self.assertRaises(ConfigError):
            parse_config("users = 3\nantennas = 1\n")

    def test_unknown_key(self):
        """Test unknown keys report line and field"""
        with self.assertRaises(ConfigError) as ctx:
            parse_config("# header\nusers = 3\nrelays = 2\n")
        self.assertEqual(ctx.exception.line, 3)
        self.assertEqual(ctx.exception.field, "relays")
        self.assertIn("line 3", str(ctx.exception))

    def test_malformed_line(self):
        """Test a line without '='"""
        with self.assertRaises(ConfigError) as ctx:
            parse_config("users = 3\njust some text\n")
        self.assertEqual(ctx.exception.line, 2)

    def test_duplicate_key(self):
        """Test a key given twice"""
        with self.assertRaises(ConfigError) as ctx:
            parse_config("trials = 5\ntrials = 6\n")
        self.assertEqual(ctx.exception.line, 2)
        self.assertEqual(ctx.exception.field, "trials")

    def test_bad_number(self):
        """Test a non-numeric value names its field"""
        with self.assertRaises(ConfigError) as ctx:
            parse_config("users = 3\nrelay_power = lots\n")
        self.assertEqual(ctx.exception.field, "relay_power")
        self.assertEqual(ctx.exception.line, 2)

    def test_unknown_design(self):
        """Test an unknown design name"""
        with self.assertRaises(ConfigError) as ctx:
            parse_config("designs = ZF,Magic\n")
        self.assertEqual(ctx.exception.field, "designs")

    def test_snr_grid_forms(self):
        """Test comma lists and inclusive ranges"""
        self.assertEqual(parse_config("snr_db = 0, 10, 20\n").snr_db, (0.0, 10.0, 20.0))
        self.assertEqual(parse_config("snr_db = 0:1:0.5\n").snr_db, (0.0, 0.5, 1.0))
        with self.assertRaises(ConfigError):
            parse_config("snr_db = 10:0:5\n")
        with self.assertRaises(ConfigError):
            parse_config("snr_db = 0:ten:5\n")

    def test_heterogeneous_requires_distances(self):
        """Test heterogeneous channels need distances"""
        with self.assertRaises(ConfigError) as ctx:
            parse_config("channel = heterogeneous\n")
        self.assertEqual(ctx.exception.field, "distances")

    def test_heterogeneous_channel(self):
        """Test distances and path-loss parameters"""
        spec = parse_config("channel = heterogeneous\ndistances = 1,2,4\npath_loss_exponent = 3\n")
        self.assertEqual(spec.network.channel.kind, ChannelKind.HETEROGENEOUS)
        self.assertEqual(spec.network.channel.distances, (1.0, 2.0, 4.0))
        self.assertEqual(spec.network.channel.exponent, 3.0)

    def test_hybrid_strategy(self):
        """Test hybrid strategy keys"""
        spec = parse_config("strategy = hybrid\nunicast_source = 1\nmulticast_order = 2,3\n")
        self.assertEqual(spec.network.strategy.kind, StrategyKind.HYBRID)
        self.assertEqual(spec.network.strategy.multicast_order, (2, 3))
        with self.assertRaises(ConfigError):
            parse_config("strategy = hybrid\nunicast_source = 1\n")
        with self.assertRaises(ConfigError):
            parse_config("strategy = hybrid\nunicast_source = 1\nmulticast_order = 2,2\n")

    def test_dotenv_syntax(self):
        """Test quotes, export prefixes and inline comments"""
        spec = parse_config('export users = 4\nantennas = "4"\ndesigns = \'ZF\'\ntrials = 3 # quick\n')
        self.assertEqual(spec.network.n_users, 4)
        self.assertEqual(spec.network.n_antennas, 4)
        self.assertEqual(spec.designs, (Design.ZF,))
        self.assertEqual(spec.trials, 3)

    def test_ser_mode_both(self):
        """Test both cancellation modes"""
        spec = parse_config("experiment = ser\nser_mode = both\n")
        self.assertEqual(spec.ser_modes, (CancellationMode.REALISTIC, CancellationMode.GENIE))

    def test_invalid_qam_order(self):
        """Test unsupported QAM orders"""
        with self.assertRaises(ConfigError) as ctx:
            parse_config("qam_order = 8\n")
        self.assertEqual(ctx.exception.field, "qam_order")

    def test_reduced_defaults(self):
        """Test reduced-compare defaults its designs and settings"""
        spec = default_spec(ExperimentKind.REDUCED)
        self.assertEqual(spec.designs, (Design.PZF_REDUCED,))
        self.assertEqual(spec.settings, ((3, 3), (2, 3)))

    def test_bad_setting(self):
        """Test malformed MxN settings"""
        with self.assertRaises(ConfigError) as ctx:
            parse_config("experiment = reduced-compare\nsettings = 3by3\n")
        self.assertEqual(ctx.exception.field, "settings")


class TestSchedules(unittest.TestCase):
    """Test schedule tokens"""

    def test_tokens(self):
        """Test unicast, counter-clockwise and hybrid tokens"""
        strategy, order = parse_schedule("unicast")
        self.assertEqual((strategy.kind, order), (StrategyKind.UNICAST, DecodingOrder.CLOCKWISE))
        self.assertEqual(parse_schedule(" Unicast-CCW ")[1], DecodingOrder.COUNTER_CLOCKWISE)
        strategy, _ = parse_schedule("hybrid:1:3,2")
        self.assertEqual((strategy.unicast_source, strategy.multicast_order), (1, (3, 2)))

    def test_bad_tokens(self):
        """Test malformed tokens"""
        for token in ("broadcast", "hybrid:1", "hybrid:x:2,3"):
            with self.assertRaises(ValueError):
                parse_schedule(token)

    def test_schedule_list(self):
        """Test ';' separates schedules in a document"""
        spec = parse_config("experiment = schedule-compare\nschedules = unicast; hybrid:2:1,3\n")
        self.assertEqual(spec.schedules, ("unicast", "hybrid:2:1,3"))
        with self.assertRaises(ConfigError):
            parse_config("experiment = schedule-compare\nschedules = unicast; hybrid:1:1,2\n")


class TestPresets(unittest.TestCase):
    """Test named presets"""

    def test_all_presets_parse(self):
        """Test every preset yields a valid spec"""
        for name in PRESETS:
            spec = preset_spec(name)
            self.assertEqual(spec.preset, name)

    def test_design_comparison_preset(self):
        """Test the N = M = 3 sum-rate comparison"""
        spec = preset_spec("fig4")
        self.assertEqual(spec.kind, ExperimentKind.SUM_RATE)
        self.assertEqual((spec.network.n_users, spec.network.n_antennas), (3, 3))
        self.assertEqual(spec.designs, (Design.ZF, Design.MMSE, Design.MF, Design.PZF_JOINT, Design.PZF_SEPARATE))
        self.assertEqual(spec.snr_db, (0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0))

    def test_user_sweep_preset(self):
        """Test the user-count sweep at 20 dB with M = 8"""
        spec = preset_spec("fig5")
        self.assertEqual(spec.kind, ExperimentKind.USER_COUNT)
        self.assertEqual(spec.network.n_antennas, 8)
        self.assertEqual(spec.user_counts, (3, 4, 5, 6, 7, 8))
        self.assertEqual(spec.snr_db, (20.0,))

    def test_hybrid_order_preset(self):
        """Test the two hybrid schedules with d = 1, 1, 2"""
        spec = preset_spec("fig10")
        self.assertEqual(spec.schedules, ("hybrid:1:2,3", "hybrid:1:3,2"))
        self.assertEqual(spec.network.channel.distances, (1.0, 1.0, 2.0))

    def test_reduced_preset(self):
        """Test the relay-antenna settings"""
        spec = preset_spec("fig12")
        self.assertEqual(spec.kind, ExperimentKind.REDUCED)
        self.assertEqual(spec.settings, ((4, 4), (3, 3), (3, 4), (2, 3)))
        self.assertEqual(spec.designs, (Design.PZF_REDUCED,))

    def test_unknown_preset(self):
        """Test an unknown preset name"""
        with self.assertRaises(ConfigError):
            preset_spec("fig99")


if __name__ == "__main__":
    unittest.main()
