import math

import pytest

from zenobattery import config
from zenobattery.errors import ConfigError

SQRT2 = math.sqrt(2.0)


def write(tmp_path, text):
    path = tmp_path / "run.cfg"
    path.write_text(text, encoding="utf-8")
    return path


class TestResolve:
    def test_defaults(self):
        cfg = config.resolve()
        assert cfg["g"] == 0.01 and cfg["omega1"] == "resonant"
        assert cfg.params().omega1 == pytest.approx(1 / SQRT2)

    @pytest.mark.parametrize("name", sorted(config.PRESETS))
    def test_presets_pin_physics(self, name):
        cfg = config.resolve(name)
        for key in ("omega1", "g", "gamma", "mu"):
            assert key in config.PRESETS[name]
        assert cfg["scenario"] == name
        cfg.params()

    def test_preset_values(self):
        assert config.resolve("fig2a").params().omega1 == pytest.approx(SQRT2)
        assert config.resolve("figS3")["gamma"] == 0.7
        assert config.resolve("figS4")["mu"] == 2.0
        assert config.resolve("figS2")["fit"] is True

    def test_precedence(self):
        cfg = config.resolve("fig2b", {"g": 0.02, "gamma": 0.5}, {"g": 0.03})
        assert cfg["g"] == 0.03
        assert cfg["gamma"] == 0.5
        assert cfg["schedule"] == "pulsed:0.5:1"

    def test_unknown_scenario(self):
        with pytest.raises(ConfigError, match="unknown scenario"):
            config.resolve("fig9")

    @pytest.mark.parametrize("key,value", [("g", 0.0), ("gamma", -1.0), ("window", 0.0), ("omega1", -0.5),
                                           ("pulse_stride", 0), ("n_max", 0), ("jobs", -1)])
    def test_rejects_out_of_range(self, key, value):
        with pytest.raises(ConfigError, match=key):
            config.resolve(overrides={key: value})

    def test_empty_grid(self):
        with pytest.raises(ConfigError, match="empty grid"):
            config.resolve("fig3", overrides={"grid_start": 10.0, "grid_stop": 1.0})

    def test_bare_omega1(self):
        assert config.resolve(overrides={"omega1": "bare"}).params().omega1 == pytest.approx(SQRT2)


class TestSchedule:
    def test_wire_units(self):
        sched = config.parse_schedule("free:0.5, pulsed:0.5:1", 0.01)
        free, pulsed = sched.phases
        assert free.duration == pytest.approx(0.5 * math.pi / 0.01)
        assert pulsed.tau == pytest.approx(math.pi / 10.0)
        assert pulsed.n_pulses == 500

    @pytest.mark.parametrize("text", ["free:0", "pulsed:1:0", "hold:1", "pulsed:1", "", "free:x", "pulsed:0.001:10"])
    def test_rejects(self, text):
        with pytest.raises(ConfigError, match="schedule"):
            config.parse_schedule(text, 0.01)

    def test_missing_schedule(self):
        with pytest.raises(ConfigError, match="no schedule"):
            config.resolve().schedule()


class TestFile:
    def test_load(self, tmp_path):
        path = write(tmp_path, "# comment\nscenario = fig2b\ng=0.02  # trailing\n\nfit=yes\n")
        assert config.load_file(path) == {"scenario": "fig2b", "g": 0.02, "fit": True}

    def test_unknown_key_names_line(self, tmp_path):
        path = write(tmp_path, "g=0.01\nomega=1\n")
        with pytest.raises(ConfigError, match=r"run.cfg:2: unknown key 'omega'"):
            config.load_file(path)

    def test_bad_value_names_key(self, tmp_path):
        path = write(tmp_path, "gamma=abc\n")
        with pytest.raises(ConfigError, match=r":1: key 'gamma': invalid value"):
            config.load_file(path)

    def test_duplicate(self, tmp_path):
        with pytest.raises(ConfigError, match="duplicate"):
            config.load_file(write(tmp_path, "g=0.01\ng=0.02\n"))

    def test_missing_equals(self, tmp_path):
        with pytest.raises(ConfigError, match="expected key=value"):
            config.load_file(write(tmp_path, "g 0.01\n"))

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="cannot read"):
            config.load_file(tmp_path / "absent.cfg")

    @pytest.mark.parametrize("name", sorted(config.PRESETS))
    def test_echo_round_trip(self, tmp_path, name):
        cfg = config.resolve(name, overrides={"g": 0.015})
        again = config.resolve(file_values=config.load_file(write(tmp_path, "\n".join(cfg.echo()))))
        assert dict(again.values) == dict(cfg.values)
