import pytest

from vlc_beacon.errors import ConfigError, InvalidAddressError, InvalidParametersError
from vlc_beacon.models import FrozenSource, NetworkConfig, RllScheme, UpdateRequest
from vlc_beacon.parser import (
    load_frozen_file,
    load_network_config,
    load_schedule,
    parse_bool,
    parse_frozen_indices,
    parse_frozen_source,
    parse_network_config,
    polar_config_for,
    write_frozen_file,
    write_schedule,
)


class TestNetworkConfig:
    def test_full_network(self, fixture_path):
        actual = load_network_config(fixture_path("network.cfg"))
        assert actual == NetworkConfig()
        assert actual.clock.divider == 500

    def test_defaults_fill_missing_keys(self, fixture_path):
        actual = load_network_config(fixture_path("small.cfg"))
        expected = NetworkConfig(
            front_ends=8, ml=16, cl=32, scheme=RllScheme.FOUR_B_SIX_B, sr_hz=10_000_000
        )
        assert actual == expected

    def test_empty_config(self):
        assert parse_network_config(["# nothing here", ""]) == NetworkConfig()

    def test_frozen_file_source(self):
        actual = parse_network_config(["frozen = file:codes/frozen.txt"])
        assert actual.frozen_source == FrozenSource("file", path="codes/frozen.txt")

    def test_unknown_key(self):
        with pytest.raises(ConfigError) as ex:
            parse_network_config(["ml = 128", "anchors = 12"], "net.cfg")
        assert ex.value.line_number == 2
        assert str(ex.value).startswith("net.cfg:2:")

    def test_missing_separator(self):
        with pytest.raises(ConfigError) as ex:
            parse_network_config(["", "ml 128"])
        assert ex.value.line_number == 2

    def test_bad_integer(self):
        with pytest.raises(ConfigError) as ex:
            parse_network_config(["fifo_depth = many"])
        assert ex.value.line_number == 1

    def test_bad_scheme(self):
        with pytest.raises(ConfigError):
            parse_network_config(["rll = 8b10b"])

    def test_unsupported_pair(self):
        with pytest.raises(ConfigError) as ex:
            parse_network_config(["ml = 128", "# rate 1", "cl = 128"], "net.cfg")
        assert ex.value.line_number == 3
        assert "(lines 1, 3)" in str(ex.value)

    def test_is_a_value_error(self):
        with pytest.raises(ValueError) as ex:
            parse_network_config(["ml = 16", "cl = 32", "front_ends = 200"])
        assert ex.value.line_number == 3

    @pytest.mark.parametrize(
        "lines, line_number",
        [
            (["latency_cycles = 2"], 1),
            (["ml = 16", "", "fifo_depth = 0"], 3),
            (["sys_hz = 50_000_000", "cl = 256", "sr_hz = 3_000_000"], 3),
        ],
    )
    def test_range_errors_name_their_line(self, lines, line_number):
        with pytest.raises(ConfigError) as ex:
            parse_network_config(lines)
        assert ex.value.line_number == line_number

    def test_config_not_utf8(self, tmp_path):
        path = tmp_path / "network.cfg"
        path.write_bytes(b"ml = 16\n# caf\xe9\ncl = 32\n")
        with pytest.raises(ConfigError) as ex:
            load_network_config(str(path))
        assert ex.value.line_number == 2
        assert "0xe9" in str(ex.value)


class TestValues:
    @pytest.mark.parametrize("text", ["true", "Yes", "1", "on"])
    def test_true(self, text):
        assert parse_bool(text) is True

    @pytest.mark.parametrize("text", ["false", "NO", "0", "off"])
    def test_false(self, text):
        assert parse_bool(text) is False

    def test_not_a_bool(self):
        with pytest.raises(InvalidParametersError):
            parse_bool("maybe")

    def test_frozen_sources(self):
        assert parse_frozen_source("bec") == FrozenSource()
        assert parse_frozen_source("bec:0.3") == FrozenSource("bec", erasure=0.3)

    def test_erasure_out_of_range(self):
        with pytest.raises(InvalidParametersError):
            parse_frozen_source("bec:1.5")


class TestFrozenFile:
    def test_load(self, fixture_path):
        assert load_frozen_file(fixture_path("frozen_n3.txt")) == frozenset({0, 1, 2, 4})

    def test_not_ascending(self):
        with pytest.raises(ConfigError) as ex:
            parse_frozen_indices(["0", "4", "2"])
        assert ex.value.line_number == 3

    def test_not_a_number(self):
        with pytest.raises(ConfigError) as ex:
            parse_frozen_indices(["# header", "x1"])
        assert ex.value.line_number == 2

    def test_negative(self):
        with pytest.raises(ConfigError):
            parse_frozen_indices(["-1"])

    def test_file_not_utf8(self, tmp_path):
        path = tmp_path / "frozen.txt"
        path.write_bytes(b"0\n1\n\xff\xfe\n")
        with pytest.raises(ConfigError) as ex:
            load_frozen_file(str(path))
        assert ex.value.line_number == 3

    def test_file_design_matches_bec_design(self, tmp_path):
        network = NetworkConfig(ml=16, cl=32)
        designed = polar_config_for(network)
        path = str(tmp_path / "frozen.txt")
        write_frozen_file(path, designed.frozen, "N=32 K=16")
        from_file = polar_config_for(
            NetworkConfig(ml=16, cl=32, frozen_source=FrozenSource("file", path=path))
        )
        assert from_file == designed

    def test_file_with_wrong_rate(self, tmp_path):
        path = str(tmp_path / "frozen.txt")
        write_frozen_file(path, range(10))
        with pytest.raises(ConfigError):
            polar_config_for(
                NetworkConfig(ml=16, cl=32, frozen_source=FrozenSource("file", path=path))
            )


class TestSchedule:
    def test_load(self, fixture_path):
        schedule = load_schedule(fixture_path("schedule.csv"), NetworkConfig())
        assert [cycle for cycle, _ in schedule] == [0, 0, 20]
        assert schedule[1][1] == UpdateRequest(1, 3, 0xABCD)
        assert schedule[2][1].address == 7

    def test_short_messages_keep_low_order_bits(self, fixture_path, small_network):
        schedule = load_schedule(fixture_path("schedule.csv"), small_network)
        assert schedule[1][1].message().to_hex() == "abcd"

    def test_header_only(self, tmp_path):
        path = tmp_path / "schedule.csv"
        path.write_text("cycle,address,payload_hex\n")
        assert load_schedule(str(path), NetworkConfig()) == []

    def test_empty_file(self, tmp_path):
        path = tmp_path / "schedule.csv"
        path.write_text("")
        with pytest.raises(ConfigError):
            load_schedule(str(path), NetworkConfig())

    def test_wrong_header(self, tmp_path):
        path = tmp_path / "schedule.csv"
        path.write_text("cycle,anchor,payload\n0,1,ff\n")
        with pytest.raises(ConfigError) as ex:
            load_schedule(str(path), NetworkConfig())
        assert ex.value.line_number == 1

    def test_short_payload(self, tmp_path):
        path = tmp_path / "schedule.csv"
        path.write_text(
            "cycle,address,payload_hex\n"
            + "0,1," + "0" * 32 + "\n"
            + "5,2,ff\n"
        )
        with pytest.raises(ConfigError) as ex:
            load_schedule(str(path), NetworkConfig())
        assert ex.value.line_number == 3

    def test_rows_keep_file_lines_after_comments(self, tmp_path):
        path = tmp_path / "schedule.csv"
        path.write_text("cycle,address,payload_hex\n# one short row\n\n0,1,ff\n")
        with pytest.raises(ConfigError) as ex:
            load_schedule(str(path), NetworkConfig())
        assert ex.value.line_number == 4

    def test_comment_above_header(self, tmp_path):
        path = tmp_path / "schedule.csv"
        path.write_text("# anchors\ncycle,address,payload\n")
        with pytest.raises(ConfigError) as ex:
            load_schedule(str(path), NetworkConfig())
        assert ex.value.line_number == 2

    def test_wrong_field_count(self, tmp_path):
        path = tmp_path / "schedule.csv"
        path.write_text(
            "cycle,address,payload_hex\n" + "0,1," + "0" * 32 + "\n" + "\n" + "5,2\n"
        )
        with pytest.raises(ConfigError) as ex:
            load_schedule(str(path), NetworkConfig())
        assert ex.value.line_number == 4

    def test_schedule_not_utf8(self, tmp_path):
        path = tmp_path / "schedule.csv"
        path.write_bytes(b"cycle,address,payload_hex\n0,1,\xc3\x28\n")
        with pytest.raises(ConfigError) as ex:
            load_schedule(str(path), NetworkConfig())
        assert ex.value.line_number == 2

    def test_address_out_of_range(self, tmp_path):
        path = tmp_path / "schedule.csv"
        path.write_text("cycle,address,payload_hex\n0,8," + "0" * 32 + "\n")
        with pytest.raises(InvalidAddressError):
            load_schedule(str(path), NetworkConfig(front_ends=8))

    def test_write_then_load(self, tmp_path, fixture_path):
        schedule = load_schedule(fixture_path("schedule.csv"), NetworkConfig())
        path = str(tmp_path / "copy.csv")
        write_schedule(path, schedule)
        assert load_schedule(path, NetworkConfig()) == schedule
