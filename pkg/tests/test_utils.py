import os

import pytest
from pydantic import ValidationError

from measures import Verdict
from measures.measure_1d import atomic, lebesgue
from shifts.tc_class import is_subnormal
from utils import (
    InputError, ScanConfig, setup_logging, load_json, parse_measure, parse_measure_2d, parse_weight_seq,
    parse_five_tuple, parse_grid, format_measure, format_verdict
)

SUBNORMAL_TUPLE = {
    "sigma": {"atoms": [[0.0, 0.64], [1.0, 0.36]]},
    "tau": {"atoms": [[0.0, 0.36], [1.0, 0.64]]},
    "a": 0.7,
    "xi": {"atoms": [[1.0, 1.0]]},
    "eta": {"atoms": [[1.0, 1.0]]}
}


class TestLoadJson:
    def test_example_files(self, data_dir):
        ft = parse_five_tuple(load_json(os.path.join(data_dir, "example_subnormal.json")))
        assert is_subnormal(ft).passed
        ft = parse_five_tuple(load_json(os.path.join(data_dir, "example_not_subnormal.json")))
        assert not is_subnormal(ft).passed

    def test_missing_file(self, tmp_path):
        with pytest.raises(InputError):
            load_json(str(tmp_path / "missing.json"))

    def test_malformed_file(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{\"sigma\": [")
        with pytest.raises(InputError):
            load_json(str(path))


class TestParseFiveTuple:
    def test_valid(self):
        assert parse_five_tuple(SUBNORMAL_TUPLE).a == 0.7

    @pytest.mark.parametrize("key", ["sigma", "a", "eta"])
    def test_missing_field(self, key):
        data = {k: v for k, v in SUBNORMAL_TUPLE.items() if k != key}
        with pytest.raises(InputError):
            parse_five_tuple(data)

    def test_non_positive_a(self):
        with pytest.raises(InputError):
            parse_five_tuple({**SUBNORMAL_TUPLE, "a": -0.7})

    def test_not_a_probability_measure(self):
        with pytest.raises(InputError):
            parse_five_tuple({**SUBNORMAL_TUPLE, "sigma": {"atoms": [[1.0, 0.5]]}})


class TestParseMeasures:
    def test_density(self):
        mu = parse_measure({"pieces": [{"lo": 0.0, "hi": 1.0, "terms": [[1.0, 0.0]]}]})
        assert mu.total_mass() == pytest.approx(1.0)
        assert mu.moment(2) == pytest.approx(lebesgue().moment(2))

    def test_negative_location(self):
        with pytest.raises(InputError):
            parse_measure({"atoms": [[-0.5, 1.0]]})

    def test_empty_interval(self):
        with pytest.raises(InputError):
            parse_measure({"pieces": [{"lo": 0.5, "hi": 0.5, "terms": [[1.0, 0.0]]}]})

    def test_non_integrable_density(self):
        with pytest.raises(InputError):
            parse_measure({"pieces": [{"lo": 0.0, "hi": 1.0, "terms": [[1.0, -1.0]]}]})

    def test_measure_2d(self):
        mu = parse_measure_2d({"terms": [{"weight": 0.5, "s": {"atoms": [[1.0, 1.0]]},
                                          "t": {"atoms": [[0.5, 1.0]]}}]})
        assert mu.moment(1, 1) == pytest.approx(0.25)


class TestParseWeightSeq:
    def test_explicit_weights(self):
        w = parse_weight_seq({"weights": [0.5, 1.0]})
        assert w.weights(4) == [0.5, 1.0, 1.0, 1.0]

    def test_finite_weights(self):
        assert parse_weight_seq({"weights": [0.5, 1.0], "tail": None}).tail is None

    def test_backward_extension(self):
        w = parse_weight_seq({"backext": {"a": 0.7, "inner": {"measure": {"atoms": [[1.0, 1.0]]}}}})
        assert w.weights(3) == [0.7, 1.0, 1.0]

    def test_exactly_one_source(self):
        with pytest.raises(InputError):
            parse_weight_seq({"weights": [0.5], "measure": {"atoms": [[1.0, 1.0]]}})

    def test_unknown_tail(self):
        with pytest.raises(InputError):
            parse_weight_seq({"weights": [0.5], "tail": "geometric"})


class TestParseGrid:
    def test_explicit_tables(self, data_dir):
        grid = parse_grid(load_json(os.path.join(data_dir, "tensor_grid.json")), window=(4, 4))
        assert grid.alpha(3, 2) == 1.0
        assert grid.beta(0, 0) == 0.6

    def test_tc_grid(self, data_dir):
        grid = parse_grid(load_json(os.path.join(data_dir, "example_tc_grid.json")), window=(4, 4))
        assert grid.beta(1, 0) == pytest.approx(0.7 * 0.8 / 0.6)

    def test_needs_one_source(self):
        with pytest.raises(InputError):
            parse_grid({"alphaRows": [[1.0]]})
        with pytest.raises(InputError):
            parse_grid({"tc": SUBNORMAL_TUPLE, "alphaRows": [[1.0]], "betaRows": [[1.0]]})


class TestScanConfig:
    def test_defaults(self):
        config = ScanConfig()
        assert config.omega == (0.75, 0.8333333333333334, 0.9)
        assert config.output_format == "csv"

    def test_svg_output(self):
        assert ScanConfig(out="results/region.svg").output_format == "svg"

    def test_omega_must_increase(self):
        with pytest.raises(ValidationError):
            ScanConfig(omega=(0.9, 0.8, 0.95))

    def test_unknown_output(self):
        with pytest.raises(ValidationError):
            ScanConfig(out="region.png")


class TestFormatting:
    def test_measure(self):
        assert format_measure(atomic([(0.0, 0.3136), (1.0, 0.0464)])) == "0.3136*delta(0) + 0.0464*delta(1)"

    def test_zero_measure(self):
        assert format_measure(atomic([])) == "0"

    def test_density(self):
        assert format_measure(lebesgue()) == "[1*t^0] dt on [0, 1]"

    def test_verdict(self):
        assert format_verdict("psi", Verdict(True, 0.51)) == "psi: PASS (margin 0.51)"
        failing = Verdict(False, -0.06, witness=(0.0, -0.06), reason="negative atom at t=0")
        assert format_verdict("phi", failing) == "phi: FAIL (margin -0.06), witness (0.0, -0.06) - negative atom at t=0"


def test_setup_logging(tmp_path):
    log_file = setup_logging(str(tmp_path / "logs"), prefix="test")
    assert os.path.dirname(log_file) == str(tmp_path / "logs")
    assert os.path.basename(log_file).startswith("test_")
    assert os.path.exists(log_file)
