import copy
import json
from pathlib import Path

import pytest

from effisplit.adapters.document import (
    dump_instance,
    dumps_instance,
    instance_hash,
    load_instance,
    read_instance,
    write_instance,
)
from effisplit.core.errors import InstanceValidationError, ProfileParseError
from effisplit.core.types import Metric, Platform

TOY3_PATH = Path(__file__).parent / "fixtures" / "toy3.json"


class TestLoadInstance:
    def setup_method(self):
        self.document = json.loads(TOY3_PATH.read_text(encoding="utf-8"))

    def test_toy3(self, toy3):
        assert toy3.name == "toy3"
        assert toy3.n == 3
        assert toy3.link.name == "lab"
        assert toy3.layers[2].compressible is False
        assert toy3.segment_cost(1, 3, Platform.MOBILE, Metric.ENERGY) == 32
        assert toy3.explicit_transfers.download[2].latency_ms == 8

    def test_accepts_text_and_mapping(self):
        from_text = load_instance(json.dumps(self.document))
        from_mapping = load_instance(self.document)
        assert from_text == from_mapping

    def test_field_path_in_parse_error(self):
        document = copy.deepcopy(self.document)
        document["layers"][2]["output_bytes"] = "many"
        with pytest.raises(ProfileParseError) as exc_info:
            load_instance(document)
        assert exc_info.value.path == "layers.2.output_bytes"

    def test_unknown_field_rejected(self):
        document = copy.deepcopy(self.document)
        document["layers"][0]["colour"] = "red"
        with pytest.raises(ProfileParseError):
            load_instance(document)

    def test_invalid_json(self):
        with pytest.raises(ProfileParseError):
            load_instance("{not json")

    def test_missing_file(self, tmp_path):
        with pytest.raises(ProfileParseError):
            read_instance(tmp_path / "missing.json")

    def test_validation_failures_are_listed(self):
        document = copy.deepcopy(self.document)
        document["layers"][1]["input_bytes"] = 700
        document["link"]["uplink_mbps"] = 0
        with pytest.raises(InstanceValidationError) as exc_info:
            load_instance(document)
        assert len(exc_info.value.failures) >= 2

    def test_duplicate_profile_entry(self):
        document = copy.deepcopy(self.document)
        document["profiles"]["cloud"].append({"i": 1, "j": 1, "latency_ms": 2})
        with pytest.raises(InstanceValidationError):
            load_instance(document)

    def test_preset_link_by_name(self):
        document = copy.deepcopy(self.document)
        document["link"] = {"name": "4G", "rtt_ms": 10}
        instance = load_instance(document)
        assert instance.link.uplink_mbps == 5.85
        assert instance.link.rtt_ms == 10


class TestDumpInstance:
    def test_round_trip(self, toy3, tmp_path):
        path = tmp_path / "toy3.json"
        write_instance(toy3, path)
        assert read_instance(path) == toy3
        assert load_instance(dumps_instance(toy3)) == toy3

    def test_dump_omits_unset_fields(self, toy3):
        data = dump_instance(toy3)
        assert "zero_ratio" not in data["layers"][2]
        assert data["explicit_transfers"]["upload_input"] == {"latency_ms": 4, "energy_mJ": 8}

    def test_hash(self, toy3):
        assert instance_hash(toy3) == instance_hash(load_instance(dumps_instance(toy3)))
        assert instance_hash(toy3) != instance_hash(toy3.with_batch(2))
        assert len(instance_hash(toy3)) == 64
