"""
Instance generator and instance file tests.
"""

import json

import pytest
from pydantic import ValidationError

from core.exceptions import InstanceFormatError, SchemaVersionError
from modules.instances.schemas import GeneratorSpec, InstanceSpec, LinkSpec
from modules.instances.service_layer import chain_links, generate_instance, toy_instance
from modules.instances.storage import dumps_instance, loads_instance, read_instance, write_instance
from modules.model.service_layer import validate_instance


def test_generation_is_deterministic_per_seed():
    spec = InstanceSpec(zones=2, periods=2, hours_per_period=6, links=chain_links(2), seed=4)
    assert dumps_instance(generate_instance(spec)) == dumps_instance(generate_instance(spec))
    other = generate_instance(spec.model_copy(update={"seed": 5}))
    assert dumps_instance(other) != dumps_instance(generate_instance(spec))


def test_generated_layout(two_zone):
    # 2 zones x (gas, wind) plus one link
    assert two_zone.num_planning == 5
    assert two_zone.planning_names == ["z1/gas", "z1/wind", "z2/gas", "z2/wind", "link/1-2"]
    assert two_zone.planning_groups["link/1-2"] == [4]
    block = two_zone.periods[0]
    # 4 generators x 4 hours plus one link x 4 hours
    assert block.num_ops == 20
    assert block.coupling_matrix.shape == (4 * 4 + 2 * 4, 5)
    assert block.num_slacks == 2 * 4
    assert block.slack_penalty == pytest.approx(1e4 * 30.0)
    assert min(block.op_lower) == pytest.approx(-100.0)


def test_integer_mode_uses_unit_blocks(two_zone_integer):
    generators = [j for j, name in enumerate(two_zone_integer.planning_names) if not name.startswith("link")]
    assert all(two_zone_integer.planning_integer[j] for j in generators)
    assert not two_zone_integer.planning_integer[-1]
    # gas: capex 60 per MW in blocks of 25, at most floor(200 / 25) blocks
    assert two_zone_integer.planning_cost[0] == pytest.approx(60.0 * 25.0)
    assert two_zone_integer.planning_upper[0] == pytest.approx(8.0)


def test_emission_cap_adds_a_row():
    spec = InstanceSpec(zones=1, periods=1, hours_per_period=2, emission_cap=10.0)
    block = generate_instance(spec).periods[0]
    assert block.op_constraints.senses[-1] == "L"
    assert block.op_constraints.rhs[-1] == pytest.approx(10.0)
    assert len(block.balance_rows) == 2


def test_toy_instance():
    toy = toy_instance()
    assert toy.planning_cost == [1.0]
    assert toy.planning_upper == [2.0]
    assert toy.periods[0].op_cost == [2.0]
    assert toy.periods[0].op_constraints.rhs == [1.0]

    idle = toy_instance(with_generator=False)
    assert validate_instance(idle) == []
    assert idle.planning_upper == [0.0]


def test_spec_validation():
    with pytest.raises(ValidationError):
        InstanceSpec(technologies=["nuclear"])
    with pytest.raises(ValidationError):
        LinkSpec(from_zone=1, to_zone=1)
    with pytest.raises(ValidationError):
        InstanceSpec(zones=1, generators=[GeneratorSpec(zone=2, capex=1.0, varcost=1.0, max_cap=1.0)])
    with pytest.raises(ValidationError):
        GeneratorSpec(zone=1, capex=1.0, varcost=1.0, max_cap=1.0, availability=[1.5])
    with pytest.raises(ValidationError):
        InstanceSpec(zones=1, periods=1, hours_per_period=2, demand=[[1.0]])


def test_file_round_trip(tmp_path, two_zone_integer):
    path = write_instance(two_zone_integer, tmp_path / "nested" / "instance.json")
    loaded = read_instance(path)
    assert loaded == two_zone_integer
    assert dumps_instance(loaded) == path.read_text(encoding="utf-8")


def test_truncated_file_names_line_and_section(toy):
    text = dumps_instance(toy)
    cut = text.index("\n", text.index('"periods"') + 40)
    with pytest.raises(InstanceFormatError) as excinfo:
        loads_instance(text[:cut])
    error = excinfo.value
    assert error.line is not None and error.line > 1
    assert error.field is not None
    assert "unexpected end of document" in str(error)


def test_unknown_field_is_rejected(toy):
    document = json.loads(dumps_instance(toy))
    document["instance"]["periods"][0]["storage"] = []
    with pytest.raises(InstanceFormatError) as excinfo:
        loads_instance(json.dumps(document, indent=2))
    assert "Unknown field" in str(excinfo.value)
    assert excinfo.value.field == "periods.0.storage"


def test_missing_section(toy):
    document = json.loads(dumps_instance(toy))
    del document["instance"]["planning_cost"]
    with pytest.raises(InstanceFormatError) as excinfo:
        loads_instance(json.dumps(document))
    assert "Missing field 'planning_cost'" in str(excinfo.value)


def test_schema_version_mismatch(toy):
    document = json.loads(dumps_instance(toy))
    document["schema_version"] = 99
    with pytest.raises(SchemaVersionError):
        loads_instance(json.dumps(document))
