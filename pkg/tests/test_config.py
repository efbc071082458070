import json

import pytest

from alpsim.config import (
    load_config,
    reference_config,
    reference_config_text,
    validate_recipe_against_config,
)
from alpsim.errors import (
    ConfigPhysicsError,
    ConfigReferenceError,
    ConfigSchemaError,
)
from alpsim.recipe import ControlState, parse_recipe


def _run2_doc():
    return json.loads(reference_config_text("run2"))


class TestLoadConfig:
    def test_run2_inventory(self, run2):
        assert len(run2.chemicals) == 6
        assert len(run2.bubblers) == 4
        assert [b.chemical for b in run2.bubblers] == ["A", "B", "C", "D"]
        assert run2.surface_names() == ["sA", "sB", "sC", "sD"]
        assert [s.name for s in run2.solids] == ["S"]
        assert len(run2.reactions) == 10
        products = {gp.chemical for r in run2.reactions for gp in r.gas_products}
        assert products == {"B", "E", "F"}  # B is both a reactant and a product

    def test_empty_document_is_schema_error(self):
        with pytest.raises(ConfigSchemaError):
            load_config("")
        with pytest.raises(ConfigSchemaError):
            load_config("{}")

    def test_dangling_surface_reference(self):
        doc = _run2_doc()
        doc["reactions"][0]["surface_reactant"] = "sE"
        with pytest.raises(ConfigReferenceError) as err:
            load_config(json.dumps(doc))
        assert "sE" in str(err.value)

    def test_unknown_key_rejected(self):
        doc = _run2_doc()
        doc["extra_section"] = {}
        with pytest.raises(ConfigSchemaError):
            load_config(json.dumps(doc))

    def test_negative_site_density_is_physics_error(self):
        doc = _run2_doc()
        doc["surfaces"][0]["site_density"] = -1e-5
        with pytest.raises(ConfigPhysicsError):
            load_config(json.dumps(doc))

    def test_pump_ordering_is_physics_error(self):
        doc = _run2_doc()
        doc["pump"]["base_pressure"] = 300.0
        with pytest.raises(ConfigPhysicsError):
            load_config(json.dumps(doc))

    def test_round_trip_is_idempotent(self, run2):
        once = load_config(run2.to_json())
        twice = load_config(once.to_json())
        assert once == run2
        assert twice == once

    def test_bubbler_chemical_needs_antoine(self):
        doc = _run2_doc()
        doc["chemicals"][0]["antoine"] = None
        with pytest.raises(ConfigPhysicsError):
            load_config(json.dumps(doc))

    def test_unknown_reference_run(self):
        with pytest.raises(ConfigReferenceError):
            reference_config("run3")


class TestReferenceConfigs:
    def test_every_reaction_has_one_surface_pair(self, run2):
        for r in run2.reactions:
            assert isinstance(r.surface_reactant, str)
            assert isinstance(r.surface_product, str)

    def test_wildcard_decomposition_channels(self, run2):
        wild = [r for r in run2.reactions if r.surface_reactant == "any"]
        assert len(wild) == 2
        by_gas = {r.gas_reactant: r for r in wild}
        assert by_gas["C"].rate_law.threshold == 600.0
        assert by_gas["D"].rate_law.threshold == 500.0
        assert by_gas["C"].solid_delta > 0

    def test_runs_differ_only_in_d_entries(self, run1, run2):
        d1 = json.loads(run1.to_json())
        d2 = json.loads(run2.to_json())

        def strip_d(doc):
            for chem in doc["chemicals"]:
                if chem["name"] == "D":
                    chem["antoine"] = None
            for r in doc["reactions"]:
                if r["gas_reactant"] == "D" and r["surface_reactant"] != "any":
                    r["rate_law"] = None
            return doc

        assert strip_d(d1) == strip_d(d2)

    def test_d_is_harder_in_run1(self, run1, run2):
        from alpsim.flow import vapor_pressure

        p1 = vapor_pressure(run1.chemical("D").antoine, 300.0)
        p2 = vapor_pressure(run2.chemical("D").antoine, 300.0)
        assert p1 < p2 / 10.0
        k1 = [r.rate_law.k0 for r in run1.reactions
              if r.gas_reactant == "D" and r.surface_reactant != "any"]
        k2 = [r.rate_law.k0 for r in run2.reactions
              if r.gas_reactant == "D" and r.surface_reactant != "any"]
        assert max(k1) < min(k2) / 10.0


class TestRecipeValidation:
    def test_temperature_above_hard_limit(self, run2):
        recipe = parse_recipe("1\tT\t0\t750\t0\n")
        report = validate_recipe_against_config(recipe, run2)
        assert not report.ok
        assert any("750" in v and "hard limit" in v for v in report.hard)

    def test_codosing_is_soft_warning_only(self, run2):
        recipe = parse_recipe("1\tV\t2\t1\t0\n\tV\t3\t1\t1\n\tV\t2\t0\t0\n\tV\t3\t0\t5\n")
        report = validate_recipe_against_config(recipe, run2)
        assert report.ok
        assert any("co-dosing" in w for w in report.soft)

    def test_empty_recipe_empty_report(self, run2):
        report = validate_recipe_against_config(parse_recipe(""), run2)
        assert report.ok and not report.soft

    def test_unknown_valve_is_hard(self, run2):
        report = validate_recipe_against_config(parse_recipe("1\tV\t9\t1\t0\n"), run2)
        assert any("unknown valve id 9" in v for v in report.hard)

    def test_unknown_mfc_is_hard(self, run2):
        report = validate_recipe_against_config(parse_recipe("1\tM\t2\t50\t0\n"), run2)
        assert any("unknown MFC id 2" in v for v in report.hard)

    def test_mfc_range_is_hard(self, run2):
        report = validate_recipe_against_config(parse_recipe("1\tM\t1\t150\t0\n"), run2)
        assert any("150" in v for v in report.hard)

    def test_unknown_temperature_controller_is_hard(self, run2):
        report = validate_recipe_against_config(parse_recipe("1\tT\t7\t350\t0\n"), run2)
        assert any("temperature controller" in v for v in report.hard)

    def test_bubbler_limit_is_hard(self, run2):
        report = validate_recipe_against_config(parse_recipe("1\tT\t1\t450\t0\n"), run2)
        assert any("bubbler" in v for v in report.hard)

    def test_decomposition_temperature_soft_warning(self, run2):
        report = validate_recipe_against_config(parse_recipe("1\tT\t0\t650\t0\n"), run2)
        assert report.ok
        assert any("decomposition" in w and "D" in w for w in report.soft)

    def test_initial_controls_feed_codosing_check(self, run2):
        recipe = parse_recipe("1\tV\t2\t1\t1\n")
        pre_open = ControlState(valves={3: 1})
        report = validate_recipe_against_config(recipe, run2, pre_open)
        assert any("co-dosing" in w for w in report.soft)
