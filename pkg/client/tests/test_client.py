import pytest

from alpclient import (
    BudgetExceeded,
    ClientSession,
    ParseRejected,
    ValidationRejected,
    estimate_duration,
    looks_like_recipe,
)

GROW = "1\tM\t1\t50\t2\n1\tV\t3\t1\t1\n\tV\t3\t0\t8\n"
TABLE = (
    "1\tM\t1\t50\t0\n\tV\t2\t0\t0\n\tV\t3\t0\t10\n"
    "5\tV\t2\t1\t1\n\tV\t2\t0\t10\n\tV\t3\t1\t1\n\tV\t3\t0\t10\n"
)


class TestDurationEstimate:
    def test_table_recipe(self):
        assert estimate_duration(TABLE) == 120.0

    def test_matches_server_for_every_accepted_recipe(self, session):
        session.open("run2", 7200.0)
        for recipe in (GROW, TABLE, "1\tV\t4\t1\t0.3\n\tV\t4\t0\t2.7\n"):
            result = session.perform(recipe)
            assert result.duration == estimate_duration(recipe)

    def test_recipe_recognizer(self):
        assert looks_like_recipe(TABLE)
        assert not looks_like_recipe("please grow a film\n")
        assert not looks_like_recipe("")


class TestPerform:
    def test_accounting_mirrors_server(self, session):
        session.open("run2", 7200.0)
        result = session.perform(TABLE)
        assert result.time_used == 120.0
        assert session.remaining == 7080.0
        assert session.budget()["remaining"] == 7080.0

    def test_over_budget_leaves_mirror_untouched(self, session):
        session.open("run2", 10.0)
        with pytest.raises(BudgetExceeded) as err:
            session.perform(GROW)  # 11 s
        assert err.value.remaining == 10.0
        assert session.used == 0.0
        session.budget()  # still reconciles

    def test_malformed_recipe_raises_with_line(self, session):
        session.open("run2", 100.0)
        with pytest.raises(ParseRejected) as err:
            session.perform("1\tQ\t1\t1\t0\n")
        assert err.value.line == 1
        assert session.used == 0.0

    def test_hard_violation_raises_typed(self, session):
        session.open("run2", 100.0)
        with pytest.raises(ValidationRejected) as err:
            session.perform("1\tT\t0\t750\t1\n")
        assert err.value.violations
        assert session.used == 0.0

    def test_retrieve_full_record(self, session):
        session.open("run2", 100.0)
        result = session.perform(GROW)
        record = session.retrieve(result.id)
        assert record["recipe_text"] == GROW
        assert len(record["trace"]["time"]) == 111

    def test_market_endpoint(self, session):
        assert session.market_query("word") is True
        assert session.market_query("apple") is False
