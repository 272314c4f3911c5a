"""Profiling statistics, the profile store, context selection, and sampling."""

from __future__ import annotations

from collections import Counter

import pytest

from oracles import oracle_column_stats, random_table
from wranglekit.context import detect
from wranglekit.profiling import (
    DataContextBundle,
    ProfileStore,
    profile_column,
    profile_table,
    refresh,
    sample_values,
    select_contexts,
    sortedness_of,
    value_format_of,
)
from wranglekit.table import (
    CATEGORICAL,
    INTEGER,
    STRING,
    Column,
    DataTable,
    Environment,
    load_csv,
)


def _stats(profile):
    out = {
        "null_count": profile.null_count,
        "cardinality": profile.cardinality,
        "sortedness": profile.sortedness,
    }
    if profile.value_range is not None:
        out["min"], out["max"] = profile.value_range
    else:
        out["min"] = out["max"] = None
    return out


def test_profile_matches_oracle_on_random_tables(rng):
    for _ in range(120):
        table = random_table(rng)
        contexts = profile_table(table)
        for col, profile in zip(table.columns, contexts.columns):
            expected = oracle_column_stats(list(col.values))
            got = _stats(profile)
            if not col.dtype.is_numeric:
                expected["min"] = expected["max"] = None
            assert got == expected, (col.name, col.values)


def test_profile_is_pure():
    table = DataTable(
        "t",
        [Column("a", INTEGER, (3, 1, None, 2)), Column("b", STRING, ("x", "y", "x", None))],
    )
    first = profile_table(table, seed=7)
    second = profile_table(table, seed=7)
    assert first == second


def test_empty_table_degenerates_cleanly():
    table = DataTable("t", [Column("a", INTEGER, ())])
    contexts = profile_table(table)
    profile = contexts.columns[0]
    assert profile.null_count == 0
    assert profile.cardinality == 0
    assert profile.sortedness == "none"
    assert profile.value_range is None
    assert contexts.rows.rows == ()


def test_constant_column_counts_as_ascending():
    assert sortedness_of((4, 4, 4)) == "ascending"
    assert sortedness_of((None, "a")) == "none"
    assert sortedness_of(()) == "none"


def test_row_sample_is_first_15_rows():
    values = tuple(range(40))
    table = DataTable("t", [Column("a", INTEGER, values)])
    contexts = profile_table(table)
    assert len(contexts.rows.rows) == 15
    assert [r[0] for r in contexts.rows.rows] == list(range(15))
    assert contexts.rows.columns == ("a",)


def test_unique_values_capped_and_reproducible():
    values = tuple(f"v{i:03d}" for i in range(80))
    table = DataTable("t", [Column("a", STRING, values)])
    samples = [
        profile_table(table, seed=3).columns[0].unique_values for _ in range(10)
    ]
    assert all(s == samples[0] for s in samples)
    assert len(samples[0]) == 50
    assert set(samples[0]) <= set(values)
    # order of the sample follows first occurrence in the column
    indices = [values.index(v) for v in samples[0]]
    assert indices == sorted(indices)


def test_value_frequency_is_count_ordered_and_truncated():
    raw = ["a"] * 5 + ["b"] * 3 + ["c"] * 3 + ["d"]
    table = DataTable("t", [Column("x", CATEGORICAL, tuple(raw))])
    profile = profile_table(table).columns[0]
    counts = Counter(raw)
    assert dict(profile.value_frequency) == dict(counts)
    assert [v for v, _ in profile.value_frequency] == ["a", "b", "c", "d"]

    wide = tuple(f"w{i:03d}" for i in range(70))
    capped = profile_table(DataTable("t", [Column("x", STRING, wide)]))
    assert len(capped.columns[0].value_frequency) == 50


# ---------------------------------------------------------------------------
# Value-format templates


@pytest.mark.parametrize(
    "samples, expected",
    [
        (["90 minutes", "85 minutes"], "D+ 'minutes'"),
        (["US", "GB", "FR"], "L+"),
        (["A-1", "B-22"], "L+-D+"),
        (["tt9071322", "tt6751668"], "'tt'D+"),
        (["12 min", "7 min", "n/a"], "D+ 'min'"),
        (["1", "a"], "D+"),  # tie broken toward the smaller rendered template
        ([], None),
        ([""], None),
    ],
)
def test_value_format_templates(samples, expected):
    assert value_format_of(samples) == expected


def test_fixture_duration_column_format(data_dir):
    movies = load_csv(data_dir / "movies.csv", "movies")
    contexts = profile_table(movies)
    duration = contexts.column("durationOfTime")
    assert duration.value_format == "D+ 'minutes'"
    imdb = profile_table(load_csv(data_dir / "ratings.csv", "ratings"))
    assert imdb.column("imdbId").value_format == "'tt'D+"


def test_fixture_sorted_column(data_dir):
    covid = load_csv(data_dir / "covid_cases.csv", "covid")
    contexts = profile_table(covid)
    assert contexts.column("cases").sortedness == "descending"
    assert contexts.column("population").sortedness == "none"
    assert contexts.table.shape == (20, 4)


# ---------------------------------------------------------------------------
# Store refresh


def _env(**tables) -> Environment:
    env = Environment()
    env.commit(dict(tables))
    return env


def _tiny(name, n=3):
    return DataTable(name, [Column("a", INTEGER, tuple(range(n)))])


def test_refresh_profiles_everything_initially():
    env = _env(t1=_tiny("t1"), t2=_tiny("t2"))
    store = refresh(env, ProfileStore.empty())
    assert store.version == env.version
    assert sorted(store.last_profiled) == ["t1", "t2"]
    assert store.table_names() == ["t1", "t2"]


def test_refresh_reprofiles_only_changed_bindings():
    env = _env(t1=_tiny("t1"), t2=_tiny("t2"), t3=_tiny("t3"))
    store = refresh(env, ProfileStore.empty())
    kept = store.get("t1")
    env.commit({**env.snapshot(), "t2": _tiny("t2", n=5)})
    fresh = refresh(env, store)
    assert fresh.last_profiled == ("t2",)
    assert fresh.get("t1") is kept
    assert fresh.get("t2").table.shape == (5, 1)


def test_refresh_noop_when_current():
    env = _env(t1=_tiny("t1"))
    store = refresh(env, ProfileStore.empty())
    assert refresh(env, store) is store


def test_refresh_drops_deleted_bindings():
    env = _env(t1=_tiny("t1"), t2=_tiny("t2"))
    store = refresh(env, ProfileStore.empty())
    env.commit({"t1": env.lookup("t1")})
    fresh = refresh(env, store)
    assert fresh.table_names() == ["t1"]
    assert fresh.last_profiled == ()


def test_refresh_rejects_stale_environment():
    env = _env(t1=_tiny("t1"))
    store = refresh(env, ProfileStore.empty())
    older = Environment(bindings=env.snapshot(), version=0)
    with pytest.raises(ValueError):
        refresh(older, store)


# ---------------------------------------------------------------------------
# Context selection


@pytest.fixture
def fixture_store(data_dir):
    env = Environment()
    env.commit(
        {
            "covid_data": load_csv(data_dir / "covid_cases.csv", "covid_data"),
            "country_codes": load_csv(data_dir / "country_codes.csv", "country_codes"),
            "movies": load_csv(data_dir / "movies.csv", "movies"),
        }
    )
    return env, refresh(env, ProfileStore.empty())


def test_series_context_is_column_only(fixture_store):
    env, store = fixture_store
    ctx = detect('covid_data["country"] = covid_data["country"].str.replace("')
    bundle = select_contexts(ctx, store, env)
    assert bundle.operator_class == "series"
    assert bundle.table_contexts == ()
    assert bundle.row_contexts == ()
    assert [c.name for c in bundle.column_contexts] == ["country"]
    assert bundle.column_contexts[0].table == "covid_data"


def test_open_merge_offers_join_candidates(fixture_store):
    env, store = fixture_store
    ctx = detect("df3 = covid_data.merge(")
    bundle = select_contexts(ctx, store, env)
    names = [t.name for t in bundle.table_contexts]
    assert names[0] == "covid_data"
    assert set(names) == {"covid_data", "country_codes", "movies"}
    assert bundle.rationale["table:country_codes"] == "join candidate"
    assert [r.table for r in bundle.row_contexts] == ["covid_data"]


def test_unknown_operator_defaults_to_table_level(fixture_store):
    env, store = fixture_store
    ctx = detect("x = covid_data.pivot(")
    bundle = select_contexts(ctx, store, env)
    assert bundle.operator_class == "others"
    assert [t.name for t in bundle.table_contexts] == ["covid_data"]
    assert bundle.column_contexts == ()
    assert bundle.row_contexts == ()


def test_filter_with_named_column_promotes_its_profile(fixture_store):
    env, store = fixture_store
    ctx = detect('x = covid_data[covid_data["cases"] > ')
    bundle = select_contexts(ctx, store, env)
    assert [c.name for c in bundle.column_contexts] == ["cases"]
    assert [t.name for t in bundle.table_contexts] == ["covid_data"]
    assert [r.table for r in bundle.row_contexts] == ["covid_data"]


def test_bare_subscript_includes_row_sample(fixture_store):
    env, store = fixture_store
    ctx = detect("x = covid_data[")
    bundle = select_contexts(ctx, store, env)
    assert [r.table for r in bundle.row_contexts] == ["covid_data"]
    assert bundle.column_contexts == ()


def test_bundle_payload_is_json_ready(fixture_store):
    import json

    env, store = fixture_store
    ctx = detect("df3 = covid_data.merge(")
    payload = select_contexts(ctx, store, env).to_payload()
    assert json.loads(json.dumps(payload)) == payload


def test_bundle_never_references_unknown_tables(fixture_store):
    env, store = fixture_store
    ctx = detect("x = missing_table.head(")
    bundle = select_contexts(ctx, store, env)
    known = set(store.table_names())
    assert all(t.name in known for t in bundle.table_contexts)
    assert all(c.table in known for c in bundle.column_contexts)


# ---------------------------------------------------------------------------
# Value sampling


def test_sample_values_prefix_scan_matches_oracle(rng):
    for _ in range(100):
        table = random_table(rng, max_rows=30)
        col = table.columns[0]
        prefix = rng.choice(["", "a", "U", "1", "-", "Un"])
        got = sample_values(col, prefix, cap=50, seed=11, table_name=table.name)
        from wranglekit.profiling import value_text

        oracle = []
        for v in col.values:
            if v is None or v in oracle:
                continue
            if value_text(v).startswith(prefix):
                oracle.append(v)
        assert got == oracle[: len(got)] or set(got) <= set(oracle)
        if len(oracle) <= 50:
            assert got == oracle


def test_sample_values_examples():
    col = Column("c", STRING, ("United States", "US", "Unified", None, "US"))
    assert sample_values(col, "Uni") == ["United States", "Unified"]
    assert sample_values(col, "zzz") == []
    assert sample_values(col, "") == ["United States", "US", "Unified"]


def test_sample_values_cap_and_determinism():
    col = Column("c", STRING, tuple(f"v{i:04d}" for i in range(200)))
    runs = [sample_values(col, "", cap=50, seed=9, table_name="t") for _ in range(10)]
    assert all(r == runs[0] for r in runs)
    assert len(runs[0]) == 50
    assert set(runs[0]) <= set(col.values)
    assert sample_values(col, "", cap=50, seed=10, table_name="t") != runs[0]


def test_sample_values_rejects_bad_cap():
    col = Column("c", STRING, ("a",))
    with pytest.raises(ValueError):
        sample_values(col, "", cap=0)
