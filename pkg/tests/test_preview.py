"""Highlighting and preview tests.

The preview module only ever *simulates* execution, so the key property is
equivalence: whatever the preview claims must match what actually running
the statement would produce.  Randomized operations over fixture tables
check that; the row-filter form is additionally checked against the
dict-of-rows predicate oracle.
"""

from __future__ import annotations

import json
import random

import pytest

from oracles import (
    oracle_predicate,
    preview_matches_execution,
    random_executable_op,
    random_table,
)
from wranglekit.completion import CompletionItem
from wranglekit.context import detect
from wranglekit.ops import ColumnRef, Compare, Literal, TransformOp, apply_transform
from wranglekit.preview import (
    PREVIEW_SAMPLE_ROWS,
    HighlightSpec,
    classify_form,
    closed_statement,
    compute_highlight,
    compute_preview,
    preview_ready,
)
from wranglekit.statements import OpStatement, render_statement
from wranglekit.table import Environment, load_csv

from conftest import DATA_DIR, make_env, make_table

# --- fixtures --------------------------------------------------------------


def focused_item(text: str, **overrides) -> CompletionItem:
    fields = dict(text=text, label=text, kind="multi_token", provenance="model")
    fields.update(overrides)
    return CompletionItem(**fields)


@pytest.fixture(scope="module")
def movie_env():
    env = Environment()
    env.commit(
        {
            "movies": load_csv(DATA_DIR / "movies.csv", "movies"),
            "ratings": load_csv(DATA_DIR / "ratings.csv", "ratings"),
        }
    )
    return env


@pytest.fixture(scope="module")
def joined_env(movie_env):
    merge = TransformOp(
        "merge",
        {
            "left": "movies",
            "right": "ratings",
            "left_on": "netflixTitle",
            "right_on": "title",
        },
    )
    joined = apply_transform(merge, movie_env)
    env = Environment()
    env.commit({**movie_env.snapshot(), "joined": joined})
    return env


@pytest.fixture(scope="module")
def covid_env():
    env = Environment()
    env.commit(
        {
            "covid_data": load_csv(DATA_DIR / "covid_cases.csv", "covid_data"),
            "country_codes": load_csv(DATA_DIR / "country_codes.csv", "country_codes"),
        }
    )
    return env


# --- highlighting ----------------------------------------------------------


def test_mentioned_tables_expand_and_others_collapse():
    env = make_env(
        make_table("df1", a=[1]), make_table("df2", a=[2]), make_table("df3", a=[3])
    )
    ctx = detect("combined = pd.concat([df1, df2")
    spec = compute_highlight(ctx, None, env)
    assert set(spec.expand_tables) == {"df1", "df2"}
    assert spec.collapse_others is True
    assert spec.highlight_columns == ()
    # no column is highlighted, so no table shows sample rows yet
    assert spec.show_sample_rows == {"df1": False, "df2": False}


def test_focused_candidate_expands_its_tables_too():
    env = make_env(
        make_table("df1", a=[1]), make_table("df2", a=[2]), make_table("df3", a=[3])
    )
    ctx = detect("combined = pd.concat([df1, df2")
    item = focused_item(", df3])", mentioned_tables=("df3",))
    spec = compute_highlight(ctx, item, env)
    assert set(spec.expand_tables) == {"df1", "df2", "df3"}


def test_focus_switch_keeps_statement_derived_parts():
    env = make_env(
        make_table("df1", a=[1]), make_table("df2", a=[2]), make_table("df3", a=[3])
    )
    ctx = detect("combined = pd.concat([df1, df2")
    with_df3 = compute_highlight(ctx, focused_item(", df3])", mentioned_tables=("df3",)), env)
    plain = compute_highlight(ctx, focused_item("])"), env)
    for name in ("df1", "df2"):
        assert name in with_df3.expand_tables
        assert name in plain.expand_tables
    assert plain.expand_tables == ("df1", "df2")


def test_column_mention_highlights_and_shows_rows(movie_env):
    ctx = detect('movies["durationOfTime"] = movies["durationOfTime"].str.replace(" minutes"')
    spec = compute_highlight(ctx, None, movie_env)
    assert ("movies", "durationOfTime") in spec.highlight_columns
    assert spec.show_sample_rows["movies"] is True


def test_column_past_viewport_is_anchored(joined_env):
    # joined has 14 columns; durationOfTime sits past the six visible ones
    joined = joined_env.lookup("joined")
    assert joined.n_cols == 14
    assert joined.column_names.index("durationOfTime") >= 6

    ctx = detect('slim = joined[["netflixTitle", "')
    item = focused_item(
        'durationOfTime"]]',
        mentioned_columns=(("joined", "durationOfTime"),),
    )
    spec = compute_highlight(ctx, item, joined_env)
    assert ("joined", "netflixTitle") in spec.highlight_columns
    assert ("joined", "durationOfTime") in spec.highlight_columns
    assert spec.anchored_columns == (("joined", "durationOfTime"),)
    assert ("joined", "netflixTitle") not in spec.anchored_columns


def test_unknown_names_are_reported_not_highlighted(movie_env):
    ctx = detect("x = ghost.head(")
    spec = compute_highlight(ctx, None, movie_env)
    assert "ghost" in spec.missing_names
    assert "ghost" not in spec.expand_tables

    ctx2 = detect('x = movies.sort_values(by="')
    item = focused_item(
        'Rating")',
        mentioned_columns=(("movies", "Rating"),),
        unknown_names=("movies.Rating",),
        verified=False,
    )
    spec2 = compute_highlight(ctx2, item, movie_env)
    assert "movies.Rating" in spec2.missing_names
    assert ("movies", "Rating") not in spec2.highlight_columns


def test_blank_context_yields_empty_spec(movie_env):
    spec = compute_highlight(detect(""), None, movie_env)
    assert spec == HighlightSpec()


def test_highlight_payload_is_json_clean(joined_env):
    ctx = detect('slim = joined[["netflixTitle", "')
    payload = compute_highlight(ctx, None, joined_env).to_payload()
    assert json.loads(json.dumps(payload)) == payload
    assert set(payload) == {
        "expand_tables",
        "collapse_others",
        "show_sample_rows",
        "highlight_columns",
        "anchored_columns",
        "missing_names",
    }


# --- readiness -------------------------------------------------------------


def test_complete_filter_is_ready_via_auto_close(covid_env):
    ctx = detect('x = covid_data[covid_data["cases"] > 1000')
    assert preview_ready(ctx, None) is True


def test_partial_merge_becomes_ready_with_focused_candidate():
    ctx = detect("j = movies.merge(ratings")
    assert preview_ready(ctx, None) is False
    item = focused_item(', left_on="netflixTitle", right_on="title")')
    assert preview_ready(ctx, item) is True


def test_load_and_blank_statements_are_never_ready():
    assert preview_ready(detect('t = load_csv("x.csv")'), None) is False
    assert preview_ready(detect(""), None) is False
    assert closed_statement(detect(""), None) is None


def test_garbled_text_is_not_ready():
    assert preview_ready(detect("x = movies.merge(], how"), None) is False


# --- form classification ---------------------------------------------------

FORM_CASES = [
    (TransformOp("merge", {"left": "a", "right": "b", "left_on": "k", "right_on": "k"}), "table_pair"),
    (TransformOp("concat", {"tables": ["a", "b"]}), "table_pair"),
    (TransformOp("filter", {"table": "t", "predicate": Compare("==", ColumnRef("t", "c"), Literal(1))}), "row_filter"),
    (TransformOp("select_columns", {"table": "t", "columns": ["c"]}), "table_pair"),
    (TransformOp("sort_values", {"table": "t", "by": "c"}), "table_pair"),
    (TransformOp("groupby_agg", {"table": "t", "by": "c", "agg": [("d", "count")]}), "table_pair"),
    (TransformOp("fillna", {"table": "t", "column": "c", "value": 0}), "column_diff"),
    (TransformOp("fillna", {"table": "t", "value": 0}), "table_pair"),
    (TransformOp("str_replace", {"table": "t", "column": "c", "pattern": "a", "replacement": ""}), "column_diff"),
    (TransformOp("rename", {"table": "t", "mapping": {"c": "d"}}), "table_pair"),
    (TransformOp("drop_duplicates", {"table": "t"}), "table_pair"),
    (TransformOp("head", {"table": "t", "n": 3}), "table_pair"),
    (TransformOp("astype", {"table": "t", "column": "c", "dtype": "str"}), "column_diff"),
]


@pytest.mark.parametrize("op,form", FORM_CASES, ids=lambda v: v if isinstance(v, str) else v.kind)
def test_every_kind_classifies(op, form):
    got = classify_form(op)
    assert got == form
    assert got in ("column_diff", "row_filter", "table_pair")


def test_assign_splits_on_target_existence():
    env = make_env(make_table("t", c=[1, 2]))
    existing = TransformOp(
        "assign_column",
        {"table": "t", "target_column": "c", "expr": ColumnRef("t", "c")},
    )
    fresh = TransformOp(
        "assign_column",
        {"table": "t", "target_column": "d", "expr": ColumnRef("t", "c")},
    )
    assert classify_form(existing, env) == "column_diff"
    assert classify_form(fresh, env) == "table_pair"
    # without an environment there is nothing to diff against
    assert classify_form(existing) == "table_pair"


# --- column diff previews ----------------------------------------------------


def test_suffix_strip_marks_every_row_changed(movie_env):
    ctx = detect(
        'movies["durationOfTime"] = movies["durationOfTime"].str.replace(" minutes"'
    )
    result = compute_preview(ctx, focused_item(', "")'), movie_env)
    assert result.ok and result.form == "column_diff"
    assert result.table == "movies" and result.column == "durationOfTime"
    original = movie_env.lookup("movies").column("durationOfTime").values
    assert result.original_values == original
    assert result.new_values == tuple(v.replace(" minutes", "") for v in original)
    assert result.changed_mask == (True,) * len(original)
    assert result.sample_based is False


def test_no_op_replacement_marks_nothing(movie_env):
    ctx = detect('movies["country"] = movies["country"].str.replace("zzz", "!")')
    result = compute_preview(ctx, None, movie_env)
    assert result.ok and result.form == "column_diff"
    assert result.changed_mask == (False,) * movie_env.lookup("movies").n_rows


def test_fillna_changes_exactly_the_null_cells(movie_env):
    ctx = detect('movies["director"] = movies["director"].fillna("Unknown")')
    result = compute_preview(ctx, None, movie_env)
    assert result.ok and result.form == "column_diff"
    expected = tuple(v is None for v in result.original_values)
    assert result.changed_mask == expected
    assert any(expected), "fixture should contain missing directors"


def test_astype_diff_reports_rendered_values(movie_env):
    ctx = detect('movies["releaseYear"] = movies["releaseYear"].astype("str")')
    result = compute_preview(ctx, None, movie_env)
    assert result.ok and result.form == "column_diff"
    assert result.new_values == tuple(
        str(v) for v in result.original_values
    )
    assert all(result.changed_mask)


def test_replace_into_new_column_diffs_against_source(movie_env):
    ctx = detect(
        'movies["shortDuration"] = movies["durationOfTime"].str.replace(" minutes", "")'
    )
    result = compute_preview(ctx, None, movie_env)
    assert result.ok and result.form == "column_diff"
    assert result.column == "durationOfTime"
    assert result.new_column == "shortDuration"
    assert all(result.changed_mask)


# --- row filter previews -----------------------------------------------------


def test_filter_preview_matches_predicate_oracle(covid_env):
    ctx = detect('big = covid_data[covid_data["cases"] > 100000]')
    result = compute_preview(ctx, None, covid_env)
    assert result.ok and result.form == "row_filter"

    table = covid_env.lookup("covid_data")
    stmt = closed_statement(ctx, None)
    pred = stmt.op.args["predicate"]
    expected = tuple(
        i
        for i in range(table.n_rows)
        if not oracle_predicate(pred, dict(zip(table.column_names, table.row(i))))
    )
    assert result.deleted_rows == expected
    assert ("cases", 100000) in result.matched_literals


def test_filter_preview_counts_complement(covid_env):
    ctx = detect('big = covid_data[covid_data["cases"] > 100000]')
    result = compute_preview(ctx, None, covid_env)
    stmt = closed_statement(ctx, None)
    survivors = apply_transform(stmt.op, covid_env).n_rows
    assert survivors + len(result.deleted_rows) == covid_env.lookup("covid_data").n_rows


# --- table pair previews -----------------------------------------------------


def test_sort_preview_returns_original_and_result_samples(covid_env):
    ctx = detect('x = covid_data.sort_values(by="country")')
    result = compute_preview(ctx, None, covid_env)
    assert result.ok and result.form == "table_pair"
    table = covid_env.lookup("covid_data")
    assert result.original.table == "covid_data"
    assert result.result.table == "result"
    assert result.original.columns == tuple(table.column_names)
    assert len(result.original.rows) == min(15, table.n_rows)
    sorted_first = [row[0] for row in result.result.rows]
    assert sorted_first == sorted(sorted_first)


def test_merge_preview_uses_left_table_as_original(movie_env):
    ctx = detect(
        'j = movies.merge(ratings, left_on="netflixTitle", right_on="title")'
    )
    result = compute_preview(ctx, None, movie_env)
    assert result.ok and result.form == "table_pair"
    assert result.table == "movies"
    assert len(result.result.columns) == 14


# --- sampling bound ----------------------------------------------------------


@pytest.fixture(scope="module")
def tall_env():
    n = PREVIEW_SAMPLE_ROWS + 50
    tall = make_table("tall", idx=list(range(n)), flag=["odd" if i % 2 else "even" for i in range(n)])
    env = Environment()
    env.commit({"tall": tall})
    return env


def test_large_tables_get_sampled_and_labeled(tall_env):
    ctx = detect('x = tall[tall["idx"] < 10]')
    result = compute_preview(ctx, None, tall_env)
    assert result.ok and result.sample_based is True
    assert all(i < PREVIEW_SAMPLE_ROWS for i in result.deleted_rows)
    assert len(result.deleted_rows) == PREVIEW_SAMPLE_ROWS - 10


def test_sample_bound_is_configurable(tall_env):
    ctx = detect('x = tall[tall["idx"] < 10]')
    result = compute_preview(ctx, None, tall_env, sample_rows=20)
    assert result.sample_based is True
    assert len(result.deleted_rows) == 10


def test_small_tables_are_not_flagged_sample_based(covid_env):
    ctx = detect("x = covid_data.head(3)")
    assert compute_preview(ctx, None, covid_env).sample_based is False


# --- diagnostics -------------------------------------------------------------


def test_incomplete_statement_reports_grammar(movie_env):
    result = compute_preview(detect("x = movies.sort_values("), None, movie_env)
    assert not result.ok
    assert result.form == "none"
    assert result.error_tag == "grammar"


def test_unknown_column_reports_data_error(movie_env):
    result = compute_preview(
        detect('x = movies.sort_values(by="Rating")'), None, movie_env
    )
    assert not result.ok
    assert result.error_tag == "data"
    assert "Rating" in result.error


def test_unknown_table_reports_data_error(movie_env):
    result = compute_preview(detect("x = ghost.head(3)"), None, movie_env)
    assert not result.ok
    assert result.error_tag == "data"
    assert "ghost" in result.error


def test_error_payload_is_minimal(movie_env):
    payload = compute_preview(detect("x = ghost.head(3)"), None, movie_env).to_payload()
    assert payload == {
        "form": "table_pair",
        "ok": False,
        "error": payload["error"],
        "error_tag": "data",
    }


# --- environment safety -------------------------------------------------------


def test_preview_never_touches_the_environment(covid_env):
    version = covid_env.version
    bindings = dict(covid_env.bindings)
    tables = {name: id(t) for name, t in covid_env.bindings.items()}

    for text in (
        'x = covid_data[covid_data["cases"] > 1000]',
        'covid_data["country"] = covid_data["country"].str.replace("U", "u")',
        'x = covid_data.sort_values(by="cases")',
        "x = ghost.head(3)",
    ):
        compute_preview(detect(text), None, covid_env)

    assert covid_env.version == version
    assert covid_env.bindings == bindings
    assert {name: id(t) for name, t in covid_env.bindings.items()} == tables


# --- payload shapes -----------------------------------------------------------


def test_payloads_round_trip_json(covid_env, movie_env):
    cases = [
        (detect('x = covid_data[covid_data["cases"] > 1000]'), covid_env),
        (detect('movies["country"] = movies["country"].fillna("n/a")'), movie_env),
        (detect('x = covid_data.sort_values(by="cases")'), covid_env),
    ]
    forms = set()
    for ctx, env in cases:
        payload = compute_preview(ctx, None, env).to_payload()
        assert json.loads(json.dumps(payload)) == payload
        forms.add(payload["form"])
    assert forms == {"row_filter", "column_diff", "table_pair"}


# --- randomized equivalence ---------------------------------------------------


def test_random_previews_match_real_execution(rng, data_dir):
    base = {
        "movies": load_csv(data_dir / "movies.csv", "movies"),
        "ratings": load_csv(data_dir / "ratings.csv", "ratings"),
        "covid_data": load_csv(data_dir / "covid_cases.csv", "covid_data"),
        "country_codes": load_csv(data_dir / "country_codes.csv", "country_codes"),
    }
    for i in range(30):
        env = Environment()
        env.commit({**base, "rnd": random_table(rng, "rnd")})
        op = random_executable_op(rng, env)
        preview_matches_execution(op, env)
