"""Canonical forms: positional renaming, alpha-equivalence against a
brute-force bijection oracle, key stability."""

import random

from hypothesis import given, settings
import hypothesis.strategies as st

from mathkb.formula import (
    alpha_equal,
    canonical_key,
    identifier_names,
    normalize,
    parse_tex_formula,
    rename_identifiers,
    skeleton_key,
)
from oracles import alpha_equal_oracle, collect_identifiers, substitute
from strategies import seeded_tex, tex_formulas


class TestExamples:
    def test_renamed_sum_shares_key(self):
        assert canonical_key(parse_tex_formula("a+b").root) == canonical_key(
            parse_tex_formula("x+y").root
        )

    def test_repeated_variable_distinguished(self):
        assert canonical_key(parse_tex_formula("a+a").root) != canonical_key(
            parse_tex_formula("x+y").root
        )

    def test_renaming_is_positional(self):
        form = normalize(parse_tex_formula("b + a").root)
        assert form.renaming == {"b": "v1", "a": "v2"}

    def test_alpha_equal_examples(self):
        assert alpha_equal(parse_tex_formula("a+b").root, parse_tex_formula("x+y").root)
        assert not alpha_equal(parse_tex_formula("a+a").root, parse_tex_formula("x+y").root)
        assert alpha_equal(parse_tex_formula("a+a").root, parse_tex_formula("y+y").root)

    def test_structure_not_ignored(self):
        assert not alpha_equal(parse_tex_formula("a+b").root, parse_tex_formula("a b").root)

    def test_numbers_never_renamed(self):
        form = normalize(parse_tex_formula("2 x + 2").root)
        assert "2" not in form.renaming


@given(tex_formulas())
def test_skeleton_identifiers_are_positional(tex):
    root = parse_tex_formula(tex).root
    form = normalize(root)
    names = collect_identifiers(form.skeleton)
    assert names == [f"v{i}" for i in range(1, len(names) + 1)]
    assert sorted(form.renaming.values()) == sorted(names)
    assert list(form.renaming.keys()) == identifier_names(root)


@given(tex_formulas())
def test_normalize_is_idempotent(tex):
    skeleton = normalize(parse_tex_formula(tex).root).skeleton
    assert normalize(skeleton).skeleton == skeleton


@given(tex_formulas(), st.randoms(use_true_random=False))
def test_key_invariant_under_injective_renaming(tex, rng):
    root = parse_tex_formula(tex).root
    names = collect_identifiers(root)
    fresh = [f"w{i}" for i in range(len(names))]
    rng.shuffle(fresh)
    renamed = substitute(root, dict(zip(names, fresh)))
    assert canonical_key(renamed) == canonical_key(root)
    assert alpha_equal(renamed, root)
    assert skeleton_key(normalize(renamed).skeleton) == canonical_key(root)


@given(tex_formulas())
def test_key_changes_when_distinct_names_collapse(tex):
    root = parse_tex_formula(tex).root
    names = collect_identifiers(root)
    if len(names) < 2:
        return
    collapsed = substitute(root, {names[1]: names[0]})
    assert canonical_key(collapsed) != canonical_key(root)
    assert not alpha_equal(collapsed, root)


@given(tex_formulas(), tex_formulas())
@settings(max_examples=60)
def test_alpha_equal_agrees_with_bijection_oracle(tex_a, tex_b):
    a = parse_tex_formula(tex_a).root
    b = parse_tex_formula(tex_b).root
    if len(collect_identifiers(a)) > 5 or len(collect_identifiers(b)) > 5:
        return
    assert alpha_equal(a, b) == alpha_equal_oracle(a, b)


@given(tex_formulas())
def test_key_equality_matches_oracle_on_positive_pairs(tex):
    root = parse_tex_formula(tex).root
    names = collect_identifiers(root)
    if len(names) > 5:
        return
    renamed = substitute(root, {n: f"w{i}" for i, n in enumerate(names)})
    assert alpha_equal_oracle(root, renamed)
    assert canonical_key(root) == canonical_key(renamed)


def test_rename_identifiers_matches_independent_substitution():
    rng = random.Random(7)
    for _ in range(50):
        root = parse_tex_formula(seeded_tex(rng)).root
        names = collect_identifiers(root)
        mapping = {n: f"w{i}" for i, n in enumerate(names)}
        assert rename_identifiers(root, mapping) == substitute(root, mapping)


def test_canonical_key_is_stable_across_calls():
    root = parse_tex_formula("\\sum_{i = 1}^{n} x_i^2").root
    assert canonical_key(root) == canonical_key(root)
