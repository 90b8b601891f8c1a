import itertools
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fmea_gen.ensemble import (
    MAX_SHOT_PERMUTATIONS,
    EnsembleConfig,
    aggregate,
    fuzzy_group,
    shot_permutations,
    similarity,
)
from fmea_gen.errors import EmptyTextError, SizeMismatchError, StepMismatchError
from fmea_gen.model import StepKind
from fmea_gen.parsing import ParsedFragment, ParseWarning


def frag(*items, step=StepKind.TASKS, description=None, warnings=()):
    return ParsedFragment(step=step, description=description, items=tuple(items), warnings=tuple(warnings))


def config(n, vote_threshold=0.5, fuzzy_threshold=0.85):
    variations = tuple(("prov", i) for i in range(n))
    return EnsembleConfig(variations=variations, vote_threshold=vote_threshold, fuzzy_threshold=fuzzy_threshold)


class TestSimilarity:
    def test_equal_token_sets_score_one(self):
        assert similarity("pump casing", "Casing,  PUMP") == 1.0

    def test_disjoint_tokens_score_zero(self):
        assert similarity("alpha", "beta") == 0.0

    def test_jaccard_value(self):
        # {a,b} vs {b,c}: 1 shared of 3 total
        assert similarity("a b", "b c") == pytest.approx(1 / 3)

    def test_empty_text_raises(self):
        with pytest.raises(EmptyTextError):
            similarity("", "x")
        with pytest.raises(EmptyTextError):
            similarity("x", "   ")

    def test_punctuation_only_texts_are_equal(self):
        # non-empty strings with no alphanumeric tokens compare equal
        assert similarity("!!", "??") == 1.0

    @given(st.text(alphabet="abc ", min_size=1), st.text(alphabet="abc ", min_size=1))
    @settings(max_examples=200, deadline=None)
    def test_symmetric_and_bounded(self, a, b):
        if not a.strip() or not b.strip():
            return
        assert similarity(a, b) == similarity(b, a)
        assert 0.0 <= similarity(a, b) <= 1.0


class TestConfig:
    def test_cutoff_arithmetic(self):
        assert config(3, vote_threshold=0.5).cutoff == 2    # ceil(1.5)
        assert config(3, vote_threshold=0.34).cutoff == 2   # ceil(1.02)
        assert config(3, vote_threshold=1.0).cutoff == 3
        assert config(1, vote_threshold=0.5).cutoff == 1
        assert config(4, vote_threshold=0.5).cutoff == 2    # exactly 2.0
        assert config(5, vote_threshold=0.2).cutoff == 1    # float fuzz: 1.0000000000000002

    def test_threshold_ranges_enforced(self):
        with pytest.raises(ValueError):
            config(2, vote_threshold=0.0)
        with pytest.raises(ValueError):
            config(2, vote_threshold=1.5)
        with pytest.raises(ValueError):
            config(2, fuzzy_threshold=-0.1)
        with pytest.raises(ValueError):
            EnsembleConfig(variations=())


class TestFuzzyGroup:
    def test_exact_duplicates_group(self):
        groups = fuzzy_group([frag("seal"), frag("Seal")], 0.85)
        assert groups == [[(0, "seal"), (1, "Seal")]]

    def test_transitive_chain_merges(self):
        # a~b and b~c but a!~c still land in one group (single link)
        a, b, c = "rotor shaft seal x1", "rotor shaft seal", "rotor shaft seal y2"
        assert similarity(a, b) >= 0.75
        assert similarity(b, c) >= 0.75
        assert similarity(a, c) < 0.75
        groups = fuzzy_group([frag(a), frag(b), frag(c)], 0.75)
        assert len(groups) == 1

    def test_groups_ordered_by_first_appearance(self):
        groups = fuzzy_group([frag("first", "second"), frag("second", "third")], 0.85)
        firsts = [group[0][1] for group in groups]
        assert firsts == ["first", "second", "third"]

    def test_no_fragments(self):
        assert fuzzy_group([], 0.9) == []

    def brute_force_closure(self, entries, threshold):
        n = len(entries)
        adjacency = [[False] * n for _ in range(n)]
        for i in range(n):
            adjacency[i][i] = True
            for j in range(n):
                if i != j and similarity(entries[i][1], entries[j][1]) >= threshold:
                    adjacency[i][j] = True
        # Floyd-Warshall style reachability = transitive closure
        for k in range(n):
            for i in range(n):
                if adjacency[i][k]:
                    for j in range(n):
                        if adjacency[k][j]:
                            adjacency[i][j] = True
        components = []
        assigned = [False] * n
        for i in range(n):
            if assigned[i]:
                continue
            member_ids = [j for j in range(n) if adjacency[i][j]]
            for j in member_ids:
                assigned[j] = True
            components.append([entries[j] for j in member_ids])
        return components

    def test_matches_brute_force_transitive_closure_on_random_sets(self):
        rng = random.Random(7)
        vocabulary = ["rotor", "shaft", "seal", "casing", "wear", "ring", "bolt", "nut"]
        for trial in range(100):
            n_frags = rng.randint(1, 4)
            fragments = []
            for _ in range(n_frags):
                items = []
                seen = set()
                for _ in range(rng.randint(0, 5)):
                    item = " ".join(rng.sample(vocabulary, rng.randint(1, 3)))
                    key = item.lower()
                    if key not in seen:
                        seen.add(key)
                        items.append(item)
                fragments.append(frag(*items))
            threshold = rng.choice([0.4, 0.6, 0.85, 1.0])
            entries = [(vi, item) for vi, fragment in enumerate(fragments) for item in fragment.items]
            expected = self.brute_force_closure(entries, threshold)
            actual = fuzzy_group(fragments, threshold)
            canon = lambda groups: sorted(sorted(g) for g in groups)
            assert canon(actual) == canon(expected), f"trial {trial}"


class TestAggregate:
    def test_identity_single_variation(self):
        fragment = frag("a", "b", description=None, warnings=[ParseWarning("MISSING_END", 3)])
        result = aggregate([fragment], config(1))
        assert result.fragment == fragment
        assert [v.votes for v in result.votes] == [1, 1]

    def test_identical_variations_keep_items_once(self):
        result = aggregate([frag("a", "b"), frag("a", "b")], config(2, vote_threshold=1.0))
        assert result.fragment.items == ("a", "b")
        assert all(v.votes == 2 for v in result.votes)

    def test_majority_cutoff_drops_minority_items(self):
        fragments = [frag("common", "only one"), frag("common"), frag("common")]
        result = aggregate(fragments, config(3, vote_threshold=0.5))
        assert result.fragment.items == ("common",)

    def test_low_threshold_keeps_union(self):
        fragments = [frag("x"), frag("y"), frag("z")]
        result = aggregate(fragments, config(3, vote_threshold=0.34))
        assert result.fragment.items == ()  # cutoff 2, nothing agrees

        result = aggregate(fragments, config(3, vote_threshold=0.2))
        assert set(result.fragment.items) == {"x", "y", "z"}  # cutoff 1 = union

    def test_votes_count_variations_not_surfaces(self):
        # near-duplicates within one variation must not inflate its vote
        fragments = [frag("wear ring a1", "wear ring"), frag("unrelated item")]
        result = aggregate(fragments, config(2, vote_threshold=1.0, fuzzy_threshold=0.6))
        assert result.fragment.items == ()  # the group has 1 distinct variation < cutoff 2

    def test_supporters_one_per_variation(self):
        fragments = [frag("wear ring a1", "wear ring"), frag("wear ring")]
        result = aggregate(fragments, config(2, fuzzy_threshold=0.6))
        (item,) = result.votes
        assert item.votes == 2
        assert len(item.supporters) == 2
        assert [vi for vi, _ in item.supporters] == [0, 1]
        assert item.votes == len(item.supporters)

    def test_canonical_name_is_earliest_surface(self):
        fragments = [frag("Mechanical Seal"), frag("mechanical seal")]
        result = aggregate(fragments, config(2))
        assert result.fragment.items == ("Mechanical Seal",)

    def test_output_ordered_by_votes_then_first_seen(self):
        fragments = [
            frag("rare", "popular"),
            frag("popular"),
            frag("popular", "rare"),
        ]
        result = aggregate(fragments, config(3, vote_threshold=0.3))
        assert result.fragment.items == ("popular", "rare")

    def test_membership_stable_under_variation_permutation(self):
        base = [frag("a", "b"), frag("b", "c"), frag("b")]
        cfg = config(3, vote_threshold=0.5)
        expected = {item.canonical_name.lower() for item in aggregate(base, cfg).votes}
        for perm in itertools.permutations(base):
            got = {item.canonical_name.lower() for item in aggregate(list(perm), cfg).votes}
            assert got == expected

    def test_boundary_description_from_first_variation(self):
        fragments = [
            frag("a", step=StepKind.BOUNDARY, description="first text"),
            frag("a", step=StepKind.BOUNDARY, description="second text"),
        ]
        result = aggregate(fragments, config(2))
        assert result.fragment.description == "first text"

    def test_warnings_concatenated_in_variation_order(self):
        w1, w2 = ParseWarning("MISSING_END", 1), ParseWarning("DUPLICATE_DROPPED", 2)
        result = aggregate([frag("a", warnings=[w1]), frag("a", warnings=[w2])], config(2))
        assert result.fragment.warnings == (w1, w2)

    def test_size_mismatch(self):
        with pytest.raises(SizeMismatchError):
            aggregate([frag("a")], config(2))

    def test_step_mismatch(self):
        with pytest.raises(StepMismatchError):
            aggregate([frag("a"), frag("a", step=StepKind.MECHANISMS)], config(2))

    def test_json_shape(self):
        result = aggregate([frag("a")], config(1))
        payload = result.to_json_dict()
        assert payload["items"] == ["a"]
        assert payload["votes"] == [{"name": "a", "votes": 1, "supporters": [[0, "a"]]}]


class TestPresencePatternEnumeration:
    """Exhaustive check of voting arithmetic for up to 3 variations.

    Each distinct item either appears or not in each variation; enumerate
    every presence pattern and assert survival equals (count >= cutoff).
    """

    @pytest.mark.parametrize("n_variations", [1, 2, 3])
    @pytest.mark.parametrize("vote_threshold", [0.2, 0.34, 0.5, 0.67, 1.0])
    def test_survival_matches_cutoff(self, n_variations, vote_threshold):
        cfg = config(n_variations, vote_threshold=vote_threshold)
        items = [f"item{i}" for i in range(2 ** n_variations)]
        # pattern p (bitmask over variations) owns its item; build fragments
        fragments = []
        for var_idx in range(n_variations):
            present = [items[p] for p in range(1, 2 ** n_variations) if p >> var_idx & 1]
            fragments.append(frag(*present))
        result = aggregate(fragments, cfg)
        surviving = set(result.fragment.items)
        for pattern in range(1, 2 ** n_variations):
            votes = bin(pattern).count("1")
            item = items[pattern]
            assert (item in surviving) == (votes >= cfg.cutoff), (
                f"pattern {pattern:b} with {votes} votes vs cutoff {cfg.cutoff}"
            )

    @pytest.mark.parametrize("n_variations", [2, 3])
    def test_monotonicity_adding_support_never_removes_item(self, n_variations):
        cfg = config(n_variations, vote_threshold=0.5)
        base_fragments = [frag("stable item")] + [frag() for _ in range(n_variations - 1)]
        before = aggregate(base_fragments, cfg).fragment.items
        more_fragments = [frag("stable item") for _ in range(n_variations)]
        after = aggregate(more_fragments, cfg).fragment.items
        assert set(before) <= set(after)


class TestShotPermutations:
    def test_empty_shots_give_single_empty_order(self):
        assert shot_permutations([]) == [()]

    def test_two_shots_give_both_orders(self):
        assert shot_permutations(["a", "b"]) == [("a", "b"), ("b", "a")]

    def test_capped_at_limit(self):
        perms = shot_permutations(["a", "b", "c", "d"])
        assert len(perms) == MAX_SHOT_PERMUTATIONS
        assert len(set(perms)) == MAX_SHOT_PERMUTATIONS

    def test_first_permutation_is_given_order(self):
        assert shot_permutations(["x", "y", "z"])[0] == ("x", "y", "z")

    def test_limit_validation(self):
        with pytest.raises(ValueError):
            shot_permutations(["a"], limit=0)
