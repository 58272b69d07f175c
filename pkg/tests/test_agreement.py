from fractions import Fraction
from itertools import product

import pytest

from argforge.agreement import (
    AnnotationError,
    AnnotatorLabel,
    REFERENCE_ALPHA,
    REFERENCE_RESULTS,
    UNASSIGNED,
    build_blind_tasks,
    krippendorff_alpha,
    labels_to_matrix,
    landis_koch_band,
    majority_vote,
    model_accuracy,
    percent,
    render_report,
    write_key,
    write_tasks,
)
from argforge.ngram import GeneratedCandidate


def oracle_alpha(matrix):
    """Brute-force nominal alpha: enumerate every ordered pairable pair inside
    each unit (weight 1/(m_u-1)), in exact rational arithmetic.

    Returns (alpha, D_o, D_e) or None when no unit is pairable; the
    degenerate all-identical case pins alpha to 1.
    """
    units = [[v for v in row if v is not None] for row in matrix]
    units = [row for row in units if len(row) >= 2]
    if not units:
        return None
    marginals: dict = {}
    total = 0
    d_o_numerator = Fraction(0)
    for row in units:
        m_u = len(row)
        total += m_u
        mismatches = 0
        for i in range(m_u):
            marginals[row[i]] = marginals.get(row[i], 0) + 1
            for j in range(m_u):
                if i != j and row[i] != row[j]:
                    mismatches += 1
        if mismatches:
            d_o_numerator += Fraction(mismatches, m_u - 1)
    d_o = d_o_numerator / total
    expected_pairs = 0
    for c, n_c in marginals.items():
        for k, n_k in marginals.items():
            if c != k:
                expected_pairs += n_c * n_k
    d_e = Fraction(expected_pairs, total * (total - 1))
    if d_e == 0:
        return Fraction(1), d_o, d_e
    return 1 - d_o / d_e, d_o, d_e


class TestAlphaOracle:
    def test_perfect_agreement(self):
        result = krippendorff_alpha([["p", "p"], ["n", "n"], ["p", "p"]])
        assert result.alpha == 1.0
        assert result.d_observed == 0.0

    def test_two_annotator_fixture_frozen_from_oracle(self):
        # oracle gives exactly 8/15 for (P,P),(P,N),(N,N),(P,P)
        matrix = [["p", "p"], ["p", "n"], ["n", "n"], ["p", "p"]]
        expected, d_o, d_e = oracle_alpha(matrix)
        assert expected == Fraction(8, 15)
        result = krippendorff_alpha(matrix)
        assert result.alpha == pytest.approx(float(expected), abs=1e-12)
        assert result.d_observed == pytest.approx(float(d_o), abs=1e-12)
        assert result.d_expected == pytest.approx(float(d_e), abs=1e-12)

    def test_exhaustive_small_matrix_space(self):
        # all matrices up to 3 annotators x 4 units over {a, b, missing}
        values = (None, "a", "b")
        for n_annotators in (2, 3):
            for n_units in (1, 2, 3, 4):
                for cells in product(values, repeat=n_annotators * n_units):
                    matrix = [
                        list(cells[row * n_annotators: (row + 1) * n_annotators])
                        for row in range(n_units)
                    ]
                    expected = oracle_alpha(matrix)
                    if expected is None:
                        with pytest.raises(AnnotationError):
                            krippendorff_alpha(matrix)
                        continue
                    alpha, d_o, d_e = expected
                    result = krippendorff_alpha(matrix)
                    assert abs(result.alpha - float(alpha)) <= 1e-12
                    assert abs(result.d_observed - float(d_o)) <= 1e-12
                    assert abs(result.d_expected - float(d_e)) <= 1e-12

    def test_missing_labels_reduce_unit_size(self):
        with_missing = [["a", "b", None], ["a", "a", None]]
        two_column = [["a", "b"], ["a", "a"]]
        assert krippendorff_alpha(with_missing).alpha == pytest.approx(
            krippendorff_alpha(two_column).alpha, abs=1e-12
        )

    def test_single_label_units_excluded(self):
        base = [["a", "b"], ["a", "a"]]
        padded = base + [["a", None], [None, "b"], [None, None]]
        assert krippendorff_alpha(padded).alpha == pytest.approx(
            krippendorff_alpha(base).alpha, abs=1e-12
        )
        assert krippendorff_alpha(padded).n_units_used == 2

    def test_all_single_labeled_is_error(self):
        with pytest.raises(AnnotationError):
            krippendorff_alpha([["a", None], [None, "b"]])

    def test_degenerate_all_identical_pinned_to_one(self):
        result = krippendorff_alpha([["a", "a"], ["a", "a"]])
        assert result.alpha == 1.0
        assert result.d_expected == 0.0

    def test_alpha_at_most_one(self):
        import random

        rng = random.Random(31)
        for _ in range(300):
            matrix = [
                [rng.choice([None, "a", "b"]) for _ in range(3)] for _ in range(5)
            ]
            try:
                result = krippendorff_alpha(matrix)
            except AnnotationError:
                continue
            assert result.alpha <= 1.0 + 1e-12
            assert (result.alpha == 1.0) == (result.d_observed == 0.0)

    def test_permutation_invariance(self):
        matrix = [["a", "b", "a"], ["b", "b", None], ["a", "a", "b"], [None, "a", "b"]]
        reordered_units = [matrix[2], matrix[0], matrix[3], matrix[1]]
        relabeled_columns = [[row[1], row[2], row[0]] for row in matrix]
        base = krippendorff_alpha(matrix).alpha
        assert krippendorff_alpha(reordered_units).alpha == pytest.approx(base, abs=1e-12)
        assert krippendorff_alpha(relabeled_columns).alpha == pytest.approx(base, abs=1e-12)

    def test_published_value_bands_moderate(self):
        assert landis_koch_band(REFERENCE_ALPHA) == "moderate"

    def test_landis_koch_bands(self):
        assert landis_koch_band(-0.2) == "poor"
        assert landis_koch_band(0.1) == "slight"
        assert landis_koch_band(0.3) == "fair"
        assert landis_koch_band(0.5) == "moderate"
        assert landis_koch_band(0.7) == "substantial"
        assert landis_koch_band(0.95) == "almost perfect"


class TestMajorityVote:
    def labels(self, votes, task="t1"):
        return [
            AnnotatorLabel(task, f"a{i}", "premise" if v == "P" else "non_premise")
            for i, v in enumerate(votes)
        ]

    def test_three_of_four_premise(self):
        result = majority_vote(self.labels("PPPN"))
        assert result.final_label == "premise"
        assert result.vote_counts == {"premise": 3, "non_premise": 1}

    def test_split_vote_unassigned(self):
        assert majority_vote(self.labels("PPNN")).final_label == UNASSIGNED

    def test_unanimous_non_premise(self):
        assert majority_vote(self.labels("NNNN")).final_label == "non_premise"

    def test_duplicate_annotator_rejected(self):
        labels = self.labels("PPP") + [AnnotatorLabel("t1", "a0", "premise")]
        with pytest.raises(AnnotationError):
            majority_vote(labels)

    def test_non_majority_quorum_rejected(self):
        with pytest.raises(AnnotationError):
            majority_vote(self.labels("PPNN"), n_annotators=4, quorum=2)

    def test_mixed_tasks_rejected(self):
        labels = [AnnotatorLabel("t1", "a1", "premise"), AnnotatorLabel("t2", "a2", "premise")]
        with pytest.raises(AnnotationError):
            majority_vote(labels)

    def test_label_vocabulary_closed(self):
        with pytest.raises(AnnotationError):
            AnnotatorLabel("t1", "a1", "maybe")


def candidates_for(models, per_model):
    out = []
    for offset, model in enumerate(models):
        for i in range(per_model):
            out.append(
                GeneratedCandidate(
                    prompt_id=f"p{i % 3:02d}",
                    model_id=model,
                    text=f"кандидат номер {offset * per_model + i}",
                    tokens=("x",),
                    seed_used=i,
                )
            )
    return out


CLAIMS = {f"p{i:02d}": f"Тезис {i}" for i in range(3)}


class TestBlindTasks:
    def test_task_count_equals_candidate_count(self):
        tasks = build_blind_tasks(candidates_for(["m1", "m2"], 400), CLAIMS, seed=0)
        assert len(tasks) == 800

    def test_same_seed_same_display_order(self):
        candidates = candidates_for(["m1", "m2"], 10)
        first = build_blind_tasks(candidates, CLAIMS, seed=5)
        second = build_blind_tasks(candidates, CLAIMS, seed=5)
        assert [t.sentence_text for t in first] == [t.sentence_text for t in second]

    def test_annotator_serialization_is_blind(self, tmp_path):
        tasks = build_blind_tasks(candidates_for(["m1", "m2"], 6), CLAIMS, seed=1)
        for task in tasks:
            facing = task.to_annotator_dict()
            assert set(facing) == {"task_id", "claim", "sentence"}
            assert "m1" not in str(facing.values())
        tasks_path = tmp_path / "tasks.jsonl"
        write_tasks(tasks_path, tasks)
        payload = tasks_path.read_text(encoding="utf-8")
        assert "model" not in payload
        assert "m1" not in payload and "m2" not in payload
        key_path = tmp_path / "key.jsonl"
        write_key(key_path, tasks)
        assert "m1" in key_path.read_text(encoding="utf-8")

    def test_single_model_rejected(self):
        with pytest.raises(AnnotationError):
            build_blind_tasks(candidates_for(["m1"], 4), CLAIMS, seed=0)

    def test_missing_claim_rejected(self):
        candidates = candidates_for(["m1", "m2"], 4)
        with pytest.raises(AnnotationError):
            build_blind_tasks(candidates, {}, seed=0)


class TestModelAccuracy:
    def vote(self, task_id, pattern):
        mapping = {"P": "premise", "N": "non_premise"}
        return majority_vote(
            [AnnotatorLabel(task_id, f"a{i}", mapping[v]) for i, v in enumerate(pattern)]
        )

    def test_synthetic_rates(self):
        # 3 assigned tasks for a model, 2 premise -> 66.7%
        votes = [
            self.vote("t1", "PPPN"),
            self.vote("t2", "PPPP"),
            self.vote("t3", "NNNP"),
            self.vote("t4", "PPNN"),
        ]
        key = {f"t{i}": "m1" for i in range(1, 5)}
        report = model_accuracy(votes, key)
        acc = report["m1"]
        assert acc.premise == 2
        assert acc.non_premise == 1
        assert acc.unassigned == 1
        assert acc.assigned == 3
        assert percent(acc.premise, acc.assigned) == 66.7

    def test_unresolvable_task_rejected(self):
        votes = [self.vote("t1", "PPPP")]
        with pytest.raises(AnnotationError):
            model_accuracy(votes, {})

    def test_published_accounting_reproduced(self):
        # 800 tasks -> 660 assigned (82.5%); 321/339 split; 203/321 = 63.2%
        # and 144/339 = 42.5%, overall 347/660 = 52.6%
        fine = REFERENCE_RESULTS["fine_tuned"]
        orig = REFERENCE_RESULTS["original"]
        assigned = fine["assigned"] + orig["assigned"]
        assert assigned == 660
        assert percent(assigned, 800) == 82.5
        assert percent(fine["premise"], fine["assigned"]) == 63.2
        assert percent(orig["premise"], orig["assigned"]) == 42.5
        assert fine["premise"] + fine["non_premise"] == fine["assigned"]
        assert orig["premise"] + orig["non_premise"] == orig["assigned"]
        assert percent(fine["premise"] + orig["premise"], assigned) == 52.6
        assert percent(fine["non_premise"] + orig["non_premise"], assigned) == 47.4


class TestVoteTotalsInvariant:
    def test_totals_partition_voted_tasks(self):
        import random

        rng = random.Random(17)
        votes = []
        key = {}
        for i in range(60):
            task = f"t{i:03d}"
            key[task] = "m1" if i % 2 else "m2"
            raw = [
                AnnotatorLabel(task, f"a{j}", rng.choice(["premise", "non_premise"]))
                for j in range(4)
            ]
            votes.append(majority_vote(raw))
        report = model_accuracy(votes, key)
        total = sum(acc.premise + acc.non_premise + acc.unassigned for acc in report.values())
        assert total == 60


class TestRenderReport:
    def test_report_shape(self):
        labels = []
        key = {}
        for i in range(8):
            task = f"t{i}"
            key[task] = "tuned" if i % 2 else "base"
            label = "premise" if i % 3 else "non_premise"
            for j in range(4):
                labels.append(AnnotatorLabel(task, f"a{j}", label))
        votes = [majority_vote(group) for group in _grouped(labels)]
        agreement = krippendorff_alpha(labels_to_matrix(labels))
        report = render_report(votes, key, agreement)
        assert set(report["models"]) == {"tuned", "base"}
        overall = report["overall"]
        assert overall["premise"] + overall["non_premise"] == overall["assigned"]
        assert report["agreement"]["alpha"] == pytest.approx(agreement.alpha)
        assert report["reference"]["alpha"] == REFERENCE_ALPHA
        assert report["reference"]["alpha_band"] == "moderate"


def _grouped(labels):
    by_task = {}
    for label in labels:
        by_task.setdefault(label.task_id, []).append(label)
    return list(by_task.values())


class TestLabelsMatrix:
    def test_layout(self):
        labels = [
            AnnotatorLabel("t1", "a1", "premise"),
            AnnotatorLabel("t1", "a2", "non_premise"),
            AnnotatorLabel("t2", "a1", "premise"),
        ]
        matrix = labels_to_matrix(labels)
        assert matrix == [["premise", "non_premise"], ["premise", None]]

    def test_duplicate_label_rejected(self):
        labels = [
            AnnotatorLabel("t1", "a1", "premise"),
            AnnotatorLabel("t1", "a1", "premise"),
        ]
        with pytest.raises(AnnotationError):
            labels_to_matrix(labels)
