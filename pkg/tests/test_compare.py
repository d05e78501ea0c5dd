"""Table comparison against a brute-force optimal-matching oracle.

The oracle enumerates every injective partial matching of extracted rows to
reference rows within the x window, keeps the matchings with maximum
cardinality and minimum total x distance, then classifies. Generated tables
keep reference x positions well separated relative to the matching window so
the optimum is unique and greedy must agree exactly.
"""

import random

import pytest

from evalsynth.descriptor import ValueKind
from evalsynth.errors import InvalidTolerance, SchemaMismatch
from evalsynth.runtime.compare import Tolerance, compare_tables
from evalsynth.tables import DataTable, xy_table
from oracles import brute_force_counts, make_perturbed_pair


def test_identical_tables_are_clean():
    t = xy_table([(0, 1), (1, 2), (2, 3)], x_range=(0, 2), y_range=(0, 10))
    report = compare_tables(t, t)
    assert report.counts == {"incorrect": 0, "spurious": 0, "missing": 0}
    assert report.correct == 3
    assert report.clean


def test_single_perturbation_deletion_and_addition():
    rng = random.Random(5)
    tol = Tolerance()
    extracted, reference, _, _ = make_perturbed_pair(rng, n=5, k=1, d=1, s=1, tol=tol)
    report = compare_tables(extracted, reference, tol)
    assert report.counts == {"incorrect": 1, "spurious": 1, "missing": 1}


def test_tolerance_boundary_is_inclusive():
    reference = xy_table([(0.0, 0.0), (1.0, 10.0)], x_range=(0, 1), y_range=(0, 10))
    # y window = 0.1 * 10 = 1.0 exactly; a deviation of exactly 1.0 is correct
    extracted = xy_table([(0.0, 1.0), (1.0, 10.0)], x_range=(0, 1), y_range=(0, 10))
    report = compare_tables(extracted, reference, Tolerance(x_rel=0.02, y_rel=0.1))
    assert report.counts == {"incorrect": 0, "spurious": 0, "missing": 0}
    beyond = xy_table([(0.0, 1.0000001), (1.0, 10.0)], x_range=(0, 1), y_range=(0, 10))
    assert compare_tables(beyond, reference, Tolerance(x_rel=0.02, y_rel=0.1)).counts["incorrect"] == 1


def test_invalid_tolerance_rejected():
    t = xy_table([(0, 0), (1, 1)])
    for bad in (0.0, 1.0, -0.1, 1.5):
        with pytest.raises(InvalidTolerance):
            compare_tables(t, t, Tolerance(x_rel=bad, y_rel=0.02))


def test_schema_mismatch_rejected():
    numeric = xy_table([(0, 0), (1, 1)])
    categorical = DataTable(
        columns=(numeric.columns[0].__class__("x", ValueKind.CATEGORICAL), numeric.columns[1]),
        rows=(("a", 0.0), ("b", 1.0)),
    )
    with pytest.raises(SchemaMismatch):
        compare_tables(numeric, categorical)


def test_categorical_x_matches_by_label():
    from evalsynth.tables import make_table

    reference = make_table(
        [("phase", ValueKind.CATEGORICAL), ("count", ValueKind.NUMERIC)],
        [("alpha", 10.0), ("beta", 20.0), ("gamma", 30.0)],
    )
    extracted = make_table(
        [("phase", ValueKind.CATEGORICAL), ("count", ValueKind.NUMERIC)],
        [("beta", 20.0), ("alpha", 25.0), ("delta", 1.0)],
    )
    report = compare_tables(extracted, reference, Tolerance(x_rel=0.02, y_rel=0.1))
    # y window = 0.1 * (30 - 10) = 2.0; alpha deviates by 15 -> incorrect
    assert report.counts == {"incorrect": 1, "spurious": 1, "missing": 1}
    assert report.missing[0].cells[0] == "gamma"
    assert report.spurious[0].cells[0] == "delta"


def test_injection_soundness_randomized():
    rng = random.Random(1234)
    tol = Tolerance()
    for _ in range(150):
        n = rng.randint(5, 12)
        k = rng.randint(0, 2)
        d = rng.randint(0, 2)
        s = rng.randint(0, 2)
        extracted, reference, _, _ = make_perturbed_pair(rng, n, k, d, s, tol)
        report = compare_tables(extracted, reference, tol)
        assert report.counts == {"incorrect": k, "spurious": s, "missing": d}, (n, k, d, s)


def test_greedy_matches_brute_force_on_small_tables():
    rng = random.Random(99)
    tol = Tolerance()
    for _ in range(150):
        n = rng.randint(3, 8)
        k = rng.randint(0, min(2, n - 1))
        d = rng.randint(0, min(2, n - k))
        s = rng.randint(0, 2)
        extracted, reference, x_window, y_window = make_perturbed_pair(rng, n, k, d, s, tol)
        report = compare_tables(extracted, reference, tol)
        expected = brute_force_counts(extracted, reference, x_window, y_window)
        got = (report.counts["incorrect"], report.counts["spurious"], report.counts["missing"])
        assert got == expected
