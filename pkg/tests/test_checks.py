import copy

from firmvalue.checks import hard_failures, invariant_report


def test_invariant_report_all_green(small_solution):
    report = invariant_report(small_solution)
    for name, entry in report.items():
        assert entry["ok"], (name, entry)
    assert hard_failures(report) == []


def test_hard_failures_pick_the_gate_entries(small_solution):
    report = copy.deepcopy(invariant_report(small_solution))
    report["xmax_sufficiency"]["ok"] = False  # warning-only entry
    report["region_shape"]["ok"] = False  # warning-only entry
    assert hard_failures(report) == []
    report["slope_bound"]["ok"] = False
    report["m_matrix"]["ok"] = False
    assert hard_failures(report) == ["slope_bound", "m_matrix"]


def test_report_is_json_serializable(small_solution):
    import json

    json.dumps(invariant_report(small_solution))
