"""Acceptance gate: every criterion at full level, one printed PASS/FAIL line each.

Run alone with ``pytest tests/test_acceptance.py -s``.
"""
import pytest

from krauscompress.harness.verify import CHECK_NAMES, TIME_LIMITS, verify_suite

SEED = 0


@pytest.fixture(scope="module")
def full_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("verify_full")
    report = verify_suite("full", seed=SEED, out_dir=str(out))
    return report, out


def _announce(capsys, check_id, ok, detail):
    with capsys.disabled():
        status = "PASS" if ok else "FAIL"
        print(f"\ncriterion {check_id:>2} [{status}] {CHECK_NAMES[check_id]}: {detail}")


@pytest.mark.parametrize("check_id", range(1, 11))
def test_criterion(full_run, check_id, capsys):
    report, _ = full_run
    res = next(r for r in report.results if r.check_id == check_id)
    failing = [f"{r.quantity}={r.value:.6g} (want {r.threshold})" for r in res.rows if not r.passed]
    detail = f"{res.seconds:.1f}s of {TIME_LIMITS[check_id]}s"
    if res.error:
        detail += f"; error {res.error}"
    if failing:
        detail += "; " + ", ".join(failing)
    ok = res.passed and res.within_time
    _announce(capsys, check_id, ok, detail)
    assert res.error is None, res.error
    assert res.passed, failing
    assert res.within_time, detail


def test_criterion_11_determinism(full_run, tmp_path, capsys):
    report, first_dir = full_run
    second = verify_suite("full", seed=SEED, out_dir=str(tmp_path))
    same = (first_dir / "verify.csv").read_bytes() == (tmp_path / "verify.csv").read_bytes()
    res = next(r for r in report.results if r.check_id == 11)
    ok = same and res.passed and second.passed
    _announce(capsys, 11, ok, f"verify.csv byte-identical across runs: {same}; "
                              f"sweep/svg rerun identical: {res.passed}")
    assert same
    ids = {int(line.split(",")[0]) for line in (tmp_path / "verify.csv").read_text().splitlines()[1:]}
    assert ids == set(range(1, 12))
    assert res.passed and res.within_time
