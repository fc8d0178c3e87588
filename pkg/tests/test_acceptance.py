"""All eleven acceptance criteria at the desk-scale configuration.

Each test prints one PASS/FAIL line; the lines are repeated in the pytest
terminal summary.  Run directly (python tests/test_acceptance.py) to get
just the lines.
"""
import pytest

from dcweak.acceptance import CRITERIA, run_criterion

from conftest import ACCEPTANCE_LINES


@pytest.mark.slow
@pytest.mark.parametrize("number", [c[0] for c in CRITERIA], ids=[c[1].replace(" ", "_") for c in CRITERIA])
def test_criterion(desk, number):
    res = run_criterion(desk, number)
    print(res.line())
    ACCEPTANCE_LINES.append(res.line())
    assert res.passed, res.detail


if __name__ == "__main__":
    import sys
    import tempfile

    from dcweak.acceptance import run_all
    from dcweak.config import JobConfig
    from dcweak.pipeline import Pipeline

    with tempfile.TemporaryDirectory() as tmp:
        pipe = Pipeline(JobConfig(cache_dir=tmp + "/cache", out_dir=tmp + "/reports"))
        results = run_all(pipe)
    sys.exit(0 if all(r.passed for r in results) else 1)
