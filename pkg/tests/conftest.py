"""Collects acceptance-criterion outcomes and prints them after the run."""

import functools

ACCEPTANCE = []  # (tier, name, outcome, detail)
_LABELS = {}  # node id -> (tier, name)


def criterion(tier, name):
    """Record the outcome of a test function under an acceptance label."""

    def wrap(fn):
        @functools.wraps(fn)
        def inner(*args, **kwargs):
            import pytest

            try:
                detail = fn(*args, **kwargs)
            except pytest.skip.Exception:
                ACCEPTANCE.append((tier, name, "SKIP", ""))
                raise
            except BaseException as exc:
                ACCEPTANCE.append((tier, name, "FAIL", type(exc).__name__))
                print(f"[FAIL] tier {tier}: {name}")
                raise
            ACCEPTANCE.append((tier, name, "PASS", detail or ""))
            print(f"[PASS] tier {tier}: {name}" + (f" ({detail})" if detail else ""))

        inner.criterion = (tier, name)
        return inner

    return wrap


def pytest_collection_modifyitems(items):
    for item in items:
        label = getattr(getattr(item, "function", None), "criterion", None)
        if label:
            _LABELS[item.nodeid] = label


def pytest_runtest_logreport(report):
    # skips raised by fixtures never reach the wrapped function
    if report.when == "setup" and report.skipped and report.nodeid in _LABELS:
        tier, name = _LABELS[report.nodeid]
        reason = report.longrepr[2] if isinstance(report.longrepr, tuple) else ""
        ACCEPTANCE.append((tier, name, "SKIP", reason.removeprefix("Skipped: ")))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for tier, name, outcome, detail in ACCEPTANCE:
        line = f"[{outcome}] tier {tier}: {name}"
        tr.write_line(line + (f" ({detail})" if detail else ""))
