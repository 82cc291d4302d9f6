from __future__ import annotations

import pytest

from spinwire.sweep import SweepConfig, log_grid, run_sweep

GRID_N = (50, 100, 200, 400)
GRID_EPS = tuple(log_grid(0.01, 0.5, 12))
GRID_NAV = 1000

# criterion id -> (passed, detail); filled by the acceptance tests
ACCEPTANCE: dict[str, tuple[bool, str]] = {}


def record(key: str, passed: bool, detail: str) -> None:
    ACCEPTANCE[key] = (bool(passed), detail)
    print(f"{'PASS' if passed else 'FAIL'}  {key}: {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: int(k.split()[0])):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {key}: {detail}")


def _grid(tmp_path_factory, family, kind):
    cfg = SweepConfig(family, GRID_N, GRID_EPS, kind, n_av=GRID_NAV, seed=0)
    ckpt = tmp_path_factory.getbasetemp() / f"{family}-{kind}.jsonl"
    return run_sweep(cfg, checkpoint=ckpt)


@pytest.fixture(scope="session")
def grid_lin_rel(tmp_path_factory):
    return _grid(tmp_path_factory, "pst-linear", "relative")


@pytest.fixture(scope="session")
def grid_lin_abs(tmp_path_factory):
    return _grid(tmp_path_factory, "pst-linear", "absolute")


@pytest.fixture(scope="session")
def grid_opt(tmp_path_factory):
    # relative and absolute disorder coincide for boundary-controlled chains
    return _grid(tmp_path_factory, "ost-optimal", "absolute")
