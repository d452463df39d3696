from __future__ import annotations

from pathlib import Path

import pytest

REPO = Path(__file__).resolve().parent.parent
DATA = REPO / "data"
TEST_DATA = Path(__file__).resolve().parent / "data"


@pytest.fixture(scope="session")
def ui_policy_text() -> str:
    return (DATA / "policies" / "ui-policy.yaml").read_text(encoding="utf-8")


@pytest.fixture(scope="session")
def command_policy_text() -> str:
    return (DATA / "policies" / "command-policy.yaml").read_text(encoding="utf-8")


@pytest.fixture(scope="session")
def topology_text() -> str:
    return (DATA / "topology" / "ics.yaml").read_text(encoding="utf-8")


def scenario_path(name: str) -> Path:
    return DATA / "scenarios" / name


@pytest.fixture(scope="session")
def scenario_texts() -> dict[str, str]:
    return {
        path.stem: path.read_text(encoding="utf-8")
        for path in sorted((DATA / "scenarios").glob("*.yaml"))
    }
