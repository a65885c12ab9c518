import json
import pathlib

import pytest

from regularflow.scenario import scenario_from_dict

REPO_ROOT = pathlib.Path(__file__).resolve().parent.parent
SCENARIO_DIR = REPO_ROOT / "scenarios"


def make_scenario(**overrides):
    """1D scenario shorthand: box domain plus keyword overrides."""
    data = {
        "domain": {"kind": "box", "lower": [0.0], "upper": [1.0]},
        "force": {"kind": "smooth1d", "f": "0"},
        "velocity": "0",
    }
    data.update(overrides)
    return scenario_from_dict(data)


def scenario_path(name):
    if not name.endswith(".json"):
        name += ".json"
    return str(SCENARIO_DIR / name)


def load_bundled(name):
    with open(scenario_path(name), "r", encoding="utf-8") as fh:
        return scenario_from_dict(json.load(fh))


@pytest.fixture
def scenario_dir():
    return SCENARIO_DIR
