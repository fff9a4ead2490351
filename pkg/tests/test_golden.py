import json
from pathlib import Path

import pytest

from hal.golden import TOLERANCE, compare, names

GOLDEN = Path(__file__).parent / "golden"


@pytest.mark.parametrize("name", names())
def test_golden_within_tolerance(name):
    path = GOLDEN / f"{name}.json"
    frozen = json.loads(path.read_text())
    assert frozen["values"]
    if frozen["kind"] == "campaign":
        assert frozen["resolutions"] and frozen["half_width"]
    assert compare(path) == []


def test_compare_flags_drift(tmp_path):
    frozen = json.loads((GOLDEN / "pde.json").read_text())
    key = sorted(frozen["values"])[0]
    frozen["values"][key] *= 1 + 2 * TOLERANCE
    p = tmp_path / "pde.json"
    p.write_text(json.dumps(frozen))
    bad = compare(p)
    assert [b[0] for b in bad] == [key]
