import copy
import io
import json
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from fanetsim.runner import simulate  # noqa: E402
from fanetsim.scenario import scenario_from_dict  # noqa: E402
from fanetsim.trace import parse_trace  # noqa: E402

SCENARIO_DIR = Path(__file__).resolve().parents[1] / "src" / "fanetsim" / "scenarios"
BUNDLED = sorted(SCENARIO_DIR.glob("*.json"))


def static_node(nid, pos, apps=(), role="UAV"):
    return {"id": nid, "role": role, "mobility": {"model": "static", "position": list(pos)},
            "apps": list(apps)}


def scenario_dict(nodes, duration_ms=2000, seed=1, channel=None, protocol=None, **extra):
    d = {"format": 1, "duration_ms": duration_ms, "seed": seed,
         "bounds": {"lo": [0, 0, 0], "hi": [2000, 2000, 200]},
         "position_sample_ms": 0, "nodes": nodes}
    if channel:
        d["channel"] = channel
    if protocol:
        d["protocol"] = protocol
    d.update(extra)
    return d


def run_text(d, seed=None) -> str:
    buf = io.StringIO()
    simulate(scenario_from_dict(copy.deepcopy(d)), buf, seed)
    return buf.getvalue()


def run_dict(d, seed=None):
    return parse_trace(run_text(d, seed).splitlines())


def load_bundled(name):
    return json.loads((SCENARIO_DIR / f"{name}.json").read_text())


@pytest.fixture
def line4():
    return load_bundled("line4")


def pytest_terminal_summary(terminalreporter):
    outcome = {}
    for status in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(status, []):
            nodeid = getattr(rep, "nodeid", "")
            if "test_acceptance.py::test_criterion_" not in nodeid:
                continue
            name = nodeid.split("::")[1].split("[")[0]
            ok = status == "passed" and outcome.get(name, True)
            outcome[name] = ok
    if not outcome:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(outcome):
        num, label = name[len("test_criterion_"):].split("_", 1)
        mark = "PASS" if outcome[name] else "FAIL"
        terminalreporter.write_line(f"criterion {int(num):2d} {label:<28} {mark}")
