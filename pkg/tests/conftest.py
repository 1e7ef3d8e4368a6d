import numpy as np
import pytest

# outcome per acceptance criterion label, in registration order
_ACCEPTANCE: dict = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    label = marker.args[0]
    if report.when == "call":
        _ACCEPTANCE[label] = report.outcome
    elif report.when == "setup" and report.outcome != "passed":
        # setup skip/error counts for the criterion too
        _ACCEPTANCE[label] = report.outcome


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    words = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}
    for label, outcome in _ACCEPTANCE.items():
        terminalreporter.write_line(f"[{words.get(outcome, outcome.upper())}] {label}")


@pytest.fixture
def rng():
    return np.random.Generator(np.random.PCG64(0))


@pytest.fixture
def corpus_factory(tmp_path):
    """Write a manifest + scale sidecar; returns (manifest_path, sidecar_path).

    rows: iterable of (clip_id, valence, arousal) or full 6-tuples.
    """
    import json

    def make(name, rows, scale=(-1.0, 1.0, -1.0, 1.0), duration=10.0):
        d = tmp_path / name
        d.mkdir(exist_ok=True)
        lines = ["clip_id,audio_path,duration_s,valence,arousal,genre"]
        for row in rows:
            if len(row) == 3:
                cid, v, a = row
                lines.append(f"{cid},audio/{cid}.wav,{duration},{v},{a},")
            else:
                lines.append(",".join(str(p) for p in row))
        manifest = d / "manifest.csv"
        manifest.write_text("\n".join(lines) + "\n")
        sidecar = d / "scale.json"
        sidecar.write_text(
            json.dumps(
                {
                    "dataset_id": name,
                    "v_min": scale[0],
                    "v_max": scale[1],
                    "a_min": scale[2],
                    "a_max": scale[3],
                }
            )
        )
        return manifest, sidecar

    return make
