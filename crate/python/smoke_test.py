"""Smoke test for the artts Python module.

Build and install first, e.g. `pip install maturin && maturin develop -m crates/py/Cargo.toml`,
then run `python python/smoke_test.py` from the repository root.
"""

import os
import sys

import artts

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


def main():
    station = artts.Station.load(os.path.join(ROOT, "stations", "station-a"))
    assert station.name
    assert "SHUTTER_PERMIT" in station.outputs
    assert "DOOR_CLOSED_1" in station.inputs
    assert not [d for d in station.lint() if ": error:" in d]

    eng = artts.Engine(station)
    assert eng.read("SHUTTER_PERMIT") is False
    for name in ("DOOR_CLOSED_1", "DOOR_CLOSED_2", "SEARCH_BTN_1"):
        eng.write(name, True)
    eng.step()
    assert eng.read("SEARCH_LED_A") and eng.read("SEARCH_LED_B")
    assert ("ACCESS", "SEARCH_1") in eng.task_states
    try:
        eng.write("SHUTTER_PERMIT", True)
    except ValueError:
        pass
    else:
        raise AssertionError("writing an output must fail")

    eng.inject_fault("B", "WATCHDOG")
    assert eng.faults == ("NO_FAULT", "WATCHDOG")
    eng.reset_faults()
    assert eng.faults == ("NO_FAULT", "NO_FAULT")

    result = eng.run_case(
        'case TC-PY "permit stays off"\n'
        "set BEAM_REQ 1\n"
        "expect SHUTTER_PERMIT == 0 within 50ms\n"
    )
    assert result["verdict"] == "Pass", result

    batch = artts.run_suite(os.path.join(ROOT, "suite", "suite.json"), seed=1)
    assert batch["totals"]["pass"] == 72, batch["totals"]
    assert batch["mean_sim_per_case_ms"] == batch["sim_elapsed_ms"] / len(batch["results"])

    cov = artts.coverage(
        os.path.join(ROOT, "suite", "requirements.txt"),
        os.path.join(ROOT, "suite", "links.txt"),
        os.path.join(ROOT, "suite", "suite.json"),
        "detail",
    )
    assert cov["covered"] == cov["total"] >= 150, cov

    report = artts.Station.reference().explore()
    assert report["complete"] and report["violation_count"] == 0, report

    bus = artts.Bus(station)
    c = bus.connect()
    assert bus.handle_line(c, "READ SHUTTER_PERMIT") == [(c, "OK 0")]
    assert bus.handle_line(c, "WRITE SHUTTER_PERMIT 1") == [
        (c, 'ERR not-input "SHUTTER_PERMIT is an output"')
    ]

    print("artts smoke test ok: 72/72 pass, %d states explored" % report["states"])
    return 0


if __name__ == "__main__":
    sys.exit(main())
