"""Smoke test for the randers_lab_py extension module."""

import json
import math

import randers_lab_py as rl


def main():
    assert rl.classify_pair(2.0, 4.0, 3) == "S"
    assert rl.classify_pair(3.0, 5.0, 3) == "MT"
    assert rl.classify_pair(2.0, 8.0, 3) is None

    w, lq, fails = rl.funk_verdict(3, 2.0, 4.0)
    assert math.isfinite(w) and math.isinf(lq) and fails

    assert abs(rl.beta(3.0, 1.0 / 3.0) - 27.0 / 14.0) < 1e-10
    assert abs(rl.comparison_volume(0.0, 2, 1.0) - math.pi) < 1e-12

    count, method = rl.packing_count([100.0, 0.0], 1.0)
    assert method == "ANGULAR_EXACT" and abs(count / (100.0 * math.pi) - 1.0) < 0.1

    config = {"subcommand": "funk", "params": {"dim": 2, "p": 3, "q": "inf"}}
    text, passed = rl.run_config(json.dumps(config))
    assert passed and text.startswith("# schema=1")

    try:
        rl.funk_verdict(4, 2.0, 8.0)
    except ValueError:
        pass
    else:
        raise AssertionError("non-admissible pair without t must raise")

    print("smoke test ok")


if __name__ == "__main__":
    main()
