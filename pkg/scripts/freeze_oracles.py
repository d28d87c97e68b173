"""Recompute the independent reference values and freeze them to tests/data/oracle_values.json.

Run from the repository root:  python3 scripts/freeze_oracles.py
"""

import json
import math
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "tests"))

import oracles  # noqa: E402


def compute():
    s2 = 2.5
    m4 = oracles.mixed_moment(2, 1.0, 2.0)
    values = {
        "trig_weight_1_1": oracles.trig_weight(1, 1),
        "trig_weight_2_0": oracles.trig_weight(2, 0),
        "mixed_moment_4_s1_s2": m4,
        "delta4_s1_s2": m4 - 3 * s2 ** 2,
        "kurtosis_s1_s2": m4 / s2 ** 2,
        "mixed_moment_6_s1_s2": oracles.mixed_moment(3, 1.0, 2.0),
        "joint_2_2_s1_s1_c05": oracles.gaussian_joint_moment(2, 2, 1.0, 1.0, 0.5),
        "joint_dev_1_1_example": 6.0 - (1 + 2 * 0.25),
        "delta4_s1_s1_c05": oracles.mixed_moment(2, 1.0, 1.0, 0.5) - 3.0,
        "asymmetry_sq_s1_s2": (8 / 3) * (m4 - 3 * s2 ** 2),
        "masquerade_target_m4": 3 * s2 ** 2,
        "masquerade_declared_sum": -(1.0 - 4.0) ** 2,
        "uniform_kurtosis": oracles.uniform_plus_gaussian_moment(4, 1.0, 1e-300) / (1 / 3) ** 2,
        "sqrt_24_over_280000": math.sqrt(24 / 280000),
    }
    return values


if __name__ == "__main__":
    out = ROOT / "tests" / "data" / "oracle_values.json"
    out.write_text(json.dumps(compute(), indent=2, sort_keys=True) + "\n")
    print(f"wrote {out}")
