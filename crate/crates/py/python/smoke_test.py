"""Smoke test for the fountain_lab_py extension.

Uses an installed module if one is importable, otherwise loads the shared
library built by `cargo build --release -p fountain-lab-py --features extension-module`
(or the path in FOUNTAIN_LAB_PY_LIB).
"""

import importlib.machinery
import importlib.util
import math
import os
import pathlib
import sys


def load():
    try:
        import fountain_lab_py

        return fountain_lab_py
    except ImportError:
        pass
    root = pathlib.Path(__file__).resolve().parents[3]
    default = root / "target" / "release" / "libfountain_lab_py.so"
    path = pathlib.Path(os.environ.get("FOUNTAIN_LAB_PY_LIB", default))
    loader = importlib.machinery.ExtensionFileLoader("fountain_lab_py", str(path))
    spec = importlib.util.spec_from_file_location("fountain_lab_py", path, loader=loader)
    module = importlib.util.module_from_spec(spec)
    loader.exec_module(module)
    return module


def main():
    fl = load()
    DD = fl.DegreeDistribution

    one = DD.point_mass(1)
    assert abs(fl.s_of_r(math.log(2), one) - 0.5) < 1e-6
    assert abs(fl.r_of_z(0.5, one) - math.log(2)) < 1e-6

    p = DD.ideal_soliton(4)
    assert p.entries == [(1, 0.25), (2, 0.5), (3, 1 / 6), (4, 1 / 12)]
    assert DD.from_text(p.to_text()).entries == p.entries
    assert abs(p.perturb(0.1).mass(1) - (0.1 + 0.9 * 0.25)) < 1e-15

    dist, a, m = fl.truncated_soliton(0.75)
    assert m == 3 and abs(a - 0.877063) < 1e-6
    lower = fl.dual_outer_bound(0.75)
    assert lower <= a and a - lower < 0.05
    _, r = fl.optimal_distribution(2 / 3)
    assert abs(r - 0.75 * math.log(3)) < 1e-12
    primal, r = fl.primal_min_r(0.6)
    assert abs(r - (-math.log(0.4) / 1.2)) < 2e-3 and primal.mass(2) > 1 - 1e-9

    inputs = [bytes([i, 255 - i]) for i in range(20)]
    mix = DD([(1, 0.3), (2, 0.5), (3, 0.2)], "mix")
    symbols = fl.encode(inputs, mix, 60, 7)
    values, count = fl.decode(symbols, len(inputs))
    assert count == sum(v is not None for v in values)
    assert all(v == inputs[i] for i, v in enumerate(values) if v is not None)

    csv = fl.simulate(one, 2000, [0.5], trials=20, seed=3)
    row = [line for line in csv.splitlines() if not line.startswith("#")][1].split(",")
    assert abs(float(row[1]) - (1 - math.exp(-0.5))) < 0.02

    try:
        fl.s_of_r(-1.0, one)
    except ValueError:
        pass
    else:
        raise AssertionError("negative r accepted")

    print(f"fountain_lab_py {fl.__version__}: smoke test passed")


if __name__ == "__main__":
    sys.exit(main())
