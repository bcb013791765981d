"""Quick end-to-end check of the Python bindings.

Build and install first:  maturin build --release -m crates/python/Cargo.toml && pip install target/wheels/ltlab-*.whl
"""
import json
import math

import ltlab


def close(a, b, tol):
    assert abs(a - b) <= tol, f"{a} vs {b}"


close(ltlab.semiclassical_constant(1.5, 1), 3 / 16, 1e-12)
close(ltlab.one_bound_state_constant(1.5, 1), 3 / 16, 1e-8)
close(ltlab.complete_elliptic_k(0.0), math.pi / 2, 1e-15)

row = ltlab.lame_report(0.7)
close(row["ratio"], 3 / 16, 1e-10)

v = ltlab.PotentialField.lame(0.7, 64)
assert v.lattice == "line" and len(v) == 64
edges = [b[0] for b in v.bands(1, 64)]
period_sq = (2 * ltlab.complete_elliptic_k(0.7)) ** 2
close(min(edges), -period_sq, 1e-5 * period_sq)
close(v.riesz_mean(1.5, 1, 64) / v.lp_integral(2.0), 3 / 16, 1e-5)

flat = ltlab.PotentialField.constant("triangular", 8, -2.0)
assert ltlab.PotentialField.from_json(flat.to_json()).values == flat.values

try:
    ltlab.lame_report(1.2)
except ValueError as e:
    assert "modulus" in str(e)
else:
    raise AssertionError("k = 1.2 accepted")

cfg = ltlab.ScfConfig("line", 1.5, 5.0, n_c=32, n_b=32)
r = ltlab.optimize(cfg)
assert r.converged, r
close(r.ratio_sc, 1.0, 1e-3)
assert all(b >= a - 1e-10 * (1 + abs(a)) for a, b in zip(r.trace, r.trace[1:]))
assert json.loads(r.to_json())["config"]["lattice"] == "line"

results = ltlab.sweep(ltlab.ScfConfig("line", 1.5, 1.0, n_c=32, n_b=32), [2.0, 4.0], warm_start=True)
assert [x.converged for x in results] == [True, True]

print("python smoke test ok:", r)
