"""Smoke test for the neuralprog extension.

Build and install first:
    maturin build --release -m crates/python/Cargo.toml -o dist
    pip install dist/neuralprog-*.whl
"""

import neuralprog as npg

# probit guard
assert abs(npg.cdf(1.0, 0.16) - 0.994) < 1e-3
lo, hi = npg.central_interval(npg.cdf(1.0, 0.16), 0.16)
assert abs(hi - 1.095) < 0.01 and abs(lo + 1.095) < 0.01
assert all(row[3] for row in npg.check())

# programs
probe = npg.Program("x = 1; nif(x >= 0, 0.16) { s1 = 1 } else { s1 = 0 }")
mean = probe.mean(20000, seed=1)["s1"]
assert abs(mean - 0.994) < 0.003, mean
assert npg.Program("y = x * 2").run(store={"x": 1.5})["y"] == 3.0
try:
    npg.Program("x = ;")
except ValueError:
    pass
else:
    raise AssertionError("parse error not raised")

# chain model round trip
s2 = [0.0062, 0.0032, 0.0019, 0.022, 0.0008, 0.0178, 0.0013]
b = [0.7968, -0.2086, 0.5475, -0.0045, 1.1920, -0.0968]
g = npg.Gbn.chain([0.0] * 7, s2, b)
back = npg.Gbn.extract([0.0] * 7, g.precision())
assert max(abs(x - y) for x, y in zip(back.variances, s2)) < 1e-9
assert max(abs(x - y) for x, y in zip(back.coefficients, b)) < 1e-9
assert npg.Gbn.from_csv(g.to_csv()).variances == g.variances
assert g.sample(3, seed=4) == g.sample(3, seed=4)

# learning and parking
world = npg.World()
traces = world.expert_traces(500, seed=9)
learner = npg.Learner()
learner.update(traces[:250])
learner.update(traces[250:])
assert len(learner.model()) == 7
model = world.learn(500, seed=9)
rate = world.success_rate(model, runs=100, seed=1)
assert rate >= 0.8, rate
ok, pose, commands = world.park(model, seed=3)
assert len(commands) == 7

print(f"neuralprog smoke test passed (parking success {rate:.2f})")
