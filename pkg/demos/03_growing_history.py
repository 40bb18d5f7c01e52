"""Error shrinks as the observed history grows.

Each day in a working-day sequence is evaluated online: targets and candidate
history come only from strictly earlier days.  Early days have thin history
(few matching candidates, so deviated trips cannot be reproduced); late days
have seen most recurring demand patterns before.
"""

from tripforge import EvalConfig, SynthConfig, build_grid_network, generate_collection, online_eval

net = build_grid_network(rows=4, cols=5, seed=0)
cfg = SynthConfig(network=net, days=9, day_types=("working",) * 9,
                  trips_per_day=2500, od_pool_size=200, seed=3)
collection = generate_collection(cfg)

result = online_eval(collection, ("working",), EvalConfig(iterations=40_000, checkpoint_every=10_000, seed=5))

print(f"{'test day':>9} {'prior days':>11} {'initial':>9} {'final':>8}")
for row in result.rows:
    print(f"{row.test_day:>9} {row.prior_days:>11} {row.initial_error:>9.4f} {row.final_error:>8.4f}")

first, last = result.rows[0], result.rows[-1]
print(f"\nfinal error with {first.prior_days} prior day(s): {first.final_error:.3f}; "
      f"with {last.prior_days}: {last.final_error:.3f}")
