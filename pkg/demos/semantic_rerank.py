"""Re-rank statistical candidates by judged semantic plausibility.

The causality screen ranks on p-values alone, so correlated noise can
sit above genuine relationships.  The re-ranker asks a judge (an LLM
endpoint in live mode; a deterministic stub here) whether a real-world
transmission mechanism connects each directed pair, then stable-sorts
by the verdict's strength grade.  Ties keep their statistical order,
which makes an indifferent judge a no-op.
"""

from leadlag import (
    ScorerConfig,
    build_prompt,
    log_odds,
    make_stationary,
    planted_universe,
    rerank,
    score_candidates,
    screen_pairs,
)

# A noisy universe: weak couplings plus loud idiosyncratic movers, so
# the statistical table mixes real links with flukes.
universe, metadata, links = planted_universe(
    seed=5, n_markets=20, n_links=5, days=90, beta=0.15, lags=(1, 2),
    extra_vol=0.6)
planted = {(ln.leader_id, ln.follower_id): ln for ln in links}

signals = [make_stationary(log_odds(s)) for s in universe.values()]
candidates = screen_pairs(signals, lags=(1, 2, 3), k=10)

print("statistical ranking (ascending p-value):")
for rank, r in enumerate(candidates, start=1):
    note = "planted" if (r.leader_id, r.follower_id) in planted else "spurious"
    print(f"  {rank:2d}. {r.leader_id} -> {r.follower_id}  "
          f"p={r.p_value:.2e}  {note}")

# The judge sees only the event descriptions, never the price data.
top = candidates[0]
print("\nprompt for the top pair:\n")
print(build_prompt(metadata[top.leader_id], metadata[top.follower_id]))

# Stub verdicts stand in for the LLM: here they encode the fiction that
# the judge recognizes every planted mechanism and dismisses the rest.
# An entry maps a directed pair to a strength grade, or to a
# (strength, expected_sign) tuple when the judge also calls direction.
table = {(ln.leader_id, ln.follower_id): ("strong", ln.sign) for ln in links}
scorer = ScorerConfig(mode="stub", stub_table=table, stub_default="none")
verdicts, failures = score_candidates(scorer, candidates, metadata)
assert not failures

reranked = rerank(candidates, verdicts, m=5)
print("traded portfolio after re-ranking (top 5):")
for rank, r in enumerate(reranked, start=1):
    v = verdicts[(r.leader_id, r.follower_id)]
    note = "planted" if (r.leader_id, r.follower_id) in planted else "spurious"
    print(f"  {rank:2d}. {r.leader_id} -> {r.follower_id}  "
          f"strength={v.strength:8s} sign={v.expected_sign:+d}  {note}")

surfaced = {r.pair for r in candidates}
missing = [f"{a} -> {b}" for a, b in sorted(planted) if (a, b) not in surfaced]
print(f"\nplanted links the screen never surfaced: {', '.join(missing) or 'none'}")
print("re-ranking reorders the candidate list; it cannot add to it")

# With one uniform grade there are no rank inversions: the stable sort
# returns the statistical order, merely truncated to m.
uniform = ScorerConfig(mode="stub", stub_default="moderate")
verdicts, _ = score_candidates(uniform, candidates, metadata)
unchanged = rerank(candidates, verdicts, m=5)
assert [r.pair for r in unchanged] == [r.pair for r in candidates[:5]]
print("\nuniform verdicts leave the statistical order untouched")
