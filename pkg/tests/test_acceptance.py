"""Acceptance gate: one test per published criterion, pass/fail per line.

The randomized suites (criteria 3-5) are solved once in a module-scoped
fixture; criterion 6 audits the equilibrium paths they produced.  Heavy-tier
golden solves carry the ``slow`` marker (run with ``-m slow``); everything
else runs in the default session.

Criterion 1's k-approval winner-membership sub-check is expected to fail:
the narrated ratio-3 equilibrium is not subgame-perfect under the exact
preference model (an early voter can burn a vote on an already-supported
filler agent, force a score-2 bar that the narrated winner cannot reach, and
thereby guarantee itself a confirmed outcome).  The test asserts the claim
faithfully and stays red rather than encoding the defect as expected
behavior.
"""

import pytest

from seqvote import verify
from seqvote.balloting import APPROVAL, k_approval
from seqvote.engine import Budget, Solver
from seqvote.families import InstanceSpec, agent_index, gen_paper_instance


@pytest.fixture(scope="module")
def randomized_suites():
    """Criteria 3-5 share their solves; criterion 6 reuses the sampled paths."""
    samples = []
    results = {
        3: verify.check_low_outdegree_suite(samples),
        4: verify.check_approval_bound_suite(samples),
        5: verify.check_plurality_bound_suite(samples),
    }
    return results, samples


def test_criterion_1_golden_instances():
    """Golden catalog expectations, fast tier.

    Includes the documented walkthrough-subgame fallback for the heavy
    approval solve of the gap-2 family; the full solve runs under ``-m slow``.
    """
    r = verify.check_golden_instances(heavy=False)
    assert r.passed, r.detail


@pytest.mark.slow
def test_criterion_1_heavy_gap_family_approval():
    """Full approval solve of the gap-2 family (budget 60 min)."""
    g = gen_paper_instance(InstanceSpec("g_k", 2))
    s = Solver(g, APPROVAL, budget=Budget(max_seconds=3600))
    winners = {g.names[w] for w in s.achievable_winners().winners}
    assert winners == {"c3"}, winners


def test_criterion_1_kapproval_chain_c3_achievable():
    """c_3 must be achievable in the k-approval chain family under 2-approval.

    Known red: the solver (validated against the unmemoized oracle) proves
    W = {c1, c2}; see the analysis in the decisions ledger.  Budget 30 min.
    """
    g = gen_paper_instance(InstanceSpec("kapproval_chain", 2))
    s = Solver(g, k_approval(2), budget=Budget(max_seconds=1800))
    winners = {g.names[w] for w in s.achievable_winners().winners}
    c3 = g.names[agent_index(g, "c3")]
    assert c3 in winners, (
        f"c3 not achievable: W={sorted(winners)}; the narrated equilibrium is "
        "not subgame-perfect under the exact preference model (a mid-order "
        "voter can burn a vote on an already-supported filler agent and "
        "guarantee itself a confirmed winner, which lexicographically "
        "dominates every continuation electing c3)"
    )


def test_criterion_2_oracle_equivalence():
    """Memoized+pruned solver equals the naive oracle on 300 seeded instances."""
    r = verify.check_oracle_equivalence()
    assert r.passed, r.detail
    assert r.seconds < 600, f"exceeded 10-minute budget: {r.seconds:.0f}s"


def test_criterion_3_low_outdegree_suite(randomized_suites):
    """200 out-degree<=1 graphs x both rules: unique winner, zero gap,
    potential bound."""
    results, _ = randomized_suites
    r = results[3]
    assert r.passed, r.detail
    assert r.seconds < 600, f"exceeded 10-minute budget: {r.seconds:.0f}s"


def test_criterion_4_approval_popularity_bound(randomized_suites):
    """Approval: every achievable winner within twice its popularity."""
    results, _ = randomized_suites
    r = results[4]
    assert r.passed, r.detail
    assert r.seconds < 1800, f"exceeded 30-minute budget: {r.seconds:.0f}s"


def test_criterion_5_plurality_popularity_bound(randomized_suites):
    """Plurality: some achievable winner within twice its popularity; the
    popularity-biased selection is audited softly (findings logged, no hard
    fail)."""
    results, _ = randomized_suites
    r = results[5]
    assert r.passed, r.detail
    assert r.seconds < 1800, f"exceeded 30-minute budget: {r.seconds:.0f}s"


def test_criterion_6_truthful_on_equilibrium_paths(randomized_suites):
    """Voters other than the winner who do not confirm the winner cast
    truthful-class ballots on every sampled equilibrium path."""
    _, samples = randomized_suites
    assert samples, "no equilibrium paths were collected"
    r = verify.check_truthful_on_path(samples)
    assert r.passed, r.detail


def test_criterion_7_comparator_equivalence():
    """Lexicographic key order equals exact perturbed-utility order for all
    feasible outcome parts up to n=8 and 25 rational perturbations per size."""
    r = verify.check_comparator_equivalence()
    assert r.passed, r.detail
    assert r.seconds < 60, f"exceeded 1-minute budget: {r.seconds:.0f}s"


def test_criterion_8_determinism():
    """Byte-identical run records across thread counts and pruning configs,
    timing-class fields excluded."""
    r = verify.check_determinism()
    assert r.passed, r.detail
