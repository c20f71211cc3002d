"""Truth-biased preferences: three-level outcome utility plus an exact ballot bonus.

A voter's utility from outcome ``w`` while having cast ballot ``b`` is a
three-level outcome value (self > confirmed > unconfirmed) perturbed by a
bonus ``eps**2 * f - eps * g`` where ``f`` counts confirmed approvals and
``g`` unconfirmed approvals, for any ``0 < eps < 1/(2n)``.  Because the
perturbation can never cross outcome levels and a single ``g`` unit always
outweighs the maximal ``f`` bonus, the ordering induced by the exact utility
is the lexicographic order on ``(level, -g, f)`` for every valid ``eps``
simultaneously.  The solver compares only these keys; ``eps`` never enters
any solving path.
"""

from __future__ import annotations

from fractions import Fraction
from typing import NamedTuple

from .network import ConfirmationNetwork

# Outcome levels; stored as order-isomorphic integers rather than {1, 1/2, 0}.
LEVEL_SELF = 2
LEVEL_CONFIRMED = 1
LEVEL_UNCONFIRMED = 0

_LEVEL_VALUE = {
    LEVEL_SELF: Fraction(1),
    LEVEL_CONFIRMED: Fraction(1, 2),
    LEVEL_UNCONFIRMED: Fraction(0),
}

PrefKey = tuple  # (level, -g, f), compared lexicographically


class BallotAssessment(NamedTuple):
    f: int  # confirmed agents voted for
    g: int  # unconfirmed agents voted for


def outcome_level(g: ConfirmationNetwork, x: int, y: int) -> int:
    g._check_agent(x)
    g._check_agent(y)
    if x == y:
        return LEVEL_SELF
    if y in g.out_neighbors[x]:
        return LEVEL_CONFIRMED
    return LEVEL_UNCONFIRMED


def assess(g: ConfirmationNetwork, x: int, ballot: frozenset[int]) -> BallotAssessment:
    confirmed = g.out_neighbors[x]
    f = len(ballot & confirmed)
    return BallotAssessment(f=f, g=len(ballot) - f)


def pref_key(g: ConfirmationNetwork, x: int, ballot: frozenset[int], w: int) -> PrefKey:
    """Exact preference key of voter ``x`` for (ballot, outcome) pairs."""
    f, penalty = assess(g, x, ballot)
    return (outcome_level(g, x, w), -penalty, f)


def key_from_parts(level: int, f: int, g: int) -> PrefKey:
    return (level, -g, f)


def exact_utility(
    g: ConfirmationNetwork, x: int, ballot: frozenset[int], w: int, eps: Fraction
) -> Fraction:
    """Outcome utility plus the exact truth-bias bonus, in rational arithmetic."""
    eps = Fraction(eps)
    if not (0 < eps < Fraction(1, 2 * g.n)):
        raise ValueError(f"eps must lie in (0, 1/{2 * g.n}), got {eps}")
    f, penalty = assess(g, x, ballot)
    return _LEVEL_VALUE[outcome_level(g, x, w)] + eps * eps * f - eps * penalty


def utility_from_parts(level: int, f: int, g: int, eps: Fraction) -> Fraction:
    """Same utility, from raw (level, f, g) parts; used by equivalence checks."""
    return _LEVEL_VALUE[level] + eps * eps * f - eps * g
