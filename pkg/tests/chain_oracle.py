"""Waiting-time references for one- and two-link chains, solved independently."""

import math

import numpy as np


def two_link_rounds_closed(q: float, s: float) -> float:
    """Rounds to the first delivery without cutoff: E[max of two geometrics] / s."""
    return (2 / q - 1 / (1 - (1 - q) ** 2)) / s


def two_link_rounds_linear(q: float, s: float, cutoff_rounds: float) -> float:
    """Expected rounds with a memory cutoff, from a linear solve over link ages.

    State (a, b): each entry is 0 while the link generates, else the age in
    rounds of the pair it holds. A pair whose age would pass the cutoff is
    dropped once it reaches ``ceil(cutoff)`` rounds and its link relaunches
    at that same boundary.
    """
    valid = math.floor(cutoff_rounds + 1e-9)
    release = math.ceil(cutoff_rounds - 1e-9)
    states = [(0, 0)] + [(a, 0) for a in range(1, valid + 1)] + [(0, a) for a in range(1, valid + 1)]
    index = {st: i for i, st in enumerate(states)}
    n = len(states)
    A = np.eye(n)
    rhs = np.ones(n)

    def step(age, p_success):
        if age == 0:
            return [(1, p_success), (0, 1 - p_success)]
        return [(age + 1, 1.0)]

    def settle(age):
        # a pair that reached the release age frees its link, which relaunches at once
        return 0 if age >= release or age > valid else age

    for st, i in index.items():
        for a, pa in step(st[0], q):
            for b, pb in step(st[1], q):
                w = pa * pb
                if w == 0:
                    continue
                if 1 <= a <= valid and 1 <= b <= valid:
                    # swap: success absorbs, failure restarts both links
                    A[i, index[(0, 0)]] -= w * (1 - s)
                else:
                    A[i, index[(settle(a), settle(b))]] -= w
    return float(np.linalg.solve(A, rhs)[index[(0, 0)]])
