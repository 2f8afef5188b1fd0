"""Closed-form payoffs of the miner fake-bid and 1-collusion cases.

Everything is expressed through the honest padded ranking ``padded``
(``padded[k-1]`` is ``b_k``) so the values can be checked against full
re-simulation. Future prices are inputs: the caller decides which model
produced them and whether the transaction is mined at all.
"""

from __future__ import annotations

from typing import Sequence


def _b(padded: Sequence[int], k: int) -> int:
    """1-indexed ``b_k``; ``b_0`` is unbounded."""
    if k <= 0:
        return float("inf")  # type: ignore[return-value]
    return padded[k - 1] if k <= len(padded) else 0


def _window(padded, n, lo, hi):
    """sum of b_{N+i} for i in lo..hi inclusive"""
    return sum(_b(padded, n + i) for i in range(lo, hi + 1))


def miner_fake_delta(case: int, padded: Sequence[int], n: int, b_fake: int, future_price: int) -> int:
    """Miner profit of a fake bid relative to honest mining.

    Case 1 (``b_N > b_fake >= b_2N``): the fake lands in the priority window
    and is mined later at ``future_price``. Case 2 (``b_{N-1} >= b_fake >= b_N``)
    and case 3 (``b_fake > b_{N-1}``): the fake is mined now and resets the
    clearing price to ``b_fake`` or ``b_{N-1}``.
    """
    b_n = _b(padded, n)
    b_2n = _b(padded, 2 * n)
    if case == 1:
        return b_fake - b_2n - future_price
    if case == 2:
        return b_n - b_2n - b_fake
    if case == 3:
        return b_n - b_2n - _b(padded, n - 1)
    raise ValueError(f"unknown fake-bid case {case}")


def miner_fake_bound(padded: Sequence[int], n: int) -> int:
    """Strict upper bound ``b_N - 2 b_2N`` on case-1 profit when ``b' > b_2N``."""
    return _b(padded, n) - 2 * _b(padded, 2 * n)


def coalition_honest(padded: Sequence[int], n: int, future_term: int) -> int:
    """Miner revenue plus the colluder's eventual payoff with nobody deviating."""
    return _window(padded, n, 1, n) + future_term


def coalition_payoff(
    case: int,
    padded: Sequence[int],
    n: int,
    honest_bid: int,
    raised_bid: int,
    true_value: int,
    future_term: int = 0,
) -> int:
    """Joint payoff of the miner and one colluder who raised ``honest_bid`` to ``raised_bid``.

    ``future_term`` is the colluder's eventual payoff in cases 3 and 4 (the
    transaction is deferred); cases 1 and 2 include it immediately at
    ``min(b_{N-1}, raised_bid)``. Case 1 keeps the printed ``- b_i + b_i``
    pair collapsed.
    """
    b_i = honest_bid
    if case in (1, 2):
        paid = min(_b(padded, n - 1), raised_bid)
        if case == 1:
            return _window(padded, n, 0, n) - b_i + true_value - paid
        return _window(padded, n, 0, n - 1) + true_value - paid
    if case == 3:
        return _window(padded, n, 1, n) - b_i + raised_bid + future_term
    if case == 4:
        return _window(padded, n, 1, n - 1) + raised_bid + future_term
    raise ValueError(f"unknown collusion case {case}")
