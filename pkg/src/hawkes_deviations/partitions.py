"""Integer-partition index sets and combinatorial weights for the coefficient sums.

A multiplicity tuple (m_1, ..., m_k) encodes a partition of n = sum_j j*m_j
with m_j parts of size j.  S_k is the set of k-tuples with weight k, T_k the
set of (k-1)-tuples with weight k-1.  Enumeration is deterministic
(lexicographic in the tuple) and exact-integer throughout.
"""

from __future__ import annotations

from functools import lru_cache
from math import factorial

MAX_K = 12  # exact 64-bit arithmetic guaranteed up to here; assemblies use k <= 8


def _multiplicity_tuples(length: int, weight: int) -> list[tuple[int, ...]]:
    """All tuples (m_1..m_length) of nonnegative ints with sum_j j*m_j = weight."""
    out: list[tuple[int, ...]] = []
    acc = [0] * length

    def rec(j: int, rem: int) -> None:
        if j > length:
            if rem == 0:
                out.append(tuple(acc))
            return
        top = rem // j
        for m in range(top, -1, -1):  # largest m_1 first: (k,0,..) precedes (0,..,1)
            acc[j - 1] = m
            rec(j + 1, rem - j * m)
        acc[j - 1] = 0

    rec(1, weight)
    return out


@lru_cache(maxsize=None)
def enumerate_Sk(k: int) -> tuple[tuple[int, ...], ...]:
    """k-tuples (m_1..m_k) with 1*m_1 + 2*m_2 + ... + k*m_k = k.

    enumerate_Sk(0) is the singleton empty tuple (the S_0 convention used by
    the coefficient assemblies).  |S_k| equals the partition number p(k).
    """
    if k == 0:
        return ((),)
    if not 1 <= k <= MAX_K:
        raise ValueError(f"k must lie in 1..{MAX_K}, got {k}")
    return tuple(_multiplicity_tuples(k, k))


@lru_cache(maxsize=None)
def enumerate_Tk(k: int) -> tuple[tuple[int, ...], ...]:
    """(k-1)-tuples (m_1..m_{k-1}) with sum_j j*m_j = k-1; T_1 = {()}."""
    if not 1 <= k <= MAX_K:
        raise ValueError(f"k must lie in 1..{MAX_K}, got {k}")
    if k == 1:
        return ((),)
    return tuple(_multiplicity_tuples(k - 1, k - 1))


@lru_cache(maxsize=None)
def partitions_below_top(k: int) -> tuple[tuple[int, ...], ...]:
    """(k-1)-tuples (m_1..m_{k-1}) with sum_j j*m_j = k: partitions of k with no part k.

    This is the index set of the leading sum in the x-derivative recursion.
    Empty for k = 1.
    """
    if not 1 <= k <= MAX_K:
        raise ValueError(f"k must lie in 1..{MAX_K}, got {k}")
    if k == 1:
        return ()
    return tuple(_multiplicity_tuples(k - 1, k))


def odd_double_factorial(n: int) -> int:
    """n!! for odd n >= 1, with the empty-product convention (-1)!! = 1."""
    if n == -1:
        return 1
    if n < -1 or n % 2 == 0:
        raise ValueError(f"defined for odd n >= -1, got {n}")
    out = 1
    while n > 1:
        out *= n
        n -= 2
    return out


def tuple_weight(m: tuple[int, ...]) -> int:
    """sum_j j*m_j, the partition size the tuple encodes."""
    return sum(j * mj for j, mj in enumerate(m, start=1))


def faa_weight(m: tuple[int, ...]) -> int:
    """k! / (m_1! 1!^m_1 * ... * m_k! k!^m_k) with k = sum_j j*m_j, exact.

    The number of set partitions of {1..k} with m_j blocks of size j; the
    weight attached to each tuple in every Faa di Bruno style sum here.
    """
    k = tuple_weight(m)
    num = factorial(k)
    den = 1
    for j, mj in enumerate(m, start=1):
        den *= factorial(mj) * factorial(j) ** mj
    q, rem = divmod(num, den)
    assert rem == 0
    return q


def partition_count(k: int) -> int:
    """Brute-force partition counter p(k), used as the enumeration oracle."""

    @lru_cache(maxsize=None)
    def p(n: int, largest: int) -> int:
        if n == 0:
            return 1
        return sum(p(n - part, part) for part in range(1, min(n, largest) + 1))

    return p(k, k)
