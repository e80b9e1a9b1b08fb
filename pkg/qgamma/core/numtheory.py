"""
Exact integer utilities: d_N = lcm(1..N), Vacca weights, floor logarithms.
"""

from functools import lru_cache, reduce
from math import isqrt, lcm, prod
from typing import Iterator, List

from qgamma.schemas.schema_numtheory import LcmTable


class PrimeSieve:
    """Sieve of Eratosthenes that grows on demand; shared read-only after growth."""

    _limit = 1
    _primes: List[int] = []

    @classmethod
    def _grow(cls, limit: int) -> None:
        limit = max(limit, 2 * cls._limit, 64)
        flags = bytearray([1]) * (limit + 1)
        flags[0:2] = b"\x00\x00"
        for p in range(2, isqrt(limit) + 1):
            if flags[p]:
                flags[p * p :: p] = bytearray(len(range(p * p, limit + 1, p)))
        cls._primes = [i for i, is_prime in enumerate(flags) if is_prime]
        cls._limit = limit

    @classmethod
    def primes_upto(cls, n: int) -> Iterator[int]:
        if n > cls._limit:
            cls._grow(n)
        for p in cls._primes:
            if p > n:
                return
            yield p


def floor_log(q: int, n: int) -> int:
    """Largest e with q^e <= n, by integer comparison."""
    if q < 2 or n < 1:
        raise ValueError(f"floor_log needs q >= 2 and n >= 1, got q={q}, n={n}")
    e = 0
    power = q
    while power <= n:
        power *= q
        e += 1
    return e


@lru_cache(maxsize=4096)
def lcm_upto(N: int) -> LcmTable:
    """d_N from the prime powers p^⌊log_p N⌋, p <= N."""
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    prime_powers = [(p, floor_log(p, N)) for p in PrimeSieve.primes_upto(N)]
    value = prod(p**e for p, e in prime_powers)
    return LcmTable(N=N, value=value, prime_powers=prime_powers)


def lcm_iterative(N: int) -> int:
    """Pairwise lcm fold of 1..N; slow reference for lcm_upto."""
    return reduce(lcm, range(1, N + 1), 1)


def sigma(n: int, q: int) -> int:
    """Vacca weight: q-1 if q divides n, else -1."""
    if n < 0 or q < 2:
        raise ValueError(f"sigma needs n >= 0 and q >= 2, got n={n}, q={q}")
    return q - 1 if n % q == 0 else -1


def smallest_non_divisor(product: int, start: int) -> int:
    """Smallest integer b >= start with b not dividing `product`."""
    b = max(start, 2)
    while product % b == 0:
        b += 1
    return b
