"""Arbitrary-precision modular arithmetic, primality testing, and safe-prime generation.

Everything here is a pure function of its inputs; randomness is always an
injected ``random.Random``-like source so key generation is reproducible.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .errors import NonInvertibleError, ParameterError

MR_ROUNDS = 40

# Primes below this bound are fully resolved by trial division.
_SIEVE_LIMIT = 4096


def _sieve(limit):
    flags = bytearray([1]) * limit
    flags[0] = flags[1] = 0
    for i in range(2, int(limit ** 0.5) + 1):
        if flags[i]:
            flags[i * i :: i] = bytearray(len(range(i * i, limit, i)))
    return [i for i in range(limit) if flags[i]]


_SMALL_PRIMES = _sieve(_SIEVE_LIMIT)


def _check_nonneg(*values):
    for v in values:
        if v < 0:
            raise ParameterError("negative values are not representable here")


def mod_pow(base: int, exp: int, m: int) -> int:
    """base**exp mod m by square-and-multiply (CPython's three-argument pow)."""
    _check_nonneg(base, exp, m)
    if m == 0:
        raise ParameterError("modulus is zero")
    return pow(base, exp, m)


def mod_inv(v: int, m: int) -> int:
    """Multiplicative inverse of v modulo m, via the extended Euclidean algorithm."""
    _check_nonneg(v, m)
    if m < 2:
        raise ParameterError("modulus must be at least 2")
    try:
        return pow(v, -1, m)
    except ValueError:
        raise NonInvertibleError(f"{v} is not invertible modulo {m}") from None


def _miller_rabin(n: int, rounds: int) -> bool:
    # Witnesses are drawn from a generator seeded by n itself, so the result
    # is a deterministic function of (n, rounds).
    d = n - 1
    s = 0
    while d % 2 == 0:
        d //= 2
        s += 1
    witness_rng = random.Random(n)
    for _ in range(rounds):
        a = witness_rng.randrange(2, n - 1)
        x = pow(a, d, n)
        if x == 1 or x == n - 1:
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def is_probable_prime(n: int, rounds: int = MR_ROUNDS) -> bool:
    """Miller-Rabin primality test; deterministic for small n via trial division.

    False-positive probability is at most 4**-rounds for larger n.
    """
    if rounds < 1:
        raise ParameterError("rounds must be at least 1")
    _check_nonneg(n)
    if n < 2:
        return False
    for p in _SMALL_PRIMES:
        if p * p > n:
            return True
        if n % p == 0:
            return n == p
    return _miller_rabin(n, rounds)


@dataclass(frozen=True)
class SafePrime:
    """A prime p = 2*sophie + 1 whose cofactor sophie is itself prime."""

    value: int
    sophie: int

    @classmethod
    def from_value(cls, p: int, rounds: int = MR_ROUNDS) -> "SafePrime":
        if p < 5 or p % 2 == 0:
            raise ParameterError(f"{p} cannot be a safe prime")
        sophie = (p - 1) // 2
        if not is_probable_prime(p, rounds) or not is_probable_prime(sophie, rounds):
            raise ParameterError(f"{p} is not a safe prime")
        return cls(p, sophie)


def _mark_multiples(flags, start, step):
    if start < len(flags):
        flags[start::step] = bytearray([1]) * len(range(start, len(flags), step))


_WINDOW = 1 << 13


def gen_safe_prime(bits: int, rng) -> SafePrime:
    """Random safe prime of exactly `bits` bits, deterministic under a seeded rng.

    Large sizes use a windowed sieve over candidates s, s+2, ... from a random
    start, eliminating offsets where s or 2s+1 has a small factor before any
    Miller-Rabin work.
    """
    if bits < 4:
        raise ParameterError("safe primes below 4 bits are not supported")
    lo = 1 << (bits - 2)
    hi = 1 << (bits - 1)
    if bits < 20:
        # Narrow ranges: plain rejection sampling is fast and stays in range.
        while True:
            sophie = rng.randrange(lo, hi)
            p = 2 * sophie + 1
            if is_probable_prime(sophie) and is_probable_prime(p):
                return SafePrime(p, sophie)
    while True:
        s0 = rng.randrange(lo, hi) | 1
        window = min(_WINDOW, (hi - s0) // 2)
        if window < 64:
            continue
        flags = bytearray(window)
        for p in _SMALL_PRIMES[1:]:
            inv2 = (p + 1) // 2
            # offsets i with (s0 + 2i) % p == 0
            _mark_multiples(flags, (-s0 * inv2) % p, p)
            # offsets i with (2*(s0 + 2i) + 1) % p == 0
            _mark_multiples(flags, (-(2 * s0 + 1) * inv2 * inv2) % p, p)
        for i in range(window):
            if flags[i]:
                continue
            sophie = s0 + 2 * i
            if _miller_rabin(sophie, MR_ROUNDS) and _miller_rabin(2 * sophie + 1, MR_ROUNDS):
                return SafePrime(2 * sophie + 1, sophie)


def find_primitive_root(p: SafePrime) -> int:
    """Smallest generator of the multiplicative group modulo a safe prime.

    Group order 2*sophie has prime factors {2, sophie} only, so g generates
    exactly when g^2 and g^sophie are both != 1.
    """
    modulus, sophie = p.value, p.sophie
    if modulus < 5:
        raise ParameterError("modulus too small")
    for g in range(2, modulus):
        if pow(g, 2, modulus) != 1 and pow(g, sophie, modulus) != 1:
            return g
    raise ParameterError(f"{modulus} has no primitive root; not a safe prime?")


def gen_prime(bits: int, rng) -> int:
    """Random probable prime of exactly `bits` bits (rejection sampling)."""
    if bits < 2:
        raise ParameterError("primes below 2 bits do not exist")
    if bits == 2:
        return rng.randrange(2, 4)
    while True:
        candidate = rng.randrange(1 << (bits - 1), 1 << bits) | 1
        if is_probable_prime(candidate):
            return candidate
