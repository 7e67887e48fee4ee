"""Brute-force verification of the scheme equations at toy scale.

Every check evaluates the encryption/decryption formulas by direct arithmetic
on Python ints, sharing no code with the cipher module, so the two can only
agree by both being right. Enumeration is exhaustive over all message,
ephemeral, and blinding values, which caps the usable modulus.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ParameterError

MAX_P = 61
_MAX_STORED_FAILURES = 1000


def _is_prime_small(n: int) -> bool:
    if n < 2:
        return False
    d = 2
    while d * d <= n:
        if n % d == 0:
            return False
        d += 1
    return True


def smallest_primitive_root(p: int) -> int:
    """Smallest g whose powers reach every nonzero residue mod p (orbit scan)."""
    for g in range(2, p):
        v = 1
        order = 0
        for i in range(1, p):
            v = v * g % p
            if v == 1:
                order = i
                break
        if order == p - 1:
            return g
    raise ParameterError(f"no primitive root modulo {p}")


def _decrypt(b: int, a: int, x: int, p: int) -> int:
    # Reference decryption: b * (a^x)^-1 mod p, inverse by Fermat. Module-level
    # so a test harness can swap in a deliberately corrupted formula.
    return b * pow(pow(a, x, p), p - 2, p) % p


@dataclass
class OracleReport:
    """Outcome of one exhaustive run; failures is empty iff every case held."""

    params: tuple[int, int, int, int]
    checks_run: int = 0
    family_counts: dict[str, int] = field(default_factory=dict)
    failures: list[tuple] = field(default_factory=list)
    failures_truncated: bool = False

    @property
    def ok(self) -> bool:
        return not self.failures

    def to_dict(self) -> dict:
        p, q, g, x = self.params
        return {
            "params": {"p": p, "q": q, "g": g, "x": x},
            "checks_run": self.checks_run,
            "family_counts": dict(self.family_counts),
            "failures": [list(f) for f in self.failures],
            "failures_truncated": self.failures_truncated,
            "ok": self.ok,
        }

    def _record(self, family, inputs, expected, actual):
        if len(self.failures) < _MAX_STORED_FAILURES:
            self.failures.append((family, inputs, expected, actual))
        else:
            self.failures_truncated = True


def exhaustive_check(p: int, q: int, g: int, x: int) -> OracleReport:
    """Enumerate every (M, k, r) cell and verify the scheme equations directly.

    Families checked: decrypt-of-encrypt round trip, inner-blinding congruence,
    ciphertext products (at fixed sample ephemerals), same-ephemeral sums, and
    re-randomization, each against the plaintext arithmetic it should mirror.
    """
    if p > MAX_P:
        raise ParameterError(f"p={p} exceeds the exhaustive budget (max {MAX_P})")
    if not _is_prime_small(p) or not _is_prime_small(q):
        raise ParameterError("p and q must be prime")
    if smallest_primitive_root(p) != g:
        # Any primitive root is mathematically fine; requiring the smallest
        # keeps runs canonical. Verify g generates at all before rejecting.
        v, seen = 1, set()
        for _ in range(p - 1):
            v = v * g % p
            seen.add(v)
        if len(seen) != p - 1:
            raise ParameterError(f"g={g} is not a primitive root modulo {p}")
    if not 1 <= x <= p - 2:
        raise ParameterError("x must lie in [1, p-2]")

    report = OracleReport(params=(p, q, g, x))
    n = p * q
    y = pow(g, x, p)
    ks = range(1, p - 1)
    rs = range(1, q)
    ms = range(p)

    a_of = {k: pow(g, k, p) for k in ks}
    u_of = {k: pow(y, k, p) for k in ks}  # y^k, which also equals a_k^x
    inv_u = {k: pow(u_of[k], p - 2, p) for k in ks}

    # Round trip and inner congruence, one cell at a time through _decrypt.
    count_rt = 0
    count_e1 = 0
    for m in ms:
        for k in ks:
            a = a_of[k]
            u = u_of[k]
            for r in rs:
                e1 = (m + r * p) % n
                count_e1 += 1
                if e1 % p != m:
                    report._record("inner_congruence", (m, k, r), m, e1 % p)
                b = u * e1 % p
                count_rt += 1
                got = _decrypt(b, a, x, p)
                if got != m:
                    report._record("round_trip", (m, k, r), m, got)
    report.family_counts["inner_congruence"] = count_e1
    report.family_counts["round_trip"] = count_rt

    # Ciphertext component tables per ephemeral, reused by the pair families.
    bucket = {}
    for k in ks:
        u = u_of[k]
        pairs = []
        for m in ms:
            for r in rs:
                pairs.append((m, u * ((m + r * p) % n) % p))
        bucket[k] = pairs

    # Products at fixed sample ephemerals: every operand pair, both k choices.
    sample_ks = [1, 2] if p - 2 >= 2 else [1]
    count_mul = 0
    for k1 in sample_ks:
        for k2 in sample_ks:
            a12 = a_of[k1] * a_of[k2] % p
            inv12 = pow(pow(a12, x, p), p - 2, p)
            cells1 = bucket[k1]
            cells2 = bucket[k2]
            for m1, b1 in cells1:
                for m2, b2 in cells2:
                    count_mul += 1
                    got = (b1 * b2 % p) * inv12 % p
                    if got != m1 * m2 % p:
                        report._record(
                            "product", (m1, k1, m2, k2), m1 * m2 % p, got
                        )
    report.family_counts["product"] = count_mul

    # Same-ephemeral sums: all unordered operand pairs for every k.
    count_add = 0
    for k in ks:
        inv = inv_u[k]
        cells = bucket[k]
        width = len(cells)
        for i in range(width):
            m1, b1 = cells[i]
            for j in range(i, width):
                m2, b2 = cells[j]
                count_add += 1
                got = ((b1 + b2) % p) * inv % p
                if got != (m1 + m2) % p:
                    report._record("sum_same_k", (m1, m2, k), (m1 + m2) % p, got)
    report.family_counts["sum_same_k"] = count_add

    # Re-randomization: every ciphertext against every k'.
    count_rr = 0
    for k in ks:
        a = a_of[k]
        cells = bucket[k]
        for k2 in ks:
            w = u_of[k2]
            a2 = a * a_of[k2] % p
            inv2 = pow(pow(a2, x, p), p - 2, p)
            for m, b in cells:
                count_rr += 1
                got = (b * w % p) * inv2 % p
                if got != m:
                    report._record("rerandomize", (m, k, k2), m, got)
    report.family_counts["rerandomize"] = count_rr

    report.checks_run = count_e1 + count_rt + count_mul + count_add + count_rr
    return report
