"""The two-layer secret-key cipher: a message is first blinded with a random
multiple of p modulo N = p*q, then wrapped in an ElGamal-style pair mod p.

Ciphertexts multiply componentwise; pairs sharing an ephemeral exponent also
add in the second component. Encryption needs the whole key set, so nothing
here is public-key: the key file stays with the client and an evaluator is
handed at most the modulus p via EvalContext.
"""

from __future__ import annotations

import base64
import binascii
import hashlib
from dataclasses import dataclass

from .errors import (
    EncodingError,
    EphemeralMismatchError,
    IntegrityError,
    KeyMismatchError,
    MalformedCiphertextError,
    ParameterError,
    RangeError,
)
from .modmath import (
    MR_ROUNDS,
    SafePrime,
    find_primitive_root,
    gen_prime,
    gen_safe_prime,
    is_probable_prime,
    mod_inv,
    mod_pow,
)

DEFAULT_BITS_P = 256
DEFAULT_BITS_Q = 256

KEY_HEADER = "AHEE-KEY v1"
CTX_HEADER = "AHEE-CTX v1"
CT_MAGIC = b"AHEECT01"
FINGERPRINT_BYTES = 16


def int_to_b64u(v: int) -> str:
    """Non-negative integer as unpadded base64url of its big-endian magnitude."""
    raw = v.to_bytes((v.bit_length() + 7) // 8 or 1, "big")
    return base64.urlsafe_b64encode(raw).decode("ascii").rstrip("=")


def b64u_to_int(text: str) -> int:
    try:
        raw = base64.urlsafe_b64decode(text + "=" * (-len(text) % 4))
    except (binascii.Error, ValueError) as exc:
        raise EncodingError(f"bad base64url magnitude: {text!r}") from exc
    return int.from_bytes(raw, "big")


def compute_fingerprint(p: int, n: int, g: int, y: int) -> bytes:
    """16-byte digest binding the non-secret key material (p, N, g, y)."""
    h = hashlib.sha256(b"AHEEFP1")
    for v in (p, n, g, y):
        raw = v.to_bytes((v.bit_length() + 7) // 8 or 1, "big")
        h.update(len(raw).to_bytes(4, "big"))
        h.update(raw)
    return h.digest()[:FINGERPRINT_BYTES]


@dataclass(frozen=True)
class EvalContext:
    """The modulus a party needs to multiply ciphertexts, and nothing more."""

    p: int
    fingerprint: bytes


@dataclass(frozen=True)
class PublicPart:
    """Key material sufficient to re-randomize (but not decrypt) a ciphertext."""

    g: int
    y: int
    p: int
    fingerprint: bytes


@dataclass(frozen=True)
class KeySet:
    """The full secret material. p, q safe/plain primes; N = p*q; y = g^x mod p."""

    p: int
    q: int
    n: int
    g: int
    x: int
    y: int
    bits_p: int
    bits_q: int
    fingerprint: bytes

    def eval_context(self) -> EvalContext:
        return EvalContext(self.p, self.fingerprint)

    def public_part(self) -> PublicPart:
        return PublicPart(self.g, self.y, self.p, self.fingerprint)


def _validate_components(p: int, q: int, g: int, x: int, rounds: int = MR_ROUNDS):
    safe = SafePrime.from_value(p, rounds)
    if not is_probable_prime(q, rounds):
        raise ParameterError(f"q={q} is not prime")
    if p == q:
        raise ParameterError("p and q must differ")
    if not 1 < g < p:
        raise ParameterError("g must lie in (1, p)")
    if mod_pow(g, 2, p) == 1 or mod_pow(g, safe.sophie, p) == 1:
        raise ParameterError(f"g={g} is not a primitive root modulo {p}")
    if not 1 <= x <= p - 2:
        raise ParameterError("x must lie in [1, p-2]")


def keyset_from_components(p: int, q: int, g: int, x: int) -> KeySet:
    """Assemble and validate a KeySet from fixed (p, q, g, x); y and N derived."""
    _validate_components(p, q, g, x)
    n = p * q
    y = mod_pow(g, x, p)
    return KeySet(
        p=p,
        q=q,
        n=n,
        g=g,
        x=x,
        y=y,
        bits_p=p.bit_length(),
        bits_q=q.bit_length(),
        fingerprint=compute_fingerprint(p, n, g, y),
    )


def keygen(bits_p: int = DEFAULT_BITS_P, bits_q: int = DEFAULT_BITS_Q, rng=None) -> KeySet:
    """Fresh KeySet with a safe prime p of bits_p bits and a prime q of bits_q bits.

    Deterministic under a seeded rng. q only feeds N, so it need not be safe.
    """
    if rng is None:
        raise ParameterError("keygen requires an explicit randomness source")
    if bits_p < 4:
        raise ParameterError("bits_p must be at least 4")
    if bits_q < 2:
        raise ParameterError("bits_q must be at least 2")
    safe = gen_safe_prime(bits_p, rng)
    p = safe.value
    while True:
        q = gen_prime(bits_q, rng)
        if q != p:
            break
    g = find_primitive_root(safe)
    x = rng.randrange(1, p - 1)
    n = p * q
    y = mod_pow(g, x, p)
    return KeySet(
        p=p,
        q=q,
        n=n,
        g=g,
        x=x,
        y=y,
        bits_p=bits_p,
        bits_q=bits_q,
        fingerprint=compute_fingerprint(p, n, g, y),
    )


@dataclass(frozen=True)
class Ciphertext:
    """One encrypted block: a = g^k mod p, b = y^k * blinded(M) mod p."""

    a: int
    b: int
    fingerprint: bytes


def blind(message: int, key: KeySet, r: int) -> int:
    """Inner layer: message plus r*p, reduced mod N. Congruent to message mod p."""
    if not 0 <= message < key.p:
        raise RangeError(f"plaintext must lie in [0, {key.p - 1}]")
    if not 1 <= r <= key.q - 1:
        raise RangeError(f"blinding factor must lie in [1, {key.q - 1}]")
    return (message + r * key.p) % key.n


def encrypt_with(message: int, key: KeySet, k: int, r: int) -> Ciphertext:
    """Encrypt with explicit ephemeral k and blinding r (tests and oracles)."""
    if not 1 <= k <= key.p - 2:
        raise RangeError(f"ephemeral exponent must lie in [1, {key.p - 2}]")
    inner = blind(message, key, r)
    a = mod_pow(key.g, k, key.p)
    b = mod_pow(key.y, k, key.p) * inner % key.p
    return Ciphertext(a, b, key.fingerprint)


def encrypt(message: int, key: KeySet, rng) -> Ciphertext:
    """Encrypt one block, drawing k in [1, p-2] and r in [1, q-1] from rng."""
    k = rng.randrange(1, key.p - 1)
    r = rng.randrange(1, key.q)
    return encrypt_with(message, key, k, r)


def _check_ct(ct: Ciphertext, p: int):
    if not 1 <= ct.a <= p - 1 or not 0 <= ct.b <= p - 1:
        raise MalformedCiphertextError(
            f"ciphertext components out of range for modulus {p}"
        )


def decrypt(ct: Ciphertext, key: KeySet) -> int:
    """Recover the block: b * (a^x)^-1 mod p."""
    if ct.fingerprint != key.fingerprint:
        raise KeyMismatchError("ciphertext was produced under a different key")
    _check_ct(ct, key.p)
    shared = mod_pow(ct.a, key.x, key.p)
    return ct.b * mod_inv(shared, key.p) % key.p


def _check_pair(c1: Ciphertext, c2: Ciphertext, ctx: EvalContext):
    if c1.fingerprint != ctx.fingerprint or c2.fingerprint != ctx.fingerprint:
        raise KeyMismatchError("operand fingerprints do not match the context")
    _check_ct(c1, ctx.p)
    _check_ct(c2, ctx.p)


def multiply(c1: Ciphertext, c2: Ciphertext, ctx: EvalContext) -> Ciphertext:
    """Componentwise product; decrypts to the product of the plaintexts mod p."""
    _check_pair(c1, c2, ctx)
    p = ctx.p
    return Ciphertext(c1.a * c2.a % p, c1.b * c2.b % p, ctx.fingerprint)


def add_same_ephemeral(c1: Ciphertext, c2: Ciphertext, ctx: EvalContext) -> Ciphertext:
    """Sum of second components under one shared ephemeral exponent.

    Addition across different ephemerals has no defined meaning here and is
    rejected rather than silently computed.
    """
    _check_pair(c1, c2, ctx)
    if c1.a != c2.a:
        raise EphemeralMismatchError(
            "operands carry different ephemeral components; sums are undefined"
        )
    return Ciphertext(c1.a, (c1.b + c2.b) % ctx.p, ctx.fingerprint)


def scalar_multiply(ct: Ciphertext, scalar: int, ctx: EvalContext) -> Ciphertext:
    """Scale the second component; decrypts to scalar * M mod p."""
    if ct.fingerprint != ctx.fingerprint:
        raise KeyMismatchError("ciphertext fingerprint does not match the context")
    if scalar < 0:
        raise RangeError("scalar must be non-negative")
    _check_ct(ct, ctx.p)
    return Ciphertext(ct.a, scalar * ct.b % ctx.p, ctx.fingerprint)


def rerandomize_with(ct: Ciphertext, pub: PublicPart, k2: int) -> Ciphertext:
    """Re-randomize with an explicit extra ephemeral exponent."""
    if ct.fingerprint != pub.fingerprint:
        raise KeyMismatchError("ciphertext fingerprint does not match the key")
    if not 1 <= k2 <= pub.p - 1:
        raise RangeError(f"extra ephemeral must lie in [1, {pub.p - 1}]")
    _check_ct(ct, pub.p)
    p = pub.p
    return Ciphertext(
        ct.a * mod_pow(pub.g, k2, p) % p,
        ct.b * mod_pow(pub.y, k2, p) % p,
        pub.fingerprint,
    )


def rerandomize(ct: Ciphertext, pub: PublicPart, rng) -> Ciphertext:
    """Fresh-looking ciphertext for the same plaintext, without decrypting."""
    return rerandomize_with(ct, pub, rng.randrange(1, pub.p - 1))


# --- key file format (text, versioned) --------------------------------------

_KEY_FIELDS = ("p", "q", "N", "g", "x", "y")


def serialize_key(key: KeySet) -> bytes:
    lines = [KEY_HEADER]
    values = (key.p, key.q, key.n, key.g, key.x, key.y)
    for name, value in zip(_KEY_FIELDS, values):
        lines.append(f"{name}={int_to_b64u(value)}")
    lines.append(f"fp={key.fingerprint.hex()}")
    return ("\n".join(lines) + "\n").encode("ascii")


def deserialize_key(data: bytes) -> KeySet:
    """Parse and re-validate a key file; any invariant violation is an integrity error."""
    try:
        text = data.decode("ascii")
    except UnicodeDecodeError as exc:
        raise EncodingError("key file is not text") from exc
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != KEY_HEADER:
        raise EncodingError("missing key file header")
    if len(lines) != 2 + len(_KEY_FIELDS):
        raise EncodingError("key file truncated or has extra lines")
    values = {}
    for expected, line in zip(_KEY_FIELDS, lines[1:]):
        name, sep, payload = line.partition("=")
        if not sep or name != expected:
            raise EncodingError(f"expected field {expected!r}, found {line!r}")
        values[name] = b64u_to_int(payload)
    fp_name, sep, fp_hex = lines[-1].partition("=")
    if not sep or fp_name != "fp":
        raise EncodingError("missing fingerprint line")
    try:
        fp = bytes.fromhex(fp_hex)
    except ValueError as exc:
        raise EncodingError("fingerprint is not hex") from exc

    p, q, n, g, x, y = (values[f] for f in _KEY_FIELDS)
    if n != p * q:
        raise IntegrityError("N does not equal p*q")
    try:
        _validate_components(p, q, g, x)
    except ParameterError as exc:
        raise IntegrityError(f"key file fails validation: {exc}") from exc
    if y != mod_pow(g, x, p):
        raise IntegrityError("y does not equal g^x mod p")
    if fp != compute_fingerprint(p, n, g, y):
        raise IntegrityError("fingerprint does not match key material")
    return KeySet(
        p=p,
        q=q,
        n=n,
        g=g,
        x=x,
        y=y,
        bits_p=p.bit_length(),
        bits_q=q.bit_length(),
        fingerprint=fp,
    )


# --- evaluation-context file (the one piece handed to a compute party) -------


def serialize_eval_context(ctx: EvalContext) -> bytes:
    lines = [CTX_HEADER, f"p={int_to_b64u(ctx.p)}", f"fp={ctx.fingerprint.hex()}"]
    return ("\n".join(lines) + "\n").encode("ascii")


def deserialize_eval_context(data: bytes) -> EvalContext:
    try:
        text = data.decode("ascii")
    except UnicodeDecodeError as exc:
        raise EncodingError("context file is not text") from exc
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if len(lines) != 3 or lines[0] != CTX_HEADER:
        raise EncodingError("bad context file")
    if not lines[1].startswith("p=") or not lines[2].startswith("fp="):
        raise EncodingError("bad context file fields")
    p = b64u_to_int(lines[1][2:])
    try:
        fp = bytes.fromhex(lines[2][3:])
    except ValueError as exc:
        raise EncodingError("fingerprint is not hex") from exc
    if p < 5 or len(fp) != FINGERPRINT_BYTES:
        raise IntegrityError("context values out of range")
    return EvalContext(p, fp)


# --- ciphertext blob format (binary) -----------------------------------------
#
# magic (8) | fingerprint (16) | element width W, u32 BE | pair count, u64 BE |
# then count pairs of (a, b), each element W big-endian bytes.

_CT_HEADER_LEN = len(CT_MAGIC) + FINGERPRINT_BYTES + 4 + 8


def element_width(p: int) -> int:
    return (p.bit_length() + 7) // 8


def serialize_ciphertexts(cts, params) -> bytes:
    """Pack ciphertext pairs for any params object carrying .p and .fingerprint."""
    p = params.p
    fp = params.fingerprint
    width = element_width(p)
    out = bytearray()
    out += CT_MAGIC
    out += fp
    out += width.to_bytes(4, "big")
    out += len(cts).to_bytes(8, "big")
    for ct in cts:
        if ct.fingerprint != fp:
            raise KeyMismatchError("ciphertext fingerprint does not match params")
        _check_ct(ct, p)
        out += ct.a.to_bytes(width, "big")
        out += ct.b.to_bytes(width, "big")
    return bytes(out)


def deserialize_ciphertexts(blob: bytes) -> tuple[bytes, list[Ciphertext]]:
    """Unpack a ciphertext blob; returns (fingerprint, pairs)."""
    if len(blob) < _CT_HEADER_LEN:
        raise EncodingError("ciphertext blob truncated")
    if blob[: len(CT_MAGIC)] != CT_MAGIC:
        raise EncodingError("bad ciphertext blob magic")
    off = len(CT_MAGIC)
    fp = blob[off : off + FINGERPRINT_BYTES]
    off += FINGERPRINT_BYTES
    width = int.from_bytes(blob[off : off + 4], "big")
    off += 4
    count = int.from_bytes(blob[off : off + 8], "big")
    off += 8
    if width == 0 and count > 0:
        raise EncodingError("zero element width with nonzero pair count")
    if len(blob) != _CT_HEADER_LEN + count * 2 * width:
        raise EncodingError("declared pair count inconsistent with blob length")
    cts = []
    for _ in range(count):
        a = int.from_bytes(blob[off : off + width], "big")
        off += width
        b = int.from_bytes(blob[off : off + width], "big")
        off += width
        cts.append(Ciphertext(a, b, fp))
    return fp, cts
