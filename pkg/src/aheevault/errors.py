"""Exception types shared by the cipher core, the vault client, and the storage service."""


class AheeError(Exception):
    """Base class for every error raised by this package."""


class ParameterError(AheeError):
    """A parameter is outside the supported range (bit lengths, moduli, round counts)."""


class NonInvertibleError(AheeError):
    """Modular inverse requested for a value not coprime to the modulus."""


class RangeError(AheeError):
    """Plaintext or randomness value outside its required interval."""


class KeyMismatchError(AheeError):
    """Ciphertext or context fingerprint does not match the key in use."""


class MalformedCiphertextError(AheeError):
    """Ciphertext components violate their structural requirements."""


class EphemeralMismatchError(AheeError):
    """Same-ephemeral addition attempted on ciphertexts with different first components."""


class EncodingError(AheeError):
    """Serialized key/ciphertext/manifest data cannot be parsed."""


class IntegrityError(AheeError):
    """Decoded values violate invariants: tampering or corruption detected."""


class CapacityError(AheeError):
    """Modulus too small to carry even one byte per block."""


class CorruptionError(AheeError):
    """Block stream inconsistent with its declared framing."""


class MissingManifestError(AheeError):
    """No manifest stored under the requested object id."""


class LayerMismatchError(AheeError):
    """Manifest was written under a different outer layer than the one supplied."""


class StoreError(AheeError):
    """Base class for storage-service failures."""


class AuthError(StoreError):
    """Missing, invalid, or expired credentials."""


class OwnershipError(StoreError):
    """Object exists but belongs to another account."""


class NotFoundError(StoreError):
    """No such object."""


class ConflictError(StoreError):
    """Resource already exists (duplicate username)."""


class PolicyError(StoreError):
    """Request rejected by an account policy (empty username, weak password)."""


class ShapeError(StoreError):
    """Compute operands disagree in pair count, fingerprint, or structure."""


class StoreUnavailableError(StoreError):
    """The storage service cannot be reached."""
