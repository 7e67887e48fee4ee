"""Client-side vault: blockwise encryption of files, an optional outer
provider transform, manifest persistence, and the put/get flows.

Plaintext bytes never leave this module; the storage side only ever sees the
sealed blob. Manifests live with the client, keyed by the content digest of
the uploaded blob so tampering is detectable on retrieval.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable

from .ahee import KeySet, decrypt, deserialize_ciphertexts, encrypt, serialize_ciphertexts
from .codec import BlockStream, block_capacity, decode, encode
from .errors import (
    EncodingError,
    IntegrityError,
    KeyMismatchError,
    LayerMismatchError,
    MissingManifestError,
)


@dataclass(frozen=True)
class OuterLayer:
    """A reversible byte transform applied after encryption, before upload."""

    id: str
    transform: Callable[[bytes], bytes]
    inverse: Callable[[bytes], bytes]


def identity_layer() -> OuterLayer:
    return OuterLayer("identity", lambda data: data, lambda data: data)


def xor_keystream_layer(secret: bytes) -> OuterLayer:
    """Keyed XOR stream built from chained SHA-256 blocks.

    Demonstration plumbing for the double-encryption shape only; this is NOT
    a secure cipher and the vault's confidentiality never relies on it.
    """

    def _stream(data: bytes) -> bytes:
        out = bytearray(data)
        for offset in range(0, len(data), 32):
            pad = hashlib.sha256(secret + (offset // 32).to_bytes(8, "big")).digest()
            for i, byte in enumerate(pad[: len(data) - offset]):
                out[offset + i] ^= byte
        return bytes(out)

    return OuterLayer("xor-keystream", _stream, _stream)


@dataclass(frozen=True)
class Manifest:
    """Client-held metadata needed to retrieve and decrypt one stored object."""

    object_id: str
    byte_len: int
    block_bytes: int
    fingerprint: str
    outer_layer: str
    created_at: str
    label: str

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "Manifest":
        try:
            raw = json.loads(text)
            return cls(
                object_id=str(raw["object_id"]),
                byte_len=int(raw["byte_len"]),
                block_bytes=int(raw["block_bytes"]),
                fingerprint=str(raw["fingerprint"]),
                outer_layer=str(raw["outer_layer"]),
                created_at=str(raw["created_at"]),
                label=str(raw["label"]),
            )
        except (ValueError, TypeError, KeyError) as exc:
            raise EncodingError(f"corrupt manifest: {exc}") from exc


class ManifestStore:
    """One JSON document per object under a local directory; writes are atomic."""

    def __init__(self, root):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def _path(self, object_id: str) -> Path:
        return self.root / f"{object_id}.json"

    def save(self, manifest: Manifest):
        payload = manifest.to_json().encode("utf-8")
        fd, tmp = tempfile.mkstemp(dir=self.root, suffix=".tmp")
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(payload)
            os.replace(tmp, self._path(manifest.object_id))
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise

    def load(self, object_id: str) -> Manifest:
        path = self._path(object_id)
        if not path.exists():
            raise MissingManifestError(f"no manifest for object {object_id}")
        return Manifest.from_json(path.read_text("utf-8"))

    def list(self) -> list[Manifest]:
        entries = []
        for path in self.root.glob("*.json"):
            entries.append(Manifest.from_json(path.read_text("utf-8")))
        entries.sort(key=lambda m: (m.created_at, m.object_id))
        return entries


def _utcnow() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="microseconds")


def vault_put(data, key: KeySet, layer: OuterLayer, store, label, rng, manifests=None):
    """Encrypt, seal, upload. Returns (and optionally persists) the manifest.

    `store` is anything with upload(blob) -> object_id and download(object_id)
    -> bytes, e.g. client.StoreClient.
    """
    stream = encode(data, key.p)
    cts = [encrypt(block, key, rng) for block in stream.blocks]
    blob = serialize_ciphertexts(cts, key)
    sealed = layer.transform(blob)
    object_id = store.upload(sealed)
    local_digest = hashlib.sha256(sealed).hexdigest()
    if object_id != local_digest:
        raise IntegrityError(
            f"server named the blob {object_id} but its digest is {local_digest}"
        )
    manifest = Manifest(
        object_id=object_id,
        byte_len=stream.byte_len,
        block_bytes=stream.block_bytes,
        fingerprint=key.fingerprint.hex(),
        outer_layer=layer.id,
        created_at=_utcnow(),
        label=label,
    )
    if manifests is not None:
        manifests.save(manifest)
    return manifest


def vault_get(manifest: Manifest, key: KeySet, layer: OuterLayer, store) -> bytes:
    """Download, verify, unseal, decrypt. Returns exactly the bytes that were put."""
    if manifest.fingerprint != key.fingerprint.hex():
        raise KeyMismatchError("manifest was written under a different key")
    if manifest.outer_layer != layer.id:
        raise LayerMismatchError(
            f"manifest expects layer {manifest.outer_layer!r}, got {layer.id!r}"
        )
    sealed = store.download(manifest.object_id)
    if hashlib.sha256(sealed).hexdigest() != manifest.object_id:
        raise IntegrityError("downloaded blob does not match its content id")
    blob = layer.inverse(sealed)
    fp, cts = deserialize_ciphertexts(blob)
    if fp != key.fingerprint:
        raise KeyMismatchError("blob fingerprint does not match the key")
    if manifest.block_bytes != block_capacity(key.p):
        raise IntegrityError("manifest block width inconsistent with the key")
    expected = (manifest.byte_len + manifest.block_bytes - 1) // manifest.block_bytes
    if len(cts) != expected:
        raise IntegrityError(
            f"blob holds {len(cts)} pairs but manifest implies {expected}"
        )
    blocks = tuple(decrypt(ct, key) for ct in cts)
    return decode(BlockStream(blocks, manifest.byte_len, manifest.block_bytes))
