"""Command-line front door: key management, offline file encryption, the
remote vault flows, and the brute-force verifier.

Exit codes: 0 success, 2 usage, 3 crypto/integrity error, 4 network/auth.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import random
import sys
from datetime import datetime, timezone
from pathlib import Path

from . import ahee, oracle
from .codec import encode
from .client import StoreClient
from .errors import AheeError, IntegrityError, KeyMismatchError, ParameterError, StoreError
from .vault import (
    Manifest,
    ManifestStore,
    OuterLayer,
    identity_layer,
    vault_get,
    vault_put,
    xor_keystream_layer,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_CRYPTO = 3
EXIT_NETWORK = 4


def _make_rng(seed_hex):
    if seed_hex is None:
        return random.SystemRandom()
    try:
        return random.Random(int(seed_hex, 16))
    except ValueError:
        raise ParameterError(f"seed must be hex, got {seed_hex!r}") from None


def _load_key(path) -> ahee.KeySet:
    return ahee.deserialize_key(Path(path).read_bytes())


def _make_layer(spec: str) -> OuterLayer:
    if spec == "identity":
        return identity_layer()
    kind, _, keyhex = spec.partition(":")
    if kind == "xor" and keyhex:
        try:
            return xor_keystream_layer(bytes.fromhex(keyhex))
        except ValueError:
            raise ParameterError("xor layer key must be hex") from None
    raise ParameterError(f"unknown layer {spec!r} (use identity or xor:HEX)")


def _vault_dir(args) -> Path:
    if args.vault_dir:
        return Path(args.vault_dir)
    return Path(os.environ.get("AHEE_VAULT_DIR", os.path.expanduser("~/.aheevault")))


def _client(args) -> StoreClient:
    client = StoreClient(args.server)
    client.login(args.user, args.password)
    return client


def _print_first_pair(cts):
    # Mirrors the two-field decrypt screens: the leading pair doubles as the
    # user-visible "keys" of the encrypted object.
    if cts:
        print(f"key 1 (a): {cts[0].a}")
        print(f"key 2 (b): {cts[0].b}")


# -- subcommands ---------------------------------------------------------------


def cmd_keygen(args) -> int:
    rng = _make_rng(args.seed)
    key = ahee.keygen(args.bits_p, args.bits_q, rng)
    out = Path(args.out)
    out.write_bytes(ahee.serialize_key(key))
    try:
        out.chmod(0o600)
    except OSError:
        pass
    if args.ctx_out:
        Path(args.ctx_out).write_bytes(ahee.serialize_eval_context(key.eval_context()))
    print(f"wrote {out} ({key.bits_p}-bit p, {key.bits_q}-bit q, fp {key.fingerprint.hex()})")
    return EXIT_OK


def cmd_encrypt(args) -> int:
    key = _load_key(args.key)
    data = Path(args.infile).read_bytes()
    rng = _make_rng(args.seed)
    out_path = Path(args.out or args.infile + ".ct")
    stream = encode(data, key.p)
    cts = [ahee.encrypt(block, key, rng) for block in stream.blocks]
    blob = ahee.serialize_ciphertexts(cts, key)
    out_path.write_bytes(blob)
    manifest = Manifest(
        object_id=hashlib.sha256(blob).hexdigest(),
        byte_len=stream.byte_len,
        block_bytes=stream.block_bytes,
        fingerprint=key.fingerprint.hex(),
        outer_layer="identity",
        created_at=datetime.now(timezone.utc).isoformat(timespec="microseconds"),
        label=str(args.infile),
    )
    Path(str(out_path) + ".json").write_text(manifest.to_json(), "utf-8")
    print(f"wrote {out_path} ({len(cts)} blocks)")
    _print_first_pair(cts)
    return EXIT_OK


def cmd_decrypt(args) -> int:
    key = _load_key(args.key)
    blob = Path(args.infile).read_bytes()
    manifest_path = Path(args.manifest or args.infile + ".json")
    manifest = Manifest.from_json(manifest_path.read_text("utf-8"))

    class _OneBlob:
        def download(self, object_id):
            return blob

    data = vault_get(manifest, key, identity_layer(), _OneBlob())
    Path(args.out).write_bytes(data)
    print(f"wrote {args.out} ({len(data)} bytes)")
    return EXIT_OK


def cmd_put(args) -> int:
    key = _load_key(args.key)
    layer = _make_layer(args.layer)
    data = Path(args.infile).read_bytes()
    client = _client(args)
    manifests = ManifestStore(_vault_dir(args) / "manifests")
    manifest = vault_put(
        data,
        key,
        layer,
        client,
        args.label or Path(args.infile).name,
        random.SystemRandom(),
        manifests=manifests,
    )
    print(manifest.object_id)
    return EXIT_OK


def cmd_get(args) -> int:
    key = _load_key(args.key)
    client = _client(args)
    if args.blocks_out:
        # Raw object fetch (e.g. a server-side product): decrypt block values
        # without byte decoding, since derived blocks are not byte streams.
        sealed = client.download(args.id)
        if hashlib.sha256(sealed).hexdigest() != args.id:
            raise IntegrityError("downloaded blob does not match its content id")
        fp, cts = ahee.deserialize_ciphertexts(sealed)
        if fp != key.fingerprint:
            raise KeyMismatchError("blob fingerprint does not match the key")
        blocks = [ahee.decrypt(ct, key) for ct in cts]
        Path(args.blocks_out).write_text(json.dumps(blocks) + "\n", "utf-8")
        print(f"wrote {args.blocks_out} ({len(blocks)} blocks)")
        return EXIT_OK
    layer = _make_layer(args.layer)
    manifests = ManifestStore(_vault_dir(args) / "manifests")
    manifest = manifests.load(args.id)
    data = vault_get(manifest, key, layer, client)
    Path(args.out).write_bytes(data)
    print(f"wrote {args.out} ({len(data)} bytes)")
    return EXIT_OK


def cmd_list(args) -> int:
    manifests = ManifestStore(_vault_dir(args) / "manifests")
    for m in manifests.list():
        print(f"{m.created_at}  {m.object_id[:16]}  {m.byte_len:>10}  {m.label}")
    return EXIT_OK


def cmd_hmul(args) -> int:
    raw = Path(args.ctx).read_bytes()
    head = raw.split(b"\n", 1)[0].strip().decode("ascii", "replace")
    if head == ahee.KEY_HEADER:
        ctx = ahee.deserialize_key(raw).eval_context()
    else:
        ctx = ahee.deserialize_eval_context(raw)
    client = _client(args)
    object_id = client.compute_mul(args.a, args.b, ctx)
    print(object_id)
    return EXIT_OK


def cmd_oracle(args) -> int:
    report = oracle.exhaustive_check(args.p, args.q, args.g, args.x)
    if args.json:
        print(json.dumps(report.to_dict(), indent=2))
    else:
        p, q, g, x = report.params
        print(f"params p={p} q={q} g={g} x={x}")
        print(f"checks run: {report.checks_run}")
        for family, count in sorted(report.family_counts.items()):
            print(f"  {family}: {count}")
        print(f"failures: {len(report.failures)}")
        for failure in report.failures[:20]:
            print(f"  {failure}")
    return EXIT_OK if report.ok else EXIT_CRYPTO


# -- parser ----------------------------------------------------------------------


def _add_server_args(sub):
    sub.add_argument("--server", required=True, help="storage service base URL")
    sub.add_argument("--user", required=True)
    sub.add_argument("--pass", dest="password", required=True)


def _add_vault_dir_arg(sub):
    sub.add_argument("--vault-dir", default=None, help="manifest directory (default $AHEE_VAULT_DIR or ~/.aheevault)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vault",
        description="Client-side encrypted blob vault with multiply-capable storage.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    s = sub.add_parser("keygen", help="generate a key file")
    s.add_argument("--bits-p", type=int, default=ahee.DEFAULT_BITS_P)
    s.add_argument("--bits-q", type=int, default=ahee.DEFAULT_BITS_Q)
    s.add_argument("--out", required=True)
    s.add_argument("--seed", default=None, help="hex seed for reproducible keys")
    s.add_argument("--ctx-out", default=None, help="also write the evaluation context file")
    s.set_defaults(func=cmd_keygen)

    s = sub.add_parser("encrypt", help="encrypt a file to a ciphertext blob")
    s.add_argument("--key", required=True)
    s.add_argument("--in", dest="infile", required=True)
    s.add_argument("--out", default=None)
    s.add_argument("--seed", default=None)
    s.set_defaults(func=cmd_encrypt)

    s = sub.add_parser("decrypt", help="decrypt a ciphertext blob back to bytes")
    s.add_argument("--key", required=True)
    s.add_argument("--in", dest="infile", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--manifest", default=None, help="manifest path (default INFILE.json)")
    s.set_defaults(func=cmd_decrypt)

    s = sub.add_parser("put", help="encrypt and upload a file")
    _add_server_args(s)
    s.add_argument("--key", required=True)
    s.add_argument("--in", dest="infile", required=True)
    s.add_argument("--label", default=None)
    s.add_argument("--layer", default="identity")
    _add_vault_dir_arg(s)
    s.set_defaults(func=cmd_put)

    s = sub.add_parser("get", help="download and decrypt an object")
    _add_server_args(s)
    s.add_argument("--key", required=True)
    s.add_argument("--id", required=True)
    s.add_argument("--out", default=None)
    s.add_argument("--layer", default="identity")
    s.add_argument("--blocks-out", default=None, help="write decrypted block values as JSON (for compute results)")
    _add_vault_dir_arg(s)
    s.set_defaults(func=cmd_get)

    s = sub.add_parser("list", help="list local manifests")
    _add_vault_dir_arg(s)
    s.set_defaults(func=cmd_list)

    s = sub.add_parser("hmul", help="ask the server to multiply two stored objects")
    _add_server_args(s)
    s.add_argument("--ctx", required=True, help="evaluation context file (or key file)")
    s.add_argument("--a", required=True, help="first object id")
    s.add_argument("--b", required=True, help="second object id")
    s.set_defaults(func=cmd_hmul)

    s = sub.add_parser("oracle", help="run the exhaustive brute-force verifier")
    s.add_argument("--p", type=int, required=True)
    s.add_argument("--q", type=int, required=True)
    s.add_argument("--g", type=int, required=True)
    s.add_argument("--x", type=int, required=True)
    s.add_argument("--json", action="store_true")
    s.set_defaults(func=cmd_oracle)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "command", None) == "get" and not (args.out or args.blocks_out):
        parser.error("get requires --out (or --blocks-out)")
    try:
        return args.func(args)
    except ParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except StoreError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NETWORK
    except AheeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CRYPTO
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    raise SystemExit(main())
