"""Account-scoped blob storage service with a ciphertext-multiply endpoint.

Blobs are content-addressed files (create-only, so concurrent duplicate
writes are benign); accounts and ownership live in a single JSON journal
rewritten atomically under a lock. Sessions are in-memory: restarting the
service keeps every committed account and object but invalidates tokens.

The service never sees a decryption key. Multiplication happens on serialized
ciphertext pairs using only the modulus p that the client grants per request.
"""

from __future__ import annotations

import hashlib
import hmac
import json
import logging
import os
import re
import secrets
import tempfile
import threading
import time
from datetime import datetime, timezone
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

from . import protocol
from .ahee import (
    EvalContext,
    b64u_to_int,
    deserialize_ciphertexts,
    multiply,
    serialize_ciphertexts,
)
from .errors import (
    AuthError,
    ConflictError,
    EncodingError,
    KeyMismatchError,
    MalformedCiphertextError,
    NotFoundError,
    OwnershipError,
    PolicyError,
    ShapeError,
)

log = logging.getLogger("aheevault.store")

SCRYPT_N = 2 ** 14
SCRYPT_R = 8
SCRYPT_P = 1
SALT_BYTES = 16
TOKEN_BYTES = 24
MIN_PASSWORD_LEN = 8
MAX_BODY = 64 * 1024 * 1024

DEFAULT_LISTEN = "127.0.0.1:8450"
DEFAULT_DATA_DIR = "./ahee-store-data"
DEFAULT_TOKEN_TTL = 3600

_OBJECT_ID_RE = re.compile(r"^[0-9a-f]{64}$")


def _hash_password(password: str, salt: bytes) -> bytes:
    return hashlib.scrypt(
        password.encode("utf-8"), salt=salt, n=SCRYPT_N, r=SCRYPT_R, p=SCRYPT_P, dklen=32
    )


def _utcnow() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="microseconds")


class StoreService:
    """All storage-service state and operations, independent of HTTP plumbing."""

    def __init__(self, data_dir, token_ttl: int = DEFAULT_TOKEN_TTL):
        self.data_dir = Path(data_dir)
        self.blob_dir = self.data_dir / "blobs"
        self.blob_dir.mkdir(parents=True, exist_ok=True)
        self.journal_path = self.data_dir / "journal.json"
        self.token_ttl = token_ttl
        self._lock = threading.Lock()
        self._accounts: dict[str, dict] = {}
        self._objects: dict[str, dict[str, dict]] = {}
        self._sessions: dict[str, tuple[str, float]] = {}
        self._load_journal()

    # -- persistence ----------------------------------------------------------

    def _load_journal(self):
        if not self.journal_path.exists():
            return
        raw = json.loads(self.journal_path.read_text("utf-8"))
        self._accounts = raw.get("accounts", {})
        self._objects = raw.get("objects", {})

    def _write_journal_locked(self):
        payload = json.dumps(
            {"accounts": self._accounts, "objects": self._objects}, indent=1
        ).encode("utf-8")
        fd, tmp = tempfile.mkstemp(dir=self.data_dir, suffix=".journal.tmp")
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(payload)
                fh.flush()
                os.fsync(fh.fileno())
            os.replace(tmp, self.journal_path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise

    # -- accounts and sessions ------------------------------------------------

    def register(self, username, password) -> dict:
        if not isinstance(username, str) or not username:
            raise PolicyError("username must be a nonempty string")
        if not isinstance(password, str) or len(password) < MIN_PASSWORD_LEN:
            raise PolicyError(f"password must be at least {MIN_PASSWORD_LEN} characters")
        salt = os.urandom(SALT_BYTES)
        digest = _hash_password(password, salt)
        created = _utcnow()
        with self._lock:
            if username in self._accounts:
                raise ConflictError("username already registered")
            self._accounts[username] = {
                "salt": salt.hex(),
                "digest": digest.hex(),
                "created_at": created,
            }
            self._objects.setdefault(username, {})
            self._write_journal_locked()
        log.info("registered account %s", username)
        return {"username": username, "created_at": created}

    def login(self, username, password) -> tuple[str, int]:
        with self._lock:
            record = self._accounts.get(username)
        # Burn the hash cost either way so unknown users are indistinguishable
        # from wrong passwords.
        salt = bytes.fromhex(record["salt"]) if record else os.urandom(SALT_BYTES)
        digest = _hash_password(str(password), salt)
        ok = record is not None and hmac.compare_digest(
            digest, bytes.fromhex(record["digest"])
        )
        if not ok:
            raise AuthError("invalid credentials")
        token = secrets.token_hex(TOKEN_BYTES)
        expires_at = int(time.time()) + self.token_ttl
        with self._lock:
            self._sessions[token] = (username, expires_at)
        return token, expires_at

    def authenticate(self, token) -> str:
        with self._lock:
            session = self._sessions.get(token or "")
        if session is None:
            raise AuthError("invalid or expired token")
        username, expires_at = session
        if time.time() >= expires_at:
            with self._lock:
                self._sessions.pop(token, None)
            raise AuthError("invalid or expired token")
        return username

    # -- blobs ----------------------------------------------------------------

    def _blob_path(self, object_id: str) -> Path:
        return self.blob_dir / object_id

    def put_blob(self, username: str, blob: bytes, lineage=None) -> str:
        object_id = hashlib.sha256(blob).hexdigest()
        path = self._blob_path(object_id)
        if not path.exists():
            fd, tmp = tempfile.mkstemp(dir=self.blob_dir, suffix=".tmp")
            try:
                with os.fdopen(fd, "wb") as fh:
                    fh.write(blob)
                os.replace(tmp, path)
            except BaseException:
                if os.path.exists(tmp):
                    os.unlink(tmp)
                raise
        with self._lock:
            owned = self._objects.setdefault(username, {})
            if object_id not in owned:
                owned[object_id] = {
                    "size": len(blob),
                    "created_at": _utcnow(),
                    "lineage": lineage,
                }
                self._write_journal_locked()
        return object_id

    def get_blob(self, username: str, object_id: str) -> bytes:
        if not _OBJECT_ID_RE.match(object_id or ""):
            raise NotFoundError("no such object")
        with self._lock:
            if object_id not in self._objects.get(username, {}):
                if any(object_id in objs for objs in self._objects.values()):
                    raise OwnershipError("object belongs to another account")
                raise NotFoundError("no such object")
        return self._blob_path(object_id).read_bytes()

    # -- homomorphic compute ----------------------------------------------------

    def compute_mul(self, username: str, id1: str, id2: str, p: int, fingerprint: bytes) -> str:
        blob1 = self.get_blob(username, id1)
        blob2 = self.get_blob(username, id2)
        try:
            fp1, cts1 = deserialize_ciphertexts(blob1)
            fp2, cts2 = deserialize_ciphertexts(blob2)
        except EncodingError as exc:
            raise ShapeError(f"operand is not a ciphertext blob: {exc}") from exc
        if fp1 != fingerprint or fp2 != fingerprint:
            raise KeyMismatchError("operand fingerprints do not match the context")
        if len(cts1) != len(cts2):
            raise ShapeError(
                f"operands hold {len(cts1)} and {len(cts2)} pairs; counts must match"
            )
        if p < 5:
            raise ShapeError("modulus too small")
        ctx = EvalContext(p, fingerprint)
        try:
            product = [multiply(c1, c2, ctx) for c1, c2 in zip(cts1, cts2)]
            result = serialize_ciphertexts(product, ctx)
        except (KeyMismatchError, MalformedCiphertextError) as exc:
            raise ShapeError(f"operands malformed under the granted modulus: {exc}") from exc
        return self.put_blob(
            username, result, lineage={"op": "mul", "parents": [id1, id2]}
        )


# -- HTTP front end -------------------------------------------------------------

_STATUS_BY_ERROR = [
    (AuthError, 401),
    (OwnershipError, 403),
    (NotFoundError, 404),
    (ConflictError, 409),
    (PolicyError, 400),
    (ShapeError, 422),
    (KeyMismatchError, 422),
    (MalformedCiphertextError, 422),
    (EncodingError, 422),
]


class StoreHandler(BaseHTTPRequestHandler):
    service: StoreService  # bound by make_server
    server_version = "aheevault-store/0.1"
    protocol_version = "HTTP/1.1"

    def log_message(self, fmt, *args):
        log.debug("%s - %s", self.address_string(), fmt % args)

    # -- plumbing

    def _send_json(self, status: int, payload: dict):
        body = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", protocol.CONTENT_JSON)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _send_error_json(self, status: int, message: str):
        self._send_json(status, {"error": message})

    def _read_body(self) -> bytes:
        length = int(self.headers.get("Content-Length") or 0)
        if length > MAX_BODY:
            raise PolicyError("request body too large")
        return self.rfile.read(length)

    def _json_body(self) -> dict:
        try:
            parsed = json.loads(self._read_body().decode("utf-8"))
        except (ValueError, UnicodeDecodeError) as exc:
            raise PolicyError(f"request body is not valid JSON: {exc}") from exc
        if not isinstance(parsed, dict):
            raise PolicyError("request body must be a JSON object")
        return parsed

    def _bearer_token(self) -> str:
        header = self.headers.get("Authorization") or ""
        scheme, _, token = header.partition(" ")
        if scheme != protocol.AUTH_SCHEME or not token:
            raise AuthError("missing bearer token")
        return token.strip()

    def _dispatch(self, handler):
        try:
            handler()
        except tuple(err for err, _ in _STATUS_BY_ERROR) as exc:
            for err_type, status in _STATUS_BY_ERROR:
                if isinstance(exc, err_type):
                    self._send_error_json(status, str(exc))
                    return
        except Exception:
            log.exception("internal error serving %s %s", self.command, self.path)
            self._send_error_json(500, "internal error")

    # -- routes

    def do_GET(self):
        self._dispatch(self._route_get)

    def do_POST(self):
        self._dispatch(self._route_post)

    def do_PUT(self):
        self._dispatch(self._route_put)

    def _route_get(self):
        if self.path == protocol.ROUTE_HEALTH:
            self._send_json(200, {"status": "ok"})
            return
        if self.path.startswith(protocol.ROUTE_OBJECTS + "/"):
            username = self.service.authenticate(self._bearer_token())
            object_id = self.path[len(protocol.ROUTE_OBJECTS) + 1 :]
            blob = self.service.get_blob(username, object_id)
            self.send_response(200)
            self.send_header("Content-Type", protocol.CONTENT_BINARY)
            self.send_header("Content-Length", str(len(blob)))
            self.end_headers()
            self.wfile.write(blob)
            return
        self._send_error_json(404, "unknown route")

    def _route_post(self):
        if self.path == protocol.ROUTE_REGISTER:
            body = self._json_body()
            info = self.service.register(body.get("username"), body.get("password"))
            self._send_json(201, info)
            return
        if self.path == protocol.ROUTE_LOGIN:
            body = self._json_body()
            token, expires_at = self.service.login(
                body.get("username"), body.get("password")
            )
            self._send_json(200, {"token": token, "expires_at": expires_at})
            return
        if self.path == protocol.ROUTE_COMPUTE_MUL:
            username = self.service.authenticate(self._bearer_token())
            body = self._json_body()
            for field in protocol.JSON_FIELDS["compute_mul.request"]:
                if not isinstance(body.get(field), str):
                    raise PolicyError(f"missing or invalid field {field!r}")
            try:
                fingerprint = bytes.fromhex(body["fingerprint"])
            except ValueError as exc:
                raise PolicyError("fingerprint is not hex") from exc
            p = b64u_to_int(body["p"])
            object_id = self.service.compute_mul(
                username, body["id1"], body["id2"], p, fingerprint
            )
            self._send_json(201, {"object_id": object_id})
            return
        self._send_error_json(404, "unknown route")

    def _route_put(self):
        if self.path == protocol.ROUTE_OBJECTS:
            username = self.service.authenticate(self._bearer_token())
            blob = self._read_body()
            object_id = self.service.put_blob(username, blob)
            self._send_json(201, {"object_id": object_id})
            return
        self._send_error_json(404, "unknown route")


def make_server(service: StoreService, host: str = "127.0.0.1", port: int = 0) -> ThreadingHTTPServer:
    handler = type("BoundStoreHandler", (StoreHandler,), {"service": service})
    return ThreadingHTTPServer((host, port), handler)


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(name)s %(message)s")
    listen = os.environ.get("AHEE_STORE_LISTEN", DEFAULT_LISTEN)
    data_dir = os.environ.get("AHEE_STORE_DATA", DEFAULT_DATA_DIR)
    token_ttl = int(os.environ.get("AHEE_STORE_TOKEN_TTL", str(DEFAULT_TOKEN_TTL)))
    host, _, port_text = listen.partition(":")
    service = StoreService(data_dir, token_ttl=token_ttl)
    httpd = make_server(service, host or "127.0.0.1", int(port_text or 0))
    bound = httpd.server_address
    log.info("storage service on http://%s:%d data=%s ttl=%ds", bound[0], bound[1], data_dir, token_ttl)
    try:
        httpd.serve_forever()
    except KeyboardInterrupt:
        log.info("shutting down")
    finally:
        httpd.server_close()
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
