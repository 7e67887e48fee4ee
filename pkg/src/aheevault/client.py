"""HTTP client for the storage service; satisfies the vault's store interface.

An optional capture list records every request as (method, path, body bytes)
so tests can inspect exactly what crossed the wire.
"""

from __future__ import annotations

import json
import urllib.error
import urllib.request

from . import protocol
from .ahee import EvalContext, int_to_b64u
from .errors import (
    AuthError,
    ConflictError,
    NotFoundError,
    OwnershipError,
    PolicyError,
    ShapeError,
    StoreError,
    StoreUnavailableError,
)

_ERROR_BY_STATUS = {
    400: PolicyError,
    401: AuthError,
    403: OwnershipError,
    404: NotFoundError,
    409: ConflictError,
    422: ShapeError,
}


class StoreClient:
    def __init__(self, base_url: str, timeout: float = 30.0, capture=None):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self.token = None
        self.capture = capture

    def _request(self, method, path, body=None, content_type=None, auth=True) -> bytes:
        if self.capture is not None:
            self.capture.append((method, path, body if body is not None else b""))
        request = urllib.request.Request(self.base_url + path, data=body, method=method)
        if content_type:
            request.add_header("Content-Type", content_type)
        if auth and self.token:
            request.add_header("Authorization", f"{protocol.AUTH_SCHEME} {self.token}")
        try:
            with urllib.request.urlopen(request, timeout=self.timeout) as response:
                return response.read()
        except urllib.error.HTTPError as exc:
            detail = exc.read()
            try:
                message = json.loads(detail.decode("utf-8")).get("error", "")
            except (ValueError, UnicodeDecodeError):
                message = detail.decode("utf-8", "replace")
            error_type = _ERROR_BY_STATUS.get(exc.code, StoreError)
            raise error_type(f"{exc.code}: {message}") from None
        except urllib.error.URLError as exc:
            raise StoreUnavailableError(f"cannot reach {self.base_url}: {exc.reason}") from None

    def _post_json(self, path, payload, auth=True) -> dict:
        body = json.dumps(payload).encode("utf-8")
        return json.loads(self._request(path=path, method="POST", body=body,
                                        content_type=protocol.CONTENT_JSON, auth=auth))

    def healthz(self) -> dict:
        return json.loads(self._request("GET", protocol.ROUTE_HEALTH, auth=False))

    def register(self, username: str, password: str) -> dict:
        return self._post_json(
            protocol.ROUTE_REGISTER, {"username": username, "password": password}, auth=False
        )

    def login(self, username: str, password: str) -> str:
        reply = self._post_json(
            protocol.ROUTE_LOGIN, {"username": username, "password": password}, auth=False
        )
        self.token = reply["token"]
        return self.token

    def upload(self, blob: bytes) -> str:
        reply = self._request(
            "PUT", protocol.ROUTE_OBJECTS, body=blob, content_type=protocol.CONTENT_BINARY
        )
        return json.loads(reply)["object_id"]

    def download(self, object_id: str) -> bytes:
        return self._request("GET", f"{protocol.ROUTE_OBJECTS}/{object_id}")

    def compute_mul(self, id1: str, id2: str, ctx: EvalContext) -> str:
        reply = self._post_json(
            protocol.ROUTE_COMPUTE_MUL,
            {
                "id1": id1,
                "id2": id2,
                "p": int_to_b64u(ctx.p),
                "fingerprint": ctx.fingerprint.hex(),
            },
        )
        return reply["object_id"]
