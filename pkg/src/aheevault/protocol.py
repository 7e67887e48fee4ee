"""Wire-format constants shared by the storage service and its HTTP client.

JSON_FIELDS is the complete set of JSON keys that can cross the wire, kept in
one place so tests can statically confirm the secret exponent is never part
of any request or response schema.
"""

ROUTE_REGISTER = "/v1/register"
ROUTE_LOGIN = "/v1/login"
ROUTE_OBJECTS = "/v1/objects"
ROUTE_COMPUTE_MUL = "/v1/compute/mul"
ROUTE_HEALTH = "/v1/healthz"

AUTH_SCHEME = "Bearer"
CONTENT_JSON = "application/json"
CONTENT_BINARY = "application/octet-stream"

JSON_FIELDS = {
    "register.request": ("username", "password"),
    "register.response": ("username", "created_at"),
    "login.request": ("username", "password"),
    "login.response": ("token", "expires_at"),
    "upload.response": ("object_id",),
    "compute_mul.request": ("id1", "id2", "p", "fingerprint"),
    "compute_mul.response": ("object_id",),
    "health.response": ("status",),
    "error.response": ("error",),
}
