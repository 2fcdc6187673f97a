"""Exception taxonomy shared across the package.

Every error carries a short machine-readable ``code`` that the HTTP layer
maps into its ``{"error": {"code", "message"}}`` envelope.
"""


class KzbError(Exception):
    code = "internal_error"


# --- configuration / input validation ---

class InvalidDescriptor(KzbError):
    """Zotero library descriptor violates its invariants."""

    code = "invalid_descriptor"


class InvalidParams(KzbError):
    """Chunking parameters violate their invariants (overlap >= size, ...)."""

    code = "invalid_params"


class InvalidConfig(KzbError):
    """Application configuration is incomplete or inconsistent."""

    code = "invalid_config"


# --- remote services (Zotero, embedding/chat providers) ---

class AuthFailed(KzbError):
    code = "auth_failed"


class NotFound(KzbError):
    code = "not_found"


class RateLimited(KzbError):
    code = "rate_limited"


class TransportError(KzbError):
    """Network failure or an unexpected upstream response."""

    code = "transport_error"


class ProviderError(KzbError):
    """Embedding/chat provider returned a malformed or error response."""

    code = "provider_error"


# --- PDF extraction ---

class NotAPdf(KzbError):
    code = "not_a_pdf"


class EncryptedPdf(KzbError):
    code = "encrypted_pdf"


class NoExtractableText(KzbError):
    code = "no_extractable_text"


# --- vectors and the index ---

class DimensionMismatch(KzbError):
    code = "dimension_mismatch"


class ZeroVector(KzbError):
    code = "zero_vector"


class EmptyIndex(KzbError):
    code = "empty_index"


class EmptyContext(KzbError):
    code = "empty_context"


class IoError(KzbError):
    """Index file could not be read or written."""

    code = "io_error"


class CorruptIndex(KzbError):
    code = "corrupt_index"


class VersionMismatch(KzbError):
    code = "version_mismatch"


# --- chat sessions ---

class UnknownSession(KzbError):
    code = "unknown_session"


class RoleOrderViolation(KzbError):
    code = "role_order_violation"
