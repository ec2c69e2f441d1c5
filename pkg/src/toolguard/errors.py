"""Shared exception hierarchy.

Every error raised by this package derives from ToolguardError so callers
can catch framework failures without swallowing programming errors.
"""


class ToolguardError(Exception):
    pass


class UsageError(ToolguardError):
    """Bad invocation (missing files, contradictory flags); exit code 2."""


# --- tool spec ingestion ---

class OpenApiParseError(ToolguardError):
    """The document is not a usable OpenAPI 3.x document."""


class UnsupportedSchema(ToolguardError):
    """A schema construct outside the supported subset.

    Carries the path to the offending node so the author can fix the
    document instead of silently losing a type.
    """

    def __init__(self, message: str, path: str):
        super().__init__(f"{path}: {message}")
        self.path = path


class NameCollision(ToolguardError):
    """A schema or tool name collides with a reserved DSL word."""


# --- policy documents and maps ---

class EmptyDocument(ToolguardError):
    pass


class ValidationError(ToolguardError):
    """Structured backend output violates a framework invariant."""


# --- generation backends ---

class BackendError(ToolguardError):
    """The generation backend failed (network, auth, exhausted script)."""


class ReplayMiss(BackendError):
    """No archived response for this request hash. Never fabricated."""


class SchemaViolation(ToolguardError):
    """Backend response failed structured-output validation."""


# --- guard language runtime ---

class GuardError(ToolguardError):
    pass


class GuardNotImplemented(GuardError):
    """A guard stub was evaluated. The TDD loop starts here ("red")."""


class BudgetExceeded(GuardError):
    """Evaluation ran past its step or tool-call budget."""


class RuntimeFault(GuardError):
    """Dynamic fault (bad payload, missing optional, index out of range)."""


# --- environment and benchmark ---

class ToolError(ToolguardError):
    """Mechanical tool failure: unknown id, no seats, bad payment.

    Never a policy judgement; policies live in guards.
    """


class InvalidK(ToolguardError):
    pass
