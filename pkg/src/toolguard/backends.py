"""Pluggable text-generation backends.

Three implementations share one contract:

* ``HttpBackend`` talks a chat-completions wire format to a remote
  endpoint (live usage, never in CI).
* ``ScriptedBackend`` returns pre-programmed responses in order.
* ``ReplayBackend`` serves archived responses keyed by request hash and
  fails loudly on a miss; paired with ``RecordingBackend`` it makes
  every generation-dependent test deterministic.
"""
from __future__ import annotations

import hashlib
import json
import random
import re
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol, Sequence

import httpx
import jsonschema

from .errors import BackendError, ReplayMiss, SchemaViolation

_SCHEMAS: dict[str, dict] = {}


def register_schema(schema_id: str, schema: dict) -> None:
    _SCHEMAS[schema_id] = schema


def schema_for(schema_id: str) -> dict:
    if schema_id not in _SCHEMAS:
        raise KeyError(f"unregistered output schema {schema_id!r}")
    return _SCHEMAS[schema_id]


@dataclass(frozen=True)
class GenerationRequest:
    template_id: str
    prompt: str
    schema_id: str | None = None
    params: tuple[tuple[str, object], ...] = ()

    @staticmethod
    def make(
        template_id: str,
        prompt: str,
        schema_id: str | None = None,
        **params,
    ) -> "GenerationRequest":
        return GenerationRequest(
            template_id=template_id,
            prompt=prompt,
            schema_id=schema_id,
            params=tuple(sorted(params.items())),
        )

    @property
    def request_hash(self) -> str:
        payload = json.dumps(
            {
                "template_id": self.template_id,
                "prompt": self.prompt,
                "schema_id": self.schema_id,
                "params": list(self.params),
            },
            sort_keys=True,
            ensure_ascii=False,
        )
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()


@dataclass
class Transcript:
    request_hash: str
    raw_response: str
    parsed: object | None
    elapsed: float = 0.0


class GenerationBackend(Protocol):
    def generate(self, req: GenerationRequest) -> Transcript: ...


_FENCE = re.compile(r"^```[a-zA-Z]*\n(.*)\n```\s*$", re.DOTALL)


def parse_structured(req: GenerationRequest, raw: str) -> object | None:
    """Validate a raw response against the request's declared schema.

    Raises SchemaViolation with a message fit for a repair re-prompt.
    """
    if req.schema_id is None:
        return None
    body = raw.strip()
    fenced = _FENCE.match(body)
    if fenced:
        body = fenced.group(1)
    try:
        parsed = json.loads(body)
    except json.JSONDecodeError as e:
        raise SchemaViolation(f"response is not valid JSON: {e}") from e
    try:
        jsonschema.validate(parsed, schema_for(req.schema_id))
    except jsonschema.ValidationError as e:
        raise SchemaViolation(
            f"response violates schema {req.schema_id}: {e.message}"
        ) from e
    return parsed


def _finish(req: GenerationRequest, raw: str, started: float) -> Transcript:
    parsed = parse_structured(req, raw)
    return Transcript(
        request_hash=req.request_hash,
        raw_response=raw,
        parsed=parsed,
        elapsed=time.monotonic() - started,
    )


class ScriptedBackend:
    """Deterministic backend for tests: responses come back in order,
    regardless of the request."""

    def __init__(self, responses: Sequence[str | dict | list]):
        self._responses = list(responses)
        self._cursor = 0
        self._lock = threading.Lock()
        self.requests: list[GenerationRequest] = []

    def generate(self, req: GenerationRequest) -> Transcript:
        started = time.monotonic()
        with self._lock:
            self.requests.append(req)
            if self._cursor >= len(self._responses):
                raise BackendError(
                    f"scripted backend exhausted after {self._cursor} responses"
                )
            response = self._responses[self._cursor]
            self._cursor += 1
        raw = (
            response
            if isinstance(response, str)
            else json.dumps(response, ensure_ascii=False)
        )
        return _finish(req, raw, started)


class ReplayBackend:
    """Serves archived responses; a miss is an error, never a fabricated
    response."""

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)

    def generate(self, req: GenerationRequest) -> Transcript:
        started = time.monotonic()
        path = self.directory / f"{req.request_hash}.json"
        if not path.exists():
            raise ReplayMiss(
                f"no archived response for request {req.request_hash}"
                f" (template {req.template_id}) in {self.directory}"
            )
        record = json.loads(path.read_text())
        return _finish(req, record["raw_response"], started)


class RecordingBackend:
    """Delegates to a live backend and archives every exchange for
    later replay."""

    def __init__(self, inner: GenerationBackend, directory: str | Path):
        self.inner = inner
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)

    def generate(self, req: GenerationRequest) -> Transcript:
        tx = self.inner.generate(req)
        record = {
            "request": {
                "template_id": req.template_id,
                "prompt": req.prompt,
                "schema_id": req.schema_id,
                "params": list(req.params),
            },
            "raw_response": tx.raw_response,
        }
        path = self.directory / f"{req.request_hash}.json"
        path.write_text(json.dumps(record, indent=2, ensure_ascii=False) + "\n")
        return tx


@dataclass
class HttpBackend:
    """Chat-completions client. Credentials come from the environment
    only; retries transient failures with exponential backoff."""

    endpoint: str
    model: str
    api_key: str | None = None
    timeout: float = 60.0
    max_retries: int = 3
    backoff_base: float = 0.5
    max_concurrency: int = 4
    _semaphore: threading.Semaphore = field(init=False, repr=False)

    def __post_init__(self):
        self._semaphore = threading.Semaphore(self.max_concurrency)

    def generate(self, req: GenerationRequest) -> Transcript:
        started = time.monotonic()
        params = dict(req.params)
        body = {
            "model": self.model,
            "messages": [{"role": "user", "content": req.prompt}],
        }
        if "temperature" in params:
            body["temperature"] = params["temperature"]
        if "max_tokens" in params:
            body["max_tokens"] = params["max_tokens"]
        headers = {}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        url = self.endpoint.rstrip("/") + "/chat/completions"
        last_error: Exception | None = None
        for attempt in range(self.max_retries):
            if attempt:
                delay = self.backoff_base * (2 ** (attempt - 1))
                time.sleep(delay * (1 + random.random() * 0.1))
            try:
                with self._semaphore:
                    resp = httpx.post(
                        url, json=body, headers=headers, timeout=self.timeout
                    )
                if resp.status_code >= 500:
                    last_error = BackendError(
                        f"server error {resp.status_code}: {resp.text[:200]}"
                    )
                    continue
                if resp.status_code != 200:
                    raise BackendError(
                        f"request failed with {resp.status_code}: {resp.text[:200]}"
                    )
                payload = resp.json()
                raw = payload["choices"][0]["message"]["content"]
                return _finish(req, raw, started)
            except httpx.HTTPError as e:
                last_error = BackendError(f"transport error: {e}")
        raise last_error or BackendError("request failed")


def make_backend(
    kind: str,
    *,
    responses: Sequence | None = None,
    replay_dir: str | Path | None = None,
    endpoint: str | None = None,
    model: str | None = None,
    api_key: str | None = None,
) -> GenerationBackend:
    if kind == "scripted":
        return ScriptedBackend(responses or [])
    if kind == "replay":
        if replay_dir is None:
            raise BackendError("replay backend needs a replay directory")
        return ReplayBackend(replay_dir)
    if kind == "http":
        if not endpoint or not model:
            raise BackendError("http backend needs an endpoint and a model")
        return HttpBackend(endpoint=endpoint, model=model, api_key=api_key)
    raise BackendError(f"unknown backend kind {kind!r}")
