"""LLM clients: an HTTP chat-completion transport and a scripted mock.

Callers send one prompt and receive one text completion. The scripted
client replays canned responses keyed by a prompt digest, which keeps
pipeline tests deterministic and offline; the HTTP client speaks the
common chat-completions shape and reads its API key from an environment
variable, never from configuration files.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import time
from abc import ABC, abstractmethod
from dataclasses import dataclass
from pathlib import Path

import httpx

logger = logging.getLogger(__name__)


class LlmError(Exception):
    """Base class for LLM client failures."""


class LlmTransportError(LlmError):
    """Request could not be completed after retries."""


class LlmResponseError(LlmError):
    """The backend answered, but not in a usable form."""


@dataclass(frozen=True, slots=True)
class LlmParameters:
    temperature: float = 0.0
    max_output_tokens: int = 1024
    timeout_seconds: float = 60.0
    retry_budget: int = 2

    def __post_init__(self) -> None:
        if self.temperature < 0:
            raise ValueError(f"temperature must be >= 0, got {self.temperature}")
        if self.retry_budget < 0:
            raise ValueError(f"retry_budget must be >= 0, got {self.retry_budget}")


class LlmClient(ABC):
    """Sends a single-prompt completion request to a language model."""

    @property
    @abstractmethod
    def model_id(self) -> str:
        """Stable identifier of the underlying model."""

    @abstractmethod
    def complete(self, prompt: str, *, temperature: float | None = None) -> str:
        """Return the model's completion for ``prompt``.

        Args:
            prompt: Full prompt text.
            temperature: Overrides the client default when given.

        Raises:
            LlmTransportError: Transport failure after the retry budget.
            LlmResponseError: Response arrived but was unusable.
        """


def prompt_digest(prompt: str) -> str:
    """Stable short digest used to key scripted responses."""
    return hashlib.sha256(prompt.encode()).hexdigest()[:16]


class ScriptedLlmClient(LlmClient):
    """Replays canned responses keyed by prompt digest.

    A fixture maps ``prompt_digest(prompt)`` to either a single response
    string or a list of strings consumed one call at a time (for retry
    scenarios). Unknown prompts raise, carrying the digest so the fixture
    can be extended.
    """

    def __init__(self, responses: dict[str, str | list[str]], model_id: str = "scripted") -> None:
        self._model_id = model_id
        self._queues: dict[str, list[str]] = {
            key: list(value) if isinstance(value, list) else [value]
            for key, value in responses.items()
        }
        self.calls: list[str] = []

    @classmethod
    def from_file(cls, path: str | Path, model_id: str = "scripted") -> "ScriptedLlmClient":
        with open(path, encoding="utf-8") as handle:
            return cls(json.load(handle), model_id=model_id)

    @property
    def model_id(self) -> str:
        return self._model_id

    def complete(self, prompt: str, *, temperature: float | None = None) -> str:
        del temperature  # scripted responses are temperature-blind
        digest = prompt_digest(prompt)
        self.calls.append(digest)
        queue = self._queues.get(digest)
        if not queue:
            raise LlmResponseError(f"no scripted response for prompt digest {digest}")
        return queue.pop(0) if len(queue) > 1 else queue[0]


class HttpChatClient(LlmClient):
    """Chat-completions HTTP client.

    Request: ``POST {endpoint}`` with ``{"model", "messages", "temperature",
    "max_tokens"}``; response parsed from ``choices[0].message.content``.
    The API key is read from the named environment variable at call time.
    """

    def __init__(
        self,
        endpoint: str,
        model_id: str,
        *,
        key_env_var: str = "",
        parameters: LlmParameters | None = None,
        backoff_seconds: float = 0.5,
        transport: httpx.BaseTransport | None = None,
    ) -> None:
        self._endpoint = endpoint
        self._model_id = model_id
        self._key_env_var = key_env_var
        self._parameters = parameters or LlmParameters()
        self._backoff_seconds = backoff_seconds
        self._client = httpx.Client(timeout=self._parameters.timeout_seconds, transport=transport)

    @property
    def model_id(self) -> str:
        return self._model_id

    def complete(self, prompt: str, *, temperature: float | None = None) -> str:
        headers = {}
        if self._key_env_var:
            key = os.environ.get(self._key_env_var)
            if not key:
                raise LlmTransportError(f"environment variable {self._key_env_var} is not set")
            headers["Authorization"] = f"Bearer {key}"
        payload = {
            "model": self._model_id,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self._parameters.temperature if temperature is None else temperature,
            "max_tokens": self._parameters.max_output_tokens,
        }
        attempts = self._parameters.retry_budget + 1
        last_error: Exception | None = None
        for attempt in range(attempts):
            if attempt:
                time.sleep(self._backoff_seconds * 2 ** (attempt - 1))
            try:
                response = self._client.post(self._endpoint, json=payload, headers=headers)
                response.raise_for_status()
                body = response.json()
            except httpx.HTTPError as exc:
                last_error = exc
                logger.warning("LLM request failed (attempt %d): %s", attempt + 1, exc)
                continue
            try:
                content = body["choices"][0]["message"]["content"]
            except (KeyError, IndexError, TypeError) as exc:
                raise LlmResponseError(f"malformed completion response: {exc}") from exc
            if not isinstance(content, str):
                raise LlmResponseError(f"completion content is {type(content).__name__}, not str")
            return content
        raise LlmTransportError(f"LLM request failed after {attempts} attempts: {last_error}")


def create_llm_client(spec: str, *, model_id: str = "", key_env_var: str = "") -> LlmClient:
    """Build a client from a URL-style spec.

    ``fixture://<path>`` loads a :class:`ScriptedLlmClient` fixture file;
    ``http(s)://...`` yields :class:`HttpChatClient`.
    """
    if spec.startswith("fixture://"):
        return ScriptedLlmClient.from_file(spec[len("fixture://") :])
    if spec.startswith(("http://", "https://")):
        return HttpChatClient(spec, model_id=model_id, key_env_var=key_env_var)
    raise ValueError(f"unsupported LLM client spec: {spec!r}")
