"""HTTP clients for a remote scoring and generation service.

The wire protocol is UTF-8 JSON over HTTP: POST /score takes
{"sentences": [...]} and returns {"coherence": x, "model_id": "..."};
POST /generate takes {"context_sentences": [...], "mask_side":
"prefix_kept" | "suffix_kept", "max_new_tokens": n, "temperature": t} and
returns {"substitute": "...", "model_id": "..."}.
"""

from __future__ import annotations

import time

import requests

from .augment import SIDE_PREFIX, SIDE_SUFFIX, GeneratorBackend, MaskedContext
from .backends import ScorerBackend
from .discourse import Discourse
from .errors import BackendError, InvalidInput

REMOTE_URL_ENV = "COHEREVAL_REMOTE_URL"

_DEFAULT_TIMEOUT = 30.0


def _post_json(
    session: requests.Session,
    url: str,
    payload: dict,
    timeout: float,
    retries: int,
    backoff: float,
) -> dict:
    attempt = 0
    while True:
        try:
            response = session.post(url, json=payload, timeout=timeout)
            response.raise_for_status()
            data = response.json()
            if not isinstance(data, dict):
                raise BackendError(f"{url} returned non-object JSON")
            return data
        except BackendError:
            raise
        except Exception as exc:
            if attempt >= retries:
                raise BackendError(f"request to {url} failed after {attempt + 1} attempts: {exc}") from exc
            time.sleep(backoff * (2**attempt))
            attempt += 1


class RemoteScorerBackend(ScorerBackend):
    """Scores discourses through a remote /score endpoint."""

    def __init__(
        self,
        base_url: str,
        timeout: float = _DEFAULT_TIMEOUT,
        retries: int = 2,
        backoff: float = 0.2,
    ):
        if not base_url:
            raise InvalidInput("remote scorer needs a base URL")
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self.retries = retries
        self.backoff = backoff
        self.identity = f"remote:{self.base_url}"
        self._session = requests.Session()

    def score(self, discourse: Discourse) -> float:
        data = _post_json(
            self._session,
            f"{self.base_url}/score",
            {"sentences": list(discourse.sentences)},
            self.timeout,
            self.retries,
            self.backoff,
        )
        if "coherence" not in data:
            raise BackendError(f"/score response missing 'coherence': {sorted(data)}")
        value = data["coherence"]
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise BackendError(f"/score returned non-numeric coherence {value!r}")
        return float(value)


class RemoteGenerator(GeneratorBackend):
    """Generates substitute sentences through a remote /generate endpoint."""

    def __init__(
        self,
        base_url: str,
        max_new_tokens: int = 48,
        temperature: float = 0.0,
        timeout: float = _DEFAULT_TIMEOUT,
        retries: int = 2,
        backoff: float = 0.2,
    ):
        if not base_url:
            raise InvalidInput("remote generator needs a base URL")
        if max_new_tokens < 1:
            raise InvalidInput(f"max_new_tokens must be >= 1, got {max_new_tokens}")
        if temperature < 0.0:
            raise InvalidInput(f"temperature must be >= 0, got {temperature}")
        self.base_url = base_url.rstrip("/")
        self.max_new_tokens = max_new_tokens
        self.temperature = temperature
        self.timeout = timeout
        self.retries = retries
        self.backoff = backoff
        self.identity = f"remote:{self.base_url}"
        self._session = requests.Session()

    def generate(self, context: MaskedContext) -> str:
        if context.side_kept == SIDE_PREFIX:
            mask_side = "prefix_kept"
            sentences = context.sentences_before
        elif context.side_kept == SIDE_SUFFIX:
            mask_side = "suffix_kept"
            sentences = context.sentences_after
        else:
            raise InvalidInput("the wire protocol carries one-sided contexts only")
        data = _post_json(
            self._session,
            f"{self.base_url}/generate",
            {
                "context_sentences": list(sentences),
                "mask_side": mask_side,
                "max_new_tokens": self.max_new_tokens,
                "temperature": self.temperature,
            },
            self.timeout,
            self.retries,
            self.backoff,
        )
        if "substitute" not in data:
            raise BackendError(f"/generate response missing 'substitute': {sorted(data)}")
        substitute = data["substitute"]
        if not isinstance(substitute, str):
            raise BackendError(f"/generate returned non-string substitute {substitute!r}")
        return substitute
