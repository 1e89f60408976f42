"""Uniform client for external model services over a chat-completions wire.

One protocol serves generation, classification, constraint synthesis, and
judging; toxicity and perplexity scorers use dedicated POST routes. A
deterministic in-process mock backend (``mock:echo`` or ``mock:<script.json>``)
stands in for every service during tests and offline runs.

Wire routes:
  POST {base_url}/v1/chat/completions  -> {"choices": [{"message": {"content": ...}}] * n}
  POST {base_url}/score                -> {"toxicity": x, "categories": {...}}
  POST {base_url}/perplexity           -> {"perplexity": p}
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .errors import EndpointError, UsageError

TOXICITY_CATEGORIES = (
    "severe_toxicity",
    "sexually_explicit",
    "threat",
    "profanity",
    "identity_attack",
)

CHAT_PATH = "/v1/chat/completions"
SCORE_PATH = "/score"
PERPLEXITY_PATH = "/perplexity"


class GatewayTimeoutError(EndpointError):
    pass


class AuthError(EndpointError):
    pass


class MalformedResponseError(EndpointError):
    pass


class RetriesExhaustedError(EndpointError):
    pass


class ProtocolError(EndpointError):
    pass


class OfflineError(UsageError):
    """An HTTP endpoint was requested while offline mode is active."""


@dataclass(frozen=True)
class SamplingParams:
    temperature: float = 0.70
    top_p: float = 0.90
    top_k: int | None = 50
    max_tokens: int = 50
    n: int = 25
    seed: int | None = None

    def __post_init__(self):
        if self.temperature < 0:
            raise UsageError("temperature must be >= 0")
        if not 0 < self.top_p <= 1:
            raise UsageError("top_p must be in (0, 1]")
        if self.top_k is not None and self.top_k < 1:
            raise UsageError("top_k must be positive when set")
        if self.max_tokens < 1:
            raise UsageError("max_tokens must be positive")
        if self.n < 1:
            raise UsageError("n must be positive")

    def to_record(self) -> dict:
        rec = {
            "temperature": self.temperature,
            "top_p": self.top_p,
            "top_k": self.top_k,
            "max_tokens": self.max_tokens,
            "n": self.n,
        }
        if self.seed is not None:
            rec["seed"] = self.seed
        return rec


@dataclass(frozen=True)
class GatewayHandle:
    base_url: str
    model_name: str = "default"
    api_key: str | None = None  # literal token or "env:VAR" reference
    timeout: float = 30.0
    max_retries: int = 3
    max_concurrency: int = 4
    backoff_base: float = 0.5

    def __post_init__(self):
        if self.max_retries < 0:
            raise UsageError("max_retries must be >= 0")
        if self.max_concurrency < 1:
            raise UsageError("max_concurrency must be >= 1")


@dataclass(frozen=True)
class ChatRequest:
    system: str
    user: str
    params: SamplingParams = field(default_factory=SamplingParams)

    def __post_init__(self):
        if not self.user:
            raise UsageError("chat request needs a non-empty user message")


@dataclass
class ScorerResult:
    overall_toxicity: float
    categories: dict[str, float]


def backoff_delays(base: float, retries: int) -> list[float]:
    """Exponential, non-decreasing delay schedule: base * 2**attempt."""
    return [base * (2**i) for i in range(retries)]


def resolve_api_key(ref: str | None) -> str | None:
    if ref and ref.startswith("env:"):
        return os.environ.get(ref[4:])
    return ref


class TransportTimeout(Exception):
    pass


class TransportUnreachable(Exception):
    pass


class HttpTransport:
    """requests-backed transport; returns (status, parsed JSON body)."""

    def __init__(self, base_url: str, api_key: str | None = None):
        import requests

        self.base_url = base_url.rstrip("/")
        self._session = requests.Session()
        token = resolve_api_key(api_key)
        if token:
            self._session.headers["Authorization"] = f"Bearer {token}"

    def post(self, path: str, payload: dict, timeout: float):
        import requests

        try:
            resp = self._session.post(
                self.base_url + path, json=payload, timeout=timeout
            )
        except requests.exceptions.Timeout as e:
            raise TransportTimeout(str(e)) from e
        except requests.exceptions.ConnectionError as e:
            raise TransportUnreachable(str(e)) from e
        try:
            body = resp.json()
        except ValueError:
            body = resp.text
        return resp.status_code, body


class MockTransport:
    """Scripted in-process backend; deterministic and network-free.

    Script keys (all optional): ``default_chat`` ("echo", a string, or a
    list cycled to n), ``chat`` (exact user-message map), ``chat_contains``
    (ordered [{"contains", "reply"}] substring rules), ``score`` /
    ``default_score``, ``perplexity`` / ``default_perplexity``, and
    ``failures`` ([{"op", "match", "times", "status"|"body"}] directives
    consumed in order). Unscripted scores fall back to a stable hash of
    the text.
    """

    def __init__(self, script: dict | None = None, latency: float = 0.0):
        self.script = script or {}
        self.latency = latency
        self.calls: list[tuple[str, dict]] = []
        self.in_flight = 0
        self.max_in_flight = 0
        self._lock = threading.Lock()
        self._failures = [dict(f) for f in self.script.get("failures", [])]

    @classmethod
    def from_spec(cls, spec: str) -> "MockTransport":
        if spec == "echo" or spec == "":
            return cls({})
        path = Path(spec)
        try:
            return cls(json.loads(path.read_text(encoding="utf-8")))
        except OSError as e:
            raise UsageError(f"cannot read mock script {spec}: {e}") from e

    def _match_failure(self, op: str, key: str):
        with self._lock:
            for f in self._failures:
                if f.get("op", op) != op:
                    continue
                match = f.get("match", "*")
                if match != "*" and match not in key:
                    continue
                if f.get("times", 0) > 0:
                    f["times"] -= 1
                    return f
        return None

    @staticmethod
    def _hash_unit(text: str) -> float:
        digest = hashlib.sha256(text.encode("utf-8")).hexdigest()
        return int(digest[:8], 16) / 0xFFFFFFFF

    def _chat_reply(self, payload: dict):
        user = ""
        for msg in payload.get("messages", []):
            if msg.get("role") == "user":
                user = msg.get("content", "")
        n = payload.get("n", 1)
        reply = None
        table = self.script.get("chat", {})
        if user in table:
            reply = table[user]
        else:
            for rule in self.script.get("chat_contains", []):
                if rule.get("contains", "") in user:
                    reply = rule.get("reply", "")
                    break
        if reply is None:
            reply = self.script.get("default_chat", "echo")
        if reply == "echo":
            contents = [user] * n
        elif isinstance(reply, list):
            contents = [reply[i % len(reply)] for i in range(n)]
        else:
            contents = [reply] * n
        return {"choices": [{"message": {"content": c}} for c in contents]}

    def _score_reply(self, payload: dict):
        text = payload.get("text", "")
        entry = self.script.get("score", {}).get(text)
        if entry is None:
            entry = self.script.get("default_score")
        if entry is None:
            entry = round(self._hash_unit(text), 6)
        if isinstance(entry, dict):
            return entry
        return {
            "toxicity": entry,
            "categories": {c: entry for c in TOXICITY_CATEGORIES},
        }

    def _perplexity_reply(self, payload: dict):
        text = payload.get("text", "")
        entry = self.script.get("perplexity", {}).get(text)
        if entry is None:
            entry = self.script.get("default_perplexity")
        if entry is None:
            entry = round(5.0 + 20.0 * self._hash_unit(text), 6)
        if isinstance(entry, dict):
            return entry
        return {"perplexity": entry}

    def post(self, path: str, payload: dict, timeout: float):
        with self._lock:
            self.in_flight += 1
            self.max_in_flight = max(self.max_in_flight, self.in_flight)
            self.calls.append((path, payload))
        try:
            if self.latency:
                time.sleep(self.latency)
            if path == CHAT_PATH:
                op, key = "chat", ""
                for msg in payload.get("messages", []):
                    if msg.get("role") == "user":
                        key = msg.get("content", "")
            elif path == SCORE_PATH:
                op, key = "score", payload.get("text", "")
            elif path == PERPLEXITY_PATH:
                op, key = "perplexity", payload.get("text", "")
            else:
                return 404, {"error": f"unknown path {path}"}
            failure = self._match_failure(op, key)
            if failure is not None:
                if failure.get("timeout"):
                    raise TransportTimeout("injected timeout")
                if "body" in failure:
                    return failure.get("status", 200), failure["body"]
                return failure.get("status", 500), {"error": "injected failure"}
            if op == "chat":
                return 200, self._chat_reply(payload)
            if op == "score":
                return 200, self._score_reply(payload)
            return 200, self._perplexity_reply(payload)
        finally:
            with self._lock:
                self.in_flight -= 1


def make_transport(handle: GatewayHandle, offline: bool = False):
    url = handle.base_url
    if url.startswith("mock:"):
        return MockTransport.from_spec(url[len("mock:"):])
    if offline:
        raise OfflineError(f"offline mode forbids HTTP endpoint {url}")
    return HttpTransport(url, handle.api_key)


class Gateway:
    """Bound client: handle + transport + shared concurrency limiter."""

    def __init__(self, handle: GatewayHandle, transport=None, sleeper=time.sleep):
        self.handle = handle
        self.transport = transport if transport is not None else make_transport(handle)
        self._sleep = sleeper
        self._slots = threading.Semaphore(handle.max_concurrency)

    def _post_with_retries(self, path: str, payload: dict):
        delays = backoff_delays(self.handle.backoff_base, self.handle.max_retries)
        attempt = 0
        while True:
            err = None
            status, body = None, None
            try:
                with self._slots:
                    status, body = self.transport.post(
                        path, payload, timeout=self.handle.timeout
                    )
            except TransportTimeout as e:
                err = GatewayTimeoutError(f"{path}: {e}")
            except TransportUnreachable as e:
                err = RetriesExhaustedError(f"{path}: unreachable: {e}")
            if err is None:
                if status == 200:
                    return body
                if status in (401, 403):
                    raise AuthError(f"{path}: auth failure (status {status})")
                if status == 429 or status >= 500:
                    err = RetriesExhaustedError(
                        f"{path}: status {status} after {attempt} retries"
                    )
                else:
                    raise ProtocolError(f"{path}: unexpected status {status}")
            if attempt >= self.handle.max_retries:
                raise err
            self._sleep(delays[attempt])
            attempt += 1

    def chat_complete(self, req: ChatRequest) -> list[str]:
        """Return exactly req.params.n completion strings or raise."""
        payload: dict = {"model": self.handle.model_name, "messages": []}
        if req.system:
            payload["messages"].append({"role": "system", "content": req.system})
        payload["messages"].append({"role": "user", "content": req.user})
        p = req.params
        payload.update(
            temperature=p.temperature, top_p=p.top_p, max_tokens=p.max_tokens, n=p.n
        )
        if p.top_k is not None:
            payload["top_k"] = p.top_k
        if p.seed is not None:
            payload["seed"] = p.seed
        body = self._post_with_retries(CHAT_PATH, payload)
        if not isinstance(body, dict) or not isinstance(body.get("choices"), list):
            raise MalformedResponseError("chat reply lacks a choices list")
        contents = []
        for choice in body["choices"]:
            try:
                content = choice["message"]["content"]
            except (TypeError, KeyError):
                raise MalformedResponseError("chat choice lacks message.content")
            if not isinstance(content, str):
                raise MalformedResponseError("chat content is not a string")
            contents.append(content)
        if len(contents) != p.n:
            raise MalformedResponseError(
                f"expected {p.n} completions, got {len(contents)}"
            )
        return contents

    def score_toxicity(self, text: str) -> ScorerResult:
        if not text:
            raise UsageError("score_toxicity requires non-empty text")
        body = self._post_with_retries(SCORE_PATH, {"text": text})
        if not isinstance(body, dict):
            raise ProtocolError("scorer reply is not an object")
        overall = body.get("toxicity")
        categories = body.get("categories")
        if not isinstance(overall, (int, float)) or not 0 <= overall <= 1:
            raise ProtocolError(f"toxicity score out of range: {overall!r}")
        if not isinstance(categories, dict) or set(categories) != set(
            TOXICITY_CATEGORIES
        ):
            raise ProtocolError("scorer reply lacks the five category scores")
        for name, value in categories.items():
            if not isinstance(value, (int, float)) or not 0 <= value <= 1:
                raise ProtocolError(f"category {name} out of range: {value!r}")
        return ScorerResult(
            overall_toxicity=float(overall),
            categories={k: float(v) for k, v in categories.items()},
        )

    def score_perplexity(self, text: str) -> float:
        if not text:
            raise UsageError("score_perplexity requires non-empty text")
        body = self._post_with_retries(PERPLEXITY_PATH, {"text": text})
        if not isinstance(body, dict):
            raise ProtocolError("perplexity reply is not an object")
        ppl = body.get("perplexity")
        if not isinstance(ppl, (int, float)) or ppl <= 0:
            raise ProtocolError(f"perplexity must be positive, got {ppl!r}")
        return float(ppl)

    def map_concurrent(self, fn, items: list) -> list:
        """Apply fn to items with bounded fan-out, preserving input order."""
        if not items:
            return []
        workers = min(self.handle.max_concurrency, len(items))
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))


def open_gateway(
    url: str,
    model_name: str = "default",
    offline: bool = False,
    **handle_kwargs,
) -> Gateway:
    handle = GatewayHandle(base_url=url, model_name=model_name, **handle_kwargs)
    return Gateway(handle, transport=make_transport(handle, offline=offline))
