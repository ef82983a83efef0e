"""State-potential providers and the potential-based shaping combinator.

A potential is a severity score in [0, 1] for a raw window (no action flag).
Two providers exist: a deterministic robust-z heuristic, and a client for any
OpenAI-compatible chat endpoint that is asked for a single JSON object
``{"severity": v}``. Shaping adds ``gamma * phi(s') - phi(s)`` to the reward,
which provably leaves the optimal policy untouched.
"""

from __future__ import annotations

import json
import logging
import os
import re
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import requests

from .errors import InvalidArgs, NetworkError

logger = logging.getLogger(__name__)

# Calibrated so the plateau anchor pattern (exact zeros, then exact 5.0s)
# scores 0.75: its MAD is zero, so the epsilon floor sets the scale.
MAD_EPS = 1e-6
MAD_TO_SIGMA = 1.4826
Z_CAP = (5.0 / MAD_EPS) / 0.75

FALLBACK_SEVERITY = 0.5


@dataclass(frozen=True)
class SeverityScore:
    value: float
    source: str  # llm | heuristic | cache | fallback

    def __post_init__(self):
        if not 0.0 <= self.value <= 1.0:
            raise InvalidArgs(f"severity {self.value} outside [0, 1]")
        if self.source not in ("llm", "heuristic", "cache", "fallback", "constant"):
            raise InvalidArgs(f"unknown severity source {self.source!r}")


DEFAULT_SYSTEM_TEXT = (
    "You rate time-series windows for anomaly severity. "
    "Reply with a single JSON object of the form {\"severity\": v} where v is "
    "a number between 0 and 1 (0 = certainly normal, 1 = certainly anomalous). "
    "Output only the JSON object, no prose."
)

DEFAULT_FEW_SHOT = (
    ((0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0), 0.0),
    ((0.0, 0.0, 0.0, 5.0, 5.0, 5.0, 5.0, 5.0), 0.75),
)


@dataclass(frozen=True)
class PromptSpec:
    """Deterministic prompt layout: system instruction plus few-shot anchors."""

    system_text: str = DEFAULT_SYSTEM_TEXT
    few_shot: tuple = DEFAULT_FEW_SHOT
    precision: int = 2

    def __post_init__(self):
        for readings, severity in self.few_shot:
            if not 0.0 <= severity <= 1.0:
                raise InvalidArgs(f"few-shot severity {severity} outside [0, 1]")


def _format_readings(values: np.ndarray, precision: int) -> str:
    return "[" + ", ".join(f"{float(v):.{precision}f}" for v in values) + "]"


def render_prompt(window: np.ndarray, spec: PromptSpec = PromptSpec()) -> str:
    """User-message text for one window; byte-identical for identical input.

    Multivariate windows are reduced to two derived reading lists (mean
    channel and max channel) since the severity protocol takes flat lists.
    """
    w = np.asarray(window, dtype=np.float64)
    if w.size == 0:
        raise InvalidArgs("empty window")
    if w.ndim == 1:
        w = w[:, None]
    lines = ["Examples:"]
    for readings, severity in spec.few_shot:
        lines.append(f"Sensor readings: {_format_readings(np.asarray(readings), spec.precision)}")
        lines.append(f'{{"severity": {severity:.2f}}}')
    lines.append("Now rate this window.")
    if w.shape[1] == 1:
        lines.append(f"Sensor readings: {_format_readings(w[:, 0], spec.precision)}")
    else:
        lines.append(
            f"Sensor readings (mean channel): {_format_readings(w.mean(axis=1), spec.precision)}"
        )
        lines.append(
            f"Sensor readings (max channel): {_format_readings(w.max(axis=1), spec.precision)}"
        )
    return "\n".join(lines)


def parse_severity(reply: str) -> SeverityScore:
    """First JSON object with a numeric "severity" key, clamped to [0, 1].

    Total: anything unparseable yields the fallback score 0.5.
    """
    decoder = json.JSONDecoder()
    for match in re.finditer(r"\{", reply or ""):
        try:
            obj, _ = decoder.raw_decode(reply, match.start())
        except ValueError:
            continue
        if not isinstance(obj, dict) or "severity" not in obj:
            continue
        raw = obj["severity"]
        if isinstance(raw, bool):
            break
        if isinstance(raw, (int, float)):
            value = float(raw)
        elif isinstance(raw, str):
            try:
                value = float(raw)
            except ValueError:
                break
        else:
            break
        return SeverityScore(value=min(max(value, 0.0), 1.0), source="llm")
    return SeverityScore(value=FALLBACK_SEVERITY, source="fallback")


class PotentialCache:
    """Exact-match cache keyed by the window quantized to 4 decimals.

    Safe for concurrent use; optionally persisted as JSON lines of
    {key, value, source}.
    """

    def __init__(self):
        self._store: dict[str, SeverityScore] = {}
        self._lock = threading.RLock()
        self.hits = 0
        self.misses = 0

    @staticmethod
    def key(window: np.ndarray) -> str:
        w = np.asarray(window, dtype=np.float64)
        if w.ndim == 1:
            w = w[:, None]
        quantized = np.round(w, 4) + 0.0  # fold -0.0 into 0.0
        body = ",".join(f"{v:.4f}" for v in quantized.reshape(-1))
        return f"{w.shape[0]}x{w.shape[1]}:{body}"

    def get(self, key: str) -> SeverityScore | None:
        with self._lock:
            score = self._store.get(key)
            if score is None:
                self.misses += 1
            else:
                self.hits += 1
            return score

    def put(self, key: str, score: SeverityScore) -> None:
        with self._lock:
            self._store[key] = score

    def __len__(self) -> int:
        with self._lock:
            return len(self._store)

    def save(self, path: str) -> None:
        with self._lock:
            entries = sorted(self._store.items())
        with open(path, "w") as fh:
            for key, score in entries:
                fh.write(
                    json.dumps({"key": key, "value": score.value, "source": score.source})
                    + "\n"
                )

    @classmethod
    def load(cls, path: str) -> "PotentialCache":
        cache = cls()
        with open(path) as fh:
            for line in fh:
                if not line.strip():
                    continue
                entry = json.loads(line)
                cache._store[entry["key"]] = SeverityScore(
                    value=entry["value"], source=entry["source"]
                )
        return cache


class PotentialProvider:
    """Interface: score one raw window; optionally prefetch a batch."""

    def score(self, window: np.ndarray) -> SeverityScore:
        raise NotImplementedError

    def prefetch(self, windows) -> None:
        pass

    def flush(self) -> None:
        pass


class ConstantPotential(PotentialProvider):
    def __init__(self, value: float = 0.0):
        self.value = float(value)

    def score(self, window: np.ndarray) -> SeverityScore:
        return SeverityScore(value=self.value, source="constant")


class HeuristicPotential(PotentialProvider):
    """Robust-z spike score: max over entries of |x - median| / (1.4826 MAD + eps),
    divided by the anchor-calibrated cap and clipped to [0, 1].

    Translation invariant; exactly 0 on constant windows.
    """

    def __init__(self, z_cap: float = Z_CAP):
        if z_cap <= 0:
            raise InvalidArgs(f"z_cap must be positive, got {z_cap}")
        self.z_cap = z_cap

    def score(self, window: np.ndarray) -> SeverityScore:
        w = np.asarray(window, dtype=np.float64)
        if w.size == 0:
            raise InvalidArgs("empty window")
        if w.ndim == 1:
            w = w[:, None]
        med = np.median(w, axis=0)
        dev = np.abs(w - med)
        mad = np.median(dev, axis=0)
        z = dev / (MAD_TO_SIGMA * mad + MAD_EPS)
        value = min(max(float(z.max()) / self.z_cap, 0.0), 1.0)
        return SeverityScore(value=value, source="heuristic")


def heuristic_potential(window: np.ndarray) -> SeverityScore:
    return HeuristicPotential().score(window)


@dataclass(frozen=True)
class LlmClientConfig:
    base_url: str
    model: str
    key_env: str = "TSADRL_LLM_API_KEY"
    max_tokens: int = 64
    retries: int = 3
    backoff_s: float = 0.5
    timeout_s: float = 30.0
    max_concurrency: int = 4


class LlmPotential(PotentialProvider):
    """Severity scores from an OpenAI-compatible chat-completions endpoint.

    Requests are cached by quantized window; wire failures degrade to the
    fallback score so a run never dies on a flaky endpoint. Temperature is
    pinned to 0 for reproducibility.
    """

    def __init__(self, config: LlmClientConfig, spec: PromptSpec = PromptSpec(),
                 cache: PotentialCache | None = None,
                 session: requests.Session | None = None,
                 cache_path: str | None = None):
        self.config = config
        self.spec = spec
        self.cache = cache if cache is not None else PotentialCache()
        self.session = session or requests.Session()
        self.cache_path = cache_path
        self._dirty = False

    def _request(self, prompt: str) -> str:
        url = self.config.base_url.rstrip("/") + "/v1/chat/completions"
        body = {
            "model": self.config.model,
            "messages": [
                {"role": "system", "content": self.spec.system_text},
                {"role": "user", "content": prompt},
            ],
            "temperature": 0,
            "max_tokens": self.config.max_tokens,
        }
        headers = {}
        api_key = os.environ.get(self.config.key_env, "")
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        last_error: Exception | None = None
        for attempt in range(self.config.retries):
            if attempt:
                time.sleep(self.config.backoff_s * 2 ** (attempt - 1))
            try:
                resp = self.session.post(
                    url, json=body, headers=headers, timeout=self.config.timeout_s
                )
                if resp.status_code != 200:
                    last_error = NetworkError(f"HTTP {resp.status_code}")
                    continue
                return resp.json()["choices"][0]["message"]["content"]
            except (requests.RequestException, KeyError, IndexError, ValueError) as exc:
                last_error = exc
        raise NetworkError(f"chat completion failed after {self.config.retries} attempts: {last_error}")

    def score(self, window: np.ndarray) -> SeverityScore:
        key = PotentialCache.key(window)
        cached = self.cache.get(key)
        if cached is not None:
            return SeverityScore(value=cached.value, source="cache")
        prompt = render_prompt(window, self.spec)
        try:
            reply = self._request(prompt)
        except NetworkError as exc:
            # Transient failure: do not cache, keep the run alive.
            logger.warning("LLM potential unavailable (%s); using fallback %.1f",
                           exc, FALLBACK_SEVERITY)
            return SeverityScore(value=FALLBACK_SEVERITY, source="fallback")
        score = parse_severity(reply)
        self.cache.put(key, score)
        self._dirty = True
        return score

    def prefetch(self, windows) -> None:
        """Warm the cache with up to max_concurrency requests in flight."""
        with ThreadPoolExecutor(max_workers=self.config.max_concurrency) as pool:
            list(pool.map(self.score, windows))
        self.flush()

    def flush(self) -> None:
        if self.cache_path and self._dirty:
            self.cache.save(self.cache_path)
            self._dirty = False


def llm_potential(window: np.ndarray, config: LlmClientConfig,
                  cache: PotentialCache | None = None) -> SeverityScore:
    return LlmPotential(config, cache=cache).score(window)


def shaped_reward(r: float, phi_s: float, phi_s_next: float, gamma: float) -> float:
    """r + gamma * phi(s') - phi(s); preserves the optimal policy."""
    if not 0.0 < gamma <= 1.0:
        raise InvalidArgs(f"gamma must be in (0, 1], got {gamma}")
    return r + gamma * phi_s_next - phi_s
