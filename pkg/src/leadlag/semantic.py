"""Semantic plausibility scoring of candidate lead-lag pairs.

A statistical screen over a few hundred markets will surface pairs whose
association is mechanical noise.  This module asks a language model a
narrow question about each directed pair: does an economic transmission
mechanism exist by which the leader event could move ahead of the
follower, beyond mere correlation?  The answer is a graded verdict
(none < weak < moderate < strong) used to re-rank the statistical
candidates; it never overrides the statistics, it only reorders them.

Three modes share one code path:

    live    POST to an OpenAI-style chat-completions endpoint.
    stub    Deterministic local verdicts (a supplied table, a uniform
            strength, or a hash of the prompt); zero network traffic.
    replay  Serve strictly from the response cache; a miss is a failure.

Live responses that parse cleanly are appended to a JSONL cache keyed by
SHA-256 of (model, prompt), so reruns are free and replayable.  A pair
whose scoring fails after retries degrades to strength "none" and is kept,
never dropped.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Mapping

import requests

from .errors import (
    IncompleteMetadata,
    InvalidParameter,
    MalformedResponse,
    SchemaViolation,
    ScoringFailed,
    UnknownMarket,
)

log = logging.getLogger(__name__)

STRENGTH_LEVELS = ("none", "weak", "moderate", "strong")

API_KEY_ENV_VAR = "LLM_API_KEY"

_PROMPT_TEMPLATE = """\
You are evaluating a proposed lead-lag relationship between two prediction-market events.

Proposed direction: movements in the LEADER market's probability precede related movements in the FOLLOWER market's probability.

LEADER market:
  title: {leader_title}
  description: {leader_description}

FOLLOWER market:
  title: {follower_title}
  description: {follower_description}

Question: is there a plausible real-world transmission mechanism, beyond statistical correlation, by which news moving the leader would later move the follower?

Respond with a single JSON object and nothing else, with exactly these fields:
{{"plausible": true or false, "strength": "none" or "weak" or "moderate" or "strong", "expected_sign": 1 or -1, "rationale": "one or two sentences"}}

"strength" grades the mechanism: "none" means no plausible mechanism (then "plausible" must be false). "expected_sign" is 1 if the follower probability should move the same direction as the leader, -1 if opposite.\
"""


@dataclass(frozen=True)
class EventMetadata:
    """Human-readable description of one market's underlying event."""

    market_id: str
    title: str
    description: str
    event_group: str


@dataclass(frozen=True)
class SemanticVerdict:
    """Parsed scorer answer for one directed pair."""

    plausible: bool
    strength: str
    expected_sign: int
    rationale: str
    raw_response: str = ""

    def __post_init__(self):
        if self.strength not in STRENGTH_LEVELS:
            raise SchemaViolation(f"unknown strength {self.strength!r}")
        if self.expected_sign not in (-1, 1):
            raise SchemaViolation(
                f"expected_sign must be -1 or +1, got {self.expected_sign!r}")
        if self.strength == "none" and self.plausible:
            raise SchemaViolation("strength 'none' contradicts plausible=true")


def strength_rank(strength: str) -> int:
    """Ordinal of a strength grade: none=0, weak=1, moderate=2, strong=3."""
    try:
        return STRENGTH_LEVELS.index(strength)
    except ValueError:
        raise InvalidParameter(f"unknown strength {strength!r}") from None


@dataclass(frozen=True)
class ScorerConfig:
    """Everything needed to score pairs in any mode.

    stub_table maps (leader_id, follower_id) to a strength name or a
    (strength, expected_sign) tuple; stub_default applies one strength
    uniformly; with neither, stub verdicts are hash-seeded from the
    prompt.  The API key is read from the LLM_API_KEY environment
    variable, never stored here.
    """

    mode: str = "stub"
    endpoint_url: str = "https://api.openai.com/v1/chat/completions"
    model_name: str = "gpt-5-nano"
    temperature: float = 0.0
    max_retries: int = 3
    retry_backoff: float = 0.25
    concurrency_limit: int = 4
    timeout: float = 30.0
    cache_path: str | None = None
    stub_table: Mapping[tuple[str, str], object] | None = None
    stub_default: str | None = None

    def __post_init__(self):
        if self.mode not in ("live", "stub", "replay"):
            raise InvalidParameter(f"unknown scorer mode {self.mode!r}")
        if self.max_retries < 0:
            raise InvalidParameter("max_retries must be >= 0")
        if self.retry_backoff < 0:
            raise InvalidParameter("retry_backoff must be >= 0")
        if self.concurrency_limit < 1:
            raise InvalidParameter("concurrency_limit must be >= 1")
        if self.timeout <= 0:
            raise InvalidParameter("timeout must be > 0")
        if self.stub_default is not None and self.stub_default not in STRENGTH_LEVELS:
            raise InvalidParameter(f"unknown strength {self.stub_default!r}")


def build_prompt(leader: EventMetadata, follower: EventMetadata) -> str:
    """Render the scoring prompt for one directed pair.

    Deterministic: identical metadata yields the identical string, which
    is what makes caching by prompt hash sound.
    """
    for meta, role in ((leader, "leader"), (follower, "follower")):
        if not meta.title or not meta.title.strip():
            raise IncompleteMetadata(f"{role} {meta.market_id}: missing title")
        if not meta.description or not meta.description.strip():
            raise IncompleteMetadata(f"{role} {meta.market_id}: missing description")
    return _PROMPT_TEMPLATE.format(
        leader_title=leader.title, leader_description=leader.description,
        follower_title=follower.title, follower_description=follower.description)


def _first_json_object(text: str) -> dict:
    cleaned = text.replace("```json", "\n").replace("```", "\n")
    decoder = json.JSONDecoder()
    idx = cleaned.find("{")
    while idx != -1:
        try:
            obj, _ = decoder.raw_decode(cleaned[idx:])
        except json.JSONDecodeError:
            idx = cleaned.find("{", idx + 1)
            continue
        if isinstance(obj, dict):
            return obj
        idx = cleaned.find("{", idx + 1)
    raise MalformedResponse(f"no JSON object found in response: {text[:120]!r}")


def parse_verdict(text: str) -> SemanticVerdict:
    """Extract and validate the first JSON object in a raw response.

    Tolerates surrounding prose and markdown code fences.  Raises
    MalformedResponse when nothing parses as JSON, SchemaViolation when
    the object parses but has missing, mistyped, or inconsistent fields.
    """
    obj = _first_json_object(text)
    for field in ("plausible", "strength", "expected_sign", "rationale"):
        if field not in obj:
            raise SchemaViolation(f"verdict is missing field {field!r}")
    plausible = obj["plausible"]
    if not isinstance(plausible, bool):
        raise SchemaViolation(f"plausible must be a boolean, got {plausible!r}")
    strength = obj["strength"]
    if not isinstance(strength, str) or strength not in STRENGTH_LEVELS:
        raise SchemaViolation(f"unknown strength {strength!r}")
    sign = obj["expected_sign"]
    if isinstance(sign, bool) or not isinstance(sign, (int, float)) or sign not in (-1, 1):
        raise SchemaViolation(f"expected_sign must be -1 or 1, got {sign!r}")
    rationale = obj["rationale"]
    if not isinstance(rationale, str):
        raise SchemaViolation(f"rationale must be a string, got {rationale!r}")
    return SemanticVerdict(plausible=plausible, strength=strength,
                           expected_sign=int(sign), rationale=rationale,
                           raw_response=text)


def prompt_key(model_name: str, prompt: str) -> str:
    """Cache key: SHA-256 over the model name and the exact prompt."""
    digest = hashlib.sha256()
    digest.update(model_name.encode("utf-8"))
    digest.update(b"\n")
    digest.update(prompt.encode("utf-8"))
    return digest.hexdigest()


class ResponseCache:
    """Append-only JSONL store of raw scorer responses.

    One record per line: {"key", "model", "timestamp", "response"}.
    Safe for concurrent use within one process.
    """

    def __init__(self, path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._entries: dict[str, str] = {}
        if self.path.exists():
            for line in self.path.read_text().splitlines():
                line = line.strip()
                if not line:
                    continue
                try:
                    record = json.loads(line)
                except json.JSONDecodeError:
                    log.warning("skipping unreadable cache line in %s", self.path)
                    continue
                if "key" in record and "response" in record:
                    self._entries[record["key"]] = record["response"]

    def __len__(self) -> int:
        return len(self._entries)

    def get(self, key: str) -> str | None:
        with self._lock:
            return self._entries.get(key)

    def put(self, key: str, model: str, response: str) -> None:
        record = {"key": key, "model": model,
                  "timestamp": datetime.now(timezone.utc).isoformat(),
                  "response": response}
        with self._lock:
            if key in self._entries:
                return
            self._entries[key] = response
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with self.path.open("a") as fh:
                fh.write(json.dumps(record) + "\n")


def _verdict_json(plausible: bool, strength: str, sign: int, rationale: str) -> str:
    return json.dumps({"plausible": plausible, "strength": strength,
                       "expected_sign": sign, "rationale": rationale})


def _stub_verdict(config: ScorerConfig, leader: EventMetadata,
                  follower: EventMetadata, prompt: str) -> SemanticVerdict:
    pair = (leader.market_id, follower.market_id)
    strength: str | None = None
    sign = 1
    if config.stub_table is not None and pair in config.stub_table:
        entry = config.stub_table[pair]
        if isinstance(entry, SemanticVerdict):
            return entry
        if isinstance(entry, tuple):
            strength, sign = entry[0], int(entry[1])
        else:
            strength = str(entry)
    elif config.stub_default is not None:
        strength = config.stub_default
    if strength is None:
        digest = hashlib.sha256(prompt.encode("utf-8")).digest()
        strength = STRENGTH_LEVELS[digest[0] % len(STRENGTH_LEVELS)]
        sign = 1 if digest[1] % 2 == 0 else -1
    if strength not in STRENGTH_LEVELS:
        raise InvalidParameter(f"stub table has unknown strength {strength!r}")
    plausible = strength != "none"
    rationale = "stub verdict"
    return SemanticVerdict(plausible=plausible, strength=strength,
                           expected_sign=sign, rationale=rationale,
                           raw_response=_verdict_json(plausible, strength,
                                                      sign, rationale))


def _post_once(config: ScorerConfig, prompt: str) -> str:
    headers = {"Content-Type": "application/json"}
    api_key = os.environ.get(API_KEY_ENV_VAR)
    if api_key:
        headers["Authorization"] = f"Bearer {api_key}"
    payload = {"model": config.model_name,
               "messages": [{"role": "user", "content": prompt}],
               "temperature": config.temperature}
    resp = requests.post(config.endpoint_url, json=payload, headers=headers,
                         timeout=config.timeout)
    if resp.status_code == 429 or resp.status_code >= 500:
        raise _Retryable(f"HTTP {resp.status_code}")
    if resp.status_code != 200:
        raise ScoringFailedStatus(f"HTTP {resp.status_code}: {resp.text[:200]}")
    try:
        body = resp.json()
        content = body["choices"][0]["message"]["content"]
    except (ValueError, KeyError, IndexError, TypeError) as exc:
        raise MalformedResponse(f"unexpected completion body: {exc}") from exc
    if not isinstance(content, str):
        raise MalformedResponse("completion content is not a string")
    return content


class _Retryable(Exception):
    """Transient transport condition worth another attempt."""


class ScoringFailedStatus(Exception):
    """Non-retryable HTTP status from the endpoint."""


def _live_verdict(config: ScorerConfig, cache: ResponseCache | None,
                  key: str, prompt: str,
                  leader_id: str, follower_id: str) -> SemanticVerdict:
    last_error = "no attempts made"
    attempts = config.max_retries + 1
    for attempt in range(attempts):
        if attempt > 0:
            time.sleep(config.retry_backoff * (2.0 ** (attempt - 1)))
        try:
            raw = _post_once(config, prompt)
            verdict = parse_verdict(raw)
        except (_Retryable, MalformedResponse, SchemaViolation,
                requests.RequestException) as exc:
            last_error = f"{type(exc).__name__}: {exc}"
            log.debug("scoring attempt %d/%d failed for (%s -> %s): %s",
                      attempt + 1, attempts, leader_id, follower_id, last_error)
            continue
        except ScoringFailedStatus as exc:
            raise ScoringFailed(leader_id, follower_id, str(exc)) from exc
        if cache is not None:
            cache.put(key, config.model_name, raw)
        return verdict
    raise ScoringFailed(leader_id, follower_id,
                        f"exhausted {attempts} attempts ({last_error})")


def score_pair(config: ScorerConfig, pair: tuple[EventMetadata, EventMetadata],
               cache: ResponseCache | None = None) -> SemanticVerdict:
    """Score one directed (leader, follower) pair of events.

    A cache hit short-circuits live mode; pass an open ResponseCache to
    share one store across calls, otherwise config.cache_path is opened
    per call.  Raises ScoringFailed when no verdict could be obtained.
    """
    leader, follower = pair
    prompt = build_prompt(leader, follower)
    if config.mode == "stub":
        return _stub_verdict(config, leader, follower, prompt)
    key = prompt_key(config.model_name, prompt)
    if cache is None and config.cache_path is not None:
        cache = ResponseCache(config.cache_path)
    cached = cache.get(key) if cache is not None else None
    if cached is not None:
        return parse_verdict(cached)
    if config.mode == "replay":
        raise ScoringFailed(leader.market_id, follower.market_id,
                            "replay mode and prompt not in cache")
    return _live_verdict(config, cache, key, prompt,
                         leader.market_id, follower.market_id)


def failure_verdict(reason: str) -> SemanticVerdict:
    """The degraded verdict recorded when scoring a pair fails outright."""
    return SemanticVerdict(plausible=False, strength="none", expected_sign=1,
                           rationale=f"scoring failed: {reason}",
                           raw_response="")


def score_candidates(config: ScorerConfig, candidates,
                     metadata: Mapping[str, EventMetadata],
                     ) -> tuple[dict[tuple[str, str], SemanticVerdict],
                                list[dict]]:
    """Score every candidate pair, bounded-concurrently.

    Returns (verdicts keyed by (leader_id, follower_id), failure records).
    Failed pairs receive failure_verdict() and stay in the verdict map.
    Raises UnknownMarket if a candidate references a market with no
    metadata.
    """
    results = list(candidates)
    for r in results:
        for mid in (r.leader_id, r.follower_id):
            if mid not in metadata:
                raise UnknownMarket(f"no metadata for market {mid!r}")
    cache = (ResponseCache(config.cache_path)
             if config.cache_path is not None and config.mode != "stub" else None)

    def score_one(r):
        key = (r.leader_id, r.follower_id)
        try:
            return key, score_pair(config, (metadata[r.leader_id],
                                            metadata[r.follower_id]), cache), None
        except ScoringFailed as exc:
            return key, failure_verdict(exc.reason), exc.reason

    verdicts: dict[tuple[str, str], SemanticVerdict] = {}
    failures: list[dict] = []
    if not results:
        return verdicts, failures
    workers = min(config.concurrency_limit, len(results))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        for key, verdict, failed in pool.map(score_one, results):
            verdicts[key] = verdict
            if failed is not None:
                failures.append({"leader_id": key[0], "follower_id": key[1],
                                 "reason": failed})
    failures.sort(key=lambda f: (f["leader_id"], f["follower_id"]))
    return verdicts, failures


def rerank(candidates, verdicts: Mapping[tuple[str, str], SemanticVerdict],
           m: int):
    """Reorder statistical candidates by verdict strength, then truncate.

    Sort is by descending strength ordinal with the original statistical
    order breaking ties (the sort is stable), so with uniform verdicts the
    ranking is unchanged.  Every candidate must have a verdict.
    """
    from .granger import RankedCandidates  # local import to avoid a cycle

    if m < 1:
        raise InvalidParameter(f"m must be >= 1, got {m}")
    results = list(candidates)
    for r in results:
        if (r.leader_id, r.follower_id) not in verdicts:
            raise InvalidParameter(
                f"no verdict for pair ({r.leader_id} -> {r.follower_id})")
    reordered = sorted(
        results,
        key=lambda r: -strength_rank(verdicts[(r.leader_id, r.follower_id)].strength))
    window_id = getattr(candidates, "window_id", 0)
    return RankedCandidates(tuple(reordered[:m]), window_id=window_id)
