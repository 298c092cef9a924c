"""Clients for the external caption generator.

The generator is out-of-process by design: an HTTP endpoint (POST /caption
with a JSON request) or a line-delimited stdin/stdout subprocess.  A
deterministic stub ships with the package so the whole pipeline can run
hermetically; ``python -m polycap.generator`` serves the stub over
stdin/stdout for exercising the subprocess path.

Stub contract: if the prompt carries a concept segment the stub answers
with the last concept; otherwise, with the first comma-free chunk of the
caption segment; otherwise with the fixed string "an image".
"""

from __future__ import annotations

import json
import shlex
import subprocess
import sys
import time
import urllib.error
import urllib.request
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from .core import RunConfig
from .errors import EndpointUnreachableError, MalformedResponseError
from .prompting import CAPTIONS_LEAD, CONCEPTS_LEAD

ATTEMPTS = 3


@dataclass(frozen=True)
class GeneratorRequest:
    image_ref: str
    prompt: str
    beam_size: int = 5
    length_penalty: float = 1.0
    max_tokens: int = 25

    @classmethod
    def from_config(cls, image_ref: str, prompt: str, cfg: RunConfig) -> "GeneratorRequest":
        return cls(
            image_ref=image_ref,
            prompt=prompt,
            beam_size=cfg.beam_size,
            length_penalty=cfg.length_penalty,
            max_tokens=cfg.max_tokens,
        )

    def to_json(self) -> dict:
        return {
            "image_ref": self.image_ref,
            "prompt": self.prompt,
            "beam_size": self.beam_size,
            "length_penalty": self.length_penalty,
            "max_tokens": self.max_tokens,
        }


@dataclass(frozen=True)
class GeneratorResponse:
    caption: str = ""
    error: str = ""

    @property
    def failed(self) -> bool:
        return bool(self.error)


def _segment_payload(prompt: str, lead: str) -> str | None:
    start = prompt.find(lead)
    if start < 0:
        return None
    start += len(lead)
    end = prompt.find(".", start)
    return prompt[start : end if end >= 0 else len(prompt)]


def stub_caption(prompt: str) -> str:
    """Deterministic stand-in for a real captioner; see module docstring."""
    concepts = _segment_payload(prompt, CONCEPTS_LEAD)
    if concepts is not None:
        return concepts.split(", ")[-1].strip()
    captions = _segment_payload(prompt, CAPTIONS_LEAD)
    if captions is not None:
        return captions.split(",")[0].strip()
    return "an image"


class StubGenerator:
    """In-process deterministic generator."""

    def generate(self, request: GeneratorRequest) -> GeneratorResponse:
        return GeneratorResponse(caption=stub_caption(request.prompt))

    def close(self) -> None:
        pass


class HttpGenerator:
    """POSTs each request to <endpoint>/caption, retrying with exponential
    backoff (3 attempts) on connection errors and non-200 statuses."""

    def __init__(self, endpoint: str, timeout: float = 30.0, backoff: float = 0.5):
        self.url = endpoint.rstrip("/") + "/caption"
        self.timeout = timeout
        self.backoff = backoff
        self.unreachable = 0  # requests that never got any HTTP response

    def _post_once(self, body: bytes) -> GeneratorResponse:
        req = urllib.request.Request(
            self.url, data=body, headers={"Content-Type": "application/json"}, method="POST"
        )
        with urllib.request.urlopen(req, timeout=self.timeout) as resp:
            payload = resp.read()
        try:
            obj = json.loads(payload.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise MalformedResponseError(f"bad generator response: {exc}") from exc
        if "error" in obj and obj["error"]:
            return GeneratorResponse(error=str(obj["error"]))
        if "caption" not in obj:
            raise MalformedResponseError(f"generator response lacks 'caption': {obj!r}")
        return GeneratorResponse(caption=str(obj["caption"]))

    def generate(self, request: GeneratorRequest) -> GeneratorResponse:
        body = json.dumps(request.to_json(), ensure_ascii=False).encode("utf-8")
        last_error = ""
        got_response = False
        for attempt in range(ATTEMPTS):
            try:
                resp = self._post_once(body)
                got_response = True
                if resp.failed:
                    return resp  # a definitive error payload is not retried as transport noise
                return resp
            except MalformedResponseError as exc:
                got_response = True
                last_error = str(exc)
            except urllib.error.HTTPError as exc:
                got_response = True
                last_error = f"HTTP {exc.code}"
            except (urllib.error.URLError, OSError, TimeoutError) as exc:
                last_error = f"unreachable: {exc}"
            if attempt < ATTEMPTS - 1:
                time.sleep(self.backoff * (2**attempt))
        if not got_response:
            self.unreachable += 1
        return GeneratorResponse(error=last_error or "request failed")

    def close(self) -> None:
        pass


class SubprocessGenerator:
    """Speaks one JSON request per stdin line, one JSON response per stdout
    line, to a long-lived child process.  Inherently serial."""

    def __init__(self, command: str):
        try:
            self.proc = subprocess.Popen(
                shlex.split(command),
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                encoding="utf-8",
            )
        except OSError as exc:
            raise EndpointUnreachableError(f"cannot start generator command: {exc}") from exc

    def generate(self, request: GeneratorRequest) -> GeneratorResponse:
        assert self.proc.stdin and self.proc.stdout
        try:
            self.proc.stdin.write(json.dumps(request.to_json(), ensure_ascii=False) + "\n")
            self.proc.stdin.flush()
            line = self.proc.stdout.readline()
        except (OSError, ValueError) as exc:
            raise EndpointUnreachableError(f"generator process pipe broke: {exc}") from exc
        if not line:
            raise EndpointUnreachableError("generator process closed its stdout")
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise MalformedResponseError(f"bad generator line: {line!r}") from exc
        if obj.get("error"):
            return GeneratorResponse(error=str(obj["error"]))
        return GeneratorResponse(caption=str(obj.get("caption", "")))

    def close(self) -> None:
        if self.proc.stdin:
            self.proc.stdin.close()
        self.proc.wait(timeout=10)


def generate_all(client, requests: list[GeneratorRequest], concurrency: int = 4) -> list[GeneratorResponse]:
    """Run every request, preserving input order in the output.

    HTTP clients may overlap up to ``concurrency`` requests; the stub and
    subprocess clients run serially.
    """
    if isinstance(client, HttpGenerator) and concurrency > 1 and len(requests) > 1:
        with ThreadPoolExecutor(max_workers=concurrency) as pool:
            return list(pool.map(client.generate, requests))
    return [client.generate(req) for req in requests]


def serve_stdio() -> None:
    """Stub generator as a stdin/stdout subprocess: one JSON per line."""
    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
            response = {"caption": stub_caption(obj.get("prompt", ""))}
        except json.JSONDecodeError as exc:
            response = {"error": f"bad request: {exc}"}
        sys.stdout.write(json.dumps(response, ensure_ascii=False) + "\n")
        sys.stdout.flush()


if __name__ == "__main__":
    serve_stdio()
