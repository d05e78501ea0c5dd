"""Foundation-model client with live, record, replay and stub modes.

Every other module talks to FMs exclusively through this client so the whole
pipeline stays testable offline: ``stub`` returns a canned deterministic
response, ``replay`` serves committed fixtures keyed by request content,
``record`` passes through to the provider and writes the fixture, ``live``
just calls the provider.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

from .errors import FixtureMiss, ProviderError, ProviderTimeout

MODES = ("live", "replay", "record", "stub")


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


@dataclass(frozen=True)
class ChatRequest:
    system: str
    user: str
    attachments: tuple[bytes, ...] = ()
    temperature: float = 0.0

    @property
    def request_key(self) -> str:
        payload = json.dumps(
            {
                "system": self.system,
                "user": self.user,
                "attachments": [_sha256(a) for a in self.attachments],
            },
            sort_keys=True,
            ensure_ascii=False,
        )
        return _sha256(payload.encode("utf-8"))


@dataclass(frozen=True)
class ChatResponse:
    text: str
    provider_meta: tuple[tuple[str, str], ...] = ()


@dataclass
class FMConfig:
    mode: str = "stub"
    provider_url: str = ""
    model: str = ""
    api_key: str = ""
    timeout: float = 60.0
    fixtures_dir: Path | None = None

    @classmethod
    def from_env(cls, env=os.environ) -> "FMConfig":
        fixtures = env.get("EVALSYNTH_FM_FIXTURES", "")
        return cls(
            mode=env.get("EVALSYNTH_FM_MODE", "stub"),
            provider_url=env.get("EVALSYNTH_FM_URL", ""),
            model=env.get("EVALSYNTH_FM_MODEL", ""),
            api_key=env.get("EVALSYNTH_FM_API_KEY", ""),
            fixtures_dir=Path(fixtures) if fixtures else None,
        )


class FMClient:
    """Uniform chat-completion client; see module docstring for modes."""

    def __init__(self, config: FMConfig | None = None):
        self.config = config or FMConfig()
        if self.config.mode not in MODES:
            raise ValueError(f"unknown fm mode: {self.config.mode}")

    @property
    def mode(self) -> str:
        return self.config.mode

    @property
    def deterministic(self) -> bool:
        """True when repeated calls cannot observe provider nondeterminism."""
        return self.config.mode in ("stub", "replay")

    def complete(self, req: ChatRequest) -> ChatResponse:
        mode = self.config.mode
        if mode == "stub":
            return self._stub(req)
        if mode == "replay":
            return self._replay(req)
        response = self._call_provider(req)
        if mode == "record":
            self._write_fixture(req, response)
        return response

    # --- stub ------------------------------------------------------------

    def _stub(self, req: ChatRequest) -> ChatResponse:
        return ChatResponse(
            text=f"STUB-RESPONSE key={req.request_key[:16]}",
            provider_meta=(("mode", "stub"),),
        )

    # --- fixtures ----------------------------------------------------------

    def _fixture_path(self, request_key: str) -> Path:
        if self.config.fixtures_dir is None:
            raise FixtureMiss(request_key)
        return self.config.fixtures_dir / f"{request_key}.fixture.txt"

    def _replay(self, req: ChatRequest) -> ChatResponse:
        path = self._fixture_path(req.request_key)
        if not path.is_file():
            raise FixtureMiss(req.request_key)
        body = path.read_text(encoding="utf-8")
        marker = "\n---\n"
        split = body.find(marker)
        if split < 0:
            raise ProviderError(f"fixture {path.name} is missing the header separator")
        return ChatResponse(
            text=body[split + len(marker) :],
            provider_meta=(("mode", "replay"), ("fixture", path.name)),
        )

    def _write_fixture(self, req: ChatRequest, response: ChatResponse) -> None:
        path = self._fixture_path(req.request_key)
        path.parent.mkdir(parents=True, exist_ok=True)
        header = "\n".join(
            [
                f"key: {req.request_key}",
                f"model: {self.config.model}",
                f"system: {json.dumps(req.system, ensure_ascii=False)}",
                f"user: {json.dumps(req.user, ensure_ascii=False)}",
            ]
        )
        content = header + "\n---\n" + response.text
        # Write-then-rename keeps concurrent readers from seeing a torn file.
        fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                fh.write(content)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise

    # --- provider -----------------------------------------------------------

    def _call_provider(self, req: ChatRequest) -> ChatResponse:
        import requests

        if not self.config.provider_url:
            raise ProviderError("no provider url configured")
        payload = {
            "model": self.config.model,
            "temperature": req.temperature,
            "messages": [
                {"role": "system", "content": req.system},
                {"role": "user", "content": req.user},
            ],
        }
        headers = {"Content-Type": "application/json"}
        if self.config.api_key:
            headers["Authorization"] = f"Bearer {self.config.api_key}"
        try:
            resp = requests.post(
                self.config.provider_url,
                json=payload,
                headers=headers,
                timeout=self.config.timeout,
            )
        except requests.Timeout as exc:
            raise ProviderTimeout(str(exc)) from exc
        except requests.RequestException as exc:
            raise ProviderError(str(exc)) from exc
        if resp.status_code != 200:
            raise ProviderError(f"provider returned HTTP {resp.status_code}: {resp.text[:200]}")
        try:
            data = resp.json()
            text = data["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise ProviderError(f"unexpected provider response shape: {exc}") from exc
        return ChatResponse(text=text, provider_meta=(("mode", "live"), ("model", self.config.model)))


def stub_client() -> FMClient:
    return FMClient(FMConfig(mode="stub"))
