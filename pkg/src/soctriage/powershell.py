"""Deterministic indicator rubric for shell command lines.

Rubric v1 flags six indicators. A command is malicious when at least two fire.
An ``-EncodedCommand`` payload is decoded (UTF-16LE base64, as PowerShell
expects) and scanned for the other indicators too. High base64 density only
counts when no encoded-command flag is present, so an encoded blob is not
scored twice.
"""

from __future__ import annotations

import base64
import binascii
import re
from dataclasses import dataclass
from enum import Enum

RUBRIC_VERSION = "1"
BASE64_DENSITY_MIN = 0.6
_B64_TOKEN_MIN_LEN = 20


class Indicator(str, Enum):
    EncodedCommand = "encoded_command"
    DownloadCradle = "download_cradle"
    RunKeyPersistence = "run_key_persistence"
    ExecutionPolicyBypass = "execution_policy_bypass"
    HiddenWindow = "hidden_window"
    Base64Density = "base64_density"


PHRASES = {
    Indicator.EncodedCommand: "encoded command",
    Indicator.DownloadCradle: "download-and-execute cradle",
    Indicator.RunKeyPersistence: "registry-based persistence",
    Indicator.ExecutionPolicyBypass: "execution-policy bypass",
    Indicator.HiddenWindow: "hidden window",
    Indicator.Base64Density: "high base64 density",
}

_FLAG = re.compile(r"(?:^|\s)[-/]([A-Za-z]+)(?:[\s:]+(?!-)(\"[^\"]*\"|'[^']*'|\S+))?")
_INTERPRETER = re.compile(
    r"(?i)(?:powershell(?:_ise)?|pwsh|cmd|bash|zsh|sh|wscript|cscript)(?:\.exe)?(?=\s|$|[\"'])")
_DOWNLOAD = re.compile(
    r"(?i)(downloadstring|downloadfile|downloaddata|net\.webclient|invoke-webrequest|\biwr\b"
    r"|invoke-restmethod|\birm\b|start-bitstransfer|\bcurl\b|\bwget\b|bitsadmin)")
_EXECUTE = re.compile(r"(?i)(\biex\b|invoke-expression|start-process|\|\s*&|&\s*\(|\|\s*(?:ba)?sh\b)")
_RUN_KEY = re.compile(r"(?i)currentversion\\+run(?:once)?\b")
_SET_POLICY = re.compile(r"(?i)set-executionpolicy\s+(?:-\w+\s+)?(?:bypass|unrestricted)")
_B64_TOKEN = re.compile(r"[A-Za-z0-9+/]{%d,}={0,2}" % _B64_TOKEN_MIN_LEN)


@dataclass(frozen=True)
class PowerShellVerdict:
    malicious: bool
    indicators: tuple[Indicator, ...]

    @property
    def rationale(self) -> str:
        if not self.indicators:
            return "No malicious indicators found in the command line."
        phrases = [PHRASES[i] for i in self.indicators]
        text = phrases[0] if len(phrases) == 1 else ", ".join(phrases[:-1]) + " and " + phrases[-1]
        text = text[0].upper() + text[1:]
        if self.malicious:
            return f"{text} consistent with malicious behavior."
        return f"{text} alone is not sufficient to classify the command as malicious."


def _is_prefix(flag: str, full: str, min_len: int = 1) -> bool:
    return len(flag) >= min_len and full.startswith(flag)


def _flags(text: str):
    for m in _FLAG.finditer(text):
        yield m.group(1).lower(), (m.group(2) or "").strip("\"'")


def _decode(blob: str) -> str | None:
    try:
        raw = base64.b64decode(blob + "=" * (-len(blob) % 4), validate=True)
    except (binascii.Error, ValueError):
        return None
    for enc in ("utf-16-le", "utf-8"):
        try:
            text = raw.decode(enc)
        except UnicodeDecodeError:
            continue
        if text.isprintable() or all(c.isprintable() or c.isspace() for c in text):
            return text
    return None


def _scan(text: str) -> tuple[set[Indicator], list[str]]:
    found: set[Indicator] = set()
    payloads: list[str] = []
    for flag, value in _flags(text):
        if flag == "ec" or (flag[0] == "e" and _is_prefix(flag, "encodedcommand")):
            found.add(Indicator.EncodedCommand)
            if value:
                payloads.append(value)
        elif flag in ("ep", "ex", "exec") or _is_prefix(flag, "executionpolicy", 3):
            if value.lower() in ("bypass", "unrestricted"):
                found.add(Indicator.ExecutionPolicyBypass)
        elif flag[0] == "w" and _is_prefix(flag, "windowstyle"):
            if value.lower() == "hidden":
                found.add(Indicator.HiddenWindow)
    if _DOWNLOAD.search(text) and _EXECUTE.search(text):
        found.add(Indicator.DownloadCradle)
    if _RUN_KEY.search(text):
        found.add(Indicator.RunKeyPersistence)
    if _SET_POLICY.search(text):
        found.add(Indicator.ExecutionPolicyBypass)
    return found, payloads


def base64_density(cmdline: str) -> float:
    """Share of non-space payload characters (after the interpreter) inside long base64 runs."""
    m = _INTERPRETER.search(cmdline)
    payload = cmdline[m.end():] if m else cmdline
    compact = "".join(payload.split())
    if not compact:
        return 0.0
    covered = sum(len(t) for t in _B64_TOKEN.findall(payload))
    return covered / len(compact)


def classify_powershell(cmdline: str) -> PowerShellVerdict:
    found, payloads = _scan(cmdline)
    for blob in payloads:
        decoded = _decode(blob)
        if decoded:
            inner, _ = _scan(decoded)
            found |= inner - {Indicator.EncodedCommand}
    if Indicator.EncodedCommand not in found and base64_density(cmdline) >= BASE64_DENSITY_MIN:
        found.add(Indicator.Base64Density)
    ordered = tuple(i for i in Indicator if i in found)
    malicious = len(ordered) >= 2 or {Indicator.RunKeyPersistence, Indicator.EncodedCommand} <= found
    return PowerShellVerdict(malicious, ordered)
