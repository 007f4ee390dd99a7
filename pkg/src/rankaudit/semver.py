"""Semantic Versioning 2.0.0 parsing, precedence, and release-history flags."""

from __future__ import annotations

import re
from dataclasses import dataclass
from datetime import datetime, timedelta
from typing import Sequence, Union

Identifier = Union[int, str]

#: "Six months" for the recency and age flags.
SIX_MONTHS = timedelta(days=183)

_IDENT_CHARS = re.compile(r"^[0-9A-Za-z-]+$")


class SemverError(ValueError):
    """Raised for strings outside the SemVer grammar; ``reason`` is a short code."""

    def __init__(self, text: str, reason: str, detail: str = ""):
        self.text = text
        self.reason = reason
        msg = f"{text!r} is not SemVer ({reason})"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


@dataclass(frozen=True)
class Version:
    major: int
    minor: int
    patch: int
    prerelease: tuple[Identifier, ...] = ()
    build: tuple[str, ...] | None = None

    @property
    def is_prerelease(self) -> bool:
        return bool(self.prerelease)

    @property
    def core(self) -> tuple[int, int, int]:
        return (self.major, self.minor, self.patch)

    def __str__(self) -> str:
        text = f"{self.major}.{self.minor}.{self.patch}"
        if self.prerelease:
            text += "-" + ".".join(str(i) for i in self.prerelease)
        if self.build is not None:
            text += "+" + ".".join(self.build)
        return text


def _numeric(text: str, part: str, original: str) -> int:
    if not text:
        raise SemverError(original, "empty_identifier", f"empty {part}")
    if not text.isascii() or not text.isdigit():
        raise SemverError(original, "illegal_character", f"{part} {text!r} is not numeric")
    if len(text) > 1 and text[0] == "0":
        raise SemverError(original, "leading_zero", f"{part} {text!r}")
    return int(text)


def _identifiers(text: str, part: str, original: str) -> list[str]:
    idents = text.split(".")
    for ident in idents:
        if not ident:
            raise SemverError(original, "empty_identifier", f"empty {part} identifier")
        if not ident.isascii() or not _IDENT_CHARS.match(ident):
            raise SemverError(original, "illegal_character", f"{part} identifier {ident!r}")
    return idents


def parse_semver(text: str) -> Version:
    """Parse ``text`` strictly under SemVer 2.0.0; raise :class:`SemverError` otherwise."""
    if not isinstance(text, str) or not text:
        raise SemverError(str(text), "empty")
    rest, plus, build_text = text.partition("+")
    build = None
    if plus:
        build = tuple(_identifiers(build_text, "build", text))
    core_text, dash, pre_text = rest.partition("-")
    prerelease: tuple[Identifier, ...] = ()
    if dash:
        parsed: list[Identifier] = []
        for ident in _identifiers(pre_text, "prerelease", text):
            if ident.isdigit():
                parsed.append(_numeric(ident, "prerelease", text))
            else:
                parsed.append(ident)
        prerelease = tuple(parsed)
    parts = core_text.split(".")
    if len(parts) != 3:
        raise SemverError(text, "component_count", f"{len(parts)} core components")
    major, minor, patch = (_numeric(p, n, text) for p, n in zip(parts, ("major", "minor", "patch")))
    return Version(major, minor, patch, prerelease, build)


def is_semver(text: str) -> bool:
    try:
        parse_semver(text)
    except SemverError:
        return False
    return True


def _cmp(a, b) -> int:
    return (a > b) - (a < b)


def compare(a: Version, b: Version) -> int:
    """SemVer precedence: -1 if a < b, 0 if equal, 1 if a > b. Build metadata is ignored."""
    c = _cmp(a.core, b.core)
    if c:
        return c
    if not a.prerelease or not b.prerelease:
        # a prerelease sorts before its release
        return _cmp(not a.prerelease, not b.prerelease)
    for x, y in zip(a.prerelease, b.prerelease):
        x_num, y_num = isinstance(x, int), isinstance(y, int)
        if x_num and y_num:
            c = _cmp(x, y)
        elif x_num != y_num:
            c = -1 if x_num else 1
        else:
            c = _cmp(x, y)
        if c:
            return c
    return _cmp(len(a.prerelease), len(b.prerelease))


@dataclass(frozen=True)
class ReleaseFlags:
    has_multiple_versions: bool = False
    follows_semver: bool = False
    recent_release: bool = False
    not_brand_new: bool = False
    ge_1_0_0: bool = False
    all_prereleases: bool = False


def release_flags(releases: Sequence, now: datetime) -> ReleaseFlags:
    """Derive the six release-history flags from releases sorted by publish time.

    Each release needs ``version_text`` and ``published_at``.
    """
    if not releases:
        return ReleaseFlags()
    parsed = []
    for r in releases:
        try:
            parsed.append(parse_semver(r.version_text))
        except SemverError:
            parsed.append(None)
    every_parses = all(v is not None for v in parsed)
    valid = [v for v in parsed if v is not None]
    return ReleaseFlags(
        has_multiple_versions=len(releases) >= 2,
        follows_semver=every_parses,
        recent_release=now - releases[-1].published_at <= SIX_MONTHS,
        not_brand_new=now - releases[0].published_at >= SIX_MONTHS,
        ge_1_0_0=any(not v.prerelease and v.major >= 1 for v in valid),
        all_prereleases=every_parses and all(v.prerelease for v in valid),
    )
