from datetime import timedelta

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import NOW, ago
from rankaudit.model import Release
from rankaudit.semver import (
    SIX_MONTHS,
    ReleaseFlags,
    SemverError,
    Version,
    compare,
    is_semver,
    parse_semver,
    release_flags,
)
from strategies import versions

# (text, None) for valid strings, (text, reason) for rejected ones.
VECTORS = [
    ("0.0.0", None),
    ("1.2.3", None),
    ("10.20.30", None),
    ("1.1.2-prerelease+meta", None),
    ("1.1.2+meta", None),
    ("1.1.2+meta-valid", None),
    ("1.0.0-alpha", None),
    ("1.0.0-alpha.beta.1", None),
    ("1.0.0-alpha0.valid", None),
    ("1.0.0-alpha.0valid", None),
    ("1.0.0-rc.1+build.1", None),
    ("10.2.3-DEV-SNAPSHOT", None),
    ("1.2.3----RC-SNAPSHOT.12.9.1--.12+788", None),
    ("1.0.0+0.build.1-rc.10000aaa-kk-0.1", None),
    ("1.0.0-0A.is.legal", None),
    ("1.2.3+build.01", None),
    ("99999999999999999999999.999999999999999999.99999999999999999", None),
    ("", "empty"),
    ("1", "component_count"),
    ("1.2", "component_count"),
    ("1.2.3.4", "component_count"),
    ("+invalid", "component_count"),
    ("-invalid", "component_count"),
    ("07.1.2", "leading_zero"),
    ("1.01.1", "leading_zero"),
    ("1.1.01", "leading_zero"),
    ("1.2.3-0123", "leading_zero"),
    ("1.2.3-alpha.01", "leading_zero"),
    ("1.2.3-", "empty_identifier"),
    ("1.2.3-alpha..1", "empty_identifier"),
    ("1.2.3+", "empty_identifier"),
    ("1.2.3-alpha_beta", "illegal_character"),
    ("1.2.3-béta", "illegal_character"),
    ("v1.2.3", "illegal_character"),
    (" 1.2.3", "illegal_character"),
    ("1.2.3 ", "illegal_character"),
    ("1.2.x", "illegal_character"),
]


@pytest.mark.parametrize("text,reason", VECTORS, ids=[repr(t) for t, _ in VECTORS])
def test_conformance_vector(text, reason):
    if reason is None:
        assert is_semver(text)
        assert str(parse_semver(text)) == text
    else:
        with pytest.raises(SemverError) as info:
            parse_semver(text)
        assert info.value.reason == reason


def test_vector_suite_is_large_enough():
    assert len(VECTORS) >= 30
    assert {r for _, r in VECTORS} >= {
        None, "empty", "component_count", "leading_zero", "empty_identifier", "illegal_character"
    }


def test_parse_examples():
    assert parse_semver("1.2.3") == Version(1, 2, 3, (), None)
    assert parse_semver("1.0.0-alpha.1").prerelease == ("alpha", 1)


@pytest.mark.parametrize(
    "a,b,expected",
    [
        ("1.0.0-alpha", "1.0.0", -1),
        ("1.0.0-alpha.1", "1.0.0-alpha.beta", -1),
        ("2.1.0+build.5", "2.1.0", 0),
        ("1.0.0", "2.0.0", -1),
        ("2.1.1", "2.1.0", 1),
        ("1.0.0-alpha", "1.0.0-alpha.1", -1),
        ("1.0.0-beta.2", "1.0.0-beta.11", -1),
        ("1.0.0-rc.1", "1.0.0-beta.11", 1),
    ],
)
def test_compare_examples(a, b, expected):
    assert compare(parse_semver(a), parse_semver(b)) == expected
    assert compare(parse_semver(b), parse_semver(a)) == -expected


def test_precedence_chain_from_the_standard():
    chain = ["1.0.0-alpha", "1.0.0-alpha.1", "1.0.0-alpha.beta", "1.0.0-beta",
             "1.0.0-beta.2", "1.0.0-beta.11", "1.0.0-rc.1", "1.0.0"]
    parsed = [parse_semver(t) for t in chain]
    for i, a in enumerate(parsed):
        for j, b in enumerate(parsed):
            assert compare(a, b) == (i > j) - (i < j)


def oracle_key(v: Version):
    # numeric identifiers sort before alphanumeric ones; a missing prerelease sorts last
    pre = tuple((0, i, "") if isinstance(i, int) else (1, 0, i) for i in v.prerelease)
    return (v.major, v.minor, v.patch, 0 if v.prerelease else 1, pre)


# the 10,000-triple sweep lives in the acceptance suite (seeded, much faster);
# this copy exists for hypothesis shrinking when something breaks
@settings(max_examples=1500)
@given(versions, versions, versions)
def test_total_order_on_random_triples(a, b, c):
    ab, ba = compare(a, b), compare(b, a)
    assert compare(a, a) == 0
    assert ab == -ba
    assert ab == (oracle_key(a) > oracle_key(b)) - (oracle_key(a) < oracle_key(b))
    if ab <= 0 and compare(b, c) <= 0:
        assert compare(a, c) <= 0


@settings(max_examples=500)
@given(versions)
def test_render_parse_round_trip(v):
    assert parse_semver(str(v)) == v


# -- release flags --------------------------------------------------------------


def test_single_recent_release():
    flags = release_flags([Release("0.6.7", ago(10))], NOW)
    assert flags == ReleaseFlags(
        has_multiple_versions=False,
        follows_semver=True,
        recent_release=True,
        not_brand_new=False,
        ge_1_0_0=False,
        all_prereleases=False,
    )


def test_old_prereleases():
    flags = release_flags([Release("1.0.0-rc.1", ago(200)), Release("1.0.0-rc.2", ago(200))], NOW)
    assert flags.all_prereleases and flags.not_brand_new and flags.has_multiple_versions
    assert not flags.recent_release
    assert not flags.ge_1_0_0


def test_no_releases():
    assert release_flags([], NOW) == ReleaseFlags()


def test_six_month_boundary_is_inclusive():
    flags = release_flags([Release("1.0.0", NOW - SIX_MONTHS)], NOW)
    assert flags.recent_release and flags.not_brand_new
    flags = release_flags([Release("1.0.0", NOW - SIX_MONTHS - timedelta(seconds=1))], NOW)
    assert not flags.recent_release


def test_unparseable_release_blocks_semver_and_prerelease_flags():
    flags = release_flags([Release("1.0.0-rc.1", ago(5)), Release("2024.1", ago(1))], NOW)
    assert not flags.follows_semver
    assert not flags.all_prereleases


def test_ge_1_0_0_ignores_prereleases_and_unparseable():
    assert not release_flags([Release("1.0.0-rc.1", ago(5))], NOW).ge_1_0_0
    assert not release_flags([Release("2024.1", ago(5))], NOW).ge_1_0_0
    assert release_flags([Release("0.9.0", ago(9)), Release("1.0.0", ago(5))], NOW).ge_1_0_0


@given(st.lists(st.integers(0, 2000), min_size=1, max_size=4), st.integers(0, 400), st.integers(1, 400))
def test_not_brand_new_is_monotone_in_now(days, shift, later):
    days = sorted(days, reverse=True)
    rel = [Release(f"1.0.{i}", ago(d)) for i, d in enumerate(days)]
    t = NOW + timedelta(days=shift)
    if release_flags(rel, t).not_brand_new:
        assert release_flags(rel, t + timedelta(days=later)).not_brand_new
