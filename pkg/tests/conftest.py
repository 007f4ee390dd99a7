from datetime import datetime, timedelta, timezone
from pathlib import Path

import pytest
from hypothesis import settings

FIXTURES = Path(__file__).parent / "fixtures"
NOW = datetime(2024, 12, 1, tzinfo=timezone.utc)

settings.register_profile("ci", deadline=None, print_blob=True)
settings.load_profile("ci")


def ago(days: float) -> datetime:
    return NOW - timedelta(days=days)


@pytest.fixture
def fixtures() -> Path:
    return FIXTURES


@pytest.fixture
def now() -> datetime:
    return NOW
