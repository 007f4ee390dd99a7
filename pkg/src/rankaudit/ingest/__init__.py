from rankaudit.ingest.feeds import FeedEntry, fetch_feed, parse_feed
from rankaudit.ingest.forge import fetch_repo_metadata
from rankaudit.ingest.librariesio import (
    ReferenceProjectRecord,
    enrich_snapshot,
    fetch_reference_record,
    parity_report,
)
from rankaudit.ingest.osv import OsvRecord, load_osv_labels, read_osv_records
from rankaudit.ingest.pypi import fetch_package_metadata
from rankaudit.ingest.transport import (
    CountingTransport,
    FetchPolicy,
    Fetcher,
    RateLimiter,
    Response,
)

__all__ = [
    "CountingTransport",
    "FeedEntry",
    "FetchPolicy",
    "Fetcher",
    "OsvRecord",
    "RateLimiter",
    "ReferenceProjectRecord",
    "Response",
    "enrich_snapshot",
    "fetch_feed",
    "fetch_package_metadata",
    "fetch_reference_record",
    "fetch_repo_metadata",
    "load_osv_labels",
    "parity_report",
    "parse_feed",
    "read_osv_records",
]
