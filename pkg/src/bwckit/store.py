"""Embedded, file-backed incident store with secondary indexes.

Each table is an append-only JSONL log; a put appends exactly one line,
and loading tolerates a truncated final line, so a crash mid-write leaves
the store at the previous consistent state. Secondary indexes (theme,
role, incident ref, indicator buckets) are derived in memory from the
loaded records, which makes "record and index update atomically" hold by
construction: there is no index state separate from the log.

Incident records upsert by (asset_id, revision). Queries intersect index
candidate sets, post-filter exactly, and order deterministically by
(updated desc, asset_id asc, revision desc). An instrumentation counter
tracks how many records each query actually examined, so tests can assert
that indexed lookups never degrade into full scans.
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Iterator

FORMAT_NAME = "bwckit-store"
FORMAT_VERSION = 1

INDICATOR_BUCKETS = 10


class StoreFormatError(RuntimeError):
    """The on-disk layout is missing or from an incompatible version."""


class ReferentialError(ValueError):
    """A record references an asset or transcript the store does not hold."""


@dataclass(frozen=True)
class IncidentRecord:
    """One indexed incident row: who spoke, what it was about, how it scored."""

    asset_id: str
    revision: int
    incident_ref: str | None
    roles: dict[int, str]
    summary_ref: str
    indicator_scores: dict[str, float]
    themes: tuple[str, ...]
    created: float = 0.0
    updated: float = 0.0

    @property
    def key(self) -> str:
        return f"{self.asset_id}@{self.revision}"

    def normalized(self) -> "IncidentRecord":
        """Lowercase and deduplicate themes, preserving first occurrence."""
        seen: dict[str, None] = {}
        for theme in self.themes:
            seen.setdefault(theme.strip().casefold(), None)
        return replace(self, themes=tuple(t for t in seen if t))

    def to_doc(self) -> dict:
        return {
            "asset_id": self.asset_id,
            "revision": self.revision,
            "incident_ref": self.incident_ref,
            "roles": {str(k): v for k, v in self.roles.items()},
            "summary_ref": self.summary_ref,
            "indicator_scores": self.indicator_scores,
            "themes": list(self.themes),
            "created": self.created,
            "updated": self.updated,
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "IncidentRecord":
        return cls(
            asset_id=doc["asset_id"],
            revision=int(doc["revision"]),
            incident_ref=doc.get("incident_ref"),
            roles={int(k): v for k, v in doc.get("roles", {}).items()},
            summary_ref=doc.get("summary_ref", ""),
            indicator_scores=dict(doc.get("indicator_scores", {})),
            themes=tuple(doc.get("themes", [])),
            created=float(doc.get("created", 0.0)),
            updated=float(doc.get("updated", 0.0)),
        )


@dataclass(frozen=True)
class QueryFilter:
    theme: str | None = None
    role: str | None = None
    indicator: tuple[str, float, float] | None = None  # (category, min, max)
    incident_ref: str | None = None
    offset: int = 0
    limit: int = 50

    def validate(self) -> None:
        if self.indicator is not None:
            _, lo, hi = self.indicator
            if not (0.0 <= lo <= hi <= 1.0):
                raise ValueError("indicator range must satisfy 0 <= min <= max <= 1")
        if self.limit < 1:
            raise ValueError("limit must be >= 1")
        if self.offset < 0:
            raise ValueError("offset must be >= 0")


@dataclass
class QueryPage:
    records: list[IncidentRecord]
    total: int
    offset: int
    limit: int


class _Table:
    """Append-log JSONL table: last line per key wins, partial tail ignored."""

    def __init__(self, path: Path):
        self.path = path
        self.rows: dict[str, dict] = {}
        self._fh = None
        if path.exists():
            with open(path, "r", encoding="utf-8") as fh:
                for line in fh:
                    if not line.endswith("\n"):
                        break  # truncated write from a crash; drop it
                    line = line.strip()
                    if not line:
                        continue
                    try:
                        entry = json.loads(line)
                    except json.JSONDecodeError:
                        break
                    self.rows[entry["k"]] = entry["v"]

    def put(self, key: str, doc: dict) -> None:
        line = json.dumps({"k": key, "v": doc}, ensure_ascii=False)
        if self._fh is None:
            self._fh = open(self.path, "a", encoding="utf-8")
        self._fh.write(line + "\n")
        self._fh.flush()
        self.rows[key] = doc

    def get(self, key: str) -> dict | None:
        return self.rows.get(key)

    def __contains__(self, key: str) -> bool:
        return key in self.rows

    def items(self) -> Iterator[tuple[str, dict]]:
        return iter(self.rows.items())

    def __len__(self) -> int:
        return len(self.rows)

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None


_TABLES = (
    "assets",
    "transcripts",
    "summaries",
    "incidents",
    "corrections",
    "reports",
    "checkpoints",
    "streams",
)


class IncidentStore:
    """Directory-backed store for one corpus run.

    Single-writer per process (guarded by a lock); readers share the
    in-memory state. ``clock`` is injectable so tests get deterministic
    created/updated timestamps.
    """

    def __init__(self, root: str | Path, clock: Callable[[], float] = time.time):
        self.root = Path(root)
        self.clock = clock
        self._lock = threading.RLock()
        self.root.mkdir(parents=True, exist_ok=True)
        header = self.root / "format.json"
        if header.exists():
            meta = json.loads(header.read_text(encoding="utf-8"))
            if meta.get("format") != FORMAT_NAME or meta.get("version") != FORMAT_VERSION:
                raise StoreFormatError(f"unsupported store layout at {self.root}: {meta}")
        else:
            header.write_text(
                json.dumps({"format": FORMAT_NAME, "version": FORMAT_VERSION}) + "\n",
                encoding="utf-8",
            )
        self._tables = {name: _Table(self.root / f"{name}.jsonl") for name in _TABLES}

        # derived secondary indexes over incident records
        self._theme_index: dict[str, set[str]] = {}
        self._role_index: dict[str, set[str]] = {}
        self._ref_index: dict[str, set[str]] = {}
        self._bucket_index: dict[tuple[str, int], set[str]] = {}
        for key, doc in self._tables["incidents"].items():
            self._index_add(key, IncidentRecord.from_doc(doc))

        self.records_examined = 0  # cumulative across queries
        self.last_query_examined = 0

    def close(self) -> None:
        for table in self._tables.values():
            table.close()

    # -- assets ----------------------------------------------------------

    def put_asset(self, record: dict) -> None:
        with self._lock:
            self._tables["assets"].put(record["id"], record)

    def get_asset(self, asset_id: str) -> dict | None:
        return self._tables["assets"].get(asset_id)

    def has_asset(self, asset_id: str) -> bool:
        return asset_id in self._tables["assets"]

    def assets(self) -> list[dict]:
        return [doc for _, doc in sorted(self._tables["assets"].items())]

    # -- transcripts -----------------------------------------------------

    def put_transcript(self, doc: dict) -> None:
        with self._lock:
            key = f"{doc['asset_id']}@{doc['revision']}"
            self._tables["transcripts"].put(key, doc)

    def get_transcript(self, asset_id: str, revision: int | None = None) -> dict | None:
        if revision is not None:
            return self._tables["transcripts"].get(f"{asset_id}@{revision}")
        best: dict | None = None
        for _, doc in self._tables["transcripts"].items():
            if doc["asset_id"] == asset_id and (best is None or doc["revision"] > best["revision"]):
                best = doc
        return best

    # -- summaries -------------------------------------------------------

    def put_summary(self, asset_id: str, revision: int, doc: dict) -> str:
        with self._lock:
            key = f"{asset_id}@{revision}"
            self._tables["summaries"].put(key, doc)
            return key

    def get_summary(self, key: str) -> dict | None:
        return self._tables["summaries"].get(key)

    # -- corrections (audit events) ---------------------------------------

    def put_correction(self, doc: dict) -> None:
        with self._lock:
            self._tables["corrections"].put(doc["id"], doc)

    def get_correction(self, correction_id: str) -> dict | None:
        return self._tables["corrections"].get(correction_id)

    def corrections_for(self, asset_id: str) -> list[dict]:
        return [doc for _, doc in self._tables["corrections"].items() if doc["asset_id"] == asset_id]

    # -- quality reports ---------------------------------------------------

    def put_report(self, name: str, doc: dict) -> None:
        with self._lock:
            self._tables["reports"].put(name, doc)

    def get_report(self, name: str) -> dict | None:
        return self._tables["reports"].get(name)

    # -- pipeline checkpoints ----------------------------------------------

    def checkpoint(self, asset_id: str, stage: str, fingerprint: str) -> None:
        with self._lock:
            self._tables["checkpoints"].put(f"{asset_id}:{stage}", {"fingerprint": fingerprint})

    def is_checkpointed(self, asset_id: str, stage: str, fingerprint: str) -> bool:
        doc = self._tables["checkpoints"].get(f"{asset_id}:{stage}")
        return doc is not None and doc.get("fingerprint") == fingerprint

    # -- per-speaker stream metadata ----------------------------------------

    def put_streams_meta(self, asset_id: str, rows: list[dict]) -> None:
        with self._lock:
            self._tables["streams"].put(asset_id, {"asset_id": asset_id, "streams": rows})

    def get_streams_meta(self, asset_id: str) -> list[dict]:
        doc = self._tables["streams"].get(asset_id)
        return doc["streams"] if doc else []

    # -- incident records ----------------------------------------------------

    @staticmethod
    def _bucket(score: float) -> int:
        return min(INDICATOR_BUCKETS - 1, max(0, int(score * INDICATOR_BUCKETS)))

    def _index_add(self, key: str, record: IncidentRecord) -> None:
        for theme in record.themes:
            self._theme_index.setdefault(theme, set()).add(key)
        for role in set(record.roles.values()):
            self._role_index.setdefault(role, set()).add(key)
        if record.incident_ref:
            self._ref_index.setdefault(record.incident_ref, set()).add(key)
        for category, score in record.indicator_scores.items():
            self._bucket_index.setdefault((category, self._bucket(score)), set()).add(key)

    def _index_remove(self, key: str, record: IncidentRecord) -> None:
        for theme in record.themes:
            self._theme_index.get(theme, set()).discard(key)
        for role in set(record.roles.values()):
            self._role_index.get(role, set()).discard(key)
        if record.incident_ref:
            self._ref_index.get(record.incident_ref, set()).discard(key)
        for category, score in record.indicator_scores.items():
            self._bucket_index.get((category, self._bucket(score)), set()).discard(key)

    def put_record(self, record: IncidentRecord) -> str:
        """Upsert by (asset_id, revision); returns the record key."""
        if not self.has_asset(record.asset_id):
            raise ReferentialError(f"unknown asset {record.asset_id!r}")
        record = record.normalized()
        with self._lock:
            now = self.clock()
            existing = self._tables["incidents"].get(record.key)
            if existing is not None:
                old = IncidentRecord.from_doc(existing)
                self._index_remove(record.key, old)
                record = replace(record, created=old.created, updated=now)
            else:
                record = replace(record, created=now, updated=now)
            self._tables["incidents"].put(record.key, record.to_doc())
            self._index_add(record.key, record)
            return record.key

    def get_record(self, asset_id: str, revision: int) -> IncidentRecord | None:
        doc = self._tables["incidents"].get(f"{asset_id}@{revision}")
        return IncidentRecord.from_doc(doc) if doc else None

    def record_count(self) -> int:
        return len(self._tables["incidents"])

    def _candidates(self, flt: QueryFilter) -> set[str] | None:
        """Intersect index sets for the present predicates; None = no index used."""
        sets: list[set[str]] = []
        if flt.theme is not None:
            sets.append(self._theme_index.get(flt.theme.strip().casefold(), set()))
        if flt.role is not None:
            sets.append(self._role_index.get(flt.role, set()))
        if flt.incident_ref is not None:
            sets.append(self._ref_index.get(flt.incident_ref, set()))
        if flt.indicator is not None:
            category, lo, hi = flt.indicator
            hits: set[str] = set()
            for bucket in range(self._bucket(lo), self._bucket(hi) + 1):
                hits |= self._bucket_index.get((category, bucket), set())
            sets.append(hits)
        if not sets:
            return None
        out = sets[0].copy()
        for s in sets[1:]:
            out &= s
        return out

    def _matches(self, record: IncidentRecord, flt: QueryFilter) -> bool:
        if flt.theme is not None and flt.theme.strip().casefold() not in record.themes:
            return False
        if flt.role is not None and flt.role not in record.roles.values():
            return False
        if flt.incident_ref is not None and record.incident_ref != flt.incident_ref:
            return False
        if flt.indicator is not None:
            category, lo, hi = flt.indicator
            score = record.indicator_scores.get(category)
            if score is None or not (lo <= score <= hi):
                return False
        return True

    def query(self, flt: QueryFilter) -> QueryPage:
        """All and only the records matching every present predicate.

        Deterministic order: updated desc, asset_id asc, revision desc.
        Indexed predicates narrow the candidate set before any record is
        examined.
        """
        flt.validate()
        with self._lock:
            candidates = self._candidates(flt)
            keys = candidates if candidates is not None else set(self._tables["incidents"].rows)
            examined = 0
            matched: list[IncidentRecord] = []
            for key in keys:
                doc = self._tables["incidents"].get(key)
                if doc is None:
                    continue
                examined += 1
                record = IncidentRecord.from_doc(doc)
                if self._matches(record, flt):
                    matched.append(record)
            matched.sort(key=lambda r: (-r.updated, r.asset_id, -r.revision))
            self.records_examined += examined
            self.last_query_examined = examined
            page = matched[flt.offset : flt.offset + flt.limit]
            return QueryPage(records=page, total=len(matched), offset=flt.offset, limit=flt.limit)

    # -- export ---------------------------------------------------------------

    def export(self) -> Iterator[str]:
        """Every row of every table as line-delimited JSON."""
        for name in _TABLES:
            for key, doc in sorted(self._tables[name].items()):
                yield json.dumps({"table": name, "key": key, "value": doc}, ensure_ascii=False)
