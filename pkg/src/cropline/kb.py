"""Trusted disease→solution knowledge base.

Records are imported from a CSV curated by an authority and kept in an
embedded single-file SQLite store (WAL mode) so retrieval stays a plain
``WHERE season_id = ? AND disease_name = ?`` query without a database server.
Fuzzy lookup uses normalized Levenshtein similarity with an acceptance
threshold.

CSV schema (header required):
    season_id,disease_name,solution,water_availability,daylight_hours,dangerous_pests,active_months
``dangerous_pests`` is semicolon-separated; ``active_months`` is a dash range
(``6-9``, wrapping allowed: ``11-2``) or a semicolon list (``6;7;8;9``).
"""

from __future__ import annotations

import csv
import sqlite3
from dataclasses import dataclass
from pathlib import Path

from .errors import InputError, NoMatch

_CSV_HEADER = ["season_id", "disease_name", "solution", "water_availability",
               "daylight_hours", "dangerous_pests", "active_months"]

DEFAULT_SIMILARITY_THRESHOLD = 0.7


def normalize_name(name: str) -> str:
    """Lowercase, trim, collapse inner whitespace. Idempotent."""
    return " ".join(name.lower().split())


def levenshtein(a: str, b: str) -> int:
    """Edit distance (insert/delete/substitute), two-row dynamic program."""
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i]
        for j, cb in enumerate(b, start=1):
            cur.append(min(prev[j] + 1,          # deletion
                           cur[j - 1] + 1,       # insertion
                           prev[j - 1] + (ca != cb)))  # substitution
        prev = cur
    return prev[-1]


def name_similarity(a: str, b: str) -> float:
    """1 - levenshtein/max(len) over normalized names, in [0, 1]."""
    na, nb = normalize_name(a), normalize_name(b)
    if not na and not nb:
        return 1.0
    return 1.0 - levenshtein(na, nb) / max(len(na), len(nb))


@dataclass(frozen=True)
class DiseaseRecord:
    disease_name: str
    solution_text: str
    season_id: str
    water_availability: float
    daylight_hours: float
    dangerous_pests: tuple[str, ...]
    active_months: frozenset[int]


@dataclass(frozen=True)
class SeasonModel:
    """Per-season slice of the trusted database plus its prior probability.

    The prior is the season's share of the year: duration in months divided by
    the total registered duration (renormalized when seasons do not partition
    the 12 months exactly).
    """

    season_id: str
    prior: float
    records: tuple[DiseaseRecord, ...]
    duration_months: int


def _parse_months(field: str, row_no: int) -> frozenset[int]:
    field = field.strip()
    if not field:
        raise InputError(f"row {row_no}: column active_months is empty")
    months: list[int] = []
    try:
        if "-" in field and ";" not in field:
            lo_s, hi_s = field.split("-", 1)
            lo, hi = int(lo_s), int(hi_s)
            if lo <= hi:
                months = list(range(lo, hi + 1))
            else:  # wrap around the year end, e.g. 11-2
                months = list(range(lo, 13)) + list(range(1, hi + 1))
        else:
            months = [int(part) for part in field.split(";") if part.strip()]
    except ValueError:
        raise InputError(f"row {row_no}: column active_months is not a month "
                         f"range or list: {field!r}") from None
    if not months or any(m < 1 or m > 12 for m in months):
        raise InputError(f"row {row_no}: column active_months out of range 1-12: {field!r}")
    return frozenset(months)


def _parse_float(field: str, column: str, row_no: int, lo: float, hi: float) -> float:
    try:
        value = float(field)
    except ValueError:
        raise InputError(f"row {row_no}: column {column} is not a number: {field!r}") from None
    if not (lo <= value <= hi):
        raise InputError(f"row {row_no}: column {column} out of range "
                         f"[{lo}, {hi}]: {value}")
    return value


class KnowledgeBase:
    """Embedded store of trusted records with exact and fuzzy retrieval.

    Import is single-writer and must finish before lookups; reads are safe for
    concurrent callers afterwards.
    """

    def __init__(self, store_path: str | Path = ":memory:"):
        self._store_path = str(store_path)
        self._conn = sqlite3.connect(self._store_path, check_same_thread=False)
        if self._store_path != ":memory:":
            self._conn.execute("PRAGMA journal_mode=WAL")
        self._conn.execute(
            """CREATE TABLE IF NOT EXISTS records (
                   season_id TEXT NOT NULL,
                   disease_name TEXT NOT NULL,
                   solution TEXT NOT NULL,
                   water_availability REAL NOT NULL,
                   daylight_hours REAL NOT NULL,
                   dangerous_pests TEXT NOT NULL,
                   active_months TEXT NOT NULL,
                   PRIMARY KEY (season_id, disease_name)
               )""")
        self._conn.commit()

    @classmethod
    def from_csv(cls, csv_path: str | Path) -> "KnowledgeBase":
        """In-memory knowledge base loaded from a trusted CSV."""
        kb = cls()
        kb.import_csv(csv_path)
        return kb

    def close(self) -> None:
        self._conn.close()

    def import_csv(self, path: str | Path) -> int:
        """Import all rows; returns the number of records imported.

        Errors name the offending row and column; a duplicate
        (season_id, disease_name) pair is rejected.
        """
        p = Path(path)
        if not p.is_file():
            raise InputError(f"CSV file not found: {p}")
        with p.open("r", encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise InputError(f"CSV file {p} is empty") from None
            if [h.strip() for h in header] != _CSV_HEADER:
                raise InputError(
                    f"CSV header mismatch: expected {','.join(_CSV_HEADER)}")
            rows = []
            for row_no, row in enumerate(reader, start=2):
                if not row or all(not cell.strip() for cell in row):
                    continue
                if len(row) != len(_CSV_HEADER):
                    raise InputError(f"row {row_no}: expected {len(_CSV_HEADER)} "
                                     f"columns, got {len(row)}")
                season = row[0].strip()
                if not season:
                    raise InputError(f"row {row_no}: column season_id is empty")
                name = normalize_name(row[1])
                if not name:
                    raise InputError(f"row {row_no}: column disease_name is empty")
                solution = row[2].strip()
                if not solution:
                    raise InputError(f"row {row_no}: column solution is empty")
                water = _parse_float(row[3], "water_availability", row_no, 0.0, 1.0)
                daylight = _parse_float(row[4], "daylight_hours", row_no, 0.0, 24.0)
                pests = ";".join(part.strip() for part in row[5].split(";") if part.strip())
                months = _parse_months(row[6], row_no)
                rows.append((season, name, solution, water, daylight, pests,
                             ";".join(str(m) for m in sorted(months)), row_no))
        count = 0
        for season, name, solution, water, daylight, pests, months, row_no in rows:
            try:
                self._conn.execute(
                    "INSERT INTO records VALUES (?, ?, ?, ?, ?, ?, ?)",
                    (season, name, solution, water, daylight, pests, months))
            except sqlite3.IntegrityError:
                self._conn.rollback()
                raise InputError(f"row {row_no}: duplicate record for "
                                 f"({season}, {name})") from None
            count += 1
        self._conn.commit()
        return count

    def _row_to_record(self, row: tuple) -> DiseaseRecord:
        season, name, solution, water, daylight, pests, months = row
        return DiseaseRecord(
            disease_name=name,
            solution_text=solution,
            season_id=season,
            water_availability=water,
            daylight_hours=daylight,
            dangerous_pests=tuple(p for p in pests.split(";") if p),
            active_months=frozenset(int(m) for m in months.split(";")),
        )

    def season_ids(self) -> list[str]:
        cur = self._conn.execute("SELECT DISTINCT season_id FROM records ORDER BY season_id")
        return [r[0] for r in cur.fetchall()]

    def _require_season(self, season_id: str) -> None:
        cur = self._conn.execute("SELECT 1 FROM records WHERE season_id = ? LIMIT 1",
                                 (season_id,))
        if cur.fetchone() is None:
            raise InputError(f"unknown season: {season_id!r}")

    def records_for_season(self, season_id: str) -> list[DiseaseRecord]:
        self._require_season(season_id)
        cur = self._conn.execute(
            "SELECT * FROM records WHERE season_id = ? ORDER BY disease_name",
            (season_id,))
        return [self._row_to_record(r) for r in cur.fetchall()]

    def seasons(self) -> dict[str, SeasonModel]:
        """All season models with priors renormalized to sum to 1."""
        ids = self.season_ids()
        if not ids:
            raise InputError("knowledge base is empty; import a CSV first")
        per_season: dict[str, list[DiseaseRecord]] = {
            sid: self.records_for_season(sid) for sid in ids}
        durations = {sid: len(frozenset().union(*(r.active_months for r in recs)))
                     for sid, recs in per_season.items()}
        total = sum(durations.values())
        return {sid: SeasonModel(season_id=sid,
                                 prior=durations[sid] / total,
                                 records=tuple(per_season[sid]),
                                 duration_months=durations[sid])
                for sid in ids}

    def priors(self) -> dict[str, float]:
        return {sid: model.prior for sid, model in self.seasons().items()}

    def lookup_exact(self, disease_name: str, season_id: str) -> DiseaseRecord | None:
        """Exact-match retrieval on the normalized name, or None."""
        self._require_season(season_id)
        cur = self._conn.execute(
            "SELECT * FROM records WHERE season_id = ? AND disease_name = ?",
            (season_id, normalize_name(disease_name)))
        row = cur.fetchone()
        return self._row_to_record(row) if row is not None else None

    def lookup_closest(self, disease_name: str, season_id: str,
                       threshold: float = DEFAULT_SIMILARITY_THRESHOLD,
                       ) -> tuple[DiseaseRecord, float]:
        """Best fuzzy match for the season; NoMatch if below ``threshold``."""
        if not normalize_name(disease_name):
            raise InputError("empty disease name")
        records = self.records_for_season(season_id)
        return closest_record(records, disease_name, threshold)


def closest_record(records: list[DiseaseRecord] | tuple[DiseaseRecord, ...],
                   disease_name: str,
                   threshold: float = DEFAULT_SIMILARITY_THRESHOLD,
                   ) -> tuple[DiseaseRecord, float]:
    """Record maximizing name similarity; ties go to the lexicographically
    smaller canonical name. Raises NoMatch (carrying the best candidate) when
    every candidate scores below ``threshold``."""
    if not records:
        raise InputError("no records to match against")
    if not normalize_name(disease_name):
        raise InputError("empty disease name")
    best: DiseaseRecord | None = None
    best_sim = -1.0
    for record in sorted(records, key=lambda r: r.disease_name):
        sim = name_similarity(disease_name, record.disease_name)
        if sim > best_sim:
            best, best_sim = record, sim
    assert best is not None
    if best_sim < threshold:
        raise NoMatch(
            f"no trusted record within threshold {threshold} for "
            f"{disease_name!r}; best candidate {best.disease_name!r} "
            f"at similarity {best_sim:.3f}",
            best_name=best.disease_name, similarity=best_sim)
    return best, best_sim
