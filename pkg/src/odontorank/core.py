"""SCS dental records, per-tooth classification and comparison criteria."""
from __future__ import annotations

import csv
import enum
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

N_TEETH = 32

# FDI quadrant order; comparison is positional so any fixed order works.
TOOTH_NUMBERS: tuple[int, ...] = tuple(
    10 * q + t for q in (1, 2, 3, 4) for t in range(1, 9)
)
TOOTH_COLUMNS: tuple[str, ...] = tuple(f"t{n}" for n in TOOTH_NUMBERS)
CSV_HEADER: tuple[str, ...] = ("case_id", "population", "role") + TOOTH_COLUMNS


class RecordError(ValueError):
    """Malformed dental record input."""

    def __init__(self, message: str, row: int | None = None):
        self.row = row
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)


class ToothCode(str, enum.Enum):
    V = "V"  # virgin or unerupted
    F = "F"  # filling
    S = "S"  # special treatment, e.g. root canal
    X = "X"  # missing
    I = "I"  # implant
    P = "P"  # present, treatment not visible
    N = "N"  # no information

    @classmethod
    def parse(cls, char: str) -> "ToothCode":
        try:
            return cls(char)
        except ValueError:
            raise RecordError(f"invalid tooth code {char!r}") from None


CODES: tuple[ToothCode, ...] = tuple(ToothCode)
CODE_INDEX = {c: i for i, c in enumerate(CODES)}


class Outcome(enum.IntEnum):
    MATCH = 0
    POSSIBLE = 1
    MISMATCH = 2
    UNKNOWN = 3


class Role(str, enum.Enum):
    AM = "AM"
    PM = "PM"


# Comparison table indexed by AM code: (match, mismatch, possible) PM codes.
AM_TABLE: dict[str, tuple[str, str, str]] = {
    "V": ("V", "", "FSXIP"),
    "F": ("F", "V", "SXIP"),
    "S": ("S", "VF", "XIP"),
    "X": ("X", "VFSP", "I"),
    "I": ("I", "VFSP", "X"),
    "P": ("", "", "VFSXIP"),
    "N": ("", "", ""),
}

# The same relation indexed by PM code: (match, mismatch, possible) AM codes.
PM_TABLE: dict[str, tuple[str, str, str]] = {
    "V": ("V", "FSXI", "P"),
    "F": ("F", "SXI", "VP"),
    "S": ("S", "XI", "FVP"),
    "X": ("X", "", "VFSIP"),
    "I": ("I", "", "VFSXP"),
    "P": ("", "XI", "VFSP"),
    "N": ("", "", ""),
}


def _outcome_from_row(row: tuple[str, str, str], other: str) -> Outcome:
    match, mismatch, possible = row
    if other in match:
        return Outcome.MATCH
    if other in mismatch:
        return Outcome.MISMATCH
    if other in possible:
        return Outcome.POSSIBLE
    return Outcome.UNKNOWN


def outcome_from_am_table(am: str, pm: str) -> Outcome:
    return _outcome_from_row(AM_TABLE[am], pm)


def outcome_from_pm_table(am: str, pm: str) -> Outcome:
    return _outcome_from_row(PM_TABLE[pm], am)


# 7x7 lookup, [am_index, pm_index] -> Outcome value.
OUTCOME_TABLE = np.array(
    [[outcome_from_am_table(a.value, p.value) for p in CODES] for a in CODES],
    dtype=np.int8,
)


def classify_tooth_pair(am: ToothCode | str, pm: ToothCode | str) -> Outcome:
    """Outcome of comparing one AM tooth against the PM tooth at the same position."""
    am, pm = ToothCode(am), ToothCode(pm)
    if am is ToothCode.N or pm is ToothCode.N:
        return Outcome.UNKNOWN
    return Outcome(int(OUTCOME_TABLE[CODE_INDEX[am], CODE_INDEX[pm]]))


@dataclass(frozen=True)
class Odontogram:
    case_id: str
    role: Role
    population: str
    teeth: tuple[ToothCode, ...]

    def __post_init__(self):
        if not self.case_id:
            raise RecordError("case_id must be non-empty")
        object.__setattr__(self, "role", Role(self.role))
        teeth = tuple(ToothCode.parse(t) if not isinstance(t, ToothCode) else t
                      for t in self.teeth)
        if len(teeth) != N_TEETH:
            raise RecordError(f"expected {N_TEETH} teeth, found {len(teeth)}")
        object.__setattr__(self, "teeth", teeth)

    @classmethod
    def from_string(cls, case_id: str, role: Role | str, codes: str,
                    population: str = "") -> "Odontogram":
        return cls(case_id, Role(role), population, tuple(codes))

    @property
    def code_string(self) -> str:
        return "".join(t.value for t in self.teeth)

    def code_indices(self) -> np.ndarray:
        return np.array([CODE_INDEX[t] for t in self.teeth], dtype=np.int8)


GROUP_LABELS: tuple[float, ...] = (0, 1, 5, 5.5, 6, 6.5, 7, 7.5, 8, 8.5, 9, 10)
# Lower edges of the half-open buckets from group 5 upward.
_GROUP_EDGES = (45, 50, 55, 60, 65, 70, 75, 80, 85, 90)


def exact_group(pct_match: float, n_comparable: int = 1) -> float:
    """Discretize a match percentage into the exact-group label."""
    if not 0 <= pct_match <= 100:
        raise ValueError(f"pct_match out of range: {pct_match}")
    if n_comparable == 0 or pct_match == 0:
        return 0.0
    k = int(np.searchsorted(_GROUP_EDGES, pct_match, side="right"))
    return float(GROUP_LABELS[k + 1])


@dataclass(frozen=True)
class CriteriaVector:
    n_match: int
    n_possible: int
    n_mismatch: int
    pct_match: float
    pct_possible: float
    pct_mismatch: float
    exact_group: float
    n_comparable: int

    @classmethod
    def from_counts(cls, n_match: int, n_possible: int, n_mismatch: int) -> "CriteriaVector":
        n = n_match + n_possible + n_mismatch
        if n > N_TEETH or min(n_match, n_possible, n_mismatch) < 0:
            raise ValueError("invalid outcome counts")
        if n == 0:
            return cls(0, 0, 0, 0.0, 0.0, 0.0, 0.0, 0)
        pm, pp, pmm = (100.0 * k / n for k in (n_match, n_possible, n_mismatch))
        return cls(n_match, n_possible, n_mismatch, pm, pp, pmm, exact_group(pm, n), n)

    def as_array(self) -> np.ndarray:
        """Raw criteria in x1..x7 order."""
        return np.array([self.exact_group, self.n_match, self.n_mismatch, self.pct_match,
                         self.pct_possible, self.n_possible, self.pct_mismatch])


def outcomes(am: Odontogram, pm: Odontogram) -> list[Outcome]:
    return [classify_tooth_pair(a, p) for a, p in zip(am.teeth, pm.teeth)]


def extract_criteria(am: Odontogram, pm: Odontogram) -> CriteriaVector:
    counts = [0, 0, 0, 0]
    for o in outcomes(am, pm):
        counts[o] += 1
    return CriteriaVector.from_counts(counts[Outcome.MATCH], counts[Outcome.POSSIBLE],
                                      counts[Outcome.MISMATCH])


# Full 7x7 table with N rows/columns forced to Unknown.
_FULL_TABLE = OUTCOME_TABLE.copy()
_FULL_TABLE[CODE_INDEX[ToothCode.N], :] = Outcome.UNKNOWN
_FULL_TABLE[:, CODE_INDEX[ToothCode.N]] = Outcome.UNKNOWN


def criteria_from_counts(n_match, n_possible, n_mismatch) -> np.ndarray:
    """Vectorized criteria rows (x1..x7) from outcome count arrays."""
    m = np.asarray(n_match, dtype=np.float64)
    p = np.asarray(n_possible, dtype=np.float64)
    mm = np.asarray(n_mismatch, dtype=np.float64)
    n = m + p + mm
    safe = np.where(n > 0, n, 1.0)
    pct_m = np.where(n > 0, (100.0 * m) / safe, 0.0)
    pct_p = np.where(n > 0, (100.0 * p) / safe, 0.0)
    pct_mm = np.where(n > 0, (100.0 * mm) / safe, 0.0)
    labels = np.array(GROUP_LABELS, dtype=np.float64)
    group = labels[np.searchsorted(_GROUP_EDGES, pct_m, side="right") + 1]
    group = np.where(pct_m > 0, group, 0.0)
    return np.stack([group, m, mm, pct_m, pct_p, p, pct_mm], axis=-1)


def criteria_matrix(pms: Sequence[Odontogram], ams: Sequence[Odontogram]) -> np.ndarray:
    """Criteria for every (pm, am) pair, shape (len(pms), len(ams), 7)."""
    pm_codes = np.stack([o.code_indices() for o in pms])
    am_codes = np.stack([o.code_indices() for o in ams])
    out = _FULL_TABLE[am_codes[None, :, :], pm_codes[:, None, :]]
    counts = [(out == k).sum(axis=-1) for k in (Outcome.MATCH, Outcome.POSSIBLE,
                                                 Outcome.MISMATCH)]
    return criteria_from_counts(*counts)


# -- record files -----------------------------------------------------------

def _check_unique(records: Iterable[Odontogram]) -> None:
    seen: set[tuple[Role, str]] = set()
    for i, r in enumerate(records, start=1):
        key = (r.role, r.case_id)
        if key in seen:
            raise RecordError(f"duplicate case_id {r.case_id!r} for role {r.role.value}", i)
        seen.add(key)


def _record_from_fields(row_no: int, case_id: str, population: str, role: str,
                        codes: Sequence[str]) -> Odontogram:
    if len(codes) != N_TEETH:
        raise RecordError(f"expected {N_TEETH} teeth, found {len(codes)}", row_no)
    teeth = []
    for number, c in zip(TOOTH_NUMBERS, codes):
        c = c.strip()
        try:
            teeth.append(ToothCode(c))
        except ValueError:
            raise RecordError(f"invalid code {c!r} at tooth {number}", row_no) from None
    try:
        role_ = Role(role.strip())
    except ValueError:
        raise RecordError(f"invalid role {role!r}", row_no) from None
    if not case_id.strip():
        raise RecordError("empty case_id", row_no)
    return Odontogram(case_id.strip(), role_, population.strip(), tuple(teeth))


def parse_records_csv(text: str) -> list[Odontogram]:
    reader = csv.reader(text.splitlines())
    records = []
    for row_no, row in enumerate(reader, start=1):
        if not row or row[0] == "case_id":
            continue
        if len(row) < 3:
            raise RecordError("expected case_id,population,role and tooth codes", row_no)
        records.append(_record_from_fields(row_no, row[0], row[1], row[2], row[3:]))
    _check_unique(records)
    return records


def parse_records_json(text: str) -> list[Odontogram]:
    data = json.loads(text)
    if not isinstance(data, list):
        raise RecordError("expected a JSON array of records")
    records = []
    for i, obj in enumerate(data, start=1):
        try:
            fields = (obj["case_id"], obj.get("population", ""), obj["role"], obj["teeth"])
        except (KeyError, TypeError, AttributeError):
            raise RecordError("record needs case_id, role and teeth", i) from None
        records.append(_record_from_fields(i, str(fields[0]), str(fields[1]),
                                           str(fields[2]), list(fields[3])))
    _check_unique(records)
    return records


def parse_odontogram_file(path: str | Path, format: str | None = None) -> list[Odontogram]:
    path = Path(path)
    fmt = format or ("json" if path.suffix.lower() == ".json" else "csv")
    text = path.read_text()
    if fmt == "json":
        return parse_records_json(text)
    if fmt == "csv":
        return parse_records_csv(text)
    raise ValueError(f"unknown record format {fmt!r}")


def records_to_csv(records: Iterable[Odontogram]) -> str:
    lines = [",".join(CSV_HEADER)]
    for r in records:
        lines.append(",".join([r.case_id, r.population, r.role.value]
                              + [t.value for t in r.teeth]))
    return "\n".join(lines) + "\n"


def records_to_json(records: Iterable[Odontogram]) -> str:
    data = [{"case_id": r.case_id, "population": r.population, "role": r.role.value,
             "teeth": [t.value for t in r.teeth]} for r in records]
    return json.dumps(data, indent=1) + "\n"


def write_odontogram_file(records: Iterable[Odontogram], path: str | Path,
                          format: str = "csv") -> None:
    text = records_to_json(records) if format == "json" else records_to_csv(records)
    Path(path).write_text(text)

