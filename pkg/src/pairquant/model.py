"""Classification input model: objects, pair classes, and quantification config.

A classification assigns every unordered pair of objects to one of four
ordered interaction classes:

    below   the pair interacts less than the lower threshold ``a``
    within  the pair interacts between the thresholds ``a`` and ``b``
    above   the pair interacts more than the upper threshold ``b``
    free    no restriction beyond the global value range

On-disk codes are ``-1`` (below), ``0`` (within), ``1`` (above) and ``f``
(free).  Diagonal cells carry no class and are ignored by the parsers.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping


class PairClass(Enum):
    BELOW = "below"
    WITHIN = "within"
    ABOVE = "above"
    FREE = "free"


#: on-disk code <-> class
_CODE_TO_CLASS = {"-1": PairClass.BELOW, "0": PairClass.WITHIN,
                  "1": PairClass.ABOVE, "f": PairClass.FREE}
_CLASS_TO_CODE = {v: k for k, v in _CODE_TO_CLASS.items()}


def delta_of(pair_class: PairClass) -> int:
    """Sign coefficient of a pair class in the quantification objective.

    Below pairs pull their value down (-1), above pairs push it up (+1),
    within and free pairs contribute nothing (0).
    """
    if pair_class is PairClass.BELOW:
        return -1
    if pair_class is PairClass.ABOVE:
        return +1
    return 0


class ModelError(Exception):
    """Base class for classification input errors."""


class ParseError(ModelError):
    def __init__(self, message: str, row: int | None = None, col: int | None = None):
        loc = ""
        if row is not None:
            loc = f" (row {row}" + (f", col {col}" if col is not None else "") + ")"
        super().__init__(message + loc)
        self.row = row
        self.col = col


class AsymmetryError(ParseError):
    """Both triangles present in a file and they disagree."""


class ConfigError(ModelError):
    """Invalid quantification configuration."""


@dataclass(frozen=True)
class ValidationIssue:
    code: str      # EmptyRequiredClass | TooFewObjects | DuplicateLabel
    message: str

    def __str__(self) -> str:
        return f"{self.code}: {self.message}"


class ValidationError(ModelError):
    def __init__(self, issues: list[ValidationIssue]):
        super().__init__("; ".join(str(i) for i in issues))
        self.issues = issues


@dataclass(frozen=True)
class ClassificationMatrix:
    """Symmetric assignment of every unordered object pair to a PairClass.

    Immutable after construction; classes are keyed on index pairs (i, j)
    with i < j.  Construction checks structural completeness (every pair
    classified exactly once); semantic rules live in :func:`validate`.
    """

    labels: tuple[str, ...]
    classes: Mapping[tuple[int, int], PairClass] = field(hash=False)

    def __post_init__(self):
        n = len(self.labels)
        want = {(i, j) for i in range(n) for j in range(i + 1, n)}
        got = set(self.classes)
        for i, j in got:
            if not (0 <= i < j < n):
                raise ParseError(f"bad pair key ({i}, {j}) for n={n}")
        if got != want:
            missing = sorted(want - got)
            raise ParseError(f"{len(missing)} unclassified pair(s), first: {missing[:3]}")

    @property
    def n(self) -> int:
        return len(self.labels)

    def pair_class(self, i: int, j: int) -> PairClass:
        if i == j:
            raise KeyError("diagonal pairs carry no class")
        return self.classes[(min(i, j), max(i, j))]

    def pairs_in_class(self, pc: PairClass) -> list[tuple[int, int]]:
        return sorted(k for k, v in self.classes.items() if v is pc)

    def class_counts(self) -> dict[PairClass, int]:
        counts = {pc: 0 for pc in PairClass}
        for v in self.classes.values():
            counts[v] += 1
        return counts

    def index_of(self, label: str) -> int:
        return self.labels.index(label)

    @classmethod
    def from_codes(cls, labels: Iterable[str], lower_codes: list[list[int | str]]) -> "ClassificationMatrix":
        """Build from lower-triangle code rows (row i holds codes vs columns 0..i-1)."""
        labels = tuple(labels)
        classes: dict[tuple[int, int], PairClass] = {}
        for i, row in enumerate(lower_codes):
            if len(row) != i:
                raise ParseError(f"lower-triangle row {i} has {len(row)} codes, expected {i}")
            for j, code in enumerate(row):
                classes[(j, i)] = _coerce_code(str(code), row=i, col=j)
        return cls(labels, classes)

    def __eq__(self, other) -> bool:
        return (isinstance(other, ClassificationMatrix)
                and self.labels == other.labels
                and dict(self.classes) == dict(other.classes))


def _coerce_code(token: str, row: int | None = None, col: int | None = None) -> PairClass:
    token = token.strip().lower()
    if token in _CODE_TO_CLASS:
        return _CODE_TO_CLASS[token]
    raise ParseError(f"UnknownCode: {token!r} is not one of -1, 0, 1, f", row=row, col=col)


def validate(data: ClassificationMatrix) -> list[ValidationIssue]:
    """Check semantic rules; returns all violations (empty list means OK).

    Rules: at least 3 objects, unique labels, and the below and above
    classes each hold at least one pair (the within and free classes may
    be empty).
    """
    issues: list[ValidationIssue] = []
    if data.n < 3:
        issues.append(ValidationIssue("TooFewObjects", f"need n >= 3 objects, got {data.n}"))
    seen: dict[str, int] = {}
    for idx, lab in enumerate(data.labels):
        if lab in seen:
            issues.append(ValidationIssue("DuplicateLabel", f"label {lab!r} at positions {seen[lab]} and {idx}"))
        seen.setdefault(lab, idx)
    counts = data.class_counts()
    for pc in (PairClass.BELOW, PairClass.ABOVE):
        if counts[pc] == 0:
            issues.append(ValidationIssue("EmptyRequiredClass", f"class {pc.value!r} has no pairs"))
    return issues


def require_valid(data: ClassificationMatrix) -> ClassificationMatrix:
    issues = validate(data)
    if issues:
        raise ValidationError(issues)
    return data


# --------------------------------------------------------------------------
# bounds / config


class Restriction(Enum):
    SUM_EQUALS_R = "sum"
    NO_RESTRICTION = "none"


@dataclass(frozen=True)
class KnownBounds:
    a: float
    b: float

    def __post_init__(self):
        if not (0 < self.a <= self.b):
            raise ConfigError(f"known bounds need 0 < a <= b, got a={self.a}, b={self.b}")


@dataclass(frozen=True)
class UnknownBounds:
    restriction: Restriction = Restriction.SUM_EQUALS_R


BoundsMode = KnownBounds | UnknownBounds

#: value range used for unknown-bounds runs when the caller gives none
DEFAULT_UNKNOWN_R = 2.0


@dataclass(frozen=True)
class QqrConfig:
    """Quantification configuration: thresholds mode, value range, solver knobs."""

    bounds: BoundsMode
    R: float | None = None
    allow_degenerate: bool = False
    settings: "object | None" = None   # SolverSettings; kept loose to avoid an import cycle

    def resolved_R(self) -> float:
        if self.R is not None:
            if self.R <= 0:
                raise ConfigError(f"R must be positive, got {self.R}")
            return float(self.R)
        if isinstance(self.bounds, UnknownBounds):
            return DEFAULT_UNKNOWN_R
        raise ConfigError("R is required for known bounds (or use scan_min_R)")

    def check(self) -> None:
        R = self.resolved_R()
        if isinstance(self.bounds, KnownBounds):
            if R < self.bounds.b:
                raise ConfigError(f"R={R} < b={self.bounds.b}: above-class constraints cannot fit the value box")
        elif self.bounds.restriction is Restriction.NO_RESTRICTION and not self.allow_degenerate:
            raise ConfigError("unknown bounds without a restriction provably degenerates to a*=0; "
                              "pass allow_degenerate=True to run it anyway")


# --------------------------------------------------------------------------
# serialization


def serialize_classification(data: ClassificationMatrix, format: str = "csv") -> str:
    """Write a classification in the documented CSV or JSON format."""
    if format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(data.labels)
        for i in range(data.n):
            row = [_CLASS_TO_CODE[data.classes[(j, i)]] for j in range(i)]
            row += [""] * (data.n - i)
            w.writerow(row)
        return buf.getvalue()
    if format == "json":
        pairs = [{"i": data.labels[i], "j": data.labels[j], "class": data.classes[(i, j)].value}
                 for (i, j) in sorted(data.classes)]
        return json.dumps({"labels": list(data.labels), "pairs": pairs}, indent=1)
    raise ValueError(f"unknown format {format!r}")


def parse_classification(text: str, format: str = "csv") -> ClassificationMatrix:
    """Parse the documented CSV or JSON classification format.

    CSV: first row holds the n labels; the next n rows hold lower-triangle
    codes.  Upper-triangle cells must be blank or mirror the lower triangle;
    diagonal cells are ignored.
    """
    if format == "csv":
        return _parse_csv(text)
    if format == "json":
        return _parse_json(text)
    raise ValueError(f"unknown format {format!r}")


def _parse_csv(text: str) -> ClassificationMatrix:
    rows = [r for r in csv.reader(io.StringIO(text))]
    rows = [r for r in rows if any(c.strip() for c in r)]
    if not rows:
        raise ParseError("empty file")
    labels = tuple(c.strip() for c in rows[0] if c.strip())
    n = len(labels)
    if len(rows) - 1 != n:
        raise ParseError(f"expected {n} data rows after the label row, got {len(rows) - 1}")
    classes: dict[tuple[int, int], PairClass] = {}
    for i, row in enumerate(rows[1:]):
        if len(row) > n:
            raise ParseError(f"row has {len(row)} cells, expected at most {n}", row=i + 1)
        for j in range(i):
            cell = row[j].strip() if j < len(row) else ""
            if not cell:
                raise ParseError("missing lower-triangle code", row=i + 1, col=j)
            classes[(j, i)] = _coerce_code(cell, row=i + 1, col=j)
        # upper triangle, if present, must mirror; the diagonal is ignored
        for j in range(i + 1, min(len(row), n)):
            cell = row[j].strip()
            if not cell:
                continue
            mirror = _coerce_code(cell, row=i + 1, col=j)
            if (i, j) in classes and classes[(i, j)] is not mirror:
                raise AsymmetryError(
                    f"cell ({i},{j}) = {mirror.value} disagrees with mirror {classes[(i, j)].value}",
                    row=i + 1, col=j)
            classes.setdefault((i, j), mirror)
    # rows fill (j, i) for j < i, so a full lower triangle covers every pair
    return ClassificationMatrix(labels, classes)


def _parse_json(text: str) -> ClassificationMatrix:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"invalid JSON: {e}") from e
    try:
        labels = tuple(str(x) for x in doc["labels"])
        raw_pairs = doc["pairs"]
    except (KeyError, TypeError) as e:
        raise ParseError("JSON needs 'labels' and 'pairs' keys") from e
    index = {lab: i for i, lab in enumerate(labels)}
    classes: dict[tuple[int, int], PairClass] = {}
    for k, p in enumerate(raw_pairs):
        try:
            i, j, cls = index[p["i"]], index[p["j"]], str(p["class"]).strip().lower()
        except KeyError as e:
            raise ParseError(f"pair #{k}: unknown label or missing key ({e})") from e
        if i == j:
            raise ParseError(f"pair #{k}: self-pair {p['i']!r}")
        key = (min(i, j), max(i, j))
        try:
            pc = PairClass(cls)
        except ValueError:
            raise ParseError(f"pair #{k}: UnknownCode {cls!r}") from None
        if key in classes and classes[key] is not pc:
            raise AsymmetryError(f"pair #{k}: duplicate pair with conflicting class")
        classes[key] = pc
    return ClassificationMatrix(labels, classes)
