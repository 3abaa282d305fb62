"""TLE parsing, conversion to Kepler elements, and catalog files.

Column positions follow the public two-line element format. Only the fields
needed for two-body propagation are converted; drag terms are parsed from the
record text but otherwise ignored.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .dynamics import MU_EARTH, OrbitalElements

log = logging.getLogger(__name__)

SECONDS_PER_DAY = 86400.0
CATALOG_HEADER = (
    "# orbitguard catalog v1\n"
    "# columns: id a_m e i_rad raan_rad argp_rad nu0_rad r_m\n"
    "# a: semi-major axis; i: inclination; raan: right ascension of ascending node;\n"
    "# argp: argument of perigee; nu0: true anomaly at t=0; r: box half-edge\n"
)


class TleError(ValueError):
    def __init__(self, message: str, line_no: int | None = None) -> None:
        self.line_no = line_no
        super().__init__(f"line {line_no}: {message}" if line_no is not None else message)


class MalformedLine(TleError):
    pass


class ChecksumMismatch(TleError):
    pass


class FieldOutOfRange(TleError):
    pass


class NewtonNonconvergence(ArithmeticError):
    pass


class EmptySource(ValueError):
    pass


def checksum(line: str) -> int:
    """Modulo-10 sum of digits over the first 68 columns, '-' counting as 1."""
    total = 0
    for c in line[:68]:
        if c.isdigit():
            total += ord(c) - 48
        elif c == "-":
            total += 1
    return total % 10


@dataclass(frozen=True)
class TleRecord:
    name: str
    line1: str
    line2: str
    catalog_number: int
    epoch: datetime
    inclination_deg: float
    raan_deg: float
    eccentricity: float
    argp_deg: float
    mean_anomaly_deg: float
    mean_motion_rev_day: float


def _field(line: str, a: int, b: int, line_no: int, what: str) -> float:
    """Float from 1-based inclusive columns ``a..b``."""
    text = line[a - 1:b].strip()
    try:
        return float(text)
    except ValueError:
        raise MalformedLine(f"bad {what} field {text!r}", line_no) from None


def _epoch(text: str, line_no: int) -> datetime:
    try:
        yy = int(text[:2])
        day = float(text[2:])
    except ValueError:
        raise MalformedLine(f"bad epoch {text!r}", line_no) from None
    year = 2000 + yy if yy < 57 else 1900 + yy
    return datetime(year, 1, 1, tzinfo=timezone.utc) + timedelta(days=day - 1.0)


def parse_record(line1: str, line2: str, name: str = "", line_no: int = 1) -> TleRecord:
    """Parse one element set; ``line_no`` is the 1-based number of ``line1``."""
    for k, line in ((0, line1), (1, line2)):
        n = line_no + k
        if len(line) != 69:
            raise MalformedLine(f"expected 69 characters, got {len(line)}", n)
        if line[0] != str(k + 1) or line[1] != " ":
            raise MalformedLine(f"line should start with '{k + 1} '", n)
        expected = line[68]
        if not expected.isdigit():
            raise MalformedLine(f"checksum column is {expected!r}", n)
        if checksum(line) != int(expected):
            raise ChecksumMismatch(f"checksum {checksum(line)} != {expected}", n)
    num1, num2 = line1[2:7].strip(), line2[2:7].strip()
    if num1 != num2:
        raise MalformedLine(f"catalog numbers differ: {num1} vs {num2}", line_no + 1)
    try:
        catnum = int(num1)
    except ValueError:
        raise MalformedLine(f"bad catalog number {num1!r}", line_no) from None

    l2 = line_no + 1
    inc = _field(line2, 9, 16, l2, "inclination")
    raan = _field(line2, 18, 25, l2, "RAAN")
    ecc_text = line2[26:33]
    if not ecc_text.strip().isdigit():
        raise MalformedLine(f"bad eccentricity field {ecc_text!r}", l2)
    ecc = float("0." + ecc_text.strip())
    argp = _field(line2, 35, 42, l2, "argument of perigee")
    mean_anom = _field(line2, 44, 51, l2, "mean anomaly")
    mean_motion = _field(line2, 53, 63, l2, "mean motion")

    if not 0.0 <= inc <= 180.0:
        raise FieldOutOfRange(f"inclination {inc} outside [0, 180]", l2)
    for what, v in (("RAAN", raan), ("argument of perigee", argp), ("mean anomaly", mean_anom)):
        if not 0.0 <= v < 360.0:
            raise FieldOutOfRange(f"{what} {v} outside [0, 360)", l2)
    if not 0.0 <= ecc < 1.0:
        raise FieldOutOfRange(f"eccentricity {ecc} outside [0, 1)", l2)
    if not mean_motion > 0.0:
        raise FieldOutOfRange(f"mean motion {mean_motion} must be positive", l2)

    return TleRecord(
        name=name.strip(),
        line1=line1,
        line2=line2,
        catalog_number=catnum,
        epoch=_epoch(line1[18:32], line_no),
        inclination_deg=inc,
        raan_deg=raan,
        eccentricity=ecc,
        argp_deg=argp,
        mean_anomaly_deg=mean_anom,
        mean_motion_rev_day=mean_motion,
    )


def parse_tle(text: str, strict: bool = False, errors: list[TleError] | None = None) -> list[TleRecord]:
    """Parse 2-line or 3-line TLE text.

    Bad records are logged, appended to ``errors`` if given, and skipped;
    with ``strict=True`` the first one is raised instead.
    """
    lines = [ln.rstrip("\r\n").rstrip() for ln in text.splitlines()]
    records = []
    i = 0
    name = ""
    while i < len(lines):
        line = lines[i]
        if not line.strip():
            i += 1
            continue
        if line.startswith("1 ") and i + 1 < len(lines) and lines[i + 1].startswith("2 "):
            try:
                records.append(parse_record(line, lines[i + 1], name, i + 1))
            except TleError as exc:
                if strict:
                    raise
                log.warning("skipping element set: %s", exc)
                if errors is not None:
                    errors.append(exc)
            name = ""
            i += 2
            continue
        if line.startswith(("1 ", "2 ")):
            exc = MalformedLine("unpaired element line", i + 1)
            if strict:
                raise exc
            log.warning("skipping: %s", exc)
            if errors is not None:
                errors.append(exc)
            name = ""
        else:
            name = line[2:] if line.startswith("0 ") else line
        i += 1
    return records


def solve_kepler(mean_anomaly: float, e: float, tol: float = 1e-12, max_iter: int = 50) -> float:
    """Eccentric anomaly E with E - e sin E = M, by Newton iteration."""
    M = mean_anomaly
    E = M if e < 0.8 else math.pi
    for _ in range(max_iter):
        f = E - e * math.sin(E) - M
        step = f / (1.0 - e * math.cos(E))
        E -= step
        if abs(step) <= tol:
            return E
    raise NewtonNonconvergence(f"Kepler solve did not converge (M={M}, e={e})")


def true_from_eccentric(E: float, e: float) -> float:
    return 2.0 * math.atan2(math.sqrt(1.0 + e) * math.sin(0.5 * E), math.sqrt(1.0 - e) * math.cos(0.5 * E))


def true_from_mean(mean_anomaly: float, e: float) -> float:
    if e == 0.0:
        return mean_anomaly
    return true_from_eccentric(solve_kepler(mean_anomaly, e), e)


def mean_motion_to_sma(rev_per_day: float, mu: float = MU_EARTH) -> float:
    n = rev_per_day * 2.0 * math.pi / SECONDS_PER_DAY
    return (mu / (n * n)) ** (1.0 / 3.0)


def sma_to_mean_motion(a: float, mu: float = MU_EARTH) -> float:
    return math.sqrt(mu / a ** 3) * SECONDS_PER_DAY / (2.0 * math.pi)


@dataclass(frozen=True)
class TleFields:
    """The element fields of a TLE in their native units (degrees, rev/day)."""

    inclination_deg: float
    raan_deg: float
    eccentricity: float
    argp_deg: float
    mean_anomaly_deg: float
    mean_motion_rev_day: float


def fields_to_elements(f: TleFields, mu: float = MU_EARTH) -> OrbitalElements:
    e = f.eccentricity
    return OrbitalElements(
        a=mean_motion_to_sma(f.mean_motion_rev_day, mu),
        e=e,
        i=math.radians(f.inclination_deg),
        raan=math.radians(f.raan_deg),
        argp=math.radians(f.argp_deg),
        nu0=true_from_mean(math.radians(f.mean_anomaly_deg), e),
    )


def elements_to_fields(el: OrbitalElements, mu: float = MU_EARTH) -> TleFields:
    return TleFields(
        inclination_deg=math.degrees(el.i),
        raan_deg=math.degrees(el.raan),
        eccentricity=el.e,
        argp_deg=math.degrees(el.argp),
        mean_anomaly_deg=math.degrees(mean_from_true(el.nu0, el.e)),
        mean_motion_rev_day=sma_to_mean_motion(el.a, mu),
    )


def tle_to_elements(rec: TleRecord, mu: float = MU_EARTH) -> OrbitalElements:
    return fields_to_elements(TleFields(rec.inclination_deg, rec.raan_deg, rec.eccentricity,
                                        rec.argp_deg, rec.mean_anomaly_deg, rec.mean_motion_rev_day), mu)


def mean_from_true(nu: float, e: float) -> float:
    E = 2.0 * math.atan2(math.sqrt(1.0 - e) * math.sin(0.5 * nu), math.sqrt(1.0 + e) * math.cos(0.5 * nu))
    return E - e * math.sin(E)


@dataclass
class CatalogEntry:
    id: int
    elements: OrbitalElements
    r: float = 0.0
    name: str = field(default="", compare=False)


def records_to_catalog(records: Iterable[TleRecord], mu: float = MU_EARTH) -> list[CatalogEntry]:
    out = []
    for rec in records:
        out.append(CatalogEntry(rec.catalog_number, tle_to_elements(rec, mu), name=rec.name))
    return out


def dedupe(entries: Sequence[CatalogEntry], tol: float = 1e-12) -> tuple[list[CatalogEntry], list[CatalogEntry]]:
    """Drop entries whose six elements match an earlier entry within ``tol``.

    The semi-major axis is compared relatively, the rest absolutely.
    Returns ``(kept, removed)``; the first of each group is kept.
    """
    order = sorted(range(len(entries)), key=lambda k: (entries[k].elements.a, k))
    dup = set()
    for pos, k in enumerate(order):
        if k in dup:
            continue
        ek = entries[k].elements.as_tuple()
        for k2 in order[pos + 1:]:
            e2 = entries[k2].elements.as_tuple()
            if e2[0] - ek[0] > tol * ek[0]:
                break
            if k2 not in dup and all(abs(x - y) <= tol for x, y in zip(ek[1:], e2[1:])):
                dup.add(k2)
    # keep whichever member of a group appears first in the input
    kept, removed = [], []
    for k, entry in enumerate(entries):
        (removed if k in dup else kept).append(entry)
    return kept, removed


def scale_catalog(entries: Sequence[CatalogEntry], n_target: int, seed: int = 0) -> list[CatalogEntry]:
    """Truncate to ``n_target`` or pad with synthetic objects.

    Each synthetic object draws every one of its six elements independently
    from the empirical values of that element in the source.
    """
    if not entries:
        raise EmptySource("cannot scale an empty catalog")
    n = len(entries)
    if n_target <= n:
        return list(entries[:n_target])
    rng = np.random.default_rng(seed)
    table = np.array([e.elements.as_tuple() for e in entries])
    extra = n_target - n
    cols = [table[rng.integers(0, n, size=extra), j] for j in range(6)]
    next_id = max(e.id for e in entries) + 1
    out = list(entries)
    for k in range(extra):
        el = OrbitalElements(*(float(c[k]) for c in cols))
        out.append(CatalogEntry(next_id + k, el, entries[0].r, name=f"SYNTH {next_id + k}"))
    return out


def write_catalog(entries: Iterable[CatalogEntry], path: str | Path) -> None:
    with open(path, "w") as fh:
        fh.write(CATALOG_HEADER)
        for e in entries:
            el = e.elements
            fh.write(" ".join([str(e.id)] + [repr(float(v)) for v in el.as_tuple()] + [repr(float(e.r))]) + "\n")


def read_catalog(path: str | Path) -> list[CatalogEntry]:
    out = []
    with open(path) as fh:
        for n, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 8:
                raise MalformedLine(f"expected 8 columns, got {len(parts)}", n)
            try:
                vals = [float(v) for v in parts[1:]]
                out.append(CatalogEntry(int(parts[0]), OrbitalElements(*vals[:6]), vals[6]))
            except ValueError as exc:
                raise MalformedLine(str(exc), n) from None
    return out


def load_catalog(path: str | Path, strict: bool = False) -> list[CatalogEntry]:
    """Read either a canonical catalog file or TLE text, by content."""
    text = Path(path).read_text()
    if text.startswith("# orbitguard catalog"):
        return read_catalog(path)
    return records_to_catalog(parse_tle(text, strict=strict))


def _deg(rad: float) -> float:
    # wrap after rounding so 359.99996 prints as 0.0000, not 360.0000
    return round(math.degrees(rad) % 360.0, 4) % 360.0


def format_tle(catnum: int, el: OrbitalElements, epoch: datetime | None = None, name: str = "",
               mu: float = MU_EARTH) -> str:
    """Render elements as a 3-line element set with valid checksums.

    Angles are written to 4 decimals and eccentricity to 7, as the format
    allows, so a round trip is exact only to that precision.
    """
    epoch = epoch or datetime(2018, 4, 3, tzinfo=timezone.utc)
    start = datetime(epoch.year, 1, 1, tzinfo=epoch.tzinfo)
    day = (epoch - start).total_seconds() / SECONDS_PER_DAY + 1.0
    M = _deg(mean_from_true(el.nu0, el.e))
    n = sma_to_mean_motion(el.a, mu)
    ecc = f"{round(el.e * 1e7):07d}"
    if len(ecc) > 7:
        raise FieldOutOfRange(f"eccentricity {el.e} does not fit the TLE field")
    l1 = f"1 {catnum:05d}U 18001A   {epoch.year % 100:02d}{day:012.8f}  .00000000  00000-0  00000-0 0  999"
    l2 = (f"2 {catnum:05d} {math.degrees(el.i):8.4f} {_deg(el.raan):8.4f} {ecc} "
          f"{_deg(el.argp):8.4f} {M:8.4f} {n:11.8f}    1")
    l1 += str(checksum(l1))
    l2 += str(checksum(l2))
    head = f"0 {name}\n" if name else ""
    return f"{head}{l1}\n{l2}\n"
