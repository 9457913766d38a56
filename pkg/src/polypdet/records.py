"""Text formats for detections, per-frame timings and metric reports.

Detections (one per line, comma separated, ``#`` lines are comments)::

    frame_id,x,y,w,h,score

Box coordinates are written with ``repr`` precision (exact round-trip), the
score with 6 decimals. Lines are sorted by frame id, then descending score.

Timings (tab separated)::

    frame_id<TAB>seconds

Reports (tab separated, one metric per line after a ``metric<TAB>value``
header). Field names, in order: ``label frames videos tp fp fn tn pre rec spe
f1 f2 pdr rt_frames rt_seconds mpt``. Percentages and RT use 3 decimals,
``mpt`` is seconds with 6 decimals, missing values are ``NA``. ``mpt`` is the
only timing-dependent field.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Sequence

from .errors import DetectionsFormatError
from .evaluation import MetricReport
from .geometry import BoundingBox, Detection

DETECTIONS_MAGIC = "# polypdet detections v1"
REPORT_MAGIC = "# polypdet report v1"
TIMING_MAGIC = "# polypdet timing v1"


@dataclass(frozen=True)
class DetectionRecord:
    frame_id: str
    box: BoundingBox
    score: float

    @property
    def detection(self) -> Detection:
        return Detection(self.box, self.score)


def provenance_lines(provenance: Optional[Mapping[str, object]]) -> List[str]:
    if not provenance:
        return []
    return ["# " + " ".join(f"{k}={provenance[k]}" for k in sorted(provenance))]


def _check_id(frame_id: str) -> None:
    if not frame_id or any(c in frame_id for c in ",\t\n\r#"):
        raise ValueError(f"frame id {frame_id!r} cannot be written to a record file")


def write_detections(path, records: Iterable, provenance: Optional[Mapping[str, object]] = None) -> None:
    """Write records (anything with ``frame_id``, ``box`` and ``score``)."""
    records = sorted(records, key=lambda r: (r.frame_id, -r.score, r.box.x, r.box.y, r.box.w, r.box.h))
    if not records and not provenance:
        Path(path).write_text("")
        return
    lines = [DETECTIONS_MAGIC] + provenance_lines(provenance) + ["# frame_id,x,y,w,h,score"]
    for r in records:
        _check_id(r.frame_id)
        b = r.box
        lines.append(f"{r.frame_id},{b.x!r},{b.y!r},{b.w!r},{b.h!r},{r.score:.6f}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_detections(path) -> List[DetectionRecord]:
    out = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        fields = line.split(",")
        if len(fields) != 6:
            raise DetectionsFormatError(lineno, f"expected 6 fields, got {len(fields)}")
        try:
            x, y, w, h, score = (float(v) for v in fields[1:])
        except ValueError as exc:
            raise DetectionsFormatError(lineno, f"non-numeric field ({exc})") from None
        try:
            box = BoundingBox(x, y, w, h)
            Detection(box, score)
        except ValueError as exc:
            raise DetectionsFormatError(lineno, str(exc)) from None
        out.append(DetectionRecord(fields[0], box, score))
    return out


def group_by_frame(records: Iterable) -> Dict[str, List[Detection]]:
    grouped: Dict[str, List[Detection]] = {}
    for r in records:
        grouped.setdefault(r.frame_id, []).append(Detection(r.box, r.score))
    return grouped


def write_timings(path, timings: Sequence, provenance: Optional[Mapping[str, object]] = None) -> None:
    lines = [TIMING_MAGIC] + provenance_lines(provenance)
    lines += [f"{frame_id}\t{seconds:.6f}" for frame_id, seconds in timings]
    Path(path).write_text("\n".join(lines) + "\n")


def read_timings(path) -> Dict[str, float]:
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise DetectionsFormatError(lineno, f"expected 2 tab-separated fields, got {len(parts)}")
        try:
            out[parts[0]] = float(parts[1])
        except ValueError:
            raise DetectionsFormatError(lineno, f"bad seconds value {parts[1]!r}") from None
    return out


REPORT_FIELDS = (
    "label", "frames", "videos", "tp", "fp", "fn", "tn",
    "pre", "rec", "spe", "f1", "f2", "pdr", "rt_frames", "rt_seconds", "mpt",
)


def _fmt(value, decimals: int) -> str:
    if value is None:
        return "NA"
    return f"{value:.{decimals}f}"


def report_values(report: MetricReport, label: str = "") -> Dict[str, str]:
    return {
        "label": label or "-",
        "frames": str(report.n_frames),
        "videos": str(report.n_videos),
        "tp": str(report.tp),
        "fp": str(report.fp),
        "fn": str(report.fn),
        "tn": str(report.tn),
        "pre": _fmt(report.pre, 3),
        "rec": _fmt(report.rec, 3),
        "spe": _fmt(report.spe, 3),
        "f1": _fmt(report.f1, 3),
        "f2": _fmt(report.f2, 3),
        "pdr": _fmt(report.pdr, 3),
        "rt_frames": _fmt(report.rt_frames, 3),
        "rt_seconds": _fmt(report.rt_seconds, 3),
        "mpt": _fmt(report.mpt, 6),
    }


def write_report(path, report: MetricReport, label: str = "", provenance: Optional[Mapping[str, object]] = None) -> None:
    values = report_values(report, label)
    lines = [REPORT_MAGIC] + provenance_lines(provenance) + ["metric\tvalue"]
    lines += [f"{k}\t{values[k]}" for k in REPORT_FIELDS]
    Path(path).write_text("\n".join(lines) + "\n")


def read_report(path):
    """Return ``(label, MetricReport)`` from a report file."""
    values: Dict[str, str] = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        if not line.strip() or line.startswith("#") or line == "metric\tvalue":
            continue
        parts = line.split("\t")
        if len(parts) != 2 or parts[0] not in REPORT_FIELDS:
            raise DetectionsFormatError(lineno, f"unexpected report line {line!r}")
        values[parts[0]] = parts[1]
    missing = [k for k in REPORT_FIELDS if k not in values]
    if missing:
        raise DetectionsFormatError(0, f"report missing fields {missing}")

    def num(key):
        return None if values[key] == "NA" else float(values[key])

    report = MetricReport(
        tp=int(values["tp"]), fp=int(values["fp"]), fn=int(values["fn"]), tn=int(values["tn"]),
        pre=num("pre"), rec=num("rec"), spe=num("spe"), f1=num("f1"), f2=num("f2"),
        pdr=num("pdr"), rt_frames=num("rt_frames"), rt_seconds=num("rt_seconds"), mpt=num("mpt"),
        n_frames=int(values["frames"]), n_videos=int(values["videos"]),
    )
    label = "" if values["label"] == "-" else values["label"]
    return label, report


_TABLE_COLUMNS = (
    ("Method", "label", "<"), ("TP", "tp", ">"), ("FP", "fp", ">"), ("FN", "fn", ">"), ("TN", "tn", ">"),
    ("Pre(%)", "pre", ">"), ("Rec(%)", "rec", ">"), ("Spe(%)", "spe", ">"), ("F1(%)", "f1", ">"),
    ("F2(%)", "f2", ">"), ("PDR(%)", "pdr", ">"), ("RT(frames)", "rt_frames", ">"), ("RT(s)", "rt_seconds", ">"),
    ("MPT(ms)", "mpt_ms", ">"),
)


def format_table(rows: Sequence) -> str:
    """Human-readable table; ``rows`` are ``(label, MetricReport)`` pairs."""
    cells = [[title for title, _, _ in _TABLE_COLUMNS]]
    for label, report in rows:
        values = report_values(report, label)
        values["mpt_ms"] = "NA" if report.mpt is None else f"{report.mpt * 1000:.1f}"
        cells.append([values[key] for _, key, _ in _TABLE_COLUMNS])
    widths = [max(len(row[i]) for row in cells) for i in range(len(_TABLE_COLUMNS))]
    out = []
    for row in cells:
        out.append("  ".join(f"{v:{align}{w}}" for v, w, (_, _, align) in zip(row, widths, _TABLE_COLUMNS)).rstrip())
    out.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(out) + "\n"

