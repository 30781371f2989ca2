"""
sequence_io.py - File formats
Sequence JSON documents, JSON reports, pulse schedule CSV and optimizer traces
"""

import csv
import json
import logging
from pathlib import Path
from typing import List, Literal, Tuple, Type, TypeVar, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from errors import SequenceFormatError, UsageError
from machine_config import MachineConfig
from sequence_engine import (
    ControlSequence,
    Reading,
    SigmaOrder,
    apply_reading,
    canonical_cnot_sequence,
    canonical_swap_sequence,
)

logger = logging.getLogger(__name__)

SCHEDULE_COLUMNS = ("duration_s", "delta_rad_s", "x_rad_s", "y_rad_s")
BUILTIN_SEQUENCES = {
    "cnot72": canonical_cnot_sequence,
    "swap72": canonical_swap_sequence,
}

ReportT = TypeVar("ReportT", bound=BaseModel)


class PatternItem(BaseModel):
    model_config = ConfigDict(extra="forbid")

    entangler: Literal["A", "B"]
    axis: Literal["x", "y", "z"]


class Convention(BaseModel):
    model_config = ConfigDict(extra="forbid")

    sigma_order: Literal["printed-first", "printed-last"] = "printed-first"
    sigma_z_sign: Literal[1, -1] = 1

    @property
    def reading(self) -> Reading:
        return Reading(SigmaOrder(self.sigma_order), self.sigma_z_sign)


class SequenceDocument(BaseModel):
    """
    {name, pattern: [{entangler, axis}], sigmas, convention: {sigma_order, sigma_z_sign}}

    sigmas are stored in printed order; the pattern repeats over the steps.
    """
    model_config = ConfigDict(extra="forbid")

    name: str = ""
    pattern: List[PatternItem] = Field(..., min_length=1)
    sigmas: List[float]
    convention: Convention = Field(default_factory=Convention)

    @classmethod
    def from_sequence(cls, seq: ControlSequence, convention: Convention = None,
                      pattern_period: int = None) -> "SequenceDocument":
        if len(seq) == 0:
            raise UsageError("cannot store an empty sequence: no pattern to record")
        period = pattern_period or len(seq)
        pattern = [
            PatternItem(entangler=tag.value, axis=axis.value)
            for tag, axis in seq.pattern[:period]
        ]
        return cls(name=seq.name, pattern=pattern, sigmas=seq.sigmas,
                   convention=convention or Convention())

    def printed_sequence(self) -> ControlSequence:
        """Steps with the values in printed order, no convention applied"""
        return ControlSequence.from_sigmas(
            self.sigmas, [(p.entangler, p.axis) for p in self.pattern], name=self.name
        )

    def resolved(self) -> Tuple[ControlSequence, int]:
        """(steps in time order, σz sign) under the document's own convention"""
        reading = self.convention.reading
        return apply_reading(self.printed_sequence(), reading), reading.sigma_z_sign


def parse_sequence_json(text: str) -> SequenceDocument:
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as e:
        raise SequenceFormatError(f"malformed sequence JSON: {e.msg}", e.lineno, e.colno)
    try:
        return SequenceDocument.model_validate(payload)
    except ValidationError as e:
        raise SequenceFormatError(f"invalid sequence document: {e.errors()[0]['msg']} at "
                                  f"{'.'.join(str(p) for p in e.errors()[0]['loc'])}")


def load_sequence(source: Union[str, Path]) -> SequenceDocument:
    """Path to a JSON document, or a built-in name (cnot72, swap72)"""
    path = Path(source)
    if path.is_file():
        return parse_sequence_json(path.read_text())
    if str(source) in BUILTIN_SEQUENCES:
        return SequenceDocument.from_sequence(BUILTIN_SEQUENCES[str(source)](), pattern_period=3)
    raise UsageError(f"sequence '{source}' is neither a file nor a built-in ({', '.join(BUILTIN_SEQUENCES)})")


def save_sequence(document: SequenceDocument, path: Union[str, Path]):
    Path(path).write_text(document.model_dump_json(indent=2) + "\n")
    logger.info(f"✅ Wrote sequence '{document.name}' ({len(document.sigmas)} steps) to {path}")


def write_report(report: BaseModel, path: Union[str, Path]):
    Path(path).write_text(report.model_dump_json(indent=2) + "\n")


def read_report(model: Type[ReportT], path: Union[str, Path]) -> ReportT:
    try:
        return model.model_validate_json(Path(path).read_text())
    except ValidationError as e:
        raise UsageError(f"{path} is not a valid {model.__name__}: {e.errors()[0]['msg']}")


# ---- Pulse schedules ----

def export_schedule_csv(schedule, path: Union[str, Path]):
    """One row per segment, header duration_s, delta_rad_s, x_rad_s, y_rad_s"""
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(SCHEDULE_COLUMNS)
        for segment in schedule.segments:
            writer.writerow([repr(segment.duration), repr(segment.delta),
                             repr(segment.x_drive), repr(segment.y_drive)])


def import_schedule_csv(path: Union[str, Path], config: MachineConfig):
    """
    Read a schedule written by export_schedule_csv. Segments at a resonance detuning with
    no drive are taken as resonant segments of the matching mode.
    """
    from dynamics_validator import PulseSchedule, Segment, SegmentKind

    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != SCHEDULE_COLUMNS:
            raise SequenceFormatError(f"schedule CSV header must be {','.join(SCHEDULE_COLUMNS)}", 1, 1)
        segments = []
        for row_number, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                duration, delta, x_drive, y_drive = (float(v) for v in row)
            except ValueError:
                raise SequenceFormatError(f"expected 4 numbers, got {row}", row_number, 1)
            mode = None
            if x_drive == 0.0 and y_drive == 0.0:
                for candidate in (1, 2):
                    if abs(delta - config.resonance_detuning(candidate)) <= 1e-9 * config.half_detuning:
                        mode = candidate
            kind = SegmentKind.RESONANT if mode else SegmentKind.ROTATION
            segments.append(Segment(duration, delta, x_drive, y_drive, kind, len(segments) // 2, mode))
    return PulseSchedule(segments=tuple(segments), config=config)
