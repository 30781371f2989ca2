import json
from pathlib import Path

import pytest

from errors import SequenceFormatError, UsageError
from sequence_engine import (
    PUBLISHED_CNOT_SIGMAS,
    ControlSequence,
    VerificationReport,
    canonical_swap_sequence,
    verify,
)
from sequence_io import (
    Convention,
    SequenceDocument,
    load_sequence,
    parse_sequence_json,
    read_report,
    save_sequence,
    write_report,
)

DATA = Path(__file__).resolve().parent.parent / "data"


def test_builtin_and_shipped_documents_agree():
    builtin = load_sequence("cnot72")
    shipped = load_sequence(DATA / "cnot72.json")
    assert builtin.sigmas == shipped.sigmas == list(PUBLISHED_CNOT_SIGMAS)
    assert len(builtin.pattern) == 3
    assert shipped.printed_sequence().pattern == builtin.printed_sequence().pattern


def test_unknown_source_is_a_usage_error():
    with pytest.raises(UsageError):
        load_sequence("toffoli96")


def test_save_and_reload(tmp_path):
    document = SequenceDocument.from_sequence(canonical_swap_sequence(), pattern_period=3)
    path = tmp_path / "swap.json"
    save_sequence(document, path)
    assert load_sequence(path) == document


def test_empty_sequence_cannot_be_stored():
    with pytest.raises(UsageError):
        SequenceDocument.from_sequence(ControlSequence(steps=()))


def test_convention_is_applied_on_resolve():
    document = SequenceDocument(
        name="t",
        pattern=[{"entangler": "A", "axis": "x"}, {"entangler": "B", "axis": "z"}],
        sigmas=[0.1, 0.2, 0.3],
        convention=Convention(sigma_order="printed-last", sigma_z_sign=-1),
    )
    seq, sign = document.resolved()
    assert sign == -1
    assert seq.sigmas == [0.3, 0.2, 0.1]
    assert document.printed_sequence().sigmas == [0.1, 0.2, 0.3]


def test_malformed_json_reports_line_and_column():
    with pytest.raises(SequenceFormatError) as excinfo:
        parse_sequence_json('{\n  "name": "x",\n  "sigmas": [1.0,, 2.0]\n}')
    assert excinfo.value.line == 3
    assert "line 3" in str(excinfo.value)


def test_schema_errors_are_format_errors():
    payload = {"name": "x", "pattern": [{"entangler": "C", "axis": "x"}], "sigmas": [0.1]}
    with pytest.raises(SequenceFormatError):
        parse_sequence_json(json.dumps(payload))
    with pytest.raises(SequenceFormatError):
        parse_sequence_json(json.dumps({"pattern": [], "sigmas": []}))


def test_report_round_trip(tmp_path):
    report = verify(canonical_swap_sequence(), "swap-printed")
    path = tmp_path / "report.json"
    write_report(report, path)
    assert read_report(VerificationReport, path) == report
    path.write_text("{}")
    with pytest.raises(UsageError):
        read_report(VerificationReport, path)
