import pytest

from synthetic_interlocutor.documents import parse_source, read_sidecar_meta
from synthetic_interlocutor.errors import EmptyDocument, EncodingError, IoError


def write(tmp_path, name, content, encoding="utf-8"):
    p = tmp_path / name
    p.write_bytes(content.encode(encoding) if isinstance(content, str) else content)
    return p


def test_two_speaker_transcript(tmp_path):
    p = write(tmp_path, "t.txt", "A: Hello\nB: Hi there")
    doc = parse_source(p)
    assert doc.turns is not None
    assert [t.speaker for t in doc.turns] == ["A", "B"]
    assert doc.text[doc.turns[0].start : doc.turns[0].end] == "A: Hello"
    assert doc.text[doc.turns[1].start : doc.turns[1].end] == "B: Hi there"


def test_whitespace_only_file(tmp_path):
    p = write(tmp_path, "w.txt", "\n \t")
    with pytest.raises(EmptyDocument):
        parse_source(p)


def test_plain_essay_preserved(tmp_path):
    essay = "  The field was muddy that day.\nWe talked for hours anyway.\n\n"
    p = write(tmp_path, "e.txt", essay)
    doc = parse_source(p)
    assert doc.turns is None
    assert doc.text == essay.strip()


def test_multiline_utterances_extend_turn(tmp_path):
    p = write(tmp_path, "m.txt", "ANNA: It began in March,\nwhen everything closed.\nBO: I remember.")
    doc = parse_source(p)
    assert len(doc.turns) == 2
    first = doc.text[doc.turns[0].start : doc.turns[0].end]
    assert first == "ANNA: It began in March,\nwhen everything closed."


def test_single_speaker_line_is_not_a_transcript(tmp_path):
    p = write(tmp_path, "n.txt", "Note: this is an essay about notes.\nIt has two lines.")
    doc = parse_source(p)
    assert doc.turns is None


def test_leading_prose_disables_turn_detection(tmp_path):
    p = write(tmp_path, "p.txt", "Recorded on site.\nA: Hello\nB: Hi")
    doc = parse_source(p)
    assert doc.turns is None


def test_speaker_label_length_cap(tmp_path):
    long_label = "X" * 41
    p = write(tmp_path, "l.txt", f"{long_label}: hi\n{long_label}: ho")
    assert parse_source(p).turns is None
    ok_label = "X" * 40
    p2 = write(tmp_path, "l2.txt", f"{ok_label}: hi\n{ok_label}: ho")
    assert len(parse_source(p2).turns) == 2


def test_bom_tolerated(tmp_path):
    p = write(tmp_path, "b.txt", b"\xef\xbb\xbfA: hi\nB: ho")
    doc = parse_source(p)
    assert doc.text.startswith("A:")
    assert len(doc.turns) == 2


def test_invalid_utf8(tmp_path):
    p = write(tmp_path, "bad.txt", b"caf\xff valid start")
    with pytest.raises(EncodingError):
        parse_source(p)


def test_unreadable_file(tmp_path):
    with pytest.raises(IoError):
        parse_source(tmp_path / "missing.txt")


def test_turn_spans_ordered_and_disjoint(tmp_path):
    p = write(tmp_path, "o.txt", "A: one\nB: two\nA: three\nB: four")
    doc = parse_source(p)
    prev_end = -1
    for turn in doc.turns:
        assert turn.start > prev_end
        prev_end = turn.end


def test_sidecar_meta(tmp_path):
    p = write(tmp_path, "d.txt", "A diary entry about bread baking.")
    (tmp_path / "d.txt.meta.json").write_text('{"kind": "diary", "project": "DEL"}')
    meta = read_sidecar_meta(p)
    assert meta == {"kind": "diary", "project": "DEL"}


def test_parser_hints_become_metadata(tmp_path):
    p = write(tmp_path, "h.txt", "Some text.")
    doc = parse_source(p, kind="fieldnote", parser_hints={"doc_id": "x/h.txt", "project": "ADD"})
    assert doc.id == "x/h.txt"
    assert doc.kind == "fieldnote"
    assert doc.metadata == {"project": "ADD"}
