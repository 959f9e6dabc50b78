"""Database file format round-trips and error reporting."""

import pytest

from kimap.bits import BitString, Prng
from kimap.protocol import MasterKey, keygen
from kimap.storage import (
    DatabaseFormatError,
    dump_database,
    load_database,
    load_master,
    save_database,
    save_master,
)


@pytest.fixture
def provisioned(tmp_path):
    server, _ = keygen(64, 3, Prng(7, 0))
    db = tmp_path / "kimap.db"
    mk = tmp_path / "master.key"
    save_database(db, 64, server.records)
    save_master(mk, server.master)
    return server, db, mk


def test_roundtrip(provisioned):
    server, db, mk = provisioned
    lam, records = load_database(db)
    assert lam == 64
    assert list(records) == list(server.records)
    for label, rec in records.items():
        orig = server.records[label]
        assert rec.key_current == orig.key_current
        assert rec.key_previous == orig.key_previous
        assert rec.counter == orig.counter
    assert load_master(mk).value == server.master.value


def test_previous_key_persists(tmp_path):
    server, _ = keygen(16, 1, Prng(8, 0))
    server.records["t001"].key_previous = BitString(0xBEEF, 16)
    server.records["t001"].counter = 9
    path = tmp_path / "kimap.db"
    save_database(path, 16, server.records)
    _, records = load_database(path)
    assert records["t001"].key_previous == BitString(0xBEEF, 16)
    assert records["t001"].counter == 9


def test_header_format(provisioned):
    _, db, _ = provisioned
    assert db.read_text().splitlines()[0] == "kimapdb v1 lambda=64"


def test_corrupt_header_reports_line(tmp_path):
    path = tmp_path / "bad.db"
    path.write_text("not a database\n")
    with pytest.raises(DatabaseFormatError) as err:
        load_database(path)
    assert ":1:" in str(err.value)


def test_corrupt_record_reports_line(provisioned, tmp_path):
    _, db, _ = provisioned
    lines = db.read_text().splitlines()
    lines[2] = "v1 t002 not-a-counter ffff:64"
    bad = tmp_path / "bad.db"
    bad.write_text("\n".join(lines) + "\n")
    with pytest.raises(DatabaseFormatError) as err:
        load_database(bad)
    assert ":3:" in str(err.value)


def test_width_mismatch_detected(tmp_path):
    path = tmp_path / "bad.db"
    path.write_text("kimapdb v1 lambda=64\nv1 t001 1 ab:8\n")
    with pytest.raises(DatabaseFormatError):
        load_database(path)


def test_duplicate_label_detected(tmp_path):
    path = tmp_path / "bad.db"
    row = f"v1 t001 1 {'00' * 8}:64"
    path.write_text(f"kimapdb v1 lambda=64\n{row}\n{row}\n")
    with pytest.raises(DatabaseFormatError) as err:
        load_database(path)
    assert ":3:" in str(err.value)


def test_empty_database_rejected(tmp_path):
    path = tmp_path / "bad.db"
    path.write_text("kimapdb v1 lambda=64\n")
    with pytest.raises(DatabaseFormatError):
        load_database(path)


def test_dump_is_deterministic(provisioned):
    server, _, _ = provisioned
    assert dump_database(64, server.records) == dump_database(64, server.records)


def test_master_file_roundtrip(tmp_path):
    mk = MasterKey(BitString(0x1234567890ABCDEF, 64))
    path = tmp_path / "master.key"
    save_master(path, mk)
    assert load_master(path).value == mk.value
