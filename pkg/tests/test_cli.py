"""Command-line surface: flags, formats, exit codes, determinism."""

import pytest

from kimap.cli import DEFAULT_SEED, main, parse_schedule
from kimap.channel import ScheduleError
from kimap.storage import load_database


def run_cli(*argv):
    return main(list(argv))


@pytest.fixture
def db_dir(tmp_path):
    d = tmp_path / "db"
    assert run_cli("init", "--db", str(d), "--tags", "3", "--seed", "9",
                   "--lambda", "16") == 0
    return d


class TestInit:
    def test_creates_records(self, db_dir, capsys):
        lam, records = load_database(db_dir / "kimap.db")
        assert lam == 16 and len(records) == 3
        assert (db_dir / "master.key").exists()

    def test_prints_labels(self, tmp_path, capsys):
        run_cli("init", "--db", str(tmp_path / "x"), "--tags", "2", "--seed", "1")
        out = capsys.readouterr().out.split()
        assert out == ["t001", "t002"]

    def test_refuses_overwrite(self, db_dir):
        assert run_cli("init", "--db", str(db_dir), "--seed", "9") == 2

    def test_force_overwrite_byte_identical(self, db_dir):
        before = (db_dir / "kimap.db").read_bytes(), (db_dir / "master.key").read_bytes()
        assert run_cli("init", "--db", str(db_dir), "--tags", "3", "--seed", "9",
                       "--lambda", "16", "--force") == 0
        after = (db_dir / "kimap.db").read_bytes(), (db_dir / "master.key").read_bytes()
        assert before == after

    def test_odd_width_is_config_error(self, tmp_path):
        assert run_cli("init", "--db", str(tmp_path / "y"), "--lambda", "63") == 2


class TestRun:
    def test_honest_sessions_all_accepted(self, db_dir, capsys):
        code = run_cli("run", "--db", str(db_dir), "--sessions", "100",
                       "--seed", "9", "--hash", "toy", "--lambda", "16")
        out = capsys.readouterr().out
        assert code == 0
        assert "summary sessions=100 accepted=100 rejected=0" in out
        assert out.count("transcript session=") == 100

    def test_drop_once_rejected_plus_recovered(self, db_dir, tmp_path, capsys):
        sched = tmp_path / "sched.txt"
        sched.write_text("1 4 drop\n")
        code = run_cli("run", "--db", str(db_dir), "--sessions", "6", "--seed", "9",
                       "--hash", "toy", "--schedule", str(sched))
        out = capsys.readouterr().out
        assert code == 0
        assert "accepted=5 rejected=1" in out
        assert "recovered=1" in out and "desynced=0" in out

    def test_drop_twice_flags_desync(self, db_dir, tmp_path, capsys):
        # three tags round-robin: sessions 1 and 4 belong to the same tag
        sched = tmp_path / "sched.txt"
        sched.write_text("1 4 drop\n4 4 drop\n")
        run_cli("run", "--db", str(db_dir), "--sessions", "6", "--seed", "9",
                "--hash", "toy", "--schedule", str(sched))
        out = capsys.readouterr().out
        assert "desynced=1" in out

    def test_strict_exit_code(self, db_dir, tmp_path, capsys):
        sched = tmp_path / "sched.txt"
        sched.write_text("1 4 drop\n")
        assert run_cli("run", "--db", str(db_dir), "--sessions", "2", "--seed", "9",
                       "--hash", "toy", "--schedule", str(sched), "--strict") == 1

    def test_db_rewritten_and_round_trips(self, db_dir, capsys):
        run_cli("run", "--db", str(db_dir), "--sessions", "9", "--seed", "9", "--hash", "toy")
        lam, records = load_database(db_dir / "kimap.db")
        assert all(rec.counter == 4 for rec in records.values())
        assert all(rec.key_previous is not None for rec in records.values())

    def test_missing_db_is_config_error(self, tmp_path):
        assert run_cli("run", "--db", str(tmp_path / "nope"), "--sessions", "1") == 2

    def test_corrupt_db_reports_line(self, db_dir, capsys):
        p = db_dir / "kimap.db"
        lines = p.read_text().splitlines()
        lines[1] = "v1 broken"
        p.write_text("\n".join(lines) + "\n")
        assert run_cli("run", "--db", str(db_dir), "--sessions", "1") == 2
        assert ":2:" in capsys.readouterr().err

    def test_unknown_schedule_action(self, db_dir, tmp_path, capsys):
        sched = tmp_path / "sched.txt"
        sched.write_text("1 4 explode\n")
        assert run_cli("run", "--db", str(db_dir), "--sessions", "1",
                       "--schedule", str(sched)) == 2
        assert "explode" in capsys.readouterr().err

    def test_identical_invocations_byte_identical(self, tmp_path, capsys):
        outputs = []
        for name in ("a", "b"):
            d = tmp_path / name
            run_cli("init", "--db", str(d), "--tags", "2", "--seed", "77", "--lambda", "16")
            capsys.readouterr()
            run_cli("run", "--db", str(d), "--sessions", "7", "--seed", "77", "--hash", "toy")
            outputs.append(capsys.readouterr().out)
        assert outputs[0] == outputs[1]
        assert (tmp_path / "a" / "kimap.db").read_bytes() == (tmp_path / "b" / "kimap.db").read_bytes()


class TestGame:
    def test_structured_output(self, capsys):
        code = run_cli("game", "ind", "random-guess", "--trials", "200", "--lambda", "16",
                       "--hash", "toy", "--seed", "3", "--format", "structured")
        out = capsys.readouterr().out
        assert code == 0
        assert out.startswith("gameresult definition=ind distinguisher=random-guess")

    def test_table_output(self, capsys):
        run_cli("game", "backward", "key-knowledge", "--trials", "100", "--lambda", "16",
                "--hash", "toy", "--seed", "3")
        out = capsys.readouterr().out
        assert "advantage" in out and "strategy   key-knowledge" in out

    def test_leaky_control_wins(self, capsys):
        run_cli("game", "backward", "key-knowledge-leaky", "--trials", "100",
                "--lambda", "16", "--hash", "toy", "--seed", "3", "--format", "structured")
        out = capsys.readouterr().out
        wins = int(next(f for f in out.split() if f.startswith("wins=")).split("=")[1])
        assert wins >= 99

    def test_unknown_distinguisher(self, capsys):
        assert run_cli("game", "ind", "psychic") == 2
        assert "unknown distinguisher" in capsys.readouterr().err

    def test_deterministic_output(self, capsys):
        args = ("game", "forward", "random-guess", "--trials", "50", "--lambda", "16",
                "--hash", "toy", "--seed", "5", "--format", "structured")
        run_cli(*args)
        first = capsys.readouterr().out
        run_cli(*args)
        assert capsys.readouterr().out == first

    def test_ind2tag_mode_runs(self, capsys):
        assert run_cli("game", "ind2tag", "random-guess", "--trials", "50",
                       "--lambda", "16", "--hash", "toy", "--seed", "4") == 0

    def test_bad_width_is_config_error(self, capsys):
        assert run_cli("game", "ind", "random-guess", "--lambda", "63",
                       "--trials", "10") == 2


class TestCost:
    def test_default_figures(self, capsys):
        assert run_cli("cost", "--format", "structured") == 0
        out = capsys.readouterr().out
        assert "total_ms=3.04" in out and "batch_serial_s=1.28" in out
        assert "budget pass" in out

    def test_batch_flag(self, capsys):
        run_cli("cost", "--tags", "200", "--format", "structured")
        assert "batch_tags=200 batch_serial_s=1.28" in capsys.readouterr().out

    def test_wider_keys_recomputed(self, capsys):
        run_cli("cost", "--lambda", "128", "--format", "structured")
        out = capsys.readouterr().out
        assert "t2r_ms=0.40" in out and "r2t_ms=3.05" in out

    def test_inflated_ops_fail_budget(self, capsys):
        run_cli("cost", "--hash-ops", "40")
        assert "budget fail" in capsys.readouterr().out


class TestLemma1:
    def test_k8(self, capsys):
        assert run_cli("lemma1", "--k", "8", "--seed", "1") == 0
        assert "distinct=256/256 bijection=yes" in capsys.readouterr().out

    def test_k1_pairs(self, capsys):
        run_cli("lemma1", "--k", "1", "--mask", "1:1")
        out = capsys.readouterr().out
        assert "pair x=1 y=0" in out and "pair x=0 y=1" in out

    def test_k_too_large(self, capsys):
        assert run_cli("lemma1", "--k", "20") == 2


class TestSeedResolution:
    def test_env_seed(self, tmp_path, capsys, monkeypatch):
        monkeypatch.setenv("KIMAP_SEED", "1234")
        run_cli("init", "--db", str(tmp_path / "a"), "--tags", "1")
        a = (tmp_path / "a" / "kimap.db").read_bytes()
        monkeypatch.delenv("KIMAP_SEED")
        run_cli("init", "--db", str(tmp_path / "b"), "--tags", "1", "--seed", "1234")
        b = (tmp_path / "b" / "kimap.db").read_bytes()
        assert a == b

    def test_flag_beats_env(self, tmp_path, monkeypatch, capsys):
        monkeypatch.setenv("KIMAP_SEED", "1234")
        run_cli("init", "--db", str(tmp_path / "a"), "--tags", "1", "--seed", str(DEFAULT_SEED))
        monkeypatch.delenv("KIMAP_SEED")
        run_cli("init", "--db", str(tmp_path / "b"), "--tags", "1")
        assert (tmp_path / "a" / "kimap.db").read_bytes() == (tmp_path / "b" / "kimap.db").read_bytes()


class TestScheduleParsing:
    def test_replace_payload(self, tmp_path):
        f = tmp_path / "s.txt"
        f.write_text("# tamper flight 3 with one candidate\n2 3 replace dead:16 beef:16\n")
        sched = parse_schedule(str(f))
        assert len(sched.actions) == 1
        assert sched.actions[0].kind == "replace"
        assert len(sched.actions[0].payload.candidates) == 1

    def test_replay_line(self, tmp_path):
        f = tmp_path / "s.txt"
        f.write_text("5 3 replay 4\n")
        a = parse_schedule(str(f)).actions[0]
        assert a.kind == "replay" and a.source_session == 4 and a.session_seq == 5

    def test_bad_field_count(self, tmp_path):
        f = tmp_path / "s.txt"
        f.write_text("1 3 replace dead:16\n")
        with pytest.raises(ScheduleError):
            parse_schedule(str(f))

    def test_error_carries_line_number(self, tmp_path):
        f = tmp_path / "s.txt"
        f.write_text("1 4 drop\nbogus line here\n")
        with pytest.raises(ScheduleError) as err:
            parse_schedule(str(f))
        assert ":2:" in str(err.value)
