import csv
import json
import subprocess
import sys

import pytest

from streamcube import Engine
from streamcube.cli import main


@pytest.fixture(scope="module")
def synth_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("synth")
    assert main(["synth", "--pattern", "1,2,1", "--seed", "3", "--out-dir", str(out)]) == 0
    return out


@pytest.fixture(scope="module")
def run_dir(synth_dir, tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    assert main(["run", str(synth_dir / "events.csv"), "--seed", "7", "--out-dir", str(out)]) == 0
    return out


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_run_artifacts(run_dir):
    segments = rows(run_dir / "segments.csv")
    assert len(segments) >= 3  # two or more shifts
    assert segments[0]["t_start"] == "0" and segments[-1]["t_end"] == "90"
    verdicts = rows(run_dir / "verdicts.csv")
    assert list(verdicts[0]) == ["window_start", "action", "regime_id", "cost_stay",
                                 "cost_existing", "cost_new", "score_bits",
                                 "score_bits_per_event", "n_events"]
    assert len(verdicts) == 9
    manifest = json.loads((run_dir / "manifest.json").read_text())
    listed = {o["path"] for o in manifest["outputs"]}
    assert listed == {"verdicts.csv", "segments.csv", "regimes.json", "vocab.json",
                      "snapshot.bin"}
    assert manifest["seed"] == 7 and manifest["config"]["tau"] == 10
    assert len(manifest["inputs"][0]["sha256"]) == 64
    restored = Engine.restore((run_dir / "snapshot.bin").read_bytes())
    assert restored.description.n_segments == len(segments)


def test_run_is_reproducible(synth_dir, run_dir, tmp_path):
    assert main(["run", str(synth_dir / "events.csv"), "--seed", "7",
                 "--out-dir", str(tmp_path)]) == 0
    for name in ("verdicts.csv", "segments.csv", "regimes.json", "snapshot.bin",
                 "manifest.json"):
        assert (tmp_path / name).read_bytes() == (run_dir / name).read_bytes(), name


def test_run_from_manifest_reproduces(synth_dir, run_dir, tmp_path):
    assert main(["run", str(synth_dir / "events.csv"), "--config",
                 str(run_dir / "manifest.json"), "--out-dir", str(tmp_path)]) == 0
    assert (tmp_path / "verdicts.csv").read_bytes() == (run_dir / "verdicts.csv").read_bytes()


def test_run_flags_override_config(synth_dir, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"tau": 15, "k": 3}))
    assert main(["run", str(synth_dir / "events.csv"), "--config", str(cfg), "--tau", "30",
                 "--out-dir", str(tmp_path / "o")]) == 0
    manifest = json.loads((tmp_path / "o" / "manifest.json").read_text())
    assert manifest["config"]["tau"] == 30 and manifest["config"]["n_components"] == 3


def test_run_missing_input(tmp_path, capsys):
    assert main(["run", str(tmp_path / "nope.csv")]) == 2
    assert "usage" in capsys.readouterr().err


def test_run_invalid_flags(synth_dir, tmp_path, capsys):
    assert main(["run", str(synth_dir / "events.csv"), "--tau", "0",
                 "--out-dir", str(tmp_path)]) == 2
    with pytest.raises(SystemExit) as exc:
        main(["run", str(synth_dir / "events.csv"), "--tau", "ten"])
    assert exc.value.code == 2


def test_run_malformed_row(tmp_path, capsys):
    src = tmp_path / "bad.csv"
    src.write_text("tick,a,b\n0,x,y\n1,x\n")
    assert main(["run", str(src), "--out-dir", str(tmp_path / "o")]) == 1
    assert "row 3" in capsys.readouterr().err


def test_synth_patterns_and_sizes(tmp_path):
    assert main(["synth", "--pattern", "1,2,3,2,1", "--out-dir", str(tmp_path / "a")]) == 0
    labels = [r["label"] for r in rows(tmp_path / "a" / "labels.csv")]
    phases = [labels[i] for i in range(0, len(labels), 30)]
    assert phases == ["1", "2", "3", "2", "1"]
    assert main(["synth", "--events", "0", "--out-dir", str(tmp_path / "b")]) == 0
    assert rows(tmp_path / "b" / "events.csv") == []
    assert main(["synth", "--pattern", "1,,2", "--out-dir", str(tmp_path / "c")]) == 2


@pytest.mark.slow
def test_synth_full_scale(tmp_path):
    assert main(["synth", "--events", "100000", "--dims", "100,100,100,100",
                 "--ticks-per-phase", "100", "--out-dir", str(tmp_path)]) == 0
    with open(tmp_path / "events.csv") as fh:
        assert sum(1 for _ in fh) == 100_001


def test_eval_ce(synth_dir, run_dir, tmp_path, capsys):
    labels = synth_dir / "labels.csv"
    assert main(["eval", "ce", "--pred", str(labels), "--truth", str(labels)]) == 0
    assert "ce=0.0" in capsys.readouterr().out
    out = tmp_path / "m.json"
    assert main(["eval", "ce", "--pred", str(run_dir / "verdicts.csv"), "--truth", str(labels),
                 "--tau", "10", "--out", str(out)]) == 0
    assert json.loads(out.read_text())["ce"] <= 0.5


def test_eval_ce_length_mismatch(synth_dir, run_dir):
    assert main(["eval", "ce", "--pred", str(run_dir / "verdicts.csv"),
                 "--truth", str(synth_dir / "labels.csv")]) == 2
    short = synth_dir.parent / "short.csv"
    short.write_text("tick,label\n0,1\n")
    assert main(["eval", "ce", "--pred", str(short), "--truth", str(synth_dir / "labels.csv")]) == 2


def test_eval_auc_hand_case(tmp_path, capsys):
    (tmp_path / "s.csv").write_text("score\n0.9\n0.8\n0.3\n0.2\n")
    (tmp_path / "l.csv").write_text("tick,label\n0,1\n1,1\n2,0\n3,0\n")
    assert main(["eval", "auc", "--scores", str(tmp_path / "s.csv"),
                 "--labels", str(tmp_path / "l.csv"), "--positive", "1"]) == 0
    assert "auc=1.0" in capsys.readouterr().out
    (tmp_path / "l2.csv").write_text("tick,label\n0,1\n1,0\n")
    assert main(["eval", "auc", "--scores", str(tmp_path / "s.csv"),
                 "--labels", str(tmp_path / "l2.csv")]) == 2


def test_eval_nll(synth_dir, run_dir, tmp_path):
    out = tmp_path / "nll.json"
    assert main(["eval", "nll", "--events", str(synth_dir / "events.csv"),
                 "--run-dir", str(run_dir), "--out", str(out)]) == 0
    data = json.loads(out.read_text())
    assert len(data["nll_per_window"]) == 9 and all(x > 0 for x in data["nll_per_window"])
    assert main(["eval", "nll", "--events", str(synth_dir / "events.csv"),
                 "--run-dir", str(run_dir), "--regime", "99"]) == 2


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "streamcube", "--version"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.strip()
