import json
import shutil
import subprocess

import numpy as np
import pytest

from shearframes.cli import main

SMALL_BENCH = ["bench", "--grid", "128", "--n-min", "16", "--n-max", "2048", "--n-count", "10", "--f0", "4",
               "--c1", "1", "--c2", "1"]


def _report(text):
    return json.loads(text[text.index("{"):])


def test_frame_bounds_bandlimited(capsys):
    code = main(["frame-bounds", "--dim", "2", "--gen", "bandlimited", "--grid", "32", "--f0", "4",
                 "--c1", "0.125", "--c2", "0.125", "--expect", "0.999", "1.001"])
    out = capsys.readouterr().out
    assert code == 0
    assert "Numerical (B/A)" in out and "Translation constants (c1, c2)" in out
    assert _report(out)["rows"][0]["estimate"]["ratio"] == pytest.approx(1.0, abs=1e-3)


def test_frame_bounds_expect_failure(capsys):
    code = main(["frame-bounds", "--dim", "2", "--gen", "bandlimited", "--grid", "32", "--f0", "4",
                 "--expect", "5", "6"])
    assert code == 1
    assert "FAIL" in capsys.readouterr().err


def test_c2_above_c1_is_usage_error(capsys):
    assert main(["frame-bounds", "--dim", "2", "--c1", "0.5", "--c2", "0.9"]) == 2
    assert "c2 <= c1" in capsys.readouterr().err


def test_bad_config_key(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"grid": 32, "no-such-key": 1}))
    assert main(["bench", "--config", str(cfg)]) == 2
    assert "no_such_key" in capsys.readouterr().err or "no-such-key" in capsys.readouterr().err


def test_config_then_flags(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"systems": ["fourier"], "grid": 32, "n-min": 4, "n-max": 256, "n-count": 8}))
    out = tmp_path / "o"
    assert main(["bench", "--config", str(cfg), "--grid", "64", "--out", str(out)]) == 0
    fits = json.loads((out / "fits.json").read_text())
    assert fits["config"]["grid"] == 64 and fits["config"]["n_min"] == 4


def test_missing_phantom_file(tmp_path):
    assert main(["bench", "--phantom", "file", "--phantom-file", str(tmp_path / "none.raw")]) == 2


def test_unknown_flag():
    assert main(["bench", "--bogus"]) == 2


def test_bench_outputs_and_determinism(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(SMALL_BENCH + ["--out", str(a)]) == 0
    assert main(SMALL_BENCH + ["--out", str(b)]) == 0
    for name in ("fourier.csv", "haar.csv", "shearlet.csv", "fits.json", "bench.svg"):
        assert (a / name).read_bytes() == (b / name).read_bytes(), name
    svg = (a / "bench.svg").read_text()
    assert 'viewBox="0 0 1000 700"' in svg
    header = (a / "shearlet.csv").read_text().splitlines()[0]
    assert header == "N,err_sq,tail,lemma1_bound"
    fits = json.loads((a / "fits.json").read_text())
    assert fits["results"]["shearlet"]["lemma1_violations"] == 0


def test_decay_case_switch(tmp_path, capsys):
    out = tmp_path / "d"
    code = main(["decay", "--grid", "128", "--f0", "4", "--s", "4.0", "--out", str(out)])
    assert code == 0
    assert "belongs to case (ii)" in capsys.readouterr().err
    summary = json.loads((out / "decay.json").read_text())
    assert summary["case_run"] == "ii"
    assert 'viewBox="0 0 1000 700"' in (out / "decay.svg").read_text()
    assert (out / "decay.csv").read_text().startswith("j,")


@pytest.mark.skipif(shutil.which("shearframes") is None, reason="console script not installed")
def test_console_script():
    res = subprocess.run(["shearframes", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "frame-bounds" in res.stdout
