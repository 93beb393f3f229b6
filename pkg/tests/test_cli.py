import csv
import io
import json
import subprocess
import sys

import pytest

from irs_covert.cli import build_parser, main
from irs_covert.harness.experiments import COLUMNS


def _run(argv):
    buf = io.StringIO()
    code = main(argv, out=buf)
    return code, buf.getvalue()


def test_parser_has_subcommands():
    p = build_parser()
    for cmd in ("detect-sweep", "covert-rate", "validate", "reproduce"):
        args = p.parse_args([cmd] + (["fig2"] if cmd == "reproduce" else []))
        assert args.command == cmd
    with pytest.raises(SystemExit):
        p.parse_args(["detect-sweep", "--format", "xml"])


def test_detect_sweep_csv(tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("scenario: uplink\ngrid: [10, 20]\n")
    code, text = _run(["detect-sweep", "--config", str(cfg), "--trials", "200", "--seed", "3"])
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(text)))
    assert list(rows[0]) == list(COLUMNS)
    assert len(rows) == 4 and {r["scenario"] for r in rows} == {"uplink"}
    assert rows[1]["trials"] == "200"


def test_detect_sweep_json_to_file(tmp_path):
    out = tmp_path / "o.json"
    code, text = _run(["detect-sweep", "--trials", "100", "--format", "json", "--out", str(out)])
    assert code == 0 and text == ""
    data = json.loads(out.read_text())
    assert list(data[0]) == list(COLUMNS)


def test_covert_rate_small(tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("grid: [25]\nschemes: [proposed, oma]\n")
    code, text = _run(["covert-rate", "--config", str(cfg), "--trials", "2"])
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(text)))
    assert [r["scheme"] for r in rows] == ["proposed", "oma"]
    assert float(rows[1]["covert_rate"]) == 0.0


def test_config_error_reports_keys(tmp_path, capsys):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("grid: []\nbogus: 1\n")
    code, _ = _run(["detect-sweep", "--config", str(cfg)])
    assert code == 2
    assert "bogus" in capsys.readouterr().err


def test_reproduce_list_and_unknown(capsys):
    code, text = _run(["reproduce", "--list"])
    assert code == 0 and "fig10" in text and "ul-plateau" in text
    code, _ = _run(["reproduce", "fig99"])
    assert code == 2
    assert "fig99" in capsys.readouterr().err


def test_reproduce_detection_figure():
    code, text = _run(["reproduce", "dl-dep-n", "--trials", "100"])
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(text)))
    assert {r["swept_param"] for r in rows} == {"n"}


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "irs_covert", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "reproduce" in res.stdout
