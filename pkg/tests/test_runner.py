import csv
import json

import pytest

from forestreturn import cli, runner
from forestreturn.defaults import data_path

SMALL = """
scenario: {mode: %(mode)s}
stands: {species: [spruce], planting_densities: [2400]}
search:
  rotation_months: {start: 480, stop: 690, step: 30}
  trigger_ba: [null, 22]
  pivot_class: [1, 2]
  from_above: [0.0, 0.5]
  quality_depth: [0.0, 0.3]
  quality_min_class: [0]
  max_thinnings: [1]
output_dir: out
"""


def write_config(tmp_path, text=None, mode="vigor_quality", **extra):
    text = text if text is not None else SMALL % {"mode": mode}
    for key, value in extra.items():
        text += f"{key}: {value}\n"
    p = tmp_path / "config.yaml"
    p.write_text(text)
    return p


def read_csv(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_run_writes_all_outputs(tmp_path, capsys):
    cfg = write_config(tmp_path)
    assert cli.main(["run", str(cfg)]) == 0
    out = tmp_path / "out"
    for name in (runner.FIG1, runner.FIG2, runner.FIG3, runner.FIG4, runner.OPTIMUM):
        rows = read_csv(out / name)
        assert rows[0] == runner.HEADERS[name]
    manifest = json.loads((out / runner.MANIFEST).read_text())
    assert manifest["scenario"]["mode"] == "vigor_quality"
    assert manifest["config_sha256"]
    assert "placeholder" in manifest["coefficient_provenance"]
    assert (out / runner.TIMESTAMP).exists()
    assert "spruce" in capsys.readouterr().out


def test_fig2_stops_at_financial_maturity(tmp_path):
    cfg = write_config(tmp_path)
    cli.main(["run", str(cfg)])
    best = read_csv(tmp_path / "out" / runner.OPTIMUM)[1]
    tau = int(best[runner.HEADERS[runner.OPTIMUM].index("rotation_months")])
    ages = [int(r[2]) for r in read_csv(tmp_path / "out" / runner.FIG2)[1:]]
    assert ages[0] == 240 and ages[-1] == tau


def test_reruns_are_byte_identical(tmp_path):
    cfg = write_config(tmp_path)
    cli.main(["run", str(cfg)])
    first = {p.name: p.read_bytes() for p in (tmp_path / "out").iterdir() if p.name != runner.TIMESTAMP}
    cli.main(["run", str(cfg)])
    second = {p.name: p.read_bytes() for p in (tmp_path / "out").iterdir() if p.name != runner.TIMESTAMP}
    assert first == second


def test_reference_removal_below_pivot_is_striproad_only(tmp_path):
    text = SMALL % {"mode": "reference"}
    text = text.replace("trigger_ba: [null, 22]", "trigger_ba: [22]").replace("max_thinnings: [1]", "max_thinnings: [2]")
    cfg = write_config(tmp_path, text)
    assert cli.main(["run", str(cfg)]) == 0
    best = dict(zip(*read_csv(tmp_path / "out" / runner.OPTIMUM)))
    pivot = int(best["pivot_class"])
    rows = read_csv(tmp_path / "out" / runner.FIG3)[1:]
    assert rows
    lowest = 50.0
    for r in rows:
        index, lower, frac = int(r[2]), float(r[4]), float(r[5])
        if (lower - lowest) / 50.0 < pivot:
            expected = float(best["striproad_fraction"]) if index == 1 else 0.0
            assert frac == pytest.approx(expected, abs=1e-12)


def test_sweep_and_optimize_verbs(tmp_path):
    cfg = write_config(tmp_path)
    assert cli.main(["sweep-rotation", str(cfg), "-o", str(tmp_path / "sweep")]) == 0
    rows = read_csv(tmp_path / "sweep" / runner.FIG1)
    assert rows[0] == runner.HEADERS[runner.FIG1]
    assert [int(r[2]) for r in rows[1:]] == list(range(480, 691, 30))
    assert cli.main(["optimize", str(cfg), "-o", str(tmp_path / "opt")]) == 0
    assert len(read_csv(tmp_path / "opt" / runner.OPTIMUM)) == 2


def test_alpha_sweep_report(tmp_path):
    cfg = write_config(tmp_path, alpha_sweep="[0.5, 0.7]")
    assert cli.main(["run", str(cfg)]) == 0
    rows = read_csv(tmp_path / "out" / runner.ALPHA)
    assert rows[0] == runner.HEADERS[runner.ALPHA]
    assert [float(r[2]) for r in rows[1:]] == [0.5, 0.7]
    assert float(rows[1][6]) == 0.0


def test_validate_tables(tmp_path, capsys):
    cfg = write_config(tmp_path)
    assert cli.main(["validate-tables", str(cfg)]) == 0
    assert "ok:" in capsys.readouterr().out


def test_default_config_parses():
    config = runner.load_config(data_path("default_config.yaml"))
    assert config.scenario.alpha == 0.5 and config.scenario.half_width_b == 0.5
    assert config.scenario.step_months == 30 and config.scenario.application_age_offset_months == 90
    assert sorted({s.planting_density for s in config.stands}) == [1200, 2400]
    assert len(config.stands) == 6


# --------------------------------------------------------------------------
# exit codes

def test_config_parse_errors(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text("scenario: [unclosed\n")
    assert cli.main(["run", str(bad)]) == 2
    assert "bad.yaml" in capsys.readouterr().err
    assert cli.main(["run", str(write_config(tmp_path, "nonsense_key: 1\n"))]) == 2
    assert cli.main(["run", str(write_config(tmp_path, "scenario: {mode: fancy}\n"))]) == 2
    assert cli.main(["run", str(tmp_path / "missing.yaml")]) == 2


def test_table_errors(tmp_path, capsys):
    yields = tmp_path / "yields.csv"
    yields.write_text("species,class_lower_mm,v_pulp_m3,v_saw_m3\nspruce,50,oops,0\n")
    cfg = write_config(tmp_path, SMALL % {"mode": "reference"} + "tables: {yields: yields.csv}\n")
    assert cli.main(["run", str(cfg)]) == 3
    err = capsys.readouterr().err
    assert "yields.csv" in err and "row 2" in err
    cfg = write_config(tmp_path, SMALL % {"mode": "reference"} + "tables: {prices: nowhere.csv}\n")
    assert cli.main(["validate-tables", str(cfg)]) == 3


def test_missing_yield_row_named(tmp_path, capsys):
    src = data_path("placeholder_yields.csv").read_text().splitlines()
    kept = [line for line in src if not line.startswith("pine,300")]
    (tmp_path / "yields.csv").write_text("\n".join(kept) + "\n")
    cfg = write_config(tmp_path, SMALL % {"mode": "reference"} + "tables: {yields: yields.csv}\n")
    assert cli.main(["validate-tables", str(cfg)]) == 0  # only spruce is configured
    text = (SMALL % {"mode": "reference"}).replace("species: [spruce]", "species: [pine]")
    cfg = write_config(tmp_path, text + "tables: {yields: yields.csv}\n")
    assert cli.main(["validate-tables", str(cfg)]) == 3
    assert "pine, 300 mm" in capsys.readouterr().err


def test_degenerate_simulation(tmp_path, capsys):
    (tmp_path / "prices.csv").write_text("species,pulp_price,saw_price\nspruce,0,0\npine,0,0\nbirch,0,0\n")
    cfg = write_config(tmp_path, SMALL % {"mode": "reference"} + "tables: {prices: prices.csv}\n")
    assert cli.main(["run", str(cfg)]) == 4
    assert "degenerate" in capsys.readouterr().err


def test_module_entry_point(tmp_path):
    import subprocess
    import sys

    cfg = write_config(tmp_path)
    done = subprocess.run([sys.executable, "-m", "forestreturn", "validate-tables", str(cfg)],
                          capture_output=True, text=True)
    assert done.returncode == 0, done.stderr
