import csv
import io

import numpy as np
import pytest

from kerrsim import __version__
from kerrsim.circuit import JunctionResonatorSpec, bare_frequency_for_loaded, derive_equivalent_circuit
from kerrsim.cli import main
from kerrsim.config import ConfigError, build_system, parse_config, serialize_config

TWO_PI = 2 * np.pi

REFERENCE_CFG = """\
# published reference device
[circuit]
f_r = 6.4535 GHz
q = 685
i0 = 720 nA
z0 = 50 ohm

[transmon]
model = ladder
f01 = 5.7215 GHz
anharmonicity = -320 MHz
levels = 3

[coupling]
g = 44 MHz

[sweep]
omega = 0.5, 2.5, 8.2
p_start = -130 dBm
p_stop = -100 dBm
points = 7
"""

DESK_BACKACTION = """\
[circuit]
preset = desk_backaction

[sweep]
omega = 1.2
rel_start = 0.1
rel_stop = 2.0
points = 6

[experiment]
branch = L
"""


def run(tmp_path, text, sub, *extra, name="run.ini"):
    p = tmp_path / name
    p.write_text(text)
    return main([sub, "--config", str(p), "--out", str(tmp_path / "out"), *extra])


def read_csv(path):
    lines = path.read_text().splitlines()
    body = [ln for ln in lines if not ln.startswith("#")]
    return lines, list(csv.DictReader(io.StringIO("\n".join(body))))


def test_minimal_config():
    cfg = parse_config("[circuit]\nf_r = 6 GHz\nq = 500\nkerr = -0.5 MHz\n")
    assert cfg.get("circuit", "f_r") == 6e9


@pytest.mark.parametrize("text, line, word", [
    ("[circuit]\nf_r = 6 GHz\nqq = 5\n", 3, "qq"),
    ("[circuit]\n\nf_r = 6 mK\n", 3, "f_r"),
    ("[circut]\n", 1, "circut"),
    ("f_r = 6 GHz\n", 1, "section"),
    ("[circuit]\nf_r = 6 GHz\nf_r = 7 GHz\n", 3, "f_r"),
    ("[circuit]\nq = abc\n", 2, "q"),
])
def test_parse_errors(text, line, word):
    with pytest.raises(ConfigError) as e:
        parse_config(text)
    assert e.value.line == line
    assert word in str(e.value)


def test_reference_device_round_trip():
    cfg = parse_config(REFERENCE_CFG)
    assert parse_config(serialize_config(cfg)) == cfg
    assert cfg.get("circuit", "i0") == pytest.approx(720e-9)
    assert cfg.get("sweep", "omega") == (0.5, 2.5, 8.2)


def test_build_system_reference_device():
    s = build_system(parse_config(REFERENCE_CFG))
    w1 = bare_frequency_for_loaded(TWO_PI * 6.4535e9, 720e-9, 50.0)
    ref = derive_equivalent_circuit(JunctionResonatorSpec(720e-9, w1, 50.0, 685.0))
    assert s.kerr.K == pytest.approx(ref.K, rel=1e-12)
    assert s.g[0] == pytest.approx(TWO_PI * 44e6)


def test_missing_keys():
    with pytest.raises(ConfigError):
        build_system(parse_config("[circuit]\nf_r = 6 GHz\n"))


def test_circuit_params(tmp_path, capsys):
    assert run(tmp_path, REFERENCE_CFG, "circuit-params") == 0
    lines, rows = read_csv(tmp_path / "out" / "circuit_params.csv")
    vals = {r["quantity"]: float(r["value"]) for r in rows}
    w1 = bare_frequency_for_loaded(TWO_PI * 6.4535e9, 720e-9, 50.0)
    ref = derive_equivalent_circuit(JunctionResonatorSpec(720e-9, w1, 50.0, 685.0))
    assert vals["K_khz"] == pytest.approx(ref.K / TWO_PI / 1e3, rel=1e-12)
    assert vals["Kp_hz"] == pytest.approx(ref.Kp / TWO_PI, rel=1e-12)
    assert vals["kappa_mhz"] == pytest.approx(ref.kappa / TWO_PI / 1e6, rel=1e-12)
    assert vals["p"] == pytest.approx(ref.p, rel=1e-12)
    assert "K_khz" in capsys.readouterr().out


def test_csv_header_and_determinism(tmp_path):
    assert run(tmp_path, REFERENCE_CFG, "stability-diagram", "--seed", "7") == 0
    path = tmp_path / "out" / "stability_diagram.csv"
    first = path.read_bytes()
    lines, rows = read_csv(path)
    assert lines[0] == f"# kerrsim {__version__}"
    assert lines[1] == "# seed = 7"
    assert any("f_r = 6.4535 GHz" in ln for ln in lines if ln.startswith("#"))
    assert len(rows) == 21
    assert {r["region"] for r in rows} <= {"mono-L", "mono-H", "bistable"}
    assert run(tmp_path, REFERENCE_CFG, "stability-diagram", "--seed", "7") == 0
    assert path.read_bytes() == first


def test_backaction_csv(tmp_path):
    assert run(tmp_path, DESK_BACKACTION, "backaction", "--plot") == 0
    files = sorted((tmp_path / "out").iterdir())
    csvs = [f for f in files if f.suffix == ".csv"]
    assert len(csvs) == 1
    assert any(f.suffix == ".png" for f in files)
    _, rows = read_csv(csvs[0])
    assert len(rows) == 6
    for r in rows:
        assert r["validity_flag"] == "ok" or set(r["validity_flag"].split("|")) <= {"D2", "lambda",
                                                                                   "lambda_r"}


def test_unknown_subcommand(capsys):
    assert main(["frobnicate"]) != 0
    err = capsys.readouterr().err
    assert "usage" in err and "frobnicate" in err


def test_config_error_exit(tmp_path, capsys):
    assert run(tmp_path, "[circuit]\nf_r = 6 GHz\nqq = 1\n", "circuit-params") == 1
    assert capsys.readouterr().err.startswith("error: config: line 3:")


def test_module_error_exit(tmp_path, capsys):
    bad = "[circuit]\nf_r = 6 GHz\nq = 500\nkerr = -0.5 MHz\n\n[sweep]\nomega = 1.0\nrel_start = 0.1\nrel_stop = 1\npoints = 3\n"
    assert run(tmp_path, bad, "scurve") == 1
    assert capsys.readouterr().err.startswith("error: ")
