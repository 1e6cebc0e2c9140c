import csv
import io
import subprocess
import sys

import pytest

from rbcom.cli import main
from rbcom.steady import carrier_amplitude
from rbcom.config import SystemConfig, validate, with_value

import oracles as o


def run(*argv):
    buf = io.StringIO()
    code = main(list(argv), out=buf)
    return code, buf.getvalue()


def parse_kv(text):
    out = {}
    for line in text.splitlines():
        key, _, rest = line.partition("=")
        out[key.strip()] = rest.split()[0]
    return out


def test_point_baseline():
    code, text = run("point", "preset:baseline")
    assert code == 0
    kv = parse_kv(text)
    ref = o.baseline_chain()
    assert kv["lasing"] == "true"
    assert o.rel(float(kv["carrier_amplitude_Ac"]), ref["A_c"]) < 1e-9
    assert abs(float(kv["capacity"]) - float(ref["capacity"])) < 1e-8
    assert o.rel(float(kv["mean_current_Isig"]), ref["I_sig"]) < 1e-9


def test_point_with_override():
    code, text = run("point", "preset:baseline", "--set", "pump.power_Pin=5")
    assert code == 0
    assert parse_kv(text)["lasing"] == "false"
    assert float(parse_kv(text)["capacity"]) == 0.0


def test_sweep_header_and_count():
    code, text = run("sweep", "preset:baseline", "--var", "depth_m", "--range", "0.001:0.5:7")
    assert code == 0
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == ["depth_m", "Ac", "capacity", "I_sig", "snr", "lasing"]
    assert len(rows) == 8
    assert float(rows[1][0]) == 0.001 and float(rows[-1][0]) == 0.5
    for row in rows[1:-1]:
        vcfg = validate(with_value(SystemConfig(), "depth_m", float(row[0])))
        ss = carrier_amplitude(vcfg)
        assert row[5] == ("true" if ss.lasing else "false")
        assert float(row[1]) == 0.0 if not ss.lasing else o.rel(float(row[1]), ss.carrier_amplitude_Ac) < 1e-9
    # m = 0.5 leaves no room for p > m; the point is reported as not lasing
    assert rows[-1][1:] == ["0.000000000e+00"] * 4 + ["false"]


def test_sweep_led_column():
    code, text = run("sweep", "preset:fig10", "--range", "1:6000:5")
    assert code == 0
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == ["distance_d", "Ac", "capacity", "I_sig", "snr", "lasing", "led_capacity"]
    led = [float(r[6]) for r in rows[1:]]
    assert all(a > b for a, b in zip(led, led[1:]))


def test_sweep_uses_preset_recipe():
    code, text = run("sweep", "preset:fig7")
    assert code == 0
    lines = text.splitlines()
    assert lines[0].startswith("depth_m,")
    assert len(lines) == 201


def test_sweep_is_deterministic_and_parallel_equal(monkeypatch):
    args = ("sweep", "preset:baseline", "--var", "r_s", "--range", "0.001:0.999:40")
    a = run(*args)[1]
    assert a == run(*args)[1]
    monkeypatch.setenv("RBCOM_WORKERS", "3")
    assert run(*args)[1] == a


@pytest.mark.parametrize(
    "argv",
    [
        ("sweep", "preset:baseline", "--var", "depth_m", "--range", "0.5:0.1:3"),
        ("sweep", "preset:baseline", "--var", "depth_m", "--range", "0.1:0.5:1"),
        ("sweep", "preset:baseline", "--var", "depth_m", "--range", "bad"),
        ("sweep", "preset:baseline", "--var", "nope", "--range", "0:1:3"),
        ("point", "missing-file.cfg"),
        ("point", "preset:does_not_exist"),
        ("point", "preset:baseline", "--set", "modulation.depth_m=0.9"),
        ("bogus-command",),
    ],
)
def test_usage_errors_exit_2(argv):
    assert run(*argv)[0] == 2


def test_invalid_config_lists_violations(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("[cavity]\nr_s = 1.5\n[modulation]\ndepth_m = -0.1\n")
    assert run("point", str(cfg))[0] == 2
    err = capsys.readouterr().err
    assert "r_s" in err and "depth_m" in err


def test_threshold_nine_decimals():
    code, text = run("threshold", "preset:baseline", "--var", "depth_m")
    assert code == 0
    value = text.strip()
    assert len(value.split(".")[1]) == 9
    ref = o.threshold_depth(o.baseline_chain()["g0l"], o.t_s(0.1), 0.949)
    assert abs(float(value) - float(ref)) < 2e-9


def test_threshold_distance_with_air_loss():
    code, text = run("threshold", "preset:baseline", "--var", "distance_d", "--set", "cavity.alpha_air=0.01")
    assert code == 0
    assert float(text) == pytest.approx(53.5266578, abs=1e-6)


def test_threshold_without_sign_change_exit_1(capsys):
    assert run("threshold", "preset:baseline", "--var", "distance_d")[0] == 1
    assert "no sign change in range" in capsys.readouterr().err


def test_echo_demo_byte_identical(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run("echo-demo", "preset:baseline", "--scaled", "--seed", "3", "--out", str(a))[0] == 0
    assert run("echo-demo", "preset:baseline", "--scaled", "--seed", "3", "--out", str(b))[0] == 0
    assert a.read_bytes() == b.read_bytes()
    assert a.read_text().splitlines()[0] == "t,x,G,Ac,ye,y_clean"


def test_echo_demo_reports_metrics(tmp_path):
    code, text = run("echo-demo", "preset:baseline", "--scaled", "--out", str(tmp_path / "e.csv"))
    kv = parse_kv(text)
    assert code == 0
    assert kv["raw_exceeds_clean"] == "true"
    assert float(kv["interference_metric_raw"]) > float(kv["interference_metric_clean"])


def test_echo_demo_constant_signal_warns(tmp_path):
    code, text = run("echo-demo", "preset:baseline", "--scaled", "--signal", "constant", "--out", str(tmp_path / "e.csv"))
    assert code == 0
    assert "undefined correlation" in text


def test_dynamics_converges(tmp_path):
    out = tmp_path / "dyn.csv"
    code, text = run("dynamics", "preset:baseline", "--out", str(out))
    assert code == 0
    kv = parse_kv(text)
    assert kv["converged"] == "true"
    assert float(kv["relative_difference"]) < 1e-6
    assert out.read_text().splitlines()[0].startswith("t,")


def test_dynamics_not_converged_exit_1(tmp_path):
    code, _ = run("dynamics", "preset:baseline", "--max-time", "1e-5", "--out", str(tmp_path / "d.csv"))
    assert code == 1


def test_presets_listed():
    code, text = run("presets")
    assert code == 0
    assert {"preset:baseline", "preset:fig7", "preset:fig10"} <= set(text.split())


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "rbcom.cli", "threshold", "preset:baseline", "--var", "eta_d"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert float(proc.stdout) == pytest.approx(0.726163728, abs=1e-9)
