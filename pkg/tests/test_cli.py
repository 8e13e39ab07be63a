import json
from pathlib import Path

import numpy as np
import pytest

from cutknit import aqc, cli
from cutknit.cli import (ABLATION_HEADER, BENCH_HEADER, ConfigError, PipelineConfig, cmd_ablation,
                         cmd_pipeline, load_config, main)
from cutknit.pgm import PgmImage, write_pgm

GOLDEN = Path(__file__).parent / "golden"


def header(path: Path) -> str:
    return path.read_text().splitlines()[0]


def test_config_validation():
    with pytest.raises(ConfigError):
        PipelineConfig(mode="fast")
    with pytest.raises(ConfigError):
        PipelineConfig.from_mapping({"n_addr": 2, "bogus": 1})
    assert PipelineConfig(n_data=3).cuts == 3
    assert PipelineConfig(max_cuts=0).cuts == 0


def test_flags_override_file(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"n_addr": 3, "seed": 5}))
    cfg = load_config(str(path), {"seed": 9, "mode": None})
    assert (cfg.n_addr, cfg.seed, cfg.mode) == (3, 9, "analytic")
    assert PipelineConfig.from_mapping(json.loads(cfg.to_json())) == cfg


def test_outputs_and_golden_headers(tmp_path):
    out = tmp_path / "run"
    assert main(["pipeline", "--n-addr", "2", "--n-data", "1", "--aqc", "--output-dir", str(out)]) == 0
    for name in ("bench.csv", "decoded.csv", "counts.csv", "quasi.csv", "angles.csv", "aqc_trace.csv"):
        assert header(out / name) == header(GOLDEN / name), name
    assert json.loads((out / "config.json").read_text())["aqc_enabled"] is True


def test_rerun_from_echo_is_bit_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["pipeline", "--n-addr", "2", "--n-data", "2", "--mode", "sampled", "--shots", "3000",
                 "--seed", "8", "--noise-p", "0.01", "--parallelism", "2", "--output-dir", str(a)]) == 0
    echo = json.loads((a / "config.json").read_text())
    echo["output_dir"] = str(b)
    (tmp_path / "echo.json").write_text(json.dumps(echo))
    assert main(["pipeline", "--config", str(tmp_path / "echo.json")]) == 0
    for f in a.iterdir():
        if f.name not in ("config.json", "timing.csv"):
            assert f.read_bytes() == (b / f.name).read_bytes(), f.name


def test_padding_short_input(tmp_path):
    data = tmp_path / "d.txt"
    data.write_text("0.5, -0.25\n# comment\n0.75\n")
    res = cmd_pipeline(PipelineConfig(n_addr=2, n_data=1, input_path=str(data)))
    assert np.allclose(res.decoded, [0.5, -0.25, 0.75, 0.0], atol=1e-9)


def test_image_command(tmp_path):
    px = (np.arange(16).reshape(4, 4) * 17)
    src, dst = tmp_path / "in.pgm", tmp_path / "out.pgm"
    src.write_bytes(write_pgm(PgmImage(px)))
    assert main(["image", str(src), str(dst), "--n-addr", "3", "--n-data", "2",
                 "--output-dir", str(tmp_path / "o")]) == 0
    assert dst.read_bytes() == src.read_bytes()
    assert header(tmp_path / "o" / "image_metrics.csv") == header(GOLDEN / "image_metrics.csv")


def test_ablation_table(tmp_path):
    cfg = PipelineConfig(n_addr=2, n_data=1, shots=2000, noise_p=0.02, ablation_cuts=(0, 1),
                         ablation_seeds=2, output_dir=str(tmp_path))
    rows = cmd_ablation(cfg)
    assert [r.subexperiment_count for r in rows] == [1, 6]
    assert rows[0].relative_improvement == 0.0 and rows[0].wins == 2
    assert rows[1].qpd_overhead == 9 and rows[1].variance_bound == 9.0
    assert header(tmp_path / "ablation.csv") == header(GOLDEN / "ablation.csv")
    assert ",".join(ABLATION_HEADER) == header(GOLDEN / "ablation.csv")
    assert ",".join(BENCH_HEADER) == header(GOLDEN / "bench.csv")


def test_verify_passes(capsys):
    assert main(["verify"]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out and "INFO CX/printed-table" in out


@pytest.mark.parametrize("argv, code", [
    (["pipeline", "--n-addr", "0"], 2),
    (["pipeline", "--config", "/nonexistent/c.json"], 3),
    (["image", "/nonexistent.pgm"], 3),
    (["pipeline", "--max-cuts", "9"], 5),
    (["pipeline", "--n-addr", "11", "--n-data", "2", "--noise-p", "0.01", "--max-cuts", "0"], 6),
    (["ablation", "--cuts", "7", "--seeds", "1"], 5),
])
def test_exit_codes(argv, code, capsys):
    assert main(argv) == code
    assert "error [" in capsys.readouterr().err


def test_exit_code_encode(tmp_path):
    data = tmp_path / "d.txt"
    data.write_text("0.1 0.2 0.3 0.4 0.5")
    assert main(["pipeline", "--input", str(data)]) == 4
    data.write_text("0.1 zz")
    assert main(["pipeline", "--input", str(data)]) == 4


def test_exit_code_bad_pgm(tmp_path):
    bad = tmp_path / "bad.pgm"
    bad.write_bytes(b"P5 4 4 255\n\x00")
    assert main(["image", str(bad)]) == 3


def test_exit_code_compilation(monkeypatch):
    def fail(*a, **k):
        raise aqc.AqcError("non-finite loss at iteration 3")
    monkeypatch.setattr(cli.aqc, "compile_prefix", fail)
    assert main(["pipeline", "--aqc"]) == 7


def test_exit_code_verify(monkeypatch):
    monkeypatch.setattr(cli, "cmd_verify", lambda seed=0: [cli.VerifyLine("x", False, "broken")])
    assert main(["verify"]) == 8


def test_bad_json_config(tmp_path):
    p = tmp_path / "c.json"
    p.write_text("{nope")
    assert main(["pipeline", "--config", str(p)]) == 2


def test_zero_cut_pipeline_equals_direct_decode():
    from cutknit.circuit import joint_probabilities
    from cutknit.encoder import decode_probability_vector, encode
    data = np.random.default_rng(3).uniform(-1, 1, 8)
    res = cmd_pipeline(PipelineConfig(n_addr=2, n_data=2, max_cuts=0), data)
    direct = decode_probability_vector(joint_probabilities(encode(data, 2, 2)), 2, 2)
    assert np.allclose(res.decoded, direct, atol=1e-12)
    assert res.record.subexperiment_count == 1


def test_sampled_runs_byte_identical():
    cfg = PipelineConfig(n_addr=2, n_data=1, mode="sampled", shots=4000, seed=2)
    a, b = cmd_pipeline(cfg), cmd_pipeline(cfg)
    assert a.decoded.tobytes() == b.decoded.tobytes()
    assert a.counts == b.counts


def test_constant_image_and_layout(tmp_path):
    src = tmp_path / "gray.pgm"
    src.write_bytes(write_pgm(PgmImage(np.full((4, 4), 100), 200, "P2")))
    res = cli.cmd_image(PipelineConfig(n_addr=3, n_data=2), str(src))
    assert np.array_equal(res.image.pixels, np.full((4, 4), 100))
    assert cli.image_layout(1000, 2) == 9 and cli.image_layout(1024, 2) == 9


def test_image_padding_recorded(tmp_path):
    src = tmp_path / "small.pgm"
    src.write_bytes(write_pgm(PgmImage(np.arange(12).reshape(3, 4) * 20)))
    res = cli.cmd_image(PipelineConfig(n_addr=3, n_data=2), str(src))
    assert res.padded == 4 and res.rmse_fraction < 0.01
