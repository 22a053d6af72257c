import json

import pytest

from nanolander import cli
from nanolander.config import ConfigError, parse_config


def write(tmp_path, text, name="c.yaml"):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_defaults_filled(tmp_path):
    cfg = parse_config(write(tmp_path, "n_landers: 40\nseed: 1\n"), "coverage")
    assert cfg.params["r_c"] == 5.0 and cfg.params["r_s"] == 2.5 and cfg.params["degree"] == 3
    assert cfg.master_seed == 1


def test_range_error(tmp_path):
    with pytest.raises(ConfigError, match="n_landers"):
        parse_config(write(tmp_path, "n_landers: 0\n"), "coverage")


def test_unknown_key_named_with_line(tmp_path):
    with pytest.raises(ConfigError, match=r"'foo' \(line 3\)"):
        parse_config(write(tmp_path, "seed: 1\n# note\nfoo: 2\n"), "coverage")


def test_type_error(tmp_path):
    with pytest.raises(ConfigError, match="degree"):
        parse_config(write(tmp_path, "degree: three\n"), "coverage")


def test_malformed_yaml(tmp_path):
    with pytest.raises(ConfigError, match="line"):
        parse_config(write(tmp_path, "seed: [1\n"), "coverage")


def test_kind_mismatch(tmp_path):
    with pytest.raises(ConfigError, match="kind"):
        parse_config(write(tmp_path, "kind: hop\n"), "coverage")


def test_kind_from_file(tmp_path):
    assert parse_config(write(tmp_path, "kind: hop\n")).kind == "hop"


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        parse_config(tmp_path / "nope.yaml", "hop")


def test_hash_stable_under_reordering(tmp_path):
    a = parse_config(write(tmp_path, "seed: 1\nn_landers: 12\n", "a.yaml"), "coverage")
    b = parse_config(write(tmp_path, "n_landers: 12\nseed: 1\n", "b.yaml"), "coverage")
    c = parse_config(write(tmp_path, "n_landers: 13\nseed: 1\n", "c.yaml"), "coverage")
    assert a.digest() == b.digest() != c.digest()


def test_obstacle_entries(tmp_path):
    cfg = parse_config(write(tmp_path, "obstacles:\n  - [1, 2]\n  - [3, 4, 0.5]\n"), "coverage")
    assert cfg.params["obstacles"] == [[1.0, 2.0, 0.0], [3.0, 4.0, 0.5]]
    with pytest.raises(ConfigError):
        parse_config(write(tmp_path, "obstacles:\n  - [1]\n", "bad.yaml"), "coverage")


def test_hop_run_and_manifest(tmp_path):
    out = tmp_path / "out"
    code = cli.main(["hop", "--config", str(write(tmp_path, "dt: 0.02\n")), "--out", str(out)])
    assert code == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["max_speed_m_s"] == pytest.approx(0.07, rel=0.1)
    manifest = json.loads((out / "manifest.json").read_text())
    on_disk = sorted(p.name for p in out.iterdir())
    assert manifest["files"] == on_disk
    assert {"config_hash", "version", "seed", "wall_time_s"} <= set(manifest)


def test_rerun_byte_identical(tmp_path):
    cfg = write(tmp_path, "n_landers: 12\nmax_steps: 200\nseed: 4\n")
    for name in ("a", "b"):
        cli.main(["coverage", "--config", str(cfg), "--out", str(tmp_path / name), "--seed", "9"])
    for f in ("swarm.csv", "metrics.json", "config.resolved.json"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
    assert json.loads((tmp_path / "a" / "manifest.json").read_text())["seed"] == 9


def test_unconverged_exit_code(tmp_path):
    cfg = write(tmp_path, "n_landers: 30\nmax_steps: 5\n")
    assert cli.main(["coverage", "--config", str(cfg), "--out", str(tmp_path / "o")]) == cli.EXIT_UNCONVERGED
    assert (tmp_path / "o" / "metrics.json").exists()


def test_bad_config_exit_code(tmp_path, capsys):
    cfg = write(tmp_path, "foo: 1\n")
    assert cli.main(["exclusion", "--config", str(cfg), "--out", str(tmp_path / "o")]) == cli.EXIT_ERROR
    assert "foo" in capsys.readouterr().err


def test_exclusion_run(tmp_path):
    cfg = write(tmp_path, "n_landers: 20\nseed: 2\n")
    assert cli.main(["exclusion", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    metrics = json.loads((tmp_path / "o" / "metrics.json").read_text())
    assert metrics["min_site_dist"] >= 2.0


def test_gravity_run(tmp_path):
    cfg = write(tmp_path, "builtin: cube\nresolution: 0.5\n")
    assert cli.main(["gravity", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    assert (tmp_path / "o" / "gravity_map.csv").read_text().startswith("x,y,z,potential,ax,ay,az")


def test_tumble_run(tmp_path):
    cfg = write(tmp_path, "wheel_speed: 2.5\n")
    assert cli.main(["tumble", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    assert json.loads((tmp_path / "o" / "summary.json").read_text())["range_m"] > 0


def test_evolve_rows(tmp_path):
    cfg = write(tmp_path, "pop_size: 8\ngenerations: 5\neval_seeds: [0]\nmax_steps: 400\n")
    assert cli.main(["evolve", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    rows = (tmp_path / "o" / "generations.csv").read_text().splitlines()
    assert len(rows) == 1 + 5


def test_module_entry_point():
    import subprocess
    import sys

    res = subprocess.run([sys.executable, "-m", "nanolander", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and "nanolander" in res.stdout
