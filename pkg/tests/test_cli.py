import json
import subprocess
import sys

import numpy as np
import pytest

from difffree.channel2d import ChannelGrid
from difffree.cli import (
    EXIT_ABORT,
    EXIT_CONFIG,
    EXIT_OK,
    OUTPUT_ENV,
    ConfigError,
    build_parser,
    main,
    parse_config,
    read_field_csv,
)

SMALL_CHANNEL = ["--nx", "8", "--ny", "17", "--dt", "1e-2", "--t-end", "0.05", "--diag-stride", "1"]


def _csv(path):
    lines = path.read_text().splitlines()
    return lines[0], lines[1].split(","), [ln.split(",") for ln in lines[2:]]


def _only_run(root, kind):
    (run,) = [d for d in root.iterdir() if d.name.startswith(kind)]
    return run


class TestParse:
    def test_heat_compare_defaults(self, tmp_path):
        cfg = parse_config(["heat-compare", "--output", str(tmp_path)])
        assert cfg.params["nu"] == 0.1 and cfg.params["t_end"] == 0.1 and cfg.params["bc"] == "all"
        assert cfg.seed == 0

    def test_nu_list(self):
        cfg = parse_config(["heat-sweep", "--nu-list", "1e-3,1e-4,1e-5,1e-6"])
        assert cfg.params["nu_list"] == [1e-3, 1e-4, 1e-5, 1e-6]

    @pytest.mark.parametrize("bad", ["", "1e-3,abc", "1e-3,-1"])
    def test_bad_nu_list(self, bad):
        with pytest.raises(ConfigError):
            parse_config(["heat-sweep", "--nu-list", bad])

    def test_flag_beats_file(self, tmp_path):
        f = tmp_path / "c.json"
        f.write_text(json.dumps({"bc": "noslip", "nu": 0.3}))
        cfg = parse_config(["heat-compare", "--config", str(f), "--bc", "difffree"])
        assert cfg.params["bc"] == "difffree"
        assert cfg.params["nu"] == 0.3

    def test_unknown_file_key(self, tmp_path):
        f = tmp_path / "c.json"
        f.write_text(json.dumps({"viscosity": 0.3}))
        with pytest.raises(ConfigError, match="unknown key"):
            parse_config(["heat-compare", "--config", str(f)])

    def test_file_for_other_kind(self, tmp_path):
        f = tmp_path / "c.json"
        f.write_text(json.dumps({"kind": "annulus-run"}))
        with pytest.raises(ConfigError):
            parse_config(["heat-compare", "--config", str(f)])

    def test_unreadable_file(self, tmp_path):
        with pytest.raises(ConfigError):
            parse_config(["heat-compare", "--config", str(tmp_path / "missing.json")])
        bad = tmp_path / "bad.json"
        bad.write_text("{nu: 1")
        with pytest.raises(ConfigError):
            parse_config(["heat-compare", "--config", str(bad)])

    def test_unknown_flag(self):
        with pytest.raises(ConfigError):
            parse_config(["heat-compare", "--viscosity", "1"])

    @pytest.mark.parametrize("argv", [["channel-run", "--dt", "-1"], ["annulus-run", "--a", "3"],
                                      ["channel-run", "--nx", "0"], ["heat-compare", "--bc", "sticky"]])
    def test_invalid_values(self, argv):
        with pytest.raises(ConfigError):
            parse_config(argv)

    def test_output_from_environment(self, tmp_path, monkeypatch):
        monkeypatch.setenv(OUTPUT_ENV, str(tmp_path))
        assert parse_config(["energy-growth"]).output_dir == tmp_path

    def test_workers_not_hashed(self):
        a = parse_config(["heat-sweep", "--workers", "1"])
        b = parse_config(["heat-sweep", "--workers", "4"])
        assert a.hash == b.hash and a.execution != b.execution

    def test_hash_tracks_parameters(self):
        assert parse_config(["heat-compare"]).hash != parse_config(["heat-compare", "--nu", "0.2"]).hash

    def test_help_lists_defaults(self):
        sub = build_parser()._subparsers._group_actions[0].choices["channel-run"]
        text = sub.format_help()
        assert "--nu-list" not in text and "--t-end" in text and "default 0.01" in text


class TestRun:
    def test_energy_growth(self, tmp_path, capsys):
        assert main(["energy-growth", "--output", str(tmp_path)]) == EXIT_OK
        out = capsys.readouterr().out
        assert "0.31746031746031" in out and "relative error" in out
        run = _only_run(tmp_path, "energy-growth")
        first, header, rows = _csv(run / "energy_growth.csv")
        manifest = json.loads((run / "manifest.json").read_text())
        assert first == f"# manifest {manifest['hash']}"
        assert manifest["status"] == "ok" and manifest["params"]["nu"] == 1.0
        assert float(rows[0][header.index("rel_error")]) < 1e-8

    def test_repeat_run_identical_bytes(self, tmp_path):
        for root in ("a", "b"):
            assert main(["channel-run", "--output", str(tmp_path / root), *SMALL_CHANNEL]) == EXIT_OK
        ra, rb = _only_run(tmp_path / "a", "channel-run"), _only_run(tmp_path / "b", "channel-run")
        assert ra.name == rb.name
        for name in ("diagnostics.csv", "field.csv", "manifest.json"):
            assert (ra / name).read_bytes() == (rb / name).read_bytes()

    def test_channel_csv_empty_circulations(self, tmp_path):
        main(["channel-run", "--output", str(tmp_path), *SMALL_CHANNEL])
        _, header, rows = _csv(_only_run(tmp_path, "channel-run") / "diagnostics.csv")
        assert header[0] == "t"
        i, j = header.index("circ_inner"), header.index("circ_outer")
        assert all(r[i] == "" and r[j] == "" for r in rows)

    def test_sweep_independent_of_workers(self, tmp_path):
        args = ["heat-sweep", "--nu-list", "1e-3,1e-4,1e-5", "--nsteps", "20", "--bc", "stressfree"]
        assert main([*args, "--output", str(tmp_path / "a"), "--workers", "1"]) == EXIT_OK
        assert main([*args, "--output", str(tmp_path / "b"), "--workers", "3"]) == EXIT_OK
        ra, rb = _only_run(tmp_path / "a", "heat-sweep"), _only_run(tmp_path / "b", "heat-sweep")
        for f in ra.glob("*.csv"):
            assert f.read_bytes() == (rb / f.name).read_bytes()

    def test_channel_sweep_writes_slope(self, tmp_path):
        argv = ["channel-sweep", "--output", str(tmp_path), "--nu-list", "4e-3,2e-3,1e-3",
                "--nx", "8", "--ny", "17", "--dt", "1e-2", "--t-end", "0.1"]
        assert main(argv) == EXIT_OK
        _, header, rows = _csv(_only_run(tmp_path, "channel-sweep") / "fit.csv")
        assert header[0] == "slope" and len(rows) == 1 and np.isfinite(float(rows[0][0]))

    def test_config_error_exit(self, tmp_path):
        assert main(["channel-run", "--output", str(tmp_path), "--nx", "7"]) == EXIT_CONFIG
        assert main(["heat-compare", "--bogus"]) == EXIT_CONFIG

    def test_abort_exit_and_failure_marker(self, tmp_path):
        argv = ["channel-run", "--output", str(tmp_path), "--nx", "8", "--ny", "17", "--dt", "5", "--t-end", "10"]
        assert main(argv) == EXIT_ABORT
        m = json.loads((_only_run(tmp_path, "channel-run") / "manifest.json").read_text())
        assert m["status"] == "failed" and m["error"].startswith("abort")

    def test_annulus_and_report(self, tmp_path):
        argv = ["annulus-run", "--output", str(tmp_path), "--omega0", "curl-free", "--ntheta", "16", "--nr", "17",
                "--t-end", "0.05", "--diag-stride", "1"]
        assert main(argv) == EXIT_OK
        _, header, rows = _csv(_only_run(tmp_path, "annulus-run") / "diagnostics.csv")
        assert float(rows[-1][header.index("circ_inner")]) == pytest.approx(1.0, abs=1e-14)
        assert main(["report", "--output", str(tmp_path)]) == EXIT_OK
        _, header, rows = _csv(tmp_path / "report.csv")
        assert [r[2] for r in rows] == ["ok"]

    def test_blprofile_presets_and_custom(self, tmp_path):
        base = ["blprofile-run", "--output", str(tmp_path), "--nz", "128", "--zmax", "12", "--dt", "1e-2", "--t-end", "0.1"]
        assert main([*base, "--preset", "zero"]) == EXIT_OK
        src = tmp_path / "src.csv"
        src.write_text("z,G\n0,1\n2,0\n")
        assert main([*base, "--preset", str(src)]) == EXIT_OK
        assert main([*base, "--preset", "nonexistent"]) == EXIT_CONFIG

    def test_heat_compare(self, tmp_path):
        assert main(["heat-compare", "--output", str(tmp_path), "--ny", "601"]) == EXIT_OK

    def test_module_entry_point(self, tmp_path):
        proc = subprocess.run([sys.executable, "-m", "difffree", "energy-growth", "--output", str(tmp_path)],
                              capture_output=True, text=True)
        assert proc.returncode == 0 and "20 nu Lx / 63" in proc.stdout
        proc = subprocess.run([sys.executable, "-m", "difffree", "nonsense"], capture_output=True, text=True)
        assert proc.returncode == 2


class TestFieldFile:
    def test_round_trip(self, tmp_path):
        g = ChannelGrid(4, 9)
        X, Y = g.mesh()
        w = np.sin(np.pi * Y) * np.cos(2 * np.pi * X)
        f = tmp_path / "w.csv"
        rows = "\n".join(f"{x:.17g},{y:.17g},{v:.17g}" for x, y, v in zip(X.ravel(), Y.ravel(), w.ravel()))
        f.write_text("# comment\nx,y,omega\n" + rows + "\n")
        np.testing.assert_array_equal(read_field_csv(f, g), w)
        with pytest.raises(ConfigError):
            read_field_csv(f, ChannelGrid(4, 17))
        f.write_text("x,y,omega\n0,0,oops\n")
        with pytest.raises(ConfigError):
            read_field_csv(f, g)
