import csv

import pytest

from gravdengue.cli import SUBCOMMANDS, build_parser, main


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_help_lists_units(capsys):
    for cmd in SUBCOMMANDS:
        with pytest.raises(SystemExit) as exc:
            main([cmd, "--help"])
        assert exc.value.code == 0
        text = capsys.readouterr().out
        for name in SUBCOMMANDS[cmd]:
            assert "--" + name.replace("_", "-") in text
    build_parser().format_help()
    with pytest.raises(SystemExit):
        main(["synthetic", "--help"])
    assert "[days]" in capsys.readouterr().out


def test_invalid_flag_is_usage_error(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["--out", str(tmp_path), "synthetic", "--mode", "diagonal"])
    assert exc.value.code == 2


def test_synthetic_uniform(tmp_path, capsys):
    out = tmp_path / "u"
    assert main(["synthetic", "--out", str(out), "--n-cities", "6", "--horizon", "300"]) == 0
    assert "seed=0" in capsys.readouterr().out
    for name in ("scenario.csv", "infected_hosts.csv", "correlation.csv", "infected_hosts.svg", "correlation.svg", "run.txt"):
        assert (out / name).exists()
    assert len(rows(out / "correlation.csv")) == 6


def test_synthetic_sweep(tmp_path):
    out = tmp_path / "s"
    assert main(["synthetic", "--out", str(out), "--n-cities", "5", "--horizon", "200",
                 "--sweep", "gamma", "--values", "0.5,2"]) == 0
    summary = rows(out / "sweep_gamma_summary.csv")
    assert summary[0][0] == "gamma" and len(summary) == 3


def test_outputs_are_byte_identical(tmp_path):
    args = ["synthetic", "--n-cities", "5", "--horizon", "200", "--mode", "gravity", "--seed", "3"]
    main(args + ["--out", str(tmp_path / "a")])
    main(args + ["--out", str(tmp_path / "b")])
    for f in (tmp_path / "a").iterdir():
        assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes(), f.name


def test_simulate_and_decoupling(tmp_path, fixture_dir):
    out = tmp_path / "sim"
    code = main(["simulate", "--out", str(out), "--provinces", str(fixture_dir / "provinces.csv"),
                 "--coupling", "identity", "--eps", "0.1", "--infected", "10", "--horizon", "70"])
    assert code == 0
    inc = rows(out / "incidence.csv")
    assert inc[0] == ["week", "coast_n", "coast_c", "jungle"] and len(inc) == 11
    assert rows(out / "incidence_country.csv")[0] == ["week", "country"]
    # the jungle patch alone gives the same column
    centers = rows(out / "centers.csv")
    alone = tmp_path / "alone.csv"
    alone.write_text("patch_id,lat,lon,population\n" + ",".join(centers[3]) + "\n")
    main(["simulate", "--out", str(tmp_path / "one"), "--centers", str(alone), "--coupling", "identity",
          "--eps", "0.1", "--infected", "10", "--horizon", "70"])
    one = rows(tmp_path / "one" / "incidence.csv")
    assert [r[1] for r in one[1:]] == [r[3] for r in inc[1:]]


def test_simulate_blowup_exit_code(tmp_path, fixture_dir, capsys):
    code = main(["simulate", "--out", str(tmp_path), "--provinces", str(fixture_dir / "provinces.csv"),
                 "--beta0", "1e6", "--beta-h", "1e6", "--coupling", "identity", "--dt", "1", "--horizon", "30"])
    assert code == 3
    assert "t=" in capsys.readouterr().err


def test_fit_per_patch(tmp_path, fixture_dir):
    out = tmp_path / "fit"
    code = main(["fit", "--out", str(out), "--provinces", str(fixture_dir / "provinces.csv"),
                 "--cases", str(fixture_dir / "cases.csv"), "--window", "418-440", "--iterations", "20",
                 "--per-patch", "--free", "beta0=uniform(0.1,0.5)", "--free", "phi=circular"])
    assert code == 0
    ranges = rows(out / "fit_ranges.csv")
    assert ranges[0] == ["patch_id", "best_score", "beta0", "phi"] and len(ranges) == 4
    assert len(rows(out / "fit_jungle.csv")) == 6
    assert rows(out / "fit_jungle_diagnostics.csv")[0] == ["series", "peak_week_error", "magnitude_ratio"]


def test_fit_two_stage_from_config(tmp_path, fixture_dir):
    cfg = tmp_path / "run.ini"
    cfg.write_text(
        "[global]\nseed = 5\n"
        f"[fit]\nprovinces = {fixture_dir / 'provinces.csv'}\ncases = {fixture_dir / 'cases.csv'}\n"
        "window = epidemic_2000_2001\ncoupling = gravity\ntheta = 1e-13\ngamma = 1\niterations = 8\n"
        "two_stage = yes\naggregate = yes\nno_seasonal = yes\n"
        "[samplers]\nbeta = uniform(0.5,1.5)\ntheta = uniform(1e-14,1e-12)\nalpha = uniform(0.5,1.5)\ngamma = uniform(0.5,1.5)\n"
    )
    out = tmp_path / "two"
    assert main(["--config", str(cfg), "fit", "--out", str(out), "--iterations", "6"]) == 0
    assert (out / "run.txt").read_text().splitlines()[1] == "seed=5"
    stage1 = rows(out / "fit_stage1.csv")
    assert len(stage1) == 6
    final = rows(out / "fit.csv")
    assert final[0][:2] == ["rank", "score"] and "alpha" in final[0]
    assert len(rows(out / "observed.csv")) == 52


def test_fit_all_failed_exit_code(tmp_path, fixture_dir):
    code = main(["fit", "--out", str(tmp_path), "--provinces", str(fixture_dir / "provinces.csv"),
                 "--cases", str(fixture_dir / "cases.csv"), "--window", "418-430", "--iterations", "3",
                 "--free", "beta0=fixed(0.1)", "--free", "eps=fixed(0.3)"])
    assert code == 4


def test_climate_command(tmp_path, fixture_dir):
    out = tmp_path / "cl"
    assert main(["climate", "--out", str(out), "--climate", str(fixture_dir / "climate.csv")]) == 0
    fits = rows(out / "climate_fits.csv")
    assert len(fits) == 4
    jungle = next(r for r in fits if r[0] == "jungle")
    assert abs(float(jungle[2])) < 0.3
    assert (out / "curve_jungle.csv").exists() and (out / "curve_jungle.svg").exists()


def test_gravity_command(tmp_path, fixture_dir):
    out = tmp_path / "g"
    code = main(["gravity", "--out", str(out), "--provinces", str(fixture_dir / "provinces.csv"),
                 "--scheme", "per_province", "--alpha", "0.001,1", "--beta", "0.001,1", "--gamma", "2"])
    assert code == 0
    assert len(list(out.glob("gravity_matrix_*.csv"))) == 4
    wvd = rows(out / "weight_vs_distance.csv")
    assert len(wvd) == 1 + 4 * 78


def test_gravity_single_patch(tmp_path):
    centers = tmp_path / "c.csv"
    centers.write_text("patch_id,lat,lon,population\nonly,-10,-75,1000\n")
    out = tmp_path / "g1"
    assert main(["gravity", "--out", str(out), "--centers", str(centers)]) == 0
    assert rows(out / "gravity_matrix.csv") == [["patch_id", "only"], ["only", "1"]]


def test_gravity_overflow_exit(tmp_path, capsys):
    centers = tmp_path / "c.csv"
    centers.write_text("patch_id,lat,lon,population\na,-10,-75,1e300\nb,-11,-75,1e300\n")
    assert main(["gravity", "--out", str(tmp_path / "o"), "--centers", str(centers), "--alpha", "3", "--beta", "3"]) == 1
    assert "'a'" in capsys.readouterr().err


def test_config_precedence(tmp_path):
    cfg = tmp_path / "c.ini"
    cfg.write_text("[synthetic]\nn_cities = 4\nhorizon = 100\n")
    out = tmp_path / "p"
    assert main(["--config", str(cfg), "synthetic", "--out", str(out), "--n-cities", "3"]) == 0
    assert len(rows(out / "scenario.csv")) == 4
    assert rows(out / "infected_hosts.csv")[-1][0] == "100"
