import csv
import math

import numpy as np
import pytest

from rarelab.cli import main
from rarelab.special import bessel_k0, phi_cdf


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_estimate_exact_product(tmp_path, capsys):
    out = tmp_path / "exact.csv"
    code = main(["estimate", "--lsf", "product",
                 "--param", "beta=3.4641016151377544",
                 "--method", "exact", "--out", str(out)])
    assert code == 0
    rows = read_csv(out)
    assert len(rows) == 1
    assert float(rows[0]["probability"]) == pytest.approx(
        bessel_k0(6.0) / math.pi, rel=1e-12)
    assert rows[0]["kind"] == "exact"


def test_estimate_form_linear_series(tmp_path):
    out = tmp_path / "form.csv"
    assert main(["estimate", "--lsf", "linear-series", "--method", "form",
                 "--out", str(out), "--quiet"]) == 0
    rows = read_csv(out)
    points = [r for r in rows if r["label"].startswith("point")]
    assert len(points) == 2
    betas = sorted(float(r["beta"]) for r in points)
    assert betas[0] == pytest.approx(4.0, abs=1e-6)
    assert betas[1] == pytest.approx(5.0, abs=1e-6)
    total = [r for r in rows if r["label"] == "total"][0]
    assert float(total["probability"]) == pytest.approx(
        phi_cdf(-4.0) + phi_cdf(-5.0), rel=1e-6)


def test_estimate_sus_rows_and_summary(tmp_path, capsys):
    out = tmp_path / "sus.csv"
    code = main(["estimate", "--lsf", "abs-product", "--param", "beta=5.477",
                 "--method", "sus", "--runs", "10", "--seed", "7",
                 "--out", str(out)])
    assert code == 0
    rows = read_csv(out)
    assert len(rows) == 10
    assert set(rows[0]) == {"seed", "estimate", "levels", "evals", "modes",
                            "level_estimates"}
    summary = capsys.readouterr().out
    assert "modes=" in summary and "median=" in summary


def test_estimate_byte_deterministic(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["estimate", "--lsf", "product", "--param", "beta=3",
            "--method", "sus", "--runs", "5", "--seed", "3", "--quiet"]
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_estimate_exit_codes(tmp_path):
    assert main(["estimate", "--lsf", "nope", "--method", "exact"]) == 3
    assert main(["estimate", "--lsf", "product", "--param", "beta=-1",
                 "--method", "exact"]) == 2
    assert main(["estimate", "--lsf", "product", "--method", "exact",
                 "--out", "/nonexistent-dir/x.csv"]) == 4


def test_estimate_mc(tmp_path):
    out = tmp_path / "mc.csv"
    assert main(["estimate", "--lsf", "product", "--param", "beta=2",
                 "--method", "mc", "--runs", "3", "--samples", "20000",
                 "--seed", "1", "--out", str(out), "--quiet"]) == 0
    rows = read_csv(out)
    assert len(rows) == 3
    for r in rows:
        assert int(r["n"]) == 20000
        assert 0.01 < float(r["estimate"]) < 0.06


def test_beta_points_command(tmp_path):
    out = tmp_path / "bp.csv"
    assert main(["beta-points", "--lsf", "abs-product",
                 "--param", "beta=5.4772255750516612",
                 "--out", str(out), "--quiet"]) == 0
    rows = read_csv(out)
    points = [r for r in rows if r["label"].startswith("point")]
    assert len(points) == 4
    total = [r for r in rows if r["label"] == "total"][0]
    assert float(total["probability"]) == pytest.approx(
        2 * math.sqrt(2) * phi_cdf(-math.sqrt(30.0)), rel=1e-5)


def test_fit_command(tmp_path):
    out = tmp_path / "fit.csv"
    assert main(["fit", "--lsf", "product", "--betas", "2.5,3.0",
                 "--runs", "10", "--seed", "4", "--out", str(out),
                 "--quiet"]) == 0
    rows = read_csv(out)
    kinds = {r["kind"] for r in rows}
    assert {"sus-median", "fit-c", "fit-b", "fit-residual", "curve"} <= kinds
    c = float([r for r in rows if r["kind"] == "fit-c"][0]["value"])
    assert 0.5 < c < 3.0


def test_fit_degenerate_single_beta():
    assert main(["fit", "--lsf", "product", "--betas", "3.0",
                 "--quiet"]) == 2


def test_diagnose_round_trip(tmp_path):
    est = tmp_path / "est.csv"
    assert main(["estimate", "--lsf", "product", "--param", "beta=3",
                 "--method", "sus", "--runs", "25", "--seed", "2",
                 "--out", str(est), "--quiet"]) == 0
    prefix = str(tmp_path / "diag")
    assert main(["diagnose", "--in", str(est), "--out", prefix,
                 "--quiet"]) == 0
    metrics = {r["metric"]: float(r["value"])
               for r in read_csv(prefix + "_normality.csv")}
    assert metrics["n"] == 25
    assert -1.0 <= metrics["qq_corr_log10"] <= 1.0
    qq = read_csv(prefix + "_qq.csv")
    assert {r["scale"] for r in qq} == {"raw", "log10"}
    cov = read_csv(prefix + "_cov.csv")
    combined = [r for r in cov if r["kind"] == "combined_cov"]
    assert len(combined) == 1
    assert float(combined[0]["value"]) > 0.0


def test_diagnose_rejects_non_estimate_csv(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b\n1,2\n")
    assert main(["diagnose", "--in", str(bad), "--out",
                 str(tmp_path / "x")]) == 2


def test_gallery_subset(tmp_path):
    out = tmp_path / "gal"
    code = main(["gallery", "--out", str(out), "--seed", "5", "--runs", "6",
                 "--lsf", "product", "--lsf", "linear-series", "--quiet"])
    assert code == 0
    summary = read_csv(out / "summary.csv")
    assert [r["lsf"] for r in summary] == ["product", "linear-series"]
    for name in ("product", "linear-series"):
        assert (out / f"runs_{name}.csv").exists()
        assert (out / f"points_{name}.csv").exists()
        assert (out / f"centroids_{name}.csv").exists()
    runs = read_csv(out / "runs_product.csv")
    assert len(runs) == 6
    pts = read_csv(out / "points_product.csv")
    assert {"level", "threshold", "u1", "u2", "g"} == set(pts[0])


def test_gallery_deterministic(tmp_path):
    args = ["gallery", "--seed", "5", "--runs", "4", "--lsf", "product",
            "--quiet"]
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b)]) == 0
    assert (a / "summary.csv").read_bytes() == (b / "summary.csv").read_bytes()
    assert (a / "runs_product.csv").read_bytes() == \
        (b / "runs_product.csv").read_bytes()


def test_gallery_unknown_lsf(tmp_path):
    assert main(["gallery", "--out", str(tmp_path / "g"), "--lsf", "zap",
                 "--quiet"]) == 3
