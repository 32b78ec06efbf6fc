import numpy as np
import pytest

from lidar_roi import cli
from lidar_roi.evaluation import default_camera, write_camera
from lidar_roi.ingest import write_csv, write_pcd
from lidar_roi.pipeline import STAGES, run_pipeline
from lidar_roi.segment import FIRST_ROI, UNINTEREST
from lidar_roi.synthetic import benchmark_scene, scan_scene, write_benchmark
from lidar_roi.textio import read_labeled_cloud, read_matrix
from lidar_roi.types import ConfigError, FilterParams


@pytest.fixture(scope="module")
def scan():
    return scan_scene(benchmark_scene())


@pytest.fixture
def scan_file(tmp_path, scan):
    p = tmp_path / "scan.csv"
    write_csv(p, scan.points)
    return p


def test_empty_scan():
    res = run_pipeline(np.zeros((0, 3)))
    assert not res.labels.any()
    assert len(res.regions.point_labels) == 0
    assert set(res.timings_ms) == set(STAGES)


def test_ground_and_boxes(scan):
    res = run_pipeline(scan.points)
    lab = res.regions.point_labels
    kept = lab > 0
    pred_ground = lab[kept] == UNINTEREST
    acc = np.mean(pred_ground == scan.is_ground[kept])
    assert acc >= 0.99
    assert kept.mean() > 0.95
    assert len(res.regions.roi_ids) >= 3
    assert res.regions.roi_ids[0] == FIRST_ROI


def test_invalid_params_rejected(scan):
    with pytest.raises(ConfigError):
        run_pipeline(scan.points, params=FilterParams(pc=9))


def test_cli_default_cloud(tmp_path, scan_file, scan):
    out = tmp_path / "out"
    assert cli.main(["--input", str(scan_file), "--out", str(out)]) == 0
    pts, lab = read_labeled_cloud(out / "scan.labels.csv")
    np.testing.assert_array_equal(pts, scan.points)
    np.testing.assert_array_equal(lab, run_pipeline(scan.points).regions.point_labels)


def test_cli_pcd_and_emit_all(tmp_path, scan):
    p = tmp_path / "scan.pcd"
    write_pcd(p, scan.points)
    out = tmp_path / "out"
    assert cli.main(["--input", str(p), "--out", str(out), "--emit", ",".join(cli.EMITS)]) == 0
    res = run_pipeline(scan.points)
    for name in ("depth", "angle", "smoothed", "filtered", "processed"):
        np.testing.assert_array_equal(read_matrix(out / f"scan.{name}.txt"), getattr(res, name))
    np.testing.assert_array_equal(read_matrix(out / "scan.labels.txt", np.int64), res.labels)
    head = (out / "scan.barcode.csv").read_text().splitlines()
    assert head[0] == "row,col,birth,death,persistence"
    assert len(head) == 1 + len(res.barcode.birth)


@pytest.mark.parametrize(
    "argv, code",
    [
        (["--bogus"], 1),
        ([], 1),
        (["--input", "{missing}"], 2),
        (["--input", "{scan}", "--pc", "0"], 1),
        (["--input", "{scan}", "--window", "15"], 1),
        (["--input", "{scan}", "--emit", "depth,nope"], 1),
        (["--input", "{scan}", "--config", "{badcfg}"], 1),
        (["--input", "{scan}", "--config", "{missing}"], 2),
        (["--input", "{bad}"], 2),
        (["--input", "{txt}", "--format", "csv"], 0),
        (["--input", "{unknown}"], 1),
        (["--input", "{scan}", "--eval", "{dir}"], 1),
    ],
)
def test_exit_codes(tmp_path, scan_file, argv, code, capsys):
    (tmp_path / "bad.cfg").write_text("filter.pc = five\n")
    (tmp_path / "bad.csv").write_text("1,2,3\n4,five,6\n")
    (tmp_path / "s.txt").write_text("1,2,3\n")
    (tmp_path / "s.xyz").write_text("1,2,3\n")
    subs = {
        "missing": str(tmp_path / "nope.csv"),
        "scan": str(scan_file),
        "badcfg": str(tmp_path / "bad.cfg"),
        "bad": str(tmp_path / "bad.csv"),
        "txt": str(tmp_path / "s.txt"),
        "unknown": str(tmp_path / "s.xyz"),
        "dir": str(tmp_path),
    }
    argv = [a.format(**subs) for a in argv] + ["--out", str(tmp_path / "o")]
    assert cli.main(argv) == code
    if code:
        assert "error" in capsys.readouterr().err


def test_flag_precedence(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text(
        "filter.pc = 3\nfilter.beta = 7.5\nfilter.window = 7\nsegment.theta_seg = 12\n"
        "peaks.persistence_threshold = 0.2\nbf.sigma_x = 2.0\n"
    )
    base = ["--input", "x.csv"]
    _, p = cli.resolve_params(cli.build_parser().parse_args(base))
    assert p == FilterParams()
    _, p = cli.resolve_params(cli.build_parser().parse_args(base + ["--config", str(cfg)]))
    assert (p.pc, p.beta, p.window, p.theta_seg, p.persistence_threshold, p.sigma_x) == (3, 7.5, 7, 12, 0.2, 2.0)
    flags = ["--pc", "4", "--beta", "12.5", "--window", "6", "--theta-seg", "9", "--persistence", "0.05"]
    _, p = cli.resolve_params(cli.build_parser().parse_args(base + ["--config", str(cfg)] + flags))
    assert (p.pc, p.beta, p.window, p.theta_seg, p.persistence_threshold, p.sigma_x) == (4, 12.5, 6, 9, 0.05, 2.0)


def test_flags_change_output(tmp_path, scan_file):
    a, b = tmp_path / "a", tmp_path / "b"
    cli.main(["--input", str(scan_file), "--out", str(a), "--emit", "labels"])
    cli.main(["--input", str(scan_file), "--out", str(b), "--emit", "labels", "--beta", "40"])
    assert (a / "scan.labels.txt").read_bytes() != (b / "scan.labels.txt").read_bytes()


def test_deterministic_output(tmp_path, scan_file):
    outs = []
    for k in range(2):
        d = tmp_path / f"o{k}"
        cli.main(["--input", str(scan_file), "--out", str(d), "--emit", "cloud,labels,barcode,smoothed"])
        outs.append({p.name: p.read_bytes() for p in sorted(d.iterdir())})
    assert outs[0] == outs[1]


def test_bench_output(scan_file, capsys):
    assert cli.main(["--input", str(scan_file), "--bench", "3"]) == 0
    line = capsys.readouterr().out.strip()
    assert line.startswith("scan: ") and "over 3 runs" in line
    for s in STAGES:
        assert f"{s}=" in line


def test_directory_jobs_and_scan_window(tmp_path, scan):
    d = tmp_path / "scans"
    d.mkdir()
    for i in range(3):
        write_csv(d / f"s{i}.csv", scan.points[i::3])
    one, many = tmp_path / "one", tmp_path / "many"
    assert cli.main(["--input", str(d), "--out", str(one)]) == 0
    assert cli.main(["--input", str(d), "--out", str(many), "--jobs", "2"]) == 0
    for i in range(3):
        assert (one / f"s{i}.labels.csv").read_bytes() == (many / f"s{i}.labels.csv").read_bytes()
    win = tmp_path / "win"
    assert cli.main(["--input", str(d), "--out", str(win), "--scan-window", "2"]) == 0
    pts, _ = read_labeled_cloud(win / "s2.labels.csv")
    assert len(pts) == len(scan.points[1::3]) + len(scan.points[2::3])


def test_cli_eval(tmp_path):
    root = write_benchmark(tmp_path / "bench", n_scans=2, seed=1)
    out = tmp_path / "out"
    argv = ["--input", str(root / "scans"), "--eval", str(root / "truth"), "--camera", str(root / "camera.txt"), "--out", str(out)]
    assert cli.main(argv) == 0
    lines = (out / "eval.csv").read_text().splitlines()
    assert lines[0] == "scan,class,precision,recall,f1"
    assert len(lines) == 1 + 2 * 2 + 4
    assert (out / "scan000.labels.csv").exists()


def test_camera_file_for_eval(tmp_path):
    write_camera(tmp_path / "cam.txt", default_camera())
    assert cli.main(["--input", str(tmp_path / "none"), "--eval", str(tmp_path), "--camera", str(tmp_path / "cam.txt")]) == 2
