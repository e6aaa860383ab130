"""Config parsing, presets, experiment drivers, reference ingestion, CLI."""

import os
import shutil
import subprocess
from dataclasses import replace
from types import SimpleNamespace

import numpy as np
import pytest

from elastowave.errors import (
    FormatError,
    ParseError,
    UnknownPreset,
    ValidationError,
)
from elastowave.harness import cli
from elastowave.harness import config as cf
from elastowave.harness import experiments as xp
from elastowave.harness import presets as ps
from elastowave.harness.config import OutputSpec, finalize, parse_config

KM = 1000.0

STRIP_TEXT = """\
# vertical strip with side layers
[mesh]
dimension = 2
xmin = -60 km
xmax = 60 km
ymin = 0 km
ymax = 50 km
dx = 5 km
degree = 5

[material]
rho = 2.7 g/cm3
cp = 6 km/s
cs = 3.464 km/s

[boundary]
x.lo = absorbing
x.hi = absorbing
y.lo = free
y.hi = absorbing

[pml]
x = 10 km
tol = 1e-6
alpha = 0.15
theta = 1

[time]
tend = 100
cfl = 0.9

[initial]
type = velocity-gaussian
x = 0
y = 25 km
halfwidth = 3 km
components = vx, vy

[receiver.probe]
x = 25 km
y = 25 km
interval = 0.1
"""

TINY_TEXT = """\
[mesh]
dimension = 2
xmin = -12 km
xmax = 12 km
ymin = 0
ymax = 10 km
dx = 2 km
degree = 2

[material]
rho = 2.7 g/cm3
cp = 6 km/s
cs = 3.464 km/s

[boundary]
x.lo = absorbing
x.hi = absorbing
y.lo = free
y.hi = absorbing

[pml]
x = 4 km
tol = 1e-4

[time]
tend = 0.5

[initial]
type = velocity-gaussian
x = 0
y = 5 km
halfwidth = 1.5 km

[receiver.mid]
x = 2 km
y = 5 km

[output]
seismogram_interval = 0.1
"""


# ---------------------------------------------------------------- parsing

def test_parse_strip_text():
    cfg = parse_config(STRIP_TEXT)
    assert cfg.dimension == 2
    assert cfg.box == ((-60 * KM, 60 * KM), (0.0, 50 * KM))
    assert cfg.spacing == 5 * KM
    assert cfg.degree == 5
    assert cfg.counts() == (24, 10)
    mat = cfg.materials[0]
    assert mat.rho == 2700.0
    assert mat.cp == pytest.approx(6000.0)
    assert mat.cs == pytest.approx(3464.0)
    assert cfg.boundary_map() == {("x", -1): 0.0, ("x", 1): 0.0,
                                  ("y", -1): 1.0, ("y", 1): 0.0}
    assert cfg.pml.width_map() == {"x": (10 * KM, 10 * KM)}
    assert cfg.pml.tol == 1e-6
    assert cfg.pml.alpha == 0.15
    assert cfg.pml.theta == 1.0
    assert cfg.interior() == ((-50 * KM, 0.0), (50 * KM, 50 * KM))
    assert cfg.t_end == 100.0 and cfg.cfl == 0.9
    assert cfg.receivers[0].rid == "probe"
    assert cfg.receivers[0].location == (25 * KM, 25 * KM)
    assert cfg.receivers[0].interval == 0.1
    ini = cfg.initial
    assert ini.kind == "velocity-gaussian"
    assert ini.get("center") == (0.0, 25 * KM)
    assert ini.get("halfwidth") == 3 * KM
    assert ini.get("components") == ("vx", "vy")
    assert cfg.notes == ()  # everything was given explicitly


def test_parsed_text_matches_preset():
    # the text above and the canned strip configuration agree
    cfg = parse_config(STRIP_TEXT)
    pre = ps.preset("strip2d")
    assert cfg.box == pre.box
    assert cfg.spacing == pre.spacing
    assert cfg.degree == pre.degree
    assert (cfg.cfl, cfg.t_end) == (pre.cfl, pre.t_end)
    assert cfg.boundary_map() == pre.boundary_map()
    assert cfg.pml == pre.pml
    assert cfg.materials[0].rho == pre.materials[0].rho
    assert cfg.materials[0].lam == pytest.approx(pre.materials[0].lam)
    assert cfg.initial == pre.initial
    assert cfg.receivers == pre.receivers


def test_parse_plane_wave_initial():
    text = STRIP_TEXT.replace(
        "type = velocity-gaussian\nx = 0\ny = 25 km\nhalfwidth = 3 km\n"
        "components = vx, vy",
        "type = plane-wave\nnx = 1\nny = 0\nmode = P\ncenter = 3 km\n"
        "width = 2 km")
    cfg = parse_config(text)
    ini = cfg.initial
    assert ini.kind == "plane-wave"
    assert ini.get("n") == (1.0, 0.0)
    assert ini.get("mode") == "P"
    assert ini.get("center") == 3 * KM
    assert ini.get("width") == 2 * KM


def test_unit_table():
    assert cf._quantity("2.7 g/cm3", 1) == 2700.0
    assert cf._quantity("32.4 GPa", 1) == 32.4e9
    assert cf._quantity("2 km2", 1) == 2e6
    assert cf._quantity("3.464 km/s", 1) == 3464.0
    assert cf._quantity("-1.5e-2", 1) == -0.015


def test_parse_error_unknown_unit():
    with pytest.raises(ParseError, match="line 3.*parsec"):
        parse_config("[mesh]\ndimension = 2\ndx = 5 parsec\n")


def test_parse_error_duplicate_key():
    with pytest.raises(ParseError, match="line 3.*duplicate key"):
        parse_config("[time]\ntend = 1\ntend = 2\n")


def test_parse_error_duplicate_section():
    with pytest.raises(ParseError, match="line 2.*duplicate section"):
        parse_config("[mesh]\n[mesh]\n")


def test_parse_error_malformed_header():
    with pytest.raises(ParseError, match="line 1.*malformed"):
        parse_config("[mesh\ndimension = 2\n")


def test_parse_error_key_before_section():
    with pytest.raises(ParseError, match="line 1.*before any section"):
        parse_config("tend = 1\n")


def test_parse_error_missing_equals():
    with pytest.raises(ParseError, match="line 2.*key = value"):
        parse_config("[mesh]\ndimension\n")


def test_parse_error_non_numeric():
    with pytest.raises(ParseError, match="line 2"):
        parse_config("[mesh]\ndimension = two\n")


def test_validation_lists_every_violation():
    bad = (STRIP_TEXT
           .replace("degree = 5", "degree = 99")
           .replace("y.lo = free", "y.lo = 1.5")
           .replace("tol = 1e-6", "tol = 1.5"))
    with pytest.raises(ValidationError) as ei:
        parse_config(bad)
    msg = str(ei.value)
    assert "degree must lie in [1, 16]" in msg
    assert "|gamma| must not exceed 1" in msg
    assert "tol must lie in (0, 1)" in msg


def test_validation_pml_without_damping():
    bad = STRIP_TEXT.replace("tol = 1e-6\n", "")
    with pytest.raises(ValidationError, match="neither tol nor d0"):
        parse_config(bad)


def test_validation_tol_and_d0_exclusive():
    bad = STRIP_TEXT.replace("tol = 1e-6", "tol = 1e-6\nd0 = 16.58")
    with pytest.raises(ValidationError, match="exactly one"):
        parse_config(bad)


def test_validation_ragged_box():
    bad = STRIP_TEXT.replace("xmax = 60 km", "xmax = 61 km")
    with pytest.raises(ValidationError, match="whole number of elements"):
        parse_config(bad)


def test_validation_receiver_outside():
    bad = STRIP_TEXT.replace("x = 25 km\ny = 25 km", "x = 25 km\ny = 95 km")
    with pytest.raises(ValidationError, match="probe.*outside"):
        parse_config(bad)


def test_unknown_section_and_key():
    bad = STRIP_TEXT + "\n[magic]\nx = 1\n"
    with pytest.raises(ValidationError, match=r"unknown section \[magic\]"):
        parse_config(bad)
    bad = STRIP_TEXT.replace("degree = 5", "degree = 5\nfrobnicate = 1")
    with pytest.raises(ValidationError, match="unknown key 'frobnicate'"):
        parse_config(bad)


def test_default_notes_recorded():
    text = TINY_TEXT  # has no cfl, no alpha
    cfg = parse_config(text)
    assert any("cfl defaulted to 0.9" in n for n in cfg.notes)
    assert any("alpha defaulted to 0.15" in n for n in cfg.notes)
    text3d = text.replace("alpha", "")  # still no alpha; note text is 2D
    cfg = parse_config(text3d)
    assert cfg.pml.alpha is None


# ---------------------------------------------------------------- presets

def test_strip2d_parameters():
    cfg = ps.preset("strip2d")
    assert cfg.dimension == 2
    assert cfg.interior() == ((-50 * KM, 0.0), (50 * KM, 50 * KM))
    assert cfg.spacing == 5 * KM and cfg.degree == 5
    assert cfg.cfl == 0.9 and cfg.t_end == 100.0
    m = cfg.materials[0]
    assert (m.rho, m.cp, m.cs) == (2700.0, pytest.approx(6000.0),
                                   pytest.approx(3464.0))
    assert cfg.boundary_map()[("y", -1)] == 1.0  # free surface on top
    assert cfg.boundary_map()[("y", 1)] == 0.0
    assert cfg.pml.width_map() == {"x": (10 * KM, 10 * KM)}
    assert (cfg.pml.tol, cfg.pml.alpha, cfg.pml.theta) == (1e-6, 0.15, 1.0)
    ini = cfg.initial
    assert ini.get("center") == (0.0, 25 * KM)
    assert ini.get("halfwidth") == 3 * KM


def test_halfplane2d_parameters():
    cfg = ps.preset("halfplane2d")
    assert cfg.box == ((-60 * KM, 60 * KM), (0.0, 60 * KM))
    assert cfg.pml.width_map() == {"x": (10 * KM, 10 * KM),
                                   "y": (0.0, 10 * KM)}
    assert cfg.interior() == ((-50 * KM, 0.0), (50 * KM, 50 * KM))


def test_hws3d_parameters():
    cfg = ps.preset("hws3d")
    assert cfg.dimension == 3
    assert cfg.interior() == ((0.0, 0.0, 0.0), (10 * KM, 10 * KM, 10 * KM))
    assert cfg.spacing == pytest.approx(400.0)  # 25 elements across
    assert cfg.counts() == (31, 31, 31)         # layers add 3 per side
    assert cfg.degree == 5 and cfg.t_end == 3.0
    m = cfg.materials[0]
    assert (m.rho, m.cp, m.cs) == (2670.0, pytest.approx(6000.0),
                                   pytest.approx(3464.0))
    assert all(g == 0.0 for g in cfg.boundary_map().values())
    assert cfg.pml.tol == 1e-3 and cfg.pml.alpha is None
    src = cfg.sources[0]
    assert src.location == (3.4 * KM, 5 * KM, 5 * KM)
    m0 = np.asarray(src.moment)
    assert np.array_equal(m0, 1e18 * np.eye(3))  # explosive
    assert src.stf == "gaussian"
    assert dict(src.stf_params) == {"sigma": 0.1149, "t0": 0.7}
    locs = [r.location for r in cfg.receivers]
    assert (4.4 * KM, 5 * KM, 5 * KM) in locs   # 1 km offset
    assert (8.4 * KM, 5 * KM, 5 * KM) in locs   # 5 km offset
    # unspecified frequency shift resolves to cp/(10 w)
    assert xp._effective_alpha(cfg) == pytest.approx(0.5)


def test_hhs3d_parameters():
    cfg = ps.preset("hhs3d")
    dx = 16.333 * KM / 25
    assert cfg.box == ((0.0, 16.333 * KM),
                       (-2.287 * KM, 14.046 * KM),
                       (-2.287 * KM, 14.046 * KM))
    assert cfg.spacing == pytest.approx(dx)
    assert cfg.counts() == (25, 25, 25)
    assert cfg.boundary_map()[("x", -1)] == 1.0  # free surface at x = 0
    assert cfg.pml.width_map() == {"x": (0.0, 3 * dx), "y": (3 * dx, 3 * dx),
                                   "z": (3 * dx, 3 * dx)}
    src = cfg.sources[0]
    assert src.location == (0.693 * KM, 0.0, 0.0)
    m0 = np.asarray(src.moment)
    want = np.zeros((3, 3))
    want[1, 2] = want[2, 1] = 1e18  # double couple
    assert np.array_equal(m0, want)
    assert src.stf == "ramp" and dict(src.stf_params) == {"T": 0.1}
    assert cfg.t_end == 5.0
    assert len(cfg.receivers) == 9
    assert cfg.receivers[0].location == (0.0, 0.0, 0.693 * KM)
    assert cfg.receivers[4].location == (0.0, 3.919 * KM, 3.919 * KM)
    assert all(r.location[0] == 0.0 for r in cfg.receivers)


def test_loh1_parameters():
    cfg = ps.preset("loh1")
    assert len(cfg.materials) == 2
    soft = cfg.materials[1]
    assert (soft.rho, soft.cp, soft.cs) == (2600.0, pytest.approx(4000.0),
                                            pytest.approx(2000.0))
    assert cfg.region == ("x", 1.0 * KM, 1)  # soft layer above 1 km depth
    assert cfg.sources[0].location == (2.0 * KM, 0.0, 0.0)
    assert cfg.t_end == 9.0
    assert cfg.box == ps.preset("hhs3d").box


def test_planewave_parameters():
    for dim in (2, 3):
        cfg = ps.planewave_config(dim=dim, elements=8, degree=2)
        assert cfg.dimension == dim
        assert cfg.box == ((0.0, 10.0),) * dim
        m = cfg.materials[0]
        assert (m.cp, m.cs) == (pytest.approx(2.0), pytest.approx(1.0))
        bm = cfg.boundary_map()
        assert bm[("x", -1)] == 0.0 and bm[("x", 1)] == 0.0
        if dim == 2:
            assert bm[("y", -1)] == (1.0, -1.0)
        else:
            assert bm[("y", 1)] == (1.0, -1.0, 1.0)
            assert bm[("z", -1)] == (1.0, 1.0, -1.0)
        assert not cfg.pml.enabled


def test_preset_overrides():
    cfg = ps.preset("strip2d", elements=10, degree=2, theta=0.0, tend=5.0)
    assert cfg.spacing == 10 * KM
    assert cfg.degree == 2
    assert cfg.pml.theta == 0.0
    assert cfg.t_end == 5.0
    joined = "\n".join(cfg.notes)
    assert "element size set to 10 km" in joined
    assert "degree set to 2" in joined
    assert "theta set to 0" in joined
    assert "tend set to 5" in joined

    cfg = ps.preset("hws3d", elements=10, degree=3)
    assert cfg.spacing == 1 * KM
    assert cfg.box == ((-3 * KM, 13 * KM),) * 3
    assert cfg.counts() == (16, 16, 16)

    cfg = ps.preset("hhs3d", elements=10)
    dx = 16.333 * KM / 10
    assert cfg.spacing == pytest.approx(dx)
    assert cfg.pml.width_map()["y"] == (3 * dx, 3 * dx)


def test_unknown_preset():
    with pytest.raises(UnknownPreset, match="strip2d"):
        ps.preset("maxwell")


# ------------------------------------------------------------ experiments

def tiny_strip(tend=2.0, fmt="binary"):
    cfg = ps.preset("strip2d", elements=10, degree=2, tend=tend)
    out = OutputSpec(seismogram_interval=0.5, series_interval=0.5,
                     snapshot_interval=1.0, snapshot_format=fmt)
    return finalize(replace(cfg, output=out))


@pytest.fixture(scope="module")
def tiny_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("tiny")
    cfg = tiny_strip()
    res = xp.run_experiment(cfg, str(out))
    return cfg, res, out


def test_run_reaches_tend(tiny_run):
    cfg, res, out = tiny_run
    assert not res.diverged
    assert res.t_end == pytest.approx(2.0, abs=1e-9)
    assert res.state is not None
    assert np.isfinite(res.state.Q).all()


def test_run_artifacts(tiny_run):
    cfg, res, out = tiny_run
    names = {p.name for p in out.iterdir()}
    assert "seismogram_probe.csv" in names
    assert "energy.csv" in names and "linf.csv" in names
    assert "metadata.txt" in names
    assert "snapshot_0000.txt" in names
    assert "snapshot_0000_vx.bin" in names
    meta = (out / "metadata.txt").read_text()
    assert "elements = 12x5" in meta
    assert "degree = 2" in meta
    assert "t_reached = 2" in meta
    assert "alpha = 0.15" in meta
    assert "note = degree set to 2 (canonical 5)" in meta


def test_snapshot_binary_roundtrip(tiny_run):
    cfg, res, out = tiny_run
    head = (out / "snapshot_0000.txt").read_text()
    assert "little-endian" in head and "nodes_per_axis = 3" in head
    raw = np.fromfile(out / "snapshot_0000_vy.bin", dtype="<f8")
    want = res.snapshots[0][1]
    assert raw.size == want.size
    assert np.array_equal(raw.reshape(want.shape), want)
    assert len(res.snap_times) == 3  # t = 0, 1, 2
    assert res.snap_times[0] == 0.0


def test_snapshot_csv_format(tmp_path):
    cfg = tiny_strip(tend=0.5, fmt="csv")
    cfg = finalize(replace(cfg, output=replace(
        cfg.output, snapshot_interval=0.25)))
    res = xp.run_experiment(cfg, str(tmp_path))
    path = tmp_path / "snapshot_0000.csv"
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# time = ")
    assert lines[1] == "x,y,vx,vy"
    n_nodes = 12 * 5 * 9  # elements times (P+1)^2 nodes
    assert len(lines) == 2 + n_nodes
    first = [float(v) for v in lines[2].split(",")]
    assert len(first) == 4 and np.isfinite(first).all()


def test_energy_series_file(tiny_run):
    cfg, res, out = tiny_run
    t, e = np.loadtxt(out / "energy.csv", delimiter=",", skiprows=1,
                      unpack=True, ndmin=2)
    assert t[0] == 0.0 and e[0] > 0.0
    assert np.isfinite(e).all()
    assert len(res.energy) == len(t)


def test_bitwise_reproducibility(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    xp.run_experiment(tiny_strip(), str(a))
    xp.run_experiment(tiny_strip(), str(b))
    for name in ("seismogram_probe.csv", "energy.csv", "linf.csv",
                 "snapshot_0001_vx.bin", "metadata.txt"):
        assert (a / name).read_bytes() == (b / name).read_bytes(), name


def test_default_alpha_in_metadata(tmp_path):
    cfg = ps.preset("hws3d", elements=4, degree=1, tend=0.1)
    res = xp.run_experiment(cfg, str(tmp_path))
    assert res.metadata["alpha"] == "0.08 (default)"  # cp/(10 w)
    meta = (tmp_path / "metadata.txt").read_text()
    assert "alpha = 0.08 (default)" in meta
    assert "built-in" in meta  # the preset note marks the defaulted value


def test_derive_reference_geometry():
    cfg = ps.preset("strip2d")
    ref = xp.derive_reference(cfg, 60 * KM)
    assert ref.box == ((-110 * KM, 110 * KM), (0.0, 50 * KM))
    assert not ref.pml.enabled
    bm = ref.boundary_map()
    assert bm[("x", -1)] == 0.0 and bm[("x", 1)] == 0.0
    assert bm[("y", -1)] == 1.0  # untouched physical face
    # pad is snapped up to whole elements
    ref = xp.derive_reference(cfg, 7.2 * KM)
    assert ref.box[0] == (-60 * KM, 60 * KM)

    hws = ps.preset("hws3d", elements=10, degree=3)
    ref = xp.derive_reference(hws, 6 * KM)
    assert ref.box == ((-6 * KM, 16 * KM),) * 3


def test_derive_abc_geometry():
    cfg = ps.preset("halfplane2d")
    abc = xp.derive_abc(cfg)
    assert abc.box == ((-50 * KM, 50 * KM), (0.0, 50 * KM))
    assert not abc.pml.enabled
    bm = abc.boundary_map()
    assert bm[("x", -1)] == 0.0 and bm[("y", 1)] == 0.0
    assert bm[("y", -1)] == 1.0  # free surface survives


# ------------------------------------------------------------ references

def test_reference_roundtrip(tiny_run):
    cfg, res, out = tiny_run
    ref = xp.ingest_reference(str(out / "seismogram_probe.csv"))
    assert ref.receiver_id == "seismogram_probe"
    assert ref.components == ("vx", "vy")
    assert (np.diff(ref.times) > 0).all()
    assert xp.compare_reference(ref, res.receivers[0]) == 0.0


def test_ingest_expected_components(tiny_run):
    cfg, res, out = tiny_run
    path = str(out / "seismogram_probe.csv")
    ref = xp.ingest_reference(path, expected_components=("vx", "vy"))
    assert ref.components == ("vx", "vy")
    with pytest.raises(FormatError, match=r"expected header t,vx,vy,vz"):
        xp.ingest_reference(path, expected_components=("vx", "vy", "vz"))


def test_ingest_rejects_bad_files(tmp_path):
    p = tmp_path / "r.csv"

    p.write_text("")
    with pytest.raises(FormatError, match="empty"):
        xp.ingest_reference(str(p))

    p.write_text("time,vx\n0,1\n1,2\n")
    with pytest.raises(FormatError, match="header must be t,"):
        xp.ingest_reference(str(p))

    p.write_text("t,vx\n0,1\n0,2\n")
    with pytest.raises(FormatError, match="strictly increasing"):
        xp.ingest_reference(str(p))

    p.write_text("t,vx\n0,1\n1\n")
    with pytest.raises(FormatError, match="line 3.*columns"):
        xp.ingest_reference(str(p))

    p.write_text("t,vx\n0,1\n1,abc\n")
    with pytest.raises(FormatError, match="line 3.*non-numeric"):
        xp.ingest_reference(str(p))

    p.write_text("t,vx\n0,1\n")
    with pytest.raises(FormatError, match="two samples"):
        xp.ingest_reference(str(p))


def test_compare_mismatched_components(tmp_path, tiny_run):
    cfg, res, out = tiny_run
    p = tmp_path / "r.csv"
    p.write_text("t,vx\n0,1\n1,2\n")
    ref = xp.ingest_reference(str(p))
    with pytest.raises(FormatError, match="t,vx,vy"):
        xp.compare_reference(ref, res.receivers[0])


# ------------------------------------------------------------------- cli

def test_cli_run_verb(tmp_path, capsys):
    cfgfile = tmp_path / "tiny.cfg"
    cfgfile.write_text(TINY_TEXT)
    out = tmp_path / "out"
    assert cli.main(["run", str(cfgfile), "--output-dir", str(out)]) == 0
    stdout = capsys.readouterr().out
    assert "reached t = 0.5" in stdout
    assert f"artifacts in {out}" in stdout
    meta = (out / "metadata.txt").read_text()
    assert "note = cfl defaulted to 0.9" in meta
    assert "note = pml alpha defaulted to 0.15 1/s" in meta
    assert (out / "seismogram_mid.csv").exists()


def test_cli_rejects_bad_config(tmp_path, capsys):
    cfgfile = tmp_path / "bad.cfg"
    cfgfile.write_text(TINY_TEXT.replace("y.lo = free", "y.lo = 1.5"))
    assert cli.main(["run", str(cfgfile)]) == 1
    assert "gamma" in capsys.readouterr().err


def test_cli_preset_verb(tmp_path, capsys):
    out = tmp_path / "out"
    rc = cli.main(["preset", "planewave", "--elements", "4", "--degree",
                   "1", "--output-dir", str(out)])
    assert rc == 0
    assert (out / "metadata.txt").exists()
    assert "reached t = 0.5" in capsys.readouterr().out


def test_cli_unknown_preset(capsys):
    assert cli.main(["preset", "nosuch"]) == 1
    assert "unknown preset" in capsys.readouterr().err


def test_cli_divergence_exit_code(tmp_path, monkeypatch, capsys):
    fake = SimpleNamespace(
        metadata={"elements": "1x1", "degree": 1, "notes": ()},
        dt=0.1, t_end=1.0, diverged=True)
    monkeypatch.setattr(xp, "run_experiment", lambda cfg, out: fake)
    rc = cli.main(["preset", "planewave", "--output-dir", str(tmp_path)])
    assert rc == 2
    assert "(diverged)" in capsys.readouterr().out


def test_cli_check_operators(capsys):
    assert cli._check_operators(3) == 0
    stdout = capsys.readouterr().out
    assert "GLL P= 1" in stdout and "GLR P= 3" in stdout
    assert "FAIL" not in stdout


def test_cli_convergence_verb(tmp_path, capsys):
    cfgfile = tmp_path / "tiny.cfg"
    cfgfile.write_text(TINY_TEXT)
    out = tmp_path / "conv"
    rc = cli.main(["convergence", str(cfgfile), "--levels", "2 km,1 km",
                   "--pad", "4 km", "--output-dir", str(out)])
    assert rc == 0
    assert "dx,error,rate" in capsys.readouterr().out
    lines = (out / "convergence.csv").read_text().splitlines()
    assert lines[0] == "h,error,rate"
    assert len(lines) == 3
    errs = [float(ln.split(",")[1]) for ln in lines[1:]]
    assert all(np.isfinite(errs)) and all(e > 0 for e in errs)


def test_cli_length_parsing():
    assert cli._length("2.5 km") == 2500.0
    assert cli._length("250") == 250.0
    with pytest.raises(ParseError, match="bad length"):
        cli._length("2.5 smoots")


def test_thread_cap(monkeypatch):
    monkeypatch.setenv("OMP_NUM_THREADS", "1")
    monkeypatch.setenv("OPENBLAS_NUM_THREADS", "1")
    monkeypatch.setenv("ELASTOWAVE_THREADS", "2")
    cli._thread_cap()
    assert os.environ["OMP_NUM_THREADS"] == "2"
    assert os.environ["OPENBLAS_NUM_THREADS"] == "2"

    monkeypatch.setenv("ELASTOWAVE_THREADS", "abc")
    with pytest.raises(SystemExit):
        cli._thread_cap()
    monkeypatch.setenv("ELASTOWAVE_THREADS", "-1")
    with pytest.raises(SystemExit):
        cli._thread_cap()
    # 0 = auto: leave the environment alone
    monkeypatch.setenv("ELASTOWAVE_THREADS", "0")
    monkeypatch.setenv("OMP_NUM_THREADS", "7")
    cli._thread_cap()
    assert os.environ["OMP_NUM_THREADS"] == "7"


def test_console_script_installed():
    exe = shutil.which("elastowave")
    assert exe is not None
    out = subprocess.run([exe, "check-operators", "--max-degree", "2"],
                         capture_output=True, text=True)
    assert out.returncode == 0
    assert "worst residual" in out.stdout
