import numpy as np
import pytest

from qgmoc.config import ConfigError, ExperimentConfig, load_config, parse_config, serialize_config
from qgmoc.io import load_snapshot, read_csv, save_snapshot, write_csv
from qgmoc.spectral import Grid, RealField


def test_defaults():
    cfg = parse_config("")
    assert cfg == ExperimentConfig()
    assert cfg.modulus is None


def test_round_trip():
    text = """
    # sample
    s = 0.3
    n = 64
    t_end = 2.5   # trailing comment
    dealias = false
    seed = 11
    init_grad_target = 0.0123
    kernel_s = 0.25, 0.5
    modulus = explicit
    delta = 0.03125
    gamma = 0.0625
    """
    cfg = parse_config(text)
    assert cfg.solver.s == 0.3 and cfg.solver.n == 64 and not cfg.solver.dealias
    assert cfg.constants.kappa == cfg.solver.kappa
    assert cfg.modulus.delta == 0.03125 and cfg.modulus.s == 0.3
    assert cfg.kernel.s_values == (0.25, 0.5)
    again = parse_config(serialize_config(cfg))
    assert again == cfg
    assert serialize_config(again) == serialize_config(cfg)


@pytest.mark.parametrize("text", [
    "bogus = 1",
    "s = 0.2\ns = 0.3",
    "no equals sign",
    "n = 7",
    "dealias = maybe",
    "modulus = fancy",
    "modulus = explicit\ndelta = 0.1",
    "delta = 0.1",
    "cadence = 0",
])
def test_invalid_configs(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_load_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.txt")


def test_with_seed():
    assert ExperimentConfig().with_seed(9).initial.seed == 9


def test_snapshot_round_trip(tmp_path, rng):
    g = Grid(16)
    f = RealField(g, rng.standard_normal((16, 16)))
    save_snapshot(tmp_path / "a.bin", f, 0.25, 1.0, 0.7)
    snap = load_snapshot(tmp_path / "a.bin")
    assert (snap.n, snap.s, snap.kappa, snap.t) == (16, 0.25, 1.0, 0.7)
    assert np.array_equal(snap.field().values, f.values)
    assert (tmp_path / "a.bin").stat().st_size == 40 + 8 * 256


def test_snapshot_corruption(tmp_path):
    p = tmp_path / "b.bin"
    save_snapshot(p, RealField(Grid(8), np.zeros((8, 8))), 0.25, 1.0, 0.0)
    raw = p.read_bytes()
    p.write_bytes(raw[:-8])
    with pytest.raises(ValueError, match="expected"):
        load_snapshot(p)
    p.write_bytes(b"NOTASNAP" + raw[8:])
    with pytest.raises(ValueError, match="not a snapshot"):
        load_snapshot(p)
    p.write_bytes(raw[:10])
    with pytest.raises(ValueError, match="truncated"):
        load_snapshot(p)


def test_csv_header_and_round_trip(tmp_path):
    p = tmp_path / "t.csv"
    write_csv(p, "trajectory", ["t", "ok"], [(0.1, True), (0.30000000000000004, False)], {"seed": 3})
    assert p.read_text().splitlines()[0] == "# qgmoc-trajectory v1"
    kind, meta, cols, rows = read_csv(p)
    assert kind == "trajectory" and meta == {"seed": "3"} and cols == ["t", "ok"]
    assert rows == [["0.1", "1"], ["0.30000000000000004", "0"]]


def test_csv_without_header(tmp_path):
    p = tmp_path / "x.csv"
    p.write_text("a,b\n1,2\n")
    with pytest.raises(ValueError):
        read_csv(p)
