import csv
import json
import os

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dcweak import cli, stages
from dcweak.cache import CacheError, CacheStore, format_matrix, parse_matrix
from dcweak.config import ConfigError, JobConfig
from dcweak.zpmat import PrecisionError


def test_config_round_trip():
    cfg = JobConfig(p=7, wmax=10, eispoly=(7, 0, 1), cache_dir="/x/y")
    back = JobConfig.from_text(cfg.to_text())
    assert back == cfg
    assert back.validate().N == 7
    assert cfg.ident() == "p7_N7_w10_g10"


def test_config_errors():
    with pytest.raises(ConfigError):
        JobConfig(wmax=1).validate()
    with pytest.raises(ConfigError):
        JobConfig(p=4).validate()
    with pytest.raises(ConfigError):
        JobConfig(e=2, eispoly=(25, 0, 1)).validate()
    with pytest.raises(ConfigError):
        JobConfig.from_text("wmax = lots\n")
    with pytest.raises(ConfigError):
        JobConfig.from_text("just words\n")
    cfg = JobConfig.from_text("# comment\nwmax = 12  # trailing\nmystery = 3\n")
    assert cfg.wmax == 12 and cfg.extra == {"mystery": "3"}


@given(st.lists(st.lists(st.integers(-2 ** 70, 2 ** 70), min_size=3, max_size=3), min_size=0, max_size=4))
@settings(max_examples=50, deadline=None)
def test_matrix_format_round_trip(rows):
    A = np.array(rows, dtype=object).reshape(len(rows), 3)
    B, ring = parse_matrix(format_matrix(A, "Z5^4"))
    assert ring == "Z5^4"
    assert B.shape == A.shape and all(int(x) == int(y) for x, y in zip(A.ravel(), B.ravel()))


def test_ramified_matrix_round_trip():
    A = np.arange(12).reshape(2, 3, 2)
    B, ring = parse_matrix(format_matrix(A, "O5e2t3"))
    assert np.array_equal(A, B)


def test_cache_store_and_digest(tmp_path):
    store = CacheStore(str(tmp_path))
    A = np.arange(6).reshape(2, 3)
    store.put_matrix("m", A, "Z5^2", "test", {"w": 4})
    again = CacheStore(str(tmp_path))
    B, _ = again.get_matrix("m")
    assert np.array_equal(A, B) and again.params("m") == {"w": 4}
    assert again.verify() == ["m"]
    with open(tmp_path / "m.mat", "ab") as fh:
        fh.write(b"1 2 3\n")
    with pytest.raises(CacheError):
        CacheStore(str(tmp_path)).get_matrix("m")
    with pytest.raises(CacheError):
        again.get_matrix("absent")


def test_cache_format_mismatch(tmp_path):
    with open(tmp_path / "manifest.json", "w") as fh:
        json.dump({"format": "v0", "entries": {}}, fh)
    with pytest.raises(CacheError):
        CacheStore(str(tmp_path))


def run(argv, tmp_path):
    return cli.main(argv + ["--cache-dir", str(tmp_path / "c"), "--out-dir", str(tmp_path / "o")])


def test_cli_exit_codes(tmp_path, capsys, monkeypatch):
    with pytest.raises(SystemExit) as e:
        cli.main(["nosuchcommand"])
    assert e.value.code == 2
    with pytest.raises(SystemExit) as e:
        cli.main(["basis", "--bogus"])
    assert e.value.code == 2
    assert run(["basis", "--wmax", "1"], tmp_path) == 2
    assert run(["basis", "--p", "4"], tmp_path) == 2

    assert run(["basis", "--wmax", "8"], tmp_path) == 0
    out = capsys.readouterr().out
    assert "pass basis.dimension.k8" in out
    with open(tmp_path / "o" / "checks.csv") as fh:
        rows = list(csv.reader(line for line in fh if not line.startswith("#")))
    assert rows[0][:3] == ["label", "stage", "result"] and len(rows) > 1

    # warm cache gives the same result
    assert run(["basis", "--wmax", "8"], tmp_path) == 0

    mats = [f for f in os.listdir(tmp_path / "c") if f.endswith(".mat")]
    assert mats
    with open(tmp_path / "c" / mats[0], "ab") as fh:
        fh.write(b"0\n")
    assert run(["basis", "--wmax", "8"], tmp_path) == 1
    assert "digest mismatch" in capsys.readouterr().err
    assert run(["basis", "--wmax", "8", "--no-cache"], tmp_path) == 0

    def broken(pipe):
        raise PrecisionError("forced")
    monkeypatch.setitem(stages.STAGES, "basis", broken)
    assert run(["basis", "--wmax", "8", "--no-cache"], tmp_path) == 3


def test_cli_config_precedence(tmp_path, capsys, monkeypatch):
    conf = tmp_path / "job.conf"
    conf.write_text("wmax = 10\nguard = 7\ncache_dir = fromfile\n")
    monkeypatch.setenv("CACHE_DIR", "fromenv")
    assert cli.main(["basis", "--config", str(conf), "--guard", "9", "--dump-config"]) == 0
    cfg = JobConfig.from_text(capsys.readouterr().out)
    assert (cfg.wmax, cfg.guard, cfg.cache_dir) == (10, 9, "fromenv")
    assert cli.main(["basis", "--config", str(conf), "--cache-dir", "flag", "--dump-config"]) == 0
    assert JobConfig.from_text(capsys.readouterr().out).cache_dir == "flag"


def test_shipped_configs_load():
    here = os.path.join(os.path.dirname(__file__), "..", "configs")
    for name in os.listdir(here):
        JobConfig.load(os.path.join(here, name)).validate()
