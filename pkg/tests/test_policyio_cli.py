import csv
import io
import json
import struct

import numpy as np
import pytest

from aoisched.campaign import csv_header, solve_policy
from aoisched.cli import main
from aoisched.config import from_dict, load_config
from aoisched.errors import ConfigurationError, PolicyFileError
from aoisched.mdp import NetworkConfig
from aoisched.policyio import HEADER, parse_policy, policy_bytes, read_policy, write_policy
from aoisched.solver import SolverConfig, value_iteration

from conftest import scalar_loop

TINY = {
    "loops": [{"A": 1.1, "p": 0.5}, {"A": 1.3, "p": 0.5}],
    "network": {"R": 1, "M": 7},
    "solver": {"gamma": [0.5, 0.9], "theta": 0.1},
    "sim": {"T": 1500, "reps": 4, "seed": 3},
    "schedulers": ["DES", "AoIS", "GES", "RoundRobin"],
}


@pytest.fixture
def tiny(tmp_path):
    path = tmp_path / "tiny.json"
    path.write_text(json.dumps(dict(TINY, cache_dir=str(tmp_path / "cache"))))
    return path


@pytest.fixture(scope="module")
def fig3_policy():
    loops = [scalar_loop(1.1, 0.5), scalar_loop(1.3, 0.5)]
    return value_iteration(loops, NetworkConfig(2, 1, 7), "error", SolverConfig(0.9, 0.1)).policy


class TestPolicyFile:
    def test_round_trip_byte_identical(self, fig3_policy, tmp_path):
        write_policy(tmp_path / "a.aoi", fig3_policy)
        again = read_policy(tmp_path / "a.aoi")
        write_policy(tmp_path / "b.aoi", again)
        assert (tmp_path / "a.aoi").read_bytes() == (tmp_path / "b.aoi").read_bytes()
        assert np.array_equal(again.actions, fig3_policy.actions)
        assert again.action_list == fig3_policy.action_list
        assert (again.gamma, again.theta, again.cost_kind) == (0.9, 0.1, "error")

    def test_length_formula(self, fig3_policy):
        data = policy_bytes(fig3_policy)
        assert HEADER.size == 41
        assert len(data) == 41 + 8 * 3 + 7 ** 2

    def test_header_layout(self, fig3_policy):
        data = policy_bytes(fig3_policy)
        magic, version, N, M, R, cost = struct.unpack_from("<4sIIIIB", data)
        assert (magic, version, N, M, R, cost) == (b"AOI1", 1, 2, 7, 1, 0)
        assert struct.unpack_from("<ddI", data, 21) == (0.9, 0.1, 3)
        assert struct.unpack_from("<3Q", data, 41) == (0, 1, 2)

    def test_full_scale_size(self):
        assert 41 + 8 * 6 + 25 ** 5 == 9_765_714

    @pytest.mark.parametrize("mutate", [
        lambda d: d[:20],
        lambda d: b"XXXX" + d[4:],
        lambda d: d[:4] + struct.pack("<I", 9) + d[8:],
        lambda d: d[:20] + bytes([7]) + d[21:],
        lambda d: d + b"\0",
        lambda d: d[:-1] + bytes([200]),
    ])
    def test_corrupt(self, fig3_policy, mutate):
        with pytest.raises(PolicyFileError):
            parse_policy(mutate(policy_bytes(fig3_policy)))


class TestConfig:
    def test_bundled(self):
        cfg = load_config("paper")
        assert cfg.N == 5 and cfg.R == 1 and cfg.M == [25]
        assert [lp.A[0, 0] for lp in cfg.loops] == [1.1, 1.3, 1.5, 1.7, 1.9]
        assert all(lp.L[0, 0] == lp.A[0, 0] and lp.p == 0.9 for lp in cfg.loops)
        assert cfg.gammas == pytest.approx([0.1 * k for k in range(1, 10)])
        assert cfg.theta == 0.1 and cfg.sim.T == 20_000 and cfg.sim.reps == 100

    @pytest.mark.parametrize("patch", [
        {"network": {"N": 3, "R": 1}},
        {"network": {"R": 3}},
        {"solver": {"gamma": 1.0}},
        {"solver": {"gamma": []}},
        {"schedulers": ["Whittle"]},
        {"loops": []},
        {"loops": [{"A": 1.1}]},
        {"loops": [{"A": [[1, 0], [0, 1]], "B": [[1]], "p": 0.5}]},
    ])
    def test_invalid(self, patch):
        with pytest.raises(ConfigurationError):
            from_dict(dict(TINY, **patch))

    def test_policy_key_ignores_names(self):
        a = from_dict(TINY)
        b = from_dict(dict(TINY, loops=[dict(l, name=f"x{i}") for i, l in enumerate(TINY["loops"])]))
        assert a.policy_key(0.9, 7, "error") == b.policy_key(0.9, 7, "error")
        assert a.policy_key(0.9, 7, "error") != a.policy_key(0.8, 7, "error")

    def test_cache_reuse(self, tmp_path):
        cfg = from_dict(TINY)
        first, res = solve_policy(cfg, 0.9, 7, "error", tmp_path)
        second, res2 = solve_policy(cfg, 0.9, 7, "error", tmp_path)
        assert res is not None and res2 is None
        assert policy_bytes(first) == policy_bytes(second)


def read_csv(path):
    return list(csv.reader(io.StringIO(path.read_text())))


class TestCli:
    def test_solve_then_simulate(self, tiny, tmp_path, capsys):
        pol = tmp_path / "des.aoi"
        assert main(["solve", "--config", str(tiny), "--gamma", "0.9", "--out", str(pol)]) == 0
        assert len(pol.read_bytes()) == 41 + 24 + 49
        out = tmp_path / "rows.csv"
        assert main(["simulate", "--config", str(tiny), "--policy", str(pol), "--scheduler", "GES",
                     "--out", str(out)]) == 0
        rows = read_csv(out)
        assert rows[0] == csv_header(2)
        assert [r[0] for r in rows[1:]] == ["DES", "GES"]
        assert rows[1][1:3] == ["0.9", "7"] and rows[2][1:3] == ["", ""]

    def test_compare_stdout(self, tiny, capsys):
        assert main(["compare", "--config", str(tiny), "--schedulers", "GES,RoundRobin", "--out", "-"]) == 0
        rows = list(csv.reader(io.StringIO(capsys.readouterr().out)))
        assert rows[0] == ["scheduler", "gamma", "M", "avg_error_mean", "avg_error_ci", "avg_aoi_mean",
                           "avg_aoi_ci", "share_1", "share_2"]
        assert [r[0] for r in rows[1:]] == ["GES", "RoundRobin"]
        assert [float(x) for x in rows[2][7:]] == [0.5, 0.5]

    def test_sweep_deterministic(self, tiny, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        assert main(["sweep", "--config", str(tiny), "--out", str(a)]) == 0
        assert main(["sweep", "--config", str(tiny), "--out", str(b), "--threads", "1"]) == 0
        assert a.read_text() == b.read_text()
        rows = read_csv(a)
        assert [r[0] for r in rows[1:]] == ["DES", "DES", "AoIS", "AoIS", "GES", "RoundRobin"]
        # at least six significant digits in numeric columns
        assert all(len(r[3].replace(".", "").lstrip("0")) >= 6 for r in rows[1:])

    def test_seed_override_changes_results(self, tiny, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        main(["compare", "--config", str(tiny), "--schedulers", "GES", "--out", str(a)])
        main(["compare", "--config", str(tiny), "--schedulers", "GES", "--out", str(b), "--seed", "99"])
        assert a.read_text() != b.read_text()

    def test_bad_gamma_exit_2(self, tiny, tmp_path, capsys):
        assert main(["solve", "--config", str(tiny), "--gamma", "1.5", "--out", str(tmp_path / "x")]) == 2
        assert "gamma" in capsys.readouterr().err

    def test_invalid_json_exit_2(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{loops: ")
        assert main(["compare", "--config", str(bad)]) == 2

    def test_non_convergence_exit_3(self, tmp_path):
        cfg = tmp_path / "slow.json"
        cfg.write_text(json.dumps(dict(TINY, solver={"gamma": 0.99, "theta": 1e-12, "max_sweeps": 3})))
        assert main(["solve", "--config", str(cfg), "--out", str(tmp_path / "p.aoi")]) == 3

    def test_missing_files_exit_4(self, tiny, tmp_path):
        assert main(["compare", "--config", str(tmp_path / "nope.json")]) == 4
        assert main(["simulate", "--config", str(tiny), "--policy", str(tmp_path / "nope.aoi")]) == 4

    def test_policy_mismatch_exit_2(self, tiny, tmp_path):
        other = tmp_path / "other.json"
        other.write_text(json.dumps(dict(TINY, network={"R": 1, "M": 5})))
        pol = tmp_path / "m5.aoi"
        assert main(["solve", "--config", str(other), "--gamma", "0.5", "--out", str(pol)]) == 0
        assert main(["simulate", "--config", str(tiny), "--policy", str(pol)]) == 2

    def test_module_entry_point(self):
        import subprocess
        import sys
        out = subprocess.run([sys.executable, "-m", "aoisched", "--version"], capture_output=True, text=True)
        assert out.returncode == 0 and "aoisched" in out.stdout
