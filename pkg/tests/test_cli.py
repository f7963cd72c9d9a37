"""CLI subcommands, exit codes, and manifest reproducibility."""

import hashlib
import json

import numpy as np

from nuqmc.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def sha(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


def test_disc_single_midpoint(tmp_path, capsys):
    p = tmp_path / "p.csv"
    p.write_text("0.5\n")
    code, out, _ = run(capsys, "disc", "--points", str(p), "--measure", "uniform", "--d", "1")
    assert code == 0
    assert float(out.strip()) == 0.5


def test_disc_estimate_mode(tmp_path, capsys):
    p = tmp_path / "p.csv"
    rng = np.random.default_rng(1)
    np.savetxt(p, rng.random((40, 2)), delimiter=",")
    code, est_out, _ = run(capsys, "disc", "--points", str(p), "--measure", "uniform",
                           "--d", "2", "--estimate", "--trials", "500", "--seed", "4")
    assert code == 0
    code, exact_out, _ = run(capsys, "disc", "--points", str(p), "--measure", "uniform",
                             "--d", "2")
    assert float(est_out.strip()) <= float(exact_out.strip()) + 1e-12


def test_inverse_size_paper(capsys):
    code, out, _ = run(capsys, "inverse-size", "--d", "1", "--eps", "0.5", "--mode", "paper")
    assert code == 0
    assert out.strip() == "268435456"


def test_gen_disc_roundtrip(tmp_path, capsys):
    cfg = tmp_path / "m.json"
    cfg.write_text('{"type": "product", "cdfs": [{"type": "power", "theta": 2.0}]}')
    out_csv = tmp_path / "pts.csv"
    cert = tmp_path / "cert.json"
    code, _, _ = run(
        capsys, "gen", "--measure", str(cfg), "--n", "16", "--seed", "1",
        "--out", str(out_csv), "--certificate", str(cert),
    )
    assert code == 0
    code, out, _ = run(capsys, "disc", "--points", str(out_csv), "--measure", str(cfg))
    assert code == 0
    value = float(out.strip())
    bound = json.loads(cert.read_text())["bound"]
    assert value <= bound


def test_manifest_reproducibility(tmp_path, capsys):
    cfg = tmp_path / "m.json"
    cfg.write_text('{"type": "uniform", "d": 1}')
    hashes = []
    for rep in ("a", "b"):
        out_csv = tmp_path / f"pts_{rep}.csv"
        code, _, _ = run(
            capsys, "gen", "--measure", str(cfg), "--n", "8", "--seed", "3",
            "--out", str(out_csv),
        )
        assert code == 0
        manifest = json.loads((tmp_path / f"pts_{rep}.csv.manifest.json").read_text())
        assert manifest["seed"] == 3
        hashes.append(sha(out_csv))
    assert hashes[0] == hashes[1]


def test_seq_command(tmp_path, capsys):
    out_csv = tmp_path / "seq.csv"
    cert = tmp_path / "env.json"
    code, _, _ = run(
        capsys, "seq", "--measure", "uniform", "--d", "1", "--count", "6",
        "--seed", "2", "--out", str(out_csv), "--certificate", str(cert),
    )
    assert code == 0
    envs = json.loads(cert.read_text())["prefix_envelopes"]
    assert len(envs) == 6
    pts = np.loadtxt(out_csv, delimiter=",").reshape(-1, 1)
    assert pts.shape == (6, 1)


def test_select_command(tmp_path, capsys):
    z = tmp_path / "z.csv"
    rng = np.random.default_rng(0)
    np.savetxt(z, rng.random((100, 2)), delimiter=",")
    out_csv = tmp_path / "sel.csv"
    code, out, _ = run(capsys, "select", "--points", str(z), "--n", "10",
                       "--out", str(out_csv))
    assert code == 0
    sel = np.loadtxt(out_csv, delimiter=",")
    assert sel.shape == (10, 2)


def test_round_command(tmp_path, capsys):
    h = tmp_path / "h.json"
    h.write_text('{"n": 4, "edges": [[0, 1, 2, 3]]}')
    beta = tmp_path / "beta.json"
    beta.write_text("[0.5, 0.5, 0.5, 0.5]")
    out = tmp_path / "res.json"
    code, text, _ = run(capsys, "round", "--hypergraph", str(h), "--beta", str(beta),
                        "--out", str(out))
    assert code == 0
    res = json.loads(out.read_text())
    assert res["guaranteed_bound"] == 1.0
    assert res["achieved_error"] <= 1.0


def test_integrate_command(tmp_path, capsys):
    omega = tmp_path / "omega.json"
    omega.write_text('{"boxes": [[[0.0, 0.0], [0.5, 1.0]], [[0.5, 0.0], [1.0, 0.5]]]}')
    pts = tmp_path / "p.csv"
    np.savetxt(pts, [[0.25, 0.25], [0.1, 0.8], [0.7, 0.2]], delimiter=",")
    code, out, _ = run(capsys, "integrate", "--measure-omega", str(omega),
                       "--g", "const", "--points", str(pts))
    assert code == 0
    assert "estimate 1" in out


def test_bench_command(tmp_path, capsys):
    omega = tmp_path / "omega.json"
    omega.write_text('{"boxes": [[[0.0, 0.0], [0.5, 1.0]], [[0.5, 0.0], [1.0, 0.5]]]}')
    out = tmp_path / "bench.csv"
    code, _, _ = run(capsys, "bench", "--measure-omega", str(omega), "--g", "linear-sum",
                     "--n-list", "4,8", "--seeds", "2", "--out", str(out))
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "n,method,seed,estimate,reference,error"
    assert len(lines) == 1 + 2 * (1 + 2)


def test_bench_jobs_deterministic(tmp_path, capsys):
    omega = tmp_path / "omega.json"
    omega.write_text('{"boxes": [[[0.0], [0.5]]]}')
    outs = []
    for jobs, name in ((1, "a.csv"), (2, "b.csv")):
        out = tmp_path / name
        code, _, _ = run(capsys, "bench", "--measure-omega", str(omega), "--g", "const",
                         "--n-list", "4,8", "--seeds", "2", "--jobs", str(jobs),
                         "--out", str(out))
        assert code == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_verify_balancing_suite(capsys):
    code, out, _ = run(capsys, "verify", "--suite", "balancing", "--seed", "1")
    assert code == 0
    assert "PASS" in out
    assert "beck-fiala" in out


def test_exit_code_usage_error(capsys):
    code, _, err = run(capsys, "gen", "--measure", "uniform")
    assert code == 1  # missing required arguments


def test_exit_code_precondition(tmp_path, capsys):
    z = tmp_path / "z.csv"
    np.savetxt(z, np.random.default_rng(0).random((10, 1)), delimiter=",")
    code, _, err = run(capsys, "select", "--points", str(z), "--n", "9",
                       "--out", str(tmp_path / "s.csv"))
    assert code == 2  # 9 > sqrt(10)
    assert "sqrt" in err


def test_exit_code_budget(tmp_path, capsys, monkeypatch):
    p = tmp_path / "p.csv"
    np.savetxt(p, np.random.default_rng(0).random((50, 2)), delimiter=",")
    code, _, err = run(capsys, "disc", "--points", str(p), "--measure", "uniform",
                       "--d", "2", "--budget", "10")
    assert code == 3
    assert "budget" in err


def test_budget_env_override(tmp_path, capsys, monkeypatch):
    p = tmp_path / "p.csv"
    np.savetxt(p, np.random.default_rng(0).random((50, 2)), delimiter=",")
    monkeypatch.setenv("NUQMC_BUDGET", "10")
    code, _, _ = run(capsys, "disc", "--points", str(p), "--measure", "uniform", "--d", "2")
    assert code == 3
    monkeypatch.setenv("NUQMC_BUDGET", "100000000")
    code, _, _ = run(capsys, "disc", "--points", str(p), "--measure", "uniform", "--d", "2")
    assert code == 0


def test_help_documents_formats(capsys):
    code = main(["disc", "--help"])
    assert code == 0
    out = capsys.readouterr().out
    assert "csv" in out.lower()
