import json
import math

import numpy as np
import pytest

import kgslab


def test_transform_roundtrip_and_gaussian():
    g = kgslab.Grid(32.0, 1023)
    f = np.exp(-0.5 * g.r**2).astype(complex)
    F = kgslab.forward_transform(g, f)
    mask = g.xi <= 6.0
    exact = (2 * math.pi) ** 1.5 * np.exp(-0.5 * g.xi[mask] ** 2)
    assert np.max(np.abs(F[mask] - exact) / exact) < 1e-6
    back = kgslab.inverse_transform(g, F)
    assert kgslab.lq_norm(g, back - f) <= 1e-10 * kgslab.lq_norm(g, f)


def test_bad_length_rejected():
    g = kgslab.Grid(8.0, 63)
    with pytest.raises(ValueError):
        kgslab.forward_transform(g, np.zeros(10, dtype=complex))


def test_resonance_values():
    # |xi| = 2, |eta| = 1, parallel: |xi - eta| = 1, so 4 - sqrt(2) - 1
    assert kgslab.phi(2.0, 1.0, 1.0, 1) == pytest.approx(3.0 - math.sqrt(2.0))
    rows = kgslab.verify_lemma("sch-i", [-4], [-5], resolution=40)
    assert rows and all(r["margin"] >= 0 for r in rows if r["status"] != "info")


def test_p_variation_two_points():
    d = [[0.0, 3.0], [3.0, 0.0]]
    assert kgslab.p_variation(d, 2.0) == pytest.approx(3.0)


def test_small_solve_conserves_mass():
    g = kgslab.Grid(32.0, 1023)
    out = kgslab.solve(g, delta=0.01, T=0.5, dt=1 / 128)
    assert out["status"] == "ok"
    assert out["u"].shape == (65, 1023)
    assert out["mass_drift"] < 1e-10
    assert out["residual"] < 1e-3


def test_run_config(tmp_path):
    res = kgslab.run_config("experiment: resonance-verify\ncase: kg-i\nk1: [-4]\nk2: [-5]\nresolution: 40\n", str(tmp_path))
    assert res["exit_status"] == 0
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["pass"] is True
    with pytest.raises(kgslab.ConfigError, match="experiment required"):
        kgslab.run_config("", str(tmp_path))
    names = [n for n, _ in kgslab.experiments()]
    assert "scatter-diag" in names
