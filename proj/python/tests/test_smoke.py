import json
import math

import numpy as np
import pytest

import cloudtpt


def mueller_reference(x, y):
    a = [-1, -1, -6.5, 0.7]
    b = [0, 0, 11, 0.6]
    c = [-10, -10, -6.5, 0.7]
    big_a = [-2, -1, -1.7, 0.15]
    x0 = [1, 0, -0.5, -1]
    y0 = [0, 0.5, 1.5, 1]
    return sum(
        big_a[k] * math.exp(a[k] * (x - x0[k]) ** 2 + b[k] * (x - x0[k]) * (y - y0[k]) + c[k] * (y - y0[k]) ** 2)
        for k in range(4)
    )


def test_mueller_matches_closed_form():
    for x, y in [(0.0, 0.0), (0.6, 0.03), (-0.5, 1.4), (0.3, -0.2)]:
        energy, grad = cloudtpt.mueller(x, y)
        assert energy == pytest.approx(mueller_reference(x, y), rel=1e-12)
        h = 1e-6
        fd = (mueller_reference(x + h, y) - mueller_reference(x - h, y)) / (2 * h)
        assert grad[0] == pytest.approx(fd, rel=1e-5)


def test_stationary_points_are_stationary():
    points = cloudtpt.mueller_stationary_points()
    assert [kind for _, kind, _ in points] == ["minimum"] * 3 + ["saddle"] * 2
    for loc, _, energy in points:
        e, g = cloudtpt.mueller(*loc)
        assert e == pytest.approx(energy)
        assert np.linalg.norm(g) < 1e-8


def test_sphere_samples_and_tessellation():
    pts = cloudtpt.sample_sphere(1500, 3)
    assert pts.shape == (1500, 3)
    assert np.allclose(np.linalg.norm(pts, axis=1), 1.0, atol=1e-12)
    tess = cloudtpt.tessellate(pts)
    total = tess["volumes"].sum()
    assert abs(total - 4 * math.pi) / (4 * math.pi) < 0.1
    faces = {(i, j): a for i, j, a in zip(tess["face_from"], tess["face_to"], tess["face_area"])}
    assert all(faces[(j, i)] == a for (i, j), a in faces.items())


def test_analyze_sphere_mueller():
    pts = cloudtpt.sample_sphere(2000, 1)
    energies = cloudtpt.sphere_mueller_energies(pts)
    (x1, _, _), _, (x3, _, _), _, _ = cloudtpt.mueller_stationary_points()
    a = cloudtpt.ball_indices(pts, cloudtpt.inverse_stereographic(x1), 0.1)
    b = cloudtpt.ball_indices(pts, cloudtpt.inverse_stereographic(x3), 0.1)
    out = cloudtpt.analyze(pts, 2, energies, 0.2, a, b)
    q = out["committor"]
    assert q.min() >= 0.0 and q.max() <= 1.0
    assert all(q[i] == 0.0 for i in a) and all(q[i] == 1.0 for i in b)
    assert out["rate"] > 0.0
    path = out["dominant_path"]
    assert path[0] in a and path[-1] in b
    assert all(q[u] < q[v] for u, v in zip(path, path[1:]))
    # the rate is the total current leaving A
    leaving = sum(c for i, j, c in out["current"] if i in a and j not in a)
    assert leaving == pytest.approx(out["rate"], rel=1e-9)


def test_reparameterize_collinear():
    s = np.sort(np.random.default_rng(4).uniform(size=30))
    pts = np.outer(s, [1.0, 2.0])
    r = cloudtpt.reparameterize(pts)
    gaps = np.linalg.norm(np.diff(r, axis=0), axis=1)
    assert np.allclose(gaps, gaps.mean(), rtol=1e-9)


def test_errors_are_raised():
    with pytest.raises(cloudtpt.Error):
        cloudtpt.sample_sphere(1, 1)
    with pytest.raises(cloudtpt.Error):
        cloudtpt.run_experiment(["no_such_key=1"])


def test_run_experiment_writes_outputs(tmp_path):
    summary = json.loads(
        cloudtpt.run_experiment(
            ["n_samples=600", "eps=0.2", "set_radius=0.1", "k_max=5000", "m=20", "mep=false", f"output={tmp_path}"]
        )
    )
    assert summary["rate"] > 0.0
    assert cloudtpt.load_summary(tmp_path)["rate"] == summary["rate"]
    header, rows = cloudtpt.load_csv(tmp_path / "committor.csv")
    assert header[:2] == ["id", "q"]
    assert rows.shape[0] == 600
