import csv
import json

import numpy as np
import pytest

import gml2o


def test_min_norm_two_gradients():
    sol = gml2o.solve_min_norm(np.array([[1.0, 0.0], [0.0, 1.0]]))
    assert sol["converged"]
    assert sol["weights"] == pytest.approx([0.5, 0.5])
    assert sol["direction"] == pytest.approx([-0.5, -0.5])
    assert sol["dual_norm_sq"] == pytest.approx(0.5)


def test_min_norm_rejects_bad_shape():
    with pytest.raises(gml2o.ShapeError):
        gml2o.solve_min_norm(np.ones(3))


def test_problem_roundtrip():
    p = gml2o.make_problem("quadratic_pair", {"dim": 4, "seed": 1})
    assert (p.dim, p.objectives, p.stochastic) == (4, 2, False)
    x = np.asarray(p.initial_point(3))
    jac = p.jacobian(x)
    assert jac.shape == (2, 4)
    eps = 1e-6
    for j in range(4):
        e = np.zeros(4)
        e[j] = eps
        fd = (np.array(p.eval(x + e)) - np.array(p.eval(x - e))) / (2 * eps)
        assert fd == pytest.approx(jac[:, j], rel=1e-6, abs=1e-8)
    assert p.criticality(x) > 0.0
    assert "toy_mtl" in gml2o.problem_names()


def test_unknown_problem_and_bad_params():
    with pytest.raises(gml2o.NotFoundError):
        gml2o.make_problem("zdt1")
    with pytest.raises(gml2o.ConfigError):
        gml2o.make_problem("quadratic_pair", {"colour": 1})


def test_run_is_seeded_and_descends():
    p = gml2o.make_problem("quadratic_pair", {"dim": 3, "seed": 2, "noise_sigma": 0.2})
    x0 = np.full(3, 2.0)
    a = gml2o.run(p, "dssmg", x0, 50, seed=4, step={"kind": "harmonic"}, nb=4)
    b = gml2o.run(p, "dssmg", x0, 50, seed=4, step={"kind": "harmonic"}, nb=4)
    assert a["losses"].shape == (51, 2)
    np.testing.assert_array_equal(a["losses"], b["losses"])
    assert a["losses"][-1].max() < a["losses"][0].max()
    assert "dssmg" in gml2o.method_names()


def test_learned_method_needs_checkpoint():
    p = gml2o.make_problem("quadratic_pair", {"dim": 3})
    with pytest.raises(gml2o.ConfigError):
        gml2o.run(p, "gml2o", np.zeros(3), 5)


def test_hypervolume_and_front():
    pts = np.array([[0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
    assert gml2o.pareto_front(pts) == [0, 1]
    assert gml2o.hypervolume(pts, np.array([2.0, 2.0])) == pytest.approx(3.0)
    assert gml2o.hypervolume_reference([pts]) == pytest.approx([1.1, 1.1])
    with pytest.raises(gml2o.UnsupportedError):
        gml2o.hypervolume(np.zeros((1, 4)), np.ones(4))


def test_experiment_train_and_compare(tmp_path):
    train = gml2o.train_ml2o(
        {
            "problem": {"name": "quadratic_pair", "params": {"dim": 3}},
            "hidden": 3,
            "horizon": 10,
            "period": 5,
            "meta_lr": 0.01,
            "epochs": 2,
            "output": str(tmp_path / "train"),
        }
    )
    assert train["epochs_run"] == 2
    with open(train["trace"]) as fh:
        assert len(list(csv.reader(fh))) == 1 + 2 * 2

    dirs = []
    for name, params in [("dssmg", {}), ("gml2o", {"checkpoint": train["checkpoint"]})]:
        out = tmp_path / name
        gml2o.run_experiment(
            {
                "problem": {"name": "quadratic_pair", "params": {"dim": 3, "noise_sigma": 0.1}},
                "optimizer": {"name": name, "params": params},
                "steps": 15,
                "step_schedule": {"kind": "constant", "value": 0.1},
                "seeds": [0, 1],
                "output": str(out),
            }
        )
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["config"]["optimizer"]["name"] == name
        dirs.append(str(out))
    rows = gml2o.compare(dirs)
    assert [r["optimizer"] for r in rows] == ["dssmg", "gml2o"]
    assert all(len(r["values"]) == 2 for r in rows)
    summary = gml2o.front(dirs, str(tmp_path / "front"))
    assert len(summary["reference"]) == 2


def test_config_errors_surface():
    with pytest.raises(gml2o.ConfigError) as err:
        gml2o.run_experiment({"optimizer": {"name": "nadam"}, "steps": 0})
    assert "steps" in str(err.value)


def test_quick_check():
    r = gml2o.run_check(2)
    assert r["passed"], r["detail"]
    assert gml2o.check_title(2) == r["title"]
