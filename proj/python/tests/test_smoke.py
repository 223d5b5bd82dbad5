import numpy as np
import pytest

import physgrid


def ramp_field(nt=12, ny=5, nx=6):
    axes = physgrid.GridAxes()
    axes.dx, axes.dy, axes.dt = 0.5, 0.25, 0.1
    t, y, x = np.meshgrid(np.arange(nt) * 0.1, np.arange(ny) * 0.25, np.arange(nx) * 0.5, indexing="ij")
    values = (2.0 * x - y + 3.0 * t)[..., None]
    return physgrid.GridField(values, ["u"], axes)


def test_numpy_round_trip(tmp_path):
    f = ramp_field()
    assert f.shape == (12, 5, 6, 1)
    path = tmp_path / "f.pgwf"
    physgrid.save_grid(f, str(path))
    g = physgrid.load_grid(str(path))
    assert np.array_equal(f.numpy(), g.numpy())
    assert g.names == ["u"]


def test_shape_and_file_errors(tmp_path):
    with pytest.raises(ValueError):
        physgrid.GridField(np.zeros((2, 3, 4)), ["u"])
    with pytest.raises(ValueError):
        physgrid.GridField(np.zeros((2, 3, 4, 2)), ["u"])
    bad = tmp_path / "bad.pgwf"
    bad.write_bytes(b"nope")
    with pytest.raises(physgrid.DataError):
        physgrid.load_grid(str(bad))


def test_fd_exact_on_affine_field():
    f = ramp_field()
    assert np.allclose(physgrid.fd_derivative(f, "central", "x"), 2.0)
    assert np.allclose(physgrid.fd_derivative(f, "forward", "y"), -1.0)
    assert np.allclose(physgrid.fd_derivative(f, "backward", "t"), 3.0)


def test_split_and_metrics():
    f = ramp_field(nt=20)
    train, val, test = physgrid.chronological_split(f)
    assert (train.shape[0], val.shape[0], test.shape[0]) == (16, 2, 2)
    assert physgrid.rmse(f, f) == [0.0]
    shifted = physgrid.GridField(f.numpy() + 1.5, ["u"], f.axes)
    assert physgrid.rmse(shifted, f)[0] == pytest.approx(1.5)
    clim = physgrid.climatology(train)
    assert physgrid.acc(f, f, clim)[0] == pytest.approx(1.0)


def test_generate_train_downscale():
    g = physgrid.generate("advection2d", nx=8, ny=8, nt=20, seed=3)
    assert g["self_check_passed"]
    assert g["coarse"].shape == (20, 8, 8, 1)
    assert g["fine2x"].shape == (20, 15, 15, 1)
    r = physgrid.train(g["coarse"], epochs=2, batch_size=64, hidden_width=8, hidden_layers=2, warmup_epochs=1)
    assert r["aborted"] is None
    assert r["history_csv"].startswith("epoch,")
    fine = physgrid.downscale(r["surrogate"], g["coarse"], 2)
    assert fine.shape == g["fine2x"].shape
    with pytest.raises(ValueError):
        physgrid.train(g["coarse"], epoch=2)
