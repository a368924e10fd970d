import numpy as np
import pytest

import waveband.autodiff as ad
from waveband import revin
from waveband.errors import ShapeMismatch
from waveband.model import (BranchHyperparams, BranchNetwork, ForecastModel,
                            _patch_index)
from waveband.wavelets import (WaveletSpec, coefficient_lengths,
                               dwt_multilevel, idwt_multilevel)

TINY = BranchHyperparams(patch_len=4, stride=2, width=8, depth=1)


def tiny_model(level=2, lookback=16, horizon=8, seed=0):
    return ForecastModel(WaveletSpec("daubechies", 1, level),
                         lookback, horizon, TINY, seed=seed)


# ---------------------------------------------------------------- patching

def test_patch_index_end_aligned():
    idx = _patch_index(10, 4, 3)
    assert idx.shape[1] == 4
    assert idx[0, 0] == 0
    assert idx[-1, -1] == 9          # last patch reaches the final sample
    assert np.all(idx < 10)


def test_patch_index_short_input():
    idx = _patch_index(3, 16, 8)
    assert idx.shape == (1, 3)       # single patch covering everything


# ---------------------------------------------------------------- branches

def test_branch_shapes_over_grid():
    hp = BranchHyperparams(patch_len=8, stride=4, width=8, depth=1)
    rng = np.random.default_rng(0)
    for f in range(1, 6):
        for horizon in (96, 192, 336, 720):
            det, app = coefficient_lengths(horizon, f)
            in_det, in_app = coefficient_lengths(96, f)
            br = BranchNetwork(1, in_det[0], det[0], hp, rng)
            out = br.forward(ad.Tensor(np.zeros((3, in_det[0]))))
            assert out.shape == (3, det[0])
            br_a = BranchNetwork(f + 1, in_app, app, hp, rng)
            out = br_a.forward(ad.Tensor(np.zeros((3, in_app))))
            assert out.shape == (3, app)


def test_branch_zero_input_zero_head_gives_zero():
    rng = np.random.default_rng(1)
    br = BranchNetwork(1, 8, 4, TINY, rng)
    br.head_w.value[...] = 0.0
    br.head_b.value[...] = 0.0
    out = br.forward(ad.Tensor(np.zeros((2, 8))))
    assert np.array_equal(out.value, np.zeros((2, 4)))


def test_branch_input_length_check():
    rng = np.random.default_rng(2)
    br = BranchNetwork(1, 8, 4, TINY, rng)
    with pytest.raises(ShapeMismatch):
        br.forward(ad.Tensor(np.zeros((2, 9))))


def test_branch_parameter_names_are_prefixed_and_unique():
    model = tiny_model()
    names = [p.name for p in model.parameters()]
    assert len(names) == len(set(names))
    for br in model.branches:
        for p in br.parameters():
            assert p.name.startswith(f"branch{br.index}/")


# ---------------------------------------------------------------- model

def test_branch_count_and_output_shape():
    model = tiny_model(level=3, lookback=96, horizon=96)
    assert model.branch_count == 4
    out = model.forward(np.random.default_rng(0).normal(size=(1, 1, 96)))
    assert out.prediction.shape == (1, 1, 96)


def test_forward_input_shape_check():
    model = tiny_model()
    with pytest.raises(ShapeMismatch):
        model.forward(np.zeros((2, 3, 17)))
    with pytest.raises(ShapeMismatch):
        model.forward(np.zeros((3, 16)))


def test_zero_branches_predict_instance_mean():
    model = tiny_model()
    for br in model.branches:
        br.head_w.value[...] = 0.0
        br.head_b.value[...] = 0.0
        br.embed_w.value[...] = 0.0  # kill mixer path entirely
        for (tw, tb), (cw, cb) in br.blocks:
            tw.value[...] = 0.0
            tb.value[...] = 0.0
            cw.value[...] = 0.0
            cb.value[...] = 0.0
    x = np.random.default_rng(3).normal(size=(2, 3, 16))
    pred = model.predict(x)
    mean = x.mean(axis=-1, keepdims=True)
    assert np.max(np.abs(pred - mean)) < 1e-10


def test_forward_matches_stage_by_stage_oracle():
    model = tiny_model(level=2, lookback=32, horizon=16)
    rng = np.random.default_rng(4)
    x = rng.normal(size=(2, 3, 32))
    fp = model.forward(x)

    x_norm, stats = revin.normalize(x)
    coeffs = dwt_multilevel(x_norm, model.spec)
    outs = []
    for br, band in zip(model.branches, coeffs.bands()):
        rows = br.forward(ad.Tensor(band.reshape(-1, band.shape[-1])))
        outs.append(rows.value.reshape(2, 3, -1))
    from waveband.wavelets import CoefficientSet
    pred_coeffs = CoefficientSet(approximation=outs[-1],
                                 details=outs[:-1],
                                 input_lengths=model.horizon_lengths)
    y_norm = idwt_multilevel(pred_coeffs, model.spec)
    expect = y_norm * stats.scale + stats.mean
    assert np.max(np.abs(fp.prediction.value - expect)) < 1e-12


def test_predicted_coeffs_are_normalized_space_band_outputs():
    model = tiny_model()
    fp = model.forward(np.random.default_rng(5).normal(size=(1, 2, 16)))
    for t, band in zip(fp.band_outputs, fp.predicted_coeffs.bands()):
        assert np.array_equal(t.value, band)


def test_branch_isolation_forward():
    # perturbing branch v's parameters changes only band v's output
    model = tiny_model()
    x = np.random.default_rng(6).normal(size=(1, 1, 16))
    base = model.forward(x)
    base_bands = [b.copy() for b in base.predicted_coeffs.bands()]
    for p in model.branches[0].parameters():
        p.value += 0.1
    after = model.forward(x)
    after_bands = after.predicted_coeffs.bands()
    assert not np.allclose(after_bands[0], base_bands[0])
    for v in range(1, len(base_bands)):
        assert np.array_equal(after_bands[v], base_bands[v])


def test_branch_isolation_backward():
    model = tiny_model()
    x = np.random.default_rng(7).normal(size=(2, 1, 16))
    y = np.random.default_rng(8).normal(size=(2, 1, 8))
    model.zero_grad()
    fp = model.forward(x)
    ad.backward(ad.smooth_l1_loss(fp.prediction, y))
    # every branch receives some gradient; branches stay disjoint by name
    for br in model.branches:
        assert any(np.any(p.grad != 0.0) for p in br.parameters())


def test_determinism_under_fixed_seed():
    a = tiny_model(seed=42)
    b = tiny_model(seed=42)
    for pa, pb in zip(a.parameters(), b.parameters()):
        assert np.array_equal(pa.value, pb.value)
    x = np.random.default_rng(9).normal(size=(1, 1, 16))
    assert np.array_equal(a.predict(x), b.predict(x))


def test_full_model_gradients_match_finite_differences():
    # tiny configuration: T=8, K=4, f=2, width 8
    hp = BranchHyperparams(patch_len=4, stride=2, width=8, depth=1)
    model = ForecastModel(WaveletSpec("daubechies", 1, 2), 8, 4, hp, seed=0)
    rng = np.random.default_rng(10)
    x = rng.normal(size=(2, 1, 8))
    y = rng.normal(size=(2, 1, 4))

    model.zero_grad()
    ad.backward(ad.smooth_l1_loss(model.forward(x).prediction, y))

    def loss_value():
        return float(ad.smooth_l1_loss(model.forward(x).prediction, y).value)

    step = 1e-5
    for p in model.parameters():
        it = np.nditer(p.value, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            orig = p.value[idx]
            p.value[idx] = orig + step
            hi = loss_value()
            p.value[idx] = orig - step
            lo = loss_value()
            p.value[idx] = orig
            numeric = (hi - lo) / (2 * step)
            denom = max(abs(numeric), 1e-8)
            assert abs(p.grad[idx] - numeric) / denom < 1e-4, p.name
