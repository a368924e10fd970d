"""End-to-end forecaster: normalize, decompose, per-band networks,
reconstruct, denormalize.

Each frequency band gets its own independently parameterized patch-mixer
network operating channel-independently (branch weights shared across
variates).  Branch v in 1..f covers the level-v detail band; branch f+1
covers the approximation.
"""

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from . import revin
from .errors import ShapeMismatch
from .wavelets import (CoefficientSet, WaveletSpec, coefficient_lengths,
                       dwt_multilevel, idwt_multilevel,
                       idwt_multilevel_backward)


@dataclass(frozen=True)
class BranchHyperparams:
    patch_len: int = 16
    stride: int = 8
    width: int = 32
    depth: int = 2
    activation: str = "gelu"


def _patch_index(length: int, patch_len: int, stride: int) -> np.ndarray:
    """End-aligned patch index matrix [n_patches, effective patch length]."""
    p = min(patch_len, length)
    s = max(1, min(stride, p))
    if length <= p:
        starts = [0]
    else:
        n = 1 + int(np.ceil((length - p) / s))
        starts = [min(k * s, length - p) for k in range(n)]
    return np.asarray([[st + j for j in range(p)] for st in starts])


class BranchNetwork:
    """Patchify -> embed -> mixer blocks -> linear head, per band."""

    def __init__(self, index: int, in_len: int, out_len: int,
                 hp: BranchHyperparams, rng: np.random.Generator):
        self.index = index
        self.in_len = in_len
        self.out_len = out_len
        self.hp = hp
        self.patch_index = _patch_index(in_len, hp.patch_len, hp.stride)
        n_patches, p_eff = self.patch_index.shape
        prefix = f"branch{index}"
        self.embed_w, self.embed_b = ad.init_dense(
            rng, p_eff, hp.width, f"{prefix}/embed")
        self.blocks = []
        for d in range(hp.depth):
            tok = ad.init_dense(rng, n_patches, n_patches,
                                f"{prefix}/mixer{d}/token")
            chan = ad.init_dense(rng, hp.width, hp.width,
                                 f"{prefix}/mixer{d}/channel")
            self.blocks.append((tok, chan))
        self.head_w, self.head_b = ad.init_dense(
            rng, n_patches * hp.width, out_len, f"{prefix}/head")

    def parameters(self):
        out = [self.embed_w, self.embed_b]
        for (tw, tb), (cw, cb) in self.blocks:
            out.extend([tw, tb, cw, cb])
        out.extend([self.head_w, self.head_b])
        return out

    def forward(self, coeff_in: ad.Tensor) -> ad.Tensor:
        """[rows, in_len] -> [rows, out_len]."""
        if coeff_in.shape[-1] != self.in_len:
            raise ShapeMismatch(
                f"branch {self.index}: expected input length {self.in_len}, "
                f"got {coeff_in.shape[-1]}")
        act = self.hp.activation
        n_patches, _ = self.patch_index.shape
        h = ad.gather_last(coeff_in, self.patch_index)   # [R, n_p, p]
        h = ad.dense(h, self.embed_w, self.embed_b)      # [R, n_p, W]
        for (tok_w, tok_b), (chan_w, chan_b) in self.blocks:
            ht = ad.swap_last_axes(h)                    # [R, W, n_p]
            ht = ad.activation(ad.dense(ht, tok_w, tok_b), act)
            h = ad.add(h, ad.swap_last_axes(ht))
            hc = ad.activation(ad.dense(h, chan_w, chan_b), act)
            h = ad.add(h, hc)
        h = ad.reshape(h, (-1, n_patches * self.hp.width))
        return ad.dense(h, self.head_w, self.head_b)


@dataclass
class ForwardPass:
    prediction: ad.Tensor            # [B, N, K], de-normalized
    band_outputs: list               # tensors in branch order (normalized)
    predicted_coeffs: CoefficientSet  # values only, normalized space
    stats: revin.InstanceStats


class ForecastModel:
    """f+1 branch networks around the wavelet analysis/synthesis pair."""

    def __init__(self, spec: WaveletSpec, lookback: int, horizon: int,
                 hp: BranchHyperparams = BranchHyperparams(), seed: int = 0):
        self.spec = spec
        self.lookback = lookback
        self.horizon = horizon
        self.hp = hp
        f = spec.level
        in_det, in_app = coefficient_lengths(lookback, f)
        out_det, out_app = coefficient_lengths(horizon, f)
        self.horizon_lengths = _length_chain(horizon, f)
        rng = np.random.default_rng(seed)
        self.branches = [
            BranchNetwork(v + 1, in_det[v], out_det[v], hp, rng)
            for v in range(f)
        ]
        self.branches.append(BranchNetwork(f + 1, in_app, out_app, hp, rng))

    @property
    def branch_count(self) -> int:
        return len(self.branches)

    def parameters(self):
        out = []
        for br in self.branches:
            out.extend(br.parameters())
        return out

    def zero_grad(self):
        for p in self.parameters():
            p.zero_grad()

    def forward(self, x) -> ForwardPass:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 3 or x.shape[-1] != self.lookback:
            raise ShapeMismatch(
                f"expected [B, N, {self.lookback}] input, got {x.shape}")
        B, N, _ = x.shape
        x_norm, stats = revin.normalize(x)
        coeffs = dwt_multilevel(x_norm, self.spec)

        band_outputs = []
        for br, band in zip(self.branches, coeffs.bands()):
            rows = ad.Tensor(band.reshape(B * N, -1))
            out = br.forward(rows)
            band_outputs.append(ad.reshape(out, (B, N, br.out_len)))

        pred_coeffs = CoefficientSet(
            approximation=band_outputs[-1].value,
            details=[t.value for t in band_outputs[:-1]],
            input_lengths=self.horizon_lengths,
        )
        y_norm_val = idwt_multilevel(pred_coeffs, self.spec)

        spec = self.spec

        def idwt_backward(g):
            gset = idwt_multilevel_backward(g, pred_coeffs, spec)
            return tuple(gset.details) + (gset.approximation,)

        y_norm = ad.lift(y_norm_val, band_outputs, idwt_backward)
        prediction = ad.add(ad.mul(y_norm, ad.Tensor(stats.scale)),
                            ad.Tensor(stats.mean))
        return ForwardPass(prediction=prediction,
                           band_outputs=band_outputs,
                           predicted_coeffs=pred_coeffs,
                           stats=stats)

    def predict(self, x) -> np.ndarray:
        """Inference path: plain forward, values only."""
        return self.forward(x).prediction.value


def _length_chain(length: int, level: int) -> tuple:
    chain = []
    cur = length
    for _ in range(level):
        chain.append(cur)
        cur = (cur + 1) // 2
    return tuple(chain)
