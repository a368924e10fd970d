"""Multi-level discrete wavelet transform with periodized boundaries.

The transform runs along the last axis of an array, independently per
leading index (batch item, variate).  Odd-length inputs are padded by
repeating the last sample before each halving level, so the coefficient
series at level k has length ceil(L_{k-1} / 2); the recorded per-level
lengths make the inverse exact.

Filter coefficients live in ``_filter_data`` as literal tables and are
validated by the property tests, not trusted.
"""

from dataclasses import dataclass, field
from functools import lru_cache
import re

import numpy as np

from ._filter_data import FILTERS
from .errors import LengthMismatch, SignalTooShort, UnsupportedWavelet

FAMILY_ALIASES = {
    "db": "daubechies",
    "daubechies": "daubechies",
    "sym": "symlets",
    "symlets": "symlets",
    "coif": "coiflets",
    "coiflets": "coiflets",
    "bior": "biorthogonal",
    "biorthogonal": "biorthogonal",
}

# orders present in the embedded tables
SUPPORTED_ORDERS = {
    "daubechies": set(range(1, 39)),
    "symlets": set(range(2, 21)),
    "coiflets": set(range(1, 6)),
    "biorthogonal": {13, 22, 24, 31, 33, 44, 55, 68},
}


@dataclass(frozen=True)
class WaveletSpec:
    """Wavelet family + order + decomposition level + boundary mode.

    Biorthogonal orders are encoded as the two-digit pair, e.g. 24 for
    the 2.4 filter pair.
    """

    family: str
    order: int
    level: int
    boundary: str = "periodized"

    def __post_init__(self):
        fam = FAMILY_ALIASES.get(self.family.lower())
        if fam is None:
            raise UnsupportedWavelet(f"unknown wavelet family {self.family!r}")
        object.__setattr__(self, "family", fam)
        if self.order not in SUPPORTED_ORDERS[fam]:
            raise UnsupportedWavelet(
                f"order {self.order} not tabulated for family {fam!r}")
        if self.level < 1:
            raise ValueError(f"decomposition level must be >= 1, got {self.level}")
        if self.boundary != "periodized":
            raise ValueError(f"unsupported boundary mode {self.boundary!r}")


def parse_wavelet_name(name: str, level: int) -> WaveletSpec:
    """Build a spec from a short name like 'db4', 'sym8', 'coif3', 'bior2.4'."""
    m = re.fullmatch(r"([a-z]+)(\d+)(?:\.(\d+))?", name.strip().lower())
    if m is None:
        raise UnsupportedWavelet(f"cannot parse wavelet name {name!r}")
    prefix, major, minor = m.group(1), int(m.group(2)), m.group(3)
    order = major * 10 + int(minor) if minor is not None else major
    return WaveletSpec(family=prefix, order=order, level=level)


@dataclass(frozen=True)
class FilterBank:
    """Analysis/synthesis filter pairs plus their periodization phases."""

    dec_lo: np.ndarray
    dec_hi: np.ndarray
    rec_lo: np.ndarray
    rec_hi: np.ndarray
    shifts: tuple  # (analysis lo, analysis hi, synthesis lo, synthesis hi)


@lru_cache(maxsize=None)
def filter_bank(family: str, order: int) -> FilterBank:
    fam = FAMILY_ALIASES.get(family.lower())
    key = (fam, order)
    if key not in FILTERS:
        raise UnsupportedWavelet(f"no filter table for {family} order {order}")
    dl, dh, rl, rh, shifts = FILTERS[key]
    return FilterBank(
        dec_lo=np.asarray(dl, dtype=np.float64),
        dec_hi=np.asarray(dh, dtype=np.float64),
        rec_lo=np.asarray(rl, dtype=np.float64),
        rec_hi=np.asarray(rh, dtype=np.float64),
        shifts=shifts,
    )


@dataclass
class CoefficientSet:
    """Level-f approximation plus f detail series.

    ``details[0]`` is the level-1 (highest-frequency) detail band;
    ``details[-1]`` the level-f band.  ``input_lengths[k-1]`` is the
    pre-padding series length fed into level k, needed for inversion.
    """

    approximation: np.ndarray
    details: list = field(default_factory=list)
    input_lengths: tuple = ()

    @property
    def level(self) -> int:
        return len(self.details)

    def map(self, fn) -> "CoefficientSet":
        return CoefficientSet(
            approximation=fn(self.approximation),
            details=[fn(d) for d in self.details],
            input_lengths=self.input_lengths,
        )

    def bands(self):
        """Bands in branch order: details level 1..f, then approximation."""
        return list(self.details) + [self.approximation]


def coefficient_lengths(length: int, level: int):
    """Per-band lengths: ([detail len at level 1..f], approx len)."""
    detail = []
    cur = length
    for _ in range(level):
        cur = (cur + 1) // 2
        detail.append(cur)
    return detail, cur


def min_signal_length(level: int) -> int:
    return 2 ** level


# ----------------------------------------------------------------------
# single-level kernels over [rows, length] arrays
# ----------------------------------------------------------------------

def _index_matrix(half, taps, shift, length):
    k = 2 * np.arange(half)[:, None]
    j = np.arange(taps)[None, :]
    return (k + j + shift) % length


def _analyze(rows, bank):
    length = rows.shape[1]
    padded = length % 2 == 1
    if padded:
        rows = np.concatenate([rows, rows[:, -1:]], axis=1)
    L = rows.shape[1]
    half = L // 2
    sa_lo, sa_hi, _, _ = bank.shifts
    ilo = _index_matrix(half, len(bank.dec_lo), sa_lo, L)
    ihi = _index_matrix(half, len(bank.dec_hi), sa_hi, L)
    a = rows[:, ilo] @ bank.dec_lo
    d = rows[:, ihi] @ bank.dec_hi
    return a, d


def _synthesize(a, d, bank, out_len):
    half = a.shape[1]
    L = 2 * half
    _, _, ss_lo, ss_hi = bank.shifts
    rl = bank.rec_lo[::-1]
    rh = bank.rec_hi[::-1]
    ilo = _index_matrix(half, len(rl), ss_lo, L)
    ihi = _index_matrix(half, len(rh), ss_hi, L)
    rows = np.zeros((a.shape[0], L))
    ridx = np.arange(a.shape[0])[:, None, None]
    np.add.at(rows, (ridx, ilo[None]), a[:, :, None] * rl[None, None, :])
    np.add.at(rows, (ridx, ihi[None]), d[:, :, None] * rh[None, None, :])
    return rows[:, :out_len]


def _analyze_adjoint(grad_a, grad_d, bank, out_len):
    """Transpose of (pad-to-even then analyze), mapping back to out_len."""
    half = grad_a.shape[1]
    L = 2 * half
    sa_lo, sa_hi, _, _ = bank.shifts
    ilo = _index_matrix(half, len(bank.dec_lo), sa_lo, L)
    ihi = _index_matrix(half, len(bank.dec_hi), sa_hi, L)
    rows = np.zeros((grad_a.shape[0], L))
    ridx = np.arange(grad_a.shape[0])[:, None, None]
    np.add.at(rows, (ridx, ilo[None]),
              grad_a[:, :, None] * bank.dec_lo[None, None, :])
    np.add.at(rows, (ridx, ihi[None]),
              grad_d[:, :, None] * bank.dec_hi[None, None, :])
    if out_len < L:
        rows[:, out_len - 1] += rows[:, out_len]
        rows = rows[:, :out_len]
    return rows


def _synthesize_adjoint(grad_rows, bank, coeff_len):
    """Transpose of (synthesize then truncate)."""
    L = 2 * coeff_len
    if grad_rows.shape[1] < L:
        pad = np.zeros((grad_rows.shape[0], L - grad_rows.shape[1]))
        grad_rows = np.concatenate([grad_rows, pad], axis=1)
    _, _, ss_lo, ss_hi = bank.shifts
    rl = bank.rec_lo[::-1]
    rh = bank.rec_hi[::-1]
    ilo = _index_matrix(coeff_len, len(rl), ss_lo, L)
    ihi = _index_matrix(coeff_len, len(rh), ss_hi, L)
    grad_a = grad_rows[:, ilo] @ rl
    grad_d = grad_rows[:, ihi] @ rh
    return grad_a, grad_d


def _as_rows(x):
    x = np.asarray(x, dtype=np.float64)
    lead = x.shape[:-1]
    return x.reshape(-1, x.shape[-1]), lead


# ----------------------------------------------------------------------
# multi-level interface
# ----------------------------------------------------------------------

def dwt_multilevel(signal, spec: WaveletSpec) -> CoefficientSet:
    """Decompose along the last axis into level-f approximation + f details."""
    rows, lead = _as_rows(signal)
    length = rows.shape[1]
    if length + length % 2 < min_signal_length(spec.level):
        raise SignalTooShort(
            f"length {length} supports at most level "
            f"{max(0, (length + length % 2)).bit_length() - 1}, "
            f"requested {spec.level}")
    bank = filter_bank(spec.family, spec.order)
    details = []
    lengths = []
    cur = rows
    for _ in range(spec.level):
        lengths.append(cur.shape[1])
        cur, d = _analyze(cur, bank)
        details.append(d)
    return CoefficientSet(
        approximation=cur.reshape(lead + cur.shape[-1:]),
        details=[d.reshape(lead + d.shape[-1:]) for d in details],
        input_lengths=tuple(lengths),
    )


def idwt_multilevel(coeffs: CoefficientSet, spec: WaveletSpec):
    """Invert :func:`dwt_multilevel`, restoring the pre-padding length."""
    if coeffs.level != spec.level:
        raise LengthMismatch(
            f"coefficient set has {coeffs.level} detail bands, spec level "
            f"is {spec.level}")
    if len(coeffs.input_lengths) != spec.level:
        raise LengthMismatch("length bookkeeping does not match the level")
    bank = filter_bank(spec.family, spec.order)
    cur, lead = _as_rows(coeffs.approximation)
    for lvl in range(spec.level, 0, -1):
        d, _ = _as_rows(coeffs.details[lvl - 1])
        out_len = coeffs.input_lengths[lvl - 1]
        expect = (out_len + 1) // 2
        if cur.shape[1] != expect or d.shape[1] != expect:
            raise LengthMismatch(
                f"level {lvl}: expected coefficient length {expect}, got "
                f"approx {cur.shape[1]} / detail {d.shape[1]}")
        cur = _synthesize(cur, d, bank, out_len)
    return cur.reshape(lead + cur.shape[-1:])


def dwt_multilevel_backward(output_gradients: CoefficientSet,
                            spec: WaveletSpec):
    """Adjoint of the analysis map, for gradients of DWT outputs."""
    if output_gradients.level != spec.level:
        raise LengthMismatch("gradient set level disagrees with spec")
    bank = filter_bank(spec.family, spec.order)
    cur, lead = _as_rows(output_gradients.approximation)
    for lvl in range(spec.level, 0, -1):
        d, _ = _as_rows(output_gradients.details[lvl - 1])
        out_len = output_gradients.input_lengths[lvl - 1]
        expect = (out_len + 1) // 2
        if cur.shape[1] != expect or d.shape[1] != expect:
            raise LengthMismatch(
                f"level {lvl}: expected gradient length {expect}, got "
                f"approx {cur.shape[1]} / detail {d.shape[1]}")
        cur = _analyze_adjoint(cur, d, bank, out_len)
    return cur.reshape(lead + cur.shape[-1:])


def idwt_multilevel_backward(grad_signal, coeffs_like: CoefficientSet,
                             spec: WaveletSpec) -> CoefficientSet:
    """Adjoint of the synthesis map, for gradients flowing into coefficients."""
    bank = filter_bank(spec.family, spec.order)
    cur, lead = _as_rows(grad_signal)
    grads = []
    for lvl in range(1, spec.level + 1):
        coeff_len = (coeffs_like.input_lengths[lvl - 1] + 1) // 2
        cur, gd = _synthesize_adjoint(cur, bank, coeff_len)
        grads.append(gd.reshape(lead + gd.shape[-1:]))
    return CoefficientSet(
        approximation=cur.reshape(lead + cur.shape[-1:]),
        details=grads,
        input_lengths=coeffs_like.input_lengths,
    )
