"""Wireless channel simulation: Rayleigh fading draws, SNR-calibrated noise,
and the over-the-air graph shift.

A fading draw replaces (mode ``replace``) or scales (mode ``multiply``) each
off-diagonal entry of the nominal shift operator; the receiver adds zero-mean
Gaussian noise. Diagonal entries pass through unfaded: a node needs no radio
to read its own state.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .graphs import GraphShiftOperator, as_signal
from .rng import SeedTree, as_generator

FADING_MODES = ("replace", "multiply")

_BLOB_MAGIC = b"AIRGNNCR"
_BLOB_VERSION = 1


@dataclass(frozen=True)
class ChannelModel:
    """Channel statistics: Rayleigh scale, SNR, and calibration reference.

    ``reference_power`` is the average per-node squared signal value the SNR
    refers to; noise variance is derived from it. ``ideal`` forces nominal
    gains and zero noise (the no-channel baseline).
    """

    delta: float = 1.0
    snr_db: float = 40.0
    fading_mode: str = "replace"
    reference_power: float = 1.0
    per_filter_channels: bool = False
    ideal: bool = False

    def __post_init__(self) -> None:
        if self.delta <= 0:
            raise ValueError("Rayleigh scale delta must be positive")
        if self.reference_power <= 0:
            raise ValueError("reference_power must be positive")
        if self.fading_mode not in FADING_MODES:
            raise ValueError(f"fading_mode must be one of {FADING_MODES}")


def noise_variance(model: ChannelModel) -> float:
    """Receiver noise variance implied by the SNR calibration."""
    return model.reference_power / 10.0 ** (model.snr_db / 10.0)


@dataclass
class HopRealization:
    """One communication round: raw gains on the off-diagonal support plus
    receiver noise. ``gains`` is (E,) or (F, E) with ``per_filter_channels``;
    ``noise`` is (n,) or (n, F). ``gains=None`` marks an ideal hop."""

    gains: np.ndarray | None
    noise: np.ndarray


@dataclass
class ChannelRealization:
    """Per-hop fading/noise draws for one forward pass: ``hops[layer][k-1]``."""

    hops: list[list[HopRealization]]

    @property
    def num_layers(self) -> int:
        return len(self.hops)


def _layer_shapes(arch) -> list[tuple[int, int]]:
    """(filter order K, input width) per layer, from an architecture object
    or an explicit sequence of pairs."""
    if hasattr(arch, "layers"):
        return [(layer.order, layer.f_in) for layer in arch.layers]
    return [(int(k), int(f)) for k, f in arch]


def sample_gains(
    S: GraphShiftOperator,
    model: ChannelModel,
    rng: np.random.Generator,
    features: int = 1,
) -> np.ndarray:
    """Raw Rayleigh draws aligned to the sorted off-diagonal support of S."""
    n_edges = S.num_edges()
    if model.per_filter_channels and features > 1:
        return rng.rayleigh(scale=model.delta, size=(features, n_edges))
    return rng.rayleigh(scale=model.delta, size=n_edges)


def effective_values(
    S: GraphShiftOperator, gains: np.ndarray | None, mode: str
) -> np.ndarray:
    """Entry values of the faded shift operator, aligned to S's support.

    Off-diagonal entries are substituted (``replace``) or scaled
    (``multiply``) by the gains; diagonal entries pass through unchanged.
    """
    if gains is None:
        return S.vals
    off = S.offdiag_mask
    if gains.ndim == 1:
        vals = S.vals.copy()
        vals[off] = gains if mode == "replace" else vals[off] * gains
        return vals
    vals = np.tile(S.vals, (gains.shape[0], 1))
    vals[:, off] = gains if mode == "replace" else vals[:, off] * gains
    return vals


def csr_with_values(S: GraphShiftOperator, vals: np.ndarray) -> sp.csr_matrix:
    """CSR sharing S's sparsity pattern with substituted entry values.

    Relies on the COO support being sorted by (row, col), which matches CSR
    data order exactly.
    """
    template = S.csr()
    out = sp.csr_matrix(
        (np.asarray(vals, dtype=np.float64), template.indices, template.indptr),
        shape=template.shape,
    )
    return out


def sample_fading(
    S: GraphShiftOperator,
    model: ChannelModel,
    stream: SeedTree | np.random.Generator | int,
) -> GraphShiftOperator:
    """Sample one faded shift operator (mode already applied)."""
    rng = as_generator(stream)
    gains = None if model.ideal else sample_gains(S, model, rng)
    vals = effective_values(S, gains, model.fading_mode)
    return S.with_values(np.array(vals))


def air_shift(
    S: GraphShiftOperator,
    x: np.ndarray,
    H: GraphShiftOperator,
    noise: np.ndarray,
) -> np.ndarray:
    """One noisy shift: H @ x + noise.

    H must live on (a subset of) S's support; noise is per node, broadcast
    across feature columns when x has several.
    """
    if H.n != S.n:
        raise ValueError("fading matrix size does not match the shift operator")
    s_flat = S.rows * S.n + S.cols
    h_flat = H.rows * H.n + H.cols
    if not np.all(np.isin(h_flat, s_flat)):
        raise ValueError("fading support must be contained in the nominal support")
    squeeze = np.asarray(x).ndim == 1
    x2 = as_signal(S, x)
    noise = np.asarray(noise, dtype=np.float64)
    if noise.ndim == 1:
        if noise.shape[0] != S.n:
            raise ValueError("noise vector length must equal the node count")
        noise = noise[:, None]
    elif noise.shape != x2.shape:
        raise ValueError("per-feature noise must match the signal shape")
    out = H.csr() @ x2 + noise
    return out[:, 0] if squeeze else out


def sample_realization(
    S: GraphShiftOperator,
    arch,
    model: ChannelModel,
    stream: SeedTree | np.random.Generator | int,
) -> ChannelRealization:
    """Sample fading and noise for every (layer, hop) of an architecture.

    Each (layer, hop) pair draws from its own substream keyed ``(layer, k)``,
    so distinct hops can be sampled in any order with identical results. With
    a plain generator the draws are sequential in (layer, hop) order.
    """
    shapes = _layer_shapes(arch)
    sigma = 0.0 if model.ideal else float(np.sqrt(noise_variance(model)))
    hops: list[list[HopRealization]] = []
    for layer_idx, (order, f_in) in enumerate(shapes):
        if order < 0:
            raise ValueError("filter order must be >= 0")
        layer_hops: list[HopRealization] = []
        for k in range(1, order + 1):
            if isinstance(stream, SeedTree):
                rng = stream.child(layer_idx, k).generator()
            else:
                rng = as_generator(stream)
            per_feature = model.per_filter_channels and f_in > 1
            if model.ideal:
                gains = None
                noise = np.zeros((S.n, f_in) if per_feature else S.n)
            else:
                gains = sample_gains(S, model, rng, features=f_in)
                size = (S.n, f_in) if per_feature else S.n
                noise = rng.normal(0.0, sigma, size=size)
            layer_hops.append(HopRealization(gains=gains, noise=noise))
        hops.append(layer_hops)
    return ChannelRealization(hops=hops)


def ideal_realization(S: GraphShiftOperator, arch) -> ChannelRealization:
    """Nominal gains and zero noise for every hop."""
    shapes = _layer_shapes(arch)
    hops = [
        [HopRealization(gains=None, noise=np.zeros(S.n)) for _ in range(order)]
        for order, _ in shapes
    ]
    return ChannelRealization(hops=hops)


# -- serialization (gradient-check replay) ------------------------------------


def realization_to_bytes(real: ChannelRealization) -> bytes:
    """Versioned little-endian binary blob."""
    parts = [_BLOB_MAGIC, struct.pack("<II", _BLOB_VERSION, len(real.hops))]
    for layer in real.hops:
        parts.append(struct.pack("<I", len(layer)))
        for hop in layer:
            g = hop.gains
            gdim = -1 if g is None else g.ndim
            gshape = (0, 0) if g is None else (g.shape + (0,))[:2]
            parts.append(struct.pack("<iII", gdim, *gshape))
            if g is not None:
                parts.append(np.ascontiguousarray(g, dtype="<f8").tobytes())
            nz = hop.noise
            nshape = (nz.shape + (0,))[:2]
            parts.append(struct.pack("<III", nz.ndim, *nshape))
            parts.append(np.ascontiguousarray(nz, dtype="<f8").tobytes())
    return b"".join(parts)


def realization_from_bytes(blob: bytes) -> ChannelRealization:
    if blob[:8] != _BLOB_MAGIC:
        raise ValueError("not a channel-realization blob")
    off = 8
    version, n_layers = struct.unpack_from("<II", blob, off)
    off += 8
    if version != _BLOB_VERSION:
        raise ValueError(f"unsupported realization blob version {version}")
    hops: list[list[HopRealization]] = []
    for _ in range(n_layers):
        (n_hops,) = struct.unpack_from("<I", blob, off)
        off += 4
        layer: list[HopRealization] = []
        for _ in range(n_hops):
            gdim, g0, g1 = struct.unpack_from("<iII", blob, off)
            off += 12
            gains = None
            if gdim >= 0:
                shape = (g0,) if gdim == 1 else (g0, g1)
                count = int(np.prod(shape))
                gains = np.frombuffer(blob, dtype="<f8", count=count, offset=off).reshape(shape).copy()
                off += 8 * count
            ndim, s0, s1 = struct.unpack_from("<III", blob, off)
            off += 12
            shape = (s0,) if ndim == 1 else (s0, s1)
            count = int(np.prod(shape))
            noise = np.frombuffer(blob, dtype="<f8", count=count, offset=off).reshape(shape).copy()
            off += 8 * count
            layer.append(HopRealization(gains=gains, noise=noise))
        hops.append(layer)
    return ChannelRealization(hops=hops)
