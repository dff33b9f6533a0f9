"""Trustworthy regression head: 4-channel candidate-disparity volume -> map.

The volume stacks four planes of logits over D disparity levels. Per pixel:

    p        = softmax over levels of the delta-channel logits
    delta    = sum_k k p_k                       (soft-argmax expectation)
    logit_i  = sum_k V_i[k] p_k   for i in {gamma, alpha, beta}
    gamma    = softplus(logit_gamma) + eps
    alpha    = softplus(logit_alpha) + 1 + eps
    beta     = softplus(logit_beta) + eps

The +1 shift keeps alpha inside its strict domain (softplus alone only
reaches (0, inf)); eps = 1e-6 keeps gamma and beta away from the boundary
when the softplus saturates toward zero. Every decoded pixel therefore
passes validation by construction.

Volume file format (ETV): 16-byte header — magic ``ETV1``, u32 width,
height, dmax — followed by the four planes in delta/gamma/alpha/beta order,
each stored level-major then row-major, little-endian float32.
"""

from __future__ import annotations

import struct

import numpy as np

from .errors import FormatError, NonFinite, ShapeMismatch
from .maps import EvidentialMap, Source, _opened
from .special import softmax, softplus

ACTIVATION_EPS = 1e-6

_ETV_MAGIC = b"ETV1"


def evidential_activation(logit_gamma, logit_alpha, logit_beta):
    """Map raw head logits to valid (gamma, alpha, beta) via softplus."""
    gamma = softplus(logit_gamma) + ACTIVATION_EPS
    alpha = softplus(logit_alpha) + 1.0 + ACTIVATION_EPS
    beta = softplus(logit_beta) + ACTIVATION_EPS
    return gamma, alpha, beta


class TrustworthyVolume:
    """Immutable 4-channel logit volume; each plane has shape (dmax, H, W)."""

    __slots__ = ("vdelta", "vgamma", "valpha", "vbeta")

    def __init__(self, vdelta, vgamma, valpha, vbeta):
        planes = []
        for name, raw in (("vdelta", vdelta), ("vgamma", vgamma),
                          ("valpha", valpha), ("vbeta", vbeta)):
            arr = np.array(raw, dtype=np.float64, copy=True)
            if arr.ndim != 3:
                raise ShapeMismatch(f"{name} must be 3-D (dmax, H, W), "
                                    f"got shape {arr.shape}")
            if not np.all(np.isfinite(arr)):
                raise NonFinite(f"{name} contains non-finite logits")
            arr.setflags(write=False)
            planes.append(arr)
        if len({p.shape for p in planes}) != 1:
            raise ShapeMismatch("volume planes must share one shape")
        if planes[0].shape[0] < 1:
            raise ShapeMismatch("dmax must be >= 1")
        self.vdelta, self.vgamma, self.valpha, self.vbeta = planes

    @property
    def dmax(self) -> int:
        return self.vdelta.shape[0]

    @property
    def height(self) -> int:
        return self.vdelta.shape[1]

    @property
    def width(self) -> int:
        return self.vdelta.shape[2]


def soft_disparity(vdelta_column) -> tuple[float, np.ndarray]:
    """Softmax expectation of one pixel's delta logits.

    Returns (delta, probs): probs sums to 1 within 1e-12 and delta lies in
    [0, dmax - 1]. Shift-invariant: adding a constant to every logit leaves
    both outputs unchanged (up to the softmax's max-subtraction, exactly).
    """
    logits = np.asarray(vdelta_column, dtype=np.float64)
    if logits.ndim != 1 or logits.size < 1:
        raise ShapeMismatch("vdelta_column must be a nonempty 1-D vector")
    if not np.all(np.isfinite(logits)):
        raise NonFinite("vdelta_column contains non-finite logits")
    probs = softmax(logits, axis=0)
    levels = np.arange(logits.size, dtype=np.float64)
    return float(np.sum(levels * probs, axis=0)), probs


def head_decode(volume: TrustworthyVolume) -> EvidentialMap:
    """Decode the whole volume to an EvidentialMap (pixels independent)."""
    probs = softmax(volume.vdelta, axis=0)
    levels = np.arange(volume.dmax, dtype=np.float64)[:, None, None]
    delta = np.sum(levels * probs, axis=0)
    logit_gamma = np.sum(volume.vgamma * probs, axis=0)
    logit_alpha = np.sum(volume.valpha * probs, axis=0)
    logit_beta = np.sum(volume.vbeta * probs, axis=0)
    gamma, alpha, beta = evidential_activation(logit_gamma, logit_alpha, logit_beta)
    return EvidentialMap(delta, gamma, alpha, beta)


def write_etv(volume: TrustworthyVolume, sink: Source) -> None:
    """Serialize a volume; layout documented in the module docstring."""
    fh, close = _opened(sink, "wb")
    try:
        fh.write(_ETV_MAGIC)
        fh.write(struct.pack("<III", volume.width, volume.height, volume.dmax))
        for plane in (volume.vdelta, volume.vgamma, volume.valpha, volume.vbeta):
            fh.write(np.ascontiguousarray(plane, dtype="<f4").tobytes())
    finally:
        if close:
            fh.close()


def read_etv(source: Source) -> TrustworthyVolume:
    """Parse an ETV stream."""
    fh, close = _opened(source, "rb")
    try:
        header = fh.read(16)
        if len(header) < 16:
            raise FormatError("truncated ETV header")
        if header[:4] != _ETV_MAGIC:
            raise FormatError(f"bad ETV magic {header[:4]!r}")
        width, height, dmax = struct.unpack("<III", header[4:16])
        if width == 0 or height == 0 or dmax == 0:
            raise FormatError(
                f"degenerate ETV dimensions {width}x{height}x{dmax}")
        count = dmax * height * width
        payload = fh.read(4 * count * 4)
        if len(payload) != 4 * count * 4:
            raise FormatError(
                f"truncated ETV payload: expected {4 * count * 4} bytes, "
                f"got {len(payload)}")
        if fh.read(1) != b"":
            raise FormatError("trailing data after ETV payload")
    finally:
        if close:
            fh.close()
    raw = np.frombuffer(payload, dtype="<f4").astype(np.float64)
    planes = raw.reshape(4, dmax, height, width)
    return TrustworthyVolume(planes[0], planes[1], planes[2], planes[3])
