"""Grid-valued evidential state and disparity fields, plus their file formats.

Two containers:

* :class:`EvidentialMap` — four H x W planes (delta, gamma, alpha, beta);
  every pixel must satisfy the NIG domain constraints.
* :class:`DisparityMap` — one H x W scalar field with a per-pixel validity
  mask (sparse ground truth is the normal case).

Two binary formats, both little-endian single precision:

* EPM: magic ``EPM1``, u32 width, u32 height, then the four planes in
  delta/gamma/alpha/beta order, row-major, no padding. A 1x1 map is exactly
  28 bytes. Reading validates every pixel.
* PFM (grayscale ``Pf``): ASCII header, scale line whose sign encodes
  endianness, rows stored bottom-to-top. Non-finite pixels decode to
  mask=False; masked pixels encode as +Inf.

In-memory planes are float64 and read-only; serialization narrows to
float32.
"""

from __future__ import annotations

import io
import struct
from pathlib import Path
from typing import BinaryIO, Union

import numpy as np

from . import nig
from .errors import DomainError, FormatError, ShapeMismatch, UnsupportedFormat

Source = Union[str, Path, BinaryIO]

_EPM_MAGIC = b"EPM1"


def _frozen_f64(values, name: str) -> np.ndarray:
    arr = np.array(values, dtype=np.float64, copy=True)
    if arr.ndim != 2:
        raise ShapeMismatch(f"{name} must be 2-D, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


def _first_bad_pixel(bad: np.ndarray) -> tuple[int, int]:
    flat = int(np.argmax(bad))
    return flat // bad.shape[1], flat % bad.shape[1]


class EvidentialMap:
    """Immutable H x W grid of NIG parameters; validates on construction."""

    __slots__ = ("delta", "gamma", "alpha", "beta")

    def __init__(self, delta, gamma, alpha, beta):
        d = _frozen_f64(delta, "delta plane")
        g = _frozen_f64(gamma, "gamma plane")
        a = _frozen_f64(alpha, "alpha plane")
        b = _frozen_f64(beta, "beta plane")
        if not (d.shape == g.shape == a.shape == b.shape):
            raise ShapeMismatch(
                f"plane shapes differ: {d.shape}, {g.shape}, {a.shape}, {b.shape}"
            )
        self.delta = d
        self.gamma = g
        self.alpha = a
        self.beta = b
        self._validate_pixels()

    def _validate_pixels(self) -> None:
        # Row-major scan order; at the first bad pixel the field checks run
        # in delta, gamma, alpha, beta order, mirroring nig.validate.
        checks = (
            ("delta", ~np.isfinite(self.delta), "finite value", self.delta),
            ("gamma", ~np.isfinite(self.gamma), "finite value", self.gamma),
            ("gamma", ~(self.gamma > 0.0), "gamma > 0", self.gamma),
            ("alpha", ~np.isfinite(self.alpha), "finite value", self.alpha),
            ("alpha", ~(self.alpha > 1.0), "alpha > 1", self.alpha),
            ("beta", ~np.isfinite(self.beta), "finite value", self.beta),
            ("beta", ~(self.beta > 0.0), "beta > 0", self.beta),
        )
        any_bad = np.zeros(self.delta.shape, dtype=bool)
        for _, bad, _, _ in checks:
            any_bad |= bad
        if not any_bad.any():
            return
        row, col = _first_bad_pixel(any_bad)
        for field, bad, constraint, plane in checks:
            if bad[row, col]:
                raise DomainError(field, float(plane[row, col]), constraint,
                                  pixel=(row, col))

    @property
    def height(self) -> int:
        return self.delta.shape[0]

    @property
    def width(self) -> int:
        return self.delta.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.delta.shape

    def params_at(self, row: int, col: int) -> nig.NigParams:
        return nig.NigParams(
            delta=float(self.delta[row, col]),
            gamma=float(self.gamma[row, col]),
            alpha=float(self.alpha[row, col]),
            beta=float(self.beta[row, col]),
        )

    def crop(self, top: int, left: int, height: int, width: int) -> "EvidentialMap":
        sl = (slice(top, top + height), slice(left, left + width))
        return EvidentialMap(self.delta[sl], self.gamma[sl],
                             self.alpha[sl], self.beta[sl])

    @classmethod
    def filled(cls, height: int, width: int, params: nig.NigParams) -> "EvidentialMap":
        """Constant map: every pixel carries `params`."""
        shape = (height, width)
        return cls(np.full(shape, params.delta), np.full(shape, params.gamma),
                   np.full(shape, params.alpha), np.full(shape, params.beta))


class DisparityMap:
    """Immutable H x W scalar field with validity mask.

    Values at masked-out pixels are canonicalized to 0.0 so that write/read
    round-trips are value-exact.
    """

    __slots__ = ("values", "mask")

    def __init__(self, values, mask=None):
        vals = np.array(values, dtype=np.float64, copy=True)
        if vals.ndim != 2:
            raise ShapeMismatch(f"values must be 2-D, got shape {vals.shape}")
        if mask is None:
            m = np.ones(vals.shape, dtype=bool)
        else:
            m = np.array(mask, dtype=bool, copy=True)
            if m.shape != vals.shape:
                raise ShapeMismatch(
                    f"mask shape {m.shape} != values shape {vals.shape}")
        bad = m & ~np.isfinite(vals)
        if bad.any():
            row, col = _first_bad_pixel(bad)
            raise DomainError("disparity", float(vals[row, col]),
                              "finite value where mask is true", pixel=(row, col))
        vals[~m] = 0.0
        vals.setflags(write=False)
        m.setflags(write=False)
        self.values = vals
        self.mask = m

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def crop(self, top: int, left: int, height: int, width: int) -> "DisparityMap":
        sl = (slice(top, top + height), slice(left, left + width))
        return DisparityMap(self.values[sl], self.mask[sl])


def decode(emap: EvidentialMap) -> tuple[DisparityMap, DisparityMap, DisparityMap]:
    """Per-pixel moments: (disparity, aleatoric, epistemic) maps, masks all-true.

    Elementwise identical to looping nig.moments over pixels (same operation
    order: aleatoric = beta / (alpha - 1), epistemic = aleatoric / gamma).
    """
    aleatoric = emap.beta / (emap.alpha - 1.0)
    epistemic = aleatoric / emap.gamma
    return (DisparityMap(emap.delta), DisparityMap(aleatoric),
            DisparityMap(epistemic))


# ---------------------------------------------------------------------------
# EPM container
# ---------------------------------------------------------------------------

def _opened(source: Source, mode: str):
    if isinstance(source, (str, Path)):
        return open(source, mode), True
    return source, False


def write_epm(emap: EvidentialMap, sink: Source) -> None:
    """Serialize an EvidentialMap; layout documented in the module docstring."""
    fh, close = _opened(sink, "wb")
    try:
        fh.write(_EPM_MAGIC)
        fh.write(struct.pack("<II", emap.width, emap.height))
        for plane in (emap.delta, emap.gamma, emap.alpha, emap.beta):
            fh.write(np.ascontiguousarray(plane, dtype="<f4").tobytes())
    finally:
        if close:
            fh.close()


def read_epm(source: Source) -> EvidentialMap:
    """Parse and validate an EPM stream; DomainError carries the pixel index."""
    fh, close = _opened(source, "rb")
    try:
        header = fh.read(12)
        if len(header) < 12:
            raise FormatError("truncated EPM header")
        magic = header[:4]
        if magic != _EPM_MAGIC:
            raise FormatError(f"bad EPM magic {magic!r}")
        width, height = struct.unpack("<II", header[4:12])
        if width == 0 or height == 0:
            raise FormatError(f"degenerate EPM dimensions {width}x{height}")
        count = width * height
        payload = fh.read(4 * count * 4)
        if len(payload) != 4 * count * 4:
            raise FormatError(
                f"truncated EPM payload: expected {4 * count * 4} bytes, "
                f"got {len(payload)}")
        if fh.read(1) != b"":
            raise FormatError("trailing data after EPM payload")
    finally:
        if close:
            fh.close()
    raw = np.frombuffer(payload, dtype="<f4").astype(np.float64)
    planes = raw.reshape(4, height, width)
    return EvidentialMap(planes[0], planes[1], planes[2], planes[3])


# ---------------------------------------------------------------------------
# PFM (Middlebury portable float map, grayscale)
# ---------------------------------------------------------------------------

def _read_pfm_line(fh: BinaryIO) -> str:
    line = fh.readline()
    if not line:
        raise FormatError("truncated PFM header")
    return line.decode("latin-1").strip()


def read_pfm(source: Source) -> DisparityMap:
    """Parse a grayscale PFM; color ``PF`` streams raise UnsupportedFormat."""
    fh, close = _opened(source, "rb")
    try:
        magic = _read_pfm_line(fh)
        if magic == "PF":
            raise UnsupportedFormat("color PFM (PF) is not supported; expected Pf")
        if magic != "Pf":
            raise FormatError(f"bad PFM magic {magic!r}")
        dims = _read_pfm_line(fh).split()
        if len(dims) != 2:
            raise FormatError(f"malformed PFM dimensions line {dims!r}")
        try:
            width, height = int(dims[0]), int(dims[1])
        except ValueError as exc:
            raise FormatError(f"malformed PFM dimensions line {dims!r}") from exc
        if width <= 0 or height <= 0:
            raise FormatError(f"degenerate PFM dimensions {width}x{height}")
        try:
            scale = float(_read_pfm_line(fh))
        except ValueError as exc:
            raise FormatError("malformed PFM scale line") from exc
        if scale == 0.0:
            raise FormatError("PFM scale must be nonzero")
        endian = "<" if scale < 0.0 else ">"
        payload = fh.read(4 * width * height)
        if len(payload) != 4 * width * height:
            raise FormatError(
                f"truncated PFM payload: expected {4 * width * height} bytes, "
                f"got {len(payload)}")
    finally:
        if close:
            fh.close()
    data = np.frombuffer(payload, dtype=endian + "f4").astype(np.float64)
    values = np.flipud(data.reshape(height, width))  # stored bottom-to-top
    mask = np.isfinite(values)
    return DisparityMap(np.where(mask, values, 0.0), mask)


def write_pfm(dmap: DisparityMap, sink: Source) -> None:
    """Write a grayscale little-endian PFM; masked pixels are stored as +Inf."""
    fh, close = _opened(sink, "wb")
    try:
        fh.write(f"Pf\n{dmap.width} {dmap.height}\n-1.0\n".encode("latin-1"))
        out = np.where(dmap.mask, dmap.values, np.inf)
        fh.write(np.ascontiguousarray(np.flipud(out), dtype="<f4").tobytes())
    finally:
        if close:
            fh.close()


def epm_bytes(emap: EvidentialMap) -> bytes:
    """EPM serialization as a bytes object (convenience for tests/pipelines)."""
    buf = io.BytesIO()
    write_epm(emap, buf)
    return buf.getvalue()
