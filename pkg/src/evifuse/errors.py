"""Exception hierarchy shared by every evifuse module.

All public operations raise subclasses of :class:`EvifuseError`; stdlib
mixins (ValueError / RuntimeError) are kept so callers that only know the
standard taxonomy still catch the right category.
"""

from __future__ import annotations


class EvifuseError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(EvifuseError, ValueError):
    """A parameter violates its domain constraint (gamma > 0, alpha > 1, beta > 0, finiteness).

    Attributes
    ----------
    field : str
        Name of the first violated field ("delta", "gamma", "alpha", "beta").
    value : float
        The offending value.
    constraint : str
        Human-readable constraint, e.g. "alpha > 1".
    pixel : tuple[int, int] | None
        (row, col) when the violation was found inside a grid.
    """

    def __init__(self, field: str, value: float, constraint: str,
                 pixel: tuple[int, int] | None = None):
        self.field = field
        self.value = value
        self.constraint = constraint
        self.pixel = pixel
        where = f" at pixel (row={pixel[0]}, col={pixel[1]})" if pixel is not None else ""
        super().__init__(f"{field}={value!r} violates {constraint}{where}")


class NonFinite(EvifuseError, ValueError):
    """An input array or scalar contains NaN or Inf where finiteness is required."""


class ShapeMismatch(EvifuseError, ValueError):
    """Grid operands do not share the same width/height (or volume layout)."""


class EmptyInput(EvifuseError, ValueError):
    """An operation requiring at least one element received none."""


class EmptyMask(EvifuseError, ValueError):
    """No jointly valid pixels remain under the supplied masks."""


class DegenerateInput(EvifuseError, ValueError):
    """Statistic undefined for this input (e.g. Pearson r of a constant field)."""


class FormatError(EvifuseError, ValueError):
    """A serialized stream is malformed (bad magic, truncation, bad header)."""


class UnsupportedFormat(FormatError):
    """The stream is recognizably a different, unsupported variant (e.g. color PFM)."""


class BadConfig(EvifuseError, ValueError):
    """Invalid generator or training configuration."""


class Divergence(EvifuseError, RuntimeError):
    """Training loss became non-finite.

    Attributes
    ----------
    epoch : int
        Zero-based index of the epoch in which the loss turned non-finite.
    """

    def __init__(self, epoch: int, message: str | None = None):
        self.epoch = epoch
        super().__init__(message or f"loss became non-finite at epoch {epoch}")
