"""OTFS modulation between the delay-Doppler grid and the time domain.

A frame is a complex M-by-N grid (M delay rows, N Doppler columns).  The
transmitter maps it to MN time samples via the inverse symplectic FFT plus a
pulse-shaping matrix; the receiver inverts the chain:

    tx:  s = vec(G_tx @ F_M @ X @ F_N^H)
    rx:  Y = F_M^H @ G_rx @ unvec(r) @ F_N

vec/unvec are column-major throughout, so grid entry (m, n) lives at vector
index m + n*M.  Pulses default to identity (rectangular), in which case both
maps are unitary.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError

__all__ = ["PulsePair", "dd_vec", "dd_unvec", "modulate", "demodulate"]


@dataclass
class PulsePair:
    """Transmit/receive pulse-shaping matrices; None means identity."""

    gtx: np.ndarray | None = None
    grx: np.ndarray | None = None

    def check(self, m: int) -> None:
        for name, g in (("gtx", self.gtx), ("grx", self.grx)):
            if g is not None and g.shape != (m, m):
                raise DimensionError(f"{name} must be {m}x{m}, got {g.shape}")

    @property
    def identity(self) -> bool:
        return self.gtx is None and self.grx is None


def dd_vec(grid: np.ndarray) -> np.ndarray:
    """Column-major vectorization of an M-by-N grid."""
    if grid.ndim != 2:
        raise DimensionError(f"expected a 2-D grid, got shape {grid.shape}")
    return grid.flatten(order="F")


def dd_unvec(v: np.ndarray, m: int, n: int) -> np.ndarray:
    """Inverse of dd_vec."""
    v = np.asarray(v)
    if v.shape != (m * n,):
        raise DimensionError(f"expected length {m * n}, got shape {v.shape}")
    return v.reshape(m, n, order="F")


def modulate(grid: np.ndarray, gtx: np.ndarray | None = None) -> np.ndarray:
    """Map a delay-Doppler grid to the length-MN time-domain signal."""
    grid = np.asarray(grid, dtype=complex)
    if grid.ndim != 2 or grid.shape[0] < 1 or grid.shape[1] < 1:
        raise DimensionError(f"expected a non-empty 2-D grid, got shape {grid.shape}")
    m = grid.shape[0]
    if gtx is not None and gtx.shape != (m, m):
        raise DimensionError(f"gtx must be {m}x{m}, got {gtx.shape}")
    s = np.fft.fft(grid, axis=0, norm="ortho")
    s = np.fft.ifft(s, axis=1, norm="ortho")
    if gtx is not None:
        s = gtx @ s
    return dd_vec(s)


def demodulate(r: np.ndarray, m: int, n: int, grx: np.ndarray | None = None) -> np.ndarray:
    """Map MN received time samples back to the delay-Doppler grid."""
    grid = dd_unvec(np.asarray(r, dtype=complex), m, n)
    if grx is not None:
        if grx.shape != (m, m):
            raise DimensionError(f"grx must be {m}x{m}, got {grx.shape}")
        grid = grx @ grid
    y = np.fft.ifft(grid, axis=0, norm="ortho")
    return np.fft.fft(y, axis=1, norm="ortho")
