"""Shared numerical kernels: unitary DFTs, Kronecker application, seeded RNG
streams, and the fading/noise samplers.

All transforms use the normalized (unitary) DFT convention

    F_K[a, b] = exp(-2j*pi*a*b/K) / sqrt(K)

so forward/adjoint pairs compose to the identity without scale bookkeeping.
"""

import hashlib

import numpy as np
from scipy.special import gammaincinv

from .errors import ParameterError

__all__ = [
    "dft_matrix",
    "fft_apply",
    "kron_apply",
    "Rng",
    "sample_nakagami",
    "sample_gaussian_complex",
]


def dft_matrix(k: int) -> np.ndarray:
    """Return the unitary K-point DFT matrix F_K."""
    if k < 1:
        raise ParameterError(f"DFT size must be >= 1, got {k}")
    a = np.arange(k)
    return np.exp(-2j * np.pi * np.outer(a, a) / k) / np.sqrt(k)


def fft_apply(v: np.ndarray, inverse: bool = False) -> np.ndarray:
    """Apply F_K (or its adjoint for inverse=True) to a length-K vector.

    Library FFTs are exact for arbitrary K, so there is no separate
    non-power-of-two path; the result always matches dft_matrix(K) @ v.
    """
    v = np.asarray(v)
    if v.ndim != 1 or v.shape[0] < 1:
        raise ParameterError(f"expected a 1-D vector of length >= 1, got shape {v.shape}")
    if inverse:
        return np.fft.ifft(v, norm="ortho")
    return np.fft.fft(v, norm="ortho")


def kron_apply(a: np.ndarray, b: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Compute (A kron B) @ v without forming the Kronecker product.

    Uses vec(B V A^T) = (A kron B) vec(V) with column-major vec; A is p-by-p,
    B is q-by-q and v has length p*q.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    v = np.asarray(v)
    p = a.shape[0]
    q = b.shape[0]
    if a.shape != (p, p) or b.shape != (q, q):
        raise ParameterError("kron_apply factors must be square")
    if v.shape != (p * q,):
        raise ParameterError(f"vector length {v.shape} incompatible with ({p}*{q},)")
    grid = v.reshape(q, p, order="F")
    return (b @ grid @ a.T).flatten(order="F")


def _tag_to_int(tag: str) -> int:
    # Stable across processes (unlike hash()); 8 bytes is plenty of key space.
    return int.from_bytes(hashlib.sha256(tag.encode("utf-8")).digest()[:8], "little")


class Rng:
    """Deterministic random stream keyed by a master seed plus a derivation path.

    Substreams are derived with string tags and integer indices, e.g.
    ``rng.stream("test-frame", 3)``; the same (seed, path) always reproduces
    the same draw sequence, and distinct paths give statistically independent
    streams.  The underlying bit generator is PCG64 seeded through
    numpy's SeedSequence.
    """

    def __init__(self, master_seed: int, _path: tuple = ()):
        self.master_seed = int(master_seed)
        if self.master_seed < 0:
            raise ParameterError("master seed must be non-negative")
        self._path = tuple(int(x) % 2**64 for x in _path)
        entropy = (self.master_seed,) + self._path
        self.gen = np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))

    def stream(self, tag: str, *indices) -> "Rng":
        """Derive an independent substream for (tag, indices).

        Indices may be integers or short strings; strings are hashed the
        same way as the tag so labels like architecture names key streams.
        """
        parts = tuple(_tag_to_int(i) if isinstance(i, str) else int(i) for i in indices)
        path = self._path + (_tag_to_int(tag),) + parts
        return Rng(self.master_seed, path)

    @property
    def path(self) -> tuple:
        return self._path

    # Convenience passthroughs; heavier draws use .gen directly.
    def uniform(self, size=None):
        return self.gen.uniform(size=size)

    def integers(self, low, high=None, size=None):
        return self.gen.integers(low, high, size=size)


def sample_nakagami(rng: Rng, m: float, omega: float, size=None):
    """Draw Nakagami-m amplitudes with spread m and mean square power omega.

    Implemented as sqrt(G) with G ~ Gamma(shape=m, scale=omega/m), drawn by
    inverse-CDF so every sample consumes exactly one uniform.  The fixed draw
    count keeps streams aligned across runs that differ only in m, which lets
    experiments pair fading realizations between configurations.
    """
    if m < 0.5:
        raise ParameterError(f"Nakagami shape must be >= 0.5, got {m}")
    if omega <= 0:
        raise ParameterError(f"Nakagami spread must be > 0, got {omega}")
    u = rng.gen.uniform(size=size)
    g = (omega / m) * gammaincinv(m, u)
    return np.sqrt(g)


def sample_gaussian_complex(rng: Rng, var: float, size=None):
    """Draw circularly symmetric complex Gaussians with total variance var."""
    if var < 0:
        raise ParameterError(f"variance must be >= 0, got {var}")
    n = 1 if size is None else int(size)
    pairs = rng.gen.standard_normal((n, 2))
    z = (pairs[:, 0] + 1j * pairs[:, 1]) * np.sqrt(var / 2.0)
    return z[0] if size is None else z
