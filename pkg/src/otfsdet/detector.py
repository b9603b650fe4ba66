"""Gray-coded QAM mapping, receive combining, and symbol-wise detection.

Class indices are the integer value of each bit group read MSB-first; the
first half of the bits Gray-codes the in-phase level, the second half the
quadrature level, so lattice-adjacent points differ in exactly one bit.
Constellations are normalized to unit average energy.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, ParameterError

__all__ = [
    "Constellation",
    "map_bits",
    "mrc_combine",
    "mld_detect",
    "count_bit_errors",
    "BERReport",
]


def _gray_decode(codes: np.ndarray, bits: int) -> np.ndarray:
    """Binary-reflected Gray code -> position index."""
    out = codes.copy()
    shift = 1
    while shift < bits:
        out ^= out >> shift
        shift *= 2
    return out


class Constellation:
    """Square Gray-coded QAM with Q = 4^k points and unit average energy."""

    def __init__(self, order: int):
        if order < 4 or (4 ** int(round(np.log2(order) / 2))) != order:
            raise ParameterError(f"QAM order must be a power of 4, got {order}")
        self.order = order
        self.bits_per_symbol = int(np.log2(order))
        half = self.bits_per_symbol // 2
        levels_count = 1 << half
        # Levels run +((L-1)) down to -(L-1) in steps of 2 as the Gray
        # position increases, e.g. L=4: +3, +1, -1, -3.
        scale = np.sqrt(2 * (levels_count**2 - 1) / 3)
        classes = np.arange(order)
        i_code = classes >> half
        q_code = classes & (levels_count - 1)
        i_level = levels_count - 1 - 2 * _gray_decode(i_code, half)
        q_level = levels_count - 1 - 2 * _gray_decode(q_code, half)
        self.points = (i_level + 1j * q_level) / scale
        self._popcount = np.array([bin(v).count("1") for v in range(order)])

    def classes_to_bits(self, classes: np.ndarray) -> np.ndarray:
        """Expand class indices to bit rows, MSB first."""
        shifts = np.arange(self.bits_per_symbol - 1, -1, -1)
        return (classes[:, np.newaxis] >> shifts) & 1

    def bit_distance(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return self._popcount[np.bitwise_xor(a, b)]


def map_bits(bits: np.ndarray, c: Constellation):
    """Group bits (MSB first) into symbols; returns (points, class indices)."""
    bits = np.asarray(bits)
    if bits.ndim != 1 or bits.size % c.bits_per_symbol != 0:
        raise DimensionError(
            f"bit count {bits.size} not a multiple of {c.bits_per_symbol}"
        )
    if bits.size and (bits.min() < 0 or bits.max() > 1):
        raise ParameterError("bits must be 0/1")
    groups = bits.reshape(-1, c.bits_per_symbol)
    weights = 1 << np.arange(c.bits_per_symbol - 1, -1, -1)
    classes = groups @ weights
    return c.points[classes], classes


def mrc_combine(ys: list, links: list) -> np.ndarray:
    """Maximal-ratio combine: z = sum_r H_eff^(r)^H y_r for one tx stream."""
    if len(ys) != len(links) or not links:
        raise ParameterError(f"need matching non-empty ys/links, got {len(ys)}/{len(links)}")
    z = np.zeros(links[0].mn, dtype=complex)
    for y, link in zip(ys, links):
        z += link.adjoint_apply(y)
    return z


def mld_detect(z: np.ndarray, g: np.ndarray, c: Constellation) -> np.ndarray:
    """Per-symbol minimum-distance decision: argmin_x |z_k - g_k x|^2.

    Ties resolve to the lowest class index.
    """
    z = np.asarray(z)
    g = np.asarray(g)
    if z.shape != g.shape:
        raise DimensionError(f"z and g shapes differ: {z.shape} vs {g.shape}")
    metric = np.abs(z[:, np.newaxis] - g[:, np.newaxis] * c.points[np.newaxis, :]) ** 2
    return np.argmin(metric, axis=1)


def count_bit_errors(tx_classes: np.ndarray, rx_classes: np.ndarray, c: Constellation) -> int:
    """Hamming distance between the bit patterns of two class sequences."""
    tx_classes = np.asarray(tx_classes)
    rx_classes = np.asarray(rx_classes)
    if tx_classes.shape != rx_classes.shape:
        raise DimensionError("class sequences differ in length")
    for arr in (tx_classes, rx_classes):
        if arr.size and (arr.min() < 0 or arr.max() >= c.order):
            raise ParameterError(f"class index outside [0, {c.order})")
    return int(c.bit_distance(tx_classes, rx_classes).sum())


@dataclass
class BERReport:
    """Result of one detector at one SNR point."""

    detector: str
    snr_db: float
    m: float
    nt: int
    nr: int
    q: int
    symbols: int
    bit_errors: int

    @property
    def ber(self) -> float:
        bits = self.symbols * int(np.log2(self.q))
        return self.bit_errors / bits if bits else 0.0


BER_CSV_HEADER = "detector,snr_db,m,nt,nr,q,symbols,bit_errors,ber"


def write_ber_csv(reports, path) -> None:
    """One CSV row per (detector, SNR); ber printed at 6 significant digits."""
    with open(path, "w") as fh:
        fh.write(BER_CSV_HEADER + "\n")
        for r in reports:
            fh.write(
                f"{r.detector},{r.snr_db:g},{r.m:g},{r.nt},{r.nr},{r.q},"
                f"{r.symbols},{r.bit_errors},{r.ber:.6g}\n"
            )


def read_ber_csv(path) -> list:
    """Parse a file written by write_ber_csv back into BERReports."""
    reports = []
    with open(path) as fh:
        header = fh.readline().strip()
        if header != BER_CSV_HEADER:
            raise ParameterError(f"{path}: unexpected header {header!r}")
        for line in fh:
            if not line.strip():
                continue
            d, snr, m, nt, nr, q, symbols, errs, _ber = line.strip().split(",")
            reports.append(
                BERReport(d, float(snr), float(m), int(nt), int(nr), int(q),
                          int(symbols), int(errs))
            )
    return reports
