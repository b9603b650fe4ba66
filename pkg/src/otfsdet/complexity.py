"""Closed-form real-multiplication (RM) counts for the detector families.

These formulas model block-level detector cost over an M x N symbol grid
(one complex multiply = 4 RMs, FFT counted with a base-2 log). The neural
counts deliberately follow the same block-level accounting convention as the
classical ones so the columns are comparable; they are analytic cost models,
not instruction counts measured on this package's nets.
"""

import math
from dataclasses import dataclass

from .errors import ParameterError

__all__ = [
    "ComplexityQuery",
    "rm_mld",
    "rm_mrc_ml_total",
    "rm_mlp",
    "rm_cnn",
    "rm_resnet",
    "table_6g",
    "write_complexity_csv",
    "TABLE_6G_ROWS",
    "sig3",
]


@dataclass(frozen=True)
class ComplexityQuery:
    m: int
    n: int
    nt: int = 1
    nr: int = 1
    q: int = 4

    def __post_init__(self):
        for name in ("m", "n", "nt", "nr", "q"):
            v = getattr(self, name)
            if not isinstance(v, int) or v < 1:
                raise ParameterError(f"{name} must be a positive integer, got {v!r}")

    @property
    def mn(self) -> int:
        return self.m * self.n


def rm_mld(query: ComplexityQuery) -> int:
    """Symbol-wise exhaustive metric search: 6 per candidate per symbol."""
    return 6 * query.nt * query.q * query.mn


def rm_mrc_ml_total(query: ComplexityQuery) -> int:
    """Transform + combining + metric chain for the classical detector.

    Four terms: per-antenna FFT work, the cubic combining-matrix cost, the
    quadratic apply cost, and the final symbol-wise search. Non-power-of-two
    grids round the FFT term to the nearest integer.
    """
    mn = query.mn
    fft = 4 * query.nr * mn * math.log2(mn) if mn > 1 else 0.0
    cubic = 8 * query.nt * query.nr * mn**3
    quad = 4 * query.nt * query.nr * mn**2
    search = 6 * query.nt * query.q * mn
    return int(round(fft)) + cubic + quad + search


def rm_mlp(query: ComplexityQuery) -> int:
    """128-wide input layer over the grid, 128x64 trunk, 64-to-Q head."""
    return 128 * query.mn + 8192 + 64 * query.q


def rm_cnn(query: ComplexityQuery) -> int:
    """Convolutional front end over the grid plus the dense head."""
    return 8384 * query.mn + 2048 + 32 * query.q


def rm_resnet(query: ComplexityQuery) -> int:
    """Residual stack over the grid plus the 512->...->Q dense head."""
    return 141696 * query.mn + 174080 + 32 * query.q


# (nt, q) rows of the published 6G sizing table; M = N = 128 throughout
TABLE_6G_ROWS = (
    (8, 256),
    (8, 1024),
    (16, 256),
    (16, 1024),
    (32, 256),
    (32, 1024),
    (64, 256),
    (64, 1024),
    (128, 1024),
    (256, 1024),
)


def table_6g() -> list:
    """All sizing-table rows as dicts with exact integer RM counts."""
    rows = []
    for nt, q in TABLE_6G_ROWS:
        query = ComplexityQuery(m=128, n=128, nt=nt, q=q)
        rows.append(
            {
                "nt": nt,
                "q": q,
                "mld": rm_mld(query),
                "mlp": rm_mlp(query),
                "cnn": rm_cnn(query),
                "resnet": rm_resnet(query),
            }
        )
    return rows


def sig3(value) -> str:
    """Three-significant-figure scientific notation, e.g. 2.01e+08."""
    return f"{float(value):.2e}"


def write_complexity_csv(rows, path) -> None:
    """nt,q plus exact integers and 3-sig-fig scientific per detector."""
    cols = ("mld", "mlp", "cnn", "resnet")
    with open(path, "w") as fh:
        fh.write("nt,q," + ",".join(cols) + "," + ",".join(f"{c}_sci" for c in cols) + "\n")
        for row in rows:
            exact = ",".join(str(row[c]) for c in cols)
            sci = ",".join(sig3(row[c]) for c in cols)
            fh.write(f"{row['nt']},{row['q']},{exact},{sci}\n")
