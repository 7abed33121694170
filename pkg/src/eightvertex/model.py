"""Local conventions of the zero-field eight-vertex model.

A degree-4 node sees one bit per port; bit ``1`` means the arrow on that
port points into the node.  Patterns are written ``b1 b2 b3 b4`` with port 1
first, so ``"0011"`` has arrows leaving through ports 1, 2 and entering
through ports 3, 4.  Internally the pattern is the integer
``b1 << 3 | b2 << 2 | b3 << 1 | b4``.

Weight classes (arrow reversal pairs a pattern with its complement)::

    a : 0011 1100      b : 0110 1001
    c : 0101 1010      d : 0000 1111

Pairings of the four ports (1-based)::

    s1 = {{1,2},{3,4}}   s2 = {{1,4},{2,3}}   s3 = {{1,3},{2,4}}

``s3`` is the crossing pairing when ports are listed counterclockwise.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence, Union

import numpy as np

from .errors import InvalidPattern, NoNonnegativeSolution

REL_TOL = 1e-9


@dataclass(frozen=True)
class Params:
    """Nonnegative weights ``(a, b, c, d)`` of the four orientation classes."""

    a: float
    b: float
    c: float
    d: float

    def __post_init__(self):
        for name in "abcd":
            v = float(getattr(self, name))
            if not math.isfinite(v) or v < 0:
                raise ValueError(f"parameter {name}={v!r} must be finite and >= 0")
            object.__setattr__(self, name, v)

    @classmethod
    def parse(cls, text: str) -> "Params":
        parts = [p for p in text.replace(",", " ").split() if p]
        if len(parts) != 4:
            raise ValueError(f"expected four values a,b,c,d, got {text!r}")
        return cls(*(float(p) for p in parts))

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.a, self.b, self.c, self.d)

    @property
    def degenerate(self) -> bool:
        return self.a == self.b == self.c == self.d == 0.0

    def squared(self) -> "Params":
        return Params(self.a**2, self.b**2, self.c**2, self.d**2)

    def __str__(self):
        return ",".join(repr(v) for v in self.as_tuple())


# ---------------------------------------------------------------------------
# local patterns

PATTERN_CLASS = {
    0b0011: 0, 0b1100: 0,
    0b0110: 1, 0b1001: 1,
    0b0101: 2, 0b1010: 2,
    0b0000: 3, 0b1111: 3,
}
EVEN_PATTERNS = tuple(sorted(PATTERN_CLASS))
# representative pattern of each class, used to read off composed weights
CLASS_REPRESENTATIVE = (0b0011, 0b0110, 0b0101, 0b0000)

PatternLike = Union[int, str, Sequence[int]]


def pattern_index(pat: PatternLike) -> int:
    """Normalize a pattern given as ``"0011"``, ``(0,0,1,1)`` or an int."""
    if isinstance(pat, (int, np.integer)):
        idx = int(pat)
        if not 0 <= idx < 16:
            raise InvalidPattern(f"pattern index {idx} out of range")
        return idx
    bits = [int(ch) for ch in pat] if isinstance(pat, str) else [int(b) for b in pat]
    if len(bits) != 4 or any(b not in (0, 1) for b in bits):
        raise InvalidPattern(f"pattern {pat!r} is not four bits")
    return bits[0] << 3 | bits[1] << 2 | bits[2] << 1 | bits[3]


def pattern_bits(idx: int) -> tuple[int, int, int, int]:
    return ((idx >> 3) & 1, (idx >> 2) & 1, (idx >> 1) & 1, idx & 1)


def pattern_str(idx: int) -> str:
    return "".join(str(b) for b in pattern_bits(idx))


def is_even(pat: PatternLike) -> bool:
    return pattern_index(pat) in PATTERN_CLASS


def weight_table(p: Params) -> np.ndarray:
    """Length-16 lookup of the local weight indexed by pattern integer."""
    vals = p.as_tuple()
    table = np.zeros(16, dtype=np.float64)
    for idx, cls in PATTERN_CLASS.items():
        table[idx] = vals[cls]
    return table


def local_weight(p: Params, pat: PatternLike) -> float:
    idx = pattern_index(pat)
    cls = PATTERN_CLASS.get(idx)
    return 0.0 if cls is None else p.as_tuple()[cls]


# ---------------------------------------------------------------------------
# pairings


class Pairing(enum.IntEnum):
    S1 = 1
    S2 = 2
    S3 = 3

    @property
    def pairs(self) -> tuple[tuple[int, int], tuple[int, int]]:
        """The two port pairs, 0-based."""
        return _PAIRS[self]

    def __str__(self):
        return f"s{int(self)}"


_PAIRS = {
    Pairing.S1: ((0, 1), (2, 3)),
    Pairing.S2: ((0, 3), (1, 2)),
    Pairing.S3: ((0, 2), (1, 3)),
}


class SignedPairing(NamedTuple):
    pairing: Pairing
    sign: int  # +1 or -1

    @property
    def index(self) -> int:
        """Position in the canonical order s1+, s1-, s2+, s2-, s3+, s3-."""
        return 2 * (int(self.pairing) - 1) + (0 if self.sign > 0 else 1)

    @classmethod
    def from_index(cls, i: int) -> "SignedPairing":
        return SIGNED_PAIRINGS[i]

    @classmethod
    def parse(cls, text: str) -> "SignedPairing":
        text = text.strip().lower().replace("σ", "s")
        try:
            pairing = Pairing(int(text[1]))
            sign = {"+": 1, "-": -1}[text[2]]
        except (IndexError, KeyError, ValueError):
            raise ValueError(f"cannot parse signed pairing {text!r}") from None
        if len(text) != 3 or text[0] != "s":
            raise ValueError(f"cannot parse signed pairing {text!r}")
        return cls(pairing, sign)

    def __str__(self):
        return f"s{int(self.pairing)}{'+' if self.sign > 0 else '-'}"


SIGNED_PAIRINGS = tuple(
    SignedPairing(pr, s) for pr in Pairing for s in (1, -1)
)


def pairing_sign(pat: PatternLike, rho: Pairing) -> int:
    """Sign of ``rho`` under an even pattern: +1 if both pairs are 1-in-1-out."""
    idx = pattern_index(pat)
    if idx not in PATTERN_CLASS:
        raise InvalidPattern(f"pattern {pattern_str(idx)} has odd parity")
    bits = pattern_bits(idx)
    (i, j), (k, l) = Pairing(rho).pairs
    first = bits[i] != bits[j]
    if first != (bits[k] != bits[l]):  # pragma: no cover - parity forbids it
        raise InvalidPattern(f"pairs of {rho} disagree on {pattern_str(idx)}")
    return 1 if first else -1


# SIGN_TABLE[pattern, pairing-1] for even patterns, 0 for odd ones
SIGN_TABLE = np.zeros((16, 3), dtype=np.int8)
for _idx in EVEN_PATTERNS:
    for _pr in Pairing:
        SIGN_TABLE[_idx, _pr - 1] = pairing_sign(_idx, _pr)


def compatible_pairings(pat: PatternLike) -> tuple[SignedPairing, SignedPairing, SignedPairing]:
    """The three signed pairings a local configuration decomposes into."""
    idx = pattern_index(pat)
    return tuple(SignedPairing(pr, pairing_sign(idx, pr)) for pr in Pairing)


# ---------------------------------------------------------------------------
# weight functions on signed pairings


@dataclass(frozen=True)
class WeightFunction:
    """Weights of the six signed pairings, ordered s1+, s1-, s2+, s2-, s3+, s3-."""

    values: tuple[float, float, float, float, float, float]

    def __getitem__(self, sp: SignedPairing | int) -> float:
        i = sp.index if isinstance(sp, SignedPairing) else int(sp)
        return self.values[i]

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=np.float64)

    def implied_params(self) -> tuple[float, float, float, float]:
        """The four class weights this function decomposes."""
        p1, m1, p2, m2, p3, m3 = self.values
        return (m1 + p2 + p3, p1 + m2 + p3, p1 + p2 + m3, m1 + m2 + m3)

    def residuals(self, p: Params) -> np.ndarray:
        return np.asarray(self.implied_params()) - np.asarray(p.as_tuple())

    def satisfies(self, p: Params, rel_tol: float = REL_TOL) -> bool:
        scale = max(1.0, max(p.as_tuple()))
        return bool(np.all(np.abs(self.residuals(p)) <= rel_tol * scale))

    @property
    def monotone(self) -> tuple[bool, bool, bool]:
        """``w(si+) >= w(si-)`` for i = 1, 2, 3."""
        v = self.values
        return (v[0] >= v[1], v[2] >= v[3], v[4] >= v[5])


def pair_differences(p: Params) -> tuple[float, float, float]:
    """``w(si-) - w(si+)``, fixed by the parameters for every solution."""
    a, b, c, d = p.as_tuple()
    return ((a + d - b - c) / 2, (b + d - a - c) / 2, (c + d - a - b) / 2)


def solve_weight_function(p: Params, rel_tol: float = 1e-12) -> WeightFunction:
    """Canonical nonnegative decomposition of ``p`` into signed-pairing weights.

    The pair differences are forced; the remaining two degrees of freedom
    are spent by splitting the leftover mass equally over the three pairs.

    Raises
    ------
    NoNonnegativeSolution
        If no nonnegative solution exists (some weight strictly exceeds
        the sum of the other three).
    """
    diffs = pair_differences(p)
    half_total = sum(p.as_tuple()) / 2
    slack = half_total - sum(abs(x) for x in diffs)
    if slack < -rel_tol * max(1.0, half_total):
        raise NoNonnegativeSolution(f"no nonnegative weight function for ({p})")
    slack = max(slack, 0.0)
    out = []
    for di in diffs:
        u = abs(di) + slack / 3
        out.append(max((u - di) / 2, 0.0))
        out.append(max((u + di) / 2, 0.0))
    return WeightFunction(tuple(out))


def solve_congestion_weights(p: Params) -> WeightFunction:
    """Signed-pairing weights of the squared parameters ``(a², b², c², d²)``."""
    return solve_weight_function(p.squared())


# ---------------------------------------------------------------------------
# parameter regions


@dataclass(frozen=True)
class RegionFlags:
    F_le2: bool
    F_gt: bool
    A_le: bool
    B_le: bool
    C_le: bool
    C_ge: bool
    C_eq: bool

    def as_dict(self) -> dict[str, bool]:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}

    @property
    def general(self) -> bool:
        """In the region served by the general-graph estimator."""
        return self.F_le2 and self.A_le and self.B_le and self.C_le

    @property
    def planar(self) -> bool:
        """In the region served by the planar estimator."""
        return self.F_le2 and self.A_le and self.B_le and self.C_ge


def region_classify(p: Params, tol: float = 0.0) -> RegionFlags:
    """Membership flags for every named parameter region.

    ``tol`` is a relative slack (scaled by ``a+b+c+d``) granted to the
    non-strict inequalities; the default tests them literally.
    """
    a, b, c, d = p.as_tuple()
    s = tol * (a + b + c + d)
    s2 = tol * (a * a + b * b + c * c + d * d)
    sq = (a * a, b * b, c * c, d * d)
    tot2 = sum(sq)
    f_le2 = all(x <= tot2 - x + s2 for x in sq)
    tot = a + b + c + d
    dominant = any(x > tot - x + s for x in (a, b, c, d))
    f_gt = dominant and sum(x > 0 for x in (a, b, c, d)) >= 2
    c_le = c + d <= a + b + s
    c_ge = c + d + s >= a + b
    return RegionFlags(
        F_le2=f_le2,
        F_gt=f_gt,
        A_le=a + d <= b + c + s,
        B_le=b + d <= a + c + s,
        C_le=c_le,
        C_ge=c_ge,
        C_eq=c_le and c_ge,
    )


def in_general_region(p: Params, tol: float = 0.0) -> bool:
    return region_classify(p, tol).general


def in_planar_region(p: Params, tol: float = 0.0) -> bool:
    return region_classify(p, tol).planar
