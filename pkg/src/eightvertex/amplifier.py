"""The amplifier map Lambda and its iteration.

``Lambda(xi, x, y, z)`` is a degree-7 homogeneous polynomial; one
amplifier step sends ``(a, b, c, d)`` to

    (Lambda(a,b,c,d), Lambda(b,c,d,a), Lambda(c,d,a,b), Lambda(d,a,b,c)).

Iterating it makes the values grow like ``x^(7^k)``, so every state is kept
as log components normalized to a maximum of 0 plus a log scale ``L``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import logsumexp

from .errors import LogOverflow, MonotonicityViolation, NotReached, RegionError
from .model import Params

# (coefficient, exponents of xi, x, y, z)
MONOMIALS: tuple[tuple[int, tuple[int, int, int, int]], ...] = (
    (1, (7, 0, 0, 0)),
    (3, (3, 4, 0, 0)),
    (3, (3, 0, 4, 0)),
    (3, (3, 0, 0, 4)),
    (4, (3, 2, 2, 0)),
    (4, (3, 2, 0, 2)),
    (4, (3, 0, 2, 2)),
    (2, (1, 4, 2, 0)),
    (2, (1, 4, 0, 2)),
    (2, (1, 2, 4, 0)),
    (2, (1, 0, 4, 2)),
    (2, (1, 2, 0, 4)),
    (2, (1, 0, 2, 4)),
    (30, (1, 2, 2, 2)),
)
_COEF = np.array([c for c, _ in MONOMIALS], dtype=np.float64)
_EXP = np.array([e for _, e in MONOMIALS], dtype=np.float64)
_LOG_COEF = np.log(_COEF)
# rotations feeding the four outputs
_ROT = np.array([[0, 1, 2, 3], [1, 2, 3, 0], [2, 3, 0, 1], [3, 0, 1, 2]])


def lambda_poly(xi: float, x: float, y: float, z: float) -> float:
    """Direct evaluation of ``Lambda`` in floating point."""
    v = np.array([xi, x, y, z], dtype=np.float64)
    return float(np.sum(_COEF * np.prod(v[None, :] ** _EXP, axis=1)))


def lambda_raw(p) -> tuple[float, float, float, float]:
    """One unnormalized amplifier step in floating point."""
    v = tuple(p.as_tuple() if isinstance(p, Params) else p)
    return tuple(lambda_poly(*(v[i] for i in rot)) for rot in _ROT)


@dataclass(frozen=True)
class ScaledParams:
    """``exp(L) * exp(logs)`` with ``max(logs) == 0`` (or all ``-inf``)."""

    logs: tuple[float, float, float, float]
    L: float = 0.0

    @classmethod
    def from_params(cls, p) -> "ScaledParams":
        v = np.array(p.as_tuple() if isinstance(p, Params) else p, dtype=np.float64)
        if np.any(v < 0) or not np.all(np.isfinite(v)):
            raise ValueError("parameters must be finite and nonnegative")
        with np.errstate(divide="ignore"):
            logs = np.log(v)
        return cls._normalized(logs, 0.0)

    @classmethod
    def _normalized(cls, logs: np.ndarray, L: float) -> "ScaledParams":
        top = np.max(logs)
        if not np.isfinite(top):
            return cls(tuple(float(x) for x in logs), L)
        return cls(tuple(float(x) for x in logs - top), L + float(top))

    @property
    def hat(self) -> tuple[float, float, float, float]:
        return tuple(math.exp(x) for x in self.logs)

    def value(self) -> tuple[float, float, float, float]:
        """Unscaled components (may overflow to inf)."""
        return tuple(math.exp(x + self.L) if x > -math.inf else 0.0 for x in self.logs)

    @property
    def log_ratio(self) -> float:
        """``log(a / (b + c + d))``."""
        rest = logsumexp(self.logs[1:])
        return float(self.logs[0] - rest) if rest > -math.inf else math.inf

    @property
    def s(self) -> float:
        """``(b + c + d) / a``, the simplex coordinate with ``a`` normalized to 1."""
        lr = self.log_ratio
        return math.exp(-lr) if lr < math.inf else 0.0


def _log_lambda(l4: np.ndarray) -> float:
    """``log Lambda`` from the log arguments ``(log xi, log x, log y, log z)``."""
    with np.errstate(invalid="ignore"):
        terms = np.where(_EXP > 0, _EXP * l4[None, :], 0.0)
    terms = _LOG_COEF + terms.sum(axis=1)
    return float(logsumexp(terms)) if np.any(terms > -np.inf) else -math.inf


def lambda_step(p: ScaledParams | Params | Sequence[float]) -> ScaledParams:
    """Apply ``Lambda`` to all four rotations and renormalize."""
    if not isinstance(p, ScaledParams):
        p = ScaledParams.from_params(p)
    l4 = np.array(p.logs)
    new = np.array([_log_lambda(l4[rot]) for rot in _ROT])
    L = 7.0 * p.L
    out = ScaledParams._normalized(new, L)
    if not math.isfinite(out.L):
        raise LogOverflow("log scale left the floating point range")
    return out


@dataclass
class Amplified:
    final: ScaledParams
    states: list[ScaledParams]
    log_ratios: list[float]

    @property
    def ratios(self) -> list[float]:
        return [math.exp(x) if x < 709 else math.inf for x in self.log_ratios]

    def rows(self) -> list[tuple[int, float, float]]:
        """``(k, log r_k, s_k)`` per iterate."""
        return [(k, lr, st.s) for k, (lr, st) in enumerate(zip(self.log_ratios, self.states))]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["k", "log_r", "s"])
            for k, lr, s in self.rows():
                w.writerow([k, repr(lr), repr(s)])


def amplify(p, k: int) -> Amplified:
    """``k`` amplifier steps with the ratio sequence ``r_j = a_j/(b_j+c_j+d_j)``."""
    if k < 0:
        raise ValueError("k must be >= 0")
    cur = p if isinstance(p, ScaledParams) else ScaledParams.from_params(p)
    states = [cur]
    for _ in range(k):
        try:
            cur = lambda_step(cur)
        except LogOverflow as exc:
            raise LogOverflow(str(exc), partial=Amplified(states[-1], states, [s.log_ratio for s in states])) from None
        states.append(cur)
    return Amplified(cur, states, [s.log_ratio for s in states])


def _dominant(p) -> tuple[float, float, float, float]:
    a, b, c, d = p.as_tuple() if isinstance(p, Params) else tuple(float(x) for x in p)
    if min(a, b, c, d) < 0:
        raise RegionError("parameters must be nonnegative")
    if not (a > 0 and d > 0):
        raise RegionError("need a > 0 and d > 0")
    if not a > b + c + d:
        raise RegionError("need a > b + c + d")
    return a, b, c, d


@dataclass(frozen=True)
class GrowthReport:
    j_star: int
    beta_hat: float
    log_beta_hat: float
    log_ratios: tuple[float, ...]
    doubling_steps: int
    verified: bool

    def as_dict(self) -> dict:
        return {
            "j_star": self.j_star,
            "beta_hat": self.beta_hat,
            "log_beta_hat": self.log_beta_hat,
            "log_ratios": list(self.log_ratios),
            "doubling_steps": self.doubling_steps,
            "verified": self.verified,
        }


def growth_report(p, k: int = 40, doubling_steps: int = 5) -> GrowthReport:
    """Locate the squaring regime ``r_{j+1} >= r_j^2`` and check doubling after it.

    ``j*`` is the first index with ``log r_{j+1} >= 2 log r_j`` and
    ``log r_j > 0``.  The report then checks ``log r_{j*+t} >= 2^t log r_{j*}``
    for ``t = 1..doubling_steps``.
    """
    _dominant(p)
    amp = amplify(p, k)
    lr = amp.log_ratios
    j_star = None
    for j in range(len(lr) - 1):
        if lr[j] > 0 and lr[j + 1] >= 2 * lr[j]:
            j_star = j
            break
    if j_star is None or j_star + doubling_steps >= len(lr):
        raise NotReached(f"squaring regime plus {doubling_steps} steps not reached within {k} steps", tuple(lr))
    base = lr[j_star]
    verified = all(lr[j_star + t] >= (2**t) * base * (1 - 1e-12) for t in range(1, doubling_steps + 1))
    beta = math.exp(base) if base < 709 else math.inf
    return GrowthReport(j_star, beta, base, tuple(lr), doubling_steps, verified)


def contraction_probe(p, eps: float, max_steps: int = 10_000) -> tuple[int, list[float]]:
    """Steps until ``s = (b+c+d)/a`` drops below ``eps``, with the ``s`` path.

    Raises ``MonotonicityViolation`` if ``s`` fails to decrease strictly.
    """
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    _dominant(p)
    cur = ScaledParams.from_params(p)
    path = [cur.s]
    for n in range(max_steps + 1):
        if path[-1] < eps:
            return n, path
        cur = lambda_step(cur)
        path.append(cur.s)
        if not path[-1] < path[-2]:
            raise MonotonicityViolation(f"s went from {path[-2]!r} to {path[-1]!r} at step {n + 1}")
    raise NotReached(f"s stayed above {eps} for {max_steps} steps", tuple(path))
