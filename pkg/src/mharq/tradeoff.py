"""Point-to-point diversity-multiplexing machinery and shared protocol types.

This module holds the single-hop tradeoff curve, the eigenvalue-exponent
algebra behind it, the decoding-time rules for accumulating mutual
information across ARQ rounds, and the small value types (antenna pairs,
node chains, ARQ protocol tags) that every higher-level module shares.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence, Union

import numpy as np

__all__ = [
    "MAX_ANTENNAS",
    "AntennaPair",
    "ExponentVector",
    "ExponentSchedule",
    "Topology",
    "ChannelAssumption",
    "FixedArq",
    "FblArq",
    "VblArq",
    "ArqProtocol",
    "WindowAllocation",
    "NEVER",
    "dmt",
    "exponent_cost",
    "capacity_exponent",
    "decoding_time_blockwise",
    "decoding_time_continuous",
]

# Desk-scale cap on antenna counts.  Every worked configuration uses <= 4;
# the cap keeps tensor grids and eigen-decompositions trivially cheap.
MAX_ANTENNAS = 8

#: Sentinel for "decoding never completes" (total accumulated rate short of r).
NEVER = math.inf


@dataclass(frozen=True)
class AntennaPair:
    """Antenna counts at the two ends of one hop."""

    m_tx: int
    m_rx: int

    def __post_init__(self) -> None:
        for name, m in (("m_tx", self.m_tx), ("m_rx", self.m_rx)):
            if isinstance(m, bool) or not isinstance(m, (int, np.integer)):
                raise ValueError(f"{name} must be an integer, got {m!r}")
            if not 1 <= m <= MAX_ANTENNAS:
                raise ValueError(f"{name} must be in [1, {MAX_ANTENNAS}], got {m}")

    @property
    def min_dim(self) -> int:
        return min(self.m_tx, self.m_rx)

    def swapped(self) -> "AntennaPair":
        return AntennaPair(self.m_rx, self.m_tx)


@dataclass(frozen=True)
class ExponentVector:
    """Per-eigenmode SNR exponents of one hop in one round.

    Eigenvalue j of the channel Gram matrix scales as SNR^(-alpha_j); the
    ordered flag asserts the conventional nonincreasing arrangement.
    """

    alpha: tuple[float, ...]
    ordered: bool = True

    def __init__(self, alpha: Sequence[float], ordered: bool = True) -> None:
        alpha = tuple(float(a) for a in alpha)
        if not alpha:
            raise ValueError("exponent vector must be nonempty")
        if any(math.isnan(a) or a < 0.0 for a in alpha):
            raise ValueError(f"exponents must be nonnegative, got {alpha}")
        if ordered and any(a < b for a, b in zip(alpha, alpha[1:])):
            raise ValueError(f"exponents not nonincreasing: {alpha}")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "ordered", bool(ordered))

    def __len__(self) -> int:
        return len(self.alpha)


@dataclass(frozen=True)
class ExponentSchedule:
    """One ExponentVector per ARQ round for a single hop."""

    per_round: tuple[ExponentVector, ...]

    def __init__(self, per_round: Sequence[ExponentVector]) -> None:
        per_round = tuple(per_round)
        if not per_round:
            raise ValueError("schedule must cover at least one round")
        width = len(per_round[0])
        for l, vec in enumerate(per_round):
            if not isinstance(vec, ExponentVector):
                raise TypeError(f"round {l} entry is not an ExponentVector")
            if not vec.ordered:
                raise ValueError(f"round {l} exponent vector must be ordered")
            if len(vec) != width:
                raise ValueError(
                    f"round {l} has {len(vec)} exponents, expected {width}"
                )
        object.__setattr__(self, "per_round", per_round)

    @property
    def rounds(self) -> int:
        return len(self.per_round)


@dataclass(frozen=True)
class Topology:
    """Ordered antenna counts along the node chain."""

    antennas: tuple[int, ...]

    def __init__(self, antennas: Sequence[int]) -> None:
        antennas = tuple(int(a) for a in antennas)
        if len(antennas) < 2:
            raise ValueError("a chain needs at least two nodes")
        for k, m in enumerate(antennas):
            if not 1 <= m <= MAX_ANTENNAS:
                raise ValueError(
                    f"antennas[{k}] must be in [1, {MAX_ANTENNAS}], got {m}"
                )
        object.__setattr__(self, "antennas", antennas)

    @property
    def n_nodes(self) -> int:
        return len(self.antennas)

    @property
    def n_hops(self) -> int:
        return len(self.antennas) - 1

    def hop(self, i: int) -> AntennaPair:
        """Hop i (0-based) as an AntennaPair."""
        if not 0 <= i < self.n_hops:
            raise IndexError(f"hop index {i} out of range for {self.n_hops} hops")
        return AntennaPair(self.antennas[i], self.antennas[i + 1])

    def hops(self) -> tuple[AntennaPair, ...]:
        return tuple(self.hop(i) for i in range(self.n_hops))

    def sub_topologies(self) -> tuple["Topology", ...]:
        """All contiguous three-node windows (requires >= 3 nodes)."""
        if self.n_nodes < 3:
            raise ValueError("need at least three nodes to form sub-chains")
        return tuple(
            Topology(self.antennas[i : i + 3]) for i in range(self.n_nodes - 2)
        )


class ChannelAssumption(Enum):
    """How long one fading realization persists."""

    LONG_TERM_STATIC = "long_term"   # one draw per hop for a message's lifetime
    SHORT_TERM_STATIC = "short_term"  # fresh draw every ARQ round


@dataclass(frozen=True)
class FixedArq:
    """Per-hop retransmission windows fixed up front."""

    windows: tuple[int, ...]

    def __init__(self, windows: Sequence[int]) -> None:
        windows = tuple(int(w) for w in windows)
        if not windows:
            raise ValueError("fixed protocol needs at least one hop window")
        if any(w < 1 for w in windows):
            raise ValueError(f"windows must be >= 1, got {windows}")
        object.__setattr__(self, "windows", windows)

    @property
    def total(self) -> int:
        return sum(self.windows)


@dataclass(frozen=True)
class FblArq:
    """Fixed-block-length ARQ: a shared round budget, split decided offline."""

    total_rounds: int

    def __post_init__(self) -> None:
        if self.total_rounds < 1:
            raise ValueError(f"total_rounds must be >= 1, got {self.total_rounds}")


@dataclass(frozen=True)
class VblArq:
    """Variable-block-length ARQ: the round budget is shared dynamically."""

    total_rounds: int

    def __post_init__(self) -> None:
        if self.total_rounds < 1:
            raise ValueError(f"total_rounds must be >= 1, got {self.total_rounds}")


ArqProtocol = Union[FixedArq, FblArq, VblArq]


@dataclass(frozen=True)
class WindowAllocation:
    """Per-hop windows together with the total budget they must respect."""

    windows: tuple[int, ...]
    total_budget: int

    def __init__(self, windows: Sequence[int], total_budget: int) -> None:
        windows = tuple(int(w) for w in windows)
        total_budget = int(total_budget)
        if not windows:
            raise ValueError("allocation needs at least one hop window")
        if any(w < 1 for w in windows):
            raise ValueError(f"windows must be >= 1, got {windows}")
        if total_budget < 1:
            raise ValueError(f"total_budget must be >= 1, got {total_budget}")
        if sum(windows) > total_budget:
            raise ValueError(
                f"window budget violated: sum{windows} = {sum(windows)} "
                f"> total budget {total_budget}"
            )
        object.__setattr__(self, "windows", windows)
        object.__setattr__(self, "total_budget", total_budget)


def _check_rate(r) -> np.ndarray:
    arr = np.asarray(r, dtype=float)
    if np.any(np.isnan(arr)) or np.any(arr < 0.0):
        raise ValueError(f"multiplexing gain must be nonnegative, got {r!r}")
    return arr


def dmt(pair: AntennaPair, r, *, power_exponent: float = 1.0):
    """Optimal diversity order of a single hop at multiplexing gain r.

    The piecewise-linear curve through the corner points
    (k, (m_tx - k)(m_rx - k)) for k = 0..min(m_tx, m_rx); zero from the
    rightmost corner on.  Accepts a scalar or an array of gains.

    power_exponent scales the per-round transmit-energy budget: with budget g
    the curve becomes g * d(r / g), which reduces to the plain curve at
    g = 1.
    """
    if not isinstance(pair, AntennaPair):
        raise TypeError("pair must be an AntennaPair")
    if not power_exponent >= 1.0:
        raise ValueError(f"power exponent must be >= 1, got {power_exponent}")
    rr = _check_rate(r) / power_exponent
    k = np.arange(pair.min_dim + 1, dtype=float)
    corners = (pair.m_tx - k) * (pair.m_rx - k)
    d = power_exponent * np.interp(rr, k, corners)
    if np.isscalar(r) or np.ndim(r) == 0:
        return float(d)
    return d


def exponent_cost(pair: AntennaPair, alpha: ExponentVector | Sequence[float]) -> float:
    """Outage-probability SNR exponent of one eigenvalue-exponent realization.

    Sum over modes of (2j - 1 + |m_tx - m_rx|) * alpha_j, ordered weakest
    weight first.  Minimizing this over ordered vectors whose capacity
    exponent falls below r reproduces the dmt curve, which the tests use as
    an independent route to the same values.
    """
    values = alpha.alpha if isinstance(alpha, ExponentVector) else tuple(alpha)
    if len(values) != pair.min_dim:
        raise ValueError(
            f"expected {pair.min_dim} exponents for {pair}, got {len(values)}"
        )
    gap = abs(pair.m_tx - pair.m_rx)
    return float(sum((2 * j + 1 + gap) * a for j, a in enumerate(values)))


def capacity_exponent(
    alpha: ExponentVector | Sequence[float], power_exponent: float = 1.0
) -> float:
    """Multiplexing-gain exponent a hop supports under the given eigenmode decay.

    Sum over modes of (g - alpha_j)^+ where g is the per-round power
    exponent; modes with alpha_j >= g contribute nothing, matching the
    intuition that they are effectively switched off.
    """
    values = alpha.alpha if isinstance(alpha, ExponentVector) else tuple(alpha)
    if any(a < 0.0 for a in values):
        raise ValueError(f"exponents must be nonnegative, got {values}")
    return float(sum(max(power_exponent - a, 0.0) for a in values))


def decoding_time_blockwise(S_per_round: Sequence[float], r: float):
    """Smallest whole number of rounds whose summed rate exponents reach r.

    Returns NEVER when even the full sequence falls short.  The infimum is
    over positive round counts, so r = 0 still costs one round: feedback
    arrives only at round boundaries.
    """
    r = float(_check_rate(r))
    total = 0.0
    count = 0
    for s in S_per_round:
        if s < 0.0:
            raise ValueError(f"rate exponents must be nonnegative, got {s}")
        total += s
        count += 1
        if total >= r:
            return count
    return NEVER


def decoding_time_continuous(S_per_round: Sequence[float], r: float):
    """Decoding time when the receiver can stop mid-round.

    The final round is used fractionally, so r = 0 needs no air time at all.
    Uses the standard floor convention for the boundary of the last round;
    the distinction from a strict-floor reading only matters on exact
    integers, a measure-zero set.
    """
    r = float(_check_rate(r))
    if r == 0.0:
        return 0.0
    acc = 0.0
    for idx, s in enumerate(S_per_round):
        if s < 0.0:
            raise ValueError(f"rate exponents must be nonnegative, got {s}")
        if s > 0.0 and acc + s >= r:
            return idx + (r - acc) / s
        acc += s
    return NEVER
