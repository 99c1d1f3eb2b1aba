"""Finite-SNR message-error analysis for fixed-window ARQ chains.

At finite SNR a message is lost two ways: the channel stays in outage past a
hop's retransmission window, or queueing pushes the end-to-end delay past
the deadline.  This module computes both pieces (per-hop outage from the
rate-split supremum or the space-time-coded closed form, mean service times,
and the sojourn-tail deadline probability) and exhausts the integer window
allocations to find the best split of a deadline budget.

Conventions used throughout: SNR is linear, rates are bits per channel use,
and times are in blocks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product as _cartesian
from typing import Callable, Sequence

import numpy as np

from .numerics import (
    BoxDomain,
    Interval,
    integrate,
    minimize_box,
    regularized_lower_gamma,
)
from .tradeoff import AntennaPair, Topology, WindowAllocation

__all__ = [
    "FiniteSnrScenario",
    "ServiceModel",
    "ErrorBreakdown",
    "OstbcOutage",
    "ServiceTimeDistribution",
    "CandidateRow",
    "WindowOptimum",
    "UnstableQueueError",
    "WindowInfeasibleError",
    "finite_multiplexing",
    "per_hop_outage",
    "ostbc_outage",
    "service_time_distribution",
    "mean_service_time",
    "deadline_exponent",
    "deadline_probability",
    "message_error",
    "optimize_windows",
]

# Allocations whose queue drifts slower than this against the arrival rate
# are treated as unstable outright; the deadline exponent would blow up.
STABILITY_MARGIN = 1e-9

THRESHOLD_VARIANTS = ("per_receiver", "plain")
CODE_MODELS = ("ostbc", "general")


class UnstableQueueError(ValueError):
    """A stage's mean service cannot keep up with the arrival rate."""


class WindowInfeasibleError(ValueError):
    """No window allocation satisfies the stability and budget constraints."""

    def __init__(self, message: str, table: tuple["CandidateRow", ...]):
        super().__init__(message)
        self.table = table


@dataclass(frozen=True)
class FiniteSnrScenario:
    """Operating point of a finite-SNR evaluation.

    arrival_mean_blocks and deadline_blocks may be left unset for pure
    outage computations; every queueing operation requires them.
    """

    snr: float
    multiplexing_gain: float
    spatial_code_rate: float = 1.0
    arrival_mean_blocks: float | None = None
    deadline_blocks: float | None = None

    def __post_init__(self) -> None:
        if not self.snr > 0.0:
            raise ValueError(f"snr must be positive (linear scale), got {self.snr}")
        if math.isnan(self.multiplexing_gain) or self.multiplexing_gain < 0.0:
            raise ValueError(
                f"multiplexing gain must be nonnegative, got {self.multiplexing_gain}"
            )
        if not 0.0 < self.spatial_code_rate <= 1.0:
            raise ValueError(
                f"spatial code rate must be in (0, 1], got {self.spatial_code_rate}"
            )
        if self.arrival_mean_blocks is not None and not self.arrival_mean_blocks > 0.0:
            raise ValueError(
                f"arrival mean must be positive, got {self.arrival_mean_blocks}"
            )
        if self.deadline_blocks is not None and not self.deadline_blocks >= 1.0:
            raise ValueError(
                f"deadline must be at least one block, got {self.deadline_blocks}"
            )

    def require_queueing(self) -> tuple[float, float]:
        if self.arrival_mean_blocks is None or self.deadline_blocks is None:
            raise ValueError(
                "scenario needs arrival_mean_blocks and deadline_blocks "
                "for queueing computations"
            )
        return self.arrival_mean_blocks, self.deadline_blocks


@dataclass(frozen=True)
class ServiceModel:
    """Per-hop mean service times, in blocks.

    clamp_min_one records whether the means came from whole-block counting
    (a transmission occupies at least one full block), in which case every
    mean must be at least one.
    """

    means: tuple[float, ...]
    clamp_min_one: bool = True

    def __init__(self, means: Sequence[float], clamp_min_one: bool = True) -> None:
        means = tuple(float(m) for m in means)
        if not means:
            raise ValueError("service model needs at least one hop")
        if any(math.isnan(m) or m <= 0.0 for m in means):
            raise ValueError(f"service means must be positive, got {means}")
        if clamp_min_one and any(m < 1.0 - 1e-12 for m in means):
            raise ValueError(
                f"whole-block service means must be >= 1, got {means}"
            )
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "clamp_min_one", bool(clamp_min_one))


@dataclass(frozen=True)
class ErrorBreakdown:
    """Message-error probability split into its two loss mechanisms."""

    p_outage: float
    p_deadline: float
    p_total: float

    def __post_init__(self) -> None:
        for name, p in (
            ("p_outage", self.p_outage),
            ("p_deadline", self.p_deadline),
            ("p_total", self.p_total),
        ):
            if math.isnan(p) or not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {p}")
        expected = self.p_outage + (1.0 - self.p_outage) * self.p_deadline
        if abs(expected - self.p_total) > 1e-12:
            raise ValueError(
                f"inconsistent breakdown: outage {self.p_outage} and deadline "
                f"{self.p_deadline} compose to {expected}, not {self.p_total}"
            )

    @classmethod
    def combine(cls, p_outage: float, p_deadline: float) -> "ErrorBreakdown":
        total = p_outage + (1.0 - p_outage) * p_deadline
        return cls(p_outage=p_outage, p_deadline=p_deadline, p_total=total)


def finite_multiplexing(rate_bits_per_use: float, m_rx: int, snr: float) -> float:
    """Finite-SNR multiplexing gain: rate normalized by log2(1 + m_rx * snr)."""
    if rate_bits_per_use < 0.0:
        raise ValueError(f"rate must be nonnegative, got {rate_bits_per_use}")
    if not snr > 0.0:
        raise ValueError(f"snr must be positive, got {snr}")
    if m_rx < 1:
        raise ValueError(f"m_rx must be >= 1, got {m_rx}")
    return rate_bits_per_use / math.log2(1.0 + m_rx * snr)


def _threshold_base(pair: AntennaPair, snr: float, threshold_variant: str) -> float:
    if threshold_variant == "per_receiver":
        return 1.0 + pair.m_rx * snr
    if threshold_variant == "plain":
        return 1.0 + snr
    raise ValueError(
        f"unknown threshold variant {threshold_variant!r}; "
        f"choose from {THRESHOLD_VARIANTS}"
    )


def _outage_window_ostbc(
    pair: AntennaPair, t: float, scenario: FiniteSnrScenario, threshold_variant: str
) -> float:
    """P{space-time-coded hop still in outage after t blocks}."""
    r = scenario.multiplexing_gain
    if r == 0.0:
        return 0.0
    base = _threshold_base(pair, scenario.snr, threshold_variant)
    exponent = r / (scenario.spatial_code_rate * t)
    x = (pair.m_tx / scenario.snr) * (base**exponent - 1.0)
    return regularized_lower_gamma(pair.m_tx * pair.m_rx, x)


def _outage_window_general(
    pair: AntennaPair, t: float, scenario: FiniteSnrScenario
) -> float:
    """P{hop in outage after t blocks} for an uncoded MIMO hop.

    The outage event partitions the rate exponent budget B = r/t across the
    shared eigenmodes as 0 = b_0 <= b_1 <= ... <= b_M*, with the dominant
    partition found by supremum.  Free coordinates are mapped onto the
    ordered region by construction, so every grid point is feasible.
    """
    r = scenario.multiplexing_gain
    if r == 0.0:
        return 0.0
    rho = scenario.snr
    base = 1.0 + pair.m_rx * rho
    mstar = pair.min_dim
    gap = abs(pair.m_tx - pair.m_rx)
    shapes = [gap + 2 * l - 1 for l in range(1, mstar + 1)]
    budget = r / t
    if mstar == 1:
        x = (pair.m_tx / rho) * (base**budget - 1.0)
        return regularized_lower_gamma(shapes[0], x)
    dim = mstar - 1
    if dim > 6:
        raise ValueError(
            f"outage search supports at most 7 shared eigenmodes, got {mstar}"
        )
    grid = {1: 65, 2: 25, 3: 13}.get(dim, 7)

    def negated(pts: np.ndarray) -> np.ndarray:
        n = pts.shape[0]
        prob = np.ones(n)
        prev_b = np.zeros(n)
        used = np.zeros(n)
        prev_pow = np.ones(n)
        for l in range(1, mstar + 1):
            if l < mstar:
                upper = (budget - used) / (mstar - l + 1)
                b = prev_b + pts[:, l - 1] * (upper - prev_b)
            else:
                b = budget - used
            cur_pow = base**b
            x = (pair.m_tx / rho) * (cur_pow - prev_pow)
            prob *= np.array(
                [regularized_lower_gamma(shapes[l - 1], float(v)) for v in x]
            )
            used = used + b
            prev_b = b
            prev_pow = cur_pow
        return -prob

    _, neg_best = minimize_box(
        negated,
        BoxDomain([Interval(0.0, 1.0)] * dim),
        coarse_grid=grid,
        refine_rounds=2,
        vectorized=True,
    )
    return min(max(-neg_best, 0.0), 1.0)


def per_hop_outage(
    pair: AntennaPair,
    window: float,
    scenario: FiniteSnrScenario,
    *,
    code_model: str = "general",
    threshold_variant: str = "per_receiver",
) -> float:
    """Probability one hop exhausts its retransmission window in outage.

    The window is a length in blocks; protocol windows are whole blocks of
    at least one, but any positive value is accepted so the same evaluation
    can serve as a service-time tail.  Zero rate never sees outage.
    """
    if not window > 0.0:
        raise ValueError(f"window must be positive, got {window}")
    if code_model == "general":
        if threshold_variant != "per_receiver":
            raise ValueError(
                "the rate-split outage form is defined per receiving array; "
                "threshold variants apply to the ostbc model only"
            )
        return _outage_window_general(pair, window, scenario)
    if code_model == "ostbc":
        return _outage_window_ostbc(pair, window, scenario, threshold_variant)
    raise ValueError(f"unknown code model {code_model!r}; choose from {CODE_MODELS}")


@dataclass(frozen=True)
class OstbcOutage:
    """Per-hop and combined outage of a space-time-coded chain."""

    per_hop: tuple[float, ...]
    union_bound: float
    complement_product: float


def ostbc_outage(
    topology: Topology,
    allocation: WindowAllocation,
    scenario: FiniteSnrScenario,
    *,
    threshold_variant: str = "per_receiver",
) -> OstbcOutage:
    """Chain outage under orthogonal space-time coding on every hop.

    Reports the per-hop terms, their plain sum (the union bound used by all
    number reproduction), and the exact independent-hop combination
    1 - prod(1 - p_i).
    """
    if len(allocation.windows) != topology.n_hops:
        raise ValueError(
            f"allocation has {len(allocation.windows)} windows for "
            f"{topology.n_hops} hops"
        )
    per_hop = tuple(
        min(
            max(
                _outage_window_ostbc(
                    topology.hop(i), float(w), scenario, threshold_variant
                ),
                0.0,
            ),
            1.0,
        )
        for i, w in enumerate(allocation.windows)
    )
    union = min(sum(per_hop), 1.0)
    complement = 1.0 - math.prod(1.0 - p for p in per_hop)
    return OstbcOutage(
        per_hop=per_hop, union_bound=union, complement_product=complement
    )


@dataclass(frozen=True)
class ServiceTimeDistribution:
    """Continuous-time service law of one hop: P{decoding time <= t}."""

    cdf: Callable[[float], float]
    pdf: Callable[[float], float]
    model: str  # "analytic-ostbc" or "numeric-general"


def service_time_distribution(
    pair: AntennaPair,
    scenario: FiniteSnrScenario,
    *,
    code_model: str = "ostbc",
    threshold_variant: str = "per_receiver",
) -> ServiceTimeDistribution:
    """CDF and density of the continuous decoding time of one hop.

    The CDF is one minus the outage tail.  For the space-time-coded model
    the density is differentiated analytically; the general model falls back
    to a central difference of the CDF, and the model field names which path
    was taken.
    """
    if code_model not in CODE_MODELS:
        raise ValueError(f"unknown code model {code_model!r}; choose from {CODE_MODELS}")
    r = scenario.multiplexing_gain

    def cdf(t: float) -> float:
        if t <= 0.0:
            return 0.0
        return 1.0 - per_hop_outage(
            pair,
            t,
            scenario,
            code_model=code_model,
            threshold_variant=threshold_variant,
        )

    if code_model == "ostbc":
        rho = scenario.snr
        r_s = scenario.spatial_code_rate
        base = _threshold_base(pair, rho, threshold_variant)
        shape = pair.m_tx * pair.m_rx
        log_base = math.log(base)
        norm = math.factorial(shape - 1)

        def pdf(t: float) -> float:
            if t <= 0.0 or r == 0.0:
                return 0.0
            grown = base ** (r / (r_s * t))
            f_val = (pair.m_tx / rho) * (grown - 1.0)
            jacobian = (pair.m_tx / rho) * grown * log_base * r / (r_s * t * t)
            return f_val ** (shape - 1) * math.exp(-f_val) * jacobian / norm

        return ServiceTimeDistribution(cdf=cdf, pdf=pdf, model="analytic-ostbc")

    def pdf(t: float) -> float:
        if t <= 0.0 or r == 0.0:
            return 0.0
        h = 1e-5 * max(t, 1.0)
        lo = max(t - h, 1e-12)
        return (cdf(t + h) - cdf(lo)) / (t + h - lo)

    return ServiceTimeDistribution(cdf=cdf, pdf=pdf, model="numeric-general")


def mean_service_time(
    pair: AntennaPair,
    window: int,
    scenario: FiniteSnrScenario,
    *,
    clamp_min_one: bool = True,
    code_model: str = "ostbc",
    threshold_variant: str = "per_receiver",
) -> float:
    """Mean blocks a hop occupies per message under a window of whole blocks.

    With clamp_min_one (the default) the service is counted in whole blocks:
    mu = E[min(ceil(t), window)] = 1 + sum of the outage tail at each
    intermediate window, which guarantees mu >= 1 and matches the queueing
    unit of the delay analysis.  Without it, the continuous-time first
    moment is integrated literally from one block up, which can fall below
    one block when most decodes finish early.
    """
    if window < 1:
        raise ValueError(f"window must be >= 1 block, got {window}")
    window = int(window)

    def tail(t: float) -> float:
        return per_hop_outage(
            pair,
            t,
            scenario,
            code_model=code_model,
            threshold_variant=threshold_variant,
        )

    if clamp_min_one:
        return 1.0 + sum(tail(float(j)) for j in range(1, window))
    dist = service_time_distribution(
        pair, scenario, code_model=code_model, threshold_variant=threshold_variant
    )
    if scenario.multiplexing_gain == 0.0:
        return 0.0
    body = 0.0
    if window > 1:
        body = integrate(
            lambda t: t * dist.pdf(t), Interval(1.0, float(window)), tol=1e-9
        )
    return body + window * tail(float(window))


def _stage_means(means: Sequence[float]) -> list[float]:
    """Mean occupancy of each half-duplex stage (adjacent hop pairs)."""
    if len(means) == 1:
        return [means[0]]
    return [means[i] + means[i + 1] for i in range(len(means) - 1)]


def deadline_exponent(service: ServiceModel, arrival_mean_blocks: float) -> float:
    """Decay rate of the end-to-end delay tail; positive iff stable."""
    if not arrival_mean_blocks > 0.0:
        raise ValueError(f"arrival mean must be positive, got {arrival_mean_blocks}")
    thetas = []
    for i, stage in enumerate(_stage_means(service.means)):
        theta = 1.0 / stage - 1.0 / arrival_mean_blocks
        if theta <= STABILITY_MARGIN:
            raise UnstableQueueError(
                f"stage {i} is unstable: mean occupancy {stage:.6g} blocks "
                f"against mean inter-arrival {arrival_mean_blocks:.6g}"
            )
        thetas.append(theta)
    return min(thetas)


def deadline_probability(
    service: ServiceModel,
    arrival_mean_blocks: float,
    deadline_blocks: float,
    n_nodes: int | None = None,
) -> float:
    """Probability the end-to-end sojourn exceeds the deadline.

    Chains with one queueing stage (up to three nodes) use the exact
    exponential-sojourn tail (stage mean / arrival mean) * exp(-k * theta).
    Longer chains keep only the dominant exponent exp(-k * theta*), theta*
    being the slowest stage's decay rate.
    """
    means = service.means
    if n_nodes is not None and n_nodes != len(means) + 1:
        raise ValueError(
            f"n_nodes={n_nodes} inconsistent with {len(means)} hop means"
        )
    if deadline_blocks < 0.0:
        raise ValueError(f"deadline must be nonnegative, got {deadline_blocks}")
    theta_star = deadline_exponent(service, arrival_mean_blocks)
    stages = _stage_means(means)
    if len(stages) == 1:
        prefactor = stages[0] / arrival_mean_blocks
        return prefactor * math.exp(-deadline_blocks * theta_star)
    return math.exp(-deadline_blocks * theta_star)


def message_error(
    topology: Topology,
    allocation: WindowAllocation,
    scenario: FiniteSnrScenario,
    *,
    threshold_variant: str = "per_receiver",
    clamp_min_one: bool = True,
) -> ErrorBreakdown:
    """Total message-error probability of one window allocation.

    Outage uses the space-time-coded union bound; the deadline tail runs on
    the whole-block (or literal, per clamp_min_one) mean service times.
    """
    arrival, deadline = scenario.require_queueing()
    outage = ostbc_outage(
        topology, allocation, scenario, threshold_variant=threshold_variant
    )
    means = tuple(
        mean_service_time(
            topology.hop(i),
            w,
            scenario,
            clamp_min_one=clamp_min_one,
            threshold_variant=threshold_variant,
        )
        for i, w in enumerate(allocation.windows)
    )
    p_deadline = deadline_probability(
        ServiceModel(means, clamp_min_one), arrival, deadline, topology.n_nodes
    )
    return ErrorBreakdown.combine(outage.union_bound, p_deadline)


@dataclass(frozen=True)
class CandidateRow:
    """One enumerated allocation in the window search."""

    windows: tuple[int, ...]
    means: tuple[float, ...]
    p_outage: float
    p_deadline: float | None
    p_total: float | None
    feasible: bool
    constraint_conflict: bool
    violations: tuple[str, ...]


@dataclass(frozen=True)
class WindowOptimum:
    """Result of the exhaustive window search."""

    allocation: WindowAllocation
    breakdown: ErrorBreakdown
    threshold_variant: str
    clamp_min_one: bool
    table: tuple[CandidateRow, ...]


def optimize_windows(
    topology: Topology,
    scenario: FiniteSnrScenario,
    *,
    budget: int | None = None,
    threshold_variant: str = "per_receiver",
    clamp_min_one: bool = True,
) -> WindowOptimum:
    """Best integer window allocation under the deadline budget.

    Enumerates every allocation with all windows >= 1 and total at most the
    budget (the deadline, rounded down, unless given explicitly), discards
    the ones violating the per-hop mean bounds 1 <= mu <= arrival mean or
    the stage stability margin, and returns the feasible argmin of the total
    error; ties break toward the lexicographically smallest windows.

    Allocations where the two constraint families disagree (per-hop bounds
    pass but a stage sum is unstable, or the reverse) are flagged, since the
    two express different readings of the stability requirement.
    """
    arrival, deadline = scenario.require_queueing()
    n_hops = topology.n_hops
    if budget is None:
        budget = int(math.floor(deadline))
    if budget < n_hops:
        raise WindowInfeasibleError(
            f"budget {budget} cannot give each of {n_hops} hops a block", ()
        )

    # per-hop outage tails are shared across candidates; precompute them
    hop_tail: list[list[float]] = []
    for i in range(n_hops):
        hop = topology.hop(i)
        hop_tail.append(
            [
                _outage_window_ostbc(hop, float(j), scenario, threshold_variant)
                for j in range(1, budget + 1)
            ]
        )

    def mu_of(i: int, w: int) -> float:
        if clamp_min_one:
            return 1.0 + sum(hop_tail[i][: w - 1])
        return mean_service_time(
            topology.hop(i),
            w,
            scenario,
            clamp_min_one=False,
            threshold_variant=threshold_variant,
        )

    rows: list[CandidateRow] = []
    best: tuple[float, tuple[int, ...]] | None = None
    best_breakdown: ErrorBreakdown | None = None
    for windows in _cartesian(range(1, budget + 1), repeat=n_hops):
        if sum(windows) > budget:
            continue
        means = tuple(mu_of(i, w) for i, w in enumerate(windows))
        p_outage = min(sum(hop_tail[i][w - 1] for i, w in enumerate(windows)), 1.0)
        violations: list[str] = []
        for i, m in enumerate(means):
            if m < 1.0 - 1e-12:
                violations.append(f"mu[{i}]={m:.6g} below one block")
            if m > arrival:
                violations.append(
                    f"mu[{i}]={m:.6g} exceeds arrival mean {arrival:.6g}"
                )
        per_hop_ok = not violations
        stage_violations: list[str] = []
        for i, stage in enumerate(_stage_means(means)):
            if 1.0 / stage - 1.0 / arrival <= STABILITY_MARGIN:
                stage_violations.append(
                    f"stage {i} occupancy {stage:.6g} not stable against "
                    f"arrival mean {arrival:.6g}"
                )
        stable = not stage_violations
        violations.extend(stage_violations)
        feasible = per_hop_ok and stable
        conflict = per_hop_ok != stable
        if feasible:
            p_deadline = deadline_probability(
                ServiceModel(means, clamp_min_one=False), arrival, deadline
            )
            breakdown = ErrorBreakdown.combine(p_outage, p_deadline)
            p_total = breakdown.p_total
            if best is None or (p_total, windows) < best:
                best = (p_total, windows)
                best_breakdown = breakdown
        else:
            p_deadline = None
            p_total = None
        rows.append(
            CandidateRow(
                windows=windows,
                means=means,
                p_outage=p_outage,
                p_deadline=p_deadline,
                p_total=p_total,
                feasible=feasible,
                constraint_conflict=conflict,
                violations=tuple(violations),
            )
        )
    table = tuple(rows)
    if best is None or best_breakdown is None:
        detail = "; ".join(
            f"{row.windows}: {', '.join(row.violations)}" for row in table
        )
        raise WindowInfeasibleError(
            f"no feasible window allocation within budget {budget} "
            f"(per candidate: {detail})",
            table,
        )
    return WindowOptimum(
        allocation=WindowAllocation(best[1], budget),
        breakdown=best_breakdown,
        threshold_variant=threshold_variant,
        clamp_min_one=clamp_min_one,
        table=table,
    )
