"""Monte Carlo fading and queueing simulator for fixed-window ARQ chains.

Messages arrive as a Poisson stream, each hop retransmits until decoding
succeeds or its window runs out, and consecutive hop pairs share a
half-duplex queueing stage.  The simulator reproduces exactly the dynamics
the finite-SNR analysis works with, so its empirical outage and delay tails
can be held against the analytic numbers.

Reproducibility contract: every random draw comes from counter-based
streams keyed by (seed, stream index), consumed through plain uniforms with
fixed per-message draw counts.  Results are therefore byte-identical across
runs, platforms, and worker counts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .finite_snr import FiniteSnrScenario, mean_service_time
from .tradeoff import ChannelAssumption, FixedArq, Topology

__all__ = [
    "RandomSource",
    "SimConfig",
    "SimResult",
    "DelayExponentFit",
    "run_network_sim",
    "estimate_delay_exponent",
]

SERVICE_MODES = ("physical", "markovian")
SIM_CODE_MODELS = ("logdet", "ostbc")

# Stream layout: arrivals on 0, the channel of 1-based hop h on h, and the
# markovian service of 0-based stage i on 1001 + i.  The gap keeps hop and
# stage streams disjoint for any topology the antenna cap allows.
_STREAM_ARRIVALS = 0
_STREAM_MARKOV_BASE = 1001


class RandomSource:
    """Family of independent counter-based generators under one seed."""

    def __init__(self, seed: int):
        if not 0 <= int(seed) < 2**64:
            raise ValueError(f"seed must fit in 64 bits, got {seed}")
        self.seed = int(seed)

    def stream(self, index: int) -> np.random.Generator:
        return np.random.Generator(np.random.Philox(key=[self.seed, int(index)]))


def _exponential(rng: np.random.Generator, mean: float, size: int) -> np.ndarray:
    # inverse-CDF from uniforms; log1p keeps the u -> 1 tail exact
    u = rng.random(size)
    return -mean * np.log1p(-u)


@dataclass(frozen=True)
class SimConfig:
    """Everything one simulation run depends on."""

    topology: Topology
    protocol: FixedArq
    channel: ChannelAssumption
    scenario: FiniteSnrScenario
    message_count: int
    warmup_count: int = 0
    seed: int = 0
    service_mode: str = "physical"
    code_model: str = "logdet"
    service_means: tuple[float, ...] | None = None
    workers: int = 1

    def __post_init__(self) -> None:
        if not isinstance(self.protocol, FixedArq):
            raise ValueError(
                "only fixed-window protocols are simulated; negotiate variable "
                "windows down to per-hop budgets first"
            )
        if len(self.protocol.windows) != self.topology.n_hops:
            raise ValueError(
                f"protocol has {len(self.protocol.windows)} windows for "
                f"{self.topology.n_hops} hops"
            )
        if self.message_count < 1:
            raise ValueError(f"message_count must be >= 1, got {self.message_count}")
        if not 0 <= self.warmup_count < self.message_count:
            raise ValueError(
                f"warmup_count must be in [0, message_count), got {self.warmup_count}"
            )
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must fit in 64 bits, got {self.seed}")
        if self.service_mode not in SERVICE_MODES:
            raise ValueError(
                f"unknown service mode {self.service_mode!r}; "
                f"choose from {SERVICE_MODES}"
            )
        if self.code_model not in SIM_CODE_MODELS:
            raise ValueError(
                f"unknown code model {self.code_model!r}; "
                f"choose from {SIM_CODE_MODELS}"
            )
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")
        if self.service_means is not None:
            if self.service_mode != "markovian":
                raise ValueError("service_means only applies to markovian mode")
            if len(self.service_means) != self.topology.n_hops:
                raise ValueError(
                    f"service_means has {len(self.service_means)} entries for "
                    f"{self.topology.n_hops} hops"
                )
            if any(m <= 0.0 for m in self.service_means):
                raise ValueError(f"service means must be positive: {self.service_means}")
        self.scenario.require_queueing()


@dataclass(frozen=True, eq=False)
class SimResult:
    """Counts and delays from one run; rates exclude warmup messages."""

    config: SimConfig
    delays: np.ndarray = field(repr=False)  # all non-outage messages
    delivered: int
    outage_drops: int
    deadline_drops: int
    per_hop_outage_drops: tuple[int, ...]
    per_hop_attempts: tuple[int, ...]
    round_histograms: tuple[np.ndarray, ...] = field(repr=False)

    @property
    def analyzed(self) -> int:
        return self.config.message_count - self.config.warmup_count

    @property
    def p_outage(self) -> float:
        return self.outage_drops / self.analyzed

    @property
    def p_deadline(self) -> float:
        return self.deadline_drops / self.analyzed

    @property
    def p_total(self) -> float:
        return (self.outage_drops + self.deadline_drops) / self.analyzed


def _channel_uniforms(
    rng: np.random.Generator, n_msgs: int, rounds: int, m_rx: int, m_tx: int
) -> np.ndarray:
    """Fixed per-message block of uniforms: (msg, round, rx, tx, [mag, phase])."""
    return rng.random((n_msgs, rounds, m_rx, m_tx, 2))


def _capacities(
    u: np.ndarray, snr: float, r_s: float, m_tx: int, code_model: str
) -> np.ndarray:
    """Per-round capacities in bits per use from raw uniforms.

    Entries are unit complex Gaussians via the polar transform, so the
    squared magnitudes are unit exponentials and only the logdet model ever
    needs the phases.
    """
    mags_sq = -np.log1p(-u[..., 0])  # (msg, round, rx, tx)
    if code_model == "ostbc":
        frob = mags_sq.sum(axis=(2, 3))
        return r_s * np.log2(1.0 + snr * frob / m_tx)
    phases = 2.0 * np.pi * u[..., 1]
    h = np.sqrt(mags_sq) * np.exp(1j * phases)
    gram = h @ np.conj(np.swapaxes(h, -1, -2))  # (msg, round, rx, rx)
    eig = np.linalg.eigvalsh(gram)
    return np.log2(1.0 + snr * np.maximum(eig, 0.0) / m_tx).sum(axis=-1)


def _decode_rounds(
    capacities: np.ndarray, target_rate: float, window: int, long_term: bool
) -> np.ndarray:
    """Blocks each message needs on one hop; window + 1 marks outage.

    Long-term static fading holds one draw for the whole message, so the
    accumulated rate after n rounds is n times the first round's capacity.
    """
    n = capacities.shape[0]
    if long_term:
        c = capacities[:, 0]
        needed = np.ceil(target_rate / np.maximum(c, 1e-300))
        rounds = np.minimum(needed, window + 1).astype(np.int64)
        rounds = np.maximum(rounds, 1)
    else:
        accum = np.cumsum(capacities, axis=1)
        done = accum >= target_rate
        first = np.argmax(done, axis=1)  # 0 when never true; mask below
        rounds = np.where(done.any(axis=1), first + 1, window + 1)
    return np.minimum(rounds, window + 1)


def _lindley_waits(services: np.ndarray, arrivals: np.ndarray) -> np.ndarray:
    """Waiting times of a FIFO queue, by cumulative-sum reflection.

    The recursion W_n = max(0, W_{n-1} + T_{n-1} - dA_n) telescopes to
    W_n = C_n - min_{j<=n} C_j with C the cumulative sum of the drift terms,
    which vectorizes.
    """
    drift = np.empty_like(services)
    drift[0] = 0.0
    drift[1:] = services[:-1] - np.diff(arrivals)
    cum = np.cumsum(drift)
    return cum - np.minimum.accumulate(cum)


def run_network_sim(config: SimConfig) -> SimResult:
    """Simulate the chain and classify every message.

    A message is outage-dropped at the first hop whose window runs out; it
    still flows through the remaining stages with zero service so queue
    positions stay aligned.  Non-outage messages past the deadline count as
    deadline drops; their delays are recorded either way.

    The workers count only partitions the vectorized channel computation
    into chunks, so it cannot change any number.
    """
    topo = config.topology
    proto = config.protocol
    scenario = config.scenario
    arrival_mean, deadline = scenario.require_queueing()
    n_msgs = config.message_count
    n_hops = topo.n_hops
    source = RandomSource(config.seed)

    arrivals = np.cumsum(
        _exponential(source.stream(_STREAM_ARRIVALS), arrival_mean, n_msgs)
    )

    if config.service_mode == "markovian":
        hop_means = config.service_means
        if hop_means is None:
            hop_means = tuple(
                mean_service_time(topo.hop(i), proto.windows[i], scenario)
                for i in range(n_hops)
            )
        if n_hops == 1:
            stage_means = [hop_means[0]]
        else:
            stage_means = [
                hop_means[i] + hop_means[i + 1] for i in range(n_hops - 1)
            ]
        stage_services = [
            _exponential(source.stream(_STREAM_MARKOV_BASE + i), m, n_msgs)
            for i, m in enumerate(stage_means)
        ]
        outage_hop = np.full(n_msgs, -1, dtype=np.int64)
        histograms = tuple(
            np.zeros(proto.windows[i] + 2, dtype=np.int64) for i in range(n_hops)
        )
    else:
        long_term = config.channel is ChannelAssumption.LONG_TERM_STATIC
        blocks = np.empty((n_hops, n_msgs))
        rounds_by_hop = []
        for h in range(n_hops):
            pair = topo.hop(h)
            window = proto.windows[h]
            draw_rounds = 1 if long_term else window
            target = scenario.multiplexing_gain * math.log2(
                1.0 + pair.m_rx * scenario.snr
            )
            rng = source.stream(1 + h)
            u = _channel_uniforms(rng, n_msgs, draw_rounds, pair.m_rx, pair.m_tx)
            chunks = []
            for part in np.array_split(u, config.workers, axis=0):
                if part.shape[0] == 0:
                    continue
                caps = _capacities(
                    part,
                    scenario.snr,
                    scenario.spatial_code_rate,
                    pair.m_tx,
                    config.code_model,
                )
                chunks.append(_decode_rounds(caps, target, window, long_term))
            rounds = np.concatenate(chunks)
            rounds_by_hop.append(rounds)
            blocks[h] = np.minimum(rounds, window)

        # first window overrun kills the message; later hops carry it for free
        failed = np.stack(
            [rounds_by_hop[h] > proto.windows[h] for h in range(n_hops)]
        )
        outage_hop = np.where(
            failed.any(axis=0), failed.argmax(axis=0), -1
        ).astype(np.int64)
        for h in range(n_hops):
            dead_before = (outage_hop >= 0) & (outage_hop < h)
            blocks[h, dead_before] = 0.0

        cut = config.warmup_count
        histograms = []
        for h in range(n_hops):
            reached = (outage_hop < 0) | (outage_hop >= h)
            reached[:cut] = False
            counts = np.bincount(
                np.minimum(rounds_by_hop[h][reached], proto.windows[h] + 1),
                minlength=proto.windows[h] + 2,
            )
            histograms.append(counts)
        histograms = tuple(histograms)
        if n_hops == 1:
            stage_services = [blocks[0]]
        else:
            stage_services = [blocks[i] + blocks[i + 1] for i in range(n_hops - 1)]

    # tandem of FIFO stages; each stage's departures arrive at the next
    stage_arrivals = arrivals
    total_delay = np.zeros(n_msgs)
    for services in stage_services:
        waits = _lindley_waits(services, stage_arrivals)
        sojourn = waits + services
        total_delay += sojourn
        stage_arrivals = stage_arrivals + sojourn

    cut = config.warmup_count
    outage_mask = outage_hop >= 0
    ok = ~outage_mask
    ok_delays = total_delay[cut:][ok[cut:]]
    delivered = int(np.count_nonzero(ok_delays <= deadline))
    deadline_drops = int(ok_delays.size - delivered)
    outage_drops = int(np.count_nonzero(outage_mask[cut:]))
    per_hop_drops = tuple(
        int(np.count_nonzero(outage_hop[cut:] == h)) for h in range(n_hops)
    )
    per_hop_attempts = tuple(
        int(np.count_nonzero((outage_hop[cut:] < 0) | (outage_hop[cut:] >= h)))
        for h in range(n_hops)
    )
    return SimResult(
        config=config,
        delays=ok_delays,
        delivered=delivered,
        outage_drops=outage_drops,
        deadline_drops=deadline_drops,
        per_hop_outage_drops=per_hop_drops,
        per_hop_attempts=per_hop_attempts,
        round_histograms=histograms,
    )


@dataclass(frozen=True)
class DelayExponentFit:
    """Least-squares fit of the log delay tail against the deadline."""

    exponent: float
    stderr: float
    intercept: float
    k_used: tuple[float, ...]
    exceedance_counts: tuple[int, ...]
    r_squared: float


def estimate_delay_exponent(
    delays: np.ndarray, k_grid: Sequence[float]
) -> DelayExponentFit:
    """Fit exp(-theta * k) to the empirical delay tail over a deadline grid.

    Refuses to fit when the tail is too thin to trust: fewer than 1e4
    delay samples overall, or fewer than 50 exceedances at the largest
    deadline, raise with the largest deadline that would still work.
    """
    delays = np.asarray(delays, dtype=float)
    grid = [float(k) for k in k_grid]
    if len(grid) < 2:
        raise ValueError("need at least two deadline points to fit a slope")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError(f"deadline grid must be strictly increasing: {grid}")
    if delays.size < 10_000:
        raise ValueError(
            f"tail fit needs at least 10000 delay samples, got {delays.size}"
        )
    counts = [int(np.count_nonzero(delays > k)) for k in grid]
    if counts[-1] < 50:
        usable = [k for k in grid if np.count_nonzero(delays > k) >= 50]
        hint = (
            f"largest usable deadline is {usable[-1]:g}"
            if usable
            else "no grid point has 50 exceedances"
        )
        raise ValueError(
            f"only {counts[-1]} exceedances at deadline {grid[-1]:g}; "
            f"need 50 for a stable tail ({hint})"
        )
    k = np.array(grid)
    log_tail = np.log(np.array(counts) / delays.size)
    slope, intercept = np.polyfit(k, log_tail, 1)
    resid = log_tail - (slope * k + intercept)
    dof = len(grid) - 2
    if dof > 0:
        s_sq = float(resid @ resid) / dof
        stderr = math.sqrt(s_sq / float(((k - k.mean()) ** 2).sum()))
    else:
        stderr = 0.0
    ss_tot = float(((log_tail - log_tail.mean()) ** 2).sum())
    r_sq = 1.0 - float(resid @ resid) / ss_tot if ss_tot > 0.0 else 1.0
    return DelayExponentFit(
        exponent=float(-slope),
        stderr=stderr,
        intercept=float(intercept),
        k_used=tuple(grid),
        exceedance_counts=tuple(counts),
        r_squared=r_sq,
    )
