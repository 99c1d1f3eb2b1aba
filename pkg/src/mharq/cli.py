"""Command-line front end.

Every subcommand reads a JSON config file, validates it strictly (all
problems reported at once, unknown keys refused), and writes a table to
stdout or --out as CSV or JSON.  Outputs are deterministic: no timestamps,
sorted JSON keys, fixed float formatting, and a config hash in the header
so results can be traced back to their inputs byte for byte.

Exit codes: 0 success, 2 invalid config or arguments, 3 infeasible
(no stable window allocation, unstable queue), 4 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import sys
from typing import Any, Callable, Sequence

import numpy as np

from . import __version__
from .asymptotic import (
    fbl_dmdt_3node,
    fixed_dmdt_3node,
    fixed_optimal_windows,
    nnode_vbl_dmdt,
    sweep_curve,
    vbl_dmdt_3node,
)
from .finite_snr import (
    THRESHOLD_VARIANTS,
    FiniteSnrScenario,
    ServiceModel,
    UnstableQueueError,
    WindowInfeasibleError,
    deadline_exponent,
    mean_service_time,
    message_error,
    optimize_windows,
    ostbc_outage,
    per_hop_outage,
)
from .netsim import SimConfig, estimate_delay_exponent, run_network_sim
from .numerics import IntegrationError
from .tradeoff import (
    AntennaPair,
    ChannelAssumption,
    FblArq,
    FixedArq,
    Topology,
    VblArq,
    WindowAllocation,
    dmt,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_NUMERIC = 4


class ConfigError(ValueError):
    """Invalid config; collects every problem before failing."""

    def __init__(self, errors: Sequence[str]):
        super().__init__("\n".join(errors))
        self.errors = tuple(errors)


# ---------------------------------------------------------------------------
# config reading


class _Checker:
    """Walks one flat config dict, typing fields and tracking unknowns."""

    def __init__(self, cfg: dict, path: str = "config"):
        self.cfg = cfg
        self.path = path
        self.errors: list[str] = []
        self.seen: set[str] = set()

    def error(self, key: str, message: str) -> None:
        self.errors.append(f"{self.path}.{key}: {message}")

    def _convert(self, key: str, value: Any, kind: str) -> Any:
        if kind == "bool":
            if isinstance(value, bool):
                return value
            self.error(key, f"expected true/false, got {value!r}")
        elif kind == "int":
            if isinstance(value, bool):
                self.error(key, f"expected an integer, got {value!r}")
            elif isinstance(value, int):
                return value
            elif isinstance(value, float) and value == int(value):
                return int(value)
            else:
                self.error(key, f"expected an integer, got {value!r}")
        elif kind == "number":
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                self.error(key, f"expected a number, got {value!r}")
            elif isinstance(value, float) and not math.isfinite(value):
                self.error(key, f"expected a finite number, got {value!r}")
            else:
                return float(value)
        elif kind == "str":
            if isinstance(value, str):
                return value
            self.error(key, f"expected a string, got {value!r}")
        elif kind == "list[int]":
            if not isinstance(value, list) or not value:
                self.error(key, f"expected a non-empty list of integers, got {value!r}")
            elif any(isinstance(v, bool) or not isinstance(v, int) for v in value):
                self.error(key, f"expected integers, got {value!r}")
            else:
                return [int(v) for v in value]
        elif kind == "list[number]":
            if not isinstance(value, list) or not value:
                self.error(key, f"expected a non-empty list of numbers, got {value!r}")
            elif any(
                isinstance(v, bool)
                or not isinstance(v, (int, float))
                or not math.isfinite(float(v))
                for v in value
            ):
                self.error(key, f"expected finite numbers, got {value!r}")
            else:
                return [float(v) for v in value]
        elif kind == "dict":
            if isinstance(value, dict):
                return value
            self.error(key, f"expected an object, got {value!r}")
        else:  # pragma: no cover - schema author mistake
            raise AssertionError(f"unknown kind {kind}")
        return None

    def get(
        self,
        key: str,
        kind: str,
        *,
        required: bool = False,
        default: Any = None,
        choices: Sequence[Any] | None = None,
        check: Callable[[Any], str | None] | None = None,
    ) -> Any:
        self.seen.add(key)
        if key not in self.cfg:
            if required:
                self.error(key, "required field is missing")
            return default
        before = len(self.errors)
        value = self._convert(key, self.cfg[key], kind)
        if len(self.errors) > before:
            return default
        if choices is not None and value not in choices:
            self.error(key, f"must be one of {list(choices)}, got {value!r}")
            return default
        if check is not None:
            problem = check(value)
            if problem is not None:
                self.error(key, problem)
                return default
        return value

    def reject_unknown(self) -> None:
        for key in sorted(set(self.cfg) - self.seen):
            self.errors.append(f"{self.path}.{key}: unknown field")

    def done(self) -> None:
        self.reject_unknown()
        if self.errors:
            raise ConfigError(self.errors)


def _positive(value: float) -> str | None:
    return None if value > 0 else f"must be positive, got {value}"


def _nonnegative(value: float) -> str | None:
    return None if value >= 0 else f"must be nonnegative, got {value}"


def _topology(chk: _Checker) -> Topology | None:
    raw = chk.get(
        "topology",
        "list[int]",
        required=True,
        check=lambda v: None
        if len(v) >= 2 and all(1 <= a <= 8 for a in v)
        else "needs at least two nodes with 1..8 antennas each",
    )
    if raw is None:
        return None
    return Topology(tuple(raw))


def _snr(chk: _Checker) -> float | None:
    has_db = "snr_db" in chk.cfg
    has_linear = "snr_linear" in chk.cfg
    db = chk.get("snr_db", "number")
    linear = chk.get("snr_linear", "number", check=_positive)
    if has_db == has_linear:
        chk.errors.append(
            f"{chk.path}.snr_db / {chk.path}.snr_linear: "
            "exactly one of the two must be given"
        )
        return None
    if has_db:
        return None if db is None else 10.0 ** (db / 10.0)
    return linear


def _rate_grid(chk: _Checker, default_stop: float) -> list[float] | None:
    has_list = "rates" in chk.cfg
    has_spec = "rate_grid" in chk.cfg
    rates = chk.get(
        "rates",
        "list[number]",
        check=lambda v: None
        if v[0] >= 0 and all(b > a for a, b in zip(v, v[1:]))
        else "must be nonnegative and strictly increasing",
    )
    spec = chk.get("rate_grid", "dict")
    if has_list and has_spec:
        chk.errors.append(
            f"{chk.path}.rates / {chk.path}.rate_grid: give at most one of the two"
        )
        return None
    if has_list:
        return rates
    start, stop, step = 0.0, default_stop, 0.05
    if has_spec and spec is not None:
        sub = _Checker(spec, path=f"{chk.path}.rate_grid")
        start = sub.get("start", "number", default=0.0, check=_nonnegative)
        stop = sub.get("stop", "number", default=default_stop, check=_positive)
        step = sub.get("step", "number", default=0.05, check=_positive)
        sub.reject_unknown()
        chk.errors.extend(sub.errors)
        if sub.errors:
            return None
        if stop is not None and start is not None and stop <= start:
            chk.error("rate_grid", f"stop {stop} must exceed start {start}")
            return None
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [start + i * step for i in range(count)]


def _scenario_fields(chk: _Checker, *, queueing: bool) -> dict[str, Any]:
    out: dict[str, Any] = {}
    out["snr"] = _snr(chk)
    out["multiplexing_gain"] = chk.get(
        "multiplexing_gain", "number", required=True, check=_nonnegative
    )
    out["spatial_code_rate"] = chk.get(
        "spatial_code_rate",
        "number",
        default=1.0,
        check=lambda v: None if 0 < v <= 1 else f"must be in (0, 1], got {v}",
    )
    out["arrival_mean_blocks"] = chk.get(
        "arrival_mean_blocks", "number", required=queueing, check=_positive
    )
    out["deadline_blocks"] = chk.get(
        "deadline_blocks",
        "number",
        required=queueing,
        check=lambda v: None if v >= 1 else f"must be at least one block, got {v}",
    )
    return out


def _build_scenario(chk: _Checker, fields: dict[str, Any]) -> FiniteSnrScenario | None:
    if chk.errors:
        return None
    try:
        return FiniteSnrScenario(
            snr=fields["snr"],
            multiplexing_gain=fields["multiplexing_gain"],
            spatial_code_rate=fields["spatial_code_rate"],
            arrival_mean_blocks=fields["arrival_mean_blocks"],
            deadline_blocks=fields["deadline_blocks"],
        )
    except (TypeError, ValueError) as exc:
        chk.errors.append(f"{chk.path}: {exc}")
        return None


def _windows(chk: _Checker, topo: Topology | None, *, required: bool) -> list[int] | None:
    windows = chk.get(
        "windows",
        "list[int]",
        required=required,
        check=lambda v: None if all(w >= 1 for w in v) else "windows must be >= 1",
    )
    if windows is not None and topo is not None and len(windows) != topo.n_hops:
        chk.error(
            "windows", f"got {len(windows)} windows for {topo.n_hops} hops"
        )
        return None
    return windows


# ---------------------------------------------------------------------------
# output


def _format_cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isnan(value):
            return ""
        return f"{value:.9g}"
    return str(value)


def _json_safe(value: Any) -> Any:
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, tuple):
        return [_json_safe(v) for v in value]
    if isinstance(value, list):
        return [_json_safe(v) for v in value]
    if isinstance(value, dict):
        return {k: _json_safe(v) for k, v in value.items()}
    return value


def _config_hash(config: dict) -> str:
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _emit(
    stream: io.TextIOBase,
    fmt: str,
    command: str,
    config: dict,
    columns: Sequence[str],
    rows: Sequence[Sequence[Any]],
    meta_extra: dict[str, Any] | None = None,
    seed: int | None = None,
) -> None:
    digest = _config_hash(config)
    if fmt == "csv":
        header = f"# tool=mharq version={__version__} command={command} config_hash={digest}"
        if seed is not None:
            header += f" seed={seed}"
        stream.write(header + "\n")
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_format_cell(v) for v in row])
        return
    meta: dict[str, Any] = {
        "tool": "mharq",
        "version": __version__,
        "command": command,
        "config": config,
        "config_hash": digest,
    }
    if seed is not None:
        meta["seed"] = seed
    if meta_extra:
        meta.update(meta_extra)
    payload = {
        "meta": _json_safe(meta),
        "columns": list(columns),
        "rows": [
            {col: _json_safe(v) for col, v in zip(columns, row)} for row in rows
        ],
    }
    stream.write(json.dumps(payload, indent=2, sort_keys=True, allow_nan=False))
    stream.write("\n")


# ---------------------------------------------------------------------------
# subcommands


def _run_dmt(config: dict) -> tuple[list[str], list[list[Any]], dict]:
    chk = _Checker(config)
    antennas = chk.get(
        "antennas",
        "list[int]",
        required=True,
        check=lambda v: None
        if len(v) == 2 and all(1 <= a <= 8 for a in v)
        else "expected [m_tx, m_rx] with 1..8 antennas",
    )
    power = chk.get("power_exponent", "number", default=1.0, check=_positive)
    pair = AntennaPair(antennas[0], antennas[1]) if antennas else None
    grid = None
    if "multiplexing_gains" in chk.cfg:
        grid = chk.get(
            "multiplexing_gains",
            "list[number]",
            check=lambda v: None
            if v[0] >= 0 and all(b > a for a, b in zip(v, v[1:]))
            else "must be nonnegative and strictly increasing",
        )
    chk.done()
    if grid is None:
        grid = [float(k) for k in range(pair.min_dim + 1)]
    rows = [[r, float(dmt(pair, r, power_exponent=power))] for r in grid]
    return ["multiplexing_gain", "diversity_gain"], rows, {}


def _run_dmdt_asymptotic(config: dict) -> tuple[list[str], list[list[Any]], dict]:
    chk = _Checker(config)
    topo = _topology(chk)
    protocol = chk.get(
        "protocol", "str", required=True, choices=("fixed", "fbl", "vbl", "all")
    )
    channel_name = chk.get(
        "channel", "str", default="long_term", choices=("long_term", "short_term")
    )
    power = chk.get("power_exponent", "number", default=1.0, check=_positive)
    allow_zero = chk.get("allow_zero_rounds", "bool", default=False)
    total = chk.get("total_window", "int", check=_positive)
    windows = _windows(chk, topo, required=False)

    three_node = topo is not None and topo.n_nodes == 3
    if protocol in ("fbl", "vbl", "all") and total is None:
        chk.error("total_window", f"required for protocol {protocol!r}")
    if protocol == "fixed" and (windows is None) == (total is None):
        chk.errors.append(
            "config.windows / config.total_window: fixed protocol needs "
            "exactly one of explicit windows or a budget to split"
        )
    if protocol in ("fixed", "fbl", "all") and topo is not None and not three_node:
        chk.error("topology", f"protocol {protocol!r} needs exactly three nodes")
    if protocol == "vbl" and topo is not None and topo.n_nodes < 3:
        chk.error("topology", "protocol 'vbl' needs at least three nodes")
    if windows is not None and protocol != "fixed":
        chk.error("windows", f"not accepted for protocol {protocol!r}")
    if allow_zero and protocol not in ("fbl", "all"):
        chk.error("allow_zero_rounds", "only meaningful for the fbl protocol")

    max_rate = None
    if topo is not None:
        max_rate = min(topo.hop(i).min_dim for i in range(topo.n_hops))
    grid = _rate_grid(chk, float(max_rate if max_rate is not None else 1.0))
    chk.done()
    channel = ChannelAssumption(channel_name)

    if protocol == "all":
        columns = [
            "multiplexing_gain",
            "diversity_fixed",
            "diversity_fixed_equalized",
            "diversity_fbl",
            "diversity_vbl",
        ]
        rows = []
        for r in grid:
            best = fixed_optimal_windows(topo, total, r)
            fbl = fbl_dmdt_3node(
                topo,
                total,
                r,
                channel=channel,
                allow_zero_rounds=allow_zero,
                power_exponent=power,
            )
            vbl = vbl_dmdt_3node(topo, total, r, channel=channel, power_exponent=power)
            rows.append([r, best.value, best.split_value, fbl, vbl])
        return columns, rows, {}

    if protocol == "fixed" and windows is not None:
        rows = [
            [
                r,
                fixed_dmdt_3node(
                    topo, windows[0], windows[1], r, power_exponent=power
                ),
            ]
            for r in grid
        ]
        return ["multiplexing_gain", "diversity_gain"], rows, {}

    if protocol == "fixed":
        rows = [[r, fixed_optimal_windows(topo, total, r).value] for r in grid]
        return ["multiplexing_gain", "diversity_gain"], rows, {}

    arq = FblArq(total) if protocol == "fbl" else VblArq(total)
    curve = sweep_curve(
        arq,
        topo,
        channel,
        grid,
        allow_zero_rounds=allow_zero,
        power_exponent=power,
    )
    rows = [[r, d] for r, d in curve.samples]
    meta = {"gaps": list(curve.gaps)} if curve.gaps else {}
    return ["multiplexing_gain", "diversity_gain"], rows, meta


def _run_dmdt_finite(config: dict) -> tuple[list[str], list[list[Any]], dict]:
    chk = _Checker(config)
    topo = _topology(chk)
    variant = chk.get(
        "threshold_variant",
        "str",
        default="per_receiver",
        choices=THRESHOLD_VARIANTS,
    )
    clamp = chk.get("clamp_min_one", "bool", default=True)
    sweep = chk.get("sweep", "dict", required=True)
    axis = None
    values: list[float] | None = None
    if sweep is not None:
        sub = _Checker(sweep, path=f"{chk.path}.sweep")
        axis = sub.get(
            "axis",
            "str",
            required=True,
            choices=("multiplexing_gain", "deadline_blocks", "total_window"),
        )
        values = sub.get(
            "values",
            "list[number]",
            required=True,
            check=lambda v: None
            if all(b > a for a, b in zip(v, v[1:]))
            else "must be strictly increasing",
        )
        sub.reject_unknown()
        chk.errors.extend(sub.errors)

    queueing = True
    fields = {
        "snr": _snr(chk),
        "spatial_code_rate": chk.get(
            "spatial_code_rate",
            "number",
            default=1.0,
            check=lambda v: None if 0 < v <= 1 else f"must be in (0, 1], got {v}",
        ),
    }
    # the swept key must come from the sweep, not the top level
    if axis == "multiplexing_gain":
        if "multiplexing_gain" in chk.cfg:
            chk.error("multiplexing_gain", "already swept; remove the top-level value")
            chk.seen.add("multiplexing_gain")
        fields["multiplexing_gain"] = 0.0
    else:
        fields["multiplexing_gain"] = chk.get(
            "multiplexing_gain", "number", required=True, check=_nonnegative
        )
    if axis == "deadline_blocks":
        if "deadline_blocks" in chk.cfg:
            chk.error("deadline_blocks", "already swept; remove the top-level value")
            chk.seen.add("deadline_blocks")
        fields["deadline_blocks"] = 1.0
    else:
        fields["deadline_blocks"] = chk.get(
            "deadline_blocks",
            "number",
            required=queueing,
            check=lambda v: None if v >= 1 else f"must be at least one block, got {v}",
        )
    fields["arrival_mean_blocks"] = chk.get(
        "arrival_mean_blocks", "number", required=True, check=_positive
    )
    if axis == "total_window":
        if "windows" in chk.cfg:
            chk.error("windows", "already swept; remove the explicit windows")
            chk.seen.add("windows")
        windows = None
        if values is not None and any(v != int(v) or v < 1 for v in values):
            chk.errors.append(
                f"{chk.path}.sweep.values: window budgets must be whole blocks >= 1"
            )
    else:
        windows = _windows(chk, topo, required=True)
    if axis == "multiplexing_gain" and values is not None and any(v < 0 for v in values):
        chk.errors.append(f"{chk.path}.sweep.values: multiplexing gains must be >= 0")
    if axis == "deadline_blocks" and values is not None and any(v < 1 for v in values):
        chk.errors.append(
            f"{chk.path}.sweep.values: deadlines must be at least one block"
        )
    chk.done()

    unstable: list[float] = []
    if axis == "total_window":
        columns = ["total_window"]
        columns += [f"window_{i + 1}" for i in range(topo.n_hops)]
        columns += ["p_outage", "p_deadline", "p_total"]
        rows = []
        for v in values:
            scenario = FiniteSnrScenario(
                snr=fields["snr"],
                multiplexing_gain=fields["multiplexing_gain"],
                spatial_code_rate=fields["spatial_code_rate"],
                arrival_mean_blocks=fields["arrival_mean_blocks"],
                deadline_blocks=fields["deadline_blocks"],
            )
            try:
                opt = optimize_windows(
                    topo,
                    scenario,
                    budget=int(v),
                    threshold_variant=variant,
                    clamp_min_one=clamp,
                )
            except WindowInfeasibleError:
                unstable.append(v)
                rows.append(
                    [int(v)]
                    + [None] * topo.n_hops
                    + [None, None, None]
                )
                continue
            b = opt.breakdown
            rows.append(
                [int(v)]
                + list(opt.allocation.windows)
                + [b.p_outage, b.p_deadline, b.p_total]
            )
        meta = {"infeasible_points": unstable} if unstable else {}
        return columns, rows, meta

    columns = [axis, "p_outage", "p_deadline", "p_total"]
    rows = []
    for v in values:
        point = dict(fields)
        point[axis] = v
        scenario = FiniteSnrScenario(
            snr=point["snr"],
            multiplexing_gain=point["multiplexing_gain"],
            spatial_code_rate=point["spatial_code_rate"],
            arrival_mean_blocks=point["arrival_mean_blocks"],
            deadline_blocks=point["deadline_blocks"],
        )
        alloc = WindowAllocation(tuple(windows), sum(windows))
        try:
            breakdown = message_error(
                topo,
                alloc,
                scenario,
                threshold_variant=variant,
                clamp_min_one=clamp,
            )
            rows.append([v, breakdown.p_outage, breakdown.p_deadline, breakdown.p_total])
        except UnstableQueueError:
            unstable.append(v)
            out = ostbc_outage(topo, alloc, scenario, threshold_variant=variant)
            rows.append([v, out.union_bound, None, None])
    meta = {"unstable_points": unstable} if unstable else {}
    return columns, rows, meta


def _run_optimize(config: dict) -> tuple[list[str], list[list[Any]], dict]:
    chk = _Checker(config)
    topo = _topology(chk)
    variant = chk.get(
        "threshold_variant",
        "str",
        default="per_receiver",
        choices=THRESHOLD_VARIANTS,
    )
    clamp = chk.get("clamp_min_one", "bool", default=True)
    budget = chk.get("budget", "int", check=_positive)
    fields = _scenario_fields(chk, queueing=True)
    scenario = _build_scenario(chk, fields)
    chk.done()

    result = optimize_windows(
        topo,
        scenario,
        budget=budget,
        threshold_variant=variant,
        clamp_min_one=clamp,
    )
    n = topo.n_hops
    columns = [f"window_{i + 1}" for i in range(n)]
    columns += [f"mu_{i + 1}" for i in range(n)]
    columns += [
        "p_outage",
        "p_deadline",
        "p_total",
        "feasible",
        "constraint_conflict",
        "violations",
    ]
    ordered = sorted(
        result.table,
        key=lambda row: (
            not row.feasible,
            row.p_total if row.p_total is not None else math.inf,
            row.windows,
        ),
    )
    rows = []
    for cand in ordered:
        rows.append(
            list(cand.windows)
            + list(cand.means)
            + [
                cand.p_outage,
                cand.p_deadline,
                cand.p_total,
                cand.feasible,
                cand.constraint_conflict,
                "; ".join(cand.violations),
            ]
        )
    meta = {
        "best": {
            "windows": list(result.allocation.windows),
            "p_outage": result.breakdown.p_outage,
            "p_deadline": result.breakdown.p_deadline,
            "p_total": result.breakdown.p_total,
            "threshold_variant": result.threshold_variant,
            "clamp_min_one": result.clamp_min_one,
        }
    }
    return columns, rows, meta


def _sim_config(config: dict, seed_override: int | None) -> SimConfig:
    chk = _Checker(config)
    topo = _topology(chk)
    windows = _windows(chk, topo, required=True)
    channel_name = chk.get(
        "channel", "str", default="long_term", choices=("long_term", "short_term")
    )
    mode = chk.get(
        "service_mode", "str", default="physical", choices=("physical", "markovian")
    )
    code_model = chk.get(
        "code_model", "str", default="logdet", choices=("logdet", "ostbc")
    )
    messages = chk.get("message_count", "int", required=True, check=_positive)
    warmup = chk.get("warmup_count", "int", default=0, check=_nonnegative)
    seed = chk.get(
        "seed",
        "int",
        default=0,
        check=lambda v: None if 0 <= v < 2**64 else "must fit in 64 bits",
    )
    workers = chk.get("workers", "int", default=1, check=_positive)
    service_means = None
    if "service_means" in chk.cfg:
        service_means = chk.get(
            "service_means",
            "list[number]",
            check=lambda v: None if all(m > 0 for m in v) else "means must be positive",
        )
    fields = _scenario_fields(chk, queueing=True)
    scenario = _build_scenario(chk, fields)
    chk.done()
    if seed_override is not None:
        seed = seed_override
    try:
        return SimConfig(
            topology=topo,
            protocol=FixedArq(tuple(windows)),
            channel=ChannelAssumption(channel_name),
            scenario=scenario,
            message_count=messages,
            warmup_count=warmup,
            seed=seed,
            service_mode=mode,
            code_model=code_model,
            service_means=tuple(service_means) if service_means is not None else None,
            workers=workers,
        )
    except ValueError as exc:
        raise ConfigError([f"config: {exc}"]) from exc


def _run_simulate(
    config: dict, seed_override: int | None
) -> tuple[list[str], list[list[Any]], dict, int]:
    sim_cfg = _sim_config(config, seed_override)
    result = run_network_sim(sim_cfg)
    rows: list[list[Any]] = [
        ["analyzed", float(result.analyzed)],
        ["delivered", float(result.delivered)],
        ["outage_drops", float(result.outage_drops)],
        ["deadline_drops", float(result.deadline_drops)],
        ["p_outage", result.p_outage],
        ["p_deadline", result.p_deadline],
        ["p_total", result.p_total],
    ]
    for i, drops in enumerate(result.per_hop_outage_drops):
        rows.append([f"outage_drops_hop_{i + 1}", float(drops)])
    for i, att in enumerate(result.per_hop_attempts):
        rows.append([f"attempts_hop_{i + 1}", float(att)])
    if result.delays.size:
        rows.append(["mean_delay", float(result.delays.mean())])
        rows.append(["max_delay", float(result.delays.max())])
    return ["metric", "value"], rows, {}, sim_cfg.seed


def _run_validate(
    config: dict, seed_override: int | None
) -> tuple[list[str], list[list[Any]], dict, int]:
    sim_cfg = _sim_config(config, seed_override)
    result = run_network_sim(sim_cfg)
    topo = sim_cfg.topology
    scenario = sim_cfg.scenario
    alloc = WindowAllocation(sim_cfg.protocol.windows, sim_cfg.protocol.total)
    arrival, _ = scenario.require_queueing()

    checks: list[tuple[str, float, float, int]] = []
    if sim_cfg.service_mode == "physical":
        if sim_cfg.channel is not ChannelAssumption.LONG_TERM_STATIC:
            raise ConfigError(
                [
                    "config.channel: the analytic outage references assume "
                    "long_term fading; simulate short_term without validate"
                ]
            )
        if sim_cfg.code_model == "ostbc":
            per_hop_ana: tuple[float, ...] = ostbc_outage(topo, alloc, scenario).per_hop
        else:
            per_hop_ana = tuple(
                per_hop_outage(topo.hop(i), float(w), scenario, code_model="general")
                for i, w in enumerate(alloc.windows)
            )
        total_ana = 1.0 - math.prod(1.0 - p for p in per_hop_ana)
        for i in range(topo.n_hops):
            attempts = result.per_hop_attempts[i]
            emp = (
                result.per_hop_outage_drops[i] / attempts if attempts else math.nan
            )
            checks.append((f"outage_hop_{i + 1}", per_hop_ana[i], emp, attempts))
        checks.append(
            ("outage_total", total_ana, result.p_outage, result.analyzed)
        )
    rows = []
    for name, ana, emp, n in checks:
        if n > 0 and 0.0 < ana < 1.0:
            sigma = math.sqrt(ana * (1.0 - ana) / n)
        else:
            sigma = 0.0
        if sigma > 0.0:
            z = (emp - ana) / sigma
        else:
            z = 0.0 if emp == ana else math.inf
        verdict = "ok" if abs(z) <= 4.0 else "mismatch"
        rows.append([name, ana, emp, n, sigma, z, verdict])

    if sim_cfg.service_mode == "markovian":
        # the analytic tail and the simulated sojourn share an exponent but
        # not a prefactor, so the check compares decay rates
        means = sim_cfg.service_means
        if means is None:
            means = tuple(
                mean_service_time(topo.hop(i), sim_cfg.protocol.windows[i], scenario)
                for i in range(topo.n_hops)
            )
        theta = deadline_exponent(ServiceModel(means, clamp_min_one=False), arrival)
        delays = np.sort(result.delays)
        if delays.size < 60:
            raise ConfigError(
                ["config.message_count: too few delays to fit the tail exponent"]
            )
        lo = float(np.quantile(delays, 0.9))
        hi = float(delays[-100]) if delays.size >= 100 else float(delays[-60])
        if hi <= lo:
            raise ConfigError(
                ["config.message_count: delay tail too thin to fit an exponent"]
            )
        fit = estimate_delay_exponent(delays, list(np.linspace(lo, hi, 8)))
        z = (fit.exponent - theta) / fit.stderr if fit.stderr > 0 else math.inf
        # consecutive sojourns are correlated, so the fit stderr understates
        # the real spread; the verdict uses a relative band instead
        verdict = "ok" if abs(fit.exponent - theta) <= 0.15 * theta else "mismatch"
        rows.append(
            ["delay_exponent", theta, fit.exponent, delays.size, fit.stderr, z, verdict]
        )

    columns = ["check", "analytic", "empirical", "samples", "sigma", "z_score", "verdict"]
    meta = {"note": "z compares the empirical rate against the analytic model"}
    return columns, rows, meta, sim_cfg.seed


# ---------------------------------------------------------------------------
# entry point


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mharq",
        description="diversity-multiplexing-delay analysis for multihop ARQ relays",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("dmt", "single-hop diversity against multiplexing gain"),
        ("dmdt-asymptotic", "high-SNR tradeoff curves for a relay chain"),
        ("dmdt-finite", "finite-SNR error probabilities along one axis"),
        ("optimize-arq", "best window split of a deadline budget"),
        ("simulate", "Monte Carlo run of the fading and queueing chain"),
        ("validate", "hold simulator rates against the analytic numbers"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="path to a JSON config file")
        p.add_argument("--out", default=None, help="output path (default stdout)")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument(
            "--seed",
            type=int,
            default=None,
            help="override the config seed (simulate and validate only)",
        )
    return parser


def _load_config(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            loaded = json.load(fh)
    except OSError as exc:
        raise ConfigError([f"cannot read config {path}: {exc}"]) from exc
    except json.JSONDecodeError as exc:
        raise ConfigError([f"config {path} is not valid JSON: {exc}"]) from exc
    if not isinstance(loaded, dict):
        raise ConfigError([f"config {path} must be a JSON object"])
    return loaded


def main(argv: Sequence[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.seed is not None and not 0 <= args.seed < 2**64:
        print("mharq: --seed must fit in 64 bits", file=sys.stderr)
        return EXIT_CONFIG
    try:
        config = _load_config(args.config)
        seed: int | None = None
        if args.command == "dmt":
            columns, rows, meta = _run_dmt(config)
        elif args.command == "dmdt-asymptotic":
            columns, rows, meta = _run_dmdt_asymptotic(config)
        elif args.command == "dmdt-finite":
            columns, rows, meta = _run_dmdt_finite(config)
        elif args.command == "optimize-arq":
            columns, rows, meta = _run_optimize(config)
        elif args.command == "simulate":
            columns, rows, meta, seed = _run_simulate(config, args.seed)
        else:
            columns, rows, meta, seed = _run_validate(config, args.seed)
    except ConfigError as exc:
        for line in exc.errors:
            print(f"mharq: {line}", file=sys.stderr)
        return EXIT_CONFIG
    except (WindowInfeasibleError, UnstableQueueError) as exc:
        print(f"mharq: infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except IntegrationError as exc:
        print(f"mharq: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        # inputs that pass the schema but fail a library precondition
        print(f"mharq: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    buffer = io.StringIO()
    _emit(buffer, args.format, args.command, config, columns, rows, meta, seed)
    text = buffer.getvalue()
    if args.out is None:
        sys.stdout.write(text)
    else:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
