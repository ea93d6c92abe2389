"""Channel simulation and scenario replay.

simulate_block produces one block of detection timestamps from a pattern
and a channel description; run_scenario replays a sequence of blocks with
step events (fiber length changes, link interruptions) and tracks how the
receiver's accumulated correction follows the true offset; and
monte_carlo_rates measures empirical accept statistics with confidence
intervals.
"""

from __future__ import annotations

import dataclasses
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .analytics import DEFAULT_FIBER_SPEED_MPS, qubit_budget_penalty
from .errors import CorruptFileError
from .pattern import Pattern, generate_pattern
from .recovery import (
    DetectionSet,
    RecoveryOutcome,
    RecoveryParams,
    RecoveryStatus,
    find_offset,
)


@dataclass(frozen=True)
class ChannelModel:
    """Per-block channel and hardware description.

    detection_prob: probability a transmitted pulse yields a detection.
    qber: probability a detection lands in the wrong bin of its pair.
    dark_rate_hz: dark counts per second, uniform over the block window.
    jitter_ps: Gaussian timing jitter sigma applied to signal detections.
    true_offset_ps: clock offset added to every timestamp.
    drift_ppm: residual clock drift rate, used when replaying interruptions.
    tdc_tick_ps: timestamp quantization step.
    dead_time_ps: minimum spacing between kept detections (0 disables).
    """

    detection_prob: float = 0.015
    qber: float = 0.0
    dark_rate_hz: float = 0.0
    jitter_ps: float = 0.0
    true_offset_ps: int = 0
    drift_ppm: float = 0.0
    tdc_tick_ps: int = 100
    dead_time_ps: int = 0

    def __post_init__(self):
        if not 0.0 <= float(self.detection_prob) <= 1.0:
            raise ValueError("detection_prob must lie in [0, 1]")
        if not 0.0 <= float(self.qber) <= 0.5:
            raise ValueError("qber must lie in [0, 0.5]")
        if float(self.dark_rate_hz) < 0:
            raise ValueError("dark_rate_hz must be >= 0")
        if float(self.jitter_ps) < 0:
            raise ValueError("jitter_ps must be >= 0")
        if int(self.tdc_tick_ps) < 1:
            raise ValueError("tdc_tick_ps must be >= 1")
        if int(self.dead_time_ps) < 0:
            raise ValueError("dead_time_ps must be >= 0")
        object.__setattr__(self, "true_offset_ps", int(self.true_offset_ps))
        object.__setattr__(self, "tdc_tick_ps", int(self.tdc_tick_ps))
        object.__setattr__(self, "dead_time_ps", int(self.dead_time_ps))


@dataclass(frozen=True)
class SetFiberKm:
    """Event: the link fiber length becomes km (absolute, not a delta)."""

    km: float


@dataclass(frozen=True)
class Interrupt:
    """Event: the link was down for some seconds while clocks free-ran."""

    seconds: float


def _apply_dead_time(ts: np.ndarray, dead_time_ps: int) -> np.ndarray:
    kept = []
    last = None
    for v in ts.tolist():
        if last is None or v - last >= dead_time_ps:
            kept.append(v)
            last = v
    return np.asarray(kept, dtype=np.int64)


def simulate_block(pattern: Pattern, channel: ChannelModel, tau_ps: int, rng_seed) -> DetectionSet:
    """Generate one block of detection timestamps.

    Signal detections sit at pulse bin centers, optionally error-flipped to
    the other bin of their pair and jittered; dark counts are uniform over
    the block window.  Everything is shifted by the true offset, quantized
    to the TDC tick, clamped into [0, n_r * tau), and sorted.  The same
    (pattern, channel, tau_ps, rng_seed) always yields the same block.
    """
    tau_ps = int(tau_ps)
    if tau_ps <= 0:
        raise ValueError("tau_ps must be a positive integer")
    ss = rng_seed if isinstance(rng_seed, np.random.SeedSequence) else np.random.SeedSequence(rng_seed)
    rng_emit, rng_err, rng_dark, rng_jit = (np.random.default_rng(c) for c in ss.spawn(4))

    n_r = pattern.len_timebins
    window_ps = n_r * tau_ps

    pulses = pattern.pulse_positions()
    keep = rng_emit.random(pulses.size) < channel.detection_prob
    bins = pulses[keep]
    if channel.qber > 0.0 and bins.size:
        flips = rng_err.random(bins.size) < channel.qber
        bins = np.where(flips, bins ^ np.int64(1), bins)
    ts_signal = bins.astype(np.float64) * tau_ps + tau_ps * 0.5
    if channel.jitter_ps > 0.0 and ts_signal.size:
        ts_signal = ts_signal + rng_jit.normal(0.0, channel.jitter_ps, ts_signal.size)

    lam = channel.dark_rate_hz * window_ps * 1e-12
    n_dark = int(rng_dark.poisson(lam)) if lam > 0 else 0
    ts_dark = rng_dark.uniform(0.0, float(window_ps), n_dark)

    ts = np.concatenate([ts_signal, ts_dark]) + float(channel.true_offset_ps)
    tick = channel.tdc_tick_ps
    idx = np.floor(ts / tick + 0.5)
    idx_max = math.ceil(window_ps / tick) - 1
    idx = np.clip(idx, 0, idx_max)
    out = (idx.astype(np.int64)) * tick
    out.sort()
    if channel.dead_time_ps > 0 and out.size:
        out = _apply_dead_time(out, channel.dead_time_ps)
    return DetectionSet(out)


_EVENT_TYPES = {"set_fiber_km": SetFiberKm, "interrupt": Interrupt}


@dataclass(frozen=True)
class ScenarioConfig:
    """Full description of a replayable scenario."""

    n_q: int
    n_r: int
    pattern_seed: int
    params: RecoveryParams
    channel: ChannelModel
    n_blocks: int
    events: tuple = ()
    rng_seed: int = 0
    fiber_speed_mps: float = DEFAULT_FIBER_SPEED_MPS
    initial_fiber_km: float = 0.0

    def __post_init__(self):
        if int(self.n_q) < 0 or int(self.n_r) < 2:
            raise ValueError("n_q must be >= 0 and n_r >= 2")
        if int(self.n_blocks) < 1:
            raise ValueError("n_blocks must be >= 1")
        for block, ev in self.events:
            if not 0 <= int(block) < int(self.n_blocks):
                raise ValueError(f"event block index {block} outside [0, n_blocks)")
            if not isinstance(ev, (SetFiberKm, Interrupt)):
                raise ValueError(f"unsupported event type {type(ev).__name__}")
        object.__setattr__(self, "events", tuple(self.events))

    def to_dict(self) -> dict:
        events = []
        for block, ev in self.events:
            if isinstance(ev, SetFiberKm):
                events.append({"block": int(block), "type": "set_fiber_km", "km": ev.km})
            else:
                events.append({"block": int(block), "type": "interrupt", "seconds": ev.seconds})
        return {
            "n_q": int(self.n_q),
            "n_r": int(self.n_r),
            "pattern_seed": int(self.pattern_seed),
            "tau_ps": self.params.tau_ps,
            "threshold_t": self.params.threshold_t,
            "delta_max": self.params.delta_max,
            "nd_max": self.params.nd_max,
            "channel": dataclasses.asdict(self.channel),
            "n_blocks": int(self.n_blocks),
            "events": events,
            "rng_seed": int(self.rng_seed),
            "fiber_speed_mps": float(self.fiber_speed_mps),
            "initial_fiber_km": float(self.initial_fiber_km),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        required = {"n_q", "n_r", "pattern_seed", "tau_ps", "threshold_t",
                    "delta_max", "nd_max", "n_blocks", "rng_seed"}
        optional = {"channel", "events", "fiber_speed_mps", "initial_fiber_km"}
        unknown = set(data) - required - optional
        if unknown:
            raise ValueError(f"unknown scenario keys: {sorted(unknown)}")
        missing = required - set(data)
        if missing:
            raise ValueError(f"missing scenario keys: {sorted(missing)}")
        params = RecoveryParams(
            tau_ps=data["tau_ps"],
            threshold_t=data["threshold_t"],
            delta_max=data["delta_max"],
            nd_max=data["nd_max"],
        )
        channel = ChannelModel(**data.get("channel", {}))
        events = []
        for entry in data.get("events", []):
            entry = dict(entry)
            block = entry.pop("block")
            kind = entry.pop("type")
            if kind not in _EVENT_TYPES:
                raise ValueError(f"unknown event type {kind!r}")
            events.append((int(block), _EVENT_TYPES[kind](**entry)))
        return cls(
            n_q=data["n_q"],
            n_r=data["n_r"],
            pattern_seed=data["pattern_seed"],
            params=params,
            channel=channel,
            n_blocks=data["n_blocks"],
            events=tuple(events),
            rng_seed=data["rng_seed"],
            fiber_speed_mps=data.get("fiber_speed_mps", DEFAULT_FIBER_SPEED_MPS),
            initial_fiber_km=data.get("initial_fiber_km", 0.0),
        )

    def to_json(self, path: str | Path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")

    @classmethod
    def from_json(cls, path: str | Path) -> "ScenarioConfig":
        with open(path) as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise CorruptFileError(f"scenario file is not valid JSON: {exc}") from exc
        try:
            return cls.from_dict(data)
        except (ValueError, TypeError, KeyError) as exc:
            raise CorruptFileError(f"bad scenario config: {exc}") from exc


@dataclass(frozen=True)
class BlockRecord:
    """One replayed block: what was pending and what recovery did."""

    block: int
    injected_ps: int
    outcome: RecoveryOutcome
    eval_us: float
    accumulated_ps: int
    classification: str


@dataclass
class ScenarioReport:
    """Replay result: per-block records plus aggregate counts."""

    blocks: list[BlockRecord] = field(default_factory=list)
    n_correct: int = 0
    n_wrong: int = 0
    n_missed: int = 0
    final_accumulated_ps: int = 0
    duty_penalty: float = 0.0

    def accumulated_series(self) -> list[int]:
        return [rec.accumulated_ps for rec in self.blocks]

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w") as fh:
            fh.write("block,injected_ps,status,delta_bins,delta_total_ps,tested,corr_abs,eval_us\n")
            for rec in self.blocks:
                out = rec.outcome
                fh.write(
                    f"{rec.block},{rec.injected_ps},{out.status.value},{out.delta_bins},"
                    f"{out.delta_total_ps},{out.tested_count},{out.correlation_abs},"
                    f"{rec.eval_us:.3f}\n"
                )

    def summary_dict(self) -> dict:
        return {
            "n_blocks": len(self.blocks),
            "correct": self.n_correct,
            "wrong": self.n_wrong,
            "missed": self.n_missed,
            "final_accumulated_ps": self.final_accumulated_ps,
            "duty_penalty": self.duty_penalty,
        }

    def write_summary_json(self, path: str | Path) -> None:
        with open(path, "w") as fh:
            json.dump(self.summary_dict(), fh, indent=2)
            fh.write("\n")


def _fiber_delay_ps(km: float, fiber_speed_mps: float) -> float:
    return km * 1e15 / fiber_speed_mps


def run_scenario(config: ScenarioConfig) -> ScenarioReport:
    """Replay a scenario block by block.

    Before each block, pending events update the true offset: a fiber
    change adds the delay difference to the previous length, an
    interruption adds drift_ppm worth of free-running drift.  The block is
    then simulated with the residual (true minus accumulated correction)
    as its offset, recovery runs, and an accepted result is folded into
    the accumulated correction.  A block counts as correct when it leaves
    the residual within half a timebin, wrong when an accepted offset is
    off by more than that, and missed when nothing was accepted while a
    real residual was pending.
    """
    pattern = generate_pattern(config.pattern_seed, config.n_r)
    block_seeds = np.random.SeedSequence(config.rng_seed).spawn(config.n_blocks)
    events_at: dict[int, list] = {}
    for block, ev in config.events:
        events_at.setdefault(int(block), []).append(ev)

    tau = config.params.tau_ps
    half_bin = tau / 2.0
    true_ps = float(config.channel.true_offset_ps)
    fiber_km = float(config.initial_fiber_km)
    bob_ps = 0
    report = ScenarioReport(duty_penalty=qubit_budget_penalty(config.n_q, config.n_r))

    for i in range(config.n_blocks):
        for ev in events_at.get(i, ()):
            if isinstance(ev, SetFiberKm):
                true_ps += _fiber_delay_ps(ev.km - fiber_km, config.fiber_speed_mps)
                fiber_km = float(ev.km)
            else:
                true_ps += config.channel.drift_ppm * ev.seconds * 1e6
        residual = int(round(true_ps)) - bob_ps
        block_channel = dataclasses.replace(config.channel, true_offset_ps=residual)
        detections = simulate_block(pattern, block_channel, tau, block_seeds[i])
        t0 = time.perf_counter_ns()
        outcome = find_offset(pattern, detections, config.params)
        eval_us = (time.perf_counter_ns() - t0) / 1e3

        if outcome.status is RecoveryStatus.ACCEPTED:
            bob_ps += outcome.delta_total_ps
            good = abs(outcome.delta_total_ps - residual) <= half_bin
            classification = "correct" if good else "wrong"
        else:
            classification = "correct" if abs(residual) <= half_bin else "missed"
        if classification == "correct":
            report.n_correct += 1
        elif classification == "wrong":
            report.n_wrong += 1
        else:
            report.n_missed += 1
        report.blocks.append(
            BlockRecord(
                block=i,
                injected_ps=residual,
                outcome=outcome,
                eval_us=eval_us,
                accumulated_ps=bob_ps,
                classification=classification,
            )
        )
    report.final_accumulated_ps = bob_ps
    return report


def wilson_interval(successes: int, trials: int, z: float = 1.959963984540054) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion (default 95%)."""
    if trials <= 0:
        raise ValueError("trials must be positive")
    if not 0 <= successes <= trials:
        raise ValueError("successes must lie in [0, trials]")
    p_hat = successes / trials
    z2 = z * z
    denom = 1.0 + z2 / trials
    center = (p_hat + z2 / (2 * trials)) / denom
    half = z * math.sqrt(p_hat * (1 - p_hat) / trials + z2 / (4 * trials * trials)) / denom
    # the exact bound is 0 (resp. 1) at the extremes; avoid float residue
    lo = 0.0 if successes == 0 else max(0.0, center - half)
    hi = 1.0 if successes == trials else min(1.0, center + half)
    return lo, hi


@dataclass(frozen=True)
class McResult:
    """Empirical accept statistics over repeated independent blocks."""

    trials: int
    n_correct: int
    n_wrong: int
    correct_rate: float
    wrong_rate: float
    correct_ci: tuple[float, float]
    wrong_ci: tuple[float, float]
    mean_tested: float


def monte_carlo_rates(
    pattern: Pattern,
    channel: ChannelModel,
    params: RecoveryParams,
    trials: int,
    rng_seed,
    workers: int = 1,
) -> McResult:
    """Estimate correct-accept and false-accept rates over many blocks.

    A trial is a correct accept when the recovered total offset matches
    the channel's true offset to within half a timebin, and a false accept
    when something else was accepted.  Rates come with 95% Wilson
    intervals.  workers > 1 splits trials across threads; results are
    identical to the sequential run because every trial has its own
    seed substream.
    """
    trials = int(trials)
    if trials < 1:
        raise ValueError("trials must be >= 1")
    seeds = np.random.SeedSequence(rng_seed).spawn(trials)
    injected = channel.true_offset_ps
    half_bin = params.tau_ps / 2.0
    correct = np.zeros(trials, dtype=bool)
    wrong = np.zeros(trials, dtype=bool)
    tested = np.zeros(trials, dtype=np.int64)

    def run_range(lo: int, hi: int) -> None:
        for k in range(lo, hi):
            detections = simulate_block(pattern, channel, params.tau_ps, seeds[k])
            outcome = find_offset(pattern, detections, params)
            tested[k] = outcome.tested_count
            if outcome.status is RecoveryStatus.ACCEPTED:
                if abs(outcome.delta_total_ps - injected) <= half_bin:
                    correct[k] = True
                else:
                    wrong[k] = True

    workers = max(1, int(workers))
    if workers == 1:
        run_range(0, trials)
    else:
        from concurrent.futures import ThreadPoolExecutor

        bounds = np.linspace(0, trials, workers + 1).astype(int)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(run_range, int(bounds[w]), int(bounds[w + 1]))
                for w in range(workers)
            ]
            for fut in futures:
                fut.result()

    n_correct = int(correct.sum())
    n_wrong = int(wrong.sum())
    return McResult(
        trials=trials,
        n_correct=n_correct,
        n_wrong=n_wrong,
        correct_rate=n_correct / trials,
        wrong_rate=n_wrong / trials,
        correct_ci=wilson_interval(n_correct, trials),
        wrong_ci=wilson_interval(n_wrong, trials),
        mean_tested=float(tested.mean()),
    )
