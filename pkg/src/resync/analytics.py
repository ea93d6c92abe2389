"""Analytic success models and parameter planning.

Everything here treats the correlation test as a binomial counting
experiment: at the true offset, a detection lands on a pattern pulse with
probability 1 - Q; at a wrong offset with probability 1/2.  The normal
approximations below turn acceptance into Gaussian tail probabilities,
and an exact binomial tail is provided as the reference oracle for
validating them.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import erfc as _erfc_arr

from .errors import InfeasibleThresholdError, InvalidScheduleError, NoFeasibleSolutionError

SECONDS_PER_DAY = 86_400
DEFAULT_TAU_PS = 800
DEFAULT_FIBER_SPEED_MPS = 2.04e8  # group velocity in standard single-mode fiber

_SQRT2 = math.sqrt(2.0)


def phi(x: float) -> float:
    """Standard normal CDF."""
    return 0.5 * math.erfc(-float(x) / _SQRT2)


def _phi_arr(x: np.ndarray) -> np.ndarray:
    return 0.5 * _erfc_arr(-np.asarray(x, dtype=np.float64) / _SQRT2)


def _validate_nd_t(nd: int, t: float) -> tuple[int, float]:
    nd = int(nd)
    t = float(t)
    if nd < 1:
        raise ValueError("nd must be >= 1")
    if not 0.0 <= t < 1.0:
        raise ValueError("threshold t must satisfy 0 <= t < 1")
    return nd, t


def p_no_wrong_single(nd: int, t: float) -> float:
    """Probability one wrong offset fails the test: Phi(t * sqrt(nd))."""
    nd, t = _validate_nd_t(nd, t)
    return phi(t * math.sqrt(nd))


def p_no_wrong_many(nd: int, t: float, n_offsets: int) -> float:
    """Probability that none of n_offsets wrong offsets passes the test.

    Evaluated in log space so that astronomically small single-offset
    tails still produce a meaningful result for n_offsets in the 1e11
    range rather than collapsing to exactly 1.0 prematurely or to 0.0.
    """
    nd, t = _validate_nd_t(nd, t)
    n_offsets = int(n_offsets)
    if n_offsets < 0:
        raise ValueError("n_offsets must be >= 0")
    if n_offsets == 0:
        return 1.0
    tail = 0.5 * math.erfc(t * math.sqrt(nd) / _SQRT2)
    if tail >= 1.0:
        return 0.0
    return math.exp(n_offsets * math.log1p(-tail))


def offsets_per_day(delta_max: int, interval_s: float) -> int:
    """Wrong-offset evaluations per day: 2*delta_max per attempt, one
    attempt every interval_s seconds."""
    delta_max = int(delta_max)
    interval_s = float(interval_s)
    if delta_max < 0:
        raise ValueError("delta_max must be >= 0")
    if interval_s <= 0:
        raise ValueError("interval_s must be positive")
    return 2 * delta_max * int(SECONDS_PER_DAY // interval_s)


def p_correct(nd: int, t: float, qber: float) -> float:
    """Normal-approximation probability that the true offset passes the test.

    Exactly 1.0 for a noiseless channel.  Raises InfeasibleThresholdError
    when t >= 1 - 2*qber, where the threshold sits at or above the
    expected correlation and the approximation is meaningless.
    """
    nd, t = _validate_nd_t(nd, t)
    qber = float(qber)
    if not 0.0 <= qber < 0.5:
        raise ValueError("qber must satisfy 0 <= qber < 0.5")
    if qber == 0.0:
        return 1.0
    if t >= 1.0 - 2.0 * qber:
        raise InfeasibleThresholdError(
            f"threshold t={t} is unreachable at qber={qber}: need t < {1.0 - 2.0 * qber}"
        )
    return phi(math.sqrt(nd) * (1.0 - t - 2.0 * qber) / math.sqrt(4.0 * qber * (1.0 - qber)))


def exact_accept_prob(nd: int, t: float, p: float) -> float:
    """Exact binomial tail P(N > nd*(1+t)/2) for N ~ Binomial(nd, p).

    This is the reference oracle for the normal approximations: with
    p = 1 - qber it gives the exact probability that the true offset is
    accepted, and with p = 1/2 the exact per-wrong-offset accept rate.
    Computed as a log-space tail sum, no external special functions.
    """
    nd, t = _validate_nd_t(nd, t)
    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    cut = nd * (1.0 + t) / 2.0
    cut = round(cut, 9)  # clear float noise so integer cuts stay integers
    kmin = int(math.floor(cut)) + 1 if cut == math.floor(cut) else int(math.ceil(cut))
    if kmin > nd:
        return 0.0
    if kmin <= 0:
        return 1.0
    if p == 0.0:
        return 0.0
    if p == 1.0:
        return 1.0
    log_p = math.log(p)
    log_q = math.log1p(-p)
    lg_nd = math.lgamma(nd + 1)
    total = 0.0
    for k in range(kmin, nd + 1):
        log_term = (
            lg_nd
            - math.lgamma(k + 1)
            - math.lgamma(nd - k + 1)
            + k * log_p
            + (nd - k) * log_q
        )
        total += math.exp(log_term)
    return min(total, 1.0)


def fiber_km_to_timebins(length_km: float, tau_ps: int = DEFAULT_TAU_PS,
                         fiber_speed_mps: float = DEFAULT_FIBER_SPEED_MPS) -> int:
    """Smallest timebin count covering the one-way delay of length_km of fiber."""
    length_km = float(length_km)
    if length_km < 0:
        raise ValueError("length_km must be >= 0")
    if int(tau_ps) <= 0 or float(fiber_speed_mps) <= 0:
        raise ValueError("tau_ps and fiber_speed_mps must be positive")
    bins = length_km * 1e15 / (float(fiber_speed_mps) * int(tau_ps))
    return int(math.ceil(bins * (1.0 - 1e-12)))


def timebins_to_fiber_km(bins: int, tau_ps: int = DEFAULT_TAU_PS,
                         fiber_speed_mps: float = DEFAULT_FIBER_SPEED_MPS) -> float:
    """Fiber length whose one-way delay equals the given timebin count."""
    return int(bins) * int(tau_ps) * float(fiber_speed_mps) * 1e-15


def skr_penalty(nd: int, detection_rate_hz: float, interval_s: float) -> float:
    """Fraction of link time spent collecting resync detections.

    Raises InvalidScheduleError when one block of nd detections takes
    longer than the repetition interval itself.
    """
    nd = int(nd)
    detection_rate_hz = float(detection_rate_hz)
    interval_s = float(interval_s)
    if nd < 1:
        raise ValueError("nd must be >= 1")
    if detection_rate_hz <= 0:
        raise ValueError("detection_rate_hz must be positive")
    if interval_s <= 0:
        raise ValueError("interval_s must be positive")
    block_s = nd / detection_rate_hz
    if block_s > interval_s:
        raise InvalidScheduleError(
            f"a block of {nd} detections needs {block_s:.6g} s, which exceeds "
            f"the {interval_s:.6g} s interval"
        )
    return block_s / interval_s


def penalty_to_db(fraction: float) -> float:
    """Rate penalty fraction expressed in dB: -10*log10(1 - fraction)."""
    fraction = float(fraction)
    if not 0.0 <= fraction < 1.0:
        raise ValueError("fraction must lie in [0, 1)")
    return -10.0 * math.log10(1.0 - fraction)


def qubit_budget_penalty(n_q: int, n_r: int) -> float:
    """Fraction of the timebin budget spent on resync: n_r / (n_q + n_r)."""
    n_q = int(n_q)
    n_r = int(n_r)
    if n_q < 0 or n_r < 0 or n_q + n_r == 0:
        raise ValueError("n_q and n_r must be nonnegative and not both zero")
    return n_r / (n_q + n_r)


@dataclass(frozen=True)
class PlanResult:
    """Planner output: the cheapest feasible operating point."""

    nd_star: int
    t_star: float
    p_correct: float
    p_no_wrong_day: float
    skr_penalty: float | None


@dataclass(frozen=True)
class GridCell:
    """One evaluated (nd, t) cell of a feasibility grid.

    p_correct holds the raw normal-model value even where the threshold
    is unreachable (t >= 1 - 2*qber); such cells are simply infeasible.
    """

    nd: int
    t: float
    p_correct: float
    p_no_wrong_day: float
    feasible: bool


def _row_metrics(nd: int, t_values: np.ndarray, qber_max: float, n_offsets_day: int):
    """Vectorized (p_correct, p_no_wrong_day, threshold_ok) for one nd."""
    sqrt_nd = math.sqrt(nd)
    if qber_max == 0.0:
        p_corr = np.ones_like(t_values)
        ok = np.ones_like(t_values, dtype=bool)
    else:
        denom = math.sqrt(4.0 * qber_max * (1.0 - qber_max))
        p_corr = _phi_arr(sqrt_nd * (1.0 - t_values - 2.0 * qber_max) / denom)
        ok = t_values < 1.0 - 2.0 * qber_max
    tail = 0.5 * _erfc_arr(t_values * sqrt_nd / _SQRT2)
    with np.errstate(divide="ignore"):
        log_keep = np.log1p(-np.minimum(tail, 1.0))
    p_day = np.exp(n_offsets_day * log_keep)
    return p_corr, p_day, ok


def optimize_params(
    qber_max: float,
    delta_max: int,
    interval_s: float,
    p_day_min: float,
    p_correct_min: float,
    detection_rate_hz: float | None = None,
    nd_range: tuple[int, int] = (8, 5000),
    t_min: float | None = None,
    t_max: float | None = None,
    t_step: float = 1e-3,
) -> PlanResult:
    """Smallest detection budget meeting both reliability constraints.

    Scans nd ascending over nd_range and a threshold grid of pitch t_step;
    returns the first nd with any feasible t, picking the t that maximizes
    p_correct (lowest such t on exact ties).  When detection_rate_hz is
    given, points whose block does not fit in the interval are infeasible
    and the result carries the duty-cycle penalty.  Raises
    NoFeasibleSolutionError when the whole grid fails.
    """
    qber_max = float(qber_max)
    if not 0.0 <= qber_max < 0.5:
        raise ValueError("qber_max must satisfy 0 <= qber_max < 0.5")
    n_off_day = offsets_per_day(delta_max, interval_s)
    nd_lo, nd_hi = int(nd_range[0]), int(nd_range[1])
    if nd_lo < 1 or nd_hi < nd_lo:
        raise ValueError("nd_range must satisfy 1 <= lo <= hi")
    if t_step <= 0:
        raise ValueError("t_step must be positive")
    lo = t_step if t_min is None else max(float(t_min), t_step)
    hi = 1.0 - t_step if t_max is None else min(float(t_max), 1.0 - t_step)
    n_steps = int(round((hi - lo) / t_step))
    t_values = lo + t_step * np.arange(n_steps + 1)
    t_values = t_values[(t_values > 0.0) & (t_values < 1.0)]
    if t_values.size == 0:
        raise NoFeasibleSolutionError("threshold grid is empty")

    for nd in range(nd_lo, nd_hi + 1):
        if detection_rate_hz is not None and nd / float(detection_rate_hz) > float(interval_s):
            break  # larger nd only gets worse; schedule constraint is monotone
        p_corr, p_day, ok = _row_metrics(nd, t_values, qber_max, n_off_day)
        feasible = ok & (p_corr >= p_correct_min) & (p_day >= p_day_min)
        if not feasible.any():
            continue
        idx = np.flatnonzero(feasible)
        best = idx[np.argmax(p_corr[idx])]
        penalty = None
        if detection_rate_hz is not None:
            penalty = skr_penalty(nd, detection_rate_hz, interval_s)
        return PlanResult(
            nd_star=nd,
            t_star=float(round(t_values[best], 12)),
            p_correct=float(p_corr[best]),
            p_no_wrong_day=float(p_day[best]),
            skr_penalty=penalty,
        )
    raise NoFeasibleSolutionError(
        "no (nd, t) in the search range satisfies the reliability constraints"
    )


def feasibility_grid(
    qber_max: float,
    delta_max: int,
    interval_s: float,
    p_day_min: float,
    p_correct_min: float,
    nd_values,
    t_values,
) -> list[GridCell]:
    """Evaluate both constraints on an explicit (nd, t) grid."""
    qber_max = float(qber_max)
    if not 0.0 <= qber_max < 0.5:
        raise ValueError("qber_max must satisfy 0 <= qber_max < 0.5")
    n_off_day = offsets_per_day(delta_max, interval_s)
    t_arr = np.asarray(list(t_values), dtype=np.float64)
    if np.any(t_arr <= 0.0) or np.any(t_arr >= 1.0):
        raise ValueError("grid thresholds must lie strictly between 0 and 1")
    cells: list[GridCell] = []
    for nd in nd_values:
        nd = int(nd)
        if nd < 1:
            raise ValueError("grid nd values must be >= 1")
        p_corr, p_day, ok = _row_metrics(nd, t_arr, qber_max, n_off_day)
        feas = ok & (p_corr >= p_correct_min) & (p_day >= p_day_min)
        for j, t in enumerate(t_arr):
            cells.append(
                GridCell(
                    nd=nd,
                    t=float(t),
                    p_correct=float(p_corr[j]),
                    p_no_wrong_day=float(p_day[j]),
                    feasible=bool(feas[j]),
                )
            )
    return cells


def write_grid_csv(cells: list[GridCell], path: str | Path) -> None:
    """Grid CSV: header nd,t,p_correct,p_no_wrong_day,feasible (1/0)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["nd", "t", "p_correct", "p_no_wrong_day", "feasible"])
        for c in cells:
            writer.writerow(
                [c.nd, f"{c.t:.6g}", f"{c.p_correct:.12g}", f"{c.p_no_wrong_day:.12g}",
                 1 if c.feasible else 0]
            )


@dataclass(frozen=True)
class PenaltyPoint:
    """Optimized duty-cycle penalty at one (qber, detection rate) setting."""

    qber_max: float
    detection_rate_hz: float
    interval_s: float
    nd: int
    t: float
    penalty: float
    db: float


def penalty_curve(
    qber_values,
    rate_values,
    delta_max: int,
    interval_s: float,
    p_day_min: float,
    p_correct_min: float,
) -> list[PenaltyPoint]:
    """Optimized penalty across channel error rates and detection rates."""
    points = []
    for q in qber_values:
        for rate in rate_values:
            plan = optimize_params(
                float(q), delta_max, interval_s, p_day_min, p_correct_min,
                detection_rate_hz=float(rate),
            )
            assert plan.skr_penalty is not None
            points.append(
                PenaltyPoint(
                    qber_max=float(q),
                    detection_rate_hz=float(rate),
                    interval_s=float(interval_s),
                    nd=plan.nd_star,
                    t=plan.t_star,
                    penalty=plan.skr_penalty,
                    db=penalty_to_db(plan.skr_penalty),
                )
            )
    return points


def write_penalty_curve_csv(points: list[PenaltyPoint], path: str | Path) -> None:
    """Curve CSV: header qmax,rate_hz,interval_s,nd,t,penalty,db."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["qmax", "rate_hz", "interval_s", "nd", "t", "penalty", "db"])
        for p in points:
            writer.writerow(
                [f"{p.qber_max:.6g}", f"{p.detection_rate_hz:.6g}", f"{p.interval_s:.6g}",
                 p.nd, f"{p.t:.6g}", f"{p.penalty:.12g}", f"{p.db:.12g}"]
            )
