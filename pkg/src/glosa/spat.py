"""Signal switching-time information: exact or noisy per-step predictions.

Noisy predictions are normal around ``true switch + bias`` and truncated
below at the issue time, since a prediction that the light already turned
green while it is visibly red carries no information beyond "now".
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.special import ndtr, ndtri


@dataclass(frozen=True)
class SignalTiming:
    true_switch_time_s: float
    red_at_start: bool = True

    def __post_init__(self) -> None:
        if self.true_switch_time_s < 0:
            raise ValueError("true_switch_time_s must be >= 0")

    def is_red(self, t: float) -> bool:
        return self.red_at_start and t < self.true_switch_time_s


@dataclass(frozen=True)
class PredictionModel:
    bias_s: float = 0.0
    sd_s: float = 0.0
    rng_seed: int | None = None
    # Optional multiplier on (bias, sd) as a function of issue time; None
    # keeps both constant over the run.
    schedule: Callable[[np.ndarray], np.ndarray] | None = None

    def violations(self) -> list[str]:
        out = []
        if not self.sd_s >= 0:
            out.append("PredictionModel.sd_s >= 0")
        return out

    @property
    def is_exact(self) -> bool:
        return self.bias_s == 0 and self.sd_s == 0 and self.schedule is None


@dataclass(frozen=True)
class SpatSample:
    issued_at_s: float
    predicted_switch_time_s: float
    bias_s: float
    sd_s: float


def _draw(mean: np.ndarray, sd: np.ndarray, lower: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Inverse-CDF draws from N(mean, sd) truncated below at ``lower``."""
    mean, sd, lower, u = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (mean, sd, lower, u)))
    out = np.maximum(mean, lower).astype(float)
    live = sd > 0
    if not live.any():
        return out
    m, s, lo, uu = mean[live], sd[live], lower[live], u[live]
    with np.errstate(over="ignore", divide="ignore"):
        alpha = (lo - m) / s
    z = np.zeros_like(alpha)
    left = alpha < 0
    # lower cut below the mean: sample the body directly
    fa = ndtr(alpha[left])
    z[left] = ndtri(fa + uu[left] * (1.0 - fa))
    # cut above the mean: sample through the survival function for accuracy
    right = ~left
    sa = ndtr(-alpha[right])
    ok = sa > 1e-300
    tail = np.empty(right.sum())
    tail[ok] = np.maximum(-ndtri((1.0 - uu[right][ok]) * sa[ok]), alpha[right][ok])
    z[right] = tail
    vals = np.maximum(m + s * z, lo)
    # beyond double range the tail is exponential with rate alpha: draw the
    # overshoot past the cut directly so tiny sd cannot overflow
    far = np.zeros(alpha.size, dtype=bool)
    far[np.flatnonzero(right)[~ok]] = True
    ar = alpha[far]
    vals[far] = lo[far] + s[far] * (-np.log1p(-uu[far]) / ar)
    out[live] = vals
    return out


def generator(seed) -> np.random.Generator:
    """PCG64 generator from an int, a sequence of ints or a SeedSequence."""
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(seed)
    return np.random.Generator(np.random.PCG64(seed))


def sample_prediction(timing: SignalTiming, model: PredictionModel, now_s: float,
                      rng: np.random.Generator) -> SpatSample:
    """One prediction issued at ``now_s``; consumes exactly one uniform."""
    u = rng.random()
    bias, sd = model.bias_s, model.sd_s
    if model.schedule is not None:
        scale = float(np.asarray(model.schedule(np.array([now_s])))[0])
        bias, sd = bias * scale, sd * scale
    mean = timing.true_switch_time_s + bias
    pred = float(_draw(np.array([mean]), np.array([sd]), np.array([now_s]), np.array([u]))[0])
    return SpatSample(now_s, pred, bias, sd)


@dataclass
class SpatStream:
    """Predictions for every planning step of one run (index = step)."""

    issued_at_s: np.ndarray
    predicted_switch_time_s: np.ndarray

    def __len__(self) -> int:
        return int(self.issued_at_s.shape[0])

    def samples(self, model: PredictionModel) -> list[SpatSample]:
        return [SpatSample(float(t), float(p), model.bias_s, model.sd_s)
                for t, p in zip(self.issued_at_s, self.predicted_switch_time_s)]

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["issued_at_s", "predicted_switch_time_s"])
            for t, p in zip(self.issued_at_s, self.predicted_switch_time_s):
                w.writerow([repr(float(t)), repr(float(p))])

    @classmethod
    def from_csv(cls, path: str | Path) -> "SpatStream":
        """Replay a dumped stream instead of drawing a new one."""
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if header != ["issued_at_s", "predicted_switch_time_s"]:
                raise ValueError(f"unexpected SPaT CSV header: {header}")
            rows = [(float(a), float(b)) for a, b in reader]
        arr = np.array(rows, dtype=float).reshape(-1, 2)
        return cls(arr[:, 0].copy(), arr[:, 1].copy())


def prediction_stream(timing: SignalTiming, model: PredictionModel, dt_s: float,
                      n_steps: int, rng: np.random.Generator | None = None) -> SpatStream:
    """Draw the per-step prediction sequence for a whole run.

    Step ``k`` is issued at ``k * dt_s``. Entries at or after the true switch
    are never consumed by the planner and hold the true switch time. The draw
    sequence matches ``n_steps`` successive ``sample_prediction`` calls.
    """
    issued = np.arange(n_steps) * dt_s
    t_s = timing.true_switch_time_s
    if model.is_exact:
        return SpatStream(issued, np.full(n_steps, float(t_s)))
    if rng is None:
        rng = generator(model.rng_seed)
    u = rng.random(n_steps)
    bias = np.full(n_steps, float(model.bias_s))
    sd = np.full(n_steps, float(model.sd_s))
    if model.schedule is not None:
        scale = np.asarray(model.schedule(issued), dtype=float)
        bias, sd = bias * scale, sd * scale
    preds = _draw(t_s + bias, sd, issued, u)
    preds[issued >= t_s] = t_s
    return SpatStream(issued, preds)


def error_bound(model: PredictionModel, confidence: float) -> float:
    """Bias plus the two-sided normal half-width at ``confidence``."""
    if not 0 < confidence < 1:
        raise ValueError("confidence must lie in (0, 1)")
    if model.sd_s == 0:
        return float(model.bias_s)
    return float(model.bias_s + ndtri(0.5 + confidence / 2.0) * model.sd_s)
