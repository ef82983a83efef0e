"""Sequential-decision environment over one time series.

A state is the sliding window ending at the current step, augmented with an
action-indicator column, so a scalar-output network can represent both action
values. The per-step reward follows the confusion matrix: +5 true positive,
+1 true negative, -1 false positive, -5 false negative (misses are penalized
five times harder than false alarms).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Series, window_at
from .errors import EpisodeFinished, InvalidArgs, ShapeError

REWARD_TP = 5.0
REWARD_TN = 1.0
REWARD_FP = -1.0
REWARD_FN = -5.0


@dataclass(frozen=True)
class WindowState:
    """A window plus the candidate-action flag column."""

    window: np.ndarray  # (n_steps, d)
    action_flag: int

    def __post_init__(self):
        w = np.asarray(self.window, dtype=np.float64)
        if w.ndim != 2:
            raise ShapeError(f"window must be 2-D, got shape {w.shape}")
        if self.action_flag not in (0, 1):
            raise InvalidArgs(f"action_flag must be 0/1, got {self.action_flag}")
        object.__setattr__(self, "window", w)

    def augmented(self) -> np.ndarray:
        """Window with the flag appended as a constant extra column, (n_steps, d+1)."""
        flag_col = np.full((self.window.shape[0], 1), float(self.action_flag))
        return np.concatenate([self.window, flag_col], axis=1)

    def flattened(self) -> np.ndarray:
        return self.augmented().reshape(-1)


@dataclass(frozen=True)
class StepOutcome:
    t: int
    action: int
    label: int
    r1: float
    done: bool


def make_states(window: np.ndarray) -> tuple[WindowState, WindowState]:
    """The two candidate states for one window: flag 0 and flag 1."""
    w = np.asarray(window, dtype=np.float64)
    if w.ndim != 2:
        raise ShapeError(f"window must be (n_steps, d), got shape {w.shape}")
    return WindowState(w, 0), WindowState(w, 1)


def reward_r1(action: int, label: int) -> float:
    """Confusion-matrix reward; total over {0,1} x {0,1}."""
    if action not in (0, 1) or label not in (0, 1):
        raise InvalidArgs(f"action/label must be 0/1, got ({action}, {label})")
    if label == 1:
        return REWARD_TP if action == 1 else REWARD_FN
    return REWARD_FP if action == 1 else REWARD_TN


class SeriesEnv:
    """One episode = one full pass over a series.

    Decisions start at t = n_steps-1 (the first full window) and end at
    t = T-1. The action never influences the next observation; it only
    determines the reward.
    """

    def __init__(self, series: Series, n_steps: int):
        if series.length < n_steps:
            raise InvalidArgs(
                f"series length {series.length} shorter than window {n_steps}"
            )
        self.series = series
        self.n_steps = n_steps
        self.reset()

    @property
    def num_decisions(self) -> int:
        return self.series.length - self.n_steps + 1

    def reset(self) -> np.ndarray:
        """Start a fresh episode; returns the first window."""
        self.t = self.n_steps - 1
        self.done = False
        return self.current_window()

    def current_window(self) -> np.ndarray:
        return window_at(self.series, self.t, self.n_steps)

    def next_window(self) -> np.ndarray:
        """Window observed after acting at the current step.

        At the final step the episode's terminal observation is the last
        window itself; potentials evaluate it like any other state.
        """
        t_next = min(self.t + 1, self.series.length - 1)
        return window_at(self.series, t_next, self.n_steps)

    def step(self, action: int) -> StepOutcome:
        if self.done:
            raise EpisodeFinished("episode already finished; call reset()")
        t = self.t
        label = int(self.series.labels[t])
        outcome = StepOutcome(
            t=t,
            action=int(action),
            label=label,
            r1=reward_r1(int(action), label),
            done=t == self.series.length - 1,
        )
        if outcome.done:
            self.done = True
        else:
            self.t = t + 1
        return outcome

    def max_episode_r1(self) -> float:
        """Episode R1 of a perfect classifier over the decided range."""
        labels = self.series.labels[self.n_steps - 1 :]
        return float(REWARD_TP * (labels == 1).sum() + REWARD_TN * (labels == 0).sum())
