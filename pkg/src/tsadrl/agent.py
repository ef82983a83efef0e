"""Recurrent Q-network, replay machinery, and the shaped-reward episode loop.

The Q-network is a single gated recurrent cell read out by a scalar head.
Action conditioning happens through the input: the candidate action is
appended to every window row as an extra column, so Q(s, a) = net([s; a]).
All passes are float64 with explicit gradient buffers so analytic gradients
can be verified against finite differences.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import checkpoint
from .data import Series, all_windows
from .env import SeriesEnv, reward_r1
from .errors import InvalidArgs, NonFiniteLoss, NonFiniteOutput, ShapeError
from .nn import (
    STREAM_ACTION,
    STREAM_QNET_INIT,
    STREAM_REPLAY,
    Adam,
    rng_for,
    sigmoid,
    xavier,
)
from .potential import PotentialProvider, shaped_reward
from .vae import LambdaController, VaeModel, recon_errors, total_reward, update_lambda


class QNet:
    """Gated recurrent cell (update/reset gates) plus a scalar linear head."""

    GATE_NAMES = ("z", "r", "c")

    def __init__(self, input_dim: int, hidden: int = 64, seed: int = 0):
        if input_dim < 1 or hidden < 1:
            raise InvalidArgs(f"bad sizes: input={input_dim}, hidden={hidden}")
        self.input_dim = int(input_dim)
        self.hidden = int(hidden)
        self.seed = int(seed)
        rng = rng_for(seed, STREAM_QNET_INIT)
        D, H = self.input_dim, self.hidden
        self.params: dict[str, np.ndarray] = {}
        for gate in self.GATE_NAMES:
            self.params[f"W{gate}"] = xavier(rng, D, H)
            self.params[f"U{gate}"] = xavier(rng, H, H)
            self.params[f"b{gate}"] = np.zeros(H)
        self.params["head_w"] = xavier(rng, H, 1)[:, 0]
        self.params["head_b"] = np.zeros(1)
        self.grads: dict[str, np.ndarray] = {
            name: np.zeros_like(p) for name, p in self.params.items()
        }

    def forward(self, X: np.ndarray):
        """Q for a batch of augmented windows, shape (B, T, input_dim).

        Returns (q, cache) with q of shape (B,).
        """
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 3 or X.shape[2] != self.input_dim:
            raise ShapeError(f"expected (B, T, {self.input_dim}), got {X.shape}")
        B, T, _ = X.shape
        p = self.params
        h = np.zeros((B, self.hidden))
        h_prevs, zs, rs, cs = [], [], [], []
        for t in range(T):
            x = X[:, t, :]
            z = sigmoid(x @ p["Wz"] + h @ p["Uz"] + p["bz"])
            r = sigmoid(x @ p["Wr"] + h @ p["Ur"] + p["br"])
            c = np.tanh(x @ p["Wc"] + (r * h) @ p["Uc"] + p["bc"])
            h_prevs.append(h)
            zs.append(z)
            rs.append(r)
            cs.append(c)
            h = (1.0 - z) * c + z * h
        q = h @ p["head_w"] + p["head_b"][0]
        if not np.isfinite(q).all():
            raise NonFiniteOutput("non-finite Q values")
        cache = {"X": X, "h_prevs": h_prevs, "zs": zs, "rs": rs, "cs": cs, "h_last": h}
        return q, cache

    def backward(self, dq: np.ndarray, cache: dict) -> dict[str, np.ndarray]:
        """Gradients of a scalar loss given d(loss)/d(q), shape (B,)."""
        p = self.params
        X = cache["X"]
        B, T, _ = X.shape
        g = {name: np.zeros_like(arr) for name, arr in p.items()}
        g["head_w"] = cache["h_last"].T @ dq
        g["head_b"][0] = dq.sum()
        dh = dq[:, None] * p["head_w"][None, :]
        for t in reversed(range(T)):
            x = X[:, t, :]
            h_prev = cache["h_prevs"][t]
            z, r, c = cache["zs"][t], cache["rs"][t], cache["cs"][t]
            dz = dh * (h_prev - c)
            dc = dh * (1.0 - z)
            da_c = dc * (1.0 - c * c)
            g["Wc"] += x.T @ da_c
            g["bc"] += da_c.sum(axis=0)
            d_rh = da_c @ p["Uc"].T
            g["Uc"] += (r * h_prev).T @ da_c
            dr = d_rh * h_prev
            da_z = dz * z * (1.0 - z)
            da_r = dr * r * (1.0 - r)
            g["Wz"] += x.T @ da_z
            g["Uz"] += h_prev.T @ da_z
            g["bz"] += da_z.sum(axis=0)
            g["Wr"] += x.T @ da_r
            g["Ur"] += h_prev.T @ da_r
            g["br"] += da_r.sum(axis=0)
            dh = dh * z + da_z @ p["Uz"].T + da_r @ p["Ur"].T + d_rh * r
        for name in self.grads:
            self.grads[name][...] = g[name]
        return g

    def save(self, path: str, extra_meta: dict | None = None) -> None:
        meta = {
            "kind": "qnet",
            "input_dim": self.input_dim,
            "hidden": self.hidden,
            "seed": self.seed,
        }
        if extra_meta:
            meta.update(extra_meta)
        checkpoint.save_params(path, self.params, meta)

    @classmethod
    def load(cls, path: str) -> "QNet":
        arrays, meta = checkpoint.load_params(path)
        if meta.get("kind") != "qnet":
            raise ShapeError(f"checkpoint at {path} is not a Q-net ({meta.get('kind')!r})")
        net = cls(input_dim=meta["input_dim"], hidden=meta["hidden"],
                  seed=meta.get("seed", 0))
        for name, par in net.params.items():
            if name not in arrays or arrays[name].shape != par.shape:
                raise ShapeError(f"checkpoint parameter {name} missing or misshaped")
            net.params[name] = arrays[name].astype(np.float64)
        return net


def augment(windows: np.ndarray, flags) -> np.ndarray:
    """Append a constant action-flag column to each window row.

    windows: (B, T, d); flags: scalar or (B,). Returns (B, T, d+1).
    """
    w = np.asarray(windows, dtype=np.float64)
    if w.ndim == 2:
        w = w[None, :, :]
    B, T, _ = w.shape
    flag_arr = np.broadcast_to(np.asarray(flags, dtype=np.float64).reshape(-1, 1, 1), (B, T, 1))
    return np.concatenate([w, flag_arr], axis=2)


def q_values(net: QNet, window: np.ndarray) -> tuple[float, float]:
    """(Q(s, 0), Q(s, 1)) for one raw window of shape (T, d)."""
    w = np.asarray(window, dtype=np.float64)
    if w.ndim != 2 or w.shape[1] + 1 != net.input_dim:
        raise ShapeError(
            f"window shape {w.shape} incompatible with net input {net.input_dim}"
        )
    X = augment(np.stack([w, w]), np.array([0.0, 1.0]))
    q, _ = net.forward(X)
    return float(q[0]), float(q[1])


def batch_q_values(net: QNet, windows: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized (q0, q1) arrays for a stack of raw windows (B, T, d)."""
    B = windows.shape[0]
    X = np.concatenate([augment(windows, 0.0), augment(windows, 1.0)], axis=0)
    q, _ = net.forward(X)
    return q[:B], q[B:]


def greedy_actions(net: QNet, windows: np.ndarray) -> np.ndarray:
    """Argmax actions; exact ties resolve to 0."""
    q0, q1 = batch_q_values(net, windows)
    return (q1 > q0).astype(np.int64)


def select_action(q0: float, q1: float, eps: float, draw: float) -> int:
    """Epsilon-greedy using one uniform draw in [0, 1).

    The explore branch reuses the draw: its position inside [0, eps) picks
    the uniform action, keeping the whole decision a pure function.
    """
    if not 0.0 <= eps <= 1.0 or not 0.0 <= draw < 1.0:
        raise InvalidArgs(f"eps={eps}, draw={draw} out of range")
    if draw < eps:
        return int(draw / eps >= 0.5)
    if q1 > q0:
        return 1
    return 0


@dataclass(frozen=True)
class EpsilonSchedule:
    eps_start: float = 1.0
    eps_end: float = 0.05
    decay_steps: int = 50_000

    def __post_init__(self):
        if not 0.0 <= self.eps_end <= self.eps_start <= 1.0 or self.decay_steps < 1:
            raise InvalidArgs("need 0 <= eps_end <= eps_start <= 1 and decay_steps >= 1")

    def value(self, step: int) -> float:
        frac = min(max(step / self.decay_steps, 0.0), 1.0)
        return self.eps_start + (self.eps_end - self.eps_start) * frac


@dataclass
class Transition:
    window: np.ndarray
    action: int
    reward: float
    next_window: np.ndarray
    done: bool


class ReplayBuffer:
    """Ring buffer with seeded uniform sampling (no replacement within a batch)."""

    def __init__(self, capacity: int, seed: int = 0):
        if capacity < 1:
            raise InvalidArgs(f"capacity must be >= 1, got {capacity}")
        self.capacity = int(capacity)
        self._items: list[Transition] = []
        self._cursor = 0
        self.rng = rng_for(seed, STREAM_REPLAY)

    def __len__(self) -> int:
        return len(self._items)

    def push(self, transition: Transition) -> None:
        if len(self._items) < self.capacity:
            self._items.append(transition)
        else:
            self._items[self._cursor] = transition
            self._cursor = (self._cursor + 1) % self.capacity

    def sample(self, batch_size: int) -> dict[str, np.ndarray]:
        if batch_size > len(self._items):
            raise InvalidArgs(f"batch {batch_size} > buffer size {len(self._items)}")
        idx = self.rng.choice(len(self._items), size=batch_size, replace=False)
        items = [self._items[i] for i in idx]
        return {
            "windows": np.stack([it.window for it in items]),
            "actions": np.array([it.action for it in items], dtype=np.float64),
            "rewards": np.array([it.reward for it in items], dtype=np.float64),
            "next_windows": np.stack([it.next_window for it in items]),
            "dones": np.array([float(it.done) for it in items]),
        }


def td_update(net: QNet, target_net: QNet, batch: dict[str, np.ndarray],
              optimizer: Adam, gamma: float) -> float:
    """One gradient step on mean squared TD error; returns the pre-step loss.

    Targets bootstrap through the target network only; done transitions get
    no bootstrap term.
    """
    B = batch["windows"].shape[0]
    if B == 0:
        raise InvalidArgs("empty batch")
    X = augment(batch["windows"], batch["actions"])
    q, cache = net.forward(X)
    Xn = np.concatenate(
        [augment(batch["next_windows"], 0.0), augment(batch["next_windows"], 1.0)], axis=0
    )
    qn, _ = target_net.forward(Xn)
    max_next = np.maximum(qn[:B], qn[B:])
    y = batch["rewards"] + gamma * max_next * (1.0 - batch["dones"])
    diff = q - y
    loss = float(np.mean(diff**2))
    if not np.isfinite(loss):
        raise NonFiniteLoss(f"TD loss {loss}")
    dq = 2.0 * diff / B
    grads = net.backward(dq, cache)
    optimizer.step(net.params, grads)
    return loss


def sync_target(net: QNet, target_net: QNet) -> None:
    """Hard parameter copy; the two nets agree bit-exactly afterwards."""
    for name, p in net.params.items():
        target_net.params[name] = p.copy()


@dataclass(frozen=True)
class AgentConfig:
    hidden: int = 64
    lr: float = 1e-3
    gamma: float = 0.99
    buffer_capacity: int = 100_000
    batch_size: int = 64
    epsilon: EpsilonSchedule = EpsilonSchedule()
    target_sync_every: int = 500
    update_every: int = 1
    warmup_steps: int = 1000

    def __post_init__(self):
        if not 0.0 < self.gamma <= 1.0:
            raise InvalidArgs(f"gamma must be in (0, 1], got {self.gamma}")
        if self.update_every < 1 or self.target_sync_every < 1:
            raise InvalidArgs("update_every and target_sync_every must be >= 1")


@dataclass(frozen=True)
class RewardBreakdown:
    """Everything that entered one step's shaped reward.

    r1 is the classification reward actually used for training (0 when the
    step's label is unknown to the agent); r1_true records the environment's
    ground-truth reward for diagnostics.
    """

    t: int
    action: int
    label_known: bool
    label_used: int | None
    r1: float
    r1_true: float
    r2: float
    lam: float
    phi_s: float
    phi_s_next: float
    shaped: float

    def to_dict(self) -> dict:
        return {
            "t": self.t,
            "action": self.action,
            "label_known": self.label_known,
            "label_used": self.label_used,
            "r1": self.r1,
            "r1_true": self.r1_true,
            "r2": self.r2,
            "lambda": self.lam,
            "phi_s": self.phi_s,
            "phi_s_next": self.phi_s_next,
            "shaped": self.shaped,
        }


@dataclass
class EpisodeReport:
    series_id: str
    steps: list[RewardBreakdown]
    r1_sum: float
    r1_true_sum: float
    shaped_sum: float
    lambda_before: float
    lambda_after: float
    epsilon_end: float
    env_steps: int
    updates: int
    target_syncs: int

    def to_dict(self, include_steps: bool = False) -> dict:
        out = {
            "series_id": self.series_id,
            "n_steps": len(self.steps),
            "r1_sum": self.r1_sum,
            "r1_true_sum": self.r1_true_sum,
            "shaped_sum": self.shaped_sum,
            "lambda_before": self.lambda_before,
            "lambda_after": self.lambda_after,
            "epsilon_end": self.epsilon_end,
            "env_steps": self.env_steps,
            "updates": self.updates,
            "target_syncs": self.target_syncs,
        }
        if include_steps:
            out["steps"] = [s.to_dict() for s in self.steps]
        return out


class FullLabelView:
    """Training labels straight from ground truth (the supervised ceiling)."""

    def __init__(self, series: Series):
        self._labels = series.labels

    def label_for(self, t: int) -> tuple[bool, int | None]:
        return True, int(self._labels[t])


class DqnTrainer:
    """Owns the online/target nets, replay, exploration, and counters.

    One trainer instance drives a whole run; counters (environment steps,
    updates, syncs) persist across episodes so schedules behave as if the
    episodes were one long stream.
    """

    def __init__(self, input_dim: int, config: AgentConfig = AgentConfig(), seed: int = 0):
        self.config = config
        self.net = QNet(input_dim, hidden=config.hidden, seed=seed)
        self.target_net = QNet(input_dim, hidden=config.hidden, seed=seed)
        sync_target(self.net, self.target_net)
        self.optimizer = Adam(lr=config.lr)
        self.buffer = ReplayBuffer(config.buffer_capacity, seed=seed)
        self.action_rng = rng_for(seed, STREAM_ACTION)
        self.env_steps = 0
        self.updates = 0
        self.target_syncs = 0

    def run_episode(
        self,
        series: Series,
        n_steps: int,
        vae_model: VaeModel,
        lambda_ctrl: LambdaController,
        provider: PotentialProvider,
        label_view=None,
    ) -> tuple[EpisodeReport, LambdaController]:
        """One full pass over the series with learning updates.

        Per decision step: epsilon-greedy action, confusion reward from the
        label view (0 when unknown), reconstruction term scaled by the
        current lambda, then potential shaping. The controller is updated
        once at episode end from the sum of classification rewards.
        """
        env = SeriesEnv(series, n_steps)
        if label_view is None:
            label_view = FullLabelView(series)
        windows = all_windows(series, n_steps)
        n_dec = windows.shape[0]
        provider.prefetch(list(windows))
        phis = np.array([provider.score(w).value for w in windows])
        r2s = recon_errors(vae_model, windows.reshape(n_dec, -1))
        gamma = self.config.gamma
        cfg = self.config

        breakdowns: list[RewardBreakdown] = []
        updates_before = self.updates
        syncs_before = self.target_syncs
        eps = cfg.epsilon.value(self.env_steps)
        env.reset()
        for i in range(n_dec):
            t = env.t
            window = windows[i]
            q0, q1 = q_values(self.net, window)
            eps = cfg.epsilon.value(self.env_steps)
            action = select_action(q0, q1, eps, float(self.action_rng.uniform()))
            outcome = env.step(action)

            known, label = label_view.label_for(t)
            r1_used = reward_r1(action, label) if known else 0.0
            r2 = float(r2s[i])
            phi_s = float(phis[i])
            phi_next = float(phis[i + 1]) if i + 1 < n_dec else float(phis[i])
            total = total_reward(r1_used, r2, lambda_ctrl.lam)
            shaped = shaped_reward(total, phi_s, phi_next, gamma)

            next_window = windows[min(i + 1, n_dec - 1)]
            self.buffer.push(
                Transition(window, action, shaped, next_window, outcome.done)
            )
            self.env_steps += 1
            if (
                self.env_steps > cfg.warmup_steps
                and self.env_steps % cfg.update_every == 0
                and len(self.buffer) >= cfg.batch_size
            ):
                td_update(self.net, self.target_net, self.buffer.sample(cfg.batch_size),
                          self.optimizer, gamma)
                self.updates += 1
                if self.updates % cfg.target_sync_every == 0:
                    sync_target(self.net, self.target_net)
                    self.target_syncs += 1

            breakdowns.append(
                RewardBreakdown(
                    t=t,
                    action=action,
                    label_known=known,
                    label_used=label if known else None,
                    r1=r1_used,
                    r1_true=outcome.r1,
                    r2=r2,
                    lam=lambda_ctrl.lam,
                    phi_s=phi_s,
                    phi_s_next=phi_next,
                    shaped=shaped,
                )
            )

        r1_sum = float(sum(b.r1 for b in breakdowns))
        new_ctrl = update_lambda(lambda_ctrl, r1_sum)
        report = EpisodeReport(
            series_id=series.id,
            steps=breakdowns,
            r1_sum=r1_sum,
            r1_true_sum=float(sum(b.r1_true for b in breakdowns)),
            shaped_sum=float(sum(b.shaped for b in breakdowns)),
            lambda_before=lambda_ctrl.lam,
            lambda_after=new_ctrl.lam,
            epsilon_end=eps,
            env_steps=self.env_steps,
            updates=self.updates - updates_before,
            target_syncs=self.target_syncs - syncs_before,
        )
        return report, new_ctrl


def run_episode(series: Series, n_steps: int, trainer: DqnTrainer, vae_model: VaeModel,
                lambda_ctrl: LambdaController, provider: PotentialProvider,
                label_view=None) -> tuple[EpisodeReport, LambdaController]:
    return trainer.run_episode(series, n_steps, vae_model, lambda_ctrl, provider,
                               label_view=label_view)
