"""Variational autoencoder anomaly scoring and the dynamic reward mix.

The VAE is a small dense net trained on normal windows only; a window's
anomaly evidence is its reconstruction MSE under the posterior mean (no
sampling, so scoring is deterministic). The mixing coefficient between the
classification reward and the reconstruction term is adjusted after each
episode by proportional control and kept inside hard bounds.

Forward/backward passes are written out by hand in float64 with explicit
gradient buffers, so every analytic gradient can be checked against central
finite differences.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import checkpoint
from .errors import InvalidArgs, NonFiniteLoss, ShapeError
from .nn import (
    STREAM_VAE_INIT,
    STREAM_VAE_NOISE,
    STREAM_VAE_SHUFFLE,
    Adam,
    rng_for,
    xavier,
)


class VaeModel:
    """Dense encoder/decoder with Gaussian latent.

    Encoder: input -> tanh stack -> (mu, log-variance); decoder mirrors the
    hidden widths back to the input size. Parameters and their gradient
    buffers live in plain dicts keyed by layer name.
    """

    def __init__(self, input_dim: int, hidden: tuple[int, ...] = (64, 32),
                 latent: int = 8, seed: int = 0):
        if input_dim < 1 or latent < 1 or not hidden or min(hidden) < 1:
            raise InvalidArgs(
                f"bad architecture: input={input_dim}, hidden={hidden}, latent={latent}"
            )
        self.input_dim = int(input_dim)
        self.hidden = tuple(int(h) for h in hidden)
        self.latent = int(latent)
        self.seed = int(seed)
        rng = rng_for(seed, STREAM_VAE_INIT)
        self.params: dict[str, np.ndarray] = {}
        widths = (self.input_dim,) + self.hidden
        for i in range(len(self.hidden)):
            self.params[f"enc{i}_W"] = xavier(rng, widths[i], widths[i + 1])
            self.params[f"enc{i}_b"] = np.zeros(widths[i + 1])
        top = self.hidden[-1]
        self.params["mu_W"] = xavier(rng, top, self.latent)
        self.params["mu_b"] = np.zeros(self.latent)
        self.params["lv_W"] = xavier(rng, top, self.latent)
        self.params["lv_b"] = np.zeros(self.latent)
        dec_widths = (self.latent,) + self.hidden[::-1]
        for i in range(len(self.hidden)):
            self.params[f"dec{i}_W"] = xavier(rng, dec_widths[i], dec_widths[i + 1])
            self.params[f"dec{i}_b"] = np.zeros(dec_widths[i + 1])
        self.params["out_W"] = xavier(rng, self.hidden[0], self.input_dim)
        self.params["out_b"] = np.zeros(self.input_dim)
        self.grads: dict[str, np.ndarray] = {
            name: np.zeros_like(p) for name, p in self.params.items()
        }

    # -- forward ---------------------------------------------------------

    def _as_batch(self, windows: np.ndarray) -> np.ndarray:
        x = np.asarray(windows, dtype=np.float64)
        if x.ndim == 3:
            x = x.reshape(x.shape[0], -1)
        elif x.ndim == 2 and x.shape[1] != self.input_dim:
            # single un-flattened window (n_steps, d)
            x = x.reshape(1, -1)
        elif x.ndim == 1:
            x = x[None, :]
        if x.ndim != 2 or x.shape[1] != self.input_dim:
            raise ShapeError(
                f"window batch flattens to {x.shape}, model input is {self.input_dim}"
            )
        return x

    def encode(self, x: np.ndarray):
        """Returns (mu, logvar, cache); cache holds per-layer activations."""
        acts = [x]
        h = x
        for i in range(len(self.hidden)):
            h = np.tanh(h @ self.params[f"enc{i}_W"] + self.params[f"enc{i}_b"])
            acts.append(h)
        mu = h @ self.params["mu_W"] + self.params["mu_b"]
        lv = h @ self.params["lv_W"] + self.params["lv_b"]
        return mu, lv, acts

    def decode(self, z: np.ndarray):
        """Returns (xhat, cache)."""
        acts = [z]
        g = z
        for i in range(len(self.hidden)):
            g = np.tanh(g @ self.params[f"dec{i}_W"] + self.params[f"dec{i}_b"])
            acts.append(g)
        xhat = g @ self.params["out_W"] + self.params["out_b"]
        return xhat, acts

    # -- loss and gradients ----------------------------------------------

    def loss_and_grads(self, windows: np.ndarray, noise: np.ndarray):
        """Negative ELBO and analytic gradients for one batch.

        noise is the externally supplied standard-normal draw used in the
        reparameterization z = mu + sigma * noise, shape (B, latent).
        """
        x = self._as_batch(windows)
        if not np.isfinite(x).all():
            raise NonFiniteLoss("non-finite values in input batch")
        B, n = x.shape
        eps = np.asarray(noise, dtype=np.float64)
        if eps.shape != (B, self.latent):
            raise ShapeError(f"noise shape {eps.shape}, expected {(B, self.latent)}")

        mu, lv, enc_acts = self.encode(x)
        sigma = np.exp(0.5 * lv)
        z = mu + sigma * eps
        xhat, dec_acts = self.decode(z)

        recon = float(np.mean((xhat - x) ** 2))
        kl = float(np.mean(0.5 * np.sum(mu**2 + np.exp(lv) - lv - 1.0, axis=1)))
        loss = recon + kl
        if not np.isfinite(loss):
            raise NonFiniteLoss(f"recon={recon}, kl={kl}")

        g = {name: np.zeros_like(p) for name, p in self.params.items()}

        d_xhat = 2.0 * (xhat - x) / (B * n)
        g["out_W"] = dec_acts[-1].T @ d_xhat
        g["out_b"] = d_xhat.sum(axis=0)
        dg = d_xhat @ self.params["out_W"].T
        for i in reversed(range(len(self.hidden))):
            da = dg * (1.0 - dec_acts[i + 1] ** 2)
            g[f"dec{i}_W"] = dec_acts[i].T @ da
            g[f"dec{i}_b"] = da.sum(axis=0)
            dg = da @ self.params[f"dec{i}_W"].T
        dz = dg

        d_mu = dz + mu / B
        d_lv = dz * eps * 0.5 * sigma + 0.5 * (np.exp(lv) - 1.0) / B
        g["mu_W"] = enc_acts[-1].T @ d_mu
        g["mu_b"] = d_mu.sum(axis=0)
        g["lv_W"] = enc_acts[-1].T @ d_lv
        g["lv_b"] = d_lv.sum(axis=0)
        dh = d_mu @ self.params["mu_W"].T + d_lv @ self.params["lv_W"].T
        for i in reversed(range(len(self.hidden))):
            da = dh * (1.0 - enc_acts[i + 1] ** 2)
            g[f"enc{i}_W"] = enc_acts[i].T @ da
            g[f"enc{i}_b"] = da.sum(axis=0)
            dh = da @ self.params[f"enc{i}_W"].T

        for name in self.grads:
            self.grads[name][...] = g[name]
        return loss, g

    # -- persistence -----------------------------------------------------

    def save(self, path: str, extra_meta: dict | None = None) -> None:
        meta = {
            "kind": "vae",
            "input_dim": self.input_dim,
            "hidden": list(self.hidden),
            "latent": self.latent,
            "seed": self.seed,
        }
        if extra_meta:
            meta.update(extra_meta)
        checkpoint.save_params(path, self.params, meta)

    @classmethod
    def load(cls, path: str) -> "VaeModel":
        arrays, meta = checkpoint.load_params(path)
        if meta.get("kind") != "vae":
            raise ShapeError(f"checkpoint at {path} is not a VAE ({meta.get('kind')!r})")
        model = cls(
            input_dim=meta["input_dim"],
            hidden=tuple(meta["hidden"]),
            latent=meta["latent"],
            seed=meta.get("seed", 0),
        )
        for name, p in model.params.items():
            if name not in arrays or arrays[name].shape != p.shape:
                raise ShapeError(f"checkpoint parameter {name} missing or misshaped")
            model.params[name] = arrays[name].astype(np.float64)
        return model


def elbo_loss(model: VaeModel, batch: np.ndarray, noise: np.ndarray) -> float:
    """Negative ELBO: reconstruction MSE plus closed-form KL to N(0, I)."""
    loss, _ = model.loss_and_grads(batch, noise)
    return loss


def train_vae(
    model: VaeModel,
    normal_windows: np.ndarray,
    epochs: int,
    lr: float,
    seed: int,
    batch_size: int = 64,
) -> list[float]:
    """Train in place on normal windows; returns per-epoch mean loss.

    Callers are responsible for drawing the windows from label-0 regions of
    the train split. Zero epochs leaves the model bit-exactly untouched.
    Deterministic per (seed, data).
    """
    if epochs == 0:
        return []
    x = model._as_batch(normal_windows)
    n = x.shape[0]
    if n == 0:
        raise InvalidArgs("no training windows")
    shuffle_rng = rng_for(seed, STREAM_VAE_SHUFFLE)
    noise_rng = rng_for(seed, STREAM_VAE_NOISE)
    opt = Adam(lr=lr)
    bs = min(batch_size, n)
    curve: list[float] = []
    for _ in range(epochs):
        order = shuffle_rng.permutation(n)
        total = 0.0
        batches = 0
        for start in range(0, n, bs):
            batch = x[order[start : start + bs]]
            eps = noise_rng.standard_normal((batch.shape[0], model.latent))
            loss, grads = model.loss_and_grads(batch, eps)
            opt.step(model.params, grads)
            total += loss
            batches += 1
        curve.append(total / batches)
    return curve


def recon_errors(model: VaeModel, windows: np.ndarray) -> np.ndarray:
    """Reconstruction MSE per window under the posterior mean, shape (B,)."""
    x = model._as_batch(windows)
    mu, _, _ = model.encode(x)
    xhat, _ = model.decode(mu)
    return np.mean((x - xhat) ** 2, axis=1)


def recon_error(model: VaeModel, window: np.ndarray) -> float:
    """Deterministic anomaly score for one window; non-negative."""
    w = np.asarray(window, dtype=np.float64)
    if w.size != model.input_dim:
        raise ShapeError(f"window has {w.size} entries, model input is {model.input_dim}")
    return float(recon_errors(model, w.reshape(1, -1))[0])


def total_reward(r1: float, r2: float, lam: float) -> float:
    """Classification reward plus the scaled reconstruction term."""
    return r1 + lam * r2


@dataclass(frozen=True)
class LambdaController:
    """Proportional controller for the reconstruction-term weight.

    After each episode: lam <- clip(lam + alpha * (r_target - r_episode)).
    Under-target episodes push weight toward the unsupervised signal;
    over-target episodes pull it back toward pure classification.
    """

    lam: float = 0.1
    alpha: float = 0.001
    r_target: float = 0.0
    lam_min: float = 0.0
    lam_max: float = 2.0

    def __post_init__(self):
        if not self.lam_min <= self.lam <= self.lam_max:
            raise InvalidArgs(
                f"lambda {self.lam} outside [{self.lam_min}, {self.lam_max}]"
            )


def update_lambda(ctrl: LambdaController, r_episode: float) -> LambdaController:
    new_lam = ctrl.lam + ctrl.alpha * (ctrl.r_target - r_episode)
    new_lam = min(max(new_lam, ctrl.lam_min), ctrl.lam_max)
    return replace(ctrl, lam=new_lam)
