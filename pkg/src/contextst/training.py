"""Losses, Adam training loop, checkpointing hooks, and evaluation protocols."""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np

from contextst import autodiff as ad
from contextst import coordinator, data, model
from contextst.autodiff import Tensor
from contextst.errors import NonFiniteError, ShapeError


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 1e-3
    epochs: int = 10
    batch_size: int = 32
    delta: float = 1.0        # Huber threshold
    alpha: float = 0.01       # load-balance weight
    seed: int = 0
    patience: int = 5
    precision: str = "f64"
    log_timing: bool = True   # off for byte-identical deterministic runs

    def __post_init__(self):
        if self.lr < 0 or self.delta <= 0 or self.alpha < 0:
            raise ShapeError("need lr >= 0, delta > 0, alpha >= 0")


@dataclass(frozen=True)
class RoutingStats:
    fraction: np.ndarray     # F_e
    probability: np.ndarray  # P_e

    def load_loss(self):
        m = self.fraction.shape[0]
        return float(m * np.sum(self.fraction * self.probability))


def huber_loss(pred, truth, delta):
    """Mean piecewise loss: quadratic inside the threshold, linear outside."""
    pred = ad.as_tensor(pred)
    truth = np.asarray(truth, dtype=np.float64)
    if pred.shape != truth.shape:
        raise ShapeError(f"prediction shape {pred.shape} != truth {truth.shape}")
    err = pred - Tensor(truth)
    abs_err = ad.where(err.data >= 0, err, -err)
    quad = 0.5 * err * err
    lin = abs_err * delta - 0.5 * delta * delta
    return ad.where(np.abs(err.data) <= delta, quad, lin).mean()


def load_balance_loss(stats: RoutingStats, n_experts=None):
    m = n_experts if n_experts is not None else stats.fraction.shape[0]
    return float(m * np.sum(stats.fraction * stats.probability))


def total_loss(pred, truth, load, delta, alpha):
    """L = mean Huber + alpha * load-balance term (load may be a Tensor)."""
    return huber_loss(pred, truth, delta) + ad.as_tensor(load) * alpha


@dataclass
class PreparedSet:
    grids: np.ndarray        # (n, K+1, N, P)
    anchors: np.ndarray      # (n, D_C)
    targets: np.ndarray      # (n, T)
    variable_index: np.ndarray


def prepare_windows(windows, cfg: model.ModelConfig, anchors, var_names) -> PreparedSet:
    """Decompose every window once; decomposition is fixed during training."""
    if not windows:
        raise ShapeError("no windows to prepare")
    use = anchors.zeroed() if cfg.no_context else anchors
    grids, anchor_rows, targets, var_idx = [], [], [], []
    for w in windows:
        _, grid = coordinator.coordinate(w.lookback, cfg.n_bands, cfg.kappa, cfg.patch_len)
        grids.append(grid.patches)
        anchor_rows.append(use.variable(var_names[w.variable_index]))
        targets.append(w.target)
        var_idx.append(w.variable_index)
    return PreparedSet(
        grids=np.stack(grids),
        anchors=np.stack(anchor_rows),
        targets=np.stack(targets),
        variable_index=np.asarray(var_idx),
    )


class Adam:
    """Standard Adam (0.9, 0.999, 1e-8), no weight decay."""

    def __init__(self, params, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = params
        self.lr = lr
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.t = 0
        self.m = {k: np.zeros_like(p.data) for k, p in params.items()}
        self.v = {k: np.zeros_like(p.data) for k, p in params.items()}

    def step(self, grads):
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        for name, p in self.params.items():
            g = grads[name]
            self.m[name] = b1 * self.m[name] + (1 - b1) * g
            self.v[name] = b2 * self.v[name] + (1 - b2) * g * g
            m_hat = self.m[name] / (1 - b1**self.t)
            v_hat = self.v[name] / (1 - b2**self.t)
            p.data = p.data - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def _global_anchor(anchors, cfg):
    use = anchors.zeroed() if cfg.no_context else anchors
    return use.global_vec


def _batched_eval(params, prepared: PreparedSet, global_anchor, cfg, batch_size=256):
    preds = []
    frac_sum = np.zeros(cfg.n_experts)
    prob_sum = np.zeros(cfg.n_experts)
    n = prepared.grids.shape[0]
    for lo in range(0, n, batch_size):
        hi = min(lo + batch_size, n)
        trace = model.forward(
            params, prepared.grids[lo:hi], prepared.anchors[lo:hi], global_anchor, cfg
        )
        preds.append(trace.prediction.data)
        frac_sum += trace.expert_fraction * (hi - lo)
        prob_sum += trace.gate_probability * (hi - lo)
    return np.concatenate(preds), RoutingStats(frac_sum / n, prob_sum / n)


def train(train_windows, val_windows, anchors, cfg: model.ModelConfig,
          tcfg: TrainConfig, var_names, history_path=None, params=None):
    """Adam minimization of Huber + alpha * load loss with best-val early stop.

    Returns (best_params, history). History records one JSON-able dict per
    epoch; when history_path is given each record is also appended as a line.
    """
    train_set = prepare_windows(train_windows, cfg, anchors, var_names)
    val_set = prepare_windows(val_windows, cfg, anchors, var_names) if val_windows else None
    g_anchor = _global_anchor(anchors, cfg)

    if params is None:
        params = model.init_params(cfg, seed=tcfg.seed)
    optimizer = Adam(params, tcfg.lr)
    rng = np.random.default_rng(tcfg.seed)

    history = []
    best_val = np.inf
    best_params = {k: p.data.copy() for k, p in params.items()}
    stall = 0
    n = train_set.grids.shape[0]
    fh = open(history_path, "w", encoding="utf-8") if history_path else None
    try:
        for epoch in range(tcfg.epochs):
            started = time.monotonic()
            order = rng.permutation(n)
            epoch_loss = 0.0
            epoch_load = 0.0
            n_batches = 0
            for lo in range(0, n, tcfg.batch_size):
                pick = order[lo:lo + tcfg.batch_size]
                trace = model.forward(
                    params, train_set.grids[pick], train_set.anchors[pick], g_anchor, cfg
                )
                loss = total_loss(trace.prediction, train_set.targets[pick],
                                  trace.load_loss, tcfg.delta, tcfg.alpha)
                if not np.isfinite(loss.data):
                    raise NonFiniteError(f"training diverged at epoch {epoch}")
                grads = model.gradient(params, loss)
                optimizer.step(grads)
                epoch_loss += float(loss.data)
                epoch_load += float(trace.load_loss.data)
                n_batches += 1

            if val_set is not None:
                val_pred, _ = _batched_eval(params, val_set, g_anchor, cfg)
                val_mse = data.mse(val_pred, val_set.targets)
                val_mae = data.mae(val_pred, val_set.targets)
            else:
                val_mse = val_mae = float("nan")

            record = {
                "epoch": epoch,
                "train_loss": epoch_loss / n_batches,
                "val_mse": val_mse,
                "val_mae": val_mae,
                "l_load": epoch_load / n_batches,
                "lr": tcfg.lr,
                "seconds": round(time.monotonic() - started, 3) if tcfg.log_timing else 0.0,
            }
            history.append(record)
            if fh:
                fh.write(json.dumps(record) + "\n")
                fh.flush()

            score = val_mse if val_set is not None else record["train_loss"]
            if score < best_val:
                best_val = score
                best_params = {k: p.data.copy() for k, p in params.items()}
                stall = 0
            else:
                stall += 1
                if stall > tcfg.patience:
                    break
    except NonFiniteError:
        pass  # keep the last good parameters
    finally:
        if fh:
            fh.close()
    for name, p in params.items():
        p.data = best_params[name]
    return params, history


@dataclass
class ForecastReport:
    metrics: dict                 # horizon -> {"mse": float, "mae": float}
    routing: RoutingStats
    n_windows: int
    space: str = "normalized"

    def to_dict(self):
        return {
            "metrics": {str(h): dict(v) for h, v in self.metrics.items()},
            "routing": {
                "expert_fraction": self.routing.fraction.tolist(),
                "gate_probability": self.routing.probability.tolist(),
                "load_loss": self.routing.load_loss(),
            },
            "n_windows": self.n_windows,
            "space": self.space,
        }


def evaluate(test_windows, anchors, params, cfg: model.ModelConfig, var_names,
             horizons=None, denormalize=False, batch_size=256) -> ForecastReport:
    """Pure function of (weights, data): per-horizon MSE/MAE plus routing stats.

    Horizons are prefixes of the trained prediction length.
    """
    prepared = prepare_windows(test_windows, cfg, anchors, var_names)
    preds, routing = _batched_eval(
        params, prepared, _global_anchor(anchors, cfg), cfg, batch_size
    )
    truth = prepared.targets
    if denormalize:
        stats = np.asarray([w.norm for w in test_windows])
        preds = preds * stats[:, 1:2] + stats[:, 0:1]
        truth = truth * stats[:, 1:2] + stats[:, 0:1]
    horizons = horizons or [cfg.horizon]
    metrics = {}
    for h in horizons:
        if h > cfg.horizon:
            raise ShapeError(f"horizon {h} exceeds trained length {cfg.horizon}")
        metrics[h] = {"mse": data.mse(preds[:, :h], truth[:, :h]),
                      "mae": data.mae(preds[:, :h], truth[:, :h])}
    return ForecastReport(
        metrics=metrics,
        routing=routing,
        n_windows=len(test_windows),
        space="raw" if denormalize else "normalized",
    )


def zero_shot(params, cfg: model.ModelConfig, target_dataset, target_anchors,
              split_spec, horizons=None, stride=1, denormalize=False) -> ForecastReport:
    """Evaluate a trained model on an unseen dataset with no weight updates.

    The target's own train-segment statistics normalize its test windows.
    """
    train_seg, _, test_seg = data.split(target_dataset, split_spec)
    (_, test_norm), norm = data.standardize(train_seg, test_seg)
    windows = data.make_windows(test_norm, cfg.lookback, cfg.horizon, stride, norm=norm)
    return evaluate(windows, target_anchors, params, cfg, target_dataset.var_names,
                    horizons=horizons, denormalize=denormalize)


def repeat_last_baseline(windows):
    """Repeat-last-value predictions for a window list: the naive baseline."""
    preds = np.stack([np.full_like(w.target, w.lookback[-1]) for w in windows])
    truth = np.stack([w.target for w in windows])
    return data.mse(preds, truth), data.mae(preds, truth)
