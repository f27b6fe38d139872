"""Training loop: teacher-forced L1 objective, Adam, gradient clipping,
seeded shuffling, checkpointing and CSV loss history."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import autodiff as ad
from . import checkpoint as ckpt
from . import model as mdl


class EmptyDataset(ValueError):
    pass


class NonFiniteLoss(RuntimeError):
    pass


class ConfigError(ValueError):
    pass


@dataclass
class TrainConfig:
    epochs: int = 200
    batch_size: int = 32
    lr: float = 0.001
    l2: float = 1e-4
    seed: int = 0
    teacher_forcing: bool = True
    checkpoint_interval: int = 0  # epochs between periodic saves; 0 = best/final only
    clip_norm: float = 5.0
    model: str = "desk"  # preset name: full | desk | tiny

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1 or self.lr < 0:
            raise ConfigError("epochs >= 1, batch_size >= 1 and lr >= 0 required")


_BOOLS = {"true": True, "1": True, "yes": True, "on": True,
          "false": False, "0": False, "no": False, "off": False}


def parse_train_config(text) -> TrainConfig:
    """Plain `key = value` lines; '#' starts a comment."""
    cfg = TrainConfig()
    fields = {f: type(getattr(cfg, f)) for f in cfg.__dataclass_fields__}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in fields:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        typ = fields[key]
        try:
            if typ is bool:
                parsed = _BOOLS[value.lower()]
            else:
                parsed = typ(value)
        except (KeyError, ValueError):
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {value!r}")
        cfg = replace(cfg, **{key: parsed})
    return cfg


def format_train_config(cfg: TrainConfig) -> str:
    lines = [f"{f} = {getattr(cfg, f)}" for f in cfg.__dataclass_fields__]
    return "\n".join(lines) + "\n"


def _stack_dataset(dataset, dtype):
    if len(dataset) == 0:
        raise EmptyDataset("dataset is empty")
    imgs = np.stack([np.asarray(img, dtype=dtype) for img, _ in dataset])[:, None]
    tgts = np.stack([np.asarray(t, dtype=dtype) for _, t in dataset])
    return imgs, tgts


def evaluate_loss(dataset, store, model_cfg, batch_size=32) -> float:
    """Mean per-sample L1 (px) with autoregressive decoding and eval-mode
    batch normalization."""
    dtype = store["out.w"].dtype
    imgs, tgts = _stack_dataset(dataset, dtype)
    total = 0.0
    with ad.no_grad():
        for i in range(0, len(imgs), batch_size):
            xb, yb = imgs[i:i + batch_size], tgts[i:i + batch_size]
            pred, _ = mdl.forward(xb, store, model_cfg, training=False)
            total += float(np.abs(pred.data - yb).sum())
    return total / (len(imgs) * model_cfg.seq.n_steps)


def train(dataset, cfg: TrainConfig, model_cfg=None, store=None, val=None,
          ckpt_path=None, max_steps=None, log=None, stop_fn=None):
    """Train and return (store, history).

    history is a list of (epoch, train_loss, val_loss-or-None) rows.
    When `ckpt_path` is set, the checkpoint with the best validation loss
    (or the final state if no validation set) is written there; periodic
    saves honour cfg.checkpoint_interval. `stop_fn(store, epoch)` may end
    training early. On a non-finite loss, parameters are restored to the
    last epoch boundary and NonFiniteLoss is raised.
    """
    if len(dataset) == 0:
        raise EmptyDataset("dataset is empty")
    if model_cfg is None:
        model_cfg = getattr(mdl.ModelConfig, cfg.model)()
    if store is None:
        store = mdl.init_params(model_cfg, seed=cfg.seed)
    dtype = store["out.w"].dtype
    imgs, tgts = _stack_dataset(dataset, dtype)

    adam = ad.AdamState(store, lr=cfg.lr, weight_decay=cfg.l2)
    rng = np.random.default_rng(cfg.seed)
    history = []
    best_val = np.inf
    steps = 0
    snap = store.snapshot()
    cfg_vec = mdl.config_to_vec(model_cfg)

    def save(path):
        ckpt.save_checkpoint(path, store, config_vec=cfg_vec, adam=adam)

    for epoch in range(1, cfg.epochs + 1):
        perm = rng.permutation(len(imgs))
        epoch_loss = 0.0
        try:
            for i in range(0, len(perm), cfg.batch_size):
                idx = perm[i:i + cfg.batch_size]
                xb, yb = imgs[idx], tgts[idx]
                store.zero_grad()
                _, loss = mdl.forward(xb, store, model_cfg, targets=yb,
                                      training=True,
                                      teacher_forcing=cfg.teacher_forcing)
                if not np.isfinite(loss.data):
                    raise ad.NonFiniteValue("training loss is not finite")
                ad.backward(loss)
                store.clip_grad_norm(cfg.clip_norm)
                ad.adam_step(store, adam)
                epoch_loss += float(loss.data) * len(idx)
                steps += 1
                if max_steps is not None and steps >= max_steps:
                    break
        except ad.NonFiniteValue as exc:
            store.restore(snap)
            if ckpt_path is not None:
                save(ckpt_path)
            raise NonFiniteLoss(str(exc)) from exc

        train_loss = epoch_loss / len(imgs)
        val_loss = evaluate_loss(val, store, model_cfg) if val else None
        history.append((epoch, train_loss, val_loss))
        if log is not None:
            log(epoch, train_loss, val_loss)
        snap = store.snapshot()

        if ckpt_path is not None:
            if val and val_loss < best_val:
                best_val = val_loss
                save(ckpt_path)
            if cfg.checkpoint_interval and epoch % cfg.checkpoint_interval == 0:
                save(str(ckpt_path) + f".epoch{epoch}")
        if stop_fn is not None and stop_fn(store, epoch):
            break
        if max_steps is not None and steps >= max_steps:
            break

    if ckpt_path is not None and not val:
        save(ckpt_path)
    return store, history


def history_csv(history) -> str:
    lines = ["epoch,train_loss,val_loss"]
    for epoch, tr, va in history:
        va_s = "" if va is None else f"{va:.6f}"
        lines.append(f"{epoch},{tr:.6f},{va_s}")
    return "\n".join(lines) + "\n"
