"""Image -> trajectory model: CNN feature-sequence extractor, stacked
bidirectional LSTM encoder, bridged autoregressive LSTM decoder, and the
mean-L1 coordinate objective.

All coordinates are in pixel units of the 64x64 box. The decoder always
emits exactly `n_steps` 2-d points; step 1 consumes the start token, later
steps consume the previous ground-truth point (teacher forcing) or the
previous prediction (autoregressive).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .autodiff import ShapeMismatch, Tensor
from .trajectory import PenTrajectory


@dataclass(frozen=True)
class CnnConfig:
    channels: tuple = (32, 64, 128, 128, 256, 256)
    # pooling windows (height, width) applied after the given 1-based layer
    pools: tuple = ((1, (2, 2)), (2, (2, 2)), (4, (2, 1)), (5, (2, 1)), (6, (4, 1)))
    batchnorm_layers: tuple = (3, 4)
    input_size: int = 64

    def pool_after(self, layer):
        for lay, win in self.pools:
            if lay == layer:
                return win
        return None

    def output_shape(self):
        """(sequence length, feature dim) after the conv/pool schedule."""
        h = w = self.input_size
        for layer in range(1, len(self.channels) + 1):
            win = self.pool_after(layer)
            if win is not None:
                ph, pw = win
                if h % ph or w % pw:
                    raise ShapeMismatch(f"pool {win} after layer {layer} does not divide {h}x{w}")
                h //= ph
                w //= pw
        if h != 1:
            raise ShapeMismatch(f"pooling schedule leaves height {h} != 1")
        return w, self.channels[-1]


@dataclass(frozen=True)
class Seq2SeqConfig:
    enc_hidden: int = 512  # per direction
    enc_layers: int = 2
    dec_hidden: int = 512
    dec_layers: int = 2
    n_steps: int = 50
    start_token: tuple = (-1.0, -1.0)


@dataclass(frozen=True)
class ModelConfig:
    cnn: CnnConfig = field(default_factory=CnnConfig)
    seq: Seq2SeqConfig = field(default_factory=Seq2SeqConfig)

    @staticmethod
    def full():
        """Full-scale preset (default widths); heavy for CPU training."""
        return ModelConfig()

    @staticmethod
    def desk():
        """CPU-scale preset: same topology, smaller widths."""
        return ModelConfig(
            cnn=CnnConfig(channels=(8, 16, 32, 32, 64, 64)),
            seq=Seq2SeqConfig(enc_hidden=96, dec_hidden=96),
        )

    @staticmethod
    def tiny():
        """Smallest instance exercising every layer type (gradient checks)."""
        return ModelConfig(
            cnn=CnnConfig(channels=(4, 4, 8, 8, 8, 8)),
            seq=Seq2SeqConfig(enc_hidden=12, dec_hidden=12, n_steps=8),
        )


def config_to_vec(cfg: ModelConfig) -> np.ndarray:
    """Flat float encoding stored in checkpoints (self-describing files)."""
    v = [1.0, len(cfg.cnn.channels)]
    v += list(cfg.cnn.channels)
    v.append(len(cfg.cnn.pools))
    for lay, (ph, pw) in cfg.cnn.pools:
        v += [lay, ph, pw]
    v.append(len(cfg.cnn.batchnorm_layers))
    v += list(cfg.cnn.batchnorm_layers)
    v += [cfg.cnn.input_size,
          cfg.seq.enc_hidden, cfg.seq.enc_layers,
          cfg.seq.dec_hidden, cfg.seq.dec_layers,
          cfg.seq.n_steps, cfg.seq.start_token[0], cfg.seq.start_token[1]]
    return np.array(v, dtype=np.float32)


def config_from_vec(vec) -> ModelConfig:
    v = [float(x) for x in np.asarray(vec).reshape(-1)]
    if int(v[0]) != 1:
        raise ValueError(f"unknown config encoding version {v[0]}")
    i = 1
    nconv = int(v[i]); i += 1
    channels = tuple(int(x) for x in v[i:i + nconv]); i += nconv
    npool = int(v[i]); i += 1
    pools = []
    for _ in range(npool):
        pools.append((int(v[i]), (int(v[i + 1]), int(v[i + 2]))))
        i += 3
    nbn = int(v[i]); i += 1
    bn = tuple(int(x) for x in v[i:i + nbn]); i += nbn
    input_size = int(v[i]); i += 1
    enc_h, enc_l, dec_h, dec_l, n_steps = (int(x) for x in v[i:i + 5]); i += 5
    start = (v[i], v[i + 1])
    return ModelConfig(
        cnn=CnnConfig(channels=channels, pools=tuple(pools),
                      batchnorm_layers=bn, input_size=input_size),
        seq=Seq2SeqConfig(enc_hidden=enc_h, enc_layers=enc_l,
                          dec_hidden=dec_h, dec_layers=dec_l,
                          n_steps=n_steps, start_token=start),
    )


def _glorot(rng, shape, dtype):
    fan_in = shape[-1] if len(shape) == 2 else int(np.prod(shape[1:]))
    fan_out = shape[0] if len(shape) == 2 else shape[0] * int(np.prod(shape[2:]))
    lim = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-lim, lim, size=shape).astype(dtype)


def _add_lstm(store, rng, prefix, in_dim, hidden, dtype):
    store.add_param(f"{prefix}.wx", _glorot(rng, (4 * hidden, in_dim), dtype))
    store.add_param(f"{prefix}.wh", _glorot(rng, (4 * hidden, hidden), dtype))
    b = np.zeros(4 * hidden, dtype=dtype)
    b[hidden:2 * hidden] = 1.0  # forget-gate bias
    store.add_param(f"{prefix}.b", b)


def init_params(cfg: ModelConfig, seed=0, dtype=np.float32) -> ad.ParameterStore:
    rng = np.random.default_rng(seed)
    store = ad.ParameterStore()
    in_ch = 1
    for i, out_ch in enumerate(cfg.cnn.channels, 1):
        store.add_param(f"conv{i}.w", _glorot(rng, (out_ch, in_ch, 3, 3), dtype))
        store.add_param(f"conv{i}.b", np.zeros(out_ch, dtype=dtype))
        if i in cfg.cnn.batchnorm_layers:
            store.add_param(f"bn{i}.gamma", np.ones(out_ch, dtype=dtype))
            store.add_param(f"bn{i}.beta", np.zeros(out_ch, dtype=dtype))
            store.add_buffer(f"bn{i}.running_mean", np.zeros(out_ch, dtype=dtype))
            store.add_buffer(f"bn{i}.running_var", np.ones(out_ch, dtype=dtype))
        in_ch = out_ch

    _, feat_dim = cfg.cnn.output_shape()
    eh = cfg.seq.enc_hidden
    in_dim = feat_dim
    for l in range(1, cfg.seq.enc_layers + 1):
        _add_lstm(store, rng, f"enc{l}.fwd", in_dim, eh, dtype)
        _add_lstm(store, rng, f"enc{l}.bwd", in_dim, eh, dtype)
        in_dim = 2 * eh
    dh = cfg.seq.dec_hidden
    for l in range(1, cfg.seq.dec_layers + 1):
        store.add_param(f"bridge{l}.h.w", _glorot(rng, (dh, 2 * eh), dtype))
        store.add_param(f"bridge{l}.h.b", np.zeros(dh, dtype=dtype))
        store.add_param(f"bridge{l}.c.w", _glorot(rng, (dh, 2 * eh), dtype))
        store.add_param(f"bridge{l}.c.b", np.zeros(dh, dtype=dtype))
    in_dim = 2
    for l in range(1, cfg.seq.dec_layers + 1):
        _add_lstm(store, rng, f"dec{l}", in_dim, dh, dtype)
        in_dim = dh
    store.add_param("out.w", _glorot(rng, (2, dh), dtype))
    store.add_param("out.b", np.zeros(2, dtype=dtype))
    return store


def extract_feature_sequence(img, store, cfg: ModelConfig, training=False):
    """64x64 image batch -> list of per-column feature tensors (N, feat)."""
    x = img if isinstance(img, Tensor) else Tensor(img)
    if x.data.ndim == 2:
        x = ad.reshape(x, (1, 1) + x.shape)
    if x.data.ndim != 4 or x.shape[2] != cfg.cnn.input_size or x.shape[3] != cfg.cnn.input_size:
        raise ShapeMismatch(f"expected (N, 1, {cfg.cnn.input_size}, {cfg.cnn.input_size}) input, got {x.shape}")
    for i in range(1, len(cfg.cnn.channels) + 1):
        x = ad.conv2d_3x3(x, store[f"conv{i}.w"], store[f"conv{i}.b"])
        if i in cfg.cnn.batchnorm_layers:
            x = ad.batchnorm(x, store[f"bn{i}.gamma"], store[f"bn{i}.beta"],
                             store.buffer(f"bn{i}.running_mean"),
                             store.buffer(f"bn{i}.running_var"),
                             training=training)
        x = ad.relu(x)
        win = cfg.cnn.pool_after(i)
        if win is not None:
            x = ad.maxpool(x, win)
    n, c, h, w = x.shape
    seq = [ad.reshape(ad.narrow(x, 3, t, 1), (n, c)) for t in range(w)]
    return seq


@dataclass
class EncodedState:
    """Decoder initial (h, c) per layer, plus the pre-bridge final states
    (kept for diagnostics and tests of bidirectionality)."""
    dec_init: list  # [(h, c)] per decoder layer
    raw_finals: list  # [(fwd_h, bwd_h, fwd_c, bwd_c)] per encoder layer


def _run_lstm_dir(seq, store, prefix, hidden, reverse):
    n = seq[0].shape[0]
    dtype = store[f"{prefix}.wx"].dtype
    h = Tensor(np.zeros((n, hidden), dtype=dtype))
    c = Tensor(np.zeros((n, hidden), dtype=dtype))
    order = range(len(seq) - 1, -1, -1) if reverse else range(len(seq))
    outs = [None] * len(seq)
    for t in order:
        h, c = ad.lstm_step(seq[t], h, c,
                            store[f"{prefix}.wx"], store[f"{prefix}.wh"],
                            store[f"{prefix}.b"])
        outs[t] = h
    return outs, h, c


def encode(seq, store, cfg: ModelConfig) -> EncodedState:
    """Stacked BiLSTM over the feature sequence; final forward state (at
    position n) and final backward state (at position 1) are concatenated
    per layer and mapped through the bridge affines."""
    eh = cfg.seq.enc_hidden
    raw = []
    inputs = seq
    for l in range(1, cfg.seq.enc_layers + 1):
        f_outs, f_h, f_c = _run_lstm_dir(inputs, store, f"enc{l}.fwd", eh, reverse=False)
        b_outs, b_h, b_c = _run_lstm_dir(inputs, store, f"enc{l}.bwd", eh, reverse=True)
        inputs = [ad.concat([f_outs[t], b_outs[t]], axis=1) for t in range(len(seq))]
        raw.append((f_h, b_h, f_c, b_c))

    dec_init = []
    for l in range(1, cfg.seq.dec_layers + 1):
        f_h, b_h, f_c, b_c = raw[min(l, len(raw)) - 1]
        hcat = ad.concat([f_h, b_h], axis=1)
        ccat = ad.concat([f_c, b_c], axis=1)
        h0 = ad.affine(hcat, store[f"bridge{l}.h.w"], store[f"bridge{l}.h.b"])
        c0 = ad.affine(ccat, store[f"bridge{l}.c.w"], store[f"bridge{l}.c.b"])
        dec_init.append((h0, c0))
    return EncodedState(dec_init=dec_init, raw_finals=raw)


def decode(state: EncodedState, store, cfg: ModelConfig, targets=None):
    """Run the decoder for exactly n_steps. With `targets` (N, n', 2) the
    step input is the previous ground-truth point (teacher forcing);
    without, the previous prediction (autoregressive)."""
    n = state.dec_init[0][0].shape[0]
    dtype = state.dec_init[0][0].dtype
    n_steps = cfg.seq.n_steps
    if targets is not None:
        targets = targets if isinstance(targets, Tensor) else Tensor(targets)
        if targets.shape != (n, n_steps, 2):
            raise ShapeMismatch(f"targets must be ({n}, {n_steps}, 2), got {targets.shape}")
    hs = [h for h, _ in state.dec_init]
    cs = [c for _, c in state.dec_init]
    start = np.tile(np.asarray(cfg.seq.start_token, dtype=dtype), (n, 1))
    prev = Tensor(start)
    outs = []
    for t in range(n_steps):
        x = prev
        for l in range(cfg.seq.dec_layers):
            hs[l], cs[l] = ad.lstm_step(x, hs[l], cs[l],
                                        store[f"dec{l + 1}.wx"],
                                        store[f"dec{l + 1}.wh"],
                                        store[f"dec{l + 1}.b"])
            x = hs[l]
        y = ad.affine(x, store["out.w"], store["out.b"])
        outs.append(ad.reshape(y, (n, 1, 2)))
        if t + 1 < n_steps:
            if targets is not None:
                prev = ad.reshape(ad.narrow(targets, 1, t, 1), (n, 2))
            else:
                prev = y
    return ad.concat(outs, axis=1)


def l1_loss(pred, targets):
    """Training objective: per-sample mean L1 over steps, averaged over
    the batch, in pixel units."""
    targets = targets if isinstance(targets, Tensor) else Tensor(targets)
    if pred.shape != targets.shape:
        raise ShapeMismatch(f"loss: pred {pred.shape} vs targets {targets.shape}")
    n, n_steps, _ = pred.shape
    return ad.scale(ad.l1_diff_sum(pred, targets), 1.0 / (n * n_steps))


def forward(img, store, cfg: ModelConfig, targets=None, training=False,
            teacher_forcing=True):
    """Full pipeline. Returns (pred (N, n', 2) tensor, loss or None)."""
    seq = extract_feature_sequence(img, store, cfg, training=training)
    state = encode(seq, store, cfg)
    dec_targets = targets if (targets is not None and teacher_forcing) else None
    pred = decode(state, store, cfg, targets=dec_targets)
    loss = l1_loss(pred, targets) if targets is not None else None
    return pred, loss


def recover_trajectory(img, store, cfg: ModelConfig) -> PenTrajectory:
    """Autoregressive inference on one image (eval-mode batchnorm)."""
    arr = np.asarray(img, dtype=store["out.w"].dtype)
    if arr.ndim == 2:
        arr = arr[None, None]
    with ad.no_grad():
        pred, _ = forward(arr, store, cfg, training=False)
    return PenTrajectory(pred.data[0].astype(np.float64), normalized=True)


def parameter_count(cfg: ModelConfig) -> int:
    return init_params(cfg, seed=0).num_parameters()
