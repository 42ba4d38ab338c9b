"""Minimal trainable encoder-decoder: word-level vocabulary, single-layer
recurrent encoder and decoder with dot-product attention, plain SGD, greedy
and beam decoding.  Forward and backward passes are written out in numpy so
the analytic gradients can be verified coordinate-by-coordinate against
centered finite differences.

Shapes (d = model width, V = vocabulary size):
    emb     (V, d)    shared input/output-side token embeddings
    enc_wx  (d, d)    encoder input projection      h_t = tanh(x W + h W' + b)
    enc_wh  (d, d)    encoder recurrence
    enc_b   (d,)
    dec_wx  (d, d)    decoder input projection      s_u = tanh(y W + s W' + b)
    dec_wh  (d, d)    decoder recurrence
    dec_b   (d,)
    attn_w  (2d, d)   combine [state; context] after dot-product attention
    attn_b  (d,)
    out_w   (d, V)    output projection (no bias)

The decoder starts from the final encoder state and consumes EOS as its
start symbol.  Padded encoder positions are carried through unchanged and
masked out of attention, so batch results match per-sequence results.
"""
from __future__ import annotations

import json
import random
import struct
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .formatter import FormattedPair

PAD, EOS, UNK = 0, 1, 2
RESERVED_TOKENS = ("<pad>", "</s>", "<unk>")

PARAM_ORDER = (
    "emb",
    "enc_wx",
    "enc_wh",
    "enc_b",
    "dec_wx",
    "dec_wh",
    "dec_b",
    "attn_w",
    "attn_b",
    "out_w",
)

CHECKPOINT_MAGIC = b"TS2S"
CHECKPOINT_VERSION = 1


class ModelError(ValueError):
    pass


class DivergenceError(RuntimeError):
    """A training step produced non-finite values."""


# -- vocabulary --


@dataclass(frozen=True)
class Vocabulary:
    id_to_token: tuple[str, ...]
    token_to_id: dict

    def __len__(self) -> int:
        return len(self.id_to_token)

    def id(self, token: str) -> int:
        return self.token_to_id.get(token, UNK)

    def encode(self, text: str) -> list[int]:
        return [self.id(t) for t in text.split()]

    def decode(self, ids: Sequence[int]) -> str:
        return " ".join(self.id_to_token[i] for i in ids)


def build_vocab(pairs: Sequence[FormattedPair], min_count: int = 1) -> Vocabulary:
    """Word vocabulary over inputs and targets; ids by frequency then token.

    Tokens below min_count fall back to UNK at encode time.
    """
    if not pairs:
        raise ModelError("cannot build a vocabulary from an empty corpus")
    counts: Counter = Counter()
    for p in pairs:
        counts.update(p.input_text.split())
        counts.update(p.target_text.split())
    kept = sorted(
        (t for t, c in counts.items() if c >= min_count and t not in RESERVED_TOKENS),
        key=lambda t: (-counts[t], t),
    )
    id_to_token = RESERVED_TOKENS + tuple(kept)
    return Vocabulary(id_to_token, {t: i for i, t in enumerate(id_to_token)})


# -- model --


@dataclass
class ToyModel:
    vocab: Vocabulary
    d_model: int
    seed: int
    params: dict[str, np.ndarray]

    @property
    def vocab_size(self) -> int:
        return len(self.vocab)


def param_shapes(vocab_size: int, d: int) -> dict[str, tuple[int, ...]]:
    return {
        "emb": (vocab_size, d),
        "enc_wx": (d, d),
        "enc_wh": (d, d),
        "enc_b": (d,),
        "dec_wx": (d, d),
        "dec_wh": (d, d),
        "dec_b": (d,),
        "attn_w": (2 * d, d),
        "attn_b": (d,),
        "out_w": (d, vocab_size),
    }


# Uniform init half-width.  0.08 (the classic small-NMT value) leaves a
# width-64 model in a near-zero regime where the input pathway crawls;
# 0.25 is roughly the Glorot limit for (64, 64) and trains cleanly.
INIT_RANGE = 0.25


def init_model(vocab: Vocabulary, d_model: int = 64, seed: int = 0) -> ToyModel:
    """Uniform [-INIT_RANGE, INIT_RANGE] initialization under the given seed."""
    rng = np.random.default_rng(seed)
    params = {
        name: rng.uniform(-INIT_RANGE, INIT_RANGE, shape)
        for name, shape in param_shapes(len(vocab), d_model).items()
    }
    return ToyModel(vocab, d_model, seed, params)


def check_finite(model: ToyModel) -> None:
    for name, tensor in model.params.items():
        if not np.all(np.isfinite(tensor)):
            raise DivergenceError(f"parameter {name} contains non-finite values")


# -- batches --


@dataclass(frozen=True)
class EncodedBatch:
    """Padded id arrays: x (B,T); y_in/y_out (B,U), y_out rows end with EOS."""

    x: np.ndarray
    y_in: np.ndarray
    y_out: np.ndarray


def encode_batch(
    pairs: Sequence[FormattedPair],
    vocab: Vocabulary,
    max_input_len: int,
    max_target_len: int,
) -> EncodedBatch:
    encoded = [
        (vocab.encode(p.input_text)[:max_input_len], vocab.encode(p.target_text)[: max_target_len - 1])
        for p in pairs
    ]
    return pack_batch(encoded)


def pack_batch(encoded: Sequence[tuple[list[int], list[int]]]) -> EncodedBatch:
    """Pad (input_ids, target_ids) lists into arrays; EOS frames the decoder."""
    if not encoded:
        raise ModelError("empty batch")
    for inp, _ in encoded:
        if not inp:
            raise ModelError("input sequence with zero tokens")
    t_max = max(len(inp) for inp, _ in encoded)
    u_max = max(len(tgt) for _, tgt in encoded) + 1
    b = len(encoded)
    x = np.full((b, t_max), PAD, dtype=np.int64)
    y_in = np.full((b, u_max), PAD, dtype=np.int64)
    y_out = np.full((b, u_max), PAD, dtype=np.int64)
    for i, (inp, tgt) in enumerate(encoded):
        x[i, : len(inp)] = inp
        y_in[i, 0] = EOS
        y_in[i, 1 : len(tgt) + 1] = tgt
        y_out[i, : len(tgt)] = tgt
        y_out[i, len(tgt)] = EOS
    return EncodedBatch(x, y_in, y_out)


def _validate_batch(batch: EncodedBatch, vocab_size: int) -> None:
    for name, arr in (("x", batch.x), ("y_in", batch.y_in), ("y_out", batch.y_out)):
        if arr.min() < 0 or arr.max() >= vocab_size:
            raise ModelError(f"batch {name} holds ids outside [0, {vocab_size})")
    lengths = (batch.y_out != PAD).sum(axis=1)
    if (lengths == 0).any():
        raise ModelError("target sequence with zero tokens")
    rows = np.arange(batch.y_out.shape[0])
    if not (batch.y_out[rows, lengths - 1] == EOS).all():
        raise ModelError("every target must end with EOS")


# -- forward / backward --


def _forward(params: dict, batch: EncodedBatch):
    emb = params["emb"]
    x, y_in, y_out = batch.x, batch.y_in, batch.y_out
    b, t_len = x.shape
    u_len = y_in.shape[1]
    d = params["enc_b"].shape[0]

    src_mask = (x != PAD).astype(np.float64)  # (B,T)
    tgt_mask = (y_out != PAD).astype(np.float64)  # (B,U)
    n_tokens = tgt_mask.sum()

    # Encoder; padded steps carry the previous state through unchanged.
    h = np.zeros((b, d))
    h_all = np.zeros((b, t_len, d))
    enc_tanh = np.zeros((b, t_len, d))
    enc_prev = np.zeros((b, t_len, d))
    for t in range(t_len):
        m = src_mask[:, t : t + 1]
        z = emb[x[:, t]] @ params["enc_wx"] + h @ params["enc_wh"] + params["enc_b"]
        th = np.tanh(z)
        enc_tanh[:, t] = th
        enc_prev[:, t] = h
        h = m * th + (1.0 - m) * h
        h_all[:, t] = h

    # Decoder with scaled dot-product attention over the encoder states;
    # the 1/sqrt(d) keeps softmax out of saturation at width 64.
    scale = 1.0 / np.sqrt(d)
    score_mask = (src_mask - 1.0) * 1e9  # 0 on real positions, -1e9 on pads
    s = h
    loss = 0.0
    dec = []
    for u in range(u_len):
        x_u = emb[y_in[:, u]]
        s_prev = s
        s = np.tanh(x_u @ params["dec_wx"] + s_prev @ params["dec_wh"] + params["dec_b"])
        scores = np.einsum("bd,btd->bt", s, h_all) * scale + score_mask
        scores -= scores.max(axis=1, keepdims=True)
        alpha = np.exp(scores)
        alpha /= alpha.sum(axis=1, keepdims=True)
        context = np.einsum("bt,btd->bd", alpha, h_all)
        comb = np.concatenate([s, context], axis=1)
        a = np.tanh(comb @ params["attn_w"] + params["attn_b"])
        logits = a @ params["out_w"]
        logits_shift = logits - logits.max(axis=1, keepdims=True)
        exp = np.exp(logits_shift)
        probs = exp / exp.sum(axis=1, keepdims=True)
        logp = logits_shift - np.log(exp.sum(axis=1, keepdims=True))
        w = tgt_mask[:, u] / n_tokens
        loss += -(logp[np.arange(b), y_out[:, u]] * w).sum()
        dec.append((s_prev, s, alpha, comb, a, probs, w))

    cache = {
        "h_all": h_all,
        "enc_tanh": enc_tanh,
        "enc_prev": enc_prev,
        "src_mask": src_mask,
        "dec": dec,
    }
    return float(loss), cache


def _backward(params: dict, batch: EncodedBatch, cache: dict) -> dict:
    emb = params["emb"]
    x, y_in, y_out = batch.x, batch.y_in, batch.y_out
    b, t_len = x.shape
    u_len = y_in.shape[1]
    d = params["enc_b"].shape[0]
    rows = np.arange(b)

    grads = {name: np.zeros_like(tensor) for name, tensor in params.items()}
    h_all = cache["h_all"]
    d_h_all = np.zeros_like(h_all)
    scale = 1.0 / np.sqrt(d)

    ds_next = np.zeros((b, d))
    for u in range(u_len - 1, -1, -1):
        s_prev, s, alpha, comb, a, probs, w = cache["dec"][u]

        dlogits = probs.copy()
        dlogits[rows, y_out[:, u]] -= 1.0
        dlogits *= w[:, None]

        grads["out_w"] += a.T @ dlogits
        da = dlogits @ params["out_w"].T
        dpre_a = da * (1.0 - a * a)
        grads["attn_w"] += comb.T @ dpre_a
        grads["attn_b"] += dpre_a.sum(axis=0)
        dcomb = dpre_a @ params["attn_w"].T
        ds = dcomb[:, :d]
        dcontext = dcomb[:, d:]

        dalpha = np.einsum("bd,btd->bt", dcontext, h_all)
        d_h_all += alpha[:, :, None] * dcontext[:, None, :]
        dscores = alpha * (dalpha - (alpha * dalpha).sum(axis=1, keepdims=True))
        ds += np.einsum("bt,btd->bd", dscores, h_all) * scale
        d_h_all += dscores[:, :, None] * (s * scale)[:, None, :]

        dz = (ds + ds_next) * (1.0 - s * s)
        grads["dec_wx"] += emb[y_in[:, u]].T @ dz
        grads["dec_wh"] += s_prev.T @ dz
        grads["dec_b"] += dz.sum(axis=0)
        np.add.at(grads["emb"], y_in[:, u], dz @ params["dec_wx"].T)
        ds_next = dz @ params["dec_wh"].T

    # ds_next now carries the gradient into the final encoder state.
    dh = ds_next
    for t in range(t_len - 1, -1, -1):
        dh = dh + d_h_all[:, t]
        m = cache["src_mask"][:, t : t + 1]
        th = cache["enc_tanh"][:, t]
        dz = dh * m * (1.0 - th * th)
        grads["enc_wx"] += emb[x[:, t]].T @ dz
        grads["enc_wh"] += cache["enc_prev"][:, t].T @ dz
        grads["enc_b"] += dz.sum(axis=0)
        np.add.at(grads["emb"], x[:, t], dz @ params["enc_wx"].T)
        dh = dh * (1.0 - m) + dz @ params["enc_wh"].T

    return grads


def loss(model: ToyModel, batch: EncodedBatch) -> float:
    """Teacher-forced mean negative log-likelihood per target token."""
    _validate_batch(batch, model.vocab_size)
    value, _ = _forward(model.params, batch)
    return value


def loss_and_grads(model: ToyModel, batch: EncodedBatch) -> tuple[float, dict]:
    _validate_batch(batch, model.vocab_size)
    value, cache = _forward(model.params, batch)
    grads = _backward(model.params, batch, cache)
    return value, grads


def train_step(model: ToyModel, batch: EncodedBatch, lr: float) -> float:
    """One SGD step in place; returns the pre-update loss."""
    check_finite(model)
    value, grads = loss_and_grads(model, batch)
    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise DivergenceError(f"non-finite gradient in {name}")
        model.params[name] -= lr * g
    return value


# -- training driver --


@dataclass(frozen=True)
class TrainConfig:
    steps: int
    batch_size: int
    learning_rate: float
    seed: int
    max_input_len: int
    max_target_len: int
    d_model: int = 64
    min_count: int = 1

    def __post_init__(self):
        for name in ("steps", "batch_size", "learning_rate", "seed", "max_input_len", "max_target_len", "d_model", "min_count"):
            if getattr(self, name) <= 0 and name != "seed":
                raise ModelError(f"{name} must be positive")
        if self.seed < 0:
            raise ModelError("seed must be non-negative")


def train_model(
    pairs: Sequence[FormattedPair],
    config: TrainConfig,
    log_every: int = 0,
    log: Callable[[str], None] = print,
) -> tuple[ToyModel, list[float]]:
    """Build a vocabulary, initialize, and run SGD over shuffled epochs."""
    vocab = build_vocab(pairs, config.min_count)
    model = init_model(vocab, config.d_model, config.seed)
    encoded = [
        (
            vocab.encode(p.input_text)[: config.max_input_len],
            vocab.encode(p.target_text)[: config.max_target_len - 1],
        )
        for p in pairs
    ]
    rng = random.Random(config.seed)
    order: list[int] = []
    losses = []
    for step in range(config.steps):
        while len(order) < config.batch_size:
            epoch = list(range(len(encoded)))
            rng.shuffle(epoch)
            order.extend(epoch)
        batch_ids, order = order[: config.batch_size], order[config.batch_size :]
        batch = pack_batch([encoded[i] for i in batch_ids])
        losses.append(train_step(model, batch, config.learning_rate))
        if log_every and (step + 1) % log_every == 0:
            log(f"step {step + 1}/{config.steps} loss {losses[-1]:.4f}")
    return model, losses


# -- decoding --


def _encode_sequence(params: dict, ids: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
    emb = params["emb"]
    d = params["enc_b"].shape[0]
    h = np.zeros(d)
    h_all = np.zeros((len(ids), d))
    for t, token in enumerate(ids):
        h = np.tanh(emb[token] @ params["enc_wx"] + h @ params["enc_wh"] + params["enc_b"])
        h_all[t] = h
    return h_all, h


def model_stepper(model: ToyModel, input_ids: Sequence[int]):
    """Returns (step_fn, initial_state) for the search routines.

    step_fn(state, last_token) -> (log-probabilities over the vocabulary,
    next state).  Softmax rows are normalized to machine precision.
    """
    if not input_ids:
        raise ModelError("cannot decode an empty input")
    params = model.params
    h_all, h_last = _encode_sequence(params, input_ids)

    scale = 1.0 / np.sqrt(params["enc_b"].shape[0])

    def step(state: np.ndarray, last_token: int):
        s = np.tanh(
            params["emb"][last_token] @ params["dec_wx"]
            + state @ params["dec_wh"]
            + params["dec_b"]
        )
        scores = h_all @ s * scale
        scores -= scores.max()
        alpha = np.exp(scores)
        alpha /= alpha.sum()
        context = alpha @ h_all
        a = np.tanh(np.concatenate([s, context]) @ params["attn_w"] + params["attn_b"])
        logits = a @ params["out_w"]
        logits -= logits.max()
        logprobs = logits - np.log(np.exp(logits).sum())
        return logprobs, s

    return step, h_last


def greedy_search(step_fn, init_state, max_len: int, eos_id: int = EOS, start_token: int = EOS) -> list[int]:
    """Argmax decoding; ties resolve to the lowest token id."""
    state, token = init_state, start_token
    out: list[int] = []
    for _ in range(max_len):
        logprobs, state = step_fn(state, token)
        token = int(np.argmax(logprobs))
        if token == eos_id:
            break
        out.append(token)
    return out


def beam_search(
    step_fn,
    init_state,
    beam_width: int,
    max_len: int,
    eos_id: int = EOS,
    start_token: int = EOS,
) -> list[int]:
    """Beam search maximizing the sum of token log-probabilities.

    Hypotheses complete on EOS (whose log-probability counts toward the
    score) or on reaching max_len; ties break by score then lexicographic
    token ids, which makes beam_width=1 coincide with greedy_search.
    """
    if beam_width < 1:
        raise ModelError("beam width must be >= 1")
    live = [(0.0, (), init_state, start_token)]
    finished: list[tuple[float, tuple[int, ...]]] = []
    for _ in range(max_len):
        if not live:
            break
        candidates = []
        for score, tokens, state, last in live:
            logprobs, new_state = step_fn(state, last)
            for t, lp in enumerate(logprobs):
                candidates.append((score + float(lp), tokens, t, new_state))
        candidates.sort(key=lambda c: (-c[0], c[1] + (c[2],)))
        live = []
        for score, tokens, t, state in candidates[:beam_width]:
            if t == eos_id:
                finished.append((score, tokens))
            else:
                live.append((score, tokens + (t,), state, t))
    finished.extend((score, tokens) for score, tokens, _, _ in live)
    best = min(finished, key=lambda f: (-f[0], f[1]))
    return list(best[1])


def greedy_decode(model: ToyModel, input_ids: Sequence[int], max_len: int) -> list[int]:
    step, state = model_stepper(model, input_ids)
    return greedy_search(step, state, max_len)


def beam_decode(
    model: ToyModel, input_ids: Sequence[int], beam_width: int, max_len: int
) -> list[int]:
    step, state = model_stepper(model, input_ids)
    return beam_search(step, state, beam_width, max_len)


def decode_text(model: ToyModel, text: str, max_len: int, beam_width: int = 1) -> str:
    ids = model.vocab.encode(text)
    if beam_width == 1:
        out = greedy_decode(model, ids, max_len)
    else:
        out = beam_decode(model, ids, beam_width, max_len)
    return model.vocab.decode(out)


# -- checkpoints --
#
# Byte layout (little-endian):
#   bytes 0-3   magic "TS2S"
#   bytes 4-7   uint32 header length N
#   bytes 8-..  N bytes of UTF-8 JSON: {"format", "version", "d_model",
#               "seed", "vocab": [token, ...], "dtype": "<f8",
#               "tensors": [{"name", "shape"}, ...]}
#   then each tensor's raw C-order float64 data, in header order.


def save_model(model: ToyModel, path: str | Path) -> None:
    header = {
        "format": "toy-seq2seq",
        "version": CHECKPOINT_VERSION,
        "d_model": model.d_model,
        "seed": model.seed,
        "vocab": list(model.vocab.id_to_token),
        "dtype": "<f8",
        "tensors": [
            {"name": name, "shape": list(model.params[name].shape)}
            for name in PARAM_ORDER
        ],
    }
    header_bytes = json.dumps(header, ensure_ascii=False).encode("utf-8")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        f.write(CHECKPOINT_MAGIC)
        f.write(struct.pack("<I", len(header_bytes)))
        f.write(header_bytes)
        for name in PARAM_ORDER:
            f.write(np.ascontiguousarray(model.params[name], dtype="<f8").tobytes())


def load_model(path: str | Path) -> ToyModel:
    with open(path, "rb") as f:
        magic = f.read(4)
        if magic != CHECKPOINT_MAGIC:
            raise ModelError(f"not a checkpoint (magic {magic!r})")
        (header_len,) = struct.unpack("<I", f.read(4))
        header = json.loads(f.read(header_len).decode("utf-8"))
        if header.get("version") != CHECKPOINT_VERSION:
            raise ModelError(f"unsupported checkpoint version {header.get('version')!r}")
        params = {}
        for spec in header["tensors"]:
            shape = tuple(spec["shape"])
            count = int(np.prod(shape)) if shape else 1
            data = np.frombuffer(f.read(count * 8), dtype="<f8").reshape(shape)
            params[spec["name"]] = data.astype(np.float64)
    tokens = tuple(header["vocab"])
    vocab = Vocabulary(tokens, {t: i for i, t in enumerate(tokens)})
    return ToyModel(vocab, header["d_model"], header["seed"], params)
