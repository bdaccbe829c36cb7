"""Toy multi-task encoder-decoder: one shared encoder, a frame classifier head and a
generative decoder.

All entry points take padded ``LongTensor`` batches; id 0 is padding.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, replace
from typing import Sequence

import torch
import torch.nn.functional as F
from torch import nn

PAD_ID, BOS_ID, EOS_ID = 0, 1, 2
POOLING = ("trigger", "mean")


@dataclass(frozen=True)
class ModelConfig:
    vocab_size: int
    num_frame_classes: int
    embed_dim: int = 64
    num_layers: int = 2
    num_heads: int = 4
    ffn_dim: int = 256
    max_input_len: int = 96
    max_output_len: int = 48
    dropout_rate: float = 0.0
    seed: int = 0
    pooling: str = "trigger"
    tie_embeddings: bool = True

    def __post_init__(self):
        counts = ("vocab_size", "num_frame_classes", "embed_dim", "num_layers", "num_heads",
                  "ffn_dim", "max_input_len", "max_output_len")
        for name in counts:
            value = getattr(self, name)
            if not isinstance(value, int) or value < 1:
                raise ValueError(f"{name} must be a positive integer, got {value!r}")
        if self.embed_dim % self.num_heads:
            raise ValueError(f"embed_dim {self.embed_dim} not divisible by num_heads {self.num_heads}")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError(f"dropout_rate must be in [0, 1), got {self.dropout_rate}")
        if self.pooling not in POOLING:
            raise ValueError(f"pooling must be one of {POOLING}")

    @property
    def head_dim(self) -> int:
        return self.embed_dim // self.num_heads

    @classmethod
    def tiny(cls, vocab_size, num_frame_classes, **kw):
        """Gradient-check sized model."""
        base = dict(embed_dim=16, num_layers=1, num_heads=2, ffn_dim=32, dropout_rate=0.0)
        base.update(kw)
        return cls(vocab_size, num_frame_classes, **base)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class EncoderOutput:
    states: torch.Tensor  # (batch, input_len, embed_dim)
    pad_mask: torch.Tensor  # (batch, input_len), True at padding


class Attention(nn.Module):
    def __init__(self, cfg: ModelConfig):
        super().__init__()
        d = cfg.embed_dim
        self.heads = cfg.num_heads
        self.q = nn.Linear(d, d)
        self.k = nn.Linear(d, d)
        self.v = nn.Linear(d, d)
        self.o = nn.Linear(d, d)
        self.drop = nn.Dropout(cfg.dropout_rate)

    def forward(self, x, memory, key_pad=None, causal=False):
        b, lq, d = x.shape
        lk = memory.shape[1]
        h = self.heads

        def split(t, n):
            return t.view(b, n, h, d // h).transpose(1, 2)

        q, k, v = split(self.q(x), lq), split(self.k(memory), lk), split(self.v(memory), lk)
        scores = q @ k.transpose(-1, -2) / math.sqrt(d // h)
        if key_pad is not None:
            scores = scores.masked_fill(key_pad[:, None, None, :], float("-inf"))
        if causal:
            future = torch.ones(lq, lk, dtype=torch.bool, device=x.device).triu(1)
            scores = scores.masked_fill(future, float("-inf"))
        att = self.drop(scores.softmax(-1))
        out = (att @ v).transpose(1, 2).reshape(b, lq, d)
        return self.o(out)


class FeedForward(nn.Module):
    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.up = nn.Linear(cfg.embed_dim, cfg.ffn_dim)
        self.down = nn.Linear(cfg.ffn_dim, cfg.embed_dim)
        self.drop = nn.Dropout(cfg.dropout_rate)

    def forward(self, x):
        # GELU is smooth, which keeps finite-difference checks clean
        return self.down(self.drop(F.gelu(self.up(x))))


class EncoderLayer(nn.Module):
    def __init__(self, cfg):
        super().__init__()
        self.ln1 = nn.LayerNorm(cfg.embed_dim)
        self.attn = Attention(cfg)
        self.ln2 = nn.LayerNorm(cfg.embed_dim)
        self.ffn = FeedForward(cfg)
        self.drop = nn.Dropout(cfg.dropout_rate)

    def forward(self, x, pad):
        h = self.ln1(x)
        x = x + self.drop(self.attn(h, h, key_pad=pad))
        return x + self.drop(self.ffn(self.ln2(x)))


class DecoderLayer(nn.Module):
    def __init__(self, cfg):
        super().__init__()
        self.ln1 = nn.LayerNorm(cfg.embed_dim)
        self.self_attn = Attention(cfg)
        self.ln2 = nn.LayerNorm(cfg.embed_dim)
        self.cross_attn = Attention(cfg)
        self.ln3 = nn.LayerNorm(cfg.embed_dim)
        self.ffn = FeedForward(cfg)
        self.drop = nn.Dropout(cfg.dropout_rate)

    def forward(self, y, memory, memory_pad):
        h = self.ln1(y)
        y = y + self.drop(self.self_attn(h, h, causal=True))
        y = y + self.drop(self.cross_attn(self.ln2(y), memory, key_pad=memory_pad))
        return y + self.drop(self.ffn(self.ln3(y)))


class FrameParserModel(nn.Module):
    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.config = cfg
        d = cfg.embed_dim
        self.tok_emb = nn.Embedding(cfg.vocab_size, d)
        self.enc_pos = nn.Embedding(cfg.max_input_len, d)
        # decoder positions: BOS plus up to max_output_len emitted tokens
        self.dec_pos = nn.Embedding(cfg.max_output_len + 1, d)
        self.emb_drop = nn.Dropout(cfg.dropout_rate)
        self.encoder = nn.ModuleList(EncoderLayer(cfg) for _ in range(cfg.num_layers))
        self.enc_ln = nn.LayerNorm(d)
        self.decoder = nn.ModuleList(DecoderLayer(cfg) for _ in range(cfg.num_layers))
        self.dec_ln = nn.LayerNorm(d)
        self.out_proj = nn.Linear(d, cfg.vocab_size)
        if cfg.tie_embeddings:
            # output logits score the decoder state against the input embeddings
            self.out_proj.weight = self.tok_emb.weight
        self.classifier = nn.Linear(d, cfg.num_frame_classes)


def init_params(config: ModelConfig) -> FrameParserModel:
    """Build a model with weights ~ N(0, 1/fan_in); LayerNorm gains 1, all biases 0."""
    gen = torch.Generator().manual_seed(config.seed)
    model = FrameParserModel(config)
    with torch.no_grad():
        for module in model.modules():
            if isinstance(module, nn.LayerNorm):
                module.weight.fill_(1.0)
                module.bias.zero_()
            elif isinstance(module, (nn.Linear, nn.Embedding)):
                module.weight.normal_(0.0, 1.0 / math.sqrt(module.weight.shape[-1]), generator=gen)
                if getattr(module, "bias", None) is not None:
                    module.bias.zero_()
    return model


def pad_batch(seqs: Sequence[Sequence[int]], length: int | None = None) -> torch.Tensor:
    length = max([len(s) for s in seqs] + [length or 0])
    out = torch.full((len(seqs), length), PAD_ID, dtype=torch.long)
    for i, s in enumerate(seqs):
        out[i, : len(s)] = torch.as_tensor(list(s), dtype=torch.long)
    return out


def _as_batch(ids) -> torch.Tensor:
    if not isinstance(ids, torch.Tensor):
        ids = pad_batch([ids]) if not ids or isinstance(ids[0], int) else pad_batch(ids)
    return ids if ids.dim() == 2 else ids.unsqueeze(0)


def encode(model: FrameParserModel, input_ids) -> EncoderOutput:
    src = _as_batch(input_ids)
    cfg = model.config
    if src.shape[1] > cfg.max_input_len:
        raise ValueError(f"input length {src.shape[1]} exceeds max_input_len {cfg.max_input_len}")
    pad = src.eq(PAD_ID)
    pos = torch.arange(src.shape[1])
    x = model.emb_drop(model.tok_emb(src) + model.enc_pos(pos))
    for layer in model.encoder:
        x = layer(x, pad)
    return EncoderOutput(model.enc_ln(x), pad)


def _pool_mask(enc: EncoderOutput, trigger) -> torch.Tensor:
    b, length = enc.pad_mask.shape
    if isinstance(trigger, torch.Tensor) and trigger.dtype == torch.bool:
        mask = trigger
    else:
        if trigger and isinstance(trigger[0], int):
            trigger = [trigger]
        if len(trigger) != b:
            raise ValueError(f"got trigger positions for {len(trigger)} rows, batch has {b}")
        mask = torch.zeros(b, length, dtype=torch.bool)
        for i, positions in enumerate(trigger):
            for p in positions:
                if not 0 <= p < length:
                    raise ValueError(f"trigger position {p} outside input of length {length}")
                mask[i, p] = True
    if not bool(mask.any(dim=1).all()):
        raise ValueError("empty trigger position set")
    return mask


def frame_logits(model: FrameParserModel, enc: EncoderOutput, trigger) -> torch.Tensor:
    if model.config.pooling == "mean":
        mask = ~enc.pad_mask
    else:
        mask = _pool_mask(enc, trigger)
    m = mask.unsqueeze(-1).to(enc.states.dtype)
    pooled = (enc.states * m).sum(1) / m.sum(1)
    return model.classifier(pooled)


def classify_frame(model: FrameParserModel, enc: EncoderOutput, trigger) -> torch.Tensor:
    """Frame-class probabilities, one row per batch element.

    ``trigger`` is a boolean (batch, input_len) mask or per-row lists of positions.
    """
    return frame_logits(model, enc, trigger).softmax(-1)


def decoder_logits(model: FrameParserModel, enc: EncoderOutput, dec_in: torch.Tensor) -> torch.Tensor:
    cfg = model.config
    if dec_in.shape[1] > cfg.max_output_len + 1:
        raise ValueError(f"decoder input length {dec_in.shape[1]} exceeds {cfg.max_output_len + 1}")
    pos = torch.arange(dec_in.shape[1])
    y = model.emb_drop(model.tok_emb(dec_in) + model.dec_pos(pos))
    for layer in model.decoder:
        y = layer(y, enc.states, enc.pad_mask)
    return model.out_proj(model.dec_ln(y))


def target_batch(targets: Sequence[Sequence[int]]) -> tuple[torch.Tensor, torch.Tensor]:
    """Teacher-forcing pair: decoder input ``BOS t1 .. tn`` and gold ``t1 .. tn EOS``."""
    gold = pad_batch([list(t) + [EOS_ID] for t in targets])
    dec_in = pad_batch([[BOS_ID] + list(t) for t in targets], gold.shape[1])
    return dec_in, gold


def seq_loss(model: FrameParserModel, input_ids, target_ids, enc: EncoderOutput | None = None):
    """Mean per-token negative log-likelihood of the targets (EOS included) under teacher forcing.

    ``target_ids`` are per-row id lists without BOS/EOS.
    """
    if isinstance(target_ids, torch.Tensor):
        target_ids = target_ids.tolist()
    if target_ids and isinstance(target_ids[0], int):
        target_ids = [target_ids]
    if not target_ids:
        raise ValueError("empty target batch")
    if max(len(t) for t in target_ids) > model.config.max_output_len:
        raise ValueError(f"target longer than max_output_len {model.config.max_output_len}")
    enc = enc if enc is not None else encode(model, input_ids)
    dec_in, gold = target_batch(target_ids)
    logits = decoder_logits(model, enc, dec_in)
    return F.cross_entropy(logits.reshape(-1, logits.shape[-1]), gold.reshape(-1), ignore_index=PAD_ID)


def class_loss(model: FrameParserModel, input_ids, trigger, gold_class, enc: EncoderOutput | None = None):
    """Mean ``-ln p(gold class)`` over the batch."""
    gold = torch.as_tensor(gold_class, dtype=torch.long).reshape(-1)
    n = model.config.num_frame_classes
    if bool(((gold < 0) | (gold >= n)).any()):
        raise ValueError(f"gold class out of range [0, {n})")
    enc = enc if enc is not None else encode(model, input_ids)
    return F.cross_entropy(frame_logits(model, enc, trigger), gold)


@torch.no_grad()
def decode_greedy(model: FrameParserModel, enc: EncoderOutput, max_output_len: int | None = None,
                  prefix: Sequence[Sequence[int]] | None = None) -> list[list[int]]:
    """Greedy decoding, one id list per batch row (BOS/EOS stripped).

    ``prefix`` forces the first tokens of each row before greedy choice takes over.
    """
    cfg = model.config
    limit = cfg.max_output_len if max_output_len is None else min(max_output_len, cfg.max_output_len)
    b = enc.states.shape[0]
    out = [[] for _ in range(b)]
    if limit <= 0:
        return out
    seq = torch.full((b, 1), BOS_ID, dtype=torch.long)
    done = torch.zeros(b, dtype=torch.bool)
    for step in range(limit):
        nxt = decoder_logits(model, enc, seq)[:, -1].argmax(-1)
        if prefix is not None:
            for i, p in enumerate(prefix):
                if step < len(p):
                    nxt[i] = p[step]
        nxt = nxt.masked_fill(done, PAD_ID)
        for i in range(b):
            if not done[i] and nxt[i] != EOS_ID:
                out[i].append(int(nxt[i]))
        done |= nxt.eq(EOS_ID)
        if bool(done.all()):
            break
        seq = torch.cat([seq, nxt.unsqueeze(1)], dim=1)
    return out


def without_dropout(config: ModelConfig) -> ModelConfig:
    return replace(config, dropout_rate=0.0)
