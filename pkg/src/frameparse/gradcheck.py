"""Central finite-difference check of the autograd gradients of both training losses."""

from __future__ import annotations

from dataclasses import replace
from typing import Callable, Sequence

import numpy as np
import torch

from frameparse import model as M


def relative_error(analytic: float, numeric: float, floor: float = 1e-6) -> float:
    """``|a - n| / max(|a|, |n|, floor)``; the floor keeps near-zero gradients from
    turning rounding noise into large ratios."""
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), floor)


def finite_difference_check(loss_fn: Callable[[], torch.Tensor], params: Sequence[tuple[str, torch.Tensor]],
                            epsilon: float = 1e-4, sample_size: int = 5, seed: int = 0,
                            floor: float = 1e-6) -> dict[str, float]:
    """Compare autograd against ``(f(x+e) - f(x-e)) / 2e`` at ``sample_size`` random entries
    of every tensor.  Returns the worst relative error per tensor."""
    for _, p in params:
        p.grad = None
    loss_fn().backward()
    analytic = {name: (p.grad.detach().clone() if p.grad is not None else torch.zeros_like(p))
                for name, p in params}
    rng = np.random.default_rng(seed)
    worst = {}
    with torch.no_grad():
        for name, p in params:
            flat = p.view(-1)
            picks = rng.choice(flat.numel(), size=min(sample_size, flat.numel()), replace=False)
            errs = []
            for i in picks.tolist():
                orig = flat[i].item()
                flat[i] = orig + epsilon
                up = loss_fn().item()
                flat[i] = orig - epsilon
                down = loss_fn().item()
                flat[i] = orig
                numeric = (up - down) / (2 * epsilon)
                errs.append(relative_error(analytic[name].view(-1)[i].item(), numeric, floor))
            worst[name] = max(errs)
    return worst


def grad_check(config: M.ModelConfig, src: Sequence[int], target: Sequence[int] | None = None,
               gold_class: int | None = None, trigger: Sequence[int] | None = None,
               loss: str = "seq", epsilon: float = 1e-4,
               sample_size: int = 5, seed: int = 0) -> float:
    """Max relative gradient error of ``seq_loss`` (``loss="seq"``) or ``class_loss``
    (``loss="class"``) for one example, in float64 with dropout off."""
    model = M.init_params(replace(config, dropout_rate=0.0)).double()
    model.eval()
    src_t = M.pad_batch([list(src)])
    if loss == "seq":
        if target is None:
            raise ValueError("seq loss needs a target")

        def fn():
            return M.seq_loss(model, src_t, [list(target)])
    elif loss == "class":
        if gold_class is None:
            raise ValueError("class loss needs a gold class")
        positions = list(trigger) if trigger else list(range(len(src)))

        def fn():
            return M.class_loss(model, src_t, [positions], [gold_class])
    else:
        raise ValueError(f"unknown loss path {loss!r}")
    # named_parameters() lists a tied output projection once, as the token embedding
    params = list(model.named_parameters())
    return max(finite_difference_check(fn, params, epsilon, sample_size, seed).values())
