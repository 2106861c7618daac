"""Adam optimizer over named parameter tensors."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .autodiff import AutodiffError, Tensor


@dataclass
class AdamState:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)

    @classmethod
    def for_params(cls, params: dict[str, Tensor], lr: float = 1e-3, **kwargs) -> "AdamState":
        state = cls(lr=lr, **kwargs)
        for name, p in params.items():
            state.m[name] = np.zeros_like(p.value)
            state.v[name] = np.zeros_like(p.value)
        return state


def adam_step(
    params: dict[str, Tensor],
    state: AdamState,
    grads: dict[str, np.ndarray] | None = None,
) -> AdamState:
    """One bias-corrected Adam update, in place.

    Gradients default to each parameter's ``.grad`` (missing or None counts
    as zero). Parameters are visited in sorted name order so updates are
    reproducible regardless of dict construction order.
    """
    state.t += 1
    bc1 = 1.0 - state.beta1**state.t
    bc2 = 1.0 - state.beta2**state.t
    for name in sorted(params):
        p = params[name]
        g = grads.get(name) if grads is not None else p.grad
        if g is None:
            g = np.zeros_like(p.value)
        if g.shape != p.value.shape:
            raise AutodiffError(
                f"gradient shape {g.shape} != parameter '{name}' shape {p.value.shape}"
            )
        m = state.m[name]
        v = state.v[name]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * (g * g)
        m_hat = m / bc1
        v_hat = v / bc2
        p.value -= state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return state
