"""Named, shaped parameter collections shared by both networks.

NetWeights is the serialization-facing view of a network's parameters:
an ordered list of (name, float32 array) pairs whose order and names must
match the owning torch module's state dict exactly. Keeping this carrier
independent of torch modules lets checkpoints, initialization, and the
functional forward APIs agree on one representation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import torch

from .errors import CheckpointError, TensorNameError


@dataclass
class NetWeights:
    """Ordered (name -> float32 array) parameter collection."""

    entries: list[tuple[str, np.ndarray]]

    def __post_init__(self) -> None:
        names = [n for n, _ in self.entries]
        if len(set(names)) != len(names):
            dupes = sorted({n for n in names if names.count(n) > 1})
            raise TensorNameError(f"duplicate tensor names: {dupes}")
        self.entries = [
            (n, np.ascontiguousarray(v, dtype=np.float32)) for n, v in self.entries
        ]
        self._index = {n: i for i, (n, _) in enumerate(self.entries)}

    def names(self) -> list[str]:
        return [n for n, _ in self.entries]

    def get(self, name: str) -> np.ndarray:
        return self.entries[self._index[name]][1]

    def param_count(self) -> int:
        return int(sum(v.size for _, v in self.entries))

    def copy(self) -> "NetWeights":
        return NetWeights([(n, v.copy()) for n, v in self.entries])

    def equal(self, other: "NetWeights") -> bool:
        return self.names() == other.names() and all(
            a.shape == b.shape and np.array_equal(a, b)
            for (_, a), (_, b) in zip(self.entries, other.entries)
        )

    @classmethod
    def from_module(cls, module: torch.nn.Module) -> "NetWeights":
        return cls(
            [
                (name, tensor.detach().cpu().to(torch.float32).numpy().copy())
                for name, tensor in module.state_dict().items()
            ]
        )

    def load_into(self, module: torch.nn.Module) -> None:
        """Copy values into a module; names and shapes must match exactly."""
        state = module.state_dict()
        expected = list(state.keys())
        got = self.names()
        if expected != got:
            unknown = sorted(set(got) - set(expected))
            missing = sorted(set(expected) - set(got))
            detail = []
            if unknown:
                detail.append(f"unknown tensor names {unknown[:3]}")
            if missing:
                detail.append(f"missing tensor names {missing[:3]}")
            raise TensorNameError(
                "; ".join(detail) or "tensor name order differs from the target network"
            )
        for name, value in self.entries:
            param = state[name]
            if tuple(param.shape) != value.shape:
                raise CheckpointError(
                    f"tensor {name!r} has shape {value.shape}, "
                    f"expected {tuple(param.shape)}"
                )
            with torch.no_grad():
                param.copy_(torch.from_numpy(value).to(param.dtype))


def he_init_module(module: torch.nn.Module, seed: int, leaky_slope: float = 0.01) -> None:
    """Deterministically fill a module's parameters in state-dict order.

    Weight tensors get He-style fan-in scaling with the leaky-ReLU gain,
    biases are zeroed. The generator is consumed in a fixed order so a seed
    pins every value bit-for-bit.
    """
    gen = torch.Generator(device="cpu").manual_seed(seed)
    gain = math.sqrt(2.0 / (1.0 + leaky_slope**2))
    with torch.no_grad():
        for name, param in module.state_dict().items():
            if name.endswith("bias") or param.ndim == 1:
                param.zero_()
                continue
            fan_in = int(np.prod(param.shape[1:]))
            std = gain / math.sqrt(fan_in)
            values = torch.empty(param.shape, dtype=torch.float32)
            values.normal_(mean=0.0, std=std, generator=gen)
            param.copy_(values.to(param.dtype))
