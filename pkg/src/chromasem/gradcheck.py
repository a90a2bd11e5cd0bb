"""Central finite-difference verification of analytic gradients.

The finite-difference side is computed here directly from forward passes,
never from an autograd utility, so it stays an independent check on the
backward implementation.

Both networks are piecewise smooth (leaky rectifier kinks, the regression
loss knot), so a single fixed step can straddle a kink and poison the
estimate. Each sampled parameter is therefore probed at a halving sequence
of steps until two consecutive estimates agree; once the step is inside a
smooth piece, central differences converge quadratically and the agreement
test passes immediately.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import torch


@dataclass
class GradSample:
    name: str
    flat_index: int
    analytic: float
    finite_diff: float
    rel_error: float


def _rel_error(a: float, b: float, floor: float = 1e-4) -> float:
    """Relative difference with an absolute floor for near-zero gradients.

    A 64-bit loss evaluation carries summation noise around 1e-15 that the
    central difference amplifies by 1/(2h), so tiny gradients can never meet
    a pure relative tolerance. Below the floor the comparison is effectively
    absolute (|a - b| < tol * floor), still far above that noise.
    """
    return abs(a - b) / max(abs(a), abs(b), floor)


def sampled_gradient_errors(
    model: torch.nn.Module,
    loss_fn: Callable[[torch.nn.Module], torch.Tensor],
    n_samples: int = 200,
    seed: int = 0,
    step_scale: float = 1e-5,
    agree_rel: float = 1e-5,
    agree_abs: float = 1e-8,
    max_halvings: int = 8,
) -> list[GradSample]:
    """Compare autograd gradients with central differences on sampled parameters.

    loss_fn must be a deterministic function of the model parameters. The
    initial perturbation step is scaled by each parameter's magnitude so deep
    and shallow layers are probed at comparable relative resolution, then
    halved until two consecutive estimates agree to agree_rel/agree_abs. If
    they never do (a kink sitting exactly on the evaluation point), the
    median of all estimates is used.
    """
    model.zero_grad(set_to_none=True)
    loss = loss_fn(model)
    loss.backward()

    params = [(name, p) for name, p in model.named_parameters() if p.requires_grad]
    sizes = np.array([p.numel() for _, p in params])
    total = int(sizes.sum())
    rng = np.random.default_rng(seed)
    chosen = rng.choice(total, size=min(n_samples, total), replace=False)
    offsets = np.concatenate([[0], np.cumsum(sizes)])

    samples: list[GradSample] = []
    with torch.no_grad():
        for flat in sorted(int(c) for c in chosen):
            pi = int(np.searchsorted(offsets, flat, side="right") - 1)
            name, param = params[pi]
            idx = flat - int(offsets[pi])
            flat_view = param.view(-1)
            grad = float(param.grad.view(-1)[idx])
            orig = float(flat_view[idx])

            def central(h: float) -> float:
                flat_view[idx] = orig + h
                plus = float(loss_fn(model))
                flat_view[idx] = orig - h
                minus = float(loss_fn(model))
                flat_view[idx] = orig
                return (plus - minus) / (2.0 * h)

            h = step_scale * max(1.0, abs(orig))
            estimates = [central(h)]
            for _ in range(max_halvings):
                h *= 0.5
                estimates.append(central(h))
                a, b = estimates[-2], estimates[-1]
                if abs(a - b) <= max(agree_rel * max(abs(a), abs(b)), agree_abs):
                    fd = b
                    break
            else:
                fd = float(np.median(estimates))
            samples.append(
                GradSample(
                    name=name,
                    flat_index=idx,
                    analytic=grad,
                    finite_diff=fd,
                    rel_error=_rel_error(grad, fd),
                )
            )
    return samples


def max_rel_error(samples: list[GradSample]) -> float:
    return max(s.rel_error for s in samples)
