"""Central finite-difference verification of autodiff gradients."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .tensor import Array

LossFn = Callable[[Mapping[str, Array]], float]


@dataclass
class GradCheckReport:
    max_rel_error: float = 0.0
    n_checked: int = 0
    failures: list[tuple[str, int, float, float, float]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures


def relative_error(g_auto: float, g_fd: float) -> float:
    """|autodiff - finite difference| scaled by max(1, |finite difference|)."""
    return abs(g_auto - g_fd) / max(1.0, abs(g_fd))


def check_gradients(
    loss_fn: LossFn,
    params: Mapping[str, Array],
    grads: Mapping[str, Array],
    step: float = 1e-5,
    rtol: float = 1e-4,
    samples_per_param: int | None = None,
    rng: np.random.Generator | None = None,
) -> GradCheckReport:
    """Compare `grads` against central differences of `loss_fn` at `params`.

    Checks every component, or `samples_per_param` random components per
    parameter when the tensors are too large for an exhaustive sweep.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    work = {name: np.array(p, dtype=np.float64, copy=True) for name, p in params.items()}
    report = GradCheckReport()
    for name in sorted(work):
        flat = work[name].reshape(-1)
        size = flat.size
        if samples_per_param is None or samples_per_param >= size:
            indices = np.arange(size)
        else:
            indices = rng.choice(size, size=samples_per_param, replace=False)
        g_flat = np.asarray(grads[name]).reshape(-1)
        for idx in indices:
            idx = int(idx)
            orig = flat[idx]
            flat[idx] = orig + step
            up = loss_fn(work)
            flat[idx] = orig - step
            down = loss_fn(work)
            flat[idx] = orig
            g_fd = (up - down) / (2.0 * step)
            err = relative_error(float(g_flat[idx]), g_fd)
            report.n_checked += 1
            report.max_rel_error = max(report.max_rel_error, err)
            if err >= rtol:
                report.failures.append((name, idx, float(g_flat[idx]), g_fd, err))
    return report
