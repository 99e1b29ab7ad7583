import logging
from collections.abc import Sequence

import numpy as np

from farmrl.tensor import Tensor
from farmrl.trainer.config import OptimizerConfig

logger = logging.getLogger(__name__)


def global_norm(grads: Sequence[np.ndarray]) -> float:
    return float(np.sqrt(sum(float(np.sum(np.square(g, dtype=np.float64))) for g in grads)))


def clip_by_global_norm(grads: Sequence[np.ndarray], max_norm: float) -> tuple[list[np.ndarray], float]:
    """Scales every gradient by min(1, max_norm / global norm). Returns the clipped gradients and the pre-clip norm."""
    norm = global_norm(grads)
    if norm <= max_norm or norm == 0.0:
        return [np.asarray(g) for g in grads], norm
    scale = max_norm / norm
    return [np.asarray(g * scale, dtype=g.dtype) for g in grads], norm


class Adam:
    """Adam over a fixed list of parameter tensors, with the gradients clipped to a global norm first.

    Parameters
    ----------
    parameters : Sequence[Tensor]
        Tensors to update. Their grad buffers are read by step and left untouched.
    config : OptimizerConfig
    """

    def __init__(self, parameters: Sequence[Tensor], config: OptimizerConfig) -> None:
        self.parameters = list(parameters)
        self.config = config
        self.steps = 0
        self.m = [np.zeros_like(p.data) for p in self.parameters]
        self.v = [np.zeros_like(p.data) for p in self.parameters]

    def step(self) -> float:
        """Applies one update and returns the global gradient norm before clipping."""
        grads = [
            p.grad if p.grad is not None else np.zeros_like(p.data) for p in self.parameters
        ]
        clipped, norm = clip_by_global_norm(grads, self.config.max_grad_norm)
        self.steps += 1
        cfg = self.config
        if cfg.learning_rate == 0:
            return norm
        bias1 = 1 - cfg.beta1**self.steps
        bias2 = 1 - cfg.beta2**self.steps
        for i, (param, grad) in enumerate(zip(self.parameters, clipped)):
            self.m[i] = cfg.beta1 * self.m[i] + (1 - cfg.beta1) * grad
            self.v[i] = cfg.beta2 * self.v[i] + (1 - cfg.beta2) * np.square(grad)
            update = cfg.learning_rate * (self.m[i] / bias1) / (np.sqrt(self.v[i] / bias2) + cfg.epsilon)
            param.assign(param.data - update)
        logger.debug(f"Adam step {self.steps}: grad norm {norm:.4f}.")
        return norm
