"""Finite-difference verification of the analytic gradients.

Central differences with a configurable step, run in the model's regular
float64 arithmetic on a fixed example in eval mode. The relative error of
an element uses max(|analytic|, |numeric|, floor) as denominator; the floor
keeps sub-noise gradients from registering as spurious failures while still
exposing any discrepancy above it.
"""

from __future__ import annotations

from .layers import weighted_cross_entropy
from .model import EncodedExample, MmaModel

DEFAULT_STEP = 1e-5
DENOM_FLOOR = 1e-6


def _loss(model: MmaModel, example: EncodedExample, weight: float) -> float:
    logits, _ = model.forward(example, train=False)
    model.reset()  # drop forward caches; no backward follows
    value, _ = weighted_cross_entropy(logits, example.label_index, weight)
    return value


def gradcheck(model: MmaModel, example: EncodedExample, step: float = DEFAULT_STEP,
              weight: float = 1.0, stride: int = 1) -> dict[str, float]:
    """Max relative error per parameter group (plus 'overall').

    ``stride`` checks every n-th element of each parameter tensor; 1 checks
    everything.
    """
    if example.label_index is None:
        raise ValueError("gradcheck needs a labeled example")
    model.reset()
    model.zero_grads()
    logits, _ = model.forward(example, train=False)
    _, dlogits = weighted_cross_entropy(logits, example.label_index, weight)
    model.backward(dlogits)

    grads = model.gradient_groups()
    errors: dict[str, float] = {}
    for group, params in model.parameter_groups().items():
        worst = 0.0
        for name, param in params.items():
            analytic = grads[group][name]
            flat = param.reshape(-1)
            flat_grad = analytic.reshape(-1)
            for i in range(0, flat.size, stride):
                original = flat[i]
                flat[i] = original + step
                upper = _loss(model, example, weight)
                flat[i] = original - step
                lower = _loss(model, example, weight)
                flat[i] = original
                numeric = (upper - lower) / (2.0 * step)
                denom = max(abs(flat_grad[i]), abs(numeric), DENOM_FLOOR)
                worst = max(worst, abs(flat_grad[i] - numeric) / denom)
        errors[group] = worst
    errors["overall"] = max(errors.values())
    return errors
