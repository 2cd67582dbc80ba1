"""In-place self-distillation between nested submodels.

A wider submodel of the same network (the teacher) supervises a narrower
sampled one (the student) through KL on temperature-softened outputs. The
default "final" form uses

    KL(student || teacher; T) + CE(teacher, label)

with teacher logits left attached, so new knowledge enters through the
teacher and reaches the student by proxy.
"""

from dataclasses import dataclass

import numpy as np

from .nn.losses import cross_entropy_batch, kl_batch
from .nn.network import WIDTH_TOL, NonFiniteError, backward, backward_from_logits, forward_cached
from .od.distribution import BelowMinimumWidth

FORMS = ("final", "general")


@dataclass(frozen=True)
class DistillConfig:
    alpha: float = 1.0
    temperature: float = 1.0
    teacher_backprop: bool = True
    enabled: bool = True
    form: str = "final"

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        if self.temperature <= 0:
            raise ValueError("temperature must be positive")
        if self.form not in FORMS:
            raise ValueError(f"form must be one of {FORMS}")


def _as_batch(student, teacher, label):
    s = np.asarray(student, dtype=np.float64)
    t = np.asarray(teacher, dtype=np.float64)
    if s.shape != t.shape:
        raise ValueError("student and teacher logits differ in shape")
    if s.ndim == 1:
        return s[None, :], t[None, :], np.atleast_1d(label)
    return s, t, np.asarray(label)


def distill_grads(student_logits, teacher_logits, labels, cfg=DistillConfig()):
    """Batch loss and its gradients w.r.t. student and teacher logits."""
    s, t, y = _as_batch(student_logits, teacher_logits, labels)
    kl, kl_ds, kl_dt = kl_batch(s, t, cfg.temperature)
    if not cfg.teacher_backprop:
        kl_dt = np.zeros_like(kl_dt)
    if cfg.form == "final":
        ce, ce_dt = cross_entropy_batch(t, y)
        return kl + ce, kl_ds, kl_dt + ce_dt
    ce, ce_ds = cross_entropy_batch(s, y)
    a = cfg.alpha
    return (1.0 - a) * ce + a * kl, (1.0 - a) * ce_ds + a * kl_ds, a * kl_dt


def distill_loss_general(student_logits, teacher_logits, label, cfg=DistillConfig()):
    """(1 - alpha) * CE(student, label) + alpha * KL(student || teacher; T)."""
    s, t, y = _as_batch(student_logits, teacher_logits, label)
    ce, _ = cross_entropy_batch(s, y)
    kl, _, _ = kl_batch(s, t, cfg.temperature)
    return (1.0 - cfg.alpha) * ce + cfg.alpha * kl


def distill_loss_final(student_logits, teacher_logits, label, cfg=DistillConfig(), student_width=None, teacher_width=None):
    """KL(student || teacher; T) + CE(teacher, label)."""
    if student_width is not None and teacher_width is not None and student_width >= teacher_width:
        raise ValueError(f"teacher width {teacher_width} must exceed student width {student_width}")
    s, t, y = _as_batch(student_logits, teacher_logits, label)
    kl, _, _ = kl_batch(s, t, cfg.temperature)
    ce, _ = cross_entropy_batch(t, y)
    return kl + ce


def teacher_width(dist, cap):
    """Largest candidate width not exceeding the client's cap."""
    values = [v for v in dist.values if v <= cap + 1e-12]
    if not values:
        raise BelowMinimumWidth(f"no candidate width admissible under cap {cap}")
    return values[-1]


def distill_backward(model, batch, targets, width, teacher_width, cfg=DistillConfig()):
    """One KD step's loss and gradients; both forwards share the batch and use batch statistics."""
    if width > teacher_width + WIDTH_TOL:
        raise ValueError(f"student width {width} exceeds teacher width {teacher_width}")
    if abs(width - teacher_width) <= WIDTH_TOL or not cfg.enabled:
        return backward(model, batch, targets, width, "ce")
    s_plan, t_plan = model.plan(width), model.plan(teacher_width)
    s_logits, s_cache = forward_cached(model, batch, s_plan, True)
    t_logits, t_cache = forward_cached(model, batch, t_plan, True)
    loss, ds, dt = distill_grads(s_logits, t_logits, targets, cfg)
    if not np.isfinite(loss):
        raise NonFiniteError(len(model.arch.layers) - 1, "loss", where="loss")
    grads = backward_from_logits(model, s_plan, s_cache, ds)
    if np.any(dt):
        grads = grads + backward_from_logits(model, t_plan, t_cache, dt)
    return loss, grads
