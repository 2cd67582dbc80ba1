"""Softmax-family losses and their logit gradients.

Single-example functions (``cross_entropy``, ``kl_divergence``) accept 1-D
logits and return a float. The ``*_batch`` variants take (N, C) logits and
return ``(mean loss, dL/dlogits)``.
"""

import numpy as np


def log_softmax(z, axis=-1):
    z = np.asarray(z, dtype=np.float64)
    shifted = z - z.max(axis=axis, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=axis, keepdims=True))


def softmax(z, axis=-1):
    return np.exp(log_softmax(z, axis=axis))


def _check_label(label, c):
    if not 0 <= int(label) < c:
        raise ValueError(f"label {label} outside class range [0, {c})")


def cross_entropy(logits, label):
    """-log softmax(logits)[label], stabilised by max-subtraction."""
    logits = np.asarray(logits, dtype=np.float64)
    if not np.all(np.isfinite(logits)):
        raise ValueError("logits must be finite")
    _check_label(label, logits.shape[-1])
    return float(-log_softmax(logits)[int(label)])


def kl_divergence(student_logits, teacher_logits, temperature=1.0):
    """KL(softmax(student/T) || softmax(teacher/T)) for one example."""
    if temperature <= 0:
        raise ValueError("temperature must be positive")
    s = np.asarray(student_logits, dtype=np.float64)
    t = np.asarray(teacher_logits, dtype=np.float64)
    if s.shape != t.shape:
        raise ValueError("student and teacher logits differ in shape")
    ls, lt = log_softmax(s / temperature), log_softmax(t / temperature)
    return float(max(0.0, np.sum(np.exp(ls) * (ls - lt))))


def cross_entropy_batch(logits, labels):
    logits = np.asarray(logits, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.intp)
    n, c = logits.shape
    if labels.shape != (n,):
        raise ValueError("labels must be a vector matching the batch")
    if labels.min(initial=0) < 0 or labels.max(initial=0) >= c:
        raise ValueError("label outside class range")
    ls = log_softmax(logits)
    loss = -ls[np.arange(n), labels].mean()
    grad = np.exp(ls)
    grad[np.arange(n), labels] -= 1.0
    return float(loss), grad / n


def kl_batch(student_logits, teacher_logits, temperature=1.0):
    """Mean KL(P_s || P_t) over the batch.

    Returns ``(loss, d/d student_logits, d/d teacher_logits)``.
    """
    if temperature <= 0:
        raise ValueError("temperature must be positive")
    s = np.asarray(student_logits, dtype=np.float64)
    t = np.asarray(teacher_logits, dtype=np.float64)
    if s.shape != t.shape:
        raise ValueError("student and teacher logits differ in shape")
    n = s.shape[0]
    ls, lt = log_softmax(s / temperature), log_softmax(t / temperature)
    ps, pt = np.exp(ls), np.exp(lt)
    diff = ls - lt
    kl_rows = np.sum(ps * diff, axis=1)
    # d KL / d(s/T)_j = P_s,j (diff_j - KL);  d KL / d(t/T)_j = P_t,j - P_s,j
    g_s = ps * (diff - kl_rows[:, None]) / (temperature * n)
    g_t = (pt - ps) / (temperature * n)
    return float(max(0.0, kl_rows.mean())), g_s, g_t


def mse_batch(pred, target):
    """Mean over batch and output coordinates of the squared error."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ValueError("prediction and target differ in shape")
    r = pred - target
    return float(np.mean(r * r)), 2.0 * r / r.size


def sum_squared_batch(pred, target):
    """Mean over batch of ||pred - target||^2."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ValueError("prediction and target differ in shape")
    r = pred - target
    n = r.shape[0]
    return float(np.sum(r * r) / n), 2.0 * r / n
