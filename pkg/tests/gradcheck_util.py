"""Central finite-difference gradient oracle shared by nn and acceptance tests."""

import numpy as np


def numeric_param_gradients(model, loss_fn, h=1e-5):
    """loss_fn() must re-run the forward pass against the live parameters."""
    grads = {}
    for name, p in model.params().items():
        g = np.zeros_like(p)
        it = np.nditer(p, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            orig = p[idx]
            p[idx] = orig + h
            lp = loss_fn()
            p[idx] = orig - h
            lm = loss_fn()
            p[idx] = orig
            g[idx] = (lp - lm) / (2.0 * h)
        grads[name] = g
    return grads


def max_rel_err(analytic: dict, numeric: dict) -> float:
    worst = 0.0
    for name, a in analytic.items():
        n = numeric[name]
        err = np.abs(a - n) / np.maximum(np.abs(a) + np.abs(n), 1e-6)
        worst = max(worst, float(err.max()))
    return worst


def check_model_gradients(model, x, rng, h=1e-5):
    """Probe the full parameter Jacobian through a random linear functional."""
    y0, _ = model.forward(x)
    r = rng.standard_normal(y0.shape)

    def loss():
        y, _ = model.forward(x)
        return float(np.sum(y * r))

    _, cache = model.forward(x)
    _, analytic = model.backward(cache, r)
    numeric = numeric_param_gradients(model, loss, h)
    return max_rel_err(analytic, numeric)
