"""Central finite differences, the independent oracle for autograd gradients."""
import torch


def central_differences(loss_fn, params, step=1e-4):
    """Numerical d(loss)/d(param) for every coordinate of every tensor in ``params``."""
    grads = []
    with torch.no_grad():
        for p in params:
            g = torch.zeros_like(p)
            flat, gflat = p.view(-1), g.view(-1)
            for i in range(flat.numel()):
                orig = flat[i].item()
                flat[i] = orig + step
                up = loss_fn().item()
                flat[i] = orig - step
                down = loss_fn().item()
                flat[i] = orig
                gflat[i] = (up - down) / (2 * step)
            grads.append(g)
    return grads


def agreement(analytic, numeric, rel_tol=1e-3, abs_floor=1e-7):
    """Fraction of coordinates whose relative error is within ``rel_tol``.

    Coordinates where both gradients are below ``abs_floor`` count as agreeing.
    """
    a = torch.cat([x.reshape(-1) for x in analytic])
    n = torch.cat([x.reshape(-1) for x in numeric])
    scale = torch.maximum(a.abs(), n.abs())
    rel = (a - n).abs() / scale.clamp_min(1e-30)
    ok = (rel <= rel_tol) | (scale < abs_floor)
    return ok.double().mean().item()


def gradient_agreement(model_params, loss_fn, step=1e-4, rel_tol=1e-3):
    params = list(model_params)
    for p in params:
        p.grad = None
    loss = loss_fn()
    analytic = torch.autograd.grad(loss, params)
    numeric = central_differences(loss_fn, params, step)
    return agreement(analytic, numeric, rel_tol)
