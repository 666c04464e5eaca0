"""Target potentials f (with density proportional to exp(-f)) and their gradients."""

from __future__ import annotations

import numpy as np

__all__ = [
    "GaussianTarget",
    "QuarticTarget",
    "DoubleBananasTarget",
    "CustomTarget",
    "potential",
    "grad_potential",
    "builtin",
    "builtin_names",
    "builtin_targets",
]


class GaussianTarget:
    """Quadratic potential 0.5 (x - b)^T Q^-1 (x - b) for a normal target N(b, Q).

    Q is the target covariance; its inverse and log-determinant are cached via
    a Cholesky factorization at construction.
    """

    def __init__(self, b, q):
        self.b = np.atleast_1d(np.asarray(b, dtype=float))
        q = np.atleast_2d(np.asarray(q, dtype=float))
        if q.shape != (self.b.size, self.b.size):
            raise ValueError(f"covariance shape {q.shape} does not match mean of size {self.b.size}")
        if not np.allclose(q, q.T, atol=1e-12 * max(1.0, np.abs(q).max())):
            raise ValueError("covariance must be symmetric")
        try:
            chol = np.linalg.cholesky(q)
        except np.linalg.LinAlgError:
            raise ValueError("covariance must be positive definite") from None
        self.q = q
        self.q_inv = np.linalg.inv(q)
        self.q_inv = 0.5 * (self.q_inv + self.q_inv.T)
        self.log_det_q = 2.0 * float(np.log(np.diag(chol)).sum())
        self.dim = self.b.size

    def potential(self, x):
        r = np.asarray(x, dtype=float) - self.b
        return 0.5 * float(r @ self.q_inv @ r)

    def grad(self, x):
        return self.q_inv @ (np.asarray(x, dtype=float) - self.b)

    def grad_all(self, x):
        return (np.asarray(x, dtype=float) - self.b) @ self.q_inv


class QuarticTarget:
    """Non-Lipschitz convex potential (x1^4 + x2^4) / 4 in two dimensions."""

    dim = 2

    def potential(self, x):
        x = np.asarray(x, dtype=float)
        return 0.25 * float((x**4).sum())

    def grad(self, x):
        return np.asarray(x, dtype=float) ** 3

    def grad_all(self, x):
        return np.asarray(x, dtype=float) ** 3


class DoubleBananasTarget:
    """Two mirrored banana-shaped modes.

    f(x) = -log(exp(-F(x)) + exp(-F(Rx))) with the Rosenbrock-type warp
    F(x) = (a - x1)^2 / c1 + c2 (x2 - x1^2)^2 and the reflection R = diag(1, -1).
    The defaults a=1, c1=0.5, c2=5 place both modes inside [-2, 2]^2.
    """

    dim = 2

    def __init__(self, a=1.0, c1=0.5, c2=5.0):
        self.a = float(a)
        self.c1 = float(c1)
        self.c2 = float(c2)

    def _warp(self, x1, x2):
        return (self.a - x1) ** 2 / self.c1 + self.c2 * (x2 - x1**2) ** 2

    def _warp_grad(self, x1, x2):
        g1 = -2.0 * (self.a - x1) / self.c1 - 4.0 * self.c2 * x1 * (x2 - x1**2)
        g2 = 2.0 * self.c2 * (x2 - x1**2)
        return g1, g2

    def potential(self, x):
        x = np.asarray(x, dtype=float)
        f1 = self._warp(x[0], x[1])
        f2 = self._warp(x[0], -x[1])
        return float(-np.logaddexp(-f1, -f2))

    def grad(self, x):
        x = np.asarray(x, dtype=float)
        f1 = self._warp(x[0], x[1])
        f2 = self._warp(x[0], -x[1])
        # softmax weights of the two mirrored components
        w1 = 1.0 / (1.0 + np.exp(f1 - f2))
        w2 = 1.0 - w1
        g11, g12 = self._warp_grad(x[0], x[1])
        g21, g22 = self._warp_grad(x[0], -x[1])
        return np.array([w1 * g11 + w2 * g21, w1 * g12 - w2 * g22])

    def grad_all(self, x):
        x = np.asarray(x, dtype=float)
        x1, x2 = x[:, 0], x[:, 1]
        f1 = self._warp(x1, x2)
        f2 = self._warp(x1, -x2)
        w1 = 1.0 / (1.0 + np.exp(np.clip(f1 - f2, -700, 700)))
        w2 = 1.0 - w1
        g11, g12 = self._warp_grad(x1, x2)
        g21, g22 = self._warp_grad(x1, -x2)
        return np.stack([w1 * g11 + w2 * g21, w1 * g12 - w2 * g22], axis=1)


class CustomTarget:
    """Wrap user-supplied potential/gradient callables."""

    def __init__(self, f, grad_f, dim):
        self._f = f
        self._grad = grad_f
        self.dim = dim

    def potential(self, x):
        return float(self._f(np.asarray(x, dtype=float)))

    def grad(self, x):
        return np.asarray(self._grad(np.asarray(x, dtype=float)), dtype=float)

    def grad_all(self, x):
        return np.stack([self.grad(row) for row in np.asarray(x, dtype=float)])


def potential(target, x) -> float:
    x = np.asarray(x, dtype=float)
    if x.shape != (target.dim,):
        raise ValueError(f"target expects dimension {target.dim}, got shape {x.shape}")
    return target.potential(x)


def grad_potential(target, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (target.dim,):
        raise ValueError(f"target expects dimension {target.dim}, got shape {x.shape}")
    return target.grad(x)


_CORRELATED_Q = np.array([[3.0, -2.0], [-2.0, 3.0]])


def builtin(name: str, q_is_precision: bool = True):
    """Construct one of the built-in experiment targets by name.

    For ``gauss-correlated`` the printed matrix [[3, -2], [-2, 3]] is read as the
    precision (inverse covariance) when ``q_is_precision`` is true (the default);
    set it to false to read it as the covariance directly.
    """
    if name == "gauss-correlated":
        q = np.linalg.inv(_CORRELATED_Q) if q_is_precision else _CORRELATED_Q
        return GaussianTarget(b=np.zeros(2), q=q)
    if name == "gauss-aniso":
        return GaussianTarget(b=np.array([1.0, 1.0]), q=np.diag([10.0, 0.05]))
    if name == "quartic":
        return QuarticTarget()
    if name == "double-bananas":
        return DoubleBananasTarget()
    raise ValueError(f"unknown target {name!r} (valid names: {', '.join(builtin_names())})")


def builtin_names():
    return ["gauss-correlated", "gauss-aniso", "quartic", "double-bananas"]


def builtin_targets(q_is_precision: bool = True):
    """All built-in targets as (name, target) pairs."""
    return [(name, builtin(name, q_is_precision)) for name in builtin_names()]
