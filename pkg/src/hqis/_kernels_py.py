"""Pure-Python twin of the compiled ``_kernels`` extension."""

from __future__ import annotations

import math


def _euler(theta: float, phi: float, lam: float) -> tuple[complex, ...]:
    c = math.cos(theta / 2.0)
    s = math.sin(theta / 2.0)
    sp = (phi + lam) / 2.0
    sm = (phi - lam) / 2.0
    return (
        complex(math.cos(sp), -math.sin(sp)) * c,
        -complex(math.cos(sm), -math.sin(sm)) * s,
        complex(math.cos(sm), math.sin(sm)) * s,
        complex(math.cos(sp), math.sin(sp)) * c,
    )


def _flat(T) -> list[complex]:
    if isinstance(T, list) and len(T) == 16:
        return T
    return [complex(v) for v in T.reshape(16).tolist()]


def _objective(t: list[complex], theta: float, phi: float, lam: float) -> float:
    u = _euler(theta, phi, lam)
    acc = 0j
    for a in range(2):
        for b in range(2):
            for c in range(2):
                for d in range(2):
                    acc = acc + u[2 * a + b] * u[2 * d + c].conjugate() * t[8 * a + 4 * b + 2 * c + d]
    return acc.real


def objective(T, theta: float, phi: float, lam: float) -> float:
    return _objective(_flat(T), theta, phi, lam)


def coordinate_search(T, x0, step0: float, min_step: float, max_evals: int):
    t = _flat(T)
    x = [float(x0[0]), float(x0[1]), float(x0[2])]
    step = step0
    f = _objective(t, *x)
    evals = 1
    while step >= min_step and evals < max_evals:
        improved = False
        for i in range(3):
            for sgn in (1.0, -1.0):
                if evals >= max_evals:
                    break
                xi = x[i]
                x[i] = xi + sgn * step
                ft = _objective(t, *x)
                evals += 1
                if ft > f:
                    f = ft
                    improved = True
                    break
                x[i] = xi
        if not improved:
            step = step * 0.5
    return tuple(x), f, evals
