# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled recovery-unitary search used by the access audit.

Must stay numerically in step with ``_kernels_py``.
"""

from libc.math cimport cos, sin

cdef extern from "complex.h" nogil:
    double complex cexp(double complex)
    double creal(double complex)
    double complex conj(double complex)


cdef inline void _euler(double theta, double phi, double lam, double complex* u) nogil:
    cdef double c = cos(theta / 2.0)
    cdef double s = sin(theta / 2.0)
    cdef double sp = (phi + lam) / 2.0
    cdef double sm = (phi - lam) / 2.0
    u[0] = (cos(sp) - 1j * sin(sp)) * c
    u[1] = -(cos(sm) - 1j * sin(sm)) * s
    u[2] = (cos(sm) + 1j * sin(sm)) * s
    u[3] = (cos(sp) + 1j * sin(sp)) * c


cdef double _objective(const double complex[:, :, :, ::1] T, double theta, double phi, double lam) nogil:
    cdef double complex u[4]
    cdef double complex acc = 0
    cdef int a, b, c, d
    _euler(theta, phi, lam, u)
    for a in range(2):
        for b in range(2):
            for c in range(2):
                for d in range(2):
                    acc = acc + u[2 * a + b] * conj(u[2 * d + c]) * T[a, b, c, d]
    return creal(acc)


def objective(const double complex[:, :, :, ::1] T, double theta, double phi, double lam):
    return _objective(T, theta, phi, lam)


def coordinate_search(const double complex[:, :, :, ::1] T, x0, double step0,
                      double min_step, int max_evals):
    cdef double x[3]
    cdef double f, ft, xi, step = step0
    cdef int evals, i, k, improved
    cdef double sgn
    x[0] = x0[0]
    x[1] = x0[1]
    x[2] = x0[2]
    with nogil:
        f = _objective(T, x[0], x[1], x[2])
        evals = 1
        while step >= min_step and evals < max_evals:
            improved = 0
            for i in range(3):
                for k in range(2):
                    if evals >= max_evals:
                        break
                    sgn = 1.0 if k == 0 else -1.0
                    xi = x[i]
                    x[i] = xi + sgn * step
                    ft = _objective(T, x[0], x[1], x[2])
                    evals += 1
                    if ft > f:
                        f = ft
                        improved = 1
                        break
                    x[i] = xi
            if not improved:
                step = step * 0.5
    return (x[0], x[1], x[2]), f, evals
