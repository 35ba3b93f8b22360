# Compiled twin of _pure.run_alternating_projections.  Same contract, same
# status codes; small dense blocks only, so plain loops beat BLAS dispatch.
import numpy as np

cimport numpy as cnp
from libc.math cimport sqrt
from scipy.linalg.cython_lapack cimport zheev

cnp.import_array()

CONVERGED = 0
CAP_REACHED = 1
STALLED = 2


def run_alternating_projections(double[:, ::1] coeffs, double[:, ::1] proj,
                                double complex[:, :, ::1] rhs, x0,
                                double tol, long max_iter,
                                long check_every=500,
                                double stall_ratio=0.999,
                                double stall_floor=0.0):
    cdef cnp.ndarray[cnp.complex128_t, ndim=3] xarr = np.array(
        x0, dtype=np.complex128, order="C")
    cdef double complex[:, :, ::1] x = xarr
    cdef Py_ssize_t nr = coeffs.shape[0]
    cdef Py_ssize_t nb = coeffs.shape[1]
    cdef Py_ssize_t d = rhs.shape[1]
    if x.shape[0] != nb or x.shape[1] != d or x.shape[2] != d:
        raise ValueError("x0 shape does not match the constraint system")

    cdef cnp.ndarray[cnp.complex128_t, ndim=3] gaparr = np.empty(
        (nr, d, d), dtype=np.complex128)
    cdef double complex[:, :, ::1] gap = gaparr

    # LAPACK zheev workspace; a holds one block in column-major order.
    cdef int n = <int> d
    cdef int lda = n
    cdef int lwork = 2 * n * n + 2 * n
    cdef int lrwork = 3 * n
    cdef int info = 0
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] a_buf = np.empty(n * n, dtype=np.complex128)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] w_buf = np.empty(n, dtype=np.float64)
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] work_buf = np.empty(lwork, dtype=np.complex128)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] rwork_buf = np.empty(lrwork, dtype=np.float64)
    cdef double complex[::1] a = a_buf
    cdef double[::1] w = w_buf
    cdef double complex[::1] work = work_buf
    cdef double[::1] rwork = rwork_buf

    cdef double residual = 0.0
    cdef double checkpoint = -1.0
    cdef double row_sq, c, p, wk
    cdef double complex acc, z
    cdef Py_ssize_t it, r, b, i, j, k
    cdef long iterations = 0
    cdef int status = CAP_REACHED
    cdef char jobz = b'V'
    cdef char uplo = b'L'

    for it in range(1, max_iter + 1):
        iterations = it
        # gap = coeffs @ x - rhs, residual = max row Frobenius norm
        residual = 0.0
        for r in range(nr):
            row_sq = 0.0
            for i in range(d):
                for j in range(d):
                    acc = -rhs[r, i, j]
                    for b in range(nb):
                        c = coeffs[r, b]
                        if c != 0.0:
                            acc = acc + c * x[b, i, j]
                    gap[r, i, j] = acc
                    row_sq += acc.real * acc.real + acc.imag * acc.imag
            if row_sq > residual:
                residual = row_sq
        residual = sqrt(residual)
        if residual <= tol:
            return xarr, residual, iterations, CONVERGED
        if it % check_every == 0:
            if checkpoint >= 0.0 and residual > stall_floor \
                    and residual > stall_ratio * checkpoint:
                return xarr, residual, iterations, STALLED
            checkpoint = residual
        # affine projection: x -= proj @ gap
        for b in range(nb):
            for r in range(nr):
                p = proj[b, r]
                if p != 0.0:
                    for i in range(d):
                        for j in range(d):
                            x[b, i, j] = x[b, i, j] - p * gap[r, i, j]
        # blockwise PSD projection via Hermitian eigendecomposition
        for b in range(nb):
            for j in range(d):
                for i in range(d):
                    a[i + j * d] = 0.5 * (x[b, i, j] + x[b, j, i].conjugate())
            zheev(&jobz, &uplo, &n, &a[0], &lda, &w[0], &work[0], &lwork,
                  &rwork[0], &info)
            if info != 0:
                raise RuntimeError(f"zheev failed with info={info}")
            for i in range(d):
                for j in range(d):
                    acc = 0.0
                    for k in range(d):
                        wk = w[k]
                        if wk > 0.0:
                            z = a[i + k * d] * a[j + k * d].conjugate()
                            acc = acc + wk * z
                    x[b, i, j] = acc
    return xarr, residual, iterations, status
