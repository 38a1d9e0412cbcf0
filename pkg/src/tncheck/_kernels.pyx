# cython: language_level=3
# cython: boundscheck=False
"""Compiled exact integer matrix kernels.

Twin of ``_kernels_py``: same contracts, same algorithms, loop overhead
compiled away.  Entries remain arbitrary-precision Python ints; only the
index bookkeeping is C-typed.
"""

BACKEND = "cython"


def det_int(a, Py_ssize_t n):
    cdef Py_ssize_t k, r, c, kk, base, kbase
    cdef int sign = 1
    if n == 0:
        return 1
    if n == 1:
        return a[0]
    if n == 2:
        return a[0] * a[3] - a[1] * a[2]
    cdef list m = list(a)
    prev = 1
    for k in range(n - 1):
        kk = k * n + k
        if m[kk] == 0:
            for r in range(k + 1, n):
                if m[r * n + k] != 0:
                    for c in range(k, n):
                        m[k * n + c], m[r * n + c] = m[r * n + c], m[k * n + c]
                    sign = -sign
                    break
            else:
                return 0
        piv = m[kk]
        for r in range(k + 1, n):
            base = r * n
            kbase = k * n
            rk = m[base + k]
            for c in range(k + 1, n):
                m[base + c] = (piv * m[base + c] - rk * m[kbase + c]) // prev
            m[base + k] = 0
        prev = piv
    if sign == 1:
        return m[n * n - 1]
    return -m[n * n - 1]


def adj_int(a, Py_ssize_t n):
    cdef Py_ssize_t drow, dcol, r, c, idx, base
    if n == 1:
        return [1]
    cdef list out = [0] * (n * n)
    cdef list sub = [0] * ((n - 1) * (n - 1))
    for drow in range(n):
        for dcol in range(n):
            idx = 0
            for r in range(n):
                if r == drow:
                    continue
                base = r * n
                for c in range(n):
                    if c == dcol:
                        continue
                    sub[idx] = a[base + c]
                    idx += 1
            d = det_int(sub, n - 1)
            out[dcol * n + drow] = d if (drow + dcol) % 2 == 0 else -d
    return out


def matmul_int(a, b, Py_ssize_t n, Py_ssize_t k, Py_ssize_t m):
    cdef Py_ssize_t i, t, j, abase, obase, bbase
    cdef list out = [0] * (n * m)
    for i in range(n):
        abase = i * k
        obase = i * m
        for t in range(k):
            ait = a[abase + t]
            if ait == 0:
                continue
            bbase = t * m
            for j in range(m):
                out[obase + j] = out[obase + j] + ait * b[bbase + j]
    return out


def row_echelon_int(a, Py_ssize_t rows, Py_ssize_t cols):
    cdef Py_ssize_t r, c, pc, pr, sel
    cdef list m = [list(a[r * cols:(r + 1) * cols]) for r in range(rows)]
    cdef list pivots = []
    cdef list mr, mp
    prev = 1
    pr = 0
    for pc in range(cols):
        sel = -1
        for r in range(pr, rows):
            if m[r][pc] != 0:
                sel = r
                break
        if sel < 0:
            continue
        if sel != pr:
            m[pr], m[sel] = m[sel], m[pr]
        piv = m[pr][pc]
        for r in range(pr + 1, rows):
            mr = m[r]
            mp = m[pr]
            rk = mr[pc]
            for c in range(pc + 1, cols):
                mr[c] = (piv * mr[c] - rk * mp[c]) // prev
            mr[pc] = 0
        prev = piv
        pivots.append(pc)
        pr += 1
        if pr == rows:
            break
    cdef list flat = []
    for row in m:
        flat.extend(row)
    return flat, pivots
