"""Pure-Python exact integer matrix kernels.

Matrices are flat row-major lists of Python ints.  Rational callers clear
denominators, run these kernels, and reattach scale factors afterwards:
row scaling leaves kernels unchanged, global scaling acts on det/adjugate
by a known power.  The compiled twin in ``_kernels.pyx`` implements the
same contracts and is preferred at import time when available.
"""

BACKEND = "python"


def det_int(a, n):
    """Determinant of an n x n integer matrix via fraction-free (Bareiss)
    elimination.  All intermediate divisions are exact."""
    if n == 0:
        return 1
    if n == 1:
        return a[0]
    if n == 2:
        return a[0] * a[3] - a[1] * a[2]
    m = list(a)
    sign = 1
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
            rk = m[r * n + k]
            base = r * n
            kbase = k * n
            for c in range(k + 1, n):
                m[base + c] = (piv * m[base + c] - rk * m[kbase + c]) // prev
            m[base + k] = 0
        prev = piv
    return sign * m[n * n - 1]


def adj_int(a, n):
    """Adjugate of an n x n integer matrix: A @ adj(A) = det(A) * id."""
    if n == 1:
        return [1]
    out = [0] * (n * n)
    sub = [0] * ((n - 1) * (n - 1))
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
            # entry (dcol, drow): delete row drow / column dcol, transpose
            out[dcol * n + drow] = d if (drow + dcol) % 2 == 0 else -d
    return out


def matmul_int(a, b, n, k, m):
    """Product of n x k and k x m integer matrices (flat row-major)."""
    out = [0] * (n * m)
    for i in range(n):
        abase = i * k
        obase = i * m
        for t in range(k):
            ait = a[abase + t]
            if ait == 0:
                continue
            bbase = t * m
            for j in range(m):
                out[obase + j] += ait * b[bbase + j]
    return out


def row_echelon_int(a, rows, cols):
    """Fraction-free row echelon form of an integer matrix.

    Returns ``(echelon, pivot_cols)`` where ``echelon`` is flat row-major.
    Row content stays integral throughout (Bareiss two-term updates with
    exact division by the previous pivot), so the row space and kernel are
    preserved exactly.
    """
    m = [list(a[r * cols:(r + 1) * cols]) for r in range(rows)]
    pivots = []
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
            rk = m[r][pc]
            mr = m[r]
            mp = m[pr]
            for c in range(pc + 1, cols):
                mr[c] = (piv * mr[c] - rk * mp[c]) // prev
            mr[pc] = 0
        prev = piv
        pivots.append(pc)
        pr += 1
        if pr == rows:
            break
    flat = []
    for row in m:
        flat.extend(row)
    return flat, pivots
