# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled double-pendulum kernels.

Operation-for-operation twin of ``_kernels_py``; see that module for the
calling conventions and status codes.
"""

from libc.math cimport cos, sin, fabs, isfinite

cdef enum:
    STATUS_OK = 0
    STATUS_MAX_ITER = 1
    STATUS_DIVERGED = 2
    STATUS_SINGULAR = 3


cdef struct Params:
    double la, lb, ma, mb, gb


cdef struct Phase:
    double ax, ay, bx, by, pax, pay, pbx, pby


cdef inline double dmax(double a, double b) nogil:
    return a if a >= b else b


cdef inline int solve2(double a00, double a01, double a10, double a11,
                       double b0, double b1, double* x0, double* x1) nogil:
    cdef double t, l10, u11, y1
    if fabs(a10) > fabs(a00):
        t = a00; a00 = a10; a10 = t
        t = a01; a01 = a11; a11 = t
        t = b0; b0 = b1; b1 = t
    if a00 == 0.0:
        return 0
    l10 = a10 / a00
    u11 = a11 - l10 * a01
    if u11 == 0.0:
        return 0
    y1 = b1 - l10 * b0
    x1[0] = y1 / u11
    x0[0] = (b0 - a01 * x1[0]) / a00
    return 1


cdef inline Phase advance(Params* P, double* r, double* p, double nu0, double nu1,
                          double u0, double u1, double h) nogil:
    cdef Phase s
    cdef double ax = r[0], ay = r[1], bx = r[2], by = r[3]
    cdef double dx = bx - ax, dy = by - ay
    cdef double hh = 0.5 * h
    cdef double pax, pay, pbx, pby, fall, c1, c2
    pax = p[0] - hh * (2.0 * ax * nu0 - 2.0 * dx * nu1)
    pay = p[1] - hh * (2.0 * ay * nu0 - 2.0 * dy * nu1)
    pbx = p[2] - hh * (2.0 * dx * nu1)
    pby = p[3] - hh * (2.0 * dy * nu1)
    fall = 0.5 * P.gb * hh * hh
    ax = ax + hh * pax / P.ma
    ay = ay + hh * pay / P.ma - fall
    bx = bx + hh * pbx / P.mb
    by = by + hh * pby / P.mb - fall
    pay = pay - P.ma * P.gb * hh
    pby = pby - P.mb * P.gb * hh
    dx = bx - ax
    dy = by - ay
    c1 = h * (u0 - u1) / (P.la * P.la)
    c2 = h * u1 / (P.lb * P.lb)
    pax = pax - c1 * ay + c2 * dy
    pay = pay + c1 * ax - c2 * dx
    pbx = pbx - c2 * dy
    pby = pby + c2 * dx
    ax = ax + hh * pax / P.ma
    ay = ay + hh * pay / P.ma - fall
    bx = bx + hh * pbx / P.mb
    by = by + hh * pby / P.mb - fall
    pay = pay - P.ma * P.gb * hh
    pby = pby - P.mb * P.gb * hh
    s.ax = ax; s.ay = ay; s.bx = bx; s.by = by
    s.pax = pax; s.pay = pay; s.pbx = pbx; s.pby = pby
    return s


cdef inline void gres(Params* P, double ax, double ay, double bx, double by,
                      double* g0, double* g1) nogil:
    cdef double dx = bx - ax, dy = by - ay
    g0[0] = ax * ax + ay * ay - P.la * P.la
    g1[0] = dx * dx + dy * dy - P.lb * P.lb


def pendulum_step(params, r, p, u, double h, nu_guess, double tol, int max_iter,
                  double fd_step):
    cdef Params P
    P.la, P.lb, P.ma, P.mb, P.gb = params
    cdef double rr[4]
    cdef double pp[4]
    cdef int i
    for i in range(4):
        rr[i] = r[i]
        pp[i] = p[i]
    cdef double u0 = u[0], u1 = u[1]
    cdef double nu0 = nu_guess[0], nu1 = nu_guess[1]
    cdef double mu0 = 0.0, mu1 = 0.0
    cdef double F0, F1, G0, G1, err, delta, j00, j01, j10, j11, s0, s1
    cdef double ax, ay, bx, by, pax, pay, pbx, pby
    cdef double dx, dy, ia, ib, g00, g01, g10, g11, g12, g13, a00, a01, a11, f0, f1, hh
    cdef double g0, g1
    cdef int iters = 0
    cdef int status = STATUS_OK
    cdef Phase s, t

    if h == 0.0:
        s.ax = rr[0]; s.ay = rr[1]; s.bx = rr[2]; s.by = rr[3]
        s.pax = pp[0]; s.pay = pp[1]; s.pbx = pp[2]; s.pby = pp[3]
        nu0 = 0.0
        nu1 = 0.0
    else:
        s = advance(&P, rr, pp, nu0, nu1, u0, u1, h)
        gres(&P, s.ax, s.ay, s.bx, s.by, &F0, &F1)
        err = dmax(fabs(F0), fabs(F1))
        while err > tol:
            if iters >= max_iter:
                status = STATUS_MAX_ITER
                break
            delta = fd_step * (1.0 + dmax(fabs(nu0), fabs(nu1)))
            t = advance(&P, rr, pp, nu0 + delta, nu1, u0, u1, h)
            gres(&P, t.ax, t.ay, t.bx, t.by, &G0, &G1)
            j00 = (G0 - F0) / delta
            j10 = (G1 - F1) / delta
            t = advance(&P, rr, pp, nu0, nu1 + delta, u0, u1, h)
            gres(&P, t.ax, t.ay, t.bx, t.by, &G0, &G1)
            j01 = (G0 - F0) / delta
            j11 = (G1 - F1) / delta
            if not solve2(j00, j01, j10, j11, -F0, -F1, &s0, &s1):
                status = STATUS_SINGULAR
                break
            nu0 = nu0 + s0
            nu1 = nu1 + s1
            s = advance(&P, rr, pp, nu0, nu1, u0, u1, h)
            gres(&P, s.ax, s.ay, s.bx, s.by, &F0, &F1)
            err = dmax(fabs(F0), fabs(F1))
            iters += 1
            if not isfinite(err):
                status = STATUS_DIVERGED
                break

    ax = s.ax; ay = s.ay; bx = s.bx; by = s.by
    pax = s.pax; pay = s.pay; pbx = s.pbx; pby = s.pby

    if h != 0.0 and status == STATUS_OK:
        dx = bx - ax
        dy = by - ay
        ia = 1.0 / P.ma
        ib = 1.0 / P.mb
        g00 = 2.0 * ax
        g01 = 2.0 * ay
        g10 = -2.0 * dx
        g11 = -2.0 * dy
        g12 = 2.0 * dx
        g13 = 2.0 * dy
        a00 = g00 * g00 * ia + g01 * g01 * ia
        a01 = g00 * g10 * ia + g01 * g11 * ia
        a11 = g10 * g10 * ia + g11 * g11 * ia + g12 * g12 * ib + g13 * g13 * ib
        f0 = g00 * pax * ia + g01 * pay * ia
        f1 = g10 * pax * ia + g11 * pay * ia + g12 * pbx * ib + g13 * pby * ib
        hh = 0.5 * h
        if not solve2(hh * a00, hh * a01, hh * a01, hh * a11, f0, f1, &mu0, &mu1):
            status = STATUS_SINGULAR
            mu0 = 0.0
            mu1 = 0.0
        else:
            pax = pax - hh * (g00 * mu0 + g10 * mu1)
            pay = pay - hh * (g01 * mu0 + g11 * mu1)
            pbx = pbx - hh * (g12 * mu1)
            pby = pby - hh * (g13 * mu1)

    dx = bx - ax
    dy = by - ay
    gres(&P, ax, ay, bx, by, &g0, &g1)
    f0 = 2.0 * (ax * pax + ay * pay) / P.ma
    f1 = 2.0 * (-dx * pax - dy * pay) / P.ma + 2.0 * (dx * pbx + dy * pby) / P.mb
    return ((ax, ay, bx, by), (pax, pay, pbx, pby), (nu0, nu1), (mu0, mu1), iters,
            dmax(fabs(g0), fabs(g1)), dmax(fabs(f0), fabs(f1)), status)


cdef inline void explicit_rhs(Params* P, double q1, double q2, double p1, double p2,
                              double u0, double u1, double* k) nogil:
    cdef double mt = P.ma + P.mb
    cdef double c2 = cos(q2), s2 = sin(q2)
    cdef double m11 = mt * P.la * P.la + P.mb * P.lb * P.lb + 2.0 * P.mb * P.la * P.lb * c2
    cdef double m12 = P.mb * P.lb * P.lb + P.mb * P.la * P.lb * c2
    cdef double m22 = P.mb * P.lb * P.lb
    cdef double det = m11 * m22 - m12 * m12
    cdef double qd1 = (m22 * p1 - m12 * p2) / det
    cdef double qd2 = (m11 * p2 - m12 * p1) / det
    cdef double dm11 = -2.0 * P.mb * P.la * P.lb * s2
    cdef double dm12 = -P.mb * P.la * P.lb * s2
    cdef double ct = cos(q1 + q2)
    k[0] = qd1
    k[1] = qd2
    k[2] = -P.gb * (mt * P.la * cos(q1) + P.mb * P.lb * ct) + u0
    k[3] = -P.gb * P.mb * P.lb * ct + 0.5 * (qd1 * qd1 * dm11 + 2.0 * qd1 * qd2 * dm12) + u1


def rk4_run(params, x0, u, double h, Py_ssize_t nsteps, double[:, ::1] out):
    cdef Params P
    P.la, P.lb, P.ma, P.mb, P.gb = params
    cdef double u0 = u[0], u1 = u[1]
    cdef double q1 = x0[0], q2 = x0[1], p1 = x0[2], p2 = x0[3]
    cdef double k1[4]
    cdef double k2[4]
    cdef double k3[4]
    cdef double k4[4]
    cdef double hh = 0.5 * h, h6 = h / 6.0
    cdef Py_ssize_t i
    if out.shape[0] < nsteps + 1 or out.shape[1] != 4:
        raise ValueError("out must have shape (nsteps + 1, 4)")
    out[0, 0] = q1
    out[0, 1] = q2
    out[0, 2] = p1
    out[0, 3] = p2
    with nogil:
        for i in range(1, nsteps + 1):
            explicit_rhs(&P, q1, q2, p1, p2, u0, u1, k1)
            explicit_rhs(&P, q1 + hh * k1[0], q2 + hh * k1[1], p1 + hh * k1[2], p2 + hh * k1[3], u0, u1, k2)
            explicit_rhs(&P, q1 + hh * k2[0], q2 + hh * k2[1], p1 + hh * k2[2], p2 + hh * k2[3], u0, u1, k3)
            explicit_rhs(&P, q1 + h * k3[0], q2 + h * k3[1], p1 + h * k3[2], p2 + h * k3[3], u0, u1, k4)
            q1 = q1 + h6 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0])
            q2 = q2 + h6 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])
            p1 = p1 + h6 * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2])
            p2 = p2 + h6 * (k1[3] + 2.0 * k2[3] + 2.0 * k3[3] + k4[3])
            out[i, 0] = q1
            out[i, 1] = q2
            out[i, 2] = p1
            out[i, 3] = p2
    return out
