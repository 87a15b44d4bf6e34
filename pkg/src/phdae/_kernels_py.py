"""Pure-Python versions of the compiled double-pendulum kernels.

This module mirrors ``_kernels.pyx`` operation for operation so both
backends produce the same floating-point results. Parameters are passed as
the tuple ``(l_a, l_b, m_a, m_b, g_bar)``.

Status codes returned by :func:`pendulum_step`: 0 converged, 1 iteration
cap reached, 2 non-finite residual, 3 singular 2x2 system.
"""

from math import cos, isfinite, sin

STATUS_OK = 0
STATUS_MAX_ITER = 1
STATUS_DIVERGED = 2
STATUS_SINGULAR = 3


def _solve2(a00, a01, a10, a11, b0, b1):
    # Gaussian elimination with partial pivoting; returns None when singular.
    if abs(a10) > abs(a00):
        a00, a01, a10, a11 = a10, a11, a00, a01
        b0, b1 = b1, b0
    if a00 == 0.0:
        return None
    l10 = a10 / a00
    u11 = a11 - l10 * a01
    if u11 == 0.0:
        return None
    y1 = b1 - l10 * b0
    x1 = y1 / u11
    x0 = (b0 - a01 * x1) / a00
    return x0, x1


def _advance(params, r, p, nu0, nu1, u0, u1, h):
    """Positions and momenta after ``psi_h`` applied to ``Phi_{nu,h/2}(r, p)``."""
    la, lb, ma, mb, gb = params
    ax, ay, bx, by = r
    dx = bx - ax
    dy = by - ay
    hh = 0.5 * h
    # Phi_{nu,h/2}: p <- p - (h/2) G(r)^T nu, G rows 2(a, 0) and 2(-d, d).
    pax = p[0] - hh * (2.0 * ax * nu0 - 2.0 * dx * nu1)
    pay = p[1] - hh * (2.0 * ay * nu0 - 2.0 * dy * nu1)
    pbx = p[2] - hh * (2.0 * dx * nu1)
    pby = p[3] - hh * (2.0 * dy * nu1)
    # Free fall for h/2.
    fall = 0.5 * gb * hh * hh
    ax = ax + hh * pax / ma
    ay = ay + hh * pay / ma - fall
    bx = bx + hh * pbx / mb
    by = by + hh * pby / mb - fall
    pay = pay - ma * gb * hh
    pby = pby - mb * gb * hh
    # Input kick p += h U(r) u at the midpoint configuration.
    dx = bx - ax
    dy = by - ay
    c1 = h * (u0 - u1) / (la * la)
    c2 = h * u1 / (lb * lb)
    pax = pax - c1 * ay + c2 * dy
    pay = pay + c1 * ax - c2 * dx
    pbx = pbx - c2 * dy
    pby = pby + c2 * dx
    # Free fall for h/2.
    ax = ax + hh * pax / ma
    ay = ay + hh * pay / ma - fall
    bx = bx + hh * pbx / mb
    by = by + hh * pby / mb - fall
    pay = pay - ma * gb * hh
    pby = pby - mb * gb * hh
    return ax, ay, bx, by, pax, pay, pbx, pby


def _gres(params, ax, ay, bx, by):
    la, lb = params[0], params[1]
    dx = bx - ax
    dy = by - ay
    return ax * ax + ay * ay - la * la, dx * dx + dy * dy - lb * lb


def pendulum_step(params, r, p, u, h, nu_guess, tol, max_iter, fd_step):
    """One constrained step ``Phi_{mu,h/2} o psi_h o Phi_{nu,h/2}`` for the double pendulum.

    Returns ``(r_next, p_next, nu, mu, iterations, g_res, f_res, status)``.
    """
    la, lb, ma, mb, gb = params
    u0, u1 = u[0], u[1]
    nu0, nu1 = nu_guess[0], nu_guess[1]
    if h == 0.0:
        ax, ay, bx, by = r
        pax, pay, pbx, pby = p
        nu0 = nu1 = 0.0
        iters = 0
        status = STATUS_OK
    else:
        s = _advance(params, r, p, nu0, nu1, u0, u1, h)
        F0, F1 = _gres(params, s[0], s[1], s[2], s[3])
        err = max(abs(F0), abs(F1))
        iters = 0
        status = STATUS_OK
        while err > tol:
            if iters >= max_iter:
                status = STATUS_MAX_ITER
                break
            delta = fd_step * (1.0 + max(abs(nu0), abs(nu1)))
            t = _advance(params, r, p, nu0 + delta, nu1, u0, u1, h)
            G0, G1 = _gres(params, t[0], t[1], t[2], t[3])
            j00 = (G0 - F0) / delta
            j10 = (G1 - F1) / delta
            t = _advance(params, r, p, nu0, nu1 + delta, u0, u1, h)
            G0, G1 = _gres(params, t[0], t[1], t[2], t[3])
            j01 = (G0 - F0) / delta
            j11 = (G1 - F1) / delta
            step = _solve2(j00, j01, j10, j11, -F0, -F1)
            if step is None:
                status = STATUS_SINGULAR
                break
            nu0 = nu0 + step[0]
            nu1 = nu1 + step[1]
            s = _advance(params, r, p, nu0, nu1, u0, u1, h)
            F0, F1 = _gres(params, s[0], s[1], s[2], s[3])
            err = max(abs(F0), abs(F1))
            iters += 1
            if not isfinite(err):
                status = STATUS_DIVERGED
                break
        ax, ay, bx, by, pax, pay, pbx, pby = s

    mu0 = mu1 = 0.0
    if h != 0.0 and status == STATUS_OK:
        # Momentum projection: (h/2) G M^{-1} G^T mu = G M^{-1} p, a 2x2 linear solve.
        dx = bx - ax
        dy = by - ay
        ia = 1.0 / ma
        ib = 1.0 / mb
        g00, g01 = 2.0 * ax, 2.0 * ay
        g10, g11, g12, g13 = -2.0 * dx, -2.0 * dy, 2.0 * dx, 2.0 * dy
        a00 = g00 * g00 * ia + g01 * g01 * ia
        a01 = g00 * g10 * ia + g01 * g11 * ia
        a11 = g10 * g10 * ia + g11 * g11 * ia + g12 * g12 * ib + g13 * g13 * ib
        f0 = g00 * pax * ia + g01 * pay * ia
        f1 = g10 * pax * ia + g11 * pay * ia + g12 * pbx * ib + g13 * pby * ib
        hh = 0.5 * h
        sol = _solve2(hh * a00, hh * a01, hh * a01, hh * a11, f0, f1)
        if sol is None:
            status = STATUS_SINGULAR
        else:
            mu0, mu1 = sol
            pax = pax - hh * (g00 * mu0 + g10 * mu1)
            pay = pay - hh * (g01 * mu0 + g11 * mu1)
            pbx = pbx - hh * (g12 * mu1)
            pby = pby - hh * (g13 * mu1)

    dx = bx - ax
    dy = by - ay
    g0, g1 = _gres(params, ax, ay, bx, by)
    f0 = 2.0 * (ax * pax + ay * pay) / ma
    f1 = 2.0 * (-dx * pax - dy * pay) / ma + 2.0 * (dx * pbx + dy * pby) / mb
    return ((ax, ay, bx, by), (pax, pay, pbx, pby), (nu0, nu1), (mu0, mu1), iters,
            max(abs(g0), abs(g1)), max(abs(f0), abs(f1)), status)


def _explicit_rhs(params, q1, q2, p1, p2, u0, u1):
    la, lb, ma, mb, gb = params
    mt = ma + mb
    c2 = cos(q2)
    s2 = sin(q2)
    m11 = mt * la * la + mb * lb * lb + 2.0 * mb * la * lb * c2
    m12 = mb * lb * lb + mb * la * lb * c2
    m22 = mb * lb * lb
    det = m11 * m22 - m12 * m12
    qd1 = (m22 * p1 - m12 * p2) / det
    qd2 = (m11 * p2 - m12 * p1) / det
    dm11 = -2.0 * mb * la * lb * s2
    dm12 = -mb * la * lb * s2
    ct = cos(q1 + q2)
    dp1 = -gb * (mt * la * cos(q1) + mb * lb * ct) + u0
    dp2 = -gb * mb * lb * ct + 0.5 * (qd1 * qd1 * dm11 + 2.0 * qd1 * qd2 * dm12) + u1
    return qd1, qd2, dp1, dp2


def rk4_run(params, x0, u, h, nsteps, out):
    """Classical RK4 on the explicit pendulum ODE with constant input.

    Writes ``nsteps + 1`` rows ``(q1, q2, p_hat1, p_hat2)`` into ``out``.
    """
    u0, u1 = u[0], u[1]
    q1, q2, p1, p2 = x0[0], x0[1], x0[2], x0[3]
    out[0, 0] = q1
    out[0, 1] = q2
    out[0, 2] = p1
    out[0, 3] = p2
    hh = 0.5 * h
    h6 = h / 6.0
    for i in range(1, nsteps + 1):
        k1 = _explicit_rhs(params, q1, q2, p1, p2, u0, u1)
        k2 = _explicit_rhs(params, q1 + hh * k1[0], q2 + hh * k1[1], p1 + hh * k1[2], p2 + hh * k1[3], u0, u1)
        k3 = _explicit_rhs(params, q1 + hh * k2[0], q2 + hh * k2[1], p1 + hh * k2[2], p2 + hh * k2[3], u0, u1)
        k4 = _explicit_rhs(params, q1 + h * k3[0], q2 + h * k3[1], p1 + h * k3[2], p2 + h * k3[3], u0, u1)
        q1 = q1 + h6 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0])
        q2 = q2 + h6 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])
        p1 = p1 + h6 * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2])
        p2 = p2 + h6 * (k1[3] + 2.0 * k2[3] + 2.0 * k3[3] + k4[3])
        out[i, 0] = q1
        out[i, 1] = q2
        out[i, 2] = p1
        out[i, 3] = p2
    return out
