# cython: boundscheck=False, wraparound=False, cdivision=False
"""Compiled stepping kernel.

Mirrors ``_kernel_py`` operation for operation so both backends produce
bit-identical trajectories; see that module for the layout documentation.
"""

from libc.math cimport atan2, cos, fmod, sin, sqrt

from ._layout import (
    P_ACCEL, P_ALPHA, P_ARM_C, P_ARM_K, P_CASTOR_ON, P_CASTOR_STALL,
    P_CASTOR_THRESHOLD, P_DAMP_ROT, P_DAMP_TRANS, P_DEADBAND, P_DT, P_GRIP_C,
    P_GRIP_K, P_HANDLE_X, P_HANDLE_Y, P_HOME_X, P_HOME_Y, P_INERTIA, P_KP,
    P_MASS, P_P0X, P_P0Y, P_PLATE_X, P_PLATE_Y, P_REFPOINT, P_SHAPE, P_V_CAP,
    P_V_STUDY, P_VMAX,
)

BACKEND_NAME = "cython"

cdef double _DIRECTION_EPS = 1e-4
cdef double _PI = 3.14159265358979323846
cdef double _TWO_PI = 2.0 * 3.14159265358979323846

# state indices (compile-time constants)
cdef enum:
    iS_CMO_X = 0
    iS_CMO_Y = 1
    iS_CMO_YAW = 2
    iS_CMO_VX = 3
    iS_CMO_VY = 4
    iS_CMO_W = 5
    iS_BASE_X = 6
    iS_BASE_Y = 7
    iS_BASE_VX = 8
    iS_BASE_VY = 9
    iS_LAST_DIR = 10
    iS_HAS_DIR = 11
    iS_STALL = 12
    iS_TIME = 13

cdef enum:
    iP_DT = 0
    iP_KP = 1
    iP_DEADBAND = 2
    iP_VMAX = 3
    iP_SHAPE = 4
    iP_REFPOINT = 5
    iP_P0X = 6
    iP_P0Y = 7
    iP_MASS = 8
    iP_INERTIA = 9
    iP_HANDLE_X = 10
    iP_HANDLE_Y = 11
    iP_PLATE_X = 12
    iP_PLATE_Y = 13
    iP_DAMP_TRANS = 14
    iP_DAMP_ROT = 15
    iP_ARM_K = 16
    iP_ARM_C = 17
    iP_HOME_X = 18
    iP_HOME_Y = 19
    iP_GRIP_K = 20
    iP_GRIP_C = 21
    iP_V_STUDY = 22
    iP_V_CAP = 23
    iP_ACCEL = 24
    iP_ALPHA = 25
    iP_CASTOR_ON = 26
    iP_CASTOR_THRESHOLD = 27
    iP_CASTOR_STALL = 28

cdef enum:
    iR_T = 0
    iR_CMO_X = 1
    iR_CMO_Y = 2
    iR_CMO_YAW = 3
    iR_BASE_X = 4
    iR_BASE_Y = 5
    iR_DISP_X = 6
    iR_DISP_Y = 7
    iR_CMD_X = 8
    iR_CMD_Y = 9
    iR_FLEAD_X = 10
    iR_FLEAD_Y = 11
    iR_FARM_X = 12
    iR_FARM_Y = 13


cdef void _controller(double[::1] S, double[::1] P,
                      double* dx, double* dy, double* cmdx, double* cmdy) noexcept:
    cdef double yaw = S[iS_CMO_YAW]
    cdef double c = cos(yaw)
    cdef double s = sin(yaw)
    cdef double rx, ry, db, kp, vmax, ux, uy, n, f, m, g, ox, oy
    if P[iP_REFPOINT] == 0.0:
        rx = S[iS_CMO_X]
        ry = S[iS_CMO_Y]
    else:
        rx = S[iS_CMO_X] + c * P[iP_PLATE_X] - s * P[iP_PLATE_Y]
        ry = S[iS_CMO_Y] + s * P[iP_PLATE_X] + c * P[iP_PLATE_Y]
    ox = (rx - S[iS_BASE_X]) - P[iP_P0X]
    oy = (ry - S[iS_BASE_Y]) - P[iP_P0Y]

    db = P[iP_DEADBAND]
    kp = P[iP_KP]
    vmax = P[iP_VMAX]
    cdef double cx_, cy_
    if P[iP_SHAPE] == 0.0:
        if ox > db:
            ux = ox - db
        elif ox < -db:
            ux = ox + db
        else:
            ux = 0.0
        if oy > db:
            uy = oy - db
        elif oy < -db:
            uy = oy + db
        else:
            uy = 0.0
        cx_ = kp * ux
        cy_ = kp * uy
        if cx_ > vmax:
            cx_ = vmax
        elif cx_ < -vmax:
            cx_ = -vmax
        if cy_ > vmax:
            cy_ = vmax
        elif cy_ < -vmax:
            cy_ = -vmax
    else:
        n = sqrt(ox * ox + oy * oy)
        if n <= db:
            cx_ = 0.0
            cy_ = 0.0
        else:
            f = kp * ((n - db) / n)
            cx_ = f * ox
            cy_ = f * oy
            m = sqrt(cx_ * cx_ + cy_ * cy_)
            if m > vmax:
                g = vmax / m
                cx_ = g * cx_
                cy_ = g * cy_
    dx[0] = ox
    dy[0] = oy
    cmdx[0] = cx_
    cmdy[0] = cy_


cdef void _step_impl(double[::1] S, double[::1] P, bint use_target,
                     double tgt_x, double tgt_y, double flx, double fly,
                     double[::1] out) noexcept:
    cdef double dt = P[iP_DT]
    cdef double dx, dy, cmdx, cmdy
    _controller(S, P, &dx, &dy, &cmdx, &cmdy)

    # --- base tracking -------------------------------------------------
    cdef double tx = cmdx
    cdef double ty = cmdy
    cdef double speed = sqrt(tx * tx + ty * ty)
    cdef double k
    if speed > P[iP_V_STUDY]:
        k = P[iP_V_STUDY] / speed
        tx = k * tx
        ty = k * ty
        speed = P[iP_V_STUDY]

    cdef double bvx = S[iS_BASE_VX]
    cdef double bvy = S[iS_BASE_VY]
    cdef double stall = S[iS_STALL]
    cdef double last_dir = S[iS_LAST_DIR]
    cdef double has_dir = S[iS_HAS_DIR]
    cdef bint stalled = False
    cdef double d, delta, ax, ay, astep, amax, vnorm
    if P[iP_CASTOR_ON] != 0.0:
        if speed > _DIRECTION_EPS:
            d = atan2(ty, tx)
            if has_dir != 0.0 and stall <= 0.0:
                delta = fmod(d - last_dir, _TWO_PI)
                if delta <= -_PI:
                    delta += _TWO_PI
                elif delta > _PI:
                    delta -= _TWO_PI
                if delta < 0.0:
                    delta = -delta
                if delta > P[iP_CASTOR_THRESHOLD]:
                    stall = P[iP_CASTOR_STALL]
            last_dir = d
            has_dir = 1.0
        if stall > 0.0:
            stalled = True
            stall -= dt
            if stall < 0.0:
                stall = 0.0
            bvx = 0.0
            bvy = 0.0
    if not stalled:
        ax = (tx - bvx) * P[iP_ALPHA]
        ay = (ty - bvy) * P[iP_ALPHA]
        astep = sqrt(ax * ax + ay * ay)
        amax = P[iP_ACCEL] * dt
        if astep > amax:
            k = amax / astep
            ax = k * ax
            ay = k * ay
        bvx += ax
        bvy += ay
        vnorm = sqrt(bvx * bvx + bvy * bvy)
        if vnorm > P[iP_V_CAP]:
            k = P[iP_V_CAP] / vnorm
            bvx = k * bvx
            bvy = k * bvy
    cdef double bx = S[iS_BASE_X] + bvx * dt
    cdef double by = S[iS_BASE_Y] + bvy * dt

    # --- object forces ---------------------------------------------------
    cdef double cx = S[iS_CMO_X]
    cdef double cy = S[iS_CMO_Y]
    cdef double yaw = S[iS_CMO_YAW]
    cdef double vx = S[iS_CMO_VX]
    cdef double vy = S[iS_CMO_VY]
    cdef double w = S[iS_CMO_W]
    cdef double c = cos(yaw)
    cdef double s = sin(yaw)
    cdef double hrx = c * P[iP_HANDLE_X] - s * P[iP_HANDLE_Y]
    cdef double hry = s * P[iP_HANDLE_X] + c * P[iP_HANDLE_Y]
    cdef double prx = c * P[iP_PLATE_X] - s * P[iP_PLATE_Y]
    cdef double pry = s * P[iP_PLATE_X] + c * P[iP_PLATE_Y]
    cdef double px = cx + prx
    cdef double py = cy + pry
    cdef double hvx = vx - w * hry
    cdef double hvy = vy + w * hrx
    cdef double pvx = vx - w * pry
    cdef double pvy = vy + w * prx

    if use_target:
        # Grip force tracks the center target, reacting at the handle
        # (see the pure-Python twin for the model notes).
        flx = P[iP_GRIP_K] * (tgt_x - cx) - P[iP_GRIP_C] * hvx
        fly = P[iP_GRIP_K] * (tgt_y - cy) - P[iP_GRIP_C] * hvy

    cdef double nx = bx + P[iP_HOME_X]
    cdef double ny = by + P[iP_HOME_Y]
    cdef double fax = -P[iP_ARM_K] * (px - nx) - P[iP_ARM_C] * (pvx - bvx)
    cdef double fay = -P[iP_ARM_K] * (py - ny) - P[iP_ARM_C] * (pvy - bvy)

    cdef double fdx = -P[iP_DAMP_TRANS] * vx
    cdef double fdy = -P[iP_DAMP_TRANS] * vy
    cdef double torque = (hrx * fly - hry * flx) + (prx * fay - pry * fax) - P[iP_DAMP_ROT] * w

    # --- semi-implicit Euler ----------------------------------------------
    vx += (flx + fax + fdx) / P[iP_MASS] * dt
    vy += (fly + fay + fdy) / P[iP_MASS] * dt
    w += torque / P[iP_INERTIA] * dt
    cx += vx * dt
    cy += vy * dt
    yaw += w * dt
    yaw = fmod(yaw, _TWO_PI)
    if yaw <= -_PI:
        yaw += _TWO_PI
    elif yaw > _PI:
        yaw -= _TWO_PI
    cdef double t = S[iS_TIME] + dt

    S[iS_CMO_X] = cx
    S[iS_CMO_Y] = cy
    S[iS_CMO_YAW] = yaw
    S[iS_CMO_VX] = vx
    S[iS_CMO_VY] = vy
    S[iS_CMO_W] = w
    S[iS_BASE_X] = bx
    S[iS_BASE_Y] = by
    S[iS_BASE_VX] = bvx
    S[iS_BASE_VY] = bvy
    S[iS_LAST_DIR] = last_dir
    S[iS_HAS_DIR] = has_dir
    S[iS_STALL] = stall
    S[iS_TIME] = t

    out[iR_T] = t
    out[iR_CMO_X] = cx
    out[iR_CMO_Y] = cy
    out[iR_CMO_YAW] = yaw
    out[iR_BASE_X] = bx
    out[iR_BASE_Y] = by
    out[iR_DISP_X] = dx
    out[iR_DISP_Y] = dy
    out[iR_CMD_X] = cmdx
    out[iR_CMD_Y] = cmdy
    out[iR_FLEAD_X] = flx
    out[iR_FLEAD_Y] = fly
    out[iR_FARM_X] = fax
    out[iR_FARM_Y] = fay


def step_forced(double[::1] S, double[::1] P, double flx, double fly, double[::1] out):
    """One step with an externally supplied leader force on the handle."""
    _step_impl(S, P, False, 0.0, 0.0, flx, fly, out)


def step_target(double[::1] S, double[::1] P, double tgt_x, double tgt_y, double[::1] out):
    """One step with the grip spring pulling the handle toward a target."""
    _step_impl(S, P, True, tgt_x, tgt_y, 0.0, 0.0, out)


def record_state(S, P, tgt_x, tgt_y, out):
    """Fill a trace row for the current state without advancing it."""
    from . import _kernel_py
    _kernel_py.record_state(S, P, tgt_x, tgt_y, out)


def reference_xy(S, P):
    """Controller reference point (world frame) of the current state."""
    if P[P_REFPOINT] == 0.0:
        return S[0], S[1]
    yaw = S[2]
    c = cos(yaw)
    s = sin(yaw)
    return (
        S[0] + c * P[P_PLATE_X] - s * P[P_PLATE_Y],
        S[1] + s * P[P_PLATE_X] + c * P[P_PLATE_Y],
    )


def run_steps(double[::1] S, double[::1] P, double[:, ::1] targets,
              double[:, ::1] trace, Py_ssize_t first_row,
              double goal_x, double goal_y, double tol,
              long hold_rows, long hold_count):
    """Batched grip-coupled stepping; see the pure-Python twin for semantics."""
    cdef Py_ssize_t n = targets.shape[0]
    cdef Py_ssize_t row = first_row
    cdef Py_ssize_t i
    cdef double rx, ry, ddx, ddy, c, s, yaw
    cdef long hold = hold_count
    for i in range(n):
        _step_impl(S, P, True, targets[i, 0], targets[i, 1], 0.0, 0.0, trace[row])
        if tol >= 0.0:
            if P[iP_REFPOINT] == 0.0:
                rx = S[iS_CMO_X]
                ry = S[iS_CMO_Y]
            else:
                yaw = S[iS_CMO_YAW]
                c = cos(yaw)
                s = sin(yaw)
                rx = S[iS_CMO_X] + c * P[iP_PLATE_X] - s * P[iP_PLATE_Y]
                ry = S[iS_CMO_Y] + s * P[iP_PLATE_X] + c * P[iP_PLATE_Y]
            ddx = rx - goal_x
            ddy = ry - goal_y
            if ddx * ddx + ddy * ddy <= tol * tol:
                hold += 1
            else:
                hold = 0
            if hold >= hold_rows:
                return i + 1, hold, row
        row += 1
    return n, hold, -1
