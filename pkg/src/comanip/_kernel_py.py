"""Pure-Python stepping kernel.

Semantically identical to the compiled kernel in ``_kernel.pyx``; arithmetic
is written in the same operation order so both backends produce bit-identical
trajectories. Used as the import-time fallback when the extension is missing,
and directly by the backend benchmark.
"""

from __future__ import annotations

import math

from ._layout import (
    P_ACCEL, P_ALPHA, P_ARM_C, P_ARM_K, P_CASTOR_ON, P_CASTOR_STALL,
    P_CASTOR_THRESHOLD, P_DAMP_ROT, P_DAMP_TRANS, P_DEADBAND, P_DT, P_GRIP_C,
    P_GRIP_K, P_HANDLE_X, P_HANDLE_Y, P_HOME_X, P_HOME_Y, P_INERTIA, P_KP,
    P_MASS, P_P0X, P_P0Y, P_PLATE_X, P_PLATE_Y, P_REFPOINT, P_SHAPE, P_V_CAP,
    P_V_STUDY, P_VMAX, R_BASE_X, R_BASE_Y, R_CMD_X, R_CMD_Y, R_CMO_X, R_CMO_Y,
    R_CMO_YAW, R_DISP_X, R_DISP_Y, R_FARM_X, R_FARM_Y, R_FLEAD_X, R_FLEAD_Y,
    R_T, S_BASE_X, S_BASE_Y, S_BASE_VX, S_BASE_VY, S_CMO_VX, S_CMO_VY,
    S_CMO_W, S_CMO_X, S_CMO_Y, S_CMO_YAW, S_HAS_DIR, S_LAST_DIR, S_STALL,
    S_TIME,
)

BACKEND_NAME = "python"

_DIRECTION_EPS = 1e-4
_TWO_PI = 2.0 * math.pi


def _controller(S, P):
    """Displacement and velocity command from the current state."""
    yaw = S[S_CMO_YAW]
    c = math.cos(yaw)
    s = math.sin(yaw)
    if P[P_REFPOINT] == 0.0:
        rx = S[S_CMO_X]
        ry = S[S_CMO_Y]
    else:
        rx = S[S_CMO_X] + c * P[P_PLATE_X] - s * P[P_PLATE_Y]
        ry = S[S_CMO_Y] + s * P[P_PLATE_X] + c * P[P_PLATE_Y]
    dx = (rx - S[S_BASE_X]) - P[P_P0X]
    dy = (ry - S[S_BASE_Y]) - P[P_P0Y]

    db = P[P_DEADBAND]
    kp = P[P_KP]
    vmax = P[P_VMAX]
    if P[P_SHAPE] == 0.0:
        if dx > db:
            ux = dx - db
        elif dx < -db:
            ux = dx + db
        else:
            ux = 0.0
        if dy > db:
            uy = dy - db
        elif dy < -db:
            uy = dy + db
        else:
            uy = 0.0
        cmdx = kp * ux
        cmdy = kp * uy
        if cmdx > vmax:
            cmdx = vmax
        elif cmdx < -vmax:
            cmdx = -vmax
        if cmdy > vmax:
            cmdy = vmax
        elif cmdy < -vmax:
            cmdy = -vmax
    else:
        n = math.sqrt(dx * dx + dy * dy)
        if n <= db:
            cmdx = 0.0
            cmdy = 0.0
        else:
            f = kp * ((n - db) / n)
            cmdx = f * dx
            cmdy = f * dy
            m = math.sqrt(cmdx * cmdx + cmdy * cmdy)
            if m > vmax:
                g = vmax / m
                cmdx = g * cmdx
                cmdy = g * cmdy
    return dx, dy, cmdx, cmdy


def _step_impl(S, P, use_target, tgt_x, tgt_y, flx, fly, out):
    dt = P[P_DT]

    dx, dy, cmdx, cmdy = _controller(S, P)

    # --- base tracking -------------------------------------------------
    tx = cmdx
    ty = cmdy
    speed = math.sqrt(tx * tx + ty * ty)
    if speed > P[P_V_STUDY]:
        k = P[P_V_STUDY] / speed
        tx = k * tx
        ty = k * ty
        speed = P[P_V_STUDY]

    bvx = S[S_BASE_VX]
    bvy = S[S_BASE_VY]
    stall = S[S_STALL]
    last_dir = S[S_LAST_DIR]
    has_dir = S[S_HAS_DIR]
    stalled = False
    if P[P_CASTOR_ON] != 0.0:
        if speed > _DIRECTION_EPS:
            d = math.atan2(ty, tx)
            if has_dir != 0.0 and stall <= 0.0:
                delta = math.fmod(d - last_dir, _TWO_PI)
                if delta <= -math.pi:
                    delta += _TWO_PI
                elif delta > math.pi:
                    delta -= _TWO_PI
                if delta < 0.0:
                    delta = -delta
                if delta > P[P_CASTOR_THRESHOLD]:
                    stall = P[P_CASTOR_STALL]
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
        ax = (tx - bvx) * P[P_ALPHA]
        ay = (ty - bvy) * P[P_ALPHA]
        astep = math.sqrt(ax * ax + ay * ay)
        amax = P[P_ACCEL] * dt
        if astep > amax:
            k = amax / astep
            ax = k * ax
            ay = k * ay
        bvx += ax
        bvy += ay
        vnorm = math.sqrt(bvx * bvx + bvy * bvy)
        if vnorm > P[P_V_CAP]:
            k = P[P_V_CAP] / vnorm
            bvx = k * bvx
            bvy = k * bvy
    bx = S[S_BASE_X] + bvx * dt
    by = S[S_BASE_Y] + bvy * dt

    # --- object forces ---------------------------------------------------
    cx = S[S_CMO_X]
    cy = S[S_CMO_Y]
    yaw = S[S_CMO_YAW]
    vx = S[S_CMO_VX]
    vy = S[S_CMO_VY]
    w = S[S_CMO_W]
    c = math.cos(yaw)
    s = math.sin(yaw)
    hrx = c * P[P_HANDLE_X] - s * P[P_HANDLE_Y]
    hry = s * P[P_HANDLE_X] + c * P[P_HANDLE_Y]
    prx = c * P[P_PLATE_X] - s * P[P_PLATE_Y]
    pry = s * P[P_PLATE_X] + c * P[P_PLATE_Y]
    px = cx + prx
    py = cy + pry
    hvx = vx - w * hry
    hvy = vy + w * hrx
    pvx = vx - w * pry
    pvy = vy + w * prx

    if use_target:
        # The leader steers the object outline onto the goal: the grip force
        # tracks the center target and reacts at the handle with the hand's
        # damping. Equivalent to a handle-target spring whose target carries
        # the body's current rotation.
        flx = P[P_GRIP_K] * (tgt_x - cx) - P[P_GRIP_C] * hvx
        fly = P[P_GRIP_K] * (tgt_y - cy) - P[P_GRIP_C] * hvy

    nx = bx + P[P_HOME_X]
    ny = by + P[P_HOME_Y]
    fax = -P[P_ARM_K] * (px - nx) - P[P_ARM_C] * (pvx - bvx)
    fay = -P[P_ARM_K] * (py - ny) - P[P_ARM_C] * (pvy - bvy)

    fdx = -P[P_DAMP_TRANS] * vx
    fdy = -P[P_DAMP_TRANS] * vy
    torque = (hrx * fly - hry * flx) + (prx * fay - pry * fax) - P[P_DAMP_ROT] * w

    # --- semi-implicit Euler ----------------------------------------------
    vx += (flx + fax + fdx) / P[P_MASS] * dt
    vy += (fly + fay + fdy) / P[P_MASS] * dt
    w += torque / P[P_INERTIA] * dt
    cx += vx * dt
    cy += vy * dt
    yaw += w * dt
    yaw = math.fmod(yaw, _TWO_PI)
    if yaw <= -math.pi:
        yaw += _TWO_PI
    elif yaw > math.pi:
        yaw -= _TWO_PI
    t = S[S_TIME] + dt

    S[S_CMO_X] = cx
    S[S_CMO_Y] = cy
    S[S_CMO_YAW] = yaw
    S[S_CMO_VX] = vx
    S[S_CMO_VY] = vy
    S[S_CMO_W] = w
    S[S_BASE_X] = bx
    S[S_BASE_Y] = by
    S[S_BASE_VX] = bvx
    S[S_BASE_VY] = bvy
    S[S_LAST_DIR] = last_dir
    S[S_HAS_DIR] = has_dir
    S[S_STALL] = stall
    S[S_TIME] = t

    out[R_T] = t
    out[R_CMO_X] = cx
    out[R_CMO_Y] = cy
    out[R_CMO_YAW] = yaw
    out[R_BASE_X] = bx
    out[R_BASE_Y] = by
    out[R_DISP_X] = dx
    out[R_DISP_Y] = dy
    out[R_CMD_X] = cmdx
    out[R_CMD_Y] = cmdy
    out[R_FLEAD_X] = flx
    out[R_FLEAD_Y] = fly
    out[R_FARM_X] = fax
    out[R_FARM_Y] = fay


def step_forced(S, P, flx, fly, out):
    """One step with an externally supplied leader force on the handle."""
    _step_impl(S, P, False, 0.0, 0.0, flx, fly, out)


def step_target(S, P, tgt_x, tgt_y, out):
    """One step with the grip spring pulling the handle toward a target."""
    _step_impl(S, P, True, tgt_x, tgt_y, 0.0, 0.0, out)


def record_state(S, P, tgt_x, tgt_y, out):
    """Fill a trace row for the current state without advancing it."""
    dx, dy, cmdx, cmdy = _controller(S, P)
    cx = S[S_CMO_X]
    cy = S[S_CMO_Y]
    yaw = S[S_CMO_YAW]
    vx = S[S_CMO_VX]
    vy = S[S_CMO_VY]
    w = S[S_CMO_W]
    c = math.cos(yaw)
    s = math.sin(yaw)
    hrx = c * P[P_HANDLE_X] - s * P[P_HANDLE_Y]
    hry = s * P[P_HANDLE_X] + c * P[P_HANDLE_Y]
    prx = c * P[P_PLATE_X] - s * P[P_PLATE_Y]
    pry = s * P[P_PLATE_X] + c * P[P_PLATE_Y]
    px = cx + prx
    py = cy + pry
    hvx = vx - w * hry
    hvy = vy + w * hrx
    pvx = vx - w * pry
    pvy = vy + w * prx
    flx = P[P_GRIP_K] * (tgt_x - cx) - P[P_GRIP_C] * hvx
    fly = P[P_GRIP_K] * (tgt_y - cy) - P[P_GRIP_C] * hvy
    nx = S[S_BASE_X] + P[P_HOME_X]
    ny = S[S_BASE_Y] + P[P_HOME_Y]
    fax = -P[P_ARM_K] * (px - nx) - P[P_ARM_C] * (pvx - S[S_BASE_VX])
    fay = -P[P_ARM_K] * (py - ny) - P[P_ARM_C] * (pvy - S[S_BASE_VY])

    out[R_T] = S[S_TIME]
    out[R_CMO_X] = cx
    out[R_CMO_Y] = cy
    out[R_CMO_YAW] = yaw
    out[R_BASE_X] = S[S_BASE_X]
    out[R_BASE_Y] = S[S_BASE_Y]
    out[R_DISP_X] = dx
    out[R_DISP_Y] = dy
    out[R_CMD_X] = cmdx
    out[R_CMD_Y] = cmdy
    out[R_FLEAD_X] = flx
    out[R_FLEAD_Y] = fly
    out[R_FARM_X] = fax
    out[R_FARM_Y] = fay


def reference_xy(S, P):
    """Controller reference point (world frame) of the current state."""
    if P[P_REFPOINT] == 0.0:
        return S[S_CMO_X], S[S_CMO_Y]
    yaw = S[S_CMO_YAW]
    c = math.cos(yaw)
    s = math.sin(yaw)
    return (
        S[S_CMO_X] + c * P[P_PLATE_X] - s * P[P_PLATE_Y],
        S[S_CMO_Y] + s * P[P_PLATE_X] + c * P[P_PLATE_Y],
    )


def run_steps(S, P, targets, trace, first_row, goal_x, goal_y, tol, hold_rows, hold_count):
    """Run up to ``len(targets)`` grip-coupled steps, writing trace rows.

    Rows are written starting at ``trace[first_row]``. After each step the
    controller reference point is checked against the goal: ``hold_count``
    consecutive aligned rows (carried in from the caller, who counts the row
    preceding ``first_row``) reaching ``hold_rows`` ends the run. A negative
    ``tol`` disables the check. Returns ``(rows_written, hold_count,
    completed_row)`` with ``completed_row`` an absolute trace row or -1.
    """
    n = targets.shape[0]
    row = first_row
    for i in range(n):
        step_target(S, P, targets[i, 0], targets[i, 1], trace[row])
        if tol >= 0.0:
            rx, ry = reference_xy(S, P)
            ddx = rx - goal_x
            ddy = ry - goal_y
            if ddx * ddx + ddy * ddy <= tol * tol:
                hold_count += 1
            else:
                hold_count = 0
            if hold_count >= hold_rows:
                return i + 1, hold_count, row
        row += 1
    return n, hold_count, -1
