"""Index layout of the packed state/parameter vectors used by the step kernels.

Both the compiled and the pure-Python kernel operate on the same flat float64
arrays; the indices here are the single source of truth. Trace rows follow the
export column order exactly.
"""

# --- state vector -----------------------------------------------------------
S_CMO_X = 0
S_CMO_Y = 1
S_CMO_YAW = 2
S_CMO_VX = 3
S_CMO_VY = 4
S_CMO_W = 5
S_BASE_X = 6
S_BASE_Y = 7
S_BASE_VX = 8
S_BASE_VY = 9
S_LAST_DIR = 10
S_HAS_DIR = 11
S_STALL = 12
S_TIME = 13
STATE_SIZE = 14

# --- parameter vector -------------------------------------------------------
P_DT = 0
P_KP = 1
P_DEADBAND = 2
P_VMAX = 3
P_SHAPE = 4        # 0 rectangular, 1 circular
P_REFPOINT = 5     # 0 object center, 1 end effector (plate)
P_P0X = 6
P_P0Y = 7
P_MASS = 8
P_INERTIA = 9
P_HANDLE_X = 10
P_HANDLE_Y = 11
P_PLATE_X = 12
P_PLATE_Y = 13
P_DAMP_TRANS = 14
P_DAMP_ROT = 15
P_ARM_K = 16
P_ARM_C = 17
P_HOME_X = 18
P_HOME_Y = 19
P_GRIP_K = 20
P_GRIP_C = 21
P_V_STUDY = 22
P_V_CAP = 23
P_ACCEL = 24
P_ALPHA = 25       # precomputed 1 - exp(-dt / tracking_time_constant)
P_CASTOR_ON = 26
P_CASTOR_THRESHOLD = 27
P_CASTOR_STALL = 28
PARAM_SIZE = 29

# --- trace row (matches the CSV export header) ------------------------------
R_T = 0
R_CMO_X = 1
R_CMO_Y = 2
R_CMO_YAW = 3
R_BASE_X = 4
R_BASE_Y = 5
R_DISP_X = 6
R_DISP_Y = 7
R_CMD_X = 8
R_CMD_Y = 9
R_FLEAD_X = 10
R_FLEAD_Y = 11
R_FARM_X = 12
R_FARM_Y = 13
RECORD_SIZE = 14

TRACE_HEADER = (
    "t,cmo_x,cmo_y,cmo_yaw,base_x,base_y,disp_x,disp_y,"
    "cmd_x,cmd_y,flead_x,flead_y,farm_x,farm_y"
)
