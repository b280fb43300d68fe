"""
Analyzer Configuration
Reads defaults from the environment (and an optional .env file)
"""
import os
from dotenv import load_dotenv

load_dotenv()

# Cache model (direct-mapped, 4KB / 32 instructions per set)
CACHE_SETS = int(os.environ.get("WCET_CACHE_SETS", "128"))
HIT_COST = int(os.environ.get("WCET_HIT_COST", "0"))
MISS_PENALTY = int(os.environ.get("WCET_MISS_PENALTY", "128"))

# Solver limits
SPLIT_CAP = int(os.environ.get("WCET_SPLIT_CAP", "16"))
MAX_CONSTRAINTS = int(os.environ.get("WCET_MAX_CONSTRAINTS", "512"))
MAX_VARIABLES = int(os.environ.get("WCET_MAX_VARIABLES", "64"))
MILP_TIME_LIMIT = float(os.environ.get("WCET_MILP_TIME_LIMIT", "2.0"))
MEMO_CAP = int(os.environ.get("WCET_SOLVER_MEMO_CAP", "65536"))
PROJECTION_CAP = int(os.environ.get("WCET_PROJECTION_CAP", "256"))

# Oracle
ORACLE_PATH_CAP = int(os.environ.get("WCET_ORACLE_PATH_CAP", str(2 ** 20)))

# Logging
LOG_LEVEL = os.environ.get("WCET_LOG_LEVEL", "WARNING")
LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
