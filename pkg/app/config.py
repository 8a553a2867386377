# app/config.py
import os
from dotenv import load_dotenv

load_dotenv()

MULTISTARTS = int(os.getenv("CSR_MULTISTARTS", "16"))

# Exact enumeration of (x^n, y^k sequences)
ENUMERATION_BUDGET = int(os.getenv("CSR_ENUMERATION_BUDGET", str(2 ** 24)))

# Number of deterministic decoder tables enumerated per user
DECODER_BUDGET = int(os.getenv("CSR_DECODER_BUDGET", "4096"))

# Lattice points evaluated by the grid oracles
GRID_BUDGET = int(os.getenv("CSR_GRID_BUDGET", "100000"))

# Decision-tree states explored by the causal DP decoder
DP_BUDGET = int(os.getenv("CSR_DP_BUDGET", str(2 ** 22)))

# |T| at or below which the grid oracles run
ORACLE_MAX_CELLS = int(os.getenv("CSR_ORACLE_MAX_CELLS", "4096"))

N_JOBS = int(os.getenv("CSR_N_JOBS", "1"))

LOG_LEVEL = os.getenv("CSR_LOG_LEVEL", "WARNING")

SCHEMA_VERSION = "1.0"
