# tuning_knobs.py
"""
TUNING KNOBS (EDIT THIS FILE)

Search guards and output defaults for every analysis. Each knob can also be
overridden through a CONLAT_* environment variable, and the CLI reassigns them
from its flags for the duration of one command.
"""
import os


def _env_int(name: str, default: int) -> int:
    raw = (os.environ.get(name) or "").strip()
    if not raw:
        return default
    try:
        return int(raw)
    except ValueError:
        return default


# ============================================================
# 1) UNIVERSE GUARDS (number of elements)
# ============================================================
# Subalgebra search enumerates closed subsets; keep it at desk scale.
MAX_SUBALGEBRA_UNIVERSE = _env_int("CONLAT_MAX_SUBALGEBRA_UNIVERSE", 16)

# Direct products (and the multi-generator reduction in the SI census)
MAX_PRODUCT_SIZE = _env_int("CONLAT_MAX_PRODUCT_SIZE", 1024)

# Limits of ordered diagrams (the --guard-size flag)
MAX_LIMIT_SIZE = _env_int("CONLAT_MAX_LIMIT_SIZE", 64)

# ============================================================
# 2) CONGRUENCE GUARDS
# ============================================================
MAX_CONGRUENCES = _env_int("CONLAT_MAX_CONGRUENCES", 100_000)

# ============================================================
# 3) SEARCH GUARDS
# ============================================================
# |B| ** (number of generators of A) for homomorphism / isomorphism search
MAX_HOM_CANDIDATES = _env_int("CONLAT_MAX_HOM_CANDIDATES", 1_000_000)

# Order filters enumerated when materializing a lattice from its poset
MAX_LATTICE_SIZE = _env_int("CONLAT_MAX_LATTICE_SIZE", 4096)

# |X| = |E| * C(2k+1, 2) for constructed compatible families
MAX_FAMILY_DOMAIN = _env_int("CONLAT_MAX_FAMILY_DOMAIN", 200_000)

# ============================================================
# 4) OUTPUT
# ============================================================
OUTPUT_FORMATS = ("text", "json")
DEFAULT_OUTPUT_FORMAT = "text"
JSON_INDENT = 2
