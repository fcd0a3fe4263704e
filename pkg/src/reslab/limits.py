"""Memory and term caps, configurable through the environment.

``RESLAB_CAP_MB`` bounds the size of any single large array the package
allocates (default 2048 MB).  Term caps guard combinatorial tables.
"""

import os

from .errors import ResourceError

DEFAULT_CAP_MB = 2048
SUPPORT_CAP = 5_000_000
EXPANSION_TERM_CAP = 10_000_000


def cap_bytes() -> int:
    """Return the active per-array memory cap in bytes."""
    raw = os.environ.get("RESLAB_CAP_MB")
    mb = DEFAULT_CAP_MB if raw is None else float(raw)
    return int(mb * 1024 * 1024)


def check_alloc(nbytes: float, what: str) -> None:
    """Raise ResourceError if an allocation of ``nbytes`` exceeds the cap."""
    cap = cap_bytes()
    if nbytes > cap:
        raise ResourceError(
            f"{what} needs about {nbytes / 2**20:.1f} MB, cap is {cap / 2**20:.1f} MB "
            "(raise RESLAB_CAP_MB to allow it)"
        )


def debug_enabled() -> bool:
    """Whether per-access invariant assertions are switched on."""
    return os.environ.get("RESLAB_DEBUG", "") not in ("", "0")
