"""Deterministic seed derivation.

One global seed fans out to named sub-streams (terrain, swae, ppo, eval,
per-trial, per-update, ...) so every component is independently reproducible.
The split is a SHA-256 hash of the root seed and a label path, which is
stable across platforms, processes, and Python versions.
"""

import hashlib


def derive_seed(root: int, *labels) -> int:
    """Derive a child seed from ``root`` and a label path.

    The same (root, labels) pair always yields the same non-negative 63-bit
    integer; distinct label paths yield statistically independent streams.
    Labels may be strings or integers.
    """
    text = str(int(root)) + "/" + "/".join(str(label) for label in labels)
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little") >> 1
