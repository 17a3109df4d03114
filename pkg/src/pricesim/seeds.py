"""Stable seed derivation so each stage and strategy gets its own stream."""

import hashlib


def derive_seed(master: int, *parts: str) -> int:
    """64-bit seed from ``master`` and a path of names such as ``("encrypt", "largest_first")``.

    Uses a keyed hash rather than ``hash()`` so values survive interpreter
    restarts and ``PYTHONHASHSEED``.
    """
    h = hashlib.blake2b(digest_size=8)
    h.update(str(int(master)).encode())
    for part in parts:
        h.update(b"\x1f")
        h.update(str(part).encode())
    return int.from_bytes(h.digest(), "little")
