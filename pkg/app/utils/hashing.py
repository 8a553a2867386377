# app/utils/hashing.py
import hashlib

import numpy as np


def array_digest(*arrays: np.ndarray) -> str:
    """sha256 over shapes, dtypes and raw bytes of the given arrays."""
    digest = hashlib.sha256()
    for array in arrays:
        array = np.ascontiguousarray(array)
        digest.update(str(array.shape).encode())
        digest.update(array.dtype.str.encode())
        digest.update(array.tobytes())
    return digest.hexdigest()
