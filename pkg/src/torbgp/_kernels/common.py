import numpy as np

CUSTOMER, PEER, PROVIDER = 0, 1, 2
# rank key = class << CLASS_SHIFT | hops; smaller is more preferred
CLASS_SHIFT = 31
INF_KEY = np.iinfo(np.int64).max
MODE_HIJACK = 0
MODE_INTERCEPT = 1


def rank_keys(cls: np.ndarray, hops: np.ndarray) -> np.ndarray:
    keys = (cls.astype(np.int64) << CLASS_SHIFT) | hops.astype(np.int64)
    keys[cls < 0] = INF_KEY
    return keys
