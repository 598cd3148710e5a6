import numpy as np


def taylor_expm(A: np.ndarray, t: float, terms: int = 50) -> np.ndarray:
    """Independent matrix-exponential oracle: scaled 50-term Taylor series."""
    M = np.asarray(A, dtype=float) * t
    norm = np.linalg.norm(M)
    squarings = max(0, int(np.ceil(np.log2(norm)))) if norm > 0.5 else 0
    M = M / 2**squarings
    d = M.shape[0]
    out = np.eye(d)
    term = np.eye(d)
    for k in range(1, terms + 1):
        term = term @ M / k
        out = out + term
    for _ in range(squarings):
        out = out @ out
    return out
