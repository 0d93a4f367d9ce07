"""Pure Python systematic-scan Gibbs sweep kernel (fallback for lrfs._sgs)."""

import numpy as np


def run_sweeps(eta, init, uniforms):
    """Run systematic sweeps over an association score matrix.

    eta is (P, M+2) with columns j = -1, 0, 1..M; init is a length-P state
    of j values; uniforms is (T, P). Returns an int64 (T, P) array holding
    the state after each full sweep. Positive 1-1 validity is maintained by
    zeroing detection columns owned by other rows.
    """
    eta = np.asarray(eta, dtype=float)
    uniforms = np.asarray(uniforms, dtype=float)
    P, W = eta.shape
    M = W - 2
    T = uniforms.shape[0]
    rows = [[float(v) for v in eta[i]] for i in range(P)]
    state = [int(v) for v in init]
    owner = [-1] * (M + 1)
    for i, j in enumerate(state):
        if j > 0:
            if owner[j] != -1:
                raise ValueError("init is not positive 1-1")
            owner[j] = i
    out = np.empty((T, P), dtype=np.int64)
    for t in range(T):
        u_row = uniforms[t]
        for i in range(P):
            row = rows[i]
            total = row[0] + row[1]
            cum = [row[0], total]
            for c in range(2, W):
                o = owner[c - 1]
                v = row[c] if (o == -1 or o == i) else 0.0
                total += v
                cum.append(total)
            if total <= 0.0:
                raise ValueError(f"all-zero conditional for row {i}")
            u = u_row[i] * total
            c = 0
            while cum[c] <= u and c < W - 1:
                c += 1
            new_j = c - 1
            old_j = state[i]
            if old_j > 0:
                owner[old_j] = -1
            if new_j > 0:
                owner[new_j] = i
            state[i] = new_j
        out[t] = state
    return out
