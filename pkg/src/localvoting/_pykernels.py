"""Reference kernels (numpy). The compiled module mirrors these signatures.

Shapes: ``X`` is the (nodes x slots) uint8 ownership matrix, ``conflict`` the
(nodes x nodes) uint8 two-hop conflict matrix with a zero diagonal, and
``members`` an int64 index array (usually N_i^(2) plus i).
"""
import numpy as np


def block_counts(X, members):
    return X[members].sum(axis=0, dtype=np.int32)


def free_slots(X, members, limit):
    if limit <= 0:
        return []
    free = np.flatnonzero(X[members].sum(axis=0) == 0)
    return free[:limit].tolist()


def transferable_slots(X, members, donor, limit):
    if limit <= 0:
        return []
    counts = X[members].sum(axis=0)
    ok = np.flatnonzero((X[donor] == 1) & (counts == 1))
    return ok[:limit].tolist()


def exchange_donors(X, members, candidates):
    if len(candidates) == 0:
        return []
    counts = X[members].sum(axis=0)
    sole = counts == 1
    hit = (X[candidates] == 1) & sole[None, :]
    return [int(j) for j, h in zip(candidates, hit.any(axis=1)) if h]


def greedy_admit(order, conflict):
    admitted = []
    taken = np.zeros(conflict.shape[0], dtype=bool)
    for v in order:
        if not taken[v]:
            admitted.append(int(v))
            taken |= conflict[v].astype(bool)
            taken[v] = True
    return admitted


def lqf_order(q):
    q = np.asarray(q)
    busy = np.flatnonzero(q > 0)
    # stable sort on -q keeps ascending id among ties
    return busy[np.argsort(-q[busy], kind="stable")].tolist()


def lyui_winners(eff, conflict):
    eff = np.asarray(eff, dtype=np.int64)
    rivals = (conflict * eff[None, :]).max(axis=1) if len(eff) else eff
    return np.flatnonzero((eff > 0) & (eff > rivals)).tolist()
