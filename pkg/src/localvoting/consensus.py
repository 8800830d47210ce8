"""Post-processing of Local Voting traces: Laplacians, spectra, averaged dynamics.

The trace stores, per frame, the queue at the frame start ``q``, the slots
held ``p``, the queue at the next frame start ``q_next``, the semi-inverse
load ``x_tilde = p / q_next``, the protocol weights ``A`` and their row
normalization ``B[i, j] = A[i, j] / max(1, q_next[i])``, and the
non-control slot changes ``n``.

Plug-in estimates used by :func:`spectral_report` are labeled as such: the
averaged matrix is the time average of the observed ``B``, the noise mean is
the time average of ``n`` and ``Q_av`` is the time average of
``diag(max(1, q_next))``.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse.csgraph import breadth_first_order

ZERO_TOL = 1e-9


@dataclass
class ConsensusTrace:
    q: np.ndarray          # (T, n)
    p: np.ndarray          # (T, n)
    q_next: np.ndarray     # (T, n)
    x_tilde: np.ndarray    # (T, n)
    A: np.ndarray          # (T, n, n)
    B: np.ndarray          # (T, n, n)
    n: np.ndarray          # (T, n)

    def __len__(self):
        return self.B.shape[0]

    @property
    def node_count(self):
        return self.B.shape[1]

    @classmethod
    def from_frames(cls, frames) -> "ConsensusTrace":
        if not frames:
            raise ValueError("empty trace")
        st = lambda name: np.stack([getattr(f, name) for f in frames])
        return cls(st("q"), st("p"), st("q_next"), st("x_tilde"), st("A"), st("B"), st("n"))

    @classmethod
    def from_weights(cls, B, q=None, p=None) -> "ConsensusTrace":
        """Synthetic trace from a weight sequence (unit queues unless given)."""
        B = np.asarray(B, dtype=float)
        T, n, _ = B.shape
        q = np.ones((T, n)) if q is None else np.asarray(q, dtype=float)
        p = np.ones((T, n)) if p is None else np.asarray(p, dtype=float)
        return cls(q, p, q.copy(), p / np.maximum(1, q), B.copy(), B, np.zeros((T, n)))


def laplacian(A) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("need a square matrix")
    if (A < 0).any():
        raise ValueError("weights must be non-negative")
    return np.diag(A.sum(axis=1)) - A


def has_spanning_tree(A) -> bool:
    """Whether some node reaches every other along edges j -> i with A[i, j] > 0."""
    A = np.asarray(A)
    n = A.shape[0]
    if n <= 1:
        return True
    out_edges = (A.T > 0).astype(np.int8)
    for root in range(n):
        order = breadth_first_order(out_edges, root, directed=True, return_predecessors=False)
        if len(order) == n:
            return True
    return False


def sorted_eigenvalues(M) -> np.ndarray:
    ev = np.linalg.eigvals(np.asarray(M, dtype=float))
    return ev[np.lexsort((ev.imag, ev.real, np.abs(ev)))]


@dataclass
class SpectralReport:
    B_av: np.ndarray
    d_max: float
    gamma: float
    gamma_bound: float
    gamma_ok: bool
    eigenvalues: np.ndarray
    lambda2: float
    rho_unit: float
    rho_scaled: float
    divergent: bool
    spanning_tree: bool
    zero_multiplicity: int
    epsilon_estimate: float | None = None

    def to_text(self) -> str:
        ev = ", ".join(_fmt_complex(v) for v in self.eigenvalues)
        lines = [
            f"nodes: {self.B_av.shape[0]}",
            f"d_max: {self.d_max!r}",
            f"gamma: {self.gamma!r}",
            f"gamma_bound: {self.gamma_bound!r}",
            f"gamma_ok: {str(self.gamma_ok).lower()}",
            f"lambda2: {self.lambda2!r}",
            f"rho_unit: {self.rho_unit!r}",
            f"rho_scaled: {self.rho_scaled!r}",
            f"divergent: {str(self.divergent).lower()}",
            f"spanning_tree: {str(self.spanning_tree).lower()}",
            f"zero_multiplicity: {self.zero_multiplicity}",
            f"epsilon_estimate: {'' if self.epsilon_estimate is None else repr(self.epsilon_estimate)}",
            f"eigenvalues: {ev}",
            "note: B_av, e_bar and Q_av are empirical plug-in estimates",
        ]
        return "\n".join(lines) + "\n"


def _fmt_complex(v):
    v = complex(v)
    if abs(v.imag) < ZERO_TOL:
        return repr(float(v.real))
    return f"{v.real!r}{v.imag:+}j"


def spectral_summary(B_av, gamma) -> SpectralReport:
    B_av = np.asarray(B_av, dtype=float)
    L = laplacian(B_av)
    if np.abs(L @ np.ones(len(L))).max(initial=0.0) > ZERO_TOL:
        raise AssertionError("Laplacian rows do not sum to zero")
    d_max = float(B_av.sum(axis=1).max()) if B_av.size else 0.0
    bound = 1.0 / d_max if d_max > 0 else math.inf
    ev = sorted_eigenvalues(L)
    lam2 = float(abs(ev[1])) if len(ev) > 1 else 0.0
    zero_mult = int((np.abs(ev) < ZERO_TOL).sum())
    nonzero = ev[np.abs(ev) >= ZERO_TOL]
    divergent = bool((np.abs(1 - gamma * nonzero) > 1 + 1e-12).any())
    return SpectralReport(
        B_av=B_av, d_max=d_max, gamma=float(gamma), gamma_bound=bound,
        gamma_ok=bool(0 < gamma < bound), eigenvalues=ev, lambda2=lam2,
        rho_unit=(1 - lam2) ** 2, rho_scaled=(1 - gamma * lam2) ** 2,
        divergent=divergent, spanning_tree=has_spanning_tree(B_av),
        zero_multiplicity=zero_mult,
    )


def spectral_report(trace: ConsensusTrace, gamma: float) -> SpectralReport:
    if len(trace) < 2:
        raise ValueError("trace needs at least two frames")
    rep = spectral_summary(trace.B.mean(axis=0), gamma)
    if rep.spanning_tree and rep.zero_multiplicity != 1:
        raise AssertionError("spanning tree present but zero eigenvalue is repeated")
    avg = averaged_trajectory(rep.B_av, plugin_q_av(trace), plugin_e_bar(trace),
                              trace.x_tilde[0], gamma, len(trace) - 1)
    msd = mean_square_deviation(trace, avg)
    rep.epsilon_estimate = float(msd[len(msd) // 2:].mean())
    return rep


def plugin_e_bar(trace: ConsensusTrace) -> np.ndarray:
    return trace.n.mean(axis=0).astype(float)


def plugin_q_av(trace: ConsensusTrace) -> np.ndarray:
    return np.diag(np.maximum(1, trace.q_next).mean(axis=0).astype(float))


def averaged_trajectory(B_av, Q_av, e_bar, x0, gamma, T) -> np.ndarray:
    """Iterate x_{t+1} = x_t - gamma L(B_av) x_t + Q_av^{-1} e_bar; returns (T+1, n)."""
    L = laplacian(B_av)
    n = L.shape[0]
    Q_av = np.asarray(Q_av, dtype=float)
    drift = np.linalg.solve(Q_av, np.asarray(e_bar, dtype=float)) if n else np.zeros(0)
    step = np.eye(n) - gamma * L
    out = np.empty((T + 1, n))
    out[0] = np.zeros(n) if x0 is None else np.asarray(x0, dtype=float)
    for t in range(T):
        out[t + 1] = step @ out[t] + drift
    return out


def disagreement(x) -> np.ndarray:
    """Per-step norm of the deviation from the node average."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    return np.linalg.norm(x - x.mean(axis=1, keepdims=True), axis=1)


def mean_square_deviation(trace, averaged) -> np.ndarray:
    """``||x_tilde_t - x_bar_t||^2`` per frame; ``trace`` may be a trace or an array."""
    xt = trace.x_tilde if isinstance(trace, ConsensusTrace) else np.asarray(trace, dtype=float)
    avg = np.asarray(averaged, dtype=float)
    if xt.shape != avg.shape:
        raise ValueError(f"length mismatch: {xt.shape} vs {avg.shape}")
    return ((xt - avg) ** 2).sum(axis=1)


def spread(q, p) -> float:
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    m = (q > 0) & (p > 0)
    if m.sum() < 2:
        return 0.0
    x = q[m] / p[m]
    return float(x.max() - x.min())


def load_spread(trace) -> np.ndarray:
    """Per frame, max minus min of q/p over nodes with a queue and a slot."""
    if isinstance(trace, ConsensusTrace):
        q, p = trace.q, trace.p
    else:
        q, p = trace
    if len(q) == 0:
        raise ValueError("empty trace")
    return np.array([spread(a, b) for a, b in zip(q, p)])


def timeseries_csv(trace: ConsensusTrace, gamma: float) -> str:
    rep = spectral_summary(trace.B.mean(axis=0), gamma)
    avg = averaged_trajectory(rep.B_av, plugin_q_av(trace), plugin_e_bar(trace),
                              trace.x_tilde[0], gamma, len(trace) - 1)
    msd = mean_square_deviation(trace, avg)
    sp = load_spread(trace)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["frame", "msd", "spread"])
    for t in range(len(trace)):
        w.writerow([t, repr(float(msd[t])), repr(float(sp[t]))])
    return buf.getvalue()
