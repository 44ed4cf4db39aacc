"""Cyclic Jacobi eigensolver for dense symmetric matrices.

Rotations are applied in round-robin (tournament) order: every round is a
set of n/2 disjoint index pairs, so the whole round is one vectorised
row/column update. Each sweep visits every off-diagonal pair exactly once.
"""

from __future__ import annotations

import numpy as np


class ConvergenceError(ArithmeticError):
    def __init__(self, sweeps: int, off_norm: float):
        super().__init__(
            f"Jacobi did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:.3e})"
        )
        self.sweeps = sweeps
        self.off_norm = off_norm


def _tournament_rounds(n: int) -> list[tuple[np.ndarray, np.ndarray]]:
    m = n + (n % 2)
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        p, q = [], []
        for a, b in zip(players[: m // 2], reversed(players[m // 2 :])):
            if a < n and b < n:
                p.append(min(a, b))
                q.append(max(a, b))
        rounds.append((np.array(p, dtype=np.intp), np.array(q, dtype=np.intp)))
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


def _off_norm(a: np.ndarray) -> float:
    off = a - np.diag(np.diag(a))
    return float(np.linalg.norm(off))


def jacobi_eigh(matrix, tol: float = 1e-12, max_sweeps: int = 100):
    """Eigenvalues and eigenvectors of a real symmetric matrix.

    Returns ``(w, v, sweeps)`` with ``matrix @ v[:, i] == w[i] * v[:, i]``.
    Eigenpairs are unsorted. Convergence is declared when the Frobenius norm
    of the off-diagonal part drops below ``tol * max(1, ||matrix||_F)``.
    """
    a = np.array(matrix, dtype=np.float64, copy=True)
    n = a.shape[0]
    v = np.eye(n)
    if n < 2:
        return np.diag(a).copy(), v, 0
    threshold = tol * max(1.0, float(np.linalg.norm(a)))
    rounds = _tournament_rounds(n)

    sweeps = 0
    off = _off_norm(a)
    while off > threshold:
        if sweeps >= max_sweeps:
            raise ConvergenceError(sweeps, off)
        for p, q in rounds:
            apq = a[p, q]
            active = np.abs(apq) > 1e-300
            if not active.any():
                continue
            p, q, apq = p[active], q[active], apq[active]
            theta = (a[q, q] - a[p, p]) / (2.0 * apq)
            t = np.sign(theta) / (np.abs(theta) + np.sqrt(theta * theta + 1.0))
            t[theta == 0.0] = 1.0
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c

            rp, rq = a[p, :], a[q, :]
            a[p, :] = c[:, None] * rp - s[:, None] * rq
            a[q, :] = s[:, None] * rp + c[:, None] * rq
            cp, cq = a[:, p], a[:, q]
            a[:, p] = cp * c - cq * s
            a[:, q] = cp * s + cq * c
            a[p, q] = 0.0
            a[q, p] = 0.0

            vp, vq = v[:, p], v[:, q]
            v[:, p] = vp * c - vq * s
            v[:, q] = vp * s + vq * c
        sweeps += 1
        off = _off_norm(a)
    return np.diag(a).copy(), v, sweeps
