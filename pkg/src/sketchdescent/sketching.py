"""Sketch families and the per-index loss/direction/step evaluations.

A sketch family turns the system A x = b into q scalar subproblems. Picking
index i restricts the residual to the span of a sketch matrix S_i and
measures it through the weight H_i = S_i (S_i' A B^{-1} A' S_i)^+ S_i',
giving the index loss

    f_i(x) = 1/2 (A x - b)' H_i (A x - b).

Minimizing f_i exactly along its G-gradient reproduces the classical
sketch-and-project update; the families below cover single rows (Kaczmarz),
least-squares columns (coordinate descent on the normal equations),
contiguous row blocks, eigenvector sketches of an SPD matrix, and the full
sketch S_1 = A that yields plain steepest descent.

Every family precomputes its scalar denominators at construction so that one
iteration touches O(n) data for the vector families. A slow reference path
(:meth:`SketchFamily.generic_evaluate`) materializes S_i and H_i explicitly
and exists so tests can pin the fast paths against it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidConfigError, InvalidInputError
from .linalg import SpdFactor, pinv_psd, sym_eig
from .problems import LinearSystem

VECTOR_KINDS = ("row", "lsqcol", "spectral")
KINDS = ("row", "lsqcol", "block", "spectral", "full")


def require_spd(A: np.ndarray, what: str) -> None:
    """Cheap structural check: square and symmetric. Definiteness is
    enforced later by whichever factorization touches the matrix."""
    m, n = A.shape
    if m != n:
        raise InvalidInputError(f"{what} needs a square matrix, got {m}x{n}")
    if np.abs(A - A.T).max() > 1e-12 * max(1.0, np.abs(A).max()):
        raise InvalidInputError(f"{what} needs a symmetric matrix")


@dataclass
class SketchEval:
    """One index evaluated at one point.

    step is None when the index loss is exactly zero there; the exact line
    search is 0/0 in that case and the update must be skipped.
    """

    index: int
    loss: float
    direction: np.ndarray
    step: float | None


class SketchFamily:
    """All q sketches of one kind for a fixed system.

    Parameters
    ----------
    kind : str
        One of "row", "lsqcol", "block", "spectral", "full".
    system : LinearSystem
        The system whose geometry (B, G) the sketches use.
    block_size : int, optional
        Row-block size for kind "block". Blocks are contiguous, cover every
        row, and only the last one may be short.

    Notes
    -----
    The exactness requirement sum_i H_i > 0 on range(A) holds structurally
    for every kind here: rows, columns and eigenvectors give diagonal or
    null(A')-supported sums, contiguous blocks partition the rows, and the
    full sketch is a single positive definite weight.
    """

    def __init__(self, kind: str, system: LinearSystem,
                 block_size: int | None = None):
        if kind not in KINDS:
            raise InvalidConfigError(f"unknown sketch kind {kind!r}")
        self.kind = kind
        self.system = system
        self.g_equals_b = system.g_equals_b
        A = system.A
        m, n = A.shape
        Bf = system.B_factor
        self._Gf = system.G_factor

        if kind == "row":
            self.q = m
            # w_i = A' e_i is row i of A; d_i = a_i' B^{-1} a_i.
            self._w = A.T
            if Bf.is_identity:
                self._d = np.einsum("ij,ij->i", A, A)
            else:
                self._d = np.einsum("ij,ij->i", A, Bf.solve(A.T).T)
        elif kind == "lsqcol":
            self.q = n
            AtA = A.T @ A
            self._AtA = AtA
            self._w = AtA  # column i is A' A e_i
            if Bf.is_identity:
                self._d = np.einsum("ij,ij->i", AtA, AtA)
            else:
                self._d = np.einsum("ji,ji->i", AtA, Bf.solve(AtA))
        elif kind == "spectral":
            require_spd(A, "spectral sketches")
            self.q = n
            lam, U = sym_eig(A)
            if lam[0] <= 0.0:
                raise InvalidInputError("spectral sketches need A SPD")
            self.eigvals = lam
            self.eigvecs = U
            self._Utb = U.T @ system.b
            self._w = U * lam  # w_i = lambda_i u_i
            if Bf.is_identity:
                self._d = lam * lam
            else:
                Binv_U = Bf.solve(U)
                self._d = lam * lam * np.einsum("ij,ij->j", U, Binv_U)
        elif kind == "block":
            if block_size is None or block_size < 1:
                raise InvalidConfigError("block sketches need block_size >= 1")
            if block_size > m:
                raise InvalidConfigError(
                    f"block_size {block_size} exceeds row count {m}"
                )
            self.block_size = int(block_size)
            self.blocks = [np.arange(s, min(s + block_size, m))
                           for s in range(0, m, block_size)]
            self.q = len(self.blocks)
            self._pinvs = []
            for C in self.blocks:
                Ac = A[C]
                K = Ac @ (Ac.T if Bf.is_identity else Bf.solve(Ac.T))
                self._pinvs.append(pinv_psd(0.5 * (K + K.T)))
        else:  # full
            require_spd(A, "the full sketch")
            self.q = 1
            self._Af = SpdFactor(A)

        if kind in VECTOR_KINDS:
            if np.any(self._d <= 0.0):
                raise InvalidInputError(
                    f"{kind} sketch has a zero denominator; "
                    "the system has a degenerate row or column"
                )
            if self.g_equals_b:
                self._e = None
            else:
                Ginv_w = self._Gf.solve(self._w)
                self._e = np.einsum("ij,ij->j", self._w, Ginv_w)

    # -- fast paths --------------------------------------------------------

    def _linear_values(self, x: np.ndarray, indices: np.ndarray) -> np.ndarray:
        """s_i' (A x - b) for the vector kinds, batched over indices."""
        A, b = self.system.A, self.system.b
        if self.kind == "row":
            return A[indices] @ x - b[indices]
        if self.kind == "lsqcol":
            res = A @ x - b
            return A[:, indices].T @ res
        # spectral
        U = self.eigvecs[:, indices]
        return self.eigvals[indices] * (U.T @ x) - self._Utb[indices]

    def losses(self, x: np.ndarray, indices=None) -> np.ndarray:
        """Index losses f_i(x) for the given indices (all q by default)."""
        if indices is None:
            indices = np.arange(self.q)
        else:
            indices = np.asarray(indices, dtype=np.intp)
            if indices.size and (indices.min() < 0 or indices.max() >= self.q):
                raise InvalidInputError(
                    f"index out of range for q={self.q}"
                )
        if self.kind in VECTOR_KINDS:
            c = self._linear_values(x, indices)
            return 0.5 * c * c / self._d[indices]
        A, b = self.system.A, self.system.b
        out = np.empty(indices.size)
        if self.kind == "block":
            for j, i in enumerate(indices):
                C = self.blocks[i]
                res_c = A[C] @ x - b[C]
                out[j] = 0.5 * float(res_c @ (self._pinvs[i] @ res_c))
            return out
        # full
        res = A @ x - b
        u = self._Af.solve(res)
        val = 0.5 * self.system.B_factor.quad(u)
        out[:] = val
        return out

    def evaluate(self, i: int, x: np.ndarray) -> SketchEval:
        """Loss, G-gradient direction and exact step for index i at x.

        The step is the exact one-dimensional minimizer along the direction;
        when G = B it is identically 1 and is returned as 1.0 without
        touching the matrices.
        """
        if not 0 <= i < self.q:
            raise InvalidInputError(f"index {i} out of range for q={self.q}")
        sys = self.system
        if self.kind in VECTOR_KINDS:
            c = float(self._linear_values(x, np.array([i]))[0])
            d = self._d[i]
            loss = 0.5 * c * c / d
            if c == 0.0:
                return SketchEval(i, 0.0, np.zeros(sys.n), None)
            direction = (c / d) * self._Gf.solve(self._w[:, i])
            step = 1.0 if self.g_equals_b else d / self._e[i]
            return SketchEval(i, loss, direction, step)
        if self.kind == "block":
            C = self.blocks[i]
            A = sys.A
            res_c = A[C] @ x - sys.b[C]
            y = self._pinvs[i] @ res_c
            loss = 0.5 * float(res_c @ y)
            w = A[C].T @ y
            if loss == 0.0:
                return SketchEval(i, 0.0, np.zeros(sys.n), None)
            direction = self._Gf.solve(w)
            if self.g_equals_b:
                step = 1.0
            else:
                num = float(w @ direction)
                v = A[C] @ direction
                step = num / float(v @ (self._pinvs[i] @ v))
            return SketchEval(i, loss, direction, step)
        # full
        res = sys.A @ x - sys.b
        u = self._Af.solve(res)
        Bu = sys.B_factor.apply(u)
        loss = 0.5 * float(u @ Bu)
        if loss == 0.0:
            return SketchEval(i, 0.0, np.zeros(sys.n), None)
        direction = self._Gf.solve(Bu)
        if self.g_equals_b:
            step = 1.0
        else:
            num = float(Bu @ direction)
            den = float(direction @ sys.B_factor.apply(direction))
            step = num / den
        return SketchEval(i, loss, direction, step)

    # -- reference path ----------------------------------------------------

    def sketch_matrix(self, i: int) -> np.ndarray:
        """S_i as a dense m x k matrix. Reference/testing use."""
        if not 0 <= i < self.q:
            raise InvalidInputError(f"index {i} out of range for q={self.q}")
        A = self.system.A
        m = self.system.m
        if self.kind == "row":
            S = np.zeros((m, 1))
            S[i, 0] = 1.0
            return S
        if self.kind == "lsqcol":
            return A[:, i:i + 1].copy()
        if self.kind == "spectral":
            return self.eigvecs[:, i:i + 1].copy()
        if self.kind == "block":
            C = self.blocks[i]
            S = np.zeros((m, C.size))
            S[C, np.arange(C.size)] = 1.0
            return S
        return A.copy()

    def residual_weight(self, i: int) -> np.ndarray:
        """H_i as a dense m x m matrix, built from first principles."""
        sys = self.system
        S = self.sketch_matrix(i)
        AtS = sys.A.T @ S
        K = AtS.T @ sys.B_factor.solve(AtS)
        return S @ pinv_psd(0.5 * (K + K.T)) @ S.T

    def generic_evaluate(self, i: int, x: np.ndarray) -> SketchEval:
        """Same contract as :meth:`evaluate` via dense H_i. Slow; tests only."""
        sys = self.system
        H = self.residual_weight(i)
        res = sys.A @ x - sys.b
        loss = 0.5 * float(res @ (H @ res))
        grad = sys.A.T @ (H @ res)
        direction = sys.G_factor.solve(grad)
        if loss == 0.0:
            return SketchEval(i, loss, direction, None)
        num = float(direction @ sys.G_factor.apply(direction))
        v = H @ (sys.A @ direction)
        den = float(direction @ (sys.A.T @ v))
        return SketchEval(i, loss, direction, num / den)

    # -- theory hooks ------------------------------------------------------

    @property
    def w_matrix(self) -> np.ndarray:
        """n x q matrix whose column i is A' S_i, for the vector kinds."""
        if self.kind not in VECTOR_KINDS:
            raise InvalidInputError(f"w_matrix undefined for kind {self.kind!r}")
        return self._w

    @property
    def denominators(self) -> np.ndarray:
        if self.kind not in VECTOR_KINDS:
            raise InvalidInputError(f"denominators undefined for kind {self.kind!r}")
        return self._d

    def curvature_matrix(self, i: int) -> np.ndarray:
        """Z_i = A' H_i A, the Hessian of f_i, as a dense n x n matrix."""
        sys = self.system
        if self.kind in VECTOR_KINDS:
            w = self._w[:, i]
            return np.outer(w, w) / self._d[i]
        if self.kind == "block":
            Ac = sys.A[self.blocks[i]]
            return Ac.T @ self._pinvs[i] @ Ac
        # full: Z_1 = A H_1 A = B for any SPD B
        return sys.B_factor.dense()


def apply_update(x: np.ndarray, ev: SketchEval, omega: float = 1.0) -> np.ndarray:
    """Relaxed exact-step update x - omega * step * direction.

    omega must lie in (0, 2); outside that open interval the one-step
    contraction guarantees are void. A zero-loss evaluation has no defined
    step and leaves x untouched.
    """
    if not 0.0 < omega < 2.0:
        raise InvalidConfigError(f"omega must be in (0, 2), got {omega}")
    if ev.step is None:
        return x
    return x - (omega * ev.step) * ev.direction


def eval_loss(family: SketchFamily, i: int, x: np.ndarray) -> float:
    """Loss f_i(x) at one index, via the family's closed form."""
    return float(family.losses(x, np.array([i]))[0])


def eval_direction(family: SketchFamily, i: int, x: np.ndarray) -> np.ndarray:
    """Metric gradient of f_i at x."""
    return family.evaluate(i, x).direction


def eval_step(family: SketchFamily, i: int, x: np.ndarray) -> float | None:
    """Exact line-search step at index i, or None when the loss is zero."""
    return family.evaluate(i, x).step
