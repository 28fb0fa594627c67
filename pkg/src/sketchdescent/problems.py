"""Linear systems, weighted geometries, and reproducible test instances.

A LinearSystem bundles a consistent system A x = b with the two SPD weight
matrices that fix its geometry: B defines the projection norm used by the
sketches and G defines the norm the solver descends in. Both default to the
identity, which is stored implicitly so that the common unweighted case
costs nothing per iteration.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError, SizeLimitError
from .linalg import SpdFactor, as_matrix, as_vector
from .rng import make_rng, standard_normal

# Consistency of b with a stored exact solution is checked to this slack.
CONSISTENCY_TOL = 1e-10

# Largest dimension for which we will compute a dense pseudoinverse when a
# solution has to be reconstructed after the fact.
PINV_SIZE_LIMIT = 2000


@dataclass
class LinearSystem:
    """A consistent linear system with its sketching and descent geometries.

    Parameters
    ----------
    A : (m, n) ndarray
        Coefficient matrix. Zero rows are rejected; drop them first with
        :func:`make_consistent`.
    b : (m,) ndarray
        Right-hand side. Must be consistent with x_star when one is stored.
    B : (n, n) ndarray or None
        SPD projection weight. None means identity.
    G : (n, n) ndarray or None
        SPD descent weight. None means identity.
    x_star : (n,) ndarray or None
        A known exact solution, if the instance was built from one.
    label : str
        Short human-readable tag used in benchmark output.
    """

    A: np.ndarray
    b: np.ndarray
    B: np.ndarray | None = None
    G: np.ndarray | None = None
    x_star: np.ndarray | None = None
    label: str = ""
    _B_factor: SpdFactor | None = field(default=None, repr=False)
    _G_factor: SpdFactor | None = field(default=None, repr=False)

    def __post_init__(self):
        self.A = as_matrix(self.A, "A")
        self.b = as_vector(self.b, "b")
        m, n = self.A.shape
        if m == 0 or n == 0:
            raise InvalidInputError("A must have at least one row and one column")
        if self.b.shape != (m,):
            raise InvalidInputError(f"b has length {self.b.size}, expected {m}")
        row_norms = np.linalg.norm(self.A, axis=1)
        if np.any(row_norms == 0.0):
            bad = int(np.argmin(row_norms))
            raise InvalidInputError(f"A has an exactly zero row (index {bad})")
        # Factoring B and G up front doubles as the SPD check.
        self._B_factor = SpdFactor.wrap(self.B, n)
        self._G_factor = SpdFactor.wrap(self.G, n)
        if self.x_star is not None:
            self.x_star = as_vector(self.x_star, "x_star")
            if self.x_star.shape != (n,):
                raise InvalidInputError(
                    f"x_star has length {self.x_star.size}, expected {n}"
                )
            gap = np.linalg.norm(self.A @ self.x_star - self.b)
            if gap > CONSISTENCY_TOL * (1.0 + np.linalg.norm(self.b)):
                raise InvalidInputError(
                    f"system inconsistent with stored solution: |Ax*-b| = {gap:.3e}"
                )

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @property
    def n(self) -> int:
        return self.A.shape[1]

    @property
    def B_factor(self) -> SpdFactor:
        return self._B_factor

    @property
    def G_factor(self) -> SpdFactor:
        return self._G_factor

    @property
    def g_equals_b(self) -> bool:
        """True when descent and projection geometries coincide exactly."""
        if self._B_factor.is_identity and self._G_factor.is_identity:
            return True
        if self._B_factor.is_identity != self._G_factor.is_identity:
            return False
        return np.array_equal(self.B, self.G)

    def residual(self, x: np.ndarray) -> np.ndarray:
        return self.A @ x - self.b

    def residual_norm(self, x: np.ndarray) -> float:
        return float(np.linalg.norm(self.A @ x - self.b))

    def error_sq_g(self, x: np.ndarray, x_star: np.ndarray | None = None) -> float:
        """Squared error in the G norm (against the stored solution by default)."""
        target = self.x_star if x_star is None else x_star
        if target is None:
            raise InvalidInputError("system stores no solution; pass x_star")
        return self._G_factor.quad(x - target)

    def error_sq_b(self, x: np.ndarray, x_star: np.ndarray | None = None) -> float:
        """Squared error in the B norm (against the stored solution by default)."""
        target = self.x_star if x_star is None else x_star
        if target is None:
            raise InvalidInputError("system stores no solution; pass x_star")
        return self._B_factor.quad(x - target)


@dataclass(frozen=True)
class GenSpec:
    """Recipe for a synthetic instance.

    kind is "gaussian" (dense iid standard normal A) or
    "gaussian-normal-equations" (A = W.T W for an m x n Gaussian W, giving an
    n x n SPD system). The right-hand side is always synthesized from a drawn
    solution, so generated systems are consistent by construction.
    """

    kind: str
    m: int
    n: int
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("gaussian", "gaussian-normal-equations"):
            raise InvalidInputError(f"unknown generator kind {self.kind!r}")
        if self.m < 1 or self.n < 1:
            raise InvalidInputError("m and n must be at least 1")
        if self.kind == "gaussian-normal-equations" and self.m < self.n:
            raise InvalidInputError(
                "gaussian-normal-equations needs m >= n for an SPD product"
            )

    @property
    def label(self) -> str:
        suffix = ":spd" if self.kind == "gaussian-normal-equations" else ""
        return f"gen:{self.m}x{self.n}{suffix}"


def gen_gaussian(spec: GenSpec) -> LinearSystem:
    """Dense Gaussian instance A x* = b with iid N(0,1) entries."""
    if spec.kind != "gaussian":
        raise InvalidInputError(f"gen_gaussian got kind {spec.kind!r}")
    rng = make_rng(spec.seed)
    A = standard_normal(rng, (spec.m, spec.n))
    x_star = standard_normal(rng, spec.n)
    b = A @ x_star
    return LinearSystem(A=A, b=b, x_star=x_star, label=spec.label)


def gen_gaussian_spd(spec: GenSpec) -> LinearSystem:
    """SPD instance A = W.T W from an m x n Gaussian W, with m >= n.

    The system is n x n. With m >= n the product is SPD with probability
    one; m controls the conditioning (m = n is the nastiest).
    """
    if spec.kind != "gaussian-normal-equations":
        raise InvalidInputError(f"gen_gaussian_spd got kind {spec.kind!r}")
    rng = make_rng(spec.seed)
    W = standard_normal(rng, (spec.m, spec.n))
    A = W.T @ W
    A = 0.5 * (A + A.T)
    x_star = standard_normal(rng, spec.n)
    b = A @ x_star
    return LinearSystem(A=A, b=b, x_star=x_star, label=spec.label)


def generate(spec: GenSpec) -> LinearSystem:
    """Dispatch on spec.kind."""
    if spec.kind == "gaussian":
        return gen_gaussian(spec)
    return gen_gaussian_spd(spec)


def make_consistent(
    A,
    seed: int = 0,
    B=None,
    G=None,
    label: str = "",
) -> LinearSystem:
    """Wrap an externally loaded matrix in a consistent system.

    Draws a solution x* from the seeded normal stream and sets b = A x*.
    Zero rows carry no information and break row sketches, so they are
    dropped with a warning.
    """
    A = as_matrix(A, "A")
    row_norms = np.linalg.norm(A, axis=1)
    keep = row_norms > 0.0
    dropped = int(A.shape[0] - keep.sum())
    if dropped:
        warnings.warn(f"dropping {dropped} zero row(s) from loaded matrix")
        A = A[keep]
    if A.shape[0] == 0:
        raise InvalidInputError("matrix has no nonzero rows")
    rng = make_rng(seed)
    x_star = standard_normal(rng, A.shape[1])
    b = A @ x_star
    return LinearSystem(A=A, b=b, B=B, G=G, x_star=x_star, label=label)


def resolve_x_star(system: LinearSystem, x0: np.ndarray) -> tuple[np.ndarray, bool]:
    """Exact solution used for error metrics.

    Returns (x_star, is_projection). When the system stores a solution it is
    returned as-is. Otherwise the limit point of a descent started at x0 is
    reconstructed as x0 + pinv(A) (b - A x0), which is flagged so downstream
    consumers know the metric target was inferred. Dense pseudoinverses are
    refused above PINV_SIZE_LIMIT.
    """
    if system.x_star is not None:
        return system.x_star, False
    if max(system.m, system.n) > PINV_SIZE_LIMIT:
        raise SizeLimitError(
            f"cannot reconstruct a solution for a {system.m}x{system.n} system; "
            "store x_star on the instance"
        )
    correction = np.linalg.pinv(system.A) @ (system.b - system.A @ x0)
    return x0 + correction, True
