"""Symmetric matrices, spectral decomposition, and scalar functional calculus.

The state space throughout the package is the set of real symmetric d x d
matrices.  A scalar function g is lifted to a matrix argument through the
spectral decomposition A = Q diag(lambda) Q^T as g(A) = Q diag(g(lambda)) Q^T,
with eigenvalues kept in non-decreasing order.  The Loewner order predicates
(`is_psd`, `loewner_leq`) and the quadratic form x^T A x round out the
deterministic substrate used by the stochastic layers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

__all__ = [
    "EigensolverError",
    "DomainPolicyError",
    "SymmetricMatrix",
    "SpectralDecomposition",
    "ScalarFunctionSpec",
    "DOMAIN_POLICIES",
    "constant_fn",
    "identity_fn",
    "affine_fn",
    "clipped_affine_fn",
    "clipped_sqrt_fn",
    "spectral_decompose",
    "spectral_decompose_stack",
    "apply_scalar_fn",
    "apply_scalar_fn_stack",
    "matrix_sqrt",
    "is_psd",
    "min_eigenvalues_stack",
    "loewner_leq",
    "quadratic_form",
    "unit_vector",
]

# Construction rejects inputs whose asymmetry exceeds this relative threshold;
# anything below is treated as floating-point drift and symmetrized away.
SYMMETRY_REJECT_RTOL = 1e-8

# Jacobi sweep budget and relative off-diagonal termination threshold.
JACOBI_MAX_SWEEPS = 50
JACOBI_REL_TOL = 1e-12

ORTHOGONALITY_TOL = 1e-10
RECONSTRUCTION_RTOL = 1e-8


class EigensolverError(RuntimeError):
    """Raised when the Jacobi sweeps fail to reduce the off-diagonal residual."""


class DomainPolicyError(ValueError):
    """Raised when an eigenvalue falls outside a scalar function's domain."""


def _frobenius(a: np.ndarray) -> np.ndarray:
    """Frobenius norm over the trailing two axes."""
    return np.sqrt((a * a).sum(axis=(-2, -1)))


class SymmetricMatrix:
    """Immutable real symmetric matrix.

    Inputs are symmetrized as (M + M^T)/2; genuinely asymmetric data
    (relative asymmetry above 1e-8) and non-finite entries are rejected.
    """

    __slots__ = ("_entries",)

    def __init__(self, entries) -> None:
        arr = np.array(entries, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {arr.shape}")
        if not np.isfinite(arr).all():
            raise ValueError("matrix entries must be finite")
        skew = _frobenius(arr - arr.T)
        if skew > SYMMETRY_REJECT_RTOL * _frobenius(arr):
            raise ValueError(
                f"matrix is not symmetric: ||M - M^T||_F = {skew:.3e} "
                f"exceeds {SYMMETRY_REJECT_RTOL:.0e} * ||M||_F"
            )
        sym = 0.5 * (arr + arr.T)
        sym.setflags(write=False)
        self._entries = sym

    @property
    def dim(self) -> int:
        return self._entries.shape[0]

    @property
    def entries(self) -> np.ndarray:
        """Read-only (d, d) array view."""
        return self._entries

    @classmethod
    def identity(cls, d: int) -> "SymmetricMatrix":
        return cls(np.eye(d))

    @classmethod
    def zeros(cls, d: int) -> "SymmetricMatrix":
        return cls(np.zeros((d, d)))

    @classmethod
    def diagonal(cls, values) -> "SymmetricMatrix":
        return cls(np.diag(np.asarray(values, dtype=np.float64)))

    def trace(self) -> float:
        return float(np.trace(self._entries))

    def frobenius_norm(self) -> float:
        return float(_frobenius(self._entries))

    def __add__(self, other: "SymmetricMatrix") -> "SymmetricMatrix":
        return SymmetricMatrix(self._entries + other._entries)

    def __sub__(self, other: "SymmetricMatrix") -> "SymmetricMatrix":
        return SymmetricMatrix(self._entries - other._entries)

    def __mul__(self, scalar: float) -> "SymmetricMatrix":
        return SymmetricMatrix(self._entries * float(scalar))

    __rmul__ = __mul__

    def __neg__(self) -> "SymmetricMatrix":
        return SymmetricMatrix(-self._entries)

    def __repr__(self) -> str:
        return f"SymmetricMatrix(dim={self.dim})"


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenvalues in non-decreasing order with matching orthonormal columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def __post_init__(self) -> None:
        lam = np.asarray(self.eigenvalues, dtype=np.float64)
        q = np.asarray(self.eigenvectors, dtype=np.float64)
        if (np.diff(lam) < 0).any():
            raise ValueError("eigenvalues must be sorted non-decreasing")
        gram = q.T @ q - np.eye(q.shape[0])
        resid = float(_frobenius(gram))
        if resid > ORTHOGONALITY_TOL:
            raise ValueError(f"eigenvector columns not orthonormal: residual {resid:.3e}")
        object.__setattr__(self, "eigenvalues", lam)
        object.__setattr__(self, "eigenvectors", q)

    def reassemble(self) -> np.ndarray:
        """Return Q diag(lambda) Q^T as a plain array."""
        return (self.eigenvectors * self.eigenvalues) @ self.eigenvectors.T


DOMAIN_POLICIES = ("total", "clip_negative_to_zero", "reject_outside_domain")


@dataclass(frozen=True)
class ScalarFunctionSpec:
    """A scalar function together with its domain policy and optional bound.

    `fn` must act elementwise on float arrays.  The domain policies treat the
    negative half-line as the only restricted region: `clip_negative_to_zero`
    replaces negative eigenvalues by zero before evaluation, while
    `reject_outside_domain` raises on any negative eigenvalue.  `bound`, when
    set, declares sup |fn| <= bound on the admitted domain; the SDE solver
    requires it and `bound_holds` spot-checks it by sampling.
    """

    fn: Callable[[np.ndarray], np.ndarray]
    domain_policy: str = "total"
    bound: Optional[float] = None
    name: str = field(default="", compare=False)

    def __post_init__(self) -> None:
        if self.domain_policy not in DOMAIN_POLICIES:
            raise ValueError(f"unknown domain policy {self.domain_policy!r}")
        if self.bound is not None and not self.bound > 0:
            raise ValueError("bound must be positive when set")

    def map_eigenvalues(self, lam: np.ndarray) -> np.ndarray:
        lam = np.asarray(lam, dtype=np.float64)
        if self.domain_policy == "clip_negative_to_zero":
            lam = np.maximum(lam, 0.0)
        elif self.domain_policy == "reject_outside_domain":
            if (lam < 0.0).any():
                worst = float(lam.min())
                raise DomainPolicyError(
                    f"eigenvalue {worst!r} outside the admitted domain [0, inf)"
                )
        out = np.asarray(self.fn(lam), dtype=np.float64)
        if out.shape != lam.shape:
            raise ValueError("scalar function must evaluate elementwise")
        if not np.isfinite(out).all():
            raise DomainPolicyError(f"scalar function {self.name or self.fn!r} returned non-finite values")
        return out

    def bound_holds(self, low: float, high: float, samples: int = 1000, seed: int = 0) -> bool:
        """Spot-check |fn| <= bound on `samples` points of [low, high]."""
        if self.bound is None:
            raise ValueError("no bound declared")
        rng = np.random.default_rng(seed)
        pts = rng.uniform(low, high, size=samples)
        vals = self.map_eigenvalues(pts)
        return bool((np.abs(vals) <= self.bound).all())


def constant_fn(value: float, name: str = "") -> ScalarFunctionSpec:
    value = float(value)
    # any positive M bounds the zero function
    return ScalarFunctionSpec(
        fn=lambda x: np.full_like(np.asarray(x, dtype=np.float64), value),
        domain_policy="total",
        bound=abs(value) if value != 0.0 else 1.0,
        name=name or f"constant({value})",
    )


def identity_fn() -> ScalarFunctionSpec:
    return ScalarFunctionSpec(fn=lambda x: np.asarray(x, dtype=np.float64).copy(), name="identity")


def affine_fn(a: float, b: float) -> ScalarFunctionSpec:
    return ScalarFunctionSpec(fn=lambda x: a * np.asarray(x, dtype=np.float64) + b, name=f"affine({a},{b})")


def clipped_affine_fn(a: float, b: float, bound: float) -> ScalarFunctionSpec:
    """a*x + b clamped to [-bound, bound]: a bounded Lipschitz coefficient."""
    if not bound > 0:
        raise ValueError("bound must be positive")
    return ScalarFunctionSpec(
        fn=lambda x: np.clip(a * np.asarray(x, dtype=np.float64) + b, -bound, bound),
        domain_policy="total",
        bound=float(bound),
        name=f"clipped_affine({a},{b},{bound})",
    )


def clipped_sqrt_fn(clip: float) -> ScalarFunctionSpec:
    """min(sqrt(max(x, 0)), clip): the bounded square root used by the Wishart model."""
    if not clip > 0:
        raise ValueError("clip bound must be positive")
    return ScalarFunctionSpec(
        fn=lambda x: np.minimum(np.sqrt(x), clip),
        domain_policy="clip_negative_to_zero",
        bound=float(clip),
        name=f"clipped_sqrt({clip})",
    )


def _jacobi_stack(stack: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Cyclic Jacobi diagonalization of a stack of symmetric matrices.

    Sweeps rotate every (p, q) plane in fixed cyclic order until the
    off-diagonal Frobenius norm of every matrix falls below
    1e-12 * ||A||_F, or the 50-sweep budget is exhausted.
    """
    a = np.array(stack, dtype=np.float64)
    m, d = a.shape[0], a.shape[1]
    v = np.broadcast_to(np.eye(d), (m, d, d)).copy()
    if d == 1:
        return a[:, :, 0].copy(), v

    thresh = JACOBI_REL_TOL * _frobenius(a)
    off_mask = ~np.eye(d, dtype=bool)

    def off_norms(mat: np.ndarray) -> np.ndarray:
        return np.sqrt((mat[:, off_mask] ** 2).sum(axis=1))

    converged = False
    for _ in range(JACOBI_MAX_SWEEPS):
        if (off_norms(a) <= thresh).all():
            converged = True
            break
        for p in range(d - 1):
            for q in range(p + 1, d):
                apq = a[:, p, q]
                rotate = np.abs(apq) > 0.0
                if not rotate.any():
                    continue
                with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
                    tau = (a[:, q, q] - a[:, p, p]) / (2.0 * apq)
                    sgn = np.where(tau >= 0.0, 1.0, -1.0)
                    t = sgn / (np.abs(tau) + np.sqrt(1.0 + tau * tau))
                t = np.where(rotate & np.isfinite(t), t, 0.0)
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                cc, ss = c[:, None], s[:, None]

                colp, colq = a[:, :, p].copy(), a[:, :, q].copy()
                a[:, :, p] = cc * colp - ss * colq
                a[:, :, q] = ss * colp + cc * colq
                rowp, rowq = a[:, p, :].copy(), a[:, q, :].copy()
                a[:, p, :] = cc * rowp - ss * rowq
                a[:, q, :] = ss * rowp + cc * rowq
                # the rotation annihilates the (p, q) entry analytically
                a[:, p, q] = np.where(rotate, 0.0, a[:, p, q])
                a[:, q, p] = np.where(rotate, 0.0, a[:, q, p])

                vp, vq = v[:, :, p].copy(), v[:, :, q].copy()
                v[:, :, p] = cc * vp - ss * vq
                v[:, :, q] = ss * vp + cc * vq

    if not converged:
        resid = off_norms(a)
        if (resid > thresh).any():
            raise EigensolverError(
                f"Jacobi sweeps exhausted ({JACOBI_MAX_SWEEPS}): worst off-diagonal "
                f"residual {float(resid.max()):.3e} above threshold {float(thresh.max()):.3e}"
            )

    lam = np.einsum("mii->mi", a).copy()
    order = np.argsort(lam, axis=1, kind="stable")
    lam = np.take_along_axis(lam, order, axis=1)
    v = np.take_along_axis(v, order[:, None, :], axis=2)
    return lam, v


def spectral_decompose_stack(stack: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Decompose a stack of symmetric matrices; returns (eigenvalues, eigenvectors).

    Eigenvalues come back as (m, d) sorted non-decreasing per matrix, with
    eigenvector columns (m, d, d) in matching order.  Reconstruction residuals
    are verified for the whole stack.
    """
    stack = np.asarray(stack, dtype=np.float64)
    lam, vec = _jacobi_stack(stack)
    recon = np.einsum("mik,mk,mjk->mij", vec, lam, vec)
    resid = _frobenius(recon - stack)
    bound = RECONSTRUCTION_RTOL * np.maximum(1.0, _frobenius(stack))
    if (resid > bound).any():
        raise EigensolverError(
            f"eigendecomposition reconstruction residual {float(resid.max()):.3e} "
            f"exceeds tolerance {float(bound.max()):.3e}"
        )
    return lam, vec


def spectral_decompose(a: SymmetricMatrix) -> SpectralDecomposition:
    """Spectral decomposition A = Q diag(lambda) Q^T with lambda non-decreasing."""
    lam, vec = spectral_decompose_stack(a.entries[None, :, :])
    return SpectralDecomposition(eigenvalues=lam[0], eigenvectors=vec[0])


def apply_scalar_fn_stack(spec: ScalarFunctionSpec, stack: np.ndarray) -> np.ndarray:
    """Lift `spec` over a stack of symmetric matrices; exactly symmetric output."""
    lam, vec = spectral_decompose_stack(stack)
    mapped = spec.map_eigenvalues(lam)
    out = np.einsum("mik,mk,mjk->mij", vec, mapped, vec)
    return 0.5 * (out + out.transpose(0, 2, 1))


def apply_scalar_fn(spec: ScalarFunctionSpec, a: SymmetricMatrix) -> SymmetricMatrix:
    """Evaluate the lifted scalar function: g(A) = Q diag(g(lambda)) Q^T."""
    return SymmetricMatrix(apply_scalar_fn_stack(spec, a.entries[None, :, :])[0])


def matrix_sqrt(a: SymmetricMatrix) -> SymmetricMatrix:
    """PSD square root via the spectral lift of sqrt(max(x, 0)).

    Negative eigenvalues are clipped to zero so that discretized paths which
    drift slightly outside the PSD cone still have a well-defined square root.
    """
    spec = ScalarFunctionSpec(fn=np.sqrt, domain_policy="clip_negative_to_zero", name="sqrt")
    return apply_scalar_fn(spec, a)


def min_eigenvalues_stack(stack: np.ndarray) -> np.ndarray:
    """Smallest eigenvalue of each matrix in a stack."""
    lam, _ = spectral_decompose_stack(stack)
    return lam[:, 0]


def is_psd(a: SymmetricMatrix, tol: float = 0.0) -> bool:
    """True iff the smallest eigenvalue is >= -tol."""
    if tol < 0:
        raise ValueError("tol must be non-negative")
    lam, _ = spectral_decompose_stack(a.entries[None, :, :])
    return bool(lam[0, 0] >= -tol)


def loewner_leq(a: SymmetricMatrix, b: SymmetricMatrix, tol: float = 0.0) -> bool:
    """Loewner order A <= B, i.e. B - A is PSD up to tol."""
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")
    return is_psd(b - a, tol)


def unit_vector(v) -> np.ndarray:
    """Normalize to unit Euclidean length; rejects the zero vector."""
    arr = np.asarray(v, dtype=np.float64).reshape(-1)
    norm = float(np.linalg.norm(arr))
    if norm == 0.0:
        raise ValueError("cannot normalize the zero vector")
    return arr / norm


def quadratic_form(x, a: SymmetricMatrix) -> float:
    """x^T A x for a unit vector x (norm within 1e-12 of 1)."""
    arr = np.asarray(x, dtype=np.float64).reshape(-1)
    norm = float(np.linalg.norm(arr))
    if norm == 0.0:
        raise ValueError("zero vector is not a direction")
    if abs(norm - 1.0) > 1e-12:
        raise ValueError(f"expected a unit vector, got norm {norm!r}")
    if arr.shape[0] != a.dim:
        raise ValueError(f"vector length {arr.shape[0]} does not match dim {a.dim}")
    return float(arr @ a.entries @ arr)
