"""Parallel transport and monodromy of logarithmic connections.

A connection here is a matrix-valued 1-form with first-order poles, in one of
three shapes: simple poles in C (residues A_j at points s_j), the diagonal
arrangement in C^n (matrices O_ij against d log(z_i - z_j)), or difference
forms on a punctured line (coefficients U^j against dz/(z-a_j) minus the same
at a reference point).

Transport solves dF = Omega(gamma(t)) gamma'(t) F dt with F(start) = I by an
adaptive embedded Runge-Kutta scheme (DOP853), stepping segment by segment
with a step cap tied to the distance from the divisor.

Composition convention: loops act on solution columns, so traversing gamma
then delta gives M(delta) @ M(gamma).  The X_4 relation M1 M2 M3 M4 = I holds
for loops around punctures enumerated left to right along the real axis with
the basepoint below it (see `x4_generator_loops`).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import schur

from .matrices import (
    as_square_matrix,
    complex_from_json,
    complex_to_json,
    frobenius,
    matrix_from_json,
    matrix_to_json,
)
from .paths import PiecewisePath, PointsDivisor, DiagonalDivisor, puncture_loops

__all__ = [
    "NumericsError",
    "DivisorContactError",
    "TransportError",
    "DefectiveMatrixError",
    "BranchCutError",
    "PointsConnection",
    "ConfigurationConnection",
    "DifferencesConnection",
    "MonodromyRepresentation",
    "integrate_along",
    "transport",
    "monodromy_representation",
    "residue_log",
    "chern_index",
    "curvature_residual",
    "integrability_check",
    "IntegrabilityReport",
    "x4_generator_loops",
    "connection_to_json",
    "connection_from_json",
]

MIN_CLEARANCE = 1e-9


class NumericsError(RuntimeError):
    """Base class for numerical failures (CLI exit code 2)."""


class DivisorContactError(NumericsError):
    def __init__(self, closest: float):
        super().__init__(f"path touches the divisor (closest approach {closest:.3e})")
        self.closest = closest


class TransportError(NumericsError):
    def __init__(self, message: str, closest: float):
        super().__init__(f"{message} (closest approach to divisor {closest:.3e})")
        self.closest = closest


class DefectiveMatrixError(NumericsError):
    pass


class BranchCutError(NumericsError):
    pass


# ---------------------------------------------------------------------------
# Connection variants.
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PointsConnection:
    """Omega = sum_j A_j dz / (z - s_j) on C minus the poles."""

    poles: tuple[complex, ...]
    residues: tuple[np.ndarray, ...]
    regular_at_infinity: bool = False

    def __post_init__(self):
        poles = tuple(complex(s) for s in self.poles)
        res = tuple(as_square_matrix(a) for a in self.residues)
        if len(poles) != len(res):
            raise ValueError("one residue matrix per pole required")
        if res and any(a.shape != res[0].shape for a in res):
            raise ValueError("all residues must share one dimension")
        if self.regular_at_infinity and res:
            total = frobenius(sum(res))
            if total > 1e-12:
                raise ValueError(f"residues do not sum to zero (norm {total:.3e})")
        object.__setattr__(self, "poles", poles)
        object.__setattr__(self, "residues", res)

    @property
    def dim(self) -> int:
        return self.residues[0].shape[0] if self.residues else 1

    @property
    def ambient(self) -> int:
        return 1

    @property
    def divisor(self) -> PointsDivisor:
        return PointsDivisor(self.poles)

    def contract(self, z: np.ndarray, v: np.ndarray) -> np.ndarray:
        z0 = complex(z[0])
        v0 = complex(v[0])
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for s, a in zip(self.poles, self.residues):
            out += a * (v0 / (z0 - s))
        return out


@dataclass(frozen=True)
class ConfigurationConnection:
    """Omega = sum_{i<j} O_ij d log(z_i - z_j) on the configuration space of n points."""

    n: int
    terms: dict = field(default_factory=dict)  # {(i, j) 0-based, i < j: matrix}

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("configuration connection needs n >= 2")
        terms = {}
        dim = None
        for (i, j), m in self.terms.items():
            if not (0 <= i < j < self.n):
                raise ValueError(f"bad index pair ({i}, {j}) for n={self.n}")
            m = as_square_matrix(m)
            if dim is None:
                dim = m.shape[0]
            elif m.shape[0] != dim:
                raise ValueError("all matrices must share one dimension")
            terms[(i, j)] = m
        object.__setattr__(self, "terms", terms)

    @property
    def dim(self) -> int:
        for m in self.terms.values():
            return m.shape[0]
        return 1

    @property
    def ambient(self) -> int:
        return self.n

    @property
    def divisor(self) -> DiagonalDivisor:
        return DiagonalDivisor(self.n)

    def matrix(self, i: int, j: int) -> np.ndarray:
        if i > j:
            i, j = j, i
        got = self.terms.get((i, j))
        return got if got is not None else np.zeros((self.dim, self.dim), dtype=complex)

    def contract(self, z: np.ndarray, v: np.ndarray) -> np.ndarray:
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for (i, j), m in self.terms.items():
            out += m * ((v[i] - v[j]) / (z[i] - z[j]))
        return out


@dataclass(frozen=True)
class DifferencesConnection:
    """Omega = sum_j U^j (dz/(z - a_j) - dz/(z - a_ref)) on a punctured line.

    reference=None places the reference puncture at infinity, dropping the
    second term.
    """

    points: tuple[complex, ...]
    coefficients: tuple[np.ndarray, ...]
    reference: complex | None = None

    def __post_init__(self):
        pts = tuple(complex(a) for a in self.points)
        coeffs = tuple(as_square_matrix(u) for u in self.coefficients)
        if len(pts) != len(coeffs):
            raise ValueError("one coefficient matrix per puncture required")
        if coeffs and any(u.shape != coeffs[0].shape for u in coeffs):
            raise ValueError("all coefficients must share one dimension")
        ref = None if self.reference is None else complex(self.reference)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "coefficients", coeffs)
        object.__setattr__(self, "reference", ref)

    @property
    def dim(self) -> int:
        return self.coefficients[0].shape[0] if self.coefficients else 1

    @property
    def ambient(self) -> int:
        return 1

    @property
    def divisor(self) -> PointsDivisor:
        pts = self.points if self.reference is None else self.points + (self.reference,)
        return PointsDivisor(pts)

    def contract(self, z: np.ndarray, v: np.ndarray) -> np.ndarray:
        z0 = complex(z[0])
        v0 = complex(v[0])
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for a, u in zip(self.points, self.coefficients):
            w = v0 / (z0 - a)
            if self.reference is not None:
                w -= v0 / (z0 - self.reference)
            out += u * w
        return out

    def as_points_connection(self) -> PointsConnection:
        """Equivalent simple-pole form (adds the reference pole if finite)."""
        if self.reference is None:
            return PointsConnection(self.points, self.coefficients)
        total = -sum(self.coefficients)
        return PointsConnection(
            self.points + (self.reference,),
            self.coefficients + (total,),
            regular_at_infinity=True,
        )


Connection = PointsConnection | ConfigurationConnection | DifferencesConnection


# ---------------------------------------------------------------------------
# Transport.
# ---------------------------------------------------------------------------

def _segment_step_cap(seg, clearance: float) -> float:
    speed = seg.max_speed()
    if speed == 0.0:
        return 1.0
    return float(min(1.0, max(1e-5, 0.5 * clearance / speed)))


def integrate_along(path: PiecewisePath, rhs_for_segment, y0: np.ndarray, tol: float,
                    divisor) -> np.ndarray:
    """Drive an ODE state along a path, segment by segment.

    `rhs_for_segment(seg)` must return an f(t, y) for t in [0, 1].  The local
    solver tolerance sits two orders below `tol`, and the step size is capped
    by the segment's clearance from the divisor so no step can skip a pole.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    rtol = max(tol * 1e-2, 3e-14)
    atol = max(tol * 1e-3, 1e-14)
    state = np.asarray(y0, dtype=complex).reshape(-1)
    for seg in path.segments:
        clearance = divisor.segment_distance(seg)
        if clearance <= MIN_CLEARANCE:
            raise DivisorContactError(clearance)
        if seg.max_speed() == 0.0:
            continue
        sol = solve_ivp(
            rhs_for_segment(seg),
            (0.0, 1.0),
            state,
            method="DOP853",
            rtol=rtol,
            atol=atol,
            max_step=_segment_step_cap(seg, clearance),
        )
        if not sol.success:
            raise TransportError(f"integrator failed: {sol.message}", clearance)
        state = sol.y[:, -1]
    return state


def transport(conn: Connection, path: PiecewisePath, tol: float = 1e-10) -> np.ndarray:
    """Path-ordered exponential: F at the path end with F(start) = I."""
    if path.dimension != conn.ambient:
        raise ValueError(f"path in C^{path.dimension} vs connection on C^{conn.ambient}")
    d = conn.dim

    def rhs_for(seg):
        def rhs(t, y):
            a = conn.contract(seg.at(t), seg.velocity(t))
            return (a @ y.reshape(d, d)).reshape(-1)

        return rhs

    out = integrate_along(path, rhs_for, np.eye(d, dtype=complex).reshape(-1), tol, conn.divisor)
    return out.reshape(d, d)


@dataclass(frozen=True)
class MonodromyRepresentation:
    """Monodromy matrices of a loop system, one per generator label."""

    labels: tuple[str, ...]
    matrices: tuple[np.ndarray, ...]
    basepoint: np.ndarray

    def __post_init__(self):
        mats = tuple(as_square_matrix(m) for m in self.matrices)
        if len(self.labels) != len(mats):
            raise ValueError("one label per matrix required")
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "matrices", mats)
        object.__setattr__(self, "basepoint", np.atleast_1d(np.asarray(self.basepoint, dtype=complex)))

    @property
    def dim(self) -> int:
        return self.matrices[0].shape[0]

    def product_defect(self) -> float:
        """||M_1 M_2 ... M_m - I||_F, the presentation-relation residual."""
        prod = np.eye(self.dim, dtype=complex)
        for m in self.matrices:
            prod = prod @ m
        return frobenius(prod - np.eye(self.dim))


def monodromy_representation(conn: Connection, loops, tol: float = 1e-10,
                             labels=None) -> MonodromyRepresentation:
    """Transport each loop; all loops must share the basepoint."""
    loops = list(loops)
    if not loops:
        raise ValueError("no loops given")
    base = loops[0].start
    for p in loops[1:]:
        if float(np.linalg.norm(p.start - base)) > 1e-9:
            raise ValueError("loops do not share a basepoint")
    if labels is None:
        labels = tuple(f"gamma_{k+1}" for k in range(len(loops)))
    mats = tuple(transport(conn, p, tol) for p in loops)
    return MonodromyRepresentation(tuple(labels), mats, base)


def x4_generator_loops(punctures, basepoint: complex, radius: float) -> list[PiecewisePath]:
    """Standard generator loops on CP^1 minus four (or m) punctures.

    Punctures are sorted by increasing real part before loop construction;
    with the basepoint below the real axis this ordering makes the transport
    matrices satisfy M1 M2 ... Mm = I whenever the residues sum to zero
    (regularity at infinity kills the loop around all punctures).
    """
    ordered = sorted((complex(s) for s in punctures), key=lambda s: s.real)
    return puncture_loops(ordered, basepoint, radius)


# ---------------------------------------------------------------------------
# Matrix logarithms and the Chern index.
# ---------------------------------------------------------------------------

def _eigensystem(m: np.ndarray):
    """Eigen-decomposition preferring a unitary one for normal matrices."""
    scale = max(frobenius(m), 1.0)
    normal_defect = frobenius(m @ m.conj().T - m.conj().T @ m)
    if normal_defect <= 1e-12 * scale:
        t, q = schur(m, output="complex")
        offdiag = frobenius(t - np.diag(np.diag(t)))
        if offdiag <= 1e-10 * scale:
            return np.diag(t), q, q.conj().T
    w, v = np.linalg.eig(m)
    cond = np.linalg.cond(v)
    if not np.isfinite(cond) or cond > 1e8:
        raise DefectiveMatrixError(
            "matrix is defective within tolerance: eigenvector condition "
            f"{cond:.2e}, eigenvalues {np.round(w, 6)}"
        )
    return w, v, np.linalg.inv(v)


def residue_log(m, branch_start: float = 0.0) -> np.ndarray:
    """E with e^{2 pi i E} = M, eigenvalue arguments in [branch_start, branch_start + 2 pi).

    Hermitian-unitary input gives Hermitian E.  Eigenvalues sitting just below
    the branch cut are rejected (their exponent would be unstable); shift the
    window instead.
    """
    m = as_square_matrix(m)
    w, v, vinv = _eigensystem(m)
    if np.min(np.abs(w)) < 1e-300:
        raise ValueError("matrix is singular; no logarithm")
    args = np.angle(w)
    frac = np.mod(args - branch_start, 2 * np.pi)
    if np.any(frac > 2 * np.pi - 1e-10):
        raise BranchCutError(
            "an eigenvalue argument sits on the branch-cut boundary; "
            "retry with a shifted window (branch_start)"
        )
    logs = np.log(np.abs(w)) + 1j * (branch_start + frac)
    e = (v * (logs / (2j * np.pi))) @ vinv
    return e


def chern_index(rep: MonodromyRepresentation, branch_start: float = 0.0,
                residual_tol: float = 1e-6) -> tuple[int, float]:
    """Sum of traces of the residue logarithms, rounded to the nearest integer.

    Returns (index, pre-rounding residual); raises if the branch choices are
    inconsistent with an integer class.
    """
    total = sum(complex(np.trace(residue_log(m, branch_start))) for m in rep.matrices)
    index = int(round(total.real))
    residual = abs(total - index)
    if residual > residual_tol:
        raise BranchCutError(
            f"trace sum {total:.8f} is not an integer (residual {residual:.3e}); "
            "branch choices are inconsistent"
        )
    return index, residual


# ---------------------------------------------------------------------------
# Flatness.
# ---------------------------------------------------------------------------

def curvature_residual(conn: Connection, point, u, v) -> float:
    """||Omega(u) Omega(v) - Omega(v) Omega(u)||_F at the point.

    d Omega = 0 holds identically for logarithmic forms, so this commutator
    is the whole curvature obstruction.
    """
    point = np.atleast_1d(np.asarray(point, dtype=complex))
    u = np.atleast_1d(np.asarray(u, dtype=complex))
    v = np.atleast_1d(np.asarray(v, dtype=complex))
    if conn.divisor.point_distance(point) <= MIN_CLEARANCE:
        raise DivisorContactError(conn.divisor.point_distance(point))
    a = conn.contract(point, u)
    b = conn.contract(point, v)
    return frobenius(a @ b - b @ a)


@dataclass(frozen=True)
class IntegrabilityReport:
    """Violations of the infinitesimal braid relations, largest first."""

    max_violation: float
    violations: tuple

    def passed(self, tol: float = 1e-12) -> bool:
        return self.max_violation <= tol


def integrability_check(conn: ConfigurationConnection) -> IntegrabilityReport:
    """Check [O_ij, O_ik + O_jk] = 0, [O_ik, O_ij + O_jk] = 0 for i<j<k and
    [O_ij, O_kl] = 0 for disjoint pairs; report the worst violation."""
    if not isinstance(conn, ConfigurationConnection):
        raise ValueError("integrability check applies to configuration-space connections")
    n = conn.n
    records = []

    def comm(a, b):
        return frobenius(a @ b - b @ a)

    for i in range(n):
        for j in range(i + 1, n):
            for k in range(j + 1, n):
                o_ij, o_ik, o_jk = conn.matrix(i, j), conn.matrix(i, k), conn.matrix(j, k)
                records.append((f"[O_{i+1}{j+1}, O_{i+1}{k+1} + O_{j+1}{k+1}]", comm(o_ij, o_ik + o_jk)))
                records.append((f"[O_{i+1}{k+1}, O_{i+1}{j+1} + O_{j+1}{k+1}]", comm(o_ik, o_ij + o_jk)))
    for i in range(n):
        for j in range(i + 1, n):
            for k in range(i + 1, n):
                for l in range(k + 1, n):
                    if len({i, j, k, l}) == 4 and (i, j) < (k, l):
                        records.append(
                            (f"[O_{i+1}{j+1}, O_{k+1}{l+1}]", comm(conn.matrix(i, j), conn.matrix(k, l)))
                        )
    records.sort(key=lambda r: -r[1])
    worst = records[0][1] if records else 0.0
    return IntegrabilityReport(worst, tuple(records))


# ---------------------------------------------------------------------------
# JSON wire format.
# ---------------------------------------------------------------------------

def connection_to_json(conn: Connection) -> dict:
    if isinstance(conn, PointsConnection):
        return {
            "variant": "points",
            "poles": [complex_to_json(s) for s in conn.poles],
            "residues": [matrix_to_json(a) for a in conn.residues],
            "regular_at_infinity": conn.regular_at_infinity,
        }
    if isinstance(conn, DifferencesConnection):
        return {
            "variant": "differences",
            "points": [complex_to_json(a) for a in conn.points],
            "reference": None if conn.reference is None else complex_to_json(conn.reference),
            "coefficients": [matrix_to_json(u) for u in conn.coefficients],
        }
    if isinstance(conn, ConfigurationConnection):
        return {
            "variant": "configuration",
            "n": conn.n,
            "terms": [
                {"i": i + 1, "j": j + 1, "matrix": matrix_to_json(m)}
                for (i, j), m in sorted(conn.terms.items())
            ],
        }
    raise ValueError(f"unknown connection type {type(conn).__name__}")


def connection_from_json(obj) -> Connection:
    variant = obj.get("variant")
    if variant == "points":
        return PointsConnection(
            tuple(complex_from_json(s) for s in obj["poles"]),
            tuple(matrix_from_json(a) for a in obj["residues"]),
            regular_at_infinity=bool(obj.get("regular_at_infinity", False)),
        )
    if variant == "differences":
        ref = obj.get("reference")
        return DifferencesConnection(
            tuple(complex_from_json(a) for a in obj["points"]),
            tuple(matrix_from_json(u) for u in obj["coefficients"]),
            reference=None if ref is None else complex_from_json(ref),
        )
    if variant == "configuration":
        terms = {
            (t["i"] - 1, t["j"] - 1): matrix_from_json(t["matrix"]) for t in obj["terms"]
        }
        return ConfigurationConnection(obj["n"], terms)
    raise ValueError(f"unknown connection variant {variant!r}")
