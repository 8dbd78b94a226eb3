"""Offline robust observer synthesis.

Designs the gain L of a Luenberger-like observer for a discrete-time system
with a bounded state-map Jacobian and amplitude-bounded disturbances.  The
design solves a semidefinite program: one stability/attenuation LMI per
vertex of the Jacobian box plus one performance-coupling LMI, minimizing the
attenuation level mu = mu_w + mu_v.  From the certificate, an analytic
worst-case error radius schedule follows, decaying geometrically from the
initial-error bound to a noise-driven floor.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Sequence

import cvxpy as cp
import numpy as np

from .interval import IntervalMatrix
from .zonotope import Box

__all__ = [
    "SystemModel",
    "UncertaintyBounds",
    "SynthesisConfig",
    "SynthesisResult",
    "SynthesisError",
    "InfeasibleError",
    "enumerate_vertices",
    "stability_lmi",
    "performance_lmi",
    "synthesize",
    "initial_error_energy",
    "peak_bound_schedule",
    "bounded_error_interval",
    "synthesis_report",
]


class SynthesisError(RuntimeError):
    """Observer synthesis failed (solver breakdown or rejected certificate)."""


class InfeasibleError(SynthesisError):
    """The synthesis program is infeasible.

    ``family`` names the constraint family the diagnosis attributes the
    failure to: "stability" when the vertex LMIs alone are infeasible (no
    gain stabilizes the Jacobian box), otherwise "coupling".
    """

    def __init__(self, message: str, family: str):
        super().__init__(message)
        self.family = family


@dataclass(frozen=True)
class SystemModel:
    """Discrete-time model x+ = A x + B u + f(x) + D1 w,  y = C x + D2 v.

    ``f`` evaluates the nonlinearity at a point; ``f_jac`` returns an
    IntervalMatrix enclosing its Jacobian over a Box.  ``j_lower``/``j_upper``
    bound the Jacobian globally over the feasible domain.
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D1: np.ndarray
    D2: np.ndarray
    f: Callable[[np.ndarray], np.ndarray]
    f_jac: Callable[[Box], IntervalMatrix]
    j_lower: np.ndarray
    j_upper: np.ndarray
    name: str = "custom"

    def __post_init__(self):
        for attr in ("A", "B", "C", "D1", "D2", "j_lower", "j_upper"):
            object.__setattr__(self, attr, np.atleast_2d(np.asarray(getattr(self, attr), float)))
        n = self.A.shape[0]
        if self.A.shape != (n, n):
            raise ValueError(f"A must be square, got {self.A.shape}")
        if self.B.shape[0] != n:
            raise ValueError(f"B has {self.B.shape[0]} rows, expected {n}")
        if self.C.shape[1] != n:
            raise ValueError(f"C has {self.C.shape[1]} columns, expected {n}")
        if self.D1.shape[0] != n:
            raise ValueError(f"D1 has {self.D1.shape[0]} rows, expected {n}")
        if self.D2.shape[0] != self.C.shape[0]:
            raise ValueError(f"D2 has {self.D2.shape[0]} rows, expected {self.C.shape[0]}")
        if self.j_lower.shape != (n, n) or self.j_upper.shape != (n, n):
            raise ValueError("Jacobian bounds must be n-by-n")
        if np.any(self.j_lower > self.j_upper):
            raise ValueError("Jacobian bounds inverted: j_lower > j_upper somewhere")

    @property
    def n_x(self) -> int:
        return self.A.shape[0]

    @property
    def n_u(self) -> int:
        return self.B.shape[1]

    @property
    def n_y(self) -> int:
        return self.C.shape[0]

    @property
    def n_w(self) -> int:
        return self.D1.shape[1]

    @property
    def n_v(self) -> int:
        return self.D2.shape[1]


@dataclass(frozen=True)
class UncertaintyBounds:
    """Amplitude bounds |w| <= w_bar, |v| <= v_bar, |x0 - x0_center| <= x0_radius."""

    w_bar: np.ndarray
    v_bar: np.ndarray
    x0_center: np.ndarray
    x0_radius: np.ndarray

    def __post_init__(self):
        for attr in ("w_bar", "v_bar", "x0_center", "x0_radius"):
            object.__setattr__(self, attr, np.atleast_1d(np.asarray(getattr(self, attr), float)))
        for attr in ("w_bar", "v_bar", "x0_radius"):
            if np.any(getattr(self, attr) < 0.0):
                raise ValueError(f"{attr} must be nonnegative")
        if self.x0_center.shape != self.x0_radius.shape:
            raise ValueError("x0_center and x0_radius dimensions differ")

    @property
    def shape_w(self) -> np.ndarray:
        """Diagonal shape matrix of the disturbance zonotope."""
        return np.diag(self.w_bar)

    @property
    def shape_v(self) -> np.ndarray:
        return np.diag(self.v_bar)

    @property
    def shape_x0(self) -> np.ndarray:
        return np.diag(self.x0_radius)


@dataclass(frozen=True)
class SynthesisConfig:
    """Knobs for the observer SDP.

    lam is the guaranteed per-step decay rate of the error energy, in (0, 1).
    The strict matrix inequalities are imposed with margin
    strictness_margin * n_x on each side; certificates are revalidated by
    direct eigenvalue checks at half that margin.  When lambda_grid is given,
    synthesize() sweeps it and keeps the result with the smallest mu.
    """

    lam: float = 0.5
    strictness_margin: float = 1e-7
    solver: str = "CLARABEL"
    solver_opts: dict = field(default_factory=dict)
    lambda_grid: tuple[float, ...] | None = None
    vertex_cap: int = 20
    pd_floor: float = 1e-6
    scalar_floor: float = 1e-9

    def __post_init__(self):
        if not 0.0 < self.lam < 1.0:
            raise ValueError("lambda must be in (0,1)")
        if self.strictness_margin <= 0.0:
            raise ValueError("strictness_margin must be positive")
        if self.lambda_grid is not None:
            grid = tuple(float(v) for v in self.lambda_grid)
            if not grid or any(not 0.0 < v < 1.0 for v in grid):
                raise ValueError("lambda_grid entries must be in (0,1)")
            object.__setattr__(self, "lambda_grid", grid)


@dataclass(frozen=True)
class SynthesisResult:
    """Observer gain plus the full feasibility certificate."""

    L: np.ndarray
    P: np.ndarray
    W: np.ndarray
    U: np.ndarray
    a: float
    b: float
    gamma: float
    mu_w: float
    mu_v: float
    mu: float
    lam: float
    vertex_count: int
    vertices: tuple[np.ndarray, ...]
    solver_status: str
    stability_eig_max: float
    performance_eig_min: float


def enumerate_vertices(j_lower, j_upper, cap: int = 20) -> list[np.ndarray]:
    """All vertex matrices of the box [j_lower, j_upper].

    Every non-degenerate entry takes each of its two bounds; degenerate
    entries keep their common value.  Vertices come out in lexicographic
    order over the entries in row-major order, lower bound before upper.
    """
    j_lower = np.atleast_2d(np.asarray(j_lower, dtype=float))
    j_upper = np.atleast_2d(np.asarray(j_upper, dtype=float))
    if j_lower.shape != j_upper.shape:
        raise ValueError("bound shapes differ")
    if np.any(j_lower > j_upper):
        raise ValueError("bounds inverted")
    free = int(np.sum(j_lower != j_upper))
    if free > cap:
        raise ValueError(
            f"vertex enumeration would create 2^{free} matrices, exceeding the cap 2^{cap}"
        )
    choices = [
        (lo,) if lo == hi else (lo, hi)
        for lo, hi in zip(j_lower.ravel(), j_upper.ravel())
    ]
    shape = j_lower.shape
    return [np.array(flat, dtype=float).reshape(shape) for flat in itertools.product(*choices)]


def stability_lmi(model: SystemModel, lam, J, P, W, U, a, b, gamma, bmat=np.block):
    """Vertex stability/attenuation LMI, required negative definite.

    Block rows act on (error, nonlinearity increment, disturbance, noise,
    energy coupling, Jacobian slack).  Works on numpy values (bmat=np.block)
    or cvxpy variables (bmat=cvxpy.bmat); all blocks are affine in the
    decision variables.
    """
    n, nw, nv = model.n_x, model.n_w, model.n_v
    eye, zeros = np.eye, np.zeros
    decay_block = lam * P - P + a * (J + J.T)
    gain_block = P @ model.A - W @ model.C
    slack_block = b * eye(n) - U - U.T
    pd1 = P @ model.D1
    wd2 = W @ model.D2
    uj = U @ J
    return bmat(
        [
            [decay_block, -a * eye(n), zeros((n, nw)), zeros((n, nv)), gain_block.T, uj.T],
            [-a * eye(n), -b * eye(n), zeros((n, nw)), zeros((n, nv)), P.T, zeros((n, n))],
            [zeros((nw, n)), zeros((nw, n)), -gamma * eye(nw), zeros((nw, nv)), pd1.T, zeros((nw, n))],
            [zeros((nv, n)), zeros((nv, n)), zeros((nv, nw)), -gamma * eye(nv), -wd2.T, zeros((nv, n))],
            [gain_block, P, pd1, -wd2, -P, zeros((n, n))],
            [uj, zeros((n, n)), zeros((n, nw)), zeros((n, nv)), zeros((n, n)), slack_block],
        ]
    )


def performance_lmi(model: SystemModel, lam, P, gamma, mu_w, mu_v, bmat=np.block):
    """Performance-coupling LMI, required positive definite.

    Ties the error energy to the peak amplification level mu = mu_w + mu_v;
    its Schur complement bounds the squared error norm by the decaying
    energy plus the noise terms.
    """
    n, nw, nv = model.n_x, model.n_w, model.n_v
    eye, zeros = np.eye, np.zeros
    mu = mu_w + mu_v
    return bmat(
        [
            [lam * P, zeros((n, nw)), zeros((n, nv)), eye(n)],
            [zeros((nw, n)), (mu_w - gamma) * eye(nw), zeros((nw, nv)), zeros((nw, n))],
            [zeros((nv, n)), zeros((nv, nw)), (mu_v - gamma) * eye(nv), zeros((nv, n))],
            [eye(n), zeros((n, nw)), zeros((n, nv)), mu * eye(n)],
        ]
    )


def _solve_fixed_lambda(
    model: SystemModel, config: SynthesisConfig, lam: float
) -> SynthesisResult:
    n, ny = model.n_x, model.n_y
    vertices = enumerate_vertices(model.j_lower, model.j_upper, cap=config.vertex_cap)

    P = cp.Variable((n, n), symmetric=True)
    W = cp.Variable((n, ny))
    U = cp.Variable((n, n))
    a = cp.Variable(nonneg=True)
    b = cp.Variable(nonneg=True)
    gamma = cp.Variable(nonneg=True)
    mu_w = cp.Variable(nonneg=True)
    mu_v = cp.Variable(nonneg=True)

    margin = config.strictness_margin * n
    dim_stab = 4 * n + model.n_w + model.n_v
    dim_perf = 2 * n + model.n_w + model.n_v
    floor = config.scalar_floor

    stability_constraints = [
        stability_lmi(model, lam, J, P, W, U, a, b, gamma, bmat=cp.bmat)
        << -margin * np.eye(dim_stab)
        for J in vertices
    ]
    shared = [
        P >> config.pd_floor * np.eye(n),
        a >= floor,
        b >= floor,
        gamma >= floor,
    ]
    coupling_constraints = [
        performance_lmi(model, lam, P, gamma, mu_w, mu_v, bmat=cp.bmat)
        >> margin * np.eye(dim_perf),
        mu_w >= floor,
        mu_v >= floor,
    ]

    problem = cp.Problem(
        cp.Minimize(mu_w + mu_v),
        stability_constraints + shared + coupling_constraints,
    )
    try:
        problem.solve(solver=config.solver, **config.solver_opts)
    except cp.error.SolverError as exc:
        raise SynthesisError(f"SDP solver failed: {exc}") from exc

    if problem.status in (cp.INFEASIBLE, cp.INFEASIBLE_INACCURATE):
        # attribute the failure: can the vertex LMIs be met at all?
        diagnostic = cp.Problem(cp.Minimize(0), stability_constraints + shared)
        diagnostic.solve(solver=config.solver, **config.solver_opts)
        if diagnostic.status in (cp.INFEASIBLE, cp.INFEASIBLE_INACCURATE):
            raise InfeasibleError(
                "synthesis infeasible: no gain satisfies the vertex stability LMIs "
                f"for lambda={lam} (Jacobian box not stabilizable at this decay rate)",
                family="stability",
            )
        raise InfeasibleError(
            f"synthesis infeasible: stability and performance LMIs cannot be "
            f"coupled at lambda={lam}",
            family="coupling",
        )
    if problem.status not in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE):
        raise SynthesisError(f"SDP solver returned status {problem.status}")

    p_val = 0.5 * (P.value + P.value.T)
    w_val = W.value
    gain = np.linalg.solve(p_val, w_val)
    result = SynthesisResult(
        L=gain,
        P=p_val,
        W=w_val,
        U=U.value,
        a=float(a.value),
        b=float(b.value),
        gamma=float(gamma.value),
        mu_w=float(mu_w.value),
        mu_v=float(mu_v.value),
        mu=float(mu_w.value + mu_v.value),
        lam=lam,
        vertex_count=len(vertices),
        vertices=tuple(vertices),
        solver_status=problem.status,
        stability_eig_max=np.nan,
        performance_eig_min=np.nan,
    )
    return _revalidate(model, config, result)


def _revalidate(
    model: SystemModel, config: SynthesisConfig, result: SynthesisResult
) -> SynthesisResult:
    """Reject the solver's answer unless direct eigenvalue checks confirm it."""
    margin = config.strictness_margin * model.n_x
    worst_stability = max(
        float(
            np.linalg.eigvalsh(
                stability_lmi(
                    model,
                    result.lam,
                    J,
                    result.P,
                    result.W,
                    result.U,
                    result.a,
                    result.b,
                    result.gamma,
                )
            ).max()
        )
        for J in result.vertices
    )
    performance_min = float(
        np.linalg.eigvalsh(
            performance_lmi(
                model, result.lam, result.P, result.gamma, result.mu_w, result.mu_v
            )
        ).min()
    )
    checks = {
        "stability LMIs not negative definite": worst_stability <= -margin / 2,
        "performance LMI not positive definite": performance_min >= margin / 2,
        "P not positive definite": float(np.linalg.eigvalsh(result.P).min()) > 0.0,
        "gain equation P L = W violated": float(
            np.max(np.abs(result.P @ result.L - result.W))
        )
        <= 1e-6 * (1.0 + float(np.max(np.abs(result.W)))),
    }
    failed = [reason for reason, ok in checks.items() if not ok]
    if failed:
        raise SynthesisError(
            "certificate rejected: "
            + "; ".join(failed)
            + f" (stability eig max {worst_stability:.3e}, "
            f"performance eig min {performance_min:.3e})"
        )
    return SynthesisResult(
        **{
            **result.__dict__,
            "stability_eig_max": worst_stability,
            "performance_eig_min": performance_min,
        }
    )


def synthesize(
    model: SystemModel, bounds: UncertaintyBounds, config: SynthesisConfig
) -> SynthesisResult:
    """Solve the observer design SDP and return a revalidated certificate.

    With config.lambda_grid set, every grid point is solved and the feasible
    result with the smallest attenuation level mu wins; infeasible grid
    points are skipped unless all of them fail.
    """
    if bounds.x0_center.shape[0] != model.n_x:
        raise ValueError("uncertainty bounds dimensioned for a different state size")
    if config.lambda_grid is None:
        return _solve_fixed_lambda(model, config, config.lam)
    best: SynthesisResult | None = None
    errors: list[str] = []
    for lam in config.lambda_grid:
        try:
            candidate = _solve_fixed_lambda(model, config, lam)
        except SynthesisError as exc:
            errors.append(f"lambda={lam}: {exc}")
            continue
        if best is None or candidate.mu < best.mu:
            best = candidate
    if best is None:
        raise InfeasibleError(
            "synthesis infeasible for every lambda in the grid:\n" + "\n".join(errors),
            family="stability",
        )
    return best


def initial_error_energy(
    result: SynthesisResult, bounds: UncertaintyBounds, mode: str = "radius"
) -> float:
    """Initial error energy e0' P e0 entering the peak bound schedule.

    mode="radius" evaluates the quadratic form at the signed radius vector
    x0_radius, which reproduces published peak values for this design family.
    mode="vertex-max" takes the worst case over the whole initial error box
    [-x0_radius, x0_radius] (exact vertex enumeration up to dimension 12,
    an eigenvalue bound beyond), which is the conservative guarantee.
    """
    radius = bounds.x0_radius
    if mode == "radius":
        return float(radius @ result.P @ radius)
    if mode == "vertex-max":
        n = radius.shape[0]
        if n <= 12:
            return max(
                float((signs * radius) @ result.P @ (signs * radius))
                for signs in itertools.product((-1.0, 1.0), repeat=n)
            )
        return float(np.linalg.eigvalsh(result.P).max() * (radius @ radius))
    raise ValueError(f"unknown initial-energy mode {mode!r}")


def peak_bound_schedule(
    result: SynthesisResult,
    bounds: UncertaintyBounds,
    k_max: int,
    v0_mode: str = "radius",
) -> np.ndarray:
    """Worst-case error radius at steps 0..k_max.

    radius_k = sqrt(mu * (lam (1-lam)^k V0 + mu_w w_bar'w_bar
                          + mu_v v_bar'v_bar)),
    a monotonically nonincreasing sequence decaying to the noise floor.
    """
    if k_max < 0:
        raise ValueError("k_max must be nonnegative")
    v0 = initial_error_energy(result, bounds, mode=v0_mode)
    noise_floor = result.mu_w * float(bounds.w_bar @ bounds.w_bar) + result.mu_v * float(
        bounds.v_bar @ bounds.v_bar
    )
    steps = np.arange(k_max + 1)
    decay = result.lam * (1.0 - result.lam) ** steps * v0
    return np.sqrt(result.mu * (decay + noise_floor))


def bounded_error_interval(x_hat, radius: float) -> Box:
    """Box x_hat +- radius, every component widened by the same scalar."""
    if radius < 0.0:
        raise ValueError("radius must be nonnegative")
    x_hat = np.atleast_1d(np.asarray(x_hat, dtype=float))
    return Box(x_hat - radius, x_hat + radius)


def synthesis_report(result: SynthesisResult) -> dict:
    """JSON-ready summary of a synthesis run."""
    return {
        "lambda": result.lam,
        "vertex_count": result.vertex_count,
        "solver_status": result.solver_status,
        "mu_w": result.mu_w,
        "mu_v": result.mu_v,
        "mu": result.mu,
        "gain": result.L.tolist(),
        "stability_eig_max": result.stability_eig_max,
        "performance_eig_min": result.performance_eig_min,
    }
