"""Approximating problems, the n-sequence driver and the companion solves.

For fixed ``n`` the discrete problem

    S u = m * ( T_n(f) / (u + 1/n)^gamma + mu_n )

is the Euler-Lagrange equation of a strictly convex energy, so it has a
unique nonnegative solution.  Two outer iterations are provided:

* ``picard``: the damped fixed-point map ``v -> G(v)`` where ``G`` solves the
  linear (or frozen-source Leray-Lions) problem with the singular term
  evaluated at ``v``; the damping is halved whenever the increment grows.
* ``newton``: Newton's method on the same equation with a backtracking line
  search on the energy.  It reaches the fixed point of the Picard map to
  machine precision in a handful of steps and is the default.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .grid import Grid
from .measure import RadonMeasure, ScalarField, mollify, truncate_datum, Density
from .operators import (
    DiscreteOperator,
    LerayLionsOperator,
    LerayLionsSpec,
    MatrixField,
    assemble_linear,
)

log = logging.getLogger(__name__)

__all__ = [
    "SolveParams",
    "ProblemSpec",
    "SolutionSequence",
    "SolverError",
    "solve_linear",
    "solve_approximating",
    "solve_sequence",
    "solve_pure_singular",
    "solve_measure_only",
    "sub_supersolution_iterate",
    "solve_p_laplacian_approximating",
    "solve_p_laplacian_sequence",
    "datum_field",
]

NEGATIVE_SLACK = 1e-12


class SolverError(RuntimeError):
    """Raised when an iteration fails to converge or loses positivity."""


@dataclass(frozen=True)
class SolveParams:
    """Iteration controls.

    ``tol`` is the relative sup-norm change between outer iterates,
    ``sequence_tol`` the relative L1 change between successive ``u_n`` used
    to flag a stabilized sequence.
    """

    damping: float = 0.7
    tol: float = 1e-10
    max_iter: int = 500
    linear_tol: float = 1e-10
    schedule: tuple = (4, 16, 64, 256, 1024)
    method: str = "newton"
    sequence_tol: float = 1e-3
    kernel: str = "tent"

    def __post_init__(self):
        if not 0 < self.damping <= 1:
            raise ValueError("damping must lie in (0, 1]")
        if not (self.tol > 0 and self.linear_tol > 0 and self.sequence_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.method not in ("newton", "picard"):
            raise ValueError(f"unknown method {self.method!r}")
        sched = tuple(self.schedule)
        if not sched or any(b <= a for a, b in zip(sched, sched[1:])):
            raise ValueError("n-schedule must be nonempty and strictly increasing")
        if sched[0] < 1:
            raise ValueError("schedule entries must be >= 1")
        object.__setattr__(self, "schedule", sched)


def datum_field(grid: Grid, f) -> ScalarField:
    """Coerce a constant, ``Density`` or array into a nonnegative datum field."""
    if isinstance(f, ScalarField):
        if not f.grid.same_as(grid):
            raise ValueError("datum lives on a different grid")
        vals = f.values
    elif isinstance(f, Density):
        vals = f.evaluate(grid)
    elif np.isscalar(f):
        vals = np.full(grid.n_nodes, float(f))
    else:
        vals = np.asarray(f, dtype=float)
    vals = np.where(grid.interior, vals, 0.0)
    if np.any(vals < 0):
        raise ValueError("datum f must be nonnegative")
    return ScalarField(grid, vals, "datum")


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    """``-div(A grad u) = f / u^gamma + mu`` (or the Leray-Lions variant).

    ``n`` may be ``math.inf``: then ``f`` is not truncated, the shift
    ``1/n`` vanishes and atoms are spread over the smallest kernel.
    """

    grid: Grid
    f: object
    mu: RadonMeasure
    gamma: float
    n: float = 1
    A: MatrixField | None = None
    leray_lions: LerayLionsSpec | None = None

    def __post_init__(self):
        object.__setattr__(self, "f", datum_field(self.grid, self.f))
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")
        if not self.n >= 1:
            raise ValueError("regularization index n must be >= 1")
        if self.A is not None and self.leray_lions is not None:
            raise ValueError("give either a matrix field or a Leray-Lions flux, not both")
        if not np.any(self.f.values > 0) and self.mu.is_zero():
            raise ValueError("f and mu cannot both vanish identically")

    def with_n(self, n) -> "ProblemSpec":
        return replace(self, n=n)

    def with_mu(self, mu: RadonMeasure) -> "ProblemSpec":
        return replace(self, mu=mu)

    def with_f(self, f) -> "ProblemSpec":
        return replace(self, f=f)

    @property
    def shift(self) -> float:
        return 0.0 if math.isinf(self.n) else 1.0 / self.n

    def is_model_case(self) -> bool:
        if self.leray_lions is not None:
            return False
        if self.A is None:
            return True
        ident = MatrixField.identity(self.grid).values
        return bool(np.allclose(self.A.values, ident, rtol=0, atol=1e-14))


@dataclass
class SequenceEntry:
    n: float
    u: ScalarField
    diagnostics: dict


@dataclass
class SolutionSequence:
    """Solutions along an n-schedule; ``limit`` is the last element."""

    entries: list = field(default_factory=list)
    l1_differences: list = field(default_factory=list)
    converged: bool = False

    @property
    def limit(self) -> ScalarField:
        return self.entries[-1].u

    @property
    def ns(self) -> list:
        return [e.n for e in self.entries]

    @property
    def fields(self) -> list:
        return [e.u for e in self.entries]

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)


# ---------------------------------------------------------------------------
# linear solves


def solve_linear(op: DiscreteOperator, rhs) -> ScalarField:
    """Solve ``-div(A grad u) = rhs`` with zero Dirichlet data.

    A sparse LU factorization of the interior matrix is computed once per
    operator and reused.  The relative residual is checked against 1e-10.
    """
    rhs_vals = np.asarray(rhs.values if isinstance(rhs, ScalarField) else rhs, dtype=float)
    if not np.all(np.isfinite(rhs_vals)):
        raise ValueError("right-hand side must be finite")
    u = op.solve(rhs_vals)
    _check_linear_residual(op, u, rhs_vals)
    return ScalarField(op.grid, u, "solution")


def _check_linear_residual(op, u, rhs, tol=1e-10):
    idx = op.grid.interior_index
    b = op.mass * rhs[idx]
    r = op.matrix @ u[idx] - b
    scale = max(np.linalg.norm(b), np.linalg.norm(op.matrix @ u[idx]), 1e-300)
    if np.linalg.norm(r) > tol * scale:
        raise SolverError(f"linear solve residual {np.linalg.norm(r) / scale:.2e} above {tol:g}")


# ---------------------------------------------------------------------------
# the singular problem for fixed n


class _Problem:
    """Discrete pieces of one approximating problem."""

    def __init__(self, spec: ProblemSpec, params: SolveParams, op=None):
        self.spec = spec
        self.params = params
        grid = spec.grid
        self.grid = grid
        self.idx = grid.interior_index
        if op is not None:
            self.op = op
        elif spec.leray_lions is not None:
            self.op = LerayLionsOperator(grid, spec.leray_lions)
        else:
            self.op = assemble_linear(grid, spec.A)
        self.linear = isinstance(self.op, DiscreteOperator)
        self.m = grid.measure[self.idx]
        self.f = truncate_datum(spec.f, spec.n).values[self.idx]
        if spec.mu.is_zero():
            self.mu = np.zeros(self.idx.size)
        else:
            self.mu = mollify(spec.mu, spec.n, grid, params.kernel).values[self.idx]
        self.sigma = spec.shift
        self.gamma = spec.gamma
        self.active = self.f > 0

    # singular term and its primitive, on interior values
    def source(self, u):
        base = np.maximum(u, 0.0) + self.sigma
        out = np.zeros_like(u)
        a = self.active
        out[a] = self.f[a] / base[a] ** self.gamma
        return out + self.mu

    def dsource(self, u):
        base = u + self.sigma
        out = np.zeros_like(u)
        a = self.active
        out[a] = self.gamma * self.f[a] / base[a] ** (self.gamma + 1)
        return out

    def primitive(self, u):
        base = u[self.active] + self.sigma
        g = self.gamma
        if g == 1:
            prim = np.log(base)
        else:
            prim = base ** (1 - g) / (1 - g)
        return float(np.sum(self.m[self.active] * self.f[self.active] * prim) + np.sum(self.m * self.mu * u))

    def full(self, x):
        u = np.zeros(self.grid.n_nodes)
        u[self.idx] = x
        return u

    # principal part restricted to interior unknowns
    def op_energy(self, x):
        if self.linear:
            return 0.5 * float(x @ (self.op.matrix @ x))
        return self.op.energy(self.full(x))

    def op_gradient(self, x):
        if self.linear:
            return self.op.matrix @ x
        return self.op.gradient(self.full(x))[self.idx]

    def op_hessian(self, x):
        return self.op.matrix if self.linear else self.op.jacobian(self.full(x))

    def residual(self, x):
        """``S x - m * source(x)`` on interior nodes."""
        return self.op_gradient(x) - self.m * self.source(x)

    def relative_residual(self, x) -> float:
        b = self.m * self.source(x)
        return float(np.abs(self.residual(x)).sum() / max(np.abs(b).sum(), 1e-300))

    def feasible(self, x):
        return np.all(x[self.active] + self.sigma > 0)

    # frozen-source solve: the map G
    def frozen_solve(self, b, guess=None):
        """Solve the principal part against the nodal source density ``b``."""
        if self.linear:
            return self._linear_solve(b)
        return _leray_lions_solve(self, b, guess)

    def _linear_solve(self, b):
        return self.op._factor.solve(self.m * b)

    def initial_guess(self):
        b = self.f + self.mu
        return np.maximum(self.frozen_solve(b), 0.0)


def _leray_lions_solve(prob: _Problem, b, guess=None, tol=1e-12, max_iter=100):
    """Damped Newton for ``-div a(grad w) = b`` (energy minimization)."""
    mb = prob.m * b
    if prob.grid.is_radial:
        x = _radial_sweep(prob, b)
    else:
        x = np.zeros(prob.idx.size) if guess is None else guess.copy()

    def energy(y):
        return prob.op_energy(y) - float(mb @ y)

    E = energy(x)
    for it in range(max_iter):
        F = prob.op_gradient(x) - mb
        H = prob.op_hessian(x)
        d = spla.spsolve(H.tocsc(), -F)
        slope = float(F @ d)
        t = 1.0
        for _ in range(60):
            xn = x + t * d
            En = energy(xn)
            if En <= E + 1e-4 * t * slope + 1e-13 * abs(E):
                break
            t *= 0.5
        x, E = xn, En
        if np.max(np.abs(t * d)) <= tol * max(np.max(np.abs(x)), 1e-300):
            return x
    raise SolverError(f"Leray-Lions Newton stagnated after {max_iter} iterations")


def _radial_sweep(prob: _Problem, b):
    """Exact flux integration of the radial frozen-source problem.

    On radial grids the discrete equation fixes every face flux as minus the
    source mass inside that face; the face gradients follow by inverting the
    scalar flux law, and ``u`` by summation from the Dirichlet node inward.
    """
    op = prob.op
    spec = op.spec
    h = prob.grid.h
    q = -np.cumsum(prob.m * b)  # face i+1/2 lies between nodes i and i+1
    y = q * h / op.cell_weight
    p = spec.p
    s = np.sign(y) * np.abs(y) ** (1.0 / (p - 1))
    if p != 2:
        for _ in range(50):
            g2 = s * s + spec.eps**2
            phi = g2 ** (0.5 * (p - 2)) * s
            dphi = g2 ** (0.5 * (p - 4)) * ((p - 1) * s * s + spec.eps**2)
            step = (phi - y) / dphi
            s = s - step
            if np.all(np.abs(step) <= 1e-15 * (np.abs(s) + 1e-300)):
                break
    u = np.zeros(prob.grid.n_nodes)
    u[:-1] = -h * np.cumsum(s[::-1])[::-1]
    return u[prob.idx]


def _newton(prob: _Problem, x0, params: SolveParams):
    """Newton on ``S x = m * source(x)`` with an energy line search."""
    x = x0.copy()
    if not prob.feasible(x):
        x = np.maximum(x, 0.0) + (1e-12 if prob.sigma == 0 else 0.0)

    def energy(y):
        return prob.op_energy(y) - prob.primitive(y)

    E = energy(x)
    for it in range(1, params.max_iter + 1):
        F = prob.residual(x)
        H = (prob.op_hessian(x) + sp.diags(prob.m * prob.dsource(x))).tocsc()
        d = spla.splu(H).solve(-F)
        slope = float(F @ d)
        t = 1.0
        neg = (d < 0) & prob.active
        if np.any(neg):
            room = (x[neg] + prob.sigma) / -d[neg]
            t = min(1.0, 0.95 * float(room.min()))
        for _ in range(60):
            xn = x + t * d
            En = energy(xn) if prob.feasible(xn) else np.inf
            if En <= E + 1e-4 * t * slope + 1e-13 * abs(E):
                break
            t *= 0.5
        else:
            raise SolverError("Newton line search failed")
        step = np.max(np.abs(xn - x))
        x, E = xn, En
        if step <= params.tol * max(np.max(np.abs(x)), 1e-300):
            return x, {"iterations": it, "damping": t}
    raise SolverError(f"Newton did not converge in {params.max_iter} iterations")


def _picard(prob: _Problem, x0, params: SolveParams):
    """Damped fixed-point iteration ``x <- (1-theta) x + theta G(x)``."""
    x = x0.copy()
    theta = params.damping
    prev = np.inf
    for it in range(1, params.max_iter + 1):
        gx = prob.frozen_solve(prob.source(np.abs(x)), x)
        inc = gx - x
        size = np.max(np.abs(inc))
        if size > prev and theta > 1e-4:
            theta *= 0.5
        prev = size
        x = x + theta * inc
        if theta * size <= params.tol * max(np.max(np.abs(x)), 1e-300):
            return x, {"iterations": it, "damping": theta}
    raise SolverError(
        f"fixed-point iteration did not converge in {params.max_iter} iterations "
        f"(last increment {prev:.3e}, damping {theta:.3g})"
    )


def _finish(prob: _Problem, x, diag, params) -> ScalarField:
    scale = max(1.0, float(np.max(np.abs(x))))
    if x.min(initial=0.0) < -NEGATIVE_SLACK * scale:
        raise SolverError(f"solution has negative value {x.min():.3e}; maximum principle broken")
    x = np.maximum(x, 0.0)
    diag = dict(diag)
    diag["residual"] = prob.relative_residual(x)
    diag["method"] = params.method
    meta = {"n": prob.spec.n, "gamma": prob.spec.gamma, **diag}
    return ScalarField(prob.grid, prob.full(x), "solution", meta)


def solve_approximating(spec: ProblemSpec, params: SolveParams = SolveParams(), initial=None,
                        _op=None) -> ScalarField:
    """Solve the approximating problem for the fixed index ``spec.n``.

    Returns the nonnegative discrete solution; ``meta`` records the
    iteration count and the relative L1 residual of the discrete equation.
    ``initial`` (a field or nodal array) warm-starts the iteration.
    """
    prob = _Problem(spec, params, _op)
    if initial is not None:
        x0 = np.asarray(initial.values if isinstance(initial, ScalarField) else initial, dtype=float)
        x0 = np.maximum(x0[prob.idx], 0.0)
    else:
        x0 = prob.initial_guess()
    if not np.any(prob.active):
        x = prob.frozen_solve(prob.mu)
        diag = {"iterations": 1, "damping": 1.0}
    elif params.method == "newton":
        x, diag = _newton(prob, x0, params)
    else:
        x, diag = _picard(prob, x0, params)
    return _finish(prob, x, diag, params)


def solve_sequence(spec: ProblemSpec, params: SolveParams = SolveParams()) -> SolutionSequence:
    """Solve along ``params.schedule`` with warm starts.

    The sequence is flagged ``converged`` when the last relative L1 change
    between successive solutions drops below ``params.sequence_tol``.
    """
    seq = SolutionSequence()
    op = _shared_operator(spec)
    prev = None
    for n in params.schedule:
        u = solve_approximating(spec.with_n(n), params, initial=prev, _op=op)
        if prev is not None:
            norm = max(u.integral(), 1e-300)
            seq.l1_differences.append(spec.grid.integrate(np.abs(u.values - prev.values)) / norm)
        seq.entries.append(SequenceEntry(n, u, dict(u.meta)))
        prev = u
    seq.converged = bool(seq.l1_differences) and seq.l1_differences[-1] < params.sequence_tol
    if not seq.converged and len(seq) > 1:
        log.info("sequence not stabilized: last relative L1 change %.3e", seq.l1_differences[-1])
    return seq


def _shared_operator(spec):
    if spec.leray_lions is not None:
        return LerayLionsOperator(spec.grid, spec.leray_lions)
    return assemble_linear(spec.grid, spec.A)


def solve_pure_singular(spec: ProblemSpec, params: SolveParams = SolveParams(), initial=None,
                        _op=None) -> ScalarField:
    """The companion problem with the measure removed (``mu_n = 0``)."""
    if not np.any(spec.f.values > 0):
        raise ValueError("pure singular problem needs a nonzero datum f")
    u = solve_approximating(spec.with_mu(RadonMeasure.zero()), params, initial, _op)
    return u.with_values(u.values, companion="pure-singular")


def solve_measure_only(grid: Grid, A: MatrixField | None, mu: RadonMeasure, params: SolveParams = SolveParams(),
                       n: float = math.inf, _op=None) -> ScalarField:
    """Linear companion ``-div(A grad w) = mu_n``."""
    op = _op if _op is not None else assemble_linear(grid, A)
    mu_n = mollify(mu, n, grid, params.kernel)
    w = solve_linear(op, mu_n)
    return ScalarField(grid, w.values, "solution", {"n": n, "companion": "measure-only"})


def sub_supersolution_iterate(spec: ProblemSpec, params: SolveParams = SolveParams(), start: str = "sub",
                              tol: float = 1e-8) -> ScalarField:
    """Monotone-bracket iteration for the model case ``A = I``, ``gamma < 1``.

    The subsolution is the solution ``v`` of the unregularized pure singular
    problem and the supersolution is ``v + w`` with ``w`` the measure-only
    solution.  The iteration ``u <- solve(f * clamp(u, v, v + w)^-gamma + mu_n)``
    is damped like the Picard map and started from ``v`` (``start="sub"``) or
    ``v + w`` (``start="super"``).
    """
    if not spec.gamma < 1:
        raise ValueError("the bracket iteration needs gamma < 1")
    if not spec.is_model_case():
        raise ValueError("the bracket iteration is only available for A = I")
    f = spec.f.values
    if np.any(f[spec.grid.interior] <= 0):
        raise ValueError("the bracket iteration needs f > 0 at every interior node")
    if start not in ("sub", "super"):
        raise ValueError("start must be 'sub' or 'super'")
    grid = spec.grid
    op = assemble_linear(grid)
    v_reg = solve_pure_singular(spec, params, _op=op)
    v = solve_pure_singular(spec.with_n(math.inf), params, initial=v_reg, _op=op)
    if spec.mu.is_zero():
        w = ScalarField(grid, grid.zeros(), "solution")
        mu_n = grid.zeros()
    else:
        mu_n = mollify(spec.mu, spec.n, grid, params.kernel).values
        w = solve_linear(op, mu_n)
    lower, upper = v.values, v.values + w.values
    idx = grid.interior_index
    lo, hi = lower[idx], upper[idx]
    fi, mi = f[idx], mu_n[idx]

    def G(x):
        return op._factor.solve(op.mass * (fi * np.clip(x, lo, hi) ** -spec.gamma + mi))

    x = (lo if start == "sub" else hi).copy()
    theta, prev = params.damping, np.inf
    for it in range(1, params.max_iter + 1):
        inc = G(x) - x
        size = np.max(np.abs(inc))
        if size > prev and theta > 1e-4:
            theta *= 0.5
        prev = size
        x = x + theta * inc
        if theta * size <= params.tol * max(np.max(np.abs(x)), 1e-300):
            break
    else:
        raise SolverError("bracket iteration did not converge")
    scale = max(1.0, float(hi.max()))
    gap = min(float(np.min(x - lo)), float(np.min(hi - x)))
    if gap < -tol * scale:
        raise SolverError(f"sandwich violated by {-gap:.3e}; discretization too coarse")
    u = np.zeros(grid.n_nodes)
    u[idx] = x
    meta = {"n": spec.n, "gamma": spec.gamma, "iterations": it, "start": start,
            "sandwich_gap": gap}
    out = ScalarField(grid, u, "solution", meta)
    return out


def _require_leray_lions(spec):
    if spec.leray_lions is None:
        raise ValueError("spec has no Leray-Lions flux")
    spec.leray_lions.check_exponent(spec.grid.dim)


def solve_p_laplacian_approximating(spec: ProblemSpec, params: SolveParams = SolveParams(),
                                    initial=None) -> ScalarField:
    """Approximating problem with a Leray-Lions principal part."""
    _require_leray_lions(spec)
    return solve_approximating(spec, params, initial)


def solve_p_laplacian_sequence(spec: ProblemSpec, params: SolveParams = SolveParams()) -> SolutionSequence:
    _require_leray_lions(spec)
    return solve_sequence(spec, params)
