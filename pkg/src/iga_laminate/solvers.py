"""Static and transient solution of the discretized plate equations.

Static equilibrium is reached by Newton-Raphson (tangent stiffness) or by
Picard iteration (secant stiffness), one load level at a time, with
automatic halving of a level that fails to converge. Transient problems
use Newmark's scheme with the same inner iterations on the effective
system ``K + M / (beta dt^2)``.

Convergence is measured on the relative increment
``||q_{i+1} - q_i|| / ||q_i||``.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

logger = logging.getLogger(__name__)


class NonConvergenceError(RuntimeError):
    def __init__(self, msg, iterations=None, state=None):
        super().__init__(msg)
        self.iterations = iterations
        self.state = state


class IllPosedError(RuntimeError):
    """Singular (constrained) stiffness."""


@dataclass
class IterationConfig:
    method: str = "newton"
    tol: float = 0.01
    max_iter: int = 50
    n_load_steps: int = 1
    max_halvings: int = 6
    relaxation: float | str = "auto"

    def __post_init__(self):
        if self.relaxation != "auto" and not (0 < float(self.relaxation) <= 1):
            raise ValueError("relaxation must be in (0, 1] or 'auto'")
        if self.method not in ("newton", "picard"):
            raise ValueError("method must be 'newton' or 'picard'")
        if self.tol <= 0 or self.max_iter < 1 or self.n_load_steps < 1:
            raise ValueError("invalid iteration settings")


@dataclass
class NewmarkConfig:
    dt: float
    t_end: float
    beta: float = 0.25
    gamma: float = 0.5

    def __post_init__(self):
        if self.dt <= 0 or self.t_end <= 0:
            raise ValueError("dt and t_end must be positive")
        if not (0 < self.beta <= 0.5 and 0.5 <= self.gamma <= 1.0):
            raise ValueError("Newmark parameters out of range")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))


class LinearSystem:
    """Plain matrix system ``M q'' + K q = F(t)`` (no constraints).

    Useful for small verification problems that bypass the plate model.
    """

    nonlinear = False

    def __init__(self, K, M, F, history=None):
        self.K = sp.csr_matrix(np.atleast_2d(K))
        self.M = sp.csr_matrix(np.atleast_2d(M))
        self.F = np.atleast_1d(np.asarray(F, dtype=float))
        self.history = history or (lambda t: 1.0)
        self.ndof = self.F.size
        self.free = np.ones(self.ndof, bool)

    def linear_stiffness(self):
        return self.K

    tangent = secant = lambda self, q: self.K

    def internal_force(self, q):
        return self.K @ q

    def mass(self):
        return self.M

    def external_force(self, t=None, scale=1.0):
        F = self.F * scale
        return F if t is None else F * self.history(t)

    def constrain(self, K, r=None):
        return K if r is None else (K, r)


def _solve(system, K, r) -> np.ndarray:
    Kc, rc = system.constrain(K, r)
    with np.errstate(all="ignore"), warnings.catch_warnings():
        warnings.simplefilter("ignore", spla.MatrixRankWarning)
        x = spla.spsolve(sp.csc_matrix(Kc), rc)
    if not np.all(np.isfinite(x)):
        raise IllPosedError("singular system matrix")
    return x


def _rel_change(new: np.ndarray, old: np.ndarray) -> float:
    d = np.linalg.norm(new - old)
    ref = np.linalg.norm(old)
    if ref == 0.0:
        ref = np.linalg.norm(new)
    return 0.0 if ref == 0.0 else d / ref


def residual(system, q: np.ndarray, F: np.ndarray) -> np.ndarray:
    """Out-of-balance force on free dofs."""
    r = system.internal_force(q) - F
    return r * system.free


def solve_linear_static(system, F: np.ndarray | None = None) -> np.ndarray:
    F = system.external_force() if F is None else F
    K = system.linear_stiffness()
    q = _solve(system, K, F)
    res = np.linalg.norm((K @ q - F) * system.free)
    scale = np.linalg.norm(F * system.free)
    if scale > 0 and res > 1e-8 * scale:
        raise IllPosedError("linear solve residual %.3g too large" % (res / scale))
    return q


def newton_step(system, q: np.ndarray, F: np.ndarray):
    """One Newton update; returns ``(dq, phi)`` with ``phi`` at the old state."""
    phi = residual(system, q, F)
    if not np.any(phi):
        return np.zeros_like(q), phi
    dq = _solve(system, system.tangent(q), -phi)
    return dq, phi


def picard_step(system, q: np.ndarray, F: np.ndarray) -> np.ndarray:
    """Direct iteration: ``K(q) q_new = F`` with the secant stiffness."""
    return _solve(system, system.secant(q), F)


@dataclass
class StaticResult:
    q: np.ndarray
    iterations: int
    errors: list = field(default_factory=list)


class _Relaxation:
    """Weighted averaging of successive Picard iterates.

    ``"auto"`` starts undamped and halves the weight whenever the increment
    grows, which suppresses the period-two oscillation that direct
    iteration shows on stiffening plates.
    """

    def __init__(self, setting, floor=0.125):
        self.auto = setting == "auto"
        self.omega = 1.0 if self.auto else float(setting)
        self.floor = floor

    def blend(self, q_old, q_new, err, errors):
        if self.auto and errors and err > errors[-1]:
            self.omega = max(self.floor, 0.5 * self.omega)
        if self.omega == 1.0:
            return q_new
        return q_old + self.omega * (q_new - q_old)


def solve_static(system, F: np.ndarray, q0: np.ndarray | None = None,
                 cfg: IterationConfig | None = None) -> StaticResult:
    """Iterate to equilibrium ``f_int(q) = F`` from ``q0``."""
    cfg = cfg or IterationConfig()
    q = np.zeros(system.ndof) if q0 is None else np.array(q0, dtype=float)
    errors = []
    growth = 0
    relax = _Relaxation(cfg.relaxation)
    for it in range(1, cfg.max_iter + 1):
        if cfg.method == "newton":
            dq, _ = newton_step(system, q, F)
            q_new = q + dq
        else:
            q_new = picard_step(system, q, F)
        err = _rel_change(q_new, q)
        if not np.isfinite(err):
            raise NonConvergenceError("iteration produced non-finite values", it, q)
        growth = growth + 1 if errors and err > errors[-1] else 0
        if cfg.method == "picard":
            q_new = relax.blend(q, q_new, err, errors)
        errors.append(err)
        q = q_new
        if err < cfg.tol:
            return StaticResult(q, it, errors)
        if growth >= 5:
            raise NonConvergenceError("iteration diverging", it, q)
    raise NonConvergenceError("no convergence in %d iterations" % cfg.max_iter, cfg.max_iter, q)


@dataclass
class PathPoint:
    level: float
    q: np.ndarray
    iterations: int


@dataclass
class EquilibriumPath:
    points: list = field(default_factory=list)
    complete: bool = True
    message: str = ""

    @property
    def levels(self) -> np.ndarray:
        return np.array([p.level for p in self.points])

    def __len__(self):
        return len(self.points)


def _advance(system, F_unit, lo, hi, q, cfg, depth):
    """Solve at level ``hi`` from a converged state at ``lo``; halve on failure."""
    try:
        res = solve_static(system, hi * F_unit, q, cfg)
        return res.q, res.iterations
    except (NonConvergenceError, IllPosedError) as exc:
        if depth >= cfg.max_halvings:
            raise NonConvergenceError("level %g failed after %d halvings: %s" % (hi, depth, exc))
        mid = 0.5 * (lo + hi)
        logger.info("halving load increment %g -> %g", hi, mid)
        q_mid, n1 = _advance(system, F_unit, lo, mid, q, cfg, depth + 1)
        q_hi, n2 = _advance(system, F_unit, mid, hi, q_mid, cfg, depth + 1)
        return q_hi, n1 + n2


def load_sweep(system, levels, cfg: IterationConfig | None = None,
               q0: np.ndarray | None = None) -> EquilibriumPath:
    """Equilibrium states for increasing multiples of the system load.

    Each level starts from the previous converged state. A level that does
    not converge truncates the path (``complete=False``).
    """
    cfg = cfg or IterationConfig()
    levels = [float(x) for x in levels]
    if any(b < a for a, b in zip(levels[:-1], levels[1:])):
        raise ValueError("load levels must be non-decreasing")
    F_unit = system.external_force()
    q = np.zeros(system.ndof) if q0 is None else np.array(q0, dtype=float)
    prev = 0.0
    path = EquilibriumPath()
    for level in levels:
        try:
            total = 0
            sub = np.linspace(prev, level, cfg.n_load_steps + 1)[1:]
            lo = prev
            for s in sub:
                q, n = _advance(system, F_unit, lo, s, q, cfg, 0)
                total += n
                lo = s
        except NonConvergenceError as exc:
            path.complete = False
            path.message = str(exc)
            logger.warning("load sweep truncated at level %g: %s", level, exc)
            break
        path.points.append(PathPoint(level, q.copy(), total))
        prev = level
    return path


# --- transient ------------------------------------------------------------

@dataclass
class TransientResult:
    times: np.ndarray
    q: np.ndarray          # (n_steps + 1, ndof)
    v: np.ndarray
    a: np.ndarray
    iterations: np.ndarray

    def dof_history(self, dof: int) -> np.ndarray:
        return self.q[:, dof]


def newmark_transient(system, nm: NewmarkConfig, it: IterationConfig | None = None,
                      q0=None, v0=None, a0=None) -> TransientResult:
    """March ``M q'' + f_int(q) = F(t)`` with Newmark's method.

    Displacement and velocity start at zero unless ``q0``/``v0`` are given;
    the default ``a0`` satisfies the equation of motion at ``t = 0``, so it
    is zero for a load that vanishes there (a sine pulse). The inner loop
    uses Picard (secant) or Newton (tangent) iterations; linear systems are
    factorized once and solved directly. On inner-loop failure the
    raised error carries the history up to the last converged step.
    """
    it = it or IterationConfig(method="picard")
    n = system.ndof
    q = np.zeros(n) if q0 is None else np.array(q0, dtype=float)
    v = np.zeros(n) if v0 is None else np.array(v0, dtype=float)
    b, g, dt = nm.beta, nm.gamma, nm.dt
    c0, c1, c2 = 1.0 / (b * dt * dt), 1.0 / (b * dt), 0.5 / b - 1.0
    M = system.mass()
    if a0 is None:
        r0 = (system.external_force(0.0) - system.internal_force(q)) * system.free
        a = _solve(system, M, r0) if np.any(r0) else np.zeros(n)
    else:
        a = np.array(a0, dtype=float)
    steps = nm.n_steps

    Q = np.empty((steps + 1, n))
    V = np.empty_like(Q)
    A = np.empty_like(Q)
    iters = np.zeros(steps + 1, dtype=int)
    times = np.arange(steps + 1) * dt
    Q[0], V[0], A[0] = q, v, a

    lu = None
    if not system.nonlinear:
        Kc, _ = system.constrain(system.linear_stiffness() + c0 * M, np.zeros(n))
        lu = spla.splu(sp.csc_matrix(Kc))

    for m in range(1, steps + 1):
        t = times[m]
        Fhat = system.external_force(t) + M @ (c0 * q + c1 * v + c2 * a)
        if lu is not None:
            _, rhs = system.constrain(M, Fhat)
            q_new = lu.solve(rhs)
            count = 1
        else:
            try:
                q_new, count = _inner_iterations(system, M, c0, Fhat, q, it, m)
            except NonConvergenceError as exc:
                partial = TransientResult(times[:m], Q[:m], V[:m], A[:m], iters[:m])
                raise NonConvergenceError(str(exc), exc.iterations, partial) from exc
        a_new = c0 * (q_new - q) - c1 * v - c2 * a
        v = v + dt * ((1.0 - g) * a + g * a_new)
        q, a = q_new, a_new
        Q[m], V[m], A[m] = q, v, a
        iters[m] = count
    return TransientResult(times, Q, V, A, iters)


def _inner_iterations(system, M, c0, Fhat, q_prev, it, step):
    q = q_prev.copy()
    errors = []
    growth = 0
    relax = _Relaxation(it.relaxation)
    for i in range(1, it.max_iter + 1):
        if it.method == "picard":
            q_new = _solve(system, system.secant(q) + c0 * M, Fhat)
        else:
            phi = (system.internal_force(q) + c0 * (M @ q) - Fhat) * system.free
            q_new = q + _solve(system, system.tangent(q) + c0 * M, -phi)
        err = _rel_change(q_new, q)
        growth = growth + 1 if errors and err > errors[-1] else 0
        if it.method == "picard":
            q_new = relax.blend(q, q_new, err, errors)
        errors.append(err)
        q = q_new
        if err < it.tol:
            return q, i
        if growth >= 5:
            break
    raise NonConvergenceError("inner iterations failed at step %d" % step, i, q)


def fundamental_period(system) -> float:
    """Period of the lowest linear mode on the free dofs."""
    free = system.free
    K = sp.csc_matrix(system.linear_stiffness())[free][:, free]
    M = sp.csc_matrix(system.mass())[free][:, free]
    if K.shape[0] < 3:
        lam = scipy.linalg.eigh(K.toarray(), M.toarray(), eigvals_only=True)[0]
    else:
        lam = spla.eigsh(K, k=1, M=M, sigma=0.0, which="LM", return_eigenvectors=False)[0]
    return float(2.0 * np.pi / np.sqrt(lam))
