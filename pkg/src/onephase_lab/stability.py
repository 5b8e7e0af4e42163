"""Second-variation forms, spectral probes, and the decay-exponent window.

The second variation of the layer energy at a solution u is
Q(xi) = int |grad xi|^2 + beta'(u)/2 xi^2 (with the cylindrical weight
s^(n-2)); a solution is stable on the grid when the smallest Rayleigh
quotient of Q is nonnegative.  The radial-derivative direction u_s paired
with weighted cutoffs s^(-alpha) rho_R turns stability into the inequality
(n-2) int u_s^2 eta^2 / s^2 <= int u_s^2 |grad eta|^2, decidable window by
window in the exponent alpha.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .axisym_field import AxiField, residual_semilinear
from .errors import InvalidParameterError, NonconvergenceError
from .numerics import smoothstep_quintic, smoothstep_quintic_deriv, unit_sphere_area
from .reaction_terms import ReactionTerm

VERDICT_STABLE = "stable-on-grid"
VERDICT_UNSTABLE = "unstable-direction-found"
VERDICT_INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class StabilityProbe:
    """Parameters of the capped radial test function s^(-alpha) rho_R.

    ``rho_R`` is a quintic ramp equal to 1 inside radius R and 0 outside 2R;
    inside the cylinder s <= eps_inner the radial factor is frozen at its
    boundary value eps_inner^(-alpha) so the test function stays bounded.
    ``eps0`` is the margin used by the shrink schedule tying eps_inner to R.
    """

    alpha: float
    R: float
    eps_inner: float
    eps0: float = 0.1
    cutoff_profile: str = "quintic"

    def __post_init__(self):
        if self.alpha < 0.0:
            raise InvalidParameterError("alpha must be nonnegative")
        if not (self.eps_inner < 1.0 < self.R):
            raise InvalidParameterError("need eps_inner < 1 < R")
        if self.eps_inner <= 0.0 or self.eps0 <= 0.0:
            raise InvalidParameterError("eps_inner and eps0 must be positive")
        if self.cutoff_profile != "quintic":
            raise InvalidParameterError("only the quintic outer cutoff is implemented")


@dataclass
class SpectralReport:
    """Outcome of a spectral or test-function probe.

    For eigen-solves ``form_lhs`` is Q at the eigenvector and ``form_rhs``
    the eigenvalue times its weighted norm (equal up to round-off); for
    inequality probes they are the two sides of the tested inequality.
    """

    verdict: str
    rayleigh_min: float
    form_lhs: float
    form_rhs: float
    iterations: int
    alpha: float | None = None
    R: float | None = None
    eps_inner: float | None = None
    eigenvector: AxiField | None = None
    notes: tuple[str, ...] = ()

    def to_json_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "rayleigh_min": self.rayleigh_min,
            "alpha": self.alpha,
            "R": self.R,
            "eps_inner": self.eps_inner,
            "lhs": self.form_lhs,
            "rhs": self.form_rhs,
            "iterations": self.iterations,
            "notes": list(self.notes),
        }

    def save_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, indent=2)


def node_weights(f: AxiField) -> np.ndarray:
    """Ambient-measure quadrature weight per node.

    The weight is |S^(n-2)| s^(n-2) hs ht: interior columns take the midpoint
    value, the axis column the exact half-cell integral of s^(n-2) (keeping
    the norm positive definite), outer columns and first/last rows half
    cells.  The sphere-area constant cancels in every Rayleigh quotient but
    makes the reported form values genuine integrals over the ambient space.
    """
    s = f.s
    hs, ht = f.hs, f.ht
    m = f.n - 2
    cs = s**m * hs
    cs[-1] = s[-1] ** m * hs / 2.0
    if f.has_axis:
        cs[0] = (hs / 2.0) ** (m + 1) / (m + 1)
    else:
        cs[0] = s[0] ** m * hs / 2.0
    ct = np.full(len(f.t), ht)
    ct[0] = ht / 2.0
    ct[-1] = ht / 2.0
    return unit_sphere_area(m) * cs[:, None] * ct[None, :]


def _edge_weights(f: AxiField):
    """Weights of s-edges and t-edges for the gradient part of the form."""
    s = f.s
    hs, ht = f.hs, f.ht
    m = f.n - 2
    area = unit_sphere_area(m)
    s_mid = 0.5 * (s[1:] + s[:-1])
    ct = np.full(len(f.t), ht)
    ct[0] = ht / 2.0
    ct[-1] = ht / 2.0
    w_s = area * (s_mid**m * hs)[:, None] * ct[None, :]
    cs = s**m * hs
    cs[-1] = s[-1] ** m * hs / 2.0
    if f.has_axis:
        cs[0] = (hs / 2.0) ** (m + 1) / (m + 1)
    else:
        cs[0] = s[0] ** m * hs / 2.0
    w_t = area * cs[:, None] * np.full(len(f.t) - 1, ht)[None, :]
    return w_s, w_t


def quadratic_form(u: AxiField, xi: AxiField, beta: ReactionTerm) -> float:
    """Second-variation value Q(xi) = int |grad xi|^2 + beta'(u)/2 xi^2.

    The gradient part sums squared edge differences against midpoint edge
    weights, the potential part uses the node weights; xi must vanish on the
    outer boundary.
    """
    if not u.same_grid(xi):
        raise InvalidParameterError("field and test function live on different grids")
    border = max(
        float(np.max(np.abs(xi.values[-1, :]))),
        float(np.max(np.abs(xi.values[:, 0]))),
        float(np.max(np.abs(xi.values[:, -1]))),
        0.0 if xi.has_axis else float(np.max(np.abs(xi.values[0, :]))),
    )
    if border > 1e-13 * (1.0 + float(np.max(np.abs(xi.values)))):
        raise InvalidParameterError("test function must vanish on the outer boundary")
    return _raw_form(u, xi, beta)


def _raw_form(u: AxiField, xi: AxiField, beta: ReactionTerm) -> float:
    w_s, w_t = _edge_weights(xi)
    v = xi.values
    ds = (v[1:, :] - v[:-1, :]) / xi.hs
    dt = (v[:, 1:] - v[:, :-1]) / xi.ht
    grad = float(np.sum(ds * ds * w_s)) + float(np.sum(dt * dt * w_t))
    pot = float(np.sum(0.5 * np.asarray(beta.deriv(u.values)) * v * v * node_weights(xi)))
    return grad + pot


def weighted_norm_sq(xi: AxiField) -> float:
    return float(np.sum(xi.values**2 * node_weights(xi)))


def assemble_operator(u: AxiField, beta: ReactionTerm, axis_dirichlet: bool = False):
    """Sparse matrices (A, w, mask) of the form and norm on unknown nodes.

    x^T A x equals the quadratic form of x embedded by ``mask`` (boundary
    zeros) and w holds the node weights, so the generalized problem
    A x = lambda diag(w) x discretizes the Rayleigh quotient.
    """
    ns, nt = u.values.shape
    mask = np.zeros((ns, nt), dtype=bool)
    mask[1:-1, 1:-1] = True
    if u.has_axis and not axis_dirichlet:
        mask[0, 1:-1] = True
    index = -np.ones((ns, nt), dtype=int)
    m = int(mask.sum())
    index[mask] = np.arange(m)

    w_s, w_t = _edge_weights(u)
    rows, cols, vals = [], [], []

    def edge(ia, ja, ib, jb, w):
        a, b = index[ia, ja], index[ib, jb]
        if a >= 0:
            rows.append(a)
            cols.append(a)
            vals.append(w)
        if b >= 0:
            rows.append(b)
            cols.append(b)
            vals.append(w)
        if a >= 0 and b >= 0:
            rows.append(a)
            cols.append(b)
            vals.append(-w)
            rows.append(b)
            cols.append(a)
            vals.append(-w)

    hs2, ht2 = u.hs**2, u.ht**2
    for i in range(ns - 1):
        for j in range(nt):
            if mask[i, j] or mask[i + 1, j]:
                edge(i, j, i + 1, j, w_s[i, j] / hs2)
    for i in range(ns):
        for j in range(nt - 1):
            if mask[i, j] or mask[i, j + 1]:
                edge(i, j, i, j + 1, w_t[i, j] / ht2)

    weights = node_weights(u)
    pot = 0.5 * np.asarray(beta.deriv(u.values)) * weights
    idx = index[mask]
    rows.extend(idx.tolist())
    cols.extend(idx.tolist())
    vals.extend(pot[mask].tolist())

    A = sp.csr_matrix((vals, (rows, cols)), shape=(m, m))
    return A, weights[mask], mask


def linearized_rayleigh_min(
    u: AxiField,
    beta: ReactionTerm,
    max_iter: int = 600,
    tol: float = 1e-10,
    axis_dirichlet: bool = False,
) -> SpectralReport:
    """Smallest Rayleigh quotient of the second variation at a solution.

    Shifted inverse power iteration on the symmetrized generalized problem,
    with the shift placed below a Gershgorin lower bound and a deterministic
    all-ones start; the returned eigenpair satisfies the residual certificate
    ||(B - lambda) x|| <= tol.  ``axis_dirichlet`` pins the axis column to
    zero (useful for all-sides-Dirichlet reference problems).
    """
    res = residual_semilinear(u, beta)
    if res > 1e-6:
        raise InvalidParameterError(f"field does not solve the equation (residual {res:.3e})")

    A, w, mask = assemble_operator(u, beta, axis_dirichlet=axis_dirichlet)
    d = 1.0 / np.sqrt(w)
    D = sp.diags(d)
    B = (D @ A @ D).tocsr()

    diag = B.diagonal()
    offdiag = np.asarray(np.abs(B).sum(axis=1)).ravel() - np.abs(diag)
    gersh = float(np.min(diag - offdiag))
    shift = gersh - max(1e-8, 1e-3 * (1.0 + abs(gersh)))

    # Inverse iteration in stages: once the residual certificate bounds the
    # distance to the nearest eigenvalue, the shift is moved just below the
    # current estimate (lam - 4*cert stays under the smallest eigenvalue),
    # which makes the remaining iterations contract fast.  Deterministic:
    # fixed start vector, fixed batch sizes, no randomness.
    eye = sp.identity(B.shape[0], format="csr")
    x = np.ones(B.shape[0])
    x /= np.linalg.norm(x)
    lam = float(x @ (B @ x))
    cert = math.inf
    trace = []
    it = 0
    converged = False
    for _stage in range(6):
        lu = splu((B - shift * eye).tocsc())
        for _ in range(120):
            if it >= max_iter:
                break
            it += 1
            y = lu.solve(x)
            x = y / np.linalg.norm(y)
            Bx = B @ x
            lam = float(x @ Bx)
            cert = float(np.linalg.norm(Bx - lam * x))
            trace.append(lam)
            if cert <= tol:
                converged = True
                break
        if converged or it >= max_iter:
            break
        shift = lam - max(4.0 * cert, 1e-8 * (1.0 + abs(lam)))
    if not converged:
        raise NonconvergenceError("inverse iteration did not certify", trace=trace)

    xi_vals = np.zeros_like(u.values)
    xi_vals[mask] = x * d
    xi = u.with_values(xi_vals)
    verdict = VERDICT_STABLE if lam >= -tol else VERDICT_UNSTABLE
    return SpectralReport(
        verdict=verdict,
        rayleigh_min=lam,
        form_lhs=_raw_form(u, xi, beta),
        form_rhs=lam * weighted_norm_sq(xi),
        iterations=it,
        eigenvector=xi,
    )


def us_derivative(u: AxiField) -> AxiField:
    """Centered radial derivative u_s; zero on the axis, one-sided at edges."""
    if len(u.s) < 3:
        raise InvalidParameterError("need at least 3 radial nodes")
    v = u.values
    hs = u.hs
    out = np.empty_like(v)
    out[1:-1, :] = (v[2:, :] - v[:-2, :]) / (2.0 * hs)
    # difference form of the one-sided stencils: exactly zero on constant data
    if u.has_axis:
        out[0, :] = 0.0
    else:
        out[0, :] = (3.0 * (v[1, :] - v[0, :]) + (v[1, :] - v[2, :])) / (2.0 * hs)
    out[-1, :] = (3.0 * (v[-1, :] - v[-2, :]) + (v[-3, :] - v[-2, :])) / (2.0 * hs)
    return u.with_values(out)


def us_equation_residual(u: AxiField, beta: ReactionTerm) -> AxiField:
    """Residual of the differentiated equation for c = u_s away from the axis.

    Checks Delta_h c - (n-2) c / s^2 - beta'(u)/2 c, defined where the
    stencil fits and s > 0; other entries are NaN.
    """
    from .axisym_field import apply_axisym_laplacian

    c = us_derivative(u)
    lap = apply_axisym_laplacian(c).values
    out = np.full_like(u.values, np.nan)
    s = u.s
    with np.errstate(divide="ignore", invalid="ignore"):
        term = np.where(s[:, None] > 0.0, (u.n - 2) * c.values / s[:, None] ** 2, np.nan)
    out[1:-1, 1:-1] = (
        lap[1:-1, 1:-1] - term[1:-1, 1:-1] - 0.5 * np.asarray(beta.deriv(u.values[1:-1, 1:-1])) * c.values[1:-1, 1:-1]
    )
    return u.with_values(out)


def _eta_and_gradsq(probe: StabilityProbe, f: AxiField):
    """The capped test function and its analytic squared gradient on the grid."""
    s = f.s[:, None]
    t = f.t[None, :]
    r = np.hypot(s, t)
    x = (r - probe.R) / probe.R
    rho = 1.0 - smoothstep_quintic(x)
    drho = -smoothstep_quintic_deriv(x) / probe.R

    capped = s <= probe.eps_inner
    with np.errstate(divide="ignore"):
        f_rad = np.where(capped, probe.eps_inner ** (-probe.alpha), np.where(s > 0, s, 1.0) ** (-probe.alpha))
        df_rad = np.where(capped, 0.0, -probe.alpha * np.where(s > 0, s, 1.0) ** (-probe.alpha - 1.0))
    eta = f_rad * rho
    with np.errstate(invalid="ignore"):
        g_s = df_rad * rho + f_rad * drho * np.where(r > 0, s / np.where(r > 0, r, 1.0), 0.0)
        g_t = f_rad * drho * np.where(r > 0, t / np.where(r > 0, r, 1.0), 0.0)
    gradsq = g_s * g_s + g_t * g_t
    return eta, gradsq


def probe_inequality(u: AxiField, probe: StabilityProbe, beta: ReactionTerm) -> SpectralReport:
    """Test (n-2) int u_s^2 eta^2 / s^2 <= int u_s^2 |grad eta|^2 on the grid.

    A negative defect (rhs - lhs) certifies that xi = u_s eta violates
    stability on this grid; the probe's own Rayleigh quotient of the second
    variation is reported alongside.  Exponents alpha >= (n-1)/2 make the
    uncapped weight non-integrable near the axis; the cap regularizes this,
    so it is only noted.
    """
    notes = []
    if probe.alpha >= (u.n - 1) / 2.0:
        notes.append("alpha at or beyond (n-1)/2: uncapped axis weight non-integrable")

    c = us_derivative(u).values
    eta, gradsq = _eta_and_gradsq(probe, u)
    w = node_weights(u)
    s = u.s[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        inv_s2 = np.where(s > 0.0, 1.0 / np.where(s > 0, s, 1.0) ** 2, 0.0)
    lhs = (u.n - 2) * float(np.sum(c * c * eta * eta * inv_s2 * w))
    rhs = float(np.sum(c * c * gradsq * w))
    defect = rhs - lhs

    xi = u.with_values(c * eta)
    norm_sq = weighted_norm_sq(xi)
    rayleigh = _raw_form(u, xi, beta) / norm_sq if norm_sq > 0.0 else 0.0

    verdict = VERDICT_UNSTABLE if defect < 0.0 else VERDICT_STABLE
    return SpectralReport(
        verdict=verdict,
        rayleigh_min=rayleigh,
        form_lhs=lhs,
        form_rhs=rhs,
        iterations=0,
        alpha=probe.alpha,
        R=probe.R,
        eps_inner=probe.eps_inner,
        eigenvector=xi,
        notes=tuple(notes),
    )


def polish_direction(
    u: AxiField,
    beta: ReactionTerm,
    xi: AxiField,
    steps: int = 50,
    axis_dirichlet: bool = False,
) -> SpectralReport:
    """Deterministically lower the Rayleigh quotient starting from ``xi``.

    Each step minimizes the quotient exactly over span{x, residual} (a 2x2
    generalized eigenproblem), so the quotient is nonincreasing; finite grids
    may need this to expose a negative direction that a raw test function
    only reaches asymptotically.  The test function must vanish on the outer
    boundary; nothing here assumes it is an eigenvector.
    """
    A, w, mask = assemble_operator(u, beta, axis_dirichlet=axis_dirichlet)
    x = xi.values[mask].astype(float)
    if not np.any(x):
        raise InvalidParameterError("cannot polish the zero direction")

    def pair(a, b):
        return float(a @ (A @ b)), float(a @ (w * b))

    qa, qm = pair(x, x)
    lam = qa / qm
    for _ in range(steps):
        r = A @ x - lam * (w * x)
        rn = np.linalg.norm(r)
        if rn == 0.0:
            break
        r /= rn
        # 2x2 generalized eigenproblem in span{x, r}
        axx, mxx = pair(x, x)
        axr, mxr = pair(x, r)
        arr, mrr = pair(r, r)
        Am = np.array([[axx, axr], [axr, arr]])
        Mm = np.array([[mxx, mxr], [mxr, mrr]])
        from scipy.linalg import eigh

        vals, vecs = eigh(Am, Mm)
        coef = vecs[:, 0]
        x = coef[0] * x + coef[1] * r
        x /= math.sqrt(max(pair(x, x)[1], 1e-300))
        lam_new = vals[0]
        if lam - lam_new <= 1e-14 * (1.0 + abs(lam)):
            lam = lam_new
            break
        lam = lam_new

    vals_field = np.zeros_like(u.values)
    vals_field[mask] = x
    out = u.with_values(vals_field)
    verdict = VERDICT_UNSTABLE if lam < 0.0 else VERDICT_STABLE
    return SpectralReport(
        verdict=verdict,
        rayleigh_min=lam,
        form_lhs=_raw_form(u, out, beta),
        form_rhs=lam * weighted_norm_sq(out),
        iterations=steps,
        eigenvector=out,
    )


def admissible_alpha(n: int) -> tuple[float, float] | None:
    """The open exponent window (max((n-2)/2, .), sqrt(n-2)), empty outside 2 < n < 6.

    Both constraints 2 alpha > n - 2 and alpha^2 < n - 2 admit a solution
    exactly when (n-2)^2 < 4(n-2), checked in exact integer arithmetic.
    """
    if n < 2:
        raise InvalidParameterError("dimension must be >= 2")
    if n <= 2 or (n - 2) ** 2 >= 4 * (n - 2):
        return None
    return ((n - 2) / 2.0, math.sqrt(n - 2))


def epsilon_schedule(n: int, alpha: float, eps0: float, R: float) -> float:
    """Cap shrink rate eps = R^(-1/(n-1-2*alpha-eps0)); decreasing in R."""
    denom = n - 1 - 2.0 * alpha - eps0
    if denom <= 0.0:
        raise InvalidParameterError("need n - 1 > 2*alpha + eps0")
    if R <= 0.0:
        raise InvalidParameterError("R must be positive")
    return float(R ** (-1.0 / denom))


@dataclass
class LogCutoff:
    field: AxiField
    grad_energy: float


def log_cutoff_2d(R: float, grid) -> LogCutoff:
    """Planar logarithmic cutoff: 1 inside radius 1, log-linear out to R.

    The companion value is the exact-in-quadrature Dirichlet energy
    int |grad eta|^2 = 2 pi / log R, computed by a radial rule in log r
    (where the integrand is constant).
    """
    if R <= 1.0:
        raise InvalidParameterError("R must exceed 1")
    from .axisym_field import AxiField as _AF

    s, t = grid.axes()
    r = np.hypot(s[:, None], t[None, :])
    logR = math.log(R)
    vals = np.where(r < 1.0, 1.0, np.where(r < R, (logR - np.log(np.maximum(r, 1.0))) / logR, 0.0))
    f = _AF(n=grid.n, s=s, t=t, values=vals)

    # int_1^R (1/(r log R))^2 2 pi r dr, in rho = log r
    rho = np.linspace(0.0, logR, 2049)
    integrand = 2.0 * math.pi / logR**2 * np.ones_like(rho)
    h = rho[1] - rho[0]
    simpson = h / 3.0 * (integrand[0] + integrand[-1] + 4.0 * integrand[1::2].sum() + 2.0 * integrand[2:-1:2].sum())
    return LogCutoff(field=f, grad_energy=float(simpson))
