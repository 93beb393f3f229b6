"""Primal-dual interior-point solver for small dense complex-Hermitian SDPs.

Problem form (maximisation)::

    max  tr(C X)
    s.t. X_nn = 1                 for every n
         tr(A_k X) <= b_k  or  >= b_k
         X >= 0 (PSD)

Complex data are mapped to the real symmetric embedding
emb(A) = [[Re A, -Im A], [Im A, Re A]], for which tr(A X) = <emb(A), Y>/2.
Inequalities receive nonnegative slack scalars, so the internal cone is
S^{2m}_+ x R^p_+ (the slack block is the diagonal part of an augmented PSD
variable).  The iteration is an infeasible-start Mehrotra predictor-corrector
with Nesterov-Todd scaling.  Problems with inequality constraints are first
passed through a Phase-I feasibility SDP so that infeasibility is reported
instead of surfacing as a stalled iteration.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
FAILED = "numerical-failure"

_STEP_FRACTION = 0.98
# the complementarity is only kept monotone (and logged) once both residuals
# are below this level; before that, removing infeasibility can force it up
_MONOTONE_RESIDUAL = 1e-6


@dataclass(frozen=True)
class TraceConstraint:
    matrix: np.ndarray
    offset: float
    sense: str          # "<=" or ">="

    def __post_init__(self):
        if self.sense not in ("<=", ">="):
            raise ValueError(f"sense must be '<=' or '>=', got {self.sense!r}")


@dataclass(frozen=True)
class SdpProblem:
    """max tr(C X) subject to unit diagonal, trace inequalities and X PSD."""
    objective: np.ndarray
    constraints: tuple = ()

    def __post_init__(self):
        c = np.asarray(self.objective, dtype=complex)
        if c.ndim != 2 or c.shape[0] != c.shape[1] or c.shape[0] < 2:
            raise ValueError("objective must be a square matrix of dimension m >= 2")
        _check_hermitian(c, "objective")
        m = c.shape[0]
        cons = tuple(self.constraints)
        for k, con in enumerate(cons):
            a = np.asarray(con.matrix)
            if a.shape != (m, m):
                raise ValueError(f"constraint {k} has shape {a.shape}, expected {(m, m)}")
            _check_hermitian(a, f"constraint {k}")
        object.__setattr__(self, "objective", c)
        object.__setattr__(self, "constraints", cons)

    @property
    def m(self) -> int:
        return self.objective.shape[0]


@dataclass
class SdpSolution:
    X: np.ndarray
    objective: float
    status: str
    residuals: dict
    iterations: int
    gap_history: list = field(default_factory=list)
    phase1_margin: float | None = None


def _check_hermitian(a, what):
    scale = max(1.0, float(np.max(np.abs(a))))
    if np.max(np.abs(a - a.conj().T)) > 1e-10 * scale:
        raise ValueError(f"{what} matrix is not Hermitian")


def embed(a: np.ndarray) -> np.ndarray:
    """Real symmetric embedding [[Re, -Im], [Im, Re]]."""
    re, im = a.real, a.imag
    return np.block([[re, -im], [im, re]])


def unembed(y: np.ndarray) -> np.ndarray:
    """Project a real 2m x 2m matrix onto the embedded set and return the complex block."""
    m = y.shape[0] // 2
    a, b, c, d = y[:m, :m], y[:m, m:], y[m:, :m], y[m:, m:]
    x = 0.5 * (a + d) + 0.5j * (c - b)
    return 0.5 * (x + x.conj().T)


# ----------------------------------------------------------------------------
# real cone program
# ----------------------------------------------------------------------------

class _ConeProgram:
    """min <C,Y> + c.s  s.t.  diag rows + <G_k,Y> + (B s)_k = b,  Y PSD, s >= 0.

    Rows 0..m-1 are the structured unit-diagonal rows (Y_nn + Y_{m+n,m+n})/2,
    followed by one row per dense matrix in G.  B couples the slack vector s
    to the rows and has shape (rows, p).
    """

    def __init__(self, m, G, b, C, B, c):
        self.m = m
        self.n = 2 * m
        self.G = np.asarray(G, dtype=float).reshape(-1, 2 * m, 2 * m)
        self.k = self.G.shape[0]
        self.rows = m + self.k
        self.b = np.asarray(b, dtype=float)
        self.C = np.asarray(C, dtype=float)
        self.B = np.asarray(B, dtype=float).reshape(self.rows, -1)
        self.c = np.asarray(c, dtype=float).ravel()
        self.p = self.c.size

    def A(self, Y):
        d = np.diag(Y)
        out = np.empty(self.rows)
        out[:self.m] = 0.5 * (d[:self.m] + d[self.m:])
        if self.k:
            out[self.m:] = np.einsum("kij,ij->k", self.G, Y)
        return out

    def At(self, y):
        Y = np.zeros((self.n, self.n))
        if self.k:
            Y = np.einsum("k,kij->ij", y[self.m:], self.G)
        idx = np.arange(self.m)
        Y[idx, idx] += 0.5 * y[:self.m]
        Y[idx + self.m, idx + self.m] += 0.5 * y[:self.m]
        return Y

    def schur(self, W):
        m = self.m
        W2 = W * W
        M = np.empty((self.rows, self.rows))
        M[:m, :m] = 0.25 * (W2[:m, :m] + W2[:m, m:] + W2[m:, :m] + W2[m:, m:])
        if self.k:
            WGW = np.einsum("ij,kjl,lm->kim", W, self.G, W, optimize=True)
            dg = np.einsum("kii->ki", WGW)
            M[:m, m:] = 0.5 * (dg[:, :m] + dg[:, m:]).T
            M[m:, :m] = M[:m, m:].T
            M[m:, m:] = np.einsum("kij,lij->kl", self.G, WGW)
        return 0.5 * (M + M.T)


def _max_step_psd(lam_isqrt, d_tilde):
    """Largest alpha with Lambda + alpha * d_tilde PSD, Lambda = diag(lam)."""
    s = lam_isqrt[:, None] * d_tilde * lam_isqrt[None, :]
    if not np.all(np.isfinite(s)):
        return 0.0
    ev = np.linalg.eigvalsh(0.5 * (s + s.T))[0]
    return math.inf if ev >= 0.0 else -1.0 / ev


def _max_step_lp(x, dx):
    neg = dx < 0.0
    if not np.any(neg):
        return math.inf
    return float(np.min(-x[neg] / dx[neg]))


def _factor(M):
    try:
        return ("chol", sla.cho_factor(M, lower=True, check_finite=False))
    except (np.linalg.LinAlgError, sla.LinAlgError):
        return ("lstsq", M)


def _solve(fact, rhs):
    kind, f = fact
    if kind == "chol":
        return sla.cho_solve(f, rhs, check_finite=False)
    return np.linalg.lstsq(f, rhs, rcond=None)[0]


def _interior_point(prog: _ConeProgram, tol_feas, tol_gap, max_iter):
    n, p = prog.n, prog.p
    Y = np.eye(n)
    Z = np.eye(n)
    s = np.ones(p)
    z = np.ones(p)
    y = np.zeros(prog.rows)
    nb = 1.0 + np.linalg.norm(prog.b)
    nc = 1.0 + np.linalg.norm(prog.C) + np.linalg.norm(prog.c)
    history = []
    status = FAILED
    info = {}
    it = 0
    for it in range(max_iter + 1):
        rp = prog.b - prog.A(Y) - prog.B @ s
        Rd = prog.C - prog.At(y) - Z
        rd = prog.c - prog.B.T @ y - z
        pobj = float(np.sum(prog.C * Y) + prog.c @ s)
        dobj = float(prog.b @ y)
        compl = float(np.sum(Y * Z) + s @ z)
        pres = np.linalg.norm(rp) / nb
        dres = math.sqrt(np.sum(Rd * Rd) + rd @ rd) / nc
        near_feasible = pres <= _MONOTONE_RESIDUAL and dres <= _MONOTONE_RESIDUAL
        if near_feasible:
            history.append(compl)
        denom = 1.0 + abs(pobj) + abs(dobj)
        gap = abs(pobj - dobj) / denom
        info = {"primal": pres, "dual": dres, "gap": gap, "compl": compl / denom,
                "pobj": pobj, "dobj": dobj}
        if pres <= tol_feas and dres <= tol_feas and gap <= tol_gap and compl / denom <= tol_gap:
            status = OPTIMAL
            break
        if it == max_iter or not math.isfinite(pres + dres + compl):
            break
        mu = compl / (n + p)

        # Nesterov-Todd scaling point W = R R^T with R^{-1} Y R^{-T} = R^T Z R = diag(lam)
        try:
            Ly = np.linalg.cholesky(Y)
            Lz = np.linalg.cholesky(Z)
        except np.linalg.LinAlgError:
            break
        U, lam, Vt = np.linalg.svd(Lz.T @ Ly)
        if not np.all(lam > 0.0):
            break
        R = Ly @ Vt.T / np.sqrt(lam)[None, :]
        Rinv = np.sqrt(lam)[:, None] * (Vt @ sla.solve_triangular(Ly, np.eye(n), lower=True))
        W = R @ R.T
        W = 0.5 * (W + W.T)
        D = s / z
        M = prog.schur(W)
        if p:
            M = M + (prog.B * D[None, :]) @ prog.B.T
        fact = _factor(M)
        WRdW = W @ Rd @ W

        def direction(Rc, rcs):
            rhs = rp - prog.A(Rc - WRdW) - prog.B @ (rcs - D * rd)
            dy = _solve(fact, rhs)
            dZ = Rd - prog.At(dy)
            dZ = 0.5 * (dZ + dZ.T)
            dz = rd - prog.B.T @ dy
            dY = Rc - W @ dZ @ W
            dY = 0.5 * (dY + dY.T)
            ds = rcs - D * dz
            return dY, dZ, dy, ds, dz

        lam_isqrt = 1.0 / np.sqrt(lam)

        def steps(dY, dZ, ds, dz):
            dYt = Rinv @ dY @ Rinv.T
            dZt = R.T @ dZ @ R
            ap = min(_max_step_psd(lam_isqrt, dYt), _max_step_lp(s, ds))
            ad = min(_max_step_psd(lam_isqrt, dZt), _max_step_lp(z, dz))
            return ap, ad, dYt, dZt

        # predictor
        dYa, dZa, dya, dsa, dza = direction(-Y, -s)
        ap, ad, dYt, dZt = steps(dYa, dZa, dsa, dza)
        ap, ad = min(1.0, ap), min(1.0, ad)
        mu_aff = (np.sum((Y + ap * dYa) * (Z + ad * dZa))
                  + (s + ap * dsa) @ (z + ad * dza)) / (n + p)
        sigma = min(1.0, max(0.0, (mu_aff / mu) ** 3))

        def corrected(second_order, sig):
            G = -(dYt @ dZt + dZt @ dYt) / 2.0 if second_order else np.zeros((n, n))
            G[np.diag_indices(n)] += sig * mu - lam * lam
            T = 2.0 * G / (lam[:, None] + lam[None, :])
            Rc = R @ T @ R.T
            rcs = (sig * mu - s * z - (dsa * dza if second_order else 0.0)) / z
            d = direction(0.5 * (Rc + Rc.T), rcs)
            a_p, a_d, _, _ = steps(d[0], d[1], d[3], d[4])
            return d, min(1.0, _STEP_FRACTION * a_p), min(1.0, _STEP_FRACTION * a_d)

        def compl_after(d, a_p, a_d):
            dY, dZ, _, ds, dz = d
            return np.sum((Y + a_p * dY) * (Z + a_d * dZ)) + (s + a_p * ds) @ (z + a_d * dz)

        # Mehrotra corrector; near feasibility the plain centred direction
        # replaces it whenever it would raise the complementarity.  The
        # fallback takes a common primal/dual step with sigma < 1, for which
        # the complementarity decreases to first order.
        (dY, dZ, dy, ds, dz), ap, ad = corrected(True, sigma)
        if near_feasible and compl_after((dY, dZ, dy, ds, dz), ap, ad) > compl:
            (dY, dZ, dy, ds, dz), ap, ad = corrected(False, min(sigma, 0.5))
            ap = ad = min(ap, ad)
            for _ in range(60):
                if compl_after((dY, dZ, dy, ds, dz), ap, ad) <= compl:
                    break
                ap *= 0.8
                ad *= 0.8
        if max(ap, ad) < 1e-12:
            break
        Y = Y + ap * dY
        Z = Z + ad * dZ
        y = y + ad * dy
        s = s + ap * ds
        z = z + ad * dz
        Y = 0.5 * (Y + Y.T)
        Z = 0.5 * (Z + Z.T)
    return Y, s, y, status, it, history, info


# ----------------------------------------------------------------------------
# public entry point
# ----------------------------------------------------------------------------

def _normalised_rows(problem: SdpProblem):
    """(embedded G_k / ||.||, b_k / ||.||, sign) for each non-trivial constraint.

    Constraints whose matrix is exactly zero are constant; they are either
    satisfied (dropped) or make the problem infeasible (returned in `broken`).
    """
    rows, broken = [], []
    for k, con in enumerate(problem.constraints):
        g = embed(np.asarray(con.matrix, dtype=complex)) / 2.0
        nrm = np.linalg.norm(g)
        if nrm <= 1e-14 * max(1.0, abs(con.offset)):
            ok = (0.0 <= con.offset) if con.sense == "<=" else (0.0 >= con.offset)
            if not ok:
                broken.append(k)
            continue
        nrm = max(nrm, abs(con.offset))
        rows.append((k, g / nrm, con.offset / nrm, 1.0 if con.sense == "<=" else -1.0))
    return rows, broken


def _phase1(m, rows, tol_feas, tol_gap, max_iter):
    """max t s.t. sense-adjusted rows hold with margin t; t = t0 - 1 + t'."""
    p = len(rows)
    # '>=' form: g.Y - c >= t  where g = -sign*G, c = -sign*b
    gs = [-sg * g for (_, g, _, sg) in rows]
    cs = [-sg * bk for (_, _, bk, sg) in rows]
    t0 = min(np.trace(g) - c for g, c in zip(gs, cs))
    b = np.concatenate([np.ones(m), np.array(cs) + t0 - 1.0])
    B = np.zeros((m + p, p + 1))
    B[m:, :p] = -np.eye(p)
    B[m:, p] = -1.0
    cvec = np.zeros(p + 1)
    cvec[p] = -1.0
    prog = _ConeProgram(m, gs, b, np.zeros((2 * m, 2 * m)), B, cvec)
    Y, s, _, status, it, _, _ = _interior_point(prog, tol_feas, tol_gap, max_iter)
    return t0 - 1.0 + s[p], status, Y


def _residuals(problem: SdpProblem, X, rows):
    diag_err = float(np.max(np.abs(np.real(np.diag(X)) - 1.0)))
    viol = 0.0
    for (k, g, bk, sg) in rows:
        val = float(np.sum(g * embed(X)))
        viol = max(viol, (val - bk) if sg > 0 else (bk - val))
    return {"diag": diag_err, "constraint": max(viol, 0.0),
            "min_eig": float(np.linalg.eigvalsh(X)[0])}


def solve(problem: SdpProblem, tol_feas: float = 1e-8, tol_gap: float = 1e-8,
          max_iter: int = 200) -> SdpSolution:
    """Solve the SDP; status is 'optimal', 'infeasible' or 'numerical-failure'."""
    m = problem.m
    rows, broken = _normalised_rows(problem)
    if broken:
        return SdpSolution(np.eye(m, dtype=complex), math.nan, INFEASIBLE,
                           {"constant_constraints": broken}, 0)
    margin = None
    if rows:
        margin, st1, Y1 = _phase1(m, rows, tol_feas, tol_gap, max_iter)
        if st1 == OPTIMAL and margin < -10.0 * tol_feas:
            X1 = unembed(Y1)
            return SdpSolution(X1, math.nan, INFEASIBLE, _residuals(problem, X1, rows), 0,
                               phase1_margin=margin)

    C = -embed(problem.objective) / 2.0
    cn = np.linalg.norm(C)
    if cn > 0.0:
        C = C / cn
    p = len(rows)
    G = [g for (_, g, _, _) in rows]
    b = np.concatenate([np.ones(m), [bk for (_, _, bk, _) in rows]])
    B = np.zeros((m + p, p))
    for j, (_, _, _, sg) in enumerate(rows):
        B[m + j, j] = sg
    prog = _ConeProgram(m, G, b, C, B, np.zeros(p))
    Y, s, y, status, it, history, info = _interior_point(prog, tol_feas, tol_gap, max_iter)
    X = unembed(Y)
    res = _residuals(problem, X, rows)
    res.update({k: info.get(k) for k in ("primal", "dual", "gap")})
    obj = float(np.real(np.sum(problem.objective.conj() * X)))
    return SdpSolution(X, obj, status, res, it, history, margin)
