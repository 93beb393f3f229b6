"""Semidefinite relaxation of the IRS phase design and rank-one extraction.

Lifting convention: with Lambda_i = diag(h_a^H) h_i / sqrt(L_a L_i) the
cascade term is u^H Lambda_i for the column u = exp(-1j * theta).  The lifted
vector is ubar = [u; 1] and

    |u^H Lambda_i + v_i|^2 = ubar^H H_i ubar + |v_i|^2,
    H_i = [[Lambda_i Lambda_i^H, Lambda_i conj(v_i)], [v_i Lambda_i^H, 0]].

Phases are recovered from a lifted vector e as theta_n = arg(e_{N+1} / e_n).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelRealization, PhaseShiftVector, complex_normal, make_rng
from .sdp import OPTIMAL, SdpProblem, SdpSolution, TraceConstraint, solve

RANK_TOL = 1e-6
FEAS_TOL = 1e-9


@dataclass(frozen=True)
class LiftedChannelData:
    direction: str
    lam_b: np.ndarray
    lam_r: np.ndarray
    v_b: complex
    v_r: complex
    H_b: np.ndarray
    H_r: np.ndarray

    @property
    def n(self) -> int:
        return self.lam_b.size

    def gain(self, phases, who: str) -> float:
        """|u^H Lambda_i + v_i|^2 evaluated directly from the phases."""
        theta = phases.angles if isinstance(phases, PhaseShiftVector) else np.asarray(phases)
        lam, v = (self.lam_b, self.v_b) if who == "b" else (self.lam_r, self.v_r)
        return float(abs(np.sum(np.exp(1j * theta) * lam) + v) ** 2)

    @property
    def scale(self) -> float:
        """Upper bound on either composite gain, used to normalise the SDP data."""
        k = max((np.sum(np.abs(self.lam_b)) + abs(self.v_b)) ** 2,
                (np.sum(np.abs(self.lam_r)) + abs(self.v_r)) ** 2)
        return float(k) if k > 0.0 else 1.0


def assemble_lifted(lam, v) -> np.ndarray:
    lam = np.asarray(lam, dtype=complex)
    n = lam.size
    H = np.zeros((n + 1, n + 1), dtype=complex)
    H[:n, :n] = np.outer(lam, lam.conj())
    H[:n, n] = lam * np.conj(v)
    H[n, :n] = v * lam.conj()
    return H


def lifted_vector(phases) -> np.ndarray:
    theta = phases.angles if isinstance(phases, PhaseShiftVector) else np.asarray(phases)
    return np.concatenate([np.exp(-1j * theta), [1.0 + 0j]])


def phases_from_lifted(e) -> PhaseShiftVector:
    e = np.asarray(e, dtype=complex)
    return PhaseShiftVector(np.angle(e[-1] * np.conj(e[:-1])))


def lift_downlink(real: ChannelRealization) -> LiftedChannelData:
    L = real.losses
    lam_b = np.conj(real.h_a) * real.h_b / np.sqrt(L.a * L.b)
    lam_r = np.conj(real.h_a) * real.h_r / np.sqrt(L.a * L.r)
    v_b = real.h_ab / np.sqrt(L.ab)
    v_r = real.h_ar / np.sqrt(L.ar)
    return LiftedChannelData("downlink", lam_b, lam_r, v_b, v_r,
                             assemble_lifted(lam_b, v_b), assemble_lifted(lam_r, v_r))


def lift_uplink(real: ChannelRealization) -> LiftedChannelData:
    L = real.losses
    lam_b = np.conj(real.h_b) * real.h_a / np.sqrt(L.a * L.b)
    lam_r = np.conj(real.h_r) * real.h_a / np.sqrt(L.a * L.r)
    v_b = real.h_ab / np.sqrt(L.ab)
    v_r = real.h_ar / np.sqrt(L.ar)
    return LiftedChannelData("uplink", lam_b, lam_r, v_b, v_r,
                             assemble_lifted(lam_b, v_b), assemble_lifted(lam_r, v_r))


def lift(real: ChannelRealization, direction: str) -> LiftedChannelData:
    return lift_downlink(real) if direction == "downlink" else lift_uplink(real)


# ----------------------------------------------------------------------------
# relaxed problems
# ----------------------------------------------------------------------------

def build_sdp_downlink(lift: LiftedChannelData, p_r, p_b, gamma, noise) -> SdpProblem:
    """max tr(H_b U) s.t. SIC ordering, Roy's QoS, unit diagonal, U PSD."""
    k = lift.scale
    m = lift.n + 1
    vb2, vr2 = abs(lift.v_b) ** 2, abs(lift.v_r) ** 2
    cons = [TraceConstraint((lift.H_r - lift.H_b) / k, (vb2 - vr2) / k, "<=")]
    if gamma > 0.0:
        q = p_r - gamma * p_b
        if q <= 0.0:
            cons.append(TraceConstraint(np.zeros((m, m)), 1.0, ">="))
        else:
            cons.append(TraceConstraint(lift.H_r / k, (gamma * noise / q - vr2) / k, ">="))
    return SdpProblem(lift.H_b / k, tuple(cons))


def build_sdp_uplink(lift: LiftedChannelData, p_r, p_b, gamma, noise) -> SdpProblem:
    """max tr(H_b W) s.t. reversed ordering, P_r g_r >= gamma (P_b g_b + sigma0^2), ..."""
    k = lift.scale
    vb2, vr2 = abs(lift.v_b) ** 2, abs(lift.v_r) ** 2
    cons = [TraceConstraint((lift.H_r - lift.H_b) / k, (vb2 - vr2) / k, ">=")]
    if gamma > 0.0:
        kq = k * max(p_r, gamma * p_b)
        cons.append(TraceConstraint((p_r * lift.H_r - gamma * p_b * lift.H_b) / kq,
                                    (gamma * noise + gamma * p_b * vb2 - p_r * vr2) / kq, ">="))
    return SdpProblem(lift.H_b / k, tuple(cons))


def build_sdp(lift: LiftedChannelData, p_r, p_b, gamma, noise) -> SdpProblem:
    if lift.direction == "downlink":
        return build_sdp_downlink(lift, p_r, p_b, gamma, noise)
    return build_sdp_uplink(lift, p_r, p_b, gamma, noise)


def phase_feasibility(lift: LiftedChannelData, p_r, p_b, gamma, noise, tol=FEAS_TOL):
    """Predicate for the original (unlifted) beamforming constraints."""
    def feasible(phases) -> bool:
        gb, gr = lift.gain(phases, "b"), lift.gain(phases, "r")
        if lift.direction == "downlink":
            if gr > gb * (1.0 + tol):
                return False
            return gamma == 0.0 or (p_r - gamma * p_b) * gr >= gamma * noise * (1.0 - tol)
        if gr < gb * (1.0 - tol):
            return False
        return p_r * gr >= gamma * (p_b * gb + noise) * (1.0 - tol)
    return feasible


def sdr_objective(lift: LiftedChannelData, X) -> float:
    """tr(H_b X) in the original (unnormalised) units."""
    return float(np.real(np.sum(lift.H_b * X.T)))


# ----------------------------------------------------------------------------
# rank-one extraction
# ----------------------------------------------------------------------------

def extract_phases(solution: SdpSolution, q: int, feasible, objective, seed: int,
                   rank_tol: float = RANK_TOL, draws=None, force_randomization=False):
    """Principal eigenvector if X is numerically rank one, else Gaussian randomization.

    ``draws`` (shape (Q, N+1)) replaces the seeded CN(0, I) vectors r_q when given;
    ``seed`` is an int or a tuple of stream keys for ``make_rng``.
    Returns None when no candidate satisfies ``feasible``.
    """
    if solution.status != OPTIMAL:
        raise ValueError("phase extraction needs an optimal SDP solution")
    X = 0.5 * (solution.X + solution.X.conj().T)
    w, V = np.linalg.eigh(X)
    w, V = w[::-1], V[:, ::-1]
    if not force_randomization and w[0] > 0.0 and max(w[1], 0.0) <= rank_tol * w[0]:
        cand = phases_from_lifted(V[:, 0] * np.sqrt(w[0]))
        if feasible(cand):
            return cand
    if draws is None:
        keys = seed if isinstance(seed, tuple) else (seed,)
        draws = complex_normal(make_rng(*keys), (q, X.shape[0]))
    draws = np.atleast_2d(draws)
    root = V * np.sqrt(np.clip(w, 0.0, None))[None, :]
    best, best_val = None, -np.inf
    for r in draws:
        cand = phases_from_lifted(root @ r)
        if not feasible(cand):
            continue
        val = objective(cand)
        if val > best_val:      # strict: lowest index wins ties
            best, best_val = cand, val
    return best


@dataclass
class BeamformingResult:
    phases: PhaseShiftVector | None
    solution: SdpSolution
    sdr_value: float          # tr(H_b X), an upper bound for the rank-one problem
    value: float              # tr(H_b ubar ubar^H) at the returned phases (nan if none)


def beamform(lift: LiftedChannelData, p_r, p_b, gamma, noise, q=100, seed=0,
             tol_feas=1e-8, tol_gap=1e-8) -> BeamformingResult:
    """Build, solve and extract for one beamforming step."""
    sol = solve(build_sdp(lift, p_r, p_b, gamma, noise), tol_feas=tol_feas, tol_gap=tol_gap)
    if sol.status != OPTIMAL:
        return BeamformingResult(None, sol, np.nan, np.nan)
    feasible = phase_feasibility(lift, p_r, p_b, gamma, noise)

    def value(ph):
        return lift.gain(ph, "b") - abs(lift.v_b) ** 2

    ph = extract_phases(sol, q, feasible, value, seed)
    return BeamformingResult(ph, sol, sdr_objective(lift, sol.X),
                             value(ph) if ph is not None else np.nan)
