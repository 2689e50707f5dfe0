"""One-particle radial Dirac operator with attractive Coulomb coupling.

Matrices live on a single spin-orbit channel discretized by a ChannelGrid.
Spinor components interleave: index 2i is the upper component at node i,
index 2i + 1 the lower.  In this layout the free operator is exactly
block-diagonal over nodes, so its spectral data (projectors, |D_0|^s, the
free-basis rotation) are closed-form and free of discretization error; only
the potential couples nodes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import quad

from .errors import GapError
from .grids import ChannelGrid, angular_momenta

GAMMA_MAX = math.sqrt(3.0) / 2.0


# ---------------------------------------------------------------------------
# Legendre functions of the second kind
# ---------------------------------------------------------------------------

def legendre_q(l: int, y) -> np.ndarray:
    """Q_l(y) for y > 1, vectorized and stable over the whole half-line.

    Near the singular point (y < 2) closed forms plus upward recursion are
    accurate; for y >= 2 the closed form for l >= 1 cancels badly, so the
    descending hypergeometric series in 1/y^2 is used instead.  Arguments
    are clamped to 1 + 1e-14 so that coincident-node roundoff cannot
    produce infinities.
    """
    if l < 0:
        raise ValueError(f"negative degree {l}")
    y = np.maximum(np.asarray(y, dtype=float), 1.0 + 1e-14)
    out = np.empty_like(y)
    near = y < 2.0
    if np.any(near):
        out[near] = _legendre_q_recursive(l, y[near])
    if np.any(~near):
        out[~near] = _legendre_q_series(l, y[~near])
    return out


def _legendre_q_recursive(l: int, y: np.ndarray) -> np.ndarray:
    q0 = np.arctanh(1.0 / y)
    if l == 0:
        return q0
    q1 = y * q0 - 1.0
    if l == 1:
        return q1
    qm, qc = q0, q1
    for m in range(1, l):
        qm, qc = qc, ((2 * m + 1) * y * qc - m * qm) / (m + 1)
    return qc


def _legendre_q_series(l: int, y: np.ndarray) -> np.ndarray:
    # Q_l(y) = c_l / y^(l+1) * sum_k a_k y^(-2k), a_0 = 1
    c = math.sqrt(math.pi) * math.gamma(l + 1.0) / (math.gamma(l + 1.5) * 2.0 ** (l + 1))
    t = y ** -2.0
    term = np.ones_like(y)
    acc = np.ones_like(y)
    for k in range(120):
        ratio = ((l + 2 * k + 1) * (l + 2 * k + 2)) / ((2 * k + 2) * (2 * l + 2 * k + 3))
        term = term * ratio * t
        acc += term
        if np.max(np.abs(term)) < 1e-18 * np.max(acc):
            break
    return c * y ** -(l + 1.0) * acc


@lru_cache(maxsize=32)
def subtraction_constant(l: int) -> float:
    """2 * integral of Q_l(cosh t) over t in (0, inf).

    Used by the diagonal subtraction of the Coulomb kernel.  Closed values:
    l=0 -> pi^2/2, l=1 -> 2, l=2 -> pi^2/8.
    """
    if l < 0:
        raise ValueError(f"negative degree {l}")

    def integrand(t):
        return legendre_q(l, np.cosh(t))

    a, _ = quad(integrand, 0.0, 2.0, limit=200)
    b, _ = quad(integrand, 2.0, 80.0, limit=200)
    return 2.0 * (a + b)


# ---------------------------------------------------------------------------
# Channel matrices
# ---------------------------------------------------------------------------

def coulomb_channel_matrix(p: np.ndarray, w: np.ndarray, l: int) -> np.ndarray:
    """Attractive -1/|x| kernel for one orbital channel, weight-symmetrized.

    Off-diagonal entries are -(1/pi) sqrt(w_i w_j) Q_l((p_i^2+p_j^2)/(2 p_i p_j)).
    The diagonal is the subtracted form that cancels the logarithmic
    singularity of Q_l at coincident momenta, so the matrix converges to the
    operator instead of diverging with the grid.
    """
    y = (p[:, None] ** 2 + p[None, :] ** 2) / (2.0 * np.outer(p, p))
    q = legendre_q(l, y)
    m = -(1.0 / math.pi) * np.sqrt(np.outer(w, w)) * q
    ratio = w / p
    offsum = q @ ratio - np.diag(q) * ratio
    np.fill_diagonal(m, -(p / math.pi) * (subtraction_constant(l) - offsum))
    return m


def build_free_dirac(grid: ChannelGrid) -> np.ndarray:
    """Free Dirac matrix: per momentum node the 2x2 block [[1, p], [p, -1]]."""
    n = grid.n
    d0 = np.zeros((2 * n, 2 * n))
    idx = np.arange(n)
    d0[2 * idx, 2 * idx] = 1.0
    d0[2 * idx + 1, 2 * idx + 1] = -1.0
    d0[2 * idx, 2 * idx + 1] = grid.p
    d0[2 * idx + 1, 2 * idx] = grid.p
    return d0


def build_coulomb(grid: ChannelGrid) -> np.ndarray:
    """Coulomb coupling matrix V, block-diagonal in the spinor component."""
    v = np.zeros((grid.dim, grid.dim))
    v[0::2, 0::2] = coulomb_channel_matrix(grid.p, grid.w, grid.l_upper)
    v[1::2, 1::2] = coulomb_channel_matrix(grid.p, grid.w, grid.l_lower)
    return v


def free_energies(grid: ChannelGrid) -> np.ndarray:
    """Relativistic free energies sqrt(1 + p^2) per node."""
    return np.sqrt(1.0 + grid.p ** 2)


def abs_free_dirac_power(grid: ChannelGrid, power: float) -> np.ndarray:
    """|D_0|^power; diagonal because |D_0| is E_p times the identity per node."""
    e = free_energies(grid)
    return np.diag(np.repeat(e ** power, 2))


def free_positive_projector(grid: ChannelGrid) -> np.ndarray:
    """Closed-form projector onto positive free states, (I + D_0/E)/2."""
    n = grid.n
    e = free_energies(grid)
    pr = np.zeros((2 * n, 2 * n))
    idx = np.arange(n)
    pr[2 * idx, 2 * idx] = 0.5 * (1.0 + 1.0 / e)
    pr[2 * idx + 1, 2 * idx + 1] = 0.5 * (1.0 - 1.0 / e)
    pr[2 * idx, 2 * idx + 1] = 0.5 * grid.p / e
    pr[2 * idx + 1, 2 * idx] = 0.5 * grid.p / e
    return pr


def foldy_wouthuysen(grid: ChannelGrid) -> np.ndarray:
    """Per-node rotation with tan(2 theta) = p sending D_0 to diag(E, -E).

    Maps positive free states to pure upper components, so the upper/lower
    splitting after conjugation is the free energy-sign splitting.
    """
    n = grid.n
    e = free_energies(grid)
    c = np.sqrt(0.5 * (1.0 + 1.0 / e))
    s = np.sqrt(0.5 * (1.0 - 1.0 / e))
    u = np.zeros((2 * n, 2 * n))
    idx = np.arange(n)
    u[2 * idx, 2 * idx] = c
    u[2 * idx, 2 * idx + 1] = s
    u[2 * idx + 1, 2 * idx] = -s
    u[2 * idx + 1, 2 * idx + 1] = c
    return u


# ---------------------------------------------------------------------------
# Exact decoupling unitary
# ---------------------------------------------------------------------------

def exact_u_gamma(p0: np.ndarray, pg: np.ndarray) -> np.ndarray:
    """Unitary intertwining two orthogonal projectors.

    U = (P0 Pg + (1-P0)(1-Pg)) (1 - (P0-Pg)^2)^(-1/2); requires the
    projectors closer than distance 1 in spectral norm, which makes the
    square-root factor positive definite.  Then U Pg = P0 U and U is unitary.
    """
    gap = np.linalg.norm(p0 - pg, 2)
    if gap >= 1.0:
        raise ValueError(f"projectors too far apart: ||p0 - pg|| = {gap:.6f} >= 1")
    eye = np.eye(p0.shape[0])
    a = p0 @ pg + (eye - p0) @ (eye - pg)
    s = eye - (p0 - pg) @ (p0 - pg)
    ew, uw = np.linalg.eigh(0.5 * (s + s.conj().T))
    return a @ (uw * ew ** -0.5) @ uw.conj().T


# ---------------------------------------------------------------------------
# Assembled system
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OneParticleSystem:
    """All matrices of one channel at one coupling, plus spectral data.

    evals ascending with evecs columns matching; gap is min |eigenvalue|.
    """

    grid: ChannelGrid
    gamma: float
    d0: np.ndarray
    v: np.ndarray
    dgamma: np.ndarray
    abs_d0_half: np.ndarray
    abs_d0_neg_half: np.ndarray
    p_plus_0: np.ndarray
    p_plus_gamma: np.ndarray
    u_fw: np.ndarray
    u_gamma: np.ndarray
    gap: float
    evals: np.ndarray
    evecs: np.ndarray

    @property
    def dim(self) -> int:
        return self.grid.dim


def _freeze(*mats: np.ndarray) -> None:
    for m in mats:
        m.flags.writeable = False


def assemble_system(grid: ChannelGrid, gamma: float, gap_floor: float = 1e-8) -> OneParticleSystem:
    """Build and spectrally decompose D_0 + gamma V on the channel grid.

    Raises GapError when an eigenvalue sits within gap_floor of zero, since
    then the positive spectral projector is not numerically well defined.
    """
    if not 0.0 <= gamma < GAMMA_MAX:
        raise ValueError(f"coupling {gamma} outside [0, sqrt(3)/2)")
    d0 = build_free_dirac(grid)
    v = build_coulomb(grid)
    dgamma = d0 + gamma * v
    evals, evecs = np.linalg.eigh(dgamma)
    gap = float(np.min(np.abs(evals)))
    if gap < gap_floor:
        raise GapError(f"no spectral gap: eigenvalue {gap:.3e} within {gap_floor:.1e} of zero")
    pos = evecs[:, evals > 0.0]
    p_plus_gamma = pos @ pos.conj().T
    p_plus_0 = free_positive_projector(grid)
    u_fw = foldy_wouthuysen(grid)
    if gamma == 0.0:
        u_gamma = np.eye(grid.dim)
    else:
        u_gamma = exact_u_gamma(p_plus_0, p_plus_gamma)
    abs_half = abs_free_dirac_power(grid, 0.5)
    abs_neg_half = abs_free_dirac_power(grid, -0.5)
    _freeze(d0, v, dgamma, abs_half, abs_neg_half, p_plus_0, p_plus_gamma, u_fw, u_gamma,
            evals, evecs)
    return OneParticleSystem(
        grid=grid, gamma=float(gamma), d0=d0, v=v, dgamma=dgamma,
        abs_d0_half=abs_half, abs_d0_neg_half=abs_neg_half,
        p_plus_0=p_plus_0, p_plus_gamma=p_plus_gamma,
        u_fw=u_fw, u_gamma=u_gamma, gap=gap, evals=evals, evecs=evecs)


def positive_levels(sys: OneParticleSystem, count: int | None = None) -> np.ndarray:
    """Positive eigenvalues ascending; the lowest is the ground level."""
    pos = np.sort(sys.evals[sys.evals > 0.0])
    return pos if count is None else pos[:count]


def positive_states(sys: OneParticleSystem, count: int) -> tuple[np.ndarray, np.ndarray]:
    """Lowest positive eigenpairs: (energies, column matrix of states)."""
    mask = sys.evals > 0.0
    vals = sys.evals[mask]
    vecs = sys.evecs[:, mask]
    order = np.argsort(vals)[:count]
    if count > vals.size:
        raise ValueError(f"requested {count} positive states, only {vals.size} available")
    return vals[order], vecs[:, order]


# ---------------------------------------------------------------------------
# Closed-form constants and oracles
# ---------------------------------------------------------------------------

def c_gamma(gamma: float) -> float:
    if not 0.0 <= gamma < GAMMA_MAX:
        raise ValueError(f"coupling {gamma} outside [0, sqrt(3)/2)")
    return (math.sqrt(4.0 * gamma ** 2 + 9.0) - 4.0 * gamma) / 3.0


def d_gamma(gamma: float) -> float:
    """Constant in the kinetic comparison |D_gamma|^2 >= d^2 |D_0|^2."""
    c2 = c_gamma(gamma) ** 2
    return 0.5 * (1.0 + c2 - math.sqrt((1.0 - c2) ** 2 + 4.0 * gamma ** 2 * c2))


def sommerfeld_energy(gamma: float, n_pr: int, kappa: int) -> float:
    """Closed-form relativistic Coulomb level; the discretization oracle."""
    if kappa == 0:
        raise ValueError("channel label must be nonzero")
    if n_pr < 1:
        raise ValueError(f"principal number must be >= 1, got {n_pr}")
    if not 0.0 <= gamma < abs(kappa):
        raise ValueError(f"coupling {gamma} outside [0, |kappa|)")
    denom = n_pr - abs(kappa) + math.sqrt(kappa ** 2 - gamma ** 2)
    if denom <= 0.0:
        raise ValueError(f"invalid level: effective quantum number {denom} <= 0")
    return (1.0 + (gamma / denom) ** 2) ** -0.5


def check_kato(sys: OneParticleSystem) -> float:
    """Smallest eigenvalue of (pi/2)|D_0| + V; nonnegative in the continuum."""
    e = np.repeat(free_energies(sys.grid), 2)
    return float(np.linalg.eigvalsh((math.pi / 2.0) * np.diag(e) + sys.v)[0])


def check_dgamma_bound(sys: OneParticleSystem) -> float:
    """Smallest eigenvalue of D_gamma^2 - d^2 D_0^2; nonnegative in the continuum."""
    d2 = d_gamma(sys.gamma) ** 2
    m = sys.dgamma @ sys.dgamma - d2 * (sys.d0 @ sys.d0)
    return float(np.linalg.eigvalsh(0.5 * (m + m.T))[0])


def check_gap_bound(sys: OneParticleSystem, tol_gap: float = 1e-6) -> bool:
    """Spectral gap must reach the continuum value sqrt(1-gamma^2) up to tol."""
    return sys.gap >= math.sqrt(1.0 - sys.gamma ** 2) - tol_gap


def weighted_unitary_norm(sys: OneParticleSystem) -> float:
    """||  |D_0|^(1/2) U_gamma |D_0|^(-1/2) ||, the weighted boundedness number."""
    return float(np.linalg.norm(sys.abs_d0_half @ sys.u_gamma @ sys.abs_d0_neg_half, 2))
