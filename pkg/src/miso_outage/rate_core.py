r"""Rates, beamformers, per-transmitter power frontiers and the achievability oracle.

Link rates treat interference as noise:

    R_i = log2(1 + |h_ii^H w_i|^2 / (|h_ji^H w_j|^2 + sigma_i^2)),

with per-transmitter power ||w_i|| <= 1. Rank-one transmission is optimal for
every channel realization, so the achievable region of a realization is fully
described by two scalar trade-off curves, one per transmitter: with a the own
channel and b the cross channel of a transmitter, the frontier

    p(q) = max { |a^H w|^2 : ||w|| <= 1, |b^H w|^2 <= q }
         = (c*sqrt(x) + d*sqrt(1-x))^2,   x = q/||b||^2 clamped to [0, q_mrt/||b||^2],

where c = |b^H a|/||b|| and d is the norm of the component of a orthogonal to b,
is the maximum useful signal power deliverable while causing at most q
interference. It rises concavely from the zero-forcing point (q=0, p=d^2) to
the matched-filter point (q = q_mrt = |b^H a|^2/||a||^2, p = ||a||^2) and is
constant beyond. A rate pair (r1, r2) is achievable for a realization iff

    g(q1) = p1(q1) - gamma1 * (q2min(q1) + sigma1^2)

is nonnegative for some q1, where gamma_i = 2^{r_i} - 1,
q2min(q1) = qmin_2(gamma2 * (q1 + sigma2^2)) is the least interference
transmitter 2 must cause to hand link 2 its target SINR, and qmin is the
frontier inverse. g is concave, so a fixed-count golden-section search decides
feasibility; the maximizer yields explicit witness beamformers.

Scalar operations act on single realizations; *_batch variants take stacked
(N, n) channel arrays and vectorize the same arithmetic across realizations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

LN2 = math.log(2.0)

# Golden-section constants and iteration count; 80 iterations shrink the
# bracket by ~4.6e17, well past double precision.
INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
INV_PHI_SQ = (3.0 - math.sqrt(5.0)) / 2.0
GOLDEN_ITERS = 80

# Non-strict feasibility: achievable iff max g >= -FEASIBILITY_SLACK (power
# units). Rate comparisons get the same absolute slack in bits.
FEASIBILITY_SLACK = 1e-9
RATE_SLACK = 1e-9

# ||b||^2 below this is treated as a vanished cross channel (frontier
# degenerates to p == ||a||^2, q == 0).
DEGENERATE_B_TOL = 1e-30

NORM_TOL = 1e-9


def gamma_from_rate(r) -> np.ndarray | float:
    """SINR threshold 2^r - 1 for a rate target r in bits."""
    return np.expm1(np.asarray(r, dtype=float) * LN2)


def rate_from_sinr(s) -> np.ndarray | float:
    return np.log1p(np.asarray(s, dtype=float)) / LN2


def as_rate_point(point) -> tuple[float, float]:
    r1, r2 = float(point[0]), float(point[1])
    if not (math.isfinite(r1) and math.isfinite(r2)) or r1 < 0.0 or r2 < 0.0:
        raise ValueError(f"rate point must be finite and nonnegative, got ({r1}, {r2})")
    return r1, r2


def _quad_form(h: np.ndarray, Psi: np.ndarray) -> float:
    return max(float(np.real(np.vdot(h, Psi @ h))), 0.0)


def validate_transmit_covariance(Psi: np.ndarray, name: str = "Psi") -> np.ndarray:
    """Hermitian PSD with trace <= 1 (power budget), small tolerances."""
    Psi = np.asarray(Psi, dtype=np.complex128)
    if Psi.ndim != 2 or Psi.shape[0] != Psi.shape[1]:
        raise ValueError(f"{name}: expected a square matrix, got shape {Psi.shape}")
    if np.max(np.abs(Psi - Psi.conj().T)) > 1e-9:
        raise ValueError(f"{name}: not Hermitian")
    if float(np.linalg.eigvalsh(Psi).min()) < -1e-9:
        raise ValueError(f"{name}: not positive semidefinite")
    tr = float(np.real(np.trace(Psi)))
    if tr > 1.0 + NORM_TOL:
        raise ValueError(f"{name}: trace {tr} exceeds unit power budget")
    return Psi


def validate_beamformer(w: np.ndarray, name: str = "w") -> np.ndarray:
    w = np.asarray(w, dtype=np.complex128)
    if w.ndim != 1:
        raise ValueError(f"{name}: expected a vector, got shape {w.shape}")
    nrm = float(np.linalg.norm(w))
    if nrm > 1.0 + NORM_TOL:
        raise ValueError(f"{name}: norm {nrm} exceeds unit power budget")
    return w


def rate_cov(h, Psi1, Psi2, link: int, sigma_sq: float) -> float:
    """Rate of one link under general transmit covariances (Psi1, Psi2)."""
    if link not in (1, 2):
        raise ValueError(f"link must be 1 or 2, got {link}")
    Psi1 = validate_transmit_covariance(Psi1, "Psi1")
    Psi2 = validate_transmit_covariance(Psi2, "Psi2")
    own_h = h.h11 if link == 1 else h.h22
    cross_h = h.h21 if link == 1 else h.h12
    own_Psi, cross_Psi = (Psi1, Psi2) if link == 1 else (Psi2, Psi1)
    signal = _quad_form(own_h, own_Psi)
    interference = _quad_form(cross_h, cross_Psi)
    return float(rate_from_sinr(signal / (interference + float(sigma_sq))))


def rate_bf(h, w1, w2, link: int, sigma_sq: float) -> float:
    """Rate of one link under beamformers (w1, w2); rank-one case of rate_cov."""
    if link not in (1, 2):
        raise ValueError(f"link must be 1 or 2, got {link}")
    w1 = validate_beamformer(w1, "w1")
    w2 = validate_beamformer(w2, "w2")
    own_h = h.h11 if link == 1 else h.h22
    cross_h = h.h21 if link == 1 else h.h12
    own_w, cross_w = (w1, w2) if link == 1 else (w2, w1)
    signal = abs(np.vdot(own_h, own_w)) ** 2
    interference = abs(np.vdot(cross_h, cross_w)) ** 2
    return float(rate_from_sinr(signal / (interference + float(sigma_sq))))


def su_rate(h, link: int, sigma_sq: float) -> float:
    """Single-user rate log2(1 + ||h_ii||^2 / sigma_i^2), the per-link ceiling."""
    if link not in (1, 2):
        raise ValueError(f"link must be 1 or 2, got {link}")
    own = h.h11 if link == 1 else h.h22
    return float(rate_from_sinr(float(np.linalg.norm(own)) ** 2 / float(sigma_sq)))


def mrt(h_vec) -> np.ndarray:
    """Matched-filter beamformer h/||h|| (zero vector stays zero)."""
    v = np.asarray(h_vec, dtype=np.complex128)
    nrm = float(np.linalg.norm(v))
    if nrm == 0.0:
        return np.zeros_like(v)
    return v / nrm


def zf(own, cross) -> np.ndarray:
    """Zero-forcing beamformer: normalized component of own orthogonal to cross."""
    a = np.asarray(own, dtype=np.complex128)
    b = np.asarray(cross, dtype=np.complex128)
    bsq = float(np.linalg.norm(b)) ** 2
    if bsq <= DEGENERATE_B_TOL:
        return mrt(a)
    resid = a - (np.vdot(b, a) / bsq) * b
    nrm = float(np.linalg.norm(resid))
    if nrm == 0.0:
        return np.zeros_like(a)
    return resid / nrm


# ---------------------------------------------------------------------------
# Power frontier
# ---------------------------------------------------------------------------


@dataclass
class PowerFrontier:
    """Signal-vs-caused-interference trade-off of one transmitter.

    c = |b^H a| / ||b||, d = distance of a from span(b), p_max = ||a||^2,
    q_mrt = |b^H a|^2 / ||a||^2. degenerate marks a vanished cross channel
    (p == p_max at zero caused interference). The own/cross vectors are kept
    for witness-beamformer reconstruction.
    """

    c: float
    d: float
    b_norm_sq: float
    p_max: float
    q_mrt: float
    degenerate: bool
    own: np.ndarray
    cross: np.ndarray

    def signal_power(self, q):
        """Max own-signal power with caused interference at most q (array ok)."""
        q = np.asarray(q, dtype=float)
        if self.degenerate:
            out = np.full(q.shape, self.p_max)
            return out if out.ndim else float(out)
        x = np.clip(np.minimum(q, self.q_mrt) / self.b_norm_sq, 0.0, 1.0)
        p = (self.c * np.sqrt(x) + self.d * np.sqrt(1.0 - x)) ** 2
        return p if p.ndim else float(p)


def power_frontier(own, cross) -> PowerFrontier:
    a = np.asarray(own, dtype=np.complex128)
    b = np.asarray(cross, dtype=np.complex128)
    asq = float(np.linalg.norm(a)) ** 2
    bsq = float(np.linalg.norm(b)) ** 2
    if bsq <= DEGENERATE_B_TOL:
        return PowerFrontier(0.0, math.sqrt(asq), bsq, asq, 0.0, True, a, b)
    inner = complex(np.vdot(b, a))
    c = abs(inner) / math.sqrt(bsq)
    resid = a - (inner / bsq) * b
    d = float(np.linalg.norm(resid))
    q_mrt = abs(inner) ** 2 / asq if asq > 0.0 else 0.0
    return PowerFrontier(c, d, bsq, asq, q_mrt, False, a, b)


def frontier_qmin(frontier: PowerFrontier, p_target: float) -> float:
    """Least caused interference at which p(q) reaches p_target.

    Exact inversion of the concave frontier: with s = sqrt(p_target), solving
    c*sqrt(x) + d*sqrt(1-x) = s gives u = sqrt(x) = (s c - d sqrt(p_max - s^2))
    / p_max and q = u^2 ||b||^2. Targets below the zero-forcing power d^2 cost
    nothing; targets above p_max (beyond a 1e-12 relative grace) raise.
    """
    t = float(p_target)
    if t <= 0.0:
        return 0.0
    if t > frontier.p_max * (1.0 + 1e-12) + 1e-300:
        raise ValueError(
            f"signal demand {t} exceeds maximum deliverable power {frontier.p_max}"
        )
    if frontier.degenerate or t <= frontier.d**2:
        return 0.0
    s = math.sqrt(min(t, frontier.p_max))
    u = (s * frontier.c - frontier.d * math.sqrt(max(frontier.p_max - s * s, 0.0))) / frontier.p_max
    q = u * u * frontier.b_norm_sq
    return float(min(max(q, 0.0), frontier.q_mrt))


def frontier_point(frontier: PowerFrontier, q: float) -> np.ndarray:
    """Unit-ball beamformer achieving (signal, interference) = (p(q), <= q).

    Phases of the along-b and orthogonal components are aligned so their
    signal contributions add coherently.
    """
    a, b = frontier.own, frontier.cross
    if frontier.p_max == 0.0:
        return np.zeros_like(a)
    if frontier.degenerate:
        return mrt(a)
    q = min(max(float(q), 0.0), frontier.q_mrt)
    bsq = frontier.b_norm_sq
    bhat = b / math.sqrt(bsq)
    alpha = complex(np.vdot(bhat, a))
    phase = alpha / abs(alpha) if abs(alpha) > 0.0 else 1.0
    x = math.sqrt(q / bsq)
    resid = a - alpha * bhat
    d = float(np.linalg.norm(resid))
    if d == 0.0:
        return x * phase * bhat
    y = math.sqrt(max(1.0 - q / bsq, 0.0))
    return x * phase * bhat + y * (resid / d)


# ---------------------------------------------------------------------------
# Batched frontiers
# ---------------------------------------------------------------------------


@dataclass
class FrontierBatch:
    """Per-realization frontier parameters as flat arrays (shape (N,))."""

    c: np.ndarray
    d: np.ndarray
    b_norm_sq: np.ndarray
    p_max: np.ndarray
    q_mrt: np.ndarray
    degenerate: np.ndarray


def frontier_batch(own: np.ndarray, cross: np.ndarray) -> FrontierBatch:
    """Frontier parameters for stacked (N, n) own/cross channel arrays."""
    A = np.asarray(own, dtype=np.complex128)
    B = np.asarray(cross, dtype=np.complex128)
    asq = np.sum(np.abs(A) ** 2, axis=1)
    bsq = np.sum(np.abs(B) ** 2, axis=1)
    inner = np.sum(B.conj() * A, axis=1)
    degenerate = bsq <= DEGENERATE_B_TOL
    safe_bsq = np.where(degenerate, 1.0, bsq)
    c = np.where(degenerate, 0.0, np.abs(inner) / np.sqrt(safe_bsq))
    resid = A - (inner / safe_bsq)[:, None] * B
    d = np.where(degenerate, np.sqrt(asq), np.linalg.norm(resid, axis=1))
    safe_asq = np.where(asq > 0.0, asq, 1.0)
    q_mrt = np.where(degenerate | (asq == 0.0), 0.0, np.abs(inner) ** 2 / safe_asq)
    return FrontierBatch(c, d, bsq, asq, q_mrt, degenerate)


def frontier_signal_batch(F: FrontierBatch, q: np.ndarray) -> np.ndarray:
    safe_bsq = np.where(F.degenerate, 1.0, F.b_norm_sq)
    x = np.clip(np.minimum(q, F.q_mrt) / safe_bsq, 0.0, 1.0)
    p = (F.c * np.sqrt(x) + F.d * np.sqrt(1.0 - x)) ** 2
    return np.where(F.degenerate, F.p_max, p)


def frontier_qmin_batch(F: FrontierBatch, t: np.ndarray) -> np.ndarray:
    """Vectorized frontier inverse; +inf where the demand exceeds p_max."""
    t = np.asarray(t, dtype=float)
    infeasible = t > F.p_max * (1.0 + 1e-12) + 1e-300
    free = (t <= F.d**2) | F.degenerate
    safe_pmax = np.where(F.p_max > 0.0, F.p_max, 1.0)
    s = np.sqrt(np.clip(t, 0.0, F.p_max))
    u = (s * F.c - F.d * np.sqrt(np.clip(F.p_max - s * s, 0.0, None))) / safe_pmax
    q = np.clip(u * u * F.b_norm_sq, 0.0, F.q_mrt)
    q = np.where(free, 0.0, q)
    return np.where(infeasible, np.inf, q)


def golden_max(f, lo: np.ndarray, hi: np.ndarray, iters: int = GOLDEN_ITERS):
    """Elementwise maximizer of a vectorized unimodal f over [lo, hi].

    Returns (x_best, f_best); endpoints are always evaluated, so monotone f is
    handled exactly up to bracket width.
    """
    a = np.array(lo, dtype=float, copy=True)
    b = np.array(hi, dtype=float, copy=True)
    x1 = a + INV_PHI_SQ * (b - a)
    x2 = a + INV_PHI * (b - a)
    f1, f2 = f(x1), f(x2)
    best_x = np.where(f1 >= f2, x1, x2)
    best_f = np.maximum(f1, f2)
    for _ in range(iters):
        keep_left = f1 >= f2
        b = np.where(keep_left, x2, b)
        a = np.where(keep_left, a, x1)
        x_new = np.where(keep_left, a + INV_PHI_SQ * (b - a), a + INV_PHI * (b - a))
        f_new = f(x_new)
        x1, f1, x2, f2 = (
            np.where(keep_left, x_new, x2),
            np.where(keep_left, f_new, f2),
            np.where(keep_left, x1, x_new),
            np.where(keep_left, f1, f_new),
        )
        improved = f_new > best_f
        best_x = np.where(improved, x_new, best_x)
        best_f = np.maximum(best_f, f_new)
    for x_end in (np.array(lo, dtype=float), np.array(hi, dtype=float)):
        f_end = f(x_end)
        improved = f_end > best_f
        best_x = np.where(improved, x_end, best_x)
        best_f = np.maximum(best_f, f_end)
    return best_x, best_f


def achievability_slack_batch(
    F1: FrontierBatch,
    F2: FrontierBatch,
    gamma1,
    gamma2,
    noise: tuple[float, float],
):
    """Max of g(q1) = p1(q1) - gamma1 (q2min(q1) + sigma1^2) per realization.

    Returns (g_max, q1_star, q2_star). g_max = -inf marks realizations where
    link 2's demand is infeasible even with transmitter 1 silent. gamma1 and
    gamma2 may be scalars or per-realization arrays.
    """
    sigma1_sq, sigma2_sq = float(noise[0]), float(noise[1])
    g1 = np.broadcast_to(np.asarray(gamma1, dtype=float), F1.c.shape)
    g2 = np.broadcast_to(np.asarray(gamma2, dtype=float), F1.c.shape)

    with np.errstate(divide="ignore", invalid="ignore"):
        q1_ub = np.where(g2 > 0.0, F2.p_max / np.where(g2 > 0.0, g2, 1.0) - sigma2_sq, np.inf)
    hi = np.minimum(F1.q_mrt, q1_ub)
    empty = hi < 0.0
    hi = np.maximum(hi, 0.0)
    lo = np.zeros_like(hi)

    def g(q1):
        q2min = frontier_qmin_batch(F2, g2 * (q1 + sigma2_sq))
        return frontier_signal_batch(F1, q1) - g1 * (q2min + sigma1_sq)

    # Empty-bracket realizations (clamped to q1 = 0) can probe an infinite
    # q2min; their g values are masked below, so silence the 0 * inf noise.
    with np.errstate(invalid="ignore"):
        q1_star, g_max = golden_max(g, lo, hi)
        q2_star = frontier_qmin_batch(F2, g2 * (q1_star + sigma2_sq))
    g_max = np.where(empty, -np.inf, g_max)
    q2_star = np.where(empty, 0.0, np.where(np.isfinite(q2_star), q2_star, 0.0))
    q1_star = np.where(empty, 0.0, q1_star)
    return g_max, q1_star, q2_star


def max_r2_batch(
    F1: FrontierBatch,
    F2: FrontierBatch,
    gamma1,
    noise: tuple[float, float],
) -> np.ndarray:
    """Largest achievable r2 per realization at fixed r1 (gamma1).

    Direct form of the trade-off: maximize the quasi-concave ratio
    phi(q2) = p2(q2) / (q1min(gamma1 (q2 + sigma1^2)) + sigma2^2) over the
    interference transmitter 2 may cause. Realizations with r1 above the
    single-user ceiling get -inf.
    """
    sigma1_sq, sigma2_sq = float(noise[0]), float(noise[1])
    g1 = np.broadcast_to(np.asarray(gamma1, dtype=float), F1.c.shape)

    with np.errstate(divide="ignore", invalid="ignore"):
        q2_ub = np.where(g1 > 0.0, F1.p_max / np.where(g1 > 0.0, g1, 1.0) - sigma1_sq, np.inf)
    hi = np.minimum(F2.q_mrt, q2_ub)
    infeasible = hi < 0.0
    hi = np.maximum(hi, 0.0)
    lo = np.zeros_like(hi)

    def phi(q2):
        q1min = frontier_qmin_batch(F1, g1 * (q2 + sigma1_sq))
        return frontier_signal_batch(F2, q2) / (q1min + sigma2_sq)

    _, phi_max = golden_max(phi, lo, hi)
    r2 = rate_from_sinr(phi_max)
    return np.where(infeasible, -np.inf, r2)


def su_sinr_batch(H: np.ndarray, sigma_sq: float) -> np.ndarray:
    return np.sum(np.abs(np.asarray(H)) ** 2, axis=1) / float(sigma_sq)


def su_rate_batch(H: np.ndarray, sigma_sq: float) -> np.ndarray:
    """Single-user rates for a stacked (N, n) own-channel array."""
    return rate_from_sinr(su_sinr_batch(H, sigma_sq))


def witness_rates_batch(
    F1: FrontierBatch,
    F2: FrontierBatch,
    q1: np.ndarray,
    q2: np.ndarray,
    noise: tuple[float, float],
):
    """Rates achieved when each transmitter operates its frontier at (q1, q2)."""
    sigma1_sq, sigma2_sq = float(noise[0]), float(noise[1])
    r1 = rate_from_sinr(frontier_signal_batch(F1, q1) / (q2 + sigma1_sq))
    r2 = rate_from_sinr(frontier_signal_batch(F2, q2) / (q1 + sigma2_sq))
    return r1, r2


# ---------------------------------------------------------------------------
# Achievability oracle (scalar)
# ---------------------------------------------------------------------------


@dataclass
class FeasibilityWitness:
    """Decision of the achievability oracle plus a constructive certificate.

    power_slack is the maximized g in power units (-inf when the target of
    link 2 is infeasible outright); margin is min_i (achieved rate_i - r_i)
    evaluated on the witness beamformers.
    """

    achievable: bool
    w1: np.ndarray
    w2: np.ndarray
    r1_achieved: float
    r2_achieved: float
    margin: float
    power_slack: float


def _single_frontier_batch(frontier: PowerFrontier) -> FrontierBatch:
    return FrontierBatch(
        c=np.array([frontier.c]),
        d=np.array([frontier.d]),
        b_norm_sq=np.array([frontier.b_norm_sq]),
        p_max=np.array([frontier.p_max]),
        q_mrt=np.array([frontier.q_mrt]),
        degenerate=np.array([frontier.degenerate]),
    )


def is_achievable(h, point, noise: tuple[float, float]) -> FeasibilityWitness:
    """Decide whether the rate pair lies in the realization's achievable region.

    Non-strict convention: the region is treated as comprehensive (rates may
    be reduced), and feasibility tolerates FEASIBILITY_SLACK in power units.
    """
    r1, r2 = as_rate_point(point)
    gamma1 = float(gamma_from_rate(r1))
    gamma2 = float(gamma_from_rate(r2))
    fr1 = power_frontier(h.h11, h.h12)
    fr2 = power_frontier(h.h22, h.h21)
    g_max, q1_star, q2_star = achievability_slack_batch(
        _single_frontier_batch(fr1), _single_frontier_batch(fr2), gamma1, gamma2, noise
    )
    g_max = float(g_max[0])
    if not np.isfinite(g_max):
        w1 = np.zeros(h.n, dtype=np.complex128)
        w2 = np.zeros(h.n, dtype=np.complex128)
    else:
        w1 = frontier_point(fr1, float(q1_star[0]))
        w2 = frontier_point(fr2, float(q2_star[0]))
    r1_ach = rate_bf(h, w1, w2, 1, noise[0])
    r2_ach = rate_bf(h, w1, w2, 2, noise[1])
    return FeasibilityWitness(
        achievable=bool(g_max >= -FEASIBILITY_SLACK),
        w1=w1,
        w2=w2,
        r1_achieved=r1_ach,
        r2_achieved=r2_ach,
        margin=min(r1_ach - r1, r2_ach - r2),
        power_slack=g_max,
    )


def max_r2_given_r1(
    h, r1: float, noise: tuple[float, float], tol: float = 1e-9
) -> float:
    """Largest r2 with (r1, r2) achievable, by bisection over the oracle.

    Raises when r1 itself is infeasible (above the link-1 single-user rate
    beyond the oracle's slack). With r1 = 0 returns the link-2 single-user
    rate exactly.
    """
    r1 = float(r1)
    if not is_achievable(h, (r1, 0.0), noise).achievable:
        raise ValueError(f"r1 = {r1} is infeasible for this realization")
    r2_cap = su_rate(h, 2, noise[1])
    if is_achievable(h, (r1, r2_cap), noise).achievable:
        return r2_cap
    lo, hi = 0.0, r2_cap
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if is_achievable(h, (r1, mid), noise).achievable:
            lo = mid
        else:
            hi = mid
    return lo
