"""Strong and weak mixing rates of toral automorphisms.

Strong rate: the correlation |<U^n f, g>| of an automorphism is bounded by
e(n) ||f||_alpha ||g||_beta with the lattice envelope

    e(n) = sup_{k != 0} lambda(B^n k)^{-alpha/2} lambda(k)^{-beta/2},

B = (A^T)^{-1}.  The sup is evaluated over a scanned ball plus the forward
images A_*^m k0 of small modes (the near-contracting lattice directions
where the sup migrates as n grows); the remainder is controlled by the
crude tail bound |B^n k| >= |k| / |A|^n, reported as a certificate.

Weak rate: the Cesaro quantity ((1/n) sum_k |<U^k f, g>|^2)^{1/2} evaluated
exactly from the mode orbits (big integers, orbits never wrap), plus the
certified two-term lattice envelope whose n-exponent reproduces the
alpha = 0 regime table (1/2 above d/2, beta/d below).
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .fields import SpectralField
from .fitting import LineFit, line_fit
from .toral import ToralAutomorphism

Mode = Tuple[int, ...]


# ---------------------------------------------------------------------------
# rate functions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RateFunction:
    """Decreasing positive rate h with its (alpha, beta) class.

    kind "power": h(t) = c * t^{-p}; kind "exponential": h(t) = c1 e^{-c2 t};
    kind "tabulated": monotone samples (t_i, h_i) with log-linear
    interpolation.  Strong mode requires alpha > 0 and beta > 0; weak mode
    tabulated rates must respect the 1/sqrt(n) floor.
    """

    kind: str
    params: Tuple[float, ...] = ()
    samples: Optional[Tuple[Tuple[float, ...], Tuple[float, ...]]] = None
    alpha: float = 1.0
    beta: float = 1.0
    mode: str = "strong"

    def __post_init__(self):
        if self.kind not in ("power", "exponential", "tabulated"):
            raise ValueError(f"unknown rate kind {self.kind!r}")
        if self.mode not in ("strong", "weak"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("class exponents must be nonnegative")
        if self.mode == "strong" and (self.alpha == 0 or self.beta == 0):
            raise ValueError("strong rates need alpha > 0 and beta > 0")
        if self.kind == "power":
            c, p = self.params
            if c <= 0 or p <= 0:
                raise ValueError("power law needs c > 0, p > 0")
        elif self.kind == "exponential":
            c1, c2 = self.params
            if c1 <= 0 or c2 <= 0:
                raise ValueError("exponential law needs c1 > 0, c2 > 0")
        else:
            t, h = self.samples
            t = np.asarray(t, dtype=float)
            h = np.asarray(h, dtype=float)
            if t.size < 2 or np.any(np.diff(t) <= 0):
                raise ValueError("tabulated times must be strictly increasing")
            if np.any(h <= 0) or np.any(np.diff(h) >= 0):
                raise ValueError("tabulated rate must be strictly positive and decreasing")
            if self.mode == "weak":
                floor = 1.0 / np.sqrt(np.maximum(t, 1.0))
                if np.any(h < floor * (1.0 - 1e-12)):
                    raise ValueError("weak rates cannot decay faster than 1/sqrt(n)")
            object.__setattr__(self, "samples", (tuple(t), tuple(h)))

    @staticmethod
    def power(c: float, p: float, alpha: float = 1.0, beta: float = 1.0, mode: str = "strong"):
        return RateFunction("power", (c, p), alpha=alpha, beta=beta, mode=mode)

    @staticmethod
    def exponential(c1: float, c2: float, alpha: float = 1.0, beta: float = 1.0, mode: str = "strong"):
        return RateFunction("exponential", (c1, c2), alpha=alpha, beta=beta, mode=mode)

    @staticmethod
    def tabulated(t, h, alpha: float = 1.0, beta: float = 1.0, mode: str = "strong"):
        return RateFunction("tabulated", (), (tuple(t), tuple(h)), alpha=alpha, beta=beta, mode=mode)

    def __call__(self, t: float) -> float:
        if self.kind == "power":
            c, p = self.params
            return c * float(t) ** (-p) if t > 0 else math.inf
        if self.kind == "exponential":
            c1, c2 = self.params
            return c1 * math.exp(-c2 * float(t))
        ts, hs = self.samples
        if t <= ts[0]:
            return hs[0]
        if t >= ts[-1]:
            return hs[-1]
        i = bisect_right(ts, t) - 1
        w = (math.log(t) - math.log(ts[i])) / (math.log(ts[i + 1]) - math.log(ts[i])) if ts[i] > 0 else 0.0
        return math.exp((1 - w) * math.log(hs[i]) + w * math.log(hs[i + 1]))

    def inverse(self, y: float) -> float:
        """h^{-1}(y): the time at which the rate has dropped to y (0 if y >= h(0+))."""
        if y <= 0:
            raise ValueError("inverse needs y > 0")
        if self.kind == "power":
            c, p = self.params
            return (c / y) ** (1.0 / p)
        if self.kind == "exponential":
            c1, c2 = self.params
            return max(0.0, math.log(c1 / y) / c2)
        ts, hs = self.samples
        if y >= hs[0]:
            return float(ts[0])
        if y <= hs[-1]:
            return float(ts[-1])
        # hs decreasing: find bracketing samples and invert the log-linear chord
        i = 0
        while hs[i + 1] > y:
            i += 1
        w = (math.log(hs[i]) - math.log(y)) / (math.log(hs[i]) - math.log(hs[i + 1]))
        return math.exp((1 - w) * math.log(ts[i]) + w * math.log(ts[i + 1]))


def transfer_rate(
    h: RateFunction, alpha_new: float, beta_new: float, lambda_1: float
) -> RateFunction:
    """Move a strong (alpha, beta) rate to class (alpha', beta').

    h'(t) = lambda_1^{-gamma} h(t)^delta with

      gamma = [ (a'-a)^+ + (b'-b)^+ + (b' ^ b)(1 - a'/a)^+ + (a' ^ a)(1 - b'/b)^+ ] / 2
      delta = (a' ^ a)(b' ^ b) / (a b).

    The identity case a' = a, b' = b returns h unchanged.
    """
    if h.mode != "strong":
        raise ValueError("rate transfer applies to strong rates")
    a, b = h.alpha, h.beta
    ap, bp = alpha_new, beta_new
    if min(a, b, ap, bp) <= 0:
        raise ValueError("all class exponents must be positive")
    if lambda_1 <= 0:
        raise ValueError("lambda_1 must be positive")
    pos = lambda x: max(x, 0.0)
    gamma = 0.5 * (pos(ap - a) + pos(bp - b) + min(bp, b) * pos(1 - ap / a) + min(ap, a) * pos(1 - bp / b))
    delta = (min(ap, a) * min(bp, b)) / (a * b)
    prefactor = lambda_1 ** (-gamma)
    if h.kind == "exponential":
        c1, c2 = h.params
        return RateFunction.exponential(prefactor * c1**delta, delta * c2, ap, bp)
    if h.kind == "power":
        c, p = h.params
        return RateFunction.power(prefactor * c**delta, delta * p, ap, bp)
    ts, hs = h.samples
    new_hs = tuple(prefactor * v**delta for v in hs)
    return RateFunction.tabulated(ts, new_hs, ap, bp)


def transfer_exponents(alpha: float, beta: float, alpha_new: float, beta_new: float) -> Tuple[float, float]:
    """(gamma, delta) of the rate transfer, for direct formula checks."""
    pos = lambda x: max(x, 0.0)
    gamma = 0.5 * (
        pos(alpha_new - alpha)
        + pos(beta_new - beta)
        + min(beta_new, beta) * pos(1 - alpha_new / alpha)
        + min(alpha_new, alpha) * pos(1 - beta_new / beta)
    )
    delta = (min(alpha_new, alpha) * min(beta_new, beta)) / (alpha * beta)
    return gamma, delta


# ---------------------------------------------------------------------------
# strong envelope
# ---------------------------------------------------------------------------

@dataclass
class MixingEnvelope:
    """Lattice correlation envelope e(n) with per-n tail certificates.

    ``values[n]`` is the scanned sup; ``tail_certificate[n]`` bounds the
    possible contribution of unscanned modes via the crude expansion bound,
    and ``certified[n]`` records whether it is below ``epsilon * values[n]``.
    """

    n_values: np.ndarray
    values: np.ndarray
    tail_certificate: np.ndarray
    certified: np.ndarray
    alpha: float
    beta: float
    scan_radius: int
    fitted: Optional[RateFunction] = None

    def slope_fit(self, n_lo: int, n_hi: int) -> LineFit:
        mask = (self.n_values >= n_lo) & (self.n_values <= n_hi)
        return line_fit(self.n_values[mask], np.log(self.values[mask]))


class EnvelopeInfeasible(ValueError):
    """Requested tail accuracy needs an infeasible scan radius."""

    def __init__(self, epsilon_requested: float, epsilon_feasible: float):
        self.epsilon_feasible = epsilon_feasible
        super().__init__(
            f"tail accuracy {epsilon_requested:.2e} needs an infeasible scan "
            f"radius; feasible at this budget: epsilon >= {epsilon_feasible:.2e}"
        )


_DEFAULT_SCAN_RADIUS = {2: 400, 3: 40, 4: 16}
_COORD_LIMIT = 1_500_000_000  # keeps squared sums inside int64


def strong_envelope(
    automorphism: ToralAutomorphism,
    alpha: float,
    beta: float,
    n_max: int,
    epsilon: float = 1e-3,
    scan_radius: Optional[int] = None,
    orbit_seed_radius: int = 6,
    strict: bool = False,
) -> MixingEnvelope:
    """Evaluate e(n) = sup_k lambda(B^n k)^{-alpha/2} lambda(k)^{-beta/2}.

    Candidates: the ball |k| <= scan_radius plus forward images A_*^m k0 of
    seeds |k0| <= orbit_seed_radius for m <= n_max + 4 (the sup migrates
    along the expanding lattice directions when (d-1) alpha > beta).  The
    tail certificate for |k| > R is |A|^{n alpha} R^{-(alpha+beta)}; in
    strict mode the run aborts when it cannot be brought below
    epsilon * e(n) at this scan budget, reporting the feasible epsilon.
    """
    if alpha <= 0 or beta <= 0:
        raise ValueError("strong envelopes need alpha > 0 and beta > 0")
    report = automorphism.conditions()
    if not report.ergodic_irreducible:
        raise ValueError("strong envelope requires conditions C1 and C2")
    d = automorphism.dimension
    if scan_radius is None:
        scan_radius = _DEFAULT_SCAN_RADIUS[d]

    rng = np.arange(-scan_radius, scan_radius + 1, dtype=np.int64)
    grids = np.meshgrid(*([rng] * d), indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=1)
    nsq = np.sum(pts * pts, axis=1)
    keep = (nsq > 0) & (nsq <= scan_radius * scan_radius)
    pts = pts[keep]

    # orbit candidates: forward images of small seeds chase the sup outward
    seeds = pts[np.sum(pts * pts, axis=1) <= orbit_seed_radius**2]
    a_star = automorphism.array.T  # acts as m @ a_star.T below
    chunks = [pts]
    m = seeds
    for _ in range(n_max + 4):
        m = m @ a_star.T
        if np.max(np.abs(m)) > _COORD_LIMIT:
            break
        chunks.append(m.copy())
    all_pts = np.unique(np.concatenate(chunks, axis=0), axis=0)

    lam_k = np.sum(all_pts.astype(float) ** 2, axis=1)
    b_t = np.array(automorphism.inverse_transpose, dtype=np.int64)

    opnorm = automorphism.lipschitz
    values = np.empty(n_max + 1)
    tails = np.empty(n_max + 1)

    cur = all_pts.copy()
    for n in range(n_max + 1):
        lam_bk = np.sum(cur.astype(float) ** 2, axis=1)
        vals = lam_bk ** (-alpha / 2.0) * lam_k ** (-beta / 2.0)
        values[n] = float(np.max(vals))
        tails[n] = opnorm ** (n * alpha) * float(scan_radius) ** (-(alpha + beta))
        cur = cur @ b_t.T  # advance B^n k -> B^{n+1} k exactly in int64
        if np.max(np.abs(cur)) > _COORD_LIMIT:
            raise OverflowError("backward orbit left the int64-safe range; reduce n_max")

    certified = tails <= epsilon * values
    if strict and not bool(np.all(certified)):
        eps_feasible = float(np.max(tails / values))
        raise EnvelopeInfeasible(epsilon, eps_feasible)

    return MixingEnvelope(
        n_values=np.arange(n_max + 1),
        values=values,
        tail_certificate=tails,
        certified=certified,
        alpha=alpha,
        beta=beta,
        scan_radius=scan_radius,
    )


# ---------------------------------------------------------------------------
# weak rates
# ---------------------------------------------------------------------------

def weak_cesaro(
    automorphism: ToralAutomorphism,
    f: SpectralField,
    g: SpectralField,
    n: int,
) -> np.ndarray:
    """((1/n) sum_{k<n} |<U^k f, g>|^2)^{1/2} for all n' = 1..n, exactly.

    Correlations are evaluated as sum_m f^(m) conj(g^(A_*^k m)): the f
    support is pushed forward exactly (arbitrary-precision integers, the
    orbit of a mode never revisits the lattice ball once it leaves).
    """
    if not f.coefficients or not g.coefficients:
        raise ValueError("f and g need nonempty supports")
    fmodes = list(f.coefficients.items())
    gdict: Dict[Mode, complex] = dict(g.coefficients.items())
    cum = 0.0
    out = np.empty(n)
    current: List[Tuple[Mode, complex]] = [(m, a) for m, a in fmodes]
    for k in range(n):
        corr = 0j
        for m, a in current:
            gm = gdict.get(m)
            if gm is not None:
                corr += a * gm.conjugate()
        cum += abs(corr) ** 2
        out[k] = math.sqrt(cum / (k + 1))
        current = [(automorphism.push_mode(m), a) for m, a in current]
    return out


def lattice_ball_sum(d: int, beta: float, m_max: int) -> np.ndarray:
    """Partial sums A(m) = sum_{0 < |k| <= m} |k|^{-2 beta} for m = 1..m_max."""
    rng = np.arange(-m_max, m_max + 1, dtype=np.int64)
    grids = np.meshgrid(*([rng] * d), indexing="ij")
    nsq = sum(g.astype(np.int64) ** 2 for g in grids).ravel()
    nsq = nsq[(nsq > 0) & (nsq <= m_max * m_max)]
    radii = np.sqrt(nsq.astype(float))
    weights = nsq.astype(float) ** (-beta)
    order = np.argsort(radii, kind="stable")
    radii, weights = radii[order], np.cumsum(weights[order])
    out = np.empty(m_max)
    for m in range(1, m_max + 1):
        idx = np.searchsorted(radii, m, side="right") - 1
        out[m - 1] = weights[idx] if idx >= 0 else 0.0
    return out


def weak_rate_envelope(d: int, beta: float, n_values: Sequence[int]) -> np.ndarray:
    """Certified weak-rate envelope for the alpha = 0 class.

    h_w(n)^2 = min_m [ A(m)/n + m^{-2 beta} ] with A(m) the exact lattice
    ball sum: the two-term splitting of the Cesaro average over scales.
    Its n-exponent is 1/2 when beta > d/2 and beta/d when beta < d/2.  For
    ergodic irreducible automorphisms the realizable Cesaro sup is Theta(
    n^{-1/2}) for every beta > 0, so the sub-1/2 regime is exhibited by
    this envelope rather than by any concrete pair (f, g).
    """
    n_values = np.asarray(n_values, dtype=float)
    m_cap = int(math.ceil(max(n_values.max() ** (1.0 / d) * 4.0, 8.0)))
    sums = lattice_ball_sum(d, beta, m_cap)
    ms = np.arange(1, m_cap + 1, dtype=float)
    out = np.empty(n_values.size)
    for i, n in enumerate(n_values):
        out[i] = math.sqrt(float(np.min(sums / n + ms ** (-2.0 * beta))))
    return out


# ---------------------------------------------------------------------------
# rate fitting
# ---------------------------------------------------------------------------

def fit_rate(
    n_values: Sequence[float],
    values: Sequence[float],
    alpha: float = 1.0,
    beta: float = 1.0,
    mode: str = "strong",
) -> RateFunction:
    """Model selection between power and exponential decay on samples.

    Power:       ln v linear in ln n.   Exponential: ln v linear in n.
    The better RMS residual on the log scale wins.
    """
    n_values = np.asarray(n_values, dtype=float)
    values = np.asarray(values, dtype=float)
    if n_values.size < 5:
        raise ValueError("need at least 5 samples")
    if np.any(values <= 0):
        raise ValueError("samples must be positive")
    if np.any(np.diff(values) > 0):
        raise ValueError("samples must be non-increasing")
    pos = n_values > 0
    logv = np.log(values)
    fit_exp = line_fit(n_values, logv)
    fit_pow = line_fit(np.log(n_values[pos]), logv[pos])
    if fit_exp.residual <= fit_pow.residual:
        return RateFunction.exponential(
            math.exp(fit_exp.intercept), -fit_exp.slope, alpha, beta, mode=mode
        )
    return RateFunction.power(
        math.exp(fit_pow.intercept), -fit_pow.slope, alpha, beta, mode=mode
    )
