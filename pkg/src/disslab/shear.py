"""Advection-diffusion by shear flows u = (v(y), 0) on T^2.

Spectral in x (nonzero integer wavenumbers |k1| <= K1, the zero-horizontal-
average subspace), collocation in y (M points, M a power of two).  Strang
splitting alternates an exact diffusion half-step in the y-spectral basis
with an exact advection step, the pointwise phase exp(-2 pi i k1 v(y) dt):
shear advection is diagonal in this representation, so both substeps are
unconditionally stable and only the splitting commutator contributes error
(global O(dt^2)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence, Tuple

import numpy as np

from .fields import SpectralConvention

_E_INV = 1.0 / math.e


@dataclass(frozen=True)
class ShearFlow:
    """Shear profile v(y) = mean + sum_m a_m cos(2 pi m y) + b_m sin(2 pi m y).

    ``grad_norm`` is sup |v'| (the L-infinity norm of the velocity gradient),
    evaluated on a 4096-point grid.  ``nondegenerate_critical_points`` is
    caller-supplied metadata (True for sin-like profiles: v'' != 0 where
    v' = 0); it gates which stationary-phase decay claims apply.
    """

    cos_coeffs: Tuple[float, ...] = ()
    sin_coeffs: Tuple[float, ...] = ()
    mean: float = 0.0
    nondegenerate_critical_points: bool = True

    @staticmethod
    def sinusoidal(amplitude: float = 1.0) -> "ShearFlow":
        """v(y) = amplitude * sin(2 pi y)."""
        return ShearFlow(sin_coeffs=(amplitude,), nondegenerate_critical_points=True)

    @property
    def bandwidth(self) -> int:
        return max(len(self.cos_coeffs), len(self.sin_coeffs), 1)

    def values(self, y: np.ndarray) -> np.ndarray:
        out = np.full_like(y, self.mean, dtype=float)
        for m, a in enumerate(self.cos_coeffs, start=1):
            out += a * np.cos(2.0 * math.pi * m * y)
        for m, b in enumerate(self.sin_coeffs, start=1):
            out += b * np.sin(2.0 * math.pi * m * y)
        return out

    def derivative_values(self, y: np.ndarray) -> np.ndarray:
        out = np.zeros_like(y, dtype=float)
        for m, a in enumerate(self.cos_coeffs, start=1):
            out -= a * 2.0 * math.pi * m * np.sin(2.0 * math.pi * m * y)
        for m, b in enumerate(self.sin_coeffs, start=1):
            out += b * 2.0 * math.pi * m * np.cos(2.0 * math.pi * m * y)
        return out

    @property
    def grad_norm(self) -> float:
        y = np.arange(4096) / 4096.0
        return float(np.max(np.abs(self.derivative_values(y))))

    def reversed(self) -> "ShearFlow":
        return replace(
            self,
            cos_coeffs=tuple(-a for a in self.cos_coeffs),
            sin_coeffs=tuple(-b for b in self.sin_coeffs),
            mean=-self.mean,
        )

    def min_grid(self) -> int:
        return max(32, 8 * self.bandwidth)


@dataclass
class CtsState:
    """theta_hat_{k1}(y_j) on nonzero x-wavenumbers and y collocation points.

    ``data`` has shape (n_bands, M) (collocation values per band).  The
    k1 = 0 band is excluded by default (functions with zero horizontal
    average); ``include_zero_x_band`` re-admits it for trivial-bound runs,
    with the constant (0, 0) mode always projected out.
    """

    convention: SpectralConvention
    nu: float
    k1: np.ndarray  # (n_bands,) int
    data: np.ndarray  # (n_bands, M) complex
    time: float = 0.0

    def __post_init__(self):
        if self.nu < 0:
            raise ValueError("nu must be nonnegative")
        m = self.data.shape[-1]
        if m & (m - 1):
            raise ValueError("M must be a power of two")
        if self.convention.dimension != 2:
            raise ValueError("shear solver lives on T^2")

    @property
    def grid_size(self) -> int:
        return int(self.data.shape[-1])

    @staticmethod
    def from_modes(
        modes: dict,
        k1_max: int,
        grid_size: int,
        nu: float,
        convention: Optional[SpectralConvention] = None,
        include_zero_x_band: bool = False,
    ) -> "CtsState":
        """Build a state from {(k1, m): amplitude} full Fourier modes."""
        conv = convention or SpectralConvention(2, "geometric")
        k1_vals = [k for k in range(-k1_max, k1_max + 1) if k != 0 or include_zero_x_band]
        k1_arr = np.array(k1_vals, dtype=np.int64)
        data = np.zeros((len(k1_vals), grid_size), dtype=complex)
        j = np.arange(grid_size)
        for (k1, m), amp in modes.items():
            if k1 == 0 and not include_zero_x_band:
                raise ValueError("mode with k1 = 0 in a zero-horizontal-average state")
            if k1 == 0 and m == 0:
                raise ValueError("constant mode is excluded (mean zero)")
            if abs(k1) > k1_max or abs(m) > grid_size // 2 - 1:
                raise ValueError(f"mode {(k1, m)} outside the truncation")
            row = int(np.nonzero(k1_arr == k1)[0][0])
            data[row] += amp * np.exp(2j * math.pi * m * j / grid_size)
        return CtsState(conv, nu, k1_arr, data)

    def y_frequencies(self) -> np.ndarray:
        m = self.grid_size
        return (np.fft.fftfreq(m) * m).astype(np.int64)

    def spectral(self) -> np.ndarray:
        """True Fourier coefficients c_{k1, m} (FFT / M)."""
        return np.fft.fft(self.data, axis=-1) / self.grid_size

    def energy(self) -> float:
        return float(np.sum(np.abs(self.data) ** 2) / self.grid_size)

    def h1_norm_sq(self) -> float:
        coeffs = self.spectral()
        lam = self._lambdas()
        return float(np.sum(lam * np.abs(coeffs) ** 2))

    def _lambdas(self) -> np.ndarray:
        m = self.y_frequencies()
        scale = self.convention.scale_factor
        lam = scale * (self.k1[:, None].astype(float) ** 2 + m[None, :].astype(float) ** 2)
        return lam

    def lambda_1(self) -> float:
        """Smallest eigenvalue present in the truncated space."""
        lam = self._lambdas()
        nonzero = lam > 0
        return float(np.min(lam[nonzero]))

    def copy(self) -> "CtsState":
        return CtsState(self.convention, self.nu, self.k1.copy(), self.data.copy(), self.time)


def _check_grid(flow: ShearFlow, state: CtsState):
    if state.grid_size < flow.min_grid():
        raise ValueError(
            f"M = {state.grid_size} under-resolves the shear profile "
            f"(bandwidth {flow.bandwidth}; need M >= {flow.min_grid()})"
        )


class _Stepper:
    """Precomputed Strang factors for one (flow, state shape, dt) triple."""

    def __init__(self, flow: ShearFlow, state: CtsState, dt: float, reverse: bool = False):
        _check_grid(flow, state)
        m = state.grid_size
        y = np.arange(m) / m
        v = flow.values(y)
        if reverse:
            v = -v
        scale = state.convention.scale_factor
        mfreq = (np.fft.fftfreq(m) * m).astype(float)
        lam = scale * (state.k1[:, None].astype(float) ** 2 + mfreq[None, :] ** 2)
        self.half_damp = np.exp(-state.nu * lam * dt / 2.0)
        self.full_damp = self.half_damp * self.half_damp
        self.phase = np.exp(-2j * math.pi * dt * state.k1[:, None].astype(float) * v[None, :])
        # the constant mode never participates, even with the zero band included
        zero_rows = state.k1 == 0
        if np.any(zero_rows):
            self.kill_mean = (zero_rows[:, None]) & (mfreq[None, :] == 0)
        else:
            self.kill_mean = None
        self.dt = dt

    def diffuse(self, data: np.ndarray, half: bool) -> np.ndarray:
        coeffs = np.fft.fft(data, axis=-1)
        coeffs *= self.half_damp if half else self.full_damp
        if self.kill_mean is not None:
            coeffs[..., self.kill_mean] = 0.0
        return np.fft.ifft(coeffs, axis=-1)

    def advect(self, data: np.ndarray) -> np.ndarray:
        return data * self.phase


def cts_step(state: CtsState, flow: ShearFlow, dt: float) -> CtsState:
    """One Strang step: half diffusion, exact advection, half diffusion."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    stepper = _Stepper(flow, state, dt)
    data = stepper.diffuse(state.data, half=True)
    data = stepper.advect(data)
    data = stepper.diffuse(data, half=True)
    return CtsState(state.convention, state.nu, state.k1, data, state.time + dt)


def evolve_cts(
    state: CtsState,
    flow: ShearFlow,
    t: float,
    dt_target: float = 0.02,
    reverse: bool = False,
) -> CtsState:
    """Advance the state by time t with merged Strang substeps.

    Consecutive diffusion half-steps are fused into full steps, halving
    the FFT count; the endpoint state is the exact Strang composition.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    steps = max(1, math.ceil(t / dt_target))
    dt = t / steps
    stepper = _Stepper(flow, state, dt, reverse=reverse)
    data = stepper.diffuse(state.data, half=True)
    for s in range(steps):
        data = stepper.advect(data)
        data = stepper.diffuse(data, half=(s == steps - 1))
    return CtsState(state.convention, state.nu, state.k1, data, state.time + t)


def advect_exact(state: CtsState, flow: ShearFlow, t: float) -> CtsState:
    """Pure transport (nu = 0): multiply each band by exp(-2 pi i k1 v(y) t)."""
    m = state.grid_size
    y = np.arange(m) / m
    v = flow.values(y)
    phase = np.exp(-2j * math.pi * t * state.k1[:, None].astype(float) * v[None, :])
    return CtsState(state.convention, state.nu, state.k1, state.data * phase, state.time + t)


def energy_identity_defects(
    state: CtsState, flow: ShearFlow, t: float, dt: float
) -> np.ndarray:
    """Per-step defect of d/dt ||theta||^2 + 2 nu ||theta||_1^2 = 0.

    Uses unfused Strang steps and a midpoint H^1 value; the defect per step
    is O(dt^3) locally, O(dt^2) accumulated, which the self-convergence
    test verifies by halving dt.
    """
    steps = max(1, math.ceil(t / dt))
    dt = t / steps
    cur = state
    defects = np.empty(steps)
    for s in range(steps):
        nxt = cts_step(cur, flow, dt)
        mid_h1 = 0.5 * (cur.h1_norm_sq() + nxt.h1_norm_sq())
        defects[s] = abs(nxt.energy() - cur.energy() + 2.0 * state.nu * dt * mid_h1)
        cur = nxt
    return defects


# ---------------------------------------------------------------------------
# dissipation time and the transport gap
# ---------------------------------------------------------------------------

class PowerIterationError(RuntimeError):
    pass


def _solution_norm(
    template: CtsState,
    flow: ShearFlow,
    t: float,
    rng: np.random.Generator,
    restarts: int = 5,
    iterations: int = 8,
    dt_target: float = 0.02,
) -> float:
    """Top singular value of the time-t solution map on the truncated space.

    Forward apply advances with +v; the adjoint is the solve with the
    reversed profile -v (the step factors are Hermitian conjugates in
    reverse order, and the diffusion factors are real symmetric).
    """
    shape = template.data.shape
    block = rng.standard_normal((restarts,) + shape) + 1j * rng.standard_normal((restarts,) + shape)

    def apply_block(arr: np.ndarray, reverse: bool) -> np.ndarray:
        out = np.empty_like(arr)
        for i in range(arr.shape[0]):
            st = CtsState(template.convention, template.nu, template.k1, arr[i].copy(), 0.0)
            out[i] = evolve_cts(st, flow, t, dt_target=dt_target, reverse=reverse).data
        return out

    norms = np.sqrt(np.sum(np.abs(block) ** 2, axis=(1, 2), keepdims=True))
    block = block / norms
    sigma = np.zeros(restarts)
    for _ in range(iterations):
        fwd = apply_block(block, reverse=False)
        # restart vectors are unit in the collocation inner product up to the
        # common 1/M factor, which cancels in the norm ratio
        sigma = np.sqrt(np.sum(np.abs(fwd) ** 2, axis=(1, 2)))
        back = apply_block(fwd, reverse=True)
        nb = np.sqrt(np.sum(np.abs(back) ** 2, axis=(1, 2), keepdims=True))
        nb[nb == 0] = 1.0
        block = back / nb
    return float(np.max(sigma))


def tau_d_cts(
    flow: ShearFlow,
    nu: float,
    convention: Optional[SpectralConvention] = None,
    k1_max: int = 16,
    grid_size: int = 64,
    rng: Optional[np.random.Generator] = None,
    rel_tol: float = 0.01,
    dt_target: float = 0.02,
    t_hint: Optional[float] = None,
) -> float:
    """Continuous dissipation time: smallest t with operator norm < 1/e.

    The flow is time independent, so the sup over start times in the
    definition is vacuous.  The norm at each t comes from power iteration
    (5 random restarts, 8 iterations, adjoint = reversed profile); t is
    then located by bracket doubling and bisection to 1% relative.
    """
    if not 1e-4 <= nu <= 1e-1:
        raise ValueError("nu outside the supported desk range [1e-4, 1e-1]")
    if k1_max > 32 or grid_size > 128:
        raise ValueError("truncation exceeds the supported range (K1 <= 32, M <= 128)")
    conv = convention or SpectralConvention(2, "geometric")
    rng = rng or np.random.default_rng(0)
    k1 = np.array([k for k in range(-k1_max, k1_max + 1) if k != 0], dtype=np.int64)
    template = CtsState(conv, nu, k1, np.zeros((k1.size, grid_size), dtype=complex))
    _check_grid(flow, template)

    def sigma(t: float) -> float:
        val = _solution_norm(template, flow, t, rng, dt_target=dt_target)
        if not math.isfinite(val):
            # widen the restarts once before giving up
            val = _solution_norm(template, flow, t, rng, restarts=10, iterations=16, dt_target=dt_target)
            if not math.isfinite(val):
                raise PowerIterationError("operator norm estimate did not converge")
        return val

    lam1 = template.lambda_1()
    t_cap = 1.2 / (nu * lam1) + 1.0  # trivial heat bound, padded
    hi = min(t_hint or 1.0, t_cap)
    while sigma(hi) >= _E_INV:
        hi *= 2.0
        if hi > 4.0 * t_cap:
            raise RuntimeError("no norm drop below 1/e within the trivial bound horizon")
    lo = hi / 2.0
    if sigma(lo) < _E_INV:
        # hint overshot: walk the bracket down
        while lo > 1e-6 and sigma(lo) < _E_INV:
            hi = lo
            lo /= 2.0
    while (hi - lo) > rel_tol * hi:
        mid = 0.5 * (lo + hi)
        if sigma(mid) < _E_INV:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def transport_gap_cts(
    state: CtsState, flow: ShearFlow, nu: float, t: float, dt_target: float = 0.02
) -> dict:
    """Squared distance to the inviscid transport and its a priori bound.

    gap^2 = ||theta(t) - phi(t)||^2  with phi the exact nu = 0 shear flow;
    bound = (nu / (2 |grad u|)) exp(2 |grad u| t) ||theta_0||_1^2.
    """
    if t <= 0 or t > 10.0:
        raise ValueError("t must lie in (0, 10]")
    start = CtsState(state.convention, nu, state.k1, state.data.copy(), 0.0)
    evolved = evolve_cts(start, flow, t, dt_target=dt_target)
    transported = advect_exact(start, flow, t)
    diff = evolved.data - transported.data
    gap_sq = float(np.sum(np.abs(diff) ** 2) / state.grid_size)
    grad = flow.grad_norm
    bound = nu / (2.0 * grad) * math.exp(2.0 * grad * t) * start.h1_norm_sq()
    return {"gap_sq": gap_sq, "bound": bound}


def shear_correlation(
    state: CtsState, flow: ShearFlow, other: CtsState, times: Sequence[float], quad_size: int = 4096
) -> np.ndarray:
    """|<theta_0 o phi_t, g>| along pure transport (stationary-phase decay).

    The transported field is theta_hat_{k1}(y) e^{-2 pi i k1 v(y) t}; the
    pairing reduces to a y-quadrature per shared band.  The states are
    band-limited in y, but the transport phase is not: both fields are
    upsampled by trigonometric interpolation to ``quad_size`` points so
    the quadrature resolves phases up to |k1| * t * |v'| ~ quad_size / 4.
    """
    if not np.array_equal(state.k1, other.k1):
        raise ValueError("states must share the same band layout")

    def upsample(data: np.ndarray) -> np.ndarray:
        m = data.shape[-1]
        spec = np.fft.fft(data, axis=-1) / m
        wide = np.zeros(data.shape[:-1] + (quad_size,), dtype=complex)
        half = m // 2
        wide[..., :half] = spec[..., :half]
        wide[..., quad_size - half :] = spec[..., half:]
        return np.fft.ifft(wide, axis=-1) * quad_size

    a = upsample(state.data)
    b = upsample(other.data)
    y = np.arange(quad_size) / quad_size
    v = flow.values(y)
    out = np.empty(len(times))
    for i, t in enumerate(times):
        phase = np.exp(-2j * math.pi * t * state.k1[:, None].astype(float) * v[None, :])
        vals = a * phase * np.conj(b)
        out[i] = abs(complex(np.sum(vals) / quad_size))
    return out
