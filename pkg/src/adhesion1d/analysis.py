"""Linear stability, pattern diagnostics and steady-state detection.

Linearising the PDE about the homogeneous state u_bar on a periodic domain
gives the dispersion relation

    lambda(k) = -D k^2 + alpha * u_bar * k * S(k),
    S(k) = 2 * integral_0^R sin(k r) omega(r) dr,

whose zeros in alpha at the admissible wavenumbers k_n = 2 pi n / L are the
bifurcation points of the constant solution.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.signal import find_peaks

from .errors import InvalidParameterError
from .integrator import State
from .kernels import InteractionKernel

__all__ = [
    "DispersionPoint",
    "BifurcationPoint",
    "PeakCensus",
    "GrowthFit",
    "shape_factor",
    "growth_rate",
    "bifurcation_alpha",
    "dispersion_table",
    "mode_amplitude",
    "measure_growth_rate",
    "peak_census",
    "diagnostics",
    "detect_steady",
]


@dataclass(frozen=True)
class DispersionPoint:
    k: float
    growth_rate: float
    mode_index: int | None = None


@dataclass(frozen=True)
class BifurcationPoint:
    mode_index: int
    k: float
    alpha: float


def shape_factor(k: float, kernel: InteractionKernel) -> float:
    """S(k) = 2 * integral_0^R sin(k r) omega(r) dr, computed by quadrature.

    For the uniform kernel this equals (1 - cos kR)/(kR); the tests pin the
    quadrature against that and the tent closed form.
    """
    if k == 0.0:
        return 0.0
    val, _ = quad(
        lambda r: np.sin(k * r) * kernel.omega(r),
        0.0,
        kernel.R,
        epsabs=1e-14,
        epsrel=1e-14,
        limit=400,
    )
    return 2.0 * val


def growth_rate(
    k: float, alpha: float, D: float, u_bar: float, kernel: InteractionKernel
) -> float:
    """Linear growth rate lambda(k) of a perturbation mode e^{ikx}."""
    if k < 0:
        raise InvalidParameterError("wavenumber must be non-negative")
    if k == 0.0:
        return 0.0
    return -D * k**2 + alpha * u_bar * k * shape_factor(k, kernel)


def bifurcation_alpha(
    n: int, L: float, D: float, u_bar: float, kernel: InteractionKernel
) -> float:
    """Adhesion strength at which mode n loses stability: alpha_n = D k / (u_bar S(k))."""
    if n < 1:
        raise InvalidParameterError("mode index must be >= 1")
    k = 2.0 * np.pi * n / L
    S = shape_factor(k, kernel)
    if abs(S) < 1e-13:
        raise InvalidParameterError(
            f"mode {n} has vanishing shape factor S(k); no bifurcation in alpha"
        )
    return D * k / (u_bar * S)


def dispersion_table(
    L: float, D: float, u_bar: float, kernel: InteractionKernel, n_max: int = 3
) -> list[BifurcationPoint]:
    """Bifurcation values alpha_n for n = 1..n_max (modes with S(k) = 0 skipped)."""
    out = []
    for n in range(1, n_max + 1):
        k = 2.0 * np.pi * n / L
        try:
            a_n = bifurcation_alpha(n, L, D, u_bar, kernel)
        except InvalidParameterError:
            continue
        out.append(BifurcationPoint(mode_index=n, k=k, alpha=a_n))
    return out


def mode_amplitude(u: np.ndarray, n: int) -> float:
    """Amplitude of Fourier mode n of samples on a uniform periodic grid."""
    c = np.fft.rfft(np.asarray(u, dtype=float))
    return 2.0 * np.abs(c[n]) / u.size


@dataclass
class GrowthFit:
    rate: float | None
    stable: bool
    window: tuple[float, float] | None
    n_points: int


def measure_growth_rate(
    trajectory: list[State], mode_index: int, epsilon: float
) -> GrowthFit:
    """Fit the exponential rate of one Fourier mode from a seeded run.

    Growing runs are fitted on the window where the amplitude lies in
    [2 eps, 20 eps] (inside the linear regime, one decade of growth).
    Runs whose amplitude never reaches 2 eps are reported as mode-stable
    and fitted on their decaying segment where the amplitude is still well
    above rounding noise.
    """
    if len(trajectory) < 2:
        raise InvalidParameterError("need at least two snapshots")
    t = np.array([s.t for s in trajectory])
    amp = np.array([mode_amplitude(s.u, mode_index) for s in trajectory])
    grew = amp >= 2.0 * epsilon
    if np.any(grew):
        i0 = int(np.argmax(grew))
        above = amp > 20.0 * epsilon
        i1 = int(np.argmax(above)) if np.any(above) else amp.size
        sel = slice(i0, max(i1, i0 + 2))
        tt, aa = t[sel], amp[sel]
        if tt.size < 2:
            return GrowthFit(rate=None, stable=False, window=None, n_points=int(tt.size))
        slope = np.polyfit(tt, np.log(aa), 1)[0]
        return GrowthFit(
            rate=float(slope), stable=False, window=(float(tt[0]), float(tt[-1])), n_points=tt.size
        )
    # stay three decades above the seed's rounding/integration noise floor
    floor = max(epsilon * 1e-3, 1e2 * np.finfo(float).eps)
    mask = amp > floor
    mask &= amp <= 0.9 * epsilon
    if np.count_nonzero(mask) < 2:
        return GrowthFit(rate=None, stable=True, window=None, n_points=int(np.count_nonzero(mask)))
    tt, aa = t[mask], amp[mask]
    slope = np.polyfit(tt, np.log(aa), 1)[0]
    return GrowthFit(
        rate=float(slope), stable=True, window=(float(tt[0]), float(tt[-1])), n_points=tt.size
    )


@dataclass
class PeakCensus:
    count: int
    locations: np.ndarray
    prominences: np.ndarray
    left_half_peak: bool = False
    right_half_peak: bool = False


def peak_census(
    u: np.ndarray,
    min_prominence: float = 0.1,
    x: np.ndarray | None = None,
    periodic: bool = False,
    flat_tol: float = 1e-3,
    wall_layer: float = 0.0,
) -> PeakCensus:
    """Count interior density peaks with prominence above a fraction of the range.

    Profiles whose total range is below flat_tol * max|u| are reported as
    peakless (a constant state carries no aggregates, only ripple).  On
    periodic grids the array is rotated so its minimum sits at the seam,
    which makes a peak straddling the wrap-around visible.  On bounded
    grids a crest within wall_layer of a wall that decreases into the
    interior counts as a half-peak rather than an interior peak (with the
    default wall_layer of zero only the boundary cell itself qualifies);
    passing half a sensing radius captures wall aggregates whose crest the
    zero-gradient wall condition pushes a few cells inward.
    """
    u = np.asarray(u, dtype=float)
    if u.size < 3:
        raise InvalidParameterError("need at least three samples")
    n = u.size
    if x is None:
        x = (np.arange(n) + 0.5) / n
    x = np.asarray(x, dtype=float)
    rng = float(np.max(u) - np.min(u))
    if rng <= flat_tol * max(float(np.max(np.abs(u))), 1e-300):
        return PeakCensus(count=0, locations=np.empty(0), prominences=np.empty(0))
    threshold = min_prominence * rng

    if periodic:
        shift = int(np.argmin(u))
        ur = np.roll(u, -shift)
        idx, props = find_peaks(ur, prominence=threshold)
        orig = (idx + shift) % n
        order = np.argsort(x[orig])
        return PeakCensus(
            count=int(idx.size),
            locations=x[orig][order],
            prominences=props["prominences"][order],
        )

    padded = np.concatenate(([-np.inf], u, [-np.inf]))
    idx, props = find_peaks(padded, prominence=threshold)
    idx = idx - 1
    left = right = False
    interior = np.ones(idx.size, dtype=bool)
    for pos, i in enumerate(idx):
        if x[i] - x[0] <= wall_layer:
            left = True
            interior[pos] = False
        elif x[-1] - x[i] <= wall_layer:
            right = True
            interior[pos] = False
    return PeakCensus(
        count=int(np.count_nonzero(interior)),
        locations=x[idx[interior]],
        prominences=props["prominences"][interior],
        left_half_peak=left,
        right_half_peak=right,
    )


def diagnostics(state: State, L: float) -> dict:
    """Mass, L2 norm, discrete H1 seminorm, extrema and boundary values."""
    u = state.u
    n = u.size
    h = L / n
    vals = {
        "t": float(state.t),
        "mass": float(h * np.sum(u)),
        "l2_norm": float(np.sqrt(h * np.sum(u**2))),
        "h1_seminorm": float(np.sqrt(np.sum(np.diff(u) ** 2) / h)),
        "max": float(np.max(u)),
        "min": float(np.min(u)),
        "u_left": float(u[0]),
        "u_right": float(u[-1]),
    }
    vals["finite"] = bool(np.all(np.isfinite(u)))
    return vals


def detect_steady(
    trajectory: list[State], window: float = 2.0, tol: float = 1e-5
) -> tuple[bool, float | None]:
    """Steady when the max-norm change per unit time over a trailing window
    stays below tol * max|u|.  Returns (steady, settling time)."""
    if len(trajectory) < 2:
        raise InvalidParameterError("need at least two snapshots")
    t = np.array([s.t for s in trajectory])
    rates = np.empty(len(trajectory) - 1)
    for i in range(len(trajectory) - 1):
        dt = t[i + 1] - t[i]
        du = np.max(np.abs(trajectory[i + 1].u - trajectory[i].u))
        rates[i] = du / dt if dt > 0 else 0.0
    scale = max(np.max(np.abs(trajectory[-1].u)), 1e-300)
    for i in range(len(trajectory)):
        t_end = t[i]
        if t_end - t[0] < window:
            continue
        in_win = (t[1:] > t_end - window) & (t[1:] <= t_end + 1e-14)
        if np.any(in_win) and np.all(rates[in_win] < tol * scale):
            return True, float(t_end)
    return False, None
