"""Gaussian-beam mode mathematics for a plano-concave Fabry-Perot cavity.

Resonances of the empty cavity follow

    nu_m = c / (2 n L) * (m + (q + 1) * arccos(sqrt(1 - L/ROC)) / pi)

for longitudinal index m, transverse order q (0 for the fundamental) and
effective length L. Mirror field penetration is folded into L and never
modeled separately. An elliptical concave mirror is reduced to a scalar
radius of curvature, by default the geometric mean sqrt(roc_x * roc_y);
per-axis values are available through ``roc_mode``.

Wavelengths are the in-gap values c/(n * nu); with a vacuum or air gap
(n = 1) they equal vacuum wavelengths. Internal units: um for lengths,
nm for wavelengths, THz for mode frequencies, GHz for linewidths.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import brentq
from scipy.signal import find_peaks

from . import fitkit
from .dataio import ScanTrace, SpectralMap, Spectrum
from .errors import (
    CavityLabError,
    GeometryError,
    InsufficientDataError,
    SearchError,
    TrackingBreakError,
    ValidationError,
)

__all__ = [
    "CavityFigures",
    "CavityGeometry",
    "DoubleResonance",
    "ModeResonance",
    "cavity_figures",
    "cte_fit",
    "detect_peaks",
    "dispersion_map",
    "double_resonance_search",
    "drift_series",
    "effective_length_from_adjacent_modes",
    "finesse_from_scan",
    "fit_lorentzian_peak",
    "gouy_fraction",
    "gouy_term",
    "mode_frequency",
    "resonance_length",
    "scalar_roc",
]

# speed of light in the unit systems used internally:
# nu[GHz] = C_NM_GHZ / lambda[nm]; nu[THz] = C_UM_THZ / length[um]
C_NM_GHZ = 2.99792458e8
C_NM_THZ = 2.99792458e5
C_UM_THZ = 299.792458


@dataclass(frozen=True)
class CavityGeometry:
    """Concave-mirror radii, effective length and gap index of one cavity."""

    roc_x_um: float
    roc_y_um: float
    l_eff_um: float
    refractive_index: float = 1.0

    def __post_init__(self):
        if not (self.roc_x_um > 0 and self.roc_y_um > 0):
            raise GeometryError("radii of curvature must be positive")
        if not 0 < self.l_eff_um < min(self.roc_x_um, self.roc_y_um):
            raise GeometryError(
                f"stability requires 0 < l_eff ({self.l_eff_um} um) < "
                f"min(roc_x, roc_y) ({min(self.roc_x_um, self.roc_y_um)} um)"
            )
        if not self.refractive_index >= 1.0:
            raise GeometryError("refractive_index must be >= 1")

    def with_length(self, l_eff_um: float) -> "CavityGeometry":
        return CavityGeometry(self.roc_x_um, self.roc_y_um, l_eff_um, self.refractive_index)


def scalar_roc(roc, roc_mode: str = "geometric") -> float:
    """Reduce a geometry (or pass through a scalar) to one radius of curvature."""
    if isinstance(roc, CavityGeometry):
        if roc_mode == "geometric":
            return math.sqrt(roc.roc_x_um * roc.roc_y_um)
        if roc_mode == "x":
            return roc.roc_x_um
        if roc_mode == "y":
            return roc.roc_y_um
        raise ValidationError(f"roc_mode must be geometric, x or y, got {roc_mode!r}")
    value = float(roc)
    if value <= 0:
        raise GeometryError("radius of curvature must be positive")
    return value


def gouy_fraction(l_eff_um: float, roc_um: float) -> float:
    """Gouy contribution arccos(sqrt(1 - L/ROC))/pi, in [0, 1/2)."""
    if roc_um <= 0:
        raise GeometryError("radius of curvature must be positive")
    if not 0 <= l_eff_um < roc_um:
        raise GeometryError(
            f"stability violated: need 0 <= L ({l_eff_um} um) < ROC ({roc_um} um)"
        )
    return math.acos(math.sqrt(1.0 - l_eff_um / roc_um)) / math.pi


def gouy_term(geom: CavityGeometry, roc_mode: str = "geometric") -> float:
    """Gouy term of the fundamental mode for a validated geometry."""
    return gouy_fraction(geom.l_eff_um, scalar_roc(geom, roc_mode))


@dataclass(frozen=True)
class ModeResonance:
    """One cavity resonance: longitudinal index, wavelength and frequency."""

    m: int
    wavelength_nm: float
    frequency_thz: float
    transverse_order: int = 0
    refractive_index: float = 1.0

    def __post_init__(self):
        if self.m < 1:
            raise ValidationError("longitudinal index m must be >= 1")
        if self.transverse_order < 0:
            raise ValidationError("transverse_order must be >= 0")
        product = self.wavelength_nm * self.frequency_thz
        expected = C_NM_THZ / self.refractive_index
        if abs(product - expected) > 1e-6 * expected:
            raise ValidationError(
                "wavelength*frequency inconsistent with c/n beyond 1 ppm"
            )


def mode_frequency(
    geom: CavityGeometry,
    m: int,
    transverse_order: int = 0,
    roc_mode: str = "geometric",
) -> ModeResonance:
    """Resonance of longitudinal index ``m`` (and transverse order q)."""
    if m < 1:
        raise ValidationError("longitudinal index m must be >= 1")
    g = gouy_term(geom, roc_mode)
    phase_index = m + (transverse_order + 1) * g
    n = geom.refractive_index
    freq_thz = C_UM_THZ / (2.0 * n * geom.l_eff_um) * phase_index
    wavelength_nm = 2000.0 * geom.l_eff_um / phase_index
    return ModeResonance(
        m=m,
        wavelength_nm=wavelength_nm,
        frequency_thz=freq_thz,
        transverse_order=transverse_order,
        refractive_index=n,
    )


def resonance_length(
    wavelength_nm: float,
    m: int,
    roc,
    transverse_order: int = 0,
    roc_mode: str = "geometric",
) -> float:
    """Length (um) at which index ``m`` resonates at the given wavelength.

    Solves 2 L / lambda = m + (q + 1) * gouy(L) by bracketed root finding;
    the residual frequency error of the returned root is below 1 MHz.
    """
    if m < 1:
        raise ValidationError("longitudinal index m must be >= 1")
    if wavelength_nm <= 0:
        raise ValidationError("wavelength must be positive")
    roc_um = scalar_roc(roc, roc_mode)
    order = transverse_order + 1

    def mismatch(l_um):
        return 2000.0 * l_um / wavelength_nm - order * gouy_fraction(l_um, roc_um) - m

    lo = 1e-9
    hi = roc_um * (1.0 - 1e-12)
    if mismatch(lo) > 0 or mismatch(hi) < 0:
        raise SearchError(
            f"no resonance length in (0, {roc_um} um) for m={m}, "
            f"lambda={wavelength_nm} nm"
        )
    l_um = brentq(mismatch, lo, hi, xtol=1e-13, rtol=8.9e-16)
    # residual check in frequency units (1 MHz = 1e-6 THz)
    freq = C_UM_THZ / (2.0 * l_um) * (m + order * gouy_fraction(l_um, roc_um))
    target = C_NM_THZ / wavelength_nm
    if abs(freq - target) > 1e-6:
        raise SearchError("root refinement failed to reach 1 MHz residual")
    return l_um


@dataclass(frozen=True)
class DoubleResonance:
    """A simultaneous excitation/detection resonance candidate."""

    m_exc: int
    m_det: int
    l_eff_um: float
    mismatch_um: float


def _mode_index_range(wavelength_nm, l_range_um, order) -> range:
    m_lo = max(1, math.floor(2000.0 * l_range_um[0] / wavelength_nm) - 1)
    m_hi = math.ceil(2000.0 * l_range_um[1] / wavelength_nm) + 1
    return range(m_lo, m_hi + 1)


def double_resonance_search(
    lambda_exc_nm: float,
    lambda_det_nm: float,
    roc,
    l_range_um: tuple[float, float],
    tolerance_um: float,
    roc_mode: str = "geometric",
) -> list[DoubleResonance]:
    """All index pairs whose resonance lengths agree within ``tolerance_um``.

    Candidates are sorted by length mismatch (the physically tunable
    variable); an empty list is a valid outcome.
    """
    roc_um = scalar_roc(roc, roc_mode)
    lo = max(l_range_um[0], 1e-6)
    hi = min(l_range_um[1], roc_um * (1 - 1e-9))
    if not lo < hi:
        raise ValidationError("l_range must be a non-empty interval inside stability")

    def lengths(wavelength):
        out = {}
        for m in _mode_index_range(wavelength, (lo, hi), 1):
            try:
                l_um = resonance_length(wavelength, m, roc_um)
            except SearchError:
                continue
            if lo <= l_um <= hi:
                out[m] = l_um
        return out

    exc = lengths(lambda_exc_nm)
    det = lengths(lambda_det_nm)
    candidates = []
    for m_exc, l_exc in exc.items():
        for m_det, l_det in det.items():
            mismatch = abs(l_exc - l_det)
            if mismatch < tolerance_um:
                candidates.append(
                    DoubleResonance(
                        m_exc=m_exc,
                        m_det=m_det,
                        l_eff_um=0.5 * (l_exc + l_det),
                        mismatch_um=mismatch,
                    )
                )
    candidates.sort(key=lambda c: (c.mismatch_um, c.m_exc, c.m_det))
    return candidates


def dispersion_map(
    roc,
    l_grid_um,
    m_values: Sequence[int],
    transverse_orders: Sequence[int] = (0,),
    roc_mode: str = "geometric",
) -> np.ndarray:
    """Resonance wavelengths over a length sweep.

    Returns an array with columns (l_eff_um, wavelength_nm, mode_m,
    transverse_order), ready for CSV export.
    """
    roc_um = scalar_roc(roc, roc_mode)
    rows = []
    for l_um in np.asarray(l_grid_um, dtype=float):
        g = gouy_fraction(l_um, roc_um)
        for q in transverse_orders:
            for m in m_values:
                wavelength = 2000.0 * l_um / (m + (q + 1) * g)
                rows.append((l_um, wavelength, float(m), float(q)))
    return np.array(rows)


# ---------------------------------------------------------------------------
# Cavity figures of merit
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CavityFigures:
    """Derived cavity quantities for one (geometry, finesse, mode) setting.

    ``quality_factor`` follows the mode-number route m_det * finesse;
    ``quality_factor_linewidth`` is the alternative nu/kappa route. The two
    disagree whenever finesse and linewidth were measured independently, so
    both are reported and never silently mixed.
    """

    fsr_thz: float
    finesse: float
    kappa_ghz: float
    quality_factor: float
    quality_factor_linewidth: float
    beam_waist_um: float
    mirror_spot_um: float
    mode_volume_lambda3: float

    def __post_init__(self):
        if self.quality_factor <= 0:
            raise ValidationError("quality factor must be positive")
        if self.mirror_spot_um < self.beam_waist_um:
            raise ValidationError("mirror spot cannot be smaller than the waist")

    def as_dict(self) -> dict:
        return {
            "fsr_thz": self.fsr_thz,
            "finesse": self.finesse,
            "kappa_ghz": self.kappa_ghz,
            "quality_factor": self.quality_factor,
            "quality_factor_linewidth": self.quality_factor_linewidth,
            "quality_factor_ratio": self.quality_factor / self.quality_factor_linewidth,
            "beam_waist_um": self.beam_waist_um,
            "mirror_spot_um": self.mirror_spot_um,
            "mode_volume_lambda3": self.mode_volume_lambda3,
        }


def beam_waist_um(geom: CavityGeometry, wavelength_nm: float, roc_mode="geometric") -> float:
    """1/e^2 intensity waist radius at the flat mirror (um)."""
    roc_um = scalar_roc(geom, roc_mode)
    l_um = geom.l_eff_um
    lam_um = wavelength_nm / 1000.0 / geom.refractive_index
    w0_sq = (lam_um / math.pi) * math.sqrt(l_um * (roc_um - l_um))
    return math.sqrt(w0_sq)


def mirror_spot_um(geom: CavityGeometry, wavelength_nm: float, roc_mode="geometric") -> float:
    """Beam radius on the curved mirror (um)."""
    roc_um = scalar_roc(geom, roc_mode)
    l_um = geom.l_eff_um
    lam_um = wavelength_nm / 1000.0 / geom.refractive_index
    wl_sq = (lam_um / math.pi) * roc_um * math.sqrt(l_um / (roc_um - l_um))
    return math.sqrt(wl_sq)


def cavity_figures(
    geom: CavityGeometry,
    finesse: float,
    m_det: int,
    lambda_c_nm: float,
    roc_mode: str = "geometric",
) -> CavityFigures:
    """FSR, linewidth, quality factors, beam sizes and mode volume."""
    if finesse <= 0:
        raise ValidationError("finesse must be positive")
    if m_det < 1:
        raise ValidationError("m_det must be >= 1")
    n = geom.refractive_index
    fsr_thz = C_UM_THZ / (2.0 * n * geom.l_eff_um)
    kappa_ghz = fsr_thz * 1000.0 / finesse
    nu_ghz = C_NM_GHZ / (n * lambda_c_nm)
    w0 = beam_waist_um(geom, lambda_c_nm, roc_mode)
    w_l = mirror_spot_um(geom, lambda_c_nm, roc_mode)
    volume_um3 = math.pi * w0**2 * geom.l_eff_um / 4.0
    lam_um = lambda_c_nm / 1000.0
    return CavityFigures(
        fsr_thz=fsr_thz,
        finesse=finesse,
        kappa_ghz=kappa_ghz,
        quality_factor=m_det * finesse,
        quality_factor_linewidth=nu_ghz / kappa_ghz,
        beam_waist_um=w0,
        mirror_spot_um=w_l,
        mode_volume_lambda3=volume_um3 / lam_um**3,
    )


# ---------------------------------------------------------------------------
# Peak detection and scan analysis
# ---------------------------------------------------------------------------


def detect_peaks(
    signal, threshold_mads: float = 5.0, rel_prominence: float = 0.0
) -> np.ndarray:
    """Indices of local maxima whose prominence exceeds the noise floor.

    The floor is ``threshold_mads`` times the median absolute deviation of
    the signal around its median, which tracks the baseline for traces where
    peaks occupy a small fraction of samples. ``rel_prominence`` additionally
    drops peaks below that fraction of the strongest prominence, which
    rejects shot-noise spikes on long traces whose resonances are of
    comparable height.
    """
    signal = np.asarray(signal, dtype=float)
    mad = float(np.median(np.abs(signal - np.median(signal))))
    span = float(np.max(signal) - np.min(signal))
    if span == 0.0:
        return np.array([], dtype=int)
    prominence = max(threshold_mads * mad, 1e-9 * span)
    peaks, props = find_peaks(signal, prominence=prominence)
    if rel_prominence > 0.0 and peaks.size:
        keep = props["prominences"] >= rel_prominence * props["prominences"].max()
        peaks = peaks[keep]
    return peaks


def _fwhm_in_samples(y: np.ndarray, i_peak: int, baseline: float) -> float:
    half = baseline + (y[i_peak] - baseline) / 2.0
    left = i_peak
    while left > 0 and y[left] > half:
        left -= 1
    right = i_peak
    while right < y.size - 1 and y[right] > half:
        right += 1
    return max(right - left, 3.0)


def fit_lorentzian_peak(x, y, index: int | None = None, window_fwhms: float = 8.0,
                        weights=None) -> fitkit.FitResult:
    """Fit one Lorentzian around the strongest (or the given) local maximum."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if index is None:
        peaks = detect_peaks(y)
        if peaks.size == 0:
            raise InsufficientDataError("no peak found to fit")
        index = int(peaks[np.argmax(y[peaks])])
    baseline = float(np.median(y))
    width = _fwhm_in_samples(y, index, baseline)
    half_window = int(max(window_fwhms * width, 10))
    sl = slice(max(index - half_window, 0), min(index + half_window + 1, x.size))
    w = None if weights is None else np.asarray(weights, dtype=float)[sl]
    problem = fitkit.FitProblem(model_id="lorentzian", x=x[sl], y=y[sl], weights=w)
    return fitkit.fit(problem)


def finesse_from_scan(traces, threshold_mads: float = 5.0) -> tuple[float, float]:
    """Finesse as resonance spacing over linewidth, pooled over piezo ramps.

    Parameters
    ----------
    traces : ScanTrace or sequence of ScanTrace
        Each ramp must show at least two resonance peaks.

    Returns
    -------
    (finesse, uncertainty) : tuple of float
        Mean and sample standard deviation of the per-peak estimates. The
        ratio is invariant under affine rescaling of the scan axis and under
        multiplicative rescaling of the intensity.
    """
    if isinstance(traces, ScanTrace):
        traces = [traces]
    if not traces:
        raise InsufficientDataError("no scan traces given")
    estimates = []
    for i, trace in enumerate(traces):
        peaks = detect_peaks(trace.signal, threshold_mads, rel_prominence=0.2)
        if peaks.size < 2:
            raise InsufficientDataError(
                f"ramp {i} ({trace.sweep_direction}): found {peaks.size} peaks, need >= 2"
            )
        fits = [fit_lorentzian_peak(trace.axis, trace.signal, index=int(p)) for p in peaks]
        centers = np.array([f.params[1] for f in fits])
        widths = np.abs(np.array([f.params[2] for f in fits]))
        order = np.argsort(centers)
        centers, widths = centers[order], widths[order]
        for j in range(centers.size - 1):
            spacing = abs(centers[j + 1] - centers[j])
            estimates.append(spacing / widths[j])
            estimates.append(spacing / widths[j + 1])
    estimates = np.asarray(estimates)
    return float(estimates.mean()), float(estimates.std(ddof=1))


# ---------------------------------------------------------------------------
# Length inference and drift tracking
# ---------------------------------------------------------------------------


def effective_length_from_adjacent_modes(
    lambda_long_nm: float,
    lambda_short_nm: float,
    roc_um: float | None = None,
) -> float:
    """Effective length (um) from two adjacent fundamental resonances.

    Uses the two-mode spacing L = lambda1*lambda2 / (2*(lambda1 - lambda2)),
    exact for same-order adjacent modes observed at one length. When
    ``roc_um`` is given, one refinement pass re-solves the full resonance
    condition for the rounded mode number of the long-wavelength peak.
    """
    if lambda_long_nm <= lambda_short_nm:
        raise ValidationError(
            f"expected lambda_long > lambda_short, got {lambda_long_nm} <= {lambda_short_nm}"
        )
    delta = lambda_long_nm - lambda_short_nm
    if delta < 1e-9 * lambda_long_nm:
        raise ValidationError("modes are degenerate; spacing-based length diverges")
    l_um = lambda_long_nm * lambda_short_nm / (2.0 * delta) / 1000.0
    if not math.isfinite(l_um):
        raise ValidationError("length estimate overflowed; modes too close")
    if roc_um is not None:
        if l_um >= roc_um:
            raise GeometryError(
                f"estimated length {l_um:.3f} um is outside stability (ROC {roc_um} um)"
            )
        m = round(2000.0 * l_um / lambda_long_nm - gouy_fraction(l_um, roc_um))
        if m >= 1:
            l_um = resonance_length(lambda_long_nm, int(m), roc_um)
    return l_um


def effective_length_from_spectrum(spectrum: Spectrum, roc_um: float | None = None) -> float:
    """Length from the two most prominent resonances of a broadband spectrum."""
    peaks = detect_peaks(spectrum.counts)
    if peaks.size < 2:
        raise InsufficientDataError("need two resonance peaks in the spectrum")
    strongest = peaks[np.argsort(spectrum.counts[peaks])[-2:]]
    centers = []
    for idx in strongest:
        result = fit_lorentzian_peak(spectrum.wavelength_nm, spectrum.counts, index=int(idx))
        centers.append(float(result.params[1]))
    lo, hi = sorted(centers)
    return effective_length_from_adjacent_modes(hi, lo, roc_um)


def drift_series(
    frames,
    times=None,
    l_eff_um: float | None = None,
    threshold_mads: float = 5.0,
) -> list[tuple[float, float]]:
    """Effective-length drift from tracking one resonance across spectra.

    Each frame's fundamental peak is fitted with a Lorentzian; the drift is
    delta_L(t) = (lambda_res(t) - lambda_res(0)) / 2 in nm. A failed fit, or
    a frame-to-frame jump larger than half a free spectral range (available
    when ``l_eff_um`` is known or estimable from the first frame), raises
    TrackingBreakError carrying the frame index.
    """
    if isinstance(frames, SpectralMap):
        if times is None:
            times = frames.times_s()
        frames = frames.frames
    frames = list(frames)
    if not frames:
        raise InsufficientDataError("no spectra to track")
    if times is None:
        times = [
            f.timestamp if f.timestamp is not None else float(i)
            for i, f in enumerate(frames)
        ]
    times = np.asarray(times, dtype=float)
    if times.size != len(frames):
        raise ValidationError("times must match the number of frames")

    if l_eff_um is None:
        try:
            l_eff_um = effective_length_from_spectrum(frames[0])
        except (InsufficientDataError, ValidationError):
            l_eff_um = None
    max_jump_nm = None
    if l_eff_um is not None:
        lam0 = float(frames[0].wavelength_nm[np.argmax(frames[0].counts)])
        max_jump_nm = lam0**2 / (4.0 * l_eff_um * 1000.0)

    centers = []
    for i, frame in enumerate(frames):
        try:
            result = fit_lorentzian_peak(
                frame.wavelength_nm, frame.counts, index=None, weights=None
            )
        except CavityLabError as exc:
            raise TrackingBreakError(f"peak fit failed at frame {i}: {exc}", index=i)
        center = float(result.params[1])
        if centers and max_jump_nm is not None and abs(center - centers[-1]) > max_jump_nm:
            raise TrackingBreakError(
                f"peak jumped {abs(center - centers[-1]):.4g} nm at frame {i} "
                f"(> half FSR {max_jump_nm:.4g} nm)",
                index=i,
            )
        centers.append(center)
    return [
        (float(t), (c - centers[0]) / 2.0) for t, c in zip(times, centers)
    ]


def cte_fit(temperatures_k, delta_l_nm, reference_length_um: float):
    """Thermal-expansion coefficient from a drift-versus-temperature series.

    Fits delta_L(T) with a straight line; alpha = slope / reference_length.

    Returns
    -------
    (alpha_per_k, sigma_alpha, fit_result)
    """
    if reference_length_um <= 0:
        raise ValidationError("reference_length_um must be positive")
    problem = fitkit.FitProblem(
        model_id="linear",
        x=np.asarray(temperatures_k, dtype=float),
        y=np.asarray(delta_l_nm, dtype=float),
    )
    result = fitkit.fit(problem)
    scale = reference_length_um * 1000.0
    alpha = float(result.params[0]) / scale
    sigma = float(result.sigmas[0]) / scale
    return alpha, sigma, result
