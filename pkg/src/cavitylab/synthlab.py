"""Synthetic datasets with known ground truth, plus brute-force oracles.

Every fitting pipeline in the toolkit is validated against data generated
here. Randomness always comes from the Philox 4x64-10 counter-based
generator (as wrapped by numpy), whose constants are published, so a fixed
seed reproduces the identical stream on any platform or implementation.

Presets encode realistic statistics (total counts, noise levels) for the
standard measurement situations; they are calibrated estimates of typical
experiments, not recorded data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from scipy.optimize import brentq

from . import dataio, models
from .dataio import ScanTrace, SpectralMap, Spectrum, TemperatureLog, TimeHistogram
from .errors import ValidationError
from .optics import C_NM_GHZ, gouy_fraction

__all__ = [
    "GeneratorSpec",
    "SyntheticDataset",
    "abcd_gouy_fraction",
    "abcd_waist_um",
    "generate",
    "generate_scan_pair",
    "generate_drift_map",
    "implied_length_jitter_nm",
    "oracle_dispersion",
    "oracle_resonance_length",
    "preset",
    "preset_names",
    "vibration_broadening_sim",
    "write_dataset",
]


def rng_from_seed(seed: int) -> np.random.Generator:
    """The toolkit-wide deterministic generator (Philox 4x64-10)."""
    return np.random.Generator(np.random.Philox(seed))


@dataclass(frozen=True)
class GeneratorSpec:
    """Recipe for one synthetic dataset.

    ``noise`` is one of ``none``, ``poisson`` or ``gaussian``. For Poisson
    noise, ``exposure`` converts model values to expected counts (counts =
    Poisson(model * exposure) / exposure), so rate-like observables keep
    their units. ``noise_sigma`` applies to Gaussian noise only.
    """

    model_id: str
    true_params: tuple[float, ...]
    grid: tuple[float, ...]
    noise: str = "none"
    noise_sigma: float | None = None
    exposure: float = 1.0
    seed: int = 0

    def __post_init__(self):
        models.get_model(self.model_id)
        if self.noise not in ("none", "poisson", "gaussian"):
            raise ValidationError(f"unknown noise kind {self.noise!r}")
        if self.noise == "gaussian" and not (self.noise_sigma and self.noise_sigma > 0):
            raise ValidationError("gaussian noise requires a positive noise_sigma")
        if not self.grid:
            raise ValidationError("grid must be non-empty")
        if self.exposure <= 0:
            raise ValidationError("exposure must be positive")
        object.__setattr__(self, "true_params", tuple(float(p) for p in self.true_params))
        object.__setattr__(self, "grid", tuple(float(g) for g in self.grid))

    def with_seed(self, seed: int) -> "GeneratorSpec":
        return replace(self, seed=seed)


@dataclass(frozen=True)
class SyntheticDataset:
    spec: GeneratorSpec
    x: np.ndarray
    y: np.ndarray
    y_true: np.ndarray

    def truth(self) -> dict:
        return {
            "model_id": self.spec.model_id,
            "param_names": list(models.param_names(self.spec.model_id)),
            "true_params": list(self.spec.true_params),
            "grid_size": len(self.spec.grid),
            "noise": self.spec.noise,
            "noise_sigma": self.spec.noise_sigma or 0.0,
            "exposure": self.spec.exposure,
            "seed": self.spec.seed,
        }

    def record(self):
        """Wrap the noisy data in the matching trace record."""
        model_id = self.spec.model_id
        if model_id in ("exponential_decay", "g2_three_level"):
            return TimeHistogram(
                bin_centers_ns=self.x,
                counts=np.round(self.y * self.spec.exposure).astype(np.int64),
            )
        if model_id in ("lorentzian", "gaussian", "detuned_purcell"):
            return Spectrum(wavelength_nm=self.x, counts=np.maximum(self.y, 0.0))
        if model_id == "saturation":
            return ScanTrace(axis=self.x, signal=self.y, sweep_direction="up")
        raise ValidationError(f"no trace record defined for model {model_id!r}")


def generate(spec: GeneratorSpec) -> SyntheticDataset:
    """Draw one dataset; identical specs always produce identical bytes."""
    x = np.asarray(spec.grid, dtype=float)
    y_true = models.evaluate(spec.model_id, np.asarray(spec.true_params), x)
    if spec.noise == "none":
        y = y_true.copy()
    elif spec.noise == "poisson":
        expected = y_true * spec.exposure
        if np.any(expected < 0):
            raise ValidationError("poisson noise requires non-negative model values")
        rng = rng_from_seed(spec.seed)
        y = rng.poisson(expected).astype(float) / spec.exposure
    else:
        rng = rng_from_seed(spec.seed)
        y = y_true + rng.normal(0.0, spec.noise_sigma, x.size)
    return SyntheticDataset(spec=spec, x=x, y=y, y_true=y_true)


def write_dataset(ds: SyntheticDataset, csv_path) -> tuple[Path, Path]:
    """Write the dataset CSV plus a ``.truth.json`` sidecar; returns both paths."""
    csv_path = Path(csv_path)
    dataio.save_csv(ds.record(), csv_path)
    truth_path = csv_path.with_suffix(csv_path.suffix + ".truth.json")
    dataio.export_report(
        dataio.make_report(
            steps=[{"name": "generate", "params": ds.truth(), "outputs": {}}]
        ),
        truth_path,
    )
    return csv_path, truth_path


# ---------------------------------------------------------------------------
# Presets: paper-scale statistics for the standard measurements
# ---------------------------------------------------------------------------


def _lifetime_preset(tau_ns: float, peak_counts: float) -> GeneratorSpec:
    grid = tuple(np.arange(0.125, 80.0, 0.25))
    return GeneratorSpec(
        model_id="exponential_decay",
        true_params=(peak_counts, tau_ns),
        grid=grid,
        noise="poisson",
    )


def _g2_preset() -> GeneratorSpec:
    # dip to 0.21 at zero delay recovering over 12.5 ns, 15% bunching
    # decaying over the 200 ns shelving time:
    # g2 = 1 - 1.09 exp(-u/12.5) + 0.15 exp(-u/200) in the (c, beta) form
    bunching = 0.15
    fast_amp = 0.79 + bunching
    contrast = -(fast_amp + bunching)
    beta = fast_amp / (fast_amp + bunching)
    grid = tuple(np.arange(-2000.0, 2001.0, 2.0))
    return GeneratorSpec(
        model_id="g2_three_level",
        true_params=(contrast, beta, 0.08, 0.005, 0.0),
        grid=grid,
        noise="poisson",
        exposure=1500.0,  # plateau counts per bin
    )


def _saturation_preset(i_sat, p_sat, sigma) -> GeneratorSpec:
    grid = tuple(np.concatenate([np.linspace(0.05, 1.0, 8), np.linspace(1.3, 4.0, 8)]))
    return GeneratorSpec(
        model_id="saturation",
        true_params=(i_sat, p_sat),
        grid=grid,
        noise="gaussian",
        noise_sigma=sigma,
    )


_PRESETS = {
    "lifetime_4k": lambda: _lifetime_preset(12.2, 500.0),
    "lifetime_40k": lambda: _lifetime_preset(15.8, 500.0),
    "lifetime_100k": lambda: _lifetime_preset(21.0, 150.0),
    "g2_dip": _g2_preset,
    "saturation_10k": lambda: _saturation_preset(150.0, 0.37, 2.2),
    "saturation_40k": lambda: _saturation_preset(180.0, 1.1, 3.0),
    "saturation_100k": lambda: _saturation_preset(162.0, 2.2, 2.4),
}


def preset_names() -> list[str]:
    return sorted(_PRESETS)


def preset(name: str, seed: int = 0) -> GeneratorSpec:
    """A named measurement preset with the given seed."""
    try:
        factory = _PRESETS[name]
    except KeyError:
        raise ValidationError(
            f"unknown preset {name!r}; available: {preset_names()}"
        ) from None
    return factory().with_seed(seed)


# ---------------------------------------------------------------------------
# Scan and drift generators (multi-column records)
# ---------------------------------------------------------------------------


def generate_scan_pair(
    finesse: float = 4600.0,
    fsr_volts: float = 1.0,
    first_peak_volts: float = 0.9,
    n_samples: int = 120_000,
    span_volts: float = 3.0,
    peak_height: float = 1000.0,
    baseline: float = 5.0,
    noise: str = "poisson",
    seed: int = 0,
) -> list[ScanTrace]:
    """An up/down pair of piezo ramps with two resonances each.

    The generator truth is ``finesse`` = fsr_volts / fwhm_volts exactly.
    """
    if finesse <= 0 or fsr_volts <= 0:
        raise ValidationError("finesse and fsr must be positive")
    fwhm = fsr_volts / finesse
    h = (fwhm / 2.0) ** 2
    axis = np.linspace(0.0, span_volts, n_samples)
    signal = np.full(n_samples, baseline)
    for center in (first_peak_volts, first_peak_volts + fsr_volts):
        signal = signal + peak_height * h / ((axis - center) ** 2 + h)
    rng = rng_from_seed(seed)
    traces = []
    for direction in ("up", "down"):
        y = rng.poisson(signal).astype(float) if noise == "poisson" else signal.copy()
        if direction == "down":
            traces.append(
                ScanTrace(axis=axis[::-1].copy(), signal=y[::-1].copy(),
                          sweep_direction="down")
            )
        else:
            traces.append(ScanTrace(axis=axis, signal=y, sweep_direction="up"))
    return traces


def generate_drift_map(
    n_frames: int = 120,
    lambda0_nm: float = 618.5,
    alpha_per_k: float = 5.1e-6,
    reference_length_um: float = 3.7,
    t_start_k: float = 285.0,
    t_end_k: float = 295.0,
    peak_fwhm_nm: float = 0.3,
    peak_height: float = 800.0,
    baseline: float = 20.0,
    wavelength_span_nm: float = 8.0,
    n_pixels: int = 400,
    frame_period_s: float = 60.0,
    noise: str = "poisson",
    seed: int = 0,
) -> tuple[SpectralMap, TemperatureLog]:
    """Spectral map whose resonance drifts linearly with temperature.

    The tracked wavelength shifts by 2 * alpha * L_ref * (T - T0), so the
    drift pipeline recovers delta_L = alpha * L_ref * delta_T and a linear
    fit against temperature returns ``alpha_per_k`` for the given reference
    length.
    """
    temps = np.linspace(t_start_k, t_end_k, n_frames)
    shift_nm = 2.0 * alpha_per_k * reference_length_um * 1000.0 * (temps - temps[0])
    grid = np.linspace(
        lambda0_nm - wavelength_span_nm / 2.0,
        lambda0_nm + wavelength_span_nm / 2.0 + shift_nm.max(),
        n_pixels,
    )
    h = (peak_fwhm_nm / 2.0) ** 2
    rng = rng_from_seed(seed)
    frames = []
    for k in range(n_frames):
        center = lambda0_nm + shift_nm[k]
        expected = baseline + peak_height * h / ((grid - center) ** 2 + h)
        counts = rng.poisson(expected).astype(float) if noise == "poisson" else expected
        frames.append(Spectrum(wavelength_nm=grid, counts=counts))
    times = np.arange(n_frames) * frame_period_s
    return (
        SpectralMap(frames=tuple(frames), frame_period_s=frame_period_s),
        TemperatureLog(time_s=times, temperature_k=temps),
    )


def generate_wled_map(
    n_frames: int,
    l_start_um: float = 5.0,
    l_end_um: float = 3.7,
    roc_um: float = 24.0,
    lambda_range_nm: tuple[float, float] = (550.0, 680.0),
    n_pixels: int = 200,
    peak_fwhm_nm: float = 0.8,
    peak_height: float = 500.0,
    baseline: float = 10.0,
    seed: int = 0,
) -> SpectralMap:
    """Broadband transmission map over a cavity-length sweep (fundamentals)."""
    grid = np.linspace(lambda_range_nm[0], lambda_range_nm[1], n_pixels)
    lengths = np.linspace(l_start_um, l_end_um, n_frames)
    h = (peak_fwhm_nm / 2.0) ** 2
    rng = rng_from_seed(seed)
    frames = []
    for l_um in lengths:
        g = gouy_fraction(l_um, roc_um)
        expected = np.full(n_pixels, baseline)
        m_lo = int(2000.0 * l_um / lambda_range_nm[1]) - 1
        m_hi = int(2000.0 * l_um / lambda_range_nm[0]) + 1
        for m in range(max(m_lo, 1), m_hi + 1):
            center = 2000.0 * l_um / (m + g)
            if lambda_range_nm[0] < center < lambda_range_nm[1]:
                expected = expected + peak_height * h / ((grid - center) ** 2 + h)
        frames.append(
            Spectrum(wavelength_nm=grid, counts=rng.poisson(expected).astype(float))
        )
    return SpectralMap(frames=tuple(frames), frame_period_s=1.0)


# ---------------------------------------------------------------------------
# Brute-force oracles
# ---------------------------------------------------------------------------


def abcd_waist_um(l_eff_um: float, roc_um: float, wavelength_nm: float) -> tuple[float, float]:
    """Waist and curved-mirror spot from the round-trip ABCD eigenmode.

    Solves q = (A q + B)/(C q + D) for the beam parameter at the flat
    mirror; independent of the closed-form waist expressions.
    """
    L = l_eff_um
    prop = np.array([[1.0, L], [0.0, 1.0]])
    curved = np.array([[1.0, 0.0], [-2.0 / roc_um, 1.0]])
    m = prop @ curved @ prop
    a, b = m[0]
    c, d = m[1]
    # q solves c q^2 + (d - a) q - b = 0; the mode has Im(q) = rayleigh range
    disc = (d - a) ** 2 + 4.0 * b * c
    if disc >= 0:
        raise ValidationError("geometry has no confined Gaussian eigenmode")
    q = complex((a - d) / (2.0 * c), math.sqrt(-disc) / (2.0 * abs(c)))
    z_r = abs(q.imag)
    lam_um = wavelength_nm / 1000.0
    w0 = math.sqrt(lam_um * z_r / math.pi)
    w_l = w0 * math.sqrt(1.0 + (L / z_r) ** 2)
    return w0, w_l


def abcd_gouy_fraction(l_eff_um: float, roc_um: float, n_steps: int = 20_000) -> float:
    """Gouy term by numerically accumulating d(zeta) = dz / (z_R (1 + (z/z_R)^2)).

    Uses the ABCD eigenmode Rayleigh range, then integrates the Gouy phase
    over one pass from the flat mirror to the curved mirror; returned as a
    fraction of pi.
    """
    w0, _ = abcd_waist_um(l_eff_um, roc_um, 1000.0)  # wavelength cancels below
    z_r = math.pi * w0**2 / 1.0  # lam_um = 1 for this wavelength choice
    z = np.linspace(0.0, l_eff_um, n_steps)
    integrand = 1.0 / (z_r * (1.0 + (z / z_r) ** 2))
    zeta = np.trapezoid(integrand, z)
    return zeta / math.pi


def oracle_resonance_length(
    wavelength_nm: float, m: int, roc_um: float, step_nm: float = 0.01
) -> float:
    """Grid-scan inversion of the resonance condition (0.01 nm default grid)."""
    lengths = np.arange(step_nm, roc_um * 1000.0 - step_nm, step_nm) / 1000.0
    gouy = np.arccos(np.sqrt(1.0 - lengths / roc_um)) / math.pi
    residual = np.abs(2000.0 * lengths / wavelength_nm - gouy - m)
    return float(lengths[np.argmin(residual)])


def oracle_dispersion(
    roc_um: float,
    l_grid_um,
    lambda_grid_nm,
    m_values=None,
) -> set[tuple[int, int, int]]:
    """Cells (i_l, i_lambda, m) where the round-trip phase closes to 2 pi m.

    The Gouy phase per pass comes from the ABCD eigenmode, making this an
    independent check of the closed-form dispersion. A cell is marked when
    the phase mismatch is below the mismatch spanned by half a cell.
    """
    l_grid = np.asarray(l_grid_um, dtype=float)
    lam_grid = np.asarray(lambda_grid_nm, dtype=float)
    d_l = float(np.median(np.diff(l_grid))) if l_grid.size > 1 else 0.0
    d_lam = float(np.median(np.diff(lam_grid))) if lam_grid.size > 1 else 0.0
    cells = set()
    for i, l_um in enumerate(l_grid):
        zeta = abcd_gouy_fraction(l_um, roc_um, n_steps=2000)
        for j, lam in enumerate(lam_grid):
            m_float = 2000.0 * l_um / lam - zeta
            m = round(m_float)
            if m < 1:
                continue
            # half-cell tolerance in units of mode number
            tol = 0.5 * (
                2000.0 * d_l / lam + 2000.0 * l_um * d_lam / lam**2
            )
            if abs(m_float - m) <= max(tol, 1e-9):
                cells.add((i, j, int(m)))
    return cells


# ---------------------------------------------------------------------------
# Vibration broadening
# ---------------------------------------------------------------------------


def _averaged_profile_fwhm(kappa_ghz: float, centers_ghz: np.ndarray) -> float:
    half_k = kappa_ghz / 2.0
    # compress the sampled centers into a weighted histogram; bins much
    # narrower than the intrinsic linewidth keep the profile unbiased
    span = max(float(np.max(centers_ghz) - np.min(centers_ghz)), kappa_ghz)
    n_bins = int(min(8192, max(512, 64.0 * span / kappa_ghz)))
    weights, edges = np.histogram(centers_ghz, bins=n_bins)
    bin_centers = 0.5 * (edges[:-1] + edges[1:])
    keep = weights > 0
    bin_centers, weights = bin_centers[keep], weights[keep] / centers_ghz.size

    def profile(nu):
        return float(
            np.sum(weights / (1.0 + ((nu - bin_centers) / half_k) ** 2))
        )

    lo = float(np.min(centers_ghz)) - 20.0 * kappa_ghz
    hi = float(np.max(centers_ghz)) + 20.0 * kappa_ghz
    grid = np.linspace(lo, hi, 2001)
    values = np.sum(
        weights[None, :] / (1.0 + ((grid[:, None] - bin_centers[None, :]) / half_k) ** 2),
        axis=1,
    )
    i_peak = int(np.argmax(values))
    peak_nu, peak_val = grid[i_peak], values[i_peak]
    half = peak_val / 2.0

    def crossing(a, b):
        return brentq(lambda nu: profile(nu) - half, a, b, xtol=1e-9 * kappa_ghz)

    left_candidates = np.nonzero(values[: i_peak + 1] < half)[0]
    right_candidates = np.nonzero(values[i_peak:] < half)[0] + i_peak
    if left_candidates.size == 0 or right_candidates.size == 0:
        raise ValidationError("profile window too narrow to bracket the half maximum")
    left = crossing(grid[left_candidates[-1]], peak_nu)
    right = crossing(peak_nu, grid[right_candidates[0]])
    return right - left


def vibration_broadening_sim(
    kappa_intrinsic_ghz: float,
    length_jitter_rms_nm: float,
    n_samples: int = 100_000,
    seed: int = 0,
    lambda_nm: float = 618.5,
    l_eff_um: float = 3.75,
) -> float:
    """Effective linewidth of a resonance jittering during acquisition.

    Monte-Carlo average of Lorentzian lines whose centers follow the
    frequency shift of a Gaussian length jitter (sigma_nu = nu * sigma_L/L);
    returns the FWHM of the averaged profile in GHz. Zero jitter returns the
    intrinsic linewidth exactly. Sampling uses common random numbers per
    seed, so the output is monotone in the jitter amplitude.
    """
    if kappa_intrinsic_ghz <= 0:
        raise ValidationError("intrinsic linewidth must be positive")
    if length_jitter_rms_nm < 0:
        raise ValidationError("jitter must be non-negative")
    if length_jitter_rms_nm == 0.0:
        return kappa_intrinsic_ghz
    nu_ghz = C_NM_GHZ / lambda_nm
    sigma_nu = nu_ghz * length_jitter_rms_nm / (l_eff_um * 1000.0)
    normals = rng_from_seed(seed).standard_normal(n_samples)
    centers = sigma_nu * normals
    return _averaged_profile_fwhm(kappa_intrinsic_ghz, centers)


def implied_length_jitter_nm(
    kappa_intrinsic_ghz: float,
    kappa_target_ghz: float,
    n_samples: int = 100_000,
    seed: int = 0,
    lambda_nm: float = 618.5,
    l_eff_um: float = 3.75,
) -> float:
    """RMS length jitter that broadens the line to ``kappa_target_ghz``.

    Scalar root-find over the jitter amplitude with common random numbers.
    """
    if kappa_target_ghz <= kappa_intrinsic_ghz:
        raise ValidationError("target linewidth must exceed the intrinsic one")

    def objective(jitter_nm):
        return (
            vibration_broadening_sim(
                kappa_intrinsic_ghz, jitter_nm, n_samples, seed, lambda_nm, l_eff_um
            )
            - kappa_target_ghz
        )

    hi = 1.0
    while objective(hi) < 0 and hi < 1e6:
        hi *= 2.0
    return brentq(objective, 1e-6, hi, rtol=1e-6)
