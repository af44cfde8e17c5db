"""Purcell-enhancement budget and coupling-regime classification.

Links the cavity figures from :mod:`cavitylab.optics` with the emitter
properties from :mod:`cavitylab.photophysics` into one audited chain:

    f_cav_ideal -> spatially corrected -> vibration limited
    f_measured  -> epsilon corrected  -> alignment factor

Conventions: the vibration-limited ceiling uses the quality factor implied
by the effective (vibration-broadened) linewidth, q_vib = nu_c / kappa_exp,
and includes the spatial penalty of the emitter position, so the residual
``alignment`` isolates the dipole-orientation mismatch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NonphysicalResultError, ValidationError
from .optics import C_NM_GHZ, CavityGeometry, beam_waist_um, mirror_spot_um

__all__ = [
    "CouplingRates",
    "PurcellBudget",
    "bad_emitter_purcell",
    "budget_report",
    "detuned_purcell",
    "epsilon_correction",
    "purcell_measured",
    "purcell_theoretical",
    "q_from_linewidth",
    "regime_classify",
    "spatial_correction",
]


@dataclass(frozen=True)
class CouplingRates:
    """Emitter-cavity rate triple (all GHz).

    ``gamma0`` is the lifetime-limited linewidth and ``gamma_star`` the pure
    dephasing rate; the total emitter linewidth is their sum.
    """

    g_ghz: float
    kappa_ghz: float
    gamma0_ghz: float
    gamma_star_ghz: float = 0.0

    def __post_init__(self):
        for name in ("g_ghz", "kappa_ghz", "gamma0_ghz", "gamma_star_ghz"):
            if getattr(self, name) < 0:
                raise ValidationError(f"{name} must be non-negative")

    @property
    def gamma_total_ghz(self) -> float:
        return self.gamma0_ghz + self.gamma_star_ghz


def purcell_measured(tau0_ns: float, tau_p_ns: float) -> float:
    """Lifetime ratio free-space / cavity-modified.

    Values below 1 (inhibition) are allowed; callers flag them in reports.
    """
    if tau0_ns <= 0 or tau_p_ns <= 0:
        raise ValidationError("lifetimes must be positive")
    return tau0_ns / tau_p_ns


def purcell_theoretical(
    lambda_c_nm: float, refractive_index: float, quality_factor: float,
    mode_volume_lambda3: float,
) -> float:
    """Ideal on-resonance enhancement 3/(4 pi^2) * (lambda/n)^3 * Q/V.

    ``mode_volume_lambda3`` is the mode volume in units of the vacuum
    wavelength cubed, so for n = 1 the expression reduces to
    3 Q / (4 pi^2 V).
    """
    if min(lambda_c_nm, refractive_index, quality_factor, mode_volume_lambda3) <= 0:
        raise ValidationError("all Purcell inputs must be positive")
    return (
        3.0 / (4.0 * math.pi**2)
        * quality_factor
        / (mode_volume_lambda3 * refractive_index**3)
    )


def spatial_correction(geom: CavityGeometry, lambda_nm: float,
                       roc_mode: str = "geometric") -> float:
    """Coupling reduction (w0/w(L))^2 for an emitter on the curved mirror.

    For the plano-concave Gaussian mode this equals 1 - L/ROC; it is computed
    from the waist and mirror-spot expressions so it stays consistent with
    the beam geometry route.
    """
    w0 = beam_waist_um(geom, lambda_nm, roc_mode)
    w_l = mirror_spot_um(geom, lambda_nm, roc_mode)
    return (w0 / w_l) ** 2


def detuned_purcell(
    lambda_nm,
    lambda_cav_nm: float,
    quality_factor: float,
    f_cav: float,
    alignment_sq: float = 1.0,
    f_fp: float = 0.0,
):
    """Enhancement versus emitter wavelength for a fixed cavity resonance.

    f(lambda) = f_cav * align^2 / (1 + (2 Q (lambda/lambda_cav - 1))^2) + f_fp
    """
    if quality_factor <= 0:
        raise ValidationError("quality factor must be positive")
    lam = np.asarray(lambda_nm, dtype=float)
    z = 2.0 * quality_factor * (lam / lambda_cav_nm - 1.0)
    return f_cav * alignment_sq / (1.0 + z * z) + f_fp


def epsilon_correction(
    quantum_efficiency: float, debye_waller: float, branching: float = 1.0
) -> float:
    """Fraction of decays feeding the cavity-coupled zero-phonon transition.

    Product of quantum efficiency, Debye-Waller factor and (optionally) the
    branching ratio; pass ``branching=1`` when the transition of interest
    carries the full zero-phonon emission.
    """
    for name, value in (
        ("quantum_efficiency", quantum_efficiency),
        ("debye_waller", debye_waller),
        ("branching", branching),
    ):
        if not 0 < value <= 1:
            raise ValidationError(f"{name} must lie in (0, 1], got {value}")
    return quantum_efficiency * debye_waller * branching


def q_from_linewidth(lambda_c_nm: float, kappa_ghz: float) -> float:
    """Quality factor nu_c / kappa for an effective linewidth in GHz."""
    if lambda_c_nm <= 0 or kappa_ghz <= 0:
        raise ValidationError("wavelength and linewidth must be positive")
    return C_NM_GHZ / lambda_c_nm / kappa_ghz


def regime_classify(rates: CouplingRates, boundary_band: float = 0.1) -> str:
    """Coupling-regime label from the rate ordering.

    ``strong`` when g exceeds both decay rates; otherwise ``boundary`` when
    kappa and gamma agree within ``boundary_band`` (relative to the larger),
    else ``bad_emitter`` (gamma > kappa) or ``bad_cavity`` (kappa > gamma).
    The label depends only on rate ratios.
    """
    gamma = rates.gamma_total_ghz
    kappa = rates.kappa_ghz
    g = rates.g_ghz
    if g > kappa and g > gamma:
        return "strong"
    scale = max(kappa, gamma)
    if scale == 0 or abs(kappa - gamma) <= boundary_band * scale:
        return "boundary"
    return "bad_emitter" if gamma > kappa else "bad_cavity"


def bad_emitter_purcell(rates: CouplingRates) -> float:
    """Enhancement estimate 4g^2/(kappa + gamma0) * kappa/gamma* valid when
    dephasing dominates (gamma* >> kappa, g)."""
    if rates.gamma_star_ghz <= 0:
        raise ValidationError(
            "bad-emitter approximation requires a positive dephasing rate"
        )
    return (
        4.0 * rates.g_ghz**2 / (rates.kappa_ghz + rates.gamma0_ghz)
        * rates.kappa_ghz / rates.gamma_star_ghz
    )


# ---------------------------------------------------------------------------
# Budget
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PurcellBudget:
    """Audited enhancement chain with every intermediate value.

    Invariants: f_cav_corrected = f_cav_ideal * spatial_factor,
    f_zpl = f_measured / epsilon, alignment = f_zpl / f_vib, all entries
    positive. ``alignment_dipole`` is the square-root projection of the
    alignment ratio, reported as a secondary quantity.
    """

    f_cav_ideal: float
    spatial_factor: float
    f_cav_corrected: float
    q_used: float
    q_vib: float
    f_vib: float
    f_measured: float
    epsilon: float
    f_zpl: float
    alignment: float
    alignment_dipole: float
    f_fp: float = 0.0
    inhibited: bool = False

    def __post_init__(self):
        entries = {
            "f_cav_ideal": self.f_cav_ideal,
            "spatial_factor": self.spatial_factor,
            "f_cav_corrected": self.f_cav_corrected,
            "q_used": self.q_used,
            "q_vib": self.q_vib,
            "f_vib": self.f_vib,
            "f_measured": self.f_measured,
            "epsilon": self.epsilon,
            "f_zpl": self.f_zpl,
            "alignment": self.alignment,
        }
        for name, value in entries.items():
            if not value > 0:
                raise NonphysicalResultError(f"budget entry {name} must be positive")
        checks = [
            ("f_cav_corrected", self.f_cav_corrected, self.f_cav_ideal * self.spatial_factor),
            ("f_zpl", self.f_zpl, self.f_measured / self.epsilon),
            ("alignment", self.alignment, self.f_zpl / self.f_vib),
        ]
        for name, value, expected in checks:
            if abs(value - expected) > 1e-9 * abs(expected):
                raise NonphysicalResultError(
                    f"budget invariant violated at step {name}: "
                    f"{value!r} != {expected!r}"
                )

    def steps(self) -> list[dict]:
        """Chain steps for the JSON report: {name, value, formula_ref, inputs}."""
        return [
            {"name": "f_cav_ideal", "value": self.f_cav_ideal,
             "formula_ref": "3/(4*pi^2) * (lambda/n)^3 * Q/V",
             "inputs": {"q_used": self.q_used}},
            {"name": "spatial_factor", "value": self.spatial_factor,
             "formula_ref": "(w0/w_L)^2", "inputs": {}},
            {"name": "f_cav_corrected", "value": self.f_cav_corrected,
             "formula_ref": "f_cav_ideal * spatial_factor",
             "inputs": {"f_cav_ideal": self.f_cav_ideal,
                        "spatial_factor": self.spatial_factor}},
            {"name": "f_vib", "value": self.f_vib,
             "formula_ref": "3/(4*pi^2) * (lambda/n)^3 * q_vib/V * spatial_factor",
             "inputs": {"q_vib": self.q_vib, "spatial_factor": self.spatial_factor}},
            {"name": "f_measured", "value": self.f_measured,
             "formula_ref": "tau0 / tau_p", "inputs": {"inhibited": self.inhibited}},
            {"name": "epsilon", "value": self.epsilon,
             "formula_ref": "quantum_efficiency * debye_waller * branching",
             "inputs": {}},
            {"name": "f_zpl", "value": self.f_zpl,
             "formula_ref": "f_measured / epsilon",
             "inputs": {"f_measured": self.f_measured, "epsilon": self.epsilon}},
            {"name": "alignment", "value": self.alignment,
             "formula_ref": "f_zpl / f_vib",
             "inputs": {"f_zpl": self.f_zpl, "f_vib": self.f_vib}},
            {"name": "alignment_dipole", "value": self.alignment_dipole,
             "formula_ref": "sqrt(f_zpl / f_vib)",
             "inputs": {"alignment": self.alignment}},
            {"name": "f_fp", "value": self.f_fp,
             "formula_ref": "background term (0 unless fitted from detuning data)",
             "inputs": {}},
        ]


def budget_report(
    tau0_ns: float,
    tau_p_ns: float,
    quantum_efficiency: float,
    debye_waller: float,
    geom: CavityGeometry,
    lambda_c_nm: float,
    branching: float = 1.0,
    q_ideal: float | None = None,
    finesse: float | None = None,
    m_det: int | None = None,
    kappa_exp_ghz: float | None = None,
    q_exp: float | None = None,
    f_fp: float = 0.0,
    roc_mode: str = "geometric",
) -> PurcellBudget:
    """Assemble the full enhancement budget from raw inputs.

    The ideal quality factor comes from ``q_ideal`` directly or from
    ``m_det * finesse``; the vibration-degraded one from ``q_exp`` directly
    or from the effective linewidth ``kappa_exp_ghz``. Mode volume and the
    spatial factor are derived from the geometry at ``lambda_c_nm``.
    """
    if q_ideal is None:
        if finesse is None or m_det is None:
            raise ValidationError("provide q_ideal or both finesse and m_det")
        q_ideal = m_det * finesse
    if q_exp is None:
        if kappa_exp_ghz is None:
            raise ValidationError("provide q_exp or kappa_exp_ghz")
        q_exp = q_from_linewidth(lambda_c_nm, kappa_exp_ghz)
    w0 = beam_waist_um(geom, lambda_c_nm, roc_mode)
    volume = (
        math.pi * w0**2 * geom.l_eff_um / 4.0 / (lambda_c_nm / 1000.0) ** 3
    )
    n = geom.refractive_index

    f_cav_ideal = purcell_theoretical(lambda_c_nm, n, q_ideal, volume)
    spatial = spatial_correction(geom, lambda_c_nm, roc_mode)
    f_cav_corrected = f_cav_ideal * spatial
    f_vib = purcell_theoretical(lambda_c_nm, n, q_exp, volume) * spatial
    f_measured = purcell_measured(tau0_ns, tau_p_ns)
    epsilon = epsilon_correction(quantum_efficiency, debye_waller, branching)
    f_zpl = f_measured / epsilon
    alignment = f_zpl / f_vib
    return PurcellBudget(
        f_cav_ideal=f_cav_ideal,
        spatial_factor=spatial,
        f_cav_corrected=f_cav_corrected,
        q_used=q_ideal,
        q_vib=q_exp,
        f_vib=f_vib,
        f_measured=f_measured,
        epsilon=epsilon,
        f_zpl=f_zpl,
        alignment=alignment,
        alignment_dipole=math.sqrt(alignment),
        f_fp=f_fp,
        inhibited=f_measured < 1.0,
    )
