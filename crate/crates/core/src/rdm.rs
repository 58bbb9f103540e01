//! Closed-form reduced-density-matrix elements, decoherence curves,
//! timescales, and decay-order fits.
//!
//! For a factorized initial state the off-diagonal element in the coupling's
//! pointer basis is
//!
//! ```text
//! ρ_ab(t) = ψ(a) ψ*(b) · e^{iφ} · f(z),
//!     z = n c (a-b) t / ħ,      φ = n α c (a-b) t² / (2ħ),
//! ```
//!
//! with `c` the coupling constant (`k` or `γ`) and `f` the centre-of-mass
//! characteristic function from [`crate::comdist`]. The `t²` phase carries
//! `1/(2ħ)`: the factorization of `e^{-itH/ħ}` closes because
//! `[H_env, W] = -iħ n α c · (body value)` is central, and the half factor
//! is what that commutator produces. The grid oracle validates the phase.
//! Harmonic couplings multiply by a further pure phase and change nothing
//! about the modulus.

use alloc::{format, string::String, vec::Vec};
use num_complex::Complex64;

use crate::comdist::{self, lattice_overlap};
use crate::error::{Error, Result};
use crate::model::{BodyAmplitude, Coupling, EntangledState, EnvState, PhysConsts};

/// One off-diagonal element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RdmElement {
    pub value: Complex64,
    pub modulus: f64,
    /// Total coupling-induced phase multiplying the body amplitudes and the
    /// transform factor, in radians.
    pub phase_exponent: f64,
    /// Transform argument actually used: `z` for position couplings, `y`
    /// for momentum couplings.
    pub transform_arg: f64,
}

/// Decoherence timescale `τ = ħ / (n · c · |separation| · Δη)` with the
/// inputs echoed back; `Δη` is the standard deviation of η.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimescaleReport {
    pub tau: f64,
    pub n: u32,
    pub strength: f64,
    pub separation: f64,
    pub delta_eta: f64,
}

/// Inputs of a factorized-state curve sweep; cloned into the curve as
/// metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveQuery {
    pub consts: PhysConsts,
    pub coupling: Coupling,
    pub env: EnvState,
    pub body: BodyAmplitude,
    /// Primed body value (X′ or P′).
    pub a: f64,
    /// Double-primed body value (X″ or P″).
    pub b: f64,
}

/// Time series of elements for one query.
#[derive(Debug, Clone, PartialEq)]
pub struct DecoherenceCurve {
    pub times: Vec<f64>,
    pub elements: Vec<RdmElement>,
    pub query: CurveQuery,
}

/// Transform argument `z = n k (a-b) t / ħ` (position couplings) or
/// `y = n γ (a-b) t / ħ` (momentum couplings).
pub fn transform_arg(coupling: &Coupling, a: f64, b: f64, t: f64, consts: &PhysConsts) -> f64 {
    consts.n as f64 * coupling.strength() * (a - b) * t / consts.hbar
}

/// Deterministic coupling phase of the element — the `t²` drift phase plus
/// the harmonic extras. Equals `RdmElement::phase_exponent` for the same
/// inputs.
pub fn coupling_phase(coupling: &Coupling, a: f64, b: f64, t: f64, consts: &PhysConsts) -> f64 {
    let n = consts.n as f64;
    let base = n * consts.alpha * coupling.strength() * (a - b) * t * t / (2.0 * consts.hbar);
    match *coupling {
        Coupling::Sc { .. } | Coupling::Mc { .. } => base,
        Coupling::Hc { k } => base - k * n * (a * a - b * b) * t / (2.0 * consts.hbar),
        Coupling::Mhc { mu, .. } => base - n * (a * a - b * b) * t / (2.0 * mu * consts.hbar),
    }
}

fn check_env(env: &EnvState, consts: &PhysConsts) -> Result<()> {
    if env.particle_count() != consts.n as usize {
        return Err(Error::Invariant(format!(
            "environment describes {} particles but n = {}",
            env.particle_count(),
            consts.n
        )));
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn linear_element(
    body_a: Complex64,
    body_b: Complex64,
    env: &EnvState,
    strength: f64,
    a: f64,
    b: f64,
    t: f64,
    consts: &PhysConsts,
) -> Result<RdmElement> {
    let n = consts.n as f64;
    let z = n * strength * (a - b) * t / consts.hbar;
    let phase = n * consts.alpha * strength * (a - b) * t * t / (2.0 * consts.hbar);
    let f = comdist::characteristic(env, z)?;
    // modulus taken before the phase factor: α enters the element only there
    let amplitude = body_a * body_b.conj() * f;
    let value = amplitude * Complex64::from_polar(1.0, phase);
    Ok(RdmElement { value, modulus: amplitude.norm(), phase_exponent: phase, transform_arg: z })
}

/// Position-basis element for the linear coupling `k X Σ x̂ᵢ`.
///
/// δ environments are fine here: their transform has unit modulus, so the
/// element just spins in phase.
pub fn rdm_sc(
    psi: &BodyAmplitude,
    env: &EnvState,
    x_a: f64,
    x_b: f64,
    t: f64,
    consts: &PhysConsts,
    coupling: &Coupling,
) -> Result<RdmElement> {
    let Coupling::Sc { k } = *coupling else {
        return Err(Error::UnsupportedCoupling("rdm_sc needs an Sc coupling"));
    };
    check_env(env, consts)?;
    linear_element(psi.eval(x_a), psi.eval(x_b), env, k, x_a, x_b, t, consts)
}

/// Momentum-basis element for the coupling `γ P̂ Σ x̂ᵢ`; `psi_tilde` is the
/// body amplitude in the momentum representation.
pub fn rdm_mc(
    psi_tilde: &BodyAmplitude,
    env: &EnvState,
    p_a: f64,
    p_b: f64,
    t: f64,
    consts: &PhysConsts,
    coupling: &Coupling,
) -> Result<RdmElement> {
    let Coupling::Mc { gamma } = *coupling else {
        return Err(Error::UnsupportedCoupling("rdm_mc needs an Mc coupling"));
    };
    check_env(env, consts)?;
    linear_element(psi_tilde.eval(p_a), psi_tilde.eval(p_b), env, gamma, p_a, p_b, t, consts)
}

/// Harmonic coupling `-k/2 Σ (X - x̂ᵢ)²`: the linear element times the pure
/// phase `e^{-i k n (X′² - X″²) t / (2ħ)}`. The modulus is copied from the
/// linear element — the factor cannot change it.
pub fn rdm_hc(
    psi: &BodyAmplitude,
    env: &EnvState,
    x_a: f64,
    x_b: f64,
    t: f64,
    consts: &PhysConsts,
    coupling: &Coupling,
) -> Result<RdmElement> {
    let Coupling::Hc { k } = *coupling else {
        return Err(Error::UnsupportedCoupling("rdm_hc needs an Hc coupling"));
    };
    check_env(env, consts)?;
    let base = linear_element(psi.eval(x_a), psi.eval(x_b), env, k, x_a, x_b, t, consts)?;
    let extra =
        -k * consts.n as f64 * (x_a * x_a - x_b * x_b) * t / (2.0 * consts.hbar);
    Ok(RdmElement {
        value: base.value * Complex64::from_polar(1.0, extra),
        modulus: base.modulus,
        phase_exponent: base.phase_exponent + extra,
        transform_arg: base.transform_arg,
    })
}

/// Quadratic momentum coupling `-μ/2 Σ (P̂ - ν x̂ᵢ)²` with `γ = ν/μ`: the
/// `Mc` element times `e^{-i n (P′² - P″²) t / (2μħ)}`.
pub fn rdm_mhc(
    psi_tilde: &BodyAmplitude,
    env: &EnvState,
    p_a: f64,
    p_b: f64,
    t: f64,
    consts: &PhysConsts,
    coupling: &Coupling,
) -> Result<RdmElement> {
    let Coupling::Mhc { mu, nu } = *coupling else {
        return Err(Error::UnsupportedCoupling("rdm_mhc needs an Mhc coupling"));
    };
    check_env(env, consts)?;
    let gamma = nu / mu;
    let base =
        linear_element(psi_tilde.eval(p_a), psi_tilde.eval(p_b), env, gamma, p_a, p_b, t, consts)?;
    let extra = -(consts.n as f64) * (p_a * p_a - p_b * p_b) * t / (2.0 * mu * consts.hbar);
    Ok(RdmElement {
        value: base.value * Complex64::from_polar(1.0, extra),
        modulus: base.modulus,
        phase_exponent: base.phase_exponent + extra,
        transform_arg: base.transform_arg,
    })
}

/// Element for an entangled initial state under the `Sc` coupling:
/// `e^{iφ} · ∫ dη e^{izη} w_ab(η)` with the overlap density summed on the
/// exact η lattice of the slices.
pub fn rdm_entangled(
    state: &EntangledState,
    x_a: f64,
    x_b: f64,
    t: f64,
    consts: &PhysConsts,
    coupling: &Coupling,
) -> Result<RdmElement> {
    let Coupling::Sc { k } = *coupling else {
        return Err(Error::UnsupportedCoupling("rdm_entangled needs an Sc coupling"));
    };
    if state.grid_spec().dims != consts.n as usize {
        return Err(Error::Invariant(String::from("entangled slices must have dims = n")));
    }
    let slice_a = state.slice(x_a)?;
    let slice_b = state.slice(x_b)?;
    let overlap = lattice_overlap(slice_a, slice_b);
    overlap.check_end_decay()?;
    let n = consts.n as f64;
    let z = n * k * (x_a - x_b) * t / consts.hbar;
    let phase = n * consts.alpha * k * (x_a - x_b) * t * t / (2.0 * consts.hbar);
    let value = Complex64::from_polar(1.0, phase) * overlap.transform(z);
    Ok(RdmElement { value, modulus: value.norm(), phase_exponent: phase, transform_arg: z })
}

/// Short-time modulus `1 - σz²/2`, σ the variance of η.
///
/// This is the quadratic expansion, not a bound: it goes negative once
/// `σz² > 2` and is only meaningful for `σz² ≪ 1`. Returned as computed.
pub fn short_time_modulus(env: &EnvState, z: f64) -> Result<f64> {
    let m = comdist::moments(env);
    if !m.finite {
        return Err(Error::NonFiniteVariance);
    }
    Ok(1.0 - 0.5 * m.variance * z * z)
}

/// The timescale formula itself: `τ = ħ / (n · c · |sep| · Δη)`.
///
/// Exposed separately so scaling tables can double each argument
/// independently — doubling any one of them halves τ exactly.
pub fn tau_formula(hbar: f64, n: u32, strength: f64, separation: f64, delta_eta: f64) -> f64 {
    hbar / (n as f64 * libm::fabs(strength) * libm::fabs(separation) * delta_eta)
}

/// Decoherence timescale with `Δη` taken from the environment's moments.
///
/// `Δη = 0` (δ environment) gives `τ = ∞`: the modulus never decays.
pub fn decoherence_time(
    coupling: &Coupling,
    separation: f64,
    env: &EnvState,
    consts: &PhysConsts,
) -> Result<TimescaleReport> {
    if separation == 0.0 {
        return Err(Error::ZeroSeparation);
    }
    let m = comdist::moments(env);
    if !m.finite {
        return Err(Error::NonFiniteVariance);
    }
    let delta_eta = libm::sqrt(m.variance);
    let strength = coupling.strength();
    let tau = tau_formula(consts.hbar, consts.n, strength, separation, delta_eta);
    Ok(TimescaleReport { tau, n: consts.n, strength, separation, delta_eta })
}

/// Time of the first modulus zero for a box environment of halfwidth `L`:
/// `πħ / (n c |sep| L)`.
///
/// This is the box-normalized stand-in for a plane-wave environment: as
/// `L → ∞` the first zero moves to `t = 0` and the off-diagonal modulus is
/// suppressed immediately at any `t > 0`.
pub fn box_first_zero_time(
    halfwidth: f64,
    separation: f64,
    coupling: &Coupling,
    consts: &PhysConsts,
) -> Result<f64> {
    if separation == 0.0 {
        return Err(Error::ZeroSeparation);
    }
    if !halfwidth.is_finite() || halfwidth <= 0.0 {
        return Err(Error::Invariant(String::from("L > 0")));
    }
    Ok(core::f64::consts::PI * consts.hbar
        / (consts.n as f64 * libm::fabs(coupling.strength()) * libm::fabs(separation) * halfwidth))
}

/// Sweeps the element over a strictly increasing time grid. Samples are
/// independent; evaluation order cannot affect the results.
pub fn curve(query: &CurveQuery, times: &[f64]) -> Result<DecoherenceCurve> {
    if times.is_empty() {
        return Err(Error::Invariant(String::from("time grid nonempty")));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Invariant(String::from("time grid strictly increasing")));
    }
    let mut elements = Vec::with_capacity(times.len());
    for &t in times {
        let el = match query.coupling {
            Coupling::Sc { .. } => {
                rdm_sc(&query.body, &query.env, query.a, query.b, t, &query.consts, &query.coupling)
            }
            Coupling::Hc { .. } => {
                rdm_hc(&query.body, &query.env, query.a, query.b, t, &query.consts, &query.coupling)
            }
            Coupling::Mc { .. } => {
                rdm_mc(&query.body, &query.env, query.a, query.b, t, &query.consts, &query.coupling)
            }
            Coupling::Mhc { .. } => rdm_mhc(
                &query.body,
                &query.env,
                query.a,
                query.b,
                t,
                &query.consts,
                &query.coupling,
            ),
        }?;
        elements.push(el);
    }
    Ok(DecoherenceCurve { times: times.to_vec(), elements, query: query.clone() })
}

/// Decay law of the modulus envelope.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecayModel {
    /// `m ∝ z^{-order}`
    Power,
    /// `m ∝ e^{-order·z}`
    Exponential,
    /// `m ∝ e^{-order·z²}`
    Gaussian,
}

impl DecayModel {
    pub fn label(&self) -> &'static str {
        match self {
            DecayModel::Power => "power",
            DecayModel::Exponential => "exponential",
            DecayModel::Gaussian => "gaussian",
        }
    }
}

/// Result of [`decay_fit`]: best model by least-squares residual of
/// `ln m` against the model abscissa (`ln z`, `z`, `z²`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub model: DecayModel,
    /// Power order, exponential rate, or Gaussian coefficient — always the
    /// negated slope of the winning fit.
    pub order: f64,
    /// Raw slope of the winning fit.
    pub log_slope: f64,
    /// Mean squared residual of the winning fit.
    pub residual: f64,
    pub residual_power: f64,
    pub residual_exponential: f64,
    pub residual_gaussian: f64,
    pub points_used: usize,
}

/// Classifies the modulus decay of a curve over a window in `|z|`.
///
/// Oscillatory moduli (sinc-like transforms) are reduced to their envelope
/// maxima before fitting; monotone data are fitted directly. Needs at least
/// 8 usable points.
pub fn decay_fit(curve: &DecoherenceCurve, window: (f64, f64)) -> Result<DecayFit> {
    let (z_lo, z_hi) = window;
    let mut pts: Vec<(f64, f64)> = curve
        .elements
        .iter()
        .map(|e| (libm::fabs(e.transform_arg), e.modulus))
        .filter(|&(z, m)| z >= z_lo && z <= z_hi && z > 0.0 && m > 0.0)
        .collect();
    pts.sort_by(|p, q| p.0.partial_cmp(&q.0).unwrap());

    // envelope: strict interior maxima of the modulus sequence
    let mut maxima = Vec::new();
    for i in 1..pts.len().saturating_sub(1) {
        if pts[i].1 >= pts[i - 1].1 && pts[i].1 > pts[i + 1].1 {
            maxima.push(pts[i]);
        }
    }
    let fit_pts = if maxima.len() >= 8 { maxima } else { pts };
    if fit_pts.len() < 8 {
        return Err(Error::InsufficientSamples { found: fit_pts.len() });
    }

    let fit = |abscissa: &dyn Fn(f64) -> f64| -> (f64, f64) {
        // least squares y = a + b·x on (abscissa(z), ln m)
        let n = fit_pts.len() as f64;
        let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
        for &(z, m) in &fit_pts {
            let x = abscissa(z);
            let y = libm::log(m);
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
        }
        let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        let intercept = (sy - slope * sx) / n;
        let mse = fit_pts
            .iter()
            .map(|&(z, m)| {
                let r = libm::log(m) - (intercept + slope * abscissa(z));
                r * r
            })
            .sum::<f64>()
            / n;
        (slope, mse)
    };

    let (slope_pow, res_pow) = fit(&|z| libm::log(z));
    let (slope_exp, res_exp) = fit(&|z| z);
    let (slope_gauss, res_gauss) = fit(&|z| z * z);

    let mut best = (DecayModel::Power, slope_pow, res_pow);
    if res_exp < best.2 {
        best = (DecayModel::Exponential, slope_exp, res_exp);
    }
    if res_gauss < best.2 {
        best = (DecayModel::Gaussian, slope_gauss, res_gauss);
    }

    Ok(DecayFit {
        model: best.0,
        order: -best.1,
        log_slope: best.1,
        residual: best.2,
        residual_power: res_pow,
        residual_exponential: res_exp,
        residual_gaussian: res_gauss,
        points_used: fit_pts.len(),
    })
}
