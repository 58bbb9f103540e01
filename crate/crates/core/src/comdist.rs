//! Centre-of-mass density of the environment, its moments, its
//! characteristic function, and entangled-state overlap densities.
//!
//! Conventions fixed here and relied on everywhere else:
//!
//! * `η = Σ xᵢ / n` is the environment centre of mass;
//! * the transform is `f(z) = ∫ dη e^{+izη} w(η)` — sign `+izη`; flipping it
//!   silently conjugates every reduced-matrix element;
//! * `σ` names the *variance* of η (the dimensionally consistent reading of
//!   the short-time law `|f| ≈ 1 - σz²/2`), not its standard deviation.
//!
//! For product states the characteristic function never touches an η grid:
//! `f(z) = Π E[e^{izxᵢ/n}]` is exact and O(n). Gridded states are
//! marginalized onto the exact η lattice (spacing `Δx/n`) and transformed by
//! direct summation, with a tail check that refuses grids whose density has
//! not decayed at the ends.

use alloc::{string::String, vec, vec::Vec};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{for_each_cell, EntangledState, EnvState, GridWave, ParticleDensity};

/// Relative density still allowed at the ends of a gridded marginal.
const END_DECAY_BUDGET: f64 = 1e-8;
/// Probability mass a requested η grid may truncate.
const TAIL_MASS_BUDGET: f64 = 1e-4;

/// Uniform η grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1d {
    pub start: f64,
    pub step: f64,
    pub count: usize,
}

impl Grid1d {
    pub fn new(start: f64, step: f64, count: usize) -> Result<Self> {
        if !(step > 0.0 && step.is_finite() && start.is_finite() && count >= 2) {
            return Err(Error::Invariant(String::from(
                "η grid needs finite start, step > 0, count ≥ 2",
            )));
        }
        Ok(Grid1d { start, step, count })
    }

    /// Symmetric grid covering `center ± halfspan`.
    pub fn spanning(center: f64, halfspan: f64, count: usize) -> Result<Self> {
        if !halfspan.is_finite() || halfspan <= 0.0 {
            return Err(Error::Invariant(String::from("halfspan > 0")));
        }
        let step = 2.0 * halfspan / (count as f64 - 1.0);
        Grid1d::new(center - halfspan, step, count)
    }

    pub fn node(&self, i: usize) -> f64 {
        self.start + i as f64 * self.step
    }

    pub fn last(&self) -> f64 {
        self.node(self.count - 1)
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.count).map(|i| self.node(i))
    }
}

/// Mean and variance of η.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComMoments {
    pub mean: f64,
    /// Variance of η; `f64::INFINITY` when `finite` is false.
    pub variance: f64,
    /// False for environments containing a Cauchy particle.
    pub finite: bool,
}

/// Samples of the η density `w(η)` on the given grid.
///
/// Values are cell averages (exact CDF differences for the closed-form
/// families), so the rectangle sum `Σ w·Δη` equals the captured mass
/// exactly. Fails when more than `1e-4` of the mass lies outside the grid.
pub fn com_density(env: &EnvState, eta: &Grid1d) -> Result<Vec<f64>> {
    let values = match env {
        EnvState::Product(particles) => {
            if particles.iter().any(|p| matches!(p, ParticleDensity::Delta { .. })) {
                return Err(Error::DeltaUnsupported);
            }
            product_density(particles, eta)?
        }
        EnvState::Grid(wave) => {
            let marginal = lattice_marginal(wave);
            let mut out = vec![0.0f64; eta.count];
            for (m, &mass) in marginal.masses.iter().enumerate() {
                deposit(eta, marginal.node(m), mass, &mut out);
            }
            for v in out.iter_mut() {
                *v /= eta.step;
            }
            out
        }
    };
    let mass_in: f64 = values.iter().sum::<f64>() * eta.step;
    let truncated = (1.0 - mass_in).max(0.0);
    if truncated > TAIL_MASS_BUDGET {
        return Err(Error::GridTooNarrow { truncated_mass: truncated });
    }
    Ok(values)
}

fn product_density(particles: &[ParticleDensity], eta: &Grid1d) -> Result<Vec<f64>> {
    let n = particles.len();
    let nf = n as f64;

    // closed forms: single particle, all-Gaussian, all-Cauchy (both families
    // are stable under averaging)
    let effective = if n == 1 {
        Some(particles[0])
    } else if particles.iter().all(|p| matches!(p, ParticleDensity::Gaussian { .. })) {
        let mean = particles.iter().map(|p| p.mean()).sum::<f64>() / nf;
        let var = particles.iter().map(|p| p.variance().unwrap()).sum::<f64>() / (nf * nf);
        Some(ParticleDensity::Gaussian { mean, std: libm::sqrt(var) })
    } else if particles.iter().all(|p| matches!(p, ParticleDensity::Cauchy { .. })) {
        let location = particles.iter().map(|p| p.mean()).sum::<f64>() / nf;
        let scale = particles.iter().map(|p| p.width()).sum::<f64>() / nf;
        Some(ParticleDensity::Cauchy { location, scale })
    } else {
        None
    };

    if let Some(family) = effective {
        let h = eta.step;
        return Ok(eta
            .nodes()
            .map(|x| (family.cdf(x + 0.5 * h) - family.cdf(x - 0.5 * h)) / h)
            .collect());
    }

    // General mixture: convolve cell-averaged one-particle densities on an
    // internal lattice for the sum S = Σ xᵢ, then read off w(η) = n·w_S(nη).
    let min_width = particles.iter().map(|p| p.width()).fold(f64::INFINITY, f64::min);
    let max_span = particles.iter().map(|p| 9.0 * p.width()).fold(0.0, f64::max);
    let h = (min_width / 64.0).max(2.0 * max_span / 8192.0);

    // cheap mass check before any convolution work
    let mut captured = 1.0;
    for p in particles {
        let span = 9.0 * p.width() + h;
        captured *= p.cdf(p.mean() + span) - p.cdf(p.mean() - span);
    }
    if 1.0 - captured > TAIL_MASS_BUDGET {
        return Err(Error::GridTooNarrow { truncated_mass: 1.0 - captured });
    }

    let mut acc = sample_cells(&particles[0], h);
    for p in &particles[1..] {
        acc = convolve(&acc, &sample_cells(p, h));
    }

    Ok(eta
        .nodes()
        .map(|node| nf * acc.interp(nf * node))
        .collect())
}

/// Density samples on the lattice `m·step`, stored with an integer offset so
/// convolution supports stay aligned.
struct Sampled {
    first: i64,
    step: f64,
    values: Vec<f64>,
}

impl Sampled {
    fn interp(&self, x: f64) -> f64 {
        let u = x / self.step - self.first as f64;
        if u < 0.0 || u > (self.values.len() - 1) as f64 {
            return 0.0;
        }
        let i = (u as usize).min(self.values.len() - 2);
        let frac = u - i as f64;
        self.values[i] * (1.0 - frac) + self.values[i + 1] * frac
    }
}

fn sample_cells(p: &ParticleDensity, h: f64) -> Sampled {
    let span = 9.0 * p.width() + h;
    let first = libm::floor((p.mean() - span) / h) as i64;
    let last = libm::ceil((p.mean() + span) / h) as i64;
    let values = (first..=last)
        .map(|m| {
            let x = m as f64 * h;
            (p.cdf(x + 0.5 * h) - p.cdf(x - 0.5 * h)) / h
        })
        .collect();
    Sampled { first, step: h, values }
}

fn convolve(a: &Sampled, b: &Sampled) -> Sampled {
    let len = a.values.len() + b.values.len() - 1;
    let mut values = vec![0.0f64; len];
    for (i, &av) in a.values.iter().enumerate() {
        if av == 0.0 {
            continue;
        }
        for (j, &bv) in b.values.iter().enumerate() {
            values[i + j] += av * bv;
        }
    }
    for v in values.iter_mut() {
        *v *= a.step;
    }
    Sampled { first: a.first + b.first, step: a.step, values }
}

/// Characteristic function `f(z) = ∫ dη e^{izη} w(η)`.
///
/// Product states use the exact per-particle product `Π E[e^{izxᵢ/n}]`
/// (δ densities allowed); gridded states are marginalized and summed, which
/// can fail the end-decay check.
pub fn characteristic(env: &EnvState, z: f64) -> Result<Complex64> {
    match env {
        EnvState::Product(particles) => {
            let u = z / particles.len() as f64;
            let mut f = Complex64::new(1.0, 0.0);
            for p in particles {
                f *= p.char_fn(u);
            }
            Ok(f)
        }
        EnvState::Grid(wave) => {
            let marginal = lattice_marginal(wave);
            marginal.check_end_decay()?;
            if z == 0.0 {
                return Ok(Complex64::new(1.0, 0.0));
            }
            let total: f64 = marginal.masses.iter().sum();
            let mut f = Complex64::new(0.0, 0.0);
            for (m, &mass) in marginal.masses.iter().enumerate() {
                f += Complex64::from_polar(mass, z * marginal.node(m));
            }
            Ok(f / total)
        }
    }
}

/// Mean and variance of η; closed forms for the families (Cauchy reports
/// `finite = false`), discrete sums for gridded states.
pub fn moments(env: &EnvState) -> ComMoments {
    match env {
        EnvState::Product(particles) => {
            let nf = particles.len() as f64;
            let mean = particles.iter().map(|p| p.mean()).sum::<f64>() / nf;
            let mut variance = 0.0;
            let mut finite = true;
            for p in particles {
                match p.variance() {
                    Some(v) => variance += v,
                    None => finite = false,
                }
            }
            if finite {
                ComMoments { mean, variance: variance / (nf * nf), finite: true }
            } else {
                ComMoments { mean, variance: f64::INFINITY, finite: false }
            }
        }
        EnvState::Grid(wave) => {
            let marginal = lattice_marginal(wave);
            let total: f64 = marginal.masses.iter().sum();
            let mean = marginal
                .masses
                .iter()
                .enumerate()
                .map(|(m, &w)| w * marginal.node(m))
                .sum::<f64>()
                / total;
            let variance = marginal
                .masses
                .iter()
                .enumerate()
                .map(|(m, &w)| {
                    let d = marginal.node(m) - mean;
                    w * d * d
                })
                .sum::<f64>()
                / total;
            ComMoments { mean, variance, finite: true }
        }
    }
}

/// Complex overlap density `w_{ab}(η)` of two entangled slices together with
/// the two diagonal densities, all on the caller's grid.
#[derive(Debug, Clone)]
pub struct OverlapDensity {
    pub grid: Grid1d,
    /// `w_{ab}(η)`: slice at the first position times the conjugate slice at
    /// the second, integrated over relative coordinates.
    pub values: Vec<Complex64>,
    /// `w_{aa}` — real, nonnegative.
    pub diag_a: Vec<f64>,
    /// `w_{bb}` — real, nonnegative.
    pub diag_b: Vec<f64>,
}

impl OverlapDensity {
    /// Largest violation of `|w_ab| ≤ √(w_aa w_bb)` over the grid; ≤ 0 means
    /// the bound holds everywhere.
    pub fn max_schwarz_violation(&self) -> f64 {
        let mut worst = f64::NEG_INFINITY;
        for i in 0..self.grid.count {
            let bound = libm::sqrt(self.diag_a[i].max(0.0) * self.diag_b[i].max(0.0));
            worst = worst.max(self.values[i].norm() - bound);
        }
        worst
    }

    /// Rectangle-rule integral of a diagonal density.
    pub fn diag_mass(diag: &[f64], grid: &Grid1d) -> f64 {
        diag.iter().sum::<f64>() * grid.step
    }
}

/// Overlap density of the slices attached to body positions `xa` and `xb`.
///
/// Binning over the cell η values implements the change of variables
/// `xᵢ = η + ξᵢ` discretely; the Jacobian is absorbed by depositing cell
/// masses rather than density values.
pub fn overlap_density(
    state: &EntangledState,
    xa: f64,
    xb: f64,
    eta: &Grid1d,
) -> Result<OverlapDensity> {
    let slice_a = state.slice(xa)?;
    let slice_b = state.slice(xb)?;
    let spec = slice_a.spec;
    let vol = spec.cell_volume();
    let inv_n = 1.0 / spec.dims as f64;

    let mut values = vec![Complex64::new(0.0, 0.0); eta.count];
    let mut diag_a = vec![0.0f64; eta.count];
    let mut diag_b = vec![0.0f64; eta.count];
    for_each_cell(&spec, |idx, _, coords| {
        let eta_cell = coords.iter().sum::<f64>() * inv_n;
        let a = slice_a.amps[idx];
        let b = slice_b.amps[idx];
        deposit_c64(eta, eta_cell, a * b.conj() * vol, &mut values);
        deposit(eta, eta_cell, a.norm_sqr() * vol, &mut diag_a);
        deposit(eta, eta_cell, b.norm_sqr() * vol, &mut diag_b);
    });
    let inv_step = 1.0 / eta.step;
    for v in values.iter_mut() {
        *v *= inv_step;
    }
    for v in diag_a.iter_mut().chain(diag_b.iter_mut()) {
        *v *= inv_step;
    }
    Ok(OverlapDensity { grid: *eta, values, diag_a, diag_b })
}

/// Marginal of `|amplitude|²` over everything but η.
///
/// Cell η values live on the lattice `origin + m·Δx/n`, so every deposit is
/// exact — no smearing between nodes.
pub(crate) struct LatticeMarginal {
    pub start: f64,
    pub step: f64,
    pub masses: Vec<f64>,
}

impl LatticeMarginal {
    pub fn node(&self, m: usize) -> f64 {
        self.start + m as f64 * self.step
    }

    pub fn check_end_decay(&self) -> Result<()> {
        let max = self.masses.iter().fold(0.0f64, |m, &v| m.max(v));
        let worst_end = self.masses[0].max(*self.masses.last().unwrap());
        if worst_end > END_DECAY_BUDGET * max {
            return Err(Error::GridTooNarrow { truncated_mass: worst_end });
        }
        Ok(())
    }
}

pub(crate) fn lattice_marginal(wave: &GridWave) -> LatticeMarginal {
    let spec = wave.spec;
    let n = spec.dims;
    let vol = spec.cell_volume();
    let mut masses = vec![0.0f64; n * (spec.points - 1) + 1];
    for_each_cell(&spec, |idx, digits, _| {
        masses[digits.iter().sum::<usize>()] += wave.amps[idx].norm_sqr() * vol;
    });
    LatticeMarginal { start: spec.origin, step: spec.spacing / n as f64, masses }
}

/// Complex overlap masses of two slices on the exact η lattice; used by the
/// entangled reduced-matrix element where no user grid is involved.
pub(crate) struct LatticeOverlap {
    pub start: f64,
    pub step: f64,
    pub masses: Vec<Complex64>,
}

impl LatticeOverlap {
    pub fn node(&self, m: usize) -> f64 {
        self.start + m as f64 * self.step
    }

    pub fn check_end_decay(&self) -> Result<()> {
        let max = self.masses.iter().fold(0.0f64, |m, v| m.max(v.norm()));
        let worst_end = self.masses[0].norm().max(self.masses.last().unwrap().norm());
        if max > 0.0 && worst_end > END_DECAY_BUDGET * max {
            return Err(Error::GridTooNarrow { truncated_mass: worst_end });
        }
        Ok(())
    }

    /// `∫ dη e^{izη} w_ab(η)` by exact lattice summation.
    pub fn transform(&self, z: f64) -> Complex64 {
        let mut g = Complex64::new(0.0, 0.0);
        for (m, &mass) in self.masses.iter().enumerate() {
            g += mass * Complex64::from_polar(1.0, z * self.node(m));
        }
        g
    }
}

pub(crate) fn lattice_overlap(a: &GridWave, b: &GridWave) -> LatticeOverlap {
    let spec = a.spec;
    debug_assert_eq!(spec, b.spec);
    let n = spec.dims;
    let vol = spec.cell_volume();
    let mut masses = vec![Complex64::new(0.0, 0.0); n * (spec.points - 1) + 1];
    for_each_cell(&spec, |idx, digits, _| {
        masses[digits.iter().sum::<usize>()] += a.amps[idx] * b.amps[idx].conj() * vol;
    });
    LatticeOverlap { start: spec.origin, step: spec.spacing / n as f64, masses }
}

/// Linear (cloud-in-cell) deposit; mass landing outside the grid is dropped
/// and returned to the caller.
fn deposit(grid: &Grid1d, pos: f64, mass: f64, out: &mut [f64]) -> f64 {
    let u = (pos - grid.start) / grid.step;
    if u < 0.0 || u > (grid.count - 1) as f64 {
        return mass;
    }
    let i = (u as usize).min(grid.count - 2);
    let frac = u - i as f64;
    out[i] += mass * (1.0 - frac);
    out[i + 1] += mass * frac;
    0.0
}

fn deposit_c64(grid: &Grid1d, pos: f64, mass: Complex64, out: &mut [Complex64]) {
    let u = (pos - grid.start) / grid.step;
    if u < 0.0 || u > (grid.count - 1) as f64 {
        return;
    }
    let i = (u as usize).min(grid.count - 2);
    let frac = u - i as f64;
    out[i] += mass * (1.0 - frac);
    out[i + 1] += mass * frac;
}
