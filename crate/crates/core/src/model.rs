//! Shared physical data: constants, couplings, environment and body states.
//!
//! Everything here is plain immutable data; constructors and [`validate`]
//! enforce the invariants, the engines assume them.

use alloc::{format, string::String, vec, vec::Vec};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Global constants of the model.
///
/// `alpha` is the environment kinetic constant (dimension of a velocity):
/// one free particle evolves under `α p̂`, so its packet drifts rigidly at
/// speed `α` without spreading. `n` counts the environment particles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysConsts {
    pub hbar: f64,
    pub alpha: f64,
    pub n: u32,
}

impl PhysConsts {
    /// ħ = 1, α = 1 with `n` particles — the default unit system.
    pub fn unit(n: u32) -> Self {
        PhysConsts { hbar: 1.0, alpha: 1.0, n }
    }
}

impl Default for PhysConsts {
    fn default() -> Self {
        PhysConsts::unit(1)
    }
}

/// Body–environment interaction.
///
/// * `Sc`: `k X Σ x̂ᵢ` — linear in the body position; position pointer basis.
/// * `Mc`: `γ P̂ Σ x̂ᵢ` — linear in the body momentum; momentum pointer basis.
/// * `Hc`: `-k/2 Σ (X - x̂ᵢ)²` — harmonic; equals `Sc` up to pure phases and
///   a one-particle potential term.
/// * `Mhc`: `-μ/2 Σ (P̂ - ν x̂ᵢ)²` with `γ = ν/μ` — quadratic companion of
///   `Mc`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Coupling {
    Sc { k: f64 },
    Mc { gamma: f64 },
    Hc { k: f64 },
    Mhc { mu: f64, nu: f64 },
}

impl Coupling {
    /// The constant multiplying the transform argument: `k` for the
    /// position couplings, `γ` (= `ν/μ` for `Mhc`) for the momentum ones.
    pub fn strength(&self) -> f64 {
        match *self {
            Coupling::Sc { k } | Coupling::Hc { k } => k,
            Coupling::Mc { gamma } => gamma,
            Coupling::Mhc { mu, nu } => nu / mu,
        }
    }

    /// True for the couplings whose pointer basis is position (`Sc`, `Hc`).
    pub fn is_position(&self) -> bool {
        matches!(self, Coupling::Sc { .. } | Coupling::Hc { .. })
    }

    pub fn label(&self) -> &'static str {
        match self {
            Coupling::Sc { .. } => "sc",
            Coupling::Mc { .. } => "mc",
            Coupling::Hc { .. } => "hc",
            Coupling::Mhc { .. } => "mhc",
        }
    }
}

/// One-particle position density of the initial environment state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ParticleDensity {
    Gaussian { mean: f64, std: f64 },
    /// Uniform on `(center - halfwidth, center + halfwidth)`.
    Box { center: f64, halfwidth: f64 },
    Cauchy { location: f64, scale: f64 },
    /// Point mass; kept symbolic and never sampled onto a grid.
    Delta { location: f64 },
}

impl ParticleDensity {
    pub fn mean(&self) -> f64 {
        match *self {
            ParticleDensity::Gaussian { mean, .. } => mean,
            ParticleDensity::Box { center, .. } => center,
            // Centre of symmetry; the Cauchy mean does not exist.
            ParticleDensity::Cauchy { location, .. } => location,
            ParticleDensity::Delta { location } => location,
        }
    }

    /// `None` for the Cauchy family.
    pub fn variance(&self) -> Option<f64> {
        match *self {
            ParticleDensity::Gaussian { std, .. } => Some(std * std),
            ParticleDensity::Box { halfwidth, .. } => Some(halfwidth * halfwidth / 3.0),
            ParticleDensity::Cauchy { .. } => None,
            ParticleDensity::Delta { .. } => Some(0.0),
        }
    }

    /// Pointwise density. The box returns the midpoint value `1/(4L)` at
    /// exactly `center ± halfwidth` so aligned-grid quadrature stays exact.
    ///
    /// Panics for `Delta`; callers filter the distributional case first.
    pub fn density(&self, x: f64) -> f64 {
        match *self {
            ParticleDensity::Gaussian { mean, std } => {
                let u = (x - mean) / std;
                libm::exp(-0.5 * u * u) / (std * libm::sqrt(2.0 * core::f64::consts::PI))
            }
            ParticleDensity::Box { center, halfwidth } => {
                let d = libm::fabs(x - center);
                if d < halfwidth {
                    0.5 / halfwidth
                } else if d == halfwidth {
                    0.25 / halfwidth
                } else {
                    0.0
                }
            }
            ParticleDensity::Cauchy { location, scale } => {
                let u = (x - location) / scale;
                1.0 / (core::f64::consts::PI * scale * (1.0 + u * u))
            }
            ParticleDensity::Delta { .. } => panic!("delta density is distributional"),
        }
    }

    /// Cumulative distribution; used for exact cell-averaged sampling.
    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            ParticleDensity::Gaussian { mean, std } => {
                0.5 * (1.0 + libm::erf((x - mean) / (std * libm::sqrt(2.0))))
            }
            ParticleDensity::Box { center, halfwidth } => {
                let u = (x - center + halfwidth) / (2.0 * halfwidth);
                u.clamp(0.0, 1.0)
            }
            ParticleDensity::Cauchy { location, scale } => {
                0.5 + libm::atan((x - location) / scale) / core::f64::consts::PI
            }
            ParticleDensity::Delta { location } => {
                if x >= location {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// `E[e^{iux}]` in the `e^{+iux}` sign convention.
    pub fn char_fn(&self, u: f64) -> Complex64 {
        match *self {
            ParticleDensity::Gaussian { mean, std } => {
                Complex64::from_polar(libm::exp(-0.5 * std * std * u * u), u * mean)
            }
            ParticleDensity::Box { center, halfwidth } => {
                Complex64::from_polar(1.0, u * center) * sinc(u * halfwidth)
            }
            ParticleDensity::Cauchy { location, scale } => {
                Complex64::from_polar(libm::exp(-scale * libm::fabs(u)), u * location)
            }
            ParticleDensity::Delta { location } => Complex64::from_polar(1.0, u * location),
        }
    }

    /// Characteristic length used for automatic grid sizing.
    pub fn width(&self) -> f64 {
        match *self {
            ParticleDensity::Gaussian { std, .. } => std,
            ParticleDensity::Box { halfwidth, .. } => halfwidth,
            ParticleDensity::Cauchy { scale, .. } => scale,
            ParticleDensity::Delta { .. } => 0.0,
        }
    }

    fn failures(&self, out: &mut Vec<String>) {
        match *self {
            ParticleDensity::Gaussian { mean, std } => {
                if !(std > 0.0 && std.is_finite()) {
                    out.push(String::from("std > 0"));
                }
                if !mean.is_finite() {
                    out.push(String::from("mean finite"));
                }
            }
            ParticleDensity::Box { center, halfwidth } => {
                if !(halfwidth > 0.0 && halfwidth.is_finite()) {
                    out.push(String::from("L > 0"));
                }
                if !center.is_finite() {
                    out.push(String::from("center finite"));
                }
            }
            ParticleDensity::Cauchy { location, scale } => {
                if !(scale > 0.0 && scale.is_finite()) {
                    out.push(String::from("scale > 0"));
                }
                if !location.is_finite() {
                    out.push(String::from("location finite"));
                }
            }
            ParticleDensity::Delta { location } => {
                if !location.is_finite() {
                    out.push(String::from("location finite"));
                }
            }
        }
    }
}

/// `sin(x)/x`, exactly 1 at 0.
pub fn sinc(x: f64) -> f64 {
    if libm::fabs(x) < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        libm::sin(x) / x
    }
}

/// Uniform hypercube grid: `points` nodes per axis (power of two), shared
/// `spacing` and `origin` on every axis; `dims` equals the particle count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub points: usize,
    pub dims: usize,
    pub spacing: f64,
    pub origin: f64,
}

impl GridSpec {
    /// Desk-scale cap on the total cell count.
    pub const MAX_TOTAL_POINTS: usize = 1 << 24;

    pub fn new(points: usize, dims: usize, spacing: f64, origin: f64) -> Result<Self> {
        let spec = GridSpec { points, dims, spacing, origin };
        let mut failures = Vec::new();
        spec.failures(&mut failures);
        if failures.is_empty() {
            Ok(spec)
        } else {
            Err(Error::Invariant(failures.join("; ")))
        }
    }

    pub fn total_points(&self) -> usize {
        self.points.pow(self.dims as u32)
    }

    pub fn cell_volume(&self) -> f64 {
        let mut v = 1.0;
        for _ in 0..self.dims {
            v *= self.spacing;
        }
        v
    }

    pub fn coord(&self, index: usize) -> f64 {
        self.origin + index as f64 * self.spacing
    }

    /// Largest coordinate on any axis.
    pub fn max_coord(&self) -> f64 {
        self.coord(self.points - 1)
    }

    fn failures(&self, out: &mut Vec<String>) {
        if !(self.points.is_power_of_two() && self.points >= 64) {
            out.push(String::from("grid points per dimension a power of two ≥ 64"));
        }
        if !(self.dims >= 1 && self.dims <= 3) {
            out.push(String::from("grid dims in 1..=3"));
        }
        if self.dims >= 1
            && self.dims <= 3
            && self
                .points
                .checked_pow(self.dims as u32)
                .is_none_or(|t| t > Self::MAX_TOTAL_POINTS)
        {
            out.push(String::from("grid total points ≤ 2^24"));
        }
        if !(self.spacing > 0.0 && self.spacing.is_finite()) {
            out.push(String::from("grid spacing > 0"));
        }
        if !self.origin.is_finite() {
            out.push(String::from("grid origin finite"));
        }
    }
}

/// Iterates cells of a row-major hypercube array: `f(linear, digits, coords)`.
pub(crate) fn for_each_cell(spec: &GridSpec, mut f: impl FnMut(usize, &[usize], &[f64])) {
    let n = spec.points;
    let d = spec.dims;
    let mut digits = [0usize; 3];
    let mut coords = [spec.origin; 3];
    let total = spec.total_points();
    for idx in 0..total {
        f(idx, &digits[..d], &coords[..d]);
        for a in (0..d).rev() {
            digits[a] += 1;
            if digits[a] < n {
                coords[a] = spec.coord(digits[a]);
                break;
            }
            digits[a] = 0;
            coords[a] = spec.origin;
        }
    }
}

/// Complex amplitudes over a [`GridSpec`], row-major with the last axis
/// fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct GridWave {
    pub spec: GridSpec,
    pub amps: Vec<Complex64>,
}

impl GridWave {
    /// Builds amplitudes from a closure of the cell coordinates. No
    /// normalization is applied.
    pub fn from_fn(spec: GridSpec, mut f: impl FnMut(&[f64]) -> Complex64) -> Self {
        let mut amps = vec![Complex64::new(0.0, 0.0); spec.total_points()];
        for_each_cell(&spec, |idx, _, coords| {
            amps[idx] = f(coords);
        });
        GridWave { spec, amps }
    }

    /// Samples the product wavefunction `φ(x) = Π √wᵢ(xᵢ)` of independent
    /// particles onto the grid, then normalizes exactly.
    ///
    /// Fails with [`Error::GridTooNarrow`] when the grid captures less than
    /// 99.9% of the probability mass, and rejects δ densities.
    pub fn from_families(families: &[ParticleDensity], spec: GridSpec) -> Result<Self> {
        if families.len() != spec.dims {
            return Err(Error::Invariant(format!(
                "grid dims {} must equal particle count {}",
                spec.dims,
                families.len()
            )));
        }
        if families.iter().any(|p| matches!(p, ParticleDensity::Delta { .. })) {
            return Err(Error::DeltaUnsupported);
        }
        // per-axis amplitude tables
        let tables: Vec<Vec<f64>> = families
            .iter()
            .map(|p| (0..spec.points).map(|j| libm::sqrt(p.density(spec.coord(j)))).collect())
            .collect();
        let mut wave = GridWave::from_fn(spec, |_| Complex64::new(1.0, 0.0));
        for_each_cell(&spec, |idx, digits, _| {
            let mut a = 1.0;
            for (axis, &dig) in digits.iter().enumerate() {
                a *= tables[axis][dig];
            }
            wave.amps[idx] = Complex64::new(a, 0.0);
        });
        let mass = wave.norm_sq();
        let defect = (mass - 1.0).abs();
        if defect.is_nan() || defect > 1e-3 {
            return Err(Error::GridTooNarrow { truncated_mass: (1.0 - mass).abs() });
        }
        wave.normalize();
        Ok(wave)
    }

    /// Discrete squared norm `Σ |a|² · cellvol`.
    pub fn norm_sq(&self) -> f64 {
        let vol = self.spec.cell_volume();
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>() * vol
    }

    pub fn norm(&self) -> f64 {
        libm::sqrt(self.norm_sq())
    }

    /// Rescales to unit norm; returns the previous norm.
    pub fn normalize(&mut self) -> f64 {
        let norm = self.norm();
        if norm > 0.0 {
            let inv = 1.0 / norm;
            for a in self.amps.iter_mut() {
                *a *= inv;
            }
        }
        norm
    }

    fn failures(&self, out: &mut Vec<String>) {
        self.spec.failures(out);
        if self.amps.len() != self.spec.total_points() {
            out.push(String::from("grid amplitude count = total points"));
            return;
        }
        let defect = (self.norm_sq() - 1.0).abs();
        if defect.is_nan() || defect > 1e-10 {
            out.push(format!("grid wave normalized within 1e-10 (defect {defect:.3e})"));
        }
    }
}

/// Initial environment state.
#[derive(Debug, Clone, PartialEq)]
pub enum EnvState {
    /// Independent particles, one density each (identical or not).
    Product(Vec<ParticleDensity>),
    /// Sampled n-dimensional wavefunction.
    Grid(GridWave),
}

impl EnvState {
    /// `n` identical particles.
    pub fn identical(density: ParticleDensity, n: u32) -> Self {
        EnvState::Product(vec![density; n as usize])
    }

    pub fn particle_count(&self) -> usize {
        match self {
            EnvState::Product(p) => p.len(),
            EnvState::Grid(w) => w.spec.dims,
        }
    }

    pub fn has_delta(&self) -> bool {
        match self {
            EnvState::Product(p) => p.iter().any(|d| matches!(d, ParticleDensity::Delta { .. })),
            EnvState::Grid(_) => false,
        }
    }
}

/// Body amplitude evaluated pointwise; serves as ψ(X) for the position
/// couplings and as the momentum-space amplitude for the momentum couplings.
#[derive(Debug, Clone, PartialEq)]
pub enum BodyAmplitude {
    /// Normalized packet `(π w²)^{-1/4} e^{-(x-center)²/(2w²)} e^{i q x}`.
    GaussianPacket { center: f64, width: f64, wavenumber: f64 },
    /// Discrete superposition: weight `cⱼ` at point `xⱼ`, `Σ|cⱼ|² = 1`;
    /// evaluation anywhere else gives 0.
    Superposition(Vec<(f64, Complex64)>),
    /// Sampled amplitudes, linearly interpolated, 0 outside the table.
    Table { nodes: Vec<f64>, values: Vec<Complex64> },
}

impl BodyAmplitude {
    pub fn gaussian(center: f64, width: f64, wavenumber: f64) -> Result<Self> {
        if !(width > 0.0 && width.is_finite() && center.is_finite() && wavenumber.is_finite()) {
            return Err(Error::Invariant(String::from("packet width > 0 and parameters finite")));
        }
        Ok(BodyAmplitude::GaussianPacket { center, width, wavenumber })
    }

    /// Two-point superposition, the canonical macro-superposition input.
    pub fn two_point(x1: f64, c1: Complex64, x2: f64, c2: Complex64) -> Result<Self> {
        BodyAmplitude::superposition(vec![(x1, c1), (x2, c2)])
    }

    pub fn superposition(points: Vec<(f64, Complex64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Invariant(String::from("superposition needs at least one point")));
        }
        let total: f64 = points.iter().map(|(_, c)| c.norm_sqr()).sum();
        let defect = (total - 1.0).abs();
        if defect.is_nan() || defect > 1e-10 {
            return Err(Error::Invariant(format!(
                "Σ|c|² = 1 within 1e-10 (got {total:.12})"
            )));
        }
        Ok(BodyAmplitude::Superposition(points))
    }

    pub fn table(nodes: Vec<f64>, values: Vec<Complex64>) -> Result<Self> {
        if nodes.len() != values.len() || nodes.len() < 2 {
            return Err(Error::Invariant(String::from("table needs ≥ 2 matching nodes/values")));
        }
        if nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Invariant(String::from("table nodes strictly increasing")));
        }
        Ok(BodyAmplitude::Table { nodes, values })
    }

    pub fn eval(&self, x: f64) -> Complex64 {
        match self {
            BodyAmplitude::GaussianPacket { center, width, wavenumber } => {
                let u = (x - center) / width;
                let mag = libm::exp(-0.5 * u * u)
                    / libm::pow(core::f64::consts::PI * width * width, 0.25);
                Complex64::from_polar(mag, wavenumber * x)
            }
            BodyAmplitude::Superposition(points) => points
                .iter()
                .find(|(p, _)| *p == x)
                .map(|(_, c)| *c)
                .unwrap_or_else(|| Complex64::new(0.0, 0.0)),
            BodyAmplitude::Table { nodes, values } => {
                if x < nodes[0] || x > *nodes.last().unwrap() {
                    return Complex64::new(0.0, 0.0);
                }
                let i = nodes.partition_point(|&nx| nx <= x).saturating_sub(1);
                if i + 1 >= nodes.len() {
                    return values[i];
                }
                let frac = (x - nodes[i]) / (nodes[i + 1] - nodes[i]);
                values[i] * (1.0 - frac) + values[i + 1] * frac
            }
        }
    }
}

/// Body–environment state supported on finitely many body positions, each
/// carrying its own (generally unnormalized) environment slice. The slice
/// norms are the superposition weights; together they sum to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct EntangledState {
    positions: Vec<f64>,
    slices: Vec<GridWave>,
}

impl EntangledState {
    pub fn new(positions: Vec<f64>, slices: Vec<GridWave>) -> Result<Self> {
        if positions.is_empty() || positions.len() != slices.len() {
            return Err(Error::Invariant(String::from(
                "one environment slice per body position",
            )));
        }
        let spec = slices[0].spec;
        if slices.iter().any(|s| s.spec != spec) {
            return Err(Error::Invariant(String::from("slices share one grid")));
        }
        let mut spec_failures = Vec::new();
        spec.failures(&mut spec_failures);
        if !spec_failures.is_empty() {
            return Err(Error::Invariant(spec_failures.join("; ")));
        }
        for (i, &p) in positions.iter().enumerate() {
            if !p.is_finite() {
                return Err(Error::Invariant(String::from("positions finite")));
            }
            if positions[..i].contains(&p) {
                return Err(Error::Invariant(String::from("positions distinct")));
            }
        }
        let state = EntangledState { positions, slices };
        let total = state.total_norm_sq();
        let defect = (total - 1.0).abs();
        if defect.is_nan() || defect > 1e-10 {
            return Err(Error::Invariant(format!(
                "Σ slice norms = 1 within 1e-10 (got {total:.12})"
            )));
        }
        Ok(state)
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn grid_spec(&self) -> GridSpec {
        self.slices[0].spec
    }

    /// Environment slice attached to body position `x` (exact match).
    pub fn slice(&self, x: f64) -> Result<&GridWave> {
        self.positions
            .iter()
            .position(|&p| p == x)
            .map(|i| &self.slices[i])
            .ok_or(Error::PositionNotInSupport { position: x })
    }

    pub fn total_norm_sq(&self) -> f64 {
        self.slices.iter().map(|s| s.norm_sq()).sum()
    }
}

/// Outcome of [`validate`]; an empty failure list is a pass.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    failures: Vec<String>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn failures(&self) -> &[String] {
        &self.failures
    }
}

/// Checks every construction invariant of the inputs without mutating them;
/// violations are reported, never panicked on.
pub fn validate(consts: &PhysConsts, coupling: &Coupling, env: &EnvState) -> ValidationReport {
    let mut failures = Vec::new();

    if !(consts.hbar > 0.0 && consts.hbar.is_finite()) {
        failures.push(String::from("hbar > 0"));
    }
    if consts.n < 1 {
        failures.push(String::from("n ≥ 1"));
    }
    if !consts.alpha.is_finite() {
        failures.push(String::from("alpha finite"));
    }

    match *coupling {
        Coupling::Sc { k } | Coupling::Hc { k } => {
            if !k.is_finite() {
                failures.push(String::from("k finite"));
            }
        }
        Coupling::Mc { gamma } => {
            if !gamma.is_finite() {
                failures.push(String::from("gamma finite"));
            }
        }
        Coupling::Mhc { mu, nu } => {
            if !(mu.is_finite() && nu.is_finite() && mu != 0.0 && (nu / mu).is_finite()) {
                failures.push(String::from("mu, nu finite with gamma = nu/mu"));
            }
        }
    }

    match env {
        EnvState::Product(particles) => {
            if particles.len() != consts.n as usize {
                failures.push(format!(
                    "env particle count = n (env has {}, n = {})",
                    particles.len(),
                    consts.n
                ));
            }
            for p in particles {
                p.failures(&mut failures);
            }
        }
        EnvState::Grid(wave) => {
            wave.failures(&mut failures);
            if wave.spec.dims != consts.n as usize {
                failures.push(format!(
                    "grid dims = n (grid has {}, n = {})",
                    wave.spec.dims, consts.n
                ));
            }
        }
    }

    failures.sort();
    failures.dedup();
    ValidationReport { failures }
}
