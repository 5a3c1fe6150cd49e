//! Poisson sampling of the free-gas initial configuration.
//!
//! The window is sampled directly at macroscopic scale: the particle count
//! is Poisson with mean `eps^-1 rho |window|`, positions are i.i.d. uniform
//! on the window, and (velocity, length) pairs are drawn from the atom
//! weights. Everything is deterministic given `(seed, trial_index)`.

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};
use crate::measure::VelocityLengthMeasure;
use crate::rng::trial_rng;

/// Refuse to sample configurations expected to exceed this many particles.
pub const DEFAULT_COUNT_CAP: f64 = 1e8;
/// Default safety margin applied to window sizing.
pub const DEFAULT_WINDOW_MARGIN: f64 = 0.1;

/// Sampling parameters for one trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GasParameters {
    pub eps: f64,
    pub window_lo: f64,
    pub window_hi: f64,
    pub seed: u64,
    pub trial_index: u64,
}

impl GasParameters {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps <= 1.0) {
            return Err(Error::Config(format!(
                "eps must lie in (0, 1], got {}",
                self.eps
            )));
        }
        // negated form so NaN bounds are rejected too
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(self.window_lo < self.window_hi) {
            return Err(Error::Config(format!(
                "window_lo {} must be below window_hi {}",
                self.window_lo, self.window_hi
            )));
        }
        Ok(())
    }
}

/// One sampled particle. `atom` indexes into the measure's atom list; the
/// velocity and length are copied out for direct access.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Particle {
    pub id: u64,
    pub x: f64,
    pub v: f64,
    pub r: f64,
    pub atom: usize,
}

/// Per-atom position index. All particles of an atom share one rod length,
/// so interval masses reduce to exact integer counts times that length; the
/// prefix length at slot `k` is `r * k` by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomSlice {
    pub v: f64,
    pub r: f64,
    /// Positions of this atom's particles, ascending.
    pub xs: Vec<f64>,
}

impl AtomSlice {
    /// Rescaled rod length carried by the first `k` particles of this atom.
    pub fn prefix_length(&self, k: usize) -> f64 {
        self.r * k as f64
    }
}

/// A sampled free-gas configuration with its per-atom index.
#[derive(Debug, Clone, PartialEq)]
pub struct PointConfiguration {
    pub eps: f64,
    pub window_lo: f64,
    pub window_hi: f64,
    particles: Vec<Particle>,
    atom_index: Vec<AtomSlice>,
    /// Maps particle id to its slot in the sorted particle array.
    slot_of_id: Vec<u32>,
}

impl PointConfiguration {
    /// Build from an unsorted particle list. Ids must be unique and dense
    /// in `0..n`. Ties in position are ordered by id.
    pub fn from_particles(
        mut particles: Vec<Particle>,
        mu: &VelocityLengthMeasure,
        eps: f64,
        window_lo: f64,
        window_hi: f64,
    ) -> Self {
        particles.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.id.cmp(&b.id)));
        let mut atom_index: Vec<AtomSlice> = mu
            .atoms()
            .iter()
            .map(|a| AtomSlice { v: a.v, r: a.r, xs: Vec::new() })
            .collect();
        let mut slot_of_id = vec![u32::MAX; particles.len()];
        for (slot, p) in particles.iter().enumerate() {
            atom_index[p.atom].xs.push(p.x);
            slot_of_id[p.id as usize] = slot as u32;
        }
        Self {
            eps,
            window_lo,
            window_hi,
            particles,
            atom_index,
            slot_of_id,
        }
    }

    /// Rebuild with a new particle list, keeping eps, window and the atom
    /// templates. Used by the free evolution.
    pub fn with_particles(&self, mut particles: Vec<Particle>) -> Self {
        particles.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.id.cmp(&b.id)));
        let mut atom_index: Vec<AtomSlice> = self
            .atom_index
            .iter()
            .map(|s| AtomSlice { v: s.v, r: s.r, xs: Vec::new() })
            .collect();
        let mut slot_of_id = vec![u32::MAX; particles.len()];
        for (slot, p) in particles.iter().enumerate() {
            atom_index[p.atom].xs.push(p.x);
            slot_of_id[p.id as usize] = slot as u32;
        }
        Self {
            eps: self.eps,
            window_lo: self.window_lo,
            window_hi: self.window_hi,
            particles,
            atom_index,
            slot_of_id,
        }
    }

    pub fn particles(&self) -> &[Particle] {
        &self.particles
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn atom_index(&self) -> &[AtomSlice] {
        &self.atom_index
    }

    pub fn particle_by_id(&self, id: u64) -> Result<&Particle> {
        let slot = self
            .slot_of_id
            .get(id as usize)
            .copied()
            .ok_or(Error::UnknownParticle(id))?;
        Ok(&self.particles[slot as usize])
    }

    pub fn contains(&self, x: f64) -> bool {
        self.window_lo <= x && x <= self.window_hi
    }

    /// Id of the particle of the given atom nearest to `x`, if any.
    pub fn nearest_of_atom(&self, x: f64, atom: usize) -> Option<u64> {
        let best = self
            .particles
            .iter()
            .filter(|p| p.atom == atom)
            .min_by(|a, b| (a.x - x).abs().total_cmp(&(b.x - x).abs()))?;
        Some(best.id)
    }
}

/// Sample a configuration; deterministic given `(seed, trial_index)`.
pub fn sample(
    params: &GasParameters,
    mu: &VelocityLengthMeasure,
) -> Result<PointConfiguration> {
    sample_with_cap(params, mu, DEFAULT_COUNT_CAP)
}

pub fn sample_with_cap(
    params: &GasParameters,
    mu: &VelocityLengthMeasure,
    cap: f64,
) -> Result<PointConfiguration> {
    params.validate()?;
    let width = params.window_hi - params.window_lo;
    let mean = mu.rho() * width / params.eps;
    if mean > cap {
        return Err(Error::CountCap { expected: mean, cap });
    }
    let mut rng = trial_rng(params.seed, params.trial_index);
    let n = Poisson::new(mean)
        .map_err(|e| Error::Config(format!("bad Poisson mean {mean}: {e}")))?
        .sample(&mut rng) as u64;

    // Cumulative atom weights for the categorical draw.
    let mut cum = Vec::with_capacity(mu.n_atoms());
    let mut acc = 0.0;
    for a in mu.atoms() {
        acc += a.w;
        cum.push(acc);
    }
    // Guard the top end against rounding.
    *cum.last_mut().unwrap() = f64::INFINITY;

    let mut particles = Vec::with_capacity(n as usize);
    for id in 0..n {
        let x = rng.gen_range(params.window_lo..params.window_hi);
        let u: f64 = rng.gen::<f64>();
        let atom = cum.partition_point(|&c| c <= u);
        let a = mu.atoms()[atom];
        particles.push(Particle { id, x, v: a.v, r: a.r, atom });
    }
    Ok(PointConfiguration::from_particles(
        particles,
        mu,
        params.eps,
        params.window_lo,
        params.window_hi,
    ))
}

/// Symmetric window guaranteeing that every flow interval queried from base
/// points within `extent` stays inside, for free-gas horizons up to
/// `horizon` and the given velocity span.
pub fn required_window(extent: f64, v_span: f64, horizon: f64, margin: f64) -> (f64, f64) {
    let half = (extent + v_span * horizon * (1.0 + margin)).max(extent * (1.0 + margin));
    (-half, half)
}
