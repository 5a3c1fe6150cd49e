//! Exact evolution in the reduced description.
//!
//! No collision events are ever simulated: the mass measure, the dilation
//! to rod coordinates, the free evolution and the collision flow give the
//! rod-frame trajectory of any quasi-particle in closed form. Each kernel
//! has an indexed fast path and a full-scan oracle that agree bitwise:
//! interval masses are integer particle counts times the atom's rod length
//! (atoms carry a single length each), combined across atoms with
//! compensated summation in a fixed order.

use crate::error::{Error, Result};
use crate::measure::{effective_velocity, Moments};
use crate::sampler::PointConfiguration;

/// Compensated (Neumaier) accumulator.
#[derive(Debug, Default, Clone, Copy)]
pub struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// One tracked quasi-particle sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackSample {
    /// Free-gas time.
    pub t: f64,
    /// Rod-frame position.
    pub y: f64,
    /// y - y0 - v_eff t.
    pub recentered: f64,
}

/// Rod-frame trajectory of a tagged quasi-particle.
#[derive(Debug, Clone, PartialEq)]
pub struct QuasiParticleTrack {
    pub particle_id: u64,
    pub v: f64,
    pub y0: f64,
    pub samples: Vec<TrackSample>,
}

fn check_in_window(conf: &PointConfiguration, point: f64) -> Result<()> {
    if conf.contains(point) {
        Ok(())
    } else {
        Err(Error::OutsideWindow {
            point,
            lo: conf.window_lo,
            hi: conf.window_hi,
        })
    }
}

/// Signed particle count of one sorted slice against the mass-measure
/// indicator `1[x in [a,b)] - 1[x in [b,a]]`.
fn mass_count(xs: &[f64], a: f64, b: f64) -> i64 {
    if a < b {
        // [a, b)
        let lo = xs.partition_point(|&x| x < a);
        let hi = xs.partition_point(|&x| x < b);
        (hi - lo) as i64
    } else {
        // -[b, a], closed; degenerate a == b is the closed point {a}
        let lo = xs.partition_point(|&x| x < b);
        let hi = xs.partition_point(|&x| x <= a);
        -((hi - lo) as i64)
    }
}

/// Strict-interior count of `xs` in the open interval `(lo, hi)`.
fn open_count(xs: &[f64], lo: f64, hi: f64) -> i64 {
    if hi <= lo {
        return 0;
    }
    let a = xs.partition_point(|&x| x <= lo);
    let b = xs.partition_point(|&x| x < hi);
    (b - a) as i64
}

fn combine(conf: &PointConfiguration, counts: &[i64]) -> f64 {
    let mut acc = Neumaier::default();
    for (slice, &c) in conf.atom_index().iter().zip(counts) {
        acc.add(slice.r * c as f64);
    }
    conf.eps * acc.value()
}

/// Signed rescaled rod length between `a` and `b`; antisymmetric in its
/// endpoints. Indexed fast path.
pub fn mass_measure(conf: &PointConfiguration, a: f64, b: f64) -> Result<f64> {
    check_in_window(conf, a)?;
    check_in_window(conf, b)?;
    let counts: Vec<i64> = conf
        .atom_index()
        .iter()
        .map(|s| mass_count(&s.xs, a, b))
        .collect();
    Ok(combine(conf, &counts))
}

/// Full-scan oracle for [`mass_measure`]; must agree bitwise.
pub fn mass_measure_scan(conf: &PointConfiguration, a: f64, b: f64) -> Result<f64> {
    check_in_window(conf, a)?;
    check_in_window(conf, b)?;
    let mut counts = vec![0i64; conf.atom_index().len()];
    for p in conf.particles() {
        if a < b {
            if a <= p.x && p.x < b {
                counts[p.atom] += 1;
            }
        } else if b <= p.x && p.x <= a {
            counts[p.atom] -= 1;
        }
    }
    Ok(combine(conf, &counts))
}

fn flow_counts(conf: &PointConfiguration, x: f64, v: f64, t: f64) -> Vec<i64> {
    conf.atom_index()
        .iter()
        .map(|s| {
            if s.v < v {
                open_count(&s.xs, x, x + (v - s.v) * t)
            } else if s.v > v {
                -open_count(&s.xs, x + (v - s.v) * t, x)
            } else {
                0
            }
        })
        .collect()
}

fn flow_interval_fits(conf: &PointConfiguration, x: f64, v: f64, t: f64) -> bool {
    conf.atom_index().iter().all(|s| {
        let end = x + (v - s.v) * t;
        conf.contains(end)
    }) && conf.contains(x)
}

/// Signed rescaled rod length crossing the moving segment of slope `v`
/// started at `x`, up to free-gas time `t`. Errors if any queried interval
/// leaves the sampled window.
pub fn flow(conf: &PointConfiguration, x: f64, v: f64, t: f64) -> Result<f64> {
    if !flow_interval_fits(conf, x, v, t) {
        return Err(Error::WindowBudget(format!(
            "flow interval from {x} with velocity {v}, horizon {t} leaves \
             window [{}, {}]",
            conf.window_lo, conf.window_hi
        )));
    }
    Ok(combine(conf, &flow_counts(conf, x, v, t)))
}

/// Like [`flow`] but never errors: particles outside the window do not
/// exist, so the counts are unaffected by clipping. The flag reports
/// whether the queried interval left the window (the value is then biased
/// by the unsampled exterior).
pub fn flow_clipped(conf: &PointConfiguration, x: f64, v: f64, t: f64) -> (f64, bool) {
    let clipped = !flow_interval_fits(conf, x, v, t);
    (combine(conf, &flow_counts(conf, x, v, t)), clipped)
}

/// Full-scan oracle for [`flow`]; must agree bitwise.
pub fn flow_scan(conf: &PointConfiguration, x: f64, v: f64, t: f64) -> Result<f64> {
    if !flow_interval_fits(conf, x, v, t) {
        return Err(Error::WindowBudget(format!(
            "flow interval from {x} with velocity {v}, horizon {t} leaves \
             window [{}, {}]",
            conf.window_lo, conf.window_hi
        )));
    }
    let mut counts = vec![0i64; conf.atom_index().len()];
    for p in conf.particles() {
        if p.v < v {
            if x < p.x && p.x < x + (v - p.v) * t {
                counts[p.atom] += 1;
            }
        } else if p.v > v {
            let lo = x + (v - p.v) * t;
            if lo < p.x && p.x < x {
                counts[p.atom] -= 1;
            }
        }
    }
    Ok(combine(conf, &counts))
}

/// Rod coordinate of probe point `b` anchored at `a`: (b - a) + m_a^b.
pub fn dilate_point_anchored(conf: &PointConfiguration, a: f64, b: f64) -> Result<f64> {
    Ok((b - a) + mass_measure(conf, a, b)?)
}

/// Rod coordinate of probe point `b` anchored at the origin.
pub fn dilate_point(conf: &PointConfiguration, b: f64) -> Result<f64> {
    dilate_point_anchored(conf, 0.0, b)
}

/// Rod coordinates of every particle, aligned with the sorted particle
/// array.
pub fn dilate(conf: &PointConfiguration) -> Result<Vec<f64>> {
    conf.particles()
        .iter()
        .map(|p| dilate_point(conf, p.x))
        .collect()
}

/// Free evolution: every particle moves by `v t`; ids preserved.
pub fn free_evolve(conf: &PointConfiguration, t: f64) -> Result<PointConfiguration> {
    let mut particles = Vec::with_capacity(conf.len());
    for p in conf.particles() {
        let x = p.x + p.v * t;
        if !conf.contains(x) {
            return Err(Error::WindowBudget(format!(
                "particle {} exits window at position {x}; enlarge the buffer",
                p.id
            )));
        }
        let mut q = *p;
        q.x = x;
        particles.push(q);
    }
    Ok(conf.with_particles(particles))
}

/// Rod-frame position of the tagged quasi-particle at free-gas time `t`.
pub fn quasiparticle_position(conf: &PointConfiguration, id: u64, t: f64) -> Result<f64> {
    let p = *conf.particle_by_id(id)?;
    let y0 = dilate_point(conf, p.x)?;
    Ok(y0 + p.v * t + flow(conf, p.x, p.v, t)?)
}

/// Sample the tagged quasi-particle at the given (strictly increasing)
/// free-gas times, recentering on the Euler drift.
pub fn track(
    conf: &PointConfiguration,
    id: u64,
    times: &[f64],
    m: &Moments,
) -> Result<QuasiParticleTrack> {
    for w in times.windows(2) {
        // negated form so NaN times are rejected too
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(w[0] < w[1]) {
            return Err(Error::Config(format!(
                "track times must be strictly increasing, got {} then {}",
                w[0], w[1]
            )));
        }
    }
    let p = *conf.particle_by_id(id)?;
    let y0 = dilate_point(conf, p.x)?;
    let veff = effective_velocity(p.v, m);
    let mut samples = Vec::with_capacity(times.len());
    for &t in times {
        let y = y0 + p.v * t + flow(conf, p.x, p.v, t)?;
        samples.push(TrackSample { t, y, recentered: y - y0 - veff * t });
    }
    Ok(QuasiParticleTrack { particle_id: id, v: p.v, y0, samples })
}

/// Recentered displacement of the flow started at a fixed base point; this
/// equals the recentered quasi-particle displacement for a particle at that
/// point, independent of the dilation.
pub fn recentered_flow(
    conf: &PointConfiguration,
    x: f64,
    v: f64,
    t: f64,
    m: &Moments,
) -> Result<f64> {
    Ok(flow(conf, x, v, t)? - (v * m.sigma - m.pi) * t)
}
