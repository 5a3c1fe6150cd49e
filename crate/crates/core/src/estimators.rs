//! Fluctuation-field functionals evaluated on sampled configurations, and
//! Monte Carlo aggregation across trials.
//!
//! Centerings always use the analytic expectations from the measure layer;
//! empirical centering is a diagnostic the experiments opt into explicitly.

use num_complex::Complex64;

use crate::dynamics::{flow_clipped, mass_measure, Neumaier};
use crate::error::{Error, Result};
use crate::measure::{effective_velocity, Moments, VelocityLengthMeasure};
use crate::observable::{length_biased_mean, FieldObservable, SpatialProfile};
use crate::quad::adaptive_simpson;
use crate::sampler::PointConfiguration;

/// One per-trial scalar, tagged for the trial CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSample {
    pub trial: u64,
    pub statistic: String,
    pub value: f64,
}

/// Aggregate over independent trials.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MCSummary {
    pub n: usize,
    pub mean: f64,
    /// Unbiased sample variance.
    pub variance: f64,
    pub stderr_mean: f64,
    /// Jackknife standard error of the sample variance.
    pub stderr_variance: f64,
}

/// Covariance/correlation aggregate of two aligned per-trial series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairSummary {
    pub n: usize,
    pub covariance: f64,
    pub correlation: f64,
    /// Jackknife standard errors.
    pub stderr_covariance: f64,
    pub stderr_correlation: f64,
}

fn check_support(conf: &PointConfiguration, lo: f64, hi: f64) -> Result<()> {
    if lo < conf.window_lo || hi > conf.window_hi {
        return Err(Error::WindowBudget(format!(
            "observable support [{lo}, {hi}] is not inside the window \
             [{}, {}]",
            conf.window_lo, conf.window_hi
        )));
    }
    Ok(())
}

/// Empirical length functional: eps * sum r phi(x, v, r) over the initial
/// point configuration.
pub fn field_n(
    conf: &PointConfiguration,
    phi: &FieldObservable,
    mu: &VelocityLengthMeasure,
) -> Result<f64> {
    let (lo, hi) = phi.support();
    check_support(conf, lo, hi)?;
    let mut acc = Neumaier::default();
    for (atom, slice) in conf.atom_index().iter().enumerate() {
        if phi.atom_factor(atom, mu) == 0.0 {
            continue;
        }
        let (alo, ahi) = phi.support_for_atom(atom);
        let start = slice.xs.partition_point(|&x| x < alo);
        let stop = slice.xs.partition_point(|&x| x <= ahi);
        let mut inner = Neumaier::default();
        for &x in &slice.xs[start..stop] {
            inner.add(phi.eval(x, atom, mu));
        }
        acc.add(slice.r * inner.value());
    }
    Ok(conf.eps * acc.value())
}

/// Static fluctuation of the point field against its analytic mean.
pub fn xi_x(
    conf: &PointConfiguration,
    phi: &FieldObservable,
    mu: &VelocityLengthMeasure,
) -> Result<f64> {
    let centered = field_n(conf, phi, mu)? - length_biased_mean(phi, mu)?;
    Ok(centered / conf.eps.sqrt())
}

/// Rod-frame position of one particle at free-gas time `t`, recentered by
/// `drift * t`. Returns the value and whether any flow interval was
/// clipped by the window.
fn rod_position_recentered(
    conf: &PointConfiguration,
    x: f64,
    v: f64,
    t: f64,
    drift: f64,
) -> Result<(f64, bool)> {
    let y0 = x + mass_measure(conf, 0.0, x)?;
    let (j, clipped) = flow_clipped(conf, x, v, t);
    Ok((y0 + (v - drift) * t + j, clipped))
}

/// Empirical length functional over rod positions at Euler time `t`.
pub fn field_k(
    conf: &PointConfiguration,
    phi: &FieldObservable,
    mu: &VelocityLengthMeasure,
    t: f64,
) -> Result<f64> {
    rod_frame_sum(conf, phi, mu, t, &vec![0.0; mu.n_atoms()])
}

/// Shared kernel for the Euler and diffusive rod-frame fields: evaluates
/// phi at every particle's rod position recentered by its atom's drift.
///
/// Clipped flow intervals are tolerated only for particles that end up
/// outside the observable's support; a clipped contributor means the
/// caller's window is undersized.
fn rod_frame_sum(
    conf: &PointConfiguration,
    phi: &FieldObservable,
    mu: &VelocityLengthMeasure,
    t: f64,
    drifts: &[f64],
) -> Result<f64> {
    let mut acc = Neumaier::default();
    for p in conf.particles() {
        if phi.atom_factor(p.atom, mu) == 0.0 {
            continue;
        }
        let (y, clipped) = rod_position_recentered(conf, p.x, p.v, t, drifts[p.atom])?;
        let val = phi.eval(y, p.atom, mu);
        if val != 0.0 {
            if clipped {
                return Err(Error::WindowBudget(format!(
                    "particle {} contributes to the field through a clipped \
                     flow interval; enlarge the window",
                    p.id
                )));
            }
            acc.add(p.r * val);
        }
    }
    Ok(conf.eps * acc.value())
}

/// Fluctuation of the rod-frame field at Euler time `t`, centered on its
/// analytic mean.
pub fn xi_y(
    conf: &PointConfiguration,
    phi: &FieldObservable,
    mu: &VelocityLengthMeasure,
    m: &Moments,
    t: f64,
) -> Result<f64> {
    let mean = length_biased_mean(phi, mu)? / (1.0 + m.sigma);
    Ok((field_k(conf, phi, mu, t)? - mean) / conf.eps.sqrt())
}

/// Diffusive-scale fluctuation field at diffusive time `t`: rod positions
/// at free-gas horizon `t / eps`, recentered on the Euler characteristics.
pub fn xi_diffusive(
    conf: &PointConfiguration,
    phi: &FieldObservable,
    mu: &VelocityLengthMeasure,
    m: &Moments,
    t: f64,
) -> Result<f64> {
    let horizon = t / conf.eps;
    let drifts: Vec<f64> = mu
        .atoms()
        .iter()
        .map(|a| effective_velocity(a.v, m))
        .collect();
    let mean = length_biased_mean(phi, mu)? / (1.0 + m.sigma);
    Ok((rod_frame_sum(conf, phi, mu, horizon, &drifts)? - mean) / conf.eps.sqrt())
}

/// Diffusive fluctuation field evaluated on a windowed plane wave
/// restricted to one velocity atom: returns the complex mode amplitude.
///
/// `phase` is a global phase of the envelope; it rotates the amplitude and
/// leaves the modulus unchanged.
#[allow(clippy::too_many_arguments)]
pub fn fourier_mode(
    conf: &PointConfiguration,
    k: f64,
    atom: usize,
    envelope: &SpatialProfile,
    t: f64,
    mu: &VelocityLengthMeasure,
    m: &Moments,
    phase: f64,
) -> Result<Complex64> {
    let horizon = t / conf.eps;
    let a = mu.atoms()[atom];
    let drift = effective_velocity(a.v, m);
    let (slo, shi) = envelope.support();

    let mut re = Neumaier::default();
    let mut im = Neumaier::default();
    for p in conf.particles() {
        if p.atom != atom {
            continue;
        }
        let (y, clipped) = rod_position_recentered(conf, p.x, p.v, horizon, drift)?;
        if y < slo || y > shi {
            continue;
        }
        let env = envelope.eval(y);
        if env != 0.0 {
            if clipped {
                return Err(Error::WindowBudget(format!(
                    "particle {} contributes to the mode through a clipped \
                     flow interval; enlarge the window",
                    p.id
                )));
            }
            let arg = 2.0 * std::f64::consts::PI * k * y + phase;
            re.add(env * arg.cos());
            im.add(env * arg.sin());
        }
    }
    let scale = conf.eps * a.r;
    let empirical = Complex64::new(scale * re.value(), scale * im.value());

    let mean_re = adaptive_simpson(
        |y| envelope.eval(y) * (2.0 * std::f64::consts::PI * k * y + phase).cos(),
        slo,
        shi,
        1e-10,
    )?;
    let mean_im = adaptive_simpson(
        |y| envelope.eval(y) * (2.0 * std::f64::consts::PI * k * y + phase).sin(),
        slo,
        shi,
        1e-10,
    )?;
    let mean = mu.rho() * a.w * a.r / (1.0 + m.sigma) * Complex64::new(mean_re, mean_im);
    Ok((empirical - mean) / conf.eps.sqrt())
}

/// Recentered displacements of two tagged quasi-particles at free-gas
/// horizon `t / eps`; the per-trial inputs of the pair covariance.
pub fn pair_displacements(
    conf: &PointConfiguration,
    id1: u64,
    id2: u64,
    t: f64,
    m: &Moments,
) -> Result<(f64, f64)> {
    let horizon = t / conf.eps;
    let d = |id: u64| -> Result<f64> {
        let p = conf.particle_by_id(id)?;
        crate::dynamics::recentered_flow(conf, p.x, p.v, horizon, m)
    };
    Ok((d(id1)?, d(id2)?))
}

/// Mean/variance/standard errors of a per-trial series. Deterministic
/// given the ordering of `values`.
pub fn aggregate(values: &[f64]) -> Result<MCSummary> {
    let n = values.len();
    if n < 2 {
        return Err(Error::NotEnoughSamples { need: 2, got: n });
    }
    let nf = n as f64;
    let mut s = Neumaier::default();
    for &x in values {
        s.add(x);
    }
    let mean = s.value() / nf;

    // Work with centered values to keep the variance and its jackknife
    // numerically stable.
    let mut s1 = Neumaier::default();
    let mut s2 = Neumaier::default();
    for &x in values {
        let c = x - mean;
        s1.add(c);
        s2.add(c * c);
    }
    let c1 = s1.value();
    let c2 = s2.value();
    let variance = (c2 - c1 * c1 / nf) / (nf - 1.0);

    // Delete-one variances in O(n) from the centered sums.
    let nl = nf - 1.0;
    let mut jsum = Neumaier::default();
    let mut jsq = Neumaier::default();
    for &x in values {
        let c = x - mean;
        let r1 = c1 - c;
        let r2 = c2 - c * c;
        let vi = (r2 - r1 * r1 / nl) / (nl - 1.0);
        jsum.add(vi);
        jsq.add(vi * vi);
    }
    let jmean = jsum.value() / nf;
    let jvar = (jsq.value() / nf - jmean * jmean).max(0.0);
    let stderr_variance = ((nf - 1.0) * jvar).sqrt();

    Ok(MCSummary {
        n,
        mean,
        variance,
        stderr_mean: (variance / nf).sqrt(),
        stderr_variance,
    })
}

/// Covariance and correlation of two aligned per-trial series, with
/// jackknife standard errors.
pub fn aggregate_pair(xs: &[f64], ys: &[f64]) -> Result<PairSummary> {
    let n = xs.len();
    if n != ys.len() {
        return Err(Error::Config(format!(
            "pair series lengths differ: {} vs {}",
            n,
            ys.len()
        )));
    }
    if n < 2 {
        return Err(Error::NotEnoughSamples { need: 2, got: n });
    }
    let nf = n as f64;
    let mean = |v: &[f64]| {
        let mut s = Neumaier::default();
        for &x in v {
            s.add(x);
        }
        s.value() / nf
    };
    let mx = mean(xs);
    let my = mean(ys);

    let mut sxx = Neumaier::default();
    let mut syy = Neumaier::default();
    let mut sxy = Neumaier::default();
    for (&x, &y) in xs.iter().zip(ys) {
        let cx = x - mx;
        let cy = y - my;
        sxx.add(cx * cx);
        syy.add(cy * cy);
        sxy.add(cx * cy);
    }
    let (txx, tyy, txy) = (sxx.value(), syy.value(), sxy.value());
    let cov = txy / (nf - 1.0);
    let corr = txy / (txx * tyy).sqrt();

    // Delete-one covariance and correlation from the centered sums. The
    // delete-one means shift by c/(n-1); the corrected cross sum is
    // t - cx*cy * n/(n-1) and likewise for the squares.
    let adj = nf / (nf - 1.0);
    let mut cov_i = Vec::with_capacity(n);
    let mut corr_i = Vec::with_capacity(n);
    for (&x, &y) in xs.iter().zip(ys) {
        let cx = x - mx;
        let cy = y - my;
        let rxx = txx - cx * cx * adj;
        let ryy = tyy - cy * cy * adj;
        let rxy = txy - cx * cy * adj;
        cov_i.push(rxy / (nf - 2.0));
        let denom = (rxx * ryy).sqrt();
        corr_i.push(if denom > 0.0 { rxy / denom } else { 0.0 });
    }
    let jse = |vals: &[f64]| {
        let m = mean(vals);
        let mut s = Neumaier::default();
        for &v in vals {
            s.add((v - m) * (v - m));
        }
        ((nf - 1.0) / nf * s.value()).sqrt()
    };

    Ok(PairSummary {
        n,
        covariance: cov,
        correlation: corr,
        stderr_covariance: jse(&cov_i),
        stderr_correlation: jse(&corr_i),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::Atom;
    use crate::sampler::{sample, GasParameters, Particle};
    use rand::Rng;

    fn setup_a() -> VelocityLengthMeasure {
        VelocityLengthMeasure::new(
            vec![
                Atom { v: -1.0, r: 0.5, w: 0.5 },
                Atom { v: 1.0, r: 0.5, w: 0.5 },
            ],
            1.0,
        )
        .unwrap()
    }

    fn bump() -> SpatialProfile {
        SpatialProfile::CosineBump { center: 0.0, width: 2.0 }
    }

    fn empty_conf(mu: &VelocityLengthMeasure) -> PointConfiguration {
        PointConfiguration::from_particles(vec![], mu, 0.1, -10.0, 10.0)
    }

    #[test]
    fn field_n_empty_configuration() {
        let mu = setup_a();
        let conf = empty_conf(&mu);
        let phi = FieldObservable::uniform(bump(), 2);
        assert_eq!(field_n(&conf, &phi, &mu).unwrap(), 0.0);
    }

    #[test]
    fn field_n_single_particle() {
        let mu = setup_a();
        let p = Particle { id: 0, x: 0.3, v: 1.0, r: 0.5, atom: 1 };
        let conf = PointConfiguration::from_particles(vec![p], &mu, 0.1, -10.0, 10.0);
        let phi = FieldObservable::new(bump(), vec![0.0, 2.0]);
        let expect = 0.1 * 0.5 * bump().eval(0.3) * 2.0;
        assert!((field_n(&conf, &phi, &mu).unwrap() - expect).abs() < 1e-15);
    }

    #[test]
    fn field_n_support_violation_errors() {
        let mu = setup_a();
        let conf = empty_conf(&mu);
        let phi = FieldObservable::uniform(
            SpatialProfile::CosineBump { center: 10.0, width: 4.0 },
            2,
        );
        assert!(field_n(&conf, &phi, &mu).is_err());
    }

    #[test]
    fn xi_x_of_zero_observable() {
        let mu = setup_a();
        let conf = empty_conf(&mu);
        let phi = FieldObservable::new(bump(), vec![0.0, 0.0]);
        assert_eq!(xi_x(&conf, &phi, &mu).unwrap(), 0.0);
    }

    #[test]
    fn estimators_linear_in_observable() {
        let mu = setup_a();
        let conf = sample(
            &GasParameters {
                eps: 0.05,
                window_lo: -10.0,
                window_hi: 10.0,
                seed: 5,
                trial_index: 0,
            },
            &mu,
        )
        .unwrap();
        let phi = FieldObservable::new(bump(), vec![1.0, 0.0]);
        let psi = FieldObservable::new(bump(), vec![0.0, 1.0]);
        let combo = FieldObservable::new(bump(), vec![2.0, -3.0]);
        let lhs = field_n(&conf, &combo, &mu).unwrap();
        let rhs = 2.0 * field_n(&conf, &phi, &mu).unwrap()
            - 3.0 * field_n(&conf, &psi, &mu).unwrap();
        assert!((lhs - rhs).abs() < 1e-12 * (1.0 + lhs.abs()));
    }

    #[test]
    fn diffusive_field_at_time_zero_matches_euler_field() {
        let mu = setup_a();
        let m = mu.moments();
        let conf = sample(
            &GasParameters {
                eps: 0.05,
                window_lo: -10.0,
                window_hi: 10.0,
                seed: 6,
                trial_index: 1,
            },
            &mu,
        )
        .unwrap();
        let phi = FieldObservable::uniform(bump(), 2);
        let a = xi_diffusive(&conf, &phi, &mu, &m, 0.0).unwrap();
        let b = xi_y(&conf, &phi, &mu, &m, 0.0).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn fourier_zero_wavenumber_is_real_diffusive_field() {
        let mu = setup_a();
        let m = mu.moments();
        let conf = sample(
            &GasParameters {
                eps: 0.05,
                window_lo: -30.0,
                window_hi: 30.0,
                seed: 8,
                trial_index: 0,
            },
            &mu,
        )
        .unwrap();
        let env = SpatialProfile::CosineBump { center: 0.0, width: 4.0 };
        let mode = fourier_mode(&conf, 0.0, 1, &env, 0.1, &mu, &m, 0.0).unwrap();
        let field = xi_diffusive(
            &conf,
            &FieldObservable::on_atom(env, 2, 1),
            &mu,
            &m,
            0.1,
        )
        .unwrap();
        assert!(mode.im.abs() < 1e-12);
        assert!((mode.re - field).abs() < 1e-9 * (1.0 + field.abs()));
    }

    #[test]
    fn fourier_modulus_invariant_under_phase() {
        let mu = setup_a();
        let m = mu.moments();
        let conf = sample(
            &GasParameters {
                eps: 0.05,
                window_lo: -30.0,
                window_hi: 30.0,
                seed: 8,
                trial_index: 2,
            },
            &mu,
        )
        .unwrap();
        let env = SpatialProfile::CosineBump { center: 0.0, width: 4.0 };
        let a = fourier_mode(&conf, 0.5, 1, &env, 0.1, &mu, &m, 0.0).unwrap();
        let b = fourier_mode(&conf, 0.5, 1, &env, 0.1, &mu, &m, 1.234).unwrap();
        assert!((a.norm() - b.norm()).abs() < 1e-9 * (1.0 + a.norm()));
    }

    #[test]
    fn aggregate_constant_samples() {
        let s = aggregate(&[1.5; 10]).unwrap();
        assert_eq!(s.mean, 1.5);
        assert_eq!(s.variance, 0.0);
    }

    #[test]
    fn aggregate_two_samples() {
        let s = aggregate(&[0.0, 2.0]).unwrap();
        assert_eq!(s.mean, 1.0);
        assert_eq!(s.variance, 2.0);
    }

    #[test]
    fn aggregate_rejects_singleton() {
        assert!(aggregate(&[1.0]).is_err());
    }

    #[test]
    fn aggregate_order_insensitive_to_good_precision() {
        let mut rng = crate::rng::trial_rng(4, 0);
        let mut xs: Vec<f64> = (0..500).map(|_| rng.gen::<f64>() * 3.0 - 1.0).collect();
        let a = aggregate(&xs).unwrap();
        xs.reverse();
        let b = aggregate(&xs).unwrap();
        assert!((a.mean - b.mean).abs() < 1e-12);
        assert!((a.variance - b.variance).abs() < 1e-12);
    }

    #[test]
    fn jackknife_matches_gaussian_variance_error() {
        // For iid N(0, s^2), Var of the sample variance is 2 s^4 / (n - 1).
        use rand_distr::{Distribution, StandardNormal};
        let mut rng = crate::rng::trial_rng(12, 0);
        let s = 1.7;
        let n = 10_000;
        let xs: Vec<f64> = (0..n)
            .map(|_| s * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng))
            .collect();
        let summary = aggregate(&xs).unwrap();
        let analytic = (2.0 * s.powi(4) / (n as f64 - 1.0)).sqrt();
        assert!(
            (summary.stderr_variance - analytic).abs() < 0.2 * analytic,
            "{} vs {analytic}",
            summary.stderr_variance
        );
    }

    #[test]
    fn pair_aggregate_self_correlation() {
        let xs = [0.4, 1.0, -0.3, 2.2, 0.9, -1.4];
        let p = aggregate_pair(&xs, &xs).unwrap();
        assert!((p.correlation - 1.0).abs() < 1e-12);
        let v = aggregate(&xs).unwrap().variance;
        assert!((p.covariance - v).abs() < 1e-12);
    }
}
