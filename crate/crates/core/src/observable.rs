//! Test observables for the fluctuation fields and the operators acting on
//! them.
//!
//! An observable is separable: a compactly supported spatial profile times a
//! per-atom weight. Separability keeps the projection operator `P` and its
//! complement `C = I - P` closed-form on the discrete measure, and every
//! analytic covariance reduces to per-atom coefficients times integrals of
//! spatial products.

use crate::error::Result;
use crate::measure::{effective_velocity, Moments, VelocityLengthMeasure};
use crate::quad::adaptive_simpson;

/// Relative quadrature tolerance for covariance integrals.
pub const COVARIANCE_QUAD_TOL: f64 = 1e-8;
/// Number of standard deviations at which the Gaussian profile is cut.
const GAUSSIAN_CUT: f64 = 6.0;

/// Smooth compactly supported spatial factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpatialProfile {
    /// cos^2(pi (y - c) / L) on |y - c| <= L / 2.
    CosineBump { center: f64, width: f64 },
    /// exp(-u^2 / 2) - exp(-cut^2 / 2) with u = (y - c) / s, truncated at
    /// `cut` standard deviations and shifted to vanish at the cut.
    TruncatedGaussian { center: f64, sigma: f64 },
}

impl SpatialProfile {
    pub fn eval(&self, y: f64) -> f64 {
        match *self {
            SpatialProfile::CosineBump { center, width } => {
                let u = y - center;
                if u.abs() <= 0.5 * width {
                    (std::f64::consts::PI * u / width).cos().powi(2)
                } else {
                    0.0
                }
            }
            SpatialProfile::TruncatedGaussian { center, sigma } => {
                let u = (y - center) / sigma;
                if u.abs() <= GAUSSIAN_CUT {
                    (-0.5 * u * u).exp() - (-0.5 * GAUSSIAN_CUT * GAUSSIAN_CUT).exp()
                } else {
                    0.0
                }
            }
        }
    }

    /// Closed support interval.
    pub fn support(&self) -> (f64, f64) {
        match *self {
            SpatialProfile::CosineBump { center, width } => {
                (center - 0.5 * width, center + 0.5 * width)
            }
            SpatialProfile::TruncatedGaussian { center, sigma } => {
                (center - GAUSSIAN_CUT * sigma, center + GAUSSIAN_CUT * sigma)
            }
        }
    }

    /// Integral over the line, by quadrature (the cosine bump has the exact
    /// value L/2; tests pin it).
    pub fn integral(&self) -> Result<f64> {
        let (lo, hi) = self.support();
        adaptive_simpson(|y| self.eval(y), lo, hi, 1e-12)
    }
}

/// Separable test observable: spatial profile times per-atom selector, with
/// an optional per-atom spatial shift (used by transported observables) and
/// a diagnostic length power.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldObservable {
    spatial: SpatialProfile,
    selector: Vec<f64>,
    r_power: u32,
    shifts: Vec<f64>,
}

impl FieldObservable {
    /// Observable with the given per-atom selector weights.
    pub fn new(spatial: SpatialProfile, selector: Vec<f64>) -> Self {
        let n = selector.len();
        Self {
            spatial,
            selector,
            r_power: 0,
            shifts: vec![0.0; n],
        }
    }

    /// Same spatial factor on every atom.
    pub fn uniform(spatial: SpatialProfile, n_atoms: usize) -> Self {
        Self::new(spatial, vec![1.0; n_atoms])
    }

    /// Supported on a single atom.
    pub fn on_atom(spatial: SpatialProfile, n_atoms: usize, atom: usize) -> Self {
        let mut sel = vec![0.0; n_atoms];
        sel[atom] = 1.0;
        Self::new(spatial, sel)
    }

    pub fn with_r_power(mut self, p: u32) -> Self {
        self.r_power = p;
        self
    }

    pub fn spatial(&self) -> &SpatialProfile {
        &self.spatial
    }

    pub fn selector(&self) -> &[f64] {
        &self.selector
    }

    pub fn n_atoms(&self) -> usize {
        self.selector.len()
    }

    /// Per-atom weight including the diagnostic length power.
    pub fn atom_factor(&self, atom: usize, mu: &VelocityLengthMeasure) -> f64 {
        let r = mu.atoms()[atom].r;
        self.selector[atom] * r.powi(self.r_power as i32)
    }

    /// Evaluate at spatial position `y` on the given atom.
    pub fn eval(&self, y: f64, atom: usize, mu: &VelocityLengthMeasure) -> f64 {
        let f = self.atom_factor(atom, mu);
        if f == 0.0 {
            return 0.0;
        }
        self.spatial.eval(y + self.shifts[atom]) * f
    }

    /// Support of the spatial factor as seen by the given atom.
    pub fn support_for_atom(&self, atom: usize) -> (f64, f64) {
        let (lo, hi) = self.spatial.support();
        (lo - self.shifts[atom], hi - self.shifts[atom])
    }

    /// Union of the per-atom supports over atoms with nonzero selector.
    pub fn support(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (i, s) in self.selector.iter().enumerate() {
            if *s != 0.0 {
                let (a, b) = self.support_for_atom(i);
                lo = lo.min(a);
                hi = hi.max(b);
            }
        }
        if lo > hi {
            // selector identically zero
            (0.0, 0.0)
        } else {
            (lo, hi)
        }
    }

    /// The transported observable y -> phi(y + v_eff(v) t), per atom.
    pub fn transported(&self, mu: &VelocityLengthMeasure, m: &Moments, t: f64) -> Self {
        let mut out = self.clone();
        for (i, a) in mu.atoms().iter().enumerate() {
            out.shifts[i] += effective_velocity(a.v, m) * t;
        }
        out
    }

    fn uniform_shift(&self) -> f64 {
        let s = self.shifts[0];
        assert!(
            self.shifts.iter().all(|&x| x == s),
            "operator P requires a common spatial shift across atoms"
        );
        s
    }

    /// Apply the projection P: the result is constant across atoms, equal to
    /// rho / (1 + sigma) * sum_j w_j r_j phi(., v_j, r_j).
    pub fn apply_p(&self, mu: &VelocityLengthMeasure, m: &Moments) -> Self {
        let shift = self.uniform_shift();
        let c = mu.rho() / (1.0 + m.sigma)
            * mu.atoms()
                .iter()
                .enumerate()
                .map(|(j, a)| a.w * a.r * self.atom_factor(j, mu))
                .sum::<f64>();
        let n = self.n_atoms();
        Self {
            spatial: self.spatial,
            selector: vec![c; n],
            r_power: 0,
            shifts: vec![shift; n],
        }
    }

    /// Apply C = I - P.
    pub fn apply_c(&self, mu: &VelocityLengthMeasure, m: &Moments) -> Self {
        let p = self.apply_p(mu, m);
        let selector: Vec<f64> = (0..self.n_atoms())
            .map(|i| self.atom_factor(i, mu) - p.selector[i])
            .collect();
        Self {
            spatial: self.spatial,
            selector,
            r_power: 0,
            shifts: p.shifts,
        }
    }
}

/// Length-biased mean of the observable: rho * sum w r phi_i * integral.
pub fn length_biased_mean(phi: &FieldObservable, mu: &VelocityLengthMeasure) -> Result<f64> {
    let integral = phi.spatial.integral()?;
    Ok(mu.rho()
        * mu.atoms()
            .iter()
            .enumerate()
            .map(|(i, a)| a.w * a.r * phi.atom_factor(i, mu))
            .sum::<f64>()
        * integral)
}

/// Squared-length weighted pairing of two observables:
/// rho * sum w r^2 phi_i psi_i * integral of the spatial product.
pub fn squared_length_pairing(
    phi: &FieldObservable,
    psi: &FieldObservable,
    mu: &VelocityLengthMeasure,
) -> Result<f64> {
    let mut total = 0.0;
    for (i, a) in mu.atoms().iter().enumerate() {
        let c = phi.atom_factor(i, mu) * psi.atom_factor(i, mu);
        if c == 0.0 {
            continue;
        }
        let (plo, phi_hi) = phi.support_for_atom(i);
        let (qlo, qhi) = psi.support_for_atom(i);
        let lo = plo.max(qlo);
        let hi = phi_hi.min(qhi);
        if lo >= hi {
            continue;
        }
        let sp = phi.shifts[i];
        let sq = psi.shifts[i];
        let integral = adaptive_simpson(
            |y| phi.spatial.eval(y + sp) * psi.spatial.eval(y + sq),
            lo,
            hi,
            COVARIANCE_QUAD_TOL,
        )?;
        total += a.w * a.r * a.r * c * integral;
    }
    Ok(mu.rho() * total)
}

/// Static covariance of the dilated fluctuation field:
/// rho / (1 + sigma) * sum w r^2 * integral of (C phi)(C psi) per atom.
pub fn static_covariance(
    phi: &FieldObservable,
    psi: &FieldObservable,
    mu: &VelocityLengthMeasure,
    m: &Moments,
) -> Result<f64> {
    let cphi = phi.apply_c(mu, m);
    let cpsi = psi.apply_c(mu, m);
    Ok(squared_length_pairing(&cphi, &cpsi, mu)? / (1.0 + m.sigma))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::Atom;

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

    #[test]
    fn cosine_bump_integral_closed_form() {
        let l = 2.0;
        let i = bump().integral().unwrap();
        assert!((i - l / 2.0).abs() < 1e-10);
    }

    #[test]
    fn gaussian_vanishes_at_cut() {
        let g = SpatialProfile::TruncatedGaussian { center: 1.0, sigma: 0.5 };
        let (lo, hi) = g.support();
        assert!(g.eval(lo).abs() < 1e-15);
        assert!(g.eval(hi).abs() < 1e-15);
        assert!(g.eval(1.0) > 0.9);
    }

    #[test]
    fn apply_p_two_velocity() {
        // P phi(x) = rho a / (2 (1 + rho a)) * (phi(x, v0) + phi(x, -v0))
        let mu = setup_a();
        let m = mu.moments();
        let phi = FieldObservable::new(bump(), vec![2.0, 3.0]);
        let p = phi.apply_p(&mu, &m);
        let expect = 0.5 / (2.0 * 1.5) * (2.0 + 3.0);
        for s in p.selector() {
            assert!((s - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn apply_p_zero() {
        let mu = setup_a();
        let m = mu.moments();
        let phi = FieldObservable::new(bump(), vec![0.0, 0.0]);
        let p = phi.apply_p(&mu, &m);
        assert!(p.selector().iter().all(|&s| s == 0.0));
    }

    #[test]
    fn p_idempotent_up_to_factor() {
        // P(P phi) = sigma / (1 + sigma) * P phi, pointwise on a grid
        let mu = setup_a();
        let m = mu.moments();
        let phi = FieldObservable::new(bump(), vec![1.0, -0.3]);
        let p = phi.apply_p(&mu, &m);
        let pp = p.apply_p(&mu, &m);
        let factor = m.sigma / (1.0 + m.sigma);
        for k in 0..50 {
            let y = -1.2 + 0.05 * k as f64;
            for atom in 0..2 {
                let lhs = pp.eval(y, atom, &mu);
                let rhs = factor * p.eval(y, atom, &mu);
                assert!((lhs - rhs).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn apply_c_two_velocity_explicit() {
        // C phi(x, +/-v0) = (2 + rho a)/(2(1 + rho a)) phi(x, +/-v0)
        //                 - rho a /(2(1 + rho a)) phi(x, -/+v0)
        let mu = setup_a();
        let m = mu.moments();
        let rho_a = 0.5;
        let diag = (2.0 + rho_a) / (2.0 * (1.0 + rho_a));
        let off = rho_a / (2.0 * (1.0 + rho_a));
        let phi = FieldObservable::new(bump(), vec![0.7, -0.2]);
        let c = phi.apply_c(&mu, &m);
        let expect0 = diag * 0.7 - off * (-0.2);
        let expect1 = diag * (-0.2) - off * 0.7;
        assert!((c.selector()[0] - expect0).abs() < 1e-15);
        assert!((c.selector()[1] - expect1).abs() < 1e-15);
    }

    #[test]
    fn apply_c_on_constant_observable() {
        // phi constant in (v, r): C phi = phi / (1 + sigma)
        let mu = setup_a();
        let m = mu.moments();
        let phi = FieldObservable::uniform(bump(), 2);
        let c = phi.apply_c(&mu, &m);
        for s in c.selector() {
            assert!((s - 1.0 / 1.5).abs() < 1e-15);
        }
    }

    #[test]
    fn apply_c_zero() {
        let mu = setup_a();
        let m = mu.moments();
        let phi = FieldObservable::new(bump(), vec![0.0, 0.0]);
        let c = phi.apply_c(&mu, &m);
        assert!(c.selector().iter().all(|&s| s == 0.0));
    }

    #[test]
    fn static_covariance_zero_lengths() {
        let mu =
            VelocityLengthMeasure::new(vec![Atom { v: 1.0, r: 0.0, w: 1.0 }], 1.0).unwrap();
        let m = mu.moments();
        let phi = FieldObservable::uniform(bump(), 1);
        let v = static_covariance(&phi, &phi, &mu, &m).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn static_covariance_matches_hand_expansion() {
        // phi supported on the +v0 atom only; expand with the explicit
        // two-velocity C and integrate the product by hand.
        let mu = setup_a();
        let m = mu.moments();
        let phi = FieldObservable::on_atom(bump(), 2, 1);
        let got = static_covariance(&phi, &phi, &mu, &m).unwrap();

        let rho_a = 0.5;
        let diag = (2.0 + rho_a) / (2.0 * (1.0 + rho_a));
        let off = rho_a / (2.0 * (1.0 + rho_a));
        // C phi selectors: (-off, diag); psi^2 integral is 3 L / 8
        let psi2 = 3.0 * 2.0 / 8.0;
        let expect =
            1.0 / 1.5 * (0.5 * 0.25 * off * off + 0.5 * 0.25 * diag * diag) * psi2;
        assert!(
            (got - expect).abs() < 1e-8 * expect.abs(),
            "{got} vs {expect}"
        );
    }

    #[test]
    fn transported_shifts_support() {
        let mu = setup_a();
        let m = mu.moments();
        let phi = FieldObservable::uniform(bump(), 2);
        let t = 0.5;
        let pt = phi.transported(&mu, &m, t);
        // atom 1 has v_eff = 1.5, so phi_t(y) = phi(y + 0.75) on that atom
        assert!((pt.eval(0.0, 1, &mu) - phi.eval(0.75, 1, &mu)).abs() < 1e-15);
        // atom 0 has v_eff = -1.5, so phi_t(y) = phi(y - 0.75) there
        assert!((pt.eval(0.75, 0, &mu) - phi.eval(0.0, 0, &mu)).abs() < 1e-15);
    }
}
