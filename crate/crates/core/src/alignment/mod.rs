//! GREG calibration of a single sample and one-step alignment of two samples
//! on a common variable.
//!
//! With Π = diag(w/q) and M = XᵀΠX, the calibrated weights are
//! c = w + ΠX M⁻¹(t − Xᵀw). The alignment weights additionally force both
//! samples to agree on the weighted total of z; the solution only needs the
//! regression residuals of z, so the n×n projection Ξ is never formed:
//! Ξz = Π(z − Xβ̂) and zᵀΞz = Σ π_k e_k².

mod linalg;

use serde::{Deserialize, Serialize};

use crate::design::SampleDraw;
use crate::variance::{deville_variance_block, VarianceEstimate};
use crate::{Error, Real, Result};
use linalg::{equilibrate, Lu, Matrix};

/// Largest tolerated condition number of the equilibrated XᵀΠX.
pub const CONDITION_LIMIT: f64 = 1e12;

/// Auxiliary information for calibrating one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationSpec<T> {
    /// Row-major n×p auxiliary matrix.
    pub x: Vec<T>,
    pub p: usize,
    /// Known population totals t_X.
    pub totals: Vec<T>,
    /// Distance constants q_k; `None` means q ≡ 1.
    pub q: Option<Vec<T>>,
    pub design_effect: T,
    pub columns: Vec<String>,
}

impl<T: Real> CalibrationSpec<T> {
    pub fn new(x: Vec<T>, p: usize, totals: Vec<T>) -> Result<Self> {
        if p == 0 {
            return Err(Error::Config("calibration needs at least one auxiliary column".into()));
        }
        if !x.len().is_multiple_of(p) {
            return Err(Error::Contract(format!(
                "auxiliary matrix of {} entries is not a multiple of p = {p}",
                x.len()
            )));
        }
        if totals.len() != p {
            return Err(Error::Contract(format!("{} totals for {p} auxiliary columns", totals.len())));
        }
        if x.iter().chain(&totals).any(|v| !v.is_finite()) {
            return Err(Error::Config("auxiliary values and totals must be finite".into()));
        }
        Ok(CalibrationSpec {
            x,
            p,
            totals,
            q: None,
            design_effect: T::one(),
            columns: (0..p).map(|j| format!("x{j}")).collect(),
        })
    }

    /// Intercept plus one auxiliary variable, calibrated to the population
    /// size and the population total of the auxiliary.
    pub fn intercept_and(aux: &[T], population_size: T, aux_total: T) -> Result<Self> {
        let x = aux.iter().flat_map(|&a| [T::one(), a]).collect();
        Ok(Self::new(x, 2, vec![population_size, aux_total])?.with_columns(["intercept", "aux"]))
    }

    /// Ratio adjustment to a known population size.
    pub fn intercept_only(n: usize, population_size: T) -> Result<Self> {
        Ok(Self::new(vec![T::one(); n], 1, vec![population_size])?.with_columns(["intercept"]))
    }

    pub fn with_columns<S: Into<String>>(mut self, names: impl IntoIterator<Item = S>) -> Self {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.len() == self.p {
            self.columns = names;
        }
        self
    }

    pub fn with_q(mut self, q: Vec<T>) -> Result<Self> {
        if q.len() != self.rows() {
            return Err(Error::Contract(format!("{} q constants for {} units", q.len(), self.rows())));
        }
        if q.iter().any(|v| !(*v > T::zero()) || !v.is_finite()) {
            return Err(Error::Config("calibration constants q must be positive".into()));
        }
        self.q = Some(q);
        Ok(self)
    }

    pub fn with_design_effect(mut self, d: T) -> Result<Self> {
        if !(d > T::zero()) || !d.is_finite() {
            return Err(Error::Config(format!("design effect must be positive, got {d}")));
        }
        self.design_effect = d;
        Ok(self)
    }

    pub fn rows(&self) -> usize {
        self.x.len() / self.p
    }

    #[inline]
    pub fn row(&self, k: usize) -> &[T] {
        &self.x[k * self.p..(k + 1) * self.p]
    }

    /// Xᵀv.
    pub fn cross(&self, v: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.p];
        for (k, &vk) in v.iter().enumerate() {
            for (o, &x) in out.iter_mut().zip(self.row(k)) {
                *o = *o + x * vk;
            }
        }
        out
    }

    /// Largest relative deviation of Xᵀa from the totals, each measured
    /// against max(|t_j|, Σ_k |x_kj a_k|).
    pub fn constraint_residual(&self, a: &[T]) -> T {
        let fitted = self.cross(a);
        let mut scale = vec![T::zero(); self.p];
        for (k, &ak) in a.iter().enumerate() {
            for (s, &x) in scale.iter_mut().zip(self.row(k)) {
                *s = *s + (x * ak).abs();
            }
        }
        (0..self.p)
            .map(|j| {
                let denom = self.totals[j].abs().max(scale[j]);
                let diff = (fitted[j] - self.totals[j]).abs();
                if denom > T::zero() {
                    diff / denom
                } else {
                    diff
                }
            })
            .fold(T::zero(), T::max)
    }
}

/// Calibration of one sample: the spec, its design weights and the factored
/// normal-equation matrix XᵀΠX.
#[derive(Debug, Clone)]
pub struct Calibrator<'a, T> {
    spec: &'a CalibrationSpec<T>,
    w: &'a [T],
    pi: Vec<T>,
    lu: Lu<T>,
}

impl<'a, T: Real> Calibrator<'a, T> {
    pub fn new(spec: &'a CalibrationSpec<T>, w: &'a [T]) -> Result<Self> {
        let n = spec.rows();
        if w.len() != n {
            return Err(Error::Contract(format!("{} weights for {n} calibration rows", w.len())));
        }
        let pi: Vec<T> = match &spec.q {
            Some(q) => w.iter().zip(q).map(|(&w, &q)| w / q).collect(),
            None => w.to_vec(),
        };
        if pi.iter().any(|v| !(*v > T::zero()) || !v.is_finite()) {
            return Err(Error::Contract("calibration needs positive finite design weights".into()));
        }
        let p = spec.p;
        let mut m = Matrix::zeros(p);
        for (k, &pk) in pi.iter().enumerate() {
            let row = spec.row(k);
            for i in 0..p {
                let xi = row[i] * pk;
                for j in i..p {
                    m.set(i, j, m.get(i, j) + xi * row[j]);
                }
            }
        }
        for i in 0..p {
            for j in 0..i {
                m.set(i, j, m.get(j, i));
            }
        }
        let lu = check_conditioning(spec, &m)?;
        Ok(Calibrator { spec, w, pi, lu })
    }

    pub fn spec(&self) -> &CalibrationSpec<T> {
        self.spec
    }

    /// Diagonal of Π.
    pub fn pi(&self) -> &[T] {
        &self.pi
    }

    /// t_X − Xᵀw.
    fn gap(&self) -> Vec<T> {
        let ht = self.spec.cross(self.w);
        self.spec.totals.iter().zip(ht).map(|(&t, h)| t - h).collect()
    }

    /// Calibrated weights c.
    pub fn greg_weights(&self) -> Vec<T> {
        let lambda = self.lu.solve(&self.gap());
        self.w
            .iter()
            .zip(&self.pi)
            .enumerate()
            .map(|(k, (&w, &p))| w + p * dot(self.spec.row(k), &lambda))
            .collect()
    }

    /// β̂ = (XᵀΠX)⁻¹XᵀΠy.
    pub fn beta_hat(&self, y: &[T]) -> Result<Vec<T>> {
        self.check_len(y)?;
        let py: Vec<T> = y.iter().zip(&self.pi).map(|(&y, &p)| y * p).collect();
        Ok(self.lu.solve(&self.spec.cross(&py)))
    }

    /// y − Xβ̂.
    pub fn residual(&self, y: &[T], beta: &[T]) -> Vec<T> {
        y.iter()
            .enumerate()
            .map(|(k, &y)| y - dot(self.spec.row(k), beta))
            .collect()
    }

    /// Ŷ^R = Σwy + β̂ᵀ(t_X − Xᵀw).
    pub fn regression_estimate(&self, y: &[T]) -> Result<T> {
        let beta = self.beta_hat(y)?;
        Ok(self.regression_estimate_with(y, &beta))
    }

    fn regression_estimate_with(&self, y: &[T], beta: &[T]) -> T {
        let ht: T = y.iter().zip(self.w).map(|(&y, &w)| y * w).sum();
        ht + dot(beta, &self.gap())
    }

    /// yᵀΞy, evaluated as the Π-weighted residual sum of squares.
    pub fn residual_quadratic(&self, y: &[T]) -> Result<T> {
        let beta = self.beta_hat(y)?;
        Ok(self.quadratic_of(&self.residual(y, &beta)))
    }

    fn quadratic_of(&self, e: &[T]) -> T {
        e.iter().zip(&self.pi).map(|(&e, &p)| p * e * e).sum()
    }

    fn check_len(&self, y: &[T]) -> Result<()> {
        if y.len() != self.pi.len() {
            return Err(Error::Contract(format!(
                "variable has {} values for {} calibration rows",
                y.len(),
                self.pi.len()
            )));
        }
        Ok(())
    }
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&a, &b)| a * b).sum()
}

fn check_conditioning<T: Real>(spec: &CalibrationSpec<T>, m: &Matrix<T>) -> Result<Lu<T>> {
    let name = |j: usize| spec.columns.get(j).cloned().unwrap_or_else(|| format!("x{j}"));
    let (scaled, _) = equilibrate(m).map_err(|j| Error::Collinearity {
        column: name(j),
        condition: f64::INFINITY,
    })?;
    let lu_scaled = Lu::factor(&scaled).map_err(|e| Error::Collinearity {
        column: name(e.column),
        condition: f64::INFINITY,
    })?;
    let inv = lu_scaled.inverse();
    let condition = (scaled.norm1() * inv.norm1()).as_f64();
    if !(condition <= CONDITION_LIMIT) {
        // The column with the largest variance inflation is the one best
        // explained by the others.
        let worst = (0..m.n)
            .max_by(|&a, &b| inv.get(a, a).partial_cmp(&inv.get(b, b)).unwrap_or(std::cmp::Ordering::Equal))
            .unwrap_or(0);
        return Err(Error::Collinearity {
            column: name(worst),
            condition,
        });
    }
    Lu::factor(m).map_err(|e| Error::Collinearity {
        column: name(e.column),
        condition,
    })
}

/// c = w + ΠX(XᵀΠX)⁻¹(t_X − Xᵀw).
pub fn greg_calibrate<T: Real>(spec: &CalibrationSpec<T>, w: &[T]) -> Result<Vec<T>> {
    Ok(Calibrator::new(spec, w)?.greg_weights())
}

pub fn beta_hat<T: Real>(spec: &CalibrationSpec<T>, w: &[T], y: &[T]) -> Result<Vec<T>> {
    Calibrator::new(spec, w)?.beta_hat(y)
}

pub fn regression_estimate<T: Real>(spec: &CalibrationSpec<T>, w: &[T], y: &[T]) -> Result<T> {
    Calibrator::new(spec, w)?.regression_estimate(y)
}

pub fn residual_quadratic<T: Real>(spec: &CalibrationSpec<T>, w: &[T], y: &[T]) -> Result<T> {
    Calibrator::new(spec, w)?.residual_quadratic(y)
}

/// Worst constraint violations of an alignment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstraintResiduals<T> {
    /// Max relative |Xᵢᵀaᵢ − t_Xᵢ| over both samples.
    pub calibration: T,
    /// |z₁ᵀa₁ − z₂ᵀa₂| relative to the larger of Σ|z_k a_k| in either sample.
    pub alignment: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentResult<T> {
    pub a1: Vec<T>,
    pub a2: Vec<T>,
    pub gamma: T,
    pub phi: T,
    /// The common value z₁ᵀa₁ = z₂ᵀa₂.
    pub aligned_total: T,
    pub regression_estimates: [T; 2],
    /// zᵢᵀΞᵢzᵢ.
    pub residual_quadratics: [T; 2],
    pub betas: [Vec<T>; 2],
    pub constraint_residuals: ConstraintResiduals<T>,
}

impl<T: Real> AlignmentResult<T> {
    /// Number of negative alignment weights across both samples.
    pub fn negative_weights(&self) -> usize {
        self.a1.iter().chain(&self.a2).filter(|a| **a < T::zero()).count()
    }

    /// Variance of the aligned total, one independent block per sample.
    pub fn variance(
        &self,
        samples: [&SampleDraw; 2],
        specs: [&CalibrationSpec<T>; 2],
        z: [&[T]; 2],
    ) -> Result<VarianceEstimate<T>> {
        let v1 = aligned_variance(samples[0], specs[0], z[0], &self.betas[0], self.gamma)?;
        let v2 = aligned_variance(samples[1], specs[1], z[1], &self.betas[1], T::one() - self.gamma)?;
        Ok(VarianceEstimate {
            value: v1.value + v2.value,
            path: v1.path,
            indicator: None,
            scale: v1.scale + v2.scale,
        })
    }
}

/// φ = (n₁/d₁) / (n₁/d₁ + n₂/d₂).
pub fn phi<T: Real>(n1: usize, d1: T, n2: usize, d2: T) -> T {
    let a = T::count(n1) / d1;
    let b = T::count(n2) / d2;
    a / (a + b)
}

/// Treats a residual quadratic as zero when it is rounding noise relative
/// to zᵀΠz.
fn effective_quadratic<T: Real>(q: T, z: &[T], pi: &[T]) -> T {
    let raw: T = z.iter().zip(pi).map(|(&z, &p)| p * z * z).sum();
    if q <= T::lit(1e-12) * raw {
        T::zero()
    } else {
        q
    }
}

/// γ̂ = φq₂ / ((1−φ)q₁ + φq₂).
pub fn gamma_from<T: Real>(phi: T, q1: T, q2: T) -> Result<T> {
    let denom = (T::one() - phi) * q1 + phi * q2;
    if !(denom > T::zero()) {
        return Err(Error::AlignmentDegenerate);
    }
    Ok(phi * q2 / denom)
}

pub fn gamma_hat<T: Real>(
    spec1: &CalibrationSpec<T>,
    w1: &[T],
    z1: &[T],
    spec2: &CalibrationSpec<T>,
    w2: &[T],
    z2: &[T],
) -> Result<T> {
    let c1 = Calibrator::new(spec1, w1)?;
    let c2 = Calibrator::new(spec2, w2)?;
    let q1 = effective_quadratic(c1.residual_quadratic(z1)?, z1, c1.pi());
    let q2 = effective_quadratic(c2.residual_quadratic(z2)?, z2, c2.pi());
    let phi = phi(z1.len(), spec1.design_effect, z2.len(), spec2.design_effect);
    gamma_from(phi, q1, q2)
}

/// Alignment weights for two samples sharing the variable z. φ counts the
/// sampled units of each sample.
pub fn align<T: Real>(
    spec1: &CalibrationSpec<T>,
    w1: &[T],
    z1: &[T],
    spec2: &CalibrationSpec<T>,
    w2: &[T],
    z2: &[T],
) -> Result<AlignmentResult<T>> {
    let cal1 = Calibrator::new(spec1, w1)?;
    let cal2 = Calibrator::new(spec2, w2)?;
    let beta1 = cal1.beta_hat(z1)?;
    let beta2 = cal2.beta_hat(z2)?;
    let e1 = cal1.residual(z1, &beta1);
    let e2 = cal2.residual(z2, &beta2);
    let q1 = effective_quadratic(cal1.quadratic_of(&e1), z1, cal1.pi());
    let q2 = effective_quadratic(cal2.quadratic_of(&e2), z2, cal2.pi());
    let phi = phi(z1.len(), spec1.design_effect, z2.len(), spec2.design_effect);
    let gamma = gamma_from(phi, q1, q2)?;
    let denom = (T::one() - phi) * q1 + phi * q2;

    let zr1 = cal1.regression_estimate_with(z1, &beta1);
    let zr2 = cal2.regression_estimate_with(z2, &beta2);
    let step = (zr2 - zr1) / denom;

    let mut a1 = cal1.greg_weights();
    let mut a2 = cal2.greg_weights();
    let f1 = (T::one() - phi) * step;
    let f2 = phi * step;
    for ((a, &p), &e) in a1.iter_mut().zip(cal1.pi()).zip(&e1) {
        *a = *a + f1 * p * e;
    }
    for ((a, &p), &e) in a2.iter_mut().zip(cal2.pi()).zip(&e2) {
        *a = *a - f2 * p * e;
    }

    let t1 = dot(z1, &a1);
    let t2 = dot(z2, &a2);
    let scale = dot_abs(z1, &a1).max(dot_abs(z2, &a2));
    let alignment = if scale > T::zero() { (t1 - t2).abs() / scale } else { (t1 - t2).abs() };
    let calibration = spec1.constraint_residual(&a1).max(spec2.constraint_residual(&a2));

    Ok(AlignmentResult {
        a1,
        a2,
        gamma,
        phi,
        aligned_total: gamma * zr1 + (T::one() - gamma) * zr2,
        regression_estimates: [zr1, zr2],
        residual_quadratics: [q1, q2],
        betas: [beta1, beta2],
        constraint_residuals: ConstraintResiduals { calibration, alignment },
    })
}

fn dot_abs<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&a, &b)| (a * b).abs()).sum()
}

/// One sample's block of the aligned-total variance: the design variance
/// estimator applied to share·(z − Xβ̂), where share is γ̂ for the first
/// sample and 1 − γ̂ for the second.
pub fn aligned_variance<T: Real>(
    sample: &SampleDraw,
    spec: &CalibrationSpec<T>,
    z: &[T],
    beta: &[T],
    share: T,
) -> Result<VarianceEstimate<T>> {
    if z.len() != spec.rows() || beta.len() != spec.p {
        return Err(Error::Contract("alignment variance inputs have mismatched dimensions".into()));
    }
    let psi: Vec<T> = z
        .iter()
        .enumerate()
        .map(|(k, &z)| share * (z - dot(spec.row(k), beta)))
        .collect();
    deville_variance_block(&psi, sample)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture() -> (CalibrationSpec<f64>, Vec<f64>) {
        let aux = [1.0, 3.0, 2.0, 5.0, 4.0];
        let spec = CalibrationSpec::intercept_and(&aux, 12.0, 40.0).unwrap();
        (spec, vec![2.0; 5])
    }

    #[test]
    fn intercept_only_is_a_ratio_adjustment() {
        let spec = CalibrationSpec::intercept_only(4, 10.0).unwrap();
        let w = [1.0f64, 2.0, 3.0, 2.0];
        let c = greg_calibrate(&spec, &w).unwrap();
        for (c, w) in c.iter().zip(w) {
            assert!((c - w * 10.0 / 8.0).abs() < 1e-12);
        }
        let y = [3.0, 1.0, 4.0, 1.0];
        let ht: f64 = y.iter().zip(w).map(|(y, w)| y * w).sum();
        assert!((regression_estimate(&spec, &w, &y).unwrap() - ht * 10.0 / 8.0).abs() < 1e-12);
    }

    #[test]
    fn totals_already_met_leave_weights_alone() {
        let (spec, w) = fixture();
        let totals = spec.cross(&w);
        let spec = CalibrationSpec { totals, ..spec };
        assert_eq!(greg_calibrate(&spec, &w).unwrap(), w);
        let y = [1.0, -1.0, 2.0, 0.0, 3.0];
        let ht: f64 = y.iter().zip(&w).map(|(y, w)| y * w).sum();
        assert!((regression_estimate(&spec, &w, &y).unwrap() - ht).abs() < 1e-12);
    }

    #[test]
    fn calibration_meets_totals_and_matches_identity() {
        let (spec, w) = fixture();
        let c = greg_calibrate(&spec, &w).unwrap();
        assert!(spec.constraint_residual(&c) < 1e-12);
        let y = [2.5, 1.0, -3.0, 4.0, 0.5];
        let yc: f64 = y.iter().zip(&c).map(|(y, c)| y * c).sum();
        assert!((regression_estimate(&spec, &w, &y).unwrap() - yc).abs() < 1e-10);
    }

    #[test]
    fn beta_recovers_exact_fits() {
        let (spec, w) = fixture();
        let y: Vec<f64> = (0..5).map(|k| 3.0 * spec.row(k)[1]).collect();
        let b = beta_hat(&spec, &w, &y).unwrap();
        assert!(b[0].abs() < 1e-12 && (b[1] - 3.0).abs() < 1e-12);
        assert!(residual_quadratic(&spec, &w, &y).unwrap() < 1e-20);
    }

    #[test]
    fn beta_vanishes_for_orthogonal_y() {
        let spec = CalibrationSpec::<f64>::intercept_only(4, 4.0).unwrap();
        let b = beta_hat(&spec, &[1.0; 4], &[1.0, -1.0, 2.0, -2.0]).unwrap();
        assert!(b[0].abs() < 1e-15);
    }

    #[test]
    fn residual_quadratic_scales_quadratically() {
        let (spec, w) = fixture();
        let y = [1.0, 4.0, -2.0, 0.0, 2.0];
        let y3: Vec<f64> = y.iter().map(|v| 3.0 * v).collect();
        let a = residual_quadratic(&spec, &w, &y).unwrap();
        let b = residual_quadratic(&spec, &w, &y3).unwrap();
        assert!(a > 0.0 && (b - 9.0 * a).abs() < 1e-10 * b);
    }

    #[test]
    fn collinear_columns_are_named() {
        let x = vec![1.0, 2.0, 1.0, 2.0, 1.0, 2.0];
        let spec = CalibrationSpec::new(x, 2, vec![3.0, 6.0]).unwrap().with_columns(["intercept", "twice"]);
        match greg_calibrate(&spec, &[1.0; 3]) {
            Err(Error::Collinearity { column, .. }) => assert_eq!(column, "twice"),
            other => panic!("expected collinearity, got {other:?}"),
        }
        let zero = CalibrationSpec::new(vec![1.0, 0.0, 1.0, 0.0], 2, vec![2.0, 0.0])
            .unwrap()
            .with_columns(["intercept", "empty"]);
        assert!(matches!(
            greg_calibrate(&zero, &[1.0; 2]),
            Err(Error::Collinearity { column, .. }) if column == "empty"
        ));
    }

    #[test]
    fn equal_regression_estimates_give_calibrated_weights() {
        let (spec, w) = fixture();
        let z = [1.0, -2.0, 0.5, 3.0, 1.0];
        let r = align(&spec, &w, &z, &spec, &w, &z).unwrap();
        let c = greg_calibrate(&spec, &w).unwrap();
        assert_eq!(r.a1, c);
        assert_eq!(r.a2, c);
        assert!((r.phi - 0.5).abs() < 1e-15 && (r.gamma - 0.5).abs() < 1e-15);
    }

    #[test]
    fn phi_for_the_first_scenario() {
        assert!((phi(500, 1.0f64, 1000, 1.0) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn gamma_boundaries() {
        assert_eq!(gamma_from(0.5, 2.0, 2.0).unwrap(), 0.5);
        assert_eq!(gamma_from(0.3, 1.0, 0.0).unwrap(), 0.0);
        assert!(matches!(gamma_from(0.3, 0.0, 0.0), Err(Error::AlignmentDegenerate)));
    }

    #[test]
    fn z_explained_by_x_in_both_samples_is_degenerate() {
        let (spec, w) = fixture();
        let z: Vec<f64> = (0..5).map(|k| 1.0 + 2.0 * spec.row(k)[1]).collect();
        assert!(matches!(align(&spec, &w, &z, &spec, &w, &z), Err(Error::AlignmentDegenerate)));
    }

    #[test]
    fn alignment_equalizes_totals() {
        let (spec1, w1) = fixture();
        let aux2 = [2.0, 2.5, 6.0, 1.0];
        let spec2 = CalibrationSpec::intercept_and(&aux2, 12.0, 40.0).unwrap();
        let w2 = vec![3.0; 4];
        let z1 = [1.0, -2.0, 0.5, 3.0, 1.0];
        let z2 = [0.0, 4.0, -1.0, 2.0];
        let r = align(&spec1, &w1, &z1, &spec2, &w2, &z2).unwrap();
        assert!(r.constraint_residuals.calibration < 1e-12);
        assert!(r.constraint_residuals.alignment < 1e-12);
        let t1: f64 = z1.iter().zip(&r.a1).map(|(z, a)| z * a).sum();
        assert!((t1 - r.aligned_total).abs() < 1e-10 * t1.abs().max(1.0));
        assert!((0.0..=1.0).contains(&r.gamma));
        assert!((r.phi - 5.0 / 9.0).abs() < 1e-15);
    }
}
