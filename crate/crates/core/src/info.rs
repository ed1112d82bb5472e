//! Exact discrete information measures.
//!
//! All quantities are reported in bits. Zero-mass terms follow the usual
//! conventions: `0 log 0 = 0` and `0 log (0/0) = 0`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Base of every logarithm reported by this crate.
pub const LOG_BASE: f64 = 2.0;

/// Accepted deviation of a total mass from 1.
pub const NORMALIZATION_TOL: f64 = 1e-9;

/// Drift below which masses are silently rescaled to sum to exactly 1.
const RENORMALIZE_TOL: f64 = 1e-12;

/// Drift worth correcting: beyond the rounding of summing `n` terms (such
/// masses are kept bit for bit) but inside the silent renormalization band.
fn needs_renormalizing(total: f64, n: usize) -> bool {
    let gap = (total - 1.0).abs();
    gap > f64::EPSILON * n as f64 && gap < RENORMALIZE_TOL
}

fn check_masses<'a>(what: &str, values: impl Iterator<Item = &'a f64>) -> Result<f64> {
    let mut total = 0.0;
    for (i, &v) in values.enumerate() {
        if !v.is_finite() || v < 0.0 {
            return Err(Error::validation(format!(
                "{what}: entry {i} is {v}, expected a finite nonnegative mass"
            )));
        }
        total += v;
    }
    if (total - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::validation(format!(
            "{what}: total mass {total} differs from 1 by more than {NORMALIZATION_TOL}"
        )));
    }
    Ok(total)
}

#[inline]
fn plogp(p: f64) -> f64 {
    if p > 0.0 {
        p * p.log2()
    } else {
        0.0
    }
}

/// A probability vector over a finite support.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbVector(Vec<f64>);

impl ProbVector {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::validation("probability vector has empty support"));
        }
        let total = check_masses("probability vector", weights.iter())?;
        let mut weights = weights;
        if needs_renormalizing(total, weights.len()) {
            weights.iter_mut().for_each(|w| *w /= total);
        }
        Ok(ProbVector(weights))
    }

    /// Normalizes nonnegative weights. Fails when the total is zero.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || weights.iter().any(|w| *w < 0.0 || !w.is_finite()) {
            return Err(Error::validation(
                "weights must be finite, nonnegative and not all zero",
            ));
        }
        ProbVector::new(weights.into_iter().map(|w| w / total).collect())
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::validation("uniform distribution over zero outcomes"));
        }
        Ok(ProbVector(vec![1.0 / n as f64; n]))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

/// Dense joint distribution p(row, col) with total mass 1.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDistribution(DMatrix<f64>);

impl JointDistribution {
    pub fn new(mass: DMatrix<f64>) -> Result<Self> {
        if mass.is_empty() {
            return Err(Error::validation("joint distribution is empty"));
        }
        let total = check_masses("joint distribution", mass.iter())?;
        let mut mass = mass;
        if needs_renormalizing(total, mass.len()) {
            mass /= total;
        }
        Ok(JointDistribution(mass))
    }

    /// Builds p(x, y) = p(x) p(y|x).
    pub fn from_conditional(prior: &ProbVector, conditional: &ConditionalDistribution) -> Result<Self> {
        if prior.len() != conditional.nrows() {
            return Err(Error::dimension(format!(
                "prior has {} outcomes but conditional has {} rows",
                prior.len(),
                conditional.nrows()
            )));
        }
        let mut mass = conditional.matrix().clone();
        for (i, p) in prior.as_slice().iter().enumerate() {
            mass.row_mut(i).scale_mut(*p);
        }
        JointDistribution::new(mass)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn nrows(&self) -> usize {
        self.0.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.0.ncols()
    }

    pub fn row_marginal(&self) -> ProbVector {
        let sums: DVector<f64> = self.0.column_sum();
        ProbVector::from_weights(sums.iter().copied().collect()).expect("joint has positive mass")
    }

    pub fn col_marginal(&self) -> ProbVector {
        let sums = self.0.row_sum();
        ProbVector::from_weights(sums.iter().copied().collect()).expect("joint has positive mass")
    }

    pub fn transpose(&self) -> JointDistribution {
        JointDistribution(self.0.transpose())
    }

    /// The joint read as a single distribution over (row, col) pairs.
    pub fn flatten(&self) -> ProbVector {
        ProbVector(self.0.iter().copied().collect())
    }
}

/// Row-stochastic matrix: row `i` is the distribution p(col | row = i).
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalDistribution(DMatrix<f64>);

impl ConditionalDistribution {
    pub fn new(rows: DMatrix<f64>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::validation("conditional distribution is empty"));
        }
        let mut rows = rows;
        for i in 0..rows.nrows() {
            let row = rows.row(i);
            let total = check_masses(&format!("conditional row {i}"), row.iter())?;
            if needs_renormalizing(total, rows.ncols()) {
                rows.row_mut(i).unscale_mut(total);
            }
        }
        Ok(ConditionalDistribution(rows))
    }

    /// Normalizes each row of a nonnegative weight matrix.
    pub fn from_weights(weights: DMatrix<f64>) -> Result<Self> {
        let mut weights = weights;
        for i in 0..weights.nrows() {
            let total: f64 = weights.row(i).sum();
            if !(total > 0.0) || !total.is_finite() {
                return Err(Error::validation(format!("row {i} has no positive mass")));
            }
            weights.row_mut(i).unscale_mut(total);
        }
        ConditionalDistribution::new(weights)
    }

    pub fn identity(n: usize) -> Result<Self> {
        ConditionalDistribution::new(DMatrix::identity(n, n))
    }

    pub fn uniform(rows: usize, cols: usize) -> Result<Self> {
        if cols == 0 {
            return Err(Error::validation("uniform conditional over zero outcomes"));
        }
        ConditionalDistribution::new(DMatrix::from_element(rows, cols, 1.0 / cols as f64))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn nrows(&self) -> usize {
        self.0.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.0.ncols()
    }

    pub fn row(&self, i: usize) -> ProbVector {
        ProbVector(self.0.row(i).iter().copied().collect())
    }
}

/// Shannon entropy in bits.
pub fn entropy(p: &ProbVector) -> f64 {
    -p.as_slice().iter().map(|&x| plogp(x)).sum::<f64>()
}

/// KL(p || q) in bits. Fails when p puts mass where q has none.
pub fn kl_divergence(p: &ProbVector, q: &ProbVector) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::dimension(format!(
            "support sizes differ: {} vs {}",
            p.len(),
            q.len()
        )));
    }
    let mut total = 0.0;
    for (index, (&pi, &qi)) in p.as_slice().iter().zip(q.as_slice()).enumerate() {
        if pi > 0.0 {
            if qi <= 0.0 {
                return Err(Error::AbsoluteContinuity { index, p: pi });
            }
            total += pi * (pi / qi).log2();
        }
    }
    Ok(total.max(0.0))
}

/// I(X;Y) in bits for a joint distribution with X on rows and Y on columns.
pub fn mutual_information(joint: &JointDistribution) -> f64 {
    let m = joint.matrix();
    let px = m.column_sum();
    let py = m.row_sum();
    // scaling by the mass keeps independent joints at exactly zero when
    // the entries sum to 1 only up to rounding
    let mass = m.sum();
    let mut total = 0.0;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let pxy = m[(i, j)];
            if pxy > 0.0 {
                total += pxy * (pxy * mass / (px[i] * py[j])).log2();
            }
        }
    }
    (total / mass).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn pv(v: &[f64]) -> ProbVector {
        ProbVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn entropy_examples() {
        assert!(close(entropy(&ProbVector::uniform(4).unwrap()), 2.0, 1e-15));
        assert_eq!(entropy(&pv(&[1.0, 0.0, 0.0])), 0.0);
        assert!(close(entropy(&pv(&[0.5, 0.25, 0.25])), 1.5, 1e-15));
    }

    #[test]
    fn rejects_invalid_vectors() {
        assert!(matches!(ProbVector::new(vec![0.5, 0.6]), Err(Error::Validation(_))));
        assert!(matches!(ProbVector::new(vec![1.5, -0.5]), Err(Error::Validation(_))));
        assert!(matches!(ProbVector::new(vec![f64::NAN, 1.0]), Err(Error::Validation(_))));
        assert!(ProbVector::new(vec![]).is_err());
    }

    #[test]
    fn tiny_drift_is_renormalized() {
        let p = pv(&[0.5 + 1e-13, 0.5]);
        let total: f64 = p.as_slice().iter().sum();
        assert!((total - 1.0).abs() < 1e-15);
        // larger but tolerated drift is stored untouched
        let q = pv(&[0.5 + 1e-10, 0.5]);
        assert_eq!(q.as_slice()[0], 0.5 + 1e-10);
    }

    #[test]
    fn kl_examples() {
        let u = ProbVector::uniform(4).unwrap();
        assert_eq!(kl_divergence(&u, &u).unwrap(), 0.0);
        assert!(close(kl_divergence(&pv(&[1.0, 0.0]), &pv(&[0.5, 0.5])).unwrap(), 1.0, 1e-15));
        // 0.75 log2(1.5) + 0.25 log2(0.5)
        let expected = 0.75 * 1.5f64.log2() - 0.25;
        let got = kl_divergence(&pv(&[0.75, 0.25]), &pv(&[0.5, 0.5])).unwrap();
        assert!(close(got, expected, 1e-15));
        assert!(close(got, 0.18872, 5e-6));
    }

    #[test]
    fn kl_reports_offending_index() {
        let err = kl_divergence(&pv(&[0.5, 0.5, 0.0]), &pv(&[1.0, 0.0, 0.0])).unwrap_err();
        assert!(matches!(err, Error::AbsoluteContinuity { index: 1, .. }));
        // zero mass in p where q is zero is fine
        assert_eq!(kl_divergence(&pv(&[1.0, 0.0]), &pv(&[1.0, 0.0])).unwrap(), 0.0);
    }

    #[test]
    fn mutual_information_examples() {
        let px = [0.2, 0.8];
        let py = [0.1, 0.6, 0.3];
        let product = DMatrix::from_fn(2, 3, |i, j| px[i] * py[j]);
        let j = JointDistribution::new(product).unwrap();
        assert!(mutual_information(&j).abs() < 1e-15);

        let diag = JointDistribution::new(DMatrix::from_diagonal_element(4, 4, 0.25)).unwrap();
        assert!(close(mutual_information(&diag), 2.0, 1e-15));
    }

    #[test]
    fn mutual_information_matches_summation_oracle() {
        // direct summation, written out term by term:
        // marginals are (0.4, 0.6) on rows and (0.4, 0.6) on columns
        let oracle = 0.3 * (0.3f64 / (0.4 * 0.4)).log2()
            + 0.1 * (0.1f64 / (0.4 * 0.6)).log2()
            + 0.1 * (0.1f64 / (0.6 * 0.4)).log2()
            + 0.5 * (0.5f64 / (0.6 * 0.6)).log2();
        let j = JointDistribution::new(DMatrix::from_row_slice(2, 2, &[0.3, 0.1, 0.1, 0.5])).unwrap();
        assert!(close(mutual_information(&j), oracle, 1e-15));
        assert!(close(oracle, 0.256_425_891_682_002_9, 1e-12));
    }

    #[test]
    fn conditional_rows_validated() {
        let bad = DMatrix::from_row_slice(2, 2, &[0.5, 0.5, 0.2, 0.2]);
        assert!(ConditionalDistribution::new(bad).is_err());
        let c = ConditionalDistribution::from_weights(DMatrix::from_row_slice(1, 3, &[2.0, 1.0, 1.0])).unwrap();
        assert_eq!(c.row(0).as_slice(), &[0.5, 0.25, 0.25]);
    }
}
