//! Belief distributions p(u|m) grounded in similarity, and the joint p(w,u).

use nalgebra::DMatrix;

use crate::encoder::Encoder;
use crate::error::{Error, Result};
use crate::info::{ConditionalDistribution, JointDistribution};
use crate::similarity::SimilarityMatrix;

/// Listener beliefs p(u|m): rows are meanings, columns world states.
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefModel {
    conditional: ConditionalDistribution,
    gamma: f64,
    /// Meaning labels shared with encoders, when known.
    meanings: Option<Vec<String>>,
}

impl BeliefModel {
    pub fn new(conditional: ConditionalDistribution, gamma: f64, meanings: Option<Vec<String>>) -> Result<Self> {
        if let Some(labels) = &meanings {
            if labels.len() != conditional.nrows() {
                return Err(Error::dimension(format!(
                    "{} meaning labels for {} belief rows",
                    labels.len(),
                    conditional.nrows()
                )));
            }
        }
        Ok(BeliefModel { conditional, gamma, meanings })
    }

    /// Unlabelled beliefs, e.g. for synthetic problems.
    pub fn from_conditional(conditional: ConditionalDistribution) -> Self {
        BeliefModel { conditional, gamma: f64::NAN, meanings: None }
    }

    pub fn conditional(&self) -> &ConditionalDistribution {
        &self.conditional
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn meanings(&self) -> Option<&[String]> {
        self.meanings.as_deref()
    }

    pub fn meaning_count(&self) -> usize {
        self.conditional.nrows()
    }

    pub fn state_count(&self) -> usize {
        self.conditional.ncols()
    }
}

/// Row-wise softmax of `gamma * sim`, max-subtracted.
pub fn softmax_rows(values: &DMatrix<f64>, gamma: f64) -> Result<ConditionalDistribution> {
    if !gamma.is_finite() {
        return Err(Error::validation(format!("temperature must be finite, got {gamma}")));
    }
    let mut out = DMatrix::zeros(values.nrows(), values.ncols());
    for i in 0..values.nrows() {
        let row = values.row(i);
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation(format!("similarity row {i} has non-finite entries")));
        }
        let scaled: Vec<f64> = row.iter().map(|v| gamma * v).collect();
        let max = scaled.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = scaled.iter().map(|v| (v - max).exp()).collect();
        let total: f64 = exps.iter().sum();
        for (j, e) in exps.into_iter().enumerate() {
            out[(i, j)] = e / total;
        }
    }
    ConditionalDistribution::new(out)
}

/// p(u_j | m_i) proportional to exp(gamma * sim(i, j)).
pub fn belief_from_similarity(sim: &SimilarityMatrix, gamma: f64) -> Result<BeliefModel> {
    let values = sim.values();
    if values.nrows() != values.ncols() {
        return Err(Error::dimension(format!(
            "similarity matrix is {}x{}, expected square",
            values.nrows(),
            values.ncols()
        )));
    }
    let conditional = softmax_rows(values, gamma)?;
    BeliefModel::new(conditional, gamma, Some(sim.items().to_vec()))
}

/// p(w, u) = sum_m p(m) p(w|m) p(u|m).
pub fn joint_wu(encoder: &Encoder, beliefs: &BeliefModel) -> Result<JointDistribution> {
    if encoder.meaning_count() != beliefs.meaning_count() {
        return Err(Error::dimension(format!(
            "encoder has {} meanings but beliefs have {}",
            encoder.meaning_count(),
            beliefs.meaning_count()
        )));
    }
    if let Some(labels) = beliefs.meanings() {
        if let Some(i) = labels.iter().zip(encoder.meanings()).position(|(a, b)| a != b) {
            return Err(Error::dimension(format!(
                "meaning inventories differ at position {i}: `{}` vs `{}`",
                encoder.meanings()[i],
                labels[i]
            )));
        }
    }
    let mut weighted = encoder.policy().matrix().clone();
    for (i, p) in encoder.prior().as_slice().iter().enumerate() {
        weighted.row_mut(i).scale_mut(*p);
    }
    let joint = weighted.transpose() * beliefs.conditional().matrix();
    JointDistribution::new(joint)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::info::mutual_information;
    use crate::similarity::SimilarityKind;

    fn sim(values: DMatrix<f64>) -> SimilarityMatrix {
        let items = (0..values.nrows()).map(|i| format!("m{i}")).collect();
        SimilarityMatrix::new(values, SimilarityKind::Predicted, items).unwrap()
    }

    #[test]
    fn zero_temperature_is_uniform() {
        let s = sim(DMatrix::from_row_slice(3, 3, &[1.0, 0.2, 0.5, 0.2, 1.0, 0.1, 0.5, 0.1, 1.0]));
        let b = belief_from_similarity(&s, 0.0).unwrap();
        for v in b.conditional().matrix().iter() {
            assert_eq!(*v, 1.0 / 3.0);
        }
    }

    #[test]
    fn large_temperature_concentrates() {
        let s = sim(DMatrix::from_row_slice(3, 3, &[1.0, 0.2, 0.5, 0.2, 1.0, 0.1, 0.5, 0.1, 1.0]));
        let b = belief_from_similarity(&s, 1e3).unwrap();
        for i in 0..3 {
            assert!((b.conditional().matrix()[(i, i)] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn matches_direct_softmax() {
        let raw = [0.9, -0.3, 0.4, -0.3, 0.7, 0.05, 0.4, 0.05, 1.2];
        let s = sim(DMatrix::from_row_slice(3, 3, &raw));
        let b = belief_from_similarity(&s, 1.0).unwrap();
        for i in 0..3 {
            let denom: f64 = (0..3).map(|j| raw[3 * i + j].exp()).sum();
            for j in 0..3 {
                let expected = raw[3 * i + j].exp() / denom;
                assert!((b.conditional().matrix()[(i, j)] - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn non_finite_temperature_rejected() {
        let s = sim(DMatrix::identity(2, 2));
        assert!(belief_from_similarity(&s, f64::INFINITY).is_err());
    }

    #[test]
    fn lossless_chain() {
        let e = Encoder::from_policy(ConditionalDistribution::identity(4).unwrap()).unwrap();
        let b = BeliefModel::from_conditional(ConditionalDistribution::identity(4).unwrap());
        let j = joint_wu(&e, &b).unwrap();
        assert_eq!(j.matrix(), &DMatrix::from_diagonal_element(4, 4, 0.25));
        assert!((mutual_information(&j) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn uniform_beliefs_carry_nothing() {
        let e = Encoder::from_policy(ConditionalDistribution::identity(3).unwrap()).unwrap();
        let b = BeliefModel::from_conditional(ConditionalDistribution::uniform(3, 5).unwrap());
        assert!(mutual_information(&joint_wu(&e, &b).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn inventory_mismatch() {
        let e = Encoder::from_policy(ConditionalDistribution::identity(3).unwrap()).unwrap();
        let b = BeliefModel::from_conditional(ConditionalDistribution::identity(4).unwrap());
        assert!(matches!(joint_wu(&e, &b), Err(Error::Dimension(_))));

        let labelled = BeliefModel::new(
            ConditionalDistribution::identity(3).unwrap(),
            1.0,
            Some(vec!["m0".into(), "m2".into(), "m1".into()]),
        )
        .unwrap();
        assert!(matches!(joint_wu(&e, &labelled), Err(Error::Dimension(_))));
    }
}
