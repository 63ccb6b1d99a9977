//! Per-feature standardization (zero mean, unit variance), fitted on
//! training data and stored in the model.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler<F> {
    pub means: Vec<F>,
    pub stds: Vec<F>,
}

impl<F: Scalar> Scaler<F> {
    pub fn fit(vectors: &[Vec<F>]) -> Result<Scaler<F>> {
        if vectors.is_empty() {
            return Err(Error::validation("cannot fit a scaler on no vectors"));
        }
        let dim = vectors[0].len();
        let n = F::of_usize(vectors.len());
        let mut means = vec![F::zero(); dim];
        for v in vectors {
            for (m, x) in means.iter_mut().zip(v) {
                *m = *m + *x;
            }
        }
        for m in &mut means {
            *m = *m / n;
        }
        let mut stds = vec![F::zero(); dim];
        for v in vectors {
            for ((s, x), m) in stds.iter_mut().zip(v).zip(&means) {
                let d = *x - *m;
                *s = *s + d * d;
            }
        }
        for (s, m) in stds.iter_mut().zip(&means) {
            let std = (*s / n).sqrt();
            // Near-constant features pass through unscaled.
            *s = if std <= F::of_f64(1e-12) * (F::one() + m.abs()) {
                F::one()
            } else {
                std
            };
        }
        Ok(Scaler { means, stds })
    }

    pub fn transform(&self, v: &[F]) -> Vec<F> {
        v.iter()
            .zip(&self.means)
            .zip(&self.stds)
            .map(|((x, m), s)| (*x - *m) / *s)
            .collect()
    }

    pub fn transform_all(&self, vectors: &[Vec<F>]) -> Vec<Vec<F>> {
        vectors.iter().map(|v| self.transform(v)).collect()
    }
}
