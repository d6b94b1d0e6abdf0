//! Concave cell-impurity functions `f` and per-cell constraint functions `g_k`.
//!
//! A cell impurity is always evaluated on an unnormalized joint vector
//! `v = p(X, T_h)`: `F(v) = w * f(v / w)` with `w = sum(v)`. This form is
//! positively homogeneous and superadditive whenever `f` is concave, which
//! is what the assignment rule relies on. Entropies are in bits.

use std::f64::consts::LOG2_E;

use crate::error::{Error, Result};

/// Lower clamp applied to gradient inputs so that distances stay finite.
pub const GRADIENT_EPS: f64 = 1e-12;

/// Which concave `f` scores a cell's conditional source distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Impurity {
    /// Shannon entropy, base 2.
    Entropy,
    /// Gini index `1 - sum(p_n^2)`.
    Gini,
}

impl Impurity {
    pub fn name(self) -> &'static str {
        match self {
            Impurity::Entropy => "entropy",
            Impurity::Gini => "gini",
        }
    }

    /// `F(v)`; negative round-off is treated as zero.
    pub fn value(self, v: &[f64]) -> f64 {
        let w: f64 = v.iter().map(|&x| x.max(0.0)).sum();
        if w <= 0.0 {
            return 0.0;
        }
        match self {
            Impurity::Entropy => v
                .iter()
                .filter(|&&x| x > 0.0)
                .map(|&x| x * (w / x).log2())
                .sum::<f64>()
                .max(0.0),
            Impurity::Gini => {
                let sq: f64 = v.iter().map(|&x| x.max(0.0) * x.max(0.0)).sum();
                (w - sq / w).max(0.0)
            }
        }
    }

    /// Gradient of `F` at `max(v, GRADIENT_EPS)`, written into `out`.
    pub fn gradient_clamped(self, v: &[f64], out: &mut [f64]) {
        debug_assert_eq!(v.len(), out.len());
        let w: f64 = v.iter().map(|&x| x.max(GRADIENT_EPS)).sum();
        match self {
            Impurity::Entropy => {
                for (o, &x) in out.iter_mut().zip(v) {
                    *o = (w / x.max(GRADIENT_EPS)).log2();
                }
            }
            Impurity::Gini => {
                let sq: f64 = v
                    .iter()
                    .map(|&x| {
                        let x = x.max(GRADIENT_EPS);
                        x * x
                    })
                    .sum();
                let base = 1.0 + sq / (w * w);
                for (o, &x) in out.iter_mut().zip(v) {
                    *o = base - 2.0 * x.max(GRADIENT_EPS) / w;
                }
            }
        }
    }
}

/// The separable constraint `G(p_Z) = sum_k g_k(p(Z_k))`.
#[derive(Debug, Clone, PartialEq)]
pub enum Constraint {
    /// `g_k = 0`.
    None,
    /// `g_k(p) = -p log2 p`, so `G` is the entropy of `Z`.
    Entropy,
    /// `g_k(p) = weights[k] * p`, e.g. a per-symbol transmission cost.
    Linear(Vec<f64>),
}

impl Constraint {
    pub fn name(&self) -> &'static str {
        match self {
            Constraint::None => "none",
            Constraint::Entropy => "entropy",
            Constraint::Linear(_) => "linear",
        }
    }

    /// True when every cell uses the same `g`.
    pub fn is_symmetric(&self) -> bool {
        match self {
            Constraint::None | Constraint::Entropy => true,
            Constraint::Linear(w) => w.windows(2).all(|p| p[0] == p[1]),
        }
    }

    /// `g_k(p)` without range checks. `k` must be a valid cell.
    pub fn value(&self, k: usize, p: f64) -> f64 {
        match self {
            Constraint::None => 0.0,
            Constraint::Entropy => {
                if p > 0.0 {
                    -p * p.log2()
                } else {
                    0.0
                }
            }
            Constraint::Linear(w) => w[k] * p,
        }
    }

    /// `g_k'(p)` with `p` clamped to `[GRADIENT_EPS, 1]`.
    pub fn derivative(&self, k: usize, p: f64) -> f64 {
        match self {
            Constraint::None => 0.0,
            Constraint::Entropy => -(p.clamp(GRADIENT_EPS, 1.0).log2() + LOG2_E),
            Constraint::Linear(w) => w[k],
        }
    }

    fn check_cell(&self, k: usize) -> Result<()> {
        match self {
            Constraint::Linear(w) if k >= w.len() => Err(Error::IndexOutOfRange {
                index: k,
                limit: w.len(),
            }),
            _ => Ok(()),
        }
    }
}

/// Impurity of one cell given its joint vector `v`. Zero for an empty cell
/// or a pure one.
pub fn cell_impurity(f: Impurity, v: &[f64]) -> Result<f64> {
    if let Some((index, &value)) = v.iter().enumerate().find(|(_, &x)| x < 0.0) {
        return Err(Error::NegativeEntry {
            row: index,
            col: 0,
            value,
        });
    }
    Ok(f.value(v))
}

/// `dF/dv_n` at a strictly positive `v`.
pub fn cell_gradient(f: Impurity, v: &[f64]) -> Result<Vec<f64>> {
    if let Some((index, &value)) = v.iter().enumerate().find(|(_, &x)| !(x > 0.0)) {
        return Err(Error::NonPositiveEntry { index, value });
    }
    let mut out = vec![0.0; v.len()];
    f.gradient_clamped(v, &mut out);
    Ok(out)
}

/// `g_k(p)` for a cell mass `p` in `[0, 1]`.
pub fn constraint_value(g: &Constraint, k: usize, p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::OutOfRange(p));
    }
    g.check_cell(k)?;
    Ok(g.value(k, p))
}

/// `g_k'(p)`; the entropy case clamps `p` away from zero first.
pub fn constraint_derivative(g: &Constraint, k: usize, p: f64) -> Result<f64> {
    g.check_cell(k)?;
    Ok(g.derivative(k, p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn approx(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    #[test]
    fn impurity_examples() {
        approx(cell_impurity(Impurity::Entropy, &[0.25, 0.25]).unwrap(), 0.5, 1e-15);
        approx(
            cell_impurity(Impurity::Entropy, &[0.35, 0.15]).unwrap(),
            0.440645,
            1e-6,
        );
        approx(cell_impurity(Impurity::Gini, &[0.25, 0.25]).unwrap(), 0.25, 1e-15);
        assert_eq!(cell_impurity(Impurity::Gini, &[0.3, 0.0]).unwrap(), 0.0);
        assert_eq!(cell_impurity(Impurity::Entropy, &[0.0, 0.3, 0.0]).unwrap(), 0.0);
        assert_eq!(cell_impurity(Impurity::Entropy, &[0.0, 0.0]).unwrap(), 0.0);
        assert!(matches!(
            cell_impurity(Impurity::Gini, &[0.1, -0.1]),
            Err(Error::NegativeEntry { row: 1, .. })
        ));
    }

    #[test]
    fn gradient_examples() {
        let g = cell_gradient(Impurity::Entropy, &[0.25, 0.25]).unwrap();
        approx(g[0], 1.0, 1e-15);
        approx(g[1], 1.0, 1e-15);
        let g = cell_gradient(Impurity::Entropy, &[0.35, 0.15]).unwrap();
        approx(g[0], 0.514573, 1e-6);
        approx(g[1], 1.736966, 1e-6);
        let g = cell_gradient(Impurity::Gini, &[0.25, 0.25]).unwrap();
        approx(g[0], 0.5, 1e-15);
        approx(g[1], 0.5, 1e-15);
        assert!(matches!(
            cell_gradient(Impurity::Entropy, &[0.5, 0.0]),
            Err(Error::NonPositiveEntry { index: 1, .. })
        ));
    }

    #[test]
    fn clamped_gradient_is_finite_at_zero() {
        let mut out = [0.0; 2];
        Impurity::Entropy.gradient_clamped(&[0.5, 0.0], &mut out);
        assert!(out.iter().all(|x| x.is_finite()));
        // an all-zero cell looks like the uniform distribution
        Impurity::Entropy.gradient_clamped(&[0.0, 0.0], &mut out);
        approx(out[0], 1.0, 1e-12);
    }

    #[test]
    fn constraint_examples() {
        approx(constraint_value(&Constraint::Entropy, 0, 0.5).unwrap(), 0.5, 1e-15);
        let lin = Constraint::Linear(vec![2.0, 3.0]);
        approx(constraint_value(&lin, 1, 0.25).unwrap(), 0.75, 1e-15);
        assert_eq!(constraint_value(&Constraint::Entropy, 0, 0.0).unwrap(), 0.0);
        assert!(matches!(
            constraint_value(&Constraint::Entropy, 0, 1.5),
            Err(Error::OutOfRange(_))
        ));
        assert!(matches!(
            constraint_value(&lin, 2, 0.5),
            Err(Error::IndexOutOfRange { index: 2, limit: 2 })
        ));

        approx(
            constraint_derivative(&Constraint::Entropy, 0, 0.5).unwrap(),
            -0.442695,
            1e-6,
        );
        for p in [0.0, 0.3, 1.0] {
            assert_eq!(constraint_derivative(&lin, 0, p).unwrap(), 2.0);
            assert_eq!(constraint_derivative(&Constraint::None, 0, p).unwrap(), 0.0);
        }
        assert!(constraint_derivative(&Constraint::Entropy, 0, 0.0)
            .unwrap()
            .is_finite());
    }

    #[test]
    fn symmetry_of_constraints() {
        assert!(Constraint::Entropy.is_symmetric());
        assert!(Constraint::Linear(vec![1.5; 3]).is_symmetric());
        assert!(!Constraint::Linear(vec![1.0, 2.0]).is_symmetric());
    }

    fn vec_strategy() -> impl Strategy<Value = Vec<f64>> {
        (2usize..6).prop_flat_map(|n| prop::collection::vec(0.0f64..1.0, n))
    }

    proptest! {
        #[test]
        fn homogeneous(v in vec_strategy(), lambda in 0.001f64..=1.0) {
            for f in [Impurity::Entropy, Impurity::Gini] {
                let scaled: Vec<f64> = v.iter().map(|x| lambda * x).collect();
                prop_assert!((f.value(&scaled) - lambda * f.value(&v)).abs() <= 1e-9);
            }
        }

        #[test]
        fn superadditive(
            (a, b) in (2usize..6).prop_flat_map(|n| (
                prop::collection::vec(0.0f64..1.0, n),
                prop::collection::vec(0.0f64..1.0, n),
            )),
            scale in 0.01f64..3.0,
        ) {
            for f in [Impurity::Entropy, Impurity::Gini] {
                let sum: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
                prop_assert!(f.value(&sum) >= f.value(&a) + f.value(&b) - 1e-9);
                let par: Vec<f64> = a.iter().map(|x| scale * x).collect();
                let sum: Vec<f64> = a.iter().zip(&par).map(|(x, y)| x + y).collect();
                prop_assert!((f.value(&sum) - f.value(&a) - f.value(&par)).abs() <= 1e-9);
            }
        }

        #[test]
        fn entropy_derivative_matches_difference(p in 1e-6f64..0.999999) {
            let h = (p * 1e-2).min(1e-6).min((1.0 - p) / 2.0);
            let g = Constraint::Entropy;
            let fd = (g.value(0, p + h) - g.value(0, p - h)) / (2.0 * h);
            let a = g.derivative(0, p);
            prop_assert!((a - fd).abs() / a.abs().max(1e-3) <= 1e-5);
        }
    }
}
