//! Weighted RMSE training losses over a window of length `m`:
//! `E(p, y) = sqrt(sum_i w_i (p_i - y_i)^2)` with weights summing to one.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossKind {
    Unweighted,
    /// Gaussian weights with the exponent exactly as printed, which makes the
    /// weights largest at the start of the window and smallest at its end.
    GaussianAsPrinted,
    /// Gaussian weights peaked at the window center.
    GaussianCorrected,
    Centered,
}

impl LossKind {
    pub const ALL: [LossKind; 4] = [
        LossKind::Unweighted,
        LossKind::GaussianAsPrinted,
        LossKind::GaussianCorrected,
        LossKind::Centered,
    ];

    /// Command-line name.
    pub fn as_str(self) -> &'static str {
        match self {
            LossKind::Unweighted => "unweighted",
            LossKind::GaussianAsPrinted => "gaussian-as-printed",
            LossKind::GaussianCorrected => "gaussian",
            LossKind::Centered => "centered",
        }
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unweighted" => Ok(LossKind::Unweighted),
            "gaussian" => Ok(LossKind::GaussianCorrected),
            "gaussian-as-printed" => Ok(LossKind::GaussianAsPrinted),
            "centered" => Ok(LossKind::Centered),
            other => Err(Error::InvalidArgument(format!(
                "unknown loss {other:?} (expected unweighted, gaussian, gaussian-as-printed or centered)"
            ))),
        }
    }
}

/// A loss family together with its precomputed weight vector.
#[derive(Debug, Clone, PartialEq)]
pub struct LossSpec {
    kind: LossKind,
    weights: Vec<f64>,
}

impl LossSpec {
    pub fn new(kind: LossKind, m: usize) -> Self {
        assert!(m >= 1, "window length must be positive");
        let weights = match kind {
            LossKind::Unweighted => weights_unweighted(m),
            LossKind::GaussianAsPrinted | LossKind::GaussianCorrected => weights_gaussian(m, kind),
            LossKind::Centered => weights_centered(m),
        };
        Self { kind, weights }
    }

    /// Uniform `1/len` weights, the full-sequence RMSE used for recurrent models.
    pub fn uniform(len: usize) -> Self {
        Self::new(LossKind::Unweighted, len)
    }

    pub fn kind(&self) -> LossKind {
        self.kind
    }

    pub fn m(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

pub fn weights_unweighted(m: usize) -> Vec<f64> {
    vec![1.0 / m as f64; m]
}

/// Gaussian-family weights, `u_i / sum_j u_j` for 1-based `i`.
///
/// `GaussianAsPrinted` uses `u_i = exp(((i - m)^2 / 5m)^(4/3))`;
/// `GaussianCorrected` uses `u_i = exp(-((i - c)^2 / 5m)^(4/3))` with `c = (m + 1) / 2`.
/// Any other kind is treated as `GaussianCorrected`.
pub fn weights_gaussian(m: usize, variant: LossKind) -> Vec<f64> {
    let mf = m as f64;
    let (center, sign) = match variant {
        LossKind::GaussianAsPrinted => (mf, 1.0),
        _ => ((mf + 1.0) / 2.0, -1.0),
    };
    let u: Vec<f64> = (1..=m)
        .map(|i| {
            let d = i as f64 - center;
            (sign * (d * d / (5.0 * mf)).powf(4.0 / 3.0)).exp()
        })
        .collect();
    let total: f64 = u.iter().sum();
    u.into_iter().map(|v| v / total).collect()
}

/// `1 - (m - 1)/100` at 1-based index `floor(m/2)`, `1/100` elsewhere. For
/// `m = 1` the single weight is 1.
pub fn weights_centered(m: usize) -> Vec<f64> {
    if m == 1 {
        return vec![1.0];
    }
    let mut w = vec![0.01; m];
    w[m / 2 - 1] = 1.0 - (m as f64 - 1.0) / 100.0;
    w
}

fn check_lengths(p: &[f64], y: &[f64], w: &[f64]) -> Result<()> {
    for other in [y.len(), w.len()] {
        if other != p.len() {
            return Err(Error::LengthMismatch {
                expected: p.len(),
                actual: other,
            });
        }
    }
    Ok(())
}

pub fn weighted_rmse(p: &[f64], y: &[f64], w: &[f64]) -> Result<f64> {
    check_lengths(p, y, w)?;
    Ok(weighted_rmse_unchecked(p, y, w))
}

pub(crate) fn weighted_rmse_unchecked(p: &[f64], y: &[f64], w: &[f64]) -> f64 {
    p.iter()
        .zip(y)
        .zip(w)
        .map(|((&pi, &yi), &wi)| wi * (pi - yi) * (pi - yi))
        .sum::<f64>()
        .sqrt()
}

/// `dE/dp` together with the loss value.
#[derive(Debug, Clone, PartialEq)]
pub struct LossGradient {
    pub loss: f64,
    pub grad: Vec<f64>,
    /// Set when `E = 0`; `grad` is then the zero vector.
    pub zero_loss: bool,
}

/// `dE/dp_i = w_i (p_i - y_i) / E`. At `E = 0` the zero vector is returned and flagged.
pub fn weighted_rmse_grad(p: &[f64], y: &[f64], w: &[f64]) -> Result<LossGradient> {
    check_lengths(p, y, w)?;
    Ok(weighted_rmse_grad_unchecked(p, y, w))
}

pub(crate) fn weighted_rmse_grad_unchecked(p: &[f64], y: &[f64], w: &[f64]) -> LossGradient {
    let loss = weighted_rmse_unchecked(p, y, w);
    if loss == 0.0 {
        return LossGradient {
            loss,
            grad: vec![0.0; p.len()],
            zero_loss: true,
        };
    }
    let grad = p
        .iter()
        .zip(y)
        .zip(w)
        .map(|((&pi, &yi), &wi)| wi * (pi - yi) / loss)
        .collect();
    LossGradient {
        loss,
        grad,
        zero_loss: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn unweighted_values() {
        assert!(weights_unweighted(10).iter().all(|&w| w == 0.1));
        assert_eq!(weights_unweighted(1), vec![1.0]);
        assert!(weights_unweighted(7)
            .iter()
            .all(|&w| (w - 0.142857).abs() < 1e-6));
    }

    #[test]
    fn gaussian_as_printed_decreases_toward_window_end() {
        for m in 2..20 {
            let w = weights_gaussian(m, LossKind::GaussianAsPrinted);
            assert!(w.windows(2).all(|p| p[0] > p[1]), "m = {m}: {w:?}");
        }
        // u_m = exp(0) = 1 before normalization.
        let w = weights_gaussian(10, LossKind::GaussianAsPrinted);
        let u_first = ((81.0f64 / 50.0).powf(4.0 / 3.0)).exp();
        assert!((w[0] / w[9] - u_first).abs() < 1e-9);
    }

    #[test]
    fn gaussian_corrected_peaks_at_center() {
        let w = weights_gaussian(10, LossKind::GaussianCorrected);
        let max = w.iter().cloned().fold(f64::MIN, f64::max);
        assert_eq!(w[4], max);
        assert_eq!(w[5], max);
        assert_eq!(w[0], w[9]);
        assert_eq!(weights_gaussian(1, LossKind::GaussianCorrected), vec![1.0]);
        assert_eq!(weights_gaussian(1, LossKind::GaussianAsPrinted), vec![1.0]);
    }

    #[test]
    fn centered_values() {
        let w = weights_centered(10);
        assert_eq!(w[4], 0.91);
        assert!(w.iter().enumerate().all(|(i, &v)| i == 4 || v == 0.01));
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);

        let w = weights_centered(7);
        assert_eq!(w[2], 0.94);
        assert_eq!(w.iter().filter(|&&v| v == 0.01).count(), 6);

        assert_eq!(weights_centered(2), vec![0.99, 0.01]);
        assert_eq!(weights_centered(1), vec![1.0]);
    }

    #[test]
    fn rmse_examples() {
        let w = weights_unweighted(10);
        let y = vec![0.0; 10];
        assert_eq!(weighted_rmse(&y, &y, &w).unwrap(), 0.0);
        for m in [1, 3, 10] {
            let e = weighted_rmse(&vec![1.0; m], &vec![0.0; m], &weights_unweighted(m)).unwrap();
            assert!((e - 1.0).abs() < 1e-12);
        }
        let mut p = y.clone();
        p[3] = 0.5;
        let e = weighted_rmse(&p, &y, &w).unwrap();
        assert!((e - 0.158113883).abs() < 1e-8);
        assert!(matches!(
            weighted_rmse(&[0.0], &[0.0, 1.0], &[1.0]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn gradient_examples() {
        let g = weighted_rmse_grad(&[0.3, 0.4], &[0.3, 0.4], &[0.5, 0.5]).unwrap();
        assert!(g.zero_loss);
        assert_eq!(g.grad, vec![0.0, 0.0]);

        let g = weighted_rmse_grad(&[1.0, 0.0], &[0.0, 0.0], &[0.5, 0.5]).unwrap();
        assert!((g.loss - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((g.grad[0] - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert_eq!(g.grad[1], 0.0);
    }

    #[test]
    fn unweighted_matches_plain_rmse() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let m = rng.gen_range(1..40);
            let p: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..2.0)).collect();
            let y: Vec<f64> = (0..m).map(|_| rng.gen_range(0..2) as f64).collect();
            let mse = p.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / m as f64;
            let e = weighted_rmse(&p, &y, &weights_unweighted(m)).unwrap();
            assert!((e - mse.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn loss_kind_names_round_trip() {
        for kind in LossKind::ALL {
            assert_eq!(kind.as_str().parse::<LossKind>().unwrap(), kind);
        }
        assert!("huber".parse::<LossKind>().is_err());
    }

    fn arb_case() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, LossKind)> {
        (2usize..16, 0usize..4).prop_flat_map(|(m, k)| {
            (
                proptest::collection::vec(-1.0f64..2.0, m),
                proptest::collection::vec(0u8..2, m),
                Just(LossKind::ALL[k]),
            )
                .prop_map(|(p, y, kind)| (p, y.into_iter().map(f64::from).collect(), kind))
        })
    }

    proptest! {
        #[test]
        fn weights_are_normalized(m in 1usize..64, k in 0usize..4) {
            let spec = LossSpec::new(LossKind::ALL[k], m);
            prop_assert!(spec.weights().iter().all(|&w| w >= 0.0));
            prop_assert!((spec.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn corrected_gaussian_is_symmetric(m in 1usize..64) {
            let w = weights_gaussian(m, LossKind::GaussianCorrected);
            for i in 0..m {
                prop_assert!((w[i] - w[m - 1 - i]).abs() < 1e-15);
            }
        }

        #[test]
        fn rmse_is_symmetric((p, y, kind) in arb_case()) {
            let w = LossSpec::new(kind, p.len());
            let a = weighted_rmse(&p, &y, w.weights()).unwrap();
            let b = weighted_rmse(&y, &p, w.weights()).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn gradient_matches_central_differences((p, y, kind) in arb_case()) {
            let spec = LossSpec::new(kind, p.len());
            let w = spec.weights();
            let g = weighted_rmse_grad(&p, &y, w).unwrap();
            prop_assume!(g.loss > 1e-3);
            let h = 1e-6;
            for i in 0..p.len() {
                let mut up = p.clone();
                let mut down = p.clone();
                up[i] += h;
                down[i] -= h;
                let fd = (weighted_rmse(&up, &y, w).unwrap() - weighted_rmse(&down, &y, w).unwrap()) / (2.0 * h);
                let denom = fd.abs().max(g.grad[i].abs()).max(1e-6);
                prop_assert!((fd - g.grad[i]).abs() / denom < 1e-5, "i={} fd={} an={}", i, fd, g.grad[i]);
            }
        }
    }
}
