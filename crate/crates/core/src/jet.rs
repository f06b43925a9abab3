//! Truncated Taylor arithmetic at a point.
//!
//! A [`Jet`] carries `[f(x), f'(x), ..., f^(m)(x)]` for a fixed anchor `x`.
//! Coefficients are raw derivative values, not factorial-scaled, so products
//! use the general Leibniz rule with binomial weights.

use std::sync::OnceLock;

use thiserror::Error;

/// Relative threshold below which a divisor's leading coefficient counts as zero.
pub const SINGULAR_FLOOR: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum JetError {
    #[error("jet anchors differ: {left} vs {right}")]
    AnchorMismatch { left: f64, right: f64 },
    #[error("division by singular jet: leading coefficient {leading:e} below floor {floor:e}")]
    DivisionBySingular { leading: f64, floor: f64 },
}

const PASCAL_ROWS: usize = 192;

fn pascal() -> &'static Vec<Vec<f64>> {
    static TABLE: OnceLock<Vec<Vec<f64>>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut rows: Vec<Vec<f64>> = Vec::with_capacity(PASCAL_ROWS);
        for n in 0..PASCAL_ROWS {
            let mut row = vec![1.0; n + 1];
            for k in 1..n {
                row[k] = rows[n - 1][k - 1] + rows[n - 1][k];
            }
            rows.push(row);
        }
        rows
    })
}

/// Binomial coefficient `C(n, k)` as a float.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    if n < PASCAL_ROWS {
        return pascal()[n][k];
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Derivative values of a function at a single anchor point.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    anchor: f64,
    coeffs: Vec<f64>,
}

impl Jet {
    /// Builds a jet from derivative values. Panics on an empty coefficient list.
    pub fn new(anchor: f64, coeffs: Vec<f64>) -> Self {
        assert!(!coeffs.is_empty(), "a jet needs at least its value");
        Self { anchor, coeffs }
    }

    pub fn constant(anchor: f64, value: f64, order: usize) -> Self {
        let mut coeffs = vec![0.0; order + 1];
        coeffs[0] = value;
        Self { anchor, coeffs }
    }

    /// The identity function `t -> t` expanded at `anchor`.
    pub fn variable(anchor: f64, order: usize) -> Self {
        let mut coeffs = vec![0.0; order + 1];
        coeffs[0] = anchor;
        if order >= 1 {
            coeffs[1] = 1.0;
        }
        Self { anchor, coeffs }
    }

    pub fn anchor(&self) -> f64 {
        self.anchor
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    /// The `k`-th derivative, or `None` past the jet's order.
    pub fn derivative(&self, k: usize) -> Option<f64> {
        self.coeffs.get(k).copied()
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }

    pub fn truncate(&self, order: usize) -> Jet {
        let n = (order + 1).min(self.coeffs.len());
        Jet {
            anchor: self.anchor,
            coeffs: self.coeffs[..n].to_vec(),
        }
    }

    /// Jet of the `shift`-th derivative, keeping at most `order` further orders.
    ///
    /// Returns `None` if the jet does not reach order `shift`.
    pub fn derivative_jet(&self, shift: usize, order: usize) -> Option<Jet> {
        if shift >= self.coeffs.len() {
            return None;
        }
        let end = (shift + order + 1).min(self.coeffs.len());
        Some(Jet {
            anchor: self.anchor,
            coeffs: self.coeffs[shift..end].to_vec(),
        })
    }

    /// Drops the value and shifts every derivative down by one order.
    /// A zeroth-order jet differentiates to the zero jet.
    pub fn formal_derivative(&self) -> Jet {
        if self.coeffs.len() == 1 {
            return Jet::constant(self.anchor, 0.0, 0);
        }
        Jet {
            anchor: self.anchor,
            coeffs: self.coeffs[1..].to_vec(),
        }
    }

    fn check_anchor(&self, other: &Jet) -> Result<(), JetError> {
        if self.anchor == other.anchor {
            Ok(())
        } else {
            Err(JetError::AnchorMismatch {
                left: self.anchor,
                right: other.anchor,
            })
        }
    }

    fn zip_with(&self, other: &Jet, op: impl Fn(f64, f64) -> f64) -> Result<Jet, JetError> {
        self.check_anchor(other)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(&a, &b)| op(a, b))
            .collect();
        Ok(Jet {
            anchor: self.anchor,
            coeffs,
        })
    }

    pub fn add(&self, other: &Jet) -> Result<Jet, JetError> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Jet) -> Result<Jet, JetError> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, c: f64) -> Jet {
        Jet {
            anchor: self.anchor,
            coeffs: self.coeffs.iter().map(|a| a * c).collect(),
        }
    }

    /// `self + c * other`, truncated to the common order.
    pub fn add_scaled(&self, other: &Jet, c: f64) -> Result<Jet, JetError> {
        self.zip_with(other, |a, b| a + c * b)
    }

    pub fn negate(&self) -> Jet {
        self.scale(-1.0)
    }

    /// Product via the general Leibniz rule.
    pub fn mul(&self, other: &Jet) -> Result<Jet, JetError> {
        self.check_anchor(other)?;
        let order = self.order().min(other.order());
        let coeffs = (0..=order)
            .map(|m| {
                (0..=m)
                    .map(|r| binomial(m, r) * self.coeffs[r] * other.coeffs[m - r])
                    .sum()
            })
            .collect();
        Ok(Jet {
            anchor: self.anchor,
            coeffs,
        })
    }

    /// Quotient `q` with `q * divisor = self`, solved order by order.
    ///
    /// Fails when the divisor's leading coefficient is below
    /// [`SINGULAR_FLOOR`] times its largest coefficient magnitude.
    pub fn div(&self, divisor: &Jet) -> Result<Jet, JetError> {
        self.check_anchor(divisor)?;
        let scale = divisor.coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        let floor = SINGULAR_FLOOR * scale;
        let leading = divisor.coeffs[0];
        if leading == 0.0 || leading.abs() < floor {
            return Err(JetError::DivisionBySingular { leading, floor });
        }
        Ok(self.div_unguarded(divisor))
    }

    /// Quotient without the singularity guard; the caller ensures a nonzero
    /// leading coefficient.
    pub(crate) fn div_unguarded(&self, divisor: &Jet) -> Jet {
        let order = self.order().min(divisor.order());
        let b = &divisor.coeffs;
        let mut q: Vec<f64> = Vec::with_capacity(order + 1);
        for m in 0..=order {
            let mut acc = self.coeffs[m];
            for r in 1..=m {
                acc -= binomial(m, r) * b[r] * q[m - r];
            }
            q.push(acc / b[0]);
        }
        Jet {
            anchor: self.anchor,
            coeffs: q,
        }
    }

    /// Jet of `x -> integral_value + ∫ g` where `self` is the jet of `g`:
    /// the first derivative of the antiderivative is `g` itself.
    pub fn antiderivative_shift(&self, integral_value: f64) -> Jet {
        let mut coeffs = Vec::with_capacity(self.coeffs.len() + 1);
        coeffs.push(integral_value);
        coeffs.extend_from_slice(&self.coeffs);
        Jet {
            anchor: self.anchor,
            coeffs,
        }
    }

    /// `∫_{anchor - d}^{anchor} f(t) dt` from the Taylor expansion at the anchor.
    pub fn integrate_back(&self, d: f64) -> f64 {
        // (-1)^i d^(i+1) / (i+1)! per term
        let mut sum = 0.0;
        let mut factor = d;
        for (i, c) in self.coeffs.iter().enumerate() {
            sum += c * factor;
            factor *= -d / (i + 2) as f64;
        }
        sum
    }

    /// Taylor polynomial evaluated at `anchor + h`.
    pub fn taylor_eval(&self, h: f64) -> f64 {
        let mut sum = 0.0;
        let mut factor = 1.0;
        for (i, c) in self.coeffs.iter().enumerate() {
            sum += c * factor;
            factor *= h / (i + 1) as f64;
        }
        sum
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn jet(coeffs: &[f64]) -> Jet {
        Jet::new(0.0, coeffs.to_vec())
    }

    #[test]
    fn linear_ops() {
        assert_eq!(jet(&[1.0, 2.0]).add(&jet(&[3.0, 4.0])).unwrap().coeffs(), &[4.0, 6.0]);
        assert_eq!(jet(&[1.0, 0.0, 5.0]).scale(-1.0).coeffs(), &[-1.0, 0.0, -5.0]);
        assert_eq!(jet(&[2.0, 2.0]).sub(&jet(&[2.0, 2.0])).unwrap().coeffs(), &[0.0, 0.0]);
    }

    #[test]
    fn mixed_orders_truncate_to_shorter() {
        let s = jet(&[1.0, 1.0, 1.0]).add(&jet(&[1.0])).unwrap();
        assert_eq!(s.order(), 0);
        let p = jet(&[1.0, 1.0, 1.0]).mul(&jet(&[2.0, 3.0])).unwrap();
        assert_eq!(p.order(), 1);
    }

    #[test]
    fn anchor_mismatch() {
        let a = Jet::new(0.0, vec![1.0]);
        let b = Jet::new(1.0, vec![1.0]);
        assert!(matches!(a.add(&b), Err(JetError::AnchorMismatch { .. })));
        assert!(matches!(a.mul(&b), Err(JetError::AnchorMismatch { .. })));
        assert!(matches!(a.div(&b), Err(JetError::AnchorMismatch { .. })));
    }

    #[test]
    fn product_rule() {
        let x = Jet::variable(1.0, 1);
        assert_eq!(x.mul(&x).unwrap().coeffs(), &[1.0, 2.0]);

        let c = Jet::constant(0.0, 3.0, 3);
        let j = jet(&[1.0, -2.0, 0.5, 7.0]);
        assert_eq!(c.mul(&j).unwrap(), j.scale(3.0));

        let e = jet(&[1.0, 1.0, 1.0, 1.0]);
        assert_eq!(e.mul(&e).unwrap().coeffs(), &[1.0, 2.0, 4.0, 8.0]);
    }

    #[test]
    fn quotient() {
        let j = jet(&[2.0, -1.0, 3.0]);
        assert_eq!(j.div(&j).unwrap().coeffs(), &[1.0, 0.0, 0.0]);
        let q = jet(&[1.0, 0.0, 0.0]).div(&jet(&[1.0, 1.0, 1.0])).unwrap();
        assert_eq!(q.coeffs(), &[1.0, -1.0, 1.0]);
        assert!(matches!(
            jet(&[1.0, 1.0]).div(&jet(&[0.0, 1.0])),
            Err(JetError::DivisionBySingular { .. })
        ));
        // tiny relative to the rest of the divisor
        assert!(jet(&[1.0, 1.0]).div(&jet(&[1e-15, 1.0])).is_err());
    }

    #[test]
    fn antiderivative() {
        let g = Jet::new(1.5, vec![1.0, 0.0]);
        assert_eq!(g.antiderivative_shift(0.5).coeffs(), &[0.5, 1.0, 0.0]);
        let t = Jet::variable(0.0, 1);
        assert_eq!(t.antiderivative_shift(0.0).coeffs(), &[0.0, 0.0, 1.0]);
        let neg = Jet::new(1.0, vec![-1.0, -1.0]);
        assert_eq!(neg.antiderivative_shift(-0.5).coeffs(), &[-0.5, -1.0, -1.0]);
    }

    #[test]
    fn backward_integration_of_polynomial_is_exact() {
        // t^2 at anchor 1: ∫_0^1 t^2 = 1/3
        let g = Jet::new(1.0, vec![1.0, 2.0, 2.0, 0.0]);
        assert!((g.integrate_back(1.0) - 1.0 / 3.0).abs() < 1e-15);
        assert!((g.taylor_eval(-1.0)).abs() < 1e-15);
    }

    #[test]
    fn large_binomials() {
        assert_eq!(binomial(10, 3), 120.0);
        assert_eq!(binomial(4, 7), 0.0);
        let direct = binomial(200, 3);
        assert!((direct - 1_313_400.0).abs() < 1e-6);
    }

    fn arb_jet(order: usize) -> impl Strategy<Value = Jet> {
        proptest::collection::vec(-3.0f64..3.0, order + 1).prop_map(|c| Jet::new(0.25, c))
    }

    fn close(a: &Jet, b: &Jet, rel: f64) -> bool {
        a.coeffs().iter().zip(b.coeffs()).all(|(x, y)| {
            let scale = x.abs().max(y.abs()).max(1.0);
            (x - y).abs() <= rel * scale
        })
    }

    proptest! {
        #[test]
        fn mul_commutes_and_associates(a in arb_jet(5), b in arb_jet(5), c in arb_jet(5)) {
            prop_assert!(close(&a.mul(&b).unwrap(), &b.mul(&a).unwrap(), 1e-14));
            let left = a.mul(&b).unwrap().mul(&c).unwrap();
            let right = a.mul(&b.mul(&c).unwrap()).unwrap();
            // magnitudes grow with binomial weights
            let scale = left.coeffs().iter().fold(1.0f64, |m, v| m.max(v.abs()));
            prop_assert!(close(&left.scale(1.0 / scale), &right.scale(1.0 / scale), 1e-13));
        }

        #[test]
        fn div_inverts_mul(a in arb_jet(6), mut b in arb_jet(6), lead in 1e-6f64..2.0) {
            b = Jet::new(b.anchor(), std::iter::once(lead).chain(b.coeffs()[1..].iter().copied()).collect());
            if let Ok(q) = a.div(&b) {
                let back = q.mul(&b).unwrap();
                let scale = q.coeffs().iter().fold(1.0f64, |m, v| m.max(v.abs()))
                    * b.coeffs().iter().fold(1.0f64, |m, v| m.max(v.abs()));
                for (x, y) in back.coeffs().iter().zip(a.coeffs()) {
                    prop_assert!((x - y).abs() <= 1e-12 * scale.max(1.0));
                }
            }
        }

        #[test]
        fn shift_then_derivative_is_identity(g in arb_jet(4), v in -5.0f64..5.0) {
            prop_assert_eq!(g.antiderivative_shift(v).formal_derivative(), g);
        }
    }
}
