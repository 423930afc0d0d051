//! Exact rational evaluation of the eigen-equation defect.
//!
//! Every f64 is a dyadic rational, so `E_i(λ)` and `T E_i(λ) - λ E_i(λ)` can be
//! formed without rounding from the f64 inputs. Only the final components are
//! rounded back to f64.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
struct QComplex {
    re: BigRational,
    im: BigRational,
}

fn rational(x: f64) -> Result<BigRational> {
    BigRational::from_float(x).ok_or_else(|| Error::NumericRange(format!("{x} has no exact rational form")))
}

impl QComplex {
    fn from_c64(z: Complex64) -> Result<Self> {
        Ok(QComplex { re: rational(z.re)?, im: rational(z.im)? })
    }

    fn one() -> Self {
        QComplex { re: BigRational::from_integer(BigInt::from(1)), im: BigRational::zero() }
    }

    fn add(&self, o: &QComplex) -> QComplex {
        QComplex { re: &self.re + &o.re, im: &self.im + &o.im }
    }

    fn sub(&self, o: &QComplex) -> QComplex {
        QComplex { re: &self.re - &o.re, im: &self.im - &o.im }
    }

    fn mul(&self, o: &QComplex) -> QComplex {
        QComplex {
            re: &self.re * &o.re - &self.im * &o.im,
            im: &self.re * &o.im + &self.im * &o.re,
        }
    }

    fn scale(&self, s: &BigRational) -> QComplex {
        QComplex { re: &self.re * s, im: &self.im * s }
    }

    fn to_c64(&self) -> Complex64 {
        Complex64::new(self.re.to_f64().unwrap_or(f64::NAN), self.im.to_f64().unwrap_or(f64::NAN))
    }
}

/// Components of `T E(λ) - λ E(λ)` for one mode, where `E(λ)` has
/// coefficients `Π_{p<n} (λ - μ_p) / w_p` on levels `0..mu.len()`.
pub(crate) fn eigen_defect(mu: &[Complex64], w: &[f64], lambda: Complex64) -> Result<Vec<Complex64>> {
    let levels = mu.len();
    let lam = QComplex::from_c64(lambda)?;
    let mus = mu.iter().map(|m| QComplex::from_c64(*m)).collect::<Result<Vec<_>>>()?;
    let ws = w[..levels].iter().map(|x| rational(*x)).collect::<Result<Vec<_>>>()?;

    let mut coeff = Vec::with_capacity(levels);
    coeff.push(QComplex::one());
    for n in 0..levels - 1 {
        let inv_w = ws[n].recip();
        let next = coeff[n].mul(&lam.sub(&mus[n])).scale(&inv_w);
        coeff.push(next);
    }

    let mut out = Vec::with_capacity(levels);
    for n in 0..levels {
        let mut t = mus[n].mul(&coeff[n]);
        if n + 1 < levels {
            t = t.add(&coeff[n + 1].scale(&ws[n]));
        }
        out.push(t.sub(&lam.mul(&coeff[n])).to_c64());
    }
    Ok(out)
}

/// Overflow- and underflow-safe Euclidean norm.
pub(crate) fn stable_norm<'a>(values: impl IntoIterator<Item = &'a Complex64>) -> f64 {
    let values: Vec<&Complex64> = values.into_iter().collect();
    let peak = values.iter().map(|v| v.re.abs().max(v.im.abs())).fold(0.0, f64::max);
    if peak == 0.0 || !peak.is_finite() {
        return peak;
    }
    let s: f64 = values.iter().map(|v| (v.re / peak).powi(2) + (v.im / peak).powi(2)).sum();
    peak * s.sqrt()
}
