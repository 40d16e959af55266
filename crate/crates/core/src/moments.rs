//! Moments, the exact temperature law and the moment evolution identity.

use crate::error::{Error, Result};
use crate::geometry::{Density, TemperatureTensor};
use crate::linalg::{norm_sq, SymMat};

/// Value of `m_ℓ = ∫ |v|^ℓ f`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentReport {
    pub order: f64,
    pub value: f64,
}

/// `∫ v⊗v f` by quadrature.
pub fn temperature_tensor(f: &Density) -> TemperatureTensor {
    *f.temperature()
}

/// `T(t) = e^{-4dt}(T0 − Id) + Id`.
pub fn exact_temperature(t0: &TemperatureTensor, t: f64, d: usize) -> Result<TemperatureTensor> {
    if t < 0.0 {
        return Err(Error::NegativeTime(t));
    }
    if t0.dim() != d {
        return Err(Error::InvalidInput(format!("tensor of dimension {} used with d = {d}", t0.dim())));
    }
    if !t0.is_normalized() {
        return Err(Error::NotNormalized(t0.trace()));
    }
    let decay = (-4.0 * d as f64 * t).exp();
    let m = t0.deviation().scale(decay).add(&SymMat::identity(d));
    Ok(TemperatureTensor::new(m))
}

pub fn moment(f: &Density, order: f64) -> Result<MomentReport> {
    if !(order >= 0.0) || !order.is_finite() {
        return Err(Error::MomentOrder(order));
    }
    let vals = f.values();
    let half = order / 2.0;
    let value = f.grid().integrate(|i, v| norm_sq(v).powf(half) * vals[i]);
    Ok(MomentReport { order, value })
}

/// Right-hand side of
/// `dm_ℓ/dt = −ℓ(d−1) m_ℓ + dℓ(ℓ+d−3) m_{ℓ−2} − ℓ(ℓ−2) ∫ f T:(v⊗v) |v|^{ℓ−4}`.
pub fn moment_rhs(f: &Density, order: f64, t: &TemperatureTensor) -> Result<f64> {
    if !(order >= 2.0) || !order.is_finite() {
        return Err(Error::MomentOrder(order));
    }
    let d = f.dim();
    let df = d as f64;
    let l = order;
    let m_l = moment(f, l)?.value;
    let m_lm2 = moment(f, l - 2.0)?.value;
    let mut rhs = -l * (df - 1.0) * m_l + df * l * (l + df - 3.0) * m_lm2;
    if l > 2.0 {
        rhs -= l * (l - 2.0) * tensor_weighted_moment(f, l, t.matrix());
    }
    Ok(rhs)
}

/// `∫ f T:(v⊗v) |v|^{ℓ−4}` for `ℓ > 2`, with the origin cell averaged over a
/// `2^d`-point sub-quadrature when the integrand is singular there.
fn tensor_weighted_moment(f: &Density, l: f64, tm: &SymMat) -> f64 {
    let grid = f.grid();
    let vals = f.values();
    let origin = grid.origin();
    let expo = (l - 4.0) / 2.0;
    let origin_value = if l < 4.0 {
        let d = grid.dim();
        let q = grid.spacing() / 4.0;
        let corners = 1usize << d;
        let mut acc = 0.0;
        for c in 0..corners {
            let mut s = [0.0; 3];
            for (a, x) in s.iter_mut().enumerate().take(d) {
                *x = if (c >> a) & 1 == 1 { q } else { -q };
            }
            acc += tm.quad(&s) * norm_sq(&s).powf(expo);
        }
        acc / corners as f64
    } else {
        0.0
    };
    grid.integrate(|i, v| {
        if Some(i) == origin {
            origin_value * vals[i]
        } else {
            tm.quad(v) * norm_sq(v).powf(expo) * vals[i]
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_grid;
    use std::sync::Arc;

    #[test]
    fn exact_temperature_examples() {
        let t0 = TemperatureTensor::from_diag(&[1.5, 0.5]);
        assert_eq!(exact_temperature(&t0, 0.0, 2).unwrap().diag(), vec![1.5, 0.5]);
        let t = exact_temperature(&t0, 2f64.ln() / 8.0, 2).unwrap();
        assert!((t.diag()[0] - 1.25).abs() < 1e-15 && (t.diag()[1] - 0.75).abs() < 1e-15);
        let t = exact_temperature(&t0, 1e3, 2).unwrap();
        assert!(t.deviation().frobenius_sq().sqrt() < 1e-12);
        assert!(exact_temperature(&t0, -1.0, 2).is_err());
        assert!(exact_temperature(&TemperatureTensor::from_diag(&[1.0, 0.5]), 0.0, 2).is_err());
    }

    #[test]
    fn maxwellian_fourth_moment_is_stationary() {
        let g = Arc::new(build_grid(3, 7.0, 41).unwrap());
        let m = Density::maxwellian(g).unwrap();
        let t = TemperatureTensor::from_diag(&[1.0, 1.0, 1.0]);
        assert!(moment_rhs(&m, 4.0, &t).unwrap().abs() < 1e-4);
        assert!(moment_rhs(&m, 2.0, &t).unwrap().abs() < 1e-6);
        assert!(moment_rhs(&m, 1.5, &t).is_err());
    }

    #[test]
    fn fractional_order_converges_at_second_order() {
        // for a radial f and T = Id the right-hand side vanishes at the
        // Maxwellian for every ℓ; the grid value converges to zero like h²
        let err = |n: usize| {
            let g = Arc::new(build_grid(2, 6.0, n).unwrap());
            let m = Density::maxwellian(g).unwrap();
            let t = TemperatureTensor::from_diag(&[1.0, 1.0]);
            moment_rhs(&m, 3.0, &t).unwrap().abs()
        };
        let (coarse, fine) = (err(61), err(121));
        assert!(coarse < 1e-2, "{coarse}");
        assert!(coarse / fine > 3.0, "{coarse} {fine}");
    }
}
