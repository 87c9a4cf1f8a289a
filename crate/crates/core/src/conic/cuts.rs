//! Affine bounds on `x ↦ log₂(offset + x)`.

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use super::ConicError;

/// Affine function `slope·x + intercept` together with the interval on
/// which it is a valid bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TangentCut {
    pub anchor: f64,
    pub slope: f64,
    pub intercept: f64,
    pub domain_lo: f64,
    pub domain_hi: f64,
}

impl TangentCut {
    pub fn eval(&self, x: f64) -> f64 {
        self.slope * x + self.intercept
    }

    pub fn covers(&self, x: f64) -> bool {
        x >= self.domain_lo && x <= self.domain_hi
    }
}

fn log2_shifted(offset: f64, x: f64) -> f64 {
    (offset + x).log2()
}

fn sorted_anchors(anchors: &[f64], offset: f64) -> Result<Vec<f64>, ConicError> {
    let mut a: Vec<f64> = anchors.to_vec();
    for &x in &a {
        if !x.is_finite() || x <= -offset + 1e-9 {
            return Err(ConicError::InvalidAnchor(x));
        }
    }
    a.sort_by(f64::total_cmp);
    a.dedup_by(|x, y| (*x - *y).abs() <= 1e-12 * (1.0 + y.abs()));
    Ok(a)
}

/// First-order expansions of `log₂(offset + x)` at each anchor.
///
/// The function is concave, so every cut lies on or above it over the whole
/// domain `x > -offset`; the pointwise minimum of the cuts is an upper bound.
pub fn log_tangent_cuts(anchors: &[f64], offset: f64) -> Result<Vec<TangentCut>, ConicError> {
    let a = sorted_anchors(anchors, offset)?;
    Ok(a.into_iter()
        .map(|x0| {
            let slope = 1.0 / ((offset + x0) * core::f64::consts::LN_2);
            TangentCut {
                anchor: x0,
                slope,
                intercept: log2_shifted(offset, x0) - slope * x0,
                domain_lo: -offset,
                domain_hi: f64::INFINITY,
            }
        })
        .collect())
}

/// Secants of `log₂(offset + x)` between consecutive anchors plus a flat cap
/// at the largest anchor.
///
/// For `x` at or above the smallest anchor the minimum over all returned
/// cuts never exceeds the function, so `t ≤ cut(x)` for every cut is a
/// conservative replacement of `t ≤ log₂(offset + x)` on that range.
/// Each cut's own domain is the interval where it alone is a minorant.
pub fn log_secant_cuts(anchors: &[f64], offset: f64) -> Result<Vec<TangentCut>, ConicError> {
    let a = sorted_anchors(anchors, offset)?;
    let Some(&top) = a.last() else {
        return Err(ConicError::InvalidAnchor(f64::NAN));
    };
    let mut cuts = Vec::with_capacity(a.len());
    for w in a.windows(2) {
        let (x0, x1) = (w[0], w[1]);
        let (f0, f1) = (log2_shifted(offset, x0), log2_shifted(offset, x1));
        let slope = (f1 - f0) / (x1 - x0);
        cuts.push(TangentCut {
            anchor: x0,
            slope,
            intercept: f0 - slope * x0,
            domain_lo: x0,
            domain_hi: x1,
        });
    }
    cuts.push(TangentCut {
        anchor: top,
        slope: 0.0,
        intercept: log2_shifted(offset, top),
        domain_lo: top,
        domain_hi: f64::INFINITY,
    });
    Ok(cuts)
}

/// Pointwise minimum over a cut family.
pub fn min_of_cuts(cuts: &[TangentCut], x: f64) -> f64 {
    cuts.iter().map(|c| c.eval(x)).fold(f64::INFINITY, f64::min)
}
