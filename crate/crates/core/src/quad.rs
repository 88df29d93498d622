//! Composite Simpson quadrature on uniform and sinh-mapped axes.

use crate::field::Axis;
use crate::{Error, Result};

/// Composite Simpson rule for samples spaced `h` apart. An odd number of
/// intervals closes with a 3/8 panel; two samples fall back to a trapezoid.
pub fn simpson(values: &[f64], h: f64) -> Result<f64> {
    let n = values.len();
    match n {
        0 | 1 => Err(Error::InvalidGrid("quadrature needs at least two samples")),
        2 => Ok(0.5 * h * (values[0] + values[1])),
        _ => {
            let intervals = n - 1;
            let simpson_end = if intervals.is_multiple_of(2) { n } else { n - 3 };
            let mut s = 0.0;
            if simpson_end >= 3 {
                let v = &values[..simpson_end];
                let mut acc = v[0] + v[v.len() - 1];
                for (i, x) in v.iter().enumerate().take(v.len() - 1).skip(1) {
                    acc += if i % 2 == 1 { 4.0 * x } else { 2.0 * x };
                }
                s += acc * h / 3.0;
            }
            if intervals % 2 == 1 {
                let v = &values[n - 4..];
                s += 3.0 * h / 8.0 * (v[0] + 3.0 * v[1] + 3.0 * v[2] + v[3]);
            }
            Ok(s)
        }
    }
}

/// `int f dx` over the axis, from samples at its nodes.
pub fn integrate(axis: &Axis, values: &[f64]) -> Result<f64> {
    if values.len() != axis.len() {
        return Err(Error::InvalidGrid("sample count does not match the axis"));
    }
    if axis.is_uniform() {
        return simpson(values, axis.step());
    }
    let weighted: alloc::vec::Vec<f64> = values.iter().enumerate().map(|(i, v)| v * axis.jacobian(i)).collect();
    simpson(&weighted, axis.step())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;
    use approx::assert_relative_eq;

    #[test]
    fn exact_for_cubics() {
        for n in [3usize, 4, 5, 8, 11] {
            let h = 2.0 / (n - 1) as f64;
            let v: Vec<f64> = (0..n)
                .map(|i| {
                    let x = -1.0 + i as f64 * h;
                    x * x * x + 3.0 * x * x - x + 1.0
                })
                .collect();
            assert_relative_eq!(simpson(&v, h).unwrap(), 4.0, max_relative = 1e-13);
        }
        assert_eq!(simpson(&[1.0, 3.0], 2.0).unwrap(), 4.0);
        assert!(simpson(&[1.0], 1.0).is_err());
    }

    #[test]
    fn sinh_axis_integrates_sech_squared() {
        let axis = Axis::sinh(0.0, 2.0, -200.0, 200.0, 801).unwrap();
        let v: Vec<f64> = axis
            .nodes()
            .iter()
            .map(|&x| {
                let s = 1.0 / libm::cosh(x);
                s * s
            })
            .collect();
        assert_relative_eq!(integrate(&axis, &v).unwrap(), 2.0, max_relative = 1e-10);
    }
}
