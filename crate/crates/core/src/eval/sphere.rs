//! Least-squares sphere fitting.
//!
//! Two stages: the algebraic fit (residual on x^2+y^2+z^2, linear in the
//! center and in r^2 - |c|^2, one 4x4 solve) gives a closed-form start, and
//! Gauss-Newton on the geometric distance residual |p - c| - r polishes it.
//! The algebraic stage alone is biased under noise; the geometric stage
//! alone needs a start. Together they are exact on exact data and unbiased
//! enough for micrometre-level synthetic metrology.

use crate::error::{Error, Result};
use crate::eval::height::Point3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereFit {
    pub center: Point3,
    pub radius: f64,
    /// Root-mean-square geometric residual, mm.
    pub rms_residual: f64,
    pub point_count: usize,
}

const GN_ITERATIONS: usize = 50;
const GN_STEP_TOLERANCE: f64 = 1e-12;

/// Solves `a x = b` for a symmetric positive 4x4 system with partial
/// pivoting. A pivot vanishing relative to the matrix scale signals a
/// degenerate point set.
fn solve4(mut a: [[f64; 4]; 4], mut b: [f64; 4]) -> Result<[f64; 4]> {
    let scale = a
        .iter()
        .flatten()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    for col in 0..4 {
        let pivot = (col..4)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        if a[pivot][col].abs() < 1e-12 * scale {
            return Err(Error::numeric(
                "sphere fit is degenerate: points are coplanar or coincident",
            ));
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..4 {
            let f = a[row][col] / a[col][col];
            for k in col..4 {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0f64; 4];
    for row in (0..4).rev() {
        let mut acc = b[row];
        for k in row + 1..4 {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    Ok(x)
}

/// Algebraic start: minimize sum((2 p . c') + d - |p|^2)^2 over c' and d,
/// where the fitted sphere is |p - c'|^2 = c'.c' - d.
fn algebraic_fit(points: &[Point3]) -> Result<(Point3, f64)> {
    let mut ata = [[0.0f64; 4]; 4];
    let mut atb = [0.0f64; 4];
    for p in points {
        let row = [2.0 * p[0], 2.0 * p[1], 2.0 * p[2], 1.0];
        let rhs = p[0] * p[0] + p[1] * p[1] + p[2] * p[2];
        for i in 0..4 {
            for j in 0..4 {
                ata[i][j] += row[i] * row[j];
            }
            atb[i] += row[i] * rhs;
        }
    }
    let x = solve4(ata, atb)?;
    let center = [x[0], x[1], x[2]];
    let r2 = x[3] + center[0] * center[0] + center[1] * center[1] + center[2] * center[2];
    if !(r2 > 0.0) {
        return Err(Error::numeric("sphere fit produced a non-positive radius"));
    }
    Ok((center, r2.sqrt()))
}

fn rms(points: &[Point3], center: &Point3, radius: f64) -> f64 {
    let sum: f64 = points
        .iter()
        .map(|p| {
            let d = dist(p, center) - radius;
            d * d
        })
        .sum();
    (sum / points.len() as f64).sqrt()
}

fn dist(p: &Point3, c: &Point3) -> f64 {
    ((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2) + (p[2] - c[2]).powi(2)).sqrt()
}

/// Fits a sphere to at least four non-coplanar points.
pub fn fit_sphere(points: &[Point3]) -> Result<SphereFit> {
    if points.len() < 4 {
        return Err(Error::validation(format!(
            "sphere fit needs at least 4 points, got {}",
            points.len()
        )));
    }
    let (mut center, mut radius) = algebraic_fit(points)?;

    // Gauss-Newton on residual_i = |p_i - c| - r; the Jacobian rows are
    // [-(p-c)/|p-c|, -1], assembled directly into normal equations.
    for _ in 0..GN_ITERATIONS {
        let mut jtj = [[0.0f64; 4]; 4];
        let mut jtr = [0.0f64; 4];
        for p in points {
            let d = dist(p, &center);
            if d < 1e-12 {
                continue;
            }
            let j = [
                -(p[0] - center[0]) / d,
                -(p[1] - center[1]) / d,
                -(p[2] - center[2]) / d,
                -1.0,
            ];
            let r = d - radius;
            for i in 0..4 {
                for k in 0..4 {
                    jtj[i][k] += j[i] * j[k];
                }
                jtr[i] += j[i] * r;
            }
        }
        let step = solve4(jtj, jtr)?;
        center[0] -= step[0];
        center[1] -= step[1];
        center[2] -= step[2];
        radius -= step[3];
        if step.iter().map(|s| s * s).sum::<f64>().sqrt() < GN_STEP_TOLERANCE {
            break;
        }
    }
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::numeric("sphere refinement left a non-positive radius"));
    }

    Ok(SphereFit {
        center,
        radius,
        rms_residual: rms(points, &center, radius),
        point_count: points.len(),
    })
}
