//! Closed-form inverses and helpers for the tiny fixed-size matrices that
//! appear in the Fisher computations (2×2 and 4×4 real, 3×3 complex).
//!
//! Every inverse is computed through the adjugate. A relative determinant
//! guard rejects numerically singular inputs, and [`CONDITION_LIMIT`] bounds
//! the Frobenius condition number of the result.

use crate::{Error, Result, C64};

/// Real 2×2 matrix, row-major.
pub type Mat2 = [[f64; 2]; 2];
/// Real 4×4 matrix, row-major.
pub type Mat4 = [[f64; 4]; 4];
/// Complex 3×3 matrix, row-major.
pub type CMat3 = [[C64; 3]; 3];

/// Relative magnitude below which a determinant is treated as zero.
pub const PIVOT_GUARD: f64 = 1e-14;
/// Largest accepted Frobenius condition number `‖A‖_F·‖A⁻¹‖_F`.
pub const CONDITION_LIMIT: f64 = 1e12;

fn frob<const N: usize>(m: &[[f64; N]; N]) -> f64 {
    libm::sqrt(m.iter().flatten().map(|v| v * v).sum())
}

fn max_abs<const N: usize>(m: &[[f64; N]; N]) -> f64 {
    m.iter().flatten().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

fn check_condition<const N: usize>(m: &[[f64; N]; N], inv: &[[f64; N]; N]) -> Result<()> {
    let kappa = frob(m) * frob(inv);
    if !kappa.is_finite() || kappa > CONDITION_LIMIT {
        return Err(Error::SingularFisher);
    }
    Ok(())
}

/// Inverse of a real 2×2 matrix.
///
/// # Errors
/// [`Error::SingularFisher`] when the determinant is negligible relative to the
/// entry scale or the result is too ill-conditioned.
pub fn inv2(m: &Mat2) -> Result<Mat2> {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let scale = max_abs(m);
    if !det.is_finite() || scale == 0.0 || det.abs() <= PIVOT_GUARD * scale * scale {
        return Err(Error::SingularFisher);
    }
    let inv = [[m[1][1] / det, -m[0][1] / det], [-m[1][0] / det, m[0][0] / det]];
    check_condition(m, &inv)?;
    Ok(inv)
}

/// Inverse of a real 4×4 matrix via the adjugate (2×2 minor expansion).
///
/// # Errors
/// [`Error::SingularFisher`] as for [`inv2`].
pub fn inv4(m: &Mat4) -> Result<Mat4> {
    let a = m;
    // 2×2 minors of the top two rows and bottom two rows.
    let s0 = a[0][0] * a[1][1] - a[1][0] * a[0][1];
    let s1 = a[0][0] * a[1][2] - a[1][0] * a[0][2];
    let s2 = a[0][0] * a[1][3] - a[1][0] * a[0][3];
    let s3 = a[0][1] * a[1][2] - a[1][1] * a[0][2];
    let s4 = a[0][1] * a[1][3] - a[1][1] * a[0][3];
    let s5 = a[0][2] * a[1][3] - a[1][2] * a[0][3];
    let c5 = a[2][2] * a[3][3] - a[3][2] * a[2][3];
    let c4 = a[2][1] * a[3][3] - a[3][1] * a[2][3];
    let c3 = a[2][1] * a[3][2] - a[3][1] * a[2][2];
    let c2 = a[2][0] * a[3][3] - a[3][0] * a[2][3];
    let c1 = a[2][0] * a[3][2] - a[3][0] * a[2][2];
    let c0 = a[2][0] * a[3][1] - a[3][0] * a[2][1];
    let det = s0 * c5 - s1 * c4 + s2 * c3 + s3 * c2 - s4 * c1 + s5 * c0;
    let scale = max_abs(m);
    if !det.is_finite() || scale == 0.0 || det.abs() <= PIVOT_GUARD * (scale * scale) * (scale * scale) {
        return Err(Error::SingularFisher);
    }
    let d = 1.0 / det;
    let inv = [
        [
            (a[1][1] * c5 - a[1][2] * c4 + a[1][3] * c3) * d,
            (-a[0][1] * c5 + a[0][2] * c4 - a[0][3] * c3) * d,
            (a[3][1] * s5 - a[3][2] * s4 + a[3][3] * s3) * d,
            (-a[2][1] * s5 + a[2][2] * s4 - a[2][3] * s3) * d,
        ],
        [
            (-a[1][0] * c5 + a[1][2] * c2 - a[1][3] * c1) * d,
            (a[0][0] * c5 - a[0][2] * c2 + a[0][3] * c1) * d,
            (-a[3][0] * s5 + a[3][2] * s2 - a[3][3] * s1) * d,
            (a[2][0] * s5 - a[2][2] * s2 + a[2][3] * s1) * d,
        ],
        [
            (a[1][0] * c4 - a[1][1] * c2 + a[1][3] * c0) * d,
            (-a[0][0] * c4 + a[0][1] * c2 - a[0][3] * c0) * d,
            (a[3][0] * s4 - a[3][1] * s2 + a[3][3] * s0) * d,
            (-a[2][0] * s4 + a[2][1] * s2 - a[2][3] * s0) * d,
        ],
        [
            (-a[1][0] * c3 + a[1][1] * c1 - a[1][2] * c0) * d,
            (a[0][0] * c3 - a[0][1] * c1 + a[0][2] * c0) * d,
            (-a[3][0] * s3 + a[3][1] * s1 - a[3][2] * s0) * d,
            (a[2][0] * s3 - a[2][1] * s1 + a[2][2] * s0) * d,
        ],
    ];
    check_condition(m, &inv)?;
    Ok(inv)
}

/// Determinant of a complex 3×3 matrix.
#[must_use]
pub fn det3(m: &CMat3) -> C64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Inverse of a complex 3×3 matrix via the adjugate.
///
/// # Errors
/// [`Error::SingularFisher`] when the determinant is negligible.
pub fn inv3(m: &CMat3) -> Result<CMat3> {
    let det = det3(m);
    let scale = m.iter().flatten().fold(0.0_f64, |acc, v| acc.max(v.norm()));
    if !det.is_finite() || scale == 0.0 || det.norm() <= PIVOT_GUARD * scale * scale * scale {
        return Err(Error::SingularFisher);
    }
    let mut inv = [[C64::new(0.0, 0.0); 3]; 3];
    for (i, row) in inv.iter_mut().enumerate() {
        for (j, out) in row.iter_mut().enumerate() {
            // Cofactor of (j, i) gives the adjugate entry (i, j).
            let r: [usize; 2] = match j {
                0 => [1, 2],
                1 => [0, 2],
                _ => [0, 1],
            };
            let c: [usize; 2] = match i {
                0 => [1, 2],
                1 => [0, 2],
                _ => [0, 1],
            };
            let minor = m[r[0]][c[0]] * m[r[1]][c[1]] - m[r[0]][c[1]] * m[r[1]][c[0]];
            let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
            *out = minor * sign / det;
        }
    }
    Ok(inv)
}

/// Product of two complex 3×3 matrices.
#[must_use]
pub fn mul3(a: &CMat3, b: &CMat3) -> CMat3 {
    let mut out = [[C64::new(0.0, 0.0); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

/// Trace of a complex 3×3 matrix.
#[must_use]
pub fn trace3(a: &CMat3) -> C64 {
    a[0][0] + a[1][1] + a[2][2]
}

/// Outer product `u vᴴ` of two complex 3-vectors.
#[must_use]
pub fn outer3(u: &[C64; 3], v: &[C64; 3]) -> CMat3 {
    let mut out = [[C64::new(0.0, 0.0); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = u[i] * v[j].conj();
        }
    }
    out
}

/// Hermitian inner product `uᴴ v` of two equal-length complex slices.
#[must_use]
pub fn dotc(u: &[C64], v: &[C64]) -> C64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

/// Real matrix-vector product for a 4×4 matrix.
#[must_use]
pub fn matvec4(m: &Mat4, v: &[f64; 4]) -> [f64; 4] {
    core::array::from_fn(|i| (0..4).map(|j| m[i][j] * v[j]).sum())
}

/// Real matrix-vector product for a 2×2 matrix.
#[must_use]
pub fn matvec2(m: &Mat2, v: &[f64; 2]) -> [f64; 2] {
    [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
}

/// Trace of a real square matrix.
#[must_use]
pub fn trace<const N: usize>(m: &[[f64; N]; N]) -> f64 {
    (0..N).map(|i| m[i][i]).sum()
}

/// Frobenius norm of the difference of two real square matrices.
#[must_use]
pub fn frob_diff<const N: usize>(a: &[[f64; N]; N], b: &[[f64; N]; N]) -> f64 {
    let mut s = 0.0;
    for i in 0..N {
        for j in 0..N {
            let d = a[i][j] - b[i][j];
            s += d * d;
        }
    }
    libm::sqrt(s)
}

/// Frobenius norm of a real square matrix.
#[must_use]
pub fn frob_norm<const N: usize>(a: &[[f64; N]; N]) -> f64 {
    frob(a)
}
