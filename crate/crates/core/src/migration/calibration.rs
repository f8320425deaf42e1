//! Per-period transition matrices from annual ones: solve `P^m = P_year`.
//!
//! The principal `m`-th root is `exp(log(A) / m)`. The logarithm uses
//! inverse scaling and squaring: repeated Denman-Beavers square roots bring
//! `A` close to the identity, where the `atanh` series for `log` converges
//! in a few terms. This covers diagonalizable, defective and complex-pair
//! spectra alike; only eigenvalues on the closed negative real axis have no
//! principal root and are rejected. The root is then projected onto the
//! admissible set: negatives clipped, entries outside the migration pattern
//! zeroed, rows renormalized.

use nalgebra::DMatrix;

use super::{MigrationError, MigrationPattern, RatingTransitionMatrix, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub matrix: RatingTransitionMatrix,
    /// `max |P^m - A|` over entries, after projection.
    pub reconstruction_error: f64,
    /// Total mass moved by the projection step, summed over rows.
    pub projection_adjustment: f64,
}

const MAX_SQRT_STEPS: usize = 64;
const MAX_DB_ITERATIONS: usize = 100;

fn norm1(m: &DMatrix<f64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn to_dmatrix(m: &RatingTransitionMatrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.size(), m.size(), m.entries())
}

fn inverse(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    m.clone().try_inverse().ok_or_else(|| {
        MigrationError::Calibration("singular matrix encountered while taking a root".into())
    })
}

/// Principal square root by the Denman-Beavers iteration.
fn sqrtm(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let mut y = a.clone();
    let mut z = DMatrix::<f64>::identity(n, n);
    for _ in 0..MAX_DB_ITERATIONS {
        let y_inv = inverse(&y)?;
        let z_inv = inverse(&z)?;
        let y_next = (&y + z_inv) * 0.5;
        let z_next = (&z + y_inv) * 0.5;
        let change = norm1(&(&y_next - &y));
        y = y_next;
        z = z_next;
        if change <= 1e-15 * norm1(&y) {
            return Ok(y);
        }
    }
    Err(MigrationError::Calibration(
        "square-root iteration did not converge".into(),
    ))
}

/// `log(X)` for `X` near the identity via `2 atanh((X - I)(X + I)^-1)`.
fn log_near_identity(x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = x.nrows();
    let id = DMatrix::<f64>::identity(n, n);
    let z = (x - &id) * inverse(&(x + &id))?;
    let z2 = &z * &z;
    let mut power = z.clone();
    let mut sum = z;
    for k in 1..200 {
        power = &power * &z2;
        let term = &power / (2 * k + 1) as f64;
        let size = norm1(&term);
        sum += term;
        if size < 1e-18 {
            break;
        }
    }
    Ok(sum * 2.0)
}

fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let norm = norm1(a);
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scaled = a / 2f64.powi(squarings as i32);
    let mut term = DMatrix::<f64>::identity(n, n);
    let mut sum = term.clone();
    for k in 1..40 {
        term = &term * &scaled / k as f64;
        let size = norm1(&term);
        sum += &term;
        if size < 1e-18 {
            break;
        }
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

fn principal_root(a: &DMatrix<f64>, m: u32) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    for ev in a.complex_eigenvalues().iter() {
        if ev.re <= 0.0 && ev.im.abs() <= 1e-12 * ev.norm().max(1.0) {
            return Err(MigrationError::Calibration(format!(
                "eigenvalue {ev} lies on the closed negative real axis; no principal root"
            )));
        }
    }
    let id = DMatrix::<f64>::identity(n, n);
    let mut x = a.clone();
    let mut steps = 0u32;
    while norm1(&(&x - &id)) > 0.25 {
        if steps as usize >= MAX_SQRT_STEPS {
            return Err(MigrationError::Calibration(
                "matrix does not approach the identity under square roots".into(),
            ));
        }
        x = sqrtm(&x)?;
        steps += 1;
    }
    let log_a = log_near_identity(&x)? * 2f64.powi(steps as i32);
    Ok(expm(&(log_a / m as f64)))
}

/// `m`-th power by repeated squaring.
pub fn matrix_power(p: &RatingTransitionMatrix, m: u32) -> Vec<f64> {
    let n = p.size();
    let mut result = DMatrix::<f64>::identity(n, n);
    let mut base = to_dmatrix(p);
    let mut e = m;
    while e > 0 {
        if e & 1 == 1 {
            result = &result * &base;
        }
        base = &base * &base;
        e >>= 1;
    }
    // row-major, matching RatingTransitionMatrix::entries
    result.transpose().as_slice().to_vec()
}

/// `P^m` as a transition matrix; rounding drift in each row is folded into
/// the diagonal.
pub fn compound(p: &RatingTransitionMatrix, m: u32) -> Result<RatingTransitionMatrix> {
    let n = p.size();
    let mut entries = matrix_power(p, m);
    for (r, row) in entries.chunks_mut(n).enumerate() {
        for x in row.iter_mut() {
            *x = x.max(0.0);
        }
        let off: f64 = row.iter().enumerate().filter(|(c, _)| *c != r).map(|(_, x)| *x).sum();
        row[r] = 1.0 - off;
    }
    RatingTransitionMatrix::new(n, entries)
}

/// Solves `P^m = annual` for a per-period matrix `P` obeying `pattern`.
pub fn calibrate_daily(
    annual: &RatingTransitionMatrix,
    m: u32,
    pattern: &MigrationPattern,
) -> Result<Calibration> {
    if m == 0 {
        return Err(MigrationError::Calibration("m must be at least 1".into()));
    }
    if pattern.size != annual.size() {
        return Err(MigrationError::Calibration(format!(
            "pattern size {} does not match matrix size {}",
            pattern.size,
            annual.size()
        )));
    }
    let n = annual.size();
    let a = to_dmatrix(annual);
    let root = principal_root(&a, m)?;

    let mut entries = vec![0.0; n * n];
    let mut adjustment = 0.0;
    for r in 0..n {
        let from = (r + 1) as u8;
        let row = &mut entries[r * n..(r + 1) * n];
        for c in 0..n {
            let to = (c + 1) as u8;
            let raw = root[(r, c)];
            let kept = if pattern.allows(from, to) { raw.max(0.0) } else { 0.0 };
            adjustment += (raw - kept).abs();
            row[c] = kept;
        }
        let sum: f64 = row.iter().sum();
        if sum <= 0.0 {
            let raw_row: Vec<f64> = (0..n).map(|c| root[(r, c)]).collect();
            return Err(MigrationError::Calibration(format!(
                "row {from} vanished after projection; raw root row {raw_row:?}"
            )));
        }
        for p in row.iter_mut() {
            *p /= sum;
        }
        // the diagonal absorbs rounding so the row sums to one exactly
        let off: f64 = row
            .iter()
            .enumerate()
            .filter(|(c, _)| *c != r)
            .map(|(_, p)| *p)
            .sum();
        row[r] = 1.0 - off;
    }
    let matrix = RatingTransitionMatrix::new(n, entries)?;
    let power = matrix_power(&matrix, m);
    let reconstruction_error = power
        .iter()
        .zip(annual.entries())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    Ok(Calibration {
        matrix,
        reconstruction_error,
        projection_adjustment: adjustment,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::migration::MatrixFamily;

    #[test]
    fn identity_root_is_identity() {
        let id = RatingTransitionMatrix::identity(8).unwrap();
        let cal = calibrate_daily(&id, 252, &MigrationPattern::standard(8)).unwrap();
        assert!(cal.matrix.sup_distance(&id) < 1e-15);
        assert!(cal.reconstruction_error < 1e-15);
    }

    #[test]
    fn default_row_stays_absorbing() {
        let pattern = MigrationPattern::standard(8);
        let daily = MatrixFamily::default().build(&pattern).unwrap();
        let annual = compound(&daily, 252).unwrap();
        let cal = calibrate_daily(&annual, 252, &pattern).unwrap();
        assert_eq!(cal.matrix.row(8), &[0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        assert!(cal.matrix.sup_distance(&daily) < 1e-10);
    }

    #[test]
    fn rejects_matrix_without_principal_root() {
        // eigenvalue -0.6 on the negative real axis
        let a = RatingTransitionMatrix::from_rows(vec![
            vec![0.2, 0.8, 0.0],
            vec![0.8, 0.2, 0.0],
            vec![0.0, 0.0, 1.0],
        ])
        .unwrap();
        let pattern = MigrationPattern {
            size: 3,
            default_sources: vec![],
            jump_triggers: vec![],
        };
        assert!(matches!(
            calibrate_daily(&a, 2, &pattern),
            Err(MigrationError::Calibration(_))
        ));
    }

    #[test]
    fn m_equal_one_projects_only() {
        let pattern = MigrationPattern::standard(4);
        let a = RatingTransitionMatrix::from_rows(vec![
            vec![0.9, 0.1, 0.0, 0.0],
            vec![0.1, 0.8, 0.1, 0.0],
            vec![0.0, 0.1, 0.8, 0.1],
            vec![0.0, 0.0, 0.0, 1.0],
        ])
        .unwrap();
        let cal = calibrate_daily(&a, 1, &pattern).unwrap();
        assert!(cal.matrix.sup_distance(&a) < 1e-13);
    }
}
