//! Dense symmetric linear algebra backed by `nalgebra`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Eigenpair of a symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub value: f64,
    pub vector: DVector<f64>,
}

/// Flips `v` so that its first nonzero coordinate is positive.
pub fn fix_sign(v: &mut DVector<f64>) {
    if let Some(&first) = v.iter().find(|c| **c != 0.0) {
        if first < 0.0 {
            v.neg_mut();
        }
    }
}

fn check_symmetric(m: &DMatrix<f64>) -> Result<()> {
    if !m.is_square() {
        return Err(Error::invalid(format!(
            "expected a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::numeric("matrix has non-finite entries"));
    }
    Ok(())
}

/// Full eigendecomposition of a symmetric matrix, eigenvalues in decreasing
/// order, eigenvectors normalised with [`fix_sign`].
pub fn symmetric_eigen(m: &DMatrix<f64>) -> Result<Vec<EigenPair>> {
    check_symmetric(m)?;
    let eig = SymmetricEigen::new(m.clone());
    let mut pairs: Vec<EigenPair> = eig
        .eigenvalues
        .iter()
        .zip(eig.eigenvectors.column_iter())
        .map(|(&value, col)| {
            let mut vector = col.into_owned();
            fix_sign(&mut vector);
            EigenPair { value, vector }
        })
        .collect();
    pairs.sort_by(|a, b| b.value.total_cmp(&a.value));
    Ok(pairs)
}

/// Eigenpair whose eigenvalue has the largest magnitude; its absolute value
/// is the operator norm. Ties prefer the positive eigenvalue.
pub fn leading_eigenpair(m: &DMatrix<f64>) -> Result<EigenPair> {
    let pairs = symmetric_eigen(m)?;
    let mut best: Option<EigenPair> = None;
    for p in pairs {
        if best.as_ref().is_none_or(|b| p.value.abs() > b.value.abs()) {
            best = Some(p);
        }
    }
    best.ok_or_else(|| Error::invalid("empty matrix has no eigenpairs"))
}

/// Operator norm of a symmetric matrix.
pub fn operator_norm(m: &DMatrix<f64>) -> Result<f64> {
    check_symmetric(m)?;
    if m.is_empty() {
        return Ok(0.0);
    }
    Ok(SymmetricEigen::new(m.clone())
        .eigenvalues
        .iter()
        .fold(0.0f64, |acc, v| acc.max(v.abs())))
}

/// Solution of a symmetric positive-definite system.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdSolve {
    pub solution: DMatrix<f64>,
    /// Set when the matrix was not numerically positive definite and a ridge
    /// of `1e-12 * trace` was added before factorising.
    pub ridged: bool,
}

/// Solves `g x = b` by Cholesky, falling back to a small ridge.
pub fn solve_spd(g: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<SpdSolve> {
    if let Some(ch) = g.clone().cholesky() {
        return Ok(SpdSolve {
            solution: ch.solve(b),
            ridged: false,
        });
    }
    let ridge = 1e-12 * g.trace().abs().max(f64::MIN_POSITIVE);
    let mut reg = g.clone();
    for i in 0..reg.nrows() {
        reg[(i, i)] += ridge;
    }
    reg.cholesky()
        .map(|ch| SpdSolve {
            solution: ch.solve(b),
            ridged: true,
        })
        .ok_or_else(|| Error::numeric("Gram matrix is not positive definite even after ridge"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_symmetric(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
        let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        (&a + a.transpose()) * 0.5
    }

    #[test]
    fn leading_pair_satisfies_eigen_equation() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in [1, 2, 5, 12] {
            let m = random_symmetric(n, &mut rng);
            let p = leading_eigenpair(&m).unwrap();
            let resid = (&m * &p.vector - &p.vector * p.value).norm();
            assert!(resid <= 1e-8, "residual {resid}");
            assert!((p.vector.norm() - 1.0).abs() < 1e-10);
            assert!((operator_norm(&m).unwrap() - p.value.abs()).abs() < 1e-12);
        }
    }

    #[test]
    fn sign_convention() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 3.0]);
        let p = leading_eigenpair(&m).unwrap();
        assert_eq!(p.value, 3.0);
        assert!(p.vector[1] > 0.0);
        let mut v = DVector::from_vec(vec![0.0, -2.0, 1.0]);
        fix_sign(&mut v);
        assert_eq!(v.as_slice(), &[0.0, 2.0, -1.0]);
    }

    #[test]
    fn negative_eigenvalue_can_lead() {
        let m = DMatrix::from_row_slice(2, 2, &[-4.0, 0.0, 0.0, 1.0]);
        assert_eq!(leading_eigenpair(&m).unwrap().value, -4.0);
        assert_eq!(operator_norm(&m).unwrap(), 4.0);
    }

    #[test]
    fn spd_solve_and_ridge() {
        let g = DMatrix::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 3.0]);
        let b = DMatrix::from_row_slice(2, 1, &[1.0, 2.0]);
        let s = solve_spd(&g, &b).unwrap();
        assert!(!s.ridged);
        assert!((&g * &s.solution - &b).norm() < 1e-12);

        let singular = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(solve_spd(&singular, &b).unwrap().ridged);
    }
}
