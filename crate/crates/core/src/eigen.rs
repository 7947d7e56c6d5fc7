//! Dense nonsymmetric eigenvalues for the small Jacobians of the models.
//!
//! The matrix is first balanced by a diagonal similarity with power-of-two
//! entries (exact in floating point), then reduced to real Schur form. Each
//! eigenvalue is paired with a unit null vector of `J - ηI` from a complex SVD
//! and its residual is checked against the original, unbalanced matrix.

use nalgebra::{Complex, DMatrix};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Residual bound `‖Jv - ηv‖ <= RESIDUAL_TOL · ‖J‖` per eigenpair.
pub const RESIDUAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Eigenvalue {
    pub re: f64,
    pub im: f64,
}

impl From<Complex<f64>> for Eigenvalue {
    fn from(c: Complex<f64>) -> Self {
        Eigenvalue { re: c.re, im: c.im }
    }
}

impl From<Eigenvalue> for Complex<f64> {
    fn from(e: Eigenvalue) -> Self {
        Complex::new(e.re, e.im)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenSpectrum {
    /// Sorted by real part, then imaginary part.
    pub eigenvalues: Vec<Eigenvalue>,
    /// Largest `‖Jv - ηv‖ / ‖J‖` over all pairs.
    pub max_relative_residual: f64,
}

impl EigenSpectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn max_real_part(&self) -> f64 {
        self.eigenvalues
            .iter()
            .map(|e| e.re)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn count_positive_real(&self) -> usize {
        self.eigenvalues.iter().filter(|e| e.re > 0.0).count()
    }

    pub fn sum(&self) -> Complex<f64> {
        self.eigenvalues.iter().map(|&e| Complex::from(e)).sum()
    }

    /// Index of the eigenvalue closest to `target` on the real axis.
    pub fn nearest_real(&self, target: f64) -> Option<usize> {
        self.eigenvalues
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| {
                let da = (a.re - target).hypot(a.im);
                let db = (b.re - target).hypot(b.im);
                da.total_cmp(&db)
            })
            .map(|(i, _)| i)
    }

    /// Coefficients `[c1, .., cn]` of `det(ηI - J) = ηⁿ + c1 ηⁿ⁻¹ + .. + cn`,
    /// expanded from the roots.
    pub fn characteristic_coefficients(&self) -> Vec<f64> {
        let mut poly = vec![Complex::new(1.0, 0.0)];
        for &e in &self.eigenvalues {
            let root = Complex::from(e);
            let mut next = vec![Complex::new(0.0, 0.0); poly.len() + 1];
            for (i, &c) in poly.iter().enumerate() {
                next[i] += c;
                next[i + 1] -= c * root;
            }
            poly = next;
        }
        poly.iter().skip(1).map(|c| c.re).collect()
    }
}

/// All eigenvalues of a real square matrix.
pub fn eigen_spectrum(j: &DMatrix<f64>) -> Result<EigenSpectrum> {
    let n = j.nrows();
    if n != j.ncols() {
        return Err(Error::Numeric(format!("matrix is {}x{}, not square", n, j.ncols())));
    }
    if j.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numeric("matrix has non-finite entries".into()));
    }
    if n == 0 {
        return Ok(EigenSpectrum {
            eigenvalues: vec![],
            max_relative_residual: 0.0,
        });
    }

    let balanced = balance(j);
    let schur = nalgebra::linalg::Schur::try_new(balanced, f64::EPSILON, 1000 * n)
        .ok_or_else(|| Error::Numeric("Schur iteration did not converge".into()))?;
    let mut values: Vec<Complex<f64>> = schur.complex_eigenvalues().iter().copied().collect();
    values.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));

    let norm = j.norm().max(f64::MIN_POSITIVE);
    let jc: DMatrix<Complex<f64>> = j.map(|x| Complex::new(x, 0.0));
    let mut worst = 0.0f64;
    for &eta in &values {
        let r = eigenpair_residual(&jc, eta)? / norm;
        if !(r <= RESIDUAL_TOL) {
            return Err(Error::Numeric(format!(
                "eigenpair residual {r:e} exceeds {RESIDUAL_TOL:e} for η = {eta}"
            )));
        }
        worst = worst.max(r);
    }

    Ok(EigenSpectrum {
        eigenvalues: values.into_iter().map(Eigenvalue::from).collect(),
        max_relative_residual: worst,
    })
}

/// `‖Jv - ηv‖` for the unit vector `v` minimizing it.
fn eigenpair_residual(jc: &DMatrix<Complex<f64>>, eta: Complex<f64>) -> Result<f64> {
    let n = jc.nrows();
    let shifted = jc - DMatrix::<Complex<f64>>::identity(n, n) * eta;
    let svd = shifted.clone().svd(false, true);
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::Numeric("SVD did not return right singular vectors".into()))?;
    let imin = svd.singular_values.argmin().0;
    let v = v_t.row(imin).adjoint();
    let r = jc * &v - &v * eta;
    Ok(r.norm())
}

/// Diagonal similarity `D⁻¹ J D` equalizing row and column norms.
fn balance(j: &DMatrix<f64>) -> DMatrix<f64> {
    const RADIX: f64 = 2.0;
    let n = j.nrows();
    let mut a = j.clone();
    let mut converged = false;
    let mut sweeps = 0;
    while !converged && sweeps < 100 {
        converged = true;
        sweeps += 1;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for k in 0..n {
                if k != i {
                    c += a[(k, i)].abs();
                    r += a[(i, k)].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut cc = c;
            let g = r / RADIX;
            while cc < g {
                f *= RADIX;
                cc *= RADIX * RADIX;
            }
            let g = r * RADIX;
            while cc > g {
                f /= RADIX;
                cc /= RADIX * RADIX;
            }
            if (cc + r / f) / f < 0.95 * s {
                converged = false;
                for k in 0..n {
                    a[(i, k)] /= f;
                    a[(k, i)] *= f;
                }
            }
        }
    }
    a
}
