//! Dense solver kernels shared by the time steppers and the control solvers.
//!
//! The implicit systems all have the form (M + z K) x = b with M symmetric
//! positive definite, K symmetric positive semidefinite, and a complex scalar
//! z. One generalized symmetric eigendecomposition K V = M V diag(lambda),
//! V^T M V = I, diagonalizes every such system (and its conjugate transpose),
//! so forward steps, adjoint steps and mass solves all reduce to dense
//! matrix-vector products against the modal basis.

use nalgebra::{Cholesky, DMatrix, DVector};
use num_complex::Complex64;

use crate::sparse::CsrMatrix;
use crate::{Error, Result};

pub type CVec = Vec<Complex64>;

/// M-orthonormal eigenpairs of the pencil (K, M).
pub struct ModalBasis {
    modes: DMatrix<f64>,
    eigvals: DVector<f64>,
    n: usize,
}

impl ModalBasis {
    pub fn new(mass: &CsrMatrix, stiffness: &CsrMatrix) -> Result<Self> {
        let n = mass.size();
        if stiffness.size() != n {
            return Err(Error::SizeMismatch("mass/stiffness".into()));
        }
        let md = mass.to_dense();
        let kd = stiffness.to_dense();
        let chol = Cholesky::new(md)
            .ok_or_else(|| Error::numerical("mass matrix is not positive definite"))?;
        let l = chol.l();
        // B = L^{-1} K L^{-T}, symmetrized against rounding.
        let y = l
            .solve_lower_triangular(&kd)
            .ok_or_else(|| Error::numerical("singular Cholesky factor"))?;
        let b = l
            .solve_lower_triangular(&y.transpose())
            .ok_or_else(|| Error::numerical("singular Cholesky factor"))?;
        let b = (&b + b.transpose()) * 0.5;
        let eig = b.symmetric_eigen();
        // V = L^{-T} Q.
        let modes = l
            .transpose()
            .solve_upper_triangular(&eig.eigenvectors)
            .ok_or_else(|| Error::numerical("singular Cholesky factor"))?;
        // K is positive semidefinite; clip eigenvalue noise below zero.
        let eigvals = eig.eigenvalues.map(|v| v.max(0.0));
        Ok(ModalBasis { modes, eigvals, n })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigvals
    }

    fn split(&self, x: &[Complex64]) -> (DVector<f64>, DVector<f64>) {
        let re = DVector::from_iterator(self.n, x.iter().map(|z| z.re));
        let im = DVector::from_iterator(self.n, x.iter().map(|z| z.im));
        (re, im)
    }

    fn join(re: &DVector<f64>, im: &DVector<f64>) -> CVec {
        re.iter().zip(im.iter()).map(|(&r, &i)| Complex64::new(r, i)).collect()
    }

    /// Modal coordinates V^T x.
    fn to_modal(&self, x: &[Complex64]) -> (DVector<f64>, DVector<f64>) {
        let (re, im) = self.split(x);
        (self.modes.tr_mul(&re), self.modes.tr_mul(&im))
    }

    /// Physical field V c from modal coordinates.
    fn from_modal(&self, re: &DVector<f64>, im: &DVector<f64>) -> CVec {
        Self::join(&(&self.modes * re), &(&self.modes * im))
    }

    /// Solves (M + z K) x = b.
    pub fn shifted_solve(&self, z: Complex64, b: &[Complex64]) -> CVec {
        let (mut re, mut im) = self.to_modal(b);
        for i in 0..self.n {
            let d = Complex64::new(1.0 + z.re * self.eigvals[i], z.im * self.eigvals[i]);
            let c = Complex64::new(re[i], im[i]) / d;
            re[i] = c.re;
            im[i] = c.im;
        }
        self.from_modal(&re, &im)
    }

    /// Solves M x = b (the z = 0 case, without the division setup).
    pub fn mass_solve(&self, b: &[Complex64]) -> CVec {
        let (re, im) = self.to_modal(b);
        self.from_modal(&re, &im)
    }

    /// Residual diagnostics ||K V - M V Lambda||_max and ||V^T M V - I||_max,
    /// used by tests to bound the algebra error of the decomposition.
    pub fn residuals(&self, mass: &CsrMatrix, stiffness: &CsrMatrix) -> (f64, f64) {
        let md = mass.to_dense();
        let kd = stiffness.to_dense();
        let kv = &kd * &self.modes;
        let mv = &md * &self.modes;
        let mut worst = 0.0f64;
        for j in 0..self.n {
            for i in 0..self.n {
                worst = worst.max((kv[(i, j)] - mv[(i, j)] * self.eigvals[j]).abs());
            }
        }
        let gram = self.modes.tr_mul(&mv);
        let mut worst_orth = 0.0f64;
        for j in 0..self.n {
            for i in 0..self.n {
                let target = if i == j { 1.0 } else { 0.0 };
                worst_orth = worst_orth.max((gram[(i, j)] - target).abs());
            }
        }
        (worst, worst_orth)
    }
}

pub fn caxpy(alpha: Complex64, x: &[Complex64], y: &mut [Complex64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Real Euclidean inner product of complex vectors: Re(conj(x) . y).
pub fn dot_real(x: &[Complex64], y: &[Complex64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a.conj() * b).re).sum()
}

pub fn norm2(x: &[Complex64]) -> f64 {
    dot_real(x, x).max(0.0).sqrt()
}

#[derive(Debug, Clone)]
pub struct CgOutcome {
    pub iterations: usize,
    pub rel_residual: f64,
    pub converged: bool,
}

/// Conjugate gradients for a self-adjoint positive (semi)definite operator in
/// the inner product `dot`. Works on flattened complex states; the operator
/// and the inner product must be adjoint-consistent with each other.
pub fn conjugate_gradient<A, D>(
    apply: A,
    rhs: &[Complex64],
    x0: Option<&[Complex64]>,
    tol: f64,
    maxit: usize,
    dot: D,
) -> (CVec, CgOutcome)
where
    A: Fn(&[Complex64]) -> CVec,
    D: Fn(&[Complex64], &[Complex64]) -> f64,
{
    let n = rhs.len();
    let mut x = match x0 {
        Some(x0) => x0.to_vec(),
        None => vec![Complex64::new(0.0, 0.0); n],
    };
    let mut r = rhs.to_vec();
    if x0.is_some() {
        let ax = apply(&x);
        for i in 0..n {
            r[i] -= ax[i];
        }
    }
    let rhs_norm = dot(rhs, rhs).max(0.0).sqrt();
    if rhs_norm == 0.0 {
        return (
            vec![Complex64::new(0.0, 0.0); n],
            CgOutcome { iterations: 0, rel_residual: 0.0, converged: true },
        );
    }
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    let target = tol * rhs_norm;
    let mut iterations = 0;
    while rr.sqrt() > target && iterations < maxit {
        let ap = apply(&p);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            // Operator not positive along p (roundoff near convergence).
            break;
        }
        let alpha = rr / pap;
        caxpy(Complex64::new(alpha, 0.0), &p, &mut x);
        caxpy(Complex64::new(-alpha, 0.0), &ap, &mut r);
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
        rr = rr_new;
        iterations += 1;
    }
    let rel = rr.max(0.0).sqrt() / rhs_norm;
    let converged = rel <= tol;
    (x, CgOutcome { iterations, rel_residual: rel, converged })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::assemble;
    use crate::geometry::{build_mesh, DiskGeometry};

    #[test]
    fn modal_basis_solves_shifted_systems() {
        let geom = DiskGeometry::new(1.0, 0.3, 0.6).unwrap();
        let mesh = build_mesh(&geom, 0.14).unwrap();
        let ops = assemble(&mesh).unwrap();
        // K = K_bulk + 2 K_surf, M = M_bulk + M_surf assembled densely.
        let k = {
            let mut t = Vec::new();
            let kd = ops.k_bulk.to_dense() + ops.k_surf.to_dense() * 2.0;
            for i in 0..ops.n {
                for j in 0..ops.n {
                    if kd[(i, j)] != 0.0 {
                        t.push((i, j, kd[(i, j)]));
                    }
                }
            }
            CsrMatrix::from_triplets(ops.n, &t)
        };
        let m = {
            let mut t = Vec::new();
            let md = ops.m_bulk.to_dense() + ops.m_surf.to_dense();
            for i in 0..ops.n {
                for j in 0..ops.n {
                    if md[(i, j)] != 0.0 {
                        t.push((i, j, md[(i, j)]));
                    }
                }
            }
            CsrMatrix::from_triplets(ops.n, &t)
        };
        let basis = ModalBasis::new(&m, &k).unwrap();
        let (res_pair, res_orth) = basis.residuals(&m, &k);
        assert!(res_pair < 1e-9, "eigenpair residual {res_pair}");
        assert!(res_orth < 1e-10, "orthonormality residual {res_orth}");

        let mut rng = crate::random::seeded(3);
        let b = crate::random::complex_normal_vec(&mut rng, ops.n);
        let z = Complex64::new(0.05, 0.02);
        let x = basis.shifted_solve(z, &b);
        // Residual b - (M + zK) x.
        let mut mx = vec![Complex64::new(0.0, 0.0); ops.n];
        m.matvec_complex(&x, &mut mx);
        let mut kx = vec![Complex64::new(0.0, 0.0); ops.n];
        k.matvec_complex(&x, &mut kx);
        let mut worst = 0.0f64;
        for i in 0..ops.n {
            worst = worst.max((b[i] - mx[i] - z * kx[i]).norm());
        }
        let scale = norm2(&b);
        assert!(worst / scale < 1e-11, "shifted solve residual {}", worst / scale);

        let xm = basis.mass_solve(&b);
        let mut mxm = vec![Complex64::new(0.0, 0.0); ops.n];
        m.matvec_complex(&xm, &mut mxm);
        let mut worst_m = 0.0f64;
        for i in 0..ops.n {
            worst_m = worst_m.max((b[i] - mxm[i]).norm());
        }
        assert!(worst_m / scale < 1e-11);
    }

    #[test]
    fn cg_solves_spd_system() {
        // Diagonal complex-free SPD test in the plain real inner product.
        let n = 40;
        let diag: Vec<f64> = (0..n).map(|i| 1.0 + i as f64 / 7.0).collect();
        let apply = |x: &[Complex64]| -> CVec {
            x.iter().zip(&diag).map(|(v, d)| v * *d).collect()
        };
        let mut rng = crate::random::seeded(11);
        let b = crate::random::complex_normal_vec(&mut rng, n);
        let (x, out) = conjugate_gradient(apply, &b, None, 1e-12, 200, dot_real);
        assert!(out.converged);
        for i in 0..n {
            assert!((x[i] * diag[i] - b[i]).norm() < 1e-10);
        }
    }
}
