//! Weak-form operators of the coupled bulk-surface system.
//!
//! Degrees of freedom are trace-identified: one complex value per mesh
//! vertex, with boundary vertices carrying both the trace of the bulk field
//! and the surface field. The constraint u = u_Gamma on Gamma therefore holds
//! structurally. Piecewise-linear elements with exact element-wise
//! quadrature; the mass matrices are consistent (not lumped) so the discrete
//! adjoint in `evolution` is exact.

use num_complex::Complex64;

use crate::geometry::{triangle_area, Mesh};
use crate::sparse::CsrMatrix;
use crate::{Error, Result};

/// Complex field over all mesh vertices (bulk values; boundary entries double
/// as the surface field).
#[derive(Debug, Clone, PartialEq)]
pub struct BulkSurfaceField {
    pub dof: Vec<Complex64>,
}

impl BulkSurfaceField {
    pub fn zeros(n: usize) -> Self {
        BulkSurfaceField { dof: vec![Complex64::new(0.0, 0.0); n] }
    }

    pub fn constant(n: usize, value: Complex64) -> Self {
        BulkSurfaceField { dof: vec![value; n] }
    }

    pub fn from_fn(mesh: &Mesh, f: impl Fn(f64, f64) -> Complex64) -> Self {
        BulkSurfaceField { dof: mesh.vertices.iter().map(|&[x, y]| f(x, y)).collect() }
    }

    pub fn len(&self) -> usize {
        self.dof.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dof.is_empty()
    }

    pub fn conj(&self) -> Self {
        BulkSurfaceField { dof: self.dof.iter().map(|z| z.conj()).collect() }
    }

    pub fn scaled(&self, k: Complex64) -> Self {
        BulkSurfaceField { dof: self.dof.iter().map(|z| z * k).collect() }
    }

    pub fn max_abs(&self) -> f64 {
        self.dof.iter().fold(0.0, |m, z| m.max(z.norm()))
    }
}

/// Bulk/surface mass and stiffness matrices plus the control mass matrix
/// weighted by the control mask. Geometry only: model coefficients enter in
/// `evolution`.
#[derive(Debug)]
pub struct OperatorSet {
    pub m_bulk: CsrMatrix,
    pub m_surf: CsrMatrix,
    pub k_bulk: CsrMatrix,
    pub k_surf: CsrMatrix,
    pub m_ctrl: CsrMatrix,
    /// Lumped bulk mass (row sums of m_bulk): positive quadrature weights.
    pub bulk_lumped: Vec<f64>,
    /// Lumped surface mass (row sums of m_surf): zero off the boundary.
    pub surf_lumped: Vec<f64>,
    /// Vertices reachable by the control operator (column support of m_ctrl).
    pub ctrl_support: Vec<bool>,
    pub n: usize,
}

/// Assembles all weak-form matrices for the mesh. The surface operators live
/// on the boundary loop: the Laplace-Beltrami operator on a closed planar
/// curve is the second derivative in arclength, discretized edge-wise.
pub fn assemble(mesh: &Mesh) -> Result<OperatorSet> {
    let n = mesh.n_vertices();
    let mut tm = Vec::with_capacity(mesh.triangles.len() * 9);
    let mut tk = Vec::with_capacity(mesh.triangles.len() * 9);
    let mut tc = Vec::with_capacity(mesh.triangles.len() * 9);

    for t in &mesh.triangles {
        let area = triangle_area(&mesh.vertices, t);
        if area <= 1e-14 {
            return Err(Error::numerical(format!("degenerate triangle {:?}", t)));
        }
        let p = [mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]]];
        // Gradients of the barycentric basis functions.
        let mut gb = [[0.0f64; 2]; 3];
        for i in 0..3 {
            let j = (i + 1) % 3;
            let k = (i + 2) % 3;
            gb[i] = [
                (p[j][1] - p[k][1]) / (2.0 * area),
                (p[k][0] - p[j][0]) / (2.0 * area),
            ];
        }
        let mask = [
            mesh.control_mask[t[0]],
            mesh.control_mask[t[1]],
            mesh.control_mask[t[2]],
        ];
        for i in 0..3 {
            for j in 0..3 {
                let mij = if i == j { area / 6.0 } else { area / 12.0 };
                tm.push((t[i], t[j], mij));
                tk.push((t[i], t[j], area * (gb[i][0] * gb[j][0] + gb[i][1] * gb[j][1])));
                // Exact integral of (sum_k mask_k phi_k) phi_i phi_j.
                let cij = if i == j {
                    area * (mask[i] / 10.0 + (mask[(i + 1) % 3] + mask[(i + 2) % 3]) / 30.0)
                } else {
                    let k = 3 - i - j; // the third local index
                    area * (mask[i] / 30.0 + mask[j] / 30.0 + mask[k] / 60.0)
                };
                tc.push((t[i], t[j], cij));
            }
        }
    }

    let mut sm = Vec::with_capacity(mesh.n_boundary() * 4);
    let mut sk = Vec::with_capacity(mesh.n_boundary() * 4);
    let nb = mesh.n_boundary();
    for i in 0..nb {
        let a = mesh.boundary_loop[i];
        let b = mesh.boundary_loop[(i + 1) % nb];
        let len = mesh.boundary_edge_len[i];
        sm.push((a, a, len / 3.0));
        sm.push((b, b, len / 3.0));
        sm.push((a, b, len / 6.0));
        sm.push((b, a, len / 6.0));
        sk.push((a, a, 1.0 / len));
        sk.push((b, b, 1.0 / len));
        sk.push((a, b, -1.0 / len));
        sk.push((b, a, -1.0 / len));
    }

    let m_bulk = CsrMatrix::from_triplets(n, &tm);
    let k_bulk = CsrMatrix::from_triplets(n, &tk);
    let m_ctrl = CsrMatrix::from_triplets(n, &tc);
    let m_surf = CsrMatrix::from_triplets(n, &sm);
    let k_surf = CsrMatrix::from_triplets(n, &sk);

    for (name, m) in [
        ("m_bulk", &m_bulk),
        ("m_surf", &m_surf),
        ("k_bulk", &k_bulk),
        ("k_surf", &k_surf),
        ("m_ctrl", &m_ctrl),
    ] {
        let asym = m.asymmetry();
        if asym > 1e-13 {
            return Err(Error::numerical(format!("{name} asymmetry {asym} exceeds 1e-13")));
        }
    }

    let bulk_lumped = m_bulk.row_sums();
    let surf_lumped = m_surf.row_sums();
    let ctrl_support = m_ctrl.column_support(0.0);
    Ok(OperatorSet {
        m_bulk,
        m_surf,
        k_bulk,
        k_surf,
        m_ctrl,
        bulk_lumped,
        surf_lumped,
        ctrl_support,
        n,
    })
}

impl OperatorSet {
    /// (M_bulk + M_surf) x.
    pub fn mass_apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        self.m_bulk.matvec_complex(x, y);
        self.m_surf.matvec_complex_add(Complex64::new(1.0, 0.0), x, y);
    }

    /// The named matrices, for the coordinate-format dump.
    pub fn matrices(&self) -> [(&'static str, &CsrMatrix); 5] {
        [
            ("m_bulk", &self.m_bulk),
            ("m_surf", &self.m_surf),
            ("k_bulk", &self.k_bulk),
            ("k_surf", &self.k_surf),
            ("m_ctrl", &self.m_ctrl),
        ]
    }
}

/// Full complex L2-type pairing sum_ij (M_bulk + M_surf)_ij u_j conj(v_i);
/// the real part is the bulk-surface scalar product.
pub fn energy_product(ops: &OperatorSet, u: &BulkSurfaceField, v: &BulkSurfaceField) -> Result<Complex64> {
    if u.len() != ops.n || v.len() != ops.n {
        return Err(Error::SizeMismatch(format!(
            "fields of length {}/{} against operators of size {}",
            u.len(),
            v.len(),
            ops.n
        )));
    }
    let mut mu = vec![Complex64::new(0.0, 0.0); ops.n];
    ops.mass_apply(&u.dof, &mut mu);
    Ok(mu.iter().zip(&v.dof).map(|(a, b)| a * b.conj()).sum())
}

#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct HkNorms {
    pub l2: f64,
    pub h1: f64,
}

/// L2 and H1 norms of a trace-identified field: the L2 norm combines bulk and
/// surface measures; H1 adds both stiffness quadratic forms.
pub fn hk_norms(ops: &OperatorSet, u: &BulkSurfaceField) -> Result<HkNorms> {
    if u.len() != ops.n {
        return Err(Error::SizeMismatch("field/operator size".into()));
    }
    let l2sq = energy_product(ops, u, u)?.re;
    let grad = ops.k_bulk.hermitian_form(&u.dof) + ops.k_surf.hermitian_form(&u.dof);
    Ok(HkNorms { l2: l2sq.max(0.0).sqrt(), h1: (l2sq + grad).max(0.0).sqrt() })
}
