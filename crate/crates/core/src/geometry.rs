//! Disk domain, control regions, triangulation, and the weight-generating
//! function eta0.
//!
//! The domain is fixed to a disk of radius R with concentric control regions
//! omega' = B(0, r_inner) and omega = B(0, r_control), so that
//! eta0(x) = R^2 - |x|^2 is an exact weight generator: positive inside, zero
//! on the boundary, with its only critical point (the origin) inside omega'.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};

use crate::{Error, Result};

/// Scalar model and method constants shared by every solver.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Params {
    /// Bulk diffusion coefficient (> 0).
    pub a: f64,
    /// Surface diffusion coefficient (> 0).
    pub b: f64,
    /// Cubic nonlinearity strength (> 0).
    pub c: f64,
    /// Bulk/surface dispersion ratio (nonzero).
    pub alpha: f64,
    /// Cubic dispersion ratio (nonzero).
    pub gamma: f64,
    /// Time horizon (> 0).
    pub t_final: f64,
    /// Carleman parameter s (> 1).
    pub s: f64,
    /// Carleman parameter lambda (> 1).
    pub lambda: f64,
    /// Weight-exponent parameter m (> 1).
    pub m: f64,
    /// Theta-scheme weight in [1/2, 1].
    pub theta_scheme: f64,
    /// Relative tolerance of conjugate-gradient solves.
    pub cg_tol: f64,
    /// Iteration cap for conjugate-gradient solves.
    pub cg_maxit: usize,
    /// Relative tolerance of fixed-point (Picard/source) iterations.
    pub picard_tol: f64,
    /// Iteration cap for fixed-point iterations.
    pub picard_maxit: usize,
    /// Lower clamp for exponential weight factors (0 < floor < 1e-12).
    pub weight_floor: f64,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            a: 1.0,
            b: 1.0,
            c: 1.0,
            alpha: 1.0,
            gamma: 1.0,
            t_final: 1.0,
            s: 1.2,
            lambda: 1.05,
            m: 2.0,
            theta_scheme: 0.5,
            cg_tol: 1e-10,
            cg_maxit: 4000,
            picard_tol: 1e-10,
            picard_maxit: 60,
            weight_floor: 1e-300,
        }
    }
}

impl Params {
    /// Checks every invariant; call after construction or config parsing.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::precondition(msg.to_string()));
        if !(self.a > 0.0 && self.b > 0.0 && self.c > 0.0) {
            return bad("a, b, c must be positive");
        }
        if self.alpha == 0.0 || self.gamma == 0.0 {
            return bad("alpha and gamma must be nonzero");
        }
        if !(self.t_final > 0.0) {
            return bad("T must be positive");
        }
        if !(self.s > 1.0 && self.lambda > 1.0 && self.m > 1.0) {
            return bad("s, lambda, m must exceed 1");
        }
        if !(0.5..=1.0).contains(&self.theta_scheme) {
            return bad("theta_scheme must lie in [1/2, 1]");
        }
        if !(self.weight_floor > 0.0 && self.weight_floor < 1e-12) {
            return bad("weight_floor must lie in (0, 1e-12)");
        }
        if !(self.cg_tol > 0.0 && self.picard_tol > 0.0) {
            return bad("tolerances must be positive");
        }
        if self.cg_maxit == 0 || self.picard_maxit == 0 {
            return bad("iteration caps must be positive");
        }
        Ok(())
    }
}

/// Disk radius and the concentric control-region radii,
/// 0 < r_inner < r_control < R.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DiskGeometry {
    pub radius: f64,
    pub r_inner: f64,
    pub r_control: f64,
}

impl DiskGeometry {
    pub fn new(radius: f64, r_inner: f64, r_control: f64) -> Result<Self> {
        let g = DiskGeometry { radius, r_inner, r_control };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.r_inner && self.r_inner < self.r_control && self.r_control < self.radius) {
            return Err(Error::precondition(format!(
                "need 0 < r_inner < r_control < R, got r_inner={}, r_control={}, R={}",
                self.r_inner, self.r_control, self.radius
            )));
        }
        Ok(())
    }
}

/// Triangulated disk with an ordered boundary loop and control-region masks.
#[derive(Debug, Clone)]
pub struct Mesh {
    pub vertices: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
    /// Boundary vertex indices in counterclockwise order (a single closed
    /// cycle).
    pub boundary_loop: Vec<usize>,
    /// Length of the boundary edge from `boundary_loop[i]` to its successor.
    pub boundary_edge_len: Vec<f64>,
    /// Outward unit normals at boundary vertices (same order as the loop).
    pub outward_normals: Vec<[f64; 2]>,
    /// Vertex weights in [0, 1] approximating the indicator of omega
    /// (1 inside r_control - h_max, 0 outside r_control, linear ramp between).
    pub control_mask: Vec<f64>,
    pub h_max: f64,
    pub geom: DiskGeometry,
    /// True at vertices on the boundary circle.
    pub is_boundary: Vec<bool>,
}

impl Mesh {
    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_boundary(&self) -> usize {
        self.boundary_loop.len()
    }

    pub fn boundary_arclength(&self) -> f64 {
        self.boundary_edge_len.iter().sum()
    }

    pub fn radius_of(&self, v: usize) -> f64 {
        let [x, y] = self.vertices[v];
        x.hypot(y)
    }
}

/// The weight generator eta0 = R^2 - |x|^2 sampled at the mesh vertices.
#[derive(Debug, Clone)]
pub struct Eta0Field {
    pub values: Vec<f64>,
    pub grad: Vec<[f64; 2]>,
    /// sup norm over the closed disk (= R^2).
    pub sup_norm: f64,
}

/// Builds a ring-structured triangulation of the disk. Ring j of n_r carries
/// 6j vertices at radius R j / n_r; boundary vertices land exactly on the
/// circle. Fully deterministic in (geom, h_target).
pub fn build_mesh(geom: &DiskGeometry, h_target: f64) -> Result<Mesh> {
    geom.validate()?;
    if !(h_target > 0.0) {
        return Err(Error::precondition("h_target must be positive"));
    }
    if h_target >= geom.r_inner / 2.0 {
        return Err(Error::precondition(format!(
            "h_target={} too large for r_inner={}; need h_target < r_inner/2",
            h_target, geom.r_inner
        )));
    }
    let r = geom.radius;
    // The zigzag triangulation of the inner annuli produces edges up to
    // sqrt(3) times the radial spacing; sizing the rings by h/sqrt(3) keeps
    // h_max within 1.5 h_target.
    let n_r = (3.0f64.sqrt() * r / (1.5 * h_target)).ceil() as usize;

    let mut vertices: Vec<[f64; 2]> = vec![[0.0, 0.0]];
    let mut ring_start = vec![0usize; n_r + 1]; // ring 0 is the center vertex
    for j in 1..=n_r {
        ring_start[j] = vertices.len();
        let nj = 6 * j;
        let rj = r * j as f64 / n_r as f64;
        for i in 0..nj {
            let th = 2.0 * std::f64::consts::PI * i as f64 / nj as f64;
            vertices.push([rj * th.cos(), rj * th.sin()]);
        }
    }

    let mut triangles: Vec<[usize; 3]> = Vec::new();
    // Innermost fan around the center.
    for i in 0..6 {
        triangles.push([0, ring_start[1] + i, ring_start[1] + (i + 1) % 6]);
    }
    // Annuli: zigzag between ring j-1 (m vertices) and ring j (n vertices),
    // advancing whichever loop has the smaller next angle.
    for j in 2..=n_r {
        let m = 6 * (j - 1);
        let n = 6 * j;
        let inner0 = ring_start[j - 1];
        let outer0 = ring_start[j];
        let (mut i, mut k) = (0usize, 0usize);
        while i < m || k < n {
            let a_in = (i + 1) as f64 / m as f64;
            let a_out = (k + 1) as f64 / n as f64;
            if k < n && (i == m || a_out <= a_in) {
                triangles.push([inner0 + i % m, outer0 + k % n, outer0 + (k + 1) % n]);
                k += 1;
            } else {
                triangles.push([inner0 + i % m, outer0 + k % n, inner0 + (i + 1) % m]);
                i += 1;
            }
        }
    }

    let n_v = vertices.len();
    let boundary_loop: Vec<usize> = (ring_start[n_r]..n_v).collect();
    let mut is_boundary = vec![false; n_v];
    for &b in &boundary_loop {
        is_boundary[b] = true;
    }

    let mut h_max = 0.0f64;
    for t in &triangles {
        for e in 0..3 {
            let p = vertices[t[e]];
            let q = vertices[t[(e + 1) % 3]];
            h_max = h_max.max((p[0] - q[0]).hypot(p[1] - q[1]));
        }
    }

    let nb = boundary_loop.len();
    let mut boundary_edge_len = Vec::with_capacity(nb);
    let mut outward_normals = Vec::with_capacity(nb);
    for (idx, &v) in boundary_loop.iter().enumerate() {
        let p = vertices[v];
        let q = vertices[boundary_loop[(idx + 1) % nb]];
        boundary_edge_len.push((p[0] - q[0]).hypot(p[1] - q[1]));
        let norm = p[0].hypot(p[1]);
        outward_normals.push([p[0] / norm, p[1] / norm]);
    }

    let control_mask = vertices
        .iter()
        .map(|&[x, y]| ((geom.r_control - x.hypot(y)) / h_max).clamp(0.0, 1.0))
        .collect();

    let mesh = Mesh {
        vertices,
        triangles,
        boundary_loop,
        boundary_edge_len,
        outward_normals,
        control_mask,
        h_max,
        geom: *geom,
        is_boundary,
    };
    validate_mesh(&mesh)?;
    Ok(mesh)
}

/// Structural checks: single closed boundary cycle, each boundary edge in
/// exactly one triangle, positive triangle areas, h_max consistency.
fn validate_mesh(mesh: &Mesh) -> Result<()> {
    use std::collections::HashMap;
    let mut edge_count: HashMap<(usize, usize), usize> = HashMap::new();
    for t in &mesh.triangles {
        let area = triangle_area(&mesh.vertices, t);
        if area <= 1e-14 {
            return Err(Error::numerical(format!("degenerate triangle {:?}", t)));
        }
        for e in 0..3 {
            let a = t[e];
            let b = t[(e + 1) % 3];
            let key = (a.min(b), a.max(b));
            *edge_count.entry(key).or_insert(0) += 1;
        }
    }
    let nb = mesh.boundary_loop.len();
    for i in 0..nb {
        let a = mesh.boundary_loop[i];
        let b = mesh.boundary_loop[(i + 1) % nb];
        let key = (a.min(b), a.max(b));
        match edge_count.get(&key) {
            Some(1) => {}
            other => {
                return Err(Error::numerical(format!(
                    "boundary edge ({a},{b}) appears in {:?} triangles",
                    other
                )))
            }
        }
    }
    for (&count, &key) in edge_count.values().zip(edge_count.keys()) {
        let boundary = mesh.is_boundary[key.0] && mesh.is_boundary[key.1];
        if count > 2 || (!boundary && count != 2) {
            return Err(Error::numerical(format!("non-manifold edge {:?}", key)));
        }
    }
    Ok(())
}

pub fn triangle_area(vertices: &[[f64; 2]], t: &[usize; 3]) -> f64 {
    let [x0, y0] = vertices[t[0]];
    let [x1, y1] = vertices[t[1]];
    let [x2, y2] = vertices[t[2]];
    0.5 * ((x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0))
}

/// eta0 = R^2 - |x|^2 with gradient -2x, evaluated analytically. Boundary
/// values are set to exact zero (they are analytically zero; floating-point
/// evaluation of R^2 - |x|^2 can leave a residue of order 1e-16).
pub fn build_eta0(mesh: &Mesh, geom: &DiskGeometry) -> Result<Eta0Field> {
    let r2 = geom.radius * geom.radius;
    let mut values = Vec::with_capacity(mesh.n_vertices());
    let mut grad = Vec::with_capacity(mesh.n_vertices());
    for (v, &[x, y]) in mesh.vertices.iter().enumerate() {
        let val = if mesh.is_boundary[v] { 0.0 } else { r2 - (x * x + y * y) };
        values.push(val);
        grad.push([-2.0 * x, -2.0 * y]);
        let inside_omega_prime = x.hypot(y) < geom.r_inner;
        if !inside_omega_prime {
            let g = (2.0 * x).hypot(2.0 * y);
            if g < 1e-14 {
                return Err(Error::numerical(format!(
                    "vanishing grad eta0 at vertex {v} outside omega'"
                )));
            }
        }
    }
    Ok(Eta0Field { values, grad, sup_norm: r2 })
}

/// Normal derivative of eta0 at the boundary vertices (loop order). All
/// values must be strictly negative; on the disk they equal -2R exactly.
pub fn normal_derivative_eta0(mesh: &Mesh, eta0: &Eta0Field) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(mesh.n_boundary());
    for (i, &v) in mesh.boundary_loop.iter().enumerate() {
        let g = eta0.grad[v];
        let nu = mesh.outward_normals[i];
        let dn = g[0] * nu[0] + g[1] * nu[1];
        if dn >= 0.0 {
            return Err(Error::numerical(format!(
                "normal derivative of eta0 is {dn} >= 0 at boundary vertex {v}"
            )));
        }
        out.push(dn);
    }
    Ok(out)
}

/// Complex field convenience: one value per vertex, boundary trace shared.
pub fn zero_field(mesh: &Mesh) -> Vec<Complex64> {
    vec![Complex64::new(0.0, 0.0); mesh.n_vertices()]
}

/// Writes the mesh in the plain-text exchange format:
/// header `vertices N triangles M boundary K`, then vertex coordinates,
/// triangle index triples, ordered boundary indices.
pub fn export_mesh(mesh: &Mesh, out: &mut dyn Write) -> Result<()> {
    writeln!(
        out,
        "vertices {} triangles {} boundary {}",
        mesh.n_vertices(),
        mesh.triangles.len(),
        mesh.n_boundary()
    )?;
    for &[x, y] in &mesh.vertices {
        writeln!(out, "{} {}", crate::numfmt::g17(x), crate::numfmt::g17(y))?;
    }
    for t in &mesh.triangles {
        writeln!(out, "{} {} {}", t[0], t[1], t[2])?;
    }
    for &b in &mesh.boundary_loop {
        writeln!(out, "{}", b)?;
    }
    Ok(())
}

/// Reads the exchange format back; derived fields (normals, edge lengths,
/// h_max, control mask) are reconstructed from the geometry.
pub fn import_mesh(reader: &mut dyn BufRead, geom: &DiskGeometry) -> Result<Mesh> {
    geom.validate()?;
    let mut lines = reader.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty mesh file".into()))??;
    let tok: Vec<&str> = header.split_whitespace().collect();
    if tok.len() != 6 || tok[0] != "vertices" || tok[2] != "triangles" || tok[4] != "boundary" {
        return Err(Error::Parse(format!("bad mesh header: {header}")));
    }
    let n: usize = tok[1].parse().map_err(|_| Error::Parse("bad vertex count".into()))?;
    let m: usize = tok[3].parse().map_err(|_| Error::Parse("bad triangle count".into()))?;
    let k: usize = tok[5].parse().map_err(|_| Error::Parse("bad boundary count".into()))?;

    let mut next_line = || -> Result<String> {
        lines
            .next()
            .ok_or_else(|| Error::Parse("truncated mesh file".into()))?
            .map_err(Error::Io)
    };

    let mut vertices = Vec::with_capacity(n);
    for _ in 0..n {
        let line = next_line()?;
        let mut it = line.split_whitespace();
        let x: f64 = it
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Parse("bad vertex line".into()))?;
        let y: f64 = it
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Parse("bad vertex line".into()))?;
        vertices.push([x, y]);
    }
    let mut triangles = Vec::with_capacity(m);
    for _ in 0..m {
        let line = next_line()?;
        let idx: Vec<usize> = line
            .split_whitespace()
            .map(|s| s.parse())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Parse("bad triangle line".into()))?;
        if idx.len() != 3 {
            return Err(Error::Parse("triangle line needs 3 indices".into()));
        }
        triangles.push([idx[0], idx[1], idx[2]]);
    }
    let mut boundary_loop: Vec<usize> = Vec::with_capacity(k);
    for _ in 0..k {
        let line = next_line()?;
        boundary_loop
            .push(line.trim().parse().map_err(|_| Error::Parse("bad boundary line".into()))?);
    }

    let mut is_boundary = vec![false; n];
    for &b in &boundary_loop {
        if b >= n {
            return Err(Error::Parse("boundary index out of range".into()));
        }
        is_boundary[b] = true;
    }
    let mut h_max = 0.0f64;
    for t in &triangles {
        for e in 0..3 {
            let p = vertices[t[e]];
            let q = vertices[t[(e + 1) % 3]];
            h_max = h_max.max((p[0] - q[0]).hypot(p[1] - q[1]));
        }
    }
    let nb = boundary_loop.len();
    let mut boundary_edge_len = Vec::with_capacity(nb);
    let mut outward_normals = Vec::with_capacity(nb);
    for (i, &v) in boundary_loop.iter().enumerate() {
        let p = vertices[v];
        let q = vertices[boundary_loop[(i + 1) % nb]];
        boundary_edge_len.push((p[0] - q[0]).hypot(p[1] - q[1]));
        let norm = p[0].hypot(p[1]);
        outward_normals.push([p[0] / norm, p[1] / norm]);
    }
    let control_mask = vertices
        .iter()
        .map(|&[x, y]| ((geom.r_control - x.hypot(y)) / h_max).clamp(0.0, 1.0))
        .collect();
    let mesh = Mesh {
        vertices,
        triangles,
        boundary_loop,
        boundary_edge_len,
        outward_normals,
        control_mask,
        h_max,
        geom: *geom,
        is_boundary,
    };
    validate_mesh(&mesh)?;
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_geom() -> DiskGeometry {
        DiskGeometry::new(1.0, 0.25, 0.5).unwrap()
    }

    #[test]
    fn rejects_coarse_h_target() {
        let err = build_mesh(&unit_geom(), 0.5).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
        assert!(build_mesh(&unit_geom(), -0.1).is_err());
        assert!(DiskGeometry::new(1.0, 0.5, 0.25).is_err());
    }

    #[test]
    fn boundary_arclength_near_circumference() {
        let mesh = build_mesh(&unit_geom(), 0.1).unwrap();
        let len = mesh.boundary_arclength();
        let circ = 2.0 * std::f64::consts::PI;
        assert!(
            (len - circ).abs() / circ < 0.02,
            "boundary length {len} vs 2piR {circ}"
        );
    }

    #[test]
    fn boundary_vertices_on_circle() {
        let mesh = build_mesh(&unit_geom(), 0.1).unwrap();
        for &v in &mesh.boundary_loop {
            assert!((mesh.radius_of(v) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn h_max_contract_and_vertex_growth() {
        for &h in &[0.12, 0.1, 0.06] {
            let mesh = build_mesh(&unit_geom(), h).unwrap();
            assert!(mesh.h_max <= 1.5 * h, "h_max {} for target {}", mesh.h_max, h);
        }
        let coarse = build_mesh(&unit_geom(), 0.1).unwrap();
        let fine = build_mesh(&unit_geom(), 0.05).unwrap();
        let growth = fine.n_vertices() as f64 / coarse.n_vertices() as f64;
        assert!(growth > 3.0 && growth < 5.0, "O(h^-2) growth, got {growth}");
    }

    #[test]
    fn control_mask_plateaus() {
        let mesh = build_mesh(&unit_geom(), 0.1).unwrap();
        for (v, &m) in mesh.control_mask.iter().enumerate() {
            let r = mesh.radius_of(v);
            if r <= mesh.geom.r_control - mesh.h_max {
                assert_eq!(m, 1.0);
            }
            if r >= mesh.geom.r_control {
                assert_eq!(m, 0.0);
            }
            assert!((0.0..=1.0).contains(&m));
        }
        // Refinement preserves plateau radii within one (coarse) h_max.
        let fine = build_mesh(&unit_geom(), 0.05).unwrap();
        let plateau = |m: &Mesh| m.geom.r_control - m.h_max;
        assert!((plateau(&mesh) - plateau(&fine)).abs() <= mesh.h_max);
    }

    #[test]
    fn eta0_analytic_values() {
        let mesh = build_mesh(&unit_geom(), 0.1).unwrap();
        let eta0 = build_eta0(&mesh, &unit_geom()).unwrap();
        assert_eq!(eta0.values[0], 1.0); // center vertex
        assert_eq!(eta0.grad[0], [0.0, 0.0]);
        assert_eq!(eta0.sup_norm, 1.0);
        for &b in &mesh.boundary_loop {
            assert_eq!(eta0.values[b], 0.0);
        }
        for (v, g) in eta0.grad.iter().enumerate() {
            let r = mesh.radius_of(v);
            let gnorm = g[0].hypot(g[1]);
            assert!((gnorm - 2.0 * r).abs() < 1e-13);
            if r >= mesh.geom.r_inner {
                assert!(gnorm >= 2.0 * mesh.geom.r_inner - 1e-13);
            }
        }
        // |grad| = 0.5 at |x| = r_inner = 0.25 (analytic formula check).
        assert!((2.0 * 0.25 - 0.5f64).abs() < 1e-15);
        for (v, &val) in eta0.values.iter().enumerate() {
            if !mesh.is_boundary[v] {
                assert!(val > 0.0);
            }
        }
    }

    #[test]
    fn eta0_zero_on_boundary_loop_tangentially() {
        // eta0 restricted to the loop is identically zero, so its discrete
        // tangential derivative along the loop vanishes.
        let mesh = build_mesh(&unit_geom(), 0.1).unwrap();
        let eta0 = build_eta0(&mesh, &unit_geom()).unwrap();
        let nb = mesh.n_boundary();
        for i in 0..nb {
            let v = mesh.boundary_loop[i];
            let w = mesh.boundary_loop[(i + 1) % nb];
            let d = (eta0.values[w] - eta0.values[v]) / mesh.boundary_edge_len[i];
            assert!(d.abs() < 1e-14);
        }
    }

    #[test]
    fn normal_derivative_is_minus_two_r() {
        for &(r, expect) in &[(1.0, -2.0), (2.0, -4.0)] {
            let geom = DiskGeometry::new(r, 0.25 * r, 0.5 * r).unwrap();
            let mesh = build_mesh(&geom, 0.1 * r).unwrap();
            let eta0 = build_eta0(&mesh, &geom).unwrap();
            let dn = normal_derivative_eta0(&mesh, &eta0).unwrap();
            for v in dn {
                assert!((v - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn flipped_normal_is_rejected() {
        let mesh0 = build_mesh(&unit_geom(), 0.1).unwrap();
        let eta0 = build_eta0(&mesh0, &unit_geom()).unwrap();
        let mut mesh = mesh0;
        mesh.outward_normals[3] = [-mesh.outward_normals[3][0], -mesh.outward_normals[3][1]];
        assert!(normal_derivative_eta0(&mesh, &eta0).is_err());
    }

    #[test]
    fn export_import_round_trip() {
        let mesh = build_mesh(&unit_geom(), 0.12).unwrap();
        let mut buf = Vec::new();
        export_mesh(&mesh, &mut buf).unwrap();
        let mut cursor = std::io::Cursor::new(buf.clone());
        let back = import_mesh(&mut cursor, &unit_geom()).unwrap();
        assert_eq!(mesh.vertices, back.vertices);
        assert_eq!(mesh.triangles, back.triangles);
        assert_eq!(mesh.boundary_loop, back.boundary_loop);
        assert_eq!(mesh.h_max, back.h_max);
        assert_eq!(mesh.control_mask, back.control_mask);
        // Deterministic bytes.
        let mut buf2 = Vec::new();
        export_mesh(&back, &mut buf2).unwrap();
        assert_eq!(buf, buf2);
    }
}
