//! The Carleman weight family on the disk.
//!
//! Space-time weights (used by the Carleman audit):
//!   phi(x,t) = theta(t) (E2 - e^{lambda (m |eta0|_inf + eta0(x))}),
//!   xi(x,t)  = theta(t) e^{lambda (m |eta0|_inf + eta0(x))},
//! with theta(t) = 1/(t(T-t)) and E2 = e^{2 lambda m |eta0|_inf}.
//!
//! One-sided weights (used by observability and control): the singular
//! factor is replaced by mu(t) = 4/T^2 on (0, T/2] and theta(t) afterward,
//! and the spatial dependence is collapsed onto the min/max envelopes
//! phi_check/phi_hat/xi_check/xi_hat. On the disk those extrema are exact:
//! eta0 ranges over [0, R^2] with both endpoints attained at vertices.
//!
//! Exponential factors such as e^{-2 s phi} have exponents far beyond f64
//! range for admissible (s, lambda, m); all of them are carried as natural
//! logs, clamped against `weight_floor` only when a plain value is needed.

use serde::Serialize;

use crate::evolution::TimeGrid;
use crate::geometry::{Eta0Field, Mesh, Params};
use crate::logspace::exp_floored;
use crate::{Error, Result};

/// Closed-form weight evaluators. Everything is analytic in (eta0, t).
#[derive(Debug, Clone, Serialize)]
pub struct WeightFns {
    pub s: f64,
    pub lambda: f64,
    pub m: f64,
    pub t_final: f64,
    /// |eta0|_inf over the closed disk (= R^2).
    pub eta_sup: f64,
    /// e^{2 lambda m |eta0|_inf}; the Section 4 literal variant replaces it
    /// by e^{2 s lambda m |eta0|_inf} inside the envelopes.
    pub e2: f64,
    /// min/max over the disk of E2 - e^{lambda(m|eta0| + eta0)}.
    pub psi_min: f64,
    pub psi_max: f64,
    /// min/max over the disk of e^{lambda(m|eta0| + eta0)}.
    pub exp_min: f64,
    pub exp_max: f64,
    /// Reproduce the literal Section 4 text (an extra s in the envelope
    /// exponent); kept behind a switch because it is read as a typo.
    pub strict_section4: bool,
    pub weight_floor: f64,
}

impl WeightFns {
    pub fn new(params: &Params, eta_sup: f64) -> Result<Self> {
        Self::with_raw(
            params.s,
            params.lambda,
            params.m,
            params.t_final,
            eta_sup,
            false,
            params.weight_floor,
        )
    }

    /// Raw constructor without the s, lambda, m > 1 gate; formula-level tests
    /// use it to evaluate the definitions at arbitrary parameter values.
    pub fn with_raw(
        s: f64,
        lambda: f64,
        m: f64,
        t_final: f64,
        eta_sup: f64,
        strict_section4: bool,
        weight_floor: f64,
    ) -> Result<Self> {
        let e2_exponent = 2.0 * lambda * m * eta_sup;
        if e2_exponent > 700.0 {
            return Err(Error::precondition(format!(
                "e^{{2 lambda m |eta0|}} overflows (exponent {e2_exponent:.1}); lower lambda or m"
            )));
        }
        let e2 = e2_exponent.exp();
        let exp_min = (lambda * m * eta_sup).exp();
        let exp_max = (lambda * (m * eta_sup + eta_sup)).exp();
        let env_base = if strict_section4 { (2.0 * s * lambda * m * eta_sup).exp() } else { e2 };
        if !env_base.is_finite() {
            return Err(Error::precondition(
                "section-4 literal envelope overflows; lower s, lambda or m",
            ));
        }
        let psi_min = env_base - exp_max;
        let psi_max = env_base - exp_min;
        if psi_min <= 0.0 {
            return Err(Error::precondition(
                "weight generator not positive (m too small for this eta0)",
            ));
        }
        Ok(WeightFns {
            s,
            lambda,
            m,
            t_final,
            eta_sup,
            e2,
            psi_min,
            psi_max,
            exp_min,
            exp_max,
            strict_section4,
            weight_floor,
        })
    }

    /// 1/(t(T-t)).
    pub fn theta(&self, t: f64) -> f64 {
        1.0 / (t * (self.t_final - t))
    }

    /// d/dt of 1/(t(T-t)).
    pub fn theta_dt(&self, t: f64) -> f64 {
        let tt = t * (self.t_final - t);
        -(self.t_final - 2.0 * t) / (tt * tt)
    }

    /// e^{lambda (m |eta0|_inf + eta0)}.
    pub fn exp_term(&self, eta0: f64) -> f64 {
        (self.lambda * (self.m * self.eta_sup + eta0)).exp()
    }

    /// E2 - exp_term(eta0), the spatial factor of phi.
    pub fn psi(&self, eta0: f64) -> f64 {
        self.e2 - self.exp_term(eta0)
    }

    pub fn phi(&self, eta0: f64, t: f64) -> f64 {
        self.theta(t) * self.psi(eta0)
    }

    pub fn xi(&self, eta0: f64, t: f64) -> f64 {
        self.theta(t) * self.exp_term(eta0)
    }

    pub fn phi_dt(&self, eta0: f64, t: f64) -> f64 {
        self.theta_dt(t) * self.psi(eta0)
    }

    /// 4/T^2 on (0, T/2], 1/(t(T-t)) on (T/2, T); continuous at T/2.
    pub fn mu(&self, t: f64) -> f64 {
        let half = self.t_final / 2.0;
        if t <= half {
            4.0 / (self.t_final * self.t_final)
        } else {
            self.theta(t)
        }
    }

    pub fn phi_check(&self, t: f64) -> f64 {
        self.mu(t) * self.psi_min
    }

    pub fn phi_hat(&self, t: f64) -> f64 {
        self.mu(t) * self.psi_max
    }

    pub fn xi_check(&self, t: f64) -> f64 {
        self.mu(t) * self.exp_min
    }

    pub fn xi_hat(&self, t: f64) -> f64 {
        self.mu(t) * self.exp_max
    }

    /// min over (0,T) of phi_check, attained on (0, T/2]. Log-space
    /// normalizer for the control-side weights.
    pub fn phi_check_min(&self) -> f64 {
        4.0 / (self.t_final * self.t_final) * self.psi_min
    }

    /// min over (x,t) of the space-time phi (theta min is 4/T^2 at T/2).
    pub fn phi_min(&self) -> f64 {
        4.0 / (self.t_final * self.t_final) * self.psi_min
    }

    /// ln e^{-2 s phi(x,t)}.
    pub fn ln_exp_m2s_phi(&self, eta0: f64, t: f64) -> f64 {
        -2.0 * self.s * self.phi(eta0, t)
    }

    /// ln of the one-sided control weight e^{-2 s phi_check(t)}.
    pub fn ln_exp_m2s_phi_check(&self, t: f64) -> f64 {
        -2.0 * self.s * self.phi_check(t)
    }

    /// ln of e^{-2 s phi_check(t)} xi_hat(t)^3, the omega-localized weight.
    /// At t = T the analytic limit is zero (the exponential wins); callers
    /// pass t strictly inside (0,T) and use [`Self::ln_omega_weight_at_endpoint`]
    /// for the structural limit.
    pub fn ln_omega_weight(&self, t: f64) -> f64 {
        -2.0 * self.s * self.phi_check(t) + 3.0 * self.xi_hat(t).ln()
    }

    pub fn ln_omega_weight_at_endpoint(&self) -> f64 {
        f64::NEG_INFINITY
    }

    /// Floored plain value of a log-weight; flags the clamp.
    pub fn exp_floored(&self, ln_value: f64) -> (f64, bool) {
        exp_floored(ln_value, self.weight_floor)
    }
}

/// Which derived exponential arrays hit the weight floor during evaluation.
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct FloorFlags {
    pub exp_m2s_phi: bool,
    pub exp_m2s_phi_check: bool,
    pub exp_m2s_phi_hat: bool,
}

/// Space-time samples of the weight family on the interior time nodes of a
/// grid, plus the scalar evaluators. Immutable after construction.
#[derive(Debug, Clone)]
pub struct WeightSet {
    /// Interior node times t_1..t_{N-1}.
    pub times: Vec<f64>,
    /// phi(x, t_i), row-major [interior node][vertex].
    pub phi: Vec<Vec<f64>>,
    /// xi(x, t_i), same layout.
    pub xi: Vec<Vec<f64>>,
    pub mu: Vec<f64>,
    pub phi_check: Vec<f64>,
    pub phi_hat: Vec<f64>,
    pub xi_check: Vec<f64>,
    pub xi_hat: Vec<f64>,
    pub s: f64,
    pub lambda: f64,
    pub m: f64,
    pub floor_applied: FloorFlags,
    pub fns: WeightFns,
}

/// Evaluates the full weight family on the interior nodes of `grid`.
pub fn eval_weights(
    mesh: &Mesh,
    eta0: &Eta0Field,
    params: &Params,
    grid: &TimeGrid,
) -> Result<WeightSet> {
    eval_weights_with(mesh, eta0, params, grid, false)
}

/// As [`eval_weights`], optionally reproducing the literal Section-4 envelope
/// text (`strict_section4 = true`).
pub fn eval_weights_with(
    mesh: &Mesh,
    eta0: &Eta0Field,
    params: &Params,
    grid: &TimeGrid,
    strict_section4: bool,
) -> Result<WeightSet> {
    params.validate()?;
    if (grid.t_final() - params.t_final).abs() > 1e-12 * params.t_final {
        return Err(Error::precondition("grid horizon differs from params.T"));
    }
    let fns = WeightFns::with_raw(
        params.s,
        params.lambda,
        params.m,
        params.t_final,
        eta0.sup_norm,
        strict_section4,
        params.weight_floor,
    )?;
    let times: Vec<f64> = grid.interior_nodes().collect();
    let n_v = mesh.n_vertices();
    let mut phi = Vec::with_capacity(times.len());
    let mut xi = Vec::with_capacity(times.len());
    let mut flags = FloorFlags::default();
    for &t in &times {
        let mut phi_row = Vec::with_capacity(n_v);
        let mut xi_row = Vec::with_capacity(n_v);
        for v in 0..n_v {
            let p = fns.phi(eta0.values[v], t);
            let x = fns.xi(eta0.values[v], t);
            debug_assert!(p > 0.0 && x > 0.0);
            if fns.exp_floored(-2.0 * fns.s * p).1 {
                flags.exp_m2s_phi = true;
            }
            phi_row.push(p);
            xi_row.push(x);
        }
        phi.push(phi_row);
        xi.push(xi_row);
    }
    let mu: Vec<f64> = times.iter().map(|&t| fns.mu(t)).collect();
    let phi_check: Vec<f64> = times.iter().map(|&t| fns.phi_check(t)).collect();
    let phi_hat: Vec<f64> = times.iter().map(|&t| fns.phi_hat(t)).collect();
    let xi_check: Vec<f64> = times.iter().map(|&t| fns.xi_check(t)).collect();
    let xi_hat: Vec<f64> = times.iter().map(|&t| fns.xi_hat(t)).collect();
    for (i, &t) in times.iter().enumerate() {
        if fns.exp_floored(-2.0 * fns.s * phi_check[i]).1 {
            flags.exp_m2s_phi_check = true;
        }
        if fns.exp_floored(-2.0 * fns.s * phi_hat[i]).1 {
            flags.exp_m2s_phi_hat = true;
        }
        // One-sided envelopes bound the mu-collapsed weights everywhere and
        // the space-time weights wherever mu and theta agree. The strict
        // section-4 variant inflates the envelopes past the section-3
        // weights, so the cross checks only apply to the standard family.
        if !strict_section4 {
            for v in 0..n_v {
                let psi_v = fns.psi(eta0.values[v]);
                debug_assert!(phi_check[i] <= mu[i] * psi_v + 1e-9 * phi_check[i].abs());
                debug_assert!(mu[i] * psi_v <= phi_hat[i] * (1.0 + 1e-12));
                debug_assert!(phi_check[i] <= phi[i][v] * (1.0 + 1e-12));
                if t >= params.t_final / 2.0 {
                    debug_assert!(phi[i][v] <= phi_hat[i] * (1.0 + 1e-12));
                    debug_assert!(xi[i][v] <= xi_hat[i] * (1.0 + 1e-12));
                }
                debug_assert!(xi_check[i] <= xi[i][v] * (1.0 + 1e-12));
            }
        }
    }
    Ok(WeightSet {
        times,
        phi,
        xi,
        mu,
        phi_check,
        phi_hat,
        xi_check,
        xi_hat,
        s: params.s,
        lambda: params.lambda,
        m: params.m,
        floor_applied: flags,
        fns,
    })
}

/// Analytic first and second space derivatives of the weights at every
/// (interior node, vertex): grad phi = -lambda xi grad eta0 (= -grad xi) and
/// Delta phi = -lambda^2 xi |grad eta0|^2 - lambda xi Delta eta0, with
/// grad eta0 = -2x and Delta eta0 = -4 on the disk.
#[derive(Debug, Clone)]
pub struct WeightGradients {
    pub grad_phi: Vec<Vec<[f64; 2]>>,
    pub grad_xi: Vec<Vec<[f64; 2]>>,
    pub lap_phi: Vec<Vec<f64>>,
}

pub fn weight_gradients(mesh: &Mesh, eta0: &Eta0Field, wset: &WeightSet) -> WeightGradients {
    let lambda = wset.lambda;
    let n_v = mesh.n_vertices();
    let mut grad_phi = Vec::with_capacity(wset.times.len());
    let mut grad_xi = Vec::with_capacity(wset.times.len());
    let mut lap_phi = Vec::with_capacity(wset.times.len());
    for (i, _t) in wset.times.iter().enumerate() {
        let mut gp = Vec::with_capacity(n_v);
        let mut gx = Vec::with_capacity(n_v);
        let mut lp = Vec::with_capacity(n_v);
        for v in 0..n_v {
            let xi = wset.xi[i][v];
            let ge = eta0.grad[v];
            gx.push([lambda * xi * ge[0], lambda * xi * ge[1]]);
            gp.push([-lambda * xi * ge[0], -lambda * xi * ge[1]]);
            let ge2 = ge[0] * ge[0] + ge[1] * ge[1];
            lp.push(-lambda * lambda * xi * ge2 - lambda * xi * (-4.0));
        }
        grad_phi.push(gp);
        grad_xi.push(gx);
        lap_phi.push(lp);
    }
    WeightGradients { grad_phi, grad_xi, lap_phi }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::TimeGrid;
    use crate::geometry::{build_eta0, build_mesh, DiskGeometry};

    fn setup(params: &Params) -> (Mesh, Eta0Field, TimeGrid, WeightSet) {
        let geom = DiskGeometry::new(1.0, 0.25, 0.5).unwrap();
        let mesh = build_mesh(&geom, 0.1).unwrap();
        let eta0 = build_eta0(&mesh, &geom).unwrap();
        let grid = TimeGrid::new(params.t_final, 32).unwrap();
        let wset = eval_weights(&mesh, &eta0, params, &grid).unwrap();
        (mesh, eta0, grid, wset)
    }

    #[test]
    fn xi_on_boundary_matches_direct_evaluation() {
        // eta0 = 0, T = 1, t = 1/2, lambda = 1, m = 2, R = 1: xi = 4 e^2.
        // The raw constructor bypasses the lambda > 1 gate; this is a
        // formula-level check.
        let fns = WeightFns::with_raw(1.5, 1.0, 2.0, 1.0, 1.0, false, 1e-300).unwrap();
        let xi = fns.xi(0.0, 0.5);
        let expect = 4.0 * (2.0f64).exp();
        assert!((xi - expect).abs() / expect < 1e-14, "xi {xi} vs {expect}");
    }

    #[test]
    fn mu_is_continuous_at_half_horizon() {
        for &t_final in &[1.0, 0.7, 2.5] {
            let fns = WeightFns::with_raw(2.0, 1.2, 2.0, t_final, 1.0, false, 1e-300).unwrap();
            let half = t_final / 2.0;
            let left = fns.mu(half);
            let right = fns.mu(half + 1e-15 * t_final);
            assert!((left - right).abs() <= 1e-12 * left);
            assert_eq!(left, 4.0 / (t_final * t_final));
        }
    }

    #[test]
    fn algebraic_relation_and_gradients() {
        let params = Params::default();
        let (mesh, eta0, _grid, wset) = setup(&params);
        let grads = weight_gradients(&mesh, &eta0, &wset);
        let fns = &wset.fns;
        let mut rng = crate::random::seeded(5);
        use rand::Rng;
        for _ in 0..2000 {
            let i = rng.random_range(0..wset.times.len());
            let v = rng.random_range(0..mesh.n_vertices());
            let t = wset.times[i];
            // phi + xi = theta(t) E2, pointwise exact.
            let lhs = wset.phi[i][v] + wset.xi[i][v];
            let rhs = fns.theta(t) * fns.e2;
            assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs());
            // grad phi = -lambda xi grad eta0 and grad phi = -grad xi.
            let gp = grads.grad_phi[i][v];
            let gx = grads.grad_xi[i][v];
            let ge = eta0.grad[v];
            for k in 0..2 {
                let expect = -wset.lambda * wset.xi[i][v] * ge[k];
                assert!((gp[k] - expect).abs() <= 1e-12 * (1.0 + expect.abs()));
                assert!((gp[k] + gx[k]).abs() <= 1e-12 * (1.0 + expect.abs()));
            }
        }
        // At the origin (vertex 0) the gradient vanishes.
        assert_eq!(grads.grad_phi[3][0], [0.0, 0.0]);
        // On the boundary the tangential component vanishes exactly.
        for (bi, &v) in mesh.boundary_loop.iter().enumerate() {
            let nu = mesh.outward_normals[bi];
            let tang = [-nu[1], nu[0]];
            let gp = grads.grad_phi[5][v];
            let tcomp = gp[0] * tang[0] + gp[1] * tang[1];
            assert!(tcomp.abs() < 1e-12 * (1.0 + gp[0].hypot(gp[1])));
        }
    }

    #[test]
    fn gradient_matches_finite_difference() {
        // Centered difference of xi along x at a random interior point,
        // O(delta^2) against the analytic formula.
        let params = Params::default();
        let fns = WeightFns::new(&params, 1.0).unwrap();
        let t = 0.37;
        let (x, y) = (0.41, -0.22);
        let eta = |x: f64, y: f64| 1.0 - x * x - y * y;
        let delta = 1e-5;
        let fd = (fns.xi(eta(x + delta, y), t) - fns.xi(eta(x - delta, y), t)) / (2.0 * delta);
        let analytic = fns.lambda * fns.xi(eta(x, y), t) * (-2.0 * x);
        assert!(
            (fd - analytic).abs() <= 1e-7 * analytic.abs().max(1.0),
            "fd {fd} vs analytic {analytic}"
        );
    }

    #[test]
    fn monotone_in_s_and_boundary_constancy() {
        let params = Params::default();
        let (mesh, _eta0, _grid, wset) = setup(&params);
        // e^{-2 s phi} strictly decreases in s at every sample (in log space).
        for i in [0, 7, 19] {
            for v in [0, 5, mesh.n_vertices() - 1] {
                let l1 = -2.0 * 1.5 * wset.phi[i][v];
                let l2 = -2.0 * 2.5 * wset.phi[i][v];
                assert!(l2 < l1);
            }
        }
        // On the boundary phi and xi are independent of the vertex.
        for i in [1, 11] {
            let vals: Vec<f64> = mesh.boundary_loop.iter().map(|&v| wset.phi[i][v]).collect();
            let (mn, mx) = vals
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
            assert!((mx - mn).abs() <= 1e-12 * mx.abs());
            let xis: Vec<f64> = mesh.boundary_loop.iter().map(|&v| wset.xi[i][v]).collect();
            let (mn, mx) = xis
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
            assert!((mx - mn).abs() <= 1e-12 * mx.abs());
        }
    }

    #[test]
    fn envelopes_match_brute_force_scan() {
        let params = Params::default();
        let (mesh, eta0, _grid, wset) = setup(&params);
        let fns = &wset.fns;
        // Spatial extrema of psi and of the exponential term over the vertex
        // set match the analytic envelope factors exactly (the extrema of
        // eta0 are attained at the center and boundary vertices).
        let mut psi_min = f64::INFINITY;
        let mut psi_max = f64::NEG_INFINITY;
        let mut e_min = f64::INFINITY;
        let mut e_max = f64::NEG_INFINITY;
        for v in 0..mesh.n_vertices() {
            let p = fns.psi(eta0.values[v]);
            let e = fns.exp_term(eta0.values[v]);
            psi_min = psi_min.min(p);
            psi_max = psi_max.max(p);
            e_min = e_min.min(e);
            e_max = e_max.max(e);
        }
        assert_eq!(psi_min, fns.psi_min);
        assert_eq!(psi_max, fns.psi_max);
        assert_eq!(e_min, fns.exp_min);
        assert_eq!(e_max, fns.exp_max);
        // phi_hat - phi_check > 0 everywhere (eta0 is not constant).
        for i in 0..wset.times.len() {
            assert!(wset.phi_hat[i] > wset.phi_check[i]);
        }
    }

    #[test]
    fn rejects_overflowing_lambda() {
        let mut params = Params::default();
        params.lambda = 400.0;
        let geom = DiskGeometry::new(1.0, 0.25, 0.5).unwrap();
        let mesh = build_mesh(&geom, 0.12).unwrap();
        let eta0 = build_eta0(&mesh, &geom).unwrap();
        let grid = TimeGrid::new(1.0, 16).unwrap();
        let err = eval_weights(&mesh, &eta0, &params, &grid).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
    }

    #[test]
    fn strict_section4_variant_differs() {
        let params = Params::default();
        let geom = DiskGeometry::new(1.0, 0.25, 0.5).unwrap();
        let mesh = build_mesh(&geom, 0.12).unwrap();
        let eta0 = build_eta0(&mesh, &geom).unwrap();
        let grid = TimeGrid::new(1.0, 16).unwrap();
        let plain = eval_weights_with(&mesh, &eta0, &params, &grid, false).unwrap();
        let strict = eval_weights_with(&mesh, &eta0, &params, &grid, true).unwrap();
        assert!(strict.phi_check[3] > plain.phi_check[3]);
        // The space-time weights are the Section 3 ones in both variants.
        assert_eq!(plain.phi[2][7], strict.phi[2][7]);
    }
}
