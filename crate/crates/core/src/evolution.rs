//! Theta-scheme time integration of the coupled bulk-surface system.
//!
//! Forward system (weak, trace-identified): M u' + (1+alpha i)K u =
//! M_bulk f + M_surf f_Gamma + M_ctrl h, with M = M_bulk + M_surf and
//! K = a K_bulk + b K_surf. One step reads
//!
//!   A+ u^{n+1} = A- u^n + dt (sources),   A± = M ± theta-weighted dt (1+alpha i) K.
//!
//! The adjoint stepper is the algebraic conjugate transpose of the forward
//! step map (discretize-then-optimize), which makes the discrete duality
//! identity hold to solver precision; `duality_check` evaluates its defect.
//! The adjoint trajectory stores the step multipliers: `frames[n]` for
//! n < N is the multiplier attached to step n (for Crank-Nicolson it sits
//! near t_{n+1/2}; for implicit Euler it is the nodal value at t_n), and
//! `frames[N]` is the terminal datum. `adjoint_initial_value` completes the
//! trajectory to t = 0.

use num_complex::Complex64;
use serde::Serialize;

use crate::assembly::{hk_norms, BulkSurfaceField, OperatorSet};
use crate::geometry::Params;
use crate::linalg::{CVec, ModalBasis};
use crate::sparse::CsrMatrix;
use crate::{Error, Result};

/// Uniform time grid on [0, T]. Weights are only ever evaluated at interior
/// nodes or step midpoints, never at the singular endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimeGrid {
    n_steps: usize,
    t_final: f64,
    dt: f64,
}

impl TimeGrid {
    pub fn new(t_final: f64, n_steps: usize) -> Result<Self> {
        if !(t_final > 0.0) || n_steps < 2 {
            return Err(Error::precondition("need T > 0 and at least 2 time steps"));
        }
        Ok(TimeGrid { n_steps, t_final, dt: t_final / n_steps as f64 })
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn n_nodes(&self) -> usize {
        self.n_steps + 1
    }

    pub fn t_final(&self) -> f64 {
        self.t_final
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn node(&self, n: usize) -> f64 {
        n as f64 * self.dt
    }

    /// Midpoint of step n (cell [t_n, t_{n+1}]).
    pub fn midpoint(&self, n: usize) -> f64 {
        (n as f64 + 0.5) * self.dt
    }

    /// Interior node times t_1..t_{N-1}.
    pub fn interior_nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (1..self.n_steps).map(move |n| self.node(n))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TrajKind {
    Forward,
    Adjoint,
    Control,
    Source,
}

/// How nodal source frames are sampled on step n.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceRule {
    /// theta f^{n+1} + (1-theta) f^n (second order for Crank-Nicolson).
    ThetaPoint,
    /// frame[n] used as the per-step value (for controls that live on the
    /// step multipliers of the adjoint).
    LeftStep,
}

/// Time-indexed complex bulk-surface fields; frame count = steps + 1.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub grid: TimeGrid,
    pub frames: Vec<BulkSurfaceField>,
    pub kind: TrajKind,
}

impl Trajectory {
    pub fn zeros(grid: TimeGrid, n: usize, kind: TrajKind) -> Self {
        Trajectory {
            grid,
            frames: (0..grid.n_nodes()).map(|_| BulkSurfaceField::zeros(n)).collect(),
            kind,
        }
    }

    pub fn from_frames(grid: TimeGrid, frames: Vec<BulkSurfaceField>, kind: TrajKind) -> Result<Self> {
        if frames.len() != grid.n_nodes() {
            return Err(Error::SizeMismatch(format!(
                "{} frames on a grid with {} nodes",
                frames.len(),
                grid.n_nodes()
            )));
        }
        Ok(Trajectory { grid, frames, kind })
    }

    pub fn n_dof(&self) -> usize {
        self.frames.first().map(|f| f.len()).unwrap_or(0)
    }

    /// Per-step sample of the stored frames under `rule`.
    pub fn step_value(&self, n: usize, theta: f64, rule: SourceRule) -> CVec {
        match rule {
            SourceRule::LeftStep => self.frames[n].dof.clone(),
            SourceRule::ThetaPoint => {
                let a = &self.frames[n].dof;
                let b = &self.frames[n + 1].dof;
                a.iter()
                    .zip(b)
                    .map(|(x, y)| x * (1.0 - theta) + y * theta)
                    .collect()
            }
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.frames.iter().fold(0.0, |m, f| m.max(f.max_abs()))
    }

    /// CSV rows (node_index, t, vertex_index, re, im).
    pub fn write_csv(&self, out: &mut dyn std::io::Write) -> std::io::Result<()> {
        use crate::numfmt::g17;
        writeln!(out, "node_index,t,vertex_index,re,im")?;
        for (n, frame) in self.frames.iter().enumerate() {
            let t = self.grid.node(n);
            for (v, z) in frame.dof.iter().enumerate() {
                writeln!(out, "{},{},{},{},{}", n, g17(t), v, g17(z.re), g17(z.im))?;
            }
        }
        Ok(())
    }
}

/// Optional sources of the forward problem: `f` acts through M_bulk,
/// `f_gamma` through M_surf (independent L2(Omega) x L2(Gamma) data), and
/// `h` through the control mass matrix. Trace-identified sources pass the
/// same trajectory as `f` and `f_gamma`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ForwardSources<'a> {
    pub f: Option<&'a Trajectory>,
    pub f_gamma: Option<&'a Trajectory>,
    pub h: Option<&'a Trajectory>,
    pub h_rule: SourceRule,
}

impl<'a> ForwardSources<'a> {
    pub fn none() -> Self {
        ForwardSources { f: None, f_gamma: None, h: None, h_rule: SourceRule::ThetaPoint }
    }

    pub fn identified(f: &'a Trajectory) -> Self {
        ForwardSources { f: Some(f), f_gamma: Some(f), h: None, h_rule: SourceRule::ThetaPoint }
    }

    pub fn control(h: &'a Trajectory, rule: SourceRule) -> Self {
        ForwardSources { f: None, f_gamma: None, h: Some(h), h_rule: rule }
    }
}

impl Default for SourceRule {
    fn default() -> Self {
        SourceRule::ThetaPoint
    }
}

/// Precomputed step operators for one (mesh, params, grid) combination.
/// Immutable and shareable; a single modal decomposition of (K, M) serves
/// forward steps, adjoint steps and mass solves.
pub struct Stepper<'a> {
    pub ops: &'a OperatorSet,
    pub params: Params,
    pub grid: TimeGrid,
    mass: CsrMatrix,
    kab: CsrMatrix,
    basis: ModalBasis,
    /// theta dt (1 + alpha i).
    z_plus: Complex64,
    /// (1 - theta) dt (1 + alpha i).
    z_minus: Complex64,
}

impl<'a> Stepper<'a> {
    pub fn new(ops: &'a OperatorSet, params: &Params, grid: TimeGrid) -> Result<Self> {
        params.validate()?;
        let mass = CsrMatrix::scaled_sum(1.0, &ops.m_bulk, 1.0, &ops.m_surf);
        let kab = CsrMatrix::scaled_sum(params.a, &ops.k_bulk, params.b, &ops.k_surf);
        let basis = ModalBasis::new(&mass, &kab)?;
        let unit = Complex64::new(1.0, params.alpha);
        let theta = params.theta_scheme;
        Ok(Stepper {
            ops,
            params: params.clone(),
            grid,
            mass,
            kab,
            basis,
            z_plus: unit * (theta * grid.dt()),
            z_minus: unit * ((1.0 - theta) * grid.dt()),
        })
    }

    pub fn n(&self) -> usize {
        self.ops.n
    }

    pub fn dt(&self) -> f64 {
        self.grid.dt()
    }

    pub fn theta(&self) -> f64 {
        self.params.theta_scheme
    }

    pub fn apply_mass(&self, x: &[Complex64]) -> CVec {
        let mut y = vec![Complex64::new(0.0, 0.0); self.n()];
        self.mass.matvec_complex(x, &mut y);
        y
    }

    pub fn mass_solve(&self, b: &[Complex64]) -> CVec {
        self.basis.mass_solve(b)
    }

    /// A+ x = M x + z_plus K x.
    pub fn apply_aplus(&self, x: &[Complex64]) -> CVec {
        let mut y = self.apply_mass(x);
        self.kab.matvec_complex_add(self.z_plus, x, &mut y);
        y
    }

    /// A- x = M x - z_minus K x.
    pub fn apply_aminus(&self, x: &[Complex64]) -> CVec {
        let mut y = self.apply_mass(x);
        self.kab.matvec_complex_add(-self.z_minus, x, &mut y);
        y
    }

    /// Conjugate-transposed variants (K and M are real symmetric).
    pub fn apply_aplus_h(&self, x: &[Complex64]) -> CVec {
        let mut y = self.apply_mass(x);
        self.kab.matvec_complex_add(self.z_plus.conj(), x, &mut y);
        y
    }

    pub fn apply_aminus_h(&self, x: &[Complex64]) -> CVec {
        let mut y = self.apply_mass(x);
        self.kab.matvec_complex_add(-self.z_minus.conj(), x, &mut y);
        y
    }

    pub fn aplus_solve(&self, b: &[Complex64]) -> CVec {
        self.basis.shifted_solve(self.z_plus, b)
    }

    pub fn aplus_h_solve(&self, b: &[Complex64]) -> CVec {
        self.basis.shifted_solve(self.z_plus.conj(), b)
    }

    /// Re <u, v>_M = Re(conj(v)^T M u).
    pub fn mass_pair(&self, u: &[Complex64], v: &[Complex64]) -> f64 {
        let mu = self.apply_mass(u);
        mu.iter().zip(v).map(|(a, b)| (a * b.conj()).re).sum()
    }

    pub fn ctrl_pair(&self, u: &[Complex64], v: &[Complex64]) -> f64 {
        let mut cu = vec![Complex64::new(0.0, 0.0); self.n()];
        self.ops.m_ctrl.matvec_complex(u, &mut cu);
        cu.iter().zip(v).map(|(a, b)| (a * b.conj()).re).sum()
    }

    fn check_finite(u: &[Complex64], step: usize, what: &str) -> Result<()> {
        if u.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::numerical(format!("{what}: non-finite state at step {step}")));
        }
        Ok(())
    }

    /// Integrates the forward linear system from `u0`.
    pub fn forward(&self, u0: &BulkSurfaceField, sources: ForwardSources) -> Result<Trajectory> {
        let n = self.n();
        if u0.len() != n {
            return Err(Error::SizeMismatch("u0/operators".into()));
        }
        for traj in [sources.f, sources.f_gamma, sources.h].into_iter().flatten() {
            if traj.n_dof() != n || traj.grid != self.grid {
                return Err(Error::SizeMismatch("source trajectory/grid".into()));
            }
        }
        let dt = self.dt();
        let theta = self.theta();
        let mut frames = Vec::with_capacity(self.grid.n_nodes());
        frames.push(u0.clone());
        let mut current = u0.dof.clone();
        for step in 0..self.grid.n_steps() {
            let mut rhs = self.apply_aminus(&current);
            if let Some(f) = sources.f {
                let fv = f.step_value(step, theta, SourceRule::ThetaPoint);
                self.ops.m_bulk.matvec_complex_add(Complex64::new(dt, 0.0), &fv, &mut rhs);
            }
            if let Some(fg) = sources.f_gamma {
                let fv = fg.step_value(step, theta, SourceRule::ThetaPoint);
                self.ops.m_surf.matvec_complex_add(Complex64::new(dt, 0.0), &fv, &mut rhs);
            }
            if let Some(h) = sources.h {
                let hv = h.step_value(step, theta, sources.h_rule);
                self.ops.m_ctrl.matvec_complex_add(Complex64::new(dt, 0.0), &hv, &mut rhs);
            }
            current = self.aplus_solve(&rhs);
            Self::check_finite(&current, step + 1, "forward solve")?;
            frames.push(BulkSurfaceField { dof: current.clone() });
        }
        Trajectory::from_frames(self.grid, frames, TrajKind::Forward)
    }

    /// Integrates the adjoint system backward from `z_terminal`, as the exact
    /// conjugate transpose of the forward step map. Sources (g, g_Gamma) act
    /// at interior nodes. Returned frames hold the step multipliers (see
    /// module docs); `frames[N]` is the terminal datum.
    pub fn adjoint(
        &self,
        z_terminal: &BulkSurfaceField,
        g: Option<&Trajectory>,
        g_gamma: Option<&Trajectory>,
    ) -> Result<Trajectory> {
        let n = self.n();
        if z_terminal.len() != n {
            return Err(Error::SizeMismatch("zT/operators".into()));
        }
        for traj in [g, g_gamma].into_iter().flatten() {
            if traj.n_dof() != n || traj.grid != self.grid {
                return Err(Error::SizeMismatch("adjoint source/grid".into()));
            }
        }
        let steps = self.grid.n_steps();
        let dt = self.dt();
        let mut frames = vec![BulkSurfaceField::zeros(n); steps + 1];
        frames[steps] = z_terminal.clone();
        // Terminal multiplier: A+^H zeta^{N-1} = M z_T.
        let mut zeta = self.aplus_h_solve(&self.apply_mass(&z_terminal.dof));
        Self::check_finite(&zeta, steps - 1, "adjoint solve")?;
        frames[steps - 1] = BulkSurfaceField { dof: zeta.clone() };
        // Backward: A+^H zeta^{k-1} = A-^H zeta^k - dt M g^k.
        for k in (1..steps).rev() {
            let mut rhs = self.apply_aminus_h(&zeta);
            if let Some(g) = g {
                self.ops.m_bulk.matvec_complex_add(
                    Complex64::new(-dt, 0.0),
                    &g.frames[k].dof,
                    &mut rhs,
                );
            }
            if let Some(gg) = g_gamma {
                self.ops.m_surf.matvec_complex_add(
                    Complex64::new(-dt, 0.0),
                    &gg.frames[k].dof,
                    &mut rhs,
                );
            }
            zeta = self.aplus_h_solve(&rhs);
            Self::check_finite(&zeta, k - 1, "adjoint solve")?;
            frames[k - 1] = BulkSurfaceField { dof: zeta.clone() };
        }
        Trajectory::from_frames(self.grid, frames, TrajKind::Adjoint)
    }

    /// Completes an adjoint trajectory to t = 0: z(0) = M^{-1} A-^H zeta^0.
    /// This is the value paired with u0 in the exact duality identity.
    pub fn adjoint_initial_value(&self, adjoint: &Trajectory) -> BulkSurfaceField {
        let v = self.apply_aminus_h(&adjoint.frames[0].dof);
        BulkSurfaceField { dof: self.mass_solve(&v) }
    }
}

/// Relative defect of the discrete duality identity
///   Re<y(T), zT>_M - Re<u0, z(0)>_M
///     = sum_n dt Re<f_n, zeta_n> + sum_n dt Re<h_n, zeta_n>_ctrl
///       + sum_k dt Re<y_k, g_k>_M
/// for the forward solution with data (u0, f, h) and the adjoint with data
/// (zT, g). Zero to solver precision because the adjoint stepper is the
/// algebraic adjoint of the forward one.
#[allow(clippy::too_many_arguments)]
pub fn duality_check(
    st: &Stepper,
    u0: &BulkSurfaceField,
    f: Option<&Trajectory>,
    f_gamma: Option<&Trajectory>,
    h: Option<&Trajectory>,
    z_terminal: &BulkSurfaceField,
    g: Option<&Trajectory>,
    g_gamma: Option<&Trajectory>,
) -> Result<f64> {
    let sources = ForwardSources { f, f_gamma, h, h_rule: SourceRule::ThetaPoint };
    let y = st.forward(u0, sources)?;
    let z = st.adjoint(z_terminal, g, g_gamma)?;
    let steps = st.grid.n_steps();
    let dt = st.dt();
    let theta = st.theta();

    let z0 = st.adjoint_initial_value(&z);
    let terminal = st.mass_pair(&y.frames[steps].dof, &z_terminal.dof);
    let initial = st.mass_pair(&u0.dof, &z0.dof);

    let mut sum_f = 0.0;
    let mut sum_h = 0.0;
    for n in 0..steps {
        let zeta = &z.frames[n].dof;
        if let Some(f) = f {
            let fv = f.step_value(n, theta, SourceRule::ThetaPoint);
            let mut mf = vec![Complex64::new(0.0, 0.0); st.n()];
            st.ops.m_bulk.matvec_complex(&fv, &mut mf);
            sum_f += dt * mf.iter().zip(zeta).map(|(a, b)| (a * b.conj()).re).sum::<f64>();
        }
        if let Some(fg) = f_gamma {
            let fv = fg.step_value(n, theta, SourceRule::ThetaPoint);
            let mut mf = vec![Complex64::new(0.0, 0.0); st.n()];
            st.ops.m_surf.matvec_complex(&fv, &mut mf);
            sum_f += dt * mf.iter().zip(zeta).map(|(a, b)| (a * b.conj()).re).sum::<f64>();
        }
        if let Some(h) = h {
            let hv = h.step_value(n, theta, SourceRule::ThetaPoint);
            sum_h += dt * st.ctrl_pair(&hv, zeta);
        }
    }
    let mut sum_g = 0.0;
    for k in 1..steps {
        if let Some(g) = g {
            let mut mg = vec![Complex64::new(0.0, 0.0); st.n()];
            st.ops.m_bulk.matvec_complex(&g.frames[k].dof, &mut mg);
            sum_g += dt * mg.iter().zip(&y.frames[k].dof).map(|(a, b)| (a * b.conj()).re).sum::<f64>();
        }
        if let Some(gg) = g_gamma {
            let mut mg = vec![Complex64::new(0.0, 0.0); st.n()];
            st.ops.m_surf.matvec_complex(&gg.frames[k].dof, &mut mg);
            sum_g += dt * mg.iter().zip(&y.frames[k].dof).map(|(a, b)| (a * b.conj()).re).sum::<f64>();
        }
    }

    let defect = (terminal - initial - sum_f - sum_h - sum_g).abs();
    let scale = terminal.abs() + initial.abs() + sum_f.abs() + sum_h.abs() + sum_g.abs();
    Ok(if scale == 0.0 { defect } else { defect / scale })
}

/// Nodal cubic source -c (1 + gamma i) |u|^2 u of a trajectory; the boundary
/// carries the same vertex-wise rule through the shared trace.
pub fn cubic_source(params: &Params, traj: &Trajectory) -> Trajectory {
    let k = Complex64::new(1.0, params.gamma) * (-params.c);
    let frames = traj
        .frames
        .iter()
        .map(|f| BulkSurfaceField {
            dof: f.dof.iter().map(|z| k * z.norm_sqr() * z).collect(),
        })
        .collect();
    Trajectory { grid: traj.grid, frames, kind: TrajKind::Source }
}

/// L2(0,T; L2)-type quadrature norm of a source trajectory (theta-point
/// samples, bulk+surface measure).
pub fn source_norm_l2l2(st: &Stepper, traj: &Trajectory) -> f64 {
    let mut acc = 0.0;
    for n in 0..st.grid.n_steps() {
        let v = traj.step_value(n, st.theta(), SourceRule::ThetaPoint);
        acc += st.dt() * st.mass_pair(&v, &v);
    }
    acc.max(0.0).sqrt()
}

#[derive(Debug, Clone, Serialize)]
pub struct CubicIteration {
    pub defect: f64,
    pub contraction_factor: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CubicLog {
    pub iterations: Vec<CubicIteration>,
    pub converged: bool,
    /// Geometric-mean contraction factor over the recorded iterations.
    pub empirical_contraction: Option<f64>,
}

/// Solves the cubic system by Picard iteration on the frozen-source linear
/// problem: L u = f - c(1+gamma i)|z|^2 z (+ control), iterated until the
/// trajectories agree in the C0(H1)-type discrete norm.
pub fn solve_cubic(
    st: &Stepper,
    u0: &BulkSurfaceField,
    f: Option<&Trajectory>,
    h: Option<&Trajectory>,
    smallness_gate: f64,
) -> Result<(Trajectory, CubicLog)> {
    let h1_u0 = hk_norms(st.ops, u0)?.h1;
    let f_norm = f.map(|f| source_norm_l2l2(st, f)).unwrap_or(0.0);
    if h1_u0 + f_norm > smallness_gate {
        return Err(Error::precondition(format!(
            "|u0|_H1 + |f| = {} exceeds the smallness gate {}",
            h1_u0 + f_norm,
            smallness_gate
        )));
    }

    let c0h1 = |a: &Trajectory, b: &Trajectory| -> f64 {
        let mut worst = 0.0f64;
        for (fa, fb) in a.frames.iter().zip(&b.frames) {
            let diff = BulkSurfaceField {
                dof: fa.dof.iter().zip(&fb.dof).map(|(x, y)| x - y).collect(),
            };
            worst = worst.max(hk_norms(st.ops, &diff).map(|n| n.h1).unwrap_or(f64::INFINITY));
        }
        worst
    };
    let sup_h1 = |a: &Trajectory| -> f64 {
        a.frames
            .iter()
            .map(|fr| hk_norms(st.ops, fr).map(|n| n.h1).unwrap_or(f64::INFINITY))
            .fold(0.0, f64::max)
    };

    let mut previous = st.forward(
        u0,
        ForwardSources { f, f_gamma: f, h, h_rule: SourceRule::ThetaPoint },
    )?;
    let mut log = CubicLog { iterations: Vec::new(), converged: false, empirical_contraction: None };
    let mut last_defect: Option<f64> = None;
    let mut rising = 0usize;
    for _it in 0..st.params.picard_maxit {
        let cubic = cubic_source(&st.params, &previous);
        let combined = match f {
            None => cubic,
            Some(f) => {
                let frames = f
                    .frames
                    .iter()
                    .zip(&cubic.frames)
                    .map(|(a, b)| BulkSurfaceField {
                        dof: a.dof.iter().zip(&b.dof).map(|(x, y)| x + y).collect(),
                    })
                    .collect();
                Trajectory { grid: st.grid, frames, kind: TrajKind::Source }
            }
        };
        let next = st.forward(
            u0,
            ForwardSources {
                f: Some(&combined),
                f_gamma: Some(&combined),
                h,
                h_rule: SourceRule::ThetaPoint,
            },
        )?;
        let defect = c0h1(&next, &previous);
        let factor = last_defect.map(|d| if d > 0.0 { defect / d } else { 0.0 });
        log.iterations.push(CubicIteration { defect, contraction_factor: factor });
        if let Some(fac) = factor {
            if fac >= 1.0 {
                rising += 1;
                if rising >= 3 {
                    return Err(Error::divergence(format!(
                        "cubic Picard iteration non-contractive for 3 iterations (last factor {fac:.3})"
                    )));
                }
            } else {
                rising = 0;
            }
        }
        let scale = sup_h1(&next).max(1.0);
        previous = next;
        if defect <= st.params.picard_tol * scale {
            log.converged = true;
            break;
        }
        last_defect = Some(defect);
    }
    if !log.converged {
        return Err(Error::divergence(format!(
            "cubic Picard iteration did not converge in {} iterations",
            st.params.picard_maxit
        )));
    }
    let factors: Vec<f64> = log
        .iterations
        .iter()
        .filter_map(|i| i.contraction_factor)
        .filter(|f| *f > 0.0)
        .collect();
    if !factors.is_empty() {
        let ln_mean = factors.iter().map(|f| f.ln()).sum::<f64>() / factors.len() as f64;
        log.empirical_contraction = Some(ln_mean.exp());
    }
    Ok((previous, log))
}

/// Per-step residual of the cubic scheme for a given trajectory and control:
/// max_n |M^{-1}(A+ u^{n+1} - A- u^n - dt sources)|_M / max(1, |u|). Zero
/// (to Picard tolerance) when `traj` solves the discrete cubic dynamics.
pub fn cubic_residual(st: &Stepper, traj: &Trajectory, f: Option<&Trajectory>, h: Option<&Trajectory>) -> f64 {
    let cubic = cubic_source(&st.params, traj);
    let dt = st.dt();
    let theta = st.theta();
    let mut worst = 0.0f64;
    let scale = traj
        .frames
        .iter()
        .map(|fr| st.mass_pair(&fr.dof, &fr.dof).max(0.0).sqrt())
        .fold(0.0, f64::max)
        .max(1.0);
    for n in 0..st.grid.n_steps() {
        let mut r = st.apply_aplus(&traj.frames[n + 1].dof);
        let am = st.apply_aminus(&traj.frames[n].dof);
        for i in 0..st.n() {
            r[i] -= am[i];
        }
        let cv = cubic.step_value(n, theta, SourceRule::ThetaPoint);
        st.ops.m_bulk.matvec_complex_add(Complex64::new(-dt, 0.0), &cv, &mut r);
        st.ops.m_surf.matvec_complex_add(Complex64::new(-dt, 0.0), &cv, &mut r);
        if let Some(f) = f {
            let fv = f.step_value(n, theta, SourceRule::ThetaPoint);
            st.ops.m_bulk.matvec_complex_add(Complex64::new(-dt, 0.0), &fv, &mut r);
            st.ops.m_surf.matvec_complex_add(Complex64::new(-dt, 0.0), &fv, &mut r);
        }
        if let Some(h) = h {
            let hv = h.step_value(n, theta, SourceRule::ThetaPoint);
            st.ops.m_ctrl.matvec_complex_add(Complex64::new(-dt, 0.0), &hv, &mut r);
        }
        let rf = st.mass_solve(&r);
        let rn = st.mass_pair(&rf, &rf).max(0.0).sqrt() / dt;
        worst = worst.max(rn);
    }
    worst / scale
}

#[derive(Debug, Clone, Serialize)]
pub struct EnergyReport {
    pub node_times: Vec<f64>,
    pub l2: Vec<f64>,
    pub h1: Vec<f64>,
    /// Bulk Dirichlet energy u^T K_bulk u per node.
    pub grad_bulk: Vec<f64>,
    /// Surface Dirichlet energy per node.
    pub grad_surf: Vec<f64>,
    /// (sup_n L2 + L2-in-time H1) / L2(0), the source-free stability ratio.
    pub c1_ratio: f64,
}

pub fn energy_report(traj: &Trajectory, ops: &OperatorSet) -> Result<EnergyReport> {
    let mut l2 = Vec::with_capacity(traj.frames.len());
    let mut h1 = Vec::with_capacity(traj.frames.len());
    let mut grad_bulk = Vec::with_capacity(traj.frames.len());
    let mut grad_surf = Vec::with_capacity(traj.frames.len());
    for frame in &traj.frames {
        let norms = hk_norms(ops, frame)?;
        l2.push(norms.l2);
        h1.push(norms.h1);
        grad_bulk.push(ops.k_bulk.hermitian_form(&frame.dof).max(0.0));
        grad_surf.push(ops.k_surf.hermitian_form(&frame.dof).max(0.0));
    }
    let sup_l2 = l2.iter().fold(0.0f64, |a, &b| a.max(b));
    let dt = traj.grid.dt();
    let l2t_h1 = (l2.iter().zip(&h1).map(|(_, h)| h * h * dt).sum::<f64>()).sqrt();
    let denom = l2[0];
    let c1_ratio = if denom > 0.0 { (sup_l2 + l2t_h1) / denom } else { 0.0 };
    Ok(EnergyReport {
        node_times: (0..traj.frames.len()).map(|n| traj.grid.node(n)).collect(),
        l2,
        h1,
        grad_bulk,
        grad_surf,
        c1_ratio,
    })
}
