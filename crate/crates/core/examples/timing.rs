use glcontrol_core::*;
use std::time::Instant;

fn main() {
    for h in [0.2, 0.1, 0.05] {
        let geom = geometry::DiskGeometry::new(1.0, 0.45, 0.7).unwrap();
        let t0 = Instant::now();
        let mesh = geometry::build_mesh(&geom, h).unwrap();
        let ops = assembly::assemble(&mesh).unwrap();
        let t1 = Instant::now();
        let grid = evolution::TimeGrid::new(1.0, 64).unwrap();
        let params = geometry::Params::default();
        let st = evolution::Stepper::new(&ops, &params, grid).unwrap();
        let t2 = Instant::now();
        let u0 = assembly::BulkSurfaceField::from_fn(&mesh, |x, y| num_complex::Complex64::new((1.0-x*x-y*y), 0.3*x*y));
        let traj = st.forward(&u0, evolution::ForwardSources::none()).unwrap();
        let t3 = Instant::now();
        println!("h={h}: n={} assemble={:?} stepper(eig)={:?} forward64={:?} |y(T)|max={:.3e}",
            mesh.n_vertices(), t1-t0, t2-t1, t3-t2, traj.frames[64].max_abs());
    }
}
