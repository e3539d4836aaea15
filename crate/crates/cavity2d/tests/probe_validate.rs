use cavity2d::geometry::{build_engine, build_pot, build_rough};
use cavity2d::scattering::*;
use cavity2d::{Point2, WaveContext};
use std::sync::Arc;

#[test]
fn probe() {
    let cases: Vec<(&str, Arc<cavity2d::geometry::SceneGeometry>, f64, usize)> = vec![
        ("pot", Arc::new(build_pot()), 1.0, 2),
        ("pot", Arc::new(build_pot()), 10.0, 10),
        ("pot", Arc::new(build_pot()), 20.0, 20),
        ("pot", Arc::new(build_pot()), 40.0, 40),
        ("engine", Arc::new(build_engine()), 1.0, 2),
        ("engine", Arc::new(build_engine()), 10.0, 10),
        ("engine", Arc::new(build_engine()), 20.0, 20),
        ("rough", Arc::new(build_rough()), 1.0, 20),
        ("rough", Arc::new(build_rough()), 10.0, 20),
        ("rough", Arc::new(build_rough()), 20.0, 40),
    ];
    for (name, scene, k, n_mid) in cases {
        let ctx = WaveContext::new(k).unwrap();
        let disc = Discretization { n_mid, ..Default::default() };
        let solver = SolverConfig::default();
        let t = std::time::Instant::now();
        let sys = FactorizedSystem::new(scene, ctx, &disc, &solver).unwrap();
        let (_sol, report) = validate_point_source(&sys, Point2::new(5.0, 12.0)).unwrap();
        println!(
            "{name:6} k={k:4} n_tot={:5} {} E={:.3e} ext={:.3e} t_factor={:6.2}s t_total={:6.2}s",
            report.n_tot, report.method,
            report.e_error.unwrap(), report.exterior_residual.unwrap(),
            report.t_factor, t.elapsed().as_secs_f64()
        );
    }
}
