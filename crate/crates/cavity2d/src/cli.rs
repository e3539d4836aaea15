//! Batch command layer behind the `cavity2d` binary: validate, solve, rcs,
//! field and bench, with CSV output (one `#`-prefixed metadata preamble, a
//! single header line, then rows) and an optional JSON mirror.
//!
//! Exit codes: 0 ok, 2 config error, 3 geometry invalid, 4 solver failure,
//! 5 accuracy threshold exceeded.

use crate::config::RunConfig;
use crate::geometry::{classify_point, validate_scene, RegionLabel, SceneViolation};
use crate::point::Point2;
use crate::scattering::{
    backscatter_rcs, eval_scattered_field, validate_point_source, FactorizedSystem,
    ScatteringError,
};
use crate::specfun::WaveContext;
use rayon::prelude::*;
use std::fmt::Write as _;
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("geometry invalid:\n{}", .0.iter().map(|v| format!("  - {v}")).collect::<Vec<_>>().join("\n"))]
    Geometry(Vec<SceneViolation>),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("accuracy threshold exceeded: worst E_error {worst:.3e} > {threshold:.3e}")]
    Accuracy { worst: f64, threshold: f64 },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Geometry(_) => 3,
            CliError::Solver(_) | CliError::Io(_) => 4,
            CliError::Accuracy { .. } => 5,
        }
    }
}

impl From<ScatteringError> for CliError {
    fn from(e: ScatteringError) -> Self {
        CliError::Solver(e.to_string())
    }
}

/// Structured output of a command: fixed column order, rows of optional
/// cells (missing values stay empty), plus `#`-prefixed footer comments.
#[derive(Debug, Clone)]
pub struct OutputRecord {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Option<String>>>,
    pub footers: Vec<String>,
}

impl OutputRecord {
    fn new(columns: Vec<&'static str>) -> Self {
        OutputRecord { columns, rows: Vec::new(), footers: Vec::new() }
    }

    /// CSV document: preamble (config echo, timestamp, version), header,
    /// rows, footers. Everything `#`-prefixed is metadata; the body between
    /// the header and the footers is byte-deterministic for a fixed config.
    pub fn to_csv(&self, config_echo: &str) -> String {
        let mut out = String::new();
        let stamp = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let _ = writeln!(out, "# cavity2d v{}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(out, "# unix_time: {stamp}");
        let _ = writeln!(out, "# config: {config_echo}");
        let _ = writeln!(out, "{}", self.columns.join(","));
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|c| c.clone().unwrap_or_default())
                .collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        for f in &self.footers {
            let _ = writeln!(out, "# {f}");
        }
        out
    }

    /// JSON mirror of the same records.
    pub fn to_json(&self) -> String {
        let rows: Vec<serde_json::Value> = self
            .rows
            .iter()
            .map(|row| {
                let mut obj = serde_json::Map::new();
                for (c, v) in self.columns.iter().zip(row) {
                    obj.insert(
                        c.to_string(),
                        match v {
                            Some(s) => serde_json::Value::String(s.clone()),
                            None => serde_json::Value::Null,
                        },
                    );
                }
                serde_json::Value::Object(obj)
            })
            .collect();
        serde_json::to_string_pretty(&rows).expect("json rows")
    }
}

fn fnum(v: f64) -> Option<String> {
    Some(format!("{v:.12e}"))
}

fn prepared(cfg: &RunConfig) -> Result<Arc<crate::geometry::SceneGeometry>, CliError> {
    let errs = cfg.validate();
    if !errs.is_empty() {
        return Err(CliError::Config(errs.join("; ")));
    }
    let scene = cfg.build_scene().map_err(CliError::Config)?;
    let violations = validate_scene(&scene);
    if !violations.is_empty() {
        return Err(CliError::Geometry(violations));
    }
    Ok(Arc::new(scene))
}

fn factorize(cfg: &RunConfig, scene: &Arc<crate::geometry::SceneGeometry>, k: f64)
    -> Result<FactorizedSystem, CliError>
{
    let ctx = WaveContext::new(k).map_err(|e| CliError::Config(e.to_string()))?;
    Ok(FactorizedSystem::new(
        scene.clone(),
        ctx,
        &cfg.discretization(),
        &cfg.solver(),
    )?)
}

/// Point-source validation over the configured wavenumber ladder. Exits 5
/// when any row's `E_error` exceeds the configured threshold.
pub fn cmd_validate(cfg: &RunConfig) -> Result<OutputRecord, CliError> {
    let scene = prepared(cfg)?;
    let mut rec = OutputRecord::new(vec![
        "k", "n_corner", "n_mid", "n_tot", "t_factor", "t_solve", "e_error",
    ]);
    let mut worst = 0.0f64;
    for k in cfg.wavenumbers() {
        let sys = factorize(cfg, &scene, k)?;
        let (_, report) = validate_point_source(&sys, cfg.source_point())?;
        let e = report.e_error.unwrap_or(f64::NAN);
        worst = worst.max(e);
        rec.rows.push(vec![
            fnum(k),
            Some(cfg.n_corner.to_string()),
            Some(cfg.n_mid.unwrap_or(2).to_string()),
            Some(report.n_tot.to_string()),
            fnum(report.t_factor),
            fnum(report.t_solve),
            fnum(e),
        ]);
    }
    if worst > cfg.error_threshold {
        return Err(CliError::Accuracy { worst, threshold: cfg.error_threshold });
    }
    Ok(rec)
}

/// Solve the plane-wave problem for the configured angles and emit the
/// densities at every node.
pub fn cmd_solve(cfg: &RunConfig) -> Result<OutputRecord, CliError> {
    let scene = prepared(cfg)?;
    let sys = factorize(cfg, &scene, cfg.k)?;
    let mesh = &sys.op.mesh;
    let lay = &sys.op.layout;
    let angles = cfg.angle_grid();
    let rhs: Vec<_> = angles
        .iter()
        .map(|&th| {
            crate::assembly::rhs_scattering(mesh, lay, &sys.op.ctx, th, cfg.reflection_sign)
        })
        .collect();
    let (sols, t_solve, _) = sys.solve(&rhs)?;
    let mut rec = OutputRecord::new(vec![
        "theta", "part", "x", "y", "re_mu", "im_mu", "re_sigma", "im_sigma",
    ]);
    for (sol, &theta) in sols.iter().zip(&angles) {
        for node in 0..mesh.n_nodes() {
            let p = mesh.node_point(node);
            let part = match mesh.node_part(node) {
                crate::geometry::BoundaryPart::StripLeft => "strip_left",
                crate::geometry::BoundaryPart::Cavity => "cavity",
                crate::geometry::BoundaryPart::StripRight => "strip_right",
                crate::geometry::BoundaryPart::Dome => "dome",
            };
            let (mu, sigma) = if node < mesh.bg_nodes {
                (sol.mu_boundary[node], None)
            } else {
                let d = node - mesh.bg_nodes;
                (sol.mu_dome[d], Some(sol.sigma_dome[d]))
            };
            rec.rows.push(vec![
                fnum(theta),
                Some(part.to_string()),
                fnum(p.x),
                fnum(p.y),
                fnum(mu.re),
                fnum(mu.im),
                sigma.map(|s| format!("{:.12e}", s.re)),
                sigma.map(|s| format!("{:.12e}", s.im)),
            ]);
        }
    }
    rec.footers.push(format!(
        "n_tot={} t_factor={:.3}s t_solve={:.3}s method={}",
        sys.op.n_tot(),
        sys.t_factor,
        t_solve,
        sys.method_name()
    ));
    Ok(rec)
}

/// Backscatter RCS sweep: one factorization, all angles as batched
/// right-hand sides.
pub fn cmd_rcs(cfg: &RunConfig) -> Result<OutputRecord, CliError> {
    let scene = prepared(cfg)?;
    let sys = factorize(cfg, &scene, cfg.k)?;
    let angles = cfg.angle_grid();
    let (sweep, report) = backscatter_rcs(&sys, &angles, cfg.reflection_sign)?;
    let mut rec = OutputRecord::new(vec!["theta", "rcs_db"]);
    for (a, db) in sweep.angles.iter().zip(&sweep.rcs_db) {
        rec.rows.push(vec![fnum(*a), fnum(*db)]);
    }
    rec.footers.push(format!(
        "n_tot={} t_factor={:.3}s t_solve={:.3}s per_angle={:.6}s method={}",
        report.n_tot,
        report.t_factor,
        report.t_solve,
        report.t_solve / angles.len().max(1) as f64,
        report.method
    ));
    Ok(rec)
}

/// Scattered field on a rectangular grid for the first configured angle.
/// Below-ground and on-boundary points keep empty field cells.
pub fn cmd_field(cfg: &RunConfig) -> Result<OutputRecord, CliError> {
    let scene = prepared(cfg)?;
    let grid = cfg.grid.clone().ok_or_else(|| {
        CliError::Config("field command needs a grid: {\"bbox\": [...], \"nx\": .., \"ny\": ..}".into())
    })?;
    let sys = factorize(cfg, &scene, cfg.k)?;
    let mesh = &sys.op.mesh;
    let lay = &sys.op.layout;
    let theta = cfg.angle_grid().first().copied().unwrap_or(std::f64::consts::FRAC_PI_2);
    let rhs =
        crate::assembly::rhs_scattering(mesh, lay, &sys.op.ctx, theta, cfg.reflection_sign);
    let (sols, t_solve, _) = sys.solve(&[rhs])?;
    let sol = &sols[0];

    let points: Vec<Point2> = (0..grid.ny)
        .flat_map(|iy| {
            let fy = if grid.ny == 1 { 0.5 } else { iy as f64 / (grid.ny - 1) as f64 };
            let y = grid.bbox[1] + (grid.bbox[3] - grid.bbox[1]) * fy;
            (0..grid.nx).map(move |ix| {
                let fx = if grid.nx == 1 { 0.5 } else { ix as f64 / (grid.nx - 1) as f64 };
                Point2::new(grid.bbox[0] + (grid.bbox[2] - grid.bbox[0]) * fx, y)
            })
        })
        .collect();

    let cells: Vec<(RegionLabel, Option<crate::Cplx>, bool)> = points
        .par_iter()
        .map(|&p| {
            let label = classify_point(&scene, p);
            let value = match label {
                RegionLabel::Omega1 | RegionLabel::ExteriorUpper => {
                    eval_scattered_field(sol, p).ok()
                }
                _ => None,
            };
            // within one local panel length of a curve the plain quadrature
            // in the representation loses accuracy
            let low = mesh.panels.iter().any(|panel| {
                panel.nodes.iter().any(|&y| p.dist(y) < panel.length)
            });
            (label, value, low)
        })
        .collect();

    let mut rec = OutputRecord::new(vec!["x", "y", "re_us", "im_us", "region", "accuracy"]);
    for (p, (label, value, low)) in points.iter().zip(cells) {
        let region = match label {
            RegionLabel::Omega1 => "omega1",
            RegionLabel::ExteriorUpper => "exterior",
            RegionLabel::BelowGround => "below_ground",
            RegionLabel::OnBoundary => "boundary",
        };
        rec.rows.push(vec![
            fnum(p.x),
            fnum(p.y),
            value.map(|v| format!("{:.12e}", v.re)),
            value.map(|v| format!("{:.12e}", v.im)),
            Some(region.to_string()),
            Some(if low { "low" } else { "ok" }.to_string()),
        ]);
    }
    rec.footers.push(format!(
        "n_tot={} theta={:.6} t_factor={:.3}s t_solve={:.3}s",
        sys.op.n_tot(),
        theta,
        sys.t_factor,
        t_solve
    ));
    Ok(rec)
}

/// Factorization scaling over the wavenumber ladder, with a fitted growth
/// exponent `T ~ N^alpha` in the footer.
pub fn cmd_bench(cfg: &RunConfig) -> Result<OutputRecord, CliError> {
    let scene = prepared(cfg)?;
    let mut rec = OutputRecord::new(vec!["k", "n_tot", "t_factor", "t_solve"]);
    let mut samples: Vec<(f64, f64)> = Vec::new();
    for k in cfg.wavenumbers() {
        match factorize(cfg, &scene, k) {
            Ok(sys) => {
                let mesh = &sys.op.mesh;
                let lay = &sys.op.layout;
                let rhs = crate::assembly::rhs_scattering(
                    mesh,
                    lay,
                    &sys.op.ctx,
                    std::f64::consts::FRAC_PI_2,
                    cfg.reflection_sign,
                );
                let (_, t_solve, _) = sys.solve(&[rhs])?;
                samples.push((sys.op.n_tot() as f64, sys.t_factor));
                rec.rows.push(vec![
                    fnum(k),
                    Some(sys.op.n_tot().to_string()),
                    fnum(sys.t_factor),
                    fnum(t_solve),
                ]);
            }
            Err(e) => {
                // per-row failures are recorded, not fatal
                rec.rows.push(vec![fnum(k), None, None, None]);
                rec.footers.push(format!("k={k}: {e}"));
            }
        }
    }
    if samples.len() >= 2 {
        // least-squares slope of log T against log N
        let n = samples.len() as f64;
        let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
        for &(nn, tt) in &samples {
            let (x, y) = (nn.ln(), tt.max(1e-9).ln());
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
        }
        let alpha = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        rec.footers.push(format!("fitted_exponent={alpha:.3}"));
    }
    Ok(rec)
}
