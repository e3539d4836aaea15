//! JSON run configuration: geometry selection (presets or a custom segment
//! list), wavenumber(s), discretization and solver knobs, and per-command
//! parameters. Unknown keys are rejected; every numeric range is validated
//! before any computation starts.

use crate::geometry::{
    build_dome, scene_from_cavity, CurvePath, CurveSegment, GeometryError, SceneGeometry,
    TrigTerm,
};
use crate::point::Point2;
use crate::scattering::{Discretization, SolverConfig, SolverMethod};
use serde::{Deserialize, Serialize};

fn default_geometry() -> GeometrySpec {
    GeometrySpec::Preset("pot".to_string())
}
fn default_k() -> f64 {
    10.0
}
fn default_p() -> usize {
    10
}
fn default_n_corner() -> usize {
    10
}
fn default_min_ppw() -> f64 {
    65.0
}
fn default_aca_tol() -> f64 {
    1e-10
}
fn default_leaf_size() -> usize {
    200
}
fn default_dense_cap() -> usize {
    6000
}
fn default_reflection_sign() -> f64 {
    -1.0
}
fn default_n_angles() -> usize {
    360
}
fn default_error_threshold() -> f64 {
    1e-6
}
fn default_source() -> [f64; 2] {
    [5.0, 12.0]
}

/// Geometry: a preset name or a custom cavity-wall chain.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GeometrySpec {
    /// "pot", "engine" or "rough".
    Preset(String),
    Custom { segments: Vec<SegmentSpec> },
}

/// One smooth piece of a custom cavity wall. The chain must run from the
/// left aperture point on the ground line to the right one, with the air
/// region on the left of travel. Corner flags default to true (every
/// junction gets dyadic refinement).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum SegmentSpec {
    /// Straight chain through the listed points; every vertex is a corner.
    Polyline { points: Vec<[f64; 2]> },
    CircularArc {
        center: [f64; 2],
        radius: f64,
        theta0: f64,
        theta1: f64,
        #[serde(default = "default_true")]
        corner_start: bool,
        #[serde(default = "default_true")]
        corner_end: bool,
    },
    TrigRadial {
        x_center: f64,
        y_scale: f64,
        theta0: f64,
        theta1: f64,
        terms: Vec<TrigTermSpec>,
        #[serde(default = "default_true")]
        corner_start: bool,
        #[serde(default = "default_true")]
        corner_end: bool,
    },
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrigTermSpec {
    pub amp: f64,
    pub freq: f64,
    #[serde(default)]
    pub freq2: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomeSpec {
    pub center: [f64; 2],
    pub radius: f64,
}

impl Default for DomeSpec {
    fn default() -> Self {
        DomeSpec { center: [0.5, 0.0], radius: 2.5 }
    }
}

/// Rectangular evaluation grid for the field command.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    /// [x_min, y_min, x_max, y_max]
    pub bbox: [f64; 4],
    pub nx: usize,
    pub ny: usize,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum MethodSpec {
    Auto,
    Dense,
    Hodlr,
}

impl Default for MethodSpec {
    fn default() -> Self {
        MethodSpec::Auto
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_geometry")]
    pub geometry: GeometrySpec,
    /// Wavenumber for single-k commands.
    #[serde(default = "default_k")]
    pub k: f64,
    /// Wavenumber ladder for validate/bench; falls back to [k].
    #[serde(default)]
    pub k_list: Option<Vec<f64>>,
    #[serde(default = "default_p")]
    pub p: usize,
    #[serde(default = "default_n_corner")]
    pub n_corner: usize,
    /// Baseline panels per smooth segment; the wavelength and clearance
    /// floors can raise the effective counts.
    #[serde(default)]
    pub n_mid: Option<usize>,
    #[serde(default = "default_min_ppw")]
    pub min_ppw: f64,
    #[serde(default)]
    pub dome: DomeSpec,
    #[serde(default = "default_aca_tol")]
    pub aca_tol: f64,
    #[serde(default = "default_leaf_size")]
    pub leaf_size: usize,
    #[serde(default = "default_dense_cap")]
    pub dense_cap: usize,
    #[serde(default = "default_reflection_sign")]
    pub reflection_sign: f64,
    #[serde(default)]
    pub method: MethodSpec,
    #[serde(default)]
    pub threads: Option<usize>,
    /// Explicit incidence angles (radians) for rcs/solve.
    #[serde(default)]
    pub angles: Option<Vec<f64>>,
    /// Size of the default equispaced angle grid in (0, pi).
    #[serde(default = "default_n_angles")]
    pub n_angles: usize,
    /// Point source for the validation protocol.
    #[serde(default = "default_source")]
    pub source: [f64; 2],
    #[serde(default)]
    pub grid: Option<GridSpec>,
    /// validate exits with code 5 when E_error exceeds this.
    #[serde(default = "default_error_threshold")]
    pub error_threshold: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("default config")
    }
}

impl RunConfig {
    /// Parse a JSON document, rejecting unknown keys.
    pub fn from_json(text: &str) -> Result<Self, String> {
        serde_json::from_str(text).map_err(|e| e.to_string())
    }

    /// Range checks; returns the full list of complaints.
    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        let mut check_k = |k: f64| {
            if !(k > 0.0 && k.is_finite()) {
                errs.push(format!("wavenumber must be positive and finite, got {k}"));
            }
        };
        check_k(self.k);
        if let Some(ks) = &self.k_list {
            for &k in ks {
                check_k(k);
            }
        }
        if !(4..=32).contains(&self.p) {
            errs.push(format!("p must be in 4..=32, got {}", self.p));
        }
        if self.n_mid == Some(0) {
            errs.push("n_mid must be at least 1".to_string());
        }
        if !(self.min_ppw >= 0.0) {
            errs.push(format!("min_ppw must be nonnegative, got {}", self.min_ppw));
        }
        if !(self.dome.radius > 0.0 && self.dome.radius.is_finite()) {
            errs.push(format!("dome radius must be positive, got {}", self.dome.radius));
        }
        if self.dome.center[1] != 0.0 {
            errs.push("dome center must lie on the ground line".to_string());
        }
        if !(1e-14..=1e-2).contains(&self.aca_tol) {
            errs.push(format!("aca_tol must be in [1e-14, 1e-2], got {}", self.aca_tol));
        }
        if self.leaf_size < 8 {
            errs.push(format!("leaf_size must be at least 8, got {}", self.leaf_size));
        }
        if self.reflection_sign.abs() != 1.0 {
            errs.push(format!(
                "reflection_sign must be +1 or -1, got {}",
                self.reflection_sign
            ));
        }
        if let Some(angles) = &self.angles {
            for &a in angles {
                if !(a > 0.0 && a < std::f64::consts::PI) {
                    errs.push(format!("angle {a} outside (0, pi)"));
                }
            }
        }
        if self.n_angles == 0 {
            errs.push("n_angles must be positive".to_string());
        }
        if let Some(g) = &self.grid {
            if g.nx == 0 || g.ny == 0 {
                errs.push("grid resolution must be positive".to_string());
            }
            if !(g.bbox[0] < g.bbox[2]) || !(g.bbox[1] < g.bbox[3]) {
                errs.push("grid bbox must satisfy x_min < x_max and y_min < y_max".to_string());
            }
        }
        if !(self.error_threshold > 0.0) {
            errs.push("error_threshold must be positive".to_string());
        }
        errs
    }

    /// Build the scene (cavity, strips, dome) described by the config.
    pub fn build_scene(&self) -> Result<SceneGeometry, String> {
        let center = Point2::new(self.dome.center[0], self.dome.center[1]);
        build_dome(center, self.dome.radius).map_err(|e| e.to_string())?;
        let gamma = match &self.geometry {
            GeometrySpec::Preset(name) => match name.as_str() {
                "pot" => crate::geometry::pot_cavity(),
                "engine" => crate::geometry::engine_cavity(),
                "rough" => crate::geometry::rough_cavity(),
                other => return Err(format!("unknown geometry preset '{other}'")),
            },
            GeometrySpec::Custom { segments } => {
                let mut out = Vec::new();
                for spec in segments {
                    build_segments(spec, &mut out)?;
                }
                out
            }
        };
        scene_from_cavity(gamma, center, self.dome.radius).map_err(|e: GeometryError| e.to_string())
    }

    pub fn wavenumbers(&self) -> Vec<f64> {
        match &self.k_list {
            Some(ks) => ks.clone(),
            None => vec![self.k],
        }
    }

    pub fn discretization(&self) -> Discretization {
        Discretization {
            p: self.p,
            n_corner: self.n_corner,
            n_mid: self.n_mid.unwrap_or(2),
            min_ppw: self.min_ppw,
        }
    }

    pub fn solver(&self) -> SolverConfig {
        SolverConfig {
            method: match self.method {
                MethodSpec::Auto => SolverMethod::Auto,
                MethodSpec::Dense => SolverMethod::Dense,
                MethodSpec::Hodlr => SolverMethod::Hodlr,
            },
            aca_tol: self.aca_tol,
            leaf_size: self.leaf_size,
            dense_cap: self.dense_cap,
            ..SolverConfig::default()
        }
    }

    /// Incidence angle grid: explicit angles, or `n_angles` equispaced
    /// values strictly inside (0, pi).
    pub fn angle_grid(&self) -> Vec<f64> {
        match &self.angles {
            Some(a) => a.clone(),
            None => {
                let n = self.n_angles;
                (1..=n)
                    .map(|j| std::f64::consts::PI * j as f64 / (n + 1) as f64)
                    .collect()
            }
        }
    }

    pub fn source_point(&self) -> Point2 {
        Point2::new(self.source[0], self.source[1])
    }
}

fn build_segments(spec: &SegmentSpec, out: &mut Vec<CurveSegment>) -> Result<(), String> {
    match spec {
        SegmentSpec::Polyline { points } => {
            if points.len() < 2 {
                return Err("polyline needs at least two points".to_string());
            }
            for w in points.windows(2) {
                out.push(CurveSegment::new(CurvePath::Line {
                    a: Point2::new(w[0][0], w[0][1]),
                    b: Point2::new(w[1][0], w[1][1]),
                }));
            }
        }
        SegmentSpec::CircularArc {
            center,
            radius,
            theta0,
            theta1,
            corner_start,
            corner_end,
        } => {
            if !(*radius > 0.0) {
                return Err(format!("arc radius must be positive, got {radius}"));
            }
            out.push(CurveSegment {
                path: CurvePath::Arc {
                    center: Point2::new(center[0], center[1]),
                    radius: *radius,
                    theta0: *theta0,
                    theta1: *theta1,
                },
                corner_start: *corner_start,
                corner_end: *corner_end,
            });
        }
        SegmentSpec::TrigRadial {
            x_center,
            y_scale,
            theta0,
            theta1,
            terms,
            corner_start,
            corner_end,
        } => {
            out.push(CurveSegment {
                path: CurvePath::TrigRadial {
                    x_center: *x_center,
                    y_scale: *y_scale,
                    theta0: *theta0,
                    theta1: *theta1,
                    terms: terms
                        .iter()
                        .map(|t| TrigTerm { amp: t.amp, freq: t.freq, freq2: t.freq2 })
                        .collect(),
                },
                corner_start: *corner_start,
                corner_end: *corner_end,
            });
        }
    }
    Ok(())
}
