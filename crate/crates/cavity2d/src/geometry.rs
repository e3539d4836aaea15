//! Piecewise-smooth scene construction: cavity presets, ground strips, the
//! artificial dome and its reflection, scene validation, and point-region
//! classification.
//!
//! A scene is the closed loop `Gamma ∪ B ∪ Gamma1` traversed counterclockwise
//! around the enclosed region `Omega1`: left ground strip from the dome foot
//! P1 to the left aperture point, cavity wall `Gamma` down/around/up to the
//! right aperture point, right strip to the dome foot P2, then the dome
//! `Gamma1` back over the top. Outward unit normals are the tangents rotated
//! by -90 degrees.

use crate::point::Point2;
use std::f64::consts::PI;
use thiserror::Error;

/// One factor `amp * sin(freq * theta) [ * sin(freq2 * theta) ]` of a
/// trigonometric radial perturbation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrigTerm {
    pub amp: f64,
    pub freq: f64,
    pub freq2: Option<f64>,
}

/// Parametric description of one smooth piece of boundary.
#[derive(Debug, Clone, PartialEq)]
pub enum CurvePath {
    /// Straight segment from `a` to `b`.
    Line { a: Point2, b: Point2 },
    /// Circular arc `center + radius (cos theta, sin theta)`,
    /// `theta` from `theta0` to `theta1`.
    Arc { center: Point2, radius: f64, theta0: f64, theta1: f64 },
    /// `x = r(theta) cos(theta) + x_center`, `y = y_scale * r(theta) sin(theta)`
    /// with `r = 1 + sum of terms`.
    TrigRadial {
        x_center: f64,
        y_scale: f64,
        theta0: f64,
        theta1: f64,
        terms: Vec<TrigTerm>,
    },
}

/// A smooth curve piece with corner flags at its parameter ends. Meshing
/// applies dyadic refinement at every flagged end.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveSegment {
    pub path: CurvePath,
    pub corner_start: bool,
    pub corner_end: bool,
}

impl CurveSegment {
    pub fn new(path: CurvePath) -> Self {
        CurveSegment { path, corner_start: true, corner_end: true }
    }

    /// Position at parameter `t` in `[0, 1]`.
    pub fn point(&self, t: f64) -> Point2 {
        match &self.path {
            CurvePath::Line { a, b } => *a + (*b - *a) * t,
            CurvePath::Arc { center, radius, theta0, theta1 } => {
                let th = theta0 + (theta1 - theta0) * t;
                *center + Point2::new(th.cos(), th.sin()) * *radius
            }
            CurvePath::TrigRadial { x_center, y_scale, theta0, theta1, terms } => {
                let th = theta0 + (theta1 - theta0) * t;
                let r = radial(terms, th).0;
                Point2::new(r * th.cos() + x_center, y_scale * r * th.sin())
            }
        }
    }

    /// First derivative with respect to `t`.
    pub fn derivative(&self, t: f64) -> Point2 {
        match &self.path {
            CurvePath::Line { a, b } => *b - *a,
            CurvePath::Arc { center: _, radius, theta0, theta1 } => {
                let dth = theta1 - theta0;
                let th = theta0 + dth * t;
                Point2::new(-th.sin(), th.cos()) * (radius * dth)
            }
            CurvePath::TrigRadial { x_center: _, y_scale, theta0, theta1, terms } => {
                let dth = theta1 - theta0;
                let th = theta0 + dth * t;
                let (r, dr) = radial(terms, th);
                Point2::new(
                    (dr * th.cos() - r * th.sin()) * dth,
                    y_scale * (dr * th.sin() + r * th.cos()) * dth,
                )
            }
        }
    }

    /// Outward unit normal (loop traversed counterclockwise around Omega1).
    pub fn normal(&self, t: f64) -> Point2 {
        self.derivative(t).perp().normalized()
    }

    /// Chord vector `point(t) - point(s)`, evaluated in a cancellation-free
    /// form so it stays accurate relative to its own (possibly tiny) length.
    /// Subtracting two separately rounded points would leave ~1e-16 absolute
    /// noise, which ruins near-diagonal kernels that divide by |chord|^2.
    pub fn chord(&self, t: f64, s: f64) -> Point2 {
        match &self.path {
            CurvePath::Line { a, b } => (*b - *a) * (t - s),
            CurvePath::Arc { center: _, radius, theta0, theta1 } => {
                let dth = theta1 - theta0;
                let (at, as_) = (theta0 + dth * t, theta0 + dth * s);
                let half_diff = 0.5 * dth * (t - s);
                let half_sum = 0.5 * (at + as_);
                // cos a - cos b and sin a - sin b by product formulas
                let (sd, _) = half_diff.sin_cos();
                let (ss, cs) = half_sum.sin_cos();
                Point2::new(-2.0 * ss * sd, 2.0 * cs * sd) * *radius
            }
            CurvePath::TrigRadial { x_center: _, y_scale, theta0, theta1, terms } => {
                let dth = theta1 - theta0;
                let (at, as_) = (theta0 + dth * t, theta0 + dth * s);
                let half_diff = 0.5 * dth * (t - s);
                let half_sum = 0.5 * (at + as_);
                let (rt, _) = radial(terms, at);
                // r_t - r_s without cancellation, term by term
                let mut dr = 0.0;
                for tm in terms {
                    let sin_diff =
                        |f: f64| 2.0 * (f * half_sum).cos() * (f * half_diff).sin();
                    match tm.freq2 {
                        None => dr += tm.amp * sin_diff(tm.freq),
                        Some(f2) => {
                            let s1t = (tm.freq * at).sin();
                            let s2s = (f2 * as_).sin();
                            dr += tm.amp * (s1t * sin_diff(f2) + sin_diff(tm.freq) * s2s);
                        }
                    }
                }
                let sd = half_diff.sin();
                let (ss, cs) = half_sum.sin_cos();
                let dcos = -2.0 * ss * sd;
                let dsin = 2.0 * cs * sd;
                Point2::new(
                    rt * dcos + dr * as_.cos(),
                    y_scale * (rt * dsin + dr * as_.sin()),
                )
            }
        }
    }

    /// Arclength by a composite Gauss rule, accurate to ~1e-12 for the
    /// curves used here.
    pub fn arclength(&self) -> f64 {
        // 5-point Gauss-Legendre nodes/weights on [-1, 1]
        const XS: [f64; 5] = [
            -0.906_179_845_938_664,
            -0.538_469_310_105_683,
            0.0,
            0.538_469_310_105_683,
            0.906_179_845_938_664,
        ];
        const WS: [f64; 5] = [
            0.236_926_885_056_189,
            0.478_628_670_499_366,
            0.568_888_888_888_889,
            0.478_628_670_499_366,
            0.236_926_885_056_189,
        ];
        let panels = 128;
        let mut total = 0.0;
        for p in 0..panels {
            let a = p as f64 / panels as f64;
            let h = 0.5 / panels as f64;
            let mid = a + h;
            for (x, w) in XS.iter().zip(&WS) {
                total += w * h * self.derivative(mid + h * x).norm();
            }
        }
        total
    }
}

fn radial(terms: &[TrigTerm], th: f64) -> (f64, f64) {
    let mut r = 1.0;
    let mut dr = 0.0;
    for t in terms {
        match t.freq2 {
            None => {
                r += t.amp * (t.freq * th).sin();
                dr += t.amp * t.freq * (t.freq * th).cos();
            }
            Some(f2) => {
                let (s1, c1) = (t.freq * th).sin_cos();
                let (s2, c2) = (f2 * th).sin_cos();
                r += t.amp * s1 * s2;
                dr += t.amp * (t.freq * c1 * s2 + f2 * s1 * c2);
            }
        }
    }
    (r, dr)
}

/// Mirror a segment across the ground plane. The parameter direction is
/// reversed so that the outward normal of the image is the mirror image of
/// the original outward normal.
pub fn reflect(seg: &CurveSegment) -> CurveSegment {
    let path = match &seg.path {
        CurvePath::Line { a, b } => CurvePath::Line {
            a: b.reflect_ground(),
            b: a.reflect_ground(),
        },
        CurvePath::Arc { center, radius, theta0, theta1 } => CurvePath::Arc {
            center: center.reflect_ground(),
            radius: *radius,
            theta0: -theta1,
            theta1: -theta0,
        },
        CurvePath::TrigRadial { x_center, y_scale, theta0, theta1, terms } => {
            CurvePath::TrigRadial {
                x_center: *x_center,
                y_scale: -y_scale,
                theta0: *theta1,
                theta1: *theta0,
                terms: terms.clone(),
            }
        }
    };
    CurveSegment {
        path,
        corner_start: seg.corner_end,
        corner_end: seg.corner_start,
    }
}

/// Which part of the closed loop a segment belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryPart {
    StripLeft,
    Cavity,
    StripRight,
    Dome,
}

impl BoundaryPart {
    /// True for the `B ∪ Gamma` portion carrying the single density mu.
    pub fn is_ground_or_cavity(self) -> bool {
        !matches!(self, BoundaryPart::Dome)
    }
}

/// Cavity wall, ground strips, artificial dome and derived data.
#[derive(Debug, Clone)]
pub struct SceneGeometry {
    /// Cavity wall Gamma: open chain from the left aperture point to the
    /// right aperture point, region on the left of travel.
    pub gamma: Vec<CurveSegment>,
    /// Ground strips: `[left strip P1 -> aperture, right strip aperture -> P2]`.
    pub b: [CurveSegment; 2],
    /// Artificial dome Gamma1 from P2 over the top to P1.
    pub gamma1: CurveSegment,
    /// Aperture endpoints on the ground line (left x, right x).
    pub aperture: (f64, f64),
    pub dome_center: Point2,
    pub dome_radius: f64,
}

/// Region labels for points of the plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionLabel {
    /// Inside the loop Gamma ∪ B ∪ Gamma1.
    Omega1,
    /// Upper half space outside the loop.
    ExteriorUpper,
    /// Below the ground line and outside the cavity.
    BelowGround,
    OnBoundary,
}

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("dome radius must be positive and finite, got {0}")]
    InvalidDomeRadius(f64),
    #[error("dome center must lie on the ground line, got y = {0}")]
    DomeCenterOffGround(f64),
    #[error("cavity wall needs at least one segment")]
    EmptyCavity,
}

/// Violations reported by [`validate_scene`].
#[derive(Debug, Clone, PartialEq)]
pub enum SceneViolation {
    LoopNotClosed { segment: usize, gap: f64 },
    CavityEndpointOffGround { y: f64 },
    DomeFootMismatch { gap: f64 },
    ApertureOutsideDome,
    ReflectedDomeIntersectsCavity { clearance: f64 },
    CavityCrossesDome { point: Point2 },
    SelfIntersection { seg_a: usize, seg_b: usize },
    DegenerateDerivative { segment: usize, t: f64 },
}

impl std::fmt::Display for SceneViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SceneViolation::LoopNotClosed { segment, gap } => {
                write!(f, "boundary loop not closed after segment {segment} (gap {gap:.3e})")
            }
            SceneViolation::CavityEndpointOffGround { y } => {
                write!(f, "cavity wall endpoint off the ground line (y = {y:.3e})")
            }
            SceneViolation::DomeFootMismatch { gap } => {
                write!(f, "dome foot does not meet the ground strip (gap {gap:.3e})")
            }
            SceneViolation::ApertureOutsideDome => {
                write!(f, "aperture is not strictly inside the dome footprint")
            }
            SceneViolation::ReflectedDomeIntersectsCavity { clearance } => {
                write!(f, "reflected dome intersects the cavity closure (clearance {clearance:.3e})")
            }
            SceneViolation::CavityCrossesDome { point } => {
                write!(f, "cavity wall crosses the dome near ({:.4}, {:.4})", point.x, point.y)
            }
            SceneViolation::SelfIntersection { seg_a, seg_b } => {
                write!(f, "boundary segments {seg_a} and {seg_b} intersect")
            }
            SceneViolation::DegenerateDerivative { segment, t } => {
                write!(f, "vanishing derivative on segment {segment} at t = {t:.4}")
            }
        }
    }
}

impl SceneGeometry {
    /// All loop segments in traversal order with their part tags.
    pub fn loop_parts(&self) -> Vec<(BoundaryPart, &CurveSegment)> {
        let mut v = Vec::with_capacity(self.gamma.len() + 3);
        v.push((BoundaryPart::StripLeft, &self.b[0]));
        for g in &self.gamma {
            v.push((BoundaryPart::Cavity, g));
        }
        v.push((BoundaryPart::StripRight, &self.b[1]));
        v.push((BoundaryPart::Dome, &self.gamma1));
        v
    }

    /// Image of the dome across the ground plane (Gamma2).
    pub fn gamma2(&self) -> CurveSegment {
        reflect(&self.gamma1)
    }

    /// Diameter of the scene's bounding box.
    pub fn diameter(&self) -> f64 {
        let (lo, hi) = self.bbox();
        (hi - lo).norm()
    }

    /// Bounding box of the loop as (lower-left, upper-right).
    pub fn bbox(&self) -> (Point2, Point2) {
        let mut lo = Point2::new(f64::MAX, f64::MAX);
        let mut hi = Point2::new(f64::MIN, f64::MIN);
        for (_, seg) in self.loop_parts() {
            for i in 0..=64 {
                let p = seg.point(i as f64 / 64.0);
                lo = Point2::new(lo.x.min(p.x), lo.y.min(p.y));
                hi = Point2::new(hi.x.max(p.x), hi.y.max(p.y));
            }
        }
        (lo, hi)
    }
}

/// Upper half circle over the ground line.
pub fn build_dome(center: Point2, radius: f64) -> Result<CurveSegment, GeometryError> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(GeometryError::InvalidDomeRadius(radius));
    }
    if center.y != 0.0 {
        return Err(GeometryError::DomeCenterOffGround(center.y));
    }
    Ok(CurveSegment::new(CurvePath::Arc {
        center,
        radius,
        theta0: 0.0,
        theta1: PI,
    }))
}

/// Assemble a full scene from a cavity wall chain and a dome. Ground strips
/// are derived: from the dome feet to the outermost cavity endpoints.
pub fn scene_from_cavity(
    gamma: Vec<CurveSegment>,
    dome_center: Point2,
    dome_radius: f64,
) -> Result<SceneGeometry, GeometryError> {
    if gamma.is_empty() {
        return Err(GeometryError::EmptyCavity);
    }
    let gamma1 = build_dome(dome_center, dome_radius)?;
    let ap_left = gamma.first().unwrap().point(0.0);
    let ap_right = gamma.last().unwrap().point(1.0);
    let p1 = Point2::new(dome_center.x - dome_radius, 0.0);
    let p2 = Point2::new(dome_center.x + dome_radius, 0.0);
    let strip = |a: Point2, b: Point2| CurveSegment::new(CurvePath::Line { a, b });
    Ok(SceneGeometry {
        gamma,
        b: [
            strip(p1, Point2::new(ap_left.x, 0.0)),
            strip(Point2::new(ap_right.x, 0.0), p2),
        ],
        gamma1,
        aperture: (ap_left.x, ap_right.x),
        dome_center,
        dome_radius,
    })
}

const DEFAULT_DOME_CENTER: Point2 = Point2::new(0.5, 0.0);
const DEFAULT_DOME_RADIUS: f64 = 2.5;

/// Pot-shaped cavity: aperture of width 1, circular body of radius
/// sqrt(2)/2 centered at (0.5, -1), vertical neck walls joining the aperture
/// to the circle.
pub fn pot_cavity() -> Vec<CurveSegment> {
    let c = Point2::new(0.5, -1.0);
    let r = 0.5f64.sqrt();
    vec![
        CurveSegment::new(CurvePath::Line {
            a: Point2::new(0.0, 0.0),
            b: Point2::new(0.0, -0.5),
        }),
        CurveSegment::new(CurvePath::Arc {
            center: c,
            radius: r,
            theta0: 3.0 * PI / 4.0,
            theta1: 2.0 * PI + PI / 4.0,
        }),
        CurveSegment::new(CurvePath::Line {
            a: Point2::new(1.0, -0.5),
            b: Point2::new(1.0, 0.0),
        }),
    ]
}

pub fn build_pot() -> SceneGeometry {
    scene_from_cavity(pot_cavity(), DEFAULT_DOME_CENTER, DEFAULT_DOME_RADIUS).unwrap()
}

/// Engine-shaped cavity: a polyline through 17 vertices; the compressor tip
/// rises above the ground plane.
pub fn engine_vertices() -> [Point2; 17] {
    [
        Point2::new(0.0, 0.0),
        Point2::new(0.0, -2.0),
        Point2::new(0.45, -2.0),
        Point2::new(0.45, -1.6),
        Point2::new(0.1, -1.6),
        Point2::new(0.1, -1.0),
        Point2::new(0.45, -1.0),
        Point2::new(0.45, -0.4),
        Point2::new(0.5, 0.2),
        Point2::new(0.55, -0.4),
        Point2::new(0.55, -1.0),
        Point2::new(0.9, -1.0),
        Point2::new(0.9, -1.6),
        Point2::new(0.55, -1.6),
        Point2::new(0.55, -2.0),
        Point2::new(1.0, -2.0),
        Point2::new(1.0, 0.0),
    ]
}

pub fn engine_cavity() -> Vec<CurveSegment> {
    engine_vertices()
        .windows(2)
        .map(|w| CurveSegment::new(CurvePath::Line { a: w[0], b: w[1] }))
        .collect()
}

pub fn build_engine() -> SceneGeometry {
    scene_from_cavity(engine_cavity(), DEFAULT_DOME_CENTER, DEFAULT_DOME_RADIUS).unwrap()
}

/// Rough-bottom cavity: trigonometric radial perturbation of an ellipse-like
/// arc over `theta in [pi, 2 pi]`, discretized as three smooth segments.
pub fn rough_cavity() -> Vec<CurveSegment> {
    let terms = vec![
        TrigTerm { amp: 0.1, freq: 2.0, freq2: None },
        TrigTerm { amp: 0.1, freq: 11.0, freq2: None },
        TrigTerm { amp: 0.08, freq: 19.0, freq2: Some(29.0) },
        TrigTerm { amp: 0.05, freq: 47.0, freq2: None },
    ];
    (0..3)
        .map(|i| {
            CurveSegment::new(CurvePath::TrigRadial {
                x_center: 0.5,
                y_scale: 1.25,
                theta0: PI * (1.0 + i as f64 / 3.0),
                theta1: PI * (1.0 + (i + 1) as f64 / 3.0),
                terms: terms.clone(),
            })
        })
        .collect()
}

pub fn build_rough() -> SceneGeometry {
    scene_from_cavity(rough_cavity(), DEFAULT_DOME_CENTER, DEFAULT_DOME_RADIUS).unwrap()
}

/// Check every scene invariant by dense sampling; returns all violations
/// found (empty means the scene is usable).
pub fn validate_scene(scene: &SceneGeometry) -> Vec<SceneViolation> {
    let mut out = Vec::new();
    let parts = scene.loop_parts();
    let diam = scene.diameter();
    let tol = 1e-12 * diam.max(1.0);

    // loop closure
    for (i, (_, seg)) in parts.iter().enumerate() {
        let next = &parts[(i + 1) % parts.len()].1;
        let gap = seg.point(1.0).dist(next.point(0.0));
        if gap > tol {
            out.push(SceneViolation::LoopNotClosed { segment: i, gap });
        }
    }

    // cavity endpoints and dome feet on the ground line
    let ap_l = scene.gamma.first().unwrap().point(0.0);
    let ap_r = scene.gamma.last().unwrap().point(1.0);
    for p in [ap_l, ap_r] {
        if p.y.abs() > tol {
            out.push(SceneViolation::CavityEndpointOffGround { y: p.y });
        }
    }
    for (foot, strip_end) in [
        (scene.gamma1.point(1.0), scene.b[0].point(0.0)),
        (scene.gamma1.point(0.0), scene.b[1].point(1.0)),
    ] {
        let gap = foot.dist(strip_end);
        if gap > tol || foot.y.abs() > tol {
            out.push(SceneViolation::DomeFootMismatch { gap });
        }
    }

    // aperture strictly inside the dome footprint
    let (cx, r) = (scene.dome_center.x, scene.dome_radius);
    let (lo, hi) = (
        scene.aperture.0.min(scene.aperture.1),
        scene.aperture.0.max(scene.aperture.1),
    );
    if cx - r >= lo - tol || cx + r <= hi + tol {
        out.push(SceneViolation::ApertureOutsideDome);
    }

    // derivative must not vanish
    for (i, (_, seg)) in parts.iter().enumerate() {
        for j in 0..=256 {
            let t = j as f64 / 256.0;
            if seg.derivative(t).norm() < 1e-12 * diam {
                out.push(SceneViolation::DegenerateDerivative { segment: i, t });
                break;
            }
        }
    }

    // cavity wall must stay inside the dome wherever it rises above ground
    for seg in &scene.gamma {
        for j in 0..=512 {
            let p = seg.point(j as f64 / 512.0);
            if p.y > tol && p.dist(scene.dome_center) >= r - tol {
                out.push(SceneViolation::CavityCrossesDome { point: p });
                break;
            }
        }
    }

    // reflected dome must avoid the closed cavity region (below-ground part
    // of Omega1, bounded by Gamma and the aperture segment)
    let gamma2 = scene.gamma2();
    let mut cavity_poly: Vec<Point2> = Vec::new();
    for seg in &scene.gamma {
        for j in 0..256 {
            cavity_poly.push(seg.point(j as f64 / 256.0));
        }
    }
    cavity_poly.push(ap_r); // close along the aperture back to ap_l
    let mut worst = f64::MAX;
    let mut inside_hit = false;
    for j in 0..=512 {
        let q = gamma2.point(j as f64 / 512.0);
        let d = (0..cavity_poly.len())
            .map(|i| {
                point_segment_dist(q, cavity_poly[i], cavity_poly[(i + 1) % cavity_poly.len()])
            })
            .fold(f64::MAX, f64::min);
        worst = worst.min(d);
        if q.y < -tol && point_in_polygon(q, &cavity_poly) {
            inside_hit = true;
        }
    }
    if inside_hit || worst < 1e-9 * diam {
        out.push(SceneViolation::ReflectedDomeIntersectsCavity { clearance: worst });
    }

    // pairwise chord intersection test over the loop
    let chords: Vec<Vec<Point2>> = parts
        .iter()
        .map(|(_, seg)| (0..=96).map(|j| seg.point(j as f64 / 96.0)).collect())
        .collect();
    'outer: for a in 0..chords.len() {
        for b in (a + 1)..chords.len() {
            let adjacent = b == a + 1 || (a == 0 && b == chords.len() - 1);
            let pa = &chords[a];
            let pb = &chords[b];
            for i in 0..pa.len() - 1 {
                for j in 0..pb.len() - 1 {
                    if adjacent && chords_touch_at_junction(a, b, i, j, pa.len(), pb.len()) {
                        continue;
                    }
                    if segments_cross(pa[i], pa[i + 1], pb[j], pb[j + 1]) {
                        out.push(SceneViolation::SelfIntersection { seg_a: a, seg_b: b });
                        break 'outer;
                    }
                }
            }
        }
    }

    out
}

fn chords_touch_at_junction(
    a: usize,
    b: usize,
    i: usize,
    j: usize,
    na: usize,
    nb: usize,
) -> bool {
    // skip chord pairs meeting at the shared loop junction
    if b == a + 1 {
        i >= na - 2 && j <= 1
    } else {
        // wrap: a is the first loop segment, b the last
        j >= nb - 2 && i <= 1
    }
}

fn segments_cross(a: Point2, b: Point2, c: Point2, d: Point2) -> bool {
    let orient = |p: Point2, q: Point2, r: Point2| {
        let v = (q - p).x * (r - p).y - (q - p).y * (r - p).x;
        if v > 0.0 {
            1
        } else if v < 0.0 {
            -1
        } else {
            0
        }
    };
    let (o1, o2) = (orient(a, b, c), orient(a, b, d));
    let (o3, o4) = (orient(c, d, a), orient(c, d, b));
    o1 != o2 && o3 != o4 && o1 != 0 && o2 != 0 && o3 != 0 && o4 != 0
}

fn point_segment_dist(p: Point2, a: Point2, b: Point2) -> f64 {
    let ab = b - a;
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return p.dist(a);
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    p.dist(a + ab * t)
}

fn point_in_polygon(p: Point2, poly: &[Point2]) -> bool {
    let mut inside = false;
    let n = poly.len();
    let mut j = n - 1;
    for i in 0..n {
        let (pi, pj) = (poly[i], poly[j]);
        if (pi.y > p.y) != (pj.y > p.y)
            && p.x < (pj.x - pi.x) * (p.y - pi.y) / (pj.y - pi.y) + pi.x
        {
            inside = !inside;
        }
        j = i;
    }
    inside
}

/// Nearest loop curve to `p`: (segment index in loop order, parameter, distance).
fn nearest_on_loop(scene: &SceneGeometry, p: Point2) -> (usize, f64, f64) {
    let parts = scene.loop_parts();
    let mut best = (0usize, 0.0f64, f64::MAX);
    for (si, (_, seg)) in parts.iter().enumerate() {
        let samples = 192;
        let mut t_best = 0.0;
        let mut d_best = f64::MAX;
        for j in 0..=samples {
            let t = j as f64 / samples as f64;
            let d = seg.point(t).dist(p);
            if d < d_best {
                d_best = d;
                t_best = t;
            }
        }
        // golden-section refinement around the sampled minimum
        let h = 1.0 / samples as f64;
        let (mut lo, mut hi) = ((t_best - h).max(0.0), (t_best + h).min(1.0));
        const PHI: f64 = 0.618_033_988_749_894_8;
        for _ in 0..80 {
            let m1 = hi - PHI * (hi - lo);
            let m2 = lo + PHI * (hi - lo);
            if seg.point(m1).dist(p) < seg.point(m2).dist(p) {
                hi = m2;
            } else {
                lo = m1;
            }
        }
        let t = 0.5 * (lo + hi);
        let d = seg.point(t).dist(p);
        if d < best.2 {
            best = (si, t, d);
        }
    }
    best
}

/// Classify a point against the closed loop. Points within
/// `1e-10 * diameter` of a curve are OnBoundary.
pub fn classify_point(scene: &SceneGeometry, p: Point2) -> RegionLabel {
    let diam = scene.diameter();
    let (si, t, d) = nearest_on_loop(scene, p);
    if d < 1e-10 * diam {
        return RegionLabel::OnBoundary;
    }
    let parts = scene.loop_parts();

    // Near a smooth piece of boundary the signed side against the outward
    // normal is exact, while the sampled winding number would be fooled by
    // chord error closer than ~(sample spacing)^2 * curvature.
    if d < 1e-3 * diam && t > 1e-3 && t < 1.0 - 1e-3 {
        let seg = parts[si].1;
        let side = (p - seg.point(t)).dot(seg.normal(t));
        return label_from_inside(side < 0.0, p);
    }

    let mut angle = 0.0f64;
    let mut prev = parts[0].1.point(0.0) - p;
    for (_, seg) in &parts {
        for j in 1..=256 {
            let cur = seg.point(j as f64 / 256.0) - p;
            angle += (prev.x * cur.y - prev.y * cur.x).atan2(prev.dot(cur));
            prev = cur;
        }
    }
    let winding = angle / (2.0 * PI);
    label_from_inside(winding.round() as i64 != 0, p)
}

fn label_from_inside(inside: bool, p: Point2) -> RegionLabel {
    if inside {
        RegionLabel::Omega1
    } else if p.y < 0.0 {
        RegionLabel::BelowGround
    } else {
        RegionLabel::ExteriorUpper
    }
}
