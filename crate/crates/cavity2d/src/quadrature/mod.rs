//! Panel meshing with dyadic corner refinement, Gauss-Legendre rules, and
//! singular/adjacent panel quadrature for log-singular kernels.
//!
//! Each smooth boundary segment is split into equal-parameter panels; every
//! panel end flagged as a corner is replaced by a dyadic cascade of panels
//! with lengths `L/2, L/4, ..., L/2^Nc, L/2^Nc` (finest duplicated), so the
//! finest scale is `L 2^{-Nc}`. Panels carry scaled Gauss-Legendre nodes,
//! outward normals and arclength weights. Self and adjacent panel
//! interactions are integrated against the panel's Legendre interpolation
//! basis with a graded composite rule (see [`singular_block`]); far
//! interactions use the plain node weights.

mod gauss;
mod panel_quad;

pub use gauss::gauss_legendre;
pub use panel_quad::{adjacent_block, near_block, oracle_integrate, singular_block};

use crate::geometry::{BoundaryPart, CurveSegment, SceneGeometry};
use crate::point::Point2;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum QuadratureError {
    #[error("gauss rule order {0} not supported (1..=64)")]
    BadOrder(usize),
    #[error("points per panel {0} outside 4..=32")]
    BadPanelOrder(usize),
    #[error("need at least one panel per smooth segment")]
    NoPanels,
    #[error("scene is invalid: {0}")]
    InvalidScene(String),
    #[error("adaptive integration did not converge within depth {depth} (estimate change {change:.3e})")]
    NonConvergence { depth: usize, change: f64 },
    #[error("quadrature block failed accuracy certification on panel {panel} ({error:.3e} > {tol:.3e})")]
    CertificationFailure { panel: usize, error: f64, tol: f64 },
    #[error("panels {0} and {1} are not adjacent")]
    NotAdjacent(usize, usize),
}

/// One curved panel: `p` Gauss-Legendre nodes on a parameter subinterval of
/// its parent segment.
#[derive(Debug, Clone)]
pub struct Panel {
    /// Index of the parent segment in loop order.
    pub segment: usize,
    pub part: BoundaryPart,
    pub t0: f64,
    pub t1: f64,
    /// Global index of this panel's first node.
    pub first_node: usize,
    pub nodes: Vec<Point2>,
    pub normals: Vec<Point2>,
    /// |dgamma/dt| at the nodes.
    pub speeds: Vec<f64>,
    /// Plain arclength quadrature weights.
    pub weights: Vec<f64>,
    /// Parameter positions of the nodes.
    pub params: Vec<f64>,
    /// Panel arclength (sum of weights).
    pub length: f64,
}

/// Relation of a panel pair for quadrature purposes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairClass {
    SelfPair,
    Adjacent,
    Far,
}

/// Panel mesh over the whole loop `B_left, Gamma..., B_right, Gamma1`.
/// Nodes are numbered in traversal order, so all `B ∪ Gamma` nodes precede
/// the dome nodes.
#[derive(Debug)]
pub struct Mesh {
    pub p: usize,
    pub n_corner: usize,
    pub panels: Vec<Panel>,
    /// Loop segments (cloned from the scene) addressed by `Panel::segment`.
    pub segments: Vec<(BoundaryPart, CurveSegment)>,
    /// Number of nodes on `B ∪ Gamma` (these come first).
    pub bg_nodes: usize,
    /// Number of nodes on the dome.
    pub dome_nodes: usize,
    /// Previous/next panel index along the closed loop.
    pub prev: Vec<usize>,
    pub next: Vec<usize>,
    /// Panel owning each node.
    pub node_panel: Vec<usize>,
    /// Reference Gauss-Legendre rule of order `p` on [-1, 1].
    pub gl_nodes: Vec<f64>,
    pub gl_weights: Vec<f64>,
    /// Shortest panel arclength.
    pub finest_len: f64,
    pub scene_diameter: f64,
}

impl Mesh {
    pub fn n_nodes(&self) -> usize {
        self.bg_nodes + self.dome_nodes
    }

    pub fn pair_class(&self, i: usize, j: usize) -> PairClass {
        if i == j {
            PairClass::SelfPair
        } else if self.next[i] == j || self.prev[i] == j {
            PairClass::Adjacent
        } else {
            PairClass::Far
        }
    }

    pub fn node_point(&self, node: usize) -> Point2 {
        let p = &self.panels[self.node_panel[node]];
        p.nodes[node - p.first_node]
    }

    pub fn node_normal(&self, node: usize) -> Point2 {
        let p = &self.panels[self.node_panel[node]];
        p.normals[node - p.first_node]
    }

    pub fn node_weight(&self, node: usize) -> f64 {
        let p = &self.panels[self.node_panel[node]];
        p.weights[node - p.first_node]
    }

    /// True if the node lies on `B ∪ Gamma` (by construction these are the
    /// first `bg_nodes` indices).
    pub fn node_on_ground_or_cavity(&self, node: usize) -> bool {
        node < self.bg_nodes
    }

    pub fn node_part(&self, node: usize) -> BoundaryPart {
        self.panels[self.node_panel[node]].part
    }
}

/// Parameter breakpoints of one segment: `n_mid` equal panels with each
/// corner-flagged end replaced by an `n_corner`-level dyadic cascade.
pub fn panelize_segment(
    n_mid: usize,
    corner_start: bool,
    corner_end: bool,
    n_corner: usize,
) -> Result<Vec<f64>, QuadratureError> {
    if n_mid == 0 {
        return Err(QuadratureError::NoPanels);
    }
    // a single panel cannot host a cascade on both ends
    let n = if corner_start && corner_end && n_corner > 0 {
        n_mid.max(2)
    } else {
        n_mid
    };
    let base = 1.0 / n as f64;
    let mut ts = vec![0.0];
    if corner_start && n_corner > 0 {
        for level in (0..n_corner).rev() {
            ts.push(base * 0.5f64.powi(level as i32 + 1));
        }
        ts.push(base);
    } else {
        ts.push(base);
    }
    for i in 2..=n {
        ts.push(base * i as f64);
    }
    if corner_end && n_corner > 0 {
        // mirror the cascade into the last interval
        let last = ts.pop().unwrap();
        let prev = *ts.last().unwrap();
        let len = last - prev;
        for level in 1..=n_corner {
            ts.push(last - len * 0.5f64.powi(level as i32));
        }
        ts.push(last);
    }
    // exact endpoint
    *ts.last_mut().unwrap() = 1.0;
    Ok(ts)
}

/// Mesh with `n_mid` equal-parameter panels per smooth segment.
pub fn generate_mesh(
    scene: &SceneGeometry,
    n_mid: usize,
    n_corner: usize,
    p: usize,
) -> Result<Mesh, QuadratureError> {
    let counts = vec![n_mid; scene.loop_parts().len()];
    generate_mesh_counts(scene, &counts, n_corner, p)
}

/// Mesh with an explicit panel count per loop segment (in loop order).
pub fn generate_mesh_counts(
    scene: &SceneGeometry,
    counts: &[usize],
    n_corner: usize,
    p: usize,
) -> Result<Mesh, QuadratureError> {
    if !(4..=32).contains(&p) {
        return Err(QuadratureError::BadPanelOrder(p));
    }
    let violations = crate::geometry::validate_scene(scene);
    if !violations.is_empty() {
        let list = violations
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join("; ");
        return Err(QuadratureError::InvalidScene(list));
    }
    let parts = scene.loop_parts();
    assert_eq!(parts.len(), counts.len(), "one panel count per loop segment");

    let (gl_nodes, gl_weights) = gauss_legendre(p)?;
    let mut panels: Vec<Panel> = Vec::new();
    let mut node_panel: Vec<usize> = Vec::new();
    let mut first_node = 0usize;
    let mut bg_nodes = 0usize;
    let mut dome_nodes = 0usize;

    for (si, ((part, seg), &n_mid)) in parts.iter().zip(counts).enumerate() {
        let ts = panelize_segment(n_mid, seg.corner_start, seg.corner_end, n_corner)?;
        for w in ts.windows(2) {
            let (t0, t1) = (w[0], w[1]);
            let half = 0.5 * (t1 - t0);
            let mid = 0.5 * (t0 + t1);
            let mut panel = Panel {
                segment: si,
                part: *part,
                t0,
                t1,
                first_node,
                nodes: Vec::with_capacity(p),
                normals: Vec::with_capacity(p),
                speeds: Vec::with_capacity(p),
                weights: Vec::with_capacity(p),
                params: Vec::with_capacity(p),
                length: 0.0,
            };
            for (xi, gw) in gl_nodes.iter().zip(&gl_weights) {
                let t = mid + half * xi;
                let d = seg.derivative(t);
                let speed = d.norm();
                panel.params.push(t);
                panel.nodes.push(seg.point(t));
                panel.normals.push(d.perp().scale(1.0 / speed));
                panel.speeds.push(speed);
                panel.weights.push(gw * half * speed);
            }
            panel.length = panel.weights.iter().sum();
            match part {
                BoundaryPart::Dome => dome_nodes += p,
                _ => bg_nodes += p,
            }
            node_panel.extend(std::iter::repeat(panels.len()).take(p));
            first_node += p;
            panels.push(panel);
        }
    }

    let np = panels.len();
    let next: Vec<usize> = (0..np).map(|i| (i + 1) % np).collect();
    let prev: Vec<usize> = (0..np).map(|i| (i + np - 1) % np).collect();
    let finest_len = panels.iter().map(|p| p.length).fold(f64::MAX, f64::min);

    Ok(Mesh {
        p,
        n_corner,
        panels,
        segments: parts.iter().map(|(b, s)| (*b, (*s).clone())).collect(),
        bg_nodes,
        dome_nodes,
        prev,
        next,
        node_panel,
        gl_nodes,
        gl_weights,
        finest_len,
        scene_diameter: scene.diameter(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_pot;

    #[test]
    fn plain_panelization_counts() {
        // closed smooth segment: no corners, N_mid = 4 -> 4 panels, 40 nodes at p = 10
        let ts = panelize_segment(4, false, false, 10).unwrap();
        assert_eq!(ts.len() - 1, 4);
        // corners at both ends, N_mid = 2, N_corner = 3 -> 2 + 2 * 3 = 8 panels
        let ts = panelize_segment(2, true, true, 3).unwrap();
        assert_eq!(ts.len() - 1, 8);
        assert!(panelize_segment(0, false, false, 0).is_err());
    }

    #[test]
    fn cascade_lengths_halve_toward_corner() {
        let ts = panelize_segment(4, true, false, 5).unwrap();
        // first six intervals: L/32, L/32, L/16, L/8, L/4, L/2 with L = 1/4
        let lens: Vec<f64> = ts.windows(2).map(|w| w[1] - w[0]).collect();
        let base = 0.25;
        let expect = [
            base / 32.0,
            base / 32.0,
            base / 16.0,
            base / 8.0,
            base / 4.0,
            base / 2.0,
        ];
        for (i, e) in expect.iter().enumerate() {
            assert!((lens[i] - e).abs() < 1e-15, "interval {i}: {} vs {e}", lens[i]);
        }
        assert_eq!(lens.len(), 4 + 5);
        // total still covers [0, 1]
        assert!((ts.last().unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn pot_mesh_structure() {
        let scene = build_pot();
        let mesh = generate_mesh(&scene, 10, 10, 10).unwrap();
        // 6 smooth segments, each with corners at both ends:
        // 10 + 2 * 10 = 30 panels each
        assert_eq!(mesh.panels.len(), 6 * 30);
        assert_eq!(mesh.n_nodes(), 6 * 30 * 10);
        assert_eq!(mesh.node_panel.len(), mesh.n_nodes());
        assert_eq!(mesh.dome_nodes, 30 * 10);
        assert_eq!(mesh.bg_nodes, 5 * 30 * 10);

        // weights positive, sum over a panel equals its arclength
        for panel in mesh.panels.iter().step_by(7) {
            assert!(panel.weights.iter().all(|&w| w > 0.0));
            let seg = &mesh.segments[panel.segment].1;
            let exact = super::oracle_integrate(
                |t| num_complex::Complex64::new(seg.derivative(t).norm(), 0.0),
                panel.t0,
                panel.t1,
                None,
                1e-13,
            )
            .unwrap();
            assert!(
                (panel.length - exact.re).abs() < 1e-12 * exact.re.max(1e-3),
                "panel length {} vs {}",
                panel.length,
                exact.re
            );
        }

        // pair classification is symmetric
        let np = mesh.panels.len();
        for i in (0..np).step_by(17) {
            for j in (0..np).step_by(13) {
                assert_eq!(mesh.pair_class(i, j), mesh.pair_class(j, i));
                if i == j {
                    assert_eq!(mesh.pair_class(i, j), PairClass::SelfPair);
                }
            }
        }
    }

    #[test]
    fn pot_normals_point_outward() {
        let scene = build_pot();
        let mesh = generate_mesh(&scene, 4, 2, 6).unwrap();
        for panel in &mesh.panels {
            for (x, n) in panel.nodes.iter().zip(&panel.normals) {
                assert!((n.norm() - 1.0).abs() < 1e-13);
                // walking a bit along the outward normal must leave Omega1
                let probe = *x + *n * 1e-4;
                let label = crate::geometry::classify_point(&scene, probe);
                assert_ne!(
                    label,
                    crate::geometry::RegionLabel::Omega1,
                    "normal at ({:.3}, {:.3}) points inward",
                    x.x,
                    x.y
                );
            }
        }
    }

    #[test]
    fn invalid_scene_rejected() {
        let scene = crate::geometry::scene_from_cavity(
            crate::geometry::pot_cavity(),
            crate::Point2::new(0.5, 0.0),
            1.2,
        )
        .unwrap();
        assert!(matches!(
            generate_mesh(&scene, 4, 2, 6),
            Err(QuadratureError::InvalidScene(_))
        ));
    }
}
