//! Nyström assembly of the second-kind boundary integral system.
//!
//! Unknowns, in layout order: the double-layer density mu on the dome, the
//! single-layer density sigma on the dome, then mu on the ground strips and
//! cavity wall (left strip, cavity, right strip). With D/T the free-space
//! double layer and its normal derivative, S^H/D^H their half-space
//! counterparts on the dome, the rows are
//!
//! * dome targets:       `mu - D_Gamma mu = f1`
//! * dome targets:       `sigma + T_Gamma mu = f2`
//! * strip/wall targets: `-mu/2 + S^H sigma + D^H mu + D_{B ∪ Gamma} mu = f3`
//!
//! For the plane-wave scattering problem `(f1, f2, f3) = (0, 0, g)` with
//! `g = -(u_inc + u_refl)`; for the point-source validation problem
//! `(f1, f2, f3) = (-u, du/dn, u)`. Both follow from one convention for the
//! jump relations: the interior limit of a double layer carries `-mu/2`,
//! the exterior `+mu/2` (the validation field prescribes the jumps `-u`,
//! `-du/dn` across the dome instead of continuity, which flips the sign of
//! the first block's data).
//!
//! Entries are scaled symmetrically by the square roots of the quadrature
//! weights, so identity contributions stay unscaled and the discrete system
//! inherits the conditioning of the continuous one. Self- and adjacent-panel
//! interactions of the `B ∪ Gamma` double layer route through precomputed
//! quadrature blocks; everything else is generated on the fly.

use crate::geometry::{BoundaryPart, CurvePath, RegionLabel, SceneGeometry};
use crate::point::Point2;
use crate::quadrature::{near_block as near_block_quad, singular_block, Mesh, QuadratureError};
use crate::specfun::{
    greens_free, kernel, kernel_from_difference, Cplx, KernelKind, Space, SpecFunError,
    WaveContext,
};
use ndarray::{Array1, Array2};
use rayon::prelude::*;
use std::collections::HashMap;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AssemblyError {
    #[error("system size {n} exceeds the dense cap {cap}")]
    DenseCapExceeded { n: usize, cap: usize },
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    SpecFun(#[from] SpecFunError),
    #[error("validation source ({0:.3}, {1:.3}) must lie strictly above the dome")]
    BadValidationSource(f64, f64),
}

/// Which density a global unknown index belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DensityKind {
    /// mu on the dome Gamma1.
    MuDome,
    /// sigma on the dome Gamma1.
    SigmaDome,
    /// mu on B ∪ Gamma.
    MuBoundary,
}

/// Index map between global unknowns and mesh nodes:
/// `[mu on Gamma1 | sigma on Gamma1 | mu on B ∪ Gamma]`.
#[derive(Debug, Clone)]
pub struct UnknownLayout {
    pub n_dome: usize,
    pub n_bg: usize,
}

impl UnknownLayout {
    pub fn n_tot(&self) -> usize {
        2 * self.n_dome + self.n_bg
    }

    /// Density kind and mesh node of a global unknown index. Dome nodes are
    /// numbered after the `B ∪ Gamma` nodes in the mesh.
    pub fn classify(&self, i: usize) -> (DensityKind, usize) {
        debug_assert!(i < self.n_tot());
        if i < self.n_dome {
            (DensityKind::MuDome, self.n_bg + i)
        } else if i < 2 * self.n_dome {
            (DensityKind::SigmaDome, self.n_bg + i - self.n_dome)
        } else {
            (DensityKind::MuBoundary, i - 2 * self.n_dome)
        }
    }
}

/// Deterministic unknown ordering for a mesh.
pub fn layout(mesh: &Mesh) -> UnknownLayout {
    UnknownLayout { n_dome: mesh.dome_nodes, n_bg: mesh.bg_nodes }
}

/// The scaled Nyström matrix as an entry generator with precomputed
/// singular/adjacent blocks.
pub struct SystemOperator {
    pub mesh: Arc<Mesh>,
    pub ctx: WaveContext,
    pub layout: UnknownLayout,
    /// sqrt of the arclength weight per mesh node.
    pub sqrt_w: Vec<f64>,
    /// Corrected near blocks of the B ∪ Gamma double layer, keyed by
    /// (target panel, source panel), stored unscaled (kernel x basis
    /// integrals, row-major p x p).
    corrected: HashMap<(u32, u32), Vec<Cplx>>,
}

/// Precompute the near-interaction blocks and wrap the mesh as an operator.
pub fn build_operator(
    mesh: Arc<Mesh>,
    ctx: WaveContext,
) -> Result<SystemOperator, AssemblyError> {
    let ctx = ctx.with_t_guard(1e-12 * mesh.scene_diameter);
    let lay = layout(&mesh);
    let mut sqrt_w = Vec::with_capacity(mesh.n_nodes());
    for n in 0..mesh.n_nodes() {
        sqrt_w.push(mesh.node_weight(n).sqrt());
    }

    // The only on-surface operator is the double layer on B ∪ Gamma: self
    // pairs, loop-adjacent pairs, and pairs that are geometrically close
    // relative to their panel sizes (narrow channels, re-entrant spikes)
    // all route through corrected blocks; everything farther is handled by
    // the plain node weights.
    let bg_panels: Vec<usize> = mesh
        .panels
        .iter()
        .enumerate()
        .filter(|(_, panel)| panel.part != BoundaryPart::Dome)
        .map(|(pi, _)| pi)
        .collect();
    let centers: Vec<(Point2, f64)> = mesh
        .panels
        .iter()
        .map(|panel| {
            let c = panel
                .nodes
                .iter()
                .fold(Point2::new(0.0, 0.0), |a, &b| a + b)
                .scale(1.0 / panel.nodes.len() as f64);
            let r = panel.nodes.iter().map(|&n| n.dist(c)).fold(0.0, f64::max);
            (c, r)
        })
        .collect();
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for &pi in &bg_panels {
        for &pj in &bg_panels {
            let near = if pi == pj || mesh.next[pi] == pj || mesh.prev[pi] == pj {
                true
            } else {
                let (ci, ri) = centers[pi];
                let (cj, rj) = centers[pj];
                let gap = (ci.dist(cj) - ri - rj).max(0.0);
                gap < mesh.panels[pi].length.max(mesh.panels[pj].length)
            };
            if near {
                pairs.push((pi, pj));
            }
        }
    }

    let blocks: Result<Vec<((u32, u32), Vec<Cplx>)>, AssemblyError> = pairs
        .par_iter()
        .map(|&(t, s)| {
            let block = near_block(&mesh, &ctx, t, s)?;
            Ok(((t as u32, s as u32), block))
        })
        .collect();

    Ok(SystemOperator {
        layout: lay,
        sqrt_w,
        corrected: blocks?.into_iter().collect(),
        mesh,
        ctx,
    })
}

fn near_block(
    mesh: &Mesh,
    ctx: &WaveContext,
    target: usize,
    source: usize,
) -> Result<Vec<Cplx>, AssemblyError> {
    let tp = &mesh.panels[target];
    let sp = &mesh.panels[source];
    // colinear target and source on a straight segment: the double layer
    // vanishes identically
    if tp.segment == sp.segment {
        if let CurvePath::Line { .. } = mesh.segments[tp.segment].1.path {
            return Ok(vec![Cplx::new(0.0, 0.0); mesh.p * mesh.p]);
        }
    }
    let normals = tp.normals.clone();
    let k = |m: usize, _y: Point2, ny: Point2, d: Point2| {
        kernel_from_difference(ctx, KernelKind::DoubleLayer, d, normals[m], ny)
            .expect("near-block kernel evaluation")
    };
    let block = if target == source {
        singular_block(mesh, target, k)?
    } else {
        near_block_quad(mesh, target, source, k)?
    };
    Ok(block)
}

impl SystemOperator {
    pub fn n_tot(&self) -> usize {
        self.layout.n_tot()
    }

    /// One scaled matrix entry, identity terms included.
    pub fn entry(&self, i: usize, j: usize) -> Cplx {
        let (rk, a) = self.layout.classify(i);
        let (ck, b) = self.layout.classify(j);
        let mesh = &*self.mesh;
        let delta = if i == j { 1.0 } else { 0.0 };
        let scale = self.sqrt_w[a] * self.sqrt_w[b];
        match (rk, ck) {
            (DensityKind::MuDome, DensityKind::MuDome)
            | (DensityKind::SigmaDome, DensityKind::SigmaDome) => Cplx::new(delta, 0.0),
            (DensityKind::MuDome, DensityKind::SigmaDome)
            | (DensityKind::SigmaDome, DensityKind::MuDome) => Cplx::new(0.0, 0.0),
            (DensityKind::MuDome, DensityKind::MuBoundary) => {
                if mesh.node_part(b) != BoundaryPart::Cavity {
                    return Cplx::new(0.0, 0.0);
                }
                -self.free_kernel(KernelKind::DoubleLayer, a, b) * scale
            }
            (DensityKind::SigmaDome, DensityKind::MuBoundary) => {
                if mesh.node_part(b) != BoundaryPart::Cavity {
                    return Cplx::new(0.0, 0.0);
                }
                self.free_kernel(KernelKind::Hypersingular, a, b) * scale
            }
            (DensityKind::MuBoundary, DensityKind::MuDome) => {
                self.half_kernel(KernelKind::DoubleLayer, a, b) * scale
            }
            (DensityKind::MuBoundary, DensityKind::SigmaDome) => {
                self.half_kernel(KernelKind::SingleLayer, a, b) * scale
            }
            (DensityKind::MuBoundary, DensityKind::MuBoundary) => {
                let ident = Cplx::new(-0.5 * delta, 0.0);
                let (pa, pb) = (mesh.node_panel[a], mesh.node_panel[b]);
                if let Some(block) = self.corrected.get(&(pa as u32, pb as u32)) {
                    let ma = a - mesh.panels[pa].first_node;
                    let mb = b - mesh.panels[pb].first_node;
                    ident + block[ma * mesh.p + mb] * (self.sqrt_w[a] / self.sqrt_w[b])
                } else {
                    ident + self.free_kernel(KernelKind::DoubleLayer, a, b) * scale
                }
            }
        }
    }

    fn free_kernel(&self, kind: KernelKind, target: usize, source: usize) -> Cplx {
        let m = &*self.mesh;
        kernel(
            &self.ctx,
            kind,
            Space::Free,
            m.node_point(target),
            m.node_normal(target),
            m.node_point(source),
            m.node_normal(source),
        )
        .expect("far kernel evaluation")
    }

    fn half_kernel(&self, kind: KernelKind, target: usize, source: usize) -> Cplx {
        let m = &*self.mesh;
        kernel(
            &self.ctx,
            kind,
            Space::Half,
            m.node_point(target),
            m.node_normal(target),
            m.node_point(source),
            m.node_normal(source),
        )
        .expect("half-space kernel evaluation")
    }

    /// Materialize the full matrix. Serves as the oracle for the
    /// hierarchical solver; guarded by a size cap.
    pub fn assemble_dense(&self, cap: usize) -> Result<Array2<Cplx>, AssemblyError> {
        let n = self.n_tot();
        if n > cap {
            return Err(AssemblyError::DenseCapExceeded { n, cap });
        }
        let rows: Vec<Vec<Cplx>> = (0..n)
            .into_par_iter()
            .map(|i| (0..n).map(|j| self.entry(i, j)).collect())
            .collect();
        let mut a = Array2::zeros((n, n));
        for (i, row) in rows.into_iter().enumerate() {
            for (j, v) in row.into_iter().enumerate() {
                a[(i, j)] = v;
            }
        }
        Ok(a)
    }
}

/// Provenance of a right-hand side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RhsKind {
    /// Plane wave with incidence angle theta and ground reflection sign.
    Scattering { theta: f64, reflection_sign: f64 },
    /// Point-source validation data from the given source.
    Validation { source: Point2 },
}

#[derive(Debug, Clone)]
pub struct RightHandSide {
    /// sqrt-weight scaled data over the unknown layout.
    pub data: Array1<Cplx>,
    pub kind: RhsKind,
}

/// Plane-wave boundary data `g = -(u_inc + u_refl)` on `B ∪ Gamma`; the two
/// dome blocks carry zero data. With reflection sign -1 the total driving
/// field vanishes on the ground line, so g is supported on the cavity wall.
pub fn rhs_scattering(
    mesh: &Mesh,
    lay: &UnknownLayout,
    ctx: &WaveContext,
    theta: f64,
    reflection_sign: f64,
) -> RightHandSide {
    let mut data = Array1::zeros(lay.n_tot());
    let (s, c) = theta.sin_cos();
    for i in 2 * lay.n_dome..lay.n_tot() {
        let (_, node) = lay.classify(i);
        let x = mesh.node_point(node);
        let inc = (Cplx::i() * ctx.k * (c * x.x - s * x.y)).exp();
        let refl = (Cplx::i() * ctx.k * (c * x.x + s * x.y)).exp() * reflection_sign;
        data[i] = -(inc + refl) * mesh.node_weight(node).sqrt();
    }
    RightHandSide {
        data,
        kind: RhsKind::Scattering { theta, reflection_sign },
    }
}

/// The point-source pair field driving the validation problem:
/// `u(x) = Phi(x, x0) + Phi(x, x0')` with `x0'` the ground image of `x0`.
pub fn validation_field(ctx: &WaveContext, x0: Point2, x: Point2) -> Cplx {
    greens_free(ctx, x, x0).expect("validation field")
        + greens_free(ctx, x, x0.reflect_ground()).expect("validation field")
}

fn validation_field_dn(ctx: &WaveContext, x0: Point2, x: Point2, nx: Point2) -> Cplx {
    let n = |y: Point2| {
        kernel(ctx, KernelKind::AdjointDoubleLayer, Space::Free, x, nx, y, nx)
            .expect("validation field normal derivative")
    };
    n(x0) + n(x0.reflect_ground())
}

/// Validation data: traces of the point-source pair field on all three row
/// blocks. The source must sit strictly above the dome.
pub fn rhs_validation(
    scene: &SceneGeometry,
    mesh: &Mesh,
    lay: &UnknownLayout,
    ctx: &WaveContext,
    x0: Point2,
) -> Result<RightHandSide, AssemblyError> {
    let outside_dome = x0.dist(scene.dome_center) > scene.dome_radius;
    if !(x0.y > 0.0
        && outside_dome
        && crate::geometry::classify_point(scene, x0) == RegionLabel::ExteriorUpper)
    {
        return Err(AssemblyError::BadValidationSource(x0.x, x0.y));
    }
    let mut data = Array1::zeros(lay.n_tot());
    for i in 0..lay.n_tot() {
        let (kind, node) = lay.classify(i);
        let x = mesh.node_point(node);
        let sw = mesh.node_weight(node).sqrt();
        data[i] = match kind {
            DensityKind::MuDome => -validation_field(ctx, x0, x) * sw,
            DensityKind::SigmaDome => {
                validation_field_dn(ctx, x0, x, mesh.node_normal(node)) * sw
            }
            DensityKind::MuBoundary => validation_field(ctx, x0, x) * sw,
        }
    }
    Ok(RightHandSide { data, kind: RhsKind::Validation { source: x0 } })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_pot;
    use crate::quadrature::generate_mesh;

    fn small_op(k: f64) -> SystemOperator {
        let scene = build_pot();
        let mesh = Arc::new(generate_mesh(&scene, 2, 3, 5).unwrap());
        build_operator(mesh, WaveContext::new(k).unwrap()).unwrap()
    }

    #[test]
    fn layout_counts_and_kinds() {
        let scene = build_pot();
        let mesh = generate_mesh(&scene, 2, 3, 5).unwrap();
        let lay = layout(&mesh);
        assert_eq!(lay.n_tot(), 2 * mesh.dome_nodes + mesh.bg_nodes);
        assert_eq!(lay.classify(0), (DensityKind::MuDome, mesh.bg_nodes));
        let (kind, node) = lay.classify(lay.n_tot() - 1);
        assert_eq!(kind, DensityKind::MuBoundary);
        assert_eq!(node, mesh.bg_nodes - 1);
        assert_eq!(mesh.node_part(node), BoundaryPart::StripRight);
        // sigma block points at the same nodes as the mu dome block
        assert_eq!(lay.classify(lay.n_dome).1, lay.classify(0).1);
    }

    #[test]
    fn identity_blocks_and_zeros() {
        let op = small_op(2.0);
        let lay = op.layout.clone();
        // dome diagonal blocks are exactly the identity
        for i in [0, 1, lay.n_dome / 2] {
            assert_eq!(op.entry(i, i), Cplx::new(1.0, 0.0));
            assert_eq!(op.entry(lay.n_dome + i, lay.n_dome + i), Cplx::new(1.0, 0.0));
            assert_eq!(op.entry(i, lay.n_dome + i), Cplx::new(0.0, 0.0));
            assert_eq!(op.entry(lay.n_dome + i, i), Cplx::new(0.0, 0.0));
        }
        // mu rows on the dome have no strip sources
        for j in 2 * lay.n_dome..lay.n_tot() {
            let (_, node) = lay.classify(j);
            if op.mesh.node_part(node) != BoundaryPart::Cavity {
                assert_eq!(op.entry(0, j), Cplx::new(0.0, 0.0));
            }
        }
        // every sampled entry is finite
        let n = op.n_tot();
        for i in (0..n).step_by(13) {
            for j in (0..n).step_by(11) {
                let v = op.entry(i, j);
                assert!(v.re.is_finite() && v.im.is_finite());
            }
        }
    }

    #[test]
    fn ground_targets_blind_to_dome_sources() {
        // image cancellation: rows with targets on the ground line have
        // exactly zero entries against both dome density blocks
        let op = small_op(3.0);
        let lay = op.layout.clone();
        let mut checked = 0;
        for i in 2 * lay.n_dome..lay.n_tot() {
            let (_, node) = lay.classify(i);
            if !matches!(
                op.mesh.node_part(node),
                BoundaryPart::StripLeft | BoundaryPart::StripRight
            ) {
                continue;
            }
            for j in [0, lay.n_dome / 2, lay.n_dome, lay.n_dome + 3] {
                assert_eq!(op.entry(i, j), Cplx::new(0.0, 0.0));
            }
            checked += 1;
        }
        assert!(checked > 0);
    }

    #[test]
    fn scattering_rhs_structure() {
        let scene = build_pot();
        let mesh = generate_mesh(&scene, 2, 3, 5).unwrap();
        let lay = layout(&mesh);
        let ctx = WaveContext::new(1.0).unwrap();
        let rhs = rhs_scattering(&mesh, &lay, &ctx, std::f64::consts::FRAC_PI_2, -1.0);
        // dome rows carry zero data
        for i in 0..2 * lay.n_dome {
            assert_eq!(rhs.data[i], Cplx::new(0.0, 0.0));
        }
        // ground-line rows vanish exactly with reflection sign -1
        let mut strip_rows = 0;
        for i in 2 * lay.n_dome..lay.n_tot() {
            let (_, node) = lay.classify(i);
            if mesh.node_point(node).y == 0.0 {
                assert_eq!(rhs.data[i], Cplx::new(0.0, 0.0));
                strip_rows += 1;
            }
        }
        assert!(strip_rows > 0);
        // direct formula at a cavity node: theta = pi/2, k = 1
        let i = (2 * lay.n_dome..lay.n_tot())
            .find(|&i| mesh.node_part(lay.classify(i).1) == BoundaryPart::Cavity)
            .unwrap();
        let (_, node) = lay.classify(i);
        let x = mesh.node_point(node);
        let want = -((Cplx::i() * -x.y).exp() - (Cplx::i() * x.y).exp())
            * mesh.node_weight(node).sqrt();
        assert!((rhs.data[i] - want).norm() < 1e-15);
    }

    #[test]
    fn validation_rhs_traces() {
        let scene = build_pot();
        let mesh = generate_mesh(&scene, 2, 3, 5).unwrap();
        let lay = layout(&mesh);
        let ctx = WaveContext::new(2.0).unwrap();
        let x0 = Point2::new(5.0, 12.0);
        let rhs = rhs_validation(&scene, &mesh, &lay, &ctx, x0).unwrap();

        // on the ground line the pair collapses to twice one source
        for i in 2 * lay.n_dome..lay.n_tot() {
            let (_, node) = lay.classify(i);
            let x = mesh.node_point(node);
            if x.y == 0.0 {
                let want = 2.0 * greens_free(&ctx, x, x0).unwrap()
                    * mesh.node_weight(node).sqrt();
                assert!((rhs.data[i] - want).norm() < 1e-14);
            }
        }

        // normal-derivative rows match finite differences of the field
        for i in [lay.n_dome, lay.n_dome + 7, 2 * lay.n_dome - 1] {
            let (kind, node) = lay.classify(i);
            assert_eq!(kind, DensityKind::SigmaDome);
            let x = mesh.node_point(node);
            let n = mesh.node_normal(node);
            let h = 1e-5;
            let fd = (validation_field(&ctx, x0, x + n * h)
                - validation_field(&ctx, x0, x + n * -h))
                / (2.0 * h);
            let got = rhs.data[i] / mesh.node_weight(node).sqrt();
            assert!((got - fd).norm() <= 1e-7 * fd.norm().max(1.0));
        }

        // mu rows on the dome are the negated trace
        let (_, node) = lay.classify(3);
        let x = mesh.node_point(node);
        let want = -validation_field(&ctx, x0, x) * mesh.node_weight(node).sqrt();
        assert!((rhs.data[3] - want).norm() < 1e-14);

        // bad sources are rejected
        assert!(rhs_validation(&scene, &mesh, &lay, &ctx, Point2::new(0.5, 1.0)).is_err());
        assert!(rhs_validation(&scene, &mesh, &lay, &ctx, Point2::new(0.5, -8.0)).is_err());
    }

    #[test]
    fn dense_cap_enforced() {
        let op = small_op(1.0);
        assert!(matches!(
            op.assemble_dense(10),
            Err(AssemblyError::DenseCapExceeded { .. })
        ));
        let a = op.assemble_dense(10_000).unwrap();
        assert_eq!(a.nrows(), op.n_tot());
        // spot-check against the entry generator
        for i in (0..op.n_tot()).step_by(29) {
            for j in (0..op.n_tot()).step_by(31) {
                assert_eq!(a[(i, j)], op.entry(i, j));
            }
        }
    }
}
