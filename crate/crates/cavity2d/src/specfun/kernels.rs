//! Layer-potential kernels for the 2D Helmholtz equation: the free-space
//! Green's function `Phi(x, y) = (i/4) H0(k |x - y|)`, its half-space
//! counterpart `Phi_H = Phi(x, y) - Phi(x, y')` (image point `y'` mirrored
//! across the ground plane), and the four classical operator kernels
//!
//! * S:  `Phi`
//! * D:  `dPhi/dn(y)`
//! * N:  `dPhi/dn(x)`
//! * T:  `d^2 Phi / dn(x) dn(y)`
//!
//! All derivatives reduce to closed forms in H0 and H1; the T kernel uses
//! H2 through the recurrence `H2 = (2/z) H1 - H0`. Half-space variants
//! subtract the image kernel with the image normal `(n1, -n2)`.

use super::bessel::hankel_pair;
use super::{SpecFunError, WaveContext};
use crate::point::Point2;
use num_complex::Complex64;

/// Which layer-potential kernel to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    /// Single layer: `Phi(x, y)`.
    SingleLayer,
    /// Double layer: `dPhi/dn(y)`.
    DoubleLayer,
    /// Adjoint double layer: `dPhi/dn(x)`.
    AdjointDoubleLayer,
    /// Hypersingular: `d^2 Phi/dn(x) dn(y)`; only meaningful off-surface.
    Hypersingular,
}

/// Free space or half space (Dirichlet ground plane, method of images).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Space {
    Free,
    Half,
}

const QUARTER_I: Complex64 = Complex64::new(0.0, 0.25);

/// Free-space Green's function `(i/4) H0(k |x - y|)`.
pub fn greens_free(ctx: &WaveContext, x: Point2, y: Point2) -> Result<Complex64, SpecFunError> {
    let r = x.dist(y);
    if r == 0.0 {
        return Err(SpecFunError::CoincidentPoints);
    }
    let (h0, _) = hankel_pair(ctx.k * r)?;
    Ok(QUARTER_I * h0)
}

/// One layer-potential kernel value. `nx` is the unit normal at the target,
/// `ny` at the source; both must be supplied (S ignores them, D ignores
/// `nx`, N ignores `ny`).
pub fn kernel(
    ctx: &WaveContext,
    kind: KernelKind,
    space: Space,
    x: Point2,
    nx: Point2,
    y: Point2,
    ny: Point2,
) -> Result<Complex64, SpecFunError> {
    let direct = kernel_from_difference(ctx, kind, x - y, nx, ny)?;
    match space {
        Space::Free => Ok(direct),
        Space::Half => {
            let yi = y.reflect_ground();
            let image =
                kernel_from_difference(ctx, kind, x - yi, nx, ny.reflect_ground())?;
            Ok(direct - image)
        }
    }
}

/// Free-space kernel from a precomputed difference vector `d = x - y`.
/// Near-diagonal quadrature supplies `d` from a cancellation-free chord so
/// the O(|d|^2) dot products stay meaningful when |d| is tiny.
pub fn kernel_from_difference(
    ctx: &WaveContext,
    kind: KernelKind,
    d: Point2,
    nx: Point2,
    ny: Point2,
) -> Result<Complex64, SpecFunError> {
    let r = d.norm();
    if r == 0.0 {
        return Err(SpecFunError::CoincidentPoints);
    }
    let k = ctx.k;
    if kind == KernelKind::Hypersingular && r < ctx.t_guard {
        return Err(SpecFunError::NearSingular { r, guard: ctx.t_guard });
    }
    let (h0, h1) = hankel_pair(k * r)?;
    Ok(match kind {
        KernelKind::SingleLayer => QUARTER_I * h0,
        // dPhi/dn(y) = (ik/4) H1(kr) (x - y).n(y) / r
        KernelKind::DoubleLayer => QUARTER_I * k * h1 * (d.dot(ny) / r),
        // dPhi/dn(x) = -(ik/4) H1(kr) (x - y).n(x) / r
        KernelKind::AdjointDoubleLayer => -QUARTER_I * k * h1 * (d.dot(nx) / r),
        KernelKind::Hypersingular => {
            let z = k * r;
            let h2 = (2.0 / z) * h1 - h0;
            let rnx = d.dot(nx) / r;
            let rny = d.dot(ny) / r;
            // d^2 Phi/dn(x)dn(y) =
            //   (i/4) [ k^2 (H1/z - H2) rnx rny + (k/r) H1 (nx.ny - rnx rny) ]
            QUARTER_I
                * ((h1 / z - h2) * (k * k * rnx * rny)
                    + h1 * (k / r) * (nx.dot(ny) - rnx * rny))
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx(k: f64) -> WaveContext {
        WaveContext::new(k).unwrap()
    }

    #[test]
    fn greens_is_symmetric_and_guards_diagonal() {
        let c = ctx(1.3);
        let pairs = [
            (Point2::new(0.1, 0.7), Point2::new(-1.2, 2.0)),
            (Point2::new(3.0, 0.2), Point2::new(0.4, 1.9)),
            (Point2::new(-0.5, 4.0), Point2::new(2.2, 0.01)),
        ];
        for (x, y) in pairs {
            let a = greens_free(&c, x, y).unwrap();
            let b = greens_free(&c, y, x).unwrap();
            assert!((a - b).norm() < 1e-16);
        }
        let p = Point2::new(0.5, 0.5);
        assert!(matches!(
            greens_free(&c, p, p),
            Err(SpecFunError::CoincidentPoints)
        ));
    }

    #[test]
    fn greens_value_at_unit_distance() {
        // k = 1, |x - y| = 1: (i/4)(J0(1) + i Y0(1))
        let c = ctx(1.0);
        let g = greens_free(&c, Point2::new(0.0, 1.0), Point2::new(0.0, 2.0)).unwrap();
        let j0 = 0.765_197_686_557_966_55;
        let y0 = 0.088_256_964_215_676_96;
        assert!((g - Complex64::new(0.0, 0.25) * Complex64::new(j0, y0)).norm() < 1e-15);
    }

    #[test]
    fn double_layer_vanishes_for_flat_geometry() {
        // x, y on a common line, n(y) perpendicular to that line
        let c = ctx(4.0);
        let x = Point2::new(0.3, 1.0);
        let y = Point2::new(-2.0, 1.0);
        let ny = Point2::new(0.0, 1.0);
        let v = kernel(&c, KernelKind::DoubleLayer, Space::Free, x, ny, y, ny).unwrap();
        assert_eq!(v, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn half_space_kernels_vanish_on_ground_line() {
        let c = ctx(2.7);
        let x = Point2::new(0.75, 0.0);
        let nx = Point2::new(0.0, -1.0);
        let y = Point2::new(-0.3, 1.4);
        let ny = Point2::new(0.6, 0.8);
        for kind in [KernelKind::SingleLayer, KernelKind::DoubleLayer] {
            let v = kernel(&c, kind, Space::Half, x, nx, y, ny).unwrap();
            assert_eq!(v, Complex64::new(0.0, 0.0), "{kind:?} not exactly zero");
        }
    }

    #[test]
    fn reciprocity_between_n_and_d() {
        let c = ctx(3.1);
        let x = Point2::new(0.2, 1.1);
        let nx = Point2::new(0.8, 0.6);
        let y = Point2::new(-1.0, 0.4);
        let ny = Point2::new(-0.6, 0.8);
        let n = kernel(&c, KernelKind::AdjointDoubleLayer, Space::Free, x, nx, y, ny).unwrap();
        let d = kernel(&c, KernelKind::DoubleLayer, Space::Free, y, ny, x, nx).unwrap();
        assert!((n - d).norm() < 1e-16);
    }

    /// Central finite differences of Phi along the normals, with one
    /// Richardson step; independent check of every derivative kernel.
    fn fd_kernel(
        c: &WaveContext,
        kind: KernelKind,
        x: Point2,
        nx: Point2,
        y: Point2,
        ny: Point2,
        h: f64,
    ) -> Complex64 {
        let phi = |x: Point2, y: Point2| greens_free(c, x, y).unwrap();
        let step = |h: f64| match kind {
            KernelKind::DoubleLayer => (phi(x, y + ny * h) - phi(x, y - ny * h)) / (2.0 * h),
            KernelKind::AdjointDoubleLayer => {
                (phi(x + nx * h, y) - phi(x - nx * h, y)) / (2.0 * h)
            }
            KernelKind::Hypersingular => {
                (phi(x + nx * h, y + ny * h) - phi(x + nx * h, y - ny * h)
                    - phi(x - nx * h, y + ny * h)
                    + phi(x - nx * h, y - ny * h))
                    / (4.0 * h * h)
            }
            KernelKind::SingleLayer => phi(x, y),
        };
        let d1 = step(h);
        let d2 = step(0.5 * h);
        (d2 * 4.0 - d1) / 3.0
    }

    #[test]
    fn derivative_kernels_match_finite_differences() {
        let c = ctx(7.0);
        // deterministic pseudo-random off-surface pairs
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..20 {
            let x = Point2::new(next() * 4.0 - 2.0, next() * 2.0 + 0.3);
            let y = Point2::new(next() * 4.0 - 2.0, -(next() * 2.0 + 0.3));
            if x.dist(y) < 0.5 {
                continue;
            }
            let a = next() * std::f64::consts::TAU;
            let b = next() * std::f64::consts::TAU;
            let nx = Point2::new(a.cos(), a.sin());
            let ny = Point2::new(b.cos(), b.sin());
            for kind in [
                KernelKind::DoubleLayer,
                KernelKind::AdjointDoubleLayer,
                KernelKind::Hypersingular,
            ] {
                let exact = kernel(&c, kind, Space::Free, x, nx, y, ny).unwrap();
                let fd = fd_kernel(&c, kind, x, nx, y, ny, 1e-4);
                assert!(
                    (exact - fd).norm() <= 1e-7 * exact.norm().max(1.0),
                    "{kind:?} mismatch: exact {exact}, fd {fd}"
                );
            }
        }
    }

    #[test]
    fn finite_differences_converge_second_order() {
        let c = ctx(5.0);
        let x = Point2::new(0.4, 1.2);
        let y = Point2::new(-0.9, 0.5);
        let nx = Point2::new(0.6, 0.8);
        let ny = Point2::new(1.0, 0.0);
        let exact = kernel(&c, KernelKind::Hypersingular, Space::Free, x, nx, y, ny).unwrap();
        let phi = |x: Point2, y: Point2| greens_free(&c, x, y).unwrap();
        let raw = |h: f64| {
            (phi(x + nx * h, y + ny * h) - phi(x + nx * h, y - ny * h)
                - phi(x - nx * h, y + ny * h)
                + phi(x - nx * h, y - ny * h))
                / (4.0 * h * h)
        };
        let e1 = (raw(1e-3) - exact).norm();
        let e2 = (raw(5e-4) - exact).norm();
        let order = (e1 / e2).log2();
        assert!(order > 1.9 && order < 2.1, "observed order {order}");
    }

    #[test]
    fn hypersingular_proximity_guard() {
        let mut c = ctx(1.0);
        c.t_guard = 1e-3;
        let x = Point2::new(0.0, 1.0);
        let y = Point2::new(0.0, 1.0 + 1e-4);
        let n = Point2::new(1.0, 0.0);
        assert!(matches!(
            kernel(&c, KernelKind::Hypersingular, Space::Free, x, n, y, n),
            Err(SpecFunError::NearSingular { .. })
        ));
        // other kernels unaffected by the guard
        assert!(kernel(&c, KernelKind::SingleLayer, Space::Free, x, n, y, n).is_ok());
    }
}
