//! Plane fitting, point-to-plane distances and surface frames.

use nalgebra::{Matrix3, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{PlanarSurface, Vec3};

/// Below this ratio of second-smallest to largest scatter eigenvalue the
/// input is treated as collinear.
const DEGENERACY_RATIO: f64 = 1e-12;

/// Minimum points for a patch-level plane fit (strictly more than three).
pub const MIN_PATCH_POINTS: usize = 4;

/// A plane `{p : normal · p = offset}` with the centroid it was fitted on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Plane {
    pub normal: Vec3,
    pub offset: f64,
    pub centroid: Vec3,
}

impl Plane {
    /// Signed orthogonal distance `normal · p - offset`.
    ///
    /// Evaluated as `normal · (p - centroid)`, which is the same quantity but
    /// keeps precision when coordinates are large (projected CRS eastings).
    pub fn signed_distance(&self, p: &Vec3) -> f64 {
        self.normal.dot(&(p - self.centroid))
    }
}

pub fn signed_distance(plane: &Plane, p: &Vec3) -> f64 {
    plane.signed_distance(p)
}

/// Flips `n` so that `n_z >= 0`, falling back to `n_x` then `n_y` when the
/// leading component is zero.
pub fn canonical_normal(n: Vec3) -> Vec3 {
    const ZERO: f64 = 1e-12;
    let key = if n.z.abs() > ZERO {
        n.z
    } else if n.x.abs() > ZERO {
        n.x
    } else {
        n.y
    };
    if key < 0.0 {
        -n
    } else {
        n
    }
}

/// Orthogonal (total) least-squares plane through `points`.
///
/// The normal is the eigenvector of the centered scatter matrix with the
/// smallest eigenvalue, so residuals are measured perpendicular to the plane
/// and walls fit as well as floors.
pub fn fit_plane(points: &[Vec3]) -> Result<Plane> {
    if points.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "plane fit needs at least 3 points, got {}",
            points.len()
        )));
    }
    if !points.iter().all(|p| p.iter().all(|c| c.is_finite())) {
        return Err(Error::InvalidInput("plane fit input has non-finite coordinates".into()));
    }
    let n = points.len() as f64;
    let centroid = points.iter().fold(Vec3::zeros(), |acc, p| acc + p) / n;
    let mut scatter = Matrix3::zeros();
    for p in points {
        let d = p - centroid;
        scatter += d * d.transpose();
    }
    let eig = SymmetricEigen::new(scatter);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let largest = eig.eigenvalues[order[2]];
    let middle = eig.eigenvalues[order[1]];
    if largest <= 0.0 || middle < DEGENERACY_RATIO * largest {
        return Err(Error::DegenerateGeometry(
            "points are collinear or coincident".into(),
        ));
    }
    let normal = canonical_normal(eig.eigenvectors.column(order[0]).normalize());
    Ok(Plane {
        normal,
        offset: normal.dot(&centroid),
        centroid,
    })
}

/// Builds a rectangular surface from three corner picks.
///
/// `c1` becomes the origin and `c2 - c1` the u direction. The v direction is
/// the component of `c3 - c1` orthogonal to u, so the rectangle always
/// covers the picked corners. Omitted extents default to `|c2 - c1|` and the
/// projection of `c3 - c1` onto v.
pub fn surface_from_corners(
    label: impl Into<String>,
    c1: Vec3,
    c2: Vec3,
    c3: Vec3,
    extent_u: Option<f64>,
    extent_v: Option<f64>,
) -> Result<PlanarSurface> {
    let a = c2 - c1;
    let b = c3 - c1;
    let cross = a.cross(&b);
    if a.norm() == 0.0 || b.norm() == 0.0 || cross.norm() <= 1e-12 * a.norm() * b.norm() {
        return Err(Error::DegenerateGeometry(
            "surface corners are collinear or coincident".into(),
        ));
    }
    let u_axis = a.normalize();
    let v_axis = (b - u_axis * b.dot(&u_axis)).normalize();
    let extent_u = extent_u.unwrap_or_else(|| a.norm());
    let extent_v = extent_v.unwrap_or_else(|| b.dot(&v_axis));
    PlanarSurface::new(label, c1, u_axis, v_axis, extent_u, extent_v)
}

/// Surface-frame coordinates `(u, v, w)` of `p`; `w` is along the normal.
pub fn project_to_surface(surface: &PlanarSurface, p: &Vec3) -> [f64; 3] {
    let d = p - surface.origin();
    [
        d.dot(&surface.u_axis()),
        d.dot(&surface.v_axis()),
        d.dot(&surface.normal()),
    ]
}

/// Inverse of [`project_to_surface`].
pub fn surface_to_world(surface: &PlanarSurface, uvw: [f64; 3]) -> Vec3 {
    surface.origin()
        + surface.u_axis() * uvw[0]
        + surface.v_axis() * uvw[1]
        + surface.normal() * uvw[2]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::OrientationClass;

    fn v(x: f64, y: f64, z: f64) -> Vec3 {
        Vec3::new(x, y, z)
    }

    #[test]
    fn three_point_plane() {
        let p = fit_plane(&[v(0.0, 0.0, 0.0), v(1.0, 0.0, 0.0), v(0.0, 1.0, 0.0)]).unwrap();
        assert!((p.normal - Vec3::z()).norm() < 1e-12);
        assert!(p.offset.abs() < 1e-12);
    }

    #[test]
    fn flat_cloud_at_height_five() {
        let pts: Vec<Vec3> = (0..100)
            .map(|i| v((i as f64 * 0.37).sin() * 10.0, (i as f64 * 1.3).cos() * 7.0, 5.0))
            .collect();
        let p = fit_plane(&pts).unwrap();
        assert!((p.normal - Vec3::z()).norm() < 1e-12);
        assert!((p.offset - 5.0).abs() < 1e-12);
        for q in &pts {
            assert!(p.signed_distance(q).abs() < 1e-12);
        }
    }

    #[test]
    fn fit_errors() {
        assert!(matches!(
            fit_plane(&[v(0.0, 0.0, 0.0), v(1.0, 0.0, 0.0)]),
            Err(Error::InsufficientData(_))
        ));
        let line: Vec<Vec3> = (0..10).map(|i| v(i as f64, 2.0 * i as f64, 0.0)).collect();
        assert!(matches!(fit_plane(&line), Err(Error::DegenerateGeometry(_))));
        let same = vec![v(1.0, 1.0, 1.0); 5];
        assert!(matches!(fit_plane(&same), Err(Error::DegenerateGeometry(_))));
    }

    #[test]
    fn wall_normal_sign_convention() {
        // Points on the plane y = 3; normal must come out as +y.
        let pts = vec![v(0.0, 3.0, 0.0), v(4.0, 3.0, 0.0), v(0.0, 3.0, 5.0), v(2.0, 3.0, 1.0)];
        let p = fit_plane(&pts).unwrap();
        assert!((p.normal - Vec3::y()).norm() < 1e-12, "{:?}", p.normal);
        assert!((p.offset - 3.0).abs() < 1e-12);
    }

    #[test]
    fn signed_distance_examples() {
        let ground = fit_plane(&[v(0.0, 0.0, 0.0), v(1.0, 0.0, 0.0), v(0.0, 1.0, 0.0)]).unwrap();
        assert!((signed_distance(&ground, &v(0.0, 0.0, 2.0)) - 2.0).abs() < 1e-12);
        assert!(signed_distance(&ground, &v(7.0, -3.0, 0.0)).abs() < 1e-12);
        let raised = fit_plane(&[v(0.0, 0.0, 5.0), v(1.0, 0.0, 5.0), v(0.0, 1.0, 5.0)]).unwrap();
        assert!((signed_distance(&raised, &v(3.0, 4.0, 4.9)) + 0.1).abs() < 1e-12);
    }

    #[test]
    fn horizontal_surface_from_corners() {
        let s = surface_from_corners("lot", v(0.0, 0.0, 0.0), v(10.0, 0.0, 0.0), v(0.0, 4.0, 0.0), None, None)
            .unwrap();
        assert_eq!(s.orientation(), OrientationClass::Horizontal);
        assert!((s.extent_u() - 10.0).abs() < 1e-12);
        assert!((s.extent_v() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn vertical_surface_from_corners() {
        let s = surface_from_corners("wall", v(0.0, 0.0, 0.0), v(0.0, 0.0, 8.0), v(5.0, 0.0, 0.0), None, None)
            .unwrap();
        assert_eq!(s.orientation(), OrientationClass::Vertical);
        assert!((s.normal().abs() - Vec3::y()).norm() < 1e-12);
        assert!((s.extent_u() - 8.0).abs() < 1e-12);
        assert!((s.extent_v() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn yawed_wall_is_vertical() {
        let yaw = 37f64.to_radians();
        let along = v(yaw.cos(), yaw.sin(), 0.0);
        let c1 = v(500_100.0, 4_200_050.0, 12.0);
        let s = surface_from_corners("w", c1, c1 + along * 30.0, c1 + v(0.0, 0.0, 12.0), None, None).unwrap();
        assert_eq!(s.orientation(), OrientationClass::Vertical);
        assert!((s.extent_u() - 30.0).abs() < 1e-9);
    }

    #[test]
    fn collinear_corners_rejected() {
        let r = surface_from_corners("x", v(0.0, 0.0, 0.0), v(1.0, 1.0, 1.0), v(2.0, 2.0, 2.0), None, None);
        assert!(matches!(r, Err(Error::DegenerateGeometry(_))));
    }

    #[test]
    fn projection_examples() {
        let s = surface_from_corners("s", v(1.0, 2.0, 3.0), v(4.0, 6.0, 3.0), v(1.0, 2.0, 9.0), None, None)
            .unwrap();
        assert_eq!(project_to_surface(&s, &s.origin()), [0.0, 0.0, 0.0]);
        let [u, vv, w] = project_to_surface(&s, &(s.origin() + s.u_axis() * 3.0));
        assert!((u - 3.0).abs() < 1e-12 && vv.abs() < 1e-12 && w.abs() < 1e-12);
    }
}
