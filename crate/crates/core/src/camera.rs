//! Pinhole camera model: unprojecting depth pixels into a 3D point cloud.
//!
//! For relative depth maps the cloud is only defined up to an unknown
//! affine transform of depth; synthetic scenes carry true depth, so
//! unprojection is exact there.

use crate::error::{Error, Result};
use crate::raster::{DepthMap, Mask};

/// Pinhole intrinsics: focal lengths and principal point, in pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64) -> Result<Self> {
        if !(fx > 0.0 && fy > 0.0) {
            return Err(Error::InvalidInput(format!(
                "focal lengths must be positive, got fx={} fy={}",
                fx, fy
            )));
        }
        Ok(Self { fx, fy, cx, cy })
    }
}

pub type Point3 = [f64; 3];

/// Back-projects every in-region pixel with depth `z > 0` to
/// `X = (u - cx)·z/fx, Y = (v - cy)·z/fy, Z = z`. Zero-depth pixels are
/// skipped.
pub fn unproject(d: &DepthMap, k: &CameraIntrinsics, region: &Mask) -> Result<Vec<Point3>> {
    if region.width() != d.width() || region.height() != d.height() {
        return Err(Error::dims(
            "unproject region",
            (d.width(), d.height()),
            (region.width(), region.height()),
        ));
    }
    let mut cloud = Vec::new();
    for v in 0..d.height() {
        for u in 0..d.width() {
            if !region.get(u, v) {
                continue;
            }
            let z = d.get(u, v);
            if z == 0.0 {
                continue;
            }
            cloud.push([
                (u as f64 - k.cx) * z / k.fx,
                (v as f64 - k.cy) * z / k.fy,
                z,
            ]);
        }
    }
    Ok(cloud)
}

/// Forward pinhole map: `u = X·fx/Z + cx, v = Y·fy/Z + cy`.
pub fn project(p: &Point3, k: &CameraIntrinsics) -> (f64, f64) {
    (p[0] * k.fx / p[2] + k.cx, p[1] * k.fy / p[2] + k.cy)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k() -> CameraIntrinsics {
        CameraIntrinsics::new(50.0, 40.0, 4.0, 3.0).unwrap()
    }

    #[test]
    fn principal_point_goes_to_axis() {
        let d = DepthMap::from_fn(8, 8, |u, v| if u == 4 && v == 3 { 1.0 } else { 0.0 }).unwrap();
        let cloud = unproject(&d, &k(), &Mask::full(8, 8)).unwrap();
        assert_eq!(cloud, vec![[0.0, 0.0, 1.0]]);
    }

    #[test]
    fn unit_angle_column() {
        // depth 2.0 at pixel (cx + fx, cy) with fx = fy = 1 → (2, 0, 2)
        let k = CameraIntrinsics::new(1.0, 1.0, 2.0, 3.0).unwrap();
        let d = DepthMap::from_fn(8, 8, |u, v| if u == 3 && v == 3 { 2.0 } else { 0.0 }).unwrap();
        let cloud = unproject(&d, &k, &Mask::full(8, 8)).unwrap();
        assert_eq!(cloud, vec![[2.0, 0.0, 2.0]]);
    }

    #[test]
    fn zero_depth_region_is_empty_cloud() {
        let d = DepthMap::constant(8, 8, 0.0).unwrap();
        assert!(unproject(&d, &k(), &Mask::full(8, 8)).unwrap().is_empty());
    }

    #[test]
    fn project_inverts_unproject() {
        let d = DepthMap::from_fn(8, 8, |u, v| 0.5 + (u as f64) * 0.1 + (v as f64) * 0.07).unwrap();
        let cam = k();
        let cloud = unproject(&d, &cam, &Mask::full(8, 8)).unwrap();
        assert_eq!(cloud.len(), 64);
        let mut i = 0;
        for v in 0..8u32 {
            for u in 0..8u32 {
                let (pu, pv) = project(&cloud[i], &cam);
                assert!((pu - u as f64).abs() < 1e-9);
                assert!((pv - v as f64).abs() < 1e-9);
                i += 1;
            }
        }
    }

    #[test]
    fn intrinsics_require_positive_focals() {
        assert!(CameraIntrinsics::new(0.0, 1.0, 0.0, 0.0).is_err());
        assert!(CameraIntrinsics::new(1.0, -2.0, 0.0, 0.0).is_err());
    }
}
