//! Absolute phase to projector coordinate, epipolar completion and linear
//! triangulation.

use std::fmt::Write as _;

use nalgebra::{Matrix3, Matrix3x4, Matrix4, Vector3, Vector4};

use crate::error::{Error, Result};
use crate::formats::{FloatMap, Mask};
use crate::scalar::Real;
use crate::unwrap_temporal::FringeDirection;

/// Smallest admissible line coefficient or homogeneous scale.
pub const GEOMETRY_EPS: f64 = 1e-12;
/// Relative size of the smallest singular value of a valid fundamental matrix.
pub const FUNDAMENTAL_RANK_TOL: f64 = 1e-9;

/// Camera/projector pair with the fringe layout on the projector.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemCalibration {
    camera: Matrix3x4<f64>,
    projector: Matrix3x4<f64>,
    fundamental: Matrix3<f64>,
    direction: FringeDirection,
    period: f64,
    order_offset: i64,
}

fn singular_values(m: nalgebra::DMatrix<f64>) -> Vec<f64> {
    let mut s: Vec<f64> = m.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

fn rank3(p: &Matrix3x4<f64>) -> bool {
    let s = singular_values(nalgebra::DMatrix::from_iterator(3, 4, p.iter().copied()));
    s[0] > 0.0 && s[2] > FUNDAMENTAL_RANK_TOL * s[0]
}

fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

impl SystemCalibration {
    pub fn new(
        camera: Matrix3x4<f64>,
        projector: Matrix3x4<f64>,
        fundamental: Matrix3<f64>,
        direction: FringeDirection,
        period: f64,
        order_offset: i64,
    ) -> Result<Self> {
        let all_finite = camera
            .iter()
            .chain(projector.iter())
            .chain(fundamental.iter());
        if !all_finite.clone().all(|v| v.is_finite()) || !period.is_finite() {
            return Err(Error::NonFinite);
        }
        if period <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "period {period} must be > 0"
            )));
        }
        if !rank3(&camera) {
            return Err(Error::RankDeficient("camera matrix"));
        }
        if !rank3(&projector) {
            return Err(Error::RankDeficient("projector matrix"));
        }
        let s = singular_values(nalgebra::DMatrix::from_iterator(
            3,
            3,
            fundamental.iter().copied(),
        ));
        if !(s[1] > FUNDAMENTAL_RANK_TOL * s[0] && s[2] <= FUNDAMENTAL_RANK_TOL * s[0]) {
            return Err(Error::RankDeficient("fundamental matrix must have rank 2"));
        }
        Ok(SystemCalibration {
            camera,
            projector,
            fundamental,
            direction,
            period,
            order_offset,
        })
    }

    /// Derives the fundamental matrix `[e_p]x P_p P_c^+` from the projections.
    pub fn from_projections(
        camera: Matrix3x4<f64>,
        projector: Matrix3x4<f64>,
        direction: FringeDirection,
        period: f64,
        order_offset: i64,
    ) -> Result<Self> {
        if !rank3(&camera) {
            return Err(Error::RankDeficient("camera matrix"));
        }
        let centre = camera_centre(&camera);
        let e_p = projector * centre;
        let pinv = camera
            .pseudo_inverse(1e-15)
            .map_err(|_| Error::RankDeficient("camera matrix"))?;
        let f = skew(&e_p) * projector * pinv;
        let norm = f.norm();
        if norm == 0.0 {
            return Err(Error::RankDeficient("fundamental matrix must have rank 2"));
        }
        Self::new(camera, projector, f / norm, direction, period, order_offset)
    }

    /// A desk-scale rig: camera `K[I|0]` looking down +Z, projector shifted
    /// along +X and turned back toward the camera axis, vertical fringes.
    pub fn synthetic(width: usize, height: usize, period: f64) -> Result<Self> {
        let (w, h) = (width as f64, height as f64);
        let f = 1.5 * w.max(h);
        let camera = Matrix3::new(
            f,
            0.0,
            (w - 1.0) / 2.0,
            0.0,
            f,
            (h - 1.0) / 2.0,
            0.0,
            0.0,
            1.0,
        ) * Matrix3x4::identity();
        let (pw, ph) = (912.0, 1140.0);
        let fp = 1.5 * pw;
        let kp = Matrix3::new(fp, 0.0, pw / 2.0, 0.0, fp, ph / 2.0, 0.0, 0.0, 1.0);
        let angle = -0.2f64;
        let rot = nalgebra::Rotation3::from_axis_angle(&Vector3::y_axis(), angle).into_inner();
        let centre = Vector3::new(20.0, 0.0, 0.0);
        let t = -rot * centre;
        let mut rt = Matrix3x4::zeros();
        rt.fixed_view_mut::<3, 3>(0, 0).copy_from(&rot);
        rt.set_column(3, &t);
        Self::from_projections(camera, kp * rt, FringeDirection::Vertical, period, 0)
    }

    /// Parses the plain-text layout: 12 camera values (row-major), 12
    /// projector values, 9 fundamental values, the fringe direction word,
    /// the period and the integer order offset. `#` starts a comment.
    pub fn from_text(text: &str) -> Result<Self> {
        let tokens: Vec<&str> = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or(""))
            .flat_map(str::split_whitespace)
            .collect();
        if tokens.len() != 36 {
            return Err(Error::InvalidSpec(format!(
                "calibration needs 36 fields, found {}",
                tokens.len()
            )));
        }
        let real = |i: usize| {
            tokens[i].parse::<f64>().map_err(|_| {
                Error::InvalidSpec(format!("field {}: bad number {:?}", i + 1, tokens[i]))
            })
        };
        let values: Vec<f64> = (0..33).map(real).collect::<Result<_>>()?;
        let camera = Matrix3x4::from_row_slice(&values[0..12]);
        let projector = Matrix3x4::from_row_slice(&values[12..24]);
        let fundamental = Matrix3::from_row_slice(&values[24..33]);
        let direction = match tokens[33] {
            "vertical" => FringeDirection::Vertical,
            "horizontal" => FringeDirection::Horizontal,
            other => {
                return Err(Error::InvalidSpec(format!(
                    "direction must be vertical or horizontal, got {other:?}"
                )))
            }
        };
        let period = real(34)?;
        let order_offset = tokens[35]
            .parse::<i64>()
            .map_err(|_| Error::InvalidSpec(format!("bad order offset {:?}", tokens[35])))?;
        Self::new(
            camera,
            projector,
            fundamental,
            direction,
            period,
            order_offset,
        )
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut rows = |name: &str, cols: usize, it: &mut dyn Iterator<Item = f64>| {
            let _ = writeln!(out, "# {name}");
            let v: Vec<f64> = it.collect();
            for row in v.chunks(cols) {
                let line: Vec<String> = row.iter().map(|x| format!("{x:e}")).collect();
                let _ = writeln!(out, "{}", line.join(" "));
            }
        };
        rows("camera", 4, &mut self.camera.transpose().iter().copied());
        rows(
            "projector",
            4,
            &mut self.projector.transpose().iter().copied(),
        );
        rows(
            "fundamental",
            3,
            &mut self.fundamental.transpose().iter().copied(),
        );
        let dir = match self.direction {
            FringeDirection::Vertical => "vertical",
            FringeDirection::Horizontal => "horizontal",
        };
        let _ = writeln!(out, "{dir}\n{:e}\n{}", self.period, self.order_offset);
        out
    }

    pub fn camera(&self) -> &Matrix3x4<f64> {
        &self.camera
    }
    pub fn projector(&self) -> &Matrix3x4<f64> {
        &self.projector
    }
    pub fn fundamental(&self) -> &Matrix3<f64> {
        &self.fundamental
    }
    pub fn direction(&self) -> FringeDirection {
        self.direction
    }
    pub fn period(&self) -> f64 {
        self.period
    }
    pub fn order_offset(&self) -> i64 {
        self.order_offset
    }

    pub fn with_order_offset(mut self, offset: i64) -> Self {
        self.order_offset = offset;
        self
    }
}

/// Homogeneous camera centre (right null vector).
fn camera_centre(p: &Matrix3x4<f64>) -> Vector4<f64> {
    // Cofactor expansion gives the null vector without a decomposition.
    let minor = |skip: usize| {
        let cols: Vec<usize> = (0..4).filter(|&c| c != skip).collect();
        Matrix3::from_fn(|r, c| p[(r, cols[c])]).determinant()
    };
    Vector4::new(minor(0), -minor(1), minor(2), -minor(3))
}

/// `u_p = (Phi / 2 pi + offset) * period`.
pub fn phase_to_projector_coord(phi: f64, period: f64, offset: i64) -> f64 {
    (phi / std::f64::consts::TAU + offset as f64) * period
}

/// Intersects the epipolar line of camera pixel `(x_c, y_c)` with the
/// projector line fixed by the phase coordinate `u_p`.
pub fn epipolar_complete(
    u_p: f64,
    x_c: f64,
    y_c: f64,
    fundamental: &Matrix3<f64>,
    direction: FringeDirection,
) -> Result<(f64, f64)> {
    let l = fundamental * Vector3::new(x_c, y_c, 1.0);
    let n = l.x.hypot(l.y);
    if !(n > 0.0) {
        return Err(Error::DegenerateGeometry);
    }
    let l = l / n;
    match direction {
        FringeDirection::Vertical => {
            if l.y.abs() < GEOMETRY_EPS {
                return Err(Error::DegenerateGeometry);
            }
            Ok((u_p, -(l.x * u_p + l.z) / l.y))
        }
        FringeDirection::Horizontal => {
            if l.x.abs() < GEOMETRY_EPS {
                return Err(Error::DegenerateGeometry);
            }
            Ok((-(l.y * u_p + l.z) / l.x, u_p))
        }
    }
}

/// Direct linear transform from one camera/projector correspondence.
pub fn triangulate(
    camera_px: (f64, f64),
    projector_px: (f64, f64),
    camera: &Matrix3x4<f64>,
    projector: &Matrix3x4<f64>,
) -> Result<[f64; 3]> {
    let mut a = Matrix4::zeros();
    let rows = [
        camera.row(2) * camera_px.0 - camera.row(0),
        camera.row(2) * camera_px.1 - camera.row(1),
        projector.row(2) * projector_px.0 - projector.row(0),
        projector.row(2) * projector_px.1 - projector.row(1),
    ];
    for (i, row) in rows.iter().enumerate() {
        let n = row.norm();
        if !(n > 0.0) {
            return Err(Error::DegenerateGeometry);
        }
        a.set_row(i, &(row / n));
    }
    let svd = a.svd(false, true);
    let v_t = svd.v_t.ok_or(Error::DegenerateGeometry)?;
    let (imin, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .ok_or(Error::DegenerateGeometry)?;
    let x = v_t.row(imin);
    if x[3].abs() < GEOMETRY_EPS {
        return Err(Error::PointAtInfinity);
    }
    let p = [x[0] / x[3], x[1] / x[3], x[2] / x[3]];
    if p.iter().all(|v| v.is_finite()) {
        Ok(p)
    } else {
        Err(Error::PointAtInfinity)
    }
}

/// Triangulated points with the camera pixel each one came from.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointCloud {
    points: Vec<[f64; 3]>,
    pixels: Vec<(usize, usize)>,
}

impl PointCloud {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, point: [f64; 3], pixel: (usize, usize)) -> Result<()> {
        if !point.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite);
        }
        self.points.push(point);
        self.pixels.push(pixel);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
    pub fn points(&self) -> &[[f64; 3]] {
        &self.points
    }
    /// `(row, col)` per point.
    pub fn pixels(&self) -> &[(usize, usize)] {
        &self.pixels
    }
}

/// Camera pixel `(col, row)` plus absolute phase to a world point.
pub fn reconstruct_point(
    phi: f64,
    col: f64,
    row: f64,
    calib: &SystemCalibration,
) -> Result<[f64; 3]> {
    let u_p = phase_to_projector_coord(phi, calib.period, calib.order_offset);
    let xp = epipolar_complete(u_p, col, row, &calib.fundamental, calib.direction)?;
    triangulate((col, row), xp, &calib.camera, &calib.projector)
}

/// Per valid pixel: projector coordinate, epipolar completion, triangulation.
/// Points that hit a degeneracy are dropped and marked invalid in the depth
/// map, which holds Z (0 where invalid).
pub fn reconstruct<T: Real>(
    phi: &FloatMap<T>,
    calib: &SystemCalibration,
) -> Result<(PointCloud, FloatMap<T>)> {
    let (w, h) = (phi.width(), phi.height());
    let mut cloud = PointCloud::new();
    let mut depth = vec![T::zero(); w * h];
    let mut valid = vec![false; w * h];
    for r in 0..h {
        for c in 0..w {
            let i = r * w + c;
            if !phi.is_valid(i) {
                continue;
            }
            let Ok(p) = reconstruct_point(phi.at(i).as_f64(), c as f64, r as f64, calib) else {
                continue;
            };
            let z = T::lit(p[2]);
            if !z.is_finite() {
                continue;
            }
            cloud.push(p, (r, c))?;
            depth[i] = z;
            valid[i] = true;
        }
    }
    let depth = FloatMap::new(w, h, depth)?.with_validity(Mask::new(w, h, valid)?)?;
    Ok((cloud, depth))
}

/// Renders the absolute phase a calibrated rig would observe for a surface
/// given as world Z per camera pixel. Invalid depth points stay invalid.
pub fn phase_from_depth<T: Real>(
    depth: &FloatMap<T>,
    calib: &SystemCalibration,
) -> Result<FloatMap<T>> {
    let m = calib.camera.fixed_view::<3, 3>(0, 0).into_owned();
    let m_inv = m
        .try_inverse()
        .ok_or(Error::RankDeficient("camera matrix"))?;
    let centre = -m_inv * calib.camera.column(3);
    let mut data = Vec::with_capacity(depth.len());
    for r in 0..depth.height() {
        for c in 0..depth.width() {
            let i = r * depth.width() + c;
            if !depth.is_valid(i) {
                data.push(T::zero());
                continue;
            }
            let d = m_inv * Vector3::new(c as f64, r as f64, 1.0);
            if d.z.abs() < GEOMETRY_EPS {
                return Err(Error::DegenerateGeometry);
            }
            let lambda = (depth.at(i).as_f64() - centre.z) / d.z;
            let x = centre + d * lambda;
            let xp = calib.projector * x.push(1.0);
            if xp.z.abs() < GEOMETRY_EPS {
                return Err(Error::PointAtInfinity);
            }
            let u = match calib.direction {
                FringeDirection::Vertical => xp.x / xp.z,
                FringeDirection::Horizontal => xp.y / xp.z,
            };
            let phi = std::f64::consts::TAU * (u / calib.period - calib.order_offset as f64);
            data.push(T::lit(phi));
        }
    }
    let map = FloatMap::new(depth.width(), depth.height(), data)?;
    match depth.validity() {
        Some(v) => map.with_validity(v.clone()),
        None => Ok(map),
    }
}

/// ASCII PLY with `x y z` vertices printed at binary32 precision.
pub fn export_ply(cloud: &PointCloud) -> Vec<u8> {
    let mut out = format!(
        "ply\nformat ascii 1.0\nelement vertex {}\nproperty float x\nproperty float y\nproperty float z\nend_header\n",
        cloud.len()
    );
    for p in cloud.points() {
        let _ = writeln!(
            out,
            "{:.6} {:.6} {:.6}",
            p[0] as f32, p[1] as f32, p[2] as f32
        );
    }
    out.into_bytes()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn project(p: &Matrix3x4<f64>, x: [f64; 3]) -> (f64, f64) {
        let v = p * Vector4::new(x[0], x[1], x[2], 1.0);
        (v.x / v.z, v.y / v.z)
    }

    #[test]
    fn projector_coordinate_examples() {
        assert!((phase_to_projector_coord(9.0 * PI, 38.0, 0) - 171.0).abs() < 1e-12);
        assert_eq!(phase_to_projector_coord(0.0, 38.0, 0), 0.0);
        assert_eq!(phase_to_projector_coord(0.0, 38.0, 1), 38.0);
    }

    #[test]
    fn epipolar_example() {
        let f = skew(&Vector3::new(-1.0, 0.0, 0.0));
        let (x, y) = epipolar_complete(171.0, 10.0, 20.0, &f, FringeDirection::Vertical).unwrap();
        assert_eq!((x, y), (171.0, 20.0));
        let l = f * Vector3::new(10.0, 20.0, 1.0);
        assert!(Vector3::new(x, y, 1.0).dot(&l).abs() < 1e-9);
    }

    #[test]
    fn epipolar_parallel_to_fringes_is_degenerate() {
        // l = (1, 0, -x): vertical lines.
        let f = skew(&Vector3::new(0.0, 1.0, 0.0));
        assert_eq!(
            epipolar_complete(5.0, 3.0, 4.0, &f, FringeDirection::Vertical),
            Err(Error::DegenerateGeometry)
        );
        assert!(epipolar_complete(5.0, 3.0, 4.0, &f, FringeDirection::Horizontal).is_ok());
    }

    #[test]
    fn triangulation_example() {
        let pc = Matrix3x4::identity();
        let mut pp = Matrix3x4::identity();
        pp[(0, 3)] = -1.0;
        let x = triangulate((0.0, 0.0), (-0.2, 0.0), &pc, &pp).unwrap();
        for (a, b) in x.iter().zip([0.0, 0.0, 5.0]) {
            assert!((a - b).abs() < 1e-12, "{x:?}");
        }
        let y = triangulate((0.0, 0.0), (-0.2, 0.0), &(pc * 3.0), &(pp * -0.5)).unwrap();
        for (a, b) in x.iter().zip(y) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn parallel_rays_meet_at_infinity() {
        let pc = Matrix3x4::identity();
        let mut pp = Matrix3x4::identity();
        pp[(0, 3)] = -1.0;
        assert_eq!(
            triangulate((0.1, 0.0), (0.1, 0.0), &pc, &pp),
            Err(Error::PointAtInfinity)
        );
    }

    #[test]
    fn synthetic_rig_round_trip() {
        let calib = SystemCalibration::synthetic(64, 48, 38.0).unwrap();
        for &(x, y, z) in &[(0.0, 0.0, 100.0), (3.0, -2.0, 90.0), (-5.0, 4.0, 120.0)] {
            let c = project(calib.camera(), [x, y, z]);
            let p = project(calib.projector(), [x, y, z]);
            let l = calib.fundamental() * Vector3::new(c.0, c.1, 1.0);
            let l = l / l.x.hypot(l.y);
            assert!(Vector3::new(p.0, p.1, 1.0).dot(&l).abs() < 1e-9);
            let phi = 2.0 * PI * p.0 / 38.0;
            let q = reconstruct_point(phi, c.0, c.1, &calib).unwrap();
            for (a, b) in q.iter().zip([x, y, z]) {
                assert!((a - b).abs() < 1e-6, "{q:?}");
            }
        }
    }

    #[test]
    fn rank_checks() {
        let calib = SystemCalibration::synthetic(16, 16, 38.0).unwrap();
        let mut bad = *calib.camera();
        bad.set_row(2, &bad.row(0).clone_owned());
        assert!(matches!(
            SystemCalibration::new(
                bad,
                *calib.projector(),
                *calib.fundamental(),
                FringeDirection::Vertical,
                38.0,
                0
            ),
            Err(Error::RankDeficient(_))
        ));
        assert!(matches!(
            SystemCalibration::new(
                *calib.camera(),
                *calib.projector(),
                Matrix3::identity(),
                FringeDirection::Vertical,
                38.0,
                0
            ),
            Err(Error::RankDeficient(_))
        ));
    }

    #[test]
    fn text_round_trip() {
        let calib = SystemCalibration::synthetic(32, 24, 38.0)
            .unwrap()
            .with_order_offset(-3);
        let back = SystemCalibration::from_text(&calib.to_text()).unwrap();
        assert_eq!(back, calib);
        assert!(SystemCalibration::from_text("1 2 3").is_err());
        let bad_dir = calib.to_text().replace("vertical", "diagonal");
        assert!(SystemCalibration::from_text(&bad_dir).is_err());
    }

    #[test]
    fn plane_and_step_reconstruction() {
        let calib = SystemCalibration::synthetic(40, 30, 38.0).unwrap();
        let depth = FloatMap::from_fn(40, 30, |_, c| if c < 20 { 100.0f64 } else { 95.0 });
        let phi = phase_from_depth(&depth, &calib).unwrap();
        let (cloud, z) = reconstruct(&phi, &calib).unwrap();
        assert_eq!(cloud.len(), 1200);
        for i in 0..1200 {
            assert!((z.at(i) - depth.at(i)).abs() < 1e-6);
        }
        assert!(((z.get(5, 19) - z.get(5, 20)) - 5.0).abs() < 1e-6);
    }

    #[test]
    fn offset_matches_added_turn() {
        let calib = SystemCalibration::synthetic(8, 8, 38.0).unwrap();
        let a = reconstruct_point(1.0 + 2.0 * PI, 3.0, 4.0, &calib).unwrap();
        let b = reconstruct_point(1.0, 3.0, 4.0, &calib.clone().with_order_offset(1)).unwrap();
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn empty_phase_gives_empty_cloud() {
        let calib = SystemCalibration::synthetic(4, 4, 38.0).unwrap();
        let phi = FloatMap::filled(4, 4, 0.0f64)
            .with_validity(Mask::filled(4, 4, false))
            .unwrap();
        let (cloud, depth) = reconstruct(&phi, &calib).unwrap();
        assert!(cloud.is_empty());
        assert!(depth.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn ply_layout() {
        let mut cloud = PointCloud::new();
        cloud.push([1.0, 2.0, 3.0], (0, 0)).unwrap();
        let text = String::from_utf8(export_ply(&cloud)).unwrap();
        assert!(text.contains("element vertex 1\n"));
        assert!(text.ends_with("end_header\n1.000000 2.000000 3.000000\n"));
        let empty = String::from_utf8(export_ply(&PointCloud::new())).unwrap();
        assert!(empty.contains("element vertex 0\n"));
        assert!(cloud.push([f64::NAN, 0.0, 0.0], (0, 1)).is_err());
    }
}
