//! Quasi-static balance proxy: the composite center of mass must project
//! inside the ground support polygon.

use nalgebra::Point3;

use super::model::RobotModel;
use crate::error::Result;

pub fn center_of_mass(model: &RobotModel, segments: &[(Point3<f64>, Point3<f64>)]) -> Point3<f64> {
    let mut total = model.base_mass();
    let mut acc = model.base_com().coords * model.base_mass();
    for (link, (a, b)) in model.links().iter().zip(segments) {
        acc += (a.coords + b.coords) * (0.5 * link.mass);
        total += link.mass;
    }
    if total > 0.0 {
        Point3::from(acc / total)
    } else {
        model.base_com()
    }
}

/// Signed distance from `p` to the boundary of a counter-clockwise convex
/// polygon: positive inside, negative outside.
pub fn support_margin(polygon: &[[f64; 2]], p: [f64; 2]) -> f64 {
    let n = polygon.len();
    let mut margin = f64::INFINITY;
    for i in 0..n {
        let a = polygon[i];
        let b = polygon[(i + 1) % n];
        let ex = b[0] - a[0];
        let ey = b[1] - a[1];
        let len = (ex * ex + ey * ey).sqrt();
        // Inward normal of a CCW edge is the left normal.
        let d = (ex * (p[1] - a[1]) - ey * (p[0] - a[0])) / len;
        margin = margin.min(d);
    }
    margin
}

pub(crate) fn stable_for_segments(model: &RobotModel, segments: &[(Point3<f64>, Point3<f64>)]) -> bool {
    let com = center_of_mass(model, segments);
    support_margin(model.support_polygon(), [com.x, com.y]) >= 0.0
}

/// True when the center of mass projects inside (or on) the support polygon.
pub fn check_stability(model: &RobotModel, q: &[f64]) -> Result<bool> {
    let pose = model.forward_kinematics(q)?;
    Ok(stable_for_segments(model, &pose.segments))
}
