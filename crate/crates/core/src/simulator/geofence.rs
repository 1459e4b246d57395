use crate::model::{DroneConfig, FenceBoundary, GeofenceAction, Switch};

use super::VehicleState;

#[derive(Debug, Clone, PartialEq)]
pub struct GeofenceConfig {
    pub status: Switch,
    pub prediction: Switch,
    pub action: GeofenceAction,
    pub boundary: FenceBoundary,
    /// Look-ahead horizon for predicted breaches, seconds.
    pub t_pred: f64,
}

impl GeofenceConfig {
    pub fn new(cfg: &DroneConfig, boundary: FenceBoundary) -> Self {
        GeofenceConfig {
            status: cfg.geofence_status,
            prediction: cfg.geofence_prediction,
            action: cfg.geofence_action,
            boundary,
            t_pred: 2.0,
        }
    }

    pub fn off(boundary: FenceBoundary) -> Self {
        GeofenceConfig::new(&DroneConfig::default(), boundary)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Breach {
    /// Current position is still inside; the look-ahead point is not.
    pub predicted: bool,
    pub action: GeofenceAction,
}

/// True when `p` lies inside the convex (CCW) polygon and under the ceiling.
pub fn inside(boundary: &FenceBoundary, p: [f64; 3]) -> bool {
    if p[2] > boundary.max_altitude {
        return false;
    }
    let poly = &boundary.polygon;
    (0..poly.len()).all(|i| {
        let a = poly[i];
        let b = poly[(i + 1) % poly.len()];
        (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]) >= 0.0
    })
}

/// Horizontal distance from `p` to the polygon, zero when inside it.
pub fn distance_outside(boundary: &FenceBoundary, p: [f64; 3]) -> f64 {
    let poly = &boundary.polygon;
    let horizontal_inside = inside(
        &FenceBoundary {
            polygon: poly.clone(),
            max_altitude: f64::INFINITY,
        },
        p,
    );
    let vertical = (p[2] - boundary.max_altitude).max(0.0);
    if horizontal_inside {
        return vertical;
    }
    let mut best = f64::INFINITY;
    for i in 0..poly.len() {
        let a = poly[i];
        let b = poly[(i + 1) % poly.len()];
        let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
        let len2 = dx * dx + dy * dy;
        let u = (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0);
        let (cx, cy) = (a[0] + u * dx, a[1] + u * dy);
        best = best.min(((p[0] - cx).powi(2) + (p[1] - cy).powi(2)).sqrt());
    }
    best.hypot(vertical)
}

/// Returns the configured action when the vehicle is outside the fence or, with
/// prediction on, when its velocity would carry it outside within `t_pred`.
pub fn check_geofence(state: &VehicleState, fence: &GeofenceConfig) -> Option<Breach> {
    if !fence.status.is_on() {
        return None;
    }
    if !inside(&fence.boundary, state.position) {
        return Some(Breach {
            predicted: false,
            action: fence.action,
        });
    }
    if fence.prediction.is_on() {
        let p = state.position;
        let v = state.velocity;
        let ahead = [p[0] + v[0] * fence.t_pred, p[1] + v[1] * fence.t_pred, p[2] + v[2] * fence.t_pred];
        if !inside(&fence.boundary, ahead) {
            return Some(Breach {
                predicted: true,
                action: fence.action,
            });
        }
    }
    None
}
