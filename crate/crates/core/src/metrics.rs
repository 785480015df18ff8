//! Physical-plausibility metrics of a predicted motion: joint acceleration
//! and velocity errors against ground truth, foot sliding, ground
//! penetration and base-of-support stability.

use std::collections::BTreeSet;

use nalgebra::{Vector2, Vector3};
use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::Model;
use crate::error::{Error, Result};
use crate::kinematics::{forward_kinematics, MotionSequence};

/// A vertex lower than this (m) counts as touching the ground.
pub const CONTACT_HEIGHT: f64 = 0.03;

const MM: f64 = 1000.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Metric {
    Accl,
    Vel,
    Fs,
    Gp,
    Bos,
}

impl Metric {
    pub const ALL: [Metric; 5] = [Metric::Accl, Metric::Vel, Metric::Fs, Metric::Gp, Metric::Bos];

    pub fn needs_ground_truth(&self) -> bool {
        matches!(self, Metric::Accl | Metric::Vel)
    }

    pub fn parse(name: &str) -> Result<Metric> {
        match name.to_ascii_lowercase().as_str() {
            "accl" => Ok(Metric::Accl),
            "vel" => Ok(Metric::Vel),
            "fs" => Ok(Metric::Fs),
            "gp" => Ok(Metric::Gp),
            "bos" => Ok(Metric::Bos),
            other => Err(Error::UnknownName {
                kind: "metric",
                name: other.to_string(),
                available: "accl, vel, fs, gp, bos".into(),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricUnits {
    pub accl: &'static str,
    pub vel: &'static str,
    pub fs: &'static str,
    pub gp: &'static str,
    pub bos: &'static str,
}

pub const METRIC_UNITS: MetricUnits = MetricUnits {
    accl: "mm/frame^2",
    vel: "mm/frame",
    fs: "mm",
    gp: "mm",
    bos: "percent of frames",
};

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct PerFrame {
    /// Interior frames 1..T−1.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub accl: Option<Vec<f64>>,
    /// Frame pairs (t, t+1).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vel: Option<Vec<f64>>,
    /// Frame pairs (t, t+1); zero when no vertex stays in contact.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fs: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gp: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bos: Option<Vec<bool>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricReport {
    pub units: MetricUnits,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub accl: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vel: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fs: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gp: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bos: Option<f64>,
    pub per_frame: PerFrame,
}

struct FrameGeometry {
    joints: Vec<Vector3<f64>>,
    vertices: Vec<Vector3<f64>>,
    com: Vector3<f64>,
}

fn frame_geometry(model: &Model, seq: &MotionSequence) -> Result<Vec<FrameGeometry>> {
    seq.check_for(&model.body.tree)?;
    let total = model.total_mass();
    seq.frames
        .par_iter()
        .map(|q| {
            let pose = forward_kinematics(q, &model.body)?;
            let com = pose
                .coms(&model.props)
                .iter()
                .zip(&model.props)
                .map(|(c, p)| c * p.mass)
                .sum::<Vector3<f64>>()
                / total;
            Ok(FrameGeometry {
                joints: pose.joints.clone(),
                vertices: pose.vertices(&model.body).into_iter().flatten().collect(),
                com,
            })
        })
        .collect()
}

fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        0.0
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

/// Convex hull (counter-clockwise, no collinear points) by monotone chain.
pub fn convex_hull(points: &[Vector2<f64>]) -> Vec<Vector2<f64>> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: &Vector2<f64>, a: &Vector2<f64>, b: &Vector2<f64>| (a - o).perp(&(b - o));
    let mut hull: Vec<Vector2<f64>> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Vector2<f64>>> =
            if pass == 0 { Box::new(pts.iter()) } else { Box::new(pts.iter().rev()) };
        for p in iter {
            while hull.len() >= start + 2 && cross(&hull[hull.len() - 2], &hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(*p);
        }
        hull.pop();
    }
    hull
}

/// True if `p` lies inside or on a counter-clockwise convex polygon with at
/// least three vertices.
pub fn inside_convex(hull: &[Vector2<f64>], p: &Vector2<f64>) -> bool {
    if hull.len() < 3 {
        return false;
    }
    (0..hull.len()).all(|i| {
        let a = hull[i];
        let b = hull[(i + 1) % hull.len()];
        (b - a).perp(&(p - a)) >= -1e-12
    })
}

/// Computes the requested metrics. ACCL and VEL need a ground-truth motion of
/// the same length.
pub fn plausibility_metrics(
    model: &Model,
    pred: &MotionSequence,
    gt: Option<&MotionSequence>,
    requested: &BTreeSet<Metric>,
) -> Result<MetricReport> {
    let pred_geo = frame_geometry(model, pred)?;
    let t_len = pred_geo.len();
    let mut report = MetricReport {
        units: METRIC_UNITS,
        accl: None,
        vel: None,
        fs: None,
        gp: None,
        bos: None,
        per_frame: PerFrame::default(),
    };

    let wants_gt = requested.iter().any(Metric::needs_ground_truth);
    if wants_gt {
        let gt = gt.ok_or_else(|| {
            Error::invalid(None, "gt", "ACCL and VEL need a ground-truth motion")
        })?;
        if gt.len() != t_len {
            return Err(Error::Dimension {
                what: "ground-truth frames",
                expected: t_len,
                got: gt.len(),
            });
        }
        let gt_geo = frame_geometry(model, gt)?;
        if requested.contains(&Metric::Accl) {
            let mut per_frame = Vec::new();
            let mut all = Vec::new();
            for t in 1..t_len.saturating_sub(1) {
                let errs: Vec<f64> = (0..pred_geo[t].joints.len())
                    .map(|j| {
                        let acc = |g: &[FrameGeometry]| g[t + 1].joints[j] - g[t].joints[j] * 2.0 + g[t - 1].joints[j];
                        (acc(&pred_geo) - acc(&gt_geo)).norm() * MM
                    })
                    .collect();
                per_frame.push(mean(&errs));
                all.extend(errs);
            }
            report.accl = Some(mean(&all));
            report.per_frame.accl = Some(per_frame);
        }
        if requested.contains(&Metric::Vel) {
            let mut per_frame = Vec::new();
            let mut all = Vec::new();
            for t in 0..t_len.saturating_sub(1) {
                let errs: Vec<f64> = (0..pred_geo[t].joints.len())
                    .map(|j| {
                        let speed = |g: &[FrameGeometry]| (g[t + 1].joints[j] - g[t].joints[j]).norm();
                        (speed(&pred_geo) - speed(&gt_geo)).abs() * MM
                    })
                    .collect();
                per_frame.push(mean(&errs));
                all.extend(errs);
            }
            report.vel = Some(mean(&all));
            report.per_frame.vel = Some(per_frame);
        }
    }

    if requested.contains(&Metric::Fs) {
        let mut per_frame = Vec::new();
        let mut all = Vec::new();
        for t in 0..t_len.saturating_sub(1) {
            let slides: Vec<f64> = pred_geo[t]
                .vertices
                .iter()
                .zip(&pred_geo[t + 1].vertices)
                .filter(|(a, b)| a.z < CONTACT_HEIGHT && b.z < CONTACT_HEIGHT)
                .map(|(a, b)| (b.xy() - a.xy()).norm() * MM)
                .collect();
            per_frame.push(mean(&slides));
            all.extend(slides);
        }
        report.fs = Some(mean(&all));
        report.per_frame.fs = Some(per_frame);
    }

    if requested.contains(&Metric::Gp) {
        let mut per_frame = Vec::new();
        let mut all = Vec::new();
        for geo in &pred_geo {
            let depths: Vec<f64> = geo.vertices.iter().filter(|v| v.z < 0.0).map(|v| -v.z * MM).collect();
            per_frame.push(mean(&depths));
            all.extend(depths);
        }
        report.gp = Some(mean(&all));
        report.per_frame.gp = Some(per_frame);
    }

    if requested.contains(&Metric::Bos) {
        let supported: Vec<bool> = pred_geo
            .iter()
            .map(|geo| {
                let touching: Vec<Vector2<f64>> =
                    geo.vertices.iter().filter(|v| v.z < CONTACT_HEIGHT).map(|v| v.xy()).collect();
                inside_convex(&convex_hull(&touching), &geo.com.xy())
            })
            .collect();
        let count = supported.iter().filter(|&&s| s).count();
        report.bos = Some(if t_len == 0 { 0.0 } else { 100.0 * count as f64 / t_len as f64 });
        report.per_frame.bos = Some(supported);
    }

    Ok(report)
}
