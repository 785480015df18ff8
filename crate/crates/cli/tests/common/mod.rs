#![allow(dead_code)]

use std::f64::consts::PI;
use std::path::Path;

use nalgebra::DVector;
use rand::Rng;

use physdyn_core::{MotionSequence, RestBody};

/// Smooth synthetic motion: every DOF is an offset plus a sum of sinusoids,
/// so positions, velocities and accelerations are known in closed form.
#[derive(Debug, Clone)]
pub struct SinusoidTracks {
    pub offset: DVector<f64>,
    /// Per DOF, `(amplitude, angular frequency, phase)` terms.
    pub terms: Vec<Vec<(f64, f64, f64)>>,
}

impl SinusoidTracks {
    pub fn random(rng: &mut impl Rng, n_q: usize, translation_amp: f64, angle_amp: f64, max_hz: f64) -> Self {
        let terms = (0..n_q)
            .map(|k| {
                let amp = if k < 3 { translation_amp } else { angle_amp };
                (0..3)
                    .map(|_| {
                        (
                            amp * rng.gen_range(0.2..1.0) / 3.0,
                            2.0 * PI * rng.gen_range(0.2..max_hz),
                            rng.gen_range(0.0..2.0 * PI),
                        )
                    })
                    .collect()
            })
            .collect();
        Self {
            offset: DVector::zeros(n_q),
            terms,
        }
    }

    fn eval(&self, t: f64, order: u32) -> DVector<f64> {
        DVector::from_fn(self.terms.len(), |k, _| {
            let base = if order == 0 { self.offset[k] } else { 0.0 };
            base + self.terms[k]
                .iter()
                .map(|&(a, w, p)| match order {
                    0 => a * (w * t + p).sin(),
                    1 => a * w * (w * t + p).cos(),
                    _ => -a * w * w * (w * t + p).sin(),
                })
                .sum::<f64>()
        })
    }

    pub fn q(&self, t: f64) -> DVector<f64> {
        self.eval(t, 0)
    }

    pub fn qd(&self, t: f64) -> DVector<f64> {
        self.eval(t, 1)
    }

    pub fn qdd(&self, t: f64) -> DVector<f64> {
        self.eval(t, 2)
    }

    pub fn sample(&self, fps: f64, frames: usize) -> MotionSequence {
        MotionSequence::new(fps, (0..frames).map(|k| self.q(k as f64 / fps)).collect()).unwrap()
    }
}

pub fn write_motion(path: &Path, seq: &MotionSequence, body: &RestBody) {
    std::fs::write(path, serde_json::to_string(&seq.to_file(&body.tree)).unwrap()).unwrap();
}

pub fn write_body(path: &Path, body: &RestBody) {
    std::fs::write(path, serde_json::to_string(&body.to_file()).unwrap()).unwrap();
}
