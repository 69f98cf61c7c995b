//! Global-best particle swarm with inertia weight and velocity clamping.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{random_population, Evaluator, Objective};
use crate::seed::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsoParams {
    pub inertia: f64,
    pub cognitive: f64,
    pub social: f64,
    /// Per-coordinate bound on |velocity|.
    pub max_velocity: f64,
}

impl Default for PsoParams {
    fn default() -> Self {
        PsoParams {
            inertia: 0.7,
            cognitive: 2.0,
            social: 2.0,
            max_velocity: 0.5,
        }
    }
}

pub(super) fn run<O: Objective + ?Sized>(
    p: &PsoParams,
    dim: usize,
    np: usize,
    rng: &mut Rng,
    ev: &mut Evaluator<'_, O>,
) {
    let mut pos = random_population(rng, np, dim);
    let mut vel = vec![vec![0.0; dim]; np];
    let fit = ev.evaluate(&mut pos);
    let mut pbest = pos.clone();
    let mut pbest_f = fit;
    let mut g = argmax(&pbest_f);

    while ev.remaining() > 0 {
        let batch = np.min(ev.remaining());
        for i in 0..batch {
            for d in 0..dim {
                let r1: f64 = rng.random();
                let r2: f64 = rng.random();
                let v = p.inertia * vel[i][d]
                    + p.cognitive * r1 * (pbest[i][d] - pos[i][d])
                    + p.social * r2 * (pbest[g][d] - pos[i][d]);
                vel[i][d] = v.clamp(-p.max_velocity, p.max_velocity);
                pos[i][d] += vel[i][d];
            }
        }
        let fit = ev.evaluate(&mut pos[..batch]);
        for (i, f) in fit.into_iter().enumerate() {
            if f >= pbest_f[i] {
                pbest_f[i] = f;
                pbest[i].clone_from(&pos[i]);
            }
        }
        g = argmax(&pbest_f);
    }
}

/// Index of the first maximum.
pub(super) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}
