//! Differential evolution (rand/1/bin) and its self-adaptive variant jDE.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{distinct_indices, random_population, Evaluator, Objective};
use crate::seed::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeParams {
    /// Differential weight F.
    pub differential_weight: f64,
    /// Crossover rate CR.
    pub crossover_rate: f64,
}

impl Default for DeParams {
    fn default() -> Self {
        DeParams {
            differential_weight: 0.5,
            crossover_rate: 0.9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JdeParams {
    pub f_init: f64,
    pub cr_init: f64,
    /// Probability of resampling F.
    pub tau1: f64,
    /// Probability of resampling CR.
    pub tau2: f64,
    pub f_lower: f64,
    pub f_upper: f64,
}

impl Default for JdeParams {
    fn default() -> Self {
        JdeParams {
            f_init: 0.5,
            cr_init: 0.9,
            tau1: 0.1,
            tau2: 0.1,
            f_lower: 0.1,
            f_upper: 1.0,
        }
    }
}

fn rand1bin(pop: &[Vec<f64>], i: usize, f: f64, cr: f64, rng: &mut Rng) -> Vec<f64> {
    let dim = pop[i].len();
    let r = distinct_indices(rng, pop.len(), 3, &[i]);
    let j_rand = rng.random_range(0..dim);
    (0..dim)
        .map(|j| {
            if j == j_rand || rng.random::<f64>() < cr {
                pop[r[0]][j] + f * (pop[r[1]][j] - pop[r[2]][j])
            } else {
                pop[i][j]
            }
        })
        .collect()
}

pub(super) fn run_de<O: Objective + ?Sized>(
    p: &DeParams,
    dim: usize,
    np: usize,
    rng: &mut Rng,
    ev: &mut Evaluator<'_, O>,
) {
    let mut pop = random_population(rng, np, dim);
    let mut fit = ev.evaluate(&mut pop);
    while ev.remaining() > 0 {
        let batch = np.min(ev.remaining());
        let mut trials: Vec<Vec<f64>> = (0..batch)
            .map(|i| rand1bin(&pop, i, p.differential_weight, p.crossover_rate, rng))
            .collect();
        let tf = ev.evaluate(&mut trials);
        for (i, (t, f)) in trials.into_iter().zip(tf).enumerate() {
            if f >= fit[i] {
                pop[i] = t;
                fit[i] = f;
            }
        }
    }
}

pub(super) fn run_jde<O: Objective + ?Sized>(
    p: &JdeParams,
    dim: usize,
    np: usize,
    rng: &mut Rng,
    ev: &mut Evaluator<'_, O>,
) {
    let mut pop = random_population(rng, np, dim);
    let mut fit = ev.evaluate(&mut pop);
    let mut fs = vec![p.f_init; np];
    let mut crs = vec![p.cr_init; np];
    while ev.remaining() > 0 {
        let batch = np.min(ev.remaining());
        let mut params = Vec::with_capacity(batch);
        let mut trials = Vec::with_capacity(batch);
        for i in 0..batch {
            let f = if rng.random::<f64>() < p.tau1 {
                p.f_lower + rng.random::<f64>() * (p.f_upper - p.f_lower)
            } else {
                fs[i]
            };
            let cr = if rng.random::<f64>() < p.tau2 {
                rng.random::<f64>()
            } else {
                crs[i]
            };
            trials.push(rand1bin(&pop, i, f, cr, rng));
            params.push((f, cr));
        }
        let tf = ev.evaluate(&mut trials);
        for (i, ((t, f), (fi, cri))) in trials.into_iter().zip(tf).zip(params).enumerate() {
            if f >= fit[i] {
                pop[i] = t;
                fit[i] = f;
                fs[i] = fi;
                crs[i] = cri;
            }
        }
    }
}
