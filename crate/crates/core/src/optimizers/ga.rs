//! Real-coded generational genetic algorithm with one elite.

use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{random_population, Evaluator, Objective};
use crate::seed::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaParams {
    pub tournament_size: usize,
    /// Probability that a pair of parents is recombined (uniform crossover).
    pub crossover_rate: f64,
    /// Standard deviation of the Gaussian mutation.
    pub mutation_sigma: f64,
    /// Per-gene mutation probability; `None` means `1 / D`.
    pub mutation_rate: Option<f64>,
    pub elites: usize,
}

impl Default for GaParams {
    fn default() -> Self {
        GaParams {
            tournament_size: 2,
            crossover_rate: 0.8,
            mutation_sigma: 0.1,
            mutation_rate: None,
            elites: 1,
        }
    }
}

fn tournament(fit: &[f64], size: usize, rng: &mut Rng) -> usize {
    let mut best = rng.random_range(0..fit.len());
    for _ in 1..size {
        let c = rng.random_range(0..fit.len());
        if fit[c] > fit[best] {
            best = c;
        }
    }
    best
}

/// Indices sorted by fitness, best first; ties keep index order.
fn ranking(fit: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..fit.len()).collect();
    order.sort_by(|&a, &b| fit[b].total_cmp(&fit[a]));
    order
}

pub(super) fn run<O: Objective + ?Sized>(
    p: &GaParams,
    dim: usize,
    np: usize,
    rng: &mut Rng,
    ev: &mut Evaluator<'_, O>,
) {
    let elites = p.elites.min(np - 1);
    let pm = p.mutation_rate.unwrap_or(1.0 / dim as f64);
    let noise = Normal::new(0.0, p.mutation_sigma).expect("finite sigma");
    let mut pop = random_population(rng, np, dim);
    let mut fit = ev.evaluate(&mut pop);

    while ev.remaining() > 0 {
        let batch = (np - elites).min(ev.remaining());
        let mut children: Vec<Vec<f64>> = Vec::with_capacity(batch);
        for _ in 0..batch {
            let a = tournament(&fit, p.tournament_size, rng);
            let b = tournament(&fit, p.tournament_size, rng);
            let mut child = pop[a].clone();
            if rng.random::<f64>() < p.crossover_rate {
                for (c, &g) in child.iter_mut().zip(&pop[b]) {
                    if rng.random::<bool>() {
                        *c = g;
                    }
                }
            }
            for c in child.iter_mut() {
                if rng.random::<f64>() < pm {
                    *c += noise.sample(rng);
                }
            }
            children.push(child);
        }
        let cf = ev.evaluate(&mut children);

        // elites, then children, then the best of the remaining parents if
        // the budget cut the last generation short
        let order = ranking(&fit);
        let mut next: Vec<Vec<f64>> = Vec::with_capacity(np);
        let mut next_f: Vec<f64> = Vec::with_capacity(np);
        for &i in &order[..elites] {
            next.push(pop[i].clone());
            next_f.push(fit[i]);
        }
        next.extend(children);
        next_f.extend(cf);
        for &i in &order[elites..] {
            if next.len() == np {
                break;
            }
            next.push(pop[i].clone());
            next_f.push(fit[i]);
        }
        pop = next;
        fit = next_f;
    }
}
