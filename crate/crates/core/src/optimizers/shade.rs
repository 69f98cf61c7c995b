//! Success-history based adaptive DE with linear population size reduction
//! (LSHADE) and its improved variant (iL-SHADE).
//!
//! Both use current-to-pbest/1/bin mutation with an external archive of
//! replaced parents, sample F from a Cauchy and CR from a normal distribution
//! around entries of a success-history memory, and shrink the population
//! linearly in the number of evaluations down to `min_population`.
//!
//! iL-SHADE differs in four places: the last memory slot is pinned at 0.9
//! for both F and CR, memory updates average the new value with the old one,
//! F and CR are capped/floored in the early stages of the run, and the
//! p-best fraction grows linearly from `p_start` to `p_end`.

use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::{Cauchy, Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{random_population, Evaluator, Objective};
use crate::seed::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ShadeVariant {
    Lshade,
    Ilshade,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShadeParams {
    pub variant: ShadeVariant,
    pub memory_size: usize,
    /// Archive capacity as a multiple of the current population size.
    pub archive_rate: f64,
    pub p_start: f64,
    pub p_end: f64,
    pub mf_init: f64,
    pub mcr_init: f64,
    pub min_population: usize,
}

impl ShadeParams {
    pub fn lshade() -> Self {
        ShadeParams {
            variant: ShadeVariant::Lshade,
            memory_size: 6,
            archive_rate: 2.6,
            p_start: 0.11,
            p_end: 0.11,
            mf_init: 0.5,
            mcr_init: 0.5,
            min_population: 4,
        }
    }

    pub fn ilshade() -> Self {
        ShadeParams {
            variant: ShadeVariant::Ilshade,
            memory_size: 6,
            archive_rate: 1.0,
            p_start: 0.1,
            p_end: 0.2,
            mf_init: 0.5,
            mcr_init: 0.8,
            min_population: 4,
        }
    }
}

const SCALE: f64 = 0.1;
const PINNED: f64 = 0.9;

/// Weighted Lehmer mean `sum(w s^2) / sum(w s)`.
fn lehmer(values: &[f64], weights: &[f64]) -> f64 {
    let num: f64 = values.iter().zip(weights).map(|(s, w)| w * s * s).sum();
    let den: f64 = values.iter().zip(weights).map(|(s, w)| w * s).sum();
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

struct Memory {
    f: Vec<f64>,
    /// `None` is the terminal value: CR is then fixed at 0.
    cr: Vec<Option<f64>>,
    next: usize,
    /// Slots that are updated; iL-SHADE pins the last one.
    updatable: usize,
}

impl Memory {
    fn new(p: &ShadeParams) -> Self {
        let h = p.memory_size.max(1);
        let mut f = vec![p.mf_init; h];
        let mut cr = vec![Some(p.mcr_init); h];
        let mut updatable = h;
        if p.variant == ShadeVariant::Ilshade && h > 1 {
            f[h - 1] = PINNED;
            cr[h - 1] = Some(PINNED);
            updatable = h - 1;
        }
        Memory {
            f,
            cr,
            next: 0,
            updatable,
        }
    }

    fn update(&mut self, variant: ShadeVariant, s_f: &[f64], s_cr: &[f64], weights: &[f64]) {
        if s_f.is_empty() {
            return;
        }
        let k = self.next;
        let new_f = lehmer(s_f, weights);
        let max_cr = s_cr.iter().cloned().fold(0.0, f64::max);
        let new_cr = match self.cr[k] {
            None => None,
            Some(_) if max_cr == 0.0 => None,
            Some(old) => {
                let m = lehmer(s_cr, weights);
                Some(match variant {
                    ShadeVariant::Lshade => m,
                    ShadeVariant::Ilshade => (m + old) / 2.0,
                })
            }
        };
        self.f[k] = match variant {
            ShadeVariant::Lshade => new_f,
            ShadeVariant::Ilshade => (new_f + self.f[k]) / 2.0,
        };
        self.cr[k] = new_cr;
        self.next = (k + 1) % self.updatable;
    }
}

fn sample_f(loc: f64, rng: &mut Rng) -> f64 {
    let cauchy = Cauchy::new(loc, SCALE).expect("finite location");
    loop {
        let f = cauchy.sample(rng);
        if f > 0.0 {
            return f.min(1.0);
        }
    }
}

fn sample_cr(loc: Option<f64>, rng: &mut Rng) -> f64 {
    match loc {
        None => 0.0,
        Some(m) => Normal::new(m, SCALE)
            .expect("finite mean")
            .sample(rng)
            .clamp(0.0, 1.0),
    }
}

pub(super) fn run<O: Objective + ?Sized>(
    p: &ShadeParams,
    dim: usize,
    np: usize,
    rng: &mut Rng,
    ev: &mut Evaluator<'_, O>,
) {
    let min_pop = p.min_population.clamp(4, np);
    let mut pop = random_population(rng, np, dim);
    let mut fit = ev.evaluate(&mut pop);
    let mut archive: Vec<Vec<f64>> = Vec::new();
    let mut memory = Memory::new(p);
    let maxfes = ev.maxfes() as f64;

    while ev.remaining() > 0 {
        let n = pop.len();
        let batch = n.min(ev.remaining());
        let progress = ev.used() as f64 / maxfes;
        let p_frac = p.p_start + (p.p_end - p.p_start) * progress;
        let p_count = ((p_frac * n as f64).round() as usize).clamp(2, n);
        let mut ranked: Vec<usize> = (0..n).collect();
        ranked.sort_by(|&a, &b| fit[b].total_cmp(&fit[a]));

        let mut trials = Vec::with_capacity(batch);
        let mut used_params = Vec::with_capacity(batch);
        for i in 0..batch {
            let r = rng.random_range(0..memory.f.len());
            let mut cr = sample_cr(memory.cr[r], rng);
            let mut f = sample_f(memory.f[r], rng);
            if p.variant == ShadeVariant::Ilshade {
                if progress < 0.25 {
                    cr = cr.max(0.5);
                    f = f.min(0.7);
                } else if progress < 0.5 {
                    cr = cr.max(0.25);
                    f = f.min(0.8);
                } else if progress < 0.75 {
                    f = f.min(0.9);
                }
            }
            let pbest = ranked[rng.random_range(0..p_count)];
            let r1 = loop {
                let c = rng.random_range(0..n);
                if c != i {
                    break c;
                }
            };
            let r2 = loop {
                let c = rng.random_range(0..n + archive.len());
                if c != i && c != r1 {
                    break c;
                }
            };
            let x2 = if r2 < n { &pop[r2] } else { &archive[r2 - n] };
            let j_rand = rng.random_range(0..dim);
            let trial: Vec<f64> = (0..dim)
                .map(|j| {
                    if j == j_rand || rng.random::<f64>() < cr {
                        pop[i][j] + f * (pop[pbest][j] - pop[i][j]) + f * (pop[r1][j] - x2[j])
                    } else {
                        pop[i][j]
                    }
                })
                .collect();
            trials.push(trial);
            used_params.push((f, cr));
        }
        let tf = ev.evaluate(&mut trials);

        let (mut s_f, mut s_cr, mut weights) = (Vec::new(), Vec::new(), Vec::new());
        for (i, ((trial, f_trial), (f, cr))) in
            trials.into_iter().zip(tf).zip(used_params).enumerate()
        {
            if f_trial >= fit[i] {
                if f_trial > fit[i] {
                    s_f.push(f);
                    s_cr.push(cr);
                    weights.push(f_trial - fit[i]);
                    archive.push(std::mem::replace(&mut pop[i], trial));
                } else {
                    pop[i] = trial;
                }
                fit[i] = f_trial;
            }
        }
        memory.update(p.variant, &s_f, &s_cr, &weights);

        let next_n = (((min_pop as f64 - np as f64) / maxfes) * ev.used() as f64 + np as f64)
            .round() as usize;
        let next_n = next_n.clamp(min_pop, n);
        if next_n < n {
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| fit[b].total_cmp(&fit[a]));
            order.truncate(next_n);
            order.sort_unstable();
            pop = order.iter().map(|&i| pop[i].clone()).collect();
            fit = order.iter().map(|&i| fit[i]).collect();
        }
        let capacity = (p.archive_rate * pop.len() as f64).round() as usize;
        if archive.len() > capacity {
            archive.shuffle(rng);
            archive.truncate(capacity);
        }
    }
}
