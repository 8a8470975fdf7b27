//! Genetic-algorithm hyperparameter search over the reservoir settings.

use rand::seq::IndexedRandom as _;
use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::data::IstsDataset;
use crate::error::{invalid, Result};
use crate::exec::Execution;
use crate::model::{self, ModelConfig, Task, TrainRange};
use crate::rng::{streams, SeedTree};

/// Continuous gene bounds. An open lower end is clipped to
/// `low + OPEN_MARGIN * (high - low)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub low: f64,
    pub high: f64,
    #[serde(default)]
    pub low_open: bool,
}

pub const OPEN_MARGIN: f64 = 1e-3;

impl Interval {
    pub const fn closed(low: f64, high: f64) -> Self {
        Self { low, high, low_open: false }
    }

    pub const fn left_open(low: f64, high: f64) -> Self {
        Self { low, high, low_open: true }
    }

    pub fn width(&self) -> f64 {
        self.high - self.low
    }

    /// Smallest admissible value.
    pub fn floor(&self) -> f64 {
        if self.low_open {
            self.low + OPEN_MARGIN * self.width()
        } else {
            self.low
        }
    }

    pub fn clip(&self, v: f64) -> f64 {
        v.clamp(self.floor(), self.high)
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.floor() && v <= self.high
    }

    fn within(&self, outer: &Interval) -> bool {
        self.low <= self.high && self.floor() >= outer.floor() && self.high <= outer.high
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchSpace {
    pub input_scale: Interval,
    pub sparsity: Interval,
    pub spectral_radius: Interval,
    pub leaky_rate: Interval,
    pub fusion_rate: Interval,
    pub long_skip: Vec<usize>,
    pub ridge: Vec<f64>,
}

impl Default for SearchSpace {
    fn default() -> Self {
        Self {
            input_scale: Interval::left_open(0.0, 1.0),
            sparsity: Interval::left_open(0.0, 1.0),
            spectral_radius: Interval::left_open(0.0, 1.0),
            leaky_rate: Interval::closed(0.0, 1.0),
            fusion_rate: Interval::closed(0.0, 1.0),
            long_skip: vec![2, 4, 6, 8, 10, 12],
            ridge: vec![1e-4, 1e-2, 1.0],
        }
    }
}

impl SearchSpace {
    fn intervals(&self) -> [Interval; 5] {
        [self.input_scale, self.sparsity, self.spectral_radius, self.leaky_rate, self.fusion_rate]
    }

    /// Overrides must stay inside the parameters' type bounds.
    pub fn validate(&self) -> Result<()> {
        let types = SearchSpace::default().intervals();
        let names = ["input_scale", "sparsity", "spectral_radius", "leaky_rate", "fusion_rate"];
        for ((iv, ty), name) in self.intervals().iter().zip(&types).zip(names) {
            if !iv.within(ty) {
                return Err(invalid(format!("{name} range [{}, {}] outside [{}, {}]", iv.low, iv.high, ty.low, ty.high)));
            }
        }
        if self.long_skip.is_empty() || self.long_skip.contains(&0) {
            return Err(invalid("long_skip choices must be non-empty and >= 1"));
        }
        if self.ridge.is_empty() || self.ridge.iter().any(|l| !(*l >= 0.0 && l.is_finite())) {
            return Err(invalid("ridge choices must be non-empty and >= 0"));
        }
        Ok(())
    }

    pub fn contains(&self, c: &Candidate) -> bool {
        self.intervals().iter().zip(c.continuous()).all(|(iv, v)| iv.contains(v))
            && self.long_skip.contains(&c.long_skip)
            && self.ridge.contains(&c.ridge)
    }
}

/// One point of the search space.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub input_scale: f64,
    pub sparsity: f64,
    pub spectral_radius: f64,
    pub leaky_rate: f64,
    pub fusion_rate: f64,
    pub long_skip: usize,
    pub ridge: f64,
}

impl Candidate {
    pub fn continuous(&self) -> [f64; 5] {
        [self.input_scale, self.sparsity, self.spectral_radius, self.leaky_rate, self.fusion_rate]
    }

    fn from_parts(c: [f64; 5], long_skip: usize, ridge: f64) -> Self {
        Self {
            input_scale: c[0],
            sparsity: c[1],
            spectral_radius: c[2],
            leaky_rate: c[3],
            fusion_rate: c[4],
            long_skip,
            ridge,
        }
    }

    /// `base` with this candidate's reservoir settings and ridge.
    pub fn apply(&self, base: &ModelConfig) -> ModelConfig {
        let mut c = base.clone();
        c.reservoir.input_scale = self.input_scale;
        c.reservoir.sparsity = self.sparsity;
        c.reservoir.spectral_radius = self.spectral_radius;
        c.reservoir.leaky_rate = self.leaky_rate;
        c.reservoir.fusion_rate = self.fusion_rate;
        c.reservoir.long_skip = self.long_skip;
        c.ridge = self.ridge;
        c
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GaConfig {
    pub population: usize,
    pub generations: usize,
    /// Probability that a child is a crossover of two parents rather than a
    /// copy of the first.
    pub crossover_rate: f64,
    /// Per-gene mutation probability.
    pub mutation_rate: f64,
    /// Gaussian mutation std as a fraction of each continuous range.
    pub mutation_scale: f64,
    pub elitism: usize,
    pub tournament: usize,
    pub seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population: 20,
            generations: 30,
            crossover_rate: 0.9,
            mutation_rate: 0.2,
            mutation_scale: 0.1,
            elitism: 2,
            tournament: 3,
            seed: 0,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population < 2 {
            return Err(invalid("population must be >= 2"));
        }
        if self.generations == 0 {
            return Err(invalid("generations must be >= 1"));
        }
        for (name, r) in [("crossover_rate", self.crossover_rate), ("mutation_rate", self.mutation_rate)] {
            if !(0.0..=1.0).contains(&r) {
                return Err(invalid(format!("{name} must lie in [0, 1]")));
            }
        }
        if !(self.mutation_scale >= 0.0 && self.mutation_scale.is_finite()) {
            return Err(invalid("mutation_scale must be >= 0"));
        }
        if self.elitism > self.population {
            return Err(invalid("elitism cannot exceed the population"));
        }
        if self.tournament == 0 {
            return Err(invalid("tournament size must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: usize,
    /// Best fitness found so far.
    pub best: f64,
    /// Mean fitness of this generation's finite evaluations.
    pub mean: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub best: Candidate,
    pub best_fitness: f64,
    pub trace: Vec<GenerationStats>,
}

impl SearchResult {
    pub fn write_trace_csv(&self, w: impl std::io::Write) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["generation", "best", "mean"]).map_err(csv_err)?;
        for g in &self.trace {
            out.write_record([g.generation.to_string(), g.best.to_string(), g.mean.to_string()])
                .map_err(csv_err)?;
        }
        out.flush()?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> crate::Error {
    crate::Error::Csv { line: 0, message: e.to_string() }
}

/// Minimises `objective` over `space`. Failing candidates get infinite
/// fitness and the search continues. Evaluations within a generation run
/// under `exec`; selection and variation are sequential, so the result
/// depends only on the seed.
pub fn search<F>(space: &SearchSpace, ga: &GaConfig, objective: F, exec: Execution) -> Result<SearchResult>
where
    F: Fn(&Candidate) -> Result<f64> + Sync,
{
    space.validate()?;
    ga.validate()?;
    let mut rng = SeedTree::new(ga.seed).child(streams::SEARCH).rng();
    let bounds = space.intervals();

    let evaluate = |pop: &[Candidate]| -> Vec<f64> {
        exec.map(pop, |c| match objective(c) {
            Ok(f) if f.is_finite() => f,
            Ok(f) => {
                log::warn!("candidate {c:?} gave non-finite fitness {f}");
                f64::INFINITY
            }
            Err(e) => {
                log::warn!("candidate {c:?} failed: {e}");
                f64::INFINITY
            }
        })
    };

    let mut pop: Vec<Candidate> = (0..ga.population)
        .map(|_| {
            let c = bounds.map(|iv| rng.random_range(iv.floor()..=iv.high));
            let k = *space.long_skip.choose(&mut rng).expect("validated non-empty");
            let l = *space.ridge.choose(&mut rng).expect("validated non-empty");
            Candidate::from_parts(c, k, l)
        })
        .collect();
    let mut fit = evaluate(&pop);
    let mut trace = Vec::with_capacity(ga.generations);
    let (mut best, mut best_fit) = best_of(&pop, &fit);
    trace.push(stats(0, best_fit, &fit));

    for generation in 1..ga.generations {
        let mut order: Vec<usize> = (0..pop.len()).collect();
        order.sort_by(|&a, &b| fit[a].total_cmp(&fit[b]));
        let mut next: Vec<Candidate> = order[..ga.elitism].iter().map(|&i| pop[i]).collect();
        let mut next_fit: Vec<f64> = order[..ga.elitism].iter().map(|&i| fit[i]).collect();

        let mut children = Vec::with_capacity(ga.population - ga.elitism);
        while children.len() < ga.population - ga.elitism {
            let a = pop[tournament(&fit, ga.tournament, &mut rng)];
            let b = pop[tournament(&fit, ga.tournament, &mut rng)];
            let mut child = if rng.random::<f64>() < ga.crossover_rate { crossover(&a, &b, &mut rng) } else { a };
            mutate(&mut child, space, ga, &mut rng);
            children.push(child);
        }
        next_fit.extend(evaluate(&children));
        next.extend(children);
        pop = next;
        fit = next_fit;

        let (gen_best, gen_fit) = best_of(&pop, &fit);
        if gen_fit < best_fit {
            best = gen_best;
            best_fit = gen_fit;
        }
        trace.push(stats(generation, best_fit, &fit));
    }
    Ok(SearchResult { best, best_fitness: best_fit, trace })
}

fn best_of(pop: &[Candidate], fit: &[f64]) -> (Candidate, f64) {
    let i = (0..pop.len()).min_by(|&a, &b| fit[a].total_cmp(&fit[b])).expect("population >= 2");
    (pop[i], fit[i])
}

fn stats(generation: usize, best: f64, fit: &[f64]) -> GenerationStats {
    let finite: Vec<f64> = fit.iter().copied().filter(|f| f.is_finite()).collect();
    let mean = if finite.is_empty() { f64::INFINITY } else { finite.iter().sum::<f64>() / finite.len() as f64 };
    GenerationStats { generation, best, mean }
}

fn tournament(fit: &[f64], size: usize, rng: &mut impl rand::Rng) -> usize {
    (0..size)
        .map(|_| rng.random_range(0..fit.len()))
        .min_by(|&a, &b| fit[a].total_cmp(&fit[b]))
        .expect("tournament size >= 1")
}

fn crossover(a: &Candidate, b: &Candidate, rng: &mut impl rand::Rng) -> Candidate {
    let (ca, cb) = (a.continuous(), b.continuous());
    let c = std::array::from_fn(|i| if rng.random::<bool>() { ca[i] } else { cb[i] });
    let k = if rng.random::<bool>() { a.long_skip } else { b.long_skip };
    let l = if rng.random::<bool>() { a.ridge } else { b.ridge };
    Candidate::from_parts(c, k, l)
}

fn mutate(c: &mut Candidate, space: &SearchSpace, ga: &GaConfig, rng: &mut impl rand::Rng) {
    let mut genes = c.continuous();
    for (g, iv) in genes.iter_mut().zip(space.intervals()) {
        if rng.random::<f64>() < ga.mutation_rate {
            let sigma = ga.mutation_scale * iv.width();
            if sigma > 0.0 {
                let noise = Normal::new(0.0, sigma).expect("finite positive sigma");
                *g = iv.clip(*g + noise.sample(rng));
            }
        }
    }
    let mut k = c.long_skip;
    if rng.random::<f64>() < ga.mutation_rate {
        k = *space.long_skip.choose(rng).expect("validated non-empty");
    }
    let mut l = c.ridge;
    if rng.random::<f64>() < ga.mutation_rate {
        l = *space.ridge.choose(rng).expect("validated non-empty");
    }
    *c = Candidate::from_parts(genes, k, l);
}

/// Fraction of the training range held out for validation.
pub const VALIDATION_FRACTION: f64 = 0.2;

/// Fitness for `task` on `dataset`: train on the first 80% of the samples up
/// to `train_end`, score the remaining 20%. MSE is minimised as is; AUC is
/// negated.
pub fn validation_fitness(
    base: &ModelConfig,
    candidate: &Candidate,
    task: &Task,
    dataset: &IstsDataset,
    train_end: f64,
    seed: u64,
) -> Result<f64> {
    let times: Vec<f64> =
        model::samples(task, dataset)?.into_iter().map(|s| s.time).filter(|t| *t <= train_end).collect();
    if times.len() < 10 {
        return Err(invalid("too few training samples for a validation split"));
    }
    let cut = times[((1.0 - VALIDATION_FRACTION) * times.len() as f64) as usize - 1];
    let cfg = candidate.apply(base);
    let (m, _) = model::train(&cfg, task, dataset, TrainRange::Until(cut), seed, Execution::Sequential)?;
    let (_, score) = m.evaluate_where(dataset, |t| t > cut && t <= train_end, Execution::Sequential)?;
    Ok(match task.metric_name() {
        "auc_roc" => -score.value,
        _ => score.value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn target() -> Candidate {
        Candidate {
            input_scale: 0.3,
            sparsity: 0.6,
            spectral_radius: 0.8,
            leaky_rate: 0.25,
            fusion_rate: 0.7,
            long_skip: 6,
            ridge: 1e-2,
        }
    }

    fn distance(c: &Candidate) -> Result<f64> {
        let t = target();
        let d: f64 = c.continuous().iter().zip(t.continuous()).map(|(a, b)| (a - b).powi(2)).sum();
        let k = (c.long_skip as f64 - t.long_skip as f64).abs() / 10.0;
        let l = (c.ridge.log10() - t.ridge.log10()).abs() / 4.0;
        Ok(d + k + l)
    }

    #[test]
    fn converges_on_a_convex_objective() {
        let r = search(&SearchSpace::default(), &GaConfig { seed: 11, ..Default::default() }, distance, Execution::Parallel).unwrap();
        for (got, want) in r.best.continuous().iter().zip(target().continuous()) {
            assert!((got - want).abs() < 0.05, "{:?}", r.best);
        }
        assert_eq!((r.best.long_skip, r.best.ridge), (6, 1e-2));
        assert_eq!(r.trace.len(), 30);
    }

    #[test]
    fn best_so_far_is_monotone_and_candidates_in_bounds() {
        let space = SearchSpace::default();
        let seen = std::sync::Mutex::new(Vec::new());
        let r = search(
            &space,
            &GaConfig { generations: 15, seed: 2, ..Default::default() },
            |c| {
                seen.lock().unwrap().push(*c);
                distance(c)
            },
            Execution::Sequential,
        )
        .unwrap();
        assert!(r.trace.windows(2).all(|w| w[1].best <= w[0].best));
        assert!(seen.into_inner().unwrap().iter().all(|c| space.contains(c)));
    }

    #[test]
    fn frozen_population_gives_constant_trace() {
        let ga = GaConfig {
            population: 2,
            elitism: 2,
            crossover_rate: 0.0,
            mutation_rate: 0.0,
            generations: 8,
            ..Default::default()
        };
        let r = search(&SearchSpace::default(), &ga, distance, Execution::Sequential).unwrap();
        assert!(r.trace.iter().all(|g| g.best == r.trace[0].best && g.mean == r.trace[0].mean));
    }

    #[test]
    fn fixed_seed_repeats_and_strategy_is_irrelevant() {
        let ga = GaConfig { generations: 6, seed: 5, ..Default::default() };
        let a = search(&SearchSpace::default(), &ga, distance, Execution::Parallel).unwrap();
        let b = search(&SearchSpace::default(), &ga, distance, Execution::Sequential).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn failing_candidates_are_worst_not_fatal() {
        let ga = GaConfig { generations: 4, seed: 1, ..Default::default() };
        let r = search(
            &SearchSpace::default(),
            &ga,
            |c| if c.leaky_rate < 0.5 { Err(invalid("boom")) } else { distance(c) },
            Execution::Sequential,
        )
        .unwrap();
        assert!(r.best_fitness.is_finite());
        assert!(r.best.leaky_rate >= 0.5);
    }

    #[test]
    fn invalid_settings_are_rejected() {
        let bad = SearchSpace { spectral_radius: Interval::closed(0.0, 1.5), ..Default::default() };
        assert!(search(&bad, &GaConfig::default(), distance, Execution::Sequential).is_err());
        let ga = GaConfig { population: 1, ..Default::default() };
        assert!(search(&SearchSpace::default(), &ga, distance, Execution::Sequential).is_err());
        let ga = GaConfig { mutation_rate: 1.5, ..Default::default() };
        assert!(ga.validate().is_err());
    }

    #[test]
    fn trace_csv_has_header() {
        let r = search(&SearchSpace::default(), &GaConfig { generations: 2, ..Default::default() }, distance, Execution::Sequential).unwrap();
        let mut buf = Vec::new();
        r.write_trace_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("generation,best,mean\n"));
        assert_eq!(text.lines().count(), 3);
    }
}
