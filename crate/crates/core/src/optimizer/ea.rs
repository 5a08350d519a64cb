use alloc::vec::Vec;
use core::cmp::Ordering;

use rand::Rng;

use super::{
    better, crossover, mean, mutate, repair, EaParams, FitnessCache, OptimizerError, SearchMethod, SearchResult,
    TraceRow,
};
use crate::context::{Binding, FeasibleSet};
use crate::rng::{rng_from_seed, DetRng};

type Individual = (Binding, f64);

fn random_member(feasible: &FeasibleSet, rng: &mut DetRng) -> Binding {
    feasible.bindings()[rng.gen_range(0..feasible.len())].clone()
}

fn tournament<'a>(pop: &'a [Individual], k: usize, rng: &mut DetRng) -> &'a Binding {
    let mut best = &pop[rng.gen_range(0..pop.len())];
    for _ in 1..k {
        let c = &pop[rng.gen_range(0..pop.len())];
        if c.1 > best.1 {
            best = c;
        }
    }
    &best.0
}

fn descending(a: &Individual, b: &Individual) -> Ordering {
    b.1.partial_cmp(&a.1).unwrap_or_else(|| a.1.is_nan().cmp(&b.1.is_nan()))
}

/// Evolutionary search over the feasible set.
///
/// Parents come from size-`tournament` tournaments; children are produced by
/// order crossover and mutation, then mapped back onto the feasible set by
/// [`repair`]. Parents and children compete for the next population, so the
/// best individual always survives. After `stagnation` generations without
/// improvement the population is reseeded with the incumbent plus random
/// feasible bindings.
pub fn ea_search<F: FnMut(&Binding) -> f64>(
    feasible: &FeasibleSet,
    fitness: &mut FitnessCache<F>,
    params: &EaParams,
) -> Result<SearchResult, OptimizerError> {
    params.validate()?;
    if feasible.is_empty() {
        return Err(OptimizerError::EmptyFeasibleSet);
    }
    let p = params.population;
    let mut rng = rng_from_seed(params.seed);
    let mut pop: Vec<Individual> = (0..p)
        .map(|_| {
            let b = random_member(feasible, &mut rng);
            let f = fitness.evaluate(&b);
            (b, f)
        })
        .collect();
    let mut incumbent = pop[0].clone();
    for ind in &pop[1..] {
        if better(ind.1, &ind.0, Some((incumbent.1, &incumbent.0))) {
            incumbent = ind.clone();
        }
    }
    let row = |g: usize, inc: &Individual, pop: &[Individual], evals: usize| TraceRow {
        generation: g,
        best_fitness: inc.1,
        mean_fitness: mean(&pop.iter().map(|i| i.1).collect::<Vec<_>>()),
        evaluations: evals,
    };
    let mut trace = alloc::vec![row(0, &incumbent, &pop, fitness.evaluations())];
    if feasible.len() > 1 {
        let mut stagnant = 0;
        for g in 1..=params.generations {
            let mut offspring: Vec<Individual> = Vec::with_capacity(p);
            while offspring.len() < p {
                let a = tournament(&pop, params.tournament, &mut rng).secondary().to_vec();
                let b = tournament(&pop, params.tournament, &mut rng).secondary().to_vec();
                let (ca, cb) = if rng.gen_bool(params.crossover_prob) {
                    crossover(params.crossover, &a, &b, &mut rng)
                } else {
                    (a, b)
                };
                for child in [ca, cb] {
                    if offspring.len() == p {
                        break;
                    }
                    let child = if rng.gen_bool(params.mutation_prob) {
                        let op = params.mutations[rng.gen_range(0..params.mutations.len())];
                        mutate(op, &child, &mut rng)
                    } else {
                        child
                    };
                    let (fixed, _) = repair(&child, feasible)?;
                    let f = fitness.evaluate(&fixed);
                    offspring.push((fixed, f));
                }
            }
            pop.extend(offspring);
            pop.sort_by(descending);
            pop.truncate(p);

            let top = &pop[0];
            if top.1 > incumbent.1 {
                incumbent = top.clone();
                stagnant = 0;
            } else {
                if top.1 == incumbent.1 && top.0 < incumbent.0 {
                    incumbent = top.clone();
                }
                stagnant += 1;
            }
            trace.push(row(g, &incumbent, &pop, fitness.evaluations()));
            if stagnant >= params.stagnation && g < params.generations {
                pop.clear();
                pop.push(incumbent.clone());
                for _ in 1..p {
                    let b = random_member(feasible, &mut rng);
                    let f = fitness.evaluate(&b);
                    pop.push((b, f));
                }
                stagnant = 0;
            }
        }
    }
    Ok(SearchResult {
        best: incumbent.0,
        fitness: incumbent.1,
        method: SearchMethod::Evolutionary,
        evaluations: fitness.evaluations(),
        table: Vec::new(),
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::super::exhaustive_search;
    use super::*;
    use crate::context::{enumerate_feasible, ConstraintTable};
    use alloc::vec;

    fn example1_set() -> FeasibleSet {
        super::super::tests::example1_set()
    }

    fn planted(target: &Binding) -> impl FnMut(&Binding) -> f64 + '_ {
        move |b: &Binding| 1.0 / (1.0 + super::super::kendall_tau(b.secondary(), target.secondary()).unwrap() as f64)
    }

    #[test]
    fn singleton_returns_at_generation_zero() {
        let t = ConstraintTable::from_permitted(3, vec![vec![2], vec![3], vec![1]]).unwrap();
        let fs = enumerate_feasible(&t);
        let r = ea_search(&fs, &mut FitnessCache::new(|_: &Binding| 0.3), &EaParams::default()).unwrap();
        assert_eq!(r.best.secondary(), &[2, 3, 1]);
        assert_eq!(r.trace.len(), 1);
        assert_eq!(r.trace[0].generation, 0);
    }

    #[test]
    fn finds_planted_optimum_on_example1() {
        let fs = example1_set();
        let target = fs.bindings()[9].clone();
        let exact = exhaustive_search(&fs, &mut FitnessCache::new(planted(&target))).unwrap();
        let params = EaParams {
            population: 8,
            generations: 50,
            seed: 5,
            ..EaParams::default()
        };
        let r = ea_search(&fs, &mut FitnessCache::new(planted(&target)), &params).unwrap();
        assert_eq!(r.best, exact.best);
        assert_eq!(r.trace.len(), 51);
    }

    #[test]
    fn trace_is_monotone_and_reproducible() {
        let fs = enumerate_feasible(&ConstraintTable::unconstrained(6));
        let target = fs.bindings()[400].clone();
        let params = EaParams {
            population: 10,
            generations: 60,
            stagnation: 3,
            seed: 77,
            ..EaParams::default()
        };
        let a = ea_search(&fs, &mut FitnessCache::new(planted(&target)), &params).unwrap();
        let b = ea_search(&fs, &mut FitnessCache::new(planted(&target)), &params).unwrap();
        assert_eq!(a, b);
        assert!(a.trace.windows(2).all(|w| w[1].best_fitness >= w[0].best_fitness));
        assert!(a.trace.windows(2).all(|w| w[1].evaluations >= w[0].evaluations));
    }

    #[test]
    fn population_stays_feasible() {
        // every evaluated binding must belong to the feasible set
        let fs = example1_set();
        let mut seen = Vec::new();
        let params = EaParams {
            population: 6,
            generations: 30,
            seed: 2,
            crossover: super::super::Crossover::Ox2,
            mutation_prob: 1.0,
            ..EaParams::default()
        };
        ea_search(
            &fs,
            &mut FitnessCache::new(|b: &Binding| {
                seen.push(b.clone());
                b.secondary()[4] as f64
            }),
            &params,
        )
        .unwrap();
        assert!(!seen.is_empty());
        assert!(seen.iter().all(|b| fs.contains(b)));
    }
}
