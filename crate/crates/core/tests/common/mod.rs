#![allow(dead_code)]

use mau_core::expectation::{BayesNet, Cpt, ExplicitDistribution};
use mau_core::graph::{maximal_cliques, UndirectedGraph};
use mau_core::{Scope, UtilityTable, Variable, VariableSpace};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use rand::SeedableRng;
pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("v{i}")).collect()
}

pub fn binary_space(n: usize) -> VariableSpace {
    VariableSpace::binary(&names(n)).unwrap()
}

/// Space with domain sizes drawn from `2..=max_card`.
pub fn mixed_space(rng: &mut TestRng, n: usize, max_card: usize) -> VariableSpace {
    let vars = (0..n)
        .map(|i| {
            let card = rng.gen_range(2..=max_card);
            Variable::new(format!("v{i}"), (0..card).map(|k| format!("s{k}")))
        })
        .collect();
    VariableSpace::new(vars).unwrap()
}

pub fn random_graph(rng: &mut TestRng, space: &VariableSpace, density: f64) -> UndirectedGraph {
    let mut g = UndirectedGraph::new(space.clone());
    for a in 0..space.len() {
        for b in a + 1..space.len() {
            if rng.gen_bool(density) {
                g.add_edge(a, b).unwrap();
            }
        }
    }
    g
}

/// Sum of random tables over the maximal cliques of `g`.
pub fn planted_utility(rng: &mut TestRng, g: &UndirectedGraph) -> UtilityTable {
    let space = g.space().clone();
    let cliques = maximal_cliques(g);
    let tables: Vec<Vec<f64>> = cliques
        .iter()
        .map(|c| {
            let size = space.scope_state_count(c) as usize;
            (0..size).map(|_| rng.gen_range(-5.0..5.0)).collect()
        })
        .collect();
    UtilityTable::from_fn(space.clone(), |state| {
        cliques
            .iter()
            .zip(&tables)
            .map(|(c, t)| {
                let mut index = 0;
                for v in c.iter() {
                    index = index * space.cardinality(v) + state[v];
                }
                t[index]
            })
            .sum()
    })
    .unwrap()
}

pub fn unstructured_utility(rng: &mut TestRng, space: &VariableSpace) -> UtilityTable {
    UtilityTable::from_fn(space.clone(), |_| rng.gen_range(-10.0..10.0)).unwrap()
}

/// Each variable assigned to one of `k` blocks (or left out when `allow_none`).
pub fn random_blocks(rng: &mut TestRng, n: usize, k: usize) -> Vec<Scope> {
    let mut blocks = vec![Vec::new(); k];
    for v in 0..n {
        blocks[rng.gen_range(0..k)].push(v);
    }
    blocks.into_iter().map(Scope::new).collect()
}

/// Random network whose parents come from earlier variables (at most `max_parents`).
pub fn random_bayes_net(rng: &mut TestRng, space: &VariableSpace, max_parents: usize) -> BayesNet {
    let cpts = (0..space.len())
        .map(|v| {
            let mut parents = Vec::new();
            for p in 0..v {
                if parents.len() < max_parents && rng.gen_bool(0.5) {
                    parents.push(p);
                }
            }
            let parents = Scope::new(parents);
            let rows = space.scope_state_count(&parents) as usize;
            let card = space.cardinality(v);
            let mut table = Vec::with_capacity(rows * card);
            for _ in 0..rows {
                let raw: Vec<f64> = (0..card).map(|_| rng.gen_range(0.05..1.0)).collect();
                let total: f64 = raw.iter().sum();
                table.extend(raw.iter().map(|x| x / total));
            }
            Cpt::new(v, parents, table)
        })
        .collect();
    BayesNet::new(space.clone(), cpts).unwrap()
}

pub fn random_distribution(rng: &mut TestRng, space: &VariableSpace) -> ExplicitDistribution {
    let size = space.state_count() as usize;
    let raw: Vec<f64> = (0..size).map(|_| rng.gen_range(0.0..1.0)).collect();
    let total: f64 = raw.iter().sum();
    ExplicitDistribution::new(space.clone(), raw.iter().map(|x| x / total).collect()).unwrap()
}

/// All partitions of `0..n` into labelled blocks (X, Z, Y).
pub fn all_partitions(n: usize) -> Vec<(Scope, Scope, Scope)> {
    let mut out = Vec::new();
    for code in 0..3usize.pow(n as u32) {
        let (mut x, mut z, mut y) = (Vec::new(), Vec::new(), Vec::new());
        let mut c = code;
        for v in 0..n {
            match c % 3 {
                0 => x.push(v),
                1 => z.push(v),
                _ => y.push(v),
            }
            c /= 3;
        }
        out.push((Scope::new(x), Scope::new(z), Scope::new(y)));
    }
    out
}
