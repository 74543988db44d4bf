use std::collections::BTreeMap;

use rand::seq::SliceRandom;

use super::WorldState;

/// Uniform random order of the active agents' ids, highest priority first.
pub fn assign_priorities(world: &mut WorldState) -> Vec<usize> {
    let mut ids: Vec<usize> = world.active().map(|a| a.id).collect();
    ids.shuffle(&mut world.rng);
    ids
}

/// Ids of all other agents (arrived ones included) strictly closer than `radius`.
pub fn neighbor_set(world: &WorldState, id: usize, radius: f64) -> Vec<usize> {
    let Some(i) = world.index_of(id) else {
        return Vec::new();
    };
    let p = world.position(i);
    (0..world.agents.len())
        .filter(|&j| j != i)
        .filter(|&j| {
            let q = world.position(j);
            (p[0] - q[0]).hypot(p[1] - q[1]) < radius
        })
        .map(|j| world.agents[j].id)
        .collect()
}

/// Groups the priority order into waves: an agent joins the wave after the
/// last one holding a higher-priority neighbor of it. Agents in one wave do
/// not depend on each other's fresh plans.
pub fn planning_waves(order: &[usize], neighbors: &BTreeMap<usize, Vec<usize>>) -> Vec<Vec<usize>> {
    let rank: BTreeMap<usize, usize> = order.iter().enumerate().map(|(r, &id)| (id, r)).collect();
    let mut wave_of: BTreeMap<usize, usize> = BTreeMap::new();
    let mut waves: Vec<Vec<usize>> = Vec::new();
    for (r, &id) in order.iter().enumerate() {
        let w = neighbors
            .get(&id)
            .into_iter()
            .flatten()
            .filter(|j| rank.get(j).is_some_and(|&rj| rj < r))
            .map(|j| wave_of[j] + 1)
            .max()
            .unwrap_or(0);
        wave_of.insert(id, w);
        if waves.len() <= w {
            waves.resize(w + 1, Vec::new());
        }
        waves[w].push(id);
    }
    waves
}
