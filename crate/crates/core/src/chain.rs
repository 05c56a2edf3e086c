//! Chain-structure classification of the single-armed MDP and reachability
//! certificates for an optimal stationary state.
//!
//! The *union graph* has an edge `s -> s'` whenever either action can move
//! the arm from `s` to `s'`. Its strongly connected components, and which of
//! them are closed, classify the model; a model is weakly communicating when
//! exactly one class is closed and every state outside it is transient under
//! every policy (equivalently, belongs to no end component).
//!
//! A certificate `(T0, p0, theta)` witnesses reachability of `x*` under the
//! linear steering control: once every entry of `(P^alpha)^T0` over columns
//! in the support of `x*` is at least `p0 > 0`, every start reaches alignment
//! at least `theta = p0 / max_s x*_s` after `T0` steps.

use serde::Serialize;

use crate::linalg::Mat;
use crate::model::ArmModel;
use crate::stationary::StationaryPoint;

/// Matrix-power entries above this threshold count as structurally positive.
pub const POSITIVITY_TOL: f64 = 1e-12;

/// Classification of the single-armed model.
#[derive(Debug, Clone, Serialize)]
pub struct ChainStructure {
    /// Strongly connected components of the union graph, each sorted.
    pub classes: Vec<Vec<usize>>,
    /// Indices into `classes` of the closed (no outgoing edge) components.
    pub closed_classes: Vec<usize>,
    /// States transient under every policy.
    pub transient_states: Vec<usize>,
    pub weakly_communicating: bool,
    /// Period of each state in the chain induced by `P^alpha`; states on no
    /// cycle report period 1.
    pub periods_under_p_alpha: Vec<u64>,
}

/// Witness for reachability of `x*` via the linear steering control.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReachabilityCertificate {
    pub t0: usize,
    pub p0: f64,
    pub theta: f64,
}

/// Default search cap for certificate horizons.
pub fn default_certificate_cap(num_states: usize) -> usize {
    4 * num_states * num_states
}

/// Computes the chain structure: union-graph SCCs, closedness, states
/// transient under every policy, the weakly-communicating flag and per-state
/// periods under `P^alpha`.
pub fn analyze_chain(model: &ArmModel) -> ChainStructure {
    let s = model.num_states();
    let union = union_adjacency(model);

    let comp_of = scc(&union, s);
    let num_comps = 1 + comp_of.iter().copied().max().unwrap_or(0);
    let mut classes: Vec<Vec<usize>> = vec![Vec::new(); num_comps];
    for (state, &c) in comp_of.iter().enumerate() {
        classes[c].push(state);
    }
    classes.iter_mut().for_each(|c| c.sort_unstable());
    classes.sort_by_key(|c| c[0]);

    let closed_classes: Vec<usize> = classes
        .iter()
        .enumerate()
        .filter(|(_, class)| {
            class
                .iter()
                .all(|&v| union[v].iter().all(|&w| class.binary_search(&w).is_ok()))
        })
        .map(|(idx, _)| idx)
        .collect();

    let in_end_component = end_component_states(model, &union);
    let transient_states: Vec<usize> = (0..s).filter(|&v| !in_end_component[v]).collect();

    let weakly_communicating = closed_classes.len() == 1 && {
        let closed = &classes[closed_classes[0]];
        (0..s).all(|v| closed.binary_search(&v).is_ok() || !in_end_component[v])
    };

    // P^alpha mixes both actions with positive weight, so its positive-entry
    // graph coincides with the union graph; periods are computed per SCC.
    let periods_under_p_alpha = periods(&union, &classes, s);

    ChainStructure {
        classes,
        closed_classes,
        transient_states,
        weakly_communicating,
        periods_under_p_alpha,
    }
}

/// Searches for the smallest `T0 <= cap` making every `(P^alpha)^T0` entry
/// into the support of `x*` positive, and derives `(p0, theta)`. `None`
/// means no certificate within the cap — an inconclusive outcome, not a
/// proof of unreachability.
pub fn find_certificate(
    model: &ArmModel,
    sp: &StationaryPoint,
    cap: usize,
) -> Option<ReachabilityCertificate> {
    let support = sp.support();
    if support.is_empty() {
        return None;
    }
    let max_mass = sp
        .x_star
        .as_slice()
        .iter()
        .copied()
        .fold(0.0_f64, f64::max);
    let p_alpha = model.p_alpha();
    let mut power = p_alpha.clone();
    for t0 in 1..=cap {
        let p0 = min_entry_into_support(&power, &support);
        if p0 > POSITIVITY_TOL {
            return Some(ReachabilityCertificate {
                t0,
                p0,
                theta: p0 / max_mass,
            });
        }
        if t0 < cap {
            power = power.matmul(&p_alpha);
        }
    }
    None
}

fn min_entry_into_support(power: &Mat, support: &[usize]) -> f64 {
    let mut min = f64::INFINITY;
    for row in 0..power.rows() {
        for &col in support {
            min = min.min(power.get(row, col));
        }
    }
    min
}

// ── Graph machinery ──────────────────────────────────────────────────────

fn union_adjacency(model: &ArmModel) -> Vec<Vec<usize>> {
    let s = model.num_states();
    (0..s)
        .map(|i| {
            (0..s)
                .filter(|&j| {
                    model.p0().get(i, j) > POSITIVITY_TOL || model.p1().get(i, j) > POSITIVITY_TOL
                })
                .collect()
        })
        .collect()
}

/// Kosaraju SCC; returns the component id per node (ids are arbitrary).
fn scc(adj: &[Vec<usize>], n: usize) -> Vec<usize> {
    let mut order = Vec::with_capacity(n);
    let mut seen = vec![false; n];
    for start in 0..n {
        if seen[start] {
            continue;
        }
        // Iterative DFS recording reverse post-order.
        let mut stack = vec![(start, 0usize)];
        seen[start] = true;
        while let Some(&mut (v, ref mut idx)) = stack.last_mut() {
            if *idx < adj[v].len() {
                let w = adj[v][*idx];
                *idx += 1;
                if !seen[w] {
                    seen[w] = true;
                    stack.push((w, 0));
                }
            } else {
                order.push(v);
                stack.pop();
            }
        }
    }

    let mut radj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (v, outs) in adj.iter().enumerate() {
        for &w in outs {
            radj[w].push(v);
        }
    }

    let mut comp = vec![usize::MAX; n];
    let mut next_comp = 0;
    for &start in order.iter().rev() {
        if comp[start] != usize::MAX {
            continue;
        }
        let mut stack = vec![start];
        comp[start] = next_comp;
        while let Some(v) = stack.pop() {
            for &w in &radj[v] {
                if comp[w] == usize::MAX {
                    comp[w] = next_comp;
                    stack.push(w);
                }
            }
        }
        next_comp += 1;
    }
    comp
}

/// Marks the states contained in some end component: a set of states with an
/// action selection whose supports stay inside the set and whose induced
/// graph is strongly connected. A state outside every end component is
/// transient under every policy.
fn end_component_states(model: &ArmModel, union: &[Vec<usize>]) -> Vec<bool> {
    let s = model.num_states();
    let support = |state: usize, action: usize| -> Vec<usize> {
        let p = if action == 0 { model.p0() } else { model.p1() };
        (0..s)
            .filter(|&j| p.get(state, j) > POSITIVITY_TOL)
            .collect()
    };

    let comp_of = scc(union, s);
    let num_comps = 1 + comp_of.iter().copied().max().unwrap_or(0);
    let mut queue: Vec<Vec<usize>> = vec![Vec::new(); num_comps];
    for (state, &c) in comp_of.iter().enumerate() {
        queue[c].push(state);
    }

    let mut in_mec = vec![false; s];
    while let Some(mut set) = queue.pop() {
        if set.is_empty() {
            continue;
        }
        set.sort_unstable();
        // Drop states with no action whose support stays inside the set.
        let mut removed = false;
        let kept: Vec<usize> = set
            .iter()
            .copied()
            .filter(|&v| {
                let stays = (0..2).any(|a| {
                    support(v, a)
                        .iter()
                        .all(|w| set.binary_search(w).is_ok())
                });
                if !stays {
                    removed = true;
                }
                stays
            })
            .collect();
        if kept.is_empty() {
            continue;
        }

        // Rebuild the restricted graph over the kept states using only the
        // actions that stay inside.
        let index: std::collections::HashMap<usize, usize> =
            kept.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let sub_adj: Vec<Vec<usize>> = kept
            .iter()
            .map(|&v| {
                let mut outs = Vec::new();
                for a in 0..2 {
                    let sup = support(v, a);
                    if sup.iter().all(|w| index.contains_key(w)) {
                        outs.extend(sup.iter().map(|w| index[w]));
                    }
                }
                outs.sort_unstable();
                outs.dedup();
                outs
            })
            .collect();
        let sub_comp = scc(&sub_adj, kept.len());
        let num_sub = 1 + sub_comp.iter().copied().max().unwrap_or(0);

        if !removed && num_sub == 1 {
            for &v in &kept {
                in_mec[v] = true;
            }
            continue;
        }
        let mut parts: Vec<Vec<usize>> = vec![Vec::new(); num_sub];
        for (i, &c) in sub_comp.iter().enumerate() {
            parts[c].push(kept[i]);
        }
        queue.extend(parts.into_iter().filter(|p| !p.is_empty()));
    }
    in_mec
}

/// Period of every state: gcd of cycle lengths through its SCC, via BFS
/// levels. Singleton components without a self-loop get period 1.
fn periods(union: &[Vec<usize>], classes: &[Vec<usize>], s: usize) -> Vec<u64> {
    let mut class_of = vec![0usize; s];
    for (idx, class) in classes.iter().enumerate() {
        for &v in class {
            class_of[v] = idx;
        }
    }

    let mut period = vec![1u64; s];
    for class in classes {
        let internal_edges: Vec<(usize, usize)> = class
            .iter()
            .flat_map(|&v| {
                union[v]
                    .iter()
                    .copied()
                    .filter(|w| class.binary_search(w).is_ok())
                    .map(move |w| (v, w))
            })
            .collect();
        if internal_edges.is_empty() {
            continue; // no cycle through these states
        }
        let root = class[0];
        let mut level = vec![i64::MIN; s];
        level[root] = 0;
        let mut frontier = std::collections::VecDeque::from([root]);
        while let Some(v) = frontier.pop_front() {
            for &w in &union[v] {
                if class_of[w] == class_of[root] && level[w] == i64::MIN {
                    level[w] = level[v] + 1;
                    frontier.push_back(w);
                }
            }
        }
        let mut g: u64 = 0;
        for &(v, w) in &internal_edges {
            let diff = (level[v] + 1 - level[w]).unsigned_abs();
            g = gcd(g, diff);
        }
        let p = if g == 0 { 1 } else { g };
        for &v in class {
            period[v] = p;
        }
    }
    period
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}
