//! Cumulative weekly reciprocity snapshots, giant-component
//! extraction, PageRank, and ordinal ranks.
//!
//! A tie between two users appears in the first week by which messages
//! have flowed in both directions between them; ties never disappear.
//! PageRank runs over the giant component only, with teleportation
//! restricted to it, so no probability mass leaks to isolates.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::ingest::EventStore;
use crate::scalar::{real_from_f64, real_from_usize, Real};
use crate::{Error, Result, UserId};

/// Cumulative undirected reciprocity graph at a week boundary.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Snapshot {
    pub week: u32,
    pub nodes: BTreeSet<UserId>,
    /// Unordered pairs stored with the smaller id first.
    pub edges: BTreeSet<(UserId, UserId)>,
}

impl Snapshot {
    pub fn degree(&self, user: &UserId) -> usize {
        self.edges
            .iter()
            .filter(|(u, v)| u == user || v == user)
            .count()
    }
}

/// PageRank scores over one snapshot's giant component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PageRankResult<F: Real> {
    pub week: u32,
    pub scores: BTreeMap<UserId, F>,
    pub damping: f64,
    pub iterations_used: usize,
    /// False when the iteration hit `max_iter` before the tolerance.
    pub converged: bool,
}

/// Ordinal ranks (1 = highest PageRank) at one week.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankTable {
    pub week: u32,
    pub rank: BTreeMap<UserId, u32>,
}

/// Power-iteration parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PageRankParams {
    pub damping: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PageRankParams {
    fn default() -> Self {
        PageRankParams {
            damping: 0.85,
            tol: 1e-10,
            max_iter: 200,
        }
    }
}

/// Build cumulative snapshots for weeks `1..=horizon_weeks`.
///
/// An edge `(u, v)` is present in week `w` iff some `u -> v` and some
/// `v -> u` message both exist in weeks `<= w`; a node is present iff
/// the user joined by the end of week `w`. Self-messages never form
/// edges.
pub fn build_snapshots(store: &EventStore, horizon_weeks: u32) -> Result<Vec<Snapshot>> {
    let horizon = horizon_weeks.min(store.horizon_weeks());

    // First week each ordered pair communicated.
    let mut first_directed: HashMap<(UserId, UserId), u32> = HashMap::new();
    for message in store.messages_within_horizon() {
        if message.is_self_message() {
            continue;
        }
        let week = store.week_of(message.timestamp)?;
        first_directed
            .entry((message.sender.clone(), message.receiver.clone()))
            .and_modify(|w| *w = (*w).min(week))
            .or_insert(week);
    }

    // Reciprocation completes at the later of the two directions.
    let mut tie_week: BTreeMap<(UserId, UserId), u32> = BTreeMap::new();
    for ((sender, receiver), &week) in &first_directed {
        if sender >= receiver {
            continue;
        }
        if let Some(&back) = first_directed.get(&(receiver.clone(), sender.clone())) {
            tie_week.insert((sender.clone(), receiver.clone()), week.max(back));
        }
    }

    let mut join_weeks: Vec<(u32, UserId)> = store
        .users()
        .map(|u| {
            let week = store.join_week(u).expect("store users have join weeks");
            (week, u.clone())
        })
        .collect();
    join_weeks.sort();

    let mut ties_by_week: Vec<(u32, (UserId, UserId))> =
        tie_week.into_iter().map(|(pair, w)| (w, pair)).collect();
    ties_by_week.sort();

    let mut snapshots = Vec::with_capacity(horizon as usize);
    let mut nodes: BTreeSet<UserId> = BTreeSet::new();
    let mut edges: BTreeSet<(UserId, UserId)> = BTreeSet::new();
    let mut next_join = 0;
    let mut next_tie = 0;
    for week in 1..=horizon {
        while next_join < join_weeks.len() && join_weeks[next_join].0 <= week {
            nodes.insert(join_weeks[next_join].1.clone());
            next_join += 1;
        }
        while next_tie < ties_by_week.len() && ties_by_week[next_tie].0 <= week {
            edges.insert(ties_by_week[next_tie].1.clone());
            next_tie += 1;
        }
        snapshots.push(Snapshot {
            week,
            nodes: nodes.clone(),
            edges: edges.clone(),
        });
    }
    Ok(snapshots)
}

struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    fn new(len: usize) -> Self {
        UnionFind {
            parent: (0..len).collect(),
            size: vec![1; len],
        }
    }

    fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            self.parent[root] = self.parent[self.parent[root]];
            root = self.parent[root];
        }
        root
    }

    fn union(&mut self, x: usize, y: usize) {
        let (mut a, mut b) = (self.find(x), self.find(y));
        if a == b {
            return;
        }
        if self.size[a] < self.size[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a;
        self.size[a] += self.size[b];
    }
}

/// Largest connected component by node count; ties go to the component
/// containing the smallest user id. Edgeless snapshots yield the empty
/// set and callers skip those weeks.
pub fn giant_component(snapshot: &Snapshot) -> BTreeSet<UserId> {
    if snapshot.edges.is_empty() {
        return BTreeSet::new();
    }
    let members: Vec<&UserId> = snapshot.nodes.iter().collect();
    let index_of: BTreeMap<&UserId, usize> =
        members.iter().enumerate().map(|(i, u)| (*u, i)).collect();
    let mut dsu = UnionFind::new(members.len());
    for (u, v) in &snapshot.edges {
        dsu.union(index_of[u], index_of[v]);
    }
    // Members are in ascending id order, so the first root reaching the
    // maximum size belongs to the component with the smallest user id.
    let mut best_root = None;
    let mut best_size = 0;
    for i in 0..members.len() {
        let root = dsu.find(i);
        let size = dsu.size[root];
        if size > best_size {
            best_size = size;
            best_root = Some(root);
        }
    }
    let best_root = best_root.expect("non-empty edge set yields a component");
    (0..members.len())
        .filter(|&i| dsu.find(i) == best_root)
        .map(|i| members[i].clone())
        .collect()
}

/// Power-iteration PageRank over the snapshot's giant component, each
/// undirected edge acting as two directed edges.
pub fn pagerank<F: Real>(snapshot: &Snapshot, params: PageRankParams) -> Result<PageRankResult<F>> {
    if params.damping <= 0.0 || params.damping >= 1.0 {
        return Err(Error::InvalidDamping {
            value: params.damping,
        });
    }
    let component = giant_component(snapshot);
    if component.is_empty() {
        return Err(Error::EmptyGiantComponent {
            week: snapshot.week,
        });
    }

    let members: Vec<&UserId> = component.iter().collect();
    let index_of: BTreeMap<&UserId, usize> =
        members.iter().enumerate().map(|(i, u)| (*u, i)).collect();
    let n = members.len();
    let mut neighbors: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (u, v) in &snapshot.edges {
        if let (Some(&a), Some(&b)) = (index_of.get(u), index_of.get(v)) {
            neighbors[a].push(b);
            neighbors[b].push(a);
        }
    }

    let damping = real_from_f64::<F>(params.damping);
    let tol = real_from_f64::<F>(params.tol);
    let n_real = real_from_usize::<F>(n);
    let teleport = (F::one() - damping) / n_real;

    let mut scores = vec![F::one() / n_real; n];
    let mut next = vec![F::zero(); n];
    let mut iterations_used = 0;
    let mut converged = false;
    for _ in 0..params.max_iter {
        iterations_used += 1;
        for value in next.iter_mut() {
            *value = F::zero();
        }
        for (node, adj) in neighbors.iter().enumerate() {
            let share = scores[node] / real_from_usize::<F>(adj.len());
            for &peer in adj {
                next[peer] += share;
            }
        }
        let mut l1 = F::zero();
        for (node, value) in next.iter_mut().enumerate() {
            *value = teleport + damping * *value;
            l1 += (*value - scores[node]).abs();
        }
        std::mem::swap(&mut scores, &mut next);
        if l1 < tol {
            converged = true;
            break;
        }
    }

    let scores = members
        .iter()
        .zip(scores)
        .map(|(user, score)| ((*user).clone(), score))
        .collect();
    Ok(PageRankResult {
        week: snapshot.week,
        scores,
        damping: params.damping,
        iterations_used,
        converged,
    })
}

/// Ordinal ranks from PageRank scores: rank 1 is the largest score,
/// exact ties broken by ascending user id.
pub fn ranks<F: Real>(result: &PageRankResult<F>) -> RankTable {
    let mut ordered: Vec<(&UserId, F)> = result.scores.iter().map(|(u, &s)| (u, s)).collect();
    ordered.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.0.cmp(b.0))
    });
    let rank = ordered
        .into_iter()
        .enumerate()
        .map(|(i, (user, _))| (user.clone(), i as u32 + 1))
        .collect();
    RankTable {
        week: result.week,
        rank,
    }
}

/// Rank tables for every week with a non-empty giant component;
/// `None` marks weeks skipped for lack of edges.
pub fn weekly_rank_tables<F: Real>(
    snapshots: &[Snapshot],
    params: PageRankParams,
) -> Result<Vec<Option<RankTable>>> {
    snapshots
        .iter()
        .map(|snapshot| match pagerank::<F>(snapshot, params) {
            Ok(result) => Ok(Some(ranks(&result))),
            Err(Error::EmptyGiantComponent { .. }) => Ok(None),
            Err(other) => Err(other),
        })
        .collect()
}
