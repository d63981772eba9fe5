//! Subgraph matching, direct derivations, and the grammar execution loop.
//!
//! A match embeds a production's left hand side injectively into a host
//! graph, preserving labels, with every LHS edge present and every
//! nihilation edge absent from the completed complement of the host. The
//! matcher backtracks over LHS nodes ordered by label rarity and degree;
//! match lists are returned in the canonical order of their mapped host ids
//! so results never depend on search or scheduling order.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::boolalg::SplitMix64;
use crate::graph::{
    check_morphism, complement_wrt, Correspondence, Label, SimpleDigraph, Slot,
};
use crate::production::Production;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DeriveError {
    #[error("derivation dangles: node `{node}` loses an incident edge endpoint")]
    DanglingEdge { node: String },
    #[error("match does not belong to this production/host pair")]
    InvalidMatch,
    #[error("grammar mode is nodeless but production `{0}` touches nodes")]
    NodefulProduction(String),
    #[error("step budget of {0} exceeded")]
    BudgetExceeded(usize),
}

/// An injective embedding of a production's LHS nodes into a host graph.
#[derive(Clone, PartialEq, Eq)]
pub struct Match {
    map: Vec<Option<usize>>,
}

impl Match {
    pub fn map(&self) -> &[Option<usize>] {
        &self.map
    }

    pub fn image_of(&self, lhs_index: usize) -> Option<usize> {
        self.map[lhs_index]
    }

    /// Host ids in LHS-index order; the canonical sort key.
    pub fn host_ids<'h>(&self, host: &'h SimpleDigraph) -> Vec<&'h str> {
        self.map
            .iter()
            .filter_map(|m| m.map(|h| host.id_of(h)))
            .collect()
    }

    /// Render as `lhs-id:host-id` pairs.
    pub fn bindings(&self, p: &Production, host: &SimpleDigraph) -> Vec<(String, String)> {
        self.map
            .iter()
            .enumerate()
            .filter_map(|(i, m)| {
                m.map(|h| (p.universe()[i].id.clone(), host.id_of(h).to_string()))
            })
            .collect()
    }

    /// Full semantic re-validation: LHS embedding is a morphism and the
    /// nihilation matrix embeds in the completed complement of the host.
    pub fn validate(&self, p: &Production, host: &SimpleDigraph) -> bool {
        let pairs: Vec<(usize, usize)> = self
            .map
            .iter()
            .enumerate()
            .filter_map(|(i, m)| m.map(|h| (i, h)))
            .collect();
        let f = Correspondence::from_pairs(pairs.clone());
        if !check_morphism(&f, p.lhs(), host) {
            return false;
        }
        // Presence on exactly the LHS nodes.
        for i in 0..p.dim() {
            if p.lhs().present(i) != self.map[i].is_some() {
                return false;
            }
        }
        let Ok((complement, embed)) = complement_wrt(host, p.lhs(), &f) else {
            return false;
        };
        for (i, j) in p.nihilation().ones_positions() {
            if !complement.edge(embed[i], embed[j]) {
                return false;
            }
        }
        true
    }
}

impl fmt::Debug for Match {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Match{:?}", self.map)
    }
}

/// All matches of `p` in `g`, canonically ordered by mapped host ids.
pub fn enumerate_matches(p: &Production, g: &SimpleDigraph) -> Vec<Match> {
    let n = p.dim();
    let lhs_nodes: Vec<usize> = (0..n).filter(|&i| p.lhs().present(i)).collect();

    // Host candidate pool per label, and rarity for the search order.
    let host_present: Vec<usize> = (0..g.dim()).filter(|&i| g.present(i)).collect();
    let rarity = |label: &Label| host_present.iter().filter(|&&h| g.label_of(h) == label).count();
    let degree = |i: usize| {
        (0..n)
            .filter(|&j| {
                p.lhs().edge(i, j)
                    || p.lhs().edge(j, i)
                    || p.nihilation().get(i, j)
                    || p.nihilation().get(j, i)
            })
            .count()
    };
    let mut order = lhs_nodes.clone();
    order.sort_by_key(|&i| (rarity(p.label_of(i)), usize::MAX - degree(i), i));

    let mut map = vec![None; n];
    let mut used = vec![false; g.dim()];
    let mut out = Vec::new();
    search(p, g, &order, 0, &mut map, &mut used, &mut out);

    out.sort_by(|a, b| a.host_ids(g).cmp(&b.host_ids(g)));
    out
}

fn search(
    p: &Production,
    g: &SimpleDigraph,
    order: &[usize],
    depth: usize,
    map: &mut Vec<Option<usize>>,
    used: &mut Vec<bool>,
    out: &mut Vec<Match>,
) {
    if depth == order.len() {
        out.push(Match { map: map.clone() });
        return;
    }
    let v = order[depth];
    for h in 0..g.dim() {
        if used[h] || !g.present(h) || g.label_of(h) != p.label_of(v) {
            continue;
        }
        if !consistent(p, g, map, v, h) {
            continue;
        }
        map[v] = Some(h);
        used[h] = true;
        search(p, g, order, depth + 1, map, used, out);
        map[v] = None;
        used[h] = false;
    }
}

fn consistent(
    p: &Production,
    g: &SimpleDigraph,
    map: &[Option<usize>],
    v: usize,
    h: usize,
) -> bool {
    // Self loops first.
    if p.lhs().edge(v, v) && !g.edge(h, h) {
        return false;
    }
    if p.nihilation().get(v, v) && g.edge(h, h) {
        return false;
    }
    for (u, assigned) in map.iter().enumerate() {
        let Some(hu) = *assigned else { continue };
        if u == v {
            continue;
        }
        if p.lhs().edge(v, u) && !g.edge(h, hu) {
            return false;
        }
        if p.lhs().edge(u, v) && !g.edge(hu, h) {
            return false;
        }
        if p.nihilation().get(v, u) && g.edge(h, hu) {
            return false;
        }
        if p.nihilation().get(u, v) && g.edge(hu, h) {
            return false;
        }
    }
    true
}

/// Deterministic fresh-id source for node-adding derivations.
#[derive(Clone, Debug)]
pub struct IdGen {
    next: u64,
}

impl IdGen {
    pub fn new() -> Self {
        IdGen { next: 1 }
    }

    /// Start past any `+k` ids already present in the graph.
    pub fn for_graph(g: &SimpleDigraph) -> Self {
        let mut next = 1;
        for slot in g.slots() {
            if let Some(rest) = slot.id.strip_prefix('+') {
                if let Ok(k) = rest.parse::<u64>() {
                    next = next.max(k + 1);
                }
            }
        }
        IdGen { next }
    }

    fn fresh(&mut self, g_slots: &[Slot]) -> String {
        loop {
            let id = format!("+{}", self.next);
            self.next += 1;
            if !g_slots.iter().any(|s| s.id == id) {
                return id;
            }
        }
    }
}

impl Default for IdGen {
    fn default() -> Self {
        Self::new()
    }
}

/// Apply `p` at `m` in `g`. Fresh host slots are allocated for added nodes;
/// the result must be compatible (dangling is only possible when nodes are
/// deleted). Also returns the full binding list, including fresh nodes, so
/// traces replay exactly.
pub fn derive_with(
    p: &Production,
    m: &Match,
    g: &SimpleDigraph,
    ids: &mut IdGen,
) -> Result<(SimpleDigraph, Vec<(String, String)>), DeriveError> {
    use crate::boolalg::{BoolMatrix, BoolVector};

    // Extend the host universe with slots for the nodes the rule adds.
    let mut slots = g.slots().to_vec();
    let mut place = Vec::with_capacity(p.dim());
    let mut bindings = Vec::new();
    for (i, slot) in p.universe().iter().enumerate() {
        if let Some(h) = m.image_of(i) {
            place.push(h);
            bindings.push((slot.id.clone(), g.id_of(h).to_string()));
        } else if p.restock().nodes.get(i) {
            let id = ids.fresh(&slots);
            bindings.push((slot.id.clone(), id.clone()));
            place.push(slots.len());
            slots.push(Slot::new(id, slot.label.clone()));
        } else {
            place.push(usize::MAX);
        }
    }

    let n = slots.len();
    let mut edges = BoolMatrix::zeros(n);
    let mut nodes = BoolVector::zeros(n);
    for (i, j) in g.edges().ones_positions() {
        edges.set(i, j, true);
    }
    for i in 0..g.dim() {
        if g.present(i) {
            nodes.set(i, true);
        }
    }

    // Completed erase and restock, then H = r* OR (not e* AND G).
    for (i, j) in p.erase().edges.ones_positions() {
        if place[i] != usize::MAX && place[j] != usize::MAX {
            edges.set(place[i], place[j], false);
        }
    }
    for (i, j) in p.restock().edges.ones_positions() {
        debug_assert!(place[i] != usize::MAX && place[j] != usize::MAX);
        edges.set(place[i], place[j], true);
    }
    for (i, &pi) in place.iter().enumerate() {
        if p.erase().nodes.get(i) && pi != usize::MAX {
            nodes.set(pi, false);
        }
        if p.restock().nodes.get(i) {
            nodes.set(pi, true);
        }
    }

    let result = SimpleDigraph::from_parts(slots, edges, nodes);
    if !result.is_compatible() {
        let bad = (0..result.dim())
            .find(|&i| {
                !result.present(i)
                    && (0..result.dim()).any(|j| result.edge(i, j) || result.edge(j, i))
            })
            .map(|i| result.id_of(i).to_string())
            .unwrap_or_default();
        return Err(DeriveError::DanglingEdge { node: bad });
    }
    Ok((result, bindings))
}

/// Convenience wrapper allocating fresh ids from the host graph.
pub fn derive(p: &Production, m: &Match, g: &SimpleDigraph) -> Result<SimpleDigraph, DeriveError> {
    derive_with(p, m, g, &mut IdGen::for_graph(g)).map(|(g, _)| g)
}

/// Which production fires.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Election {
    First,
    All,
    Random,
    Priority(Vec<String>),
}

/// Where it fires.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Allocation {
    First,
    All,
    Random,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Strategy {
    pub election: Election,
    pub allocation: Allocation,
    pub seed: u64,
}

impl Strategy {
    pub fn first() -> Self {
        Strategy {
            election: Election::First,
            allocation: Allocation::First,
            seed: 0,
        }
    }

    pub fn all() -> Self {
        Strategy {
            election: Election::All,
            allocation: Allocation::All,
            seed: 0,
        }
    }

    pub fn random(seed: u64) -> Self {
        Strategy {
            election: Election::Random,
            allocation: Allocation::Random,
            seed,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GrammarMode {
    Nodeless,
    NodeAdding,
}

/// A grammar: label set, named productions, mode, and initial state.
#[derive(Clone)]
pub struct Grammar {
    label_set: BTreeSet<Label>,
    productions: Vec<Production>,
    mode: GrammarMode,
    initial: SimpleDigraph,
}

impl Grammar {
    pub fn new(
        productions: Vec<Production>,
        mode: GrammarMode,
        initial: SimpleDigraph,
    ) -> Result<Grammar, DeriveError> {
        let mut label_set = BTreeSet::new();
        for p in &productions {
            if mode == GrammarMode::Nodeless && !p.is_nodeless() {
                return Err(DeriveError::NodefulProduction(p.name().to_string()));
            }
            for slot in p.universe() {
                label_set.insert(slot.label.clone());
            }
        }
        for slot in initial.slots() {
            label_set.insert(slot.label.clone());
        }
        Ok(Grammar {
            label_set,
            productions,
            mode,
            initial,
        })
    }

    pub fn label_set(&self) -> &BTreeSet<Label> {
        &self.label_set
    }

    pub fn productions(&self) -> &[Production] {
        &self.productions
    }

    pub fn production(&self, name: &str) -> Option<&Production> {
        self.productions.iter().find(|p| p.name() == name)
    }

    pub fn mode(&self) -> GrammarMode {
        self.mode
    }

    pub fn initial(&self) -> &SimpleDigraph {
        &self.initial
    }

    /// Matches of every production against `g`, in grammar order. The
    /// per-production searches are independent; under the `parallel` feature
    /// they fan out and are merged back in grammar order.
    pub fn all_matches(&self, g: &SimpleDigraph) -> Vec<Vec<Match>> {
        #[cfg(feature = "parallel")]
        {
            self.productions
                .par_iter()
                .map(|p| enumerate_matches(p, g))
                .collect()
        }
        #[cfg(not(feature = "parallel"))]
        {
            self.all_matches_sequential(g)
        }
    }

    /// Sequential twin of [`Grammar::all_matches`]; same output.
    pub fn all_matches_sequential(&self, g: &SimpleDigraph) -> Vec<Vec<Match>> {
        self.productions
            .iter()
            .map(|p| enumerate_matches(p, g))
            .collect()
    }
}

/// One applicable rewrite found by [`step`].
pub struct StepResult {
    pub production: String,
    pub mat: Match,
    pub result: SimpleDigraph,
}

/// Candidate applications for one transition, per strategy. Empty means the
/// grammar has halted. Deterministic given (grammar, graph, strategy).
pub fn step(gr: &Grammar, g: &SimpleDigraph, st: &Strategy) -> Result<Vec<StepResult>, DeriveError> {
    let mut rng = SplitMix64::new(st.seed);
    let mut ids = IdGen::for_graph(g);
    let picks = elect(gr, g, st, &mut rng)?;
    let mut out = Vec::new();
    for (pi, m) in picks {
        let p = &gr.productions[pi];
        let (result, _) = derive_with(p, &m, g, &mut ids)?;
        out.push(StepResult {
            production: p.name().to_string(),
            mat: m,
            result,
        });
    }
    Ok(out)
}

fn elect(
    gr: &Grammar,
    g: &SimpleDigraph,
    st: &Strategy,
    rng: &mut SplitMix64,
) -> Result<Vec<(usize, Match)>, DeriveError> {
    let all = gr.all_matches(g);
    let applicable: Vec<usize> = (0..all.len()).filter(|&i| !all[i].is_empty()).collect();
    if applicable.is_empty() {
        return Ok(Vec::new());
    }

    let elected: Vec<usize> = match &st.election {
        Election::First => vec![applicable[0]],
        Election::All => applicable,
        Election::Random => vec![applicable[rng.below(applicable.len())]],
        Election::Priority(order) => {
            let mut chosen = None;
            for name in order {
                match gr.productions.iter().position(|p| p.name() == name) {
                    Some(i) if !all[i].is_empty() => {
                        chosen = Some(i);
                        break;
                    }
                    _ => {}
                }
            }
            match chosen {
                Some(i) => vec![i],
                None => vec![applicable[0]],
            }
        }
    };

    let mut picks = Vec::new();
    for i in elected {
        let ms = &all[i];
        match st.allocation {
            Allocation::First => picks.push((i, ms[0].clone())),
            Allocation::All => picks.extend(ms.iter().map(|m| (i, m.clone()))),
            Allocation::Random => picks.push((i, ms[rng.below(ms.len())].clone())),
        }
    }
    Ok(picks)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceStep {
    pub production: String,
    pub bindings: Vec<(String, String)>,
}

impl TraceStep {
    /// `<step> <production> <id:id ...>` line.
    pub fn render(&self, index: usize) -> String {
        let pairs: Vec<String> = self
            .bindings
            .iter()
            .map(|(a, b)| format!("{a}:{b}"))
            .collect();
        format!("{index} {} {}", self.production, pairs.join(" "))
    }
}

pub struct RunOutcome {
    pub final_graph: SimpleDigraph,
    pub trace: Vec<TraceStep>,
    /// True when no production was applicable; false when the step budget
    /// ran out first.
    pub halted: bool,
}

/// Iterate the transition from the grammar's initial state until halt or
/// budget. One application per step: the strategy's first elected pair.
pub fn run(gr: &Grammar, st: &Strategy, max_steps: usize) -> Result<RunOutcome, DeriveError> {
    let mut g = gr.initial.clone();
    let mut rng = SplitMix64::new(st.seed);
    let mut ids = IdGen::for_graph(&g);
    let mut trace = Vec::new();
    for _ in 0..max_steps {
        let picks = elect(gr, &g, st, &mut rng)?;
        let Some((pi, m)) = picks.into_iter().next() else {
            return Ok(RunOutcome {
                final_graph: g,
                trace,
                halted: true,
            });
        };
        let p = &gr.productions[pi];
        let (next, bindings) = derive_with(p, &m, &g, &mut ids)?;
        trace.push(TraceStep {
            production: p.name().to_string(),
            bindings,
        });
        g = next;
    }
    // Check whether anything is still applicable before reporting exhaustion.
    let halted = elect(gr, &g, st, &mut rng)?.is_empty();
    Ok(RunOutcome {
        final_graph: g,
        trace,
        halted,
    })
}
