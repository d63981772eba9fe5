//! Rule-sequence analysis over a shared node universe.
//!
//! A completed sequence fixes one slot universe, binds every production's
//! nodes into it, and pairs each step with a relabeling permutation. On top
//! of that sit the sequence analyses:
//!
//! - coherence in two independently computed forms (or/and operators versus
//!   the GF(2) product form), whose entrywise agreement is a tested property;
//! - the minimal and negative initial digraphs;
//! - sequence compatibility (well-formedness of intermediate states);
//! - the horizontal-determinism sweep over relabeling tuples;
//! - the closed-form sequence image, a pure GF(2) toggle sum;
//! - a stepwise reference executor, [`oracle_apply`], that validates all of
//!   the closed forms.
//!
//! Steps are stored and reported in application order: `steps[0]` fires
//! first.

use std::fmt;

use thiserror::Error;

use crate::boolalg::{
    range_delta, range_nabla, BoolMatrix, BoolVector, ComplexBoolMatrix, Permutation, RangeKind,
};
use crate::graph::{GraphError, SimpleDigraph, Slot};
use crate::production::Production;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AnalysisError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("production node `{0}` has no binding into the universe")]
    UnboundNode(String),
    #[error("production `{production}` cannot be completed into the universe: {reason}")]
    BadBinding { production: String, reason: String },
    #[error("sequence is incoherent: {0} conflicting positions")]
    Incoherent(usize),
    #[error("enumeration needs {needed} tuples, budget is {budget}")]
    BudgetExceeded { needed: u128, budget: u64 },
    #[error("application condition violated: {0}")]
    ConditionViolated(Condition),
}

/// The closed-form image's application conditions, in check order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Condition {
    Compatibility,
    Coherence,
    NegativeInitialPresent,
    MinimalInitialMissing,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Condition::Compatibility => "compatibility (W != 0)",
            Condition::Coherence => "coherence (C != 0)",
            Condition::NegativeInitialPresent => "negative initial digraph meets the host",
            Condition::MinimalInitialMissing => "minimal initial digraph not contained in the host",
        };
        f.write_str(s)
    }
}

/// One step: a production completed to the universe plus its relabeling.
#[derive(Clone)]
pub struct SequenceStep {
    pub production: Production,
    pub sigma: Permutation,
}

/// An ordered rule sequence over a shared, completed universe.
#[derive(Clone)]
pub struct CompletedSequence {
    universe: Vec<Slot>,
    steps: Vec<SequenceStep>,
}

impl CompletedSequence {
    /// Steps are given in application order and must already live in the
    /// universe dimension.
    pub fn new(universe: Vec<Slot>, steps: Vec<SequenceStep>) -> Self {
        for s in &steps {
            assert_eq!(s.production.dim(), universe.len(), "step not completed");
            assert_eq!(s.sigma.dim(), universe.len(), "sigma dimension");
        }
        CompletedSequence { universe, steps }
    }

    /// Bind productions into `universe` by explicit (production id ->
    /// universe id) pairs; ids missing from the pairs bind to the universe
    /// slot with the same id. Identity relabelings.
    pub fn bind(
        universe: Vec<Slot>,
        items: Vec<(&Production, &[(String, String)])>,
    ) -> Result<Self, AnalysisError> {
        let mut steps = Vec::new();
        for (p, pairs) in items {
            let completed = complete_into(p, &universe, pairs)?;
            steps.push(SequenceStep {
                sigma: Permutation::identity(universe.len()),
                production: completed,
            });
        }
        Ok(CompletedSequence { universe, steps })
    }

    pub fn universe(&self) -> &[Slot] {
        &self.universe
    }

    pub fn dim(&self) -> usize {
        self.universe.len()
    }

    pub fn steps(&self) -> &[SequenceStep] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn with_sigmas(&self, sigmas: &[Permutation]) -> CompletedSequence {
        assert_eq!(sigmas.len(), self.steps.len());
        CompletedSequence {
            universe: self.universe.clone(),
            steps: self
                .steps
                .iter()
                .zip(sigmas)
                .map(|(s, sigma)| SequenceStep {
                    production: s.production.clone(),
                    sigma: sigma.clone(),
                })
                .collect(),
        }
    }

    /// Nodeless sequences neither add nor delete nodes in any step.
    pub fn is_nodeless(&self) -> bool {
        self.steps.iter().all(|s| s.production.is_nodeless())
    }

    fn conjugated(&self) -> Vec<ConjParts> {
        self.steps
            .iter()
            .map(|s| ConjParts::of(&s.production, &s.sigma))
            .collect()
    }
}

/// Relocate a production into a larger universe along an id binding.
fn complete_into(
    p: &Production,
    universe: &[Slot],
    pairs: &[(String, String)],
) -> Result<Production, AnalysisError> {
    use crate::production::Mask;

    let n = universe.len();
    let find = |id: &str| universe.iter().position(|s| s.id == id);
    let mut place = Vec::with_capacity(p.dim());
    for slot in p.universe() {
        let target = pairs
            .iter()
            .find(|(from, _)| *from == slot.id)
            .map(|(_, to)| to.as_str())
            .unwrap_or(slot.id.as_str());
        let idx = find(target).ok_or_else(|| AnalysisError::UnboundNode(slot.id.clone()))?;
        if universe[idx].label != slot.label {
            return Err(AnalysisError::Graph(GraphError::LabelClash {
                left: slot.id.clone(),
                left_label: slot.label.to_string(),
                right: universe[idx].id.clone(),
                right_label: universe[idx].label.to_string(),
            }));
        }
        place.push(idx);
    }
    // Injectivity of the binding.
    {
        let mut seen = std::collections::BTreeSet::new();
        if !place.iter().all(|&i| seen.insert(i)) {
            return Err(AnalysisError::Graph(GraphError::NotInjective));
        }
    }

    let move_matrix = |m: &BoolMatrix| {
        let mut out = BoolMatrix::zeros(n);
        for (i, j) in m.ones_positions() {
            out.set(place[i], place[j], true);
        }
        out
    };
    let move_vector = |v: &BoolVector| {
        let mut out = BoolVector::zeros(n);
        for (i, &target) in place.iter().enumerate() {
            if v.get(i) {
                out.set(target, true);
            }
        }
        out
    };

    let lhs = SimpleDigraph::from_parts(
        universe.to_vec(),
        move_matrix(p.lhs().edges()),
        move_vector(p.lhs().nodes()),
    );
    Production::from_actions(
        p.name(),
        lhs,
        Mask {
            edges: move_matrix(&p.erase().edges),
            nodes: move_vector(&p.erase().nodes),
        },
        Mask {
            edges: move_matrix(&p.restock().edges),
            nodes: move_vector(&p.restock().nodes),
        },
    )
    .map_err(|e| AnalysisError::BadBinding {
        production: p.name().to_string(),
        reason: e.to_string(),
    })
}

/// Per-step matrices conjugated by the step's relabeling.
struct ConjParts {
    erase: BoolMatrix,
    restock: BoolMatrix,
    lhs: BoolMatrix,
    rhs: BoolMatrix,
    nihil: BoolMatrix,
    forbid: BoolMatrix,
    enabled: BoolMatrix,
    erase_nodes: BoolVector,
    restock_nodes: BoolVector,
    lhs_nodes: BoolVector,
}

impl ConjParts {
    fn of(p: &Production, sigma: &Permutation) -> ConjParts {
        ConjParts {
            erase: sigma.act_matrix(&p.erase().edges),
            restock: sigma.act_matrix(&p.restock().edges),
            lhs: sigma.act_matrix(p.lhs().edges()),
            rhs: sigma.act_matrix(p.rhs().edges()),
            nihil: sigma.act_matrix(p.nihilation()),
            forbid: sigma.act_matrix(p.forbidden_after()),
            enabled: sigma.act_matrix(&p.enabled_after()),
            erase_nodes: sigma.act_vector(&p.erase().nodes),
            restock_nodes: sigma.act_vector(&p.restock().nodes),
            lhs_nodes: sigma.act_vector(p.lhs().nodes()),
        }
    }
}

/// Coherence in or/and form. Returns the positive and negative conflict
/// matrices; the sequence is coherent when both are zero.
pub fn coherence_bool(s: &CompletedSequence) -> (BoolMatrix, BoolMatrix) {
    let parts = s.conjugated();
    let refs: Vec<&ConjParts> = parts.iter().collect();
    coherence_bool_ref(&refs, s.dim())
}

/// Coherence in GF(2) form: the same function computed through products and
/// sums with the unprimed range operators. Real part is the positive
/// conflict matrix, imaginary the negative; the parts may overlap, so the
/// result is a diagnostic value.
pub fn coherence_gf2(s: &CompletedSequence) -> ComplexBoolMatrix {
    let parts = s.conjugated();
    let dim = s.dim();
    let n = parts.len() as isize;
    let one = BoolMatrix::ones(dim);

    let factorized = |payload_a: &dyn Fn(usize) -> BoolMatrix,
                      payload_b: &dyn Fn(usize) -> BoolMatrix,
                      fwd: &dyn Fn(usize, usize) -> BoolMatrix,
                      bwd: &dyn Fn(usize, usize) -> BoolMatrix| {
        let mut acc = one.clone();
        for j in 0..parts.len() {
            let ji = j as isize;
            let nab = range_nabla(RangeKind::Gf2, dim, ji + 1, n - 1, |x, y| {
                fwd(x as usize, y as usize)
            });
            let del = range_delta(RangeKind::Gf2, dim, 0, ji - 1, |x, y| {
                bwd(x as usize, y as usize)
            });
            let a = payload_a(j).and(&nab);
            let b = payload_b(j).and(&del);
            let factor = one.xor(&a).xor(&b).xor(&a.and(&b));
            acc = acc.and(&factor);
        }
        one.xor(&acc)
    };

    let cpos = factorized(
        &|j| parts[j].rhs.clone(),
        &|j| parts[j].lhs.clone(),
        &|x, y| parts[x].erase.xor(&one).and(&parts[y].restock),
        &|x, y| parts[x].restock.xor(&one).and(&parts[y].erase),
    );
    let cneg = factorized(
        &|j| parts[j].forbid.clone(),
        &|j| parts[j].nihil.clone(),
        &|x, y| parts[x].restock.xor(&one).and(&parts[y].erase),
        &|x, y| parts[x].erase.xor(&one).and(&parts[y].restock),
    );
    ComplexBoolMatrix::from_parts(cpos, cneg)
}

/// The minimal and negative initial digraphs of a sequence, edges and nodes.
pub struct InitialDigraph {
    pub mid_edges: BoolMatrix,
    pub nid_edges: BoolMatrix,
    pub mid_nodes: BoolVector,
    pub nid_nodes: BoolVector,
}

/// Initial digraph without the coherence gate, for diagnostics and oracles.
pub fn initial_digraph_raw(s: &CompletedSequence) -> InitialDigraph {
    let parts = s.conjugated();
    let refs: Vec<&ConjParts> = parts.iter().collect();
    initial_digraph_ref(&refs, s.dim())
}

fn vector_nabla(
    dim: usize,
    n: usize,
    f: impl Fn(usize, usize) -> BoolVector,
) -> BoolVector {
    let mut acc = BoolVector::zeros(dim);
    for y in 0..n {
        let mut inner = BoolVector::ones(dim);
        for x in 0..=y {
            inner = inner.and(&f(x, y));
        }
        acc = acc.or(&inner);
    }
    acc
}

/// Checked initial digraph: errors on incoherent sequences.
pub fn initial_digraph(s: &CompletedSequence) -> Result<ComplexBoolMatrix, AnalysisError> {
    let (cpos, cneg) = coherence_bool(s);
    let conflicts = cpos.count_ones() + cneg.count_ones();
    if conflicts != 0 {
        return Err(AnalysisError::Incoherent(conflicts));
    }
    let init = initial_digraph_raw(s);
    Ok(ComplexBoolMatrix::from_parts(init.mid_edges, init.nid_edges))
}

/// The minimal initial digraph as a host graph over the sequence universe.
pub fn mid_graph(s: &CompletedSequence) -> SimpleDigraph {
    let init = initial_digraph_raw(s);
    SimpleDigraph::from_parts(s.universe.to_vec(), init.mid_edges, init.mid_nodes)
}

/// Sequence compatibility: zero iff no prefix forces a dangling
/// intermediate state. Positions touched by any edge action up to the
/// prefix end are exempt; the payload is the overlap of the prefix's
/// minimal and negative initial digraphs.
pub fn compatibility_w(s: &CompletedSequence) -> BoolMatrix {
    let parts = s.conjugated();
    let dim = s.dim();
    let mut prefix_overlap = Vec::with_capacity(parts.len());
    for y in 0..parts.len() {
        let refs: Vec<&ConjParts> = parts[..=y].iter().collect();
        let init = initial_digraph_ref(&refs, dim);
        prefix_overlap.push(init.mid_edges.and(&init.nid_edges));
    }
    range_nabla(RangeKind::Gf2, dim, 0, parts.len() as isize - 1, |x, y| {
        let px = &parts[x as usize];
        px.erase
            .not()
            .and(&px.restock.not())
            .and(&prefix_overlap[y as usize])
    })
}

/// Why the stepwise executor rejected a step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OracleReason {
    LhsMissing,
    NihilationPresent,
    NodeAlreadyPresent,
    Dangling,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleFailure {
    pub step: usize,
    pub reason: OracleReason,
}

impl fmt::Display for OracleFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "step {} failed: {:?}", self.step, self.reason)
    }
}

/// Stepwise reference executor at the fixed identification. Applies each
/// step in order, checking LHS presence, nihilation absence, node-addition
/// freshness, and simple-digraph closure of every intermediate state.
pub fn oracle_apply(s: &CompletedSequence, g: &SimpleDigraph) -> Result<SimpleDigraph, OracleFailure> {
    assert_eq!(g.dim(), s.dim(), "host not completed to the sequence universe");
    let mut current = g.clone();
    for (idx, step) in s.steps.iter().enumerate() {
        let parts = ConjParts::of(&step.production, &step.sigma);
        let fail = |reason| Err(OracleFailure { step: idx, reason });

        if !parts.lhs.and(&current.edges().not()).is_zero()
            || !parts.lhs_nodes.and(&current.nodes().not()).is_zero()
        {
            return fail(OracleReason::LhsMissing);
        }
        if !parts.nihil.and(current.edges()).is_zero() {
            return fail(OracleReason::NihilationPresent);
        }
        if !parts.restock_nodes.and(current.nodes()).is_zero() {
            return fail(OracleReason::NodeAlreadyPresent);
        }

        let edges = parts.restock.or(&parts.erase.not().and(current.edges()));
        let nodes = parts
            .restock_nodes
            .or(&parts.erase_nodes.not().and(current.nodes()));
        current = SimpleDigraph::from_parts(current.slots().to_vec(), edges, nodes);
        if !current.is_compatible() {
            return fail(OracleReason::Dangling);
        }
    }
    Ok(current)
}

/// Closed-form sequence image: after the four application conditions hold,
/// the result is the host xored with every step's relabeled toggle mask.
/// The swap sum acts through the toggle (imaginary) component; the all-ones
/// real parts carry no state change.
pub fn image_closed_form(
    s: &CompletedSequence,
    g: &SimpleDigraph,
) -> Result<SimpleDigraph, AnalysisError> {
    assert_eq!(g.dim(), s.dim(), "host not completed to the sequence universe");
    if !compatibility_w(s).is_zero() {
        return Err(AnalysisError::ConditionViolated(Condition::Compatibility));
    }
    let c = coherence_gf2(s);
    if !c.is_zero() {
        return Err(AnalysisError::ConditionViolated(Condition::Coherence));
    }
    let init = initial_digraph_raw(s);
    if !init.nid_edges.and(g.edges()).is_zero() || !init.nid_nodes.and(g.nodes()).is_zero() {
        return Err(AnalysisError::ConditionViolated(Condition::NegativeInitialPresent));
    }
    if !init.mid_edges.and(&g.edges().not()).is_zero()
        || !init.mid_nodes.and(&g.nodes().not()).is_zero()
    {
        return Err(AnalysisError::ConditionViolated(Condition::MinimalInitialMissing));
    }

    let mut edges = g.edges().clone();
    let mut nodes = g.nodes().clone();
    for step in &s.steps {
        let toggle = step.sigma.act_matrix(step.production.to_swap().toggle());
        edges = edges.xor(&toggle);
        let node_toggle = step
            .sigma
            .act_vector(&step.production.erase().nodes.or(&step.production.restock().nodes));
        nodes = nodes.xor(&node_toggle);
    }
    Ok(SimpleDigraph::from_parts(g.slots().to_vec(), edges, nodes))
}

/// Full analysis report for one sequence.
pub struct AnalysisReport {
    pub text: String,
    pub coherent: bool,
    pub verdict: DeterminismClass,
    pub witnesses: usize,
}

/// Render every sequence analysis as structured text: the coherence
/// matrices in both forms, the initial digraphs (when defined), the
/// compatibility matrix, and a machine-readable
/// `verdict=<class> witnesses=<count>` summary line. Condition matrices are
/// rendered in the graph text format over the sequence universe.
pub fn render_report(
    s: &CompletedSequence,
    host: Option<&SimpleDigraph>,
    budget: u64,
) -> Result<AnalysisReport, AnalysisError> {
    use crate::graph::render_structure;
    use std::fmt::Write;

    let mut text = String::new();
    let (cp, cn) = coherence_bool(s);
    let c = coherence_gf2(s);
    let coherent = cp.is_zero() && cn.is_zero();

    let mut section = |title: &str, m: &BoolMatrix| {
        writeln!(text, "{title}:").unwrap();
        text.push_str(&render_structure(m, s.universe()));
    };
    section("coherence-positive", &cp);
    section("coherence-negative", &cn);
    section("coherence-gf2-positive", &c.real);
    section("coherence-gf2-negative", &c.imag);

    if coherent {
        let init = initial_digraph_raw(s);
        let mut section = |title: &str, m: &BoolMatrix| {
            writeln!(text, "{title}:").unwrap();
            text.push_str(&render_structure(m, s.universe()));
        };
        section("initial-digraph-minimal", &init.mid_edges);
        section("initial-digraph-negative", &init.nid_edges);
    } else {
        writeln!(text, "initial-digraph: skipped, sequence is incoherent").unwrap();
    }

    let w = compatibility_w(s);
    writeln!(text, "compatibility:").unwrap();
    text.push_str(&crate::graph::render_structure(&w, s.universe()));

    let verdict = classify_determinism(s, host, budget)?;
    writeln!(
        text,
        "verdict={} witnesses={}",
        verdict.class,
        verdict.witnesses.len()
    )
    .unwrap();
    Ok(AnalysisReport {
        text,
        coherent,
        verdict: verdict.class,
        witnesses: verdict.witnesses.len(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DeterminismClass {
    NotApplicable,
    Deterministic,
    NonDeterministic,
}

impl fmt::Display for DeterminismClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            DeterminismClass::NotApplicable => "not-applicable",
            DeterminismClass::Deterministic => "deterministic",
            DeterminismClass::NonDeterministic => "non-deterministic",
        };
        f.write_str(s)
    }
}

#[derive(Debug)]
pub struct DeterminismVerdict {
    pub class: DeterminismClass,
    /// Relabeling tuples (one permutation per step) keeping the sequence
    /// coherent, in canonical enumeration order.
    pub witnesses: Vec<Vec<Permutation>>,
    pub examined: u64,
}

/// All permutations of the universe respecting the label partition: the
/// product of one symmetric group per label class. Enumerated in a fixed
/// order: label classes by label name, lexicographic within each class.
pub fn label_preserving_group(universe: &[Slot]) -> Vec<Permutation> {
    use std::collections::BTreeMap;
    let mut classes: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, slot) in universe.iter().enumerate() {
        classes.entry(slot.label.as_str()).or_default().push(i);
    }
    let mut result: Vec<Vec<usize>> = vec![(0..universe.len()).collect()];
    for indices in classes.values() {
        let perms = permutations_lex(indices.len());
        let mut next = Vec::with_capacity(result.len() * perms.len());
        for base in &result {
            for perm in &perms {
                let mut map = base.clone();
                for (slot_pos, &src) in perm.iter().enumerate() {
                    map[indices[slot_pos]] = indices[src];
                }
                next.push(map);
            }
        }
        result = next;
    }
    result.into_iter().map(Permutation::new).collect()
}

/// All permutations of `0..n` in lexicographic order.
fn permutations_lex(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut items: Vec<usize> = (0..n).collect();
    fn rec(prefix: &mut Vec<usize>, rest: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if rest.is_empty() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..rest.len() {
            let x = rest.remove(i);
            prefix.push(x);
            rec(prefix, rest, out);
            prefix.pop();
            rest.insert(i, x);
        }
    }
    rec(&mut Vec::new(), &mut items, &mut out);
    out
}

/// Sweep every relabeling tuple and classify. Tuples are enumerated with
/// the first step as the most significant digit, so witness order is
/// reproducible. With a host, witnesses must additionally satisfy the
/// initial-digraph containment conditions against it.
pub fn classify_determinism(
    s: &CompletedSequence,
    host: Option<&SimpleDigraph>,
    budget: u64,
) -> Result<DeterminismVerdict, AnalysisError> {
    classify_impl(s, host, budget, cfg!(feature = "parallel"))
}

/// Sequential twin of [`classify_determinism`]; identical output.
pub fn classify_determinism_sequential(
    s: &CompletedSequence,
    host: Option<&SimpleDigraph>,
    budget: u64,
) -> Result<DeterminismVerdict, AnalysisError> {
    classify_impl(s, host, budget, false)
}

fn classify_impl(
    s: &CompletedSequence,
    host: Option<&SimpleDigraph>,
    budget: u64,
    parallel: bool,
) -> Result<DeterminismVerdict, AnalysisError> {
    let group = label_preserving_group(&s.universe);
    let steps = s.len();
    let total: u128 = (group.len() as u128)
        .checked_pow(steps as u32)
        .unwrap_or(u128::MAX);
    if total > budget as u128 {
        return Err(AnalysisError::BudgetExceeded { needed: total, budget });
    }
    let total = total as u64;

    // Conjugates of each step under each group element, computed once.
    let conj: Vec<Vec<ConjParts>> = s
        .steps
        .iter()
        .map(|step| {
            group
                .iter()
                .map(|sigma| ConjParts::of(&step.production, sigma))
                .collect()
        })
        .collect();

    let dim = s.dim();
    let eval = |tuple_index: u64| -> Option<Vec<usize>> {
        let mut digits = vec![0usize; steps];
        let mut rest = tuple_index;
        for d in (0..steps).rev() {
            digits[d] = (rest % group.len() as u64) as usize;
            rest /= group.len() as u64;
        }
        let parts: Vec<&ConjParts> = digits.iter().enumerate().map(|(i, &g)| &conj[i][g]).collect();
        let (cpos, cneg) = coherence_bool_ref(&parts, dim);
        if !cpos.is_zero() || !cneg.is_zero() {
            return None;
        }
        if let Some(g) = host {
            let init = initial_digraph_ref(&parts, dim);
            if !init.nid_edges.and(g.edges()).is_zero()
                || !init.mid_edges.and(&g.edges().not()).is_zero()
                || !init.nid_nodes.and(g.nodes()).is_zero()
                || !init.mid_nodes.and(&g.nodes().not()).is_zero()
            {
                return None;
            }
        }
        Some(digits)
    };

    let witness_digits: Vec<Vec<usize>> = if parallel {
        #[cfg(feature = "parallel")]
        {
            (0..total).into_par_iter().filter_map(eval).collect()
        }
        #[cfg(not(feature = "parallel"))]
        {
            (0..total).filter_map(eval).collect()
        }
    } else {
        (0..total).filter_map(eval).collect()
    };

    let witnesses: Vec<Vec<Permutation>> = witness_digits
        .into_iter()
        .map(|digits| digits.into_iter().map(|g| group[g].clone()).collect())
        .collect();
    let class = match witnesses.len() {
        0 => DeterminismClass::NotApplicable,
        1 => DeterminismClass::Deterministic,
        _ => DeterminismClass::NonDeterministic,
    };
    Ok(DeterminismVerdict {
        class,
        witnesses,
        examined: total,
    })
}

fn coherence_bool_ref(parts: &[&ConjParts], dim: usize) -> (BoolMatrix, BoolMatrix) {
    // Same as coherence_bool_parts but over borrowed steps.
    let n = parts.len() as isize;
    let mut cpos = BoolMatrix::zeros(dim);
    let mut cneg = BoolMatrix::zeros(dim);
    for j in 0..parts.len() {
        let ji = j as isize;
        let later_add = range_nabla(RangeKind::BooleanPrimed, dim, ji + 1, n - 1, |x, y| {
            parts[x as usize]
                .erase
                .not()
                .and(&parts[y as usize].restock)
        });
        let earlier_del = range_delta(RangeKind::BooleanPrimed, dim, 0, ji - 1, |x, y| {
            parts[y as usize]
                .erase
                .and(&parts[x as usize].restock.not())
        });
        cpos = cpos
            .or(&parts[j].rhs.and(&later_add))
            .or(&parts[j].lhs.and(&earlier_del));
        let later_del = range_nabla(RangeKind::BooleanPrimed, dim, ji + 1, n - 1, |x, y| {
            parts[x as usize]
                .restock
                .not()
                .and(&parts[y as usize].erase)
        });
        let earlier_add = range_delta(RangeKind::BooleanPrimed, dim, 0, ji - 1, |x, y| {
            parts[x as usize]
                .erase
                .not()
                .and(&parts[y as usize].restock)
        });
        cneg = cneg
            .or(&parts[j].forbid.and(&later_del))
            .or(&parts[j].nihil.and(&earlier_add));
    }
    (cpos, cneg)
}

fn initial_digraph_ref(parts: &[&ConjParts], dim: usize) -> InitialDigraph {
    let n = parts.len() as isize;
    let mid_edges = range_nabla(RangeKind::Gf2, dim, 0, n - 1, |x, y| {
        parts[x as usize]
            .restock
            .not()
            .and(&parts[y as usize].lhs)
    });
    let nid_edges = range_nabla(RangeKind::Gf2, dim, 0, n - 1, |x, y| {
        let px = parts[x as usize];
        px.erase
            .not()
            .and(&px.enabled.not())
            .and(&parts[y as usize].nihil)
    });
    let mid_nodes = vector_nabla(dim, parts.len(), |x, y| {
        parts[x].restock_nodes.not().and(&parts[y].lhs_nodes)
    });
    let nid_nodes = vector_nabla(dim, parts.len(), |x, y| {
        parts[x].erase_nodes.not().and(&parts[y].restock_nodes)
    });
    InitialDigraph {
        mid_edges,
        nid_edges,
        mid_nodes,
        nid_nodes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boolalg::SplitMix64;
    use crate::production::Mask;

    /// Nodeless edge production over an all-present uniform universe.
    pub(crate) fn edge_prod(
        n: usize,
        lhs: &[(usize, usize)],
        erase: &[(usize, usize)],
        restock: &[(usize, usize)],
    ) -> Production {
        let mut l = BoolMatrix::zeros(n);
        for &(i, j) in lhs {
            l.set(i, j, true);
        }
        for &(i, j) in erase {
            l.set(i, j, true);
        }
        let mut e = BoolMatrix::zeros(n);
        for &(i, j) in erase {
            e.set(i, j, true);
        }
        let mut r = BoolMatrix::zeros(n);
        for &(i, j) in restock {
            r.set(i, j, true);
        }
        let g = SimpleDigraph::from_parts(
            SimpleDigraph::uniform(n, "T").slots().to_vec(),
            l,
            BoolVector::ones(n),
        );
        Production::from_actions(
            "p",
            g,
            Mask { edges: e, nodes: BoolVector::zeros(n) },
            Mask { edges: r, nodes: BoolVector::zeros(n) },
        )
        .unwrap()
    }

    fn seq(n: usize, prods: Vec<Production>) -> CompletedSequence {
        let universe = SimpleDigraph::uniform(n, "T").slots().to_vec();
        let steps = prods
            .into_iter()
            .map(|production| SequenceStep {
                sigma: Permutation::identity(n),
                production,
            })
            .collect();
        CompletedSequence::new(universe, steps)
    }

    pub(crate) fn random_nodeless_prod(rng: &mut SplitMix64, n: usize) -> Production {
        let mut lhs = Vec::new();
        let mut erase = Vec::new();
        let mut restock = Vec::new();
        for i in 0..n {
            for j in 0..n {
                match rng.below(10) {
                    0 => erase.push((i, j)),
                    1 => restock.push((i, j)),
                    2 | 3 => lhs.push((i, j)),
                    _ => {}
                }
            }
        }
        edge_prod(n, &lhs, &erase, &restock)
    }

    #[test]
    fn single_production_coherent() {
        let p = edge_prod(2, &[(0, 1)], &[(0, 1)], &[(1, 0)]);
        let s = seq(2, vec![p]);
        let (cp, cn) = coherence_bool(&s);
        assert!(cp.is_zero() && cn.is_zero());
        assert!(coherence_gf2(&s).is_zero());
    }

    #[test]
    fn double_addition_is_incoherent() {
        let p1 = edge_prod(2, &[], &[], &[(0, 1)]);
        let p2 = edge_prod(2, &[], &[], &[(0, 1)]);
        let s = seq(2, vec![p1, p2]);
        let (cp, cn) = coherence_bool(&s);
        assert!(!cn.is_zero(), "second addition finds the edge present");
        assert!(cn.get(0, 1));
        let _ = cp;
        // Stepwise confirmation from the minimal initial digraph.
        assert!(oracle_apply(&s, &mid_graph(&s)).is_err());
    }

    #[test]
    fn add_then_delete_is_coherent() {
        let p1 = edge_prod(2, &[], &[], &[(0, 1)]);
        let p2 = edge_prod(2, &[], &[(0, 1)], &[]);
        let s = seq(2, vec![p1, p2]);
        let (cp, cn) = coherence_bool(&s);
        assert!(cp.is_zero() && cn.is_zero());
        assert!(oracle_apply(&s, &mid_graph(&s)).is_ok());
    }

    #[test]
    fn double_deletion_flagged_in_positive_part() {
        let p1 = edge_prod(2, &[], &[(0, 1)], &[]);
        let p2 = edge_prod(2, &[], &[(0, 1)], &[]);
        let s = seq(2, vec![p1, p2]);
        let c = coherence_gf2(&s);
        assert!(!c.real.is_zero(), "second deletion finds nothing to delete");
        assert!(oracle_apply(&s, &mid_graph(&s)).is_err());
    }

    #[test]
    fn bool_and_gf2_coherence_agree_randomly() {
        let mut rng = SplitMix64::new(5);
        for _ in 0..300 {
            let n = 1 + rng.below(4);
            let len = 1 + rng.below(4);
            let universe = SimpleDigraph::uniform(n, "T").slots().to_vec();
            let group = label_preserving_group(&universe);
            let steps: Vec<SequenceStep> = (0..len)
                .map(|_| SequenceStep {
                    production: random_nodeless_prod(&mut rng, n),
                    sigma: group[rng.below(group.len())].clone(),
                })
                .collect();
            let s = CompletedSequence::new(universe, steps);
            let (cp, cn) = coherence_bool(&s);
            let c = coherence_gf2(&s);
            assert_eq!(cp, c.real);
            assert_eq!(cn, c.imag);
        }
    }

    #[test]
    fn initial_digraph_of_single_production() {
        let p = edge_prod(3, &[(0, 1), (1, 2)], &[(1, 2)], &[(2, 0)]);
        let s = seq(3, vec![p.clone()]);
        let m = initial_digraph(&s).unwrap();
        assert_eq!(&m.real, p.lhs().edges());
        assert_eq!(&m.imag, p.nihilation());
    }

    #[test]
    fn initial_digraph_add_then_delete_goes_negative() {
        // First add the edge, then delete it: it must be absent initially.
        let add = edge_prod(2, &[], &[], &[(0, 1)]);
        let del = edge_prod(2, &[], &[(0, 1)], &[]);
        let s = seq(2, vec![add, del]);
        let m = initial_digraph(&s).unwrap();
        assert!(!m.real.get(0, 1), "needed only after the add");
        assert!(m.imag.get(0, 1), "present at start would block the add");
    }

    #[test]
    fn incoherent_sequence_has_no_initial_digraph() {
        let p1 = edge_prod(2, &[], &[], &[(0, 1)]);
        let p2 = edge_prod(2, &[], &[], &[(0, 1)]);
        let s = seq(2, vec![p1, p2]);
        assert!(matches!(initial_digraph(&s), Err(AnalysisError::Incoherent(_))));
    }

    #[test]
    fn nodeless_sequences_always_compatible() {
        let mut rng = SplitMix64::new(31);
        for _ in 0..100 {
            let n = 1 + rng.below(3);
            let len = 1 + rng.below(3);
            let prods: Vec<Production> =
                (0..len).map(|_| random_nodeless_prod(&mut rng, n)).collect();
            let s = seq(n, prods);
            assert!(compatibility_w(&s).is_zero());
        }
    }

    #[test]
    fn dangling_prefix_detected_by_compatibility() {
        use crate::graph::GraphBuilder;
        // Step 1 requires edge (u, v); step 2 deletes node v without deleting
        // the edge. The overlap of prefix initial digraphs flags (u, v).
        let mut b = GraphBuilder::new();
        b.node("u", "T").unwrap();
        b.node("v", "T").unwrap();
        let mut l1 = b.finish();
        l1 = l1.modified(&[(0, 1)], &[]);
        let keep = Production::from_actions("keep", l1, Mask::zeros(2), Mask::zeros(2)).unwrap();

        let mut b = GraphBuilder::new();
        b.node("u", "T").unwrap();
        b.node("v", "T").unwrap();
        let l2 = b.finish();
        let mut del_nodes = BoolVector::zeros(2);
        del_nodes.set(1, true);
        let kill = Production::from_actions(
            "kill",
            l2,
            Mask { edges: BoolMatrix::zeros(2), nodes: del_nodes },
            Mask::zeros(2),
        )
        .unwrap();

        let universe = keep.universe().to_vec();
        let s = CompletedSequence::new(
            universe,
            vec![
                SequenceStep { production: keep, sigma: Permutation::identity(2) },
                SequenceStep { production: kill, sigma: Permutation::identity(2) },
            ],
        );
        let (cp, cn) = coherence_bool(&s);
        assert!(cp.is_zero() && cn.is_zero(), "sequence is coherent");
        let w = compatibility_w(&s);
        assert!(w.get(0, 1), "the kept edge dangles when v goes away");
    }

    #[test]
    fn oracle_on_empty_sequence() {
        let s = seq(2, vec![]);
        let g = SimpleDigraph::uniform(2, "T").modified(&[(1, 0)], &[]);
        assert_eq!(oracle_apply(&s, &g).unwrap(), g);
    }

    #[test]
    fn coherence_iff_oracle_applies_from_mid() {
        let mut rng = SplitMix64::new(99);
        let mut coherent_seen = 0;
        let mut incoherent_seen = 0;
        for _ in 0..2000 {
            let n = 1 + rng.below(3);
            let len = 1 + rng.below(3);
            let prods: Vec<Production> =
                (0..len).map(|_| random_nodeless_prod(&mut rng, n)).collect();
            let s = seq(n, prods);
            let (cp, cn) = coherence_bool(&s);
            let coherent = cp.is_zero() && cn.is_zero();
            let applied = oracle_apply(&s, &mid_graph(&s)).is_ok();
            assert_eq!(coherent, applied, "mismatch on {s:?}");
            if coherent {
                coherent_seen += 1;
            } else {
                incoherent_seen += 1;
            }
        }
        assert!(coherent_seen > 100 && incoherent_seen > 100, "both sides exercised");
    }

    #[test]
    fn image_closed_form_matches_oracle() {
        let mut rng = SplitMix64::new(123);
        let mut accepted = 0;
        let mut rejected_mismatch = 0;
        while accepted < 300 {
            let n = 1 + rng.below(3);
            let len = 1 + rng.below(3);
            let prods: Vec<Production> =
                (0..len).map(|_| random_nodeless_prod(&mut rng, n)).collect();
            let s = seq(n, prods);
            let init = initial_digraph_raw(&s);
            // Host: the minimal initial digraph plus noise outside the
            // negative initial digraph.
            let mut host = mid_graph(&s);
            let mut extra = Vec::new();
            for i in 0..n {
                for j in 0..n {
                    if rng.bool_with(1, 4) && !init.nid_edges.get(i, j) {
                        extra.push((i, j));
                    }
                }
            }
            host = host.modified(&extra, &[]);
            let mut all_present = host.clone();
            for i in 0..n {
                all_present = all_present.with_presence(i, true);
            }
            match image_closed_form(&s, &all_present) {
                Ok(image) => {
                    let stepped = oracle_apply(&s, &all_present).expect("conditions held");
                    assert_eq!(image, stepped);
                    accepted += 1;
                }
                Err(_) => {
                    rejected_mismatch += 1;
                    assert!(rejected_mismatch < 100_000);
                }
            }
        }
    }

    #[test]
    fn image_closed_form_reports_missing_lhs() {
        let p = edge_prod(2, &[(0, 1)], &[], &[(1, 0)]);
        let s = seq(2, vec![p]);
        let host = SimpleDigraph::uniform(2, "T");
        let err = image_closed_form(&s, &host).unwrap_err();
        assert_eq!(
            err,
            AnalysisError::ConditionViolated(Condition::MinimalInitialMissing)
        );
        assert!(matches!(
            oracle_apply(&s, &host),
            Err(OracleFailure { reason: OracleReason::LhsMissing, .. })
        ));
    }

    #[test]
    fn identity_sequence_image_is_host() {
        let g = SimpleDigraph::uniform(2, "T").modified(&[(0, 1)], &[]);
        let noop = edge_prod(2, &[], &[], &[]);
        let s = seq(2, vec![noop.clone(), noop]);
        let image = image_closed_form(&s, &g).unwrap();
        assert_eq!(image, g);
    }

    #[test]
    fn label_group_is_product_of_class_factorials() {
        use crate::graph::Slot;
        let universe = vec![
            Slot::new("a", "T"),
            Slot::new("b", "T"),
            Slot::new("c", "U"),
            Slot::new("d", "U"),
            Slot::new("e", "U"),
        ];
        let group = label_preserving_group(&universe);
        assert_eq!(group.len(), 2 * 6);
        let labels: Vec<_> = universe.iter().map(|s| s.label.clone()).collect();
        for g in &group {
            assert!(g.preserves_labels(&labels));
        }
        // Canonical order starts from the identity.
        assert!(group[0].is_identity());
    }

    #[test]
    fn determinism_trivial_cases() {
        // Distinct labels: the group is trivial, so never non-deterministic.
        let mut b = crate::graph::GraphBuilder::new();
        b.node("x", "A").unwrap();
        b.node("y", "B").unwrap();
        let g = b.finish();
        let p = Production::from_actions(
            "p",
            g.modified(&[(0, 1)], &[]),
            Mask::zeros(2),
            Mask::zeros(2),
        )
        .unwrap();
        let s = CompletedSequence::new(
            p.universe().to_vec(),
            vec![SequenceStep { production: p, sigma: Permutation::identity(2) }],
        );
        let v = classify_determinism(&s, None, 1_000).unwrap();
        assert_eq!(v.class, DeterminismClass::Deterministic);
        assert_eq!(v.examined, 1);

        // Empty sequence: the single empty tuple is coherent.
        let empty = CompletedSequence::new(vec![], vec![]);
        let v = classify_determinism(&empty, None, 10).unwrap();
        assert_eq!(v.class, DeterminismClass::Deterministic);
    }

    #[test]
    fn determinism_witnesses_match_oracle_enumeration() {
        let mut rng = SplitMix64::new(201);
        for _ in 0..40 {
            let n = 2 + rng.below(3);
            let len = 1 + rng.below(2);
            let prods: Vec<Production> =
                (0..len).map(|_| random_nodeless_prod(&mut rng, n)).collect();
            let s = seq(n, prods);
            let verdict = classify_determinism(&s, None, 1_000_000).unwrap();
            // Brute force: a tuple is a witness iff the relabeled sequence
            // applies stepwise from its own minimal initial digraph.
            let group = label_preserving_group(s.universe());
            let mut expected = Vec::new();
            let mut digits = vec![0usize; s.len()];
            loop {
                let sigmas: Vec<Permutation> =
                    digits.iter().map(|&d| group[d].clone()).collect();
                let affine = s.with_sigmas(&sigmas);
                if oracle_apply(&affine, &mid_graph(&affine)).is_ok() {
                    expected.push(sigmas);
                }
                let mut k = s.len();
                loop {
                    if k == 0 {
                        break;
                    }
                    k -= 1;
                    digits[k] += 1;
                    if digits[k] < group.len() {
                        break;
                    }
                    digits[k] = 0;
                }
                if digits.iter().all(|&d| d == 0) {
                    break;
                }
            }
            assert_eq!(verdict.witnesses.len(), expected.len());
            for (w, e) in verdict.witnesses.iter().zip(&expected) {
                for (a, b) in w.iter().zip(e) {
                    assert_eq!(a.as_slice(), b.as_slice());
                }
            }
        }
    }

    #[test]
    fn determinism_budget_enforced() {
        let s = seq(4, vec![edge_prod(4, &[], &[], &[]); 3]);
        let err = classify_determinism(&s, None, 100).unwrap_err();
        assert!(matches!(err, AnalysisError::BudgetExceeded { .. }));
    }

    #[test]
    fn parallel_and_sequential_classification_agree() {
        let mut rng = SplitMix64::new(303);
        let n = 3;
        let prods: Vec<Production> = (0..2).map(|_| random_nodeless_prod(&mut rng, n)).collect();
        let s = seq(n, prods);
        let a = classify_determinism(&s, None, 1_000_000).unwrap();
        let b = classify_determinism_sequential(&s, None, 1_000_000).unwrap();
        assert_eq!(a.class, b.class);
        assert_eq!(a.witnesses.len(), b.witnesses.len());
        for (x, y) in a.witnesses.iter().zip(&b.witnesses) {
            for (p, q) in x.iter().zip(y) {
                assert_eq!(p.as_slice(), q.as_slice());
            }
        }
    }

    #[test]
    fn determinism_with_host_restricts_witnesses() {
        // Same-label two-node universe; rule needs edge (0, 1).
        let p = edge_prod(2, &[(0, 1)], &[], &[]);
        let s = seq(2, vec![p]);
        let without = classify_determinism(&s, None, 1_000).unwrap();
        assert_eq!(without.class, DeterminismClass::NonDeterministic);
        // Host has only (0, 1): the flipped identification needs (1, 0).
        let host = SimpleDigraph::uniform(2, "T").modified(&[(0, 1)], &[]);
        let with = classify_determinism(&s, Some(&host), 1_000).unwrap();
        assert_eq!(with.class, DeterminismClass::Deterministic);
        assert!(with.witnesses[0][0].is_identity());
        // And the witness set is exactly the oracle-applicable set.
        let group = label_preserving_group(s.universe());
        for sigma in &group {
            let affine = s.with_sigmas(std::slice::from_ref(sigma));
            let ok = oracle_apply(&affine, &host).is_ok();
            let listed = with
                .witnesses
                .iter()
                .any(|w| w[0].as_slice() == sigma.as_slice());
            assert_eq!(ok, listed);
        }
    }

    impl fmt::Debug for CompletedSequence {
        fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            writeln!(f, "CompletedSequence(dim {}, {} steps)", self.dim(), self.len())?;
            for (i, st) in self.steps.iter().enumerate() {
                writeln!(
                    f,
                    "  step {i}: e={:?} r={:?} L={:?}",
                    st.production.erase().edges.ones_positions(),
                    st.production.restock().edges.ones_positions(),
                    st.production.lhs().edges().ones_positions(),
                )?;
            }
            Ok(())
        }
    }
}
