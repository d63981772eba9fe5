//! Labeled simple digraphs and the structural operations on them.
//!
//! A graph is an adjacency matrix plus a node presence vector over a fixed
//! slot universe. Every slot carries a stable external id and a label, even
//! when its presence bit is 0: completion introduces exactly such "known but
//! absent" slots, and complements flip presence wholesale. Compatibility
//! (no edge touching an absent node) is checked on demand, never enforced at
//! construction, because negations and complements are legitimate structures
//! that fail it.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::boolalg::{BoolMatrix, BoolVector};
use crate::text::{expect_args, Lines, ParseError};

/// Node label drawn from a grammar's finite label set.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Label(String);

impl Label {
    pub fn new(s: impl Into<String>) -> Self {
        let s = s.into();
        assert!(!s.is_empty(), "labels must be nonempty");
        Label(s)
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Label({})", self.0)
    }
}

impl From<&str> for Label {
    fn from(s: &str) -> Self {
        Label::new(s)
    }
}

/// One position of the node universe: stable id plus label.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Slot {
    pub id: String,
    pub label: Label,
}

impl Slot {
    pub fn new(id: impl Into<String>, label: impl Into<Label>) -> Self {
        Slot {
            id: id.into(),
            label: label.into(),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("duplicate node id `{0}`")]
    DuplicateId(String),
    #[error("unknown node id `{0}`")]
    UnknownId(String),
    #[error("label clash identifying `{left}` ({left_label}) with `{right}` ({right_label})")]
    LabelClash {
        left: String,
        left_label: String,
        right: String,
        right_label: String,
    },
    #[error("correspondence is not an injective partial function")]
    NotInjective,
    #[error("correspondence endpoint `{0}` is not a present node")]
    AbsentEndpoint(String),
    #[error("node index {0} out of range")]
    BadIndex(usize),
}

/// A labeled simple digraph (or structure) over a slot universe.
#[derive(Clone, PartialEq, Eq)]
pub struct SimpleDigraph {
    edges: BoolMatrix,
    nodes: BoolVector,
    slots: Vec<Slot>,
}

impl SimpleDigraph {
    pub fn empty() -> Self {
        SimpleDigraph {
            edges: BoolMatrix::zeros(0),
            nodes: BoolVector::zeros(0),
            slots: Vec::new(),
        }
    }

    /// Assemble from parts. Panics on mismatched dimensions or duplicate ids.
    pub fn from_parts(slots: Vec<Slot>, edges: BoolMatrix, nodes: BoolVector) -> Self {
        assert_eq!(slots.len(), edges.dim(), "slots vs edges dimension");
        assert_eq!(slots.len(), nodes.dim(), "slots vs nodes dimension");
        let mut seen = std::collections::BTreeSet::new();
        for s in &slots {
            assert!(seen.insert(&s.id), "duplicate slot id {}", s.id);
        }
        SimpleDigraph { edges, nodes, slots }
    }

    /// All-present graph with `n` nodes of one label and ids `0..n-1`.
    pub fn uniform(n: usize, label: impl Into<Label>) -> Self {
        let label = label.into();
        let slots = (0..n).map(|i| Slot::new(i.to_string(), label.clone())).collect();
        SimpleDigraph::from_parts(slots, BoolMatrix::zeros(n), BoolVector::ones(n))
    }

    pub fn builder() -> GraphBuilder {
        GraphBuilder::new()
    }

    pub fn dim(&self) -> usize {
        self.slots.len()
    }

    pub fn edges(&self) -> &BoolMatrix {
        &self.edges
    }

    pub fn nodes(&self) -> &BoolVector {
        &self.nodes
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    pub fn label_of(&self, i: usize) -> &Label {
        &self.slots[i].label
    }

    pub fn id_of(&self, i: usize) -> &str {
        &self.slots[i].id
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.slots.iter().position(|s| s.id == id)
    }

    pub fn present(&self, i: usize) -> bool {
        self.nodes.get(i)
    }

    pub fn edge(&self, i: usize, j: usize) -> bool {
        self.edges.get(i, j)
    }

    pub fn labels(&self) -> Vec<Label> {
        self.slots.iter().map(|s| s.label.clone()).collect()
    }

    /// No edge may touch an absent node: `|| (M or M^t) . nV ||_1 = 0`.
    pub fn is_compatible(&self) -> bool {
        let m_or_mt = self.edges.or(&self.edges.transpose());
        !m_or_mt.matvec(&self.nodes.not()).any()
    }

    /// Copy with the given edge bits set and cleared. Out-of-range panics.
    pub fn modified(&self, set: &[(usize, usize)], clear: &[(usize, usize)]) -> SimpleDigraph {
        let mut edges = self.edges.clone();
        for &(i, j) in set {
            edges.set(i, j, true);
        }
        for &(i, j) in clear {
            edges.set(i, j, false);
        }
        SimpleDigraph {
            edges,
            nodes: self.nodes.clone(),
            slots: self.slots.clone(),
        }
    }

    pub fn with_presence(&self, i: usize, present: bool) -> SimpleDigraph {
        let mut nodes = self.nodes.clone();
        nodes.set(i, present);
        SimpleDigraph {
            edges: self.edges.clone(),
            nodes,
            slots: self.slots.clone(),
        }
    }

    /// Canonical text dump: nodes sorted by id, then edges lexicographically
    /// by (source id, target id). Only present nodes and their edges are
    /// representable; call sites that deal in structures render matrices
    /// through [`render_structure`] instead.
    pub fn dump(&self) -> String {
        let mut order: Vec<usize> = (0..self.dim()).filter(|&i| self.present(i)).collect();
        order.sort_by(|&a, &b| self.slots[a].id.cmp(&self.slots[b].id));
        let mut out = String::new();
        for &i in &order {
            out.push_str(&format!("node {} {}\n", self.slots[i].id, self.slots[i].label));
        }
        let mut edges: Vec<(&str, &str)> = Vec::new();
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                if self.edge(i, j) && self.present(i) && self.present(j) {
                    edges.push((self.id_of(i), self.id_of(j)));
                }
            }
        }
        edges.sort();
        for (s, t) in edges {
            out.push_str(&format!("edge {s} {t}\n"));
        }
        out
    }

    pub fn parse(text: &str) -> Result<SimpleDigraph, ParseError> {
        let mut lines = Lines::new(text);
        let mut block = GraphBlock::new();
        while let Some((ln, toks)) = lines.next_line() {
            block.take_line(ln, &toks)?;
        }
        block.build()
    }
}

impl fmt::Debug for SimpleDigraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "SimpleDigraph({} slots)", self.dim())?;
        for (i, s) in self.slots.iter().enumerate() {
            writeln!(
                f,
                "  [{i}] {} : {} {}",
                s.id,
                s.label,
                if self.present(i) { "" } else { "(absent)" }
            )?;
        }
        for (i, j) in self.edges.ones_positions() {
            writeln!(f, "  {} -> {}", self.slots[i].id, self.slots[j].id)?;
        }
        Ok(())
    }
}

/// Accumulator for a graph text block. Lines may arrive in any order;
/// edges are resolved against the node set at [`GraphBlock::build`] time.
pub struct GraphBlock {
    nodes: Vec<(usize, usize, String, String)>,
    edges: Vec<(usize, usize, String, String)>,
}

impl Default for GraphBlock {
    fn default() -> Self {
        Self::new()
    }
}

impl GraphBlock {
    pub fn new() -> Self {
        GraphBlock {
            nodes: Vec::new(),
            edges: Vec::new(),
        }
    }

    /// Consume one `node`/`edge` line. Shared with the production and
    /// grammar file formats.
    pub fn take_line(
        &mut self,
        ln: usize,
        toks: &[crate::text::Token<'_>],
    ) -> Result<(), ParseError> {
        match toks[0].text {
            "node" => {
                expect_args(ln, toks, 2, "node <id> <label>")?;
                self.nodes.push((
                    ln,
                    toks[1].col,
                    toks[1].text.to_string(),
                    toks[2].text.to_string(),
                ));
                Ok(())
            }
            "edge" => {
                expect_args(ln, toks, 2, "edge <src-id> <dst-id>")?;
                self.edges.push((
                    ln,
                    toks[1].col,
                    toks[1].text.to_string(),
                    toks[2].text.to_string(),
                ));
                Ok(())
            }
            other => Err(ParseError::new(
                ln,
                toks[0].col,
                format!("unknown directive `{other}` in graph block"),
            )),
        }
    }

    pub fn build(self) -> Result<SimpleDigraph, ParseError> {
        let mut b = GraphBuilder::new();
        for (ln, col, id, label) in &self.nodes {
            b.node(id, label)
                .map_err(|e| ParseError::new(*ln, *col, e.to_string()))?;
        }
        for (ln, col, src, dst) in &self.edges {
            b.edge(src, dst)
                .map_err(|e| ParseError::new(*ln, *col, e.to_string()))?;
        }
        Ok(b.finish())
    }
}

/// Incremental construction helper; the finished graph is immutable.
pub struct GraphBuilder {
    slots: Vec<Slot>,
    present: Vec<bool>,
    index: BTreeMap<String, usize>,
    edges: Vec<(usize, usize)>,
}

impl Default for GraphBuilder {
    fn default() -> Self {
        Self::new()
    }
}

impl GraphBuilder {
    pub fn new() -> Self {
        GraphBuilder {
            slots: Vec::new(),
            present: Vec::new(),
            index: BTreeMap::new(),
            edges: Vec::new(),
        }
    }

    pub fn node(&mut self, id: &str, label: &str) -> Result<usize, GraphError> {
        self.slot(id, label, true)
    }

    /// Declare a slot without presence (used when assembling rule universes).
    pub fn absent(&mut self, id: &str, label: &str) -> Result<usize, GraphError> {
        self.slot(id, label, false)
    }

    fn slot(&mut self, id: &str, label: &str, present: bool) -> Result<usize, GraphError> {
        if self.index.contains_key(id) {
            return Err(GraphError::DuplicateId(id.to_string()));
        }
        let idx = self.slots.len();
        self.slots.push(Slot::new(id, label));
        self.present.push(present);
        self.index.insert(id.to_string(), idx);
        Ok(idx)
    }

    pub fn edge(&mut self, src: &str, dst: &str) -> Result<(), GraphError> {
        let s = *self
            .index
            .get(src)
            .ok_or_else(|| GraphError::UnknownId(src.to_string()))?;
        let d = *self
            .index
            .get(dst)
            .ok_or_else(|| GraphError::UnknownId(dst.to_string()))?;
        self.edges.push((s, d));
        Ok(())
    }

    pub fn finish(self) -> SimpleDigraph {
        let n = self.slots.len();
        let mut edges = BoolMatrix::zeros(n);
        for (s, d) in self.edges {
            edges.set(s, d, true);
        }
        let mut nodes = BoolVector::zeros(n);
        for (i, &p) in self.present.iter().enumerate() {
            nodes.set(i, p);
        }
        SimpleDigraph {
            edges,
            nodes,
            slots: self.slots,
        }
    }
}

/// Partial node identification between two graphs: pairs of (left index,
/// right index). Injectivity and label preservation are validated by the
/// operations that need them, so ill-formed maps can still be *checked*.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Correspondence {
    pairs: Vec<(usize, usize)>,
}

impl Correspondence {
    pub fn empty() -> Self {
        Correspondence { pairs: Vec::new() }
    }

    pub fn from_pairs(pairs: Vec<(usize, usize)>) -> Self {
        Correspondence { pairs }
    }

    /// Build from id pairs resolved against both graphs.
    pub fn from_ids(
        left: &SimpleDigraph,
        right: &SimpleDigraph,
        pairs: &[(&str, &str)],
    ) -> Result<Self, GraphError> {
        let mut out = Vec::new();
        for (l, r) in pairs {
            let li = left
                .index_of(l)
                .ok_or_else(|| GraphError::UnknownId(l.to_string()))?;
            let ri = right
                .index_of(r)
                .ok_or_else(|| GraphError::UnknownId(r.to_string()))?;
            out.push((li, ri));
        }
        Ok(Correspondence { pairs: out })
    }

    /// Identity on the ids shared by both graphs.
    pub fn by_shared_ids(left: &SimpleDigraph, right: &SimpleDigraph) -> Self {
        let mut pairs = Vec::new();
        for (li, slot) in left.slots().iter().enumerate() {
            if let Some(ri) = right.index_of(&slot.id) {
                pairs.push((li, ri));
            }
        }
        Correspondence { pairs }
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Functional on the left and injective on the right.
    pub fn is_injective(&self) -> bool {
        let mut ls = std::collections::BTreeSet::new();
        let mut rs = std::collections::BTreeSet::new();
        self.pairs
            .iter()
            .all(|&(l, r)| ls.insert(l) && rs.insert(r))
    }

    pub fn image_of(&self, left: usize) -> Option<usize> {
        self.pairs.iter().find(|&&(l, _)| l == left).map(|&(_, r)| r)
    }
}

/// Result of completing two graphs over a merged slot universe.
///
/// Identified slots take the left graph's id; unidentified slots of either
/// side become absent zero rows/columns in the other graph. `left_map` and
/// `right_map` send original indices to universe indices.
pub struct Completion {
    pub left: SimpleDigraph,
    pub right: SimpleDigraph,
    pub left_map: Vec<usize>,
    pub right_map: Vec<usize>,
}

fn validate_correspondence(
    a: &SimpleDigraph,
    b: &SimpleDigraph,
    f: &Correspondence,
    require_present: bool,
) -> Result<(), GraphError> {
    if !f.is_injective() {
        return Err(GraphError::NotInjective);
    }
    for &(l, r) in f.pairs() {
        if l >= a.dim() {
            return Err(GraphError::BadIndex(l));
        }
        if r >= b.dim() {
            return Err(GraphError::BadIndex(r));
        }
        if require_present && (!a.present(l) || !b.present(r)) {
            let id = if a.present(l) { b.id_of(r) } else { a.id_of(l) };
            return Err(GraphError::AbsentEndpoint(id.to_string()));
        }
        if a.label_of(l) != b.label_of(r) {
            return Err(GraphError::LabelClash {
                left: a.id_of(l).to_string(),
                left_label: a.label_of(l).to_string(),
                right: b.id_of(r).to_string(),
                right_label: b.label_of(r).to_string(),
            });
        }
    }
    Ok(())
}

/// Complete `a` and `b` along `f`: rebuild both over one universe in which
/// `f`-identified nodes share an index. Edge and node bits are relocated,
/// never dropped, so bit counts are invariant.
pub fn complete(
    a: &SimpleDigraph,
    b: &SimpleDigraph,
    f: &Correspondence,
) -> Result<Completion, GraphError> {
    validate_correspondence(a, b, f, false)?;

    let mut b_to_a: BTreeMap<usize, usize> = BTreeMap::new();
    for &(l, r) in f.pairs() {
        b_to_a.insert(r, l);
    }

    let mut slots: Vec<Slot> = a.slots().to_vec();
    let left_map: Vec<usize> = (0..a.dim()).collect();
    let mut right_map = vec![usize::MAX; b.dim()];
    for (r, slot) in b.slots().iter().enumerate() {
        if let Some(&l) = b_to_a.get(&r) {
            right_map[r] = l;
        } else {
            if slots.iter().any(|s| s.id == slot.id) {
                return Err(GraphError::DuplicateId(slot.id.clone()));
            }
            right_map[r] = slots.len();
            slots.push(slot.clone());
        }
    }

    let n = slots.len();
    let mut left_edges = BoolMatrix::zeros(n);
    let mut left_nodes = BoolVector::zeros(n);
    for i in 0..a.dim() {
        if a.present(i) {
            left_nodes.set(left_map[i], true);
        }
        for j in 0..a.dim() {
            if a.edge(i, j) {
                left_edges.set(left_map[i], left_map[j], true);
            }
        }
    }
    let mut right_edges = BoolMatrix::zeros(n);
    let mut right_nodes = BoolVector::zeros(n);
    for i in 0..b.dim() {
        if b.present(i) {
            right_nodes.set(right_map[i], true);
        }
        for j in 0..b.dim() {
            if b.edge(i, j) {
                right_edges.set(right_map[i], right_map[j], true);
            }
        }
    }

    Ok(Completion {
        left: SimpleDigraph {
            edges: left_edges,
            nodes: left_nodes,
            slots: slots.clone(),
        },
        right: SimpleDigraph {
            edges: right_edges,
            nodes: right_nodes,
            slots,
        },
        left_map,
        right_map,
    })
}

/// Complement of `g` with respect to `a` along `f: a -> g` (pairs are
/// (a index, g index)): complete first, then negate edges and nodes.
///
/// The output is a structure, not necessarily a compatible graph. The second
/// return value embeds `a`'s indices into the shared universe.
pub fn complement_wrt(
    g: &SimpleDigraph,
    a: &SimpleDigraph,
    f: &Correspondence,
) -> Result<(SimpleDigraph, Vec<usize>), GraphError> {
    let flipped = Correspondence::from_pairs(f.pairs().iter().map(|&(ai, gi)| (gi, ai)).collect());
    let completion = complete(g, a, &flipped)?;
    let structure = SimpleDigraph {
        edges: completion.left.edges.not(),
        nodes: completion.left.nodes.not(),
        slots: completion.left.slots,
    };
    Ok((structure, completion.right_map))
}

/// Is `f` a morphism from `g1` to `g2`? Checks injectivity, presence of the
/// mapped endpoints, label preservation, and that every `g1` edge whose
/// endpoints are both mapped lands on a `g2` edge.
pub fn check_morphism(f: &Correspondence, g1: &SimpleDigraph, g2: &SimpleDigraph) -> bool {
    if validate_correspondence(g1, g2, f, true).is_err() {
        return false;
    }
    for i in 0..g1.dim() {
        for j in 0..g1.dim() {
            if !g1.edge(i, j) {
                continue;
            }
            if let (Some(fi), Some(fj)) = (f.image_of(i), f.image_of(j)) {
                if !g2.edge(fi, fj) {
                    return false;
                }
            }
        }
    }
    true
}

/// Render an arbitrary edge matrix over a slot universe in the graph text
/// format, listing every slot as a node. Used by analysis reports, where the
/// matrix is a condition or diagnostic rather than a compatible graph.
pub fn render_structure(edges: &BoolMatrix, slots: &[Slot]) -> String {
    assert_eq!(edges.dim(), slots.len());
    let mut out = String::new();
    let mut order: Vec<usize> = (0..slots.len()).collect();
    order.sort_by(|&x, &y| slots[x].id.cmp(&slots[y].id));
    for &i in &order {
        out.push_str(&format!("node {} {}\n", slots[i].id, slots[i].label));
    }
    let mut lines: Vec<(&str, &str)> = edges
        .ones_positions()
        .into_iter()
        .map(|(i, j)| (slots[i].id.as_str(), slots[j].id.as_str()))
        .collect();
    lines.sort();
    for (s, t) in lines {
        out.push_str(&format!("edge {s} {t}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boolalg::SplitMix64;

    fn graph(nodes: &[(&str, &str)], edges: &[(&str, &str)]) -> SimpleDigraph {
        let mut b = GraphBuilder::new();
        for (id, l) in nodes {
            b.node(id, l).unwrap();
        }
        for (s, t) in edges {
            b.edge(s, t).unwrap();
        }
        b.finish()
    }

    #[test]
    fn compatibility() {
        let mut b = GraphBuilder::new();
        b.node("a", "T").unwrap();
        b.node("b", "T").unwrap();
        b.edge("a", "b").unwrap();
        let g = b.finish();
        assert!(g.is_compatible());

        let broken = g.with_presence(1, false);
        assert!(!broken.is_compatible());

        assert!(SimpleDigraph::empty().is_compatible());
    }

    #[test]
    fn compatibility_matches_scan_exhaustively() {
        for n in 0..=4usize {
            let mut rng = SplitMix64::new(n as u64 + 1);
            for _ in 0..200 {
                let mut edges = BoolMatrix::zeros(n);
                let mut nodes = BoolVector::zeros(n);
                for i in 0..n {
                    nodes.set(i, rng.bool_with(2, 3));
                    for j in 0..n {
                        edges.set(i, j, rng.bool_with(1, 3));
                    }
                }
                let slots = (0..n).map(|i| Slot::new(i.to_string(), "T")).collect();
                let g = SimpleDigraph::from_parts(slots, edges.clone(), nodes.clone());
                let mut scan_ok = true;
                for i in 0..n {
                    for j in 0..n {
                        if edges.get(i, j) && (!nodes.get(i) || !nodes.get(j)) {
                            scan_ok = false;
                        }
                    }
                }
                assert_eq!(g.is_compatible(), scan_ok);
            }
        }
    }

    #[test]
    fn completion_identity_is_noop() {
        let g = graph(&[("a", "T"), ("b", "U")], &[("a", "b")]);
        let f = Correspondence::from_ids(&g, &g, &[("a", "a"), ("b", "b")]).unwrap();
        let c = complete(&g, &g, &f).unwrap();
        assert_eq!(c.left, g);
        assert_eq!(c.right, g);
    }

    #[test]
    fn completion_disjoint_block_union() {
        let a = graph(&[("a", "T")], &[("a", "a")]);
        let b = graph(&[("b", "T"), ("c", "U")], &[("b", "c")]);
        let c = complete(&a, &b, &Correspondence::empty()).unwrap();
        assert_eq!(c.left.dim(), 3);
        assert_eq!(c.left.edges().count_ones(), 1);
        assert_eq!(c.right.edges().count_ones(), 1);
        assert_eq!(c.left.nodes().count_ones(), 1);
        assert_eq!(c.right.nodes().count_ones(), 2);
        assert!(!c.left.present(c.right_map[0]));
    }

    #[test]
    fn completion_preserves_bits() {
        let mut rng = SplitMix64::new(11);
        for _ in 0..100 {
            let na = 1 + rng.below(4);
            let nb = 1 + rng.below(4);
            let mut ba = GraphBuilder::new();
            for i in 0..na {
                ba.node(&format!("a{i}"), "T").unwrap();
            }
            let mut bb = GraphBuilder::new();
            for i in 0..nb {
                bb.node(&format!("b{i}"), "T").unwrap();
            }
            let mut a = ba.finish();
            let mut b = bb.finish();
            for i in 0..na {
                for j in 0..na {
                    if rng.bool_with(1, 2) {
                        a = a.modified(&[(i, j)], &[]);
                    }
                }
            }
            for i in 0..nb {
                for j in 0..nb {
                    if rng.bool_with(1, 2) {
                        b = b.modified(&[(i, j)], &[]);
                    }
                }
            }
            let k = rng.below(na.min(nb) + 1);
            let f = Correspondence::from_pairs((0..k).map(|i| (i, i)).collect());
            let c = complete(&a, &b, &f).unwrap();
            assert_eq!(c.left.edges().count_ones(), a.edges().count_ones());
            assert_eq!(c.right.edges().count_ones(), b.edges().count_ones());
            assert_eq!(c.left.nodes().count_ones(), a.nodes().count_ones());
            assert_eq!(c.right.nodes().count_ones(), b.nodes().count_ones());
            assert_eq!(c.left.dim(), na + nb - k);
        }
    }

    #[test]
    fn completion_rejects_label_clash() {
        let a = graph(&[("x", "T")], &[]);
        let b = graph(&[("y", "U")], &[]);
        let f = Correspondence::from_pairs(vec![(0, 0)]);
        assert!(matches!(
            complete(&a, &b, &f),
            Err(GraphError::LabelClash { .. })
        ));
    }

    #[test]
    fn complement_plain_negation_when_empty() {
        let g = graph(&[("a", "T"), ("b", "T")], &[("a", "b")]);
        let (neg, _) = complement_wrt(&g, &SimpleDigraph::empty(), &Correspondence::empty()).unwrap();
        assert_eq!(neg.edges(), &g.edges().not());
        assert!(neg.nodes().is_zero());
    }

    #[test]
    fn double_complement_restores_completed_graph() {
        let g = graph(&[("a", "T"), ("b", "T")], &[("a", "b"), ("b", "b")]);
        let a = graph(&[("c", "U")], &[]);
        let f = Correspondence::empty();
        let (neg, embed) = complement_wrt(&g, &a, &f).unwrap();
        // Second complement against the already-embedded copy of `a`.
        let f2 = Correspondence::from_pairs(vec![(0, embed[0])]);
        let (back, _) = complement_wrt(&neg, &a, &f2).unwrap();
        let completed = complete(&g, &a, &Correspondence::empty()).unwrap().left;
        assert_eq!(back.edges(), completed.edges());
        assert_eq!(back.nodes(), completed.nodes());
    }

    #[test]
    fn pattern_found_in_completed_complement() {
        // `a` needs an absent edge between labels the host lacks entirely;
        // only the completed complement exposes it.
        let host = graph(&[("m", "M")], &[("m", "m")]);
        let probe = graph(&[("o", "O")], &[("o", "o")]);
        let plain_negation = host.edges().not();
        assert!(plain_negation.is_zero());
        let (structure, embed) = complement_wrt(&host, &probe, &Correspondence::empty()).unwrap();
        assert!(structure.edge(embed[0], embed[0]));
    }

    #[test]
    fn morphism_checks() {
        let g = graph(&[("a", "T"), ("b", "T")], &[("a", "b")]);
        let id = Correspondence::from_ids(&g, &g, &[("a", "a"), ("b", "b")]).unwrap();
        assert!(check_morphism(&id, &g, &g));

        let h = graph(&[("x", "T"), ("y", "T")], &[("y", "x")]);
        let f = Correspondence::from_ids(&g, &h, &[("a", "x"), ("b", "y")]).unwrap();
        assert!(!check_morphism(&f, &g, &h));

        let squash = Correspondence::from_pairs(vec![(0, 0), (1, 0)]);
        assert!(!check_morphism(&squash, &g, &g));

        // Restrictions of a morphism stay morphisms.
        let sub = Correspondence::from_ids(&g, &g, &[("a", "a")]).unwrap();
        assert!(check_morphism(&sub, &g, &g));
    }

    #[test]
    fn morphism_respects_labels() {
        let g = graph(&[("a", "T")], &[]);
        let h = graph(&[("b", "U")], &[]);
        let f = Correspondence::from_pairs(vec![(0, 0)]);
        assert!(!check_morphism(&f, &g, &h));
    }

    #[test]
    fn text_roundtrip_is_canonical() {
        let text = "# demo\nedge b a\nnode b T\nnode a U\nnode c T\nedge b c\n";
        let g1 = SimpleDigraph::parse(text).unwrap();
        let dump1 = g1.dump();
        let g2 = SimpleDigraph::parse(&dump1).unwrap();
        assert_eq!(dump1, g2.dump());
        assert_eq!(dump1, "node a U\nnode b T\nnode c T\nedge b a\nedge b c\n");
    }

    #[test]
    fn parse_errors_carry_location() {
        let err = SimpleDigraph::parse("node a T\nedge a missing\n").unwrap_err();
        assert_eq!(err.line, 2);
        let err = SimpleDigraph::parse("nod a T\n").unwrap_err();
        assert_eq!(err.line, 1);
        assert_eq!(err.col, 1);
    }
}
