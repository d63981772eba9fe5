//! Productions: rewrite rules over a completed node universe.
//!
//! A production stores its left and right hand sides over one slot universe
//! together with the erase/restock masks that turn one into the other, the
//! nihilation matrix (edges that must be absent for the rule to apply), the
//! forbidden-after matrix (edges that must be absent once it has applied),
//! and a relabeling permutation. The masks satisfy `e AND r = 0`, `e <= L`,
//! `r AND L = 0`, and `R = r OR (not e AND L)` by construction.

use std::fmt;

use num_bigint::BigUint;
use thiserror::Error;

use crate::boolalg::{kronecker, BoolMatrix, BoolVector, ComplexBoolMatrix, Permutation};
use crate::graph::{complete, Correspondence, GraphError, SimpleDigraph, Slot};
use crate::text::{expect_args, Lines, ParseError};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ProductionError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("left hand side is not a compatible graph")]
    IncompatibleLhs,
    #[error("right hand side dangles under the rule's node deletions")]
    IncompatibleRhs,
    #[error("erase and restock overlap at {0} positions")]
    Overlap(usize),
    #[error("erase reaches outside the left hand side")]
    EraseOutsideLhs,
    #[error("restock collides with the left hand side")]
    RestockInsideLhs,
    #[error("relabeling does not preserve the label partition")]
    LabelInconsistentRelabeling,
}

/// Edge matrix plus node vector acted on together, as in erase/restock.
#[derive(Clone, PartialEq, Eq)]
pub struct Mask {
    pub edges: BoolMatrix,
    pub nodes: BoolVector,
}

impl Mask {
    pub fn zeros(n: usize) -> Self {
        Mask {
            edges: BoolMatrix::zeros(n),
            nodes: BoolVector::zeros(n),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.edges.is_zero() && self.nodes.is_zero()
    }
}

impl fmt::Debug for Mask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Mask(edges: {:?}, nodes: {:?})", self.edges, self.nodes)
    }
}

/// A rewrite rule in dynamic form.
#[derive(Clone, PartialEq, Eq)]
pub struct Production {
    name: String,
    lhs: SimpleDigraph,
    rhs: SimpleDigraph,
    erase: Mask,
    restock: Mask,
    nihil: BoolMatrix,
    forbid: BoolMatrix,
    sigma: Permutation,
}

impl Production {
    /// Build from left and right hand sides identified along `map`.
    ///
    /// Both sides are completed over a shared universe; then
    /// `e = L AND not R`, `r = R AND not L` on edges and nodes, and the
    /// nihilation and forbidden-after matrices are derived.
    pub fn from_static(
        name: impl Into<String>,
        lhs: &SimpleDigraph,
        rhs: &SimpleDigraph,
        map: &Correspondence,
    ) -> Result<Production, ProductionError> {
        let completion = complete(lhs, rhs, map)?;
        let l = completion.left;
        let r = completion.right;
        if !l.is_compatible() {
            return Err(ProductionError::IncompatibleLhs);
        }
        if !r.is_compatible() {
            return Err(ProductionError::IncompatibleRhs);
        }
        let erase = Mask {
            edges: l.edges().and(&r.edges().not()),
            nodes: l.nodes().and(&r.nodes().not()),
        };
        let restock = Mask {
            edges: r.edges().and(&l.edges().not()),
            nodes: r.nodes().and(&l.nodes().not()),
        };
        Ok(Production::assemble(name.into(), l, r, erase, restock))
    }

    /// Build from a left hand side and explicit erase/restock masks.
    pub fn from_actions(
        name: impl Into<String>,
        lhs: SimpleDigraph,
        erase: Mask,
        restock: Mask,
    ) -> Result<Production, ProductionError> {
        let n = lhs.dim();
        assert_eq!(erase.edges.dim(), n, "erase dimension");
        assert_eq!(restock.edges.dim(), n, "restock dimension");
        let overlap = erase.edges.and(&restock.edges).count_ones()
            + erase.nodes.and(&restock.nodes).count_ones();
        if overlap != 0 {
            return Err(ProductionError::Overlap(overlap));
        }
        if erase.edges.and(&lhs.edges().not()).count_ones() != 0
            || erase.nodes.and(&lhs.nodes().not()).count_ones() != 0
        {
            return Err(ProductionError::EraseOutsideLhs);
        }
        if restock.edges.and(lhs.edges()).count_ones() != 0
            || restock.nodes.and(lhs.nodes()).count_ones() != 0
        {
            return Err(ProductionError::RestockInsideLhs);
        }
        if !lhs.is_compatible() {
            return Err(ProductionError::IncompatibleLhs);
        }
        let rhs_edges = restock.edges.or(&erase.edges.not().and(lhs.edges()));
        let rhs_nodes = restock.nodes.or(&erase.nodes.not().and(lhs.nodes()));
        let rhs = SimpleDigraph::from_parts(lhs.slots().to_vec(), rhs_edges, rhs_nodes);
        if !rhs.is_compatible() {
            return Err(ProductionError::IncompatibleRhs);
        }
        Ok(Production::assemble(name.into(), lhs, rhs, erase, restock))
    }

    fn assemble(
        name: String,
        lhs: SimpleDigraph,
        rhs: SimpleDigraph,
        erase: Mask,
        restock: Mask,
    ) -> Production {
        let nihil = nihilation_of(&erase, &restock);
        let forbid = forbidden_of(&erase, &restock, &nihil);
        let sigma = Permutation::identity(lhs.dim());
        Production {
            name,
            lhs,
            rhs,
            erase,
            restock,
            nihil,
            forbid,
            sigma,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.lhs.dim()
    }

    pub fn lhs(&self) -> &SimpleDigraph {
        &self.lhs
    }

    pub fn rhs(&self) -> &SimpleDigraph {
        &self.rhs
    }

    pub fn erase(&self) -> &Mask {
        &self.erase
    }

    pub fn restock(&self) -> &Mask {
        &self.restock
    }

    /// Edges that must be absent from the host for the rule to apply:
    /// everything the rule adds, plus non-deleted edges at deleted nodes.
    pub fn nihilation(&self) -> &BoolMatrix {
        &self.nihil
    }

    /// Edges that must be absent once the rule has applied: everything it
    /// deletes, plus the nihilation positions it does not restock.
    pub fn forbidden_after(&self) -> &BoolMatrix {
        &self.forbid
    }

    pub fn sigma(&self) -> &Permutation {
        &self.sigma
    }

    pub fn universe(&self) -> &[Slot] {
        self.lhs.slots()
    }

    pub fn label_of(&self, i: usize) -> &crate::graph::Label {
        self.lhs.label_of(i)
    }

    pub fn is_nodeless(&self) -> bool {
        self.erase.nodes.is_zero() && self.restock.nodes.is_zero()
    }

    pub fn adds_nodes(&self) -> bool {
        self.restock.nodes.any()
    }

    /// Newly available edge positions after application: pairs with an added
    /// endpoint and no deleted endpoint.
    pub fn enabled_after(&self) -> BoolMatrix {
        let kept = self.erase.nodes.not();
        let not_added = self.restock.nodes.not();
        kronecker(&not_added, &not_added)
            .not()
            .and(&kronecker(&kept, &kept))
    }

    /// Apply `r OR (not e AND x)` to an edge matrix in the rule's universe.
    pub fn apply_edges(&self, x: &BoolMatrix) -> BoolMatrix {
        self.restock
            .edges
            .or(&self.erase.edges.not().and(x))
    }

    /// Apply the rule to a graph completed to its universe (edges and nodes).
    pub fn apply_raw(&self, x: &SimpleDigraph) -> SimpleDigraph {
        assert_eq!(x.dim(), self.dim(), "graph not completed to the rule's universe");
        let edges = self.apply_edges(x.edges());
        let nodes = self
            .restock
            .nodes
            .or(&self.erase.nodes.not().and(x.nodes()));
        SimpleDigraph::from_parts(x.slots().to_vec(), edges, nodes)
    }

    /// The swap carrying the same action with no applicability restriction.
    pub fn to_swap(&self) -> Swap {
        let toggle = self.erase.edges.or(&self.restock.edges);
        Swap {
            value: ComplexBoolMatrix::from_parts(toggle.not(), toggle),
        }
    }

    /// Conjugate every constituent matrix by `sigma`, producing the affine
    /// production that acts at the relabeled position. `sigma` must keep the
    /// universe's label partition fixed; slots are not renamed.
    pub fn relabel(&self, sigma: &Permutation) -> Result<Production, ProductionError> {
        let labels = self.lhs.labels();
        if !sigma.preserves_labels(&labels) {
            return Err(ProductionError::LabelInconsistentRelabeling);
        }
        let act_graph = |g: &SimpleDigraph| {
            SimpleDigraph::from_parts(
                g.slots().to_vec(),
                sigma.act_matrix(g.edges()),
                sigma.act_vector(g.nodes()),
            )
        };
        let act_mask = |m: &Mask| Mask {
            edges: sigma.act_matrix(&m.edges),
            nodes: sigma.act_vector(&m.nodes),
        };
        Ok(Production {
            name: self.name.clone(),
            lhs: act_graph(&self.lhs),
            rhs: act_graph(&self.rhs),
            erase: act_mask(&self.erase),
            restock: act_mask(&self.restock),
            nihil: sigma.act_matrix(&self.nihil),
            forbid: sigma.act_matrix(&self.forbid),
            sigma: self.sigma.compose(sigma),
        })
    }

    /// Swap erase and restock: left side becomes the old right side, the
    /// nihilation becomes the old forbidden-after matrix.
    pub fn inverse(&self) -> Production {
        Production {
            name: format!("{}^-1", self.name.trim_end_matches("^-1")),
            lhs: self.rhs.clone(),
            rhs: self.lhs.clone(),
            erase: self.restock.clone(),
            restock: self.erase.clone(),
            nihil: self.forbid.clone(),
            forbid: self.nihil.clone(),
            sigma: self.sigma.inverse(),
        }
    }

    pub fn parse_all(text: &str) -> Result<Vec<Production>, ParseError> {
        let mut lines = Lines::new(text);
        let mut out = Vec::new();
        while lines.peek_keyword().is_some() {
            out.push(parse_production(&mut lines)?);
        }
        Ok(out)
    }

    /// Canonical text form: `prod` header, lhs and rhs graph blocks, and the
    /// identification map.
    pub fn dump(&self) -> String {
        let mut out = format!("prod {}\n", self.name);
        out.push_str("lhs:\n");
        out.push_str(&self.lhs.dump());
        out.push_str("rhs:\n");
        out.push_str(&self.rhs.dump());
        for (i, slot) in self.lhs.slots().iter().enumerate() {
            if self.lhs.present(i) && self.rhs.present(i) {
                out.push_str(&format!("map {} {}\n", slot.id, slot.id));
            }
        }
        out
    }
}

impl fmt::Debug for Production {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "Production({}, dim {}, e: {} edges/{} nodes, r: {} edges/{} nodes)",
            self.name,
            self.dim(),
            self.erase.edges.count_ones(),
            self.erase.nodes.count_ones(),
            self.restock.edges.count_ones(),
            self.restock.nodes.count_ones(),
        )
    }
}

/// `K = r OR (not e AND Dbar)` where `Dbar` marks every pair with a deleted
/// endpoint.
fn nihilation_of(erase: &Mask, restock: &Mask) -> BoolMatrix {
    let kept = erase.nodes.not();
    let dbar = kronecker(&kept, &kept).not();
    restock.edges.or(&erase.edges.not().and(&dbar))
}

/// `Q = e OR (not r AND K)`.
fn forbidden_of(erase: &Mask, restock: &Mask, nihil: &BoolMatrix) -> BoolMatrix {
    erase.edges.or(&restock.edges.not().and(nihil))
}

/// A production's action freed of its applicability restrictions: a Boolean
/// complex matrix whose parts are exact complements. The imaginary part is
/// the toggle mask `e OR r`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Swap {
    value: ComplexBoolMatrix,
}

impl Swap {
    pub fn identity(n: usize) -> Self {
        Swap {
            value: ComplexBoolMatrix::from_parts(BoolMatrix::ones(n), BoolMatrix::zeros(n)),
        }
    }

    pub fn value(&self) -> &ComplexBoolMatrix {
        &self.value
    }

    pub fn toggle(&self) -> &BoolMatrix {
        &self.value.imag
    }

    pub fn is_well_formed(&self) -> bool {
        self.value.real == self.value.imag.not()
    }
}

/// Decompose a pure relabeling into erase/restock matrices relative to one
/// graph: `e = L AND not (sigma.L)`, `r = not L AND (sigma.L)`.
pub fn decompose_relabeling(sigma: &Permutation, l: &BoolMatrix) -> (BoolMatrix, BoolMatrix) {
    let moved = sigma.act_matrix(l);
    (l.and(&moved.not()), l.not().and(&moved))
}

/// What to count: swaps are fixed by their real part, productions by a
/// disjoint (e, r) pair per position.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CountKind {
    Swaps,
    Productions,
}

/// Exact number of swaps (`2^(n^2)`) or productions (`3^(n^2)`) on `n` nodes.
pub fn count_elements(kind: CountKind, n: usize) -> BigUint {
    let exp = (n * n) as u32;
    match kind {
        CountKind::Swaps => BigUint::from(2u32).pow(exp),
        CountKind::Productions => BigUint::from(3u32).pow(exp),
    }
}

fn parse_production(lines: &mut Lines<'_>) -> Result<Production, ParseError> {
    use crate::graph::GraphBlock;

    let (ln, toks) = lines.next_line().expect("caller checked");
    if toks[0].text != "prod" {
        return Err(ParseError::new(
            ln,
            toks[0].col,
            format!("expected `prod <name>`, found `{}`", toks[0].text),
        ));
    }
    expect_args(ln, &toks, 1, "prod <name>")?;
    let name = toks[1].text.to_string();

    match lines.next_line() {
        Some((_, t)) if t[0].text == "lhs:" => {}
        other => {
            let ln = other.map(|(l, _)| l).unwrap_or(0);
            return Err(ParseError::new(ln, 1, "expected `lhs:` block"));
        }
    }
    let mut lhs = GraphBlock::new();
    while matches!(lines.peek_keyword(), Some("node") | Some("edge")) {
        let (ln, toks) = lines.next_line().unwrap();
        lhs.take_line(ln, &toks)?;
    }
    match lines.next_line() {
        Some((_, t)) if t[0].text == "rhs:" => {}
        other => {
            let ln = other.map(|(l, _)| l).unwrap_or(0);
            return Err(ParseError::new(ln, 1, "expected `rhs:` block"));
        }
    }
    let mut rhs = GraphBlock::new();
    while matches!(lines.peek_keyword(), Some("node") | Some("edge")) {
        let (ln, toks) = lines.next_line().unwrap();
        rhs.take_line(ln, &toks)?;
    }
    let lhs = lhs.build()?;
    let rhs = rhs.build()?;

    let mut pairs = Vec::new();
    let mut map_line = 0;
    while lines.peek_keyword() == Some("map") {
        let (ln, toks) = lines.next_line().unwrap();
        expect_args(ln, &toks, 2, "map <lhs-id> <rhs-id>")?;
        map_line = ln;
        pairs.push((toks[1].text.to_string(), toks[2].text.to_string()));
    }
    let pair_refs: Vec<(&str, &str)> = pairs.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
    let map = Correspondence::from_ids(&lhs, &rhs, &pair_refs)
        .map_err(|e| ParseError::new(map_line, 1, e.to_string()))?;

    Production::from_static(&name, &lhs, &rhs, &map)
        .map_err(|e| ParseError::new(ln, 1, format!("invalid production `{name}`: {e}")))
}
