//! Boolean circuits as nodeless grammars.
//!
//! Encoding: one `Var` node per wire, one node per gate labeled with its
//! operation, shared value nodes `0` and `1`, and one `se` node per
//! multi-input gate, tied to its gate by a `gate -> se` edge. An unassigned
//! wire carries a self-loop; an assignment is an edge from a value node to
//! the wire. A gate's inputs are ordered by a chain
//! `se -> x1 -> x2 -> ... -> xk -> se` alongside the plain wiring edges
//! `xi -> gate` and `gate -> output`.
//!
//! Gate productions (shared by every gate of the same kind):
//! - `not_0`/`not_1` consume the gate's in/out edges and assign the
//!   complement to the output.
//! - `or_1` assigns 1 as soon as any input holds 1; `and_0` dually.
//! - `or_s0`/`and_s1` drop a neutral leading input by repointing the `se`
//!   head edge at the chain successor. The order edge itself stays: order
//!   edges between shared input wires can belong to several gates' chains,
//!   so deleting one could corrupt a sibling gate.
//! - `or_e0`/`and_e1` fire when one input remains (the `se` edges close a
//!   2-cycle through it) and assign the neutral value.
//!
//! Input values are never deleted; a wire can feed any number of gates.

use std::collections::{BTreeMap, BTreeSet};

use super::MachineError;
use crate::boolalg::SplitMix64;
use crate::graph::{Correspondence, GraphBuilder, SimpleDigraph};
use crate::matching::{
    derive, enumerate_matches, Election, Grammar, GrammarMode, Strategy,
};
use crate::production::Production;
use crate::text::{expect_args, Lines, ParseError};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GateKind {
    And,
    Or,
    Not,
}

impl GateKind {
    pub fn label(&self) -> &'static str {
        match self {
            GateKind::And => "and",
            GateKind::Or => "or",
            GateKind::Not => "not",
        }
    }

    fn parse(s: &str) -> Option<GateKind> {
        match s {
            "and" => Some(GateKind::And),
            "or" => Some(GateKind::Or),
            "not" => Some(GateKind::Not),
            _ => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Gate {
    pub kind: GateKind,
    pub inputs: Vec<String>,
    pub output: String,
}

#[derive(Clone, Debug)]
pub struct Circuit {
    pub inputs: Vec<String>,
    pub gates: Vec<Gate>,
    pub output: String,
}

impl Circuit {
    pub fn validate(&self) -> Result<(), MachineError> {
        let mut defined: BTreeSet<&str> = BTreeSet::new();
        for w in &self.inputs {
            if !defined.insert(w) {
                return Err(MachineError::Arity(format!("duplicate input wire `{w}`")));
            }
        }
        for g in &self.gates {
            match g.kind {
                GateKind::Not if g.inputs.len() != 1 => {
                    return Err(MachineError::Arity(format!(
                        "not gate `{}` needs exactly one input",
                        g.output
                    )));
                }
                GateKind::And | GateKind::Or if g.inputs.len() < 2 => {
                    return Err(MachineError::Arity(format!(
                        "{} gate `{}` needs at least two inputs",
                        g.kind.label(),
                        g.output
                    )));
                }
                _ => {}
            }
            let mut seen = BTreeSet::new();
            for i in &g.inputs {
                if !seen.insert(i) {
                    return Err(MachineError::Arity(format!(
                        "gate `{}` lists input `{i}` twice (the input ordering cannot represent it)",
                        g.output
                    )));
                }
            }
            if !defined.insert(&g.output) {
                return Err(MachineError::Arity(format!(
                    "wire `{}` assigned by more than one source",
                    g.output
                )));
            }
        }
        for g in &self.gates {
            for i in &g.inputs {
                if !defined.contains(i.as_str()) {
                    return Err(MachineError::UnknownWire(i.clone()));
                }
            }
        }
        if !defined.contains(self.output.as_str()) {
            return Err(MachineError::UnknownWire(self.output.clone()));
        }
        self.toposort().map(|_| ())
    }

    /// Gates in dependency order; errors on cycles.
    pub fn toposort(&self) -> Result<Vec<usize>, MachineError> {
        let mut ready: BTreeSet<&str> = self.inputs.iter().map(|s| s.as_str()).collect();
        let mut remaining: Vec<usize> = (0..self.gates.len()).collect();
        let mut order = Vec::new();
        while !remaining.is_empty() {
            let before = remaining.len();
            remaining.retain(|&gi| {
                let g = &self.gates[gi];
                if g.inputs.iter().all(|i| ready.contains(i.as_str())) {
                    order.push(gi);
                    false
                } else {
                    true
                }
            });
            for &gi in &order[order.len() - (before - remaining.len())..] {
                ready.insert(&self.gates[gi].output);
            }
            if remaining.len() == before {
                let stuck = &self.gates[remaining[0]];
                return Err(MachineError::Cyclic(stuck.output.clone()));
            }
        }
        Ok(order)
    }

    pub fn wires(&self) -> Vec<&str> {
        let mut out: Vec<&str> = self.inputs.iter().map(|s| s.as_str()).collect();
        out.extend(self.gates.iter().map(|g| g.output.as_str()));
        out
    }

    /// Parse the circuit file format: `input`, `gate`, `output` lines.
    pub fn parse(text: &str) -> Result<Circuit, ParseError> {
        let mut lines = Lines::new(text);
        let mut inputs = Vec::new();
        let mut gates = Vec::new();
        let mut output = None;
        while let Some((ln, toks)) = lines.next_line() {
            match toks[0].text {
                "input" => {
                    expect_args(ln, &toks, 1, "input <wire>")?;
                    inputs.push(toks[1].text.to_string());
                }
                "output" => {
                    expect_args(ln, &toks, 1, "output <wire>")?;
                    output = Some(toks[1].text.to_string());
                }
                "gate" => {
                    if toks.len() < 4 {
                        return Err(ParseError::new(
                            ln,
                            toks[0].col,
                            "expected `gate <kind> <out-wire> <in-wire>...`",
                        ));
                    }
                    let kind = GateKind::parse(toks[1].text).ok_or_else(|| {
                        ParseError::new(ln, toks[1].col, format!("unknown gate kind `{}`", toks[1].text))
                    })?;
                    gates.push(Gate {
                        kind,
                        output: toks[2].text.to_string(),
                        inputs: toks[3..].iter().map(|t| t.text.to_string()).collect(),
                    });
                }
                other => {
                    return Err(ParseError::new(
                        ln,
                        toks[0].col,
                        format!("unknown directive `{other}` in circuit file"),
                    ))
                }
            }
        }
        let output = output.ok_or_else(|| ParseError::new(1, 1, "missing `output <wire>` line"))?;
        Ok(Circuit {
            inputs,
            gates,
            output,
        })
    }
}

fn wire_id(name: &str) -> String {
    format!("w:{name}")
}

struct RuleSpec {
    name: &'static str,
    kind: &'static str,
    value: &'static str,
    other: &'static str,
}

/// The eight gate productions, in firing-priority order: resolutions first,
/// then terminal chain rules, then chain shrinking.
fn gate_productions() -> Vec<Production> {
    let mut out = Vec::new();
    for spec in [
        RuleSpec { name: "not_0", kind: "not", value: "0", other: "1" },
        RuleSpec { name: "not_1", kind: "not", value: "1", other: "0" },
    ] {
        out.push(not_rule(&spec));
    }
    out.push(short_circuit_rule("or_1", "or", "1"));
    out.push(short_circuit_rule("and_0", "and", "0"));
    out.push(last_input_rule("or_e0", "or", "0"));
    out.push(last_input_rule("and_e1", "and", "1"));
    out.push(shrink_rule("or_s0", "or", "0"));
    out.push(shrink_rule("and_s1", "and", "1"));
    out
}

fn not_rule(spec: &RuleSpec) -> Production {
    let mut l = GraphBuilder::new();
    l.node(spec.value, spec.value).unwrap();
    l.node(spec.other, spec.other).unwrap();
    l.node("x", "Var").unwrap();
    l.node("g", spec.kind).unwrap();
    l.node("y", "Var").unwrap();
    l.edge(spec.value, "x").unwrap();
    l.edge("x", "g").unwrap();
    l.edge("g", "y").unwrap();
    l.edge("y", "y").unwrap();
    let l = l.finish();

    let mut r = GraphBuilder::new();
    r.node(spec.value, spec.value).unwrap();
    r.node(spec.other, spec.other).unwrap();
    r.node("x", "Var").unwrap();
    r.node("g", spec.kind).unwrap();
    r.node("y", "Var").unwrap();
    r.edge(spec.value, "x").unwrap();
    r.edge(spec.other, "y").unwrap();
    let r = r.finish();

    let ids = [spec.value, spec.other, "x", "g", "y"];
    build(spec.name, &l, &r, &ids)
}

/// Any input holding the dominating value resolves the gate at once.
fn short_circuit_rule(name: &'static str, kind: &str, value: &str) -> Production {
    let mut l = GraphBuilder::new();
    l.node(value, value).unwrap();
    l.node("x", "Var").unwrap();
    l.node("g", kind).unwrap();
    l.node("y", "Var").unwrap();
    l.edge(value, "x").unwrap();
    l.edge("x", "g").unwrap();
    l.edge("g", "y").unwrap();
    l.edge("y", "y").unwrap();
    let l = l.finish();

    let mut r = GraphBuilder::new();
    r.node(value, value).unwrap();
    r.node("x", "Var").unwrap();
    r.node("g", kind).unwrap();
    r.node("y", "Var").unwrap();
    r.edge(value, "x").unwrap();
    r.edge("x", "g").unwrap();
    r.edge("g", "y").unwrap();
    r.edge(value, "y").unwrap();
    let r = r.finish();

    build(name, &l, &r, &[value, "x", "g", "y"])
}

/// One input left in the chain (the gate's se closes a 2-cycle through it)
/// and it holds the neutral value: the gate resolves to that value. The
/// gate-to-se edge pins the se node to this gate.
fn last_input_rule(name: &'static str, kind: &str, value: &str) -> Production {
    let mut l = GraphBuilder::new();
    l.node(value, value).unwrap();
    l.node("se", "se").unwrap();
    l.node("x", "Var").unwrap();
    l.node("g", kind).unwrap();
    l.node("y", "Var").unwrap();
    l.edge(value, "x").unwrap();
    l.edge("g", "se").unwrap();
    l.edge("se", "x").unwrap();
    l.edge("x", "se").unwrap();
    l.edge("x", "g").unwrap();
    l.edge("g", "y").unwrap();
    l.edge("y", "y").unwrap();
    let l = l.finish();

    let mut r = GraphBuilder::new();
    r.node(value, value).unwrap();
    r.node("se", "se").unwrap();
    r.node("x", "Var").unwrap();
    r.node("g", kind).unwrap();
    r.node("y", "Var").unwrap();
    r.edge(value, "x").unwrap();
    r.edge("g", "se").unwrap();
    r.edge("se", "x").unwrap();
    r.edge("x", "se").unwrap();
    r.edge("x", "g").unwrap();
    r.edge("g", "y").unwrap();
    r.edge(value, "y").unwrap();
    let r = r.finish();

    build(name, &l, &r, &[value, "se", "x", "g", "y"])
}

/// Drop a neutral head input from a live gate's chain by repointing the
/// gate's se head edge at the successor.
fn shrink_rule(name: &'static str, kind: &str, value: &str) -> Production {
    let mut l = GraphBuilder::new();
    l.node(value, value).unwrap();
    l.node("se", "se").unwrap();
    l.node("x1", "Var").unwrap();
    l.node("x2", "Var").unwrap();
    l.node("g", kind).unwrap();
    l.node("y", "Var").unwrap();
    l.edge(value, "x1").unwrap();
    l.edge("g", "se").unwrap();
    l.edge("se", "x1").unwrap();
    l.edge("x1", "x2").unwrap();
    l.edge("x1", "g").unwrap();
    l.edge("x2", "g").unwrap();
    l.edge("g", "y").unwrap();
    l.edge("y", "y").unwrap();
    let l = l.finish();

    let mut r = GraphBuilder::new();
    r.node(value, value).unwrap();
    r.node("se", "se").unwrap();
    r.node("x1", "Var").unwrap();
    r.node("x2", "Var").unwrap();
    r.node("g", kind).unwrap();
    r.node("y", "Var").unwrap();
    r.edge(value, "x1").unwrap();
    r.edge("g", "se").unwrap();
    r.edge("se", "x2").unwrap();
    r.edge("x1", "x2").unwrap();
    r.edge("x1", "g").unwrap();
    r.edge("x2", "g").unwrap();
    r.edge("g", "y").unwrap();
    r.edge("y", "y").unwrap();
    let r = r.finish();

    build(name, &l, &r, &[value, "se", "x1", "x2", "g", "y"])
}

fn build(name: &str, l: &SimpleDigraph, r: &SimpleDigraph, ids: &[&str]) -> Production {
    let pairs: Vec<(&str, &str)> = ids.iter().map(|&i| (i, i)).collect();
    let map = Correspondence::from_ids(l, r, &pairs).expect("static rule ids");
    Production::from_static(name, l, r, &map).expect("static rule is well-formed")
}

/// All permutations of `0..n` in lexicographic order.
fn perms(n: usize) -> Vec<Vec<usize>> {
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
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut (0..n).collect(), &mut out);
    out
}

/// Two chains are compatible when neither offers a skip to the other: for
/// every consecutive pair (u, v) of one chain with u and v both inputs of
/// the other gate, u must either be the other chain's final input (the walk
/// can only cycle back through already-consumed inputs, which is harmless)
/// or have v as its successor there too. Identical directed pairs are fine
/// because the shrink rules never delete order edges.
fn chains_compatible(a: &[String], b: &[String]) -> bool {
    let against = |pairs_of: &[String], other: &[String]| {
        let in_other = |w: &String| other.contains(w);
        for pair in pairs_of.windows(2) {
            let (u, v) = (&pair[0], &pair[1]);
            if !in_other(u) || !in_other(v) {
                continue;
            }
            if u == other.last().unwrap() {
                continue;
            }
            let pos = other.iter().position(|w| w == u).unwrap();
            if &other[pos + 1] != v {
                return false;
            }
        }
        true
    };
    against(a, b) && against(b, a)
}

/// Pick an input ordering for every multi-input gate such that, within any
/// gate's input set, a non-final input never has two distinct
/// order-successors. A plain backtracking search; the first (lexicographic)
/// solution is taken so compilation is deterministic.
fn choose_orderings(c: &Circuit) -> Result<Vec<Vec<String>>, MachineError> {
    let multi: Vec<usize> = (0..c.gates.len())
        .filter(|&gi| c.gates[gi].kind != GateKind::Not)
        .collect();
    let mut chosen: Vec<Vec<String>> = c.gates.iter().map(|g| g.inputs.clone()).collect();

    fn rec(
        c: &Circuit,
        multi: &[usize],
        k: usize,
        chosen: &mut Vec<Vec<String>>,
    ) -> bool {
        let Some(&gi) = multi.get(k) else { return true };
        let inputs = &c.gates[gi].inputs;
        for perm in perms(inputs.len()) {
            let candidate: Vec<String> = perm.iter().map(|&i| inputs[i].clone()).collect();
            let ok = multi[..k]
                .iter()
                .all(|&hj| chains_compatible(&candidate, &chosen[hj]));
            if ok {
                chosen[gi] = candidate;
                if rec(c, multi, k + 1, chosen) {
                    return true;
                }
            }
        }
        false
    }

    if rec(c, &multi, 0, &mut chosen) {
        Ok(chosen)
    } else {
        Err(MachineError::Arity(
            "no input ordering avoids cross-gate chain interference".into(),
        ))
    }
}

/// Compile a circuit: the fixed gate grammar plus the wired initial graph
/// with every wire unassigned.
pub fn compile_bc(c: &Circuit) -> Result<(Grammar, SimpleDigraph), MachineError> {
    c.validate()?;
    let orderings = choose_orderings(c)?;
    let mut b = GraphBuilder::new();
    b.node("0", "0").unwrap();
    b.node("1", "1").unwrap();
    for w in c.wires() {
        b.node(&wire_id(w), "Var").unwrap();
    }
    for (gi, gate) in c.gates.iter().enumerate() {
        b.node(&format!("g:{gi}"), gate.kind.label()).unwrap();
        if gate.kind != GateKind::Not {
            b.node(&format!("se:{gi}"), "se").unwrap();
        }
    }
    // Self-loops: unassigned wires.
    for w in c.wires() {
        b.edge(&wire_id(w), &wire_id(w)).unwrap();
    }
    for (gi, gate) in c.gates.iter().enumerate() {
        let gid = format!("g:{gi}");
        for i in &gate.inputs {
            b.edge(&wire_id(i), &gid).unwrap();
        }
        b.edge(&gid, &wire_id(&gate.output)).unwrap();
        if gate.kind != GateKind::Not {
            let se = format!("se:{gi}");
            let chain = &orderings[gi];
            b.edge(&gid, &se).unwrap();
            b.edge(&se, &wire_id(&chain[0])).unwrap();
            for pair in chain.windows(2) {
                b.edge(&wire_id(&pair[0]), &wire_id(&pair[1])).unwrap();
            }
            b.edge(&wire_id(chain.last().unwrap()), &se).unwrap();
        }
    }
    let initial = b.finish();
    let grammar = Grammar::new(gate_productions(), GrammarMode::Nodeless, initial.clone())?;
    Ok((grammar, initial))
}

/// Assign input bits on an encoded circuit graph: drop the self-loop, add
/// the value edge.
pub fn seed_inputs(
    c: &Circuit,
    g: &SimpleDigraph,
    assignment: &BTreeMap<String, bool>,
) -> Result<SimpleDigraph, MachineError> {
    let mut set = Vec::new();
    let mut clear = Vec::new();
    for w in &c.inputs {
        let bit = *assignment
            .get(w)
            .ok_or_else(|| MachineError::MissingInput(w.clone()))?;
        let wi = g
            .index_of(&wire_id(w))
            .ok_or_else(|| MachineError::UnknownWire(w.clone()))?;
        let vi = g.index_of(if bit { "1" } else { "0" }).expect("value nodes");
        clear.push((wi, wi));
        set.push((vi, wi));
    }
    Ok(g.modified(&set, &clear))
}

/// Read a wire's value off the graph, if assigned.
pub fn wire_value(g: &SimpleDigraph, wire: &str) -> Option<bool> {
    let wi = g.index_of(&wire_id(wire))?;
    let zero = g.index_of("0")?;
    let one = g.index_of("1")?;
    if g.edge(one, wi) {
        Some(true)
    } else if g.edge(zero, wi) {
        Some(false)
    } else {
        None
    }
}

/// Default step budget: comfortably above any resolution path, including
/// unproductive chain repointing under random election.
pub fn default_budget(c: &Circuit) -> usize {
    200 + 60 * (c.wires().len() + c.gates.len())
}

/// Evaluate the circuit by rewriting until the output wire is assigned.
///
/// `Election::Random` picks uniformly among all applicable (production,
/// match) pairs per step from the strategy's seed; anything else takes the
/// first pair in grammar/canonical order. Halting with the output wire
/// unassigned reports a stuck circuit (a compilation bug, not an input
/// condition).
pub fn eval_bc(
    c: &Circuit,
    assignment: &BTreeMap<String, bool>,
    strategy: &Strategy,
    max_steps: Option<usize>,
) -> Result<bool, MachineError> {
    let (grammar, initial) = compile_bc(c)?;
    let mut g = seed_inputs(c, &initial, assignment)?;
    let mut rng = SplitMix64::new(strategy.seed);
    let budget = max_steps.unwrap_or_else(|| default_budget(c));

    for _ in 0..budget {
        if let Some(bit) = wire_value(&g, &c.output) {
            return Ok(bit);
        }
        let mut pairs = Vec::new();
        for p in grammar.productions() {
            for m in enumerate_matches(p, &g) {
                pairs.push((p, m));
            }
        }
        if pairs.is_empty() {
            return Err(MachineError::Stuck(c.output.clone()));
        }
        let i = match strategy.election {
            Election::Random => rng.below(pairs.len()),
            _ => 0,
        };
        let (p, m) = pairs.swap_remove(i);
        g = derive(p, &m, &g)?;
    }
    if let Some(bit) = wire_value(&g, &c.output) {
        return Ok(bit);
    }
    Err(MachineError::BudgetExceeded(budget))
}

/// Parse `name=0`/`name=1` assignment arguments.
pub fn parse_assignment(args: &[String]) -> Result<BTreeMap<String, bool>, MachineError> {
    let mut out = BTreeMap::new();
    for a in args {
        let Some((name, v)) = a.split_once('=') else {
            return Err(MachineError::Arity(format!("bad assignment `{a}`, expected name=0|1")));
        };
        let bit = match v {
            "0" => false,
            "1" => true,
            _ => return Err(MachineError::Arity(format!("bad bit `{v}` in `{a}`"))),
        };
        out.insert(name.to_string(), bit);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Direct structural evaluation, independent of the grammar path.
    pub(crate) fn truth_value(c: &Circuit, assignment: &BTreeMap<String, bool>) -> bool {
        let order = c.toposort().unwrap();
        let mut values: BTreeMap<&str, bool> = assignment
            .iter()
            .map(|(k, v)| (k.as_str(), *v))
            .collect();
        for gi in order {
            let g = &c.gates[gi];
            let ins: Vec<bool> = g.inputs.iter().map(|i| values[i.as_str()]).collect();
            let v = match g.kind {
                GateKind::And => ins.iter().all(|&b| b),
                GateKind::Or => ins.iter().any(|&b| b),
                GateKind::Not => !ins[0],
            };
            values.insert(&g.output, v);
        }
        values[c.output.as_str()]
    }

    fn circuit(inputs: &[&str], gates: &[(GateKind, &str, &[&str])], output: &str) -> Circuit {
        Circuit {
            inputs: inputs.iter().map(|s| s.to_string()).collect(),
            gates: gates
                .iter()
                .map(|(k, out, ins)| Gate {
                    kind: *k,
                    output: out.to_string(),
                    inputs: ins.iter().map(|s| s.to_string()).collect(),
                })
                .collect(),
            output: output.to_string(),
        }
    }

    fn assign(pairs: &[(&str, bool)]) -> BTreeMap<String, bool> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn not_gate_inverts() {
        let c = circuit(&["x"], &[(GateKind::Not, "y", &["x"])], "y");
        assert!(eval_bc(&c, &assign(&[("x", false)]), &Strategy::first(), None).unwrap());
        assert!(!eval_bc(&c, &assign(&[("x", true)]), &Strategy::first(), None).unwrap());
    }

    #[test]
    fn double_negation() {
        let c = circuit(
            &["x"],
            &[(GateKind::Not, "m", &["x"]), (GateKind::Not, "y", &["m"])],
            "y",
        );
        assert!(eval_bc(&c, &assign(&[("x", true)]), &Strategy::first(), None).unwrap());
    }

    #[test]
    fn two_input_or_of_zeros_walks_the_chain() {
        let c = circuit(&["a", "b"], &[(GateKind::Or, "y", &["a", "b"])], "y");
        let (grammar, initial) = compile_bc(&c).unwrap();
        let mut g = seed_inputs(&c, &initial, &assign(&[("a", false), ("b", false)])).unwrap();
        let mut fired = Vec::new();
        loop {
            if wire_value(&g, "y").is_some() {
                break;
            }
            let mut pairs = Vec::new();
            for p in grammar.productions() {
                for m in enumerate_matches(p, &g) {
                    pairs.push((p, m));
                }
            }
            let (p, m) = pairs.into_iter().next().expect("not stuck");
            fired.push(p.name().to_string());
            g = derive(p, &m, &g).unwrap();
        }
        assert_eq!(fired, vec!["or_s0", "or_e0"]);
        assert_eq!(wire_value(&g, "y"), Some(false));
    }

    #[test]
    fn and_or_truth_tables() {
        for kind in [GateKind::And, GateKind::Or] {
            let c = circuit(&["a", "b"], &[(kind, "y", &["a", "b"])], "y");
            for a in [false, true] {
                for b in [false, true] {
                    let asg = assign(&[("a", a), ("b", b)]);
                    let want = truth_value(&c, &asg);
                    for seed in 0..5u64 {
                        let got = eval_bc(&c, &asg, &Strategy::random(seed), None).unwrap();
                        assert_eq!(got, want, "{kind:?}({a},{b}) seed {seed}");
                    }
                }
            }
        }
    }

    #[test]
    fn mixed_circuit_all_assignments() {
        // (x and y) or (not x)
        let c = circuit(
            &["x", "y"],
            &[
                (GateKind::And, "m", &["x", "y"]),
                (GateKind::Not, "n", &["x"]),
                (GateKind::Or, "z", &["m", "n"]),
            ],
            "z",
        );
        let expect = [true, true, false, true];
        let mut i = 0;
        for x in [false, true] {
            for y in [false, true] {
                let asg = assign(&[("x", x), ("y", y)]);
                assert_eq!(truth_value(&c, &asg), expect[i]);
                let got = eval_bc(&c, &asg, &Strategy::first(), None).unwrap();
                assert_eq!(got, expect[i], "x={x} y={y}");
                i += 1;
            }
        }
    }

    #[test]
    fn three_input_and_all_ones_regardless_of_order() {
        // Exhaustive interleavings: breadth-first over reachable states; the
        // output must be 1 on every path.
        let c = circuit(&["a", "b", "c"], &[(GateKind::And, "y", &["a", "b", "c"])], "y");
        let (grammar, initial) = compile_bc(&c).unwrap();
        let seeded =
            seed_inputs(&c, &initial, &assign(&[("a", true), ("b", true), ("c", true)])).unwrap();
        let mut frontier = vec![seeded];
        let mut visited = std::collections::BTreeSet::new();
        let mut outcomes = std::collections::BTreeSet::new();
        while let Some(g) = frontier.pop() {
            if let Some(v) = wire_value(&g, "y") {
                outcomes.insert(v);
                continue;
            }
            let mut moves = 0;
            for p in grammar.productions() {
                for m in enumerate_matches(p, &g) {
                    moves += 1;
                    let next = derive(p, &m, &g).unwrap();
                    if visited.insert(next.dump()) {
                        frontier.push(next);
                    }
                }
            }
            assert!(moves > 0, "stuck before output assignment");
            assert!(visited.len() < 10_000, "state space blow-up");
        }
        assert_eq!(outcomes.into_iter().collect::<Vec<_>>(), vec![true]);
    }

    #[test]
    fn shared_input_feeds_two_gates() {
        // x feeds both a not gate and an or gate; values are never consumed.
        let c = circuit(
            &["x", "y"],
            &[
                (GateKind::Not, "n", &["x"]),
                (GateKind::Or, "o", &["x", "y"]),
                (GateKind::And, "z", &["n", "o"]),
            ],
            "z",
        );
        for x in [false, true] {
            for y in [false, true] {
                let asg = assign(&[("x", x), ("y", y)]);
                let want = truth_value(&c, &asg);
                for seed in [0u64, 7, 99] {
                    assert_eq!(
                        eval_bc(&c, &asg, &Strategy::random(seed), None).unwrap(),
                        want
                    );
                }
            }
        }
    }

    #[test]
    fn identical_parallel_gates_do_not_interfere() {
        // Two or gates over the same inputs: their chains share the order
        // edge, which the shrink rule must leave intact.
        let c = circuit(
            &["a", "b"],
            &[
                (GateKind::Or, "u", &["a", "b"]),
                (GateKind::Or, "v", &["a", "b"]),
                (GateKind::And, "y", &["u", "v"]),
            ],
            "y",
        );
        for a in [false, true] {
            for b in [false, true] {
                let asg = assign(&[("a", a), ("b", b)]);
                let want = truth_value(&c, &asg);
                for seed in 0..6u64 {
                    assert_eq!(
                        eval_bc(&c, &asg, &Strategy::random(seed), None).unwrap(),
                        want,
                        "a={a} b={b} seed={seed}"
                    );
                }
            }
        }
    }

    #[test]
    fn random_circuits_match_truth_tables() {
        let mut rng = SplitMix64::new(2024);
        for trial in 0..30 {
            let c = random_circuit(&mut rng, 5, 6);
            for bits in 0..1u32 << c.inputs.len() {
                let asg: BTreeMap<String, bool> = c
                    .inputs
                    .iter()
                    .enumerate()
                    .map(|(i, w)| (w.clone(), (bits >> i) & 1 == 1))
                    .collect();
                let want = truth_value(&c, &asg);
                for seed in 0..3u64 {
                    let got = eval_bc(&c, &asg, &Strategy::random(seed), None).unwrap();
                    assert_eq!(got, want, "trial {trial} bits {bits:b} seed {seed}");
                }
            }
        }
    }

    pub(crate) fn random_circuit(rng: &mut SplitMix64, max_inputs: usize, max_gates: usize) -> Circuit {
        let n_inputs = 1 + rng.below(max_inputs);
        let inputs: Vec<String> = (0..n_inputs).map(|i| format!("i{i}")).collect();
        let n_gates = 1 + rng.below(max_gates);
        let mut avail: Vec<String> = inputs.clone();
        let mut gates = Vec::new();
        for gi in 0..n_gates {
            let kind = match rng.below(3) {
                0 => GateKind::And,
                1 => GateKind::Or,
                _ => GateKind::Not,
            };
            let arity = match kind {
                GateKind::Not => 1,
                _ => 2 + rng.below(2.min(avail.len().saturating_sub(1)) + 1),
            };
            if avail.len() < arity {
                continue;
            }
            // Sample distinct wires.
            let mut pool = avail.clone();
            let mut ins = Vec::new();
            for _ in 0..arity {
                ins.push(pool.swap_remove(rng.below(pool.len())));
            }
            let out = format!("t{gi}");
            gates.push(Gate {
                kind,
                inputs: ins,
                output: out.clone(),
            });
            avail.push(out);
        }
        if gates.is_empty() {
            gates.push(Gate {
                kind: GateKind::Not,
                inputs: vec![inputs[0].clone()],
                output: "t0".into(),
            });
        }
        let output = gates.last().unwrap().output.clone();
        Circuit {
            inputs,
            gates,
            output,
        }
    }

    #[test]
    fn validation_rejects_bad_circuits() {
        let cyclic = circuit(
            &["x"],
            &[
                (GateKind::Or, "u", &["x", "v"]),
                (GateKind::Or, "v", &["x", "u"]),
            ],
            "v",
        );
        assert!(matches!(cyclic.validate(), Err(MachineError::Cyclic(_))));

        let bad_arity = circuit(&["x"], &[(GateKind::Not, "y", &["x", "x"])], "y");
        assert!(matches!(bad_arity.validate(), Err(MachineError::Arity(_))));

        let dup = circuit(&["a", "b"], &[(GateKind::And, "y", &["a", "a"])], "y");
        assert!(matches!(dup.validate(), Err(MachineError::Arity(_))));

        let unknown = circuit(&["a", "b"], &[(GateKind::And, "y", &["a", "q"])], "y");
        assert!(matches!(unknown.validate(), Err(MachineError::UnknownWire(_))));
    }

    #[test]
    fn circuit_file_parsing() {
        let text = "# sample\ninput x\ninput y\ngate and m x y\ngate not n x\ngate or z m n\noutput z\n";
        let c = Circuit::parse(text).unwrap();
        assert_eq!(c.inputs, vec!["x", "y"]);
        assert_eq!(c.gates.len(), 3);
        assert_eq!(c.output, "z");
        c.validate().unwrap();
        assert!(Circuit::parse("input x\n").is_err(), "missing output");
    }
}
