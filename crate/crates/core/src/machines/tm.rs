//! Turing machines as grammars.
//!
//! Encoding: one node per tape cell (label `Cell`) chained by next-edges;
//! `LC`/`RC` nodes mark the boundary cells through an edge to them; one node
//! per tape symbol whose edge into a cell is that cell's content; one node
//! per state, and the edge from the current state's node to a cell marks
//! both the machine state and the head position. State and symbol nodes get
//! namespaced labels (`st:q`, `sy:a`) so a state and a symbol may share a
//! name.
//!
//! Each state-table row becomes one production `p_<state><symbol>` that
//! rewrites the content edge, moves the state edge to the neighbor cell, and
//! switches the state node. Two node-adding productions `p_cl`/`p_cr` grow
//! the tape at a boundary. They match whenever their boundary exists, so the
//! runner gives table rows priority and, when none applies, fires the
//! extension for the blocked side; extending the wrong side would change
//! the decoded tape.

use std::collections::BTreeSet;

use super::MachineError;
use crate::boolalg::SplitMix64;
use crate::graph::{Correspondence, GraphBuilder, SimpleDigraph};
use crate::matching::{
    derive_with, enumerate_matches, Election, Grammar, GrammarMode, IdGen, Strategy, TraceStep,
};
use crate::production::Production;
use crate::text::{expect_args, Lines, ParseError};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Motion {
    Left,
    Right,
    Stay,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TmRow {
    pub state: String,
    pub read: String,
    /// Symbol to print, or `None` for no print operation.
    pub print: Option<String>,
    pub motion: Motion,
    pub next: String,
}

impl TmRow {
    pub fn production_name(&self) -> String {
        format!("p_{}{}", self.state, self.read)
    }

    fn printed(&self) -> &str {
        self.print.as_deref().unwrap_or(&self.read)
    }
}

/// A machine description: states and symbols are implied by the rows.
#[derive(Clone, Debug)]
pub struct TmSpec {
    pub name: String,
    pub blank: String,
    pub start: String,
    /// Symbol written on cells created by tape extension; the blank when
    /// absent.
    pub init_symbol: Option<String>,
    pub rows: Vec<TmRow>,
}

impl TmSpec {
    pub fn states(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        out.insert(self.start.clone());
        for r in &self.rows {
            out.insert(r.state.clone());
            out.insert(r.next.clone());
        }
        out
    }

    pub fn symbols(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        out.insert(self.blank.clone());
        out.insert(self.extension_symbol().to_string());
        for r in &self.rows {
            out.insert(r.read.clone());
            if let Some(p) = &r.print {
                out.insert(p.clone());
            }
        }
        out
    }

    pub fn extension_symbol(&self) -> &str {
        self.init_symbol.as_deref().unwrap_or(&self.blank)
    }

    /// One row per (state, symbol) key.
    pub fn is_deterministic(&self) -> bool {
        let mut keys = BTreeSet::new();
        self.rows
            .iter()
            .all(|r| keys.insert((r.state.clone(), r.read.clone())))
    }

    pub fn rows_for(&self, state: &str, read: &str) -> Vec<&TmRow> {
        self.rows
            .iter()
            .filter(|r| r.state == state && r.read == read)
            .collect()
    }

    pub fn validate(&self) -> Result<(), MachineError> {
        if self.rows.is_empty() {
            return Err(MachineError::InvalidRow("state table is empty".into()));
        }
        if !self.states().contains(&self.start) {
            return Err(MachineError::InvalidRow(format!(
                "start state `{}` has no row",
                self.start
            )));
        }
        Ok(())
    }

    /// Parse the state-table file format: a `tm` header line followed by
    /// `row` lines.
    pub fn parse(text: &str) -> Result<TmSpec, ParseError> {
        let mut lines = Lines::new(text);
        let (ln, toks) = lines
            .next_line()
            .ok_or_else(|| ParseError::new(1, 1, "empty machine file"))?;
        if toks[0].text != "tm" {
            return Err(ParseError::new(ln, toks[0].col, "expected `tm <name> ...` header"));
        }
        if toks.len() < 2 {
            return Err(ParseError::new(ln, toks[0].col, "missing machine name"));
        }
        let name = toks[1].text.to_string();
        let mut blank = None;
        let mut start = None;
        let mut init = None;
        for t in &toks[2..] {
            if let Some(v) = t.text.strip_prefix("blank=") {
                blank = Some(v.to_string());
            } else if let Some(v) = t.text.strip_prefix("start=") {
                start = Some(v.to_string());
            } else if let Some(v) = t.text.strip_prefix("init=") {
                init = Some(v.to_string());
            } else {
                return Err(ParseError::new(ln, t.col, format!("unknown header option `{}`", t.text)));
            }
        }
        let blank = blank.ok_or_else(|| ParseError::new(ln, toks[0].col, "missing blank=<sym>"))?;
        let start = start.ok_or_else(|| ParseError::new(ln, toks[0].col, "missing start=<state>"))?;

        let mut rows = Vec::new();
        while let Some((ln, toks)) = lines.next_line() {
            if toks[0].text != "row" {
                return Err(ParseError::new(ln, toks[0].col, "expected `row` line"));
            }
            expect_args(ln, &toks, 5, "row <state> <symbol> <print|NOP> <HL|HR|NMOV> <next>")?;
            let print = match toks[3].text {
                "NOP" => None,
                sym => Some(sym.to_string()),
            };
            let motion = match toks[4].text {
                "HL" => Motion::Left,
                "HR" => Motion::Right,
                "NMOV" => Motion::Stay,
                other => {
                    return Err(ParseError::new(
                        ln,
                        toks[4].col,
                        format!("bad head motion `{other}` (HL, HR, or NMOV)"),
                    ))
                }
            };
            rows.push(TmRow {
                state: toks[1].text.to_string(),
                read: toks[2].text.to_string(),
                print,
                motion,
                next: toks[5].text.to_string(),
            });
        }
        Ok(TmSpec {
            name,
            blank,
            start,
            init_symbol: init,
            rows,
        })
    }
}

/// A decoded machine configuration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TapeConfig {
    pub cells: Vec<String>,
    pub head: usize,
    pub state: String,
}

impl TapeConfig {
    /// Render the tape: plain concatenation when every symbol is one
    /// character, comma-separated otherwise.
    pub fn tape_string(&self) -> String {
        if self.cells.iter().all(|c| c.chars().count() == 1) {
            self.cells.concat()
        } else {
            self.cells.join(",")
        }
    }

    /// Parse a tape argument: comma-separated symbols, or one symbol per
    /// character when no comma is present.
    pub fn parse_tape(s: &str) -> Vec<String> {
        if s.contains(',') {
            s.split(',').map(|c| c.to_string()).collect()
        } else {
            s.chars().map(|c| c.to_string()).collect()
        }
    }
}

fn st_id(q: &str) -> String {
    format!("st:{q}")
}

fn sy_id(a: &str) -> String {
    format!("sy:{a}")
}

/// Build the production for one state-table row.
fn row_production(row: &TmRow) -> Result<Production, MachineError> {
    let state_id = st_id(&row.state);
    let next_id = st_id(&row.next);
    let read_id = sy_id(&row.read);
    let print_id = sy_id(row.printed());

    let mut nodes: Vec<(String, String)> = vec![
        (state_id.clone(), state_id.clone()),
        (read_id.clone(), read_id.clone()),
        ("tc".into(), "Cell".into()),
    ];
    if next_id != state_id {
        nodes.push((next_id.clone(), next_id.clone()));
    }
    if print_id != read_id {
        nodes.push((print_id.clone(), print_id.clone()));
    }
    let neighbor = match row.motion {
        Motion::Left | Motion::Right => {
            nodes.push(("tn".into(), "Cell".into()));
            true
        }
        Motion::Stay => false,
    };

    let mut l = GraphBuilder::new();
    let mut r = GraphBuilder::new();
    for (id, label) in &nodes {
        l.node(id, label).map_err(|e| MachineError::InvalidRow(e.to_string()))?;
        r.node(id, label).map_err(|e| MachineError::InvalidRow(e.to_string()))?;
    }
    let chain = |b: &mut GraphBuilder| -> Result<(), MachineError> {
        if neighbor {
            let (src, dst) = match row.motion {
                Motion::Left => ("tn", "tc"),
                Motion::Right => ("tc", "tn"),
                Motion::Stay => unreachable!(),
            };
            b.edge(src, dst).map_err(|e| MachineError::InvalidRow(e.to_string()))?;
        }
        Ok(())
    };
    chain(&mut l)?;
    chain(&mut r)?;

    l.edge(&state_id, "tc").unwrap();
    l.edge(&read_id, "tc").unwrap();
    let head_target = if neighbor { "tn" } else { "tc" };
    r.edge(&next_id, head_target).unwrap();
    r.edge(&print_id, "tc").unwrap();

    let l = l.finish();
    let r = r.finish();
    let pairs: Vec<(&str, &str)> = nodes.iter().map(|(id, _)| (id.as_str(), id.as_str())).collect();
    let map = Correspondence::from_ids(&l, &r, &pairs).map_err(|e| MachineError::InvalidRow(e.to_string()))?;
    Production::from_static(row.production_name(), &l, &r, &map)
        .map_err(|e| MachineError::InvalidRow(format!("{}: {e}", row.production_name())))
}

/// Tape-extension production at the left (`p_cl`) or right (`p_cr`)
/// boundary: one fresh cell, rewired boundary marker, initialized content.
fn extension_production(spec: &TmSpec, left: bool) -> Result<Production, MachineError> {
    let (name, marker_id, marker_label) = if left {
        ("p_cl", "lc", "LC")
    } else {
        ("p_cr", "rc", "RC")
    };
    let init = sy_id(spec.extension_symbol());

    let mut l = GraphBuilder::new();
    l.node(marker_id, marker_label).unwrap();
    l.node("tc", "Cell").unwrap();
    l.node(&init, &init).unwrap();
    l.edge(marker_id, "tc").unwrap();
    let l = l.finish();

    let mut r = GraphBuilder::new();
    r.node(marker_id, marker_label).unwrap();
    r.node("tc", "Cell").unwrap();
    r.node(&init, &init).unwrap();
    r.node("new", "Cell").unwrap();
    r.edge(marker_id, "new").unwrap();
    if left {
        r.edge("new", "tc").unwrap();
    } else {
        r.edge("tc", "new").unwrap();
    }
    r.edge(&init, "new").unwrap();
    let r = r.finish();

    let map = Correspondence::from_ids(
        &l,
        &r,
        &[(marker_id, marker_id), ("tc", "tc"), (init.as_str(), init.as_str())],
    )
    .map_err(|e| MachineError::InvalidRow(e.to_string()))?;
    Production::from_static(name, &l, &r, &map)
        .map_err(|e| MachineError::InvalidRow(format!("{name}: {e}")))
}

/// Compile the state table: one production per row, named `p_<state><symbol>`,
/// plus `p_cl` and `p_cr`. The grammar is node-adding (only the extension
/// rules add nodes) and starts on a one-cell blank tape.
pub fn compile_tm(spec: &TmSpec) -> Result<Grammar, MachineError> {
    spec.validate()?;
    let mut productions = Vec::new();
    for row in &spec.rows {
        productions.push(row_production(row)?);
    }
    productions.push(extension_production(spec, true)?);
    productions.push(extension_production(spec, false)?);
    let initial = encode_tape(
        spec,
        &TapeConfig {
            cells: vec![spec.blank.clone()],
            head: 0,
            state: spec.start.clone(),
        },
    )?;
    Grammar::new(productions, GrammarMode::NodeAdding, initial).map_err(MachineError::from)
}

/// Encode a configuration as a host graph. All state and symbol nodes are
/// materialized so every production can match.
pub fn encode_tape(spec: &TmSpec, t: &TapeConfig) -> Result<SimpleDigraph, MachineError> {
    if t.cells.is_empty() {
        return Err(MachineError::Decode("tape must have at least one cell".into()));
    }
    if t.head >= t.cells.len() {
        return Err(MachineError::Decode(format!(
            "head {} outside tape of {} cells",
            t.head,
            t.cells.len()
        )));
    }
    let symbols = spec.symbols();
    let states = spec.states();
    if !states.contains(&t.state) {
        return Err(MachineError::Decode(format!("unknown state `{}`", t.state)));
    }
    for c in &t.cells {
        if !symbols.contains(c) {
            return Err(MachineError::Decode(format!("unknown tape symbol `{c}`")));
        }
    }

    let mut b = GraphBuilder::new();
    b.node("lc", "LC").unwrap();
    b.node("rc", "RC").unwrap();
    for q in &states {
        let id = st_id(q);
        b.node(&id, &id).unwrap();
    }
    for a in &symbols {
        let id = sy_id(a);
        b.node(&id, &id).unwrap();
    }
    for i in 0..t.cells.len() {
        b.node(&format!("c{i}"), "Cell").unwrap();
    }
    for i in 0..t.cells.len() - 1 {
        b.edge(&format!("c{i}"), &format!("c{}", i + 1)).unwrap();
    }
    b.edge("lc", "c0").unwrap();
    b.edge("rc", &format!("c{}", t.cells.len() - 1)).unwrap();
    for (i, c) in t.cells.iter().enumerate() {
        b.edge(&sy_id(c), &format!("c{i}")).unwrap();
    }
    b.edge(&st_id(&t.state), &format!("c{}", t.head)).unwrap();
    Ok(b.finish())
}

/// Decode a host graph back into a configuration. Tolerates cells created
/// by tape extension (they carry the initialization symbol and fresh ids);
/// anything structurally off is a diagnostic error.
pub fn decode_tape(spec: &TmSpec, g: &SimpleDigraph) -> Result<TapeConfig, MachineError> {
    let is_cell = |i: usize| g.present(i) && g.label_of(i).as_str() == "Cell";
    let find_unique_source = |label: &str| -> Result<usize, MachineError> {
        let hits: Vec<usize> = (0..g.dim())
            .filter(|&i| g.present(i) && g.label_of(i).as_str() == label)
            .collect();
        match hits.as_slice() {
            [one] => Ok(*one),
            _ => Err(MachineError::Decode(format!("expected exactly one `{label}` node"))),
        }
    };

    let lc = find_unique_source("LC")?;
    let rc = find_unique_source("RC")?;
    let leftmost = {
        let targets: Vec<usize> = (0..g.dim()).filter(|&j| g.edge(lc, j) && is_cell(j)).collect();
        match targets.as_slice() {
            [one] => *one,
            _ => return Err(MachineError::Decode("left marker does not mark one cell".into())),
        }
    };

    // Walk the chain.
    let mut order = vec![leftmost];
    let mut seen = BTreeSet::from([leftmost]);
    loop {
        let cur = *order.last().unwrap();
        let next: Vec<usize> = (0..g.dim()).filter(|&j| g.edge(cur, j) && is_cell(j)).collect();
        match next.as_slice() {
            [] => break,
            [one] => {
                if !seen.insert(*one) {
                    return Err(MachineError::Decode("cell chain loops".into()));
                }
                order.push(*one);
            }
            _ => return Err(MachineError::Decode("cell with two successors".into())),
        }
    }
    if !g.edge(rc, *order.last().unwrap()) {
        return Err(MachineError::Decode("right marker not on the last cell".into()));
    }

    let symbols = spec.symbols();
    let mut cells = Vec::with_capacity(order.len());
    for &c in &order {
        let mut content = None;
        for a in &symbols {
            let si = g
                .index_of(&sy_id(a))
                .ok_or_else(|| MachineError::Decode(format!("symbol node `{a}` missing")))?;
            if g.edge(si, c) {
                if content.is_some() {
                    return Err(MachineError::Decode(format!(
                        "cell `{}` has two contents",
                        g.id_of(c)
                    )));
                }
                content = Some(a.clone());
            }
        }
        cells.push(content.ok_or_else(|| {
            MachineError::Decode(format!("cell `{}` has no content", g.id_of(c)))
        })?);
    }

    let mut head_state = None;
    for q in spec.states() {
        let qi = g
            .index_of(&st_id(&q))
            .ok_or_else(|| MachineError::Decode(format!("state node `{q}` missing")))?;
        for (pos, &c) in order.iter().enumerate() {
            if g.edge(qi, c) {
                if head_state.is_some() {
                    return Err(MachineError::Decode("two head markers".into()));
                }
                head_state = Some((pos, q.clone()));
            }
        }
    }
    let (head, state) =
        head_state.ok_or_else(|| MachineError::Decode("no head marker".into()))?;
    Ok(TapeConfig { cells, head, state })
}

/// Run the compiled machine on a starting configuration.
///
/// Table rows take priority; `strategy` only arbitrates between several
/// matching rows (non-deterministic machines). When no row matches, the
/// configuration is inspected: no row for (state, symbol) halts, a blocked
/// head motion fires the matching boundary extension.
pub fn run_tm(
    spec: &TmSpec,
    t0: &TapeConfig,
    strategy: &Strategy,
    max_steps: usize,
) -> Result<(TapeConfig, Vec<TraceStep>), MachineError> {
    let grammar = compile_tm(spec)?;
    let row_count = spec.rows.len();
    let mut g = encode_tape(spec, t0)?;
    let mut ids = IdGen::for_graph(&g);
    let mut rng = SplitMix64::new(strategy.seed);
    let mut trace = Vec::new();

    for _ in 0..max_steps {
        let mut candidates = Vec::new();
        for p in &grammar.productions()[..row_count] {
            let ms = enumerate_matches(p, &g);
            for m in ms {
                candidates.push((p, m));
            }
        }
        let picked = if candidates.is_empty() {
            let cfg = decode_tape(spec, &g)?;
            let rows = spec.rows_for(&cfg.state, &cfg.cells[cfg.head]);
            if rows.is_empty() {
                return Ok((cfg, trace));
            }
            // A row exists but its production cannot match: the head motion
            // runs off the tape. Grow the blocked side.
            let needs_left = rows
                .iter()
                .any(|r| r.motion == Motion::Left && cfg.head == 0);
            let needs_right = rows
                .iter()
                .any(|r| r.motion == Motion::Right && cfg.head == cfg.cells.len() - 1);
            let ext_name = match (needs_left, needs_right) {
                (true, _) => "p_cl",
                (false, true) => "p_cr",
                (false, false) => {
                    return Err(MachineError::Decode(
                        "state-table production failed to match an intact configuration".into(),
                    ))
                }
            };
            let p = grammar.production(ext_name).expect("compiled");
            let ms = enumerate_matches(p, &g);
            (p, ms.into_iter().next().expect("boundary marker present"))
        } else {
            let i = match strategy.election {
                Election::Random => rng.below(candidates.len()),
                _ => 0,
            };
            candidates.swap_remove(i)
        };

        let (next, bindings) = derive_with(picked.0, &picked.1, &g, &mut ids)?;
        trace.push(TraceStep {
            production: picked.0.name().to_string(),
            bindings,
        });
        g = next;
    }
    Err(MachineError::BudgetExceeded(max_steps))
}

/// The copy-subroutine state table: replicates a block of ones, inserting a
/// zero separator, when started on the rightmost one of the block.
pub fn copy_subroutine() -> TmSpec {
    let rows = vec![
        ("1", "0", None, Motion::Stay, "H"),
        ("1", "1", Some("0"), Motion::Left, "2"),
        ("2", "0", Some("0"), Motion::Left, "3"),
        ("2", "1", Some("1"), Motion::Left, "2"),
        ("3", "0", Some("1"), Motion::Right, "4"),
        ("3", "1", Some("1"), Motion::Left, "3"),
        ("4", "0", Some("0"), Motion::Right, "5"),
        ("4", "1", Some("1"), Motion::Right, "4"),
        ("5", "0", Some("1"), Motion::Left, "1"),
        ("5", "1", Some("1"), Motion::Right, "5"),
    ];
    TmSpec {
        name: "copy".into(),
        blank: "0".into(),
        start: "1".into(),
        init_symbol: None,
        rows: rows
            .into_iter()
            .map(|(s, r, p, m, n)| TmRow {
                state: s.into(),
                read: r.into(),
                print: p.map(|x: &str| x.into()),
                motion: m,
                next: n.into(),
            })
            .collect(),
    }
}
