//! Grammar and sequence file formats: compositions of the core text blocks.
//!
//! Grammar file: an optional `mode nodeless|node-adding` line, any number of
//! production blocks, then `initial:` followed by a graph block.
//!
//! Sequence file: production blocks, a `universe:` block of `node` lines,
//! then `step <prod> [<prod-id>:<universe-id>]...` lines in application
//! order. Omitted bindings default to the universe slot with the same id.

use mgg_core::graph::{GraphBlock, Slot};
use mgg_core::matching::{Grammar, GrammarMode};
use mgg_core::production::Production;
use mgg_core::sequence::{AnalysisError, CompletedSequence};
use mgg_core::text::{Lines, ParseError};

pub struct GrammarFile {
    pub grammar: Grammar,
}

pub fn parse_grammar(text: &str) -> Result<GrammarFile, String> {
    let mut mode = GrammarMode::Nodeless;
    let mut body = Vec::new();
    // Peel the mode line off, then split productions from the initial block.
    let mut lines = Lines::new(text);
    let mut prod_text = String::new();
    let mut initial_block = GraphBlock::new();
    let mut in_initial = false;
    let mut saw_initial = false;
    while let Some((ln, toks)) = lines.next_line() {
        match toks[0].text {
            "mode" if !in_initial => {
                mode = match toks.get(1).map(|t| t.text) {
                    Some("nodeless") => GrammarMode::Nodeless,
                    Some("node-adding") => GrammarMode::NodeAdding,
                    other => {
                        return Err(format!(
                            "{ln}:1: bad mode `{}` (nodeless or node-adding)",
                            other.unwrap_or("")
                        ))
                    }
                };
            }
            "initial:" => {
                in_initial = true;
                saw_initial = true;
            }
            _ if in_initial => {
                initial_block
                    .take_line(ln, &toks)
                    .map_err(|e| e.to_string())?;
            }
            _ => {
                // Reconstruct the production text verbatim for the shared parser.
                let words: Vec<&str> = toks.iter().map(|t| t.text).collect();
                body.push((ln, words.join(" ")));
            }
        }
    }
    if !saw_initial {
        return Err("missing `initial:` block".into());
    }
    for (_, line) in &body {
        prod_text.push_str(line);
        prod_text.push('\n');
    }
    let productions =
        Production::parse_all(&prod_text).map_err(|e| remap_error(e, &body).to_string())?;
    let initial = initial_block.build().map_err(|e| e.to_string())?;
    let grammar = Grammar::new(productions, mode, initial).map_err(|e| e.to_string())?;
    Ok(GrammarFile { grammar })
}

/// Map a line number in the reassembled production text back to the source.
fn remap_error(e: ParseError, body: &[(usize, String)]) -> ParseError {
    let line = body
        .get(e.line.saturating_sub(1))
        .map(|(ln, _)| *ln)
        .unwrap_or(e.line);
    ParseError::new(line, e.col, e.msg)
}

pub struct SequenceFile {
    pub sequence: CompletedSequence,
}

pub fn parse_sequence(text: &str) -> Result<SequenceFile, String> {
    let mut lines = Lines::new(text);
    let mut prod_body: Vec<(usize, String)> = Vec::new();
    let mut universe: Vec<Slot> = Vec::new();
    let mut steps: Vec<(String, Vec<(String, String)>)> = Vec::new();
    let mut section = "prods";
    while let Some((ln, toks)) = lines.next_line() {
        match (section, toks[0].text) {
            (_, "universe:") => section = "universe",
            ("universe", "node") => {
                if toks.len() != 3 {
                    return Err(format!("{ln}:1: expected `node <id> <label>`"));
                }
                universe.push(Slot::new(toks[1].text, toks[2].text));
            }
            ("universe", "step") | ("steps", "step") => {
                section = "steps";
                if toks.len() < 2 {
                    return Err(format!("{ln}:1: expected `step <prod> [id:id]...`"));
                }
                let mut binds = Vec::new();
                for t in &toks[2..] {
                    let Some((a, b)) = t.text.split_once(':') else {
                        return Err(format!("{ln}:{}: bad binding `{}`", t.col, t.text));
                    };
                    binds.push((a.to_string(), b.to_string()));
                }
                steps.push((toks[1].text.to_string(), binds));
            }
            ("prods", _) => {
                let words: Vec<&str> = toks.iter().map(|t| t.text).collect();
                prod_body.push((ln, words.join(" ")));
            }
            (_, other) => return Err(format!("{ln}:1: unexpected `{other}`")),
        }
    }
    let mut prod_text = String::new();
    for (_, line) in &prod_body {
        prod_text.push_str(line);
        prod_text.push('\n');
    }
    let productions =
        Production::parse_all(&prod_text).map_err(|e| remap_error(e, &prod_body).to_string())?;
    if steps.is_empty() {
        return Err("sequence file has no `step` lines".into());
    }
    let mut items = Vec::new();
    for (name, binds) in &steps {
        let p = productions
            .iter()
            .find(|p| p.name() == *name)
            .ok_or_else(|| format!("step names unknown production `{name}`"))?;
        items.push((p, binds.as_slice()));
    }
    let sequence = CompletedSequence::bind(universe, items).map_err(|e: AnalysisError| e.to_string())?;
    Ok(SequenceFile { sequence })
}
