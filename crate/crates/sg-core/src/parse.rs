//! Line-oriented model documents.
//!
//! Format (UTF-8, `#` starts a comment anywhere on a line):
//!
//! ```text
//! sg <num-states>
//! state <name> <max|min> [init] [target] [sink]   # one per state, in id order
//! trans <state> <action> <succ>:<prob>[,<succ>:<prob>]*
//! ```
//!
//! State declarations must precede transitions; declaration order fixes state
//! ids. The target and sink self-loops may be omitted and are inserted
//! automatically. Serialization is canonical: states in id order, actions in
//! declaration order, probabilities in shortest round-trip decimal form, so
//! `parse(serialize(g))` reproduces `g` exactly.

use std::collections::HashMap;

use thiserror::Error;

use crate::model::{GameBuilder, ModelError, Player, StateId, StochasticGame};

/// What went wrong, without the position.
#[derive(Clone, PartialEq, Error, Debug)]
pub enum ParseErrorKind {
    #[error("{0}")]
    Syntax(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// A parse failure at a 1-based line and column.
#[derive(Clone, PartialEq, Error, Debug)]
#[error("line {line}, column {col}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub kind: ParseErrorKind,
}

impl ParseError {
    fn syntax(line: usize, col: usize, message: impl Into<String>) -> Self {
        ParseError {
            line,
            col,
            kind: ParseErrorKind::Syntax(message.into()),
        }
    }

    fn model(line: usize, col: usize, err: ModelError) -> Self {
        ParseError {
            line,
            col,
            kind: ParseErrorKind::Model(err),
        }
    }
}

/// Splits a line into `(1-based char column, token)` pairs.
fn tokenize(line: &str) -> Vec<(usize, &str)> {
    let mut tokens = Vec::new();
    let mut start: Option<(usize, usize)> = None; // (byte index, column)
    let mut col = 0;
    for (idx, ch) in line.char_indices() {
        col += 1;
        if ch.is_whitespace() {
            if let Some((s, c)) = start.take() {
                tokens.push((c, &line[s..idx]));
            }
        } else if start.is_none() {
            start = Some((idx, col));
        }
    }
    if let Some((s, c)) = start {
        tokens.push((c, &line[s..]));
    }
    tokens
}

fn valid_name(token: &str) -> bool {
    !token.is_empty()
        && token
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
}

/// Parses a model document into a validated game.
pub fn parse_model(text: &str) -> Result<StochasticGame, ParseError> {
    let mut builder = GameBuilder::new();
    let mut header: Option<(usize, usize, usize)> = None; // (line, col, declared count)
    let mut decl_pos: HashMap<String, (usize, usize)> = HashMap::new();
    let mut state_count = 0usize;
    let mut seen_trans = false;

    for (line_no, raw) in text.lines().enumerate() {
        let line_no = line_no + 1;
        let content = raw.split('#').next().unwrap_or("");
        let tokens = tokenize(content);
        let Some(&(key_col, keyword)) = tokens.first() else {
            continue;
        };

        if header.is_none() {
            if keyword != "sg" {
                return Err(ParseError::syntax(
                    line_no,
                    key_col,
                    "expected `sg <num-states>` header",
                ));
            }
            let &(col, count) = tokens.get(1).ok_or_else(|| {
                ParseError::syntax(line_no, key_col, "missing state count after `sg`")
            })?;
            let declared: usize = count.parse().map_err(|_| {
                ParseError::syntax(line_no, col, format!("invalid state count `{count}`"))
            })?;
            if let Some(&(c, extra)) = tokens.get(2) {
                return Err(ParseError::syntax(
                    line_no,
                    c,
                    format!("unexpected token `{extra}` after header"),
                ));
            }
            header = Some((line_no, key_col, declared));
            continue;
        }

        match keyword {
            "state" => {
                if seen_trans {
                    return Err(ParseError::syntax(
                        line_no,
                        key_col,
                        "state declarations must precede transitions",
                    ));
                }
                parse_state_line(&mut builder, &tokens, line_no)?;
                let (name_col, name) = tokens[1];
                decl_pos.insert(name.to_string(), (line_no, name_col));
                state_count += 1;
            }
            "trans" => {
                seen_trans = true;
                parse_trans_line(&mut builder, &tokens, line_no, key_col)?;
            }
            other => {
                return Err(ParseError::syntax(
                    line_no,
                    key_col,
                    format!("unknown directive `{other}`"),
                ));
            }
        }
    }

    let Some((h_line, h_col, declared)) = header else {
        return Err(ParseError::syntax(
            1,
            1,
            "expected `sg <num-states>` header",
        ));
    };
    if declared != state_count {
        return Err(ParseError::syntax(
            h_line,
            h_col,
            format!("header declares {declared} states but {state_count} are defined"),
        ));
    }

    builder.finish().map_err(|err| {
        let pos = match &err {
            ModelError::BlockingState(name)
            | ModelError::TargetOwner(name)
            | ModelError::SinkOwner(name)
            | ModelError::TargetSinkConflict(name) => decl_pos.get(name).copied(),
            ModelError::BoundarySelfLoop { state, .. } => decl_pos.get(state).copied(),
            _ => None,
        }
        .unwrap_or((h_line, h_col));
        ParseError::model(pos.0, pos.1, err)
    })
}

fn parse_state_line(
    builder: &mut GameBuilder,
    tokens: &[(usize, &str)],
    line_no: usize,
) -> Result<(), ParseError> {
    let &(name_col, name) = tokens.get(1).ok_or_else(|| {
        ParseError::syntax(line_no, tokens[0].0, "missing state name after `state`")
    })?;
    if !valid_name(name) {
        return Err(ParseError::syntax(
            line_no,
            name_col,
            format!("invalid state name `{name}`"),
        ));
    }
    let &(owner_col, owner) = tokens
        .get(2)
        .ok_or_else(|| ParseError::syntax(line_no, name_col, "missing owner (`max` or `min`)"))?;
    let owner = match owner {
        "max" => Player::Max,
        "min" => Player::Min,
        other => {
            return Err(ParseError::syntax(
                line_no,
                owner_col,
                format!("expected owner `max` or `min`, found `{other}`"),
            ));
        }
    };
    let id = builder
        .add_state(name, owner)
        .map_err(|e| ParseError::model(line_no, name_col, e))?;

    let mut seen_flags: Vec<&str> = Vec::new();
    for &(flag_col, flag) in &tokens[3..] {
        if seen_flags.contains(&flag) {
            return Err(ParseError::syntax(
                line_no,
                flag_col,
                format!("flag `{flag}` repeated"),
            ));
        }
        seen_flags.push(flag);
        let marked = match flag {
            "init" => builder.mark_initial(id),
            "target" => builder.mark_target(id),
            "sink" => builder.mark_sink(id),
            other => {
                return Err(ParseError::syntax(
                    line_no,
                    flag_col,
                    format!("unknown state flag `{other}`"),
                ));
            }
        };
        marked.map_err(|e| ParseError::model(line_no, flag_col, e))?;
    }
    Ok(())
}

fn parse_trans_line(
    builder: &mut GameBuilder,
    tokens: &[(usize, &str)],
    line_no: usize,
    key_col: usize,
) -> Result<(), ParseError> {
    let &(state_col, state_name) = tokens
        .get(1)
        .ok_or_else(|| ParseError::syntax(line_no, key_col, "missing state name after `trans`"))?;
    let state = builder.state_id(state_name).ok_or_else(|| {
        ParseError::model(
            line_no,
            state_col,
            ModelError::UnknownState(state_name.to_string()),
        )
    })?;
    let &(label_col, label) = tokens
        .get(2)
        .ok_or_else(|| ParseError::syntax(line_no, state_col, "missing action label"))?;
    if !valid_name(label) {
        return Err(ParseError::syntax(
            line_no,
            label_col,
            format!("invalid action label `{label}`"),
        ));
    }
    let &(dist_col, dist_token) = tokens
        .get(3)
        .ok_or_else(|| ParseError::syntax(line_no, label_col, "missing distribution"))?;
    if let Some(&(c, extra)) = tokens.get(4) {
        return Err(ParseError::syntax(
            line_no,
            c,
            format!("unexpected token `{extra}` after distribution"),
        ));
    }

    // Walk the `succ:prob` entries, tracking the column of each inside the
    // distribution token for precise error positions.
    let mut dist: Vec<(StateId, f64)> = Vec::new();
    let mut entry_cols: HashMap<String, usize> = HashMap::new();
    let mut offset = 0usize; // chars consumed inside dist_token
    for entry in dist_token.split(',') {
        let entry_col = dist_col + offset;
        offset += entry.chars().count() + 1;
        let Some((succ_name, prob_text)) = entry.split_once(':') else {
            return Err(ParseError::syntax(
                line_no,
                entry_col,
                format!("expected `succ:prob`, found `{entry}`"),
            ));
        };
        let succ = builder.state_id(succ_name).ok_or_else(|| {
            ParseError::model(
                line_no,
                entry_col,
                ModelError::UnknownState(succ_name.to_string()),
            )
        })?;
        let prob_col = entry_col + succ_name.chars().count() + 1;
        let prob: f64 = prob_text.parse().map_err(|_| {
            ParseError::syntax(
                line_no,
                prob_col,
                format!("invalid probability `{prob_text}`"),
            )
        })?;
        entry_cols.entry(succ_name.to_string()).or_insert(entry_col);
        dist.push((succ, prob));
    }

    builder.add_transition(state, label, &dist).map_err(|err| {
        let col = match &err {
            ModelError::DuplicateAction { .. } => label_col,
            ModelError::DuplicateSuccessor { succ, .. }
            | ModelError::ProbabilityOutOfRange { succ, .. } => {
                entry_cols.get(succ).copied().unwrap_or(dist_col)
            }
            _ => dist_col,
        };
        ParseError::model(line_no, col, err)
    })
}

/// Serializes a game to its canonical document form.
pub fn serialize_model(g: &StochasticGame) -> String {
    let mut out = String::new();
    out.push_str(&format!("sg {}\n", g.num_states()));
    for (idx, st) in g.states().iter().enumerate() {
        let id = StateId(idx);
        out.push_str(&format!("state {} {}", st.name(), st.owner()));
        if id == g.initial() {
            out.push_str(" init");
        }
        if id == g.target() {
            out.push_str(" target");
        }
        if id == g.sink() {
            out.push_str(" sink");
        }
        out.push('\n');
    }
    for st in g.states() {
        for action in st.actions() {
            let entries: Vec<String> = action
                .dist()
                .iter()
                .map(|&(succ, p)| format!("{}:{}", g.state(succ).name(), p))
                .collect();
            out.push_str(&format!(
                "trans {} {} {}\n",
                st.name(),
                action.label(),
                entries.join(",")
            ));
        }
    }
    out
}
