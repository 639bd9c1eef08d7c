//! Loader and exporter for the classic `.pomdp` text format (a subset).
//!
//! Supported directives, in a preamble-then-entries order:
//!
//! ```text
//! discount: <real>
//! values: reward
//! states: <count | names...>        # likewise actions:, observations:
//! start: <probs...>                 # optional; uniform when absent
//! T: <a> : <s> : <s'> <prob>
//! O: <a> : <s'> : <o> <prob>
//! R: <a> : <s> : * : * <real>
//! ```
//!
//! `#` starts a comment, whitespace is free-form, identifiers may be names or
//! 0-based indices, and `*` expands an axis slot. Observation rows condition
//! on `(action, next state)` and are presented across every source state by
//! the model accessor. Unspecified probability entries default to zero, so a
//! file that never fills a row fails model validation — syntax problems
//! report line and column, table problems report the offending coordinates.

use crate::{EnvError, Result};
use pomdp_core::{validate, DiscreteDistribution, ObservationModel, Pomdp, TerminalSpec};
use std::path::Path;

// ── Tokenizer ──

#[derive(Debug, Clone, Copy)]
struct Tok<'a> {
    text: &'a str,
    line: usize,
    col: usize,
}

fn tokenize(line: &str, line_no: usize) -> Vec<Tok<'_>> {
    let mut toks = Vec::new();
    let mut start: Option<usize> = None;
    for (i, ch) in line.char_indices() {
        if ch == '#' {
            if let Some(s) = start.take() {
                toks.push(Tok { text: &line[s..i], line: line_no, col: s + 1 });
            }
            return toks;
        }
        if ch == ':' || ch.is_whitespace() {
            if let Some(s) = start.take() {
                toks.push(Tok { text: &line[s..i], line: line_no, col: s + 1 });
            }
            if ch == ':' {
                toks.push(Tok { text: ":", line: line_no, col: i + 1 });
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        toks.push(Tok { text: &line[s..], line: line_no, col: s + 1 });
    }
    toks
}

fn parse_err(line: usize, col: usize, message: impl Into<String>) -> EnvError {
    EnvError::Parse { line, col, message: message.into() }
}

// ── Axis bookkeeping ──

struct Axis {
    what: &'static str,
    names: Option<Vec<String>>,
    size: usize,
}

impl Axis {
    /// Resolves one slot token to concrete indices (`*` fans out).
    fn resolve(&self, tok: &Tok<'_>) -> Result<Vec<usize>> {
        if tok.text == "*" {
            return Ok((0..self.size).collect());
        }
        if let Some(names) = &self.names {
            if let Some(i) = names.iter().position(|n| n == tok.text) {
                return Ok(vec![i]);
            }
        }
        if let Ok(i) = tok.text.parse::<usize>() {
            if i < self.size {
                return Ok(vec![i]);
            }
            return Err(parse_err(
                tok.line,
                tok.col,
                format!("{} index {} out of range ({} declared)", self.what, i, self.size),
            ));
        }
        Err(parse_err(
            tok.line,
            tok.col,
            format!("unknown {} identifier `{}`", self.what, tok.text),
        ))
    }
}

fn parse_real(tok: &Tok<'_>) -> Result<f64> {
    tok.text
        .parse::<f64>()
        .map_err(|_| parse_err(tok.line, tok.col, format!("expected a number, found `{}`", tok.text)))
}

fn expect_colon(toks: &[Tok<'_>], i: usize, line: usize) -> Result<()> {
    match toks.get(i) {
        Some(t) if t.text == ":" => Ok(()),
        Some(t) => Err(parse_err(t.line, t.col, format!("expected `:`, found `{}`", t.text))),
        None => {
            let col = toks.last().map(|t| t.col + t.text.len()).unwrap_or(1);
            Err(parse_err(line, col, "line ends where `:` was expected"))
        }
    }
}

// ── Parser ──

struct Builder {
    discount: Option<f64>,
    values_seen: bool,
    states: Option<Axis>,
    actions: Option<Axis>,
    observations: Option<Axis>,
    start: Option<Vec<f64>>,
    transition: Vec<Vec<f64>>,  // s * A + a -> over s'
    observation: Vec<Vec<f64>>, // a * S + s' -> over o
    reward: Vec<f64>,           // s * A + a
}

impl Builder {
    fn preamble_complete(&self) -> bool {
        self.discount.is_some()
            && self.values_seen
            && self.states.is_some()
            && self.actions.is_some()
            && self.observations.is_some()
    }

    fn allocate_tables(&mut self) {
        if self.transition.is_empty() {
            let s = self.states.as_ref().unwrap().size;
            let a = self.actions.as_ref().unwrap().size;
            let o = self.observations.as_ref().unwrap().size;
            self.transition = vec![vec![0.0; s]; s * a];
            self.observation = vec![vec![0.0; o]; a * s];
            self.reward = vec![0.0; s * a];
        }
    }
}

fn parse_axis_decl(toks: &[Tok<'_>], what: &'static str) -> Result<Axis> {
    expect_colon(toks, 1, toks[0].line)?;
    let rest = &toks[2..];
    if rest.is_empty() {
        return Err(parse_err(toks[0].line, toks[0].col, format!("`{what}:` needs a count or names")));
    }
    if rest.len() == 1 && rest[0].text.chars().all(|c| c.is_ascii_digit()) {
        let size = rest[0].text.parse::<usize>().unwrap();
        if size == 0 {
            return Err(parse_err(rest[0].line, rest[0].col, format!("{what} count must be positive")));
        }
        return Ok(Axis { what, names: None, size });
    }
    let names: Vec<String> = rest.iter().map(|t| t.text.to_string()).collect();
    for (i, a) in names.iter().enumerate() {
        if names[i + 1..].contains(a) {
            return Err(parse_err(toks[0].line, toks[0].col, format!("duplicate {what} name `{a}`")));
        }
    }
    Ok(Axis { what, size: names.len(), names: Some(names) })
}

/// Parses `.pomdp` text into a model. See the module docs for the grammar.
pub fn parse_pomdp_file(text: &str) -> Result<Pomdp> {
    let mut b = Builder {
        discount: None,
        values_seen: false,
        states: None,
        actions: None,
        observations: None,
        start: None,
        transition: Vec::new(),
        observation: Vec::new(),
        reward: Vec::new(),
    };

    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let toks = tokenize(raw_line, line_no);
        if toks.is_empty() {
            continue;
        }
        let head = toks[0];
        let is_entry = matches!(head.text, "T" | "O" | "R" | "start");
        if is_entry && !b.preamble_complete() {
            return Err(parse_err(
                head.line,
                head.col,
                "discount, values, states, actions, and observations must come first",
            ));
        }
        match head.text {
            "discount" => {
                expect_colon(&toks, 1, line_no)?;
                let tok = toks.get(2).ok_or_else(|| parse_err(line_no, head.col, "discount needs a value"))?;
                if b.discount.replace(parse_real(tok)?).is_some() {
                    return Err(parse_err(head.line, head.col, "duplicate discount directive"));
                }
            }
            "values" => {
                expect_colon(&toks, 1, line_no)?;
                match toks.get(2) {
                    Some(t) if t.text == "reward" => b.values_seen = true,
                    Some(t) => {
                        return Err(parse_err(t.line, t.col, format!("only `values: reward` is supported, found `{}`", t.text)))
                    }
                    None => return Err(parse_err(line_no, head.col, "values needs `reward`")),
                }
            }
            "states" | "actions" | "observations" => {
                let axis = parse_axis_decl(&toks, match head.text {
                    "states" => "state",
                    "actions" => "action",
                    _ => "observation",
                })?;
                let slot = match head.text {
                    "states" => &mut b.states,
                    "actions" => &mut b.actions,
                    _ => &mut b.observations,
                };
                if slot.replace(axis).is_some() {
                    return Err(parse_err(head.line, head.col, format!("duplicate {} directive", head.text)));
                }
            }
            "start" => {
                expect_colon(&toks, 1, line_no)?;
                let n = b.states.as_ref().unwrap().size;
                let rest = &toks[2..];
                if rest.len() != n {
                    return Err(parse_err(
                        head.line,
                        head.col,
                        format!("start needs {n} probabilities, found {}", rest.len()),
                    ));
                }
                let mut probs = Vec::with_capacity(n);
                for t in rest {
                    probs.push(parse_real(t)?);
                }
                if b.start.replace(probs).is_some() {
                    return Err(parse_err(head.line, head.col, "duplicate start directive"));
                }
            }
            "T" => {
                b.allocate_tables();
                // T: a : s : s' prob
                expect_colon(&toks, 1, line_no)?;
                expect_colon(&toks, 3, line_no)?;
                expect_colon(&toks, 5, line_no)?;
                if toks.len() != 8 {
                    return Err(parse_err(head.line, head.col, "expected `T: <a> : <s> : <s'> <prob>`"));
                }
                let actions = b.actions.as_ref().unwrap().resolve(&toks[2])?;
                let states = b.states.as_ref().unwrap().resolve(&toks[4])?;
                let nexts = b.states.as_ref().unwrap().resolve(&toks[6])?;
                let p = parse_real(&toks[7])?;
                let n_actions = b.actions.as_ref().unwrap().size;
                for &s in &states {
                    for &a in &actions {
                        for &s2 in &nexts {
                            b.transition[s * n_actions + a][s2] = p;
                        }
                    }
                }
            }
            "O" => {
                b.allocate_tables();
                // O: a : s' : o prob
                expect_colon(&toks, 1, line_no)?;
                expect_colon(&toks, 3, line_no)?;
                expect_colon(&toks, 5, line_no)?;
                if toks.len() != 8 {
                    return Err(parse_err(head.line, head.col, "expected `O: <a> : <s'> : <o> <prob>`"));
                }
                let actions = b.actions.as_ref().unwrap().resolve(&toks[2])?;
                let nexts = b.states.as_ref().unwrap().resolve(&toks[4])?;
                let obs = b.observations.as_ref().unwrap().resolve(&toks[6])?;
                let p = parse_real(&toks[7])?;
                let n_states = b.states.as_ref().unwrap().size;
                for &a in &actions {
                    for &s2 in &nexts {
                        for &o in &obs {
                            b.observation[a * n_states + s2][o] = p;
                        }
                    }
                }
            }
            "R" => {
                b.allocate_tables();
                // R: a : s : * : * real
                expect_colon(&toks, 1, line_no)?;
                expect_colon(&toks, 3, line_no)?;
                expect_colon(&toks, 5, line_no)?;
                expect_colon(&toks, 7, line_no)?;
                if toks.len() != 10 {
                    return Err(parse_err(head.line, head.col, "expected `R: <a> : <s> : * : * <real>`"));
                }
                for slot in [&toks[6], &toks[8]] {
                    if slot.text != "*" {
                        return Err(parse_err(
                            slot.line,
                            slot.col,
                            "only state-action rewards are supported: the last two slots must be `*`",
                        ));
                    }
                }
                let actions = b.actions.as_ref().unwrap().resolve(&toks[2])?;
                let states = b.states.as_ref().unwrap().resolve(&toks[4])?;
                let r = parse_real(&toks[9])?;
                let n_actions = b.actions.as_ref().unwrap().size;
                for &s in &states {
                    for &a in &actions {
                        b.reward[s * n_actions + a] = r;
                    }
                }
            }
            other => {
                return Err(parse_err(head.line, head.col, format!("unknown directive `{other}`")));
            }
        }
    }

    if !b.preamble_complete() {
        let mut missing = Vec::new();
        if b.discount.is_none() {
            missing.push("discount");
        }
        if !b.values_seen {
            missing.push("values");
        }
        if b.states.is_none() {
            missing.push("states");
        }
        if b.actions.is_none() {
            missing.push("actions");
        }
        if b.observations.is_none() {
            missing.push("observations");
        }
        return Err(parse_err(1, 1, format!("missing directives: {}", missing.join(", "))));
    }
    b.allocate_tables();

    let n_states = b.states.as_ref().unwrap().size;
    let n_actions = b.actions.as_ref().unwrap().size;
    let n_obs = b.observations.as_ref().unwrap().size;
    let initial = match b.start.take() {
        Some(probs) => DiscreteDistribution::from_weights_unchecked(probs),
        None => DiscreteDistribution::uniform(n_states),
    };
    let transition = b
        .transition
        .drain(..)
        .map(DiscreteDistribution::from_weights_unchecked)
        .collect();
    let observation = ObservationModel::ByActionNext(
        b.observation
            .drain(..)
            .map(DiscreteDistribution::from_weights_unchecked)
            .collect(),
    );

    let pomdp = Pomdp::new(
        n_states,
        n_actions,
        n_obs,
        transition,
        observation,
        b.reward.clone(),
        b.discount.unwrap(),
        initial,
        None,
    )?
    .with_labels(
        b.states.as_ref().and_then(|a| a.names.clone()),
        b.actions.as_ref().and_then(|a| a.names.clone()),
        b.observations.as_ref().and_then(|a| a.names.clone()),
    );

    let diagnostics = validate(&pomdp, &TerminalSpec::none());
    if !diagnostics.is_empty() {
        return Err(EnvError::Invalid {
            diagnostics: diagnostics.iter().map(|d| d.to_string()).collect(),
        });
    }
    Ok(pomdp)
}

/// Reads and parses a `.pomdp` file from disk.
pub fn load_pomdp_file(path: impl AsRef<Path>) -> Result<Pomdp> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| EnvError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_pomdp_file(&text)
}

// ── Exporter ──

fn axis_names(labels: Option<&[String]>, n: usize) -> Option<Vec<String>> {
    let labels = labels?;
    if labels.len() != n {
        return None;
    }
    let ident = |s: &String| {
        !s.is_empty()
            && !s.chars().all(|c| c.is_ascii_digit())
            && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
    };
    if labels.iter().all(ident) {
        Some(labels.to_vec())
    } else {
        None
    }
}

fn slot(names: &Option<Vec<String>>, i: usize) -> String {
    match names {
        Some(n) => n[i].clone(),
        None => i.to_string(),
    }
}

/// Renders a model back into the file format, writing only nonzero entries in
/// canonical order. Numbers use the shortest representation that re-parses to
/// the identical bits, so a parse/export/parse cycle is lossless. Labels are
/// kept when they survive as identifiers, otherwise the axis is written as a
/// count. Models whose observation rows depend on the source state cannot be
/// expressed in this format.
pub fn export_pomdp_file(pomdp: &Pomdp) -> Result<String> {
    match pomdp.observation_model() {
        ObservationModel::ByNext(_) | ObservationModel::ByActionNext(_) => {}
        ObservationModel::Full(_) => {
            return Err(EnvError::Unrepresentable(
                "observation rows conditioned on the source state".into(),
            ))
        }
    }
    let (ns, na, no) = (pomdp.n_states(), pomdp.n_actions(), pomdp.n_obs());
    let state_names = axis_names(pomdp.state_labels(), ns);
    let action_names = axis_names(pomdp.action_labels(), na);
    let obs_names = axis_names(pomdp.obs_labels(), no);

    let mut out = String::new();
    out.push_str(&format!("discount: {}\n", pomdp.gamma()));
    out.push_str("values: reward\n");
    let axis_line = |key: &str, names: &Option<Vec<String>>, n: usize| match names {
        Some(list) => format!("{key}: {}\n", list.join(" ")),
        None => format!("{key}: {n}\n"),
    };
    out.push_str(&axis_line("states", &state_names, ns));
    out.push_str(&axis_line("actions", &action_names, na));
    out.push_str(&axis_line("observations", &obs_names, no));
    let start: Vec<String> = pomdp.initial().probs().iter().map(|p| p.to_string()).collect();
    out.push_str(&format!("start: {}\n", start.join(" ")));

    out.push('\n');
    for a in 0..na {
        for s in 0..ns {
            for s2 in 0..ns {
                let p = pomdp.transition_row(s, a).prob(s2);
                if p != 0.0 {
                    out.push_str(&format!(
                        "T: {} : {} : {} {}\n",
                        slot(&action_names, a),
                        slot(&state_names, s),
                        slot(&state_names, s2),
                        p
                    ));
                }
            }
        }
    }
    out.push('\n');
    for a in 0..na {
        for s2 in 0..ns {
            // Rows never depend on the source state here (checked above).
            let row = pomdp.obs_row(0, a, s2);
            for o in 0..no {
                let p = row.prob(o);
                if p != 0.0 {
                    out.push_str(&format!(
                        "O: {} : {} : {} {}\n",
                        slot(&action_names, a),
                        slot(&state_names, s2),
                        slot(&obs_names, o),
                        p
                    ));
                }
            }
        }
    }
    out.push('\n');
    for a in 0..na {
        for s in 0..ns {
            let r = pomdp.reward(s, a);
            if r != 0.0 {
                out.push_str(&format!(
                    "R: {} : {} : * : * {}\n",
                    slot(&action_names, a),
                    slot(&state_names, s),
                    r
                ));
            }
        }
    }
    Ok(out)
}
