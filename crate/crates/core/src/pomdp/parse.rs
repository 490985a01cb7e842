//! Reader for the Cassandra `.POMDP` text format.
//!
//! Supported subset: `discount`, `values`, `states`, `actions`,
//! `observations`, `start`, `T`/`O`/`R` lines in all three arities,
//! the `identity` and `uniform` keywords, `*` wildcards and `#` comments.
//! Episodic termination is declared with `reset: <a> : <s> : <s'>`.
//! A tensor cell may be written at most once.

use super::model::{validate_model, ParseDiagnostics, PomdpModel};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("syntax error at {line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unknown identifier `{name}` at {line}:{column}")]
    UnknownIdentifier {
        line: usize,
        column: usize,
        name: String,
    },
    #[error("dimension mismatch at {line}:{column}: {message}")]
    DimensionMismatch {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("duplicate specification at {line}:{column}: {cell}")]
    Duplicate {
        line: usize,
        column: usize,
        cell: String,
    },
    #[error("invalid model:\n{0}")]
    Invalid(ParseDiagnostics),
}

#[derive(Debug, Clone, PartialEq)]
enum TokenKind {
    Colon,
    Word(String),
}

#[derive(Debug, Clone)]
struct Token {
    kind: TokenKind,
    line: usize,
    column: usize,
}

const KEYWORDS: &[&str] = &[
    "discount",
    "values",
    "states",
    "actions",
    "observations",
    "start",
    "T",
    "O",
    "R",
    "reset",
];

fn tokenize(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    for (li, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        };
        let mut word_start: Option<usize> = None;
        let flush = |tokens: &mut Vec<Token>, start: &mut Option<usize>, end: usize| {
            if let Some(s) = start.take() {
                tokens.push(Token {
                    kind: TokenKind::Word(line[s..end].to_string()),
                    line: li + 1,
                    column: s + 1,
                });
            }
        };
        for (ci, ch) in line.char_indices() {
            if ch == ':' {
                flush(&mut tokens, &mut word_start, ci);
                tokens.push(Token {
                    kind: TokenKind::Colon,
                    line: li + 1,
                    column: ci + 1,
                });
            } else if ch.is_whitespace() {
                flush(&mut tokens, &mut word_start, ci);
            } else if word_start.is_none() {
                word_start = Some(ci);
            }
        }
        flush(&mut tokens, &mut word_start, line.len());
    }
    tokens
}

/// One component selector in a `T`/`O`/`R`/`reset` line.
#[derive(Debug, Clone, Copy)]
enum Sel {
    All,
    One(usize),
}

impl Sel {
    fn iter(self, n: usize) -> std::ops::Range<usize> {
        match self {
            Sel::All => 0..n,
            Sel::One(i) => i..i + 1,
        }
    }
}

#[derive(Clone, Copy)]
enum Space {
    States,
    Actions,
    Observations,
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    discount: Option<f64>,
    reward_sign: Option<f64>,
    states: Option<(usize, Option<Vec<String>>)>,
    actions: Option<(usize, Option<Vec<String>>)>,
    observations: Option<(usize, Option<Vec<String>>)>,
    start: Option<Vec<f64>>,
    model: Option<PomdpModel>,
    t_set: Vec<bool>,
    o_set: Vec<bool>,
    r_set: Vec<bool>,
    reset_set: Vec<bool>,
}

/// Parses `.POMDP` text into a validated model.
pub fn parse_pomdp(text: &str) -> Result<PomdpModel, ParseError> {
    let mut p = Parser {
        tokens: tokenize(text),
        pos: 0,
        discount: None,
        reward_sign: None,
        states: None,
        actions: None,
        observations: None,
        start: None,
        model: None,
        t_set: Vec::new(),
        o_set: Vec::new(),
        r_set: Vec::new(),
        reset_set: Vec::new(),
    };
    p.run()?;
    p.finish()
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn eof_pos(&self) -> (usize, usize) {
        self.tokens
            .last()
            .map(|t| (t.line, t.column + 1))
            .unwrap_or((1, 1))
    }

    fn here(&self) -> (usize, usize) {
        self.peek()
            .map(|t| (t.line, t.column))
            .unwrap_or_else(|| self.eof_pos())
    }

    fn syntax(&self, message: impl Into<String>) -> ParseError {
        let (line, column) = self.here();
        ParseError::Syntax {
            line,
            column,
            message: message.into(),
        }
    }

    fn dimension(&self, message: impl Into<String>) -> ParseError {
        let (line, column) = self.here();
        ParseError::DimensionMismatch {
            line,
            column,
            message: message.into(),
        }
    }

    fn is_keyword_at(&self, i: usize) -> bool {
        match (self.tokens.get(i), self.tokens.get(i + 1)) {
            (Some(Token { kind: TokenKind::Word(w), .. }), Some(Token { kind: TokenKind::Colon, .. })) => {
                KEYWORDS.contains(&w.as_str())
            }
            _ => false,
        }
    }

    fn at_statement_end(&self) -> bool {
        self.pos >= self.tokens.len() || self.is_keyword_at(self.pos)
    }

    fn expect_colon(&mut self) -> Result<(), ParseError> {
        match self.peek() {
            Some(Token { kind: TokenKind::Colon, .. }) => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.syntax("expected `:`")),
        }
    }

    fn next_word(&mut self) -> Result<(String, usize, usize), ParseError> {
        match self.peek() {
            Some(Token { kind: TokenKind::Word(w), line, column }) => {
                let out = (w.clone(), *line, *column);
                self.pos += 1;
                Ok(out)
            }
            Some(_) => Err(self.syntax("unexpected `:`")),
            None => Err(self.syntax("unexpected end of input")),
        }
    }

    fn next_number(&mut self) -> Result<f64, ParseError> {
        if self.at_statement_end() {
            return Err(self.dimension("too few values"));
        }
        let (w, line, column) = self.next_word()?;
        w.parse::<f64>().map_err(|_| ParseError::Syntax {
            line,
            column,
            message: format!("expected a number, found `{w}`"),
        })
    }

    /// Reads the remaining words of a statement.
    fn rest_words(&mut self) -> Result<Vec<(String, usize, usize)>, ParseError> {
        let mut out = Vec::new();
        while !self.at_statement_end() {
            out.push(self.next_word()?);
        }
        Ok(out)
    }

    fn run(&mut self) -> Result<(), ParseError> {
        while self.pos < self.tokens.len() {
            if !self.is_keyword_at(self.pos) {
                return Err(self.syntax("expected a keyword followed by `:`"));
            }
            let (kw, _, _) = self.next_word()?;
            self.expect_colon()?;
            match kw.as_str() {
                "discount" => {
                    if self.discount.is_some() {
                        return Err(self.duplicate_here("discount"));
                    }
                    let d = self.next_number()?;
                    self.discount = Some(d);
                    self.end_statement()?;
                }
                "values" => {
                    let (w, line, column) = self.next_word()?;
                    self.reward_sign = Some(match w.as_str() {
                        "reward" => 1.0,
                        "cost" => -1.0,
                        _ => {
                            return Err(ParseError::Syntax {
                                line,
                                column,
                                message: format!("`values` must be reward or cost, found `{w}`"),
                            })
                        }
                    });
                    self.end_statement()?;
                }
                "states" | "actions" | "observations" => self.parse_space(&kw)?,
                "start" => self.parse_start()?,
                "T" => self.parse_t()?,
                "O" => self.parse_o()?,
                "R" => self.parse_r()?,
                "reset" => self.parse_reset()?,
                _ => unreachable!(),
            }
        }
        Ok(())
    }

    fn end_statement(&self) -> Result<(), ParseError> {
        match self.peek() {
            _ if self.at_statement_end() => Ok(()),
            Some(Token { kind: TokenKind::Word(w), .. }) if w.parse::<f64>().is_ok() => {
                Err(self.dimension("unexpected extra values"))
            }
            _ => Err(self.syntax("expected a keyword followed by `:`")),
        }
    }

    fn duplicate_here(&self, cell: impl Into<String>) -> ParseError {
        let (line, column) = self.here();
        ParseError::Duplicate {
            line,
            column,
            cell: cell.into(),
        }
    }

    fn parse_space(&mut self, kw: &str) -> Result<(), ParseError> {
        let words = self.rest_words()?;
        if words.is_empty() {
            return Err(self.syntax(format!("`{kw}` needs a count or a list of names")));
        }
        let spec = if words.len() == 1 && words[0].0.parse::<usize>().is_ok() {
            (words[0].0.parse::<usize>().unwrap(), None)
        } else {
            let names: Vec<String> = words.into_iter().map(|w| w.0).collect();
            (names.len(), Some(names))
        };
        let slot = match kw {
            "states" => &mut self.states,
            "actions" => &mut self.actions,
            _ => &mut self.observations,
        };
        if slot.is_some() {
            return Err(self.duplicate_here(kw.to_string()));
        }
        *slot = Some(spec);
        Ok(())
    }

    fn model_mut(&mut self) -> Result<&mut PomdpModel, ParseError> {
        if self.model.is_none() {
            let (ns, na, no) = match (&self.states, &self.actions, &self.observations) {
                (Some(s), Some(a), Some(o)) => (s.0, a.0, o.0),
                _ => {
                    return Err(self.syntax(
                        "`states`, `actions` and `observations` must precede model entries",
                    ))
                }
            };
            let mut m = PomdpModel::new(ns, na, no);
            m.state_names = self.states.as_ref().unwrap().1.clone();
            m.action_names = self.actions.as_ref().unwrap().1.clone();
            m.observation_names = self.observations.as_ref().unwrap().1.clone();
            self.t_set = vec![false; ns * na * ns];
            self.o_set = vec![false; ns * na * no];
            self.r_set = vec![false; ns * na * ns * no];
            self.reset_set = vec![false; ns * na * ns];
            self.model = Some(m);
        }
        Ok(self.model.as_mut().unwrap())
    }

    fn dims(&mut self) -> Result<(usize, usize, usize), ParseError> {
        let m = self.model_mut()?;
        Ok((m.num_states(), m.num_actions(), m.num_observations()))
    }

    fn resolve(&self, word: &str, line: usize, column: usize, space: Space) -> Result<usize, ParseError> {
        let (n, names) = match space {
            Space::States => self.states.as_ref(),
            Space::Actions => self.actions.as_ref(),
            Space::Observations => self.observations.as_ref(),
        }
        .map(|(n, names)| (*n, names.as_ref()))
        .expect("header checked");
        if let Some(names) = names {
            if let Some(i) = names.iter().position(|x| x == word) {
                return Ok(i);
            }
        }
        match word.parse::<usize>() {
            Ok(i) if i < n => Ok(i),
            _ => Err(ParseError::UnknownIdentifier {
                line,
                column,
                name: word.to_string(),
            }),
        }
    }

    fn selector(&mut self, space: Space) -> Result<Sel, ParseError> {
        if self.at_statement_end() {
            return Err(self.syntax("missing component"));
        }
        let (w, line, column) = self.next_word()?;
        if w == "*" {
            return Ok(Sel::All);
        }
        Ok(Sel::One(self.resolve(&w, line, column, space)?))
    }

    fn next_is_colon(&self) -> bool {
        matches!(self.peek(), Some(Token { kind: TokenKind::Colon, .. }))
    }

    fn parse_start(&mut self) -> Result<(), ParseError> {
        let (ns, _, _) = self.dims()?;
        if self.start.is_some() {
            return Err(self.duplicate_here("start"));
        }
        let words = self.rest_words()?;
        let start = if words.len() == 1 && words[0].0 == "uniform" {
            vec![1.0 / ns as f64; ns]
        } else if words.len() == ns && words.iter().all(|w| w.0.parse::<f64>().is_ok()) {
            words.iter().map(|w| w.0.parse::<f64>().unwrap()).collect()
        } else if words.len() == 1 {
            let (w, line, column) = &words[0];
            let s = self.resolve(w, *line, *column, Space::States)?;
            let mut v = vec![0.0; ns];
            v[s] = 1.0;
            v
        } else {
            return Err(self.dimension(format!(
                "start needs {ns} probabilities, `uniform`, or a state name; found {} values",
                words.len()
            )));
        };
        self.start = Some(start);
        Ok(())
    }

    /// Reads `count` numbers, or the `uniform` keyword meaning `1/row_len`.
    fn read_values(&mut self, count: usize, row_len: usize, allow_identity: bool) -> Result<Vec<f64>, ParseError> {
        if let Some(Token { kind: TokenKind::Word(w), .. }) = self.peek() {
            if w == "uniform" {
                self.pos += 1;
                self.end_statement()?;
                return Ok(vec![1.0 / row_len as f64; count]);
            }
            if w == "identity" {
                if !allow_identity {
                    return Err(self.syntax("`identity` is only valid for a full T matrix"));
                }
                self.pos += 1;
                self.end_statement()?;
                let n = row_len;
                let mut v = vec![0.0; count];
                for i in 0..n {
                    v[i * n + i] = 1.0;
                }
                return Ok(v);
            }
        }
        let mut v = Vec::with_capacity(count);
        for _ in 0..count {
            v.push(self.next_number()?);
        }
        self.end_statement()?;
        Ok(v)
    }

    fn mark(&mut self, which: u8, index: usize, cell: impl FnOnce() -> String) -> Result<(), ParseError> {
        let set = match which {
            b'T' => &mut self.t_set,
            b'O' => &mut self.o_set,
            b'R' => &mut self.r_set,
            _ => &mut self.reset_set,
        };
        if set[index] {
            return Err(self.duplicate_here(cell()));
        }
        set[index] = true;
        Ok(())
    }

    fn parse_t(&mut self) -> Result<(), ParseError> {
        let (ns, na, _) = self.dims()?;
        let a = self.selector(Space::Actions)?;
        let (s, n, values, stride) = if self.next_is_colon() {
            self.pos += 1;
            let s = self.selector(Space::States)?;
            if self.next_is_colon() {
                self.pos += 1;
                let n = self.selector(Space::States)?;
                let p = self.next_number()?;
                self.end_statement()?;
                (s, n, vec![p], 0)
            } else {
                (s, Sel::All, self.read_values(ns, ns, false)?, 1)
            }
        } else {
            (Sel::All, Sel::All, self.read_values(ns * ns, ns, true)?, 2)
        };
        for ai in a.iter(na) {
            for si in s.iter(ns) {
                for ni in n.iter(ns) {
                    let v = match stride {
                        0 => values[0],
                        1 => values[ni],
                        _ => values[si * ns + ni],
                    };
                    let idx = (si * na + ai) * ns + ni;
                    self.mark(b'T', idx, || format!("T: {ai} : {si} : {ni}"))?;
                    self.model.as_mut().unwrap().set_transition(si, ai, ni, v);
                }
            }
        }
        Ok(())
    }

    fn parse_o(&mut self) -> Result<(), ParseError> {
        let (ns, na, no) = self.dims()?;
        let a = self.selector(Space::Actions)?;
        let (n, o, values, stride) = if self.next_is_colon() {
            self.pos += 1;
            let n = self.selector(Space::States)?;
            if self.next_is_colon() {
                self.pos += 1;
                let o = self.selector(Space::Observations)?;
                let p = self.next_number()?;
                self.end_statement()?;
                (n, o, vec![p], 0)
            } else {
                (n, Sel::All, self.read_values(no, no, false)?, 1)
            }
        } else {
            (Sel::All, Sel::All, self.read_values(ns * no, no, false)?, 2)
        };
        for ai in a.iter(na) {
            for ni in n.iter(ns) {
                for oi in o.iter(no) {
                    let v = match stride {
                        0 => values[0],
                        1 => values[oi],
                        _ => values[ni * no + oi],
                    };
                    let idx = (ni * na + ai) * no + oi;
                    self.mark(b'O', idx, || format!("O: {ai} : {ni} : {oi}"))?;
                    self.model.as_mut().unwrap().set_observation(ni, ai, oi, v);
                }
            }
        }
        Ok(())
    }

    fn parse_r(&mut self) -> Result<(), ParseError> {
        let (ns, na, no) = self.dims()?;
        let a = self.selector(Space::Actions)?;
        self.expect_colon()?;
        let s = self.selector(Space::States)?;
        let (n, o, values, stride) = if self.next_is_colon() {
            self.pos += 1;
            let n = self.selector(Space::States)?;
            if self.next_is_colon() {
                self.pos += 1;
                let o = self.selector(Space::Observations)?;
                let v = self.next_number()?;
                self.end_statement()?;
                (n, o, vec![v], 0)
            } else {
                (n, Sel::All, self.read_raw(no)?, 1)
            }
        } else {
            (Sel::All, Sel::All, self.read_raw(ns * no)?, 2)
        };
        let sign = self.reward_sign.unwrap_or(1.0);
        for ai in a.iter(na) {
            for si in s.iter(ns) {
                for ni in n.iter(ns) {
                    for oi in o.iter(no) {
                        let v = match stride {
                            0 => values[0],
                            1 => values[oi],
                            _ => values[ni * no + oi],
                        };
                        let idx = ((si * na + ai) * ns + ni) * no + oi;
                        self.mark(b'R', idx, || format!("R: {ai} : {si} : {ni} : {oi}"))?;
                        self.model.as_mut().unwrap().set_reward(si, ai, ni, oi, sign * v);
                    }
                }
            }
        }
        Ok(())
    }

    fn read_raw(&mut self, count: usize) -> Result<Vec<f64>, ParseError> {
        let mut v = Vec::with_capacity(count);
        for _ in 0..count {
            v.push(self.next_number()?);
        }
        self.end_statement()?;
        Ok(v)
    }

    fn parse_reset(&mut self) -> Result<(), ParseError> {
        let (ns, na, _) = self.dims()?;
        let a = self.selector(Space::Actions)?;
        self.expect_colon()?;
        let s = self.selector(Space::States)?;
        self.expect_colon()?;
        let n = self.selector(Space::States)?;
        self.end_statement()?;
        for ai in a.iter(na) {
            for si in s.iter(ns) {
                for ni in n.iter(ns) {
                    let idx = (si * na + ai) * ns + ni;
                    self.mark(b'E', idx, || format!("reset: {ai} : {si} : {ni}"))?;
                    self.model.as_mut().unwrap().set_terminal(si, ai, ni, true);
                }
            }
        }
        Ok(())
    }

    fn finish(mut self) -> Result<PomdpModel, ParseError> {
        let discount = match self.discount {
            Some(d) => d,
            None => return Err(self.syntax("missing `discount`")),
        };
        self.model_mut()?;
        let mut model = self.model.take().unwrap();
        model.discount = discount;
        if let Some(start) = self.start.take() {
            model.start = start;
        }
        let diagnostics = validate_model(&model);
        if diagnostics.is_empty() {
            Ok(model)
        } else {
            Err(ParseError::Invalid(diagnostics))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "\
# two states, one action
discount: 0.95
values: reward
states: 2
actions: 1
observations: 1
start: uniform
T: 0 identity
O: 0 uniform
";

    #[test]
    fn minimal_identity_uniform() {
        let m = parse_pomdp(MINIMAL).unwrap();
        assert_eq!(m.transition(0, 0, 0), 1.0);
        assert_eq!(m.transition(0, 0, 1), 0.0);
        assert_eq!(m.transition(1, 0, 1), 1.0);
        assert_eq!(m.observation(0, 0, 0), 1.0);
        assert_eq!(m.start, vec![0.5, 0.5]);
        assert_eq!(m.discount, 0.95);
        assert!(!m.has_terminal_transitions());
    }

    #[test]
    fn two_observation_uniform_is_half() {
        let text = MINIMAL.replace("observations: 1", "observations: 2");
        let m = parse_pomdp(&text).unwrap();
        assert_eq!(m.observation_row(1, 0), &[0.5, 0.5]);
    }

    const THREE: &str = "\
discount: 0.9
values: reward
states: s0 s1 s2
actions: go
observations: o
start: s0
T: go : s0 : s1 0.7
T: go : s0 : s2 0.3
T: go : s1 : s1 1.0
T: go : s2
0 0 1
O: * : * : o 1
R: go : s0 : * : * -1.5
reset: go : s2 : s2
";

    #[test]
    fn explicit_entries_and_names() {
        let m = parse_pomdp(THREE).unwrap();
        assert_eq!(m.transition_row(0, 0), &[0.0, 0.7, 0.3]);
        assert_eq!(m.transition_row(2, 0), &[0.0, 0.0, 1.0]);
        assert_eq!(m.start, vec![1.0, 0.0, 0.0]);
        assert_eq!(m.reward(0, 0, 2, 0), -1.5);
        assert_eq!(m.reward(1, 0, 1, 0), 0.0);
        assert!(m.is_terminal(2, 0, 2));
        assert!(!m.is_terminal(0, 0, 1));
        assert_eq!(m.state_names.as_ref().unwrap()[1], "s1");
    }

    #[test]
    fn stochasticity_violation_is_reported() {
        let text = THREE.replace("T: go : s0 : s2 0.3", "T: go : s0 : s2 0.2");
        match parse_pomdp(&text) {
            Err(ParseError::Invalid(d)) => {
                assert_eq!(d.violations.len(), 1);
                assert_eq!(d.violations[0].rule, "stochasticity violation");
                assert_eq!(d.violations[0].location, "(s0, go)");
                assert!(d.to_string().contains("stochasticity violation at (s0, go)"));
            }
            other => panic!("expected invalid model, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_cell_is_rejected() {
        let text = format!("{THREE}T: go : s0 : s1 0.7\n");
        assert!(matches!(parse_pomdp(&text), Err(ParseError::Duplicate { line: 15, .. })));
        let text = format!("{THREE}R: go : s0 : s1 : o 2\n");
        assert!(matches!(parse_pomdp(&text), Err(ParseError::Duplicate { .. })));
    }

    #[test]
    fn unknown_identifier() {
        let text = THREE.replace("T: go : s1 : s1 1.0", "T: go : s1 : s9 1.0");
        match parse_pomdp(&text) {
            Err(ParseError::UnknownIdentifier { name, line, column }) => {
                assert_eq!(name, "s9");
                assert_eq!((line, column), (9, 14));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn dimension_mismatch_on_short_row() {
        let text = THREE.replace("0 0 1", "0 1");
        assert!(matches!(parse_pomdp(&text), Err(ParseError::DimensionMismatch { .. })));
        let text = THREE.replace("0 0 1", "0 0 0 1");
        assert!(matches!(parse_pomdp(&text), Err(ParseError::DimensionMismatch { .. })));
    }

    #[test]
    fn syntax_error_has_position() {
        let text = "discount: 0.9\nstates 2\n";
        match parse_pomdp(text) {
            Err(ParseError::Syntax { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        let text = MINIMAL.replace("discount: 0.95", "discount: abc");
        assert!(matches!(parse_pomdp(&text), Err(ParseError::Syntax { line: 2, column: 11, .. })));
    }

    #[test]
    fn cost_values_are_negated() {
        let text = THREE.replace("values: reward", "values: cost");
        let m = parse_pomdp(&text).unwrap();
        assert_eq!(m.reward(0, 0, 1, 0), 1.5);
    }
}
