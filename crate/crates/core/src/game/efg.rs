//! Reader and writer for the `.efg` extensive-form text format.
//!
//! Supported dialect:
//!
//! ```text
//! EFG 2 R "title" { "Player 1" "Player 2" }
//! "comment"
//!
//! c "node" 1 "infoset" { "H" 1/2 "T" 1/2 } 0
//! p "node" 1 1 "infoset" { "a" "b" } 0
//! t "node" 1 "outcome" { 1, -1 }
//! ```
//!
//! Nodes appear in preorder. A decision or chance record may omit the
//! infoset name and action list when the information set was already
//! declared; a terminal may omit the payoff list when it reuses an outcome
//! number. Outcomes attached to non-terminal nodes are accumulated into the
//! payoffs of every terminal below them.

use std::collections::HashMap;
use std::fmt::Write;

use super::{ExtensiveFormGame, Node, Number, TreeNode};
use crate::error::GameError;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Word(String),
    Str(String),
    Num(String),
    Open,
    Close,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

fn tokenize(text: &str) -> Result<Vec<Token>, GameError> {
    let mut out = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
        let advance = |i: &mut usize, line: &mut usize, col: &mut usize| {
            if chars[*i] == '\n' {
                *line += 1;
                *col = 1;
            } else {
                *col += 1;
            }
            *i += 1;
        };
        if c.is_whitespace() || c == ',' {
            advance(&mut i, &mut line, &mut col);
            continue;
        }
        match c {
            '{' | '}' => {
                out.push(Token {
                    tok: if c == '{' { Tok::Open } else { Tok::Close },
                    line: tl,
                    column: tc,
                });
                advance(&mut i, &mut line, &mut col);
            }
            '"' => {
                advance(&mut i, &mut line, &mut col);
                let mut s = String::new();
                loop {
                    if i >= chars.len() {
                        return Err(GameError::Syntax {
                            line: tl,
                            column: tc,
                            message: "unterminated string".into(),
                        });
                    }
                    let ch = chars[i];
                    if ch == '\\' && i + 1 < chars.len() {
                        advance(&mut i, &mut line, &mut col);
                        s.push(chars[i]);
                        advance(&mut i, &mut line, &mut col);
                        continue;
                    }
                    advance(&mut i, &mut line, &mut col);
                    if ch == '"' {
                        break;
                    }
                    s.push(ch);
                }
                out.push(Token {
                    tok: Tok::Str(s),
                    line: tl,
                    column: tc,
                });
            }
            _ => {
                let mut s = String::new();
                while i < chars.len()
                    && !chars[i].is_whitespace()
                    && !matches!(chars[i], '{' | '}' | '"' | ',')
                {
                    s.push(chars[i]);
                    advance(&mut i, &mut line, &mut col);
                }
                let first = s.chars().next().unwrap_or(' ');
                let tok = if first.is_ascii_digit() || first == '-' || first == '+' || first == '.'
                {
                    Tok::Num(s)
                } else {
                    Tok::Word(s)
                };
                out.push(Token {
                    tok,
                    line: tl,
                    column: tc,
                });
            }
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    n_players: usize,
    /// (player or 0 for chance, infoset number) -> (name, actions, chance probs)
    infosets: HashMap<(usize, i64), (String, Vec<String>, Vec<Number>)>,
    outcomes: HashMap<i64, Vec<Number>>,
    path: Vec<String>,
}

impl Parser {
    fn syntax(&self, message: impl Into<String>) -> GameError {
        let (line, column) = match self.toks.get(self.pos) {
            Some(t) => (t.line, t.column),
            None => self
                .toks
                .last()
                .map(|t| (t.line, t.column + 1))
                .unwrap_or((1, 1)),
        };
        GameError::Syntax {
            line,
            column,
            message: message.into(),
        }
    }

    fn semantic(&self, message: impl Into<String>) -> GameError {
        GameError::Semantic {
            path: self.path.join("/"),
            message: message.into(),
        }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn next(&mut self, what: &str) -> Result<Tok, GameError> {
        let t = self
            .toks
            .get(self.pos)
            .map(|t| t.tok.clone())
            .ok_or_else(|| self.syntax(format!("unexpected end of input, expected {what}")))?;
        self.pos += 1;
        Ok(t)
    }

    fn string(&mut self, what: &str) -> Result<String, GameError> {
        match self.next(what)? {
            Tok::Str(s) => Ok(s),
            _ => {
                self.pos -= 1;
                Err(self.syntax(format!("expected {what}")))
            }
        }
    }

    fn integer(&mut self, what: &str) -> Result<i64, GameError> {
        match self.next(what)? {
            Tok::Num(s) => s.parse().map_err(|_| {
                self.pos -= 1;
                self.syntax(format!("expected integer {what}, found {s:?}"))
            }),
            _ => {
                self.pos -= 1;
                Err(self.syntax(format!("expected integer {what}")))
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<Number, GameError> {
        match self.next(what)? {
            Tok::Num(s) => s.parse().map_err(|e: String| {
                self.pos -= 1;
                self.syntax(e)
            }),
            _ => {
                self.pos -= 1;
                Err(self.syntax(format!("expected number {what}")))
            }
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), GameError> {
        if self.next(what)? == tok {
            Ok(())
        } else {
            self.pos -= 1;
            Err(self.syntax(format!("expected {what}")))
        }
    }

    fn header(&mut self) -> Result<(String, Vec<String>), GameError> {
        match self.next("EFG header")? {
            Tok::Word(w) if w == "EFG" => {}
            _ => {
                self.pos -= 1;
                return Err(self.syntax("file must start with EFG"));
            }
        }
        let version = self.integer("format version")?;
        if version != 2 {
            self.pos -= 1;
            return Err(self.syntax(format!("unsupported EFG version {version}")));
        }
        match self.next("number type")? {
            Tok::Word(w) if w == "R" || w == "D" => {}
            _ => {
                self.pos -= 1;
                return Err(self.syntax("expected R or D"));
            }
        }
        let title = self.string("title")?;
        self.expect(Tok::Open, "'{' before player list")?;
        let mut players = Vec::new();
        loop {
            match self.next("player name")? {
                Tok::Str(s) => players.push(s),
                Tok::Close => break,
                _ => {
                    self.pos -= 1;
                    return Err(self.syntax("expected player name"));
                }
            }
        }
        if players.is_empty() {
            return Err(self.syntax("player list is empty"));
        }
        // Optional comment string.
        if matches!(self.peek(), Some(Tok::Str(_))) {
            self.pos += 1;
        }
        Ok((title, players))
    }

    fn payoff_list(&mut self) -> Result<Vec<Number>, GameError> {
        self.expect(Tok::Open, "'{' before payoffs")?;
        let mut v = Vec::new();
        while !matches!(self.peek(), Some(Tok::Close)) {
            v.push(self.number("payoff")?);
        }
        self.pos += 1;
        if v.len() != self.n_players {
            return Err(self.semantic(format!(
                "outcome has {} payoffs, expected {}",
                v.len(),
                self.n_players
            )));
        }
        Ok(v)
    }

    /// `outcome [name {payoffs}]`; returns the payoff vector, if any.
    fn outcome(&mut self) -> Result<Option<Vec<Number>>, GameError> {
        let id = self.integer("outcome number")?;
        if matches!(self.peek(), Some(Tok::Str(_))) {
            self.pos += 1;
            let pay = self.payoff_list()?;
            if id != 0 {
                self.outcomes.insert(id, pay.clone());
            }
            return Ok(Some(pay));
        }
        if id == 0 {
            return Ok(None);
        }
        match self.outcomes.get(&id) {
            Some(p) => Ok(Some(p.clone())),
            None => Err(self.semantic(format!("outcome {id} used before definition"))),
        }
    }

    fn node(&mut self, inherited: &[Number]) -> Result<TreeNode, GameError> {
        let kind = match self.next("node record")? {
            Tok::Word(w) => w,
            _ => {
                self.pos -= 1;
                return Err(self.syntax("expected node type c, p or t"));
            }
        };
        let label = self.string("node name")?;
        match kind.as_str() {
            "t" => {
                let pay = self.outcome()?;
                let mut total = inherited.to_vec();
                if let Some(p) = pay {
                    for (t, v) in total.iter_mut().zip(p) {
                        *t = t.add(v);
                    }
                }
                Ok(TreeNode::Terminal {
                    label,
                    payoffs: total,
                })
            }
            "c" | "p" => {
                let player = if kind == "p" {
                    let p = self.integer("player number")?;
                    if p < 1 || p as usize > self.n_players {
                        self.pos -= 1;
                        return Err(self.syntax(format!("player {p} out of range")));
                    }
                    p as usize
                } else {
                    0
                };
                let infoset = self.integer("information set number")?;
                let key = (player, infoset);
                if matches!(self.peek(), Some(Tok::Str(_))) {
                    let name = self.string("information set name")?;
                    self.expect(Tok::Open, "'{' before actions")?;
                    let mut actions = Vec::new();
                    let mut probs = Vec::new();
                    while !matches!(self.peek(), Some(Tok::Close)) {
                        actions.push(self.string("action label")?);
                        if kind == "c" {
                            probs.push(self.number("chance probability")?);
                        }
                    }
                    self.pos += 1;
                    if let Some((_, prev, prev_probs)) = self.infosets.get(&key) {
                        if *prev != actions || *prev_probs != probs {
                            return Err(self.semantic(format!(
                                "information set {infoset} redeclared with different actions"
                            )));
                        }
                    }
                    self.infosets.insert(key, (name, actions, probs));
                }
                let (name, actions, probs) = self.infosets.get(&key).cloned().ok_or_else(|| {
                    self.semantic(format!("information set {infoset} used before declaration"))
                })?;
                let mut acc = inherited.to_vec();
                if let Some(p) = self.outcome()? {
                    for (t, v) in acc.iter_mut().zip(p) {
                        *t = t.add(v);
                    }
                }
                let mut children = Vec::with_capacity(actions.len());
                for a in &actions {
                    self.path.push(a.clone());
                    children.push(self.node(&acc)?);
                    self.path.pop();
                }
                if kind == "c" {
                    Ok(TreeNode::Chance {
                        label,
                        outcomes: actions
                            .into_iter()
                            .zip(probs)
                            .zip(children)
                            .map(|((a, p), c)| (a, p, c))
                            .collect(),
                    })
                } else {
                    Ok(TreeNode::Decision {
                        label,
                        player: player - 1,
                        key: infoset.to_string(),
                        infoset_label: name,
                        actions: actions.into_iter().zip(children).collect(),
                    })
                }
            }
            other => {
                self.pos -= 1;
                Err(self.syntax(format!("unknown node type {other:?}")))
            }
        }
    }
}

/// Parse a game in the `.efg` text format.
pub fn parse_efg(text: &str) -> Result<ExtensiveFormGame, GameError> {
    let mut p = Parser {
        toks: tokenize(text)?,
        pos: 0,
        n_players: 0,
        infosets: HashMap::new(),
        outcomes: HashMap::new(),
        path: Vec::new(),
    };
    let (title, players) = p.header()?;
    p.n_players = players.len();
    let zero = vec![Number::from(0); players.len()];
    let root = p.node(&zero)?;
    if p.pos < p.toks.len() {
        return Err(p.syntax("trailing content after game tree"));
    }
    ExtensiveFormGame::from_tree(title, players, root)
}

fn quote(s: &str) -> String {
    let mut q = String::with_capacity(s.len() + 2);
    q.push('"');
    for c in s.chars() {
        if c == '"' || c == '\\' {
            q.push('\\');
        }
        q.push(c);
    }
    q.push('"');
    q
}

/// Serialize to the `.efg` text format. Every terminal gets its own outcome.
pub fn write_efg(game: &ExtensiveFormGame) -> String {
    let mut out = String::new();
    let names: Vec<String> = game.player_names().iter().map(|n| quote(n)).collect();
    let _ = writeln!(
        out,
        "EFG 2 R {} {{ {} }}",
        quote(game.title()),
        names.join(" ")
    );
    out.push_str("\"\"\n\n");
    let mut outcome = 0usize;
    let mut chance_set = 0usize;
    for node in game.nodes() {
        match node {
            Node::Chance { label, outcomes } => {
                chance_set += 1;
                let acts: Vec<String> = outcomes
                    .iter()
                    .map(|o| format!("{} {}", quote(&o.label), o.prob))
                    .collect();
                let _ = writeln!(
                    out,
                    "c {} {} \"\" {{ {} }} 0",
                    quote(label),
                    chance_set,
                    acts.join(" ")
                );
            }
            Node::Decision { label, infoset, .. } => {
                let info = game.infoset(*infoset);
                let acts: Vec<String> = info.actions.iter().map(|a| quote(a)).collect();
                let _ = writeln!(
                    out,
                    "p {} {} {} {} {{ {} }} 0",
                    quote(label),
                    info.player + 1,
                    info.index + 1,
                    quote(&info.label),
                    acts.join(" ")
                );
            }
            Node::Terminal { label, payoffs } => {
                outcome += 1;
                let pay: Vec<String> = payoffs.iter().map(|p| p.to_string()).collect();
                let _ = writeln!(
                    out,
                    "t {} {} \"\" {{ {} }}",
                    quote(label),
                    outcome,
                    pay.join(", ")
                );
            }
        }
    }
    out
}
