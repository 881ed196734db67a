//! Lexer, parser, and semantic analysis for `.game` documents.

use std::collections::HashMap;
use std::sync::Arc;

use thiserror::Error;

use crate::arena::{
    AgentId, ArenaSpec, Choice, ChoiceSpace, Payoff, Pref, UtilityDomain, UtilityValues,
};
use crate::multistage::{JointChoice, MsGameSystem, MsNode, MsStrategySystem};
use crate::system::{CensusNode, GameSystem, StateRef, StrategySystem};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{line}:{col}: {message}")]
pub struct ParseError {
    pub line: u32,
    pub col: u32,
    pub message: String,
}

impl ParseError {
    fn at(pos: Pos, message: impl Into<String>) -> Self {
        ParseError {
            line: pos.line,
            col: pos.col,
            message: message.into(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Pos {
    line: u32,
    col: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(i64),
    LBrace,
    RBrace,
    LParen,
    RParen,
    Comma,
    Semi,
    Colon,
    Arrow,
    Eq,
    Leq,
    Eof,
}

impl std::fmt::Display for Tok {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Int(n) => write!(f, "`{n}`"),
            Tok::LBrace => write!(f, "`{{`"),
            Tok::RBrace => write!(f, "`}}`"),
            Tok::LParen => write!(f, "`(`"),
            Tok::RParen => write!(f, "`)`"),
            Tok::Comma => write!(f, "`,`"),
            Tok::Semi => write!(f, "`;`"),
            Tok::Colon => write!(f, "`:`"),
            Tok::Arrow => write!(f, "`->`"),
            Tok::Eq => write!(f, "`=`"),
            Tok::Leq => write!(f, "`<=`"),
            Tok::Eof => write!(f, "end of input"),
        }
    }
}

fn lex(text: &str) -> Result<Vec<(Tok, Pos)>, ParseError> {
    let mut out = Vec::new();
    let mut line: u32 = 1;
    let mut col: u32 = 1;
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        let pos = Pos { line, col };
        let mut bump = |chars: &mut std::iter::Peekable<std::str::Chars>| {
            let c = chars.next().unwrap();
            if c == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            c
        };
        match c {
            ' ' | '\t' | '\r' | '\n' => {
                bump(&mut chars);
            }
            '#' => {
                while chars.peek().is_some_and(|&c| c != '\n') {
                    bump(&mut chars);
                }
            }
            '{' => {
                bump(&mut chars);
                out.push((Tok::LBrace, pos));
            }
            '}' => {
                bump(&mut chars);
                out.push((Tok::RBrace, pos));
            }
            '(' => {
                bump(&mut chars);
                out.push((Tok::LParen, pos));
            }
            ')' => {
                bump(&mut chars);
                out.push((Tok::RParen, pos));
            }
            ',' => {
                bump(&mut chars);
                out.push((Tok::Comma, pos));
            }
            ';' => {
                bump(&mut chars);
                out.push((Tok::Semi, pos));
            }
            ':' => {
                bump(&mut chars);
                out.push((Tok::Colon, pos));
            }
            '=' => {
                bump(&mut chars);
                out.push((Tok::Eq, pos));
            }
            '<' => {
                bump(&mut chars);
                if chars.peek() == Some(&'=') {
                    bump(&mut chars);
                    out.push((Tok::Leq, pos));
                } else {
                    return Err(ParseError::at(pos, "expected `<=`"));
                }
            }
            '-' => {
                bump(&mut chars);
                match chars.peek() {
                    Some('>') => {
                        bump(&mut chars);
                        out.push((Tok::Arrow, pos));
                    }
                    Some(d) if d.is_ascii_digit() => {
                        let mut n = String::from("-");
                        while chars.peek().is_some_and(|c| c.is_ascii_digit()) {
                            n.push(bump(&mut chars));
                        }
                        let v = n
                            .parse::<i64>()
                            .map_err(|_| ParseError::at(pos, "integer literal out of range"))?;
                        out.push((Tok::Int(v), pos));
                    }
                    _ => return Err(ParseError::at(pos, "expected `->` or a number after `-`")),
                }
            }
            d if d.is_ascii_digit() => {
                let mut n = String::new();
                while chars.peek().is_some_and(|c| c.is_ascii_digit()) {
                    n.push(bump(&mut chars));
                }
                let v = n
                    .parse::<i64>()
                    .map_err(|_| ParseError::at(pos, "integer literal out of range"))?;
                out.push((Tok::Int(v), pos));
            }
            a if a.is_ascii_alphabetic() || a == '_' => {
                let mut s = String::new();
                while chars
                    .peek()
                    .is_some_and(|c| c.is_ascii_alphanumeric() || *c == '_')
                {
                    s.push(bump(&mut chars));
                }
                out.push((Tok::Ident(s), pos));
            }
            other => {
                return Err(ParseError::at(pos, format!("unexpected character {other:?}")))
            }
        }
    }
    out.push((Tok::Eof, Pos { line, col }));
    Ok(out)
}

/// Raw syntax before semantic analysis.
#[derive(Debug)]
enum RawBody {
    Leaf(Vec<(String, RawValue, Pos)>),
    Node {
        agent: (String, Pos),
        branches: Vec<(String, String, Pos)>,
    },
    MsNode {
        branches: Vec<(Vec<String>, String, Pos)>,
    },
}

#[derive(Debug, Clone)]
enum RawValue {
    Int(i64),
    Label(String),
}

#[derive(Debug, Clone)]
enum RawChoose {
    Single(String),
    Joint(Vec<String>),
}

#[derive(Debug)]
struct RawDoc {
    agents: Vec<(String, Pos)>,
    choices: Vec<(String, Option<Vec<String>>, Pos)>, // None = naturals
    utilities: Vec<(String, RawDomain, RawPref, Pos)>,
    defs: Vec<(String, RawBody, Pos)>,
    root: Option<(String, Pos)>,
    chooses: Vec<(String, RawChoose, Pos)>,
    arena_pos: Pos,
}

#[derive(Debug)]
enum RawDomain {
    Int,
    Sym(Vec<String>),
}

#[derive(Debug)]
enum RawPref {
    Leq,
    Indifference,
    Equality,
    Order(Vec<(String, String, Pos)>),
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    i: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.i].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.i].1
    }

    fn next(&mut self) -> (Tok, Pos) {
        let t = self.toks[self.i].clone();
        if self.i + 1 < self.toks.len() {
            self.i += 1;
        }
        t
    }

    fn expect(&mut self, want: &Tok) -> Result<Pos, ParseError> {
        let (t, pos) = self.next();
        if &t == want {
            Ok(pos)
        } else {
            Err(ParseError::at(pos, format!("expected {want}, found {t}")))
        }
    }

    fn expect_ident(&mut self) -> Result<(String, Pos), ParseError> {
        let (t, pos) = self.next();
        match t {
            Tok::Ident(s) => Ok((s, pos)),
            other => Err(ParseError::at(pos, format!("expected a name, found {other}"))),
        }
    }

    fn expect_keyword(&mut self, word: &str) -> Result<Pos, ParseError> {
        let (s, pos) = self.expect_ident()?;
        if s == word {
            Ok(pos)
        } else {
            Err(ParseError::at(pos, format!("expected `{word}`, found `{s}`")))
        }
    }

    /// A separator `;`, optional right before `}` or end of input.
    fn separator(&mut self) -> Result<(), ParseError> {
        match self.peek() {
            Tok::Semi => {
                self.next();
                Ok(())
            }
            Tok::RBrace | Tok::Eof => Ok(()),
            other => Err(ParseError::at(
                self.pos(),
                format!("expected `;`, found {other}"),
            )),
        }
    }

    fn ident_list(&mut self) -> Result<Vec<(String, Pos)>, ParseError> {
        let mut out = vec![self.expect_ident()?];
        while self.peek() == &Tok::Comma {
            self.next();
            out.push(self.expect_ident()?);
        }
        Ok(out)
    }

    fn doc(&mut self) -> Result<RawDoc, ParseError> {
        let arena_pos = self.expect_keyword("arena")?;
        self.expect(&Tok::LBrace)?;
        let mut doc = RawDoc {
            agents: Vec::new(),
            choices: Vec::new(),
            utilities: Vec::new(),
            defs: Vec::new(),
            root: None,
            chooses: Vec::new(),
            arena_pos,
        };
        while self.peek() != &Tok::RBrace {
            let (kw, pos) = self.expect_ident()?;
            match kw.as_str() {
                "agents" => {
                    if !doc.agents.is_empty() {
                        return Err(ParseError::at(pos, "duplicate `agents` declaration"));
                    }
                    doc.agents = self.ident_list()?;
                    self.separator()?;
                }
                "choices" => {
                    let (agent, apos) = self.expect_ident()?;
                    let labels = if let Tok::Ident(w) = self.peek() {
                        if w == "naturals" {
                            self.next();
                            None
                        } else {
                            return Err(ParseError::at(
                                self.pos(),
                                "expected `{` or `naturals`",
                            ));
                        }
                    } else {
                        self.expect(&Tok::LBrace)?;
                        let ls = self.ident_list()?;
                        self.expect(&Tok::RBrace)?;
                        Some(ls.into_iter().map(|(s, _)| s).collect())
                    };
                    doc.choices.push((agent, labels, apos));
                    self.separator()?;
                }
                "utility" => {
                    let (agent, apos) = self.expect_ident()?;
                    let (dk, dpos) = self.expect_ident()?;
                    let domain = match dk.as_str() {
                        "int" => RawDomain::Int,
                        "sym" => {
                            self.expect(&Tok::LBrace)?;
                            let ls = self.ident_list()?;
                            self.expect(&Tok::RBrace)?;
                            RawDomain::Sym(ls.into_iter().map(|(s, _)| s).collect())
                        }
                        other => {
                            return Err(ParseError::at(
                                dpos,
                                format!("expected `int` or `sym`, found `{other}`"),
                            ))
                        }
                    };
                    let (pk, ppos) = self.expect_ident()?;
                    let pref = match pk.as_str() {
                        "leq" => RawPref::Leq,
                        "indifference" => RawPref::Indifference,
                        "equality" => RawPref::Equality,
                        "order" => {
                            self.expect(&Tok::LBrace)?;
                            let mut pairs = Vec::new();
                            loop {
                                let (lo, lpos) = self.expect_ident()?;
                                self.expect(&Tok::Leq)?;
                                let (hi, _) = self.expect_ident()?;
                                pairs.push((lo, hi, lpos));
                                if self.peek() == &Tok::Semi {
                                    self.next();
                                }
                                if self.peek() == &Tok::RBrace {
                                    break;
                                }
                            }
                            self.expect(&Tok::RBrace)?;
                            RawPref::Order(pairs)
                        }
                        other => {
                            return Err(ParseError::at(
                                ppos,
                                format!(
                                    "expected `leq`, `indifference`, `equality` or `order`, found `{other}`"
                                ),
                            ))
                        }
                    };
                    doc.utilities.push((agent, domain, pref, apos));
                    self.separator()?;
                }
                other => {
                    return Err(ParseError::at(
                        pos,
                        format!("expected `agents`, `choices` or `utility`, found `{other}`"),
                    ))
                }
            }
        }
        self.expect(&Tok::RBrace)?;

        loop {
            match self.peek().clone() {
                Tok::Eof => break,
                Tok::Ident(kw) => {
                    let pos = self.pos();
                    self.next();
                    match kw.as_str() {
                        "def" => {
                            let (name, npos) = self.expect_ident()?;
                            self.expect(&Tok::Eq)?;
                            let body = self.body()?;
                            doc.defs.push((name, body, npos));
                            self.separator()?;
                        }
                        "root" => {
                            let (name, npos) = self.expect_ident()?;
                            if doc.root.is_some() {
                                return Err(ParseError::at(pos, "duplicate `root`"));
                            }
                            doc.root = Some((name, npos));
                            self.separator()?;
                        }
                        "choose" => {
                            let (name, npos) = self.expect_ident()?;
                            self.expect(&Tok::Eq)?;
                            let val = if self.peek() == &Tok::LParen {
                                self.next();
                                let ls = self.ident_list()?;
                                self.expect(&Tok::RParen)?;
                                RawChoose::Joint(ls.into_iter().map(|(s, _)| s).collect())
                            } else {
                                RawChoose::Single(self.expect_ident()?.0)
                            };
                            doc.chooses.push((name, val, npos));
                            self.separator()?;
                        }
                        other => {
                            return Err(ParseError::at(
                                pos,
                                format!("expected `def`, `root` or `choose`, found `{other}`"),
                            ))
                        }
                    }
                }
                other => {
                    return Err(ParseError::at(
                        self.pos(),
                        format!("expected `def`, `root` or `choose`, found {other}"),
                    ))
                }
            }
        }
        Ok(doc)
    }

    fn body(&mut self) -> Result<RawBody, ParseError> {
        let (kw, pos) = self.expect_ident()?;
        match kw.as_str() {
            "leaf" => {
                self.expect(&Tok::LBrace)?;
                let mut entries = Vec::new();
                loop {
                    let (agent, apos) = self.expect_ident()?;
                    self.expect(&Tok::Colon)?;
                    let (t, vpos) = self.next();
                    let value = match t {
                        Tok::Int(n) => RawValue::Int(n),
                        Tok::Ident(s) => RawValue::Label(s),
                        other => {
                            return Err(ParseError::at(
                                vpos,
                                format!("expected a utility value, found {other}"),
                            ))
                        }
                    };
                    entries.push((agent, value, apos));
                    if self.peek() == &Tok::Comma {
                        self.next();
                        continue;
                    }
                    break;
                }
                self.expect(&Tok::RBrace)?;
                Ok(RawBody::Leaf(entries))
            }
            "node" => {
                let agent = self.expect_ident()?;
                self.expect(&Tok::LBrace)?;
                let mut branches = Vec::new();
                loop {
                    let (label, lpos) = self.expect_ident()?;
                    self.expect(&Tok::Arrow)?;
                    let (target, _) = self.expect_ident()?;
                    branches.push((label, target, lpos));
                    if self.peek() == &Tok::Comma {
                        self.next();
                        continue;
                    }
                    break;
                }
                self.expect(&Tok::RBrace)?;
                Ok(RawBody::Node { agent, branches })
            }
            "msnode" => {
                self.expect(&Tok::LBrace)?;
                let mut branches = Vec::new();
                loop {
                    let lpos = self.expect(&Tok::LParen)?;
                    let joint = self
                        .ident_list()?
                        .into_iter()
                        .map(|(s, _)| s)
                        .collect();
                    self.expect(&Tok::RParen)?;
                    self.expect(&Tok::Arrow)?;
                    let (target, _) = self.expect_ident()?;
                    branches.push((joint, target, lpos));
                    if self.peek() == &Tok::Comma {
                        self.next();
                        continue;
                    }
                    break;
                }
                self.expect(&Tok::RBrace)?;
                Ok(RawBody::MsNode { branches })
            }
            other => Err(ParseError::at(
                pos,
                format!("expected `leaf`, `node` or `msnode`, found `{other}`"),
            )),
        }
    }
}

/// A successfully analyzed document.
#[derive(Clone, Debug)]
pub enum ParsedDoc {
    Game(GameSystem),
    Profile(StrategySystem),
    MsGame(MsGameSystem),
    MsProfile(MsStrategySystem),
}

/// Parse and analyze a document of either kind.
pub fn parse_doc(text: &str) -> Result<ParsedDoc, ParseError> {
    let toks = lex(text)?;
    let raw = Parser { toks, i: 0 }.doc()?;
    analyze(raw)
}

/// Parse an extensive game; a profile block, if present, is erased.
pub fn parse_game(text: &str) -> Result<GameSystem, ParseError> {
    match parse_doc(text)? {
        ParsedDoc::Game(g) => Ok(g),
        ParsedDoc::Profile(s) => Ok(s.game()),
        ParsedDoc::MsGame(_) | ParsedDoc::MsProfile(_) => Err(ParseError {
            line: 1,
            col: 1,
            message: "this is a multi-stage document; use the multi-stage entry points".into(),
        }),
    }
}

/// Parse a strategy profile; every node definition needs a `choose` line.
pub fn parse_profile(text: &str) -> Result<StrategySystem, ParseError> {
    match parse_doc(text)? {
        ParsedDoc::Profile(s) => Ok(s),
        ParsedDoc::Game(_) => Err(ParseError {
            line: 1,
            col: 1,
            message: "no profile block: add a `choose` line per node".into(),
        }),
        ParsedDoc::MsGame(_) | ParsedDoc::MsProfile(_) => Err(ParseError {
            line: 1,
            col: 1,
            message: "this is a multi-stage document; use the multi-stage entry points".into(),
        }),
    }
}

/// Parse a multi-stage game (profile block erased if present).
pub fn parse_ms_game(text: &str) -> Result<MsGameSystem, ParseError> {
    match parse_doc(text)? {
        ParsedDoc::MsGame(g) => Ok(g),
        ParsedDoc::MsProfile(s) => Ok(s.game()),
        _ => Err(ParseError {
            line: 1,
            col: 1,
            message: "not a multi-stage document".into(),
        }),
    }
}

fn analyze(raw: RawDoc) -> Result<ParsedDoc, ParseError> {
    if raw.agents.is_empty() {
        return Err(ParseError::at(raw.arena_pos, "the arena declares no agents"));
    }
    for (i, (name, pos)) in raw.agents.iter().enumerate() {
        if raw.agents[..i].iter().any(|(n, _)| n == name) {
            return Err(ParseError::at(*pos, format!("duplicate agent `{name}`")));
        }
    }
    let agent_ix = |name: &str| raw.agents.iter().position(|(n, _)| n == name);

    // choice spaces
    let mut spaces: Vec<Option<ChoiceSpace>> = vec![None; raw.agents.len()];
    for (agent, labels, pos) in &raw.choices {
        let Some(ix) = agent_ix(agent) else {
            return Err(ParseError::at(*pos, format!("unknown agent `{agent}`")));
        };
        if spaces[ix].is_some() {
            return Err(ParseError::at(
                *pos,
                format!("duplicate `choices` for agent `{agent}`"),
            ));
        }
        spaces[ix] = Some(match labels {
            None => ChoiceSpace::Naturals,
            Some(ls) => ChoiceSpace::Enumerated(ls.clone()),
        });
    }
    // utility domains
    let mut domains: Vec<Option<UtilityDomain>> = vec![None; raw.agents.len()];
    for (agent, domain, pref, pos) in &raw.utilities {
        let Some(ix) = agent_ix(agent) else {
            return Err(ParseError::at(*pos, format!("unknown agent `{agent}`")));
        };
        if domains[ix].is_some() {
            return Err(ParseError::at(
                *pos,
                format!("duplicate `utility` for agent `{agent}`"),
            ));
        }
        let dom = match (domain, pref) {
            (RawDomain::Int, RawPref::Leq) => UtilityDomain::int_leq(),
            (RawDomain::Int, RawPref::Indifference) => UtilityDomain {
                values: UtilityValues::Integers,
                pref: Pref::Indifference,
            },
            (RawDomain::Int, RawPref::Equality) => UtilityDomain {
                values: UtilityValues::Integers,
                pref: Pref::EqualityOnly,
            },
            (RawDomain::Int, RawPref::Order(_)) => {
                return Err(ParseError::at(
                    *pos,
                    "`order` preferences need a symbolic domain",
                ))
            }
            (RawDomain::Sym(_), RawPref::Leq) => {
                return Err(ParseError::at(*pos, "`leq` needs an integer domain"))
            }
            (RawDomain::Sym(ls), RawPref::Indifference) => {
                UtilityDomain::symbolic_indifferent(ls.clone())
            }
            (RawDomain::Sym(ls), RawPref::Equality) => {
                UtilityDomain::symbolic_equality(ls.clone())
            }
            (RawDomain::Sym(ls), RawPref::Order(pairs)) => {
                for (lo, hi, ppos) in pairs {
                    if !ls.contains(lo) || !ls.contains(hi) {
                        return Err(ParseError::at(
                            *ppos,
                            format!("`{lo} <= {hi}` mentions a label outside the domain"),
                        ));
                    }
                }
                let pairs_ref: Vec<(&str, &str)> = pairs
                    .iter()
                    .map(|(lo, hi, _)| (lo.as_str(), hi.as_str()))
                    .collect();
                UtilityDomain::symbolic_ordered(ls.clone(), &pairs_ref)
                    .map_err(|e| ParseError::at(*pos, e.to_string()))?
            }
        };
        domains[ix] = Some(dom);
    }
    for (i, (name, pos)) in raw.agents.iter().enumerate() {
        if spaces[i].is_none() {
            return Err(ParseError::at(
                *pos,
                format!("agent `{name}` has no `choices` declaration"),
            ));
        }
        if domains[i].is_none() {
            return Err(ParseError::at(
                *pos,
                format!("agent `{name}` has no `utility` declaration"),
            ));
        }
    }
    let arena = ArenaSpec::new(
        raw.agents.iter().map(|(n, _)| n.clone()).collect(),
        spaces.into_iter().map(|s| s.unwrap()).collect(),
        domains.into_iter().map(|d| d.unwrap()).collect(),
    )
    .map_err(|e| ParseError::at(raw.arena_pos, e.to_string()))?;

    // state table
    if raw.defs.is_empty() {
        return Err(ParseError::at(raw.arena_pos, "no state definitions"));
    }
    let mut state_ix: HashMap<&str, usize> = HashMap::new();
    for (i, (name, _, pos)) in raw.defs.iter().enumerate() {
        if state_ix.insert(name.as_str(), i).is_some() {
            return Err(ParseError::at(*pos, format!("duplicate definition of `{name}`")));
        }
    }
    let Some((root_name, root_pos)) = &raw.root else {
        return Err(ParseError::at(raw.arena_pos, "no `root` designation"));
    };
    let Some(&root) = state_ix.get(root_name.as_str()) else {
        return Err(ParseError::at(
            *root_pos,
            format!("root references undefined state `{root_name}`"),
        ));
    };

    let is_ms = raw
        .defs
        .iter()
        .any(|(_, b, _)| matches!(b, RawBody::MsNode { .. }));
    let has_plain_nodes = raw
        .defs
        .iter()
        .any(|(_, b, _)| matches!(b, RawBody::Node { .. }));
    if is_ms && has_plain_nodes {
        let (_, _, pos) = raw
            .defs
            .iter()
            .find(|(_, b, _)| matches!(b, RawBody::Node { .. }))
            .unwrap();
        return Err(ParseError::at(
            *pos,
            "cannot mix owned nodes and msnodes in one document",
        ));
    }

    // choose lines, keyed by state
    let mut choose_of: HashMap<&str, (&RawChoose, Pos)> = HashMap::new();
    for (name, val, pos) in &raw.chooses {
        if !state_ix.contains_key(name.as_str()) {
            return Err(ParseError::at(
                *pos,
                format!("choose references undefined state `{name}`"),
            ));
        }
        if choose_of.insert(name.as_str(), (val, *pos)).is_some() {
            return Err(ParseError::at(*pos, format!("duplicate choose for `{name}`")));
        }
    }

    let payoff_of = |entries: &[(String, RawValue, Pos)],
                     pos: Pos|
     -> Result<Payoff, ParseError> {
        let mut values: Vec<Option<crate::arena::UtilityValue>> = vec![None; arena.num_agents()];
        for (agent, value, epos) in entries {
            let Some(a) = arena.agent_by_name(agent) else {
                return Err(ParseError::at(*epos, format!("unknown agent `{agent}`")));
            };
            if values[a.0].is_some() {
                return Err(ParseError::at(
                    *epos,
                    format!("duplicate payoff entry for `{agent}`"),
                ));
            }
            let dom = arena.utility(a);
            let v = match value {
                RawValue::Int(n) => dom.value_of_label(&n.to_string()),
                RawValue::Label(l) => dom.value_of_label(l),
            };
            let Some(v) = v else {
                return Err(ParseError::at(
                    *epos,
                    format!("value is not in agent `{agent}`'s utility domain"),
                ));
            };
            values[a.0] = Some(v);
        }
        for (i, v) in values.iter().enumerate() {
            if v.is_none() {
                return Err(ParseError::at(
                    pos,
                    format!(
                        "payoff gives no value to agent `{}`",
                        arena.agent_name(AgentId(i))
                    ),
                ));
            }
        }
        Ok(Payoff(values.into_iter().map(|v| v.unwrap()).collect()))
    };

    if is_ms {
        let arities: Vec<usize> = arena
            .agents()
            .map(|a| {
                arena
                    .choices(a)
                    .arity()
                    .ok_or_else(|| {
                        ParseError::at(
                            raw.arena_pos,
                            "msnode documents cannot use naturals choice spaces",
                        )
                    })
            })
            .collect::<Result<_, _>>()?;
        let product: usize = arities.iter().product();
        let mut nodes: Vec<MsNode<()>> = Vec::new();
        let mut node_defs: Vec<&str> = Vec::new();
        for (name, body, pos) in &raw.defs {
            match body {
                RawBody::Leaf(entries) => nodes.push(MsNode::Leaf(payoff_of(entries, *pos)?)),
                RawBody::MsNode { branches } => {
                    node_defs.push(name);
                    let mut targets: Vec<Option<StateRef>> = vec![None; product];
                    for (joint, target, bpos) in branches {
                        let jc = joint_of(&arena, joint, *bpos)?;
                        let rank = jc.rank(&arities);
                        if targets[rank].is_some() {
                            return Err(ParseError::at(
                                *bpos,
                                "duplicate joint choice in branch map".to_string(),
                            ));
                        }
                        let Some(&t) = state_ix.get(target.as_str()) else {
                            return Err(ParseError::at(
                                *bpos,
                                format!("branch references undefined state `{target}`"),
                            ));
                        };
                        targets[rank] = Some(StateRef(t as u64));
                    }
                    if let Some(missing) = targets.iter().position(|t| t.is_none()) {
                        let jc = JointChoice::unrank(missing, &arities);
                        let labels: Vec<String> = arena
                            .agents()
                            .map(|a| arena.choice_label(a, jc.0[a.0]))
                            .collect();
                        return Err(ParseError::at(
                            *pos,
                            format!(
                                "msnode `{name}` misses joint choice ({})",
                                labels.join(", ")
                            ),
                        ));
                    }
                    nodes.push(MsNode::Node {
                        chosen: (),
                        branches: targets.into_iter().map(|t| t.unwrap()).collect(),
                    });
                }
                RawBody::Node { .. } => unreachable!("checked above"),
            }
        }
        let game = MsGameSystem::census(arena.clone(), nodes.clone(), root)
            .map_err(|e| ParseError::at(raw.arena_pos, e.to_string()))?;
        if raw.chooses.is_empty() {
            return Ok(ParsedDoc::MsGame(game));
        }
        // profile: every msnode needs a joint choose
        let mut prof_nodes: Vec<MsNode<JointChoice>> = Vec::new();
        for ((name, body, pos), node) in raw.defs.iter().zip(nodes) {
            match (body, node) {
                (RawBody::Leaf(_), MsNode::Leaf(p)) => prof_nodes.push(MsNode::Leaf(p)),
                (RawBody::MsNode { .. }, MsNode::Node { branches, .. }) => {
                    let Some((val, vpos)) = choose_of.get(name.as_str()) else {
                        return Err(ParseError::at(
                            *pos,
                            format!("missing choose for msnode `{name}`"),
                        ));
                    };
                    let RawChoose::Joint(joint) = val else {
                        return Err(ParseError::at(
                            *vpos,
                            "msnode choices are joint: use `choose s = (a, b)`",
                        ));
                    };
                    let jc = joint_of(&arena, joint, *vpos)?;
                    prof_nodes.push(MsNode::Node {
                        chosen: jc,
                        branches,
                    });
                }
                _ => unreachable!(),
            }
        }
        let prof = MsStrategySystem::census(arena, prof_nodes, root)
            .map_err(|e| ParseError::at(raw.arena_pos, e.to_string()))?;
        return Ok(ParsedDoc::MsProfile(prof));
    }

    // extensive document
    let mut nodes: Vec<CensusNode<()>> = Vec::new();
    for (name, body, pos) in &raw.defs {
        match body {
            RawBody::Leaf(entries) => nodes.push(CensusNode::Leaf(payoff_of(entries, *pos)?)),
            RawBody::Node {
                agent: (agent, apos),
                branches,
            } => {
                let Some(a) = arena.agent_by_name(agent) else {
                    return Err(ParseError::at(*apos, format!("unknown agent `{agent}`")));
                };
                let Some(arity) = arena.choices(a).arity() else {
                    return Err(ParseError::at(
                        *apos,
                        format!("agent `{agent}` has a naturals space; its nodes cannot be written"),
                    ));
                };
                let mut targets: Vec<Option<StateRef>> = vec![None; arity];
                for (label, target, bpos) in branches {
                    let Some(c) = arena.choices(a).choice_of_label(label) else {
                        return Err(ParseError::at(
                            *bpos,
                            format!("label `{label}` is not in agent `{agent}`'s space"),
                        ));
                    };
                    if targets[c.0 as usize].is_some() {
                        return Err(ParseError::at(
                            *bpos,
                            format!("duplicate branch for label `{label}`"),
                        ));
                    }
                    let Some(&t) = state_ix.get(target.as_str()) else {
                        return Err(ParseError::at(
                            *bpos,
                            format!("branch references undefined state `{target}`"),
                        ));
                    };
                    targets[c.0 as usize] = Some(StateRef(t as u64));
                }
                if let Some(missing) = targets.iter().position(|t| t.is_none()) {
                    return Err(ParseError::at(
                        *pos,
                        format!(
                            "node `{name}` misses a branch for label `{}`",
                            arena.choice_label(a, Choice(missing as u64))
                        ),
                    ));
                }
                nodes.push(CensusNode::Node {
                    agent: a,
                    chosen: (),
                    branches: targets.into_iter().map(|t| t.unwrap()).collect(),
                });
            }
            RawBody::MsNode { .. } => unreachable!("checked above"),
        }
    }
    let game = GameSystem::census(arena.clone(), nodes.clone(), root)
        .map_err(|e| ParseError::at(raw.arena_pos, e.to_string()))?;
    if raw.chooses.is_empty() {
        return Ok(ParsedDoc::Game(game));
    }
    let mut prof_nodes: Vec<CensusNode<Choice>> = Vec::new();
    for ((name, _, pos), node) in raw.defs.iter().zip(nodes) {
        match node {
            CensusNode::Leaf(p) => {
                if choose_of.contains_key(name.as_str()) {
                    return Err(ParseError::at(
                        choose_of[name.as_str()].1,
                        format!("state `{name}` is a leaf; choose applies to nodes"),
                    ));
                }
                prof_nodes.push(CensusNode::Leaf(p));
            }
            CensusNode::Node {
                agent, branches, ..
            } => {
                let Some((val, vpos)) = choose_of.get(name.as_str()) else {
                    return Err(ParseError::at(
                        *pos,
                        format!("missing choose for node `{name}`"),
                    ));
                };
                let RawChoose::Single(label) = val else {
                    return Err(ParseError::at(
                        *vpos,
                        "owned nodes take a single choice, not a tuple",
                    ));
                };
                let Some(c) = arena.choices(agent).choice_of_label(label) else {
                    return Err(ParseError::at(
                        *vpos,
                        format!(
                            "label `{label}` is not in agent `{}`'s space",
                            arena.agent_name(agent)
                        ),
                    ));
                };
                prof_nodes.push(CensusNode::Node {
                    agent,
                    chosen: c,
                    branches,
                });
            }
        }
    }
    let prof = StrategySystem::census(arena, prof_nodes, root)
        .map_err(|e| ParseError::at(raw.arena_pos, e.to_string()))?;
    Ok(ParsedDoc::Profile(prof))
}

fn joint_of(arena: &Arc<ArenaSpec>, labels: &[String], pos: Pos) -> Result<JointChoice, ParseError> {
    if labels.len() != arena.num_agents() {
        return Err(ParseError::at(
            pos,
            format!(
                "joint choice has {} components, the arena has {} agents",
                labels.len(),
                arena.num_agents()
            ),
        ));
    }
    let mut out = Vec::with_capacity(labels.len());
    for (a, label) in arena.agents().zip(labels) {
        let Some(c) = arena.choices(a).choice_of_label(label) else {
            return Err(ParseError::at(
                pos,
                format!(
                    "label `{label}` is not in agent `{}`'s space",
                    arena.agent_name(a)
                ),
            ));
        };
        out.push(c);
    }
    Ok(JointChoice(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::View;

    const MINIMAL: &str = "arena{agents A; choices A{l,r}; utility A int leq} def root = node A {l->t, r->t}; def t = leaf{A:1}; root root";

    #[test]
    fn minimal_doc_parses_to_a_two_state_census() {
        let g = parse_game(MINIMAL).unwrap();
        assert_eq!(g.reachable().unwrap().len(), 2);
        assert!(matches!(g.view(g.root()), View::Node { agent, .. } if agent == AgentId(0)));
    }

    #[test]
    fn missing_branch_is_a_semantic_error_naming_the_node() {
        let text = "arena{agents A; choices A{l,r}; utility A int leq} def root = node A {l->t}; def t = leaf{A:1}; root root";
        let err = parse_game(text).unwrap_err();
        assert!(err.message.contains("root"), "{err}");
        assert!(err.message.contains("`r`"), "{err}");
        assert_eq!(err.line, 1);
    }

    #[test]
    fn lexical_error_has_a_position() {
        let err = parse_game("arena{agents A; choices A{l,r}; utility A int leq}\ndef t = leaf{A: $1};\nroot t").unwrap_err();
        assert_eq!(err.line, 2);
        assert!(err.message.contains("unexpected character"));
    }

    #[test]
    fn syntax_error_has_a_position() {
        let err = parse_game("arena{agents A choices A{l}; utility A int leq} def t = leaf{A:1}; root t").unwrap_err();
        // after `agents A` the separator is missing
        assert_eq!(err.line, 1);
        assert!(err.message.contains("expected `;`"), "{err}");
    }

    #[test]
    fn duplicate_definitions_are_rejected() {
        let text = "arena{agents A; choices A{l}; utility A int leq} def t = leaf{A:1}; def t = leaf{A:2}; root t";
        let err = parse_game(text).unwrap_err();
        assert!(err.message.contains("duplicate definition"));
    }

    #[test]
    fn profiles_need_a_choose_per_node() {
        let text = format!("{MINIMAL}; choose root = l");
        let s = parse_profile(&text).unwrap();
        assert_eq!(s.chosen_at(s.root()), Some(Choice(0)));
        // missing choose
        assert!(parse_profile(MINIMAL).unwrap_err().message.contains("no profile block"));
        // label outside the space
        let bad = format!("{MINIMAL}; choose root = z");
        assert!(parse_profile(&bad).unwrap_err().message.contains("`z`"));
    }

    #[test]
    fn cyclic_documents_denote_regular_games() {
        let text = "arena{agents A; choices A{stay,out}; utility A int leq}
def s = node A {stay->s, out->t};
def t = leaf{A:0};
root s;
choose s = stay;";
        let s = parse_profile(text).unwrap();
        assert!(matches!(
            s.uassign(100),
            crate::system::UassignResult::DivergenceDetected(_)
        ));
    }

    #[test]
    fn msnode_documents_parse_with_joint_choices() {
        let text = "arena{agents A, B; choices A{l,r}; choices B{x,y}; utility A int leq; utility B int leq}
def root = msnode {(l,x)->t1, (l,y)->t2, (r,x)->t3, (r,y)->t4};
def t1 = leaf{A:1, B:1}; def t2 = leaf{A:2, B:0};
def t3 = leaf{A:0, B:2}; def t4 = leaf{A:3, B:3};
root root;
choose root = (r, y);";
        let ParsedDoc::MsProfile(s) = parse_doc(text).unwrap() else {
            panic!("expected an ms profile");
        };
        assert!(matches!(
            s.uassign(10),
            crate::multistage::MsUassignResult::Assigned(p)
                if p == Payoff(vec![
                    crate::arena::UtilityValue::Int(3),
                    crate::arena::UtilityValue::Int(3)
                ])
        ));
        // a missing joint combination is named in the error
        let partial = "arena{agents A, B; choices A{l,r}; choices B{x}; utility A int leq; utility B int leq}
def root = msnode {(l,x)->t1};
def t1 = leaf{A:1, B:1};
root root;";
        let err = parse_doc(partial).unwrap_err();
        assert!(err.message.contains("misses joint choice"), "{err}");
    }

    #[test]
    fn naturals_spaces_parse_but_their_nodes_cannot_be_written() {
        let ok = "arena{agents Alice, Bob; choices Alice naturals; choices Bob{tt};
utility Alice sym{u} indifference; utility Bob sym{u} indifference}
def b = node Bob {tt -> t}; def t = leaf{Alice: u, Bob: u}; root b";
        let g = parse_game(ok).unwrap();
        assert_eq!(g.reachable().unwrap().len(), 2);
        let bad = "arena{agents Alice; choices Alice naturals; utility Alice int leq}
def a = node Alice {tt -> t}; def t = leaf{Alice: 0}; root a";
        let err = parse_game(bad).unwrap_err();
        assert!(err.message.contains("naturals"), "{err}");
    }

    #[test]
    fn ordered_symbolic_domains_parse() {
        let text = "arena{agents A; choices A{go};
utility A sym{weak, medium, strong} order { weak <= medium; medium <= strong }}
def t = leaf{A: strong}; root t";
        let g = parse_game(text).unwrap();
        let dom = g.arena().utility(AgentId(0));
        assert!(dom.pref_holds(
            &crate::arena::UtilityValue::Sym(0),
            &crate::arena::UtilityValue::Sym(2)
        ));
    }
}
