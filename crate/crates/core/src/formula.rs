//! Syntax of the multi-agent language: the four core constructors, derived
//! connectives that expand into them, a text grammar, and formula depth.
//!
//! Grammar accepted by [`parse`]:
//!
//! ```text
//! atoms      p0, p1, ...
//! negation   !f
//! knowledge  K0 f, K1 f, ...
//! everybody  E f            (expands to K0 f & K1 f & ...)
//! binary     f & g, f | g, f -> g
//! ```
//!
//! Precedence `!` > `K` > `&` > `|` > `->`, with `->` right-associative.
//! `|` and `->` are sugar: `f | g` is `!(!f & !g)` and `f -> g` is `!(f & !g)`.

use std::fmt;
use std::hash::{Hash, Hasher};
use std::rc::Rc;

use crate::error::{CkError, Result};
use crate::workspace::{AgentId, PropId, WorkspaceConfig};

#[derive(Debug)]
pub enum FormulaNode {
    Prop(PropId),
    Not(Formula),
    And(Formula, Formula),
    Know(AgentId, Formula),
}

struct Inner {
    node: FormulaNode,
    depth: u32,
    hash: u64,
}

/// An immutable formula over the core constructors. Subtrees are shared via
/// reference counting; equality and hashing are structural, with cached
/// hashes and pointer identity as fast paths.
#[derive(Clone)]
pub struct Formula(Rc<Inner>);

fn mix(tag: u64, a: u64, b: u64) -> u64 {
    // FNV-style mixing over the child hashes; cheap and deterministic.
    let mut h = 0xcbf2_9ce4_8422_2325u64 ^ tag;
    for v in [a, b] {
        h ^= v;
        h = h.wrapping_mul(0x100_0000_01b3);
    }
    h
}

impl Formula {
    fn new(node: FormulaNode) -> Self {
        let (depth, hash) = match &node {
            FormulaNode::Prop(p) => (0, mix(1, p.0 as u64, 0)),
            FormulaNode::Not(g) => (g.depth(), mix(2, g.hash(), 0)),
            FormulaNode::And(g, h) => (g.depth().max(h.depth()), mix(3, g.hash(), h.hash())),
            FormulaNode::Know(j, g) => (g.depth() + 1, mix(4, j.0 as u64, g.hash())),
        };
        Formula(Rc::new(Inner { node, depth, hash }))
    }

    pub fn prop(p: usize) -> Self {
        Formula::new(FormulaNode::Prop(PropId(p)))
    }

    pub fn not(g: Formula) -> Self {
        Formula::new(FormulaNode::Not(g))
    }

    pub fn and(g: Formula, h: Formula) -> Self {
        Formula::new(FormulaNode::And(g, h))
    }

    pub fn know(j: usize, g: Formula) -> Self {
        Formula::new(FormulaNode::Know(AgentId(j), g))
    }

    /// `f | g` as `!(!f & !g)`.
    pub fn or(g: Formula, h: Formula) -> Self {
        Formula::not(Formula::and(Formula::not(g), Formula::not(h)))
    }

    /// `f -> g` as `!(f & !g)`.
    pub fn implies(g: Formula, h: Formula) -> Self {
        Formula::not(Formula::and(g, Formula::not(h)))
    }

    pub fn iff(g: Formula, h: Formula) -> Self {
        Formula::and(
            Formula::implies(g.clone(), h.clone()),
            Formula::implies(h, g),
        )
    }

    /// Everybody-knows: the conjunction of `K_j f` over the agent roster.
    pub fn everybody(ws: &WorkspaceConfig, g: Formula) -> Self {
        let mut agents = ws.agents();
        let first = agents.next().expect("workspace has at least one agent");
        let mut acc = Formula::new(FormulaNode::Know(first, g.clone()));
        for j in agents {
            acc = Formula::and(acc, Formula::new(FormulaNode::Know(j, g.clone())));
        }
        acc
    }

    /// `E^n(f)`: `E^0(f) = f` and `E^n = E(E^{n-1})`.
    pub fn e_power(ws: &WorkspaceConfig, g: Formula, n: u32) -> Self {
        let mut acc = g;
        for _ in 0..n {
            acc = Formula::everybody(ws, acc);
        }
        acc
    }

    /// The canonical tautological constant: `p0 | !p0`, depth 0.
    pub fn top() -> Self {
        let p = Formula::prop(0);
        Formula::or(p.clone(), Formula::not(p))
    }

    /// The canonical contradiction: `p0 & !p0`, depth 0.
    pub fn bottom() -> Self {
        let p = Formula::prop(0);
        Formula::and(p.clone(), Formula::not(p))
    }

    pub fn node(&self) -> &FormulaNode {
        &self.0.node
    }

    /// Nesting count of knowledge operators.
    pub fn depth(&self) -> u32 {
        self.0.depth
    }

    pub fn hash(&self) -> u64 {
        self.0.hash
    }

    /// Stable address of the shared node, used as a memo key during
    /// evaluation of one formula DAG.
    pub fn key(&self) -> usize {
        Rc::as_ptr(&self.0) as usize
    }

    /// Checks that every proposition and agent index fits the workspace.
    pub fn check_indices(&self, ws: &WorkspaceConfig) -> Result<()> {
        match self.node() {
            FormulaNode::Prop(p) => ws.check_prop(*p),
            FormulaNode::Not(g) => g.check_indices(ws),
            FormulaNode::And(g, h) => {
                g.check_indices(ws)?;
                h.check_indices(ws)
            }
            FormulaNode::Know(j, g) => {
                ws.check_agent(*j)?;
                g.check_indices(ws)
            }
        }
    }

    /// Number of maximal leading `K`-chains of length exactly `n` reachable
    /// through conjunctions from the root. Used to sanity-check `e_power`.
    pub fn count_know_chains(&self, n: u32) -> usize {
        fn chains(f: &Formula, remaining: u32) -> usize {
            if remaining == 0 {
                return 1;
            }
            match f.node() {
                FormulaNode::And(g, h) => chains(g, remaining) + chains(h, remaining),
                FormulaNode::Know(_, g) => chains(g, remaining - 1),
                _ => 0,
            }
        }
        chains(self, n)
    }
}

impl PartialEq for Formula {
    fn eq(&self, other: &Self) -> bool {
        if Rc::ptr_eq(&self.0, &other.0) {
            return true;
        }
        if self.0.hash != other.0.hash || self.0.depth != other.0.depth {
            return false;
        }
        match (&self.0.node, &other.0.node) {
            (FormulaNode::Prop(a), FormulaNode::Prop(b)) => a == b,
            (FormulaNode::Not(a), FormulaNode::Not(b)) => a == b,
            (FormulaNode::And(a, b), FormulaNode::And(c, d)) => a == c && b == d,
            (FormulaNode::Know(i, a), FormulaNode::Know(j, b)) => i == j && a == b,
            _ => false,
        }
    }
}

impl Eq for Formula {}

impl Hash for Formula {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_u64(self.0.hash);
    }
}

impl fmt::Debug for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", render(self))
    }
}

/// Renders a formula in the concrete grammar; `parse(render(f))` is
/// structurally equal to `f`.
pub fn render(f: &Formula) -> String {
    // Precedence levels: 0 = atom/unary, 1 = conjunction.
    fn go(f: &Formula, out: &mut String, parent_needs_atom: bool) {
        match f.node() {
            FormulaNode::Prop(p) => {
                out.push('p');
                out.push_str(&p.0.to_string());
            }
            FormulaNode::Not(g) => {
                out.push('!');
                go(g, out, true);
            }
            FormulaNode::Know(j, g) => {
                out.push('K');
                out.push_str(&j.0.to_string());
                out.push(' ');
                go(g, out, true);
            }
            FormulaNode::And(g, h) => {
                if parent_needs_atom {
                    out.push('(');
                }
                go(g, out, true);
                out.push_str(" & ");
                go(h, out, true);
                if parent_needs_atom {
                    out.push(')');
                }
            }
        }
    }
    let mut s = String::new();
    go(f, &mut s, false);
    s
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Prop(usize),
    Know(usize),
    Everybody,
    Bang,
    Amp,
    Pipe,
    Arrow,
    LParen,
    RParen,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn tokens(src: &'a str) -> Result<Vec<(usize, Token)>> {
        let mut lx = Lexer {
            src: src.as_bytes(),
            pos: 0,
        };
        let mut out = Vec::new();
        while let Some((at, tok)) = lx.next_token()? {
            out.push((at, tok));
        }
        Ok(out)
    }

    fn read_index(&mut self, what: &str, at: usize) -> Result<usize> {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(CkError::Parse {
                pos: at,
                msg: format!("expected {what} index"),
            });
        }
        std::str::from_utf8(&self.src[start..self.pos])
            .unwrap()
            .parse()
            .map_err(|_| CkError::Parse {
                pos: at,
                msg: format!("{what} index out of range"),
            })
    }

    fn next_token(&mut self) -> Result<Option<(usize, Token)>> {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if self.pos >= self.src.len() {
            return Ok(None);
        }
        let at = self.pos;
        let c = self.src[self.pos];
        let tok = match c {
            b'p' => {
                self.pos += 1;
                Token::Prop(self.read_index("proposition", at)?)
            }
            b'K' => {
                self.pos += 1;
                Token::Know(self.read_index("agent", at)?)
            }
            b'E' => {
                self.pos += 1;
                Token::Everybody
            }
            b'!' => {
                self.pos += 1;
                Token::Bang
            }
            b'&' => {
                self.pos += 1;
                Token::Amp
            }
            b'|' => {
                self.pos += 1;
                Token::Pipe
            }
            b'-' => {
                if self.pos + 1 < self.src.len() && self.src[self.pos + 1] == b'>' {
                    self.pos += 2;
                    Token::Arrow
                } else {
                    return Err(CkError::Parse {
                        pos: at,
                        msg: "expected '->'".into(),
                    });
                }
            }
            b'(' => {
                self.pos += 1;
                Token::LParen
            }
            b')' => {
                self.pos += 1;
                Token::RParen
            }
            other => {
                return Err(CkError::Parse {
                    pos: at,
                    msg: format!("unexpected character '{}'", other as char),
                })
            }
        };
        Ok(Some((at, tok)))
    }
}

struct Parser<'a> {
    toks: Vec<(usize, Token)>,
    idx: usize,
    ws: &'a WorkspaceConfig,
    end: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Token> {
        self.toks.get(self.idx).map(|(_, t)| t)
    }

    fn here(&self) -> usize {
        self.toks
            .get(self.idx)
            .map(|(p, _)| *p)
            .unwrap_or(self.end)
    }

    fn bump(&mut self) -> Option<Token> {
        let t = self.toks.get(self.idx).map(|(_, t)| t.clone());
        self.idx += 1;
        t
    }

    fn parse_implies(&mut self) -> Result<Formula> {
        let lhs = self.parse_or()?;
        if self.peek() == Some(&Token::Arrow) {
            self.bump();
            let rhs = self.parse_implies()?;
            Ok(Formula::implies(lhs, rhs))
        } else {
            Ok(lhs)
        }
    }

    fn parse_or(&mut self) -> Result<Formula> {
        let mut acc = self.parse_and()?;
        while self.peek() == Some(&Token::Pipe) {
            self.bump();
            let rhs = self.parse_and()?;
            acc = Formula::or(acc, rhs);
        }
        Ok(acc)
    }

    fn parse_and(&mut self) -> Result<Formula> {
        let mut acc = self.parse_unary()?;
        while self.peek() == Some(&Token::Amp) {
            self.bump();
            let rhs = self.parse_unary()?;
            acc = Formula::and(acc, rhs);
        }
        Ok(acc)
    }

    fn parse_unary(&mut self) -> Result<Formula> {
        let at = self.here();
        match self.bump() {
            Some(Token::Prop(k)) => {
                if k >= self.ws.num_props {
                    return Err(CkError::Parse {
                        pos: at,
                        msg: format!(
                            "unknown atom p{k} (workspace has {} propositions)",
                            self.ws.num_props
                        ),
                    });
                }
                Ok(Formula::prop(k))
            }
            Some(Token::Bang) => Ok(Formula::not(self.parse_unary()?)),
            Some(Token::Know(j)) => {
                if j >= self.ws.num_agents {
                    return Err(CkError::Parse {
                        pos: at,
                        msg: format!(
                            "unknown agent K{j} (workspace has {} agents)",
                            self.ws.num_agents
                        ),
                    });
                }
                Ok(Formula::know(j, self.parse_unary()?))
            }
            Some(Token::Everybody) => {
                let g = self.parse_unary()?;
                Ok(Formula::everybody(self.ws, g))
            }
            Some(Token::LParen) => {
                let inner = self.parse_implies()?;
                let at = self.here();
                match self.bump() {
                    Some(Token::RParen) => Ok(inner),
                    _ => Err(CkError::Parse {
                        pos: at,
                        msg: "unbalanced parentheses: expected ')'".into(),
                    }),
                }
            }
            Some(tok) => Err(CkError::Parse {
                pos: at,
                msg: format!("unexpected token {tok:?}"),
            }),
            None => Err(CkError::Parse {
                pos: at,
                msg: "unexpected end of input".into(),
            }),
        }
    }
}

/// Parses the concrete grammar against a workspace roster.
pub fn parse(text: &str, ws: &WorkspaceConfig) -> Result<Formula> {
    let toks = Lexer::tokens(text)?;
    let mut p = Parser {
        toks,
        idx: 0,
        ws,
        end: text.len(),
    };
    let f = p.parse_implies()?;
    if p.idx != p.toks.len() {
        return Err(CkError::Parse {
            pos: p.here(),
            msg: "trailing input after formula".into(),
        });
    }
    Ok(f)
}
