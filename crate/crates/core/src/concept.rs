//! ALCQ(D) class expressions as trees.
//!
//! Node addresses are pre-order indices: the root is 0 and a node's first
//! child immediately follows it.

use std::fmt;

use thiserror::Error;

use crate::kb::{ConceptId, KnowledgeBase, RoleId, RoleKind, THING};

#[derive(Clone, Debug, PartialEq)]
pub enum ConceptTree {
    Thing,
    Atomic(ConceptId),
    Not(Box<ConceptTree>),
    And(Box<ConceptTree>, Box<ConceptTree>),
    Or(Box<ConceptTree>, Box<ConceptTree>),
    Exists(RoleId, Box<ConceptTree>),
    Forall(RoleId, Box<ConceptTree>),
    /// At least `n` (≥ 1) role successors in the filler.
    MinCard(u32, RoleId, Box<ConceptTree>),
    /// At most `n` role successors in the filler.
    MaxCard(u32, RoleId, Box<ConceptTree>),
    DataLe(RoleId, f64),
    DataGe(RoleId, f64),
    BoolEq(RoleId, bool),
}

#[derive(Debug, Error, PartialEq)]
pub enum ConceptError {
    #[error("invalid node address {addr} (tree has {len} nodes)")]
    InvalidAddress { addr: usize, len: usize },
    #[error("syntax error at byte {pos}: {message}")]
    Syntax { pos: usize, message: String },
    #[error("unknown {kind} `{name}` at byte {pos}")]
    UnknownName {
        pos: usize,
        kind: &'static str,
        name: String,
    },
    #[error("role `{role}` is {actual}, expected {expected}")]
    RoleKind {
        role: String,
        expected: RoleKind,
        actual: RoleKind,
    },
    #[error("min cardinality must be at least 1")]
    ZeroMinCard,
}

impl ConceptTree {
    #[allow(clippy::should_implement_trait)]
    pub fn not(c: ConceptTree) -> Self {
        ConceptTree::Not(Box::new(c))
    }

    pub fn and(a: ConceptTree, b: ConceptTree) -> Self {
        ConceptTree::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: ConceptTree, b: ConceptTree) -> Self {
        ConceptTree::Or(Box::new(a), Box::new(b))
    }

    pub fn exists(r: RoleId, c: ConceptTree) -> Self {
        ConceptTree::Exists(r, Box::new(c))
    }

    pub fn forall(r: RoleId, c: ConceptTree) -> Self {
        ConceptTree::Forall(r, Box::new(c))
    }

    pub fn min_card(n: u32, r: RoleId, c: ConceptTree) -> Self {
        ConceptTree::MinCard(n, r, Box::new(c))
    }

    pub fn max_card(n: u32, r: RoleId, c: ConceptTree) -> Self {
        ConceptTree::MaxCard(n, r, Box::new(c))
    }

    pub fn arity(&self) -> usize {
        self.children().len()
    }

    pub fn is_leaf(&self) -> bool {
        self.arity() == 0
    }

    pub fn children(&self) -> Vec<&ConceptTree> {
        match self {
            ConceptTree::Thing
            | ConceptTree::Atomic(_)
            | ConceptTree::DataLe(..)
            | ConceptTree::DataGe(..)
            | ConceptTree::BoolEq(..) => Vec::new(),
            ConceptTree::Not(c)
            | ConceptTree::Exists(_, c)
            | ConceptTree::Forall(_, c)
            | ConceptTree::MinCard(_, _, c)
            | ConceptTree::MaxCard(_, _, c) => vec![c],
            ConceptTree::And(a, b) | ConceptTree::Or(a, b) => vec![a, b],
        }
    }

    fn children_mut(&mut self) -> Vec<&mut ConceptTree> {
        match self {
            ConceptTree::Thing
            | ConceptTree::Atomic(_)
            | ConceptTree::DataLe(..)
            | ConceptTree::DataGe(..)
            | ConceptTree::BoolEq(..) => Vec::new(),
            ConceptTree::Not(c)
            | ConceptTree::Exists(_, c)
            | ConceptTree::Forall(_, c)
            | ConceptTree::MinCard(_, _, c)
            | ConceptTree::MaxCard(_, _, c) => vec![c],
            ConceptTree::And(a, b) | ConceptTree::Or(a, b) => vec![a, b],
        }
    }

    /// Number of nodes. Data and boolean restrictions are single leaves.
    pub fn length(&self) -> usize {
        1 + self.children().iter().map(|c| c.length()).sum::<usize>()
    }

    /// Longest root-to-leaf path in edges.
    pub fn depth(&self) -> usize {
        self.children()
            .iter()
            .map(|c| 1 + c.depth())
            .max()
            .unwrap_or(0)
    }

    /// Pre-order node addresses, `0..length()`.
    pub fn enumerate_nodes(&self) -> Vec<usize> {
        (0..self.length()).collect()
    }

    pub fn subtree(&self, addr: usize) -> Option<&ConceptTree> {
        let mut remaining = addr;
        let mut node = self;
        'descend: loop {
            if remaining == 0 {
                return Some(node);
            }
            remaining -= 1;
            for child in node.children() {
                let len = child.length();
                if remaining < len {
                    node = child;
                    continue 'descend;
                }
                remaining -= len;
            }
            return None;
        }
    }

    fn subtree_mut(&mut self, addr: usize) -> Option<&mut ConceptTree> {
        if addr == 0 {
            return Some(self);
        }
        let mut remaining = addr - 1;
        for child in self.children_mut() {
            let len = child.length();
            if remaining < len {
                return child.subtree_mut(remaining);
            }
            remaining -= len;
        }
        None
    }

    /// Depth (in edges) of the node at `addr`.
    pub fn node_depth(&self, addr: usize) -> Option<usize> {
        let mut remaining = addr;
        let mut node = self;
        let mut depth = 0;
        'descend: loop {
            if remaining == 0 {
                return Some(depth);
            }
            remaining -= 1;
            for child in node.children() {
                let len = child.length();
                if remaining < len {
                    node = child;
                    depth += 1;
                    continue 'descend;
                }
                remaining -= len;
            }
            return None;
        }
    }

    /// Returns a copy with the subtree at `addr` replaced by `sub`.
    pub fn replace_subtree(&self, addr: usize, sub: ConceptTree) -> Result<ConceptTree, ConceptError> {
        let mut out = self.clone();
        let len = self.length();
        let slot = out
            .subtree_mut(addr)
            .ok_or(ConceptError::InvalidAddress { addr, len })?;
        *slot = sub;
        Ok(out)
    }

    /// Checks every role against its node variant.
    pub fn validate(&self, kb: &KnowledgeBase) -> Result<(), ConceptError> {
        let expect = |r: RoleId, expected: RoleKind| -> Result<(), ConceptError> {
            let actual = kb.role_kind(r).map_err(|_| ConceptError::UnknownName {
                pos: 0,
                kind: "role",
                name: format!("#{}", r.0),
            })?;
            if actual != expected {
                return Err(ConceptError::RoleKind {
                    role: kb.role_name(r).to_string(),
                    expected,
                    actual,
                });
            }
            Ok(())
        };
        match self {
            ConceptTree::Atomic(c) if c.index() >= kb.num_concepts() => {
                return Err(ConceptError::UnknownName {
                    pos: 0,
                    kind: "class",
                    name: format!("#{}", c.0),
                })
            }
            ConceptTree::Exists(r, _) | ConceptTree::Forall(r, _) | ConceptTree::MaxCard(_, r, _) => {
                expect(*r, RoleKind::Object)?
            }
            ConceptTree::MinCard(n, r, _) => {
                if *n == 0 {
                    return Err(ConceptError::ZeroMinCard);
                }
                expect(*r, RoleKind::Object)?
            }
            ConceptTree::DataLe(r, _) | ConceptTree::DataGe(r, _) => expect(*r, RoleKind::Numeric)?,
            ConceptTree::BoolEq(r, _) => expect(*r, RoleKind::Boolean)?,
            _ => {}
        }
        self.children().iter().try_for_each(|c| c.validate(kb))
    }

    /// True if any data or boolean restriction occurs in the tree.
    pub fn has_data_restriction(&self) -> bool {
        matches!(
            self,
            ConceptTree::DataLe(..) | ConceptTree::DataGe(..) | ConceptTree::BoolEq(..)
        ) || self.children().iter().any(|c| c.has_data_restriction())
    }

    pub fn display<'a>(&'a self, kb: &'a KnowledgeBase) -> Display<'a> {
        Display { tree: self, kb }
    }

    /// Canonical text form.
    pub fn serialize(&self, kb: &KnowledgeBase) -> String {
        self.display(kb).to_string()
    }

    pub fn parse(text: &str, kb: &KnowledgeBase) -> Result<ConceptTree, ConceptError> {
        let tokens = lex(text)?;
        let mut parser = Parser {
            tokens,
            pos: 0,
            kb,
            end: text.len(),
        };
        let tree = parser.concept()?;
        if let Some(tok) = parser.peek() {
            return Err(ConceptError::Syntax {
                pos: tok.pos,
                message: "trailing input".into(),
            });
        }
        Ok(tree)
    }
}

pub struct Display<'a> {
    tree: &'a ConceptTree,
    kb: &'a KnowledgeBase,
}

impl fmt::Display for Display<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kb = self.kb;
        match self.tree {
            ConceptTree::Thing => f.write_str(THING),
            ConceptTree::Atomic(c) => f.write_str(kb.concept_name(*c)),
            ConceptTree::Not(c) => write!(f, "not({})", c.display(kb)),
            ConceptTree::And(a, b) => write!(f, "and({}, {})", a.display(kb), b.display(kb)),
            ConceptTree::Or(a, b) => write!(f, "or({}, {})", a.display(kb), b.display(kb)),
            ConceptTree::Exists(r, c) => write!(f, "exists {}.({})", kb.role_name(*r), c.display(kb)),
            ConceptTree::Forall(r, c) => write!(f, "forall {}.({})", kb.role_name(*r), c.display(kb)),
            ConceptTree::MinCard(n, r, c) => {
                write!(f, "min {n} {}.({})", kb.role_name(*r), c.display(kb))
            }
            ConceptTree::MaxCard(n, r, c) => {
                write!(f, "max {n} {}.({})", kb.role_name(*r), c.display(kb))
            }
            ConceptTree::DataLe(r, v) => write!(f, "{} <= {v}", kb.role_name(*r)),
            ConceptTree::DataGe(r, v) => write!(f, "{} >= {v}", kb.role_name(*r)),
            ConceptTree::BoolEq(r, b) => write!(f, "{} = {b}", kb.role_name(*r)),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Open,
    Close,
    Comma,
    Le,
    Ge,
    Eq,
    Word(String),
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    pos: usize,
}

fn lex(text: &str) -> Result<Vec<Token>, ConceptError> {
    let mut out = Vec::new();
    let mut chars = text.char_indices().peekable();
    while let Some(&(pos, ch)) = chars.peek() {
        let single = match ch {
            c if c.is_whitespace() => {
                chars.next();
                continue;
            }
            '(' => Some(Tok::Open),
            ')' => Some(Tok::Close),
            ',' => Some(Tok::Comma),
            '=' => Some(Tok::Eq),
            _ => None,
        };
        if let Some(tok) = single {
            chars.next();
            out.push(Token { tok, pos });
            continue;
        }
        if ch == '<' || ch == '>' {
            chars.next();
            match chars.next() {
                Some((_, '=')) => out.push(Token {
                    tok: if ch == '<' { Tok::Le } else { Tok::Ge },
                    pos,
                }),
                _ => {
                    return Err(ConceptError::Syntax {
                        pos,
                        message: format!("expected `{ch}=`"),
                    })
                }
            }
            continue;
        }
        let mut word = String::new();
        while let Some(&(_, c)) = chars.peek() {
            if c.is_whitespace() || "(),<>=".contains(c) {
                break;
            }
            word.push(c);
            chars.next();
        }
        out.push(Token {
            tok: Tok::Word(word),
            pos,
        });
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    kb: &'a KnowledgeBase,
    end: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn peek_at(&self, offset: usize) -> Option<&Tok> {
        self.tokens.get(self.pos + offset).map(|t| &t.tok)
    }

    fn here(&self) -> usize {
        self.peek().map_or(self.end, |t| t.pos)
    }

    fn next(&mut self) -> Result<Token, ConceptError> {
        let tok = self.tokens.get(self.pos).cloned().ok_or(ConceptError::Syntax {
            pos: self.end,
            message: "unexpected end of input".into(),
        })?;
        self.pos += 1;
        Ok(tok)
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), ConceptError> {
        let tok = self.next()?;
        if tok.tok != want {
            return Err(ConceptError::Syntax {
                pos: tok.pos,
                message: format!("expected {what}"),
            });
        }
        Ok(())
    }

    fn word(&mut self, what: &str) -> Result<(String, usize), ConceptError> {
        let tok = self.next()?;
        match tok.tok {
            Tok::Word(w) => Ok((w, tok.pos)),
            _ => Err(ConceptError::Syntax {
                pos: tok.pos,
                message: format!("expected {what}"),
            }),
        }
    }

    fn role(&mut self, name: &str, pos: usize, expected: RoleKind) -> Result<RoleId, ConceptError> {
        let r = self.kb.role_id(name).ok_or_else(|| ConceptError::UnknownName {
            pos,
            kind: "role",
            name: name.to_string(),
        })?;
        let actual = self.kb.role_kind(r).expect("interned role");
        if actual != expected {
            return Err(ConceptError::RoleKind {
                role: name.to_string(),
                expected,
                actual,
            });
        }
        Ok(r)
    }

    /// `r.` or `r .` followed by a filler, parenthesized or bare.
    fn quantified(&mut self) -> Result<(RoleId, ConceptTree), ConceptError> {
        let (mut name, pos) = self.word("role name")?;
        if name.ends_with('.') && name.len() > 1 {
            name.pop();
        } else {
            let (dot, dpos) = self.word("`.`")?;
            if dot != "." {
                return Err(ConceptError::Syntax {
                    pos: dpos,
                    message: "expected `.` after role".into(),
                });
            }
        }
        let role = self.role(&name, pos, RoleKind::Object)?;
        let filler = if self.peek_at(0) == Some(&Tok::Open) {
            self.next()?;
            let c = self.concept()?;
            self.expect(Tok::Close, "`)`")?;
            c
        } else {
            self.concept()?
        };
        Ok((role, filler))
    }

    fn concept(&mut self) -> Result<ConceptTree, ConceptError> {
        let start = self.here();
        let (word, pos) = self.word("concept")?;
        let next = self.peek_at(0).cloned();
        let next_is_word = matches!(next, Some(Tok::Word(_)));
        match (word.as_str(), &next) {
            ("not", Some(Tok::Open)) => {
                self.next()?;
                let c = self.concept()?;
                self.expect(Tok::Close, "`)`")?;
                Ok(ConceptTree::not(c))
            }
            ("and" | "or", Some(Tok::Open)) => {
                self.next()?;
                let a = self.concept()?;
                self.expect(Tok::Comma, "`,`")?;
                let b = self.concept()?;
                self.expect(Tok::Close, "`)`")?;
                Ok(if word == "and" {
                    ConceptTree::and(a, b)
                } else {
                    ConceptTree::or(a, b)
                })
            }
            ("exists" | "forall", _) if next_is_word => {
                let (r, c) = self.quantified()?;
                Ok(if word == "exists" {
                    ConceptTree::exists(r, c)
                } else {
                    ConceptTree::forall(r, c)
                })
            }
            ("min" | "max", Some(Tok::Word(n))) if n.parse::<u32>().is_ok() => {
                let n: u32 = n.parse().expect("checked");
                self.next()?;
                let (r, c) = self.quantified()?;
                if word == "min" {
                    if n == 0 {
                        return Err(ConceptError::ZeroMinCard);
                    }
                    Ok(ConceptTree::min_card(n, r, c))
                } else {
                    Ok(ConceptTree::max_card(n, r, c))
                }
            }
            (_, Some(Tok::Le | Tok::Ge)) => {
                let r = self.role(&word, pos, RoleKind::Numeric)?;
                let op = self.next()?.tok;
                let (lit, lpos) = self.word("number")?;
                let v = lit
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or(ConceptError::Syntax {
                        pos: lpos,
                        message: format!("invalid number `{lit}`"),
                    })?;
                Ok(if op == Tok::Le {
                    ConceptTree::DataLe(r, v)
                } else {
                    ConceptTree::DataGe(r, v)
                })
            }
            (_, Some(Tok::Eq)) => {
                let r = self.role(&word, pos, RoleKind::Boolean)?;
                self.next()?;
                let (lit, lpos) = self.word("`true` or `false`")?;
                let b = match lit.as_str() {
                    "true" => true,
                    "false" => false,
                    _ => {
                        return Err(ConceptError::Syntax {
                            pos: lpos,
                            message: "expected `true` or `false`".into(),
                        })
                    }
                };
                Ok(ConceptTree::BoolEq(r, b))
            }
            (THING, _) => Ok(ConceptTree::Thing),
            _ => self
                .kb
                .concept_id(&word)
                .map(ConceptTree::Atomic)
                .ok_or(ConceptError::UnknownName {
                    pos: start,
                    kind: "class",
                    name: word,
                }),
        }
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::kb::tests::family_mini;
    use proptest::prelude::*;

    const FIG2_KB: &str = "class Female\nclass Parent\nclass Brother\nclass Male\n\
                           objprop hasSibling\nobjprop married\nobjprop hasChild\nobjprop hasParent\n\
                           dataprop age numeric\n";

    fn fig2() -> (KnowledgeBase, ConceptTree) {
        let kb = KnowledgeBase::parse(FIG2_KB).unwrap();
        let c = |n: &str| ConceptTree::Atomic(kb.concept_id(n).unwrap());
        let r = |n: &str| kb.role_id(n).unwrap();
        let tree = ConceptTree::and(
            c("Female"),
            ConceptTree::or(
                ConceptTree::exists(r("hasSibling"), c("Parent")),
                ConceptTree::exists(r("married"), c("Brother")),
            ),
        );
        (kb, tree)
    }

    #[test]
    fn length_examples() {
        assert_eq!(ConceptTree::Thing.length(), 1);
        let (kb, tree) = fig2();
        assert_eq!(tree.length(), 7);
        let male = ConceptTree::Atomic(kb.concept_id("Male").unwrap());
        let t = ConceptTree::and(male, ConceptTree::DataGe(kb.role_id("age").unwrap(), 39.0));
        assert_eq!(t.length(), 3);
    }

    #[test]
    fn depth_examples() {
        assert_eq!(ConceptTree::Thing.depth(), 0);
        // and -> or -> exists -> Parent
        assert_eq!(fig2().1.depth(), 3);
        assert_eq!(ConceptTree::not(ConceptTree::not(ConceptTree::Thing)).depth(), 2);
    }

    #[test]
    fn node_addresses_are_preorder() {
        let kb = family_mini();
        let male = ConceptTree::Atomic(kb.concept_id("Male").unwrap());
        let female = ConceptTree::Atomic(kb.concept_id("Female").unwrap());
        let t = ConceptTree::and(male.clone(), female.clone());
        assert_eq!(ConceptTree::Thing.enumerate_nodes(), [0]);
        assert_eq!(t.enumerate_nodes(), [0, 1, 2]);
        assert_eq!(t.subtree(1), Some(&male));
        assert_eq!(t.subtree(2), Some(&female));
        assert_eq!(t.subtree(3), None);
        assert_eq!(fig2().1.enumerate_nodes().len(), 7);
        assert_eq!(t.node_depth(2), Some(1));
    }

    #[test]
    fn replace_subtree_examples() {
        let kb = family_mini();
        let c = |n: &str| ConceptTree::Atomic(kb.concept_id(n).unwrap());
        let has_child = kb.role_id("hasChild").unwrap();
        let t = ConceptTree::and(c("Male"), c("Female"));
        assert_eq!(
            t.replace_subtree(2, c("Parent")).unwrap(),
            ConceptTree::and(c("Male"), c("Parent"))
        );
        assert_eq!(t, ConceptTree::and(c("Male"), c("Female")));
        assert_eq!(ConceptTree::Thing.replace_subtree(0, c("Male")).unwrap(), c("Male"));
        assert_eq!(
            ConceptTree::exists(has_child, ConceptTree::Thing)
                .replace_subtree(1, c("Female"))
                .unwrap(),
            ConceptTree::exists(has_child, c("Female"))
        );
        assert_eq!(
            t.replace_subtree(3, ConceptTree::Thing),
            Err(ConceptError::InvalidAddress { addr: 3, len: 3 })
        );
    }

    #[test]
    fn serialize_examples() {
        let (kb, _) = fig2();
        let c = |n: &str| ConceptTree::Atomic(kb.concept_id(n).unwrap());
        let r = |n: &str| kb.role_id(n).unwrap();
        let t = ConceptTree::and(c("Male"), ConceptTree::DataGe(r("age"), 39.0));
        assert_eq!(t.serialize(&kb), "and(Male, age >= 39)");
        assert_eq!(ConceptTree::Thing.serialize(&kb), "Thing");
        let uncle = ConceptTree::and(
            c("Male"),
            ConceptTree::or(
                ConceptTree::exists(r("married"), ConceptTree::exists(r("hasSibling"), c("Parent"))),
                ConceptTree::exists(r("hasSibling"), c("Parent")),
            ),
        );
        assert_eq!(
            uncle.serialize(&kb),
            "and(Male, or(exists married.(exists hasSibling.(Parent)), exists hasSibling.(Parent)))"
        );
    }

    #[test]
    fn parse_examples() {
        let (kb, _) = fig2();
        let c = |n: &str| ConceptTree::Atomic(kb.concept_id(n).unwrap());
        let r = |n: &str| kb.role_id(n).unwrap();
        assert_eq!(ConceptTree::parse("Thing", &kb).unwrap(), ConceptTree::Thing);
        assert_eq!(
            ConceptTree::parse("and(Male, Female)", &kb).unwrap(),
            ConceptTree::and(c("Male"), c("Female"))
        );
        assert_eq!(
            ConceptTree::parse("exists hasChild.(max 2 hasParent.(Male))", &kb).unwrap(),
            ConceptTree::exists(r("hasChild"), ConceptTree::max_card(2, r("hasParent"), c("Male")))
        );
        assert_eq!(
            ConceptTree::parse("  exists  hasChild . ( Male )  ", &kb).unwrap(),
            ConceptTree::exists(r("hasChild"), c("Male"))
        );
        assert_eq!(
            ConceptTree::parse("age<=-2.5", &kb).unwrap(),
            ConceptTree::DataLe(r("age"), -2.5)
        );
    }

    #[test]
    fn parse_errors() {
        let kb = family_mini();
        assert!(matches!(
            ConceptTree::parse("and(Male", &kb),
            Err(ConceptError::Syntax { pos: 8, .. })
        ));
        assert!(matches!(
            ConceptTree::parse("Uncle", &kb),
            Err(ConceptError::UnknownName { kind: "class", .. })
        ));
        assert!(matches!(
            ConceptTree::parse("exists age.(Male)", &kb),
            Err(ConceptError::RoleKind { .. })
        ));
        assert!(matches!(
            ConceptTree::parse("married >= 3", &kb),
            Err(ConceptError::RoleKind { .. })
        ));
        assert!(matches!(
            ConceptTree::parse("employed = maybe", &kb),
            Err(ConceptError::Syntax { .. })
        ));
        assert_eq!(
            ConceptTree::parse("min 0 married.(Thing)", &kb),
            Err(ConceptError::ZeroMinCard)
        );
        assert!(matches!(
            ConceptTree::parse("Male Female", &kb),
            Err(ConceptError::Syntax { .. })
        ));
        assert!(matches!(ConceptTree::parse("", &kb), Err(ConceptError::Syntax { .. })));
    }

    #[test]
    fn validate_catches_kind_mismatch() {
        let kb = family_mini();
        let age = kb.role_id("age").unwrap();
        assert!(ConceptTree::exists(age, ConceptTree::Thing).validate(&kb).is_err());
        assert!(ConceptTree::DataGe(age, 1.0).validate(&kb).is_ok());
    }

    pub(crate) fn arb_tree(kb: &KnowledgeBase) -> impl Strategy<Value = ConceptTree> {
        let concepts: Vec<ConceptId> = kb.concept_ids().collect();
        let objs = kb.roles_of_kind(RoleKind::Object);
        let nums = kb.roles_of_kind(RoleKind::Numeric);
        let bools = kb.roles_of_kind(RoleKind::Boolean);
        let leaf = prop_oneof![
            Just(ConceptTree::Thing),
            proptest::sample::select(concepts).prop_map(ConceptTree::Atomic),
            (proptest::sample::select(nums.clone()), -100.0..100.0f64)
                .prop_map(|(r, v)| ConceptTree::DataLe(r, v)),
            (proptest::sample::select(nums), -1e6..1e6f64).prop_map(|(r, v)| ConceptTree::DataGe(r, v)),
            (proptest::sample::select(bools), any::<bool>()).prop_map(|(r, b)| ConceptTree::BoolEq(r, b)),
        ];
        leaf.prop_recursive(5, 40, 2, move |inner| {
            let roles = proptest::sample::select(objs.clone());
            prop_oneof![
                inner.clone().prop_map(ConceptTree::not),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| ConceptTree::and(a, b)),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| ConceptTree::or(a, b)),
                (roles.clone(), inner.clone()).prop_map(|(r, c)| ConceptTree::exists(r, c)),
                (roles.clone(), inner.clone()).prop_map(|(r, c)| ConceptTree::forall(r, c)),
                (1..6u32, roles.clone(), inner.clone())
                    .prop_map(|(n, r, c)| ConceptTree::min_card(n, r, c)),
                (0..6u32, roles, inner).prop_map(|(n, r, c)| ConceptTree::max_card(n, r, c)),
            ]
        })
    }

    proptest! {
        #[test]
        fn parse_inverts_serialize(tree in arb_tree(&family_mini())) {
            let kb = family_mini();
            let text = tree.serialize(&kb);
            prop_assert_eq!(ConceptTree::parse(&text, &kb).unwrap(), tree);
        }

        #[test]
        fn replace_adjusts_length(
            tree in arb_tree(&family_mini()),
            sub in arb_tree(&family_mini()),
            pick in any::<prop::sample::Index>(),
        ) {
            let addr = pick.index(tree.length());
            let old = tree.subtree(addr).unwrap().length();
            let new = tree.replace_subtree(addr, sub.clone()).unwrap();
            prop_assert_eq!(new.length(), tree.length() - old + sub.length());
            prop_assert!(tree.depth() < tree.length());
        }
    }
}
