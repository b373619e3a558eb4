//! Pipeline syntax tree and its canonical printer.
//!
//! Printing emits the minimal parentheses needed to preserve the tree, so
//! `parse(print(p)) == p` holds for every parsed program.

use std::fmt;

use crate::model::{NearbySchema, SectorSchema};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PipelineProgram {
    pub operations: Vec<Operation>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Operation {
    Adjust(Vec<Directive>),
    /// Category tokens as written (lowercased), including `topology`.
    Deduce(Vec<String>),
    Filter(Expr),
    /// Class names joined by `OR`.
    Isa(Expr),
    Pick(Expr),
    Select { relations: Expr, condition: Option<Expr> },
    Sort(SortSpec),
    Slice(SliceRange),
    Calc(Vec<Assignment>),
    Map(Vec<Assignment>),
    Produce { kind: String, assignments: Vec<Assignment> },
    Backtrace(Option<i64>),
    Reload,
    Halt,
    Log(Vec<String>),
}

impl Operation {
    pub fn name(&self) -> &'static str {
        match self {
            Operation::Adjust(_) => "adjust",
            Operation::Deduce(_) => "deduce",
            Operation::Filter(_) => "filter",
            Operation::Isa(_) => "isa",
            Operation::Pick(_) => "pick",
            Operation::Select { .. } => "select",
            Operation::Sort(_) => "sort",
            Operation::Slice(_) => "slice",
            Operation::Calc(_) => "calc",
            Operation::Map(_) => "map",
            Operation::Produce { .. } => "produce",
            Operation::Backtrace(_) => "backtrace",
            Operation::Reload => "reload",
            Operation::Halt => "halt",
            Operation::Log(_) => "log",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Directive {
    MaxGap(f64),
    /// Radians.
    MaxAngle(f64),
    Sector(SectorSchema, f64),
    Nearby(NearbySchema, f64),
    LongRatio(f64),
    ThinRatio(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SortOrder {
    Ascending,
    Descending,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SortSpec {
    /// Dotted key: an attribute (`volume`, `confidence.label`) or a
    /// relation metric (`disjoint.delta`).
    pub key: Vec<String>,
    pub order: Option<SortOrder>,
    /// Backtrace distance for relation metrics, as written (sign ignored).
    pub steps: Option<i64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SliceRange {
    /// 1-based position; negative counts from the end.
    Index(i64),
    /// 1-based inclusive span.
    Range(i64, i64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    /// Dotted target such as `confidence.label`.
    pub target: String,
    pub value: Expr,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Segment {
    Name(String),
    Index(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Not,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Or,
    And,
    Eq,
    Ne,
    Lt,
    Gt,
    Le,
    Ge,
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Gt | BinOp::Le | BinOp::Ge => 4,
            BinOp::Add | BinOp::Sub => 5,
            BinOp::Mul | BinOp::Div => 6,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Or => "OR",
            BinOp::And => "AND",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Gt => ">",
            BinOp::Le => "<=",
            BinOp::Ge => ">=",
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
        }
    }

    pub fn is_comparison(self) -> bool {
        self.precedence() == 4
    }
}

const NOT_PRECEDENCE: u8 = 3;
const NEG_PRECEDENCE: u8 = 7;
const ATOM_PRECEDENCE: u8 = 8;

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Str(String),
    Bool(bool),
    Path(Vec<Segment>),
    Call(String, Vec<Expr>),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn name(name: &str) -> Expr {
        Expr::Path(vec![Segment::Name(name.to_string())])
    }

    pub fn binary(op: BinOp, l: Expr, r: Expr) -> Expr {
        Expr::Binary(op, Box::new(l), Box::new(r))
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Binary(op, ..) => op.precedence(),
            Expr::Unary(UnaryOp::Not, _) => NOT_PRECEDENCE,
            Expr::Unary(UnaryOp::Neg, _) => NEG_PRECEDENCE,
            Expr::Num(n) if n.is_sign_negative() => NEG_PRECEDENCE,
            _ => ATOM_PRECEDENCE,
        }
    }

    /// Plain path rendered as a dotted name, if the path has no index.
    pub fn dotted(&self) -> Option<String> {
        match self {
            Expr::Path(segs) => {
                let mut names = Vec::with_capacity(segs.len());
                for s in segs {
                    match s {
                        Segment::Name(n) => names.push(n.as_str()),
                        Segment::Index(_) => return None,
                    }
                }
                Some(names.join("."))
            }
            _ => None,
        }
    }

    /// Visits every path in the tree.
    pub fn walk_paths<'a>(&'a self, f: &mut impl FnMut(&'a [Segment])) {
        match self {
            Expr::Path(p) => f(p),
            Expr::Call(_, args) => args.iter().for_each(|a| a.walk_paths(f)),
            Expr::Unary(_, e) => e.walk_paths(f),
            Expr::Binary(_, l, r) => {
                l.walk_paths(f);
                r.walk_paths(f);
            }
            _ => {}
        }
    }
}

fn write_child(f: &mut fmt::Formatter<'_>, e: &Expr, parens: bool) -> fmt::Result {
    if parens {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

pub(crate) fn write_str_literal(f: &mut impl fmt::Write, s: &str) -> fmt::Result {
    f.write_char('\'')?;
    for ch in s.chars() {
        if ch == '\'' || ch == '\\' {
            f.write_char('\\')?;
        }
        f.write_char(ch)?;
    }
    f.write_char('\'')
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(n) => write!(f, "{n}"),
            Expr::Str(s) => write_str_literal(f, s),
            Expr::Bool(b) => write!(f, "{b}"),
            Expr::Path(segs) => {
                for (i, s) in segs.iter().enumerate() {
                    match s {
                        Segment::Name(n) if i == 0 => write!(f, "{n}")?,
                        Segment::Name(n) => write!(f, ".{n}")?,
                        Segment::Index(k) => write!(f, "[{k}]")?,
                    }
                }
                Ok(())
            }
            Expr::Call(name, args) => {
                write!(f, "{name}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
            Expr::Unary(UnaryOp::Not, e) => {
                f.write_str("NOT ")?;
                write_child(f, e, e.precedence() < NOT_PRECEDENCE)
            }
            Expr::Unary(UnaryOp::Neg, e) => {
                f.write_str("-")?;
                write_child(f, e, e.precedence() < ATOM_PRECEDENCE)
            }
            Expr::Binary(op, l, r) => {
                let p = op.precedence();
                let lp = if op.is_comparison() { l.precedence() <= p } else { l.precedence() < p };
                write_child(f, l, lp)?;
                write!(f, " {} ", op.symbol())?;
                write_child(f, r, r.precedence() <= p)
            }
        }
    }
}

fn write_assignments(f: &mut fmt::Formatter<'_>, items: &[Assignment]) -> fmt::Result {
    for (i, a) in items.iter().enumerate() {
        if i > 0 {
            f.write_str("; ")?;
        }
        write!(f, "{} = {}", a.target, a.value)?;
    }
    Ok(())
}

impl fmt::Display for Directive {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Directive::MaxGap(v) => write!(f, "max gap {v}"),
            Directive::MaxAngle(v) => write!(f, "max angle {v}"),
            Directive::Sector(s, v) => {
                let name = match s {
                    SectorSchema::Fixed => "fixed",
                    SectorSchema::Dimension => "dimension",
                    SectorSchema::Nearby => "nearby",
                };
                write!(f, "sector {name} {v}")
            }
            Directive::Nearby(s, v) => {
                let name = match s {
                    NearbySchema::Fixed => "fixed",
                    NearbySchema::Dimension => "dimension",
                    NearbySchema::Limit => "limit",
                };
                write!(f, "nearby {name} {v}")
            }
            Directive::LongRatio(v) => write!(f, "long ratio {v}"),
            Directive::ThinRatio(v) => write!(f, "thin ratio {v}"),
        }
    }
}

impl fmt::Display for Operation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.name())?;
        match self {
            Operation::Adjust(ds) => {
                for (i, d) in ds.iter().enumerate() {
                    if i > 0 {
                        f.write_str("; ")?;
                    }
                    write!(f, "{d}")?;
                }
            }
            Operation::Deduce(tokens) | Operation::Log(tokens) => f.write_str(&tokens.join(" "))?,
            Operation::Filter(e) | Operation::Isa(e) | Operation::Pick(e) => write!(f, "{e}")?,
            Operation::Select { relations, condition } => {
                write!(f, "{relations}")?;
                if let Some(c) = condition {
                    write!(f, " ? {c}")?;
                }
            }
            Operation::Sort(spec) => {
                f.write_str(&spec.key.join("."))?;
                if let Some(order) = spec.order {
                    f.write_str(if order == SortOrder::Ascending { " <" } else { " >" })?;
                }
                if let Some(n) = spec.steps {
                    write!(f, " {n}")?;
                }
            }
            Operation::Slice(SliceRange::Index(n)) => write!(f, "{n}")?,
            Operation::Slice(SliceRange::Range(a, b)) => write!(f, "{a}..{b}")?,
            Operation::Calc(items) | Operation::Map(items) => write_assignments(f, items)?,
            Operation::Produce { kind, assignments } => {
                f.write_str(kind)?;
                if !assignments.is_empty() {
                    f.write_str(" : ")?;
                    write_assignments(f, assignments)?;
                }
            }
            Operation::Backtrace(n) => {
                if let Some(n) = n {
                    write!(f, "{n}")?;
                }
            }
            Operation::Reload | Operation::Halt => {}
        }
        f.write_str(")")
    }
}

impl fmt::Display for PipelineProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, op) in self.operations.iter().enumerate() {
            if i > 0 {
                f.write_str(" | ")?;
            }
            write!(f, "{op}")?;
        }
        Ok(())
    }
}
