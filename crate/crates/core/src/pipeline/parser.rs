//! Recursive-descent parser for pipeline programs.

use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use crate::deduction::{canonical_predicate, is_predicate, Category};
use crate::error::ParseError;
use crate::geometry::SectorLabel;
use crate::model::{NearbySchema, SectorSchema};

type PResult<T> = Result<T, ParseError>;

pub const PRODUCE_KINDS: [&str; 6] = ["copy", "group", "on", "at", "by", "in"];

pub fn parse_pipeline(src: &str) -> PResult<PipelineProgram> {
    let tokens = tokenize(src)?;
    let mut p = Parser { tokens, pos: 0 };
    let mut operations = Vec::new();
    if p.peek() != &Tok::Eof {
        loop {
            operations.push(p.operation()?);
            if p.peek() == &Tok::Pipe {
                p.bump();
                continue;
            }
            if p.peek() != &Tok::Eof {
                return Err(p.error_here(format!("expected `|` or end of input, found {}", p.peek().describe())));
            }
            break;
        }
    }
    Ok(PipelineProgram { operations })
}

/// Parses a standalone expression (used by tests and bindings).
pub fn parse_expression(src: &str) -> PResult<Expr> {
    let tokens = tokenize(src)?;
    let mut p = Parser { tokens, pos: 0 };
    let e = p.expr()?;
    p.expect(&Tok::Eof)?;
    Ok(e)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn error_at(&self, t: &Token, msg: impl Into<String>) -> ParseError {
        ParseError::new(t.line, t.column, msg)
    }

    fn error_here(&self, msg: impl Into<String>) -> ParseError {
        self.error_at(&self.tokens[self.pos], msg)
    }

    fn expect(&mut self, tok: &Tok) -> PResult<Token> {
        if self.peek() == tok {
            Ok(self.bump())
        } else {
            let want = match tok {
                Tok::Eof => "end of input".to_string(),
                other => other.describe(),
            };
            Err(self.error_here(format!("expected {want}, found {}", self.peek().describe())))
        }
    }

    fn ident(&mut self) -> PResult<(String, Token)> {
        match self.peek().clone() {
            Tok::Ident(s) => Ok((s, self.bump())),
            other => Err(self.error_here(format!("expected a name, found {}", other.describe()))),
        }
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn operation(&mut self) -> PResult<Operation> {
        let (name, name_tok) = self.ident()?;
        self.expect(&Tok::LParen)?;
        let op = match name.as_str() {
            "adjust" => Operation::Adjust(self.directives()?),
            "deduce" => Operation::Deduce(self.categories()?),
            "filter" => Operation::Filter(self.expr()?),
            "isa" => Operation::Isa(self.class_expr()?),
            "pick" => Operation::Pick(self.relation_expr()?),
            "select" => {
                let relations = self.relation_expr()?;
                let condition = if self.peek() == &Tok::Question {
                    self.bump();
                    Some(self.expr()?)
                } else {
                    None
                };
                Operation::Select { relations, condition }
            }
            "sort" => Operation::Sort(self.sort_spec()?),
            "slice" => Operation::Slice(self.slice_range()?),
            "calc" => Operation::Calc(self.assignments()?),
            "map" => Operation::Map(self.assignments()?),
            "produce" => self.produce()?,
            "backtrace" => {
                if self.peek() == &Tok::RParen {
                    Operation::Backtrace(None)
                } else {
                    Operation::Backtrace(Some(self.signed_int()?.0))
                }
            }
            "reload" => Operation::Reload,
            "halt" => Operation::Halt,
            "log" => Operation::Log(self.log_tokens()?),
            _ => return Err(self.error_at(&name_tok, format!("unknown operation `{name}`"))),
        };
        if self.peek() != &Tok::RParen {
            return Err(self.error_here(format!(
                "expected `)` to close {name}(, found {}",
                self.peek().describe()
            )));
        }
        self.bump();
        Ok(op)
    }

    fn number(&mut self) -> PResult<f64> {
        let neg = if self.peek() == &Tok::Minus {
            self.bump();
            true
        } else {
            false
        };
        match self.peek().clone() {
            Tok::Number(v, _) => {
                self.bump();
                Ok(if neg { -v } else { v })
            }
            other => Err(self.error_here(format!("expected a number, found {}", other.describe()))),
        }
    }

    fn signed_int(&mut self) -> PResult<(i64, Token)> {
        let start = self.tokens[self.pos].clone();
        let neg = if self.peek() == &Tok::Minus {
            self.bump();
            true
        } else {
            false
        };
        match self.peek().clone() {
            Tok::Number(_, text) if !text.contains('.') => {
                self.bump();
                let v: i64 = text.parse().map_err(|_| self.error_at(&start, "integer out of range"))?;
                Ok((if neg { -v } else { v }, start))
            }
            other => Err(self.error_here(format!("expected an integer, found {}", other.describe()))),
        }
    }

    fn directives(&mut self) -> PResult<Vec<Directive>> {
        let mut out = Vec::new();
        if self.peek() == &Tok::RParen {
            return Ok(out);
        }
        loop {
            let start = self.tokens[self.pos].clone();
            let (first, _) = self.ident()?;
            let (second, second_tok) = self.ident()?;
            let value = self.number()?;
            if !(value > 0.0 && value.is_finite()) {
                return Err(self.error_at(&start, format!("`{first} {second}` needs a positive value, got {value}")));
            }
            let d = match (first.as_str(), second.as_str()) {
                ("max", "gap") => Directive::MaxGap(value),
                ("max", "angle") => {
                    if value >= std::f64::consts::FRAC_PI_2 {
                        return Err(self.error_at(&start, "max angle must be below pi/2 radians"));
                    }
                    Directive::MaxAngle(value)
                }
                ("sector", "fixed") => Directive::Sector(SectorSchema::Fixed, value),
                ("sector", "dimension") => Directive::Sector(SectorSchema::Dimension, value),
                ("sector", "nearby") => Directive::Sector(SectorSchema::Nearby, value),
                ("nearby", "fixed") => Directive::Nearby(NearbySchema::Fixed, value),
                ("nearby", "dimension") => Directive::Nearby(NearbySchema::Dimension, value),
                ("nearby", "limit") => Directive::Nearby(NearbySchema::Limit, value),
                ("long", "ratio") => Directive::LongRatio(value),
                ("thin", "ratio") => Directive::ThinRatio(value),
                ("sector" | "nearby", _) => {
                    return Err(self.error_at(&second_tok, format!("unknown {first} schema `{second}`")))
                }
                _ => return Err(self.error_at(&start, format!("unknown setting `{first} {second}`"))),
            };
            out.push(d);
            if self.peek() == &Tok::Semicolon {
                self.bump();
            } else {
                return Ok(out);
            }
        }
    }

    fn categories(&mut self) -> PResult<Vec<String>> {
        let mut out = Vec::new();
        while let Tok::Ident(_) = self.peek() {
            let (name, tok) = self.ident()?;
            let lower = name.to_lowercase();
            Category::parse_set(&lower).map_err(|_| self.error_at(&tok, format!("unknown relation category `{name}`")))?;
            out.push(lower);
        }
        Ok(out)
    }

    fn class_expr(&mut self) -> PResult<Expr> {
        let start = self.tokens[self.pos].clone();
        let e = self.expr()?;
        fn valid(e: &Expr) -> bool {
            match e {
                Expr::Str(_) => true,
                Expr::Path(p) => matches!(p.as_slice(), [Segment::Name(_)]),
                Expr::Binary(BinOp::Or, l, r) => valid(l) && valid(r),
                _ => false,
            }
        }
        if !valid(&e) {
            return Err(self.error_at(&start, "isa expects class names joined by OR"));
        }
        Ok(e)
    }

    fn relation_expr(&mut self) -> PResult<Expr> {
        let start = self.tokens[self.pos].clone();
        let e = self.expr()?;
        let mut bad: Option<String> = None;
        e.walk_paths(&mut |segs| {
            if bad.is_some() {
                return;
            }
            let ok = match segs {
                [Segment::Name(p)] => is_predicate(p),
                [Segment::Name(p), Segment::Name(m)] => is_predicate(p) && (m == "delta" || m == "angle"),
                _ => false,
            };
            if !ok {
                bad = Some(Expr::Path(segs.to_vec()).to_string());
            }
        });
        if let Some(name) = bad {
            return Err(self.error_at(&start, format!("unknown predicate `{name}`")));
        }
        Ok(e)
    }

    fn sort_spec(&mut self) -> PResult<SortSpec> {
        let (first, _) = self.ident()?;
        let mut key = vec![first];
        while self.peek() == &Tok::Dot {
            self.bump();
            key.push(self.ident()?.0);
        }
        let order = match self.peek() {
            Tok::Lt => Some(SortOrder::Ascending),
            Tok::Gt => Some(SortOrder::Descending),
            _ => None,
        };
        let mut steps = None;
        if order.is_some() {
            self.bump();
            if self.peek() != &Tok::RParen {
                steps = Some(self.signed_int()?.0);
            }
        }
        Ok(SortSpec { key, order, steps })
    }

    fn slice_range(&mut self) -> PResult<SliceRange> {
        let (a, a_tok) = self.signed_int()?;
        if a == 0 {
            return Err(self.error_at(&a_tok, "slice positions start at 1"));
        }
        if self.peek() != &Tok::DotDot {
            return Ok(SliceRange::Index(a));
        }
        self.bump();
        let (b, b_tok) = self.signed_int()?;
        if a < 0 || b < 1 {
            return Err(self.error_at(&b_tok, "slice ranges need positive bounds"));
        }
        if b < a {
            return Err(self.error_at(&b_tok, format!("empty slice range {a}..{b}")));
        }
        Ok(SliceRange::Range(a, b))
    }

    fn assignments(&mut self) -> PResult<Vec<Assignment>> {
        let mut out = Vec::new();
        if self.peek() == &Tok::RParen {
            return Ok(out);
        }
        loop {
            let (first, _) = self.ident()?;
            let mut target = first;
            while self.peek() == &Tok::Dot {
                self.bump();
                target.push('.');
                target.push_str(&self.ident()?.0);
            }
            self.expect(&Tok::Assign)?;
            let value = self.expr()?;
            out.push(Assignment { target, value });
            if self.peek() == &Tok::Semicolon {
                self.bump();
            } else {
                return Ok(out);
            }
        }
    }

    fn produce(&mut self) -> PResult<Operation> {
        let (kind, tok) = self.ident()?;
        let known = PRODUCE_KINDS.contains(&kind.as_str())
            || kind.parse::<SectorLabel>().map(|l| l != SectorLabel::INNER).unwrap_or(false);
        if !known {
            return Err(self.error_at(&tok, format!("unknown produce kind `{kind}`")));
        }
        let assignments = if self.peek() == &Tok::Colon {
            self.bump();
            self.assignments()?
        } else {
            Vec::new()
        };
        Ok(Operation::Produce { kind, assignments })
    }

    fn log_tokens(&mut self) -> PResult<Vec<String>> {
        let mut out = Vec::new();
        while let Tok::Ident(_) = self.peek() {
            let (name, tok) = self.ident()?;
            if name != "3D" && name != "base" && !is_predicate(&name) {
                return Err(self.error_at(&tok, format!("log expects 3D, base or predicate names, found `{name}`")));
            }
            out.push(name);
        }
        Ok(out)
    }

    // expressions

    fn expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.and_expr()?;
        while self.is_keyword("OR") || self.peek() == &Tok::OrOr {
            self.bump();
            let rhs = self.and_expr()?;
            lhs = Expr::binary(BinOp::Or, lhs, rhs);
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.not_expr()?;
        while self.is_keyword("AND") || self.peek() == &Tok::AndAnd {
            self.bump();
            let rhs = self.not_expr()?;
            lhs = Expr::binary(BinOp::And, lhs, rhs);
        }
        Ok(lhs)
    }

    fn not_expr(&mut self) -> PResult<Expr> {
        if self.is_keyword("NOT") || self.peek() == &Tok::Bang {
            self.bump();
            return Ok(Expr::Unary(UnaryOp::Not, Box::new(self.not_expr()?)));
        }
        self.comparison()
    }

    fn comparison_op(&self) -> Option<BinOp> {
        Some(match self.peek() {
            Tok::EqEq => BinOp::Eq,
            Tok::NotEq => BinOp::Ne,
            Tok::Lt => BinOp::Lt,
            Tok::Gt => BinOp::Gt,
            Tok::Le => BinOp::Le,
            Tok::Ge => BinOp::Ge,
            _ => return None,
        })
    }

    fn comparison(&mut self) -> PResult<Expr> {
        let lhs = self.additive()?;
        let Some(op) = self.comparison_op() else { return Ok(lhs) };
        self.bump();
        let rhs = self.additive()?;
        if self.comparison_op().is_some() {
            return Err(self.error_here("comparisons cannot be chained; combine them with AND"));
        }
        Ok(Expr::binary(op, lhs, rhs))
    }

    fn additive(&mut self) -> PResult<Expr> {
        let mut lhs = self.multiplicative()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.multiplicative()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn multiplicative(&mut self) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> PResult<Expr> {
        if self.peek() == &Tok::Minus {
            self.bump();
            return Ok(Expr::Unary(UnaryOp::Neg, Box::new(self.unary()?)));
        }
        self.primary()
    }

    fn primary(&mut self) -> PResult<Expr> {
        let t = self.tokens[self.pos].clone();
        match t.tok.clone() {
            Tok::Number(v, _) => {
                self.bump();
                Ok(Expr::Num(v))
            }
            Tok::Str(s) => {
                self.bump();
                Ok(Expr::Str(s))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                if self.peek() != &Tok::RParen {
                    return Err(self.error_at(&t, "unbalanced parenthesis"));
                }
                self.bump();
                Ok(e)
            }
            Tok::Ident(name) => {
                if matches!(name.as_str(), "AND" | "OR" | "NOT") {
                    return Err(self.error_at(&t, format!("unexpected `{name}`")));
                }
                self.bump();
                match name.as_str() {
                    "true" | "TRUE" => return Ok(Expr::Bool(true)),
                    "false" | "FALSE" => return Ok(Expr::Bool(false)),
                    _ => {}
                }
                if self.peek() == &Tok::LParen {
                    self.bump();
                    let mut args = Vec::new();
                    if self.peek() != &Tok::RParen {
                        loop {
                            args.push(self.expr()?);
                            if self.peek() == &Tok::Comma {
                                self.bump();
                            } else {
                                break;
                            }
                        }
                    }
                    if self.peek() != &Tok::RParen {
                        return Err(self.error_here(format!(
                            "expected `)` to close {name}(, found {}",
                            self.peek().describe()
                        )));
                    }
                    self.bump();
                    return Ok(Expr::Call(name, args));
                }
                let mut segs = vec![Segment::Name(name)];
                loop {
                    match self.peek() {
                        Tok::Dot => {
                            self.bump();
                            segs.push(Segment::Name(self.ident()?.0));
                        }
                        Tok::LBracket => {
                            self.bump();
                            let (k, ktok) = self.signed_int()?;
                            if k < 0 {
                                return Err(self.error_at(&ktok, "index must be non-negative"));
                            }
                            self.expect(&Tok::RBracket)?;
                            segs.push(Segment::Index(k as usize));
                        }
                        _ => break,
                    }
                }
                Ok(Expr::Path(segs))
            }
            other => Err(self.error_at(&t, format!("expected an expression, found {}", other.describe()))),
        }
    }
}

/// Predicate names referenced by a relation expression, canonicalized.
pub fn referenced_predicates(e: &Expr) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    e.walk_paths(&mut |segs| {
        if let Some(Segment::Name(p)) = segs.first() {
            let p = canonical_predicate(p).to_string();
            if !out.contains(&p) {
                out.push(p);
            }
        }
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn roundtrip(src: &str) {
        let p = parse_pipeline(src).unwrap_or_else(|e| panic!("{src}: {e}"));
        let printed = p.to_string();
        let again = parse_pipeline(&printed).unwrap_or_else(|e| panic!("{printed}: {e}"));
        assert_eq!(p, again, "{src} -> {printed}");
    }

    #[test]
    fn three_operations() {
        let p = parse_pipeline("filter(volume > 0.4) | pick(left AND above) | log()").unwrap();
        assert_eq!(p.operations.len(), 3);
        assert_eq!(p.to_string(), "filter(volume > 0.4) | pick(left AND above) | log()");
    }

    #[test]
    fn empty_program() {
        assert!(parse_pipeline("").unwrap().operations.is_empty());
        assert!(parse_pipeline("  \n ").unwrap().operations.is_empty());
    }

    #[test]
    fn canonical_printing() {
        let p = parse_pipeline("filter((type == 'chair' OR type == 'table'))").unwrap();
        assert_eq!(p.to_string(), "filter(type == 'chair' OR type == 'table')");
        let p = parse_pipeline("filter(footprint > 0.5 && height > 1.5)").unwrap();
        assert_eq!(p.to_string(), "filter(footprint > 0.5 AND height > 1.5)");
        let p = parse_pipeline("pick(near AND (left OR behind))").unwrap();
        assert_eq!(p.to_string(), "pick(near AND (left OR behind))");
        let p = parse_pipeline("map(weight = volume × 140.0)").unwrap();
        assert_eq!(p.to_string(), "map(weight = volume * 140)");
    }

    #[test]
    fn roundtrips() {
        for src in [
            "filter(NOT (virtual OR moving))",
            "filter(NOT virtual AND NOT moving)",
            "calc(x = -(1 - 2) * 3 / (4 - 5))",
            "calc(x = 1 - (2 - 3))",
            "calc(x = (1 < 2) == (3 > 4))",
            "sort(disjoint.delta > -2) | slice(2..3) | slice(-1)",
            "produce(al : label = 'ahead-left')",
            "backtrace() | backtrace(-2)",
            "filter(label == 'it\\'s')",
            "calc(v = objects[0].volume; m = median(objects.volume))",
        ] {
            roundtrip(src);
        }
    }

    #[test]
    fn errors_carry_location() {
        let e = parse_pipeline("filter(volume > 0.4) | frobnicate()").unwrap_err();
        assert_eq!((e.line, e.column), (1, 24));
        let e = parse_pipeline("filter(volume > 0.4").unwrap_err();
        assert!(e.message.contains(")"), "{e}");
        let e = parse_pipeline("filter(id == 'a') |\n  slice(0)").unwrap_err();
        assert_eq!((e.line, e.column), (2, 9));
        assert!(parse_pipeline("slice(3..2)").is_err());
        assert!(parse_pipeline("slice(2..)").is_err());
        assert!(parse_pipeline("pick(volume)").is_err());
        assert!(parse_pipeline("deduce(spatial)").is_err());
        assert!(parse_pipeline("adjust(max speed 3)").is_err());
        assert!(parse_pipeline("produce(pile)").is_err());
        assert!(parse_pipeline("filter(a < b < c)").is_err());
        assert!(parse_pipeline("filter(a) |").is_err());
    }

    #[test]
    fn sort_specs() {
        let p = parse_pipeline("sort(disjoint.delta > -2)").unwrap();
        assert_eq!(
            p.operations[0],
            Operation::Sort(SortSpec {
                key: vec!["disjoint".into(), "delta".into()],
                order: Some(SortOrder::Descending),
                steps: Some(-2)
            })
        );
    }

    #[test]
    fn predicates_of_relation_expression() {
        let e = parse_expression("near AND (over OR left) AND near.delta < 2").unwrap();
        assert_eq!(referenced_predicates(&e), vec!["near", "above", "left"]);
    }
}
