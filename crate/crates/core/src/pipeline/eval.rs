//! Pipeline evaluation over a fact base.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use super::ast::*;
use super::parser::referenced_predicates;
use crate::deduction::{self, canonical_predicate, category_of, is_predicate, relations_between, resolve_observer, Category};
use crate::error::{Error, Result};
use crate::geometry::{contact_region, enclosing_box, sector_region, Placement, SectorLabel};
use crate::io;
use crate::model::{AdjustmentSettings, AttrValue, FactBase, SpatialObject};
use crate::taxonomy::{split_or, Taxonomy};

/// Result of evaluating an expression.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Num(f64),
    Text(String),
    Bool(bool),
    /// Undefined attribute or missing relation metric; fails every comparison.
    Absent,
    Object(String),
    Objects(Vec<String>),
    List(Vec<Value>),
}

impl Value {
    fn kind(&self) -> &'static str {
        match self {
            Value::Num(_) => "number",
            Value::Text(_) => "string",
            Value::Bool(_) => "boolean",
            Value::Absent => "absent value",
            Value::Object(_) => "object",
            Value::Objects(_) => "object list",
            Value::List(_) => "list",
        }
    }

    fn from_attr(v: AttrValue) -> Value {
        match v {
            AttrValue::Bool(b) => Value::Bool(b),
            AttrValue::Number(n) => Value::Num(n),
            AttrValue::Text(s) => Value::Text(s),
        }
    }

    fn into_attr(self) -> std::result::Result<AttrValue, String> {
        match self {
            Value::Num(n) => Ok(AttrValue::Number(n)),
            Value::Text(s) => Ok(AttrValue::Text(s)),
            Value::Bool(b) => Ok(AttrValue::Bool(b)),
            other => Err(format!("cannot store a {} as an attribute", other.kind())),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Num(n) => write!(f, "{n}"),
            Value::Text(s) => write!(f, "'{s}'"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Absent => f.write_str("absent"),
            Value::Object(id) => write!(f, "<{id}>"),
            Value::Objects(ids) => write!(f, "<{} objects>", ids.len()),
            Value::List(items) => write!(f, "[{} values]", items.len()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogKind {
    /// Plain-text listing of the current objects.
    Summary,
    /// Full fact document (JSON).
    Facts,
    /// Knowledge graph in Mermaid markdown.
    Mermaid,
    /// Wavefront OBJ scene.
    Scene,
}

impl LogKind {
    pub fn extension(self) -> &'static str {
        match self {
            LogKind::Summary => "txt",
            LogKind::Facts => "json",
            LogKind::Mermaid => "md",
            LogKind::Scene => "obj",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            LogKind::Summary => "summary",
            LogKind::Facts => "facts",
            LogKind::Mermaid => "graph",
            LogKind::Scene => "scene",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogArtifact {
    /// 1-based index of the `log` operation in the program.
    pub step: usize,
    pub kind: LogKind,
    pub content: String,
}

/// State of one pipeline run.
#[derive(Debug, Clone)]
pub struct EvaluationContext {
    pub fact_base: FactBase,
    pub settings: AdjustmentSettings,
    pub taxonomy: Option<Taxonomy>,
    /// Explicit observer id for visibility relations.
    pub observer: Option<String>,
    /// Object lists: the initial list, then one entry per executed operation.
    pub chain: Vec<Vec<String>>,
    pub logs: Vec<LogArtifact>,
    /// Ids of every object created by `produce`.
    pub produced: Vec<String>,
    pub halted: bool,
}

type OpResult<T> = std::result::Result<T, String>;

fn err<T>(e: Error) -> OpResult<T> {
    Err(e.to_string())
}

impl EvaluationContext {
    pub fn new(fact_base: FactBase, settings: AdjustmentSettings) -> Self {
        let chain = vec![fact_base.ids()];
        Self {
            fact_base,
            settings,
            taxonomy: None,
            observer: None,
            chain,
            logs: Vec::new(),
            produced: Vec::new(),
            halted: false,
        }
    }

    pub fn with_taxonomy(mut self, taxonomy: Taxonomy) -> Self {
        self.taxonomy = Some(taxonomy);
        self
    }

    pub fn with_observer(mut self, id: impl Into<String>) -> Self {
        self.observer = Some(id.into());
        self
    }

    /// Current object list (the last chain entry).
    pub fn current(&self) -> &[String] {
        self.chain.last().map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn current_objects(&self) -> Vec<&SpatialObject> {
        self.current().iter().filter_map(|id| self.fact_base.get(id)).collect()
    }

    pub fn variables(&self) -> &std::collections::BTreeMap<String, f64> {
        &self.fact_base.variables
    }

    /// Runs every operation of `program` in order, stopping after `halt`.
    pub fn run(&mut self, program: &PipelineProgram) -> Result<()> {
        for (i, op) in program.operations.iter().enumerate() {
            if self.halted {
                break;
            }
            let step = i + 1;
            let input = self.current().to_vec();
            let output = self.apply(step, op, &input).map_err(|message| Error::Runtime {
                step,
                op: op.name().to_string(),
                message,
            })?;
            self.chain.push(output);
            if matches!(op, Operation::Halt) {
                self.halted = true;
            }
        }
        Ok(())
    }

    fn apply(&mut self, step: usize, op: &Operation, input: &[String]) -> OpResult<Vec<String>> {
        match op {
            Operation::Adjust(directives) => {
                let mut s = self.settings.clone();
                for d in directives {
                    apply_directive(&mut s, *d);
                }
                s.validate().map_err(|e| e.to_string())?;
                if s != self.settings {
                    self.settings = s;
                    self.fact_base.invalidate_relations();
                }
                Ok(input.to_vec())
            }
            Operation::Deduce(tokens) => {
                let mut cats = BTreeSet::new();
                for t in tokens {
                    cats.extend(Category::parse_set(t).map_err(|e| e.to_string())?);
                }
                self.deduce_categories(&cats, input)?;
                Ok(input.to_vec())
            }
            Operation::Filter(expr) => {
                let mut out = Vec::new();
                for id in input {
                    let obj = self.object(id)?;
                    let env = Env { ctx: self, input, scope: Scope::Object { obj, strict: false } };
                    if truthy(&env.eval(expr)?)? {
                        out.push(id.clone());
                    }
                }
                Ok(out)
            }
            Operation::Isa(expr) => {
                let tax = self.taxonomy.as_ref().ok_or("isa needs a loaded taxonomy")?;
                let classes = split_or(&expr.to_string());
                Ok(input
                    .iter()
                    .filter(|id| {
                        let obj = &self.fact_base.get(id.as_str()).expect("input ids exist");
                        classes.iter().any(|c| tax.matches_class(&obj.kind, c) || tax.matches_class(&obj.label, c))
                    })
                    .cloned()
                    .collect())
            }
            Operation::Pick(expr) => {
                let index = self.prepare_relations(expr, input)?;
                let inputs: HashSet<&str> = input.iter().map(String::as_str).collect();
                let mut out = Vec::new();
                for x in self.fact_base.ids() {
                    if inputs.contains(x.as_str()) {
                        continue;
                    }
                    for o in input {
                        let env = Env { ctx: self, input, scope: Scope::Relation { s: &x, o, index: &index } };
                        if truthy(&env.eval(expr)?)? {
                            out.push(x.clone());
                            break;
                        }
                    }
                }
                Ok(out)
            }
            Operation::Select { relations, condition } => {
                let index = self.prepare_relations(relations, input)?;
                let all = self.fact_base.ids();
                let mut out = Vec::new();
                'subjects: for s in input {
                    for o in &all {
                        if o == s {
                            continue;
                        }
                        let env = Env { ctx: self, input, scope: Scope::Relation { s, o, index: &index } };
                        if !truthy(&env.eval(relations)?)? {
                            continue;
                        }
                        let ok = match condition {
                            Some(c) => {
                                let obj = self.object(o)?;
                                let env = Env { ctx: self, input, scope: Scope::Object { obj, strict: false } };
                                truthy(&env.eval(c)?)?
                            }
                            None => true,
                        };
                        if ok {
                            out.push(s.clone());
                            continue 'subjects;
                        }
                    }
                }
                Ok(out)
            }
            Operation::Sort(spec) => self.sort(spec, input),
            Operation::Slice(range) => Ok(slice(input, *range)),
            Operation::Calc(assignments) => {
                for a in assignments {
                    let env = Env { ctx: self, input, scope: Scope::Calc };
                    let v = match env.eval(&a.value)? {
                        Value::Num(n) => n,
                        other => return Err(format!("`{}` must be a number, got {}", a.target, other.kind())),
                    };
                    self.fact_base.variables.insert(a.target.clone(), v);
                }
                Ok(input.to_vec())
            }
            Operation::Map(assignments) => {
                let mut updated = Vec::with_capacity(input.len());
                for id in input {
                    let mut obj = self.object(id)?.clone();
                    self.assign(&mut obj, assignments, input, false)?;
                    updated.push(obj);
                }
                for obj in updated {
                    self.fact_base.upsert(obj).map_err(|e| e.to_string())?;
                }
                Ok(input.to_vec())
            }
            Operation::Produce { kind, assignments } => self.produce(kind, assignments, input),
            Operation::Backtrace(n) => {
                let steps = n.map(|n| n.unsigned_abs() as usize).unwrap_or(1);
                Ok(self.chain_back(steps).to_vec())
            }
            Operation::Reload => Ok(self.fact_base.ids()),
            Operation::Halt => Ok(input.to_vec()),
            Operation::Log(tokens) => {
                self.log(step, tokens, input)?;
                Ok(input.to_vec())
            }
        }
    }

    fn object(&self, id: &str) -> OpResult<&SpatialObject> {
        self.fact_base.get(id).ok_or_else(|| format!("object `{id}` is not in the fact base"))
    }

    /// Chain entry `steps` before the current input (clamped to the initial list).
    fn chain_back(&self, steps: usize) -> &[String] {
        let last = self.chain.len() - 1;
        &self.chain[last.saturating_sub(steps)]
    }

    fn observer_id(&self, input: &[String]) -> OpResult<String> {
        match resolve_observer(&self.fact_base, self.observer.as_deref()) {
            Ok(o) => Ok(o.id.clone()),
            Err(Error::NoObserver) if input.len() == 1 => Ok(input[0].clone()),
            Err(e) => err(e),
        }
    }

    fn deduce_categories(&mut self, cats: &BTreeSet<Category>, input: &[String]) -> OpResult<()> {
        let observer = if cats.contains(&Category::Visibility) { Some(self.observer_id(input)?) } else { None };
        deduction::deduce(&mut self.fact_base, cats, &self.settings, observer.as_deref()).map_err(|e| e.to_string())
    }

    /// Deduces whatever categories `predicates` need and are still missing.
    fn ensure_predicates(&mut self, predicates: &[String], input: &[String]) -> OpResult<()> {
        let mut missing = BTreeSet::new();
        for p in predicates {
            let c = category_of(p).ok_or_else(|| format!("unknown predicate `{p}`"))?;
            if !self.fact_base.is_deduced(c) {
                missing.insert(c);
            }
        }
        if missing.is_empty() {
            return Ok(());
        }
        self.deduce_categories(&missing, input)
    }

    fn prepare_relations(&mut self, expr: &Expr, input: &[String]) -> OpResult<RelationIndex> {
        self.ensure_predicates(&referenced_predicates(expr), input)?;
        Ok(RelationIndex::build(&self.fact_base))
    }

    fn sort(&mut self, spec: &SortSpec, input: &[String]) -> OpResult<Vec<String>> {
        let descending = spec.order == Some(SortOrder::Descending);
        let relation_key = match spec.key.as_slice() {
            [p, m] if is_predicate(p) && (m == "delta" || m == "angle") => Some((canonical_predicate(p).to_string(), m.clone())),
            _ => None,
        };
        let keys: Vec<Value> = if let Some((pred, metric)) = relation_key {
            self.ensure_predicates(std::slice::from_ref(&pred), input)?;
            let steps = spec.steps.map(|n| n.unsigned_abs() as usize).unwrap_or(1);
            let reference = self.chain_back(steps).to_vec();
            let index = RelationIndex::build(&self.fact_base);
            input
                .iter()
                .map(|x| {
                    reference
                        .iter()
                        .filter(|r| *r != x)
                        .find_map(|r| index.metric(x, r, &pred, &metric))
                        .map(Value::Num)
                        .unwrap_or(Value::Absent)
                })
                .collect()
        } else {
            let key = spec.key.join(".");
            input
                .iter()
                .map(|id| {
                    self.fact_base
                        .get(id)
                        .and_then(|o| o.attribute(&key, &self.settings))
                        .map(Value::from_attr)
                        .unwrap_or(Value::Absent)
                })
                .collect()
        };
        let mut order: Vec<usize> = (0..input.len()).collect();
        order.sort_by(|&a, &b| {
            use std::cmp::Ordering::*;
            match (&keys[a], &keys[b]) {
                (Value::Absent, Value::Absent) => Equal,
                (Value::Absent, _) => Greater,
                (_, Value::Absent) => Less,
                (x, y) => {
                    let o = sort_cmp(x, y);
                    if descending {
                        o.reverse()
                    } else {
                        o
                    }
                }
            }
        });
        Ok(order.into_iter().map(|i| input[i].clone()).collect())
    }

    /// Evaluates assignments one by one against `obj`, writing each result.
    fn assign(&self, obj: &mut SpatialObject, assignments: &[Assignment], input: &[String], allow_id: bool) -> OpResult<()> {
        for a in assignments {
            let value = {
                let env = Env { ctx: self, input, scope: Scope::Object { obj, strict: true } };
                env.eval(&a.value)?.into_attr()?
            };
            obj.set_attribute(&a.target, value, allow_id).map_err(|e| e.to_string())?;
        }
        Ok(())
    }

    fn fresh_id(&self, kind: &str, taken: &HashSet<String>) -> String {
        (1..)
            .map(|n| format!("{kind}{n}"))
            .find(|id| !self.fact_base.contains(id) && !taken.contains(id))
            .expect("unbounded id space")
    }

    fn produce(&mut self, kind: &str, assignments: &[Assignment], input: &[String]) -> OpResult<Vec<String>> {
        let objs: Vec<SpatialObject> = input.iter().map(|id| self.object(id).cloned()).collect::<OpResult<_>>()?;
        let gap = self.settings.max_gap;
        let mut placements: Vec<Placement> = Vec::new();
        let mut copies: Vec<SpatialObject> = Vec::new();
        match kind {
            "copy" => copies = objs.clone(),
            "group" => {
                if !objs.is_empty() {
                    placements.push(enclosing_box(&objs).map_err(|e| e.to_string())?);
                }
            }
            "on" | "in" | "at" | "by" => {
                let symmetric = matches!(kind, "at" | "by");
                for (i, s) in objs.iter().enumerate() {
                    for (j, o) in objs.iter().enumerate() {
                        if i == j || (symmetric && j < i) {
                            continue;
                        }
                        let rel = relations_between(s, o, Category::Connectivity, &self.settings, None)
                            .map_err(|e| e.to_string())?;
                        if !rel.iter().any(|r| r.predicate == kind) {
                            continue;
                        }
                        let p = if kind == "in" {
                            Some(Placement { x: s.x, y: s.y, z: s.z, w: s.w, h: 2.0 * gap, d: s.d, angle: s.angle })
                        } else {
                            contact_region(s, o, &self.settings)
                        };
                        placements.extend(p);
                    }
                }
            }
            code => {
                let label: SectorLabel = code.parse().map_err(|_| format!("unknown produce kind `{code}`"))?;
                for o in &objs {
                    placements.push(sector_region(o, label, &self.settings));
                }
            }
        }
        let mut taken: HashSet<String> = HashSet::new();
        let mut fresh = Vec::new();
        for mut obj in copies {
            obj.id = self.fresh_id(kind, &taken);
            taken.insert(obj.id.clone());
            obj.is_virtual = true;
            obj.observer = false;
            fresh.push(obj);
        }
        for p in placements {
            let mut obj = SpatialObject::new(self.fresh_id(kind, &taken));
            taken.insert(obj.id.clone());
            p.apply(&mut obj);
            obj.is_virtual = true;
            fresh.push(obj);
        }
        let mut final_ids: HashSet<String> = HashSet::new();
        let mut out = Vec::new();
        for mut obj in fresh {
            self.assign(&mut obj, assignments, input, true)?;
            if self.fact_base.contains(&obj.id) || !final_ids.insert(obj.id.clone()) {
                return Err(format!("produced id `{}` already exists", obj.id));
            }
            out.push(obj);
        }
        let ids: Vec<String> = out.iter().map(|o| o.id.clone()).collect();
        for obj in out {
            self.fact_base.upsert(obj).map_err(|e| e.to_string())?;
        }
        self.produced.extend(ids.iter().cloned());
        Ok(ids)
    }

    fn log(&mut self, step: usize, tokens: &[String], input: &[String]) -> OpResult<()> {
        let mut predicates = Vec::new();
        let (mut scene, mut base) = (false, false);
        for t in tokens {
            match t.as_str() {
                "3D" => scene = true,
                "base" => base = true,
                p => predicates.push(canonical_predicate(p).to_string()),
            }
        }
        if tokens.is_empty() {
            let content = io::summary(&self.fact_base, input);
            self.logs.push(LogArtifact { step, kind: LogKind::Summary, content });
        }
        if base {
            let content = io::dump_facts(&self.fact_base, Some(&self.settings)).map_err(|e| e.to_string())?;
            self.logs.push(LogArtifact { step, kind: LogKind::Facts, content });
        }
        if scene {
            let content = io::export_scene(self.fact_base.objects());
            self.logs.push(LogArtifact { step, kind: LogKind::Scene, content });
        }
        if !predicates.is_empty() {
            self.ensure_predicates(&predicates, input)?;
            let subjects: HashSet<&str> = input.iter().map(String::as_str).collect();
            let relations: Vec<_> =
                self.fact_base.relations().iter().filter(|r| subjects.contains(r.subject.as_str())).cloned().collect();
            let content = io::export_mermaid(&self.fact_base, &relations, &predicates);
            self.logs.push(LogArtifact { step, kind: LogKind::Mermaid, content });
        }
        Ok(())
    }
}

fn apply_directive(s: &mut AdjustmentSettings, d: Directive) {
    match d {
        Directive::MaxGap(v) => s.max_gap = v,
        Directive::MaxAngle(v) => s.max_angle = v,
        Directive::Sector(schema, v) => {
            s.sector_schema = schema;
            s.sector_factor = v;
        }
        Directive::Nearby(schema, v) => {
            s.nearby_schema = schema;
            s.nearby_factor = v;
        }
        Directive::LongRatio(v) => s.long_ratio = v,
        Directive::ThinRatio(v) => s.thin_ratio = v,
    }
}

fn slice(input: &[String], range: SliceRange) -> Vec<String> {
    let n = input.len() as i64;
    let (from, to) = match range {
        SliceRange::Index(k) if k > 0 => (k, k),
        SliceRange::Index(k) => (n + k + 1, n + k + 1),
        SliceRange::Range(a, b) => (a, b),
    };
    let from = from.max(1);
    let to = to.min(n);
    if from > to {
        return Vec::new();
    }
    input[(from - 1) as usize..to as usize].to_vec()
}

fn sort_cmp(a: &Value, b: &Value) -> std::cmp::Ordering {
    match (a, b) {
        (Value::Num(x), Value::Num(y)) => x.total_cmp(y),
        (Value::Text(x), Value::Text(y)) => x.cmp(y),
        (Value::Bool(x), Value::Bool(y)) => x.cmp(y),
        _ => rank(a).cmp(&rank(b)),
    }
}

fn rank(v: &Value) -> u8 {
    match v {
        Value::Num(_) => 0,
        Value::Text(_) => 1,
        Value::Bool(_) => 2,
        _ => 3,
    }
}

/// Relations grouped by ordered (subject, object) pair.
pub(crate) struct RelationIndex {
    pairs: HashMap<(String, String), Vec<(String, f64, f64)>>,
}

impl RelationIndex {
    fn build(fb: &FactBase) -> Self {
        let mut pairs: HashMap<(String, String), Vec<(String, f64, f64)>> = HashMap::new();
        for r in fb.relations() {
            pairs.entry((r.subject.clone(), r.object.clone())).or_default().push((r.predicate.clone(), r.delta, r.angle));
        }
        Self { pairs }
    }

    fn find(&self, s: &str, o: &str, predicate: &str) -> Option<&(String, f64, f64)> {
        self.pairs.get(&(s.to_string(), o.to_string()))?.iter().find(|(p, _, _)| p == predicate)
    }

    fn metric(&self, s: &str, o: &str, predicate: &str, metric: &str) -> Option<f64> {
        self.find(s, o, predicate).map(|(_, delta, angle)| if metric == "angle" { *angle } else { *delta })
    }
}

enum Scope<'a> {
    /// Attribute expressions about one object. Strict scopes reject unknown names.
    Object { obj: &'a SpatialObject, strict: bool },
    /// Relation expressions from `s` to `o`.
    Relation { s: &'a str, o: &'a str, index: &'a RelationIndex },
    /// Variable and aggregate expressions over the current list.
    Calc,
}

struct Env<'a> {
    ctx: &'a EvaluationContext,
    input: &'a [String],
    scope: Scope<'a>,
}

pub(crate) fn truthy(v: &Value) -> OpResult<bool> {
    match v {
        Value::Bool(b) => Ok(*b),
        Value::Absent => Ok(false),
        other => Err(format!("expected a boolean, got {} {other}", other.kind())),
    }
}

fn names_only(segs: &[Segment]) -> Option<String> {
    let mut names = Vec::with_capacity(segs.len());
    for s in segs {
        match s {
            Segment::Name(n) => names.push(n.as_str()),
            Segment::Index(_) => return None,
        }
    }
    Some(names.join("."))
}

impl Env<'_> {
    fn eval(&self, e: &Expr) -> OpResult<Value> {
        match e {
            Expr::Num(n) => Ok(Value::Num(*n)),
            Expr::Str(s) => Ok(Value::Text(s.clone())),
            Expr::Bool(b) => Ok(Value::Bool(*b)),
            Expr::Path(segs) => self.resolve(segs),
            Expr::Call(name, args) => {
                let vals = args.iter().map(|a| self.eval(a)).collect::<OpResult<Vec<_>>>()?;
                self.call(name, vals)
            }
            Expr::Unary(UnaryOp::Not, inner) => Ok(Value::Bool(!truthy(&self.eval(inner)?)?)),
            Expr::Unary(UnaryOp::Neg, inner) => match self.eval(inner)? {
                Value::Num(n) => Ok(Value::Num(-n)),
                Value::Absent => Ok(Value::Absent),
                other => Err(format!("cannot negate a {}", other.kind())),
            },
            Expr::Binary(BinOp::And, l, r) => {
                Ok(Value::Bool(truthy(&self.eval(l)?)? && truthy(&self.eval(r)?)?))
            }
            Expr::Binary(BinOp::Or, l, r) => Ok(Value::Bool(truthy(&self.eval(l)?)? || truthy(&self.eval(r)?)?)),
            Expr::Binary(op, l, r) if op.is_comparison() => compare(*op, &self.eval(l)?, &self.eval(r)?),
            Expr::Binary(op, l, r) => arithmetic(*op, self.eval(l)?, self.eval(r)?),
        }
    }

    fn attribute(&self, id: &str, key: &str) -> OpResult<Value> {
        let obj = self.ctx.object(id)?;
        obj.attribute(key, &self.ctx.settings)
            .map(Value::from_attr)
            .ok_or_else(|| format!("object `{id}` has no attribute `{key}`"))
    }

    /// Resolves `objects`, `objects[i]` and attribute access on them.
    fn collection(&self, segs: &[Segment]) -> OpResult<Value> {
        let mut value = Value::Objects(self.input.to_vec());
        let mut rest = &segs[1..];
        while let Some(Segment::Index(k)) = rest.first() {
            value = match value {
                Value::Objects(ids) => match ids.get(*k) {
                    Some(id) => Value::Object(id.clone()),
                    None => return Err(format!("objects[{k}] is out of range ({} objects)", ids.len())),
                },
                other => return Err(format!("cannot index a {}", other.kind())),
            };
            rest = &rest[1..];
        }
        if rest.is_empty() {
            return Ok(value);
        }
        let key = names_only(rest).ok_or("only one index is allowed after `objects`")?;
        match value {
            Value::Object(id) => self.attribute(&id, &key),
            Value::Objects(ids) => Ok(Value::List(ids.iter().map(|id| self.attribute(id, &key)).collect::<OpResult<_>>()?)),
            other => Err(format!("cannot read `{key}` of a {}", other.kind())),
        }
    }

    fn resolve(&self, segs: &[Segment]) -> OpResult<Value> {
        let Some(Segment::Name(first)) = segs.first() else { return Err("empty path".into()) };
        if first == "objects" {
            return self.collection(segs);
        }
        match &self.scope {
            Scope::Relation { s, o, index } => {
                let pred = canonical_predicate(first);
                match segs {
                    [_] => Ok(Value::Bool(index.find(s, o, pred).is_some())),
                    [_, Segment::Name(m)] => {
                        Ok(index.metric(s, o, pred, m).map(Value::Num).unwrap_or(Value::Absent))
                    }
                    _ => Err(format!("unknown predicate `{}`", Expr::Path(segs.to_vec()))),
                }
            }
            Scope::Object { obj, strict } => {
                let key = names_only(segs).ok_or("indexing is only allowed on `objects`")?;
                if let Some(v) = obj.attribute(&key, &self.ctx.settings) {
                    return Ok(Value::from_attr(v));
                }
                if let Some(v) = self.ctx.fact_base.variables.get(&key) {
                    return Ok(Value::Num(*v));
                }
                if is_predicate(first) {
                    return Err(format!("`{first}` is a relation predicate; use pick or select for relations"));
                }
                if *strict {
                    Err(format!("unknown attribute `{key}`"))
                } else {
                    Ok(Value::Absent)
                }
            }
            Scope::Calc => {
                let key = names_only(segs).ok_or("indexing is only allowed on `objects`")?;
                self.ctx.fact_base.variables.get(&key).map(|v| Value::Num(*v)).ok_or(format!("unknown variable `{key}`"))
            }
        }
    }

    fn call(&self, name: &str, args: Vec<Value>) -> OpResult<Value> {
        let [arg] = <[Value; 1]>::try_from(args).map_err(|a| format!("{name}() takes one argument, got {}", a.len()))?;
        if name == "count" {
            return match arg {
                Value::Objects(ids) => Ok(Value::Num(ids.len() as f64)),
                Value::List(items) => Ok(Value::Num(items.len() as f64)),
                other => Err(format!("count() expects a list, got {}", other.kind())),
            };
        }
        let items = match arg {
            Value::List(items) => items,
            other => return Err(format!("{name}() expects a list of numbers, got {}", other.kind())),
        };
        let mut nums = Vec::with_capacity(items.len());
        for v in items {
            match v {
                Value::Num(n) => nums.push(n),
                other => return Err(format!("{name}() expects numbers, got {}", other.kind())),
            }
        }
        if nums.is_empty() && name != "sum" {
            return match name {
                "min" | "max" | "average" | "median" => Err(format!("{name}() of an empty list")),
                _ => Err(format!("unknown function `{name}`")),
            };
        }
        let v = match name {
            "sum" => nums.iter().sum(),
            "min" => nums.iter().copied().fold(f64::INFINITY, f64::min),
            "max" => nums.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            "average" => nums.iter().sum::<f64>() / nums.len() as f64,
            "median" => {
                nums.sort_by(f64::total_cmp);
                let m = nums.len() / 2;
                if nums.len() % 2 == 1 {
                    nums[m]
                } else {
                    (nums[m - 1] + nums[m]) / 2.0
                }
            }
            _ => return Err(format!("unknown function `{name}`")),
        };
        Ok(Value::Num(v))
    }
}

fn compare(op: BinOp, l: &Value, r: &Value) -> OpResult<Value> {
    use std::cmp::Ordering;
    let ord: Option<Ordering> = match (l, r) {
        (Value::Absent, _) | (_, Value::Absent) => return Ok(Value::Bool(false)),
        (Value::Num(a), Value::Num(b)) => a.partial_cmp(b),
        (Value::Text(a), Value::Text(b)) => Some(a.cmp(b)),
        (Value::Bool(a), Value::Bool(b)) => match op {
            BinOp::Eq | BinOp::Ne => Some(a.cmp(b)),
            _ => return Err("booleans cannot be ordered".into()),
        },
        _ => match op {
            BinOp::Eq => return Ok(Value::Bool(false)),
            BinOp::Ne => return Ok(Value::Bool(true)),
            _ => return Err(format!("cannot compare {} with {}", l.kind(), r.kind())),
        },
    };
    let Some(ord) = ord else { return Ok(Value::Bool(op == BinOp::Ne)) };
    Ok(Value::Bool(match op {
        BinOp::Eq => ord == Ordering::Equal,
        BinOp::Ne => ord != Ordering::Equal,
        BinOp::Lt => ord == Ordering::Less,
        BinOp::Gt => ord == Ordering::Greater,
        BinOp::Le => ord != Ordering::Greater,
        BinOp::Ge => ord != Ordering::Less,
        _ => unreachable!("not a comparison"),
    }))
}

fn arithmetic(op: BinOp, l: Value, r: Value) -> OpResult<Value> {
    match (l, r) {
        (Value::Absent, _) | (_, Value::Absent) => Ok(Value::Absent),
        (Value::Num(a), Value::Num(b)) => Ok(Value::Num(match op {
            BinOp::Add => a + b,
            BinOp::Sub => a - b,
            BinOp::Mul => a * b,
            BinOp::Div if b == 0.0 => return Err("division by zero".into()),
            BinOp::Div => a / b,
            _ => unreachable!("not arithmetic"),
        })),
        (Value::Text(a), Value::Text(b)) if op == BinOp::Add => Ok(Value::Text(a + &b)),
        (l, r) => Err(format!("cannot apply `{}` to {} and {}", op.symbol(), l.kind(), r.kind())),
    }
}

/// Parses nothing; runs `program` against a copy of `fb`.
pub fn evaluate(program: &PipelineProgram, fb: FactBase, settings: AdjustmentSettings) -> Result<EvaluationContext> {
    let mut ctx = EvaluationContext::new(fb, settings);
    ctx.run(program)?;
    Ok(ctx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::parse_pipeline;

    fn scene() -> FactBase {
        FactBase::from_objects([
            SpatialObject::new("a").sized(1.0, 1.0, 1.0).typed("box"),
            SpatialObject::new("b").at(3.0, 0.0, 0.0).sized(2.0, 1.0, 1.0).typed("crate"),
            SpatialObject::new("c").at(0.0, 0.0, 5.0).sized(0.5, 0.5, 0.5).typed("box"),
        ])
        .unwrap()
    }

    fn run(src: &str) -> EvaluationContext {
        evaluate(&parse_pipeline(src).unwrap(), scene(), AdjustmentSettings::default()).unwrap()
    }

    #[test]
    fn log_keeps_all_objects() {
        let ctx = run("log()");
        assert_eq!(ctx.current().len(), 3);
        assert_eq!(ctx.logs.len(), 1);
        assert_eq!(ctx.chain.len(), 2);
    }

    #[test]
    fn halt_stops_execution() {
        let ctx = run("halt() | filter(id == 'a')");
        assert_eq!(ctx.current().len(), 3);
        assert_eq!(ctx.chain.len(), 2);
    }

    #[test]
    fn slicing() {
        let ids: Vec<String> = ["a", "b", "c"].map(String::from).to_vec();
        assert_eq!(slice(&ids, SliceRange::Index(1)), vec!["a"]);
        assert_eq!(slice(&ids, SliceRange::Index(2)), vec!["b"]);
        assert_eq!(slice(&ids, SliceRange::Index(-1)), vec!["c"]);
        assert_eq!(slice(&ids, SliceRange::Range(2, 3)), vec!["b", "c"]);
        assert!(slice(&ids[..1], SliceRange::Range(2, 3)).is_empty());
        assert!(slice(&ids, SliceRange::Index(7)).is_empty());
        assert!(slice(&ids, SliceRange::Index(-7)).is_empty());
    }

    #[test]
    fn calc_aggregates() {
        let ctx = run("calc(cnt = count(objects); vol = objects[0].volume; maxvol = max(objects.volume); med = median(objects.volume))");
        let v = ctx.variables();
        assert_eq!(v["cnt"], 3.0);
        assert_eq!(v["vol"], 1.0);
        assert_eq!(v["maxvol"], 2.0);
        assert_eq!(v["med"], 1.0);
        let e = evaluate(&parse_pipeline("filter(volume > 9) | calc(m = min(objects.volume))").unwrap(), scene(), AdjustmentSettings::default());
        assert!(matches!(e, Err(Error::Runtime { step: 2, .. })));
        let ctx = run("filter(volume > 9) | calc(n = count(objects))");
        assert_eq!(ctx.variables()["n"], 0.0);
    }

    #[test]
    fn map_writes_attributes() {
        let ctx = run("map(weight = volume * 140.0; shape = 'cubical')");
        let a = ctx.fact_base.get("a").unwrap();
        assert_eq!(a.attributes["weight"], AttrValue::Number(140.0));
        assert_eq!(a.shape(), Some("cubical"));
        let e = evaluate(&parse_pipeline("map(id = 'x')").unwrap(), scene(), AdjustmentSettings::default());
        assert!(e.is_err());
        let e = evaluate(&parse_pipeline("map(w = nothing * 2)").unwrap(), scene(), AdjustmentSettings::default());
        assert!(e.is_err());
    }

    #[test]
    fn filter_rejects_predicates_and_tolerates_unknown_attributes() {
        let e = evaluate(&parse_pipeline("filter(near)").unwrap(), scene(), AdjustmentSettings::default());
        assert!(matches!(e, Err(Error::Runtime { message, .. }) if message.contains("pick")));
        assert!(run("filter(colour == 'red')").current().is_empty());
        assert_eq!(run("filter(NOT colour == 'red')").current().len(), 3);
    }

    #[test]
    fn sort_and_backtrace() {
        let ctx = run("sort(volume >) | backtrace(-1)");
        assert_eq!(ctx.chain[1], vec!["b", "a", "c"]);
        assert_eq!(ctx.current(), &["a", "b", "c"]);
        let ctx = run("filter(id == 'a') | pick(disjoint) | sort(disjoint.delta <)");
        assert_eq!(ctx.current(), &["b", "c"]);
        let ctx = run("filter(id == 'a') | pick(disjoint) | sort(disjoint.delta >)");
        assert_eq!(ctx.current(), &["c", "b"]);
    }

    #[test]
    fn produce_fresh_ids_and_reload() {
        let ctx = run("filter(type == 'box') | produce(copy : label = 'copy'; y = 2.0) | reload()");
        assert_eq!(ctx.chain[2], vec!["copy1", "copy2"]);
        assert_eq!(ctx.current().len(), 5);
        assert_eq!(ctx.fact_base.get("copy1").unwrap().y, 2.0);
        let e = evaluate(&parse_pipeline("produce(copy : id = 'copy')").unwrap(), scene(), AdjustmentSettings::default());
        assert!(e.is_err());
        let ctx = run("filter(id == 'nothing') | produce(copy)");
        assert!(ctx.current().is_empty());
        let ctx = run("produce(group : label = 'all')");
        let g = ctx.fact_base.get("group1").unwrap();
        assert_eq!((g.w, g.d), (4.5, 5.75));
    }

    #[test]
    fn isa_requires_taxonomy() {
        let p = parse_pipeline("isa(Container)").unwrap();
        assert!(evaluate(&p, scene(), AdjustmentSettings::default()).is_err());
        let tax = Taxonomy::load("Container\nbox subClassOf Container").unwrap();
        let mut ctx = EvaluationContext::new(scene(), AdjustmentSettings::default()).with_taxonomy(tax);
        ctx.run(&p).unwrap();
        assert_eq!(ctx.current(), &["a", "c"]);
    }

    #[test]
    fn adjust_invalidates_relations() {
        let ctx = run("deduce(proximity) | adjust(max gap 0.05)");
        assert!(ctx.fact_base.relations().is_empty());
        assert_eq!(ctx.settings.max_gap, 0.05);
        let ctx = run("deduce(proximity) | adjust(max gap 0.02)");
        assert!(!ctx.fact_base.relations().is_empty());
    }
}
