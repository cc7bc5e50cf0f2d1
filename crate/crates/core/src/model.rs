//! The model document: a small declarative text format naming atoms,
//! measures, families, localizations, functions, binomial parameters, test
//! problems and set expressions. See `docs/model-grammar.md` for the grammar.
//!
//! [`parse_model`] validates every cross-reference and reports positioned
//! diagnostics; [`ModelDocument::emit`] writes the canonical form, and
//! parsing that form gives back an equal document.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};

use num_traits::{One, Signed, Zero};

use crate::binomial::{build_alternative, BinMeasure, BinomialError, DisjointAlternative, ModelParams};
use crate::families::{BoundedFunction, Localization, MeasureFamily};
use crate::measures::{Atom, AtomSet, ProbabilityMeasure, SignedMeasure};
use crate::rational::{format_rational, parse_rational, Rational};
use crate::realsets::{parse_set_expr, DecreasingMap, SetExpr};
use crate::testing::TestProblem;

pub const FORMAT_VERSION: u32 = 1;

/// A diagnostic at a 1-based line and column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.col, self.message)
    }
}

/// An atom reference: a declared name or an inline point `@p/q`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AtomRef {
    Named(String),
    Point(Rational),
}

impl fmt::Display for AtomRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AtomRef::Named(n) => f.write_str(n),
            AtomRef::Point(q) => write!(f, "@{}", format_rational(q)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasureKind {
    Probability,
    Signed,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MeasureDecl {
    pub kind: MeasureKind,
    pub weights: BTreeMap<AtomRef, Rational>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FamilyDecl {
    pub members: Vec<String>,
    pub extra: BTreeSet<AtomRef>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalizationDecl {
    pub family: String,
    /// (measure name, support) in declaration order.
    pub entries: Vec<(String, BTreeSet<AtomRef>)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionDecl {
    pub values: BTreeMap<AtomRef, Rational>,
    pub default: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PiecesDecl {
    pub localization: String,
    /// localization member name → function name
    pub assignments: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinomialDecl {
    pub params: ModelParams,
    pub pi_tilde: Option<Rational>,
    pub knots: Option<Vec<(Rational, Rational)>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestDecl {
    pub h0: String,
    pub h1: String,
    pub epsilon: Option<Rational>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReferenceDecl {
    pub measure: String,
    pub localization: String,
}

/// A validated document. Only [`parse_model`] constructs one, so every
/// reference inside it resolves.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelDocument {
    atoms: BTreeMap<String, Option<Rational>>,
    measures: BTreeMap<String, MeasureDecl>,
    families: BTreeMap<String, FamilyDecl>,
    localizations: BTreeMap<String, LocalizationDecl>,
    functions: BTreeMap<String, FunctionDecl>,
    pieces: BTreeMap<String, PiecesDecl>,
    binomial: Option<BinomialDecl>,
    members: BTreeMap<String, BinMeasure>,
    tests: BTreeMap<String, TestDecl>,
    references: BTreeMap<String, ReferenceDecl>,
    sets: BTreeMap<String, SetExpr>,
}

impl ModelDocument {
    pub fn atoms(&self) -> &BTreeMap<String, Option<Rational>> {
        &self.atoms
    }

    pub fn measures(&self) -> &BTreeMap<String, MeasureDecl> {
        &self.measures
    }

    pub fn families(&self) -> &BTreeMap<String, FamilyDecl> {
        &self.families
    }

    pub fn localizations(&self) -> &BTreeMap<String, LocalizationDecl> {
        &self.localizations
    }

    pub fn functions(&self) -> &BTreeMap<String, FunctionDecl> {
        &self.functions
    }

    pub fn pieces(&self) -> &BTreeMap<String, PiecesDecl> {
        &self.pieces
    }

    pub fn binomial(&self) -> Option<&BinomialDecl> {
        self.binomial.as_ref()
    }

    pub fn members(&self) -> &BTreeMap<String, BinMeasure> {
        &self.members
    }

    pub fn tests(&self) -> &BTreeMap<String, TestDecl> {
        &self.tests
    }

    pub fn references(&self) -> &BTreeMap<String, ReferenceDecl> {
        &self.references
    }

    pub fn sets(&self) -> &BTreeMap<String, SetExpr> {
        &self.sets
    }

    /// Named atoms declared with a value alias the point atom at that value.
    pub fn atom(&self, r: &AtomRef) -> Atom {
        match r {
            AtomRef::Point(q) => Atom::point(q.clone()),
            AtomRef::Named(n) => match self.atoms.get(n) {
                Some(Some(v)) => Atom::point(v.clone()),
                _ => Atom::named(n.clone()),
            },
        }
    }

    fn atom_set(&self, refs: &BTreeSet<AtomRef>) -> AtomSet {
        refs.iter().map(|r| self.atom(r)).collect()
    }

    pub fn signed_measure(&self, name: &str) -> Option<SignedMeasure> {
        let decl = self.measures.get(name)?;
        Some(SignedMeasure::from_weights(decl.weights.iter().map(|(a, w)| (self.atom(a), w.clone()))))
    }

    pub fn probability(&self, name: &str) -> Option<ProbabilityMeasure> {
        let decl = self.measures.get(name)?;
        if decl.kind != MeasureKind::Probability {
            return None;
        }
        Some(ProbabilityMeasure::new(self.signed_measure(name)?).expect("validated probability measure"))
    }

    pub fn family(&self, name: &str) -> Option<MeasureFamily> {
        let decl = self.families.get(name)?;
        let members = decl.members.iter().map(|m| self.probability(m).expect("validated member")).collect();
        Some(MeasureFamily::with_extra_atoms(members, self.atom_set(&decl.extra)).expect("validated family"))
    }

    pub fn localization(&self, name: &str) -> Option<(MeasureFamily, Localization)> {
        let decl = self.localizations.get(name)?;
        let family = self.family(&decl.family)?;
        let loc = Localization::with_labels(
            decl.entries.iter().map(|(m, _)| self.probability(m).expect("validated member")).collect(),
            decl.entries.iter().map(|(_, s)| self.atom_set(s)).collect(),
            decl.entries.iter().map(|(m, _)| m.clone()).collect(),
        )
        .expect("validated localization");
        Some((family, loc))
    }

    pub fn function(&self, name: &str) -> Option<BoundedFunction> {
        let decl = self.functions.get(name)?;
        Some(BoundedFunction::new(decl.values.iter().map(|(a, v)| (self.atom(a), v.clone())), decl.default.clone()))
    }

    /// Pieces ordered like the localization members; unassigned members get 0.
    pub fn pieces_for(&self, name: &str) -> Option<(MeasureFamily, Localization, Vec<BoundedFunction>)> {
        let decl = self.pieces.get(name)?;
        let (family, loc) = self.localization(&decl.localization)?;
        let pieces =
            loc.labels().iter().map(|l| decl.assignments.get(l).and_then(|f| self.function(f)).unwrap_or_default()).collect();
        Some((family, loc, pieces))
    }

    pub fn alternative(&self) -> Option<Result<DisjointAlternative, BinomialError>> {
        let b = self.binomial.as_ref()?;
        let f = match &b.knots {
            Some(k) => match DecreasingMap::new(k.clone()) {
                Ok(f) => Some(f),
                Err(e) => return Some(Err(e.into())),
            },
            None => None,
        };
        Some(build_alternative(&b.params, f, b.pi_tilde.clone()))
    }

    pub fn test_problem(&self, name: &str) -> Option<TestProblem> {
        let decl = self.tests.get(name)?;
        Some(TestProblem { h0: self.family(&decl.h0)?, h1: self.family(&decl.h1)?, epsilon: decl.epsilon.clone() })
    }

    /// Canonical text: sections in a fixed order, names sorted.
    pub fn emit(&self) -> String {
        let r = format_rational;
        let mut out = format!("version {FORMAT_VERSION}\n");
        if !self.atoms.is_empty() {
            let items: Vec<String> = self
                .atoms
                .iter()
                .map(|(n, v)| match v {
                    Some(v) => format!("{n} = {}", r(v)),
                    None => n.clone(),
                })
                .collect();
            let _ = writeln!(out, "\natoms {{ {} }}", items.join(", "));
        }
        let entries =
            |m: &BTreeMap<AtomRef, Rational>| m.iter().map(|(a, w)| format!("{a}: {}", r(w))).collect::<Vec<_>>().join(", ");
        let braces = |s: String| if s.is_empty() { "{ }".to_string() } else { format!("{{ {s} }}") };
        if !self.measures.is_empty() {
            out.push('\n');
        }
        for (name, m) in &self.measures {
            let kw = match m.kind {
                MeasureKind::Probability => "measure",
                MeasureKind::Signed => "signed",
            };
            let _ = writeln!(out, "{kw} {name} {}", braces(entries(&m.weights)));
        }
        if !self.families.is_empty() {
            out.push('\n');
        }
        for (name, f) in &self.families {
            let _ = write!(out, "family {name} {{ {} }}", f.members.join(", "));
            if !f.extra.is_empty() {
                let extra: Vec<String> = f.extra.iter().map(ToString::to_string).collect();
                let _ = write!(out, " extra {{ {} }}", extra.join(", "));
            }
            out.push('\n');
        }
        if !self.localizations.is_empty() {
            out.push('\n');
        }
        for (name, l) in &self.localizations {
            let items: Vec<String> = l
                .entries
                .iter()
                .map(|(m, s)| format!("{m} on {{ {} }}", s.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")))
                .collect();
            let _ = writeln!(out, "localization {name} for {} {{ {} }}", l.family, items.join(", "));
        }
        if !self.functions.is_empty() {
            out.push('\n');
        }
        for (name, f) in &self.functions {
            let _ = writeln!(out, "function {name} {} default {}", braces(entries(&f.values)), r(&f.default));
        }
        if !self.pieces.is_empty() {
            out.push('\n');
        }
        for (name, p) in &self.pieces {
            let items: Vec<String> = p.assignments.iter().map(|(q, f)| format!("{q}: {f}")).collect();
            let _ = writeln!(out, "pieces {name} for {} {}", p.localization, braces(items.join(", ")));
        }
        if let Some(b) = &self.binomial {
            let p = &b.params;
            let _ = write!(
                out,
                "\nbinomial {{ u0 = {}, U0 = {}, d0 = {}, D0 = {}, pi0 = {}, Pi0 = {}",
                r(&p.u0),
                r(&p.big_u0),
                r(&p.d0),
                r(&p.big_d0),
                r(&p.pi0),
                r(&p.big_pi0)
            );
            if let Some(t) = &b.pi_tilde {
                let _ = write!(out, ", pi_tilde = {}", r(t));
            }
            if let Some(k) = &b.knots {
                let knots: Vec<String> = k.iter().map(|(x, y)| format!("({}, {})", r(x), r(y))).collect();
                let _ = write!(out, ", f = [{}]", knots.join(", "));
            }
            out.push_str(" }\n");
        }
        if !self.members.is_empty() {
            out.push('\n');
        }
        for (name, m) in &self.members {
            let _ = writeln!(out, "member {name} {{ u = {}, d = {}, pi = {} }}", r(&m.u), r(&m.d), r(&m.pi));
        }
        if !self.tests.is_empty() {
            out.push('\n');
        }
        for (name, t) in &self.tests {
            let _ = write!(out, "test {name} {{ h0 = {}, h1 = {}", t.h0, t.h1);
            if let Some(e) = &t.epsilon {
                let _ = write!(out, ", epsilon = {}", r(e));
            }
            out.push_str(" }\n");
        }
        if !self.references.is_empty() {
            out.push('\n');
        }
        for (name, rf) in &self.references {
            let _ = writeln!(out, "reference {name} = {} for {}", rf.measure, rf.localization);
        }
        if !self.sets.is_empty() {
            out.push('\n');
        }
        for (name, s) in &self.sets {
            let _ = writeln!(out, "set {name} = {s};");
        }
        out
    }
}

pub fn parse_model(text: &str) -> Result<ModelDocument, Vec<Diagnostic>> {
    let lines = LineIndex::new(text);
    let items = Parser { src: text, pos: 0 }.document().map_err(|e| vec![lines.diagnostic(e.pos, e.message)])?;
    let mut v = Validator { lines: &lines, diags: Vec::new(), doc: empty_document() };
    v.run(items);
    if v.diags.is_empty() {
        Ok(v.doc)
    } else {
        Err(v.diags)
    }
}

fn empty_document() -> ModelDocument {
    ModelDocument {
        atoms: BTreeMap::new(),
        measures: BTreeMap::new(),
        families: BTreeMap::new(),
        localizations: BTreeMap::new(),
        functions: BTreeMap::new(),
        pieces: BTreeMap::new(),
        binomial: None,
        members: BTreeMap::new(),
        tests: BTreeMap::new(),
        references: BTreeMap::new(),
        sets: BTreeMap::new(),
    }
}

struct LineIndex {
    starts: Vec<usize>,
}

impl LineIndex {
    fn new(text: &str) -> Self {
        let mut starts = vec![0];
        starts.extend(text.match_indices('\n').map(|(i, _)| i + 1));
        LineIndex { starts }
    }

    fn diagnostic(&self, pos: usize, message: impl Into<String>) -> Diagnostic {
        let line = self.starts.partition_point(|&s| s <= pos);
        Diagnostic { line, col: pos - self.starts[line - 1] + 1, message: message.into() }
    }
}

#[derive(Debug, Clone)]
struct Spanned<T> {
    value: T,
    pos: usize,
}

#[derive(Debug, Clone)]
enum Field {
    Number(Rational),
    Name(String),
    Knots(Vec<(Rational, Rational)>),
}

#[derive(Debug)]
enum Item {
    Version(Spanned<Rational>),
    Atoms(Vec<(Spanned<String>, Option<Rational>)>),
    Measure { kind: MeasureKind, name: Spanned<String>, entries: Vec<(Spanned<AtomRef>, Rational)> },
    Family { name: Spanned<String>, members: Vec<Spanned<String>>, extra: Vec<Spanned<AtomRef>> },
    Localization { name: Spanned<String>, family: Spanned<String>, entries: Vec<(Spanned<String>, Vec<Spanned<AtomRef>>)> },
    Function { name: Spanned<String>, entries: Vec<(Spanned<AtomRef>, Rational)>, default: Rational },
    Pieces { name: Spanned<String>, loc: Spanned<String>, entries: Vec<(Spanned<String>, Spanned<String>)> },
    Binomial { pos: usize, fields: Vec<(Spanned<String>, Field)> },
    Member { name: Spanned<String>, fields: Vec<(Spanned<String>, Field)> },
    Test { name: Spanned<String>, fields: Vec<(Spanned<String>, Field)> },
    Reference { name: Spanned<String>, measure: Spanned<String>, loc: Spanned<String> },
    Set { name: Spanned<String>, text: Spanned<String> },
}

struct SyntaxError {
    pos: usize,
    message: String,
}

type PResult<T> = Result<T, SyntaxError>;

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl Parser<'_> {
    fn err<T>(&self, message: impl Into<String>) -> PResult<T> {
        Err(SyntaxError { pos: self.pos, message: message.into() })
    }

    fn skip_trivia(&mut self) {
        loop {
            let rest = &self.src[self.pos..];
            let trimmed = rest.trim_start();
            self.pos += rest.len() - trimmed.len();
            if trimmed.starts_with('#') {
                self.pos += trimmed.find('\n').unwrap_or(trimmed.len());
            } else {
                return;
            }
        }
    }

    fn at_end(&mut self) -> bool {
        self.skip_trivia();
        self.pos == self.src.len()
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_trivia();
        self.src[self.pos..].chars().next()
    }

    fn eat(&mut self, punct: &str) -> bool {
        self.skip_trivia();
        if self.src[self.pos..].starts_with(punct) {
            self.pos += punct.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, punct: &str) -> PResult<()> {
        if self.eat(punct) {
            Ok(())
        } else {
            self.err(format!("expected `{punct}`"))
        }
    }

    fn ident(&mut self) -> PResult<Spanned<String>> {
        self.skip_trivia();
        let rest = &self.src[self.pos..];
        let len = rest
            .char_indices()
            .take_while(|&(i, c)| c == '_' || c.is_ascii_alphabetic() || (i > 0 && c.is_ascii_digit()))
            .count();
        if len == 0 {
            return self.err("expected a name");
        }
        let s = Spanned { value: rest[..len].to_string(), pos: self.pos };
        self.pos += len;
        Ok(s)
    }

    fn keyword(&mut self, kw: &str) -> bool {
        let save = self.pos;
        match self.ident() {
            Ok(s) if s.value == kw => true,
            _ => {
                self.pos = save;
                false
            }
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> PResult<()> {
        if self.keyword(kw) {
            Ok(())
        } else {
            self.err(format!("expected `{kw}`"))
        }
    }

    fn rational(&mut self) -> PResult<Spanned<Rational>> {
        self.skip_trivia();
        let start = self.pos;
        let rest = &self.src[start..];
        let mut len = 0;
        let mut seen_slash = false;
        for (i, c) in rest.char_indices() {
            let sign_ok = c == '-' || c == '+';
            let at_sign_slot = i == 0 || (seen_slash && rest[..i].ends_with('/'));
            if c.is_ascii_digit() || (sign_ok && at_sign_slot) {
                len = i + 1;
            } else if c == '/' && !seen_slash && len > 0 {
                seen_slash = true;
                len = i + 1;
            } else {
                break;
            }
        }
        if rest[len..].starts_with('.') {
            return Err(SyntaxError { pos: start, message: "decimal literals are not accepted; write p/q".into() });
        }
        match parse_rational(&rest[..len]) {
            Ok(v) => {
                self.pos += len;
                Ok(Spanned { value: v, pos: start })
            }
            Err(e) => Err(SyntaxError { pos: start, message: e.to_string() }),
        }
    }

    fn atom_ref(&mut self) -> PResult<Spanned<AtomRef>> {
        self.skip_trivia();
        let pos = self.pos;
        if self.eat("@") {
            let q = self.rational()?;
            return Ok(Spanned { value: AtomRef::Point(q.value), pos });
        }
        let id = self.ident()?;
        Ok(Spanned { value: AtomRef::Named(id.value), pos })
    }

    /// `{ a, b, ... }` with a possibly empty list.
    fn braced_list<T>(&mut self, mut each: impl FnMut(&mut Self) -> PResult<T>) -> PResult<Vec<T>> {
        self.expect("{")?;
        let mut out = Vec::new();
        if self.eat("}") {
            return Ok(out);
        }
        loop {
            out.push(each(self)?);
            if self.eat("}") {
                return Ok(out);
            }
            self.expect(",")?;
        }
    }

    fn weight_entries(&mut self) -> PResult<Vec<(Spanned<AtomRef>, Rational)>> {
        self.braced_list(|p| {
            let a = p.atom_ref()?;
            p.expect(":")?;
            Ok((a, p.rational()?.value))
        })
    }

    fn fields(&mut self) -> PResult<Vec<(Spanned<String>, Field)>> {
        self.braced_list(|p| {
            let key = p.ident()?;
            p.expect("=")?;
            let value = match p.peek() {
                Some('[') => {
                    p.pos += 1;
                    let mut knots = Vec::new();
                    loop {
                        p.expect("(")?;
                        let x = p.rational()?.value;
                        p.expect(",")?;
                        let y = p.rational()?.value;
                        p.expect(")")?;
                        knots.push((x, y));
                        if p.eat("]") {
                            break;
                        }
                        p.expect(",")?;
                    }
                    Field::Knots(knots)
                }
                Some(c) if c.is_ascii_alphabetic() || c == '_' => Field::Name(p.ident()?.value),
                _ => Field::Number(p.rational()?.value),
            };
            Ok((key, value))
        })
    }

    fn document(mut self) -> PResult<Vec<Item>> {
        let mut items = Vec::new();
        self.skip_trivia();
        let vpos = self.pos;
        if !self.keyword("version") {
            return self.err("a document starts with `version 1`");
        }
        let v = self.rational()?;
        items.push(Item::Version(Spanned { value: v.value, pos: vpos }));
        while !self.at_end() {
            items.push(self.item()?);
        }
        Ok(items)
    }

    fn item(&mut self) -> PResult<Item> {
        let save = self.pos;
        let kw = self.ident()?;
        Ok(match kw.value.as_str() {
            "atoms" => Item::Atoms(self.braced_list(|p| {
                let name = p.ident()?;
                let value = if p.eat("=") { Some(p.rational()?.value) } else { None };
                Ok((name, value))
            })?),
            "measure" | "signed" => {
                let kind = if kw.value == "measure" { MeasureKind::Probability } else { MeasureKind::Signed };
                let name = self.ident()?;
                Item::Measure { kind, name, entries: self.weight_entries()? }
            }
            "family" => {
                let name = self.ident()?;
                let members = self.braced_list(Self::ident)?;
                let extra = if self.keyword("extra") { self.braced_list(Self::atom_ref)? } else { Vec::new() };
                Item::Family { name, members, extra }
            }
            "localization" => {
                let name = self.ident()?;
                self.expect_keyword("for")?;
                let family = self.ident()?;
                let entries = self.braced_list(|p| {
                    let m = p.ident()?;
                    p.expect_keyword("on")?;
                    Ok((m, p.braced_list(Self::atom_ref)?))
                })?;
                Item::Localization { name, family, entries }
            }
            "function" => {
                let name = self.ident()?;
                let entries = self.weight_entries()?;
                let default = if self.keyword("default") { self.rational()?.value } else { Rational::zero() };
                Item::Function { name, entries, default }
            }
            "pieces" => {
                let name = self.ident()?;
                self.expect_keyword("for")?;
                let loc = self.ident()?;
                let entries = self.braced_list(|p| {
                    let q = p.ident()?;
                    p.expect(":")?;
                    Ok((q, p.ident()?))
                })?;
                Item::Pieces { name, loc, entries }
            }
            "binomial" => Item::Binomial { pos: kw.pos, fields: self.fields()? },
            "member" => {
                let name = self.ident()?;
                Item::Member { name, fields: self.fields()? }
            }
            "test" => {
                let name = self.ident()?;
                Item::Test { name, fields: self.fields()? }
            }
            "reference" => {
                let name = self.ident()?;
                self.expect("=")?;
                let measure = self.ident()?;
                self.expect_keyword("for")?;
                let loc = self.ident()?;
                Item::Reference { name, measure, loc }
            }
            "set" => {
                let name = self.ident()?;
                self.expect("=")?;
                self.skip_trivia();
                let start = self.pos;
                let Some(len) = self.src[start..].find(';') else {
                    return self.err("set expression must end with `;`");
                };
                self.pos = start + len + 1;
                Item::Set { name, text: Spanned { value: self.src[start..start + len].to_string(), pos: start } }
            }
            other => {
                self.pos = save;
                return self.err(format!("unknown section `{other}`"));
            }
        })
    }
}

struct Validator<'a> {
    lines: &'a LineIndex,
    diags: Vec<Diagnostic>,
    doc: ModelDocument,
}

impl Validator<'_> {
    fn error(&mut self, pos: usize, message: impl Into<String>) {
        self.diags.push(self.lines.diagnostic(pos, message));
    }

    fn claim(&mut self, used: &mut BTreeSet<String>, name: &Spanned<String>, what: &str) -> bool {
        if used.insert(name.value.clone()) {
            true
        } else {
            self.error(name.pos, format!("duplicate {what} `{}`", name.value));
            false
        }
    }

    fn check_atom(&mut self, a: &Spanned<AtomRef>) {
        if let AtomRef::Named(n) = &a.value {
            if !self.doc.atoms.contains_key(n) {
                self.error(a.pos, format!("undefined atom `{n}`"));
            }
        }
    }

    fn weights(&mut self, entries: &[(Spanned<AtomRef>, Rational)]) -> BTreeMap<AtomRef, Rational> {
        let mut out = BTreeMap::new();
        for (a, w) in entries {
            self.check_atom(a);
            if out.insert(a.value.clone(), w.clone()).is_some() {
                self.error(a.pos, format!("atom `{}` listed twice", a.value));
            }
        }
        out
    }

    fn run(&mut self, items: Vec<Item>) {
        // Atoms first so that later sections may refer to them in any order.
        for item in &items {
            match item {
                Item::Version(v) if v.value != Rational::from_integer(FORMAT_VERSION.into()) => {
                    self.error(v.pos, format!("unsupported version {}, expected {FORMAT_VERSION}", format_rational(&v.value)));
                }
                Item::Atoms(list) => {
                    for (name, value) in list {
                        if self.doc.atoms.insert(name.value.clone(), value.clone()).is_some() {
                            self.error(name.pos, format!("duplicate atom `{}`", name.value));
                        }
                    }
                }
                _ => {}
            }
        }
        let mut names = BTreeSet::new();
        let mut measure_pos = BTreeMap::new();
        for item in &items {
            if let Item::Measure { kind, name, entries } = item {
                let weights = self.weights(entries);
                if !self.claim(&mut names, name, "name") {
                    continue;
                }
                if *kind == MeasureKind::Probability {
                    if let Some((a, w)) = weights.iter().find(|(_, w)| w.is_negative()) {
                        self.error(
                            name.pos,
                            format!("measure `{}` has negative weight {} at `{a}`", name.value, format_rational(w)),
                        );
                    }
                    let total: Rational = weights.values().sum();
                    if !total.is_one() {
                        self.error(
                            name.pos,
                            format!("measure `{}` is not normalized: weights sum to {}", name.value, format_rational(&total)),
                        );
                    }
                }
                let weights = weights.into_iter().filter(|(_, w)| !w.is_zero()).collect();
                measure_pos.insert(name.value.clone(), name.pos);
                self.doc.measures.insert(name.value.clone(), MeasureDecl { kind: *kind, weights });
            }
        }
        for item in &items {
            if let Item::Family { name, members, extra } = item {
                for m in members {
                    self.expect_probability(m);
                }
                for a in extra {
                    self.check_atom(a);
                }
                if members.is_empty() {
                    self.error(name.pos, format!("family `{}` is empty", name.value));
                }
                if self.claim(&mut names, name, "name") {
                    let decl = FamilyDecl {
                        members: members.iter().map(|m| m.value.clone()).collect(),
                        extra: extra.iter().map(|a| a.value.clone()).collect(),
                    };
                    self.doc.families.insert(name.value.clone(), decl);
                }
            }
        }
        for item in &items {
            if let Item::Function { name, entries, default } = item {
                let values = self.weights(entries);
                if self.claim(&mut names, name, "name") {
                    let values = values.into_iter().filter(|(_, v)| v != default).collect();
                    self.doc.functions.insert(name.value.clone(), FunctionDecl { values, default: default.clone() });
                }
            }
        }
        for item in &items {
            if let Item::Localization { name, family, entries } = item {
                if !self.doc.families.contains_key(&family.value) {
                    self.error(family.pos, format!("undefined family `{}`", family.value));
                }
                let mut seen = BTreeSet::new();
                let mut ok = true;
                for (m, support) in entries {
                    ok &= self.expect_probability(m);
                    ok &= self.claim(&mut seen, m, "localization member");
                    for a in support {
                        self.check_atom(a);
                    }
                }
                if !self.claim(&mut names, name, "name") {
                    continue;
                }
                let decl = LocalizationDecl {
                    family: family.value.clone(),
                    entries: entries
                        .iter()
                        .map(|(m, s)| (m.value.clone(), s.iter().map(|a| a.value.clone()).collect()))
                        .collect(),
                };
                if ok && self.diags.is_empty() {
                    for (m, support) in &decl.entries {
                        let q = self.doc.probability(m).expect("checked");
                        let mass = q.mass(&self.doc.atom_set(support));
                        if !mass.is_one() {
                            self.error(name.pos, format!("`{m}` gives its support mass {}, not 1", format_rational(&mass)));
                        }
                    }
                }
                self.doc.localizations.insert(name.value.clone(), decl);
            }
        }
        for item in &items {
            if let Item::Pieces { name, loc, entries } = item {
                let members: Option<BTreeSet<String>> =
                    self.doc.localizations.get(&loc.value).map(|l| l.entries.iter().map(|(m, _)| m.clone()).collect());
                if members.is_none() {
                    self.error(loc.pos, format!("undefined localization `{}`", loc.value));
                }
                let mut assignments = BTreeMap::new();
                for (q, f) in entries {
                    if members.as_ref().is_some_and(|ms| !ms.contains(&q.value)) {
                        self.error(q.pos, format!("`{}` is not a member of `{}`", q.value, loc.value));
                    }
                    if !self.doc.functions.contains_key(&f.value) {
                        self.error(f.pos, format!("undefined function `{}`", f.value));
                    }
                    if assignments.insert(q.value.clone(), f.value.clone()).is_some() {
                        self.error(q.pos, format!("`{}` assigned twice", q.value));
                    }
                }
                if self.claim(&mut names, name, "name") {
                    self.doc.pieces.insert(name.value.clone(), PiecesDecl { localization: loc.value.clone(), assignments });
                }
            }
        }
        for item in &items {
            if let Item::Binomial { pos, fields } = item {
                if self.doc.binomial.is_some() {
                    self.error(*pos, "only one binomial section is allowed");
                    continue;
                }
                if let Some(b) = self.binomial(*pos, fields) {
                    self.doc.binomial = Some(b);
                }
            }
        }
        for item in &items {
            match item {
                Item::Member { name, fields } => {
                    if self.doc.binomial.is_none() {
                        self.error(name.pos, "members need a binomial section");
                    }
                    let map = self.numbers(fields, &["u", "d", "pi"], &[]);
                    if let Some(m) = map {
                        let member = BinMeasure::new(m["u"].clone(), m["d"].clone(), m["pi"].clone());
                        if let Some(b) = &self.doc.binomial {
                            if !b.params.contains(&member) {
                                self.error(name.pos, format!("member `{}` lies outside the parameter box", name.value));
                            }
                        }
                        if self.claim(&mut names, name, "name") {
                            self.doc.members.insert(name.value.clone(), member);
                        }
                    }
                }
                Item::Test { name, fields } => self.test(&mut names, name, fields),
                Item::Reference { name, measure, loc } => {
                    if !self.doc.measures.contains_key(&measure.value) {
                        self.error(measure.pos, format!("undefined measure `{}`", measure.value));
                    }
                    if !self.doc.localizations.contains_key(&loc.value) {
                        self.error(loc.pos, format!("undefined localization `{}`", loc.value));
                    }
                    if self.claim(&mut names, name, "name") {
                        let decl = ReferenceDecl { measure: measure.value.clone(), localization: loc.value.clone() };
                        self.doc.references.insert(name.value.clone(), decl);
                    }
                }
                _ => {}
            }
        }
        let alt = match self.doc.alternative() {
            Some(Ok(alt)) => Some(alt),
            _ => None,
        };
        for item in &items {
            if let Item::Set { name, text } = item {
                match parse_set_expr(&text.value, alt.as_ref().map(|a| a.support_map())) {
                    Ok(e) => {
                        if self.claim(&mut names, name, "name") {
                            self.doc.sets.insert(name.value.clone(), e);
                        }
                    }
                    Err(e) => {
                        let msg = if e.message.contains("support map") && self.doc.binomial.is_some() {
                            "SU(...) needs valid binomial parameters".to_string()
                        } else {
                            e.message
                        };
                        self.error(text.pos + e.offset, msg);
                    }
                }
            }
        }
    }

    fn expect_probability(&mut self, m: &Spanned<String>) -> bool {
        match self.doc.measures.get(&m.value) {
            Some(d) if d.kind == MeasureKind::Probability => true,
            Some(_) => {
                self.error(m.pos, format!("`{}` is signed; a probability measure is needed", m.value));
                false
            }
            None => {
                self.error(m.pos, format!("undefined measure `{}`", m.value));
                false
            }
        }
    }

    /// Checks for exactly the `required` numeric fields plus any `optional`.
    fn numbers(
        &mut self,
        fields: &[(Spanned<String>, Field)],
        required: &[&str],
        optional: &[&str],
    ) -> Option<BTreeMap<String, Rational>> {
        let mut out = BTreeMap::new();
        let mut ok = true;
        for (key, value) in fields {
            if !required.contains(&key.value.as_str()) && !optional.contains(&key.value.as_str()) {
                self.error(key.pos, format!("unknown field `{}`", key.value));
                ok = false;
                continue;
            }
            match value {
                Field::Number(q) => {
                    if out.insert(key.value.clone(), q.clone()).is_some() {
                        self.error(key.pos, format!("field `{}` given twice", key.value));
                        ok = false;
                    }
                }
                _ => {
                    self.error(key.pos, format!("field `{}` takes a rational", key.value));
                    ok = false;
                }
            }
        }
        for r in required {
            if !out.contains_key(*r) {
                let pos = fields.first().map_or(0, |f| f.0.pos);
                self.error(pos, format!("missing field `{r}`"));
                ok = false;
            }
        }
        ok.then_some(out)
    }

    fn binomial(&mut self, pos: usize, fields: &[(Spanned<String>, Field)]) -> Option<BinomialDecl> {
        let (knot_fields, plain): (Vec<_>, Vec<_>) = fields.iter().partition(|(k, _)| k.value == "f");
        let plain: Vec<(Spanned<String>, Field)> = plain.into_iter().cloned().collect();
        let nums = self.numbers(&plain, &["u0", "U0", "d0", "D0", "pi0", "Pi0"], &["pi_tilde"]);
        let mut knots = None;
        for (k, v) in knot_fields {
            match v {
                Field::Knots(list) if knots.is_none() => knots = Some(list.clone()),
                Field::Knots(_) => self.error(k.pos, "field `f` given twice"),
                _ => self.error(k.pos, "field `f` takes a list of (x, y) breakpoints"),
            }
        }
        if fields.is_empty() {
            self.error(pos, "binomial section is empty");
        }
        let n = nums?;
        let params = ModelParams::new(
            n["u0"].clone(),
            n["U0"].clone(),
            n["d0"].clone(),
            n["D0"].clone(),
            n["pi0"].clone(),
            n["Pi0"].clone(),
        );
        Some(BinomialDecl { params, pi_tilde: n.get("pi_tilde").cloned(), knots })
    }

    fn test(&mut self, names: &mut BTreeSet<String>, name: &Spanned<String>, fields: &[(Spanned<String>, Field)]) {
        let mut h = BTreeMap::new();
        let mut epsilon = None;
        for (key, value) in fields {
            match (key.value.as_str(), value) {
                ("h0" | "h1", Field::Name(f)) => {
                    if !self.doc.families.contains_key(f) {
                        self.error(key.pos, format!("undefined family `{f}`"));
                    }
                    h.insert(key.value.clone(), f.clone());
                }
                ("epsilon", Field::Number(e)) => {
                    if e.is_negative() {
                        self.error(key.pos, "epsilon must be nonnegative");
                    }
                    epsilon = Some(e.clone());
                }
                _ => self.error(key.pos, format!("unexpected field `{}`", key.value)),
            }
        }
        let (Some(h0), Some(h1)) = (h.get("h0"), h.get("h1")) else {
            self.error(name.pos, format!("test `{}` needs h0 and h1", name.value));
            return;
        };
        let decl = TestDecl { h0: h0.clone(), h1: h1.clone(), epsilon };
        if self.claim(names, name, "name") {
            self.doc.tests.insert(name.value.clone(), decl);
        }
    }
}
