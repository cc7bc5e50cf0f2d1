//! Commands over a model document and the reports they produce.
//!
//! A [`Report`] is a list of named sections of `key=value` entries. The
//! machine rendering is byte-stable for a given document and options; wall
//! clock data appears only when `meta` is requested.

use std::fmt;
use std::str::FromStr;
use std::time::{SystemTime, UNIX_EPOCH};

use num_traits::Zero;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::binomial::{
    check_na_robust, check_na_single, denominator_grid, find_na_violating_member, find_support_collision, validate_params,
    AltMember, BinMeasure, DisjointAlternative, Regime, DEFAULT_GRID_DENOMINATOR,
};
use crate::families::{
    check_hahn_property, decompose_with_reference, eval_functional, glue, norm_witness, qs_sup_norm, verify_localization,
    Localization, MeasureFamily,
};
use crate::hahnext::{
    check_ac_preservation, extend_measure, extended_tv, restriction_isometry_check, PointLocalization, SupportLocator,
    DEFAULT_PROBE_DEPTH,
};
use crate::measures::{hahn_jordan, tv_norm, AtomSet, SignedMeasure};
use crate::model::{parse_model, Diagnostic, MeasureKind, ModelDocument};
use crate::rational::{format_rational, Rational};
use crate::realsets::IntervalUnion;
use crate::testing::{min_risk, min_tv_between_hulls, strictly_unbiased_exists, PhiSource, TestFunction};

pub const REPORT_VERSION: u32 = 1;
/// Random laws drawn by `binomial-cover` in addition to declared members.
pub const RANDOM_COVERS: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Command {
    VerifyLocalization,
    Glue,
    HahnExtend,
    BinomialValidate,
    BinomialAlt,
    BinomialCover,
    NaCheck,
    Tv,
    Kraft,
    Unbiased,
    Decompose,
}

impl Command {
    pub const ALL: [Command; 11] = [
        Command::VerifyLocalization,
        Command::Glue,
        Command::HahnExtend,
        Command::BinomialValidate,
        Command::BinomialAlt,
        Command::BinomialCover,
        Command::NaCheck,
        Command::Tv,
        Command::Kraft,
        Command::Unbiased,
        Command::Decompose,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::VerifyLocalization => "verify-localization",
            Command::Glue => "glue",
            Command::HahnExtend => "hahn-extend",
            Command::BinomialValidate => "binomial-validate",
            Command::BinomialAlt => "binomial-alt",
            Command::BinomialCover => "binomial-cover",
            Command::NaCheck => "na-check",
            Command::Tv => "tv",
            Command::Kraft => "kraft",
            Command::Unbiased => "unbiased",
            Command::Decompose => "decompose",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Command::ALL.into_iter().find(|c| c.name() == s).ok_or_else(|| CliError::Input(format!("unknown command `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Human,
    Machine,
}

impl FromStr for Format {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "human" => Ok(Format::Human),
            "machine" => Ok(Format::Machine),
            _ => Err(CliError::Input(format!("unknown format `{s}`, expected human or machine"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOptions {
    pub seed: u64,
    pub grid_denominator: u32,
    /// Treat any shared atom between supports as overlap, polar or not.
    pub strict: bool,
    /// Largest number of supports joined into one probe set.
    pub probe_depth: usize,
    pub meta: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            seed: 0,
            grid_denominator: DEFAULT_GRID_DENOMINATOR,
            strict: false,
            probe_depth: DEFAULT_PROBE_DEPTH,
            meta: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("\n"))]
    Parse(Vec<Diagnostic>),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        2
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Section {
    pub kind: String,
    pub name: String,
    pub ok: bool,
    pub entries: Vec<(String, String)>,
}

impl Section {
    fn new(kind: &str, name: impl Into<String>) -> Self {
        Section { kind: kind.to_string(), name: name.into(), ok: true, entries: Vec::new() }
    }

    fn put(&mut self, key: impl Into<String>, value: impl fmt::Display) {
        self.entries.push((key.into(), value.to_string()));
    }

    /// Records a check; a false one fails the section.
    fn check(&mut self, key: impl Into<String>, holds: bool) {
        self.ok &= holds;
        self.put(key, holds);
    }

    fn fail(&mut self, key: impl Into<String>, value: impl fmt::Display) {
        self.ok = false;
        self.put(key, value);
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Report {
    pub command: Command,
    pub sections: Vec<Section>,
    pub meta: Vec<(String, String)>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.sections.iter().all(|s| s.ok)
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            0
        } else {
            1
        }
    }

    pub fn section(&self, kind: &str, name: &str) -> Option<&Section> {
        self.sections.iter().find(|s| s.kind == kind && s.name == name)
    }

    fn status(&self) -> &'static str {
        if self.passed() {
            "pass"
        } else {
            "fail"
        }
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Machine => self.render_machine(),
            Format::Human => self.render_human(),
        }
    }

    pub fn render_machine(&self) -> String {
        let mut out = format!("report {REPORT_VERSION}\ncommand {}\nstatus {}\n", self.command, self.status());
        if !self.meta.is_empty() {
            out.push_str("meta {\n");
            for (k, v) in &self.meta {
                out.push_str(&format!("  {k}={v}\n"));
            }
            out.push_str("}\n");
        }
        for s in &self.sections {
            out.push_str(&format!("{} {} {{\n  status={}\n", s.kind, s.name, if s.ok { "pass" } else { "fail" }));
            for (k, v) in &s.entries {
                out.push_str(&format!("  {k}={v}\n"));
            }
            out.push_str("}\n");
        }
        out
    }

    pub fn render_human(&self) -> String {
        let mut out = format!("{}: {}\n", self.command, self.status().to_uppercase());
        for (k, v) in &self.meta {
            out.push_str(&format!("  ({k}: {v})\n"));
        }
        for s in &self.sections {
            out.push_str(&format!("\n{} {}  [{}]\n", s.kind, s.name, if s.ok { "ok" } else { "FAILED" }));
            let width = s.entries.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
            for (k, v) in &s.entries {
                out.push_str(&format!("  {k:<width$}  {v}\n"));
            }
        }
        out
    }
}

/// Parses `text` and runs `command` on it.
pub fn run_text(command: Command, text: &str, opts: &RunOptions) -> Result<Report, CliError> {
    let doc = parse_model(text).map_err(CliError::Parse)?;
    run(command, &doc, opts)
}

pub fn run(command: Command, doc: &ModelDocument, opts: &RunOptions) -> Result<Report, CliError> {
    if opts.grid_denominator == 0 {
        return Err(CliError::Input("grid denominator must be positive".into()));
    }
    let sections = match command {
        Command::VerifyLocalization => verify_localizations(doc, opts)?,
        Command::Glue => glue_pieces(doc)?,
        Command::HahnExtend => hahn_extend(doc, opts)?,
        Command::BinomialValidate => binomial_validate(doc)?,
        Command::BinomialAlt => binomial_alt(doc, opts)?,
        Command::BinomialCover => binomial_cover(doc, opts)?,
        Command::NaCheck => na_check(doc)?,
        Command::Tv => tv(doc)?,
        Command::Kraft => kraft(doc)?,
        Command::Unbiased => unbiased(doc)?,
        Command::Decompose => decompose(doc)?,
    };
    let mut meta = Vec::new();
    if opts.meta {
        let now = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        meta.push(("generated_at".to_string(), now.to_string()));
        meta.push(("seed".to_string(), opts.seed.to_string()));
        meta.push(("grid_denominator".to_string(), opts.grid_denominator.to_string()));
        meta.push(("probe_depth".to_string(), opts.probe_depth.to_string()));
        meta.push(("strict".to_string(), opts.strict.to_string()));
    }
    Ok(Report { command, sections, meta })
}

fn r(q: &Rational) -> String {
    format_rational(q)
}

fn atoms(set: &AtomSet) -> String {
    format!("{{{}}}", set.iter().map(ToString::to_string).collect::<Vec<_>>().join(", "))
}

fn weights(labels: &[String], w: &[Rational]) -> String {
    let parts: Vec<String> = labels.iter().zip(w).filter(|(_, w)| !w.is_zero()).map(|(l, w)| format!("{l}: {}", r(w))).collect();
    format!("{{{}}}", parts.join(", "))
}

fn need<T>(items: &std::collections::BTreeMap<String, T>, what: &str, command: Command) -> Result<(), CliError> {
    if items.is_empty() {
        Err(CliError::Input(format!("{command} needs at least one {what} in the document")))
    } else {
        Ok(())
    }
}

fn verify_localizations(doc: &ModelDocument, opts: &RunOptions) -> Result<Vec<Section>, CliError> {
    need(doc.localizations(), "localization", Command::VerifyLocalization)?;
    let mut out = Vec::new();
    for (name, decl) in doc.localizations() {
        let (family, loc) = doc.localization(name).expect("declared");
        let member_names = &doc.families()[&decl.family].members;
        let labels = loc.labels();
        let mut s = Section::new("localization", name);
        s.put("family", &decl.family);
        let report = match verify_localization(&family, &loc, opts.strict) {
            Ok(rep) => rep,
            Err(e) => {
                s.fail("error", e);
                out.push(s);
                continue;
            }
        };
        s.check("disjoint", report.disjoint_ok);
        for (i, j) in &report.overlapping {
            s.put(format!("overlap.{}", labels[*i]), &labels[*j]);
        }
        s.check("delta", report.delta_ok);
        for (q, rr, mass) in &report.delta_failures {
            s.put(format!("delta_failure.{}", labels[*q]), format!("{}({}) = {}", labels[*q], labels[*rr], r(mass)));
        }
        s.check("q_dominated_by_p", report.q_lll_p);
        for (label, w) in labels.iter().zip(&report.q_witnesses) {
            s.put(format!("q_witness.{label}"), w.map_or("none".to_string(), |i| member_names[i].clone()));
        }
        s.check("p_dominated_by_mixture", report.p_lll_sconvq);
        for (p, w) in member_names.iter().zip(&report.p_witnesses) {
            let text = match w {
                Some(mix) => {
                    let parts: Vec<String> = mix.iter().map(|(i, wt)| format!("{}: {}", labels[*i], r(wt))).collect();
                    format!("{{{}}}", parts.join(", "))
                }
                None => "none".to_string(),
            };
            s.put(format!("p_witness.{p}"), text);
        }
        s.put("hahn_property", check_hahn_property(&family, &loc).overall);
        out.push(s);
    }
    Ok(out)
}

fn glue_pieces(doc: &ModelDocument) -> Result<Vec<Section>, CliError> {
    need(doc.pieces(), "pieces declaration", Command::Glue)?;
    let mut out = Vec::new();
    for (name, decl) in doc.pieces() {
        let (family, loc, pieces) = doc.pieces_for(name).expect("declared");
        let mut s = Section::new("pieces", name);
        s.put("localization", &decl.localization);
        let h = match glue(&family, &loc, &pieces) {
            Ok(h) => h,
            Err(e) => {
                s.fail("error", e);
                out.push(s);
                continue;
            }
        };
        let mut universe = family.universe();
        universe.extend(loc.atoms());
        for a in &universe {
            s.put(format!("h({a})"), r(&h.eval(a)));
        }
        s.put("norm", r(&qs_sup_norm(&h, &family)));
        if let Some((a, _)) = norm_witness(&h, &family) {
            s.put("norm_witness", a);
        }
        let agrees = pieces_agree(&family, &loc, &pieces, &h);
        s.check("agrees_on_supports", agrees);
        let mut duality = true;
        for (pname, p) in doc.families()[&doc.localizations()[&decl.localization].family].members.iter().zip(family.members()) {
            let direct = eval_functional(&h, p.as_signed());
            let local: Rational =
                pieces.iter().zip(loc.supports()).map(|(g, sq)| eval_functional(g, &p.as_signed().restrict(sq))).sum();
            duality &= direct == local;
            s.put(format!("functional.{pname}"), r(&direct));
        }
        s.check("duality", duality);
        out.push(s);
    }
    Ok(out)
}

fn pieces_agree(
    family: &MeasureFamily,
    loc: &Localization,
    pieces: &[crate::families::BoundedFunction],
    h: &crate::families::BoundedFunction,
) -> bool {
    pieces
        .iter()
        .zip(loc.supports())
        .all(|(g, sq)| sq.iter().filter(|a| !family.is_polar_atom(a)).all(|a| g.eval(a) == h.eval(a)))
}

fn point_measures(doc: &ModelDocument) -> Vec<(String, SignedMeasure)> {
    doc.measures()
        .keys()
        .filter_map(|n| doc.signed_measure(n).map(|m| (n.clone(), m)))
        .filter(|(_, m)| !m.is_zero() && m.weights().keys().all(|a| a.value().is_some()))
        .collect()
}

fn hahn_extend(doc: &ModelDocument, opts: &RunOptions) -> Result<Vec<Section>, CliError> {
    let locator: Box<dyn SupportLocator> = match doc.alternative() {
        Some(Ok(alt)) => Box::new(alt),
        Some(Err(e)) => return Err(CliError::Input(format!("binomial section does not define an alternative: {e}"))),
        None => {
            let Some(name) = doc.localizations().keys().next() else {
                return Err(CliError::Input("hahn-extend needs a binomial section or a localization over point atoms".into()));
            };
            let (_, loc) = doc.localization(name).expect("declared");
            Box::new(PointLocalization::new(&loc).map_err(|e| CliError::Input(format!("localization `{name}`: {e}")))?)
        }
    };
    let measures = point_measures(doc);
    if measures.is_empty() {
        return Err(CliError::Input("hahn-extend needs a measure over point atoms (`@p/q`)".into()));
    }
    let mut out = Vec::new();
    for (name, mu) in &measures {
        let mut s = Section::new("extension", name);
        let em = match extend_measure(mu, locator.as_ref()) {
            Ok(em) => em,
            Err(e) => {
                s.fail("error", e);
                out.push(s);
                continue;
            }
        };
        let labels: Vec<&str> = em.active().iter().map(|m| m.label.as_str()).collect();
        s.put("active", format!("{{{}}}", labels.join(", ")));
        match extended_tv(&em) {
            Ok(tv) => s.put("tv", r(&tv)),
            Err(e) => s.fail("tv_error", e),
        }
        match restriction_isometry_check(mu, locator.as_ref()) {
            Ok(ok) => s.check("isometry", ok),
            Err(e) => s.fail("isometry_error", e),
        }
        for (set_name, set) in doc.sets() {
            s.put(format!("value.{set_name}"), r(&em.eval(set)));
            s.put(format!("variation.{set_name}"), r(&em.variation_eval(set)));
        }
        out.push(s);
    }
    for (mname, mu) in &measures {
        for (pname, _) in measures.iter().filter(|(n, _)| doc.measures()[n].kind == MeasureKind::Probability && n != mname) {
            let p = doc.probability(pname).expect("probability");
            let mut s = Section::new("ac", format!("{mname}/{pname}"));
            match check_ac_preservation(mu, &p, locator.as_ref(), opts.probe_depth) {
                Ok(rep) => {
                    s.put("base", rep.base_ac);
                    s.put("extended", rep.extended_ac);
                    s.check("consistent", rep.consistent);
                    s.put("probes", rep.probes_checked);
                    if let Some(w) = rep.witness {
                        s.put("witness", w);
                    }
                }
                Err(e) => s.fail("error", e),
            }
            out.push(s);
        }
    }
    Ok(out)
}

fn binomial_params(doc: &ModelDocument, command: Command) -> Result<&crate::binomial::ModelParams, CliError> {
    doc.binomial().map(|b| &b.params).ok_or_else(|| CliError::Input(format!("{command} needs a binomial section")))
}

fn binomial_validate(doc: &ModelDocument) -> Result<Vec<Section>, CliError> {
    let p = binomial_params(doc, Command::BinomialValidate)?;
    let report = validate_params(p);
    let mut s = Section::new("binomial", "params");
    for c in &report.checks {
        s.put(c.key, format!("{} {}", if c.holds { "holds" } else { "violated" }, c.detail));
    }
    s.check("base", report.base_ok);
    s.check("strengthened", report.strengthened_ok);
    Ok(vec![s])
}

fn alternative(doc: &ModelDocument, command: Command) -> Result<Result<DisjointAlternative, Section>, CliError> {
    binomial_params(doc, command)?;
    Ok(match doc.alternative().expect("binomial present") {
        Ok(alt) => Ok(alt),
        Err(e) => {
            let mut s = Section::new("binomial", "alternative");
            s.fail("error", e);
            Err(s)
        }
    })
}

fn grid_in(set: &IntervalUnion, den: u32) -> Vec<Rational> {
    set.parts()
        .iter()
        .flat_map(|i| match (i.lo(), i.hi()) {
            (Some(lo), Some(hi)) => denominator_grid(lo, hi, den),
            _ => Vec::new(),
        })
        .filter(|x| set.contains(x))
        .collect()
}

fn binomial_alt(doc: &ModelDocument, opts: &RunOptions) -> Result<Vec<Section>, CliError> {
    let alt = match alternative(doc, Command::BinomialAlt)? {
        Ok(alt) => alt,
        Err(s) => return Ok(vec![s]),
    };
    let mut s = Section::new("binomial", "alternative");
    s.put(
        "regime",
        match alt.regime() {
            Regime::Separated => "separated",
            Regime::Overlapping => "overlapping",
        },
    );
    let knots: Vec<String> = alt.f().knots().iter().map(|(x, y)| format!("({}, {})", r(x), r(y))).collect();
    s.put("f", format!("[{}]", knots.join(", ")));
    s.put("pi_tilde", r(alt.pi_tilde()));
    s.put("pair_domain", alt.pair_domain());
    s.put("point_domain", alt.point_domain());
    s.put("all_pairs", alt.all_pairs());

    let pairs: Vec<AltMember> =
        grid_in(alt.pair_domain(), opts.grid_denominator).into_iter().map(|d| AltMember::Pair { d }).collect();
    let points: Vec<AltMember> =
        grid_in(&alt.point_domain(), opts.grid_denominator).into_iter().map(|a| AltMember::Point { a }).collect();
    let roundtrip = pairs.iter().all(|m| match m {
        AltMember::Pair { d } => alt.f().eval(d).and_then(|u| alt.f().inverse_eval(&u)).as_ref() == Some(d),
        AltMember::Point { .. } => true,
    });
    let mut members = pairs;
    members.extend(points);
    s.put("grid_members", members.len());
    match find_support_collision(&alt, &members) {
        None => s.check("disjoint", true),
        Some((a, b, x)) => {
            s.check("disjoint", false);
            s.put("collision", format!("{a} and {b} share {}", r(&x)));
        }
    }
    s.check("f_roundtrip", roundtrip);
    let mut out = vec![s];
    for (name, m) in doc.members() {
        let mut ms = Section::new("member", name);
        ms.put("law", m);
        match alt.member_of(m) {
            Ok(Some(am)) => {
                ms.put("in_alternative", true);
                ms.put("as", &am);
                ms.put("component", format!("{:?}", alt.component_of(&am)));
            }
            Ok(None) => ms.put("in_alternative", false),
            Err(e) => ms.fail("error", e),
        }
        out.push(ms);
    }
    Ok(out)
}

fn binomial_cover(doc: &ModelDocument, opts: &RunOptions) -> Result<Vec<Section>, CliError> {
    let alt = match alternative(doc, Command::BinomialCover)? {
        Ok(alt) => alt,
        Err(s) => return Ok(vec![s]),
    };
    let mut out = Vec::new();
    for (name, m) in doc.members() {
        let mut s = Section::new("member", name);
        s.put("law", m);
        match alt.cover(m) {
            Ok(c) => {
                s.put("q1", &c.q1);
                s.put("q2", &c.q2);
                s.put("case", format!("{:?}", c.case));
                s.check("sound", c.sound);
                s.check("dominated", c.dominated);
            }
            Err(e) => s.fail("error", e),
        }
        out.push(s);
    }
    let p = alt.params();
    let den = opts.grid_denominator;
    let grid = |lo: &Rational, hi: &Rational| {
        let g = denominator_grid(lo, hi, den);
        if g.is_empty() {
            vec![lo.clone()]
        } else {
            g
        }
    };
    let (us, ds, pis) = (grid(&p.u0, &p.big_u0), grid(&p.d0, &p.big_d0), grid(&p.pi0, &p.big_pi0));
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut s = Section::new("random", "covers");
    s.put("seed", opts.seed);
    s.put("count", RANDOM_COVERS);
    let (mut sound, mut dominated) = (0usize, 0usize);
    for _ in 0..RANDOM_COVERS {
        let q = BinMeasure::new(
            us.choose(&mut rng).unwrap().clone(),
            ds.choose(&mut rng).unwrap().clone(),
            pis.choose(&mut rng).unwrap().clone(),
        );
        match alt.cover(&q) {
            Ok(c) => {
                sound += usize::from(c.sound);
                dominated += usize::from(c.dominated);
                if !(c.sound && c.dominated) && s.get("first_failure").is_none() {
                    s.put("first_failure", &q);
                }
            }
            Err(e) => {
                if s.get("first_failure").is_none() {
                    s.put("first_failure", format!("{q}: {e}"));
                }
            }
        }
    }
    s.put("sound_count", sound);
    s.put("dominated_count", dominated);
    s.check("all_covered", sound == RANDOM_COVERS && dominated == RANDOM_COVERS);
    out.push(s);
    Ok(out)
}

fn na_check(doc: &ModelDocument) -> Result<Vec<Section>, CliError> {
    let p = binomial_params(doc, Command::NaCheck)?;
    let robust = check_na_robust(p);
    let mut s = Section::new("binomial", "robust_na");
    s.check("holds", robust.holds);
    for (key, w) in [
        ("up_witness", &robust.up_witness),
        ("down_witness", &robust.down_witness),
        ("two_sided_witness", &robust.two_sided_witness),
    ] {
        if let Some(w) = w {
            s.put(key, w);
        }
    }
    s.put("explanation", &robust.explanation);
    match find_na_violating_member(p) {
        Some(m) => s.put("violating_member", m),
        None => s.put("violating_member", "none"),
    }
    let mut out = vec![s];
    for (name, m) in doc.members() {
        let mut ms = Section::new("member", name);
        ms.put("law", m);
        ms.put("na", check_na_single(m));
        out.push(ms);
    }
    Ok(out)
}

fn tv(doc: &ModelDocument) -> Result<Vec<Section>, CliError> {
    if doc.measures().is_empty() && doc.tests().is_empty() {
        return Err(CliError::Input("tv needs a measure or a test in the document".into()));
    }
    let mut out = Vec::new();
    for name in doc.measures().keys() {
        let mu = doc.signed_measure(name).expect("declared");
        let hj = hahn_jordan(&mu);
        let mut s = Section::new("measure", name);
        s.put("tv", r(&tv_norm(&mu)));
        s.put("positive_set", atoms(&hj.positive_set));
        s.put("negative_set", atoms(&hj.negative_set));
        s.put("positive", &hj.positive);
        s.put("negative", &hj.negative);
        s.check("jordan", hj.positive.sub(&hj.negative) == mu);
        out.push(s);
    }
    for name in doc.tests().keys() {
        let prob = doc.test_problem(name).expect("declared");
        let mut s = Section::new("test", name);
        match min_tv_between_hulls(&prob) {
            Ok(h) => s.put("d_tv", r(&h.d)),
            Err(e) => s.fail("error", e),
        }
        out.push(s);
    }
    Ok(out)
}

fn phi_text(phi: &TestFunction, universe: &AtomSet) -> String {
    let parts: Vec<String> = universe.iter().map(|a| format!("{a}: {}", r(&phi.eval(a)))).collect();
    format!("{{{}}}", parts.join(", "))
}

fn kraft(doc: &ModelDocument) -> Result<Vec<Section>, CliError> {
    need(doc.tests(), "test", Command::Kraft)?;
    let mut out = Vec::new();
    for (name, decl) in doc.tests() {
        let prob = doc.test_problem(name).expect("declared");
        let mut s = Section::new("test", name);
        match min_risk(&prob) {
            Ok(sol) => {
                let families = doc.families();
                s.put("d_tv", r(&sol.d_tv));
                s.put("min_risk", r(&sol.min_risk));
                s.put("identity", "verified");
                s.put("mu_star", &sol.mu_star);
                s.put("nu_star", &sol.nu_star);
                s.put("weights_h0", weights(&families[&decl.h0].members, &sol.weights0));
                s.put("weights_h1", weights(&families[&decl.h1].members, &sol.weights1));
                s.put("phi", phi_text(&sol.phi_star, &prob.universe()));
                s.put(
                    "phi_source",
                    match sol.phi_source {
                        PhiSource::Indicator => "indicator",
                        PhiSource::LpVertex => "lp_vertex",
                    },
                );
            }
            Err(e) => s.fail("error", e),
        }
        out.push(s);
    }
    Ok(out)
}

fn unbiased(doc: &ModelDocument) -> Result<Vec<Section>, CliError> {
    need(doc.tests(), "test", Command::Unbiased)?;
    let mut out = Vec::new();
    for (name, decl) in doc.tests() {
        let Some(eps) = &decl.epsilon else {
            return Err(CliError::Input(format!("test `{name}` needs an epsilon for unbiased")));
        };
        let prob = doc.test_problem(name).expect("declared");
        let mut s = Section::new("test", name);
        s.put("epsilon", r(eps));
        match strictly_unbiased_exists(&prob, eps) {
            Ok(Some(w)) => {
                s.put("exists", true);
                s.put("gap", r(&w.gap));
                s.put("phi", phi_text(&w.phi, &prob.universe()));
            }
            Ok(None) => s.put("exists", false),
            Err(e) => s.fail("error", e),
        }
        out.push(s);
    }
    Ok(out)
}

fn decompose(doc: &ModelDocument) -> Result<Vec<Section>, CliError> {
    need(doc.references(), "reference", Command::Decompose)?;
    let mut out = Vec::new();
    for (rname, decl) in doc.references() {
        let reference = doc.signed_measure(&decl.measure).expect("declared");
        let (_, loc) = doc.localization(&decl.localization).expect("declared");
        for name in doc.measures().keys().filter(|n| **n != decl.measure) {
            let mu = doc.signed_measure(name).expect("declared");
            let d = decompose_with_reference(&mu, &reference, &loc);
            let mut s = Section::new("decomposition", format!("{rname}/{name}"));
            s.put("reference_part", &d.reference_part);
            s.put("localized_part", &d.localized_part);
            let mixing: Vec<String> = d.mixing.iter().map(|(i, w)| format!("{}: {}", loc.labels()[*i], r(w))).collect();
            s.put("mixing", format!("{{{}}}", mixing.join(", ")));
            s.check("sums_to_measure", d.reference_part.add(&d.localized_part) == mu);
            s.check("dominated", d.dominated);
            out.push(s);
        }
    }
    Ok(out)
}
