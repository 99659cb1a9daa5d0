//! Plain-text persistence for multi-edge-type profiles.
//!
//! The `.profile` format is line-oriented and human-diffable:
//!
//! ```text
//! # comments run to end of line; blank lines are ignored
//! version 1
//! sources 2
//!
//! [source 1]               # one section per source, 1-based
//! var 0.244225 2 0         # coeff d1 d2
//! check 0.3 15             # coeff d1 (lower graph)
//!
//! [rates 1]                # optional declared figures per source
//! r_plus 0.7
//! r_minus 0.5
//! sigma_plus 0.722955
//! sigma_minus 0.970555
//!
//! [upper]                  # shared checks: coeff then one degree per source
//! check 0.4 3 3
//! ```
//!
//! The `version 1` and `sources M` lines must come first, in that order.
//! Coefficients are kept as verbatim decimal strings in the parsed
//! [`ProfileDocument`], so a document serializes back with every digit of
//! its coefficients intact; the bundled `profiles/two_source.profile` is in
//! canonical form and round-trips byte-for-byte.

use crate::capacity::RateTriple;
use crate::ensemble::{
    ConstraintItem, ConstraintReport, DeclaredRates, LowerCheckEntry, MultiEdgeProfile,
    UpperCheckEntry, VarNodeEntry,
};
use crate::error::{Error, Result};
use crate::exit::sigma_sys;
use serde::Serialize;
use std::fmt::Write as _;

/// Socket-balance and normalization residuals must stay below this for a
/// document to convert into a usable profile.
pub const CONSTRAINT_TOL: f64 = 1e-3;
/// Declared rates must match recomputed rates this tightly.
pub const DECLARED_RATE_TOL: f64 = 1e-6;

// ---------------------------------------------------------------------------
// Document model
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DocVarEntry {
    pub coeff: String,
    pub d1: usize,
    pub d2: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DocLowerEntry {
    pub coeff: String,
    pub d1: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DocUpperEntry {
    pub coeff: String,
    pub degrees: Vec<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DocRates {
    pub r_plus: Option<String>,
    pub r_minus: Option<String>,
    pub sigma_plus: Option<String>,
    pub sigma_minus: Option<String>,
}

impl DocRates {
    fn is_empty(&self) -> bool {
        self.r_plus.is_none()
            && self.r_minus.is_none()
            && self.sigma_plus.is_none()
            && self.sigma_minus.is_none()
    }
}

/// A parsed `.profile` file. Numeric coefficients stay as the exact strings
/// found in the input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProfileDocument {
    pub version: u32,
    pub sources: usize,
    pub vars: Vec<Vec<DocVarEntry>>,
    pub lowers: Vec<Vec<DocLowerEntry>>,
    pub rates: Vec<DocRates>,
    pub uppers: Vec<DocUpperEntry>,
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

struct Cursor<'a> {
    line: usize,
    tokens: Vec<(usize, &'a str)>,
    used: usize,
}

impl<'a> Cursor<'a> {
    fn err(&self, column: usize, message: impl Into<String>) -> Error {
        Error::Syntax {
            line: self.line,
            column,
            message: message.into(),
        }
    }

    fn next(&mut self, what: &str) -> Result<(usize, &'a str)> {
        if self.used < self.tokens.len() {
            self.used += 1;
            Ok(self.tokens[self.used - 1])
        } else {
            let column = self
                .tokens
                .last()
                .map(|&(c, t)| c + t.len())
                .unwrap_or(1);
            Err(self.err(column, format!("expected {what}")))
        }
    }

    fn finish(&self) -> Result<()> {
        if self.used < self.tokens.len() {
            let (c, t) = self.tokens[self.used];
            return Err(self.err(c, format!("unexpected trailing token '{t}'")));
        }
        Ok(())
    }

    fn int(&mut self, what: &str) -> Result<usize> {
        let (c, t) = self.next(what)?;
        t.parse()
            .map_err(|_| self.err(c, format!("expected {what}, got '{t}'")))
    }

    /// A decimal coefficient: validated as finite f64, returned verbatim.
    fn coeff(&mut self) -> Result<String> {
        let (c, t) = self.next("a decimal coefficient")?;
        match t.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(t.to_string()),
            _ => Err(self.err(c, format!("expected a decimal coefficient, got '{t}'"))),
        }
    }
}

enum Section {
    Source(usize),
    Rates(usize),
    Upper,
}

/// Parses `.profile` text. Errors carry 1-based line and column.
pub fn parse(text: &str) -> Result<ProfileDocument> {
    let mut lines = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let body = raw.split('#').next().unwrap_or("");
        let mut tokens = Vec::new();
        let mut start = None;
        for (pos, ch) in body.char_indices() {
            if ch.is_whitespace() {
                if let Some(s) = start.take() {
                    tokens.push((s + 1, &body[s..pos]));
                }
            } else if start.is_none() {
                start = Some(pos);
            }
        }
        if let Some(s) = start {
            tokens.push((s + 1, &body[s..]));
        }
        if !tokens.is_empty() {
            lines.push(Cursor { line: idx + 1, tokens, used: 0 });
        }
    }
    let total_lines = text.lines().count();
    let eof = |message: &str| Error::Syntax {
        line: total_lines + 1,
        column: 1,
        message: message.into(),
    };

    let mut it = lines.into_iter();

    // Header: `version 1` then `sources M`.
    let mut cur = it.next().ok_or_else(|| eof("missing 'version' header"))?;
    let (c, t) = cur.next("'version'")?;
    if t != "version" {
        return Err(cur.err(c, "first line must be 'version 1'"));
    }
    let version = cur.int("a version number")? as u32;
    if version != 1 {
        return Err(cur.err(c, format!("unsupported version {version}, expected 1")));
    }
    cur.finish()?;

    let mut cur = it.next().ok_or_else(|| eof("missing 'sources' header"))?;
    let (c, t) = cur.next("'sources'")?;
    if t != "sources" {
        return Err(cur.err(c, "second line must be 'sources M'"));
    }
    let sources = cur.int("a source count")?;
    cur.finish()?;
    if sources == 0 {
        return Err(cur.err(c, "source count must be at least 1"));
    }

    let mut doc = ProfileDocument {
        version,
        sources,
        vars: vec![Vec::new(); sources],
        lowers: vec![Vec::new(); sources],
        rates: vec![DocRates::default(); sources],
        uppers: Vec::new(),
    };
    let mut seen_source = vec![false; sources];
    let mut seen_rates = vec![false; sources];
    let mut seen_upper = false;
    let mut section: Option<Section> = None;

    for mut cur in it {
        let (col, tok) = cur.next("a directive")?;
        if let Some(inner) = tok.strip_prefix('[') {
            // Section headers may contain a space, so reassemble the line.
            let mut full = inner.to_string();
            while !full.ends_with(']') {
                let (_, t) = cur
                    .next("']' closing the section header")
                    .map_err(|_| cur.err(col, "unterminated section header"))?;
                full.push(' ');
                full.push_str(t);
            }
            cur.finish()?;
            full.pop();
            let mut parts = full.split_whitespace();
            section = Some(match (parts.next(), parts.next(), parts.next()) {
                (Some("upper"), None, _) => {
                    if seen_upper {
                        return Err(cur.err(col, "duplicate [upper] section"));
                    }
                    seen_upper = true;
                    Section::Upper
                }
                (Some(kind @ ("source" | "rates")), Some(num), None) => {
                    let m: usize = num.parse().map_err(|_| {
                        cur.err(col, format!("bad source number '{num}' in section header"))
                    })?;
                    if m == 0 || m > sources {
                        return Err(cur.err(
                            col,
                            format!("source number {m} out of range 1..={sources}"),
                        ));
                    }
                    let seen = if kind == "source" {
                        &mut seen_source
                    } else {
                        &mut seen_rates
                    };
                    if seen[m - 1] {
                        return Err(cur.err(col, format!("duplicate [{kind} {m}] section")));
                    }
                    seen[m - 1] = true;
                    if kind == "source" {
                        Section::Source(m - 1)
                    } else {
                        Section::Rates(m - 1)
                    }
                }
                _ => {
                    return Err(cur.err(
                        col,
                        format!("unknown section '[{full}]', expected [source m], [rates m] or [upper]"),
                    ))
                }
            });
            continue;
        }

        match (&section, tok) {
            (Some(Section::Source(m)), "var") => {
                let coeff = cur.coeff()?;
                let d1 = cur.int("a lower degree")?;
                let d2 = cur.int("an upper degree")?;
                cur.finish()?;
                doc.vars[*m].push(DocVarEntry { coeff, d1, d2 });
            }
            (Some(Section::Source(m)), "check") => {
                let coeff = cur.coeff()?;
                let d1 = cur.int("a check degree")?;
                cur.finish()?;
                doc.lowers[*m].push(DocLowerEntry { coeff, d1 });
            }
            (Some(Section::Upper), "check") => {
                let coeff = cur.coeff()?;
                let mut degrees = Vec::with_capacity(sources);
                for _ in 0..sources {
                    degrees.push(cur.int("one degree per source")?);
                }
                cur.finish()?;
                doc.uppers.push(DocUpperEntry { coeff, degrees });
            }
            (Some(Section::Rates(m)), key @ ("r_plus" | "r_minus" | "sigma_plus" | "sigma_minus")) => {
                let value = cur.coeff()?;
                cur.finish()?;
                let slot = match key {
                    "r_plus" => &mut doc.rates[*m].r_plus,
                    "r_minus" => &mut doc.rates[*m].r_minus,
                    "sigma_plus" => &mut doc.rates[*m].sigma_plus,
                    _ => &mut doc.rates[*m].sigma_minus,
                };
                if slot.is_some() {
                    return Err(cur.err(col, format!("duplicate '{key}' entry")));
                }
                *slot = Some(value);
            }
            (None, _) => {
                return Err(cur.err(col, format!("'{tok}' appears before any section header")))
            }
            _ => return Err(cur.err(col, format!("unknown directive '{tok}' in this section"))),
        }
    }

    for (m, &seen) in seen_source.iter().enumerate() {
        if !seen {
            return Err(eof(&format!("missing [source {}] section", m + 1)));
        }
        if doc.vars[m].is_empty() {
            return Err(eof(&format!("[source {}] has no var entries", m + 1)));
        }
    }
    Ok(doc)
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

/// Canonical text form; parsing it yields an equal document, with every
/// coefficient string reproduced byte-for-byte.
pub fn serialize(doc: &ProfileDocument) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "version {}", doc.version);
    let _ = writeln!(out, "sources {}", doc.sources);
    for m in 0..doc.sources {
        let _ = writeln!(out, "\n[source {}]", m + 1);
        for e in &doc.vars[m] {
            let _ = writeln!(out, "var {} {} {}", e.coeff, e.d1, e.d2);
        }
        for e in &doc.lowers[m] {
            let _ = writeln!(out, "check {} {}", e.coeff, e.d1);
        }
        let r = &doc.rates[m];
        if !r.is_empty() {
            let _ = writeln!(out, "\n[rates {}]", m + 1);
            for (key, v) in [
                ("r_plus", &r.r_plus),
                ("r_minus", &r.r_minus),
                ("sigma_plus", &r.sigma_plus),
                ("sigma_minus", &r.sigma_minus),
            ] {
                if let Some(v) = v {
                    let _ = writeln!(out, "{key} {v}");
                }
            }
        }
    }
    if !doc.uppers.is_empty() {
        out.push_str("\n[upper]\n");
        for e in &doc.uppers {
            let _ = write!(out, "check {}", e.coeff);
            for d in &e.degrees {
                let _ = write!(out, " {d}");
            }
            out.push('\n');
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Conversion
// ---------------------------------------------------------------------------

fn num(s: &str) -> f64 {
    // Validated during parse or construction.
    s.parse().unwrap_or(f64::NAN)
}

impl ProfileDocument {
    /// Converts without enforcing socket balance or declared-rate agreement;
    /// only structural validity is required. `verify` uses this to report on
    /// inconsistent documents instead of refusing them.
    pub fn to_profile_lenient(&self) -> Result<MultiEdgeProfile> {
        let profile = MultiEdgeProfile {
            sources: self.sources,
            vars: self
                .vars
                .iter()
                .map(|v| {
                    v.iter()
                        .map(|e| VarNodeEntry { coeff: num(&e.coeff), d1: e.d1, d2: e.d2 })
                        .collect()
                })
                .collect(),
            lowers: self
                .lowers
                .iter()
                .map(|v| {
                    v.iter()
                        .map(|e| LowerCheckEntry { coeff: num(&e.coeff), d1: e.d1 })
                        .collect()
                })
                .collect(),
            uppers: self
                .uppers
                .iter()
                .map(|e| UpperCheckEntry { coeff: num(&e.coeff), degrees: e.degrees.clone() })
                .collect(),
            declared: self
                .rates
                .iter()
                .map(|r| DeclaredRates {
                    r_plus: r.r_plus.as_deref().map(num),
                    r_minus: r.r_minus.as_deref().map(num),
                    sigma_plus: r.sigma_plus.as_deref().map(num),
                    sigma_minus: r.sigma_minus.as_deref().map(num),
                })
                .collect(),
        };
        profile.validate()?;
        Ok(profile)
    }

    /// Converts to a profile, enforcing socket balance within
    /// `CONSTRAINT_TOL` and declared-rate agreement within
    /// `DECLARED_RATE_TOL`.
    pub fn to_profile(&self) -> Result<MultiEdgeProfile> {
        let profile = self.to_profile_lenient()?;
        let report = profile.check_constraints();
        if !report.pass(CONSTRAINT_TOL) {
            let worst = report.worst().expect("report is never empty");
            return Err(Error::Semantic(format!(
                "constraint '{}' violated: residual {:.3e} exceeds {CONSTRAINT_TOL:.0e}",
                worst.name, worst.residual
            )));
        }
        for m in 0..profile.sources {
            let computed = profile.rates(m)?;
            let d = &profile.declared[m];
            for (name, declared, actual) in [
                ("r_plus", d.r_plus, computed.r_plus),
                ("r_minus", d.r_minus, computed.r_minus),
            ] {
                if let Some(v) = declared {
                    if (v - actual).abs() > DECLARED_RATE_TOL {
                        return Err(Error::Semantic(format!(
                            "source {} declares {name} = {v} but the profile computes {actual}",
                            m + 1
                        )));
                    }
                }
            }
        }
        Ok(profile)
    }

    /// Document form of a profile, formatting coefficients with the
    /// shortest representation that round-trips exactly.
    pub fn from_profile(profile: &MultiEdgeProfile) -> Result<Self> {
        profile.validate()?;
        let fmt = |x: f64| format!("{x}");
        Ok(ProfileDocument {
            version: 1,
            sources: profile.sources,
            vars: profile
                .vars
                .iter()
                .map(|v| {
                    v.iter()
                        .map(|e| DocVarEntry { coeff: fmt(e.coeff), d1: e.d1, d2: e.d2 })
                        .collect()
                })
                .collect(),
            lowers: profile
                .lowers
                .iter()
                .map(|v| {
                    v.iter()
                        .map(|e| DocLowerEntry { coeff: fmt(e.coeff), d1: e.d1 })
                        .collect()
                })
                .collect(),
            rates: profile
                .declared
                .iter()
                .map(|d| DocRates {
                    r_plus: d.r_plus.map(fmt),
                    r_minus: d.r_minus.map(fmt),
                    sigma_plus: d.sigma_plus.map(fmt),
                    sigma_minus: d.sigma_minus.map(fmt),
                })
                .collect(),
            uppers: profile
                .uppers
                .iter()
                .map(|e| DocUpperEntry { coeff: fmt(e.coeff), degrees: e.degrees.clone() })
                .collect(),
        })
    }
}

// ---------------------------------------------------------------------------
// Verification report
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct SourceVerify {
    /// 1-based source number.
    pub source: usize,
    pub computed: RateTriple,
    pub declared: DeclaredRates,
    /// |declared - computed| for each declared rate.
    pub rate_residuals: Vec<ConstraintItem>,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub constraints: ConstraintReport,
    pub sources: Vec<SourceVerify>,
    pub total_rate: f64,
    /// Combined system noise figure from the declared per-source
    /// thresholds, when every source declares one.
    pub sigma_sys_declared: Option<f64>,
    pub pass: bool,
}

/// Recomputes everything derivable from the document and compares it with
/// the declared figures. Inconsistencies land in the report, not in an
/// error; only structurally unusable documents fail.
pub fn verify(doc: &ProfileDocument) -> Result<VerifyReport> {
    let profile = doc.to_profile_lenient()?;
    let constraints = profile.check_constraints();
    let mut sources = Vec::with_capacity(profile.sources);
    let mut rates_ok = true;
    for m in 0..profile.sources {
        let computed = profile.rates(m)?;
        let declared = profile.declared[m];
        let mut rate_residuals = Vec::new();
        for (name, value, actual) in [
            ("r_plus", declared.r_plus, computed.r_plus),
            ("r_minus", declared.r_minus, computed.r_minus),
        ] {
            if let Some(v) = value {
                let residual = (v - actual).abs();
                rates_ok &= residual <= DECLARED_RATE_TOL;
                rate_residuals.push(ConstraintItem {
                    name: format!("source {} declared {name}", m + 1),
                    residual,
                });
            }
        }
        sources.push(SourceVerify {
            source: m + 1,
            computed,
            declared,
            rate_residuals,
        });
    }
    let declared_minus: Option<Vec<f64>> = profile
        .declared
        .iter()
        .map(|d| d.sigma_minus)
        .collect();
    let sigma_sys_declared = match declared_minus {
        Some(v) => Some(sigma_sys(&v)?),
        None => None,
    };
    let pass = constraints.pass(CONSTRAINT_TOL) && rates_ok;
    Ok(VerifyReport {
        constraints,
        sources,
        total_rate: profile.total_rate()?,
        sigma_sys_declared,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    const BUNDLED: &str = include_str!("../profiles/two_source.profile");

    #[test]
    fn bundled_document_round_trips_byte_for_byte() {
        let doc = parse(BUNDLED).unwrap();
        assert_eq!(serialize(&doc), BUNDLED);
    }

    #[test]
    fn bundled_document_matches_fixture() {
        let doc = parse(BUNDLED).unwrap();
        assert_eq!(doc.vars[0].len(), 12);
        assert_eq!(doc.vars[1].len(), 14);
        assert_eq!(doc.uppers.len(), 1);
        assert_eq!(doc.to_profile().unwrap(), fixtures::two_source());
    }

    #[test]
    fn document_round_trips_through_profile() {
        let p = fixtures::two_source();
        let doc = ProfileDocument::from_profile(&p).unwrap();
        let text = serialize(&doc);
        let doc2 = parse(&text).unwrap();
        assert_eq!(doc, doc2);
        assert_eq!(doc2.to_profile().unwrap(), p);
    }

    #[test]
    fn verify_reports_clean_profile() {
        let report = verify(&parse(BUNDLED).unwrap()).unwrap();
        assert!(report.pass);
        assert!((report.sources[0].computed.r_plus - 0.7).abs() < 1e-12);
        assert!((report.sources[0].computed.r_minus - 0.5).abs() < 1e-12);
        assert!((report.sources[1].computed.r_plus - 0.58).abs() < 1e-12);
        assert!((report.sources[1].computed.r_minus - 0.38).abs() < 1e-12);
        assert!((report.total_rate - 0.88).abs() < 1e-12);
        let s = report.sigma_sys_declared.unwrap();
        assert!((s - 0.7521).abs() < 5e-4);
    }

    #[test]
    fn verify_flags_wrong_declared_rate_without_failing() {
        let mut doc = parse(BUNDLED).unwrap();
        doc.rates[0].r_plus = Some("0.8".into());
        let report = verify(&doc).unwrap();
        assert!(!report.pass);
        let item = &report.sources[0].rate_residuals[0];
        assert!((item.residual - 0.1).abs() < 1e-9);
        // The strict conversion refuses the same document.
        let err = doc.to_profile().unwrap_err();
        assert!(err.to_string().contains("r_plus"));
    }

    #[test]
    fn tampered_coefficient_breaks_socket_balance() {
        let mut doc = parse(BUNDLED).unwrap();
        doc.lowers[0][0].coeff = "0.32".into(); // moves lower sockets by 0.3
        let err = doc.to_profile().unwrap_err();
        assert!(matches!(err, Error::Semantic(_)));
        assert!(err.to_string().contains("lower socket balance"));
    }

    #[test]
    fn comments_and_spacing_are_cosmetic() {
        let text = "# header\nversion 1\n  sources   1\n\n[source 1]  # inline\n var 1.0 3 0 # tail\ncheck 0.5 6\n";
        let doc = parse(text).unwrap();
        assert_eq!(doc.vars[0].len(), 1);
        assert_eq!(doc.vars[0][0].coeff, "1.0");
        let p = doc.to_profile().unwrap();
        assert_eq!(p.sources, 1);
        assert!((p.lower_sockets(0) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn syntax_errors_carry_positions() {
        let cases: &[(&str, usize)] = &[
            ("", 1),
            ("version 2\nsources 1\n", 1),
            ("version 1\n", 2),
            ("version 1\nsources 0\n", 2),
            ("version 1\nsources 1\nvar 0.5 2 0\n", 3),
            ("version 1\nsources 1\n[source 1]\nvar 0.5 2\n", 4),
            ("version 1\nsources 1\n[source 1]\nvar abc 2 0\n", 4),
            ("version 1\nsources 1\n[source 1]\nvar 0.5 2 0 9\n", 4),
            ("version 1\nsources 1\n[source 2]\n", 3),
            ("version 1\nsources 1\n[source 1]\nvar 1.0 2 0\n[source 1]\n", 5),
            ("version 1\nsources 1\n[source 1]\nfoo 1 2\n", 4),
            ("version 1\nsources 2\n[source 1]\nvar 1.0 2 0\n[upper]\ncheck 0.4 3\n", 6),
            ("version 1\nsources 1\n[source 1]\nvar 1.0 2 0\n[rates 1]\nr_plus 0.5\nr_plus 0.5\n", 7),
        ];
        for (text, want_line) in cases {
            match parse(text) {
                Err(Error::Syntax { line, .. }) => {
                    assert_eq!(line, *want_line, "wrong line for input {text:?}")
                }
                other => panic!("expected syntax error for {text:?}, got {other:?}"),
            }
        }
        // Missing sections surface at end of input.
        let text = "version 1\nsources 2\n[source 1]\nvar 1.0 2 0\n";
        match parse(text) {
            Err(Error::Syntax { line, message, .. }) => {
                assert_eq!(line, 5);
                assert!(message.contains("[source 2]"));
            }
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn verify_is_stable_under_round_trip() {
        let doc = parse(BUNDLED).unwrap();
        let again = parse(&serialize(&doc)).unwrap();
        let (a, b) = (verify(&doc).unwrap(), verify(&again).unwrap());
        assert_eq!(a.pass, b.pass);
        assert_eq!(a.total_rate, b.total_rate);
        assert_eq!(
            a.constraints.max_residual(),
            b.constraints.max_residual()
        );
    }
}
