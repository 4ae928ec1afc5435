//! Line-oriented text format for pulse sequences and bath spectra.
//!
//! ```text
//! # comment
//! rabi 5.37MHz
//! method quadrature:64
//!
//! spectrum nv:
//!   mode 1 -2.17MHz 0.163MHz
//!   mode 1 0MHz 0.163MHz
//!   mode 1 2.17MHz 0.163MHz
//!
//! seq ramsey:
//!   pulse X 90
//!   delay 400ns
//!   pulse X 90
//!
//! seq rdja:
//!   pulse X 90
//!   oracle U3
//!   include ramsey
//! ```
//!
//! Keywords are case-sensitive. Block bodies are indented. Durations take an
//! `ns` or `us` suffix written directly after the number; pulse angles are in
//! degrees. `oracle U1..U4` expands to the oracle's pulses and `include name`
//! splices in a sequence defined earlier in the file. Pulses use the document's
//! `rabi` setting wherever it appears, or 5.37 MHz when it is absent.

use std::fmt::Write as _;

use crate::bath::{BathSpectrum, Mode};
use crate::error::{Error, Location, Result};
use crate::protocols::{Oracle, DEFAULT_RABI_MHZ};
use crate::pulse::{rotation_pulse, Axis, EnsembleMethod, PulseSegment, PulseSequence};

#[derive(Debug, Clone, PartialEq)]
pub enum SeqItem {
    Pulse { axis: Axis, angle_deg: f64 },
    Delay { ns: f64 },
    Oracle(Oracle),
    Include(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct NamedSequence {
    pub name: String,
    pub items: Vec<SeqItem>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NamedSpectrum {
    pub name: String,
    /// Modes as written; weights are normalized when the spectrum is built.
    pub modes: Vec<Mode>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DslDocument {
    pub rabi_mhz: Option<f64>,
    pub method: Option<EnsembleMethod>,
    pub spectra: Vec<NamedSpectrum>,
    pub sequences: Vec<NamedSequence>,
}

impl DslDocument {
    pub fn rabi(&self) -> f64 {
        self.rabi_mhz.unwrap_or(DEFAULT_RABI_MHZ)
    }

    pub fn sequence_names(&self) -> impl Iterator<Item = &str> {
        self.sequences.iter().map(|s| s.name.as_str())
    }

    /// Expands the named sequence into finite pulses at the document's Rabi frequency.
    pub fn sequence(&self, name: &str) -> Result<PulseSequence> {
        let mut seq = PulseSequence::new(name);
        self.expand(name, &mut seq, 0)?;
        Ok(seq)
    }

    fn expand(&self, name: &str, out: &mut PulseSequence, depth: usize) -> Result<()> {
        let def = self
            .sequences
            .iter()
            .find(|s| s.name == name)
            .ok_or_else(|| Error::InvalidInput(format!("no sequence named `{name}`")))?;
        if depth > self.sequences.len() {
            return Err(Error::InvalidInput(format!("sequence `{name}` includes itself")));
        }
        let rabi = self.rabi();
        for item in &def.items {
            match item {
                SeqItem::Pulse { axis, angle_deg } => {
                    out.push(rotation_pulse(*axis, angle_deg.to_radians(), rabi)?);
                }
                SeqItem::Delay { ns } => {
                    out.push(PulseSegment::delay(*ns)?);
                }
                SeqItem::Oracle(o) => {
                    for p in o.pulses(rabi)? {
                        out.push(p);
                    }
                }
                SeqItem::Include(other) => self.expand(other, out, depth + 1)?,
            }
        }
        Ok(())
    }

    pub fn spectrum(&self, name: &str) -> Result<BathSpectrum> {
        let def = self
            .spectra
            .iter()
            .find(|s| s.name == name)
            .ok_or_else(|| Error::InvalidInput(format!("no spectrum named `{name}`")))?;
        BathSpectrum::new(def.modes.clone())
    }

    /// Canonical text form. Parsing it yields an equal document.
    pub fn to_dsl(&self) -> String {
        let mut out = String::new();
        if let Some(r) = self.rabi_mhz {
            let _ = writeln!(out, "rabi {r}MHz");
        }
        if let Some(m) = self.method {
            let _ = writeln!(out, "method {m}");
        }
        for s in &self.spectra {
            let _ = writeln!(out, "\nspectrum {}:", s.name);
            for m in &s.modes {
                let _ = writeln!(out, "  mode {} {}MHz {}MHz", m.weight, m.center_mhz, m.sigma_mhz);
            }
        }
        for s in &self.sequences {
            let _ = writeln!(out, "\nseq {}:", s.name);
            for item in &s.items {
                let _ = match item {
                    SeqItem::Pulse { axis, angle_deg } => {
                        writeln!(out, "  pulse {} {angle_deg}", axis.as_str())
                    }
                    SeqItem::Delay { ns } => writeln!(out, "  delay {ns}ns"),
                    SeqItem::Oracle(o) => writeln!(out, "  oracle {}", o.name()),
                    SeqItem::Include(n) => writeln!(out, "  include {n}"),
                };
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy)]
struct Token<'a> {
    text: &'a str,
    /// 1-based character column.
    column: usize,
}

fn tokenize(line: &str) -> Vec<Token<'_>> {
    let mut out = Vec::new();
    let mut start: Option<(usize, usize)> = None;
    for (col, (byte, ch)) in line.char_indices().enumerate() {
        if ch.is_whitespace() {
            if let Some((b, c)) = start.take() {
                out.push(Token { text: &line[b..byte], column: c + 1 });
            }
        } else if start.is_none() {
            start = Some((byte, col));
        }
    }
    if let Some((b, c)) = start {
        out.push(Token { text: &line[b..], column: c + 1 });
    }
    out
}

enum Block {
    None,
    Spectrum(usize),
    Seq,
}

struct Parser {
    doc: DslDocument,
    line: usize,
}

impl Parser {
    fn loc(&self, column: usize) -> Location {
        Location { line: self.line, column }
    }

    fn syntax(&self, column: usize, message: impl Into<String>) -> Error {
        Error::Syntax { loc: self.loc(column), message: message.into() }
    }

    fn expect_count(&self, toks: &[Token], n: usize, usage: &str) -> Result<()> {
        if toks.len() < n {
            let col = toks.last().map_or(1, |t| t.column + t.text.chars().count());
            return Err(self.syntax(col, format!("expected `{usage}`")));
        }
        if toks.len() > n {
            return Err(self.syntax(toks[n].column, format!("unexpected `{}`; expected `{usage}`", toks[n].text)));
        }
        Ok(())
    }

    fn number(&self, tok: Token) -> Result<f64> {
        let bad = |reason: &str| Error::MalformedNumber {
            loc: self.loc(tok.column),
            text: tok.text.to_string(),
            reason: reason.to_string(),
        };
        if !tok.text.starts_with(|c: char| c.is_ascii_digit() || matches!(c, '+' | '-' | '.')) {
            return Err(bad("not a number"));
        }
        let v: f64 = tok.text.parse().map_err(|_| bad("not a number"))?;
        if !v.is_finite() {
            return Err(bad("must be finite"));
        }
        Ok(v)
    }

    /// A number with one of `units` attached; returns the value and the matched unit index.
    fn quantity(&self, tok: Token, units: &[&str], next: Option<Token>) -> Result<(f64, usize)> {
        let split = tok
            .text
            .char_indices()
            .find(|&(i, c)| {
                c.is_ascii_alphabetic()
                    && !(matches!(c, 'e' | 'E')
                        && tok.text[i + 1..].starts_with(|d: char| d.is_ascii_digit() || d == '-' || d == '+'))
            })
            .map_or(tok.text.len(), |(i, _)| i);
        let (num, unit) = tok.text.split_at(split);
        let expected = units.join(" or ");
        if unit.is_empty() {
            // a detached unit like `400 ns` is reported where the unit should have started
            let column = tok.column + num.chars().count();
            let reason = match next {
                Some(n) if units.contains(&n.text) => {
                    format!("unit must follow the number without a space (`{num}{}`)", n.text)
                }
                _ => format!("missing unit; expected {expected}"),
            };
            return Err(Error::MalformedNumber { loc: self.loc(column), text: num.to_string(), reason });
        }
        let Some(k) = units.iter().position(|u| *u == unit) else {
            return Err(Error::MalformedNumber {
                loc: self.loc(tok.column + num.chars().count()),
                text: tok.text.to_string(),
                reason: format!("unknown unit `{unit}`; expected {expected}"),
            });
        };
        let v = self.number(Token { text: num, column: tok.column })?;
        Ok((v, k))
    }

    fn header_name(&self, toks: &[Token], keyword: &str) -> Result<String> {
        let usage = format!("{keyword} <name>:");
        let name_tok = match toks {
            [_, name] if name.text.ends_with(':') => {
                Token { text: &name.text[..name.text.len() - 1], column: name.column }
            }
            [_, name, colon] if colon.text == ":" => *name,
            [_] => return Err(self.syntax(toks[0].column + keyword.len(), format!("expected `{usage}`"))),
            _ => return Err(self.syntax(toks[1].column, format!("expected `{usage}`"))),
        };
        check_name(name_tok).map_err(|m| self.syntax(name_tok.column, m))?;
        let name = name_tok.text.to_string();
        let taken = match keyword {
            "seq" => self.doc.sequences.iter().any(|s| s.name == name),
            _ => self.doc.spectra.iter().any(|s| s.name == name),
        };
        if taken {
            return Err(Error::DuplicateName { loc: self.loc(name_tok.column), name });
        }
        Ok(name)
    }

    fn top_level(&mut self, toks: &[Token]) -> Result<Block> {
        let kw = toks[0];
        match kw.text {
            "rabi" => {
                self.expect_count(toks, 2, "rabi <float>MHz")?;
                if self.doc.rabi_mhz.is_some() {
                    return Err(self.syntax(kw.column, "rabi is already set"));
                }
                let (v, _) = self.quantity(toks[1], &["MHz"], None)?;
                if v <= 0.0 {
                    return Err(Error::MalformedNumber {
                        loc: self.loc(toks[1].column),
                        text: toks[1].text.to_string(),
                        reason: "Rabi frequency must be > 0".into(),
                    });
                }
                self.doc.rabi_mhz = Some(v);
                Ok(Block::None)
            }
            "method" => {
                self.expect_count(toks, 2, "method quadrature:N|mc:N[:SEED]")?;
                if self.doc.method.is_some() {
                    return Err(self.syntax(kw.column, "method is already set"));
                }
                let m: EnsembleMethod =
                    toks[1].text.parse().map_err(|e: Error| self.syntax(toks[1].column, e.to_string()))?;
                self.doc.method = Some(m);
                Ok(Block::None)
            }
            "spectrum" => {
                let name = self.header_name(toks, "spectrum")?;
                self.doc.spectra.push(NamedSpectrum { name, modes: Vec::new() });
                Ok(Block::Spectrum(self.line))
            }
            "seq" => {
                let name = self.header_name(toks, "seq")?;
                self.doc.sequences.push(NamedSequence { name, items: Vec::new() });
                Ok(Block::Seq)
            }
            other => Err(Error::UnknownKeyword { loc: self.loc(kw.column), keyword: other.to_string() }),
        }
    }

    fn spectrum_line(&mut self, toks: &[Token]) -> Result<()> {
        let kw = toks[0];
        if kw.text != "mode" {
            return Err(Error::UnknownKeyword { loc: self.loc(kw.column), keyword: kw.text.to_string() });
        }
        self.expect_count(toks, 4, "mode <weight> <center>MHz <sigma>MHz")?;
        let weight = self.number(toks[1])?;
        let (center, _) = self.quantity(toks[2], &["MHz"], toks.get(3).copied())?;
        let (sigma, _) = self.quantity(toks[3], &["MHz"], None)?;
        let bad = |t: Token, reason: &str| Error::MalformedNumber {
            loc: self.loc(t.column),
            text: t.text.to_string(),
            reason: reason.into(),
        };
        if weight < 0.0 {
            return Err(bad(toks[1], "weight must be >= 0"));
        }
        if sigma < 0.0 {
            return Err(bad(toks[3], "width must be >= 0"));
        }
        self.doc.spectra.last_mut().expect("inside a spectrum block").modes.push(Mode::new(weight, center, sigma));
        Ok(())
    }

    fn seq_line(&mut self, toks: &[Token]) -> Result<()> {
        let kw = toks[0];
        let item = match kw.text {
            "pulse" => {
                self.expect_count(toks, 3, "pulse <X|Y|-X|-Y> <angle_deg>")?;
                let axis: Axis = toks[1]
                    .text
                    .parse()
                    .map_err(|_| self.syntax(toks[1].column, format!("unknown axis `{}`", toks[1].text)))?;
                let angle_deg = self.number(toks[2])?;
                if angle_deg <= 0.0 {
                    return Err(Error::MalformedNumber {
                        loc: self.loc(toks[2].column),
                        text: toks[2].text.to_string(),
                        reason: "angle must be > 0".into(),
                    });
                }
                SeqItem::Pulse { axis, angle_deg }
            }
            "delay" => {
                if toks.len() < 2 {
                    return Err(self.syntax(kw.column + 5, "expected `delay <float>ns|us`"));
                }
                let (v, unit) = self.quantity(toks[1], &["ns", "us"], toks.get(2).copied())?;
                self.expect_count(toks, 2, "delay <float>ns|us")?;
                if v < 0.0 {
                    return Err(Error::MalformedNumber {
                        loc: self.loc(toks[1].column),
                        text: toks[1].text.to_string(),
                        reason: "duration must be >= 0".into(),
                    });
                }
                SeqItem::Delay { ns: if unit == 1 { v * 1e3 } else { v } }
            }
            "oracle" => {
                self.expect_count(toks, 2, "oracle <U1|U2|U3|U4>")?;
                let o: Oracle = toks[1]
                    .text
                    .parse()
                    .map_err(|_| self.syntax(toks[1].column, format!("unknown oracle `{}`", toks[1].text)))?;
                SeqItem::Oracle(o)
            }
            "include" => {
                self.expect_count(toks, 2, "include <name>")?;
                let name = toks[1].text;
                let current = &self.doc.sequences.last().expect("inside a seq block").name;
                let defined = self.doc.sequences[..self.doc.sequences.len() - 1].iter().any(|s| s.name == name);
                if !defined || name == current {
                    return Err(Error::UndefinedReference { loc: self.loc(toks[1].column), name: name.to_string() });
                }
                SeqItem::Include(name.to_string())
            }
            other => {
                return Err(Error::UnknownKeyword { loc: self.loc(kw.column), keyword: other.to_string() })
            }
        };
        self.doc.sequences.last_mut().expect("inside a seq block").items.push(item);
        Ok(())
    }
}

fn check_name(tok: Token) -> std::result::Result<(), String> {
    let mut chars = tok.text.chars();
    let ok = chars.next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'));
    if ok {
        Ok(())
    } else {
        Err(format!("invalid name `{}`", tok.text))
    }
}

pub fn parse_dsl(text: &str) -> Result<DslDocument> {
    let mut p = Parser { doc: DslDocument::default(), line: 0 };
    let mut block = Block::None;
    for (i, raw) in text.lines().enumerate() {
        p.line = i + 1;
        let line = raw.split('#').next().unwrap_or("");
        let toks = tokenize(line);
        if toks.is_empty() {
            continue;
        }
        let indented = line.starts_with(char::is_whitespace);
        block = match (indented, &block) {
            (false, Block::Spectrum(start)) if p.doc.spectra.last().is_some_and(|s| s.modes.is_empty()) => {
                return Err(Error::Syntax {
                    loc: Location { line: *start, column: 1 },
                    message: "spectrum has no modes".into(),
                })
            }
            (false, _) => p.top_level(&toks)?,
            (true, Block::Spectrum(_)) => {
                p.spectrum_line(&toks)?;
                continue;
            }
            (true, Block::Seq) => {
                p.seq_line(&toks)?;
                continue;
            }
            (true, Block::None) => return Err(p.syntax(toks[0].column, "indented line outside a block")),
        };
    }
    if let Block::Spectrum(start) = block {
        if p.doc.spectra.last().is_some_and(|s| s.modes.is_empty()) {
            return Err(Error::Syntax { loc: Location { line: start, column: 1 }, message: "spectrum has no modes".into() });
        }
    }
    for s in &p.doc.spectra {
        BathSpectrum::new(s.modes.clone())
            .map_err(|e| Error::Config(format!("spectrum `{}`: {e}", s.name)))?;
    }
    Ok(p.doc)
}
