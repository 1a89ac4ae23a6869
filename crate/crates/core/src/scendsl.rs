//! Line-oriented scenario description language.
//!
//! ```text
//! name <ident>                              # optional
//! modes <label>...
//! polarization on|off
//! preselect <amplitude>@<mode>[:<pol>] ...  # e.g. 1/sqrt2@D + i/sqrt2@A
//! stage <label>
//! beamsplitter <a> <b> <angle>              # in-place mixing of a and b
//! beamsplitter <in> <out1> <out2> <angle>   # unused input port is out2
//! beamsplitter <in1> <in2> <out1> <out2> <angle>
//! waveplate <arm> <angle>
//! phaseshifter <arm> <angle>
//! mirror <from> <to>
//! slot <arm>                                # coupling slot at current boundary
//! adjacency <node> <node>                   # arms or SOURCE/DETECTOR
//! postselect <amplitude>@<mode>[:<pol>] ...
//! ```
//!
//! Angles are rational multiples of pi (`pi/4`, `-3pi/4`, `0`). Amplitudes
//! are `[re]` or `[im]i` terms with an optional `/denominator`, where the
//! denominator may be `2`, `sqrt2` or `2sqrt2`; mixed values go in
//! parentheses, e.g. `(1/2+i/2)`. `#` starts a comment.

use std::collections::HashSet;
use std::fmt::Write as _;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::evolution::{Node, Scenario, Slot, Stage};
use crate::optics::{Angle, Element};
use crate::qstate::{is_valid_label, Basis, Operator, Pol, StateVector, TOL};

pub const FIG1_SOURCE: &str = "\
# Nested Mach-Zehnder interferometer. The inner interferometer (arms B, C)
# sits on arm D of the outer one and is balanced so that arm E is dark.
name fig1
modes S A B C D E F
polarization off
preselect 1@S
stage split_outer
beamsplitter S D A pi/4
slot D
stage split_inner
beamsplitter D C B pi/4
slot A
slot B
slot C
stage recombine_inner
beamsplitter B C F E pi/4
slot E
adjacency SOURCE A
adjacency SOURCE D
adjacency D B
adjacency D C
adjacency B C
adjacency B E
adjacency C E
adjacency A DETECTOR
adjacency E DETECTOR
postselect 1/sqrt2@A + i/sqrt2@E
";

pub const FIG2_SOURCE: &str = "\
# Same interferometer with wave plates inside the inner loop: B is rotated
# to the diagonal, C to the antidiagonal polarization. Detection behind an
# H polarizer.
name fig2
modes S A B C D E F
polarization on
preselect 1@S:H
stage split_outer
beamsplitter S D A pi/4
slot D
stage split_inner
beamsplitter D C B pi/4
waveplate B pi/4
waveplate C -pi/4
slot A
slot B
slot C
stage recombine_inner
beamsplitter B C F E pi/4
slot E
adjacency SOURCE A
adjacency SOURCE D
adjacency D B
adjacency D C
adjacency B C
adjacency B E
adjacency C E
adjacency A DETECTOR
adjacency E DETECTOR
postselect 1/sqrt2@A:H + i/sqrt2@E:H
";

pub const BUILTIN_NAMES: [&str; 2] = ["fig1", "fig2"];

pub fn builtin_scenario(name: &str) -> Result<Scenario> {
    match name {
        "fig1" => parse_scenario(FIG1_SOURCE),
        "fig2" => parse_scenario(FIG2_SOURCE),
        other => Err(Error::UnknownScenario(other.to_string())),
    }
}

/// Source position of a declaration (1-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Span {
    pub line: usize,
    pub column: usize,
}

/// Parsed text with the position of every directive.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSource {
    pub text: String,
    pub spans: Vec<(String, Span)>,
}

impl ScenarioSource {
    pub fn parse(&self) -> Result<Scenario> {
        parse_scenario(&self.text)
    }
}

impl From<&str> for ScenarioSource {
    fn from(text: &str) -> Self {
        let spans = lines(text)
            .filter_map(|(line, toks)| toks.first().map(|t| (t.text.to_string(), Span { line, column: t.column })))
            .collect();
        ScenarioSource {
            text: text.to_string(),
            spans,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Token<'a> {
    text: &'a str,
    column: usize,
}

fn lines(text: &str) -> impl Iterator<Item = (usize, Vec<Token<'_>>)> {
    text.lines().enumerate().map(|(i, raw)| {
        let content = raw.split('#').next().unwrap_or("");
        (i + 1, tokenize(content))
    })
}

fn tokenize(s: &str) -> Vec<Token<'_>> {
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    let mut col_of = Vec::with_capacity(s.len() + 1);
    let mut col = 1;
    for (b, _) in s.char_indices() {
        while col_of.len() < b {
            col_of.push(col);
        }
        col_of.push(col);
        col += 1;
    }
    col_of.resize(s.len() + 1, col);
    for (b, ch) in s.char_indices() {
        if ch.is_whitespace() {
            if let Some(st) = start.take() {
                out.push(Token {
                    text: &s[st..b],
                    column: col_of[st],
                });
            }
        } else if start.is_none() {
            start = Some(b);
        }
    }
    if let Some(st) = start {
        out.push(Token {
            text: &s[st..],
            column: col_of[st],
        });
    }
    out
}

fn perr(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        column,
        message: message.into(),
    }
}

struct StateTerm {
    amp: Complex64,
    mode: String,
    pol: Option<Pol>,
    column: usize,
}

/// Stage label, its line, and its elements with their lines.
type PendingStage = (String, usize, Vec<(usize, Element)>);

struct Builder {
    name: Option<String>,
    modes: Option<Vec<String>>,
    polarization: Option<bool>,
    basis: Option<Basis>,
    preselect: Option<StateVector>,
    postselect: Option<StateVector>,
    stages: Vec<PendingStage>,
    slots: Vec<Slot>,
    adjacency: Vec<(Node, Node)>,
}

impl Builder {
    /// Freezes the basis on first use.
    fn basis(&mut self, line: usize, column: usize) -> Result<&Basis> {
        if self.basis.is_none() {
            let modes = self
                .modes
                .clone()
                .ok_or_else(|| perr(line, column, "`modes` must be declared first"))?;
            let b = Basis::new(modes, self.polarization.unwrap_or(false))
                .map_err(|e| perr(line, column, e.to_string()))?;
            self.basis = Some(b);
        }
        Ok(self.basis.as_ref().unwrap())
    }

    fn arm(&mut self, tok: Token<'_>, line: usize) -> Result<String> {
        let basis = self.basis(line, tok.column)?;
        if basis.contains(tok.text) {
            Ok(tok.text.to_string())
        } else {
            Err(perr(line, tok.column, format!("unknown arm `{}`", tok.text)))
        }
    }
}

/// Parses scenario text. Every error carries the line and column of the
/// offending token.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let mut b = Builder {
        name: None,
        modes: None,
        polarization: None,
        basis: None,
        preselect: None,
        postselect: None,
        stages: Vec::new(),
        slots: Vec::new(),
        adjacency: Vec::new(),
    };
    let mut last_line = 0;
    for (line, toks) in lines(text) {
        last_line = line;
        let Some(&head) = toks.first() else { continue };
        let args = &toks[1..];
        let arity = |n: usize| -> Result<()> {
            if args.len() != n {
                Err(perr(
                    line,
                    head.column,
                    format!("`{}` takes {n} argument(s), found {}", head.text, args.len()),
                ))
            } else {
                Ok(())
            }
        };
        match head.text {
            "name" => {
                arity(1)?;
                if b.name.is_some() {
                    return Err(perr(line, head.column, "duplicate `name`"));
                }
                b.name = Some(args[0].text.to_string());
            }
            "modes" => {
                if b.modes.is_some() {
                    return Err(perr(line, head.column, "duplicate `modes`"));
                }
                if args.is_empty() {
                    return Err(perr(line, head.column, "`modes` needs at least one label"));
                }
                let mut seen = HashSet::new();
                for t in args {
                    if !is_valid_label(t.text) {
                        return Err(perr(line, t.column, format!("invalid arm label `{}`", t.text)));
                    }
                    if !seen.insert(t.text) {
                        return Err(perr(line, t.column, format!("duplicate arm label `{}`", t.text)));
                    }
                }
                b.modes = Some(args.iter().map(|t| t.text.to_string()).collect());
            }
            "polarization" => {
                arity(1)?;
                if b.polarization.is_some() {
                    return Err(perr(line, head.column, "duplicate `polarization`"));
                }
                if b.basis.is_some() {
                    return Err(perr(
                        line,
                        head.column,
                        "`polarization` must precede states, stages, slots and adjacency",
                    ));
                }
                b.polarization = Some(match args[0].text {
                    "on" => true,
                    "off" => false,
                    other => {
                        return Err(perr(
                            line,
                            args[0].column,
                            format!("expected `on` or `off`, found `{other}`"),
                        ))
                    }
                });
            }
            "preselect" | "postselect" => {
                let basis = b.basis(line, head.column)?.clone();
                let terms = parse_state_terms(text_after(text, line, head), line, head, &basis)?;
                let state = build_state(&basis, terms, line)?;
                let slot = if head.text == "preselect" {
                    &mut b.preselect
                } else {
                    &mut b.postselect
                };
                if slot.is_some() {
                    return Err(perr(line, head.column, format!("duplicate `{}`", head.text)));
                }
                *slot = Some(state);
            }
            "stage" => {
                arity(1)?;
                b.basis(line, head.column)?;
                let label = args[0];
                if !is_stage_label(label.text) {
                    return Err(perr(line, label.column, format!("invalid stage label `{}`", label.text)));
                }
                if b.stages.iter().any(|(l, _, _)| l == label.text) {
                    return Err(perr(
                        line,
                        label.column,
                        format!("duplicate stage label `{}`", label.text),
                    ));
                }
                b.stages.push((label.text.to_string(), line, Vec::new()));
            }
            "beamsplitter" | "waveplate" | "phaseshifter" | "mirror" => {
                if b.stages.is_empty() {
                    return Err(perr(
                        line,
                        head.column,
                        format!("`{}` outside of a stage", head.text),
                    ));
                }
                let element = parse_element(&mut b, head, args, line)?;
                b.stages.last_mut().unwrap().2.push((line, element));
            }
            "slot" => {
                arity(1)?;
                let arm = b.arm(args[0], line)?;
                if b.slots.iter().any(|s| s.arm == arm) {
                    return Err(perr(line, args[0].column, format!("duplicate slot for arm `{arm}`")));
                }
                b.slots.push(Slot {
                    arm,
                    boundary: b.stages.len(),
                });
            }
            "adjacency" => {
                arity(2)?;
                let mut nodes = Vec::with_capacity(2);
                for &t in args {
                    nodes.push(match t.text {
                        "SOURCE" => Node::Source,
                        "DETECTOR" => Node::Detector,
                        _ => Node::Arm(b.arm(t, line)?),
                    });
                }
                if nodes[0] == nodes[1] {
                    return Err(perr(line, args[1].column, format!("self-adjacency of `{}`", args[1].text)));
                }
                b.adjacency.push((nodes[0].clone(), nodes[1].clone()));
            }
            other => {
                return Err(perr(line, head.column, format!("unknown directive `{other}`")));
            }
        }
    }

    let eof = last_line + 1;
    let basis = b.basis(eof, 1)?.clone();
    let preselect = b
        .preselect
        .take()
        .ok_or_else(|| perr(eof, 1, "missing `preselect`"))?;
    let postselect = b
        .postselect
        .take()
        .ok_or_else(|| perr(eof, 1, "missing `postselect`"))?;
    let stages = b
        .stages
        .into_iter()
        .map(|(label, _, elements)| {
            for (line, e) in &elements {
                e.operator(&basis).map_err(|err| perr(*line, 1, err.to_string()))?;
            }
            Stage::from_elements(label, elements.into_iter().map(|(_, e)| e).collect(), &basis)
        })
        .collect::<Result<Vec<_>>>()?;

    let scenario = Scenario::new(
        b.name.unwrap_or_else(|| "scenario".to_string()),
        basis,
        stages,
        preselect,
        postselect,
        b.adjacency,
        b.slots,
    );
    if let Some(d) = validate(&scenario).into_iter().next() {
        return Err(perr(eof, 1, format!("invalid scenario: {}", d.message)));
    }
    Ok(scenario)
}

fn is_stage_label(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

/// Text of `line` after the directive token `head`.
fn text_after<'a>(text: &'a str, line: usize, head: Token<'_>) -> &'a str {
    let raw = text.lines().nth(line - 1).unwrap_or("");
    let content = raw.split('#').next().unwrap_or("");
    let start = content
        .char_indices()
        .nth(head.column - 1)
        .map(|(b, _)| b)
        .unwrap_or(0)
        + head.text.len();
    &content[start..]
}

fn parse_element(b: &mut Builder, head: Token<'_>, args: &[Token<'_>], line: usize) -> Result<Element> {
    let angle = |t: Token<'_>| -> Result<Angle> { t.text.parse::<Angle>().map_err(|m| perr(line, t.column, m)) };
    let arity_err = |expect: &str| {
        perr(
            line,
            head.column,
            format!("`{}` expects {expect}, found {} argument(s)", head.text, args.len()),
        )
    };
    match head.text {
        "beamsplitter" => {
            if !(3..=5).contains(&args.len()) {
                return Err(arity_err("2 to 4 arms followed by an angle"));
            }
            let (arm_toks, angle_tok) = args.split_at(args.len() - 1);
            let angle = angle(angle_tok[0])?;
            let mut arms = Vec::with_capacity(arm_toks.len());
            for &t in arm_toks {
                arms.push(b.arm(t, line)?);
            }
            let (inputs, outputs) = match arms.as_slice() {
                [a, c] => ([a.clone(), c.clone()], [a.clone(), c.clone()]),
                [i, o1, o2] => ([i.clone(), o2.clone()], [o1.clone(), o2.clone()]),
                [i1, i2, o1, o2] => ([i1.clone(), i2.clone()], [o1.clone(), o2.clone()]),
                _ => unreachable!(),
            };
            if inputs[0] == inputs[1] {
                let col = arm_toks[arm_toks.len() - 1].column;
                return Err(perr(
                    line,
                    col,
                    format!("beamsplitter operands identical: `{}`", inputs[0]),
                ));
            }
            if outputs[0] == outputs[1] {
                let col = arm_toks[arm_toks.len() - 1].column;
                return Err(perr(
                    line,
                    col,
                    format!("beamsplitter outputs identical: `{}`", outputs[0]),
                ));
            }
            Ok(Element::BeamSplitter {
                inputs,
                outputs,
                angle,
            })
        }
        "waveplate" | "phaseshifter" => {
            if args.len() != 2 {
                return Err(arity_err("an arm and an angle"));
            }
            let arm = b.arm(args[0], line)?;
            let a = angle(args[1])?;
            if head.text == "waveplate" {
                if !b.basis(line, head.column)?.polarization() {
                    return Err(perr(line, head.column, "`waveplate` requires `polarization on`"));
                }
                Ok(Element::WavePlate { arm, rotation: a })
            } else {
                Ok(Element::PhaseShifter { arm, phase: a })
            }
        }
        "mirror" => {
            if args.len() != 2 {
                return Err(arity_err("two arms"));
            }
            let from = b.arm(args[0], line)?;
            let to = b.arm(args[1], line)?;
            if from == to {
                return Err(perr(line, args[1].column, format!("mirror operands identical: `{to}`")));
            }
            Ok(Element::Mirror { from, to })
        }
        _ => unreachable!(),
    }
}

fn build_state(basis: &Basis, terms: Vec<StateTerm>, line: usize) -> Result<StateVector> {
    for t in &terms {
        if !basis.contains(&t.mode) {
            return Err(perr(line, t.column, format!("unknown arm `{}`", t.mode)));
        }
        if basis.polarization() && t.pol.is_none() {
            return Err(perr(
                line,
                t.column,
                format!("term on `{}` needs a polarization (`:H` or `:V`)", t.mode),
            ));
        }
        if !basis.polarization() && t.pol.is_some() {
            return Err(perr(
                line,
                t.column,
                format!("term on `{}` has a polarization but `polarization off`", t.mode),
            ));
        }
    }
    StateVector::from_terms(basis, terms.iter().map(|t| (t.amp, t.mode.as_str(), t.pol)))
        .map_err(|e| perr(line, 1, e.to_string()))
}

/// Character cursor over one line tail, tracking the source column.
struct Cursor {
    chars: Vec<char>,
    pos: usize,
    base_column: usize,
    line: usize,
}

impl Cursor {
    fn new(src: &str, base_column: usize, line: usize) -> Self {
        Cursor {
            chars: src.chars().collect(),
            pos: 0,
            base_column,
            line,
        }
    }

    fn column(&self) -> usize {
        self.base_column + self.pos
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(char::is_whitespace) {
            self.pos += 1;
        }
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        perr(self.line, self.column(), msg)
    }

    fn take_while(&mut self, f: impl Fn(char) -> bool) -> String {
        let start = self.pos;
        while self.peek().is_some_and(&f) {
            self.pos += 1;
        }
        self.chars[start..self.pos].iter().collect()
    }
}

fn parse_state_terms(tail: &str, line: usize, head: Token<'_>, basis: &Basis) -> Result<Vec<StateTerm>> {
    let mut cur = Cursor::new(tail, head.column + head.text.len(), line);
    let mut terms = Vec::new();
    cur.skip_ws();
    if cur.peek().is_none() {
        return Err(perr(line, head.column, format!("`{}` needs at least one term", head.text)));
    }
    loop {
        cur.skip_ws();
        let sign = match cur.peek() {
            Some('+') if !terms.is_empty() => {
                cur.pos += 1;
                1.0
            }
            Some('-') => {
                cur.pos += 1;
                -1.0
            }
            _ if terms.is_empty() => 1.0,
            Some(c) => return Err(cur.err(format!("expected `+` or `-` between terms, found `{c}`"))),
            None => unreachable!(),
        };
        cur.skip_ws();
        let column = cur.column();
        let amp = if cur.peek() == Some('(') {
            cur.pos += 1;
            let inner = cur.take_while(|c| c != ')');
            if cur.peek() != Some(')') {
                return Err(perr(line, column, "unclosed `(` in amplitude"));
            }
            cur.pos += 1;
            parse_complex_sum(&inner).map_err(|m| perr(line, column, m))?
        } else {
            let coeff = cur.take_while(|c| c != '@' && !c.is_whitespace());
            parse_coefficient(&coeff).map_err(|m| perr(line, column, m))?
        };
        if cur.peek() != Some('@') {
            return Err(cur.err("expected `@<mode>` after amplitude"));
        }
        cur.pos += 1;
        let mode_col = cur.column();
        let mode = cur.take_while(|c| c.is_ascii_alphanumeric() || c == '_');
        if mode.is_empty() {
            return Err(perr(line, mode_col, "missing mode label after `@`"));
        }
        if !basis.contains(&mode) {
            return Err(perr(line, mode_col, format!("unknown arm `{mode}`")));
        }
        let pol = if cur.peek() == Some(':') {
            cur.pos += 1;
            let pc = cur.column();
            match cur.take_while(|c| c.is_ascii_alphanumeric()).as_str() {
                "H" => Some(Pol::H),
                "V" => Some(Pol::V),
                other => return Err(perr(line, pc, format!("unknown polarization `{other}`"))),
            }
        } else {
            None
        };
        terms.push(StateTerm {
            amp: amp * sign,
            mode,
            pol,
            column,
        });
        cur.skip_ws();
        if cur.peek().is_none() {
            break;
        }
    }
    Ok(terms)
}

/// `(a ± b ± ...)` body: a sum of coefficient terms.
fn parse_complex_sum(s: &str) -> std::result::Result<Complex64, String> {
    let chars: Vec<char> = s.chars().filter(|c| !c.is_whitespace()).collect();
    if chars.is_empty() {
        return Err("empty parenthesized amplitude".into());
    }
    let mut parts = Vec::new();
    let mut start = 0;
    for i in 1..chars.len() {
        let c = chars[i];
        if (c == '+' || c == '-') && !matches!(chars[i - 1], 'e' | 'E' | '+' | '-') {
            parts.push(chars[start..i].iter().collect::<String>());
            start = i;
        }
    }
    parts.push(chars[start..].iter().collect());
    parts.iter().try_fold(Complex64::new(0.0, 0.0), |acc, p| {
        let p = p.strip_prefix('+').unwrap_or(p);
        Ok(acc + parse_coefficient(p)?)
    })
}

/// `[sign][magnitude][i][/denominator]`, e.g. `1`, `-0.5`, `i/sqrt2`,
/// `3e-2i`, `1/2sqrt2`.
fn parse_coefficient(s: &str) -> std::result::Result<Complex64, String> {
    let bad = || format!("invalid amplitude `{s}`");
    let (neg, body) = match s.as_bytes().first() {
        Some(b'-') => (true, &s[1..]),
        Some(b'+') => (false, &s[1..]),
        _ => (false, s),
    };
    let (numer, denom) = match body.split_once('/') {
        Some((n, d)) => (n, Some(d)),
        None => (body, None),
    };
    let (mag, imag) = match numer.strip_suffix('i') {
        Some(m) => (m, true),
        None => (numer, false),
    };
    if mag.is_empty() && !imag {
        return Err(bad());
    }
    let mut value = if mag.is_empty() {
        1.0
    } else {
        parse_decimal(mag).ok_or_else(bad)?
    };
    if let Some(d) = denom {
        value /= parse_denominator(d).ok_or_else(bad)?;
    }
    if neg {
        value = -value;
    }
    Ok(if imag {
        Complex64::new(0.0, value)
    } else {
        Complex64::new(value, 0.0)
    })
}

fn parse_decimal(s: &str) -> Option<f64> {
    let ok = s.chars().next().is_some_and(|c| c.is_ascii_digit() || c == '.')
        && s.chars().all(|c| c.is_ascii_digit() || matches!(c, '.' | 'e' | 'E' | '+' | '-'));
    if !ok {
        return None;
    }
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// `n`, `sqrtn`, or `m sqrtn` without the space.
fn parse_denominator(s: &str) -> Option<f64> {
    let v = match s.find("sqrt") {
        Some(p) => {
            let m = if p == 0 { 1.0 } else { parse_decimal(&s[..p])? };
            m * parse_decimal(&s[p + 4..])?.sqrt()
        }
        None => parse_decimal(s)?,
    };
    (v != 0.0 && v.is_finite()).then_some(v)
}

/// Canonical text for a scenario; [`parse_scenario`] inverts it.
pub fn serialize(scenario: &Scenario) -> Result<String> {
    let basis = scenario.basis();
    let mut out = String::new();
    writeln!(out, "name {}", scenario.name()).unwrap();
    writeln!(out, "modes {}", basis.modes().join(" ")).unwrap();
    writeln!(
        out,
        "polarization {}",
        if basis.polarization() { "on" } else { "off" }
    )
    .unwrap();
    writeln!(out, "preselect {}", format_state(scenario.preselect())?).unwrap();
    let slots_at = |b: usize, out: &mut String| {
        let mut at: Vec<&Slot> = scenario.slots().iter().filter(|s| s.boundary == b).collect();
        at.sort_by_key(|s| basis.mode_index(&s.arm).unwrap_or(usize::MAX));
        for s in at {
            writeln!(out, "slot {}", s.arm).unwrap();
        }
    };
    slots_at(0, &mut out);
    for (i, stage) in scenario.stages().iter().enumerate() {
        if stage.elements().is_empty()
            && stage.unitary().max_abs_diff(&Operator::identity(basis))? > 0.0
        {
            return Err(Error::Unserializable(format!(
                "stage `{}` holds a raw operator with no element description",
                stage.label()
            )));
        }
        writeln!(out, "stage {}", stage.label()).unwrap();
        for e in stage.elements() {
            writeln!(out, "{}", format_element(e)).unwrap();
        }
        slots_at(i + 1, &mut out);
    }
    for (a, b) in scenario.adjacency() {
        writeln!(out, "adjacency {a} {b}").unwrap();
    }
    writeln!(out, "postselect {}", format_state(scenario.postselect())?).unwrap();
    Ok(out)
}

fn format_element(e: &Element) -> String {
    match e {
        Element::BeamSplitter {
            inputs,
            outputs,
            angle,
        } => {
            if inputs == outputs {
                format!("beamsplitter {} {} {angle}", inputs[0], inputs[1])
            } else if inputs[1] == outputs[1] {
                format!("beamsplitter {} {} {} {angle}", inputs[0], outputs[0], outputs[1])
            } else {
                format!(
                    "beamsplitter {} {} {} {} {angle}",
                    inputs[0], inputs[1], outputs[0], outputs[1]
                )
            }
        }
        Element::WavePlate { arm, rotation } => format!("waveplate {arm} {rotation}"),
        Element::PhaseShifter { arm, phase } => format!("phaseshifter {arm} {phase}"),
        Element::Mirror { from, to } => format!("mirror {from} {to}"),
    }
}

fn format_state(state: &StateVector) -> Result<String> {
    let basis = state.basis();
    let mut out = String::new();
    for (idx, &a) in state.amplitudes().iter().enumerate() {
        if a.re == 0.0 && a.im == 0.0 {
            continue;
        }
        let (mode, pol) = basis.element(idx);
        let (negative, amp) = format_amplitude(a);
        if out.is_empty() {
            if negative {
                out.push('-');
            }
        } else {
            out.push_str(if negative { " - " } else { " + " });
        }
        out.push_str(&amp);
        out.push('@');
        out.push_str(&basis.modes()[mode]);
        if let Some(p) = pol {
            write!(out, ":{p}").unwrap();
        }
    }
    if out.is_empty() {
        return Err(Error::Unserializable("zero state vector".into()));
    }
    Ok(out)
}

/// Returns `(leading sign negative, literal without leading sign)`.
fn format_amplitude(a: Complex64) -> (bool, String) {
    if a.im == 0.0 {
        (a.re < 0.0, format_magnitude(a.re.abs()))
    } else if a.re == 0.0 {
        (a.im < 0.0, imaginary_literal(a.im.abs()))
    } else {
        let re = format!("{}{}", if a.re < 0.0 { "-" } else { "" }, format_magnitude(a.re.abs()));
        let sign = if a.im < 0.0 { '-' } else { '+' };
        (false, format!("({re}{sign}{})", imaginary_literal(a.im.abs())))
    }
}

fn imaginary_literal(mag: f64) -> String {
    let m = format_magnitude(mag);
    if m == "1" {
        "i".into()
    } else if let Some(rest) = m.strip_prefix("1/") {
        format!("i/{rest}")
    } else {
        format!("{m}i")
    }
}

/// Radical forms for the constants the reference states use, shortest
/// round-trip decimal otherwise.
fn format_magnitude(x: f64) -> String {
    let s2 = std::f64::consts::SQRT_2;
    for (v, text) in [
        (1.0, "1"),
        (1.0 / s2, "1/sqrt2"),
        (0.5, "1/2"),
        (0.5 / s2, "1/2sqrt2"),
    ] {
        if (x - v).abs() <= 4.0 * f64::EPSILON * v {
            return text.to_string();
        }
    }
    format!("{x:?}")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiagnosticKind {
    Normalization,
    Unitarity,
    Basis,
    Adjacency,
    Slot,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub kind: DiagnosticKind,
    pub message: String,
}

/// One diagnostic per violated scenario invariant; empty when valid.
pub fn validate(scenario: &Scenario) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let mut push = |kind, message: String| out.push(Diagnostic { kind, message });
    let basis = scenario.basis();

    for (what, st) in [("preselect", scenario.preselect()), ("postselect", scenario.postselect())] {
        if st.basis() != basis {
            push(DiagnosticKind::Basis, format!("{what} state is on a different basis"));
        } else if !st.is_normalized() {
            push(
                DiagnosticKind::Normalization,
                format!("{what} state has squared norm {:.15}, expected 1", st.norm_sqr()),
            );
        }
    }
    for stage in scenario.stages() {
        let u = stage.unitary();
        if u.basis() != basis {
            push(
                DiagnosticKind::Basis,
                format!("stage `{}` acts on a different basis", stage.label()),
            );
            continue;
        }
        let r = u.unitarity_residual();
        if r > TOL {
            push(
                DiagnosticKind::Unitarity,
                format!("stage `{}` is not unitary (residual {r:.3e})", stage.label()),
            );
        }
    }

    let mut in_graph: HashSet<&str> = HashSet::new();
    let mut sentinels = (false, false);
    for (a, b) in scenario.adjacency() {
        for n in [a, b] {
            match n {
                Node::Source => sentinels.0 = true,
                Node::Detector => sentinels.1 = true,
                Node::Arm(x) if !basis.contains(x) => push(
                    DiagnosticKind::Adjacency,
                    format!("adjacency references unknown arm `{x}`"),
                ),
                Node::Arm(x) => {
                    in_graph.insert(x);
                }
            }
        }
    }
    let mut seen = HashSet::new();
    for slot in scenario.slots() {
        if !basis.contains(&slot.arm) {
            push(DiagnosticKind::Slot, format!("slot on unknown arm `{}`", slot.arm));
            continue;
        }
        if slot.boundary > scenario.final_boundary() {
            push(
                DiagnosticKind::Slot,
                format!("slot `{}` at boundary {} beyond the last stage", slot.arm, slot.boundary),
            );
        }
        if !seen.insert(slot.arm.as_str()) {
            push(DiagnosticKind::Slot, format!("duplicate slot for arm `{}`", slot.arm));
        }
        if !in_graph.contains(slot.arm.as_str()) {
            push(
                DiagnosticKind::Adjacency,
                format!("slot arm `{}` missing from the adjacency graph", slot.arm),
            );
        }
    }
    if !scenario.slots().is_empty() {
        if !sentinels.0 {
            push(DiagnosticKind::Adjacency, "adjacency graph lacks SOURCE".into());
        }
        if !sentinels.1 {
            push(DiagnosticKind::Adjacency, "adjacency graph lacks DETECTOR".into());
        }
    }
    out
}

/// Structural equality with amplitudes and stage matrices compared to `tol`.
pub fn equivalent(a: &Scenario, b: &Scenario, tol: f64) -> bool {
    let close = |x: &StateVector, y: &StateVector| x.max_abs_diff(y).is_ok_and(|d| d <= tol);
    a.name() == b.name()
        && a.basis() == b.basis()
        && a.slots() == b.slots()
        && a.adjacency() == b.adjacency()
        && a.stages().len() == b.stages().len()
        && a.stages().iter().zip(b.stages()).all(|(s, t)| {
            s.label() == t.label()
                && s.elements() == t.elements()
                && s.unitary().max_abs_diff(t.unitary()).is_ok_and(|d| d <= tol)
        })
        && close(a.preselect(), b.preselect())
        && close(a.postselect(), b.postselect())
}
