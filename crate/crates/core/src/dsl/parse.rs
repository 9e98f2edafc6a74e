use std::collections::BTreeSet;

use crate::apparatus::{is_identifier, Apparatus, Detector, DetectorBank, Stage, UNDETECTED};
use crate::device::{DeviceOp, HALF_SILVERED};
use crate::matrix::Matrix;
use crate::state::{norm_sqr, Amplitude, ProbabilityState, NORM_TOLERANCE};

use super::{ExperimentDoc, ParseError, SOURCE_NORM_TOLERANCE};

const HEADER_KEYWORDS: [&str; 3] = ["experiment", "modes", "source"];
const STAGE_KEYWORDS: [&str; 6] = ["H", "R", "X", "PHASE", "OP", "DETECT"];

#[derive(Debug, Clone, Copy)]
struct Token<'a> {
    col: usize,
    text: &'a str,
}

struct Line<'a> {
    number: usize,
    text: &'a str,
    tokens: Vec<Token<'a>>,
}

type PResult<T> = Result<T, ParseError>;

impl<'a> Line<'a> {
    fn error_at(&self, col: usize, message: impl Into<String>) -> ParseError {
        ParseError {
            line: self.number,
            column: col,
            message: message.into(),
            snippet: self.text.to_owned(),
        }
    }

    fn error(&self, tok: Token<'_>, message: impl Into<String>) -> ParseError {
        self.error_at(tok.col, message)
    }

    /// Column just past the last character, for missing arguments.
    fn end_col(&self) -> usize {
        self.text.chars().count() + 1
    }

    fn arg(&self, i: usize, what: &str) -> PResult<Token<'a>> {
        self.tokens
            .get(i)
            .copied()
            .ok_or_else(|| self.error_at(self.end_col(), format!("expected {what}")))
    }

    fn no_more(&self, i: usize) -> PResult<()> {
        match self.tokens.get(i) {
            Some(t) => Err(self.error(*t, format!("unexpected token `{}`", t.text))),
            None => Ok(()),
        }
    }

    fn keyword(&self) -> Token<'a> {
        self.tokens[0]
    }
}

fn tokenize(text: &str) -> Vec<Line<'_>> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let code = raw.split('#').next().unwrap_or("");
        let mut tokens = Vec::new();
        let mut start: Option<(usize, usize)> = None;
        for (col, (byte, ch)) in code.char_indices().enumerate() {
            match (ch.is_whitespace(), start) {
                (false, None) => start = Some((col + 1, byte)),
                (true, Some((c, b))) => {
                    tokens.push(Token { col: c, text: &code[b..byte] });
                    start = None;
                }
                _ => {}
            }
        }
        if let Some((c, b)) = start {
            tokens.push(Token { col: c, text: &code[b..] });
        }
        if !tokens.is_empty() {
            out.push(Line {
                number: idx + 1,
                text: raw,
                tokens,
            });
        }
    }
    out
}

fn int(line: &Line<'_>, tok: Token<'_>) -> PResult<usize> {
    if tok.text.is_empty() || !tok.text.bytes().all(|b| b.is_ascii_digit()) {
        return Err(line.error(tok, format!("malformed integer `{}`", tok.text)));
    }
    tok.text
        .parse()
        .map_err(|_| line.error(tok, format!("malformed integer `{}`", tok.text)))
}

fn mode(line: &Line<'_>, tok: Token<'_>, n_modes: usize) -> PResult<usize> {
    let m = int(line, tok)?;
    if m >= n_modes {
        return Err(line.error(tok, format!("mode index {m} out of range for {n_modes} modes")));
    }
    Ok(m)
}

fn float_text(text: &str) -> Option<f64> {
    let looks_numeric = !text.is_empty()
        && text
            .bytes()
            .all(|b| b.is_ascii_digit() || matches!(b, b'.' | b'e' | b'E' | b'+' | b'-'));
    match text.parse::<f64>() {
        Ok(x) if looks_numeric && x.is_finite() => Some(x),
        _ => None,
    }
}

fn keyed_float(line: &Line<'_>, tok: Token<'_>, key: &str) -> PResult<f64> {
    let value = tok
        .text
        .strip_prefix(key)
        .and_then(|v| v.strip_prefix('='))
        .ok_or_else(|| line.error(tok, format!("expected {key}=FLOAT, found `{}`", tok.text)))?;
    float_text(value).ok_or_else(|| line.error(tok, format!("malformed number `{value}`")))
}

fn complex(line: &Line<'_>, tok: Token<'_>) -> PResult<Amplitude> {
    let parsed = tok
        .text
        .strip_prefix('(')
        .and_then(|t| t.strip_suffix(')'))
        .and_then(|t| t.split_once(','))
        .and_then(|(re, im)| Some(Amplitude::new(float_text(re)?, float_text(im)?)));
    parsed.ok_or_else(|| line.error(tok, format!("malformed complex number `{}`", tok.text)))
}

fn distinct(line: &Line<'_>, modes: &[(usize, Token<'_>)]) -> PResult<Vec<usize>> {
    let mut seen = BTreeSet::new();
    for (m, tok) in modes {
        if !seen.insert(*m) {
            return Err(line.error(*tok, format!("mode {m} repeated")));
        }
    }
    Ok(modes.iter().map(|(m, _)| *m).collect())
}

fn expect_keyword<'a>(lines: &[Line<'a>], pos: usize, keyword: &str) -> PResult<()> {
    let Some(line) = lines.get(pos) else {
        let (number, text) = lines
            .last()
            .map(|l| (l.number, l.text.to_owned()))
            .unwrap_or((1, String::new()));
        return Err(ParseError {
            line: number,
            column: 1,
            message: format!("missing `{keyword}` statement"),
            snippet: text,
        });
    };
    let kw = line.keyword();
    if kw.text == keyword {
        Ok(())
    } else if HEADER_KEYWORDS.contains(&kw.text) || STAGE_KEYWORDS.contains(&kw.text) {
        Err(line.error(kw, format!("expected `{keyword}`, found `{}`", kw.text)))
    } else {
        Err(line.error(kw, format!("unknown keyword `{}`", kw.text)))
    }
}

fn parse_source(line: &Line<'_>, n_modes: usize) -> PResult<ProbabilityState> {
    let kind = line.arg(1, "`mode` or `amps`")?;
    match kind.text {
        "mode" => {
            let m = mode(line, line.arg(2, "source mode index")?, n_modes)?;
            line.no_more(3)?;
            Ok(ProbabilityState::basis(n_modes, m).expect("mode checked"))
        }
        "amps" => {
            let mut amps = Vec::with_capacity(n_modes);
            for i in 0..n_modes {
                amps.push(complex(line, line.arg(2 + i, "source amplitude (re,im)")?)?);
            }
            line.no_more(2 + n_modes)?;
            let n = norm_sqr(&amps);
            let first = line.tokens[2];
            if (n - 1.0).abs() > SOURCE_NORM_TOLERANCE {
                return Err(line.error(first, format!("source is not normalized: squared norm {n}")));
            }
            let state = if (n - 1.0).abs() > NORM_TOLERANCE {
                ProbabilityState::normalized(amps)
            } else {
                ProbabilityState::new(amps)
            };
            state.map_err(|e| line.error(first, e.to_string()))
        }
        other => Err(line.error(kind, format!("expected `mode` or `amps`, found `{other}`"))),
    }
}

fn two_modes(line: &Line<'_>, n_modes: usize) -> PResult<Vec<usize>> {
    let a = line.arg(1, "mode index")?;
    let b = line.arg(2, "mode index")?;
    let ma = mode(line, a, n_modes)?;
    let mb = mode(line, b, n_modes)?;
    distinct(line, &[(ma, a), (mb, b)])
}

fn parse_bank(line: &Line<'_>, n_modes: usize) -> PResult<DetectorBank> {
    line.arg(1, "detector NAME@MODE")?;
    let mut detectors: Vec<Detector> = Vec::new();
    let mut watched = BTreeSet::new();
    for &tok in &line.tokens[1..] {
        let (label, modes) = tok
            .text
            .split_once('@')
            .ok_or_else(|| line.error(tok, format!("expected NAME@MODE, found `{}`", tok.text)))?;
        if !is_identifier(label) || label == UNDETECTED {
            return Err(line.error(tok, format!("invalid detector label `{label}`")));
        }
        if detectors.iter().any(|d| d.label == label) {
            return Err(line.error(tok, format!("duplicate detector label `{label}` in bank")));
        }
        let mut set = BTreeSet::new();
        for part in modes.split(',') {
            let m = mode(line, Token { col: tok.col, text: part }, n_modes)?;
            if !watched.insert(m) {
                return Err(line.error(tok, format!("mode {m} already watched in this bank")));
            }
            set.insert(m);
        }
        detectors.push(Detector { label: label.to_owned(), modes: set });
    }
    DetectorBank::new(detectors).map_err(|e| line.error(line.keyword(), e.to_string()))
}

fn parse_stage(line: &Line<'_>, n_modes: usize) -> PResult<Stage> {
    let kw = line.keyword();
    let device = |op: crate::error::Result<DeviceOp>| {
        op.map(Stage::Device).map_err(|e| line.error(kw, e.to_string()))
    };
    match kw.text {
        "H" => {
            let modes = two_modes(line, n_modes)?;
            let t = match line.tokens.get(3) {
                Some(&tok) => {
                    let t = keyed_float(line, tok, "t")?;
                    if !(0.0..=1.0).contains(&t) {
                        return Err(line.error(tok, format!("transmission {t} outside [0, 1]")));
                    }
                    t
                }
                None => HALF_SILVERED,
            };
            line.no_more(4)?;
            device(DeviceOp::beam_splitter(t).and_then(|op| op.on(&modes)))
        }
        "R" | "X" => {
            let modes = two_modes(line, n_modes)?;
            line.no_more(3)?;
            let op = if kw.text == "R" { DeviceOp::reflector() } else { DeviceOp::cross() };
            device(op.on(&modes))
        }
        "PHASE" => {
            let a = line.arg(1, "mode index")?;
            let ma = mode(line, a, n_modes)?;
            let next = line.arg(2, "phi=FLOAT")?;
            if next.text.starts_with("phi=") {
                let phi = keyed_float(line, next, "phi")?;
                line.no_more(3)?;
                device(DeviceOp::phase_shift(ma, phi))
            } else {
                let mb = mode(line, next, n_modes)?;
                let modes = distinct(line, &[(ma, a), (mb, next)])?;
                let phi = keyed_float(line, line.arg(3, "phi=FLOAT")?, "phi")?;
                line.no_more(4)?;
                device(DeviceOp::phase(phi).and_then(|op| op.on(&modes)))
            }
        }
        "OP" => {
            let mut targets = Vec::new();
            let mut i = 1;
            while let Some(&tok) = line.tokens.get(i) {
                if tok.text.starts_with('(') {
                    break;
                }
                targets.push((mode(line, tok, n_modes)?, tok));
                i += 1;
            }
            if targets.is_empty() {
                return Err(line.error_at(
                    line.tokens.get(1).map_or(line.end_col(), |t| t.col),
                    "expected target mode indices",
                ));
            }
            let modes = distinct(line, &targets)?;
            let k = modes.len();
            let mut entries = Vec::with_capacity(k * k);
            for j in 0..k * k {
                entries.push(complex(line, line.arg(i + j, "matrix entry (re,im)")?)?);
            }
            line.no_more(i + k * k)?;
            let matrix = Matrix::from_rows(k, entries).map_err(|e| line.error(kw, e.to_string()))?;
            device(DeviceOp::custom(matrix, modes))
        }
        "DETECT" => Ok(Stage::Detect(parse_bank(line, n_modes)?)),
        other if HEADER_KEYWORDS.contains(&other) => {
            Err(line.error(kw, format!("`{other}` may only appear once, in the header")))
        }
        other => Err(line.error(kw, format!("unknown keyword `{other}`"))),
    }
}

/// Parses `.gmc` text into an experiment document.
pub fn parse(text: &str) -> Result<ExperimentDoc, ParseError> {
    let lines = tokenize(text);

    expect_keyword(&lines, 0, "experiment")?;
    let line = &lines[0];
    let name_tok = line.arg(1, "experiment name")?;
    if !is_identifier(name_tok.text) {
        return Err(line.error(name_tok, format!("invalid experiment name `{}`", name_tok.text)));
    }
    line.no_more(2)?;

    expect_keyword(&lines, 1, "modes")?;
    let line = &lines[1];
    let n_tok = line.arg(1, "mode count")?;
    let n_modes = int(line, n_tok)?;
    if n_modes == 0 {
        return Err(line.error(n_tok, "mode count must be at least 1"));
    }
    line.no_more(2)?;

    expect_keyword(&lines, 2, "source")?;
    let source = parse_source(&lines[2], n_modes)?;

    let mut stages = Vec::new();
    for line in &lines[3..] {
        stages.push(parse_stage(line, n_modes)?);
    }

    let apparatus = Apparatus::new(n_modes, source, stages).map_err(|e| {
        let last = lines.last().expect("header lines present");
        last.error_at(1, e.to_string())
    })?;
    Ok(ExperimentDoc {
        name: name_tok.text.to_owned(),
        apparatus,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::enumerate_outcomes;
    use crate::device::DeviceKind;
    use proptest::prelude::*;

    const MZ: &str = "experiment mz\nmodes 2\nsource mode 0\nH 0 1\nR 0 1\nH 0 1\nDETECT D2@0 D1@1\n";

    fn err(text: &str) -> ParseError {
        parse(text).unwrap_err()
    }

    #[test]
    fn interferometer_document() {
        let doc = parse(MZ).unwrap();
        assert_eq!(doc.name, "mz");
        assert_eq!(doc.apparatus.stages().len(), 4);
        let (d, _) = enumerate_outcomes(&doc.apparatus).unwrap();
        assert!(d.get("D1").abs() < 1e-12);
        assert!((d.get("D2") - 1.0).abs() < 1e-12);
    }

    #[test]
    fn interaction_free_document() {
        let text = "experiment ev\nmodes 2\nsource mode 0\nH 0 1\nDETECT D3@1\nR 0 1\nH 0 1\nDETECT D2@0 D1@1";
        let (d, _) = enumerate_outcomes(&parse(text).unwrap().apparatus).unwrap();
        assert!((d.get("D3") - 0.5).abs() < 1e-12);
        assert!((d.get("D1") - 0.25).abs() < 1e-12);
        assert!((d.get("D2") - 0.25).abs() < 1e-12);
    }

    #[test]
    fn unknown_keyword_position() {
        let e = err("experiment e\nmodes 2\nsource mode 0\nBADDEV 0 1\n");
        assert_eq!((e.line, e.column), (4, 1));
        assert!(e.message.contains("unknown keyword"));
        assert_eq!(e.snippet, "BADDEV 0 1");
    }

    #[test]
    fn comments_blank_lines_and_crlf() {
        let text = "# header\r\nexperiment c # trailing\r\n\r\nmodes 2\r\n  source mode 1\r\n\tX 0 1\r\n";
        let doc = parse(text).unwrap();
        assert_eq!(doc.apparatus.source().basis_mode(), Some(1));
        assert!(matches!(&doc.apparatus.stages()[0], Stage::Device(op) if op.kind() == DeviceKind::Cross));
    }

    #[test]
    fn error_positions() {
        let head = "experiment e\nmodes 2\nsource mode 0\n";
        let cases: &[(&str, usize, usize, &str)] = &[
            ("H 0 2", 4, 5, "out of range"),
            ("H 1 1", 4, 5, "repeated"),
            ("H 0 1 t=abc", 4, 7, "malformed number"),
            ("H 0 1 t=1.5", 4, 7, "outside"),
            ("H 0 1 q=0.5", 4, 7, "expected t="),
            ("H 0 x", 4, 5, "malformed integer"),
            ("H 0", 4, 4, "expected mode index"),
            ("R 0 1 extra", 4, 7, "unexpected token"),
            ("DETECT A@0 A@1", 4, 12, "duplicate detector label"),
            ("DETECT A@0 B@0", 4, 12, "already watched"),
            ("DETECT A0", 4, 8, "expected NAME@MODE"),
            ("DETECT 1A@0", 4, 8, "invalid detector label"),
            ("DETECT UNDETECTED@0", 4, 8, "invalid detector label"),
            ("PHASE 0 phi=nan", 4, 9, "malformed number"),
            ("PHASE 0 phi=inf", 4, 9, "malformed number"),
            ("OP 0 1 (1,0) (0,0) (0,0)", 4, 25, "expected matrix entry"),
            ("OP 0 1 (1,0) (0,0) (0,0) (1;0)", 4, 26, "malformed complex"),
            ("modes 3", 4, 1, "only appear once"),
        ];
        for (stage, line, col, msg) in cases {
            let e = err(&format!("{head}{stage}\n"));
            assert_eq!((e.line, e.column), (*line, *col), "{stage}: {e}");
            assert!(e.message.contains(msg), "{stage}: {}", e.message);
        }
    }

    #[test]
    fn header_errors() {
        let e = err("modes 2\n");
        assert_eq!((e.line, e.column), (1, 1));
        assert!(e.message.contains("expected `experiment`"));

        let e = err("experiment 9x\n");
        assert_eq!((e.line, e.column), (1, 12));

        let e = err("experiment e\nmodes 0\n");
        assert_eq!((e.line, e.column), (2, 7));

        let e = err("experiment e\nmodes 2\n");
        assert!(e.message.contains("missing `source`"));

        let e = err("");
        assert_eq!((e.line, e.column), (1, 1));

        let e = err("experiment e\nmodes 2\nsource amps (1,0) (1,0)\n");
        assert_eq!((e.line, e.column), (3, 13));
        assert!(e.message.contains("not normalized"));

        let e = err("experiment e\nmodes 2\nsource amps (1,0)\n");
        assert!(e.message.contains("expected source amplitude"));

        let e = err("experiment e\nmodes 2\nsource mode 2\n");
        assert_eq!((e.line, e.column), (3, 13));
    }

    #[test]
    fn nearly_normalized_source_is_rescaled() {
        let doc = parse("experiment e\nmodes 2\nsource amps (0.6,0) (0,0.8000001)\n").unwrap();
        assert!((norm_sqr(doc.apparatus.source().amplitudes()) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn extended_forms() {
        let text = "experiment x\nmodes 4\nsource amps (0,0) (0.5,0) (0.5,0) (0.70710678118654757,0)\n\
                    PHASE 0 3 phi=1.5e-1\nOP 2 (0,1)\nOP 0 1 2 (1,0) (0,0) (0,0) (0,0) (1,0) (0,0) (0,0) (0,0) (1,0)\n\
                    H 1 2 t=1\nDETECT A@0,1 B@2,3\n";
        let doc = parse(text).unwrap();
        assert_eq!(doc.apparatus.stages().len(), 5);
        match &doc.apparatus.stages()[4] {
            Stage::Detect(bank) => assert_eq!(bank.detectors()[0].modes, BTreeSet::from([0, 1])),
            _ => panic!("expected a bank"),
        }
    }

    proptest! {
        #[test]
        fn parsing_never_panics(text in "\\PC{0,200}") {
            let _ = parse(&text);
        }

        #[test]
        fn parsing_line_noise_never_panics(lines in prop::collection::vec(
            prop_oneof![
                Just("experiment e".to_owned()),
                Just("modes 3".to_owned()),
                Just("source mode 1".to_owned()),
                "[A-Z]{1,6}( [0-9@,()a-z=.+-]{0,8}){0,5}",
            ],
            0..8,
        )) {
            if let Err(e) = parse(&lines.join("\n")) {
                prop_assert!(e.line >= 1 && e.column >= 1);
            }
        }
    }
}
