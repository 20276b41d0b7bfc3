//! Line-oriented text formats. Fields are tab-separated (any whitespace is
//! accepted on input), `#` starts a comment line, blank lines are skipped.
//!
//! | file        | record                                                     |
//! |-------------|------------------------------------------------------------|
//! | taxonomy    | `child parent`, or a lone `class` for an isolated node     |
//! | sheets      | `instance classifier class score`                          |
//! | gold labels | `instance class` (repeat the instance for multi-label)     |
//! | params      | `classifier class binormal mu0 sigma0 mu1 sigma1`          |
//! |             | `classifier class discrete alpha beta`                     |
//! | class set   | `class`                                                    |
//! | weights     | `class weight`                                             |

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use thiserror::Error;

use crate::eval::EvalReport;
use crate::graphical::{GraphicalError, ObservationKind, ParamSet};
use crate::sheet::{ScoreSheet, SheetError};
use crate::taxonomy::{ClassId, Taxonomy, TaxonomyError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FormatError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("no records")]
    EmptyInput,
    #[error("line {line}: {source}")]
    Sheet { line: usize, source: SheetError },
    #[error(transparent)]
    Taxonomy(#[from] TaxonomyError),
}

fn parse_err(line: usize, message: impl Into<String>) -> FormatError {
    FormatError::Parse { line, message: message.into() }
}

/// 9 significant digits, shortest form that reads back to the rounded value.
pub fn fmt_num(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0".into();
    }
    let rounded: f64 = format!("{x:.8e}").parse().expect("own output parses");
    rounded.to_string()
}

/// `(line number, fields)` of every record line.
fn records(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.trim();
        (!l.is_empty() && !l.starts_with('#')).then(|| (i + 1, l.split_whitespace().collect()))
    })
}

fn class(line: usize, s: &str) -> Result<ClassId, FormatError> {
    ClassId::new(s).map_err(|e| parse_err(line, e.to_string()))
}

fn number(line: usize, what: &str, s: &str) -> Result<f64, FormatError> {
    s.parse::<f64>()
        .map_err(|_| parse_err(line, format!("{what}: `{s}` is not a number")))
}

pub fn parse_taxonomy(text: &str) -> Result<Taxonomy, FormatError> {
    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    for (line, f) in records(text) {
        match f.as_slice() {
            [c] => nodes.push(class(line, c)?),
            [c, p] => edges.push((class(line, c)?, class(line, p)?)),
            _ => return Err(parse_err(line, format!("expected `child parent`, got {} fields", f.len()))),
        }
    }
    if nodes.is_empty() && edges.is_empty() {
        return Err(FormatError::EmptyInput);
    }
    Ok(Taxonomy::from_parts(nodes, edges)?)
}

pub fn write_taxonomy(t: &Taxonomy) -> String {
    let mut out = String::new();
    for (c, p) in t.edges() {
        writeln!(out, "{c}\t{p}").unwrap();
    }
    for c in t.isolated() {
        writeln!(out, "{c}").unwrap();
    }
    out
}

/// Sheets sorted by instance id. With a taxonomy, every class is checked
/// against it.
pub fn parse_sheets(text: &str, taxonomy: Option<&Taxonomy>) -> Result<Vec<ScoreSheet>, FormatError> {
    let mut sheets: BTreeMap<String, ScoreSheet> = BTreeMap::new();
    for (line, f) in records(text) {
        let [inst, j, c, y] = f.as_slice() else {
            return Err(parse_err(line, format!("expected `instance classifier class score`, got {} fields", f.len())));
        };
        let c = class(line, c)?;
        let y = number(line, "score", y)?;
        if let Some(t) = taxonomy {
            if !t.contains(c.as_str()) {
                return Err(FormatError::Sheet {
                    line,
                    source: SheetError::UnknownClass { instance: inst.to_string(), classifier: j.to_string(), class: c },
                });
            }
        }
        sheets
            .entry(inst.to_string())
            .or_insert_with(|| ScoreSheet::new(*inst))
            .insert(*j, c, y)
            .map_err(|source| FormatError::Sheet { line, source })?;
    }
    if sheets.is_empty() {
        return Err(FormatError::EmptyInput);
    }
    Ok(sheets.into_values().collect())
}

pub fn write_sheets<'a>(sheets: impl IntoIterator<Item = &'a ScoreSheet>) -> String {
    let mut out = String::new();
    for s in sheets {
        for (j, c, y) in s.iter() {
            writeln!(out, "{}\t{j}\t{c}\t{}", s.instance_id, fmt_num(y)).unwrap();
        }
    }
    out
}

/// Gold classes per instance, deduplicated and sorted.
pub fn parse_gold(text: &str, taxonomy: Option<&Taxonomy>) -> Result<BTreeMap<String, Vec<ClassId>>, FormatError> {
    let mut gold: BTreeMap<String, BTreeSet<ClassId>> = BTreeMap::new();
    for (line, f) in records(text) {
        let [inst, c] = f.as_slice() else {
            return Err(parse_err(line, format!("expected `instance class`, got {} fields", f.len())));
        };
        let c = class(line, c)?;
        if let Some(t) = taxonomy {
            if !t.contains(c.as_str()) {
                return Err(parse_err(line, format!("unknown class `{c}`")));
            }
        }
        gold.entry(inst.to_string()).or_default().insert(c);
    }
    if gold.is_empty() {
        return Err(FormatError::EmptyInput);
    }
    Ok(gold.into_iter().map(|(k, v)| (k, v.into_iter().collect())).collect())
}

pub fn write_gold(gold: &BTreeMap<String, Vec<ClassId>>) -> String {
    let mut out = String::new();
    for (inst, cs) in gold {
        for c in cs {
            writeln!(out, "{inst}\t{c}").unwrap();
        }
    }
    out
}

/// Predicted terminal class per instance. Accepts `instance class` lines or
/// the aggregation output (instance, method, terminal, …) with its header.
pub fn parse_predictions(text: &str) -> Result<BTreeMap<String, ClassId>, FormatError> {
    let mut out = BTreeMap::new();
    for (line, f) in records(text) {
        let (inst, c) = match f.as_slice() {
            ["instance_id", ..] => continue,
            [inst, c] => (inst, c),
            [inst, _method, terminal, ..] => (inst, terminal),
            _ => return Err(parse_err(line, "expected `instance class`")),
        };
        if out.insert(inst.to_string(), class(line, c)?).is_some() {
            return Err(parse_err(line, format!("second prediction for `{inst}`")));
        }
    }
    if out.is_empty() {
        return Err(FormatError::EmptyInput);
    }
    Ok(out)
}

pub fn parse_params(text: &str) -> Result<ParamSet, FormatError> {
    let mut params = ParamSet::new();
    for (line, f) in records(text) {
        let kind = match f.as_slice() {
            [_, _, "binormal", a, b, c, d] => ObservationKind::Binormal {
                mu0: number(line, "mu0", a)?,
                sigma0: number(line, "sigma0", b)?,
                mu1: number(line, "mu1", c)?,
                sigma1: number(line, "sigma1", d)?,
            },
            [_, _, "discrete", a, b] => ObservationKind::Discrete {
                alpha: number(line, "alpha", a)?,
                beta: number(line, "beta", b)?,
            },
            _ => {
                return Err(parse_err(
                    line,
                    "expected `classifier class binormal mu0 sigma0 mu1 sigma1` or `classifier class discrete alpha beta`",
                ))
            }
        };
        if params.get(f[0], f[1]).is_some() {
            return Err(parse_err(line, format!("duplicate parameters for {}/{}", f[0], f[1])));
        }
        params
            .insert(f[0], class(line, f[1])?, kind)
            .map_err(|e: GraphicalError| parse_err(line, e.to_string()))?;
    }
    if params.is_empty() {
        return Err(FormatError::EmptyInput);
    }
    Ok(params)
}

pub fn write_params(params: &ParamSet) -> String {
    let mut out = String::new();
    for p in params.iter() {
        match p.kind {
            ObservationKind::Binormal { mu0, sigma0, mu1, sigma1 } => writeln!(
                out,
                "{}\t{}\tbinormal\t{}\t{}\t{}\t{}",
                p.classifier,
                p.node,
                fmt_num(mu0),
                fmt_num(sigma0),
                fmt_num(mu1),
                fmt_num(sigma1)
            ),
            ObservationKind::Discrete { alpha, beta } => writeln!(
                out,
                "{}\t{}\tdiscrete\t{}\t{}",
                p.classifier,
                p.node,
                fmt_num(alpha),
                fmt_num(beta)
            ),
        }
        .unwrap();
    }
    out
}

pub fn parse_class_set(text: &str) -> Result<BTreeSet<ClassId>, FormatError> {
    let mut out = BTreeSet::new();
    for (line, f) in records(text) {
        let [c] = f.as_slice() else {
            return Err(parse_err(line, "expected one class per line"));
        };
        out.insert(class(line, c)?);
    }
    Ok(out)
}

/// Positive per-class weights for leaf priors.
pub fn parse_weights(text: &str) -> Result<BTreeMap<ClassId, f64>, FormatError> {
    let mut out = BTreeMap::new();
    for (line, f) in records(text) {
        let [c, w] = f.as_slice() else {
            return Err(parse_err(line, "expected `class weight`"));
        };
        let w = number(line, "weight", w)?;
        if !(w > 0.0 && w.is_finite()) {
            return Err(parse_err(line, format!("weight must be positive, got {w}")));
        }
        out.insert(class(line, c)?, w);
    }
    Ok(out)
}

/// CSV with one row per instance followed by `mean` and `stddev` rows.
pub fn write_eval_report(report: &EvalReport) -> String {
    let mut out = String::from("instance_id,precision,recall,f1,flags\n");
    for s in &report.per_instance {
        let mut flags = Vec::new();
        if s.multi_gold {
            flags.push("multi_gold");
        }
        if s.disjoint {
            flags.push("no_common_ancestor");
        }
        writeln!(
            out,
            "{},{:.6},{:.6},{:.6},{}",
            s.instance_id,
            s.prf.precision,
            s.prf.recall,
            s.prf.f1,
            flags.join(";")
        )
        .unwrap();
    }
    for (name, m) in [("mean", report.mean), ("stddev", report.stddev)] {
        writeln!(out, "{name},{:.6},{:.6},{:.6},", m.precision, m.recall, m.f1).unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn number_format() {
        assert_eq!(fmt_num(0.999999), "0.999999");
        assert_eq!(fmt_num(0.5), "0.5");
        assert_eq!(fmt_num(1.0), "1");
        assert_eq!(fmt_num(-1.0), "-1");
        assert_eq!(fmt_num(-0.0), "0");
        assert_eq!(fmt_num(1.0 / 3.0), "0.333333333");
        assert_eq!(fmt_num(2.0 / 3.0), "0.666666667");
        assert_eq!(fmt_num(123456789012.0), "123456789000");
        assert_eq!(fmt_num(1.5e-7), "0.00000015");
    }

    #[test]
    fn animal_sheet_round_trip() {
        let s = fixtures::two_classifier_sheet();
        let text = write_sheets([&s]);
        assert_eq!(text.lines().count(), 6);
        let back = parse_sheets(&text, Some(&fixtures::wordnet_animals())).unwrap();
        assert_eq!(back, vec![s]);
    }

    #[test]
    fn sheet_errors() {
        assert_eq!(parse_sheets("", None), Err(FormatError::EmptyInput));
        assert_eq!(parse_sheets("# only a comment\n\n", None), Err(FormatError::EmptyInput));
        let err = parse_sheets("x\tf\tdog\t1.3\n", None).unwrap_err();
        assert!(matches!(err, FormatError::Sheet { line: 1, source: SheetError::InvalidScore { .. } }));
        let err = parse_sheets("x\tf\tdog\t0.3\nx\tf\tdog\t0.3\n", None).unwrap_err();
        assert!(matches!(err, FormatError::Sheet { line: 2, .. }));
        let err = parse_sheets("x\tf\tdog\n", None).unwrap_err();
        assert!(matches!(err, FormatError::Parse { line: 1, .. }));
        let err = parse_sheets("x\tf\tunicorn\t0.1\n", Some(&fixtures::wordnet_animals())).unwrap_err();
        assert!(err.to_string().contains("unicorn"), "{err}");
    }

    #[test]
    fn taxonomy_round_trip() {
        let t = fixtures::wordnet_animals();
        assert_eq!(parse_taxonomy(&write_taxonomy(&t)).unwrap(), t);
        let t = parse_taxonomy("# isolated\nlonely\na\tb\n").unwrap();
        assert_eq!(t.len(), 3);
        assert_eq!(write_taxonomy(&t), "a\tb\nlonely\n");
        assert!(matches!(parse_taxonomy("a b c\n"), Err(FormatError::Parse { line: 1, .. })));
        assert!(matches!(parse_taxonomy("a\tb\nb\ta\n"), Err(FormatError::Taxonomy(_))));
    }

    #[test]
    fn params_round_trip() {
        let text = "f\tdog\tbinormal\t-1\t0.5\t2\t1.25\ng\tcat\tdiscrete\t0.8\t0.9\n";
        let p = parse_params(text).unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(write_params(&p), text);
        assert!(parse_params("f\tdog\tbinormal\t0\t0\t1\t1\n").is_err());
        assert!(parse_params("f\tdog\tdiscrete\t1\t0.5\n").is_err());
        assert!(parse_params("f\tdog\ttrinormal\t1\n").is_err());
    }

    #[test]
    fn gold_and_predictions() {
        let g = parse_gold("b\tcat\na\tdog\na\tfox\n", None).unwrap();
        assert_eq!(g["a"].len(), 2);
        assert_eq!(write_gold(&g), "a\tdog\na\tfox\nb\tcat\n");
        let p = parse_predictions("# meta\ninstance_id\tmethod\tterminal\tpath\nx\theuristic\tdog\tanimal>dog\n").unwrap();
        assert_eq!(p["x"].as_str(), "dog");
        assert!(parse_predictions("x\tdog\nx\tcat\n").is_err());
    }
}
