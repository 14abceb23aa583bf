//! Plain-text artifacts: trace, surface and report CSVs, and the model file.
//!
//! CSV numbers are printed with 9 significant digits. The model file writes
//! the shortest representation that parses back to the same `f64`, so a
//! saved model predicts exactly like the in-memory one.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::auditor::SurfaceGrid;
use crate::error::{Error, Result};
use crate::fictplay::TraceRecord;
use crate::metrics::{FairnessReport, MixtureClassifier};
use crate::regression::LinearThreshold;
use crate::scalar::Scalar;
use crate::subgroup::{GroupRegistry, MarginalGroup, MarginalSide, Subgroup};

/// Formats `v` like C's `%.9g`.
pub fn fmt9(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return if v.is_nan() {
            "nan".into()
        } else if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{:.8e}", v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..9).contains(&exp) {
        let mantissa = strip_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (8 - exp) as usize;
        strip_zeros(&format!("{:.*}", decimals, v)).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn g<T: Scalar>(v: T) -> String {
    fmt9(v.to_f64_lossy())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

/// Writes a trace; the `rich_gamma` column appears when any record has one.
pub fn write_trace<T: Scalar, W: Write>(mut w: W, trace: &[TraceRecord<T>]) -> std::io::Result<()> {
    let rich = trace.iter().any(|r| r.rich_gamma.is_some());
    write!(w, "t,eps_mix,gamma_mix,group_id,auditor_zero,eps_last")?;
    writeln!(w, "{}", if rich { ",rich_gamma" } else { "" })?;
    for r in trace {
        write!(
            w,
            "{},{},{},{},{},{}",
            r.t,
            g(r.eps_mix),
            g(r.gamma_mix),
            r.group_id,
            u8::from(r.auditor_zero),
            g(r.eps_last)
        )?;
        if rich {
            write!(w, ",{}", r.rich_gamma.map(g).unwrap_or_default())?;
        }
        writeln!(w)?;
    }
    w.flush()
}

pub fn save_trace<T: Scalar>(path: impl AsRef<Path>, trace: &[TraceRecord<T>]) -> Result<()> {
    let path = path.as_ref();
    write_trace(create(path)?, trace).map_err(|e| Error::io(path, e))
}

/// One row of a trace file as read back for frontier pooling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    pub t: usize,
    pub eps_mix: f64,
    pub gamma_mix: f64,
    pub rich_gamma: Option<f64>,
}

pub fn read_trace(path: impl AsRef<Path>) -> Result<Vec<TracePoint>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::Reader::from_reader(file);
    let headers = reader.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let need = |name: &str| col(name).ok_or_else(|| Error::UnknownColumn(name.into()));
    let (t_col, eps_col, gamma_col) = (need("t")?, need("eps_mix")?, need("gamma_mix")?);
    let rich_col = col("rich_gamma");
    let mut points = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let num = |c: usize| -> Result<f64> {
            let v = &record[c];
            v.trim().parse().map_err(|_| Error::Parse {
                row: row + 1,
                column: headers[c].into(),
                value: v.into(),
            })
        };
        let t = record[t_col].trim().parse().map_err(|_| Error::Parse {
            row: row + 1,
            column: "t".into(),
            value: record[t_col].into(),
        })?;
        let rich_gamma = match rich_col {
            Some(c) if !record[c].trim().is_empty() => Some(num(c)?),
            _ => None,
        };
        points.push(TracePoint {
            t,
            eps_mix: num(eps_col)?,
            gamma_mix: num(gamma_col)?,
            rich_gamma,
        });
    }
    Ok(points)
}

/// Writes a discrimination surface; with `t`, every row is prefixed by it.
pub fn write_surface<T: Scalar, W: Write>(
    mut w: W,
    grids: &[(Option<usize>, &SurfaceGrid<T>)],
) -> std::io::Result<()> {
    let checkpoints = grids.iter().any(|(t, _)| t.is_some());
    if checkpoints {
        write!(w, "t,")?;
    }
    writeln!(w, "theta1,theta2,signed_disparity,gamma_unfairness")?;
    for (t, grid) in grids {
        for c in &grid.cells {
            if let Some(t) = t {
                write!(w, "{t},")?;
            }
            writeln!(
                w,
                "{},{},{},{}",
                g(c.theta1),
                g(c.theta2),
                g(c.signed_disparity),
                g(c.unfairness)
            )?;
        }
    }
    w.flush()
}

pub fn write_reports<T: Scalar, W: Write>(
    mut w: W,
    reports: &[(usize, FairnessReport<T>)],
) -> std::io::Result<()> {
    writeln!(w, "group_id,alpha,fp_base,fp_group,beta,gamma_unfairness")?;
    for (id, r) in reports {
        writeln!(
            w,
            "{id},{},{},{},{},{}",
            g(r.alpha),
            g(r.fp_base),
            g(r.fp_group),
            g(r.beta),
            g(r.unfairness)
        )?;
    }
    w.flush()
}

/// A saved mixture and the groups its run discovered.
#[derive(Debug, Clone, PartialEq)]
pub struct Model<T> {
    pub mixture: MixtureClassifier<T>,
    pub groups: Vec<Subgroup<T>>,
}

impl<T: Scalar> Model<T> {
    pub fn new(mixture: MixtureClassifier<T>, registry: &GroupRegistry<T>) -> Self {
        Self {
            mixture,
            groups: registry.iter().map(|(_, g)| g.group.clone()).collect(),
        }
    }
}

fn exact<T: Scalar>(v: T) -> String {
    format!("{:?}", v.to_f64_lossy())
}

/// Model file format, one record per line:
///
/// ```text
/// h <intercept> <w_1> ... <w_d>
/// threshold <intercept> <w_1> ... <w_k>
/// marginal <column> eq|ge|lt <value>
/// ```
///
/// `h` lines are the mixture in order; the others are registry groups in id
/// order. Blank lines and `#` comments are ignored.
pub fn write_model<T: Scalar, W: Write>(mut w: W, model: &Model<T>) -> std::io::Result<()> {
    let threshold = |w: &mut W, tag: &str, h: &LinearThreshold<T>| -> std::io::Result<()> {
        write!(w, "{tag} {}", exact(h.intercept))?;
        for &x in &h.weights {
            write!(w, " {}", exact(x))?;
        }
        writeln!(w)
    };
    writeln!(
        w,
        "# {} hypotheses, {} groups",
        model.mixture.len(),
        model.groups.len()
    )?;
    for h in model.mixture.hypotheses() {
        threshold(&mut w, "h", h)?;
    }
    for group in &model.groups {
        match group {
            Subgroup::Threshold(h) => threshold(&mut w, "threshold", h)?,
            Subgroup::Marginal(m) => {
                let (op, v) = match m.side {
                    MarginalSide::Equals(v) => ("eq", v),
                    MarginalSide::AtLeast(v) => ("ge", v),
                    MarginalSide::Below(v) => ("lt", v),
                };
                writeln!(w, "marginal {} {op} {}", m.column, exact(v))?;
            }
        }
    }
    w.flush()
}

pub fn save_model<T: Scalar>(path: impl AsRef<Path>, model: &Model<T>) -> Result<()> {
    let path = path.as_ref();
    write_model(create(path)?, model).map_err(|e| Error::io(path, e))
}

pub fn read_model<T: Scalar, R: BufRead>(reader: R) -> Result<Model<T>> {
    let mut hypotheses = Vec::new();
    let mut groups = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let bad = |message: String| Error::ModelFormat {
            line: line_no,
            message,
        };
        let line = line.map_err(|e| bad(e.to_string()))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split_whitespace();
        let tag = fields.next().expect("non-empty line");
        let rest: Vec<&str> = fields.collect();
        let num = |s: &str| -> Result<T> {
            let v: f64 = s
                .parse()
                .map_err(|_| bad(format!("`{s}` is not a number")))?;
            if v.is_finite() {
                Ok(T::of(v))
            } else {
                Err(bad(format!("`{s}` is not finite")))
            }
        };
        let threshold = |fields: &[&str]| -> Result<LinearThreshold<T>> {
            let (b, w) = fields
                .split_first()
                .ok_or_else(|| bad("missing intercept".into()))?;
            Ok(LinearThreshold::new(
                w.iter().map(|s| num(s)).collect::<Result<_>>()?,
                num(b)?,
            ))
        };
        match tag {
            "h" => hypotheses.push(threshold(&rest)?),
            "threshold" => groups.push(Subgroup::Threshold(threshold(&rest)?)),
            "marginal" => {
                let [column, op, value] = rest[..] else {
                    return Err(bad("expected `marginal <column> <op> <value>`".into()));
                };
                let column = column
                    .parse()
                    .map_err(|_| bad(format!("bad column `{column}`")))?;
                let v = num(value)?;
                let side = match op {
                    "eq" => MarginalSide::Equals(v),
                    "ge" => MarginalSide::AtLeast(v),
                    "lt" => MarginalSide::Below(v),
                    _ => return Err(bad(format!("unknown operator `{op}`"))),
                };
                groups.push(Subgroup::Marginal(MarginalGroup { column, side }));
            }
            _ => return Err(bad(format!("unknown record `{tag}`"))),
        }
    }
    if let Some(first) = hypotheses.first() {
        let d = first.dim();
        if let Some(h) = hypotheses.iter().find(|h| h.dim() != d) {
            return Err(Error::Dimension(format!(
                "model mixes hypotheses of dimension {d} and {}",
                h.dim()
            )));
        }
    }
    let mixture = MixtureClassifier::new(hypotheses).map_err(|_| Error::ModelFormat {
        line: 0,
        message: "no hypotheses".into(),
    })?;
    Ok(Model { mixture, groups })
}

pub fn load_model<T: Scalar>(path: impl AsRef<Path>) -> Result<Model<T>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_model(BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(fmt9(0.0), "0");
        assert_eq!(fmt9(0.0625), "0.0625");
        assert_eq!(fmt9(1.0 / 3.0), "0.333333333");
        assert_eq!(fmt9(2.0 / 3.0), "0.666666667");
        assert_eq!(fmt9(-1.5), "-1.5");
        assert_eq!(fmt9(10.0), "10");
        assert_eq!(fmt9(123456789.0), "123456789");
        assert_eq!(fmt9(1234567890.0), "1.23456789e+09");
        assert_eq!(fmt9(1e-5), "1e-05");
        assert_eq!(fmt9(0.0001), "0.0001");
        assert_eq!(fmt9(1.25e-7), "1.25e-07");
        assert_eq!(fmt9(0.99999999999), "1");
    }

    #[test]
    fn trace_round_trip() {
        let rec = |t, rich| TraceRecord {
            t,
            eps_mix: 0.25,
            gamma_mix: 1.0 / 3.0,
            group_id: 2,
            auditor_zero: t == 1,
            eps_last: 0.5,
            rich_gamma: rich,
            dual_norm: 10.0,
        };
        let mut buf = Vec::new();
        write_trace(&mut buf, &[rec(0, None), rec(1, None)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "t,eps_mix,gamma_mix,group_id,auditor_zero,eps_last\n0,0.25,0.333333333,2,0,0.5\n1,0.25,0.333333333,2,1,0.5\n");

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trace.csv");
        save_trace(&path, &[rec(0, Some(0.125))]).unwrap();
        let points = read_trace(&path).unwrap();
        assert_eq!(
            points,
            vec![TracePoint {
                t: 0,
                eps_mix: 0.25,
                gamma_mix: 0.333333333,
                rich_gamma: Some(0.125)
            }]
        );
    }

    #[test]
    fn model_round_trip_is_exact() {
        let h = LinearThreshold::new(vec![0.1, -1.0 / 3.0, 1e-300], 2.0f64.sqrt());
        let mixture =
            MixtureClassifier::new(vec![h.clone(), LinearThreshold::constant(3, true)]).unwrap();
        let model = Model {
            mixture,
            groups: vec![
                Subgroup::Threshold(LinearThreshold::new(vec![0.5, 0.25], -0.125)),
                Subgroup::Marginal(MarginalGroup {
                    column: 1,
                    side: MarginalSide::Below(0.3),
                }),
                Subgroup::Marginal(MarginalGroup {
                    column: 0,
                    side: MarginalSide::Equals(1.0),
                }),
            ],
        };
        let mut buf = Vec::new();
        write_model(&mut buf, &model).unwrap();
        let back: Model<f64> = read_model(buf.as_slice()).unwrap();
        assert_eq!(back, model);
    }

    #[test]
    fn model_errors_name_the_line() {
        let err = read_model::<f64, _>("h 0 1\nh 0 x\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::ModelFormat { line: 2, .. }), "{err}");
        assert!(matches!(
            read_model::<f64, _>("# empty\n".as_bytes()),
            Err(Error::ModelFormat { .. })
        ));
        assert!(matches!(
            read_model::<f64, _>("h 0 1\nh 0 1 2\n".as_bytes()),
            Err(Error::Dimension(_))
        ));
        assert!(matches!(
            read_model::<f64, _>("marginal 0 ne 1\n".as_bytes()),
            Err(Error::ModelFormat { .. })
        ));
    }

    #[test]
    fn report_csv() {
        let r = FairnessReport {
            alpha: 0.125,
            fp_base: 0.5,
            fp_group: 1.0,
            beta: 0.5,
            unfairness: 0.0625,
            signed_disparity: 0.5,
        };
        let mut buf = Vec::new();
        write_reports(&mut buf, &[(3, r)]).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "group_id,alpha,fp_base,fp_group,beta,gamma_unfairness\n3,0.125,0.5,1,0.5,0.0625\n"
        );
    }
}
