use std::io::Write;

/// One CSV line: a grid value crossed with a strategy, scheme or threshold.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Row {
    pub param: String,
    pub value: Option<f64>,
    pub strategy: String,
    pub analytic: Option<f64>,
    pub simulated: Option<f64>,
    pub ci_half_width: Option<f64>,
    pub block_error_rate: Option<f64>,
    pub flags: Vec<String>,
    /// Only filled in compare mode.
    pub pass: Option<bool>,
    /// A computation failed for this row.
    pub failed: bool,
}

impl Row {
    pub fn flag(&mut self, flag: impl Into<String>) {
        self.flags.push(flag.into());
    }

    pub fn fail(&mut self, err: impl std::fmt::Display) {
        self.failed = true;
        self.flags.push(format!("error: {err}"));
    }

    /// Blanks non-finite numbers and flags them.
    pub(crate) fn sanitize(&mut self) {
        let mut bad = false;
        for v in [
            &mut self.analytic,
            &mut self.simulated,
            &mut self.ci_half_width,
            &mut self.block_error_rate,
        ] {
            if matches!(v, Some(x) if !x.is_finite()) {
                *v = None;
                bad = true;
            }
        }
        if bad {
            self.flag("non_finite");
        }
    }
}

pub const HEADER: [&str; 8] = [
    "param",
    "value",
    "strategy",
    "analytic",
    "simulated",
    "ci_half_width",
    "block_error_rate",
    "flags",
];

/// Shortest round-trip form; exponent notation away from unit scale.
fn num(v: Option<f64>) -> String {
    match v {
        None => String::new(),
        Some(x) if x != 0.0 && !(1e-4..1e15).contains(&x.abs()) => format!("{x:e}"),
        Some(x) => x.to_string(),
    }
}

/// Writes `rows` in order. The `pass` column is emitted when `with_pass`.
pub fn write_csv<W: Write>(out: W, rows: &[Row], with_pass: bool) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = HEADER.to_vec();
    if with_pass {
        header.push("pass");
    }
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![
            r.param.clone(),
            num(r.value),
            r.strategy.clone(),
            num(r.analytic),
            num(r.simulated),
            num(r.ci_half_width),
            num(r.block_error_rate),
            r.flags.join(";"),
        ];
        if with_pass {
            rec.push(r.pass.map(|p| p.to_string()).unwrap_or_default());
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
