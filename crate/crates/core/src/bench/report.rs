use serde::{Deserialize, Serialize};

/// CSV columns, in order.
pub const CSV_COLUMNS: [&str; 16] = [
    "run_id",
    "env",
    "size",
    "wrapper",
    "agent",
    "n_train",
    "n_eval",
    "repeat",
    "j_train",
    "j_population",
    "gap",
    "stderr_train",
    "stderr_population",
    "gcs",
    "verdict",
    "wall_seconds",
];

/// Significant digits of every float column.
pub const SIG_DIGITS: usize = 12;

/// A float rounded to 12 significant digits, held as `mantissa · 10^exponent`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Decimal {
    pub mantissa: i128,
    pub exponent: i32,
}

impl Decimal {
    pub fn round(x: f64) -> Self {
        if x == 0.0 || !x.is_finite() {
            return Self {
                mantissa: 0,
                exponent: 0,
            };
        }
        let s = format!("{:.*e}", SIG_DIGITS - 1, x);
        let (mant, exp) = s.split_once('e').expect("exponent form");
        let digits: String = mant.chars().filter(|c| *c != '.').collect();
        let exp: i32 = exp.parse().expect("integer exponent");
        Self {
            mantissa: digits.parse().expect("digits"),
            exponent: exp - (SIG_DIGITS as i32 - 1),
        }
        .normalized()
    }

    fn normalized(mut self) -> Self {
        if self.mantissa == 0 {
            return Self {
                mantissa: 0,
                exponent: 0,
            };
        }
        while self.mantissa % 10 == 0 {
            self.mantissa /= 10;
            self.exponent += 1;
        }
        self
    }

    /// Exact difference; `None` if the exponents are too far apart for `i128`.
    pub fn sub(self, other: Self) -> Option<Self> {
        let e = self.exponent.min(other.exponent);
        let scale = |d: Self| -> Option<i128> {
            let shift = u32::try_from(d.exponent - e).ok()?;
            10i128.checked_pow(shift)?.checked_mul(d.mantissa)
        };
        Some(
            Self {
                mantissa: scale(self)?.checked_sub(scale(other)?)?,
                exponent: e,
            }
            .normalized(),
        )
    }

    pub fn to_f64(self) -> f64 {
        self.to_string().parse().expect("decimal parses")
    }
}

impl std::fmt::Display for Decimal {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let neg = self.mantissa < 0;
        let digits = self.mantissa.unsigned_abs().to_string();
        let sign = if neg { "-" } else { "" };
        let n = digits.len() as i32;
        let point = n + self.exponent; // digits before the decimal point
        if self.mantissa == 0 {
            write!(f, "0")
        } else if self.exponent >= 0 && point <= 21 {
            write!(f, "{sign}{digits}{}", "0".repeat(self.exponent as usize))
        } else if point > 0 && self.exponent < 0 {
            let (int, frac) = digits.split_at(point as usize);
            write!(f, "{sign}{int}.{frac}")
        } else if point <= 0 && point > -7 {
            write!(f, "{sign}0.{}{digits}", "0".repeat((-point) as usize))
        } else {
            let (head, tail) = digits.split_at(1);
            let tail = if tail.is_empty() {
                String::new()
            } else {
                format!(".{tail}")
            };
            write!(f, "{sign}{head}{tail}e{}", point - 1)
        }
    }
}

/// Renders `x` with 12 significant digits, trailing zeros dropped.
pub fn fmt_float(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        Decimal::round(x).to_string()
    }
}

/// One row per (config point, repeat). `gap` is the exact decimal difference of
/// the printed `j_train` and `j_population` columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResultRow {
    pub run_id: String,
    pub env: String,
    pub size: String,
    pub wrapper: String,
    pub agent: String,
    pub n_train: usize,
    pub n_eval: usize,
    pub repeat: usize,
    pub j_train: f64,
    pub j_population: f64,
    pub gap: f64,
    pub stderr_train: f64,
    pub stderr_population: f64,
    pub gcs: Option<f64>,
    pub verdict: Option<String>,
    pub wall_seconds: Option<f64>,
}

impl SweepResultRow {
    /// Rounds the objective columns to their printed values and recomputes the gap.
    pub fn quantize(&mut self) {
        let jt = Decimal::round(self.j_train);
        let jp = Decimal::round(self.j_population);
        self.j_train = jt.to_f64();
        self.j_population = jp.to_f64();
        self.gap = match jt.sub(jp) {
            Some(d) => d.to_f64(),
            None => self.j_train - self.j_population,
        };
    }

    pub fn gap_text(&self) -> String {
        match Decimal::round(self.j_train).sub(Decimal::round(self.j_population)) {
            Some(d) => d.to_string(),
            None => fmt_float(self.gap),
        }
    }

    pub fn fields(&self) -> Vec<String> {
        let opt = |x: Option<f64>| x.map(fmt_float).unwrap_or_default();
        vec![
            self.run_id.clone(),
            self.env.clone(),
            self.size.clone(),
            self.wrapper.clone(),
            self.agent.clone(),
            self.n_train.to_string(),
            self.n_eval.to_string(),
            self.repeat.to_string(),
            fmt_float(self.j_train),
            fmt_float(self.j_population),
            self.gap_text(),
            fmt_float(self.stderr_train),
            fmt_float(self.stderr_population),
            opt(self.gcs),
            self.verdict.clone().unwrap_or_default(),
            opt(self.wall_seconds),
        ]
    }
}

/// CSV bytes for `rows`, header first.
pub fn write_csv(rows: &[SweepResultRow]) -> Result<Vec<u8>, csv::Error> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(CSV_COLUMNS)?;
    for r in rows {
        w.write_record(r.fields())?;
    }
    w.flush()?;
    Ok(w.into_inner().map_err(|e| e.into_error())?)
}

/// Mean and median gap of one sweep point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSummary {
    pub value: String,
    pub rows: usize,
    pub mean_j_train: f64,
    pub mean_j_population: f64,
    pub mean_gap: f64,
    pub median_gap: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub verdicts: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub schema_version: u32,
    pub name: String,
    pub axis: String,
    pub points: Vec<PointSummary>,
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

impl PointSummary {
    pub fn from_rows(value: String, rows: &[SweepResultRow]) -> Self {
        let mean = |f: &dyn Fn(&SweepResultRow) -> f64| {
            rows.iter().map(f).sum::<f64>() / rows.len() as f64
        };
        let gaps: Vec<f64> = rows.iter().map(|r| r.gap).collect();
        let q = |x: f64| Decimal::round(x).to_f64();
        Self {
            value,
            rows: rows.len(),
            mean_j_train: q(mean(&|r| r.j_train)),
            mean_j_population: q(mean(&|r| r.j_population)),
            mean_gap: q(mean(&|r| r.gap)),
            median_gap: q(median(&gaps)),
            verdicts: rows.iter().filter_map(|r| r.verdict.clone()).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(fmt_float(1.0), "1");
        assert_eq!(fmt_float(0.0), "0");
        assert_eq!(fmt_float(-0.25), "-0.25");
        assert_eq!(fmt_float(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_float(2.0 / 3.0 * 1e-9), "6.66666666667e-10");
        assert_eq!(fmt_float(123456.0), "123456");
        assert_eq!(fmt_float(0.0045), "0.0045");
        assert_eq!(fmt_float(1e30), "1e30");
    }

    #[test]
    fn gap_is_exact_difference() {
        let mut row = SweepResultRow {
            run_id: "r".into(),
            env: "e".into(),
            size: "1".into(),
            wrapper: "none".into(),
            agent: "a".into(),
            n_train: 1,
            n_eval: 1,
            repeat: 0,
            j_train: 0.1 + 0.2,
            j_population: 1.0 / 3.0,
            gap: 0.0,
            stderr_train: 0.0,
            stderr_population: 0.0,
            gcs: None,
            verdict: None,
            wall_seconds: None,
        };
        row.quantize();
        assert_eq!(row.gap_text(), "-0.033333333333");
        let f = row.fields();
        assert_eq!(f[8], "0.3");
        assert_eq!(f[9], "0.333333333333");
    }
}
