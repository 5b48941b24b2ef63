//! Sampled statistics and their CSV form.

use std::fmt;
use std::io::{self, Write};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Which model produced a curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelTag {
    Reference,
    SosAnalytic,
    Empirical,
}

impl ModelTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            ModelTag::Reference => "reference",
            ModelTag::SosAnalytic => "sos",
            ModelTag::Empirical => "empirical",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "reference" => Some(ModelTag::Reference),
            "sos" => Some(ModelTag::SosAnalytic),
            "empirical" => Some(ModelTag::Empirical),
            _ => None,
        }
    }
}

impl fmt::Display for ModelTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CurveValues {
    Real(Vec<f64>),
    Complex(Vec<Complex64>),
}

impl CurveValues {
    pub fn len(&self) -> usize {
        match self {
            CurveValues::Real(v) => v.len(),
            CurveValues::Complex(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Abscissa/ordinate pairs for one statistic, tagged with their origin.
#[derive(Debug, Clone, PartialEq)]
pub struct StatCurve {
    pub quantity: String,
    pub model: ModelTag,
    pub scenario_id: String,
    pub x: Vec<f64>,
    pub values: CurveValues,
    pub stderr: Option<Vec<f64>>,
    /// Free-form diagnostics attached while computing the curve.
    pub notes: Vec<String>,
}

impl StatCurve {
    pub fn real(quantity: &str, model: ModelTag, scenario_id: &str, x: Vec<f64>, y: Vec<f64>) -> Self {
        Self {
            quantity: quantity.to_string(),
            model,
            scenario_id: scenario_id.to_string(),
            x,
            values: CurveValues::Real(y),
            stderr: None,
            notes: Vec::new(),
        }
    }

    pub fn complex(
        quantity: &str,
        model: ModelTag,
        scenario_id: &str,
        x: Vec<f64>,
        y: Vec<Complex64>,
    ) -> Self {
        Self {
            quantity: quantity.to_string(),
            model,
            scenario_id: scenario_id.to_string(),
            x,
            values: CurveValues::Complex(y),
            stderr: None,
            notes: Vec::new(),
        }
    }

    pub fn with_stderr(mut self, stderr: Vec<f64>) -> Self {
        self.stderr = Some(stderr);
        self
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Absolute values of the ordinates.
    pub fn magnitudes(&self) -> Vec<f64> {
        match &self.values {
            CurveValues::Real(v) => v.iter().map(|y| y.abs()).collect(),
            CurveValues::Complex(v) => v.iter().map(|y| y.norm()).collect(),
        }
    }

    /// Real ordinates, or the real parts of complex ones.
    pub fn real_values(&self) -> Vec<f64> {
        match &self.values {
            CurveValues::Real(v) => v.clone(),
            CurveValues::Complex(v) => v.iter().map(|y| y.re).collect(),
        }
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let complex = matches!(self.values, CurveValues::Complex(_));
        let mut header = String::from("x,");
        header.push_str(if complex { "value_real,value_imag" } else { "value" });
        if self.stderr.is_some() {
            header.push_str(",stderr");
        }
        header.push_str(",model_tag,scenario_id");
        writeln!(w, "{header}")?;
        for i in 0..self.x.len() {
            write!(w, "{}", num(self.x[i]))?;
            match &self.values {
                CurveValues::Real(v) => write!(w, ",{}", num(v[i]))?,
                CurveValues::Complex(v) => write!(w, ",{},{}", num(v[i].re), num(v[i].im))?,
            }
            if let Some(se) = &self.stderr {
                write!(w, ",{}", num(se[i]))?;
            }
            writeln!(w, ",{},{}", self.model, self.scenario_id)?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV output is ASCII")
    }

    /// Parses the output of [`StatCurve::write_csv`]. The quantity name is not
    /// part of the file and must be supplied.
    pub fn from_csv(quantity: &str, text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header: Vec<&str> = lines
            .next()
            .ok_or_else(|| Error::Contract("empty CSV".into()))?
            .split(',')
            .collect();
        let complex = header.contains(&"value_real");
        let has_stderr = header.contains(&"stderr");
        let expected = 1 + if complex { 2 } else { 1 } + usize::from(has_stderr) + 2;
        if header.len() != expected || header[0] != "x" {
            return Err(Error::Contract(format!("unrecognized CSV header {header:?}")));
        }
        let mut x = Vec::new();
        let mut re = Vec::new();
        let mut im = Vec::new();
        let mut se = Vec::new();
        let mut model = None;
        let mut scenario = String::new();
        for (lineno, line) in lines.enumerate() {
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != expected {
                return Err(Error::Contract(format!("line {}: expected {expected} columns", lineno + 2)));
            }
            let parse = |s: &str| -> Result<f64> {
                s.parse::<f64>()
                    .map_err(|_| Error::Contract(format!("line {}: bad number {s:?}", lineno + 2)))
            };
            let mut c = 0;
            x.push(parse(cols[c])?);
            c += 1;
            re.push(parse(cols[c])?);
            c += 1;
            if complex {
                im.push(parse(cols[c])?);
                c += 1;
            }
            if has_stderr {
                se.push(parse(cols[c])?);
                c += 1;
            }
            model = ModelTag::parse(cols[c]);
            scenario = cols[c + 1].to_string();
        }
        let values = if complex {
            CurveValues::Complex(re.into_iter().zip(im).map(|(a, b)| Complex64::new(a, b)).collect())
        } else {
            CurveValues::Real(re)
        };
        Ok(Self {
            quantity: quantity.to_string(),
            model: model.unwrap_or(ModelTag::Reference),
            scenario_id: scenario,
            x,
            values,
            stderr: has_stderr.then_some(se),
            notes: Vec::new(),
        })
    }
}

/// 17 significant digits, enough to round-trip any f64.
fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}
