//! Time-stamped tables of named scalar diagnostics.

use std::fmt::Write as _;

use crate::error::{GeoflowError, Result};

/// Column layout of the curve shortening diagnostics.
pub const CSF_COLUMNS: [&str; 7] = [
    "length",
    "area",
    "sup_abs_kappa",
    "iso_sup",
    "huisken",
    "len_residual",
    "kappa_residual",
];

/// Optional trailing column written when a partner curve is co-evolved.
pub const CSF_PARTNER_COLUMN: &str = "min_distance";

pub const HEAT_COLUMNS: [&str; 5] = ["l2", "energy", "entropy", "fisher", "liyau_min"];

pub const RICCI_COLUMNS: [&str; 5] = ["sup_abs_R", "min_R", "total_R_measure", "area", "perelman_F"];

pub const MCF_COLUMNS: [&str; 3] = ["area", "sup_u", "inf_u"];

/// Rows of `(t, values)` with strictly increasing `t`. Missing entries are
/// `None` and serialize as empty CSV fields.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticSeries {
    columns: Vec<String>,
    rows: Vec<(f64, Vec<Option<f64>>)>,
}

impl DiagnosticSeries {
    pub fn new<S: AsRef<str>>(columns: &[S]) -> Self {
        DiagnosticSeries {
            columns: columns.iter().map(|c| c.as_ref().to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn push(&mut self, t: f64, values: Vec<Option<f64>>) -> Result<()> {
        if values.len() != self.columns.len() {
            return Err(GeoflowError::Contract(format!(
                "row has {} values for {} columns",
                values.len(),
                self.columns.len()
            )));
        }
        if let Some((last, _)) = self.rows.last() {
            if !(t > *last) {
                return Err(GeoflowError::Contract(format!(
                    "diagnostic times must increase strictly ({t} after {last})"
                )));
            }
        }
        self.rows.push((t, values));
        Ok(())
    }

    pub fn times(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.0).collect()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<Option<f64>>> {
        let i = self.column_index(name)?;
        Some(self.rows.iter().map(|r| r.1[i]).collect())
    }

    /// `(t, value)` pairs of a column, skipping missing entries.
    pub fn points(&self, name: &str) -> Option<Vec<(f64, f64)>> {
        let i = self.column_index(name)?;
        Some(self.rows.iter().filter_map(|(t, v)| v[i].map(|x| (*t, x))).collect())
    }

    pub fn last(&self) -> Option<(f64, &[Option<f64>])> {
        self.rows.last().map(|(t, v)| (*t, v.as_slice()))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for c in &self.columns {
            out.push(',');
            out.push_str(c);
        }
        out.push('\n');
        for (t, values) in &self.rows {
            let _ = write!(out, "{t}");
            for v in values {
                out.push(',');
                if let Some(x) = v {
                    let _ = write!(out, "{x}");
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| GeoflowError::Parse("empty diagnostic series".into()))?;
        let mut names = header.trim().split(',');
        if names.next() != Some("t") {
            return Err(GeoflowError::Parse("first column must be `t`".into()));
        }
        let columns: Vec<&str> = names.collect();
        let mut series = DiagnosticSeries::new(&columns);
        for (row, line) in lines.enumerate() {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != columns.len() + 1 {
                return Err(GeoflowError::Parse(format!(
                    "row {row} has {} fields, expected {}",
                    fields.len(),
                    columns.len() + 1
                )));
            }
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| GeoflowError::Parse(format!("row {row}: `{s}`: {e}")))
            };
            let t = parse(fields[0])?;
            let values = fields[1..]
                .iter()
                .map(|f| if f.trim().is_empty() { Ok(None) } else { parse(f).map(Some) })
                .collect::<Result<Vec<_>>>()?;
            series.push(t, values)?;
        }
        Ok(series)
    }
}

/// True when each value is at most `tol` above its predecessor.
pub fn non_increasing(values: &[f64], tol: f64) -> bool {
    values.windows(2).all(|w| w[1] <= w[0] + tol)
}

/// Largest single-step increase (0 when the sequence never increases).
pub fn max_increase(values: &[f64]) -> f64 {
    values.windows(2).fold(0.0, |m, w| m.max(w[1] - w[0]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rejects_non_increasing_time() {
        let mut s = DiagnosticSeries::new(&["a"]);
        s.push(0.0, vec![Some(1.0)]).unwrap();
        assert!(s.push(0.0, vec![Some(1.0)]).is_err());
        assert!(s.push(1.0, vec![]).is_err());
    }

    #[test]
    fn missing_values_are_empty_fields() {
        let mut s = DiagnosticSeries::new(&CSF_COLUMNS);
        s.push(0.5, vec![Some(1.0), None, None, None, None, None, Some(2.5)]).unwrap();
        let csv = s.to_csv();
        assert_eq!(
            csv,
            "t,length,area,sup_abs_kappa,iso_sup,huisken,len_residual,kappa_residual\n0.5,1,,,,,,2.5\n"
        );
    }

    proptest! {
        #[test]
        fn csv_round_trip(rows in proptest::collection::vec((0.0f64..1.0, proptest::option::of(-1e6f64..1e6)), 1..20)) {
            let mut s = DiagnosticSeries::new(&["x", "y"]);
            let mut t = 0.0;
            for (dt, v) in rows {
                t += dt + 1e-3;
                s.push(t, vec![v, Some(dt * 3.0)]).unwrap();
            }
            prop_assert_eq!(DiagnosticSeries::from_csv(&s.to_csv()).unwrap(), s);
        }
    }
}
