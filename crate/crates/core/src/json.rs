//! JSON conventions shared by every report: floats are written with 17
//! significant digits and a signed exponent (`1.0000000000000000e+0`),
//! non-finite values as `null`, and ambient
//! points as `{"re": [...], "im": [...]}`.

use num::complex::Complex64;
use serde::de::Deserializer;
use serde::ser::{SerializeSeq, Serializer};
use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;

use crate::config::AmbientPoint;

pub fn format_real(x: f64) -> String {
    if x.is_finite() {
        let s = format!("{x:.16e}");
        match s.split_once('e') {
            Some((mantissa, exp)) if !exp.starts_with('-') => format!("{mantissa}e+{exp}"),
            _ => s,
        }
    } else {
        "null".to_string()
    }
}

fn raw(x: f64) -> Box<RawValue> {
    RawValue::from_string(format_real(x)).expect("formatted float is valid JSON")
}

pub fn real<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    raw(*x).serialize(s)
}

pub fn reals<S: Serializer>(xs: &[f64], s: S) -> Result<S::Ok, S::Error> {
    let mut seq = s.serialize_seq(Some(xs.len()))?;
    for &x in xs {
        seq.serialize_element(&raw(x))?;
    }
    seq.end()
}

pub fn real_rows<S: Serializer>(rows: &[Vec<f64>], s: S) -> Result<S::Ok, S::Error> {
    let mut seq = s.serialize_seq(Some(rows.len()))?;
    for row in rows {
        let row: Vec<Box<RawValue>> = row.iter().map(|&x| raw(x)).collect();
        seq.serialize_element(&row)?;
    }
    seq.end()
}

pub fn opt_real<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match x {
        Some(v) => real(v, s),
        None => s.serialize_none(),
    }
}

pub fn complexes<S: Serializer>(zs: &[Complex64], s: S) -> Result<S::Ok, S::Error> {
    PointDoc::from_complex(zs, None).serialize(s)
}

#[derive(Serialize)]
struct PointDoc {
    #[serde(serialize_with = "reals")]
    re: Vec<f64>,
    #[serde(serialize_with = "reals")]
    im: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    support: Option<Vec<usize>>,
}

impl PointDoc {
    fn from_complex(zs: &[Complex64], support: Option<Vec<usize>>) -> Self {
        Self {
            re: zs.iter().map(|z| z.re).collect(),
            im: zs.iter().map(|z| z.im).collect(),
            support,
        }
    }
}

#[derive(Deserialize)]
struct PointInput {
    re: Vec<f64>,
    #[serde(default)]
    im: Option<Vec<f64>>,
    #[serde(default)]
    zero_threshold: Option<f64>,
}

impl Serialize for AmbientPoint {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        PointDoc::from_complex(
            self.coords(),
            Some(self.support().iter().map(|i| i + 1).collect()),
        )
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for AmbientPoint {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error as _;
        let p = PointInput::deserialize(d)?;
        let im = p.im.unwrap_or_else(|| vec![0.0; p.re.len()]);
        if im.len() != p.re.len() {
            return Err(D::Error::custom("re and im have different lengths"));
        }
        let coords = p
            .re
            .iter()
            .zip(&im)
            .map(|(&r, &i)| Complex64::new(r, i))
            .collect();
        Ok(AmbientPoint::with_threshold(
            coords,
            p.zero_threshold.unwrap_or(0.0),
        ))
    }
}
