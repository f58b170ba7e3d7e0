//! Field content and vertices of a polynomial model, with scaling dimensions affine in α.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// `slope · α + offset`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Affine {
    pub slope: f64,
    pub offset: f64,
}

impl Affine {
    pub const ZERO: Affine = Affine { slope: 0.0, offset: 0.0 };

    pub fn at(&self, alpha: f64) -> f64 {
        self.slope * alpha + self.offset
    }

    pub fn add(self, o: Affine) -> Affine {
        Affine { slope: self.slope + o.slope, offset: self.offset + o.offset }
    }

    /// Supremum over the open interval `(lo, hi)`; attained only in the closure.
    pub fn sup_open(&self, lo: f64, hi: f64) -> f64 {
        self.at(lo).max(self.at(hi))
    }
}

impl fmt::Display for Affine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.slope, self.offset) {
            (s, o) if s == 0.0 => write!(f, "{o}"),
            (s, o) if o == 0.0 => write!(f, "{s}*alpha"),
            (s, o) if o < 0.0 => write!(f, "{s}*alpha - {}", -o),
            (s, o) => write!(f, "{s}*alpha + {o}"),
        }
    }
}

/// Parses sums like `alpha`, `alpha - 1`, `-2*alpha`, `0.5 + 3alpha`.
impl FromStr for Affine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let text: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if text.is_empty() {
            return Err(invalid("empty scaling expression"));
        }
        let mut out = Affine::ZERO;
        let mut terms = Vec::new();
        let mut start = 0;
        for (i, c) in text.char_indices() {
            let after_exp = i > 0 && matches!(text.as_bytes()[i - 1], b'e' | b'E') && text[..i - 1].ends_with(|d: char| d.is_ascii_digit());
            if (c == '+' || c == '-') && i > start && !after_exp {
                terms.push(&text[start..i]);
                start = i;
            }
        }
        terms.push(&text[start..]);
        for t in terms {
            let (sign, body) = match t.as_bytes().first() {
                Some(b'-') => (-1.0, &t[1..]),
                Some(b'+') => (1.0, &t[1..]),
                _ => (1.0, t),
            };
            if let Some(coef) = body.strip_suffix("alpha") {
                let coef = coef.strip_suffix('*').unwrap_or(coef);
                let c = if coef.is_empty() { 1.0 } else { parse_number(coef, s)? };
                out.slope += sign * c;
            } else if let Some(rest) = body.strip_prefix("alpha*") {
                out.slope += sign * parse_number(rest, s)?;
            } else {
                out.offset += sign * parse_number(body, s)?;
            }
        }
        Ok(out)
    }
}

fn parse_number(t: &str, whole: &str) -> Result<f64> {
    t.parse::<f64>().map_err(|_| invalid(format!("cannot parse scaling expression `{whole}`")))
}

impl<'de> Deserialize<'de> for AffineText {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(x) => Ok(AffineText(Affine { slope: 0.0, offset: x })),
            Raw::Text(s) => s.parse().map(AffineText).map_err(serde::de::Error::custom),
        }
    }
}

/// Scaling expression as it appears in model files: a number or an affine text in `alpha`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AffineText(pub Affine);

impl Serialize for AffineText {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.0.to_string())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldSpec {
    pub name: String,
    pub beta: AffineText,
    /// Field carries a derivative.
    #[serde(default)]
    pub derivative: bool,
    /// May appear as an external leg of a multiscale diagram.
    #[serde(default = "yes")]
    pub external: bool,
    /// Local parts with an odd number of these legs vanish by symmetry.
    #[serde(default)]
    pub odd: bool,
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VertexSpec {
    pub fields: Vec<String>,
    #[serde(default = "one")]
    pub coupling_exponent: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    #[serde(default)]
    pub name: String,
    pub dimension: u32,
    /// Open interval of α over which classifications are made.
    pub alpha_range: (f64, f64),
    pub fields: Vec<FieldSpec>,
    pub vertices: Vec<VertexSpec>,
}

impl ModelSpec {
    /// The stationary field, its derivative and the two-component massive field, coupled by
    /// one cubic vertex; `φ` is never an external leg.
    pub fn phi_dphi_sigma() -> Self {
        let f = |name: &str, beta: Affine, derivative, external, odd| FieldSpec {
            name: name.into(),
            beta: AffineText(beta),
            derivative,
            external,
            odd,
        };
        Self {
            name: "phi-dphi-sigma".into(),
            dimension: 1,
            alpha_range: (0.125, 0.25),
            fields: vec![
                f("phi", Affine { slope: 1.0, offset: 0.0 }, false, false, false),
                f("dphi", Affine { slope: 1.0, offset: -1.0 }, true, true, true),
                f("sigma", Affine { slope: -2.0, offset: 0.0 }, false, true, true),
            ],
            vertices: vec![VertexSpec { fields: vec!["phi".into(), "dphi".into(), "sigma".into()], coupling_exponent: 1.0 }],
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: ModelSpec = serde_json::from_str(text)?;
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dimension == 0 {
            return Err(invalid("dimension must be at least 1"));
        }
        let (lo, hi) = self.alpha_range;
        if !(lo < hi) {
            return Err(invalid("alpha range must be a nonempty interval"));
        }
        for (i, f) in self.fields.iter().enumerate() {
            if self.fields[..i].iter().any(|g| g.name == f.name) {
                return Err(invalid(format!("field `{}` declared twice", f.name)));
            }
            if f.beta.0.sup_open(lo, hi) >= 1.0 {
                return Err(invalid(format!("field `{}` needs scaling dimension below 1", f.name)));
            }
        }
        for v in &self.vertices {
            for name in &v.fields {
                self.field(name)?;
            }
        }
        Ok(())
    }

    pub fn field(&self, name: &str) -> Result<&FieldSpec> {
        self.fields.iter().find(|f| f.name == name).ok_or_else(|| invalid(format!("unknown field `{name}`")))
    }

    pub fn beta(&self, name: &str) -> Result<Affine> {
        Ok(self.field(name)?.beta.0)
    }

    /// Every vertex must satisfy `Σ β = -D` identically in α.
    pub fn check_just_renormalizable(&self) -> Result<()> {
        let d = f64::from(self.dimension);
        let mid = 0.5 * (self.alpha_range.0 + self.alpha_range.1);
        for (q, v) in self.vertices.iter().enumerate() {
            let mut s = Affine::ZERO;
            for name in &v.fields {
                s = s.add(self.beta(name)?);
            }
            if s.slope.abs() > 1e-12 || (s.offset + d).abs() > 1e-12 {
                return Err(Error::NonRenormalizable { vertex: q, sum: s.at(mid), expected: -d });
            }
        }
        Ok(())
    }
}
