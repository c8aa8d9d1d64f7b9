//! Symbol alphabets: M-PSK, square M-QAM and arbitrary custom sets.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Psk,
    Qam,
    Custom,
}

/// An immutable symbol set with its minimum distance and mean energy cached.
///
/// QAM symbols are ordered so that index `k = a * side + b` holds
/// `((2a - side + 1) + (2b - side + 1)i) * scale`, i.e. the real level varies
/// slowest. PSK symbol `k` sits at angle `2πk/M`.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    kind: Kind,
    symbols: Vec<C64>,
    d_min: f64,
    avg_energy: f64,
}

/// Lattice description of a square QAM set, per real dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QamLattice {
    /// Number of amplitude levels per real dimension (`√M`).
    pub side: usize,
    /// Half the spacing between adjacent levels.
    pub scale: f64,
}

impl QamLattice {
    /// Amplitude of level `i` in one real dimension.
    pub fn level(&self, i: usize) -> f64 {
        (2.0 * i as f64 - self.side as f64 + 1.0) * self.scale
    }
}

impl Constellation {
    pub fn psk(order: usize) -> Result<Self> {
        if order < 2 {
            return Err(Error::InvalidConstellation(format!(
                "PSK needs M >= 2, got {order}"
            )));
        }
        let symbols = (0..order)
            .map(|k| C64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / order as f64))
            .collect();
        Self::from_parts(Kind::Psk, symbols)
    }

    pub fn qam(order: usize) -> Result<Self> {
        let side = qam_side(order).ok_or_else(|| {
            Error::InvalidConstellation(format!(
                "QAM needs M to be an even power of two and >= 4, got {order}"
            ))
        })?;
        let lattice = QamLattice {
            side,
            scale: (1.5 / (order as f64 - 1.0)).sqrt(),
        };
        let mut symbols = Vec::with_capacity(order);
        for a in 0..side {
            for b in 0..side {
                symbols.push(C64::new(lattice.level(a), lattice.level(b)));
            }
        }
        Self::from_parts(Kind::Qam, symbols)
    }

    /// Arbitrary symbol set, kept exactly as given (no normalization).
    pub fn custom(symbols: Vec<C64>) -> Result<Self> {
        if symbols.len() < 2 {
            return Err(Error::InvalidConstellation(
                "a constellation needs at least two symbols".into(),
            ));
        }
        if symbols.iter().any(|s| !s.re.is_finite() || !s.im.is_finite()) {
            return Err(Error::InvalidConstellation("non-finite symbol".into()));
        }
        let c = Self::from_parts(Kind::Custom, symbols)?;
        if c.d_min == 0.0 {
            return Err(Error::InvalidConstellation("duplicate symbols".into()));
        }
        Ok(c)
    }

    fn from_parts(kind: Kind, symbols: Vec<C64>) -> Result<Self> {
        let d_min = pairwise_min_distance(&symbols);
        let avg_energy = symbols.iter().map(|s| s.norm_sqr()).sum::<f64>() / symbols.len() as f64;
        Ok(Self {
            kind,
            symbols,
            d_min,
            avg_energy,
        })
    }

    pub fn kind(&self) -> Kind {
        self.kind
    }

    pub fn symbols(&self) -> &[C64] {
        &self.symbols
    }

    pub fn symbol(&self, index: usize) -> C64 {
        self.symbols[index]
    }

    /// Cardinality `M`.
    pub fn order(&self) -> usize {
        self.symbols.len()
    }

    pub fn min_distance(&self) -> f64 {
        self.d_min
    }

    pub fn avg_energy(&self) -> f64 {
        self.avg_energy
    }

    /// Per-dimension lattice structure, present only for square QAM.
    pub fn qam_lattice(&self) -> Option<QamLattice> {
        match self.kind {
            Kind::Qam => {
                let side = qam_side(self.order())?;
                Some(QamLattice {
                    side,
                    scale: (1.5 / (self.order() as f64 - 1.0)).sqrt(),
                })
            }
            _ => None,
        }
    }

    /// Index of the closest symbol to `z`; ties go to the lowest index.
    pub fn nearest_symbol(&self, z: C64) -> Result<usize> {
        if !z.re.is_finite() || !z.im.is_finite() {
            return Err(Error::NonFinite("nearest_symbol input"));
        }
        Ok(self.nearest_unchecked(z))
    }

    pub(crate) fn nearest_unchecked(&self, z: C64) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (k, s) in self.symbols.iter().enumerate() {
            let d = (s - z).norm_sqr();
            if d < best_d {
                best_d = d;
                best = k;
            }
        }
        best
    }

    /// Map symbol indices to their complex points.
    pub fn map(&self, indices: &[usize]) -> Vec<C64> {
        indices.iter().map(|&k| self.symbols[k]).collect()
    }
}

/// Exact minimum over all distinct pairs.
pub fn pairwise_min_distance(symbols: &[C64]) -> f64 {
    let mut best = f64::INFINITY;
    for (i, a) in symbols.iter().enumerate() {
        for b in &symbols[i + 1..] {
            best = best.min((a - b).norm());
        }
    }
    best
}

fn qam_side(order: usize) -> Option<usize> {
    if order < 4 || !order.is_power_of_two() || order.trailing_zeros() % 2 != 0 {
        return None;
    }
    Some(1 << (order.trailing_zeros() / 2))
}

/// Serializable constellation description, as found in experiment configs.
///
/// Deserializes from a table (`{ kind = "qam", M = 16 }`) or from one of the
/// short names accepted by `FromStr` (`"16qam"`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpecRepr")]
pub struct ConstellationSpec {
    pub kind: Kind,
    #[serde(rename = "M", default, skip_serializing_if = "Option::is_none")]
    pub order: Option<usize>,
    /// Custom symbols as `(re, im)` pairs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symbols: Option<Vec<(f64, f64)>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecTable {
    kind: Kind,
    #[serde(rename = "M", default)]
    order: Option<usize>,
    #[serde(default)]
    symbols: Option<Vec<(f64, f64)>>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum SpecRepr {
    Short(String),
    Table(SpecTable),
}

impl TryFrom<SpecRepr> for ConstellationSpec {
    type Error = Error;

    fn try_from(repr: SpecRepr) -> Result<Self> {
        match repr {
            SpecRepr::Short(s) => s.parse(),
            SpecRepr::Table(t) => Ok(Self {
                kind: t.kind,
                order: t.order,
                symbols: t.symbols,
            }),
        }
    }
}

impl ConstellationSpec {
    pub fn psk(order: usize) -> Self {
        Self {
            kind: Kind::Psk,
            order: Some(order),
            symbols: None,
        }
    }

    pub fn qam(order: usize) -> Self {
        Self {
            kind: Kind::Qam,
            order: Some(order),
            symbols: None,
        }
    }

    pub fn build(&self) -> Result<Constellation> {
        match self.kind {
            Kind::Psk | Kind::Qam => {
                let order = self.order.ok_or_else(|| {
                    Error::InvalidConstellation("missing M for psk/qam".into())
                })?;
                if self.symbols.is_some() {
                    return Err(Error::InvalidConstellation(
                        "symbols are only allowed for kind = \"custom\"".into(),
                    ));
                }
                if self.kind == Kind::Psk {
                    Constellation::psk(order)
                } else {
                    Constellation::qam(order)
                }
            }
            Kind::Custom => {
                let pts = self.symbols.as_ref().ok_or_else(|| {
                    Error::InvalidConstellation("custom constellation needs symbols".into())
                })?;
                if let Some(order) = self.order {
                    if order != pts.len() {
                        return Err(Error::InvalidConstellation(format!(
                            "M = {order} but {} symbols listed",
                            pts.len()
                        )));
                    }
                }
                Constellation::custom(pts.iter().map(|&(re, im)| C64::new(re, im)).collect())
            }
        }
    }
}

impl fmt::Display for ConstellationSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.kind, self.order) {
            (Kind::Psk, Some(m)) => write!(f, "{m}-PSK"),
            (Kind::Qam, Some(m)) => write!(f, "{m}-QAM"),
            (Kind::Custom, _) => write!(f, "custom"),
            (_, None) => write!(f, "?"),
        }
    }
}

/// Short names: `bpsk`, `qpsk` (= 4-QAM), `8psk`, `psk8`, `16qam`, `qam16`, ...
impl FromStr for ConstellationSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        match s.as_str() {
            "bpsk" => return Ok(Self::psk(2)),
            "qpsk" => return Ok(Self::qam(4)),
            _ => {}
        }
        let bad = || Error::InvalidArgument(format!("unknown constellation '{s}'"));
        for (tag, kind) in [("psk", Kind::Psk), ("qam", Kind::Qam)] {
            let digits = s
                .strip_suffix(tag)
                .or_else(|| s.strip_prefix(tag))
                .map(|d| d.trim_matches(|c| c == '-' || c == ':'));
            if let Some(d) = digits {
                let order = d.parse().map_err(|_| bad())?;
                return Ok(Self {
                    kind,
                    order: Some(order),
                    symbols: None,
                });
            }
        }
        Err(bad())
    }
}
