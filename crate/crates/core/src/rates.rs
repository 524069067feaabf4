//! Closed-form rate functions and the phase-diagram classifier.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::env::validate_alpha;
use crate::{Error, Result};

/// Width of the band around a boundary line inside which a point is reported
/// as lying on the boundary.
pub const BOUNDARY_SLACK: f64 = 1e-12;

/// `kappa(t) = ((1+t) ln(1+t) + (1-t) ln(1-t)) / 2` on `[0, 1]`, `+inf` beyond.
pub fn kappa(t: f64) -> Result<f64> {
    if t.is_nan() || t < 0.0 {
        return Err(Error::param(format!("kappa needs t >= 0, got {t}")));
    }
    if t > 1.0 {
        return Ok(f64::INFINITY);
    }
    let xlogx = |x: f64| if x == 0.0 { 0.0 } else { x * x.ln() };
    Ok(0.5 * (xlogx(1.0 + t) + xlogx(1.0 - t)))
}

fn check_signs(u: f64, v: f64) -> Result<()> {
    if u.is_nan() || v.is_nan() || u > 0.0 || v < 0.0 {
        return Err(Error::param(format!("need u <= 0 <= v, got u={u}, v={v}")));
    }
    Ok(())
}

/// Stretching rate `I(u,v) = (min(|u|,v) + v - u)^2 / 2`.
pub fn rate_i(u: f64, v: f64) -> Result<f64> {
    check_signs(u, v)?;
    let s = u.abs().min(v) + v - u;
    Ok(0.5 * s * s)
}

/// Folding rate `pi^2 / (2 (v-u)^2)`; `+inf` for a degenerate interval.
pub fn rate_ibar(u: f64, v: f64) -> Result<f64> {
    check_signs(u, v)?;
    let w = v - u;
    if w == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(std::f64::consts::PI.powi(2) / (2.0 * w * w))
}

/// Exponent of `N` in the entropic cost of a range of order `N^xi`: `|2 xi - 1|`.
pub fn entropic_cost_exponent(xi: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&xi) {
        return Err(Error::param(format!("xi must lie in [0,1], got {xi}")));
    }
    Ok((2.0 * xi - 1.0).abs())
}

/// A scaling exponent that may be switched off (`+inf`, i.e. zero coupling).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exponent {
    Value(f64),
    Disabled,
}

impl Exponent {
    /// The exponent with `Disabled` read as `+inf`.
    pub fn as_f64(self) -> f64 {
        match self {
            Exponent::Value(v) => v,
            Exponent::Disabled => f64::INFINITY,
        }
    }

    pub fn is_disabled(self) -> bool {
        matches!(self, Exponent::Disabled)
    }

    /// `N^{-exponent}`, zero when disabled.
    pub fn decay(self, n: usize) -> f64 {
        match self {
            Exponent::Value(v) => (n as f64).powf(-v),
            Exponent::Disabled => 0.0,
        }
    }
}

impl std::str::FromStr for Exponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if t.eq_ignore_ascii_case("inf") || t.eq_ignore_ascii_case("+inf") || t.eq_ignore_ascii_case("disabled") {
            return Ok(Exponent::Disabled);
        }
        let v: f64 = t.parse().map_err(|_| Error::param(format!("not an exponent: {s:?}")))?;
        if v.is_nan() {
            return Err(Error::param("exponent is NaN"));
        }
        if v == f64::INFINITY {
            Ok(Exponent::Disabled)
        } else {
            Ok(Exponent::Value(v))
        }
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Value(v) => write!(f, "{v}"),
            Exponent::Disabled => write!(f, "inf"),
        }
    }
}

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Exponent::Value(v) => s.serialize_f64(*v),
            Exponent::Disabled => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Int(i64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(if v == f64::INFINITY { Exponent::Disabled } else { Exponent::Value(v) }),
            Raw::Int(v) => Ok(Exponent::Value(v as f64)),
            Raw::Str(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HSign {
    Positive,
    Zero,
    Negative,
}

impl HSign {
    pub fn of(h: f64) -> Self {
        if h > 0.0 {
            HSign::Positive
        } else if h < 0.0 {
            HSign::Negative
        } else {
            HSign::Zero
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Region {
    R1,
    R2,
    R3,
    R4,
    R5,
    R6,
    Rt4,
    Rt5,
    BoundaryRt4Rt5,
    OtherBoundary(Vec<Region>),
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Region::OtherBoundary(ids) => {
                let names: Vec<String> = ids.iter().map(|r| r.to_string()).collect();
                write!(f, "OtherBoundary({})", names.join(","))
            }
            Region::R1 => write!(f, "R1"),
            Region::R2 => write!(f, "R2"),
            Region::R3 => write!(f, "R3"),
            Region::R4 => write!(f, "R4"),
            Region::R5 => write!(f, "R5"),
            Region::R6 => write!(f, "R6"),
            Region::Rt4 => write!(f, "Rt4"),
            Region::Rt5 => write!(f, "Rt5"),
            Region::BoundaryRt4Rt5 => write!(f, "BoundaryRt4Rt5"),
        }
    }
}

/// The limit object attached to a region.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LimitDescriptor {
    /// `sup { beta (X_v - X_u) - I(u,v) }`
    WR2,
    /// `sup { beta (X_v - X_u) : |u| ^ v + v - u <= 1 }`
    WR3,
    /// `sup { beta (X_v - X_u) - h (v - u) }`
    WR4,
    /// `-(3/2) (h pi)^{2/3}`
    Folding,
    /// `-2h`
    MinusTwoH,
    /// `h^2 / 2`
    HalfHSquared,
    /// `ln((e^{2|h|} - 1)/2) - |h|`
    BoundaryConstant,
    /// `|h|`
    AbsH,
    /// `Z -> 1`
    Unity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionLabel {
    pub region: Region,
    /// Predicted end-to-end exponent.
    pub xi: Option<f64>,
    /// `theta` with `log Z` of order `N^theta`.
    pub logz_exponent: Option<f64>,
    pub limit: Option<LimitDescriptor>,
}

/// A bound on `gamma` as a function of `zeta`.
#[derive(Debug, Clone)]
enum Bound {
    /// `slope * zeta + intercept`
    Lin(f64, f64),
    Min(Box<Bound>, Box<Bound>),
    Max(Box<Bound>, Box<Bound>),
}

impl Bound {
    fn eval(&self, zeta: f64) -> f64 {
        match self {
            Bound::Lin(s, c) => {
                if *s == 0.0 {
                    *c
                } else {
                    s * zeta + c
                }
            }
            Bound::Min(a, b) => a.eval(zeta).min(b.eval(zeta)),
            Bound::Max(a, b) => a.eval(zeta).max(b.eval(zeta)),
        }
    }

    fn c(v: f64) -> Bound {
        Bound::Lin(0.0, v)
    }

    fn min(a: Bound, b: Bound) -> Bound {
        Bound::Min(Box::new(a), Box::new(b))
    }

    fn max(a: Bound, b: Bound) -> Bound {
        Bound::Max(Box::new(a), Box::new(b))
    }
}

#[derive(Debug, Clone)]
enum Ineq {
    GammaAbove(Bound),
    GammaBelow(Bound),
    ZetaAbove(f64),
    ZetaBelow(f64),
}

impl Ineq {
    /// Positive when satisfied; NaN (undecidable `inf - inf`) reads as violated.
    fn margin(&self, gamma: f64, zeta: f64) -> f64 {
        let m = match self {
            Ineq::GammaAbove(b) => gamma - b.eval(zeta),
            Ineq::GammaBelow(b) => b.eval(zeta) - gamma,
            Ineq::ZetaAbove(c) => zeta - c,
            Ineq::ZetaBelow(c) => c - zeta,
        };
        if m.is_nan() {
            f64::NEG_INFINITY
        } else {
            m
        }
    }
}

/// Which inequality table applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Diagram {
    /// `alpha` in (1,2], `h >= 0`.
    Superdiffusive,
    /// `alpha` in [1/2, 1), `h >= 0`.
    Intermediate,
    /// `alpha` in (0, 1/2), `h >= 0`.
    Light,
    /// `alpha >= 1/2`, `h < 0`.
    NegativeField,
    /// `alpha < 1/2`, `h < 0`.
    NegativeFieldLight,
}

impl Diagram {
    pub fn of(alpha: f64, h_sign: HSign) -> Self {
        match (h_sign, alpha) {
            (HSign::Negative, a) if a >= 0.5 => Diagram::NegativeField,
            (HSign::Negative, _) => Diagram::NegativeFieldLight,
            (_, a) if a > 1.0 => Diagram::Superdiffusive,
            (_, a) if a >= 0.5 => Diagram::Intermediate,
            _ => Diagram::Light,
        }
    }

    pub const ALL: [Diagram; 5] = [
        Diagram::Superdiffusive,
        Diagram::Intermediate,
        Diagram::Light,
        Diagram::NegativeField,
        Diagram::NegativeFieldLight,
    ];
}

fn table(diagram: Diagram, alpha: f64) -> Vec<(Region, Vec<Ineq>)> {
    use Ineq::*;
    let c0 = (1.0 - alpha) / alpha;
    let half_inv = 1.0 / (2.0 * alpha);
    let l2 = || Bound::Lin((2.0 * alpha - 1.0) / alpha, -(alpha - 1.0) / alpha);
    let l5 = || Bound::Lin((2.0 * alpha + 1.0) / (3.0 * alpha), -(alpha - 1.0) / (3.0 * alpha));
    let zm = || Bound::Lin(1.0, c0);
    let z = || Bound::Lin(1.0, 0.0);
    let r1 = |lower: f64| (Region::R1, vec![GammaAbove(Bound::c(lower)), ZetaAbove(0.5)]);
    let r2 = || (Region::R2, vec![GammaAbove(Bound::c(c0)), GammaBelow(Bound::min(l2(), Bound::c(half_inv)))]);
    let r3 = || (Region::R3, vec![GammaBelow(Bound::c(c0)), GammaBelow(zm())]);
    match diagram {
        Diagram::Superdiffusive => vec![
            r1(half_inv),
            r2(),
            r3(),
            (Region::R4, vec![GammaAbove(Bound::max(l2(), zm())), GammaBelow(Bound::min(l5(), z()))]),
            (Region::R5, vec![GammaAbove(l5()), ZetaAbove(-1.0), ZetaBelow(0.5)]),
            (Region::R6, vec![GammaAbove(z()), ZetaBelow(-1.0)]),
        ],
        Diagram::Intermediate => vec![
            r1(half_inv),
            r2(),
            r3(),
            (Region::R5, vec![GammaAbove(Bound::min(l2(), zm())), ZetaAbove(-1.0), ZetaBelow(0.5)]),
            (Region::R6, vec![GammaAbove(zm()), ZetaBelow(-1.0)]),
        ],
        Diagram::Light => vec![
            r1(c0),
            r3(),
            (Region::R5, vec![GammaAbove(Bound::min(Bound::c(c0), zm())), ZetaAbove(-1.0), ZetaBelow(0.5)]),
            (Region::R6, vec![GammaAbove(zm()), ZetaBelow(-1.0)]),
        ],
        Diagram::NegativeField => vec![
            r1(half_inv),
            r2(),
            r3(),
            (Region::Rt4, vec![GammaAbove(Bound::max(l2(), Bound::c(c0))), ZetaAbove(0.0), ZetaBelow(0.5)]),
            (Region::Rt5, vec![ZetaBelow(0.0), GammaAbove(zm())]),
        ],
        Diagram::NegativeFieldLight => vec![
            r1(c0),
            r3(),
            (Region::Rt4, vec![GammaAbove(Bound::c(c0)), ZetaAbove(0.0), ZetaBelow(0.5)]),
            (Region::Rt5, vec![ZetaBelow(0.0), GammaAbove(zm())]),
        ],
    }
}

fn min_margin(ineqs: &[Ineq], gamma: f64, zeta: f64) -> f64 {
    ineqs.iter().map(|q| q.margin(gamma, zeta)).fold(f64::INFINITY, f64::min)
}

/// Regions whose strict inequality system accepts `(gamma, zeta)`, with no
/// boundary band. Off the boundary lines this has exactly one element.
pub fn accepting_regions(alpha: f64, gamma: f64, zeta: f64, h_sign: HSign) -> Vec<Region> {
    let zeta = if h_sign == HSign::Zero { f64::INFINITY } else { zeta };
    table(Diagram::of(alpha, h_sign), alpha)
        .into_iter()
        .filter(|(_, ineqs)| min_margin(ineqs, gamma, zeta) > 0.0)
        .map(|(r, _)| r)
        .collect()
}

/// Predicted `(xi, theta)` for a region at the given exponents.
pub fn region_exponents(region: &Region, alpha: f64, gamma: f64, zeta: f64) -> Option<(f64, f64)> {
    let (xi, theta) = match region {
        Region::R1 => (0.5, 0.0),
        Region::R2 => {
            let xi = alpha * (1.0 - gamma) / (2.0 * alpha - 1.0);
            (xi, xi / alpha - gamma)
        }
        Region::R3 => (1.0, 1.0 / alpha - gamma),
        Region::R4 => {
            let xi = alpha * (zeta - gamma) / (alpha - 1.0);
            (xi, xi - zeta)
        }
        Region::R5 => {
            let xi = (1.0 + zeta) / 3.0;
            (xi, xi - zeta)
        }
        Region::R6 => (0.0, -zeta),
        Region::Rt4 => (1.0 - zeta, 1.0 - 2.0 * zeta),
        Region::Rt5 => (1.0, 1.0 - zeta),
        Region::BoundaryRt4Rt5 => (1.0, 1.0),
        Region::OtherBoundary(_) => return None,
    };
    Some((xi, theta))
}

fn limit_of(region: &Region) -> Option<LimitDescriptor> {
    Some(match region {
        Region::R1 => LimitDescriptor::Unity,
        Region::R2 => LimitDescriptor::WR2,
        Region::R3 => LimitDescriptor::WR3,
        Region::R4 => LimitDescriptor::WR4,
        Region::R5 => LimitDescriptor::Folding,
        Region::R6 => LimitDescriptor::MinusTwoH,
        Region::Rt4 => LimitDescriptor::HalfHSquared,
        Region::Rt5 => LimitDescriptor::AbsH,
        Region::BoundaryRt4Rt5 => LimitDescriptor::BoundaryConstant,
        Region::OtherBoundary(_) => return None,
    })
}

/// Places `(gamma, zeta)` in the phase diagram for the given tail index and
/// field sign. A vanishing coupling (`beta_positive = false`, `h_sign = Zero`)
/// is read as an infinite exponent.
pub fn classify_region(
    alpha: f64,
    gamma: Exponent,
    zeta: Exponent,
    h_sign: HSign,
    beta_positive: bool,
) -> Result<RegionLabel> {
    validate_alpha(alpha)?;
    let g = if beta_positive { gamma.as_f64() } else { f64::INFINITY };
    let z = if h_sign == HSign::Zero { f64::INFINITY } else { zeta.as_f64() };
    if g.is_nan() || z.is_nan() {
        return Err(Error::param("exponents must not be NaN"));
    }
    let label = |region: Region| {
        let ex = region_exponents(&region, alpha, g, z);
        RegionLabel { xi: ex.map(|e| e.0), logz_exponent: ex.map(|e| e.1), limit: limit_of(&region), region }
    };
    let diagram = Diagram::of(alpha, h_sign);
    let rows = table(diagram, alpha);
    let strict: Vec<&Region> =
        rows.iter().filter(|(_, q)| min_margin(q, g, z) > BOUNDARY_SLACK).map(|(r, _)| r).collect();
    match strict.len() {
        1 => return Ok(label(strict[0].clone())),
        0 => {}
        _ => {
            return Err(Error::Unclassifiable(format!(
                "overlapping regions {strict:?} at gamma={g}, zeta={z}"
            )))
        }
    }
    if h_sign == HSign::Negative && z.abs() <= BOUNDARY_SLACK && g > (1.0 - alpha) / alpha + BOUNDARY_SLACK {
        return Ok(label(Region::BoundaryRt4Rt5));
    }
    let near: Vec<Region> =
        rows.iter().filter(|(_, q)| min_margin(q, g, z) >= -BOUNDARY_SLACK).map(|(r, _)| r.clone()).collect();
    if near.is_empty() {
        return Err(Error::Unclassifiable(format!("no region at gamma={g}, zeta={z}")));
    }
    Ok(label(Region::OtherBoundary(near)))
}

/// A straight piece of a boundary between two regions of one diagram.
#[derive(Debug, Clone)]
pub struct BoundarySegment {
    pub diagram: Diagram,
    pub left: Region,
    pub right: Region,
    /// `(gamma, zeta)` at parameter `s` in `[0, 1]`.
    pub point: fn(f64, f64) -> (f64, f64),
    /// Whether `xi` is continuous across the segment.
    pub continuous: bool,
}

/// The boundary pieces of every diagram. `point(alpha, s)` maps `s` in `[0,1]` to
/// a point strictly inside the segment (corner points are avoided).
pub fn boundary_segments() -> Vec<BoundarySegment> {
    fn l2(a: f64, z: f64) -> f64 {
        ((2.0 * a - 1.0) * z - (a - 1.0)) / a
    }
    fn l5(a: f64, z: f64) -> f64 {
        ((2.0 * a + 1.0) * z - (a - 1.0)) / (3.0 * a)
    }
    fn c0(a: f64) -> f64 {
        (1.0 - a) / a
    }
    fn mix(lo: f64, hi: f64, s: f64) -> f64 {
        lo + (hi - lo) * (0.05 + 0.9 * s)
    }
    use Diagram::*;
    use Region::*;
    let seg = |diagram, left, right, point, continuous| BoundarySegment { diagram, left, right, point, continuous };
    vec![
        // superdiffusive
        seg(Superdiffusive, R1, R2, |a, s| (1.0 / (2.0 * a), mix(0.5, 3.0, s)), true),
        seg(Superdiffusive, R2, R3, |a, s| (c0(a), mix(0.0, 3.0, s)), true),
        seg(Superdiffusive, R2, R4, |a, s| { let z = mix(0.0, 0.5, s); (l2(a, z), z) }, true),
        seg(Superdiffusive, R3, R4, |a, s| { let z = mix(-3.0, 0.0, s); (z + c0(a), z) }, true),
        seg(Superdiffusive, R4, R5, |a, s| { let z = mix(-1.0, 0.5, s); (l5(a, z), z) }, true),
        seg(Superdiffusive, R4, R6, |_, s| { let z = mix(-3.0, -1.0, s); (z, z) }, true),
        seg(Superdiffusive, R5, R6, |_, s| (mix(-1.0, 2.0, s), -1.0), true),
        seg(Superdiffusive, R1, R5, |a, s| (mix(1.0 / (2.0 * a), 2.0, s), 0.5), true),
        // alpha in [1/2, 1)
        seg(Intermediate, R1, R2, |a, s| (1.0 / (2.0 * a), mix(0.5, 3.0, s)), true),
        seg(Intermediate, R2, R3, |a, s| (c0(a), mix(0.0, 3.0, s)), true),
        seg(Intermediate, R2, R5, |a, s| { let z = mix(0.0, 0.5, s); (l2(a, z), z) }, false),
        seg(Intermediate, R3, R5, |a, s| { let z = mix(-1.0, 0.0, s); (z + c0(a), z) }, false),
        seg(Intermediate, R3, R6, |a, s| { let z = mix(-3.0, -1.0, s); (z + c0(a), z) }, false),
        seg(Intermediate, R5, R6, |a, s| (mix(c0(a) - 1.0, 2.0 + c0(a), s), -1.0), true),
        seg(Intermediate, R1, R5, |a, s| (mix(1.0 / (2.0 * a), 3.0, s), 0.5), true),
        // alpha in (0, 1/2)
        seg(Light, R1, R3, |a, s| (c0(a), mix(0.5, 3.0, s)), false),
        seg(Light, R3, R5, |a, s| { let z = mix(-1.0, 0.5, s); ((z + c0(a)).min(c0(a)), z) }, false),
        seg(Light, R3, R6, |a, s| { let z = mix(-3.0, -1.0, s); (z + c0(a), z) }, false),
        seg(Light, R5, R6, |a, s| (mix(c0(a) - 1.0, c0(a) + 2.0, s), -1.0), true),
        seg(Light, R1, R5, |a, s| (mix(c0(a), c0(a) + 2.0, s), 0.5), true),
        // negative field, alpha >= 1/2
        seg(NegativeField, R1, R2, |a, s| (1.0 / (2.0 * a), mix(0.5, 3.0, s)), true),
        seg(NegativeField, R2, R3, |a, s| (c0(a), mix(0.0, 3.0, s)), true),
        seg(NegativeField, Rt4, R2, |a, s| { let z = mix(0.0, 0.5, s); (l2(a, z), z) }, true),
        seg(NegativeField, Rt4, R1, |a, s| (mix(1.0 / (2.0 * a), 3.0, s), 0.5), true),
        seg(NegativeField, Rt4, Rt5, |a, s| (mix(c0(a), c0(a) + 3.0, s), 0.0), true),
        seg(NegativeField, Rt5, R3, |a, s| { let z = mix(-3.0, 0.0, s); (z + c0(a), z) }, true),
        // negative field, alpha < 1/2
        seg(NegativeFieldLight, R1, R3, |a, s| (c0(a), mix(0.5, 3.0, s)), false),
        seg(NegativeFieldLight, Rt4, R3, |a, s| (c0(a), mix(0.0, 0.5, s)), false),
        seg(NegativeFieldLight, Rt4, R1, |a, s| (mix(c0(a), c0(a) + 3.0, s), 0.5), true),
        seg(NegativeFieldLight, Rt4, Rt5, |a, s| (mix(c0(a), c0(a) + 3.0, s), 0.0), true),
        seg(NegativeFieldLight, Rt5, R3, |a, s| { let z = mix(-3.0, 0.0, s); (z + c0(a), z) }, true),
    ]
}

/// A representative `alpha` for each diagram.
pub fn diagram_alphas(diagram: Diagram) -> &'static [f64] {
    match diagram {
        Diagram::Superdiffusive => &[1.2, 1.5, 2.0],
        Diagram::Intermediate => &[0.6, 0.75, 0.9],
        Diagram::Light => &[0.2, 0.3, 0.45],
        Diagram::NegativeField => &[0.6, 1.5, 2.0],
        Diagram::NegativeFieldLight => &[0.25, 0.4],
    }
}

/// Field sign that selects a diagram.
pub fn diagram_sign(diagram: Diagram) -> HSign {
    match diagram {
        Diagram::NegativeField | Diagram::NegativeFieldLight => HSign::Negative,
        _ => HSign::Positive,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn val(v: f64) -> Exponent {
        Exponent::Value(v)
    }

    #[test]
    fn kappa_values() {
        assert_eq!(kappa(0.0).unwrap(), 0.0);
        assert!((kappa(1.0).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert_eq!(kappa(1.5).unwrap(), f64::INFINITY);
        assert!(kappa(-0.1).is_err());
        assert!((kappa(0.5).unwrap() - 0.130_812_035_941_137).abs() < 1e-14);
    }

    #[test]
    fn kappa_convex_and_above_quadratic() {
        let h = 1e-3;
        let mut t: f64 = h;
        while t < 1.0 - h {
            let k = kappa(t).unwrap();
            assert!(k >= t * t / 2.0 - 1e-15);
            let second = kappa(t + h).unwrap() - 2.0 * k + kappa(t - h).unwrap();
            assert!(second > 0.0, "t={t}");
            t += 0.01;
        }
    }

    #[test]
    fn stretching_and_folding_rates() {
        assert_eq!(rate_i(0.0, 0.0).unwrap(), 0.0);
        assert_eq!(rate_i(0.0, 1.0).unwrap(), 0.5);
        assert_eq!(rate_i(-1.0, 1.0).unwrap(), 4.5);
        assert!(rate_i(0.5, 1.0).is_err());
        let pi = std::f64::consts::PI;
        assert!((rate_ibar(0.0, pi).unwrap() - 0.5).abs() < 1e-15);
        assert!((rate_ibar(-1.0, 1.0).unwrap() - 1.233_700_550_136_169_7).abs() < 1e-12);
        assert_eq!(rate_ibar(0.0, 0.0).unwrap(), f64::INFINITY);
        assert!(rate_ibar(-0.5, 0.5).unwrap() > rate_ibar(-1.0, 0.5).unwrap());
    }

    #[test]
    fn rate_i_dominates_one_sided() {
        for i in 0..=20 {
            for j in 0..=20 {
                let (u, v) = (-(i as f64) * 0.1, j as f64 * 0.1);
                let lhs = rate_i(u, v).unwrap();
                let rhs = rate_i(0.0, v - u).unwrap();
                if i == 0 || j == 0 {
                    assert!((lhs - rhs).abs() < 1e-12);
                } else {
                    assert!(lhs > rhs);
                }
            }
        }
    }

    #[test]
    fn entropic_exponent() {
        assert_eq!(entropic_cost_exponent(0.5).unwrap(), 0.0);
        assert!((entropic_cost_exponent(1.0 / 3.0).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(entropic_cost_exponent(1.0).unwrap(), 1.0);
        assert!(entropic_cost_exponent(1.2).is_err());
    }

    #[test]
    fn classifier_examples() {
        let l = classify_region(2.0, val(0.0), Exponent::Disabled, HSign::Positive, true).unwrap();
        assert_eq!(l.region, Region::R2);
        assert!((l.xi.unwrap() - 2.0 / 3.0).abs() < 1e-15);
        let l = classify_region(1.5, val(0.0), val(0.0), HSign::Positive, true).unwrap();
        assert_eq!(l.region, Region::R5);
        assert!((l.xi.unwrap() - 1.0 / 3.0).abs() < 1e-15);
        let l = classify_region(2.0, val(-0.3), val(0.0), HSign::Positive, true).unwrap();
        assert_eq!(l.region, Region::R4);
        assert!((l.xi.unwrap() - 0.6).abs() < 1e-12);
        let l = classify_region(2.0, val(0.6), val(0.25), HSign::Negative, true).unwrap();
        assert_eq!(l.region, Region::Rt4);
        assert!((l.xi.unwrap() - 0.75).abs() < 1e-15);
        for s in [HSign::Positive, HSign::Negative, HSign::Zero] {
            let l = classify_region(2.0, val(10.0), val(10.0), s, true).unwrap();
            assert_eq!(l.region, Region::R1);
            assert_eq!(l.xi, Some(0.5));
        }
        assert!(matches!(classify_region(1.0, val(0.0), val(0.0), HSign::Positive, true), Err(Error::AlphaOne)));
    }

    #[test]
    fn sentinels_and_proven_boundary() {
        // no disorder: folding for zeta in (-1, 1/2)
        let l = classify_region(2.0, Exponent::Disabled, val(0.0), HSign::Positive, false).unwrap();
        assert_eq!(l.region, Region::R5);
        let l = classify_region(2.0, val(0.5), val(0.0), HSign::Negative, true).unwrap();
        assert_eq!(l.region, Region::BoundaryRt4Rt5);
        assert_eq!(l.limit, Some(LimitDescriptor::BoundaryConstant));
        let l = classify_region(2.0, val(-2.0), val(-2.0), HSign::Positive, true).unwrap();
        assert!(matches!(l.region, Region::OtherBoundary(_)));
        let l = classify_region(2.0, val(0.0), val(-2.0), HSign::Positive, true).unwrap();
        assert_eq!(l.region, Region::R6);
    }

    #[test]
    fn segments_separate_their_regions() {
        for seg in boundary_segments() {
            for &alpha in diagram_alphas(seg.diagram) {
                let sign = diagram_sign(seg.diagram);
                for i in 0..=10 {
                    let (g, z) = (seg.point)(alpha, i as f64 / 10.0);
                    let on = classify_region(alpha, val(g), val(z), sign, true).unwrap();
                    match on.region {
                        Region::OtherBoundary(ids) => {
                            assert!(ids.contains(&seg.left) && ids.contains(&seg.right), "{seg:?} {alpha} {ids:?}")
                        }
                        Region::BoundaryRt4Rt5 => {
                            assert!(seg.left == Region::Rt4 && seg.right == Region::Rt5)
                        }
                        other => panic!("{seg:?} alpha={alpha} point ({g},{z}) classified {other}"),
                    }
                    let l = region_exponents(&seg.left, alpha, g, z).unwrap().0;
                    let r = region_exponents(&seg.right, alpha, g, z).unwrap().0;
                    if seg.continuous {
                        assert!((l - r).abs() < 1e-12, "{seg:?} alpha={alpha} xi {l} vs {r}");
                    }
                }
            }
        }
    }

    #[test]
    fn exponent_parsing() {
        assert_eq!("inf".parse::<Exponent>().unwrap(), Exponent::Disabled);
        assert_eq!("0.25".parse::<Exponent>().unwrap(), val(0.25));
        assert!("abc".parse::<Exponent>().is_err());
        let j = serde_json::to_string(&Exponent::Disabled).unwrap();
        assert_eq!(j, "\"inf\"");
        let back: Exponent = serde_json::from_str(&j).unwrap();
        assert_eq!(back, Exponent::Disabled);
        let back: Exponent = serde_json::from_str("0.5").unwrap();
        assert_eq!(back, val(0.5));
    }
}
