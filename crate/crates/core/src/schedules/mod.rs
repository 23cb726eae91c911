//! Closed-form scalar sequences for the step weights `α_n, β_n, γ_n, δ_n, t_n`.
//!
//! Every family here is non-increasing in `n` and has a known tail, so limits,
//! series convergence and ratio limits are decided from the parameters alone.
//! Nothing about `Σ a_n` is ever inferred from partial sums.

mod hypotheses;

pub use hypotheses::{
    validate_theorem_2_1, validate_theorem_3_1, validate_theorem_3_2, validate_theorem_3_3,
    HypothesisItem, HypothesisReport, ItemMethod, ItemStatus,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    /// `c / (n + offset)^rho`
    Power { c: f64, rho: f64, offset: u64 },
    Constant { c: f64 },
    /// `c · r^n`
    Geometric { c: f64, r: f64 },
    Zero,
    /// Term-wise sum, evaluated left to right.
    Sum(Vec<ScheduleSpec>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSchedule", into = "RawSchedule")]
pub struct ScheduleSpec {
    family: Family,
    clamp: Option<(f64, f64)>,
}

/// Analytic tail behaviour of a schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tail {
    Zero,
    Geometric { c: f64, r: f64 },
    /// `~ c · n^{-rho}`, `rho > 0`.
    Power { c: f64, rho: f64 },
    /// Converges to `c > 0`.
    Constant { c: f64 },
    /// Clamping altered the tail in a way the closed forms do not track.
    Indeterminate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PredicateReport {
    pub tends_to_zero: bool,
    pub sum_diverges: bool,
    pub sum_converges: bool,
    pub indeterminate: bool,
}

impl ScheduleSpec {
    pub fn power(c: f64, rho: f64, offset: u64) -> Result<Self> {
        if !(c.is_finite() && c >= 0.0) {
            return Err(Error::InvalidSchedule(format!("power: c must be >= 0, got {c}")));
        }
        if !(rho.is_finite() && rho >= 0.0) {
            return Err(Error::InvalidSchedule(format!("power: rho must be >= 0, got {rho}")));
        }
        if offset < 1 {
            return Err(Error::InvalidSchedule("power: offset must be >= 1".into()));
        }
        Ok(Self::unclamped(Family::Power { c, rho, offset }))
    }

    pub fn constant(c: f64) -> Result<Self> {
        if !c.is_finite() {
            return Err(Error::InvalidSchedule(format!("constant: c = {c}")));
        }
        Ok(Self::unclamped(Family::Constant { c }))
    }

    pub fn geometric(c: f64, r: f64) -> Result<Self> {
        if !(c.is_finite() && c >= 0.0) {
            return Err(Error::InvalidSchedule(format!("geometric: c must be >= 0, got {c}")));
        }
        if !(r > 0.0 && r < 1.0) {
            return Err(Error::InvalidSchedule(format!("geometric: r must lie in (0,1), got {r}")));
        }
        Ok(Self::unclamped(Family::Geometric { c, r }))
    }

    pub fn zero() -> Self {
        Self::unclamped(Family::Zero)
    }

    pub fn one() -> Self {
        Self::unclamped(Family::Constant { c: 1.0 })
    }

    pub fn sum(terms: Vec<ScheduleSpec>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::InvalidSchedule("sum: needs at least one term".into()));
        }
        Ok(Self::unclamped(Family::Sum(terms)))
    }

    /// `self + other`, evaluated in that order.
    pub fn plus(&self, other: &ScheduleSpec) -> Self {
        Self::unclamped(Family::Sum(vec![self.clone(), other.clone()]))
    }

    pub fn with_clamp(mut self, lo: f64, hi: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
            return Err(Error::InvalidSchedule(format!(
                "clamp range [{lo}, {hi}] must satisfy 0 <= lo <= hi <= 1"
            )));
        }
        self.clamp = Some((lo, hi));
        Ok(self)
    }

    fn unclamped(family: Family) -> Self {
        Self {
            family,
            clamp: None,
        }
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn clamp(&self) -> Option<(f64, f64)> {
        self.clamp
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.tail_raw(), Tail::Zero) && self.sup_raw() == 0.0
    }

    /// Value at index `n`.
    pub fn eval(&self, n: u64) -> f64 {
        let raw = self.eval_raw(n);
        match self.clamp {
            Some((lo, hi)) => raw.clamp(lo, hi),
            None => raw,
        }
    }

    fn eval_raw(&self, n: u64) -> f64 {
        match &self.family {
            Family::Power { c, rho, offset } => {
                let base = (n as f64) + (*offset as f64);
                c / base.powf(*rho)
            }
            Family::Constant { c } => *c,
            Family::Geometric { c, r } => c * r.powf(n as f64),
            Family::Zero => 0.0,
            Family::Sum(terms) => terms.iter().fold(0.0, |acc, t| acc + t.eval(n)),
        }
    }

    /// `sup_n` of the unclamped values (attained at `n = 0`).
    fn sup_raw(&self) -> f64 {
        self.eval_raw(0)
    }

    /// `sup_n` value; every family is non-increasing so this is the value at 0.
    pub fn sup(&self) -> f64 {
        self.eval(0)
    }

    /// `inf_n` value, i.e. the tail limit (clamped).
    pub fn limit(&self) -> Option<f64> {
        match self.tail() {
            Tail::Zero | Tail::Geometric { .. } | Tail::Power { .. } => Some(0.0),
            Tail::Constant { c } => Some(c),
            Tail::Indeterminate => None,
        }
    }

    /// Whether every value is strictly positive. Decided from parameters.
    pub fn strictly_positive(&self) -> bool {
        if let Some((lo, _)) = self.clamp {
            if lo > 0.0 {
                return true;
            }
        }
        self.raw_strictly_positive()
    }

    fn raw_strictly_positive(&self) -> bool {
        match &self.family {
            Family::Power { c, .. } | Family::Constant { c } | Family::Geometric { c, .. } => {
                *c > 0.0
            }
            Family::Zero => false,
            Family::Sum(terms) => {
                terms.iter().any(|t| t.strictly_positive()) && terms.iter().all(|t| t.sup() >= 0.0)
            }
        }
    }

    /// Raw values stay in `[0,1]`, or a clamp is configured.
    pub fn check_unit_range(&self) -> Result<()> {
        if self.clamp.is_some() {
            return Ok(());
        }
        let sup = self.sup_raw();
        let inf = self.raw_lower_bound();
        if !(0.0..=1.0).contains(&sup) || inf < 0.0 {
            return Err(Error::InvalidSchedule(format!(
                "values leave [0,1] (sup {sup}, inf {inf}) and no clamp is configured"
            )));
        }
        Ok(())
    }

    fn raw_lower_bound(&self) -> f64 {
        match &self.family {
            Family::Constant { c } => *c,
            Family::Sum(terms) => terms.iter().map(|t| t.lower_bound()).sum(),
            _ => 0.0,
        }
    }

    fn lower_bound(&self) -> f64 {
        let raw = self.raw_lower_bound();
        match self.clamp {
            Some((lo, hi)) => raw.clamp(lo, hi),
            None => raw,
        }
    }

    fn tail_raw(&self) -> Tail {
        match &self.family {
            Family::Power { c, rho, .. } => {
                if *c == 0.0 {
                    Tail::Zero
                } else if *rho == 0.0 {
                    Tail::Constant { c: *c }
                } else {
                    Tail::Power { c: *c, rho: *rho }
                }
            }
            Family::Constant { c } => {
                if *c == 0.0 {
                    Tail::Zero
                } else {
                    Tail::Constant { c: *c }
                }
            }
            Family::Geometric { c, r } => {
                if *c == 0.0 {
                    Tail::Zero
                } else {
                    Tail::Geometric { c: *c, r: *r }
                }
            }
            Family::Zero => Tail::Zero,
            Family::Sum(terms) => terms
                .iter()
                .map(|t| t.tail())
                .fold(Tail::Zero, dominant_sum),
        }
    }

    /// Tail after clamping. A clamp that the tail eventually sits inside is
    /// transparent; anything else is reported as indeterminate.
    pub fn tail(&self) -> Tail {
        let raw = self.tail_raw();
        let Some((lo, hi)) = self.clamp else {
            return raw;
        };
        match raw {
            Tail::Zero => {
                if lo == 0.0 {
                    Tail::Zero
                } else {
                    Tail::Indeterminate
                }
            }
            Tail::Geometric { .. } | Tail::Power { .. } => {
                if lo == 0.0 && hi > 0.0 {
                    raw
                } else {
                    Tail::Indeterminate
                }
            }
            Tail::Constant { c } => {
                if (lo..=hi).contains(&c) {
                    raw
                } else {
                    Tail::Indeterminate
                }
            }
            Tail::Indeterminate => Tail::Indeterminate,
        }
    }

    pub fn predicate_report(&self) -> PredicateReport {
        let (tends_to_zero, sum_diverges, sum_converges) = match self.tail() {
            Tail::Zero | Tail::Geometric { .. } => (true, false, true),
            Tail::Power { rho, .. } => (true, rho <= 1.0, rho > 1.0),
            Tail::Constant { .. } => (false, true, false),
            Tail::Indeterminate => {
                return PredicateReport {
                    tends_to_zero: false,
                    sum_diverges: false,
                    sum_converges: false,
                    indeterminate: true,
                }
            }
        };
        PredicateReport {
            tends_to_zero,
            sum_diverges,
            sum_converges,
            indeterminate: false,
        }
    }

    pub fn tends_to_zero(&self) -> bool {
        self.predicate_report().tends_to_zero
    }
}

/// Rank used to decide which of two nonnegative tails dominates.
fn tail_rank(t: &Tail) -> (u8, f64) {
    match *t {
        Tail::Zero => (0, 0.0),
        Tail::Geometric { r, .. } => (1, r),
        // Slower decay (smaller rho) dominates.
        Tail::Power { rho, .. } => (2, -rho),
        Tail::Constant { .. } => (3, 0.0),
        Tail::Indeterminate => (4, 0.0),
    }
}

fn tail_coefficient(t: &Tail) -> f64 {
    match *t {
        Tail::Geometric { c, .. } | Tail::Power { c, .. } | Tail::Constant { c } => c,
        Tail::Zero | Tail::Indeterminate => 0.0,
    }
}

fn dominant_sum(a: Tail, b: Tail) -> Tail {
    if matches!(a, Tail::Indeterminate) || matches!(b, Tail::Indeterminate) {
        return Tail::Indeterminate;
    }
    let (ra, rb) = (tail_rank(&a), tail_rank(&b));
    if ra > rb {
        a
    } else if rb > ra {
        b
    } else {
        let c = tail_coefficient(&a) + tail_coefficient(&b);
        match a {
            Tail::Geometric { r, .. } => Tail::Geometric { c, r },
            Tail::Power { rho, .. } => Tail::Power { c, rho },
            Tail::Constant { .. } => Tail::Constant { c },
            other => other,
        }
    }
}

/// `lim_n num_n / (num_n + den_n)`, from the tails alone.
pub fn weight_ratio_limit(num: &ScheduleSpec, den: &ScheduleSpec) -> Option<f64> {
    let (tn, td) = (num.tail(), den.tail());
    if matches!(tn, Tail::Indeterminate) || matches!(td, Tail::Indeterminate) {
        return None;
    }
    match (tn, td) {
        (Tail::Zero, Tail::Zero) => None,
        (Tail::Zero, _) => Some(0.0),
        (_, Tail::Zero) => Some(1.0),
        _ => {
            let (rn, rd) = (tail_rank(&tn), tail_rank(&td));
            if rn < rd {
                Some(0.0)
            } else if rn > rd {
                Some(1.0)
            } else {
                let (cn, cd) = (tail_coefficient(&tn), tail_coefficient(&td));
                Some(cn / (cn + cd))
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSchedule {
    family: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rho: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    offset: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    terms: Option<Vec<ScheduleSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    clamp: Option<[f64; 2]>,
}

impl TryFrom<RawSchedule> for ScheduleSpec {
    type Error = Error;

    fn try_from(raw: RawSchedule) -> Result<Self> {
        let allowed: &[&str] = match raw.family.as_str() {
            "power" => &["c", "rho", "offset"],
            "constant" => &["c"],
            "geometric" => &["c", "r"],
            "zero" => &[],
            "sum" => &["terms"],
            other => {
                return Err(Error::InvalidSchedule(format!(
                    "unknown schedule family {other:?} (expected power, constant, geometric, zero, sum)"
                )))
            }
        };
        let present = [
            ("c", raw.c.is_some()),
            ("rho", raw.rho.is_some()),
            ("offset", raw.offset.is_some()),
            ("r", raw.r.is_some()),
            ("terms", raw.terms.is_some()),
        ];
        for (key, set) in present {
            if set && !allowed.contains(&key) {
                return Err(Error::InvalidSchedule(format!(
                    "key {key:?} is not a parameter of family {:?}",
                    raw.family
                )));
            }
        }
        let need = |v: Option<f64>, key: &str| {
            v.ok_or_else(|| {
                Error::InvalidSchedule(format!("family {:?} requires {key:?}", raw.family))
            })
        };
        let spec = match raw.family.as_str() {
            "power" => ScheduleSpec::power(need(raw.c, "c")?, need(raw.rho, "rho")?, raw.offset.unwrap_or(1))?,
            "constant" => ScheduleSpec::constant(need(raw.c, "c")?)?,
            "geometric" => ScheduleSpec::geometric(need(raw.c, "c")?, need(raw.r, "r")?)?,
            "zero" => ScheduleSpec::zero(),
            _ => ScheduleSpec::sum(raw.terms.clone().unwrap_or_default())?,
        };
        match raw.clamp {
            Some([lo, hi]) => spec.with_clamp(lo, hi),
            None => Ok(spec),
        }
    }
}

impl From<ScheduleSpec> for RawSchedule {
    fn from(s: ScheduleSpec) -> Self {
        let mut raw = RawSchedule {
            family: String::new(),
            c: None,
            rho: None,
            offset: None,
            r: None,
            terms: None,
            clamp: s.clamp.map(|(lo, hi)| [lo, hi]),
        };
        match s.family {
            Family::Power { c, rho, offset } => {
                raw.family = "power".into();
                raw.c = Some(c);
                raw.rho = Some(rho);
                raw.offset = Some(offset);
            }
            Family::Constant { c } => {
                raw.family = "constant".into();
                raw.c = Some(c);
            }
            Family::Geometric { c, r } => {
                raw.family = "geometric".into();
                raw.c = Some(c);
                raw.r = Some(r);
            }
            Family::Zero => raw.family = "zero".into(),
            Family::Sum(terms) => {
                raw.family = "sum".into();
                raw.terms = Some(terms);
            }
        }
        raw
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(t: bool, d: bool, c: bool) -> PredicateReport {
        PredicateReport {
            tends_to_zero: t,
            sum_diverges: d,
            sum_converges: c,
            indeterminate: false,
        }
    }

    #[test]
    fn eval_examples() {
        assert_eq!(ScheduleSpec::power(1.0, 1.0, 1).unwrap().eval(5), 1.0 / 6.0);
        assert_eq!(ScheduleSpec::zero().eval(12345), 0.0);
        assert_eq!(ScheduleSpec::geometric(0.5, 0.5).unwrap().eval(3), 0.0625);
    }

    #[test]
    fn eval_is_total_at_large_index() {
        let n = (1u64 << 31) - 1;
        for s in [
            ScheduleSpec::power(1.0, 1.0, 1).unwrap(),
            ScheduleSpec::geometric(1.0, 0.999).unwrap(),
            ScheduleSpec::constant(0.3).unwrap(),
        ] {
            let v = s.eval(n);
            assert!(v.is_finite() && v >= 0.0);
        }
    }

    #[test]
    fn predicate_examples() {
        assert_eq!(ScheduleSpec::power(1.0, 1.0, 1).unwrap().predicate_report(), report(true, true, false));
        assert_eq!(ScheduleSpec::power(1.0, 2.0, 1).unwrap().predicate_report(), report(true, false, true));
        assert_eq!(ScheduleSpec::constant(0.3).unwrap().predicate_report(), report(false, true, false));
        assert_eq!(ScheduleSpec::geometric(1.0, 0.5).unwrap().predicate_report(), report(true, false, true));
        assert_eq!(ScheduleSpec::zero().predicate_report(), report(true, false, true));
        assert_eq!(ScheduleSpec::power(0.0, 0.0, 1).unwrap().predicate_report(), report(true, false, true));
    }

    #[test]
    fn p_series_table() {
        let expected = [
            (0.0, report(false, true, false)),
            (0.5, report(true, true, false)),
            (1.0, report(true, true, false)),
            (1.01, report(true, false, true)),
            (2.0, report(true, false, true)),
        ];
        for (rho, want) in expected {
            assert_eq!(ScheduleSpec::power(1.0, rho, 1).unwrap().predicate_report(), want, "rho={rho}");
        }
    }

    #[test]
    fn clamp_transparency() {
        let s = ScheduleSpec::power(1.0, 1.0, 1).unwrap().with_clamp(0.0, 0.5).unwrap();
        assert_eq!(s.eval(0), 0.5);
        assert_eq!(s.predicate_report(), report(true, true, false));
        let s = ScheduleSpec::power(1.0, 1.0, 1).unwrap().with_clamp(0.1, 1.0).unwrap();
        assert!(s.predicate_report().indeterminate);
        let s = ScheduleSpec::constant(3.0).unwrap().with_clamp(0.0, 1.0).unwrap();
        assert!(s.predicate_report().indeterminate);
        assert_eq!(s.eval(2), 1.0);
    }

    #[test]
    fn sum_predicates_follow_dominant_term() {
        let a = ScheduleSpec::power(0.5, 1.0, 1).unwrap();
        let g = ScheduleSpec::power(0.5, 2.0, 1).unwrap();
        let s = a.plus(&g);
        assert_eq!(s.predicate_report(), report(true, true, false));
        assert_eq!(s.eval(0), 1.0);
        let s = g.plus(&ScheduleSpec::geometric(0.1, 0.9).unwrap());
        assert_eq!(s.predicate_report(), report(true, false, true));
        assert_eq!(a.plus(&ScheduleSpec::zero()).eval(7), a.eval(7));
    }

    #[test]
    fn ratio_limits() {
        let a = ScheduleSpec::power(1.0, 1.0, 1).unwrap();
        let g = ScheduleSpec::power(1.0, 2.0, 1).unwrap();
        assert_eq!(weight_ratio_limit(&g, &a), Some(0.0));
        assert_eq!(weight_ratio_limit(&a, &g), Some(1.0));
        let b = ScheduleSpec::power(1.0, 1.0, 2).unwrap();
        assert_eq!(weight_ratio_limit(&b, &a), Some(0.5));
        assert_eq!(weight_ratio_limit(&ScheduleSpec::zero(), &a), Some(0.0));
        assert_eq!(weight_ratio_limit(&ScheduleSpec::zero(), &ScheduleSpec::zero()), None);
        let geo = ScheduleSpec::geometric(1.0, 0.5).unwrap();
        assert_eq!(weight_ratio_limit(&geo, &a), Some(0.0));
    }

    #[test]
    fn unit_range_validation() {
        assert!(ScheduleSpec::power(2.0, 1.0, 1).unwrap().check_unit_range().is_err());
        assert!(ScheduleSpec::power(2.0, 1.0, 2).unwrap().check_unit_range().is_ok());
        assert!(ScheduleSpec::constant(-0.1).unwrap().check_unit_range().is_err());
        assert!(ScheduleSpec::power(2.0, 1.0, 1)
            .unwrap()
            .with_clamp(0.0, 1.0)
            .unwrap()
            .check_unit_range()
            .is_ok());
        assert!(ScheduleSpec::power(1.0, 1.0, 0).is_err());
        assert!(ScheduleSpec::geometric(1.0, 1.0).is_err());
    }

    #[test]
    fn json_shape() {
        let s: ScheduleSpec =
            serde_json::from_str(r#"{"family": "power", "c": 1.0, "rho": 1.0, "offset": 1}"#).unwrap();
        assert_eq!(s, ScheduleSpec::power(1.0, 1.0, 1).unwrap());
        let back = serde_json::to_string(&s).unwrap();
        assert_eq!(back, r#"{"family":"power","c":1.0,"rho":1.0,"offset":1}"#);
        assert!(serde_json::from_str::<ScheduleSpec>(r#"{"family":"power","c":1,"rho":1,"r":0.5}"#).is_err());
        assert!(serde_json::from_str::<ScheduleSpec>(r#"{"family":"zero","bogus":1}"#).is_err());
        let c: ScheduleSpec =
            serde_json::from_str(r#"{"family":"constant","c":2.0,"clamp":[0.0,1.0]}"#).unwrap();
        assert_eq!(c.eval(0), 1.0);
    }

    #[test]
    fn strict_positivity() {
        assert!(ScheduleSpec::power(1.0, 1.0, 1).unwrap().strictly_positive());
        assert!(!ScheduleSpec::zero().strictly_positive());
        assert!(ScheduleSpec::zero().plus(&ScheduleSpec::constant(0.2).unwrap()).strictly_positive());
    }
}
