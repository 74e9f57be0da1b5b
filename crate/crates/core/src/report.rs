//! Bound results, reports and verdicts.

use serde::{Deserialize, Serialize};

/// Sandwich slack used for verdicts.
pub const SANDWICH_SLACK: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Upper,
    Lower,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Inapplicable,
    /// Evaluated but not part of the sandwich check.
    Excluded,
    Unchecked,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Inapplicable => "inapplicable",
            Verdict::Excluded => "excluded",
            Verdict::Unchecked => "unchecked",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub name: String,
    pub holds: bool,
    pub detail: String,
}

impl Condition {
    pub fn new(name: &str, holds: bool, detail: impl Into<String>) -> Self {
        Self { name: name.to_string(), holds, detail: detail.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundResult {
    pub source: String,
    pub side: Side,
    #[serde(with = "ext_real")]
    pub value: f64,
    #[serde(with = "ext_real::option")]
    pub optimizer_eps: Option<f64>,
    pub applicable: bool,
    pub conditions: Vec<Condition>,
    /// Whether the value enters sandwich verdicts.
    pub in_sandwich: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    pub verdict: Verdict,
}

impl BoundResult {
    pub fn new(source: &str, side: Side, value: f64, optimizer_eps: Option<f64>) -> Self {
        Self {
            source: source.to_string(),
            side,
            value,
            optimizer_eps,
            applicable: true,
            conditions: Vec::new(),
            in_sandwich: true,
            notes: Vec::new(),
            verdict: Verdict::Unchecked,
        }
    }

    /// An inapplicable bound carrying the trivial value (`+∞` upper, `0` lower).
    pub fn inapplicable(source: &str, side: Side, reason: Condition) -> Self {
        let value = match side {
            Side::Upper => f64::INFINITY,
            Side::Lower => 0.0,
        };
        Self {
            source: source.to_string(),
            side,
            value,
            optimizer_eps: None,
            applicable: false,
            conditions: vec![reason],
            in_sandwich: true,
            notes: Vec::new(),
            verdict: Verdict::Inapplicable,
        }
    }

    pub fn with_condition(mut self, c: Condition) -> Self {
        self.conditions.push(c);
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    /// Mark inapplicable unless every recorded condition holds.
    pub(crate) fn settle(mut self) -> Self {
        if self.conditions.iter().any(|c| !c.holds) {
            self.applicable = false;
            self.value = match self.side {
                Side::Upper => f64::INFINITY,
                Side::Lower => 0.0,
            };
            self.optimizer_eps = None;
            self.verdict = Verdict::Inapplicable;
        }
        self
    }

    /// Compare against an exact value.
    pub fn judge(&mut self, exact: f64) {
        self.verdict = if !self.applicable {
            Verdict::Inapplicable
        } else if !self.in_sandwich {
            Verdict::Excluded
        } else {
            let ok = match self.side {
                Side::Upper => self.value >= exact - SANDWICH_SLACK,
                Side::Lower => self.value <= exact + SANDWICH_SLACK,
            };
            if ok {
                Verdict::Pass
            } else {
                Verdict::Fail
            }
        };
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub dist: String,
    pub family_params: String,
    pub n: u64,
    pub r: u64,
    #[serde(with = "ext_real")]
    pub exact: f64,
    pub exact_certificate: f64,
    pub bounds: Vec<BoundResult>,
    pub tightest_upper: Option<String>,
    pub tightest_lower: Option<String>,
    pub verdict: Verdict,
}

impl BoundReport {
    pub(crate) fn assemble(
        dist: String,
        family_params: String,
        n: u64,
        r: u64,
        exact: f64,
        exact_certificate: f64,
        mut bounds: Vec<BoundResult>,
    ) -> Self {
        for b in &mut bounds {
            b.judge(exact);
        }
        let pick = |side: Side| {
            bounds
                .iter()
                .filter(|b| b.side == side && b.applicable && b.in_sandwich)
                .min_by(|a, b| match side {
                    Side::Upper => a.value.total_cmp(&b.value),
                    Side::Lower => b.value.total_cmp(&a.value),
                })
                .map(|b| b.source.clone())
        };
        let tightest_upper = pick(Side::Upper);
        let tightest_lower = pick(Side::Lower);
        let verdict = if bounds.iter().any(|b| b.verdict == Verdict::Fail) { Verdict::Fail } else { Verdict::Pass };
        Self { dist, family_params, n, r, exact, exact_certificate, bounds, tightest_upper, tightest_lower, verdict }
    }

    pub fn bound(&self, source: &str) -> Option<&BoundResult> {
        self.bounds.iter().find(|b| b.source == source)
    }
}

/// Serde helpers writing non-finite reals as the strings `"+inf"`, `"-inf"`
/// and `"nan"`, since JSON has no literal for them.
pub mod ext_real {
    use serde::de::{self, Deserializer, Visitor};
    use serde::Serializer;
    use std::fmt;

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else if x.is_nan() {
            s.serialize_str("nan")
        } else if *x > 0.0 {
            s.serialize_str("+inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    struct ExtReal;

    impl<'de> Visitor<'de> for ExtReal {
        type Value = f64;

        fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
            f.write_str("a number or one of \"+inf\", \"-inf\", \"nan\"")
        }

        fn visit_f64<E: de::Error>(self, v: f64) -> Result<f64, E> {
            Ok(v)
        }

        fn visit_i64<E: de::Error>(self, v: i64) -> Result<f64, E> {
            Ok(v as f64)
        }

        fn visit_u64<E: de::Error>(self, v: u64) -> Result<f64, E> {
            Ok(v as f64)
        }

        fn visit_str<E: de::Error>(self, v: &str) -> Result<f64, E> {
            match v {
                "+inf" | "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(E::custom(format!("not an extended real: {other}"))),
            }
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        d.deserialize_any(ExtReal)
    }

    pub mod option {
        use serde::{Deserialize, Deserializer, Serialize, Serializer};

        #[derive(Serialize, Deserialize)]
        struct Wrap(#[serde(with = "super")] f64);

        pub fn serialize<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
            x.map(Wrap).serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
            Ok(Option::<Wrap>::deserialize(d)?.map(|w| w.0))
        }
    }
}
