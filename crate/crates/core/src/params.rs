//! Model parameters and the `key = value` configuration format.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Proportionality constants of the school performance factor model.
#[derive(Debug, Clone, PartialEq)]
pub struct SpfCoefficients {
    /// Fee weight.
    pub alpha: f64,
    /// Home study hours weight.
    pub beta: f64,
    /// Distance weight (inverse term).
    pub gamma: f64,
    /// Class size weight (inverse term).
    pub delta: f64,
    /// Unmodelled factors.
    pub phi: f64,
    pub phi_f: f64,
    pub phi_h: f64,
    pub phi_c: f64,
    /// In-migration proportionality constant.
    pub lambda_mig: f64,
}

impl Default for SpfCoefficients {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta: 1.0,
            gamma: 1.0,
            delta: 1.0,
            phi: 0.0,
            phi_f: 0.0,
            phi_h: 0.0,
            phi_c: 0.0,
            lambda_mig: 1.0,
        }
    }
}

trait ParamValue: Sized {
    fn parse_value(s: &str) -> std::result::Result<Self, String>;
    fn format_value(&self) -> String;
}

macro_rules! numeric_param {
    ($($t:ty),*) => {$(
        impl ParamValue for $t {
            fn parse_value(s: &str) -> std::result::Result<Self, String> {
                <$t>::from_str(s).map_err(|e| format!("`{s}`: {e}"))
            }
            fn format_value(&self) -> String {
                self.to_string()
            }
        }
    )*};
}
numeric_param!(u32, u64, usize, f64);

impl ParamValue for bool {
    fn parse_value(s: &str) -> std::result::Result<Self, String> {
        match s {
            "true" | "on" | "yes" | "1" => Ok(true),
            "false" | "off" | "no" | "0" => Ok(false),
            _ => Err(format!("`{s}` is not a boolean")),
        }
    }
    fn format_value(&self) -> String {
        self.to_string()
    }
}

macro_rules! sim_params {
    (
        fields { $( $(#[$doc:meta])* $field:ident : $ty:ty = $default:expr, )* }
        spf { $( $skey:ident => $sfield:ident, )* }
    ) => {
        /// Every tunable constant of a simulation run.
        #[derive(Debug, Clone, PartialEq)]
        pub struct SimParams {
            $( $(#[$doc])* pub $field: $ty, )*
            pub spf: SpfCoefficients,
        }

        impl Default for SimParams {
            fn default() -> Self {
                Self {
                    $( $field: $default, )*
                    spf: SpfCoefficients::default(),
                }
            }
        }

        impl SimParams {
            /// Every configuration key, in declaration order.
            pub const KEYS: &'static [&'static str] = &[
                $( stringify!($field), )*
                $( stringify!($skey), )*
            ];

            /// Set one field from its textual value. Does not validate
            /// cross-field invariants.
            pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
                let value = value.trim();
                match key {
                    $( stringify!($field) => {
                        self.$field = <$ty as ParamValue>::parse_value(value)
                            .map_err(|m| Error::invariant(key, m))?;
                    } )*
                    $( stringify!($skey) => {
                        self.spf.$sfield = <f64 as ParamValue>::parse_value(value)
                            .map_err(|m| Error::invariant(key, m))?;
                    } )*
                    _ => return Err(Error::UnknownKey(key.to_string())),
                }
                Ok(())
            }

            /// Textual value of one field, in the form `set` accepts.
            pub fn get(&self, key: &str) -> Option<String> {
                match key {
                    $( stringify!($field) => Some(self.$field.format_value()), )*
                    $( stringify!($skey) => Some(self.spf.$sfield.format_value()), )*
                    _ => None,
                }
            }
        }
    };
}

sim_params! {
    fields {
        n_schools: usize = 6,
        n_public: usize = 3,
        n_private: usize = 3,
        n_students: usize = 250,
        max_ticks: u32 = 100,
        seed: u64 = 1,
        grid_width: usize = 61,
        grid_height: usize = 41,
        /// Yearly fee of a public school.
        public_fee: f64 = 100.0,
        /// Yearly fee of a private school.
        private_fee: f64 = 3000.0,
        req_home_hours_public: f64 = 2.0,
        req_home_hours_private: f64 = 4.0,
        /// Yearly cost of one daily hour of home study.
        home_work_cost: f64 = 50.0,
        /// Months between hiring windows of public schools.
        public_rec_interval: u32 = 48,
        /// Months between hiring windows of private schools.
        private_rec_interval: u32 = 12,
        class_size_target_public: f64 = 30.0,
        class_size_target_private: f64 = 30.0,
        /// Class-size driven enrollment when set, rank driven otherwise.
        tip_mode: bool = false,
        initial_teachers_min: usize = 7,
        initial_teachers_max: usize = 10,
        wealth_init_min: f64 = 0.0,
        wealth_init_max: f64 = 5000.0,
        growth_rate_min: f64 = 0.0,
        growth_rate_max: f64 = 2000.0,
        kappa: f64 = 0.0,
        delta_w: f64 = 0.0,
        expenditure_noise_max: f64 = 0.0,
        teacher_salary_public: f64 = 5620.0,
        teacher_salary_private: f64 = 1084.0,
        /// Students graded below this are unrolled before choosing a school.
        expel_grade_min: f64 = f64::NEG_INFINITY,
        entry_age: u32 = 5,
        max_age: u32 = 19,
        max_school_years: u32 = 10,
        max_home_years: u32 = 4,
        /// Class size that earns full class-work credit.
        ref_class_size: f64 = 30.0,
        rank_noise_alpha_max: f64 = 0.5,
        class_work_hours_public: f64 = 5.0,
        class_work_hours_private: f64 = 5.0,
        grade_award_scheme_public: f64 = 1.0,
        grade_award_scheme_private: f64 = 1.0,
        /// Share of current wealth a student may spend on home study per year.
        home_study_budget_fraction: f64 = 0.1,
        /// Home study hours are paid for (`hours * home_work_cost` a year).
        home_study_paid: bool = true,
        /// Remove one teacher at a hiring window when the class is below half the target.
        teacher_removal: bool = false,
        /// Replace every retired student with a new entrant.
        replace_retired: bool = true,
    }
    spf {
        spf_alpha => alpha,
        spf_beta => beta,
        spf_gamma => gamma,
        spf_delta => delta,
        spf_phi => phi,
        spf_phi_f => phi_f,
        spf_phi_h => phi_h,
        spf_phi_c => phi_c,
        spf_lambda_mig => lambda_mig,
    }
}

impl SimParams {
    /// Parse a configuration document, applying defaults for absent keys.
    pub fn from_config(text: &str) -> Result<Self> {
        let mut params = SimParams::default();
        params.apply_config(text)?;
        params.validate()?;
        Ok(params)
    }

    /// Apply the assignments of a configuration document on top of `self`
    /// without validating the result.
    pub fn apply_config(&mut self, text: &str) -> Result<()> {
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let Some((key, value)) = split_assignment(raw, line_no)? else {
                continue;
            };
            self.set(key, value).map_err(|e| match e {
                Error::UnknownKey(k) => Error::Parse {
                    line: line_no,
                    message: format!("unknown key `{k}`"),
                },
                Error::Invariant { field, message } => Error::Parse {
                    line: line_no,
                    message: format!("`{field}`: {message}"),
                },
                other => other,
            })?;
        }
        Ok(())
    }

    /// Render every field as a configuration document that `from_config`
    /// parses back to an equal value.
    pub fn to_config(&self) -> String {
        let mut out = String::new();
        for key in Self::KEYS {
            let _ = writeln!(out, "{key} = {}", self.get(key).unwrap_or_default());
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_schools == 0 {
            return Err(Error::invariant("n_schools", "must be positive"));
        }
        if self.n_public + self.n_private != self.n_schools {
            return Err(Error::invariant(
                "n_schools",
                format!(
                    "n_public ({}) + n_private ({}) must equal n_schools ({})",
                    self.n_public, self.n_private, self.n_schools
                ),
            ));
        }
        if self.max_ticks == 0 {
            return Err(Error::invariant("max_ticks", "must be positive"));
        }
        if self.grid_width == 0 || self.grid_height == 0 {
            return Err(Error::invariant("grid_width", "grid dimensions must be positive"));
        }
        if self.grid_width * self.grid_height < self.n_schools + self.n_students {
            return Err(Error::invariant(
                "grid_width",
                "grid has fewer cells than schools plus students",
            ));
        }
        if self.initial_teachers_min == 0 {
            return Err(Error::invariant("initial_teachers_min", "must be positive"));
        }
        if self.initial_teachers_min > self.initial_teachers_max {
            return Err(Error::invariant(
                "initial_teachers_min",
                "must not exceed initial_teachers_max",
            ));
        }
        if self.wealth_init_min > self.wealth_init_max {
            return Err(Error::invariant("wealth_init_min", "must not exceed wealth_init_max"));
        }
        if self.growth_rate_min > self.growth_rate_max {
            return Err(Error::invariant("growth_rate_min", "must not exceed growth_rate_max"));
        }
        if self.public_rec_interval == 0 {
            return Err(Error::invariant("public_rec_interval", "must be at least 1"));
        }
        if self.private_rec_interval == 0 {
            return Err(Error::invariant("private_rec_interval", "must be at least 1"));
        }
        for (name, v) in [
            ("class_size_target_public", self.class_size_target_public),
            ("class_size_target_private", self.class_size_target_private),
            ("ref_class_size", self.ref_class_size),
            ("grade_award_scheme_public", self.grade_award_scheme_public),
            ("grade_award_scheme_private", self.grade_award_scheme_private),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invariant(name, "must be a positive real"));
            }
        }
        for (name, v) in [
            ("public_fee", self.public_fee),
            ("private_fee", self.private_fee),
            ("req_home_hours_public", self.req_home_hours_public),
            ("req_home_hours_private", self.req_home_hours_private),
            ("home_work_cost", self.home_work_cost),
            ("expenditure_noise_max", self.expenditure_noise_max),
            ("class_work_hours_public", self.class_work_hours_public),
            ("class_work_hours_private", self.class_work_hours_private),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invariant(name, "must be a non-negative real"));
            }
        }
        if !(0.0..=1.0).contains(&self.rank_noise_alpha_max) {
            return Err(Error::invariant("rank_noise_alpha_max", "must lie in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.home_study_budget_fraction) {
            return Err(Error::invariant("home_study_budget_fraction", "must lie in [0, 1]"));
        }
        if self.entry_age > self.max_age {
            return Err(Error::invariant("entry_age", "must not exceed max_age"));
        }
        let spf = &self.spf;
        for (name, v) in [
            ("spf_alpha", spf.alpha),
            ("spf_beta", spf.beta),
            ("spf_gamma", spf.gamma),
            ("spf_delta", spf.delta),
            ("spf_phi", spf.phi),
            ("spf_phi_f", spf.phi_f),
            ("spf_phi_h", spf.phi_h),
            ("spf_phi_c", spf.phi_c),
            ("spf_lambda_mig", spf.lambda_mig),
        ] {
            if !v.is_finite() {
                return Err(Error::invariant(name, "must be finite"));
            }
        }
        if spf.gamma <= 0.0 {
            return Err(Error::invariant("spf_gamma", "must be positive"));
        }
        if spf.delta <= 0.0 {
            return Err(Error::invariant("spf_delta", "must be positive"));
        }
        Ok(())
    }
}

/// Split one configuration line into `(key, value)`; `None` for blank and
/// comment lines.
pub(crate) fn split_assignment(raw: &str, line_no: usize) -> Result<Option<(&str, &str)>> {
    let line = match raw.find('#') {
        Some(pos) => &raw[..pos],
        None => raw,
    }
    .trim();
    if line.is_empty() {
        return Ok(None);
    }
    let Some((key, value)) = line.split_once('=') else {
        return Err(Error::Parse {
            line: line_no,
            message: format!("expected `key = value`, found `{line}`"),
        });
    };
    let key = key.trim();
    if key.is_empty() {
        return Err(Error::Parse {
            line: line_no,
            message: "missing key".into(),
        });
    }
    Ok(Some((key, value.trim())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_document_gives_defaults() {
        let p = SimParams::from_config("").unwrap();
        assert_eq!(p.n_schools, 6);
        assert_eq!(p.n_students, 250);
        assert_eq!(p.max_ticks, 100);
        assert_eq!((p.grid_width, p.grid_height), (61, 41));
        assert_eq!((p.initial_teachers_min, p.initial_teachers_max), (7, 10));
        assert_eq!(p, SimParams::default());
    }

    #[test]
    fn sector_counts_must_add_up() {
        let err = SimParams::from_config("n_public = 4\nn_private = 3\nn_schools = 6").unwrap_err();
        assert!(matches!(err, Error::Invariant { ref field, .. } if field == "n_schools"), "{err}");
    }

    #[test]
    fn parsing_is_pure() {
        assert_eq!(
            SimParams::from_config("seed = 42").unwrap(),
            SimParams::from_config("seed = 42").unwrap()
        );
    }

    #[test]
    fn comments_and_blank_lines() {
        let p = SimParams::from_config("# base\n\nseed = 9  # trailing\n tip_mode = true\n").unwrap();
        assert_eq!(p.seed, 9);
        assert!(p.tip_mode);
    }

    #[test]
    fn unknown_key_reports_line() {
        let err = SimParams::from_config("seed = 1\nbogus = 3\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn malformed_line_reports_line() {
        let err = SimParams::from_config("seed = 1\n\nn_students 3\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        let err = SimParams::from_config("n_students = lots\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }), "{err}");
    }

    #[test]
    fn grid_must_hold_every_agent() {
        let err = SimParams::from_config("grid_width = 5\ngrid_height = 5\nn_students = 20").unwrap_err();
        assert!(matches!(err, Error::Invariant { .. }));
    }

    #[test]
    fn inverted_bounds_rejected() {
        for doc in [
            "initial_teachers_min = 11",
            "wealth_init_min = 9000",
            "growth_rate_min = 2500",
            "spf_delta = 0",
            "spf_gamma = -1",
            "public_rec_interval = 0",
        ] {
            assert!(SimParams::from_config(doc).is_err(), "{doc}");
        }
    }

    #[test]
    fn negative_infinity_round_trips() {
        let p = SimParams::default();
        let text = p.to_config();
        assert!(text.contains("expel_grade_min = -inf"));
        assert_eq!(SimParams::from_config(&text).unwrap(), p);
    }

    proptest! {
        #[test]
        fn config_round_trip(
            seed in any::<u64>(),
            students in 0usize..500,
            fee in 0.0f64..1e5,
            kappa in -10.0f64..10.0,
            tip in any::<bool>(),
            interval in 1u32..97,
            lambda in -1e3f64..1e3,
        ) {
            let mut p = SimParams::default();
            p.seed = seed;
            p.n_students = students;
            p.private_fee = fee;
            p.kappa = kappa;
            p.tip_mode = tip;
            p.public_rec_interval = interval;
            p.spf.lambda_mig = lambda;
            let back = SimParams::from_config(&p.to_config()).unwrap();
            prop_assert_eq!(back, p);
        }
    }
}
