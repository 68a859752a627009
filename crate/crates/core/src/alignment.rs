//! Mechanical alignment tolerances of the three-grating setup.
//!
//! G2 (the light grating) defines the reference orientation. Every limit is
//! a closed formula; the report evaluates all seven criteria for a measured
//! [`AlignmentState`].

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::pattern::sinc;
use crate::physics::{Interferometer, MaterialGrating};

/// Largest tolerated relative change of an effective grating period.
pub const REL_PERIOD_CHANGE: f64 = 1e-4;
/// Operating gate for roll and yaw period changes; the formula gives
/// √(2e-4) ≈ 14.1 mrad, the rounded value leaves margin.
pub const ROLL_ANGLE_GATE: f64 = 10e-3;
pub const ROLL_VISIBILITY_MIN: f64 = 0.9;
pub const YAW_VISIBILITY_SENSITIVITY: f64 = 0.1;
/// Light grating thickness along the beam (m).
pub const G2_THICKNESS: f64 = 20e-6;
pub const G2_TRANSVERSE_FRACTION: f64 = 0.1;
/// Largest spread of the three grating periods (m), inclusive.
pub const PERIOD_SPREAD: f64 = 0.05e-9;
/// Molecular beam height used for the pitch rule (m).
pub const DEFAULT_BEAM_HEIGHT: f64 = 100e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentState {
    /// Roll of G1 and G3 about the beam axis (rad).
    pub roll_g1: f64,
    pub roll_g3: f64,
    /// Forward tilt (rad).
    pub pitch: f64,
    /// Yaw of G1, G2, G3 (rad); for G2 this is the angle of incidence.
    pub yaw: [f64; 3],
    /// Longitudinal imbalance |L₁ - L₂| (m).
    pub length_imbalance: f64,
    /// m
    pub beam_height: f64,
    /// Measured periods of G1, G2, G3 (m).
    pub periods: [f64; 3],
}

impl AlignmentState {
    /// Perfectly aligned state with the nominal periods of `ifm`.
    pub fn nominal(ifm: &Interferometer) -> Self {
        Self {
            roll_g1: 0.0,
            roll_g3: 0.0,
            pitch: 0.0,
            yaw: [0.0; 3],
            length_imbalance: 0.0,
            beam_height: DEFAULT_BEAM_HEIGHT,
            periods: [ifm.g1.period, ifm.period(), ifm.g3.period],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let angles = [self.roll_g1, self.roll_g3, self.pitch, self.yaw[0], self.yaw[1], self.yaw[2]];
        if angles.iter().any(|a| !a.is_finite()) {
            return Err(Error::domain("alignment angles must be finite"));
        }
        if !self.length_imbalance.is_finite() {
            return Err(Error::domain("length imbalance must be finite"));
        }
        if !(self.beam_height.is_finite() && self.beam_height > 0.0) {
            return Err(Error::domain(format!("beam height must be positive, got {}", self.beam_height)));
        }
        if self.periods.iter().any(|p| !(p.is_finite() && *p > 0.0)) {
            return Err(Error::domain("grating periods must be positive"));
        }
        Ok(())
    }
}

/// Effective roll angles `(α₁′, α₃′)` seen across the source and detector
/// slits, from the lever arms source–G1–G2–G3–detector.
pub fn effective_roll_angles(state: &AlignmentState, ifm: &Interferometer) -> (f64, f64) {
    let (l0, l1, l2, l3) = (ifm.source_distance, ifm.separation, ifm.separation, ifm.detector_distance);
    let total = l0 + l1 + l2 + l3;
    let (a1, a3) = (state.roll_g1, state.roll_g3);
    let a1p = a1 * l2 * (l1 + l2 + l3) / (l1 * total) + a3 * l3 / total;
    let a3p = a1 * l0 * l2 / (l1 * total) + a3 * (l0 + l1 + l2) / total;
    (a1p, a3p)
}

/// Visibility multiplier `sinc(k_d h_s α₁′) sinc(k_d h_d α₃′)`.
pub fn roll_visibility_factor(state: &AlignmentState, ifm: &Interferometer) -> f64 {
    let kd = 2.0 * PI / ifm.period();
    let (a1p, a3p) = effective_roll_angles(state, ifm);
    sinc(kd * ifm.source_slit_height * a1p) * sinc(kd * ifm.detector_slit_height * a3p)
}

/// First zero of the detector-slit factor in the effective angle α₃′:
/// `d / (2 h_d)`. G3 alone reaches it at `α₃ = α₃′ L_tot / (L₀ + 2L)`.
pub fn roll_first_zero(ifm: &Interferometer) -> f64 {
    ifm.period() / (2.0 * ifm.detector_slit_height)
}

/// Angle at which `d/cos α` exceeds `d` by the relative amount `tol`.
pub fn roll_period_limit(tol: f64) -> Result<f64> {
    if !(tol.is_finite() && tol >= 0.0) {
        return Err(Error::domain(format!("period tolerance must be nonnegative, got {tol}")));
    }
    Ok((2.0 * tol).sqrt())
}

/// `ΔL < L / N`.
pub fn length_balance_limit(separation: f64, slits: u32) -> Result<f64> {
    if slits == 0 || !(separation > 0.0) {
        return Err(Error::domain("length balance needs L > 0 and N ≥ 1"));
    }
    Ok(separation / slits as f64)
}

/// Pitch for which the height-dependent imbalance `hθ` equals `L / N`.
pub fn pitch_limit(beam_height: f64, separation: f64, slits: u32) -> Result<f64> {
    if !(beam_height > 0.0) {
        return Err(Error::domain(format!("beam height must be positive, got {beam_height}")));
    }
    Ok(length_balance_limit(separation, slits)? / beam_height)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct YawLimits {
    /// From the shrinking projected period.
    pub period: f64,
    /// From the walls narrowing the openings; infinite for thin walls.
    pub open_fraction: f64,
}

impl YawLimits {
    pub fn governing(&self) -> f64 {
        self.period.min(self.open_fraction)
    }
}

/// Yaw limits of a material grating: `d cos φ` within [`REL_PERIOD_CHANGE`]
/// and `(b/a) tan φ ≤ sensitivity`.
pub fn yaw_limits(grating: &MaterialGrating, sensitivity: f64) -> Result<YawLimits> {
    if !(sensitivity.is_finite() && sensitivity >= 0.0) {
        return Err(Error::domain(format!("visibility sensitivity must be nonnegative, got {sensitivity}")));
    }
    let a = grating.open_fraction * grating.period;
    let b = grating.wall_thickness;
    let open_fraction = if b == 0.0 { f64::INFINITY } else { (sensitivity * a / b).atan() };
    Ok(YawLimits { period: roll_period_limit(REL_PERIOD_CHANGE)?, open_fraction })
}

/// Incidence on the light grating such that a molecule drifts by at most
/// `fraction` of a period while crossing it.
pub fn g2_incidence_limit(period: f64, thickness: f64, fraction: f64) -> Result<f64> {
    if !(period > 0.0 && thickness >= 0.0 && fraction >= 0.0) {
        return Err(Error::domain("incidence limit needs d > 0, thickness ≥ 0, fraction ≥ 0"));
    }
    if thickness == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(fraction * period / thickness)
}

/// Spread `max - min` of the periods and whether it is within `spread`
/// (inclusive).
pub fn period_equality_check(periods: &[f64], spread: f64) -> Result<(f64, bool)> {
    if periods.is_empty() {
        return Err(Error::invalid("no grating periods given"));
    }
    let lo = periods.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = periods.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let measured = hi - lo;
    // Periods arrive as decimal nanometres; absorb the conversion rounding
    // so that a spread of exactly the limit passes.
    Ok((measured, measured <= spread * (1.0 + 1e-9)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Criterion {
    PeriodEquality,
    RollVisibility,
    RollPeriod,
    LengthBalance,
    Pitch,
    Yaw,
    G2Incidence,
}

impl Criterion {
    pub const ALL: [Criterion; 7] = [
        Criterion::PeriodEquality,
        Criterion::RollVisibility,
        Criterion::RollPeriod,
        Criterion::LengthBalance,
        Criterion::Pitch,
        Criterion::Yaw,
        Criterion::G2Incidence,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Criterion::PeriodEquality => "period_equality",
            Criterion::RollVisibility => "roll_visibility",
            Criterion::RollPeriod => "roll_period",
            Criterion::LengthBalance => "length_balance",
            Criterion::Pitch => "pitch",
            Criterion::Yaw => "yaw",
            Criterion::G2Incidence => "g2_incidence",
        }
    }

    /// Unit of `measured` and `limit`.
    pub fn unit(self) -> &'static str {
        match self {
            Criterion::PeriodEquality | Criterion::LengthBalance => "m",
            Criterion::RollVisibility => "1",
            _ => "rad",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriterionRow {
    pub criterion: Criterion,
    pub measured: f64,
    /// Upper bound, except for the roll visibility where it is the minimum.
    pub limit: f64,
    pub passed: bool,
}

/// One row per criterion, in [`Criterion::ALL`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentReport {
    pub rows: [CriterionRow; 7],
}

impl AlignmentReport {
    pub fn all_passed(&self) -> bool {
        self.rows.iter().all(|r| r.passed)
    }

    pub fn get(&self, criterion: Criterion) -> &CriterionRow {
        // rows are built in ALL order
        &self.rows[Criterion::ALL.iter().position(|c| *c == criterion).unwrap()]
    }
}

pub fn check(state: &AlignmentState, ifm: &Interferometer) -> Result<AlignmentReport> {
    state.validate()?;
    ifm.validate()?;
    let upper = |criterion, measured: f64, limit: f64| CriterionRow { criterion, measured, limit, passed: measured <= limit };

    let (spread, equal) = period_equality_check(&state.periods, PERIOD_SPREAD)?;
    let roll_factor = roll_visibility_factor(state, ifm);
    let roll = state.roll_g1.abs().max(state.roll_g3.abs());
    let balance = length_balance_limit(ifm.separation, ifm.illuminated_slits)?;
    let pitch = pitch_limit(state.beam_height, ifm.separation, ifm.illuminated_slits)?;
    let yaw_limit = yaw_limits(&ifm.g1, YAW_VISIBILITY_SENSITIVITY)?
        .governing()
        .min(yaw_limits(&ifm.g3, YAW_VISIBILITY_SENSITIVITY)?.governing())
        .min(ROLL_ANGLE_GATE);
    let g2 = g2_incidence_limit(ifm.period(), G2_THICKNESS, G2_TRANSVERSE_FRACTION)?;

    Ok(AlignmentReport {
        rows: [
            CriterionRow { criterion: Criterion::PeriodEquality, measured: spread, limit: PERIOD_SPREAD, passed: equal },
            CriterionRow {
                criterion: Criterion::RollVisibility,
                measured: roll_factor,
                limit: ROLL_VISIBILITY_MIN,
                passed: roll_factor >= ROLL_VISIBILITY_MIN,
            },
            upper(Criterion::RollPeriod, roll, ROLL_ANGLE_GATE),
            CriterionRow {
                criterion: Criterion::LengthBalance,
                measured: state.length_imbalance.abs(),
                limit: balance,
                passed: state.length_imbalance.abs() < balance,
            },
            upper(Criterion::Pitch, state.pitch.abs(), pitch),
            upper(Criterion::Yaw, state.yaw[0].abs().max(state.yaw[2].abs()), yaw_limit),
            upper(Criterion::G2Incidence, state.yaw[1].abs(), g2),
        ],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::presets;

    fn ifm() -> Interferometer {
        presets::interferometer(1.0)
    }

    #[test]
    fn zero_roll_keeps_visibility() {
        let s = AlignmentState::nominal(&ifm());
        assert_eq!(roll_visibility_factor(&s, &ifm()), 1.0);
    }

    #[test]
    fn roll_zero_sits_at_period_over_twice_detector_height() {
        let i = ifm();
        let zero = roll_first_zero(&i);
        assert!((zero - 0.665e-3).abs() < 1e-9);
        // G3 alone, mapped back through its lever arm
        let total = i.source_distance + 2.0 * i.separation + i.detector_distance;
        let a3 = zero * total / (i.source_distance + 2.0 * i.separation);
        let s = AlignmentState { roll_g3: a3, ..AlignmentState::nominal(&i) };
        assert!(roll_visibility_factor(&s, &i).abs() < 1e-12);
    }

    #[test]
    fn roll_factor_is_even() {
        let i = ifm();
        let s = AlignmentState { roll_g1: 2e-4, roll_g3: -3e-4, ..AlignmentState::nominal(&i) };
        let t = AlignmentState { roll_g1: -2e-4, roll_g3: 3e-4, ..s.clone() };
        assert_eq!(roll_visibility_factor(&s, &i), roll_visibility_factor(&t, &i));
        assert!(roll_visibility_factor(&s, &i) < 1.0);
    }

    #[test]
    fn closed_limits() {
        assert!((roll_period_limit(1e-4).unwrap() - 14.142e-3).abs() < 1e-6);
        assert_eq!(roll_period_limit(0.0).unwrap(), 0.0);
        assert!((length_balance_limit(0.105, 4000).unwrap() - 26.25e-6).abs() < 1e-15);
        assert_eq!(length_balance_limit(0.105, 1).unwrap(), 0.105);
        assert!((length_balance_limit(0.105, 2000).unwrap() - 2.0 * 26.25e-6).abs() < 1e-15);
        assert!((pitch_limit(100e-6, 0.105, 4000).unwrap() - 0.2625).abs() < 1e-12);
        assert!((g2_incidence_limit(266e-9, 20e-6, 0.1).unwrap() - 1.33e-3).abs() < 1e-9);
        assert!(g2_incidence_limit(266e-9, 0.0, 0.1).unwrap().is_infinite());
    }

    #[test]
    fn yaw_open_fraction() {
        let g = MaterialGrating::new(266e-9, 90.0 / 266.0, 190e-9).unwrap();
        let y = yaw_limits(&g, 0.1).unwrap();
        assert!((y.open_fraction - 47.33e-3).abs() < 1e-5, "{}", y.open_fraction);
        assert_eq!(y.period, roll_period_limit(1e-4).unwrap());
        let thin = MaterialGrating::new(266e-9, 0.42, 0.0).unwrap();
        let y = yaw_limits(&thin, 0.1).unwrap();
        assert!(y.open_fraction.is_infinite());
        assert_eq!(y.governing(), y.period);
    }

    #[test]
    fn period_spread_boundary_is_inclusive() {
        let d = 266e-9;
        assert!(period_equality_check(&[d, d, d], PERIOD_SPREAD).unwrap().1);
        assert!(period_equality_check(&[d, d + 0.05e-9, d], PERIOD_SPREAD).unwrap().1);
        assert!(!period_equality_check(&[d, d + 0.06e-9, d], PERIOD_SPREAD).unwrap().1);
    }

    #[test]
    fn nominal_passes_and_imbalance_fails() {
        let i = ifm();
        let s = AlignmentState::nominal(&i);
        let r = check(&s, &i).unwrap();
        assert!(r.all_passed(), "{r:?}");
        for (row, c) in r.rows.iter().zip(Criterion::ALL) {
            assert_eq!(row.criterion, c);
        }
        let bad = AlignmentState { length_imbalance: 50e-6, ..s };
        let r = check(&bad, &i).unwrap();
        assert!(!r.get(Criterion::LengthBalance).passed);
        assert_eq!(r.rows.iter().filter(|x| !x.passed).count(), 1);
    }

    #[test]
    fn rejects_non_finite_angles() {
        let i = ifm();
        let s = AlignmentState { pitch: f64::NAN, ..AlignmentState::nominal(&i) };
        assert!(check(&s, &i).is_err());
    }
}
