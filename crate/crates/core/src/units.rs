//! Physical constants and the internal scaled unit system.
//!
//! Everything past the netlist parser works in a coherent set of scaled
//! units chosen so that junction-scale quantities sit near unity:
//!
//! | quantity    | unit |
//! |-------------|------|
//! | voltage     | mV   |
//! | current     | µA   |
//! | resistance  | kΩ   |
//! | time        | ps   |
//! | capacitance | fF   |
//! | inductance  | nH   |
//! | charge      | aC   |
//! | energy      | zJ   |
//! | flux        | mV·ps|
//!
//! The set is closed: mV/µA = kΩ, nH/kΩ = ps, kΩ·fF = ps, µA·ps = aC,
//! aC·mV = zJ, mV·ps/nH = µA.

/// Cooper-pair charge 2e in coulombs.
pub const TWO_E_SI: f64 = 3.204353e-19;

/// Magnetic flux quantum h/2e in webers.
pub const PHI0_SI: f64 = 2.067834e-15;

/// Planck constant in J·s.
pub const PLANCK_SI: f64 = 6.626_070_15e-34;

/// Cooper-pair charge 2e in aC.
pub const TWO_E: f64 = TWO_E_SI * 1e18;

/// Flux quantum in mV·ps.
pub const PHI0: f64 = PHI0_SI * 1e15;

/// Physical constants bundle, handy when passing the pair around.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    /// Cooper-pair charge (C).
    pub two_e: f64,
    /// Flux quantum (Wb).
    pub phi0: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self {
            two_e: TWO_E_SI,
            phi0: PHI0_SI,
        }
    }
}

/// Dimension of a scalar, used to move between SI and scaled units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dimension {
    Voltage,
    Current,
    Resistance,
    Time,
    Capacitance,
    Inductance,
    Charge,
    Energy,
    /// Plain numbers (phases in radians, state indices).
    Dimensionless,
}

impl Dimension {
    /// Size of one scaled unit expressed in SI.
    pub fn si_per_unit(self) -> f64 {
        match self {
            Dimension::Voltage => 1e-3,
            Dimension::Current => 1e-6,
            Dimension::Resistance => 1e3,
            Dimension::Time => 1e-12,
            Dimension::Capacitance => 1e-15,
            Dimension::Inductance => 1e-9,
            Dimension::Charge => 1e-18,
            Dimension::Energy => 1e-21,
            Dimension::Dimensionless => 1.0,
        }
    }

    pub fn unit_name(self) -> &'static str {
        match self {
            Dimension::Voltage => "mV",
            Dimension::Current => "uA",
            Dimension::Resistance => "kOhm",
            Dimension::Time => "ps",
            Dimension::Capacitance => "fF",
            Dimension::Inductance => "nH",
            Dimension::Charge => "aC",
            Dimension::Energy => "zJ",
            Dimension::Dimensionless => "",
        }
    }

    /// SI value to scaled units.
    pub fn from_si(self, si: f64) -> f64 {
        si / self.si_per_unit()
    }

    /// Scaled value back to SI.
    pub fn to_si(self, scaled: f64) -> f64 {
        scaled * self.si_per_unit()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flux_quantum_times_pair_charge_is_planck() {
        let c = PhysicalConstants::default();
        let rel = (c.phi0 * c.two_e - PLANCK_SI).abs() / PLANCK_SI;
        assert!(rel < 1e-6, "rel = {rel}");
    }

    #[test]
    fn scaled_constants() {
        assert!((TWO_E - 0.3204353).abs() < 1e-12);
        assert!((PHI0 - 2.067834).abs() < 1e-12);
    }

    #[test]
    fn unit_system_is_coherent() {
        use Dimension::*;
        let close = |a: f64, b: f64| ((a - b) / b).abs() < 1e-12;
        // mV / uA = kOhm
        assert!(close(
            Voltage.si_per_unit() / Current.si_per_unit(),
            Resistance.si_per_unit()
        ));
        // nH / kOhm = ps
        assert!(close(
            Inductance.si_per_unit() / Resistance.si_per_unit(),
            Time.si_per_unit()
        ));
        // kOhm * fF = ps
        assert!(close(
            Resistance.si_per_unit() * Capacitance.si_per_unit(),
            Time.si_per_unit()
        ));
        // uA * ps = aC
        assert!(close(
            Current.si_per_unit() * Time.si_per_unit(),
            Charge.si_per_unit()
        ));
        // aC * mV = zJ
        assert!(close(
            Charge.si_per_unit() * Voltage.si_per_unit(),
            Energy.si_per_unit()
        ));
    }
}
